//! Classification of finite windows against the absorbing-state classes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::contours::{classify_walls, DomainWall, EAbsence, EAbsentReason, WallClass, Window, WindowContours};
use crate::lattice::{Dir, LatticeGeometry, Rate, Site, SpinConfig};

/// What a window looks like, in precedence order
/// `Constant > Stripe > SingleStepWall > ProvenEAbsent > Other`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum WindowClass {
    ConstantPlus,
    ConstantMinus,
    /// Flat horizontal walls, pairwise at least two rows apart. Each offset
    /// `k` puts a wall between rows `center.y + k` and `center.y + k + 1`.
    StripeH { walls: Vec<i32> },
    /// As `StripeH`, for vertical walls and columns.
    StripeV { walls: Vec<i32> },
    /// A single wall, flat except for one unit step. The step sits between
    /// columns (rows, for vertical walls) `center + step` and
    /// `center + step + 1`; `rise` is +1 if the wall moves up (right) when
    /// followed East (North).
    SingleStepWall { horizontal: bool, step: i32, rise: i8 },
    ProvenEAbsent(EAbsentReason),
    Other,
}

/// Fieldless view of [`WindowClass`], used for counting and recurrence logs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WindowKind {
    ConstantPlus,
    ConstantMinus,
    StripeH,
    StripeV,
    SingleStepWall,
    ProvenEAbsent,
    Other,
}

impl WindowKind {
    pub const ALL: [WindowKind; 7] = [
        WindowKind::ConstantPlus,
        WindowKind::ConstantMinus,
        WindowKind::StripeH,
        WindowKind::StripeV,
        WindowKind::SingleStepWall,
        WindowKind::ProvenEAbsent,
        WindowKind::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::ConstantPlus => "CONSTANT_PLUS",
            WindowKind::ConstantMinus => "CONSTANT_MINUS",
            WindowKind::StripeH => "STRIPE_H",
            WindowKind::StripeV => "STRIPE_V",
            WindowKind::SingleStepWall => "SINGLE_STEP_WALL",
            WindowKind::ProvenEAbsent => "PROVEN_E_ABSENT",
            WindowKind::Other => "OTHER",
        }
    }

    pub fn is_stripe(self) -> bool {
        matches!(self, WindowKind::StripeH | WindowKind::StripeV)
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl WindowClass {
    pub fn kind(&self) -> WindowKind {
        match self {
            WindowClass::ConstantPlus => WindowKind::ConstantPlus,
            WindowClass::ConstantMinus => WindowKind::ConstantMinus,
            WindowClass::StripeH { .. } => WindowKind::StripeH,
            WindowClass::StripeV { .. } => WindowKind::StripeV,
            WindowClass::SingleStepWall { .. } => WindowKind::SingleStepWall,
            WindowClass::ProvenEAbsent(_) => WindowKind::ProvenEAbsent,
            WindowClass::Other => WindowKind::Other,
        }
    }

    /// Whether the window agrees with some absorbing state.
    pub fn is_absorbing(&self) -> bool {
        matches!(
            self,
            WindowClass::ConstantPlus
                | WindowClass::ConstantMinus
                | WindowClass::StripeH { .. }
                | WindowClass::StripeV { .. }
        )
    }
}

/// Offsets of flat walls of one orientation if they form an absorbing stripe
/// pattern: every wall flat in that orientation, consecutive walls at least
/// two lattice spacings apart.
fn stripe_offsets(walls: &[DomainWall], class: WallClass, l: i32) -> Option<Vec<i32>> {
    if walls.is_empty() || walls.iter().any(|w| w.class != class) {
        return None;
    }
    let mut lines: Vec<i32> = walls
        .iter()
        .map(|w| match class {
            WallClass::FlatH => w.vertices[0].1,
            _ => w.vertices[0].0,
        })
        .collect();
    lines.sort_unstable();
    if lines.windows(2).any(|p| p[1] - p[0] < 2) {
        return None;
    }
    Some(lines.into_iter().map(|k| k - l).collect())
}

fn single_step(walls: &[DomainWall], l: i32) -> Option<WindowClass> {
    let [wall] = walls else { return None };
    if wall.closed || wall.moves.len() < 3 {
        return None;
    }
    let first = wall.moves[0];
    let perpendicular: Vec<usize> = (0..wall.moves.len())
        .filter(|&k| wall.moves[k] != first)
        .collect();
    let [k] = perpendicular[..] else { return None };
    if k == wall.moves.len() - 1 || wall.moves[k].is_horizontal() == first.is_horizontal() {
        return None;
    }
    let horizontal = first.is_horizontal();
    let step_dir = wall.moves[k];
    // Normalize to walking East (horizontal walls) or North (vertical walls).
    let forward = if horizontal { first == Dir::E } else { first == Dir::N };
    let up = matches!(step_dir, Dir::N | Dir::E);
    let rise = if up == forward { 1 } else { -1 };
    let at = wall.vertices[k];
    let step = if horizontal { at.0 } else { at.1 } - l;
    Some(WindowClass::SingleStepWall { horizontal, step, rise })
}

pub fn classify_window(config: &SpinConfig, window: &Window) -> WindowClass {
    let wc = WindowContours::from_config(config, window);
    if wc.is_empty() {
        return if config.spin_at(window.center) > 0 {
            WindowClass::ConstantPlus
        } else {
            WindowClass::ConstantMinus
        };
    }
    let walls = wc.decompose();
    classify_decomposed(&walls, window.l as i32)
}

fn classify_decomposed(walls: &[DomainWall], l: i32) -> WindowClass {
    if let Some(walls) = stripe_offsets(walls, WallClass::FlatH, l) {
        return WindowClass::StripeH { walls };
    }
    if let Some(walls) = stripe_offsets(walls, WallClass::FlatV, l) {
        return WindowClass::StripeV { walls };
    }
    if let Some(step) = single_step(walls, l) {
        return step;
    }
    match classify_walls(walls) {
        EAbsence::ProvenEAbsent(reason) => WindowClass::ProvenEAbsent(reason),
        EAbsence::NotClassified => WindowClass::Other,
    }
}

/// Every site agrees with at least three of its neighbors: the configuration
/// is frozen under zero-temperature dynamics.
pub fn is_absorbing_global(config: &SpinConfig) -> bool {
    (0..config.geometry().n_sites()).all(|i| config.flip_rate_index(i) == Rate::Zero)
}

/// Indicators of the window events used by the recurrence estimators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowEvents {
    /// Window constant +1 / −1.
    pub c_plus: bool,
    pub c_minus: bool,
    /// Window agrees with an absorbing state.
    pub absorbing: bool,
    /// Some full column (`v`) or row (`h`) of the window is all +1 / all −1.
    pub v_plus: bool,
    pub h_plus: bool,
    pub v_minus: bool,
    pub h_minus: bool,
}

impl WindowEvents {
    pub const NAMES: [&'static str; 7] = ["C_plus", "C_minus", "A", "V_plus", "H_plus", "V_minus", "H_minus"];

    pub fn as_array(&self) -> [bool; 7] {
        [
            self.c_plus,
            self.c_minus,
            self.absorbing,
            self.v_plus,
            self.h_plus,
            self.v_minus,
            self.h_minus,
        ]
    }
}

pub fn window_events(config: &SpinConfig, window: &Window) -> WindowEvents {
    window_events_with_class(config, window, &classify_window(config, window))
}

pub fn window_events_with_class(config: &SpinConfig, window: &Window, class: &WindowClass) -> WindowEvents {
    let g = config.geometry();
    let side = window.side();
    let spin = |u: usize, v: usize| config.is_plus(g.index(window.site(g, u, v)));
    let column_all = |u: usize, plus: bool| (0..side).all(|v| spin(u, v) == plus);
    let row_all = |v: usize, plus: bool| (0..side).all(|u| spin(u, v) == plus);
    WindowEvents {
        c_plus: *class == WindowClass::ConstantPlus,
        c_minus: *class == WindowClass::ConstantMinus,
        absorbing: class.is_absorbing(),
        v_plus: (0..side).any(|u| column_all(u, true)),
        h_plus: (0..side).any(|v| row_all(v, true)),
        v_minus: (0..side).any(|u| column_all(u, false)),
        h_minus: (0..side).any(|v| row_all(v, false)),
    }
}

/// Non-overlapping windows of half-width `l` tiling the lattice.
pub fn window_grid(geometry: &LatticeGeometry, l: usize) -> Vec<Window> {
    let stride = 2 * l + 1;
    let first = if geometry.is_torus() { l } else { l + 1 };
    let mut out = Vec::new();
    let mut y = first;
    while y < geometry.height() {
        let mut x = first;
        while x < geometry.width() {
            if let Ok(w) = Window::new(geometry, Site::new(x, y), l) {
                if geometry.is_torus() && (x + l + 1 > geometry.width() || y + l + 1 > geometry.height()) {
                    break;
                }
                out.push(w);
            }
            x += stride;
        }
        y += stride;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Engine, SimState};
    use crate::lattice::{init_random, Boundary, LatticeGeometry};
    use crate::rng::RngSpec;
    use proptest::prelude::*;

    fn torus(n: usize) -> LatticeGeometry {
        LatticeGeometry::torus(n, n).unwrap()
    }

    fn window(g: &LatticeGeometry, x: usize, y: usize, l: usize) -> Window {
        Window::new(g, Site::new(x, y), l).unwrap()
    }

    #[test]
    fn constant_windows() {
        let g = torus(12);
        let w = window(&g, 6, 6, 2);
        assert_eq!(classify_window(&SpinConfig::constant(g, 1), &w), WindowClass::ConstantPlus);
        assert_eq!(classify_window(&SpinConfig::constant(g, -1), &w), WindowClass::ConstantMinus);
        let ev = window_events(&SpinConfig::constant(g, 1), &w);
        assert!(ev.c_plus && ev.v_plus && ev.h_plus && ev.absorbing);
        assert!(!ev.c_minus && !ev.v_minus && !ev.h_minus);
    }

    #[test]
    fn width_two_stripes_are_stripe_h() {
        let g = torus(16);
        let c = SpinConfig::from_fn(g, |_, y| if (y / 2) % 2 == 0 { 1 } else { -1 });
        let w = window(&g, 8, 8, 3);
        match classify_window(&c, &w) {
            WindowClass::StripeH { walls } => {
                assert!(walls.windows(2).all(|p| p[1] - p[0] == 2));
                assert_eq!(walls.len(), 3);
            }
            other => panic!("expected STRIPE_H, got {other:?}"),
        }
        let ev = window_events(&c, &w);
        assert!(ev.h_plus && ev.h_minus && ev.absorbing);
        assert!(!ev.v_plus && !ev.v_minus);
        // every in-window site agrees with at least 3 neighbors
        for u in 0..w.side() {
            for v in 0..w.side() {
                let i = g.index(w.site(&g, u, v));
                assert!(c.disagreements(i).1 <= 1);
            }
        }
    }

    #[test]
    fn vertical_stripe_offsets() {
        let g = torus(16);
        let c = SpinConfig::from_fn(g, |x, _| if (6..9).contains(&x) { -1 } else { 1 });
        let w = window(&g, 8, 8, 3);
        assert_eq!(classify_window(&c, &w), WindowClass::StripeV { walls: vec![-3, 0] });
    }

    #[test]
    fn width_one_stripe_is_never_a_stripe() {
        let g = torus(16);
        let c = SpinConfig::from_fn(g, |_, y| if y == 8 { -1 } else { 1 });
        let w = window(&g, 8, 8, 3);
        assert_eq!(
            classify_window(&c, &w),
            WindowClass::ProvenEAbsent(EAbsentReason::AdjacentFlatWalls)
        );
        assert!(!window_events(&c, &w).absorbing);
    }

    #[test]
    fn single_step_wall() {
        // plus below a horizontal wall that rises by one between x = 8 and 9
        let g = torus(16);
        let c = SpinConfig::from_fn(g, |x, y| {
            let top = if x <= 8 { 7 } else { 8 };
            if (4..=top).contains(&y) {
                1
            } else {
                -1
            }
        });
        let w = window(&g, 8, 8, 3);
        assert_eq!(
            classify_window(&c, &w),
            WindowClass::SingleStepWall {
                horizontal: true,
                step: 0,
                rise: 1
            }
        );
        let ev = window_events(&c, &w);
        assert!(!ev.absorbing);
        // the mirror image steps down
        let m = SpinConfig::from_fn(g, |x, y| c.spin_at(Site::new(15 - x, y)));
        let w2 = window(&g, 7, 8, 3);
        assert_eq!(
            classify_window(&m, &w2),
            WindowClass::SingleStepWall {
                horizontal: true,
                step: -1,
                rise: -1
            }
        );
    }

    #[test]
    fn corner_wall_is_other() {
        let g = torus(16);
        let c = SpinConfig::from_fn(g, |x, y| if x >= 8 && y >= 8 { -1 } else { 1 });
        let w = window(&g, 8, 8, 3);
        assert_eq!(classify_window(&c, &w), WindowClass::Other);
    }

    #[test]
    fn global_absorbing_examples() {
        let g = torus(8);
        assert!(is_absorbing_global(&SpinConfig::constant(g, -1)));
        // stripes of widths 3 and 5 on a height-8 torus
        let stripes = SpinConfig::from_fn(g, |_, y| if y < 3 { 1 } else { -1 });
        assert!(is_absorbing_global(&stripes));
        let corner = SpinConfig::from_fn(torus(12), |x, y| if x < 6 && y < 6 { -1 } else { 1 });
        assert!(!is_absorbing_global(&corner));
        let checker = SpinConfig::from_fn(g, |x, y| if (x + y) % 2 == 0 { 1 } else { -1 });
        let ev = window_events(&checker, &window(&g, 3, 3, 2));
        assert!(!(ev.v_plus || ev.h_plus || ev.v_minus || ev.h_minus));
    }

    #[test]
    fn grid_windows_do_not_overlap() {
        let g = torus(64);
        let grid = window_grid(&g, 2);
        assert_eq!(grid.len(), 12 * 12);
        let f = LatticeGeometry::new(20, 20, Boundary::Free).unwrap();
        for w in window_grid(&f, 2) {
            assert!(w.center.x >= 3 && w.center.x + 3 < 20);
        }
    }

    #[test]
    fn absorbing_global_iff_kmc_rate_zero_along_runs() {
        let g = torus(12);
        for seed in 0..20 {
            let c = init_random(g, 0.5, &RngSpec::new(seed, 0)).unwrap();
            let mut s = SimState::new(c, Engine::ActiveSet);
            let mut r = RngSpec::new(seed, 0).dynamics_rng();
            for t in [0.0, 1.0, 4.0, 16.0, 64.0, 256.0] {
                s.run_until(t, &mut r, |_, _| {});
                assert_eq!(is_absorbing_global(s.config()), s.total_rate() == 0.0);
            }
        }
    }

    fn arb_config() -> impl Strategy<Value = SpinConfig> {
        (any::<u64>(), 0.1f64..0.9).prop_map(|(seed, p)| init_random(torus(12), p, &RngSpec::new(seed, 2)).unwrap())
    }

    proptest! {
        #[test]
        fn class_and_events_under_global_flip(c in arb_config(), l in 1usize..5, x in 0usize..12, y in 0usize..12) {
            let g = *c.geometry();
            let w = window(&g, x, y, l);
            let a = classify_window(&c, &w);
            let b = classify_window(&c.flipped(), &w);
            match (&a, &b) {
                (WindowClass::ConstantPlus, WindowClass::ConstantMinus)
                | (WindowClass::ConstantMinus, WindowClass::ConstantPlus) => {}
                _ => prop_assert_eq!(&a, &b),
            }
            let ea = window_events(&c, &w);
            let eb = window_events(&c.flipped(), &w);
            prop_assert_eq!((ea.c_plus, ea.v_plus, ea.h_plus), (eb.c_minus, eb.v_minus, eb.h_minus));
            prop_assert_eq!(ea.absorbing, eb.absorbing);
            // C+ implies both line events
            if ea.c_plus {
                prop_assert!(ea.v_plus && ea.h_plus && ea.absorbing);
            }
            if a.is_absorbing() {
                for u in 1..w.side() - 1 {
                    for v in 1..w.side() - 1 {
                        prop_assert!(c.disagreements(g.index(w.site(&g, u, v))).1 <= 1);
                    }
                }
            }
        }
    }
}
