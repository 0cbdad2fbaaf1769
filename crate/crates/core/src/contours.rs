//! Dual-lattice contours: unsatisfied edges, corners, domain walls, and the
//! sufficient conditions under which a window pattern is known to be
//! e-absent (recurs with probability zero).
//!
//! A dual vertex is identified with the plaquette whose lower-left corner is
//! a given primal site. The dual edge crossing the bond from site `i` to its
//! East neighbor is vertical; the one crossing the bond to the North neighbor
//! is horizontal.
//!
//! Window analysis works in local coordinates. For a window of half-width
//! `L`, primal sites are `(u, v)` with `0 <= u, v <= 2L` and the center at
//! `(L, L)`. Dual vertex `(a, b)` is the plaquette with lower-left window site
//! `(a, b)`; the window's dual square holds `0 <= a, b < 2L` and the
//! vertices with `a` or `b` in `{-1, 2L}` lie just outside it, where wall
//! endpoints live.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Dir, LatticeGeometry, PackedBits, Site, SpinConfig};

/// The set of unsatisfied dual edges, one bit per primal bond.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourSet {
    geometry: LatticeGeometry,
    east: PackedBits,
    north: PackedBits,
}

pub fn extract_contours(config: &SpinConfig) -> ContourSet {
    let g = *config.geometry();
    let n = g.n_sites();
    let mut east = PackedBits::zeros(n);
    let mut north = PackedBits::zeros(n);
    for i in 0..n {
        if config.bond_unsatisfied(i, Dir::E) {
            east.set(i, true);
        }
        if config.bond_unsatisfied(i, Dir::N) {
            north.set(i, true);
        }
    }
    ContourSet {
        geometry: g,
        east,
        north,
    }
}

/// Number of perpendicular pairs among the unsatisfied edges at a dual
/// vertex, given its incident edges in `E, N, W, S` order.
#[inline]
fn corners_from_edges(e: [bool; 4]) -> u8 {
    match e.iter().filter(|&&b| b).count() {
        4 => 4,
        // two edges: perpendicular unless they are E/W or N/S
        2 if !(e[0] && e[2]) && !(e[1] && e[3]) => 1,
        _ => 0,
    }
}

impl ContourSet {
    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.east.count_ones() + self.north.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether the bond from `index` towards `dir` is unsatisfied.
    pub fn bond(&self, index: usize, dir: Dir) -> bool {
        let g = &self.geometry;
        match dir {
            Dir::E => self.east.get(index),
            Dir::N => self.north.get(index),
            Dir::W => g.step(index, Dir::W).is_some_and(|j| self.east.get(j)),
            Dir::S => g.step(index, Dir::S).is_some_and(|j| self.north.get(j)),
        }
    }

    /// Flipping the spin at `index` swaps satisfied and unsatisfied edges
    /// around the dual plaquette containing it.
    pub fn toggle_site(&mut self, index: usize) {
        let g = self.geometry;
        if g.step(index, Dir::E).is_some() {
            self.east.toggle(index);
        }
        if g.step(index, Dir::N).is_some() {
            self.north.toggle(index);
        }
        if let Some(j) = g.step(index, Dir::W) {
            self.east.toggle(j);
        }
        if let Some(j) = g.step(index, Dir::S) {
            self.north.toggle(j);
        }
    }

    /// Whether the plaquette with lower-left site `index` exists.
    pub fn has_vertex(&self, index: usize) -> bool {
        let g = &self.geometry;
        g.step(index, Dir::E).is_some() && g.step(index, Dir::N).is_some()
    }

    pub fn n_vertices(&self) -> usize {
        let g = &self.geometry;
        if g.is_torus() {
            g.n_sites()
        } else {
            (g.width() - 1) * (g.height() - 1)
        }
    }

    /// Unsatisfied edges at a dual vertex, in `E, N, W, S` order.
    pub fn vertex_edges(&self, index: usize) -> [bool; 4] {
        let g = &self.geometry;
        let (Some(e), Some(n)) = (g.step(index, Dir::E), g.step(index, Dir::N)) else {
            return [false; 4];
        };
        [
            self.north.get(e),
            self.east.get(n),
            self.north.get(index),
            self.east.get(index),
        ]
    }

    pub fn corners_at(&self, index: usize) -> u8 {
        corners_from_edges(self.vertex_edges(index))
    }

    /// Rebuild the spin configuration from the contours and the sign of one
    /// reference site.
    pub fn reconstruct(&self, reference: Site, spin: i8) -> Result<SpinConfig> {
        let g = self.geometry;
        g.check(reference)?;
        let n = g.n_sites();
        let mut spins = vec![0i8; n];
        let start = g.index(reference);
        spins[start] = if spin > 0 { 1 } else { -1 };
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for dir in Dir::ALL {
                if let Some(j) = g.step(i, dir) {
                    let want = if self.bond(i, dir) { -spins[i] } else { spins[i] };
                    if spins[j] == 0 {
                        spins[j] = want;
                        stack.push(j);
                    } else if spins[j] != want {
                        return Err(Error::Config(
                            "contour set is not the boundary of any configuration".into(),
                        ));
                    }
                }
            }
        }
        SpinConfig::from_spins(g, &spins)
    }
}

/// Contours plus per-vertex corner counts, maintained flip by flip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourTracker {
    contours: ContourSet,
    corners: Vec<u8>,
    total_corners: usize,
    vertices_with_corner: usize,
}

impl ContourTracker {
    pub fn from_config(config: &SpinConfig) -> Self {
        let contours = extract_contours(config);
        let n = config.geometry().n_sites();
        let corners: Vec<u8> = (0..n).map(|i| contours.corners_at(i)).collect();
        let total_corners = corners.iter().map(|&c| c as usize).sum();
        let vertices_with_corner = corners.iter().filter(|&&c| c > 0).count();
        Self {
            contours,
            corners,
            total_corners,
            vertices_with_corner,
        }
    }

    pub fn contours(&self) -> &ContourSet {
        &self.contours
    }

    pub fn corners(&self) -> &[u8] {
        &self.corners
    }

    pub fn total_corners(&self) -> usize {
        self.total_corners
    }

    pub fn vertices_with_corner(&self) -> usize {
        self.vertices_with_corner
    }

    /// Fraction of dual vertices hosting at least one corner.
    pub fn corner_density(&self) -> f64 {
        self.vertices_with_corner as f64 / self.contours.n_vertices() as f64
    }

    pub fn apply_flip(&mut self, index: usize) {
        self.contours.toggle_site(index);
        let g = self.contours.geometry;
        let w = g.step(index, Dir::W);
        let s = g.step(index, Dir::S);
        let sw = s.and_then(|j| g.step(j, Dir::W));
        for v in [Some(index), w, s, sw].into_iter().flatten() {
            let new = self.contours.corners_at(v);
            let old = std::mem::replace(&mut self.corners[v], new);
            self.total_corners = self.total_corners + new as usize - old as usize;
            self.vertices_with_corner =
                self.vertices_with_corner + (new > 0) as usize - (old > 0) as usize;
        }
    }

    /// Exact comparison with a from-scratch extraction.
    pub fn matches(&self, config: &SpinConfig) -> bool {
        *self == ContourTracker::from_config(config)
    }
}

/// The square of `2L + 1` sites centered at `center`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Window {
    pub center: Site,
    pub l: usize,
}

impl Window {
    /// A window must keep one dual site of margin inside the lattice: on the
    /// torus it may not touch itself, `2L + 3 <= width, height`; under free
    /// boundaries the plaquettes just outside it must exist.
    pub fn new(geometry: &LatticeGeometry, center: Site, l: usize) -> Result<Self> {
        geometry.check(center)?;
        let bad = Error::InvalidWindow {
            x: center.x,
            y: center.y,
            l,
        };
        if l == 0 {
            return Err(bad);
        }
        let span = 2 * l + 3;
        let ok = if geometry.is_torus() {
            span <= geometry.width() && span <= geometry.height()
        } else {
            let fits = |c: usize, len: usize| c > l && c + l + 1 < len;
            fits(center.x, geometry.width()) && fits(center.y, geometry.height())
        };
        if ok {
            Ok(Self { center, l })
        } else {
            Err(bad)
        }
    }

    pub fn side(&self) -> usize {
        2 * self.l + 1
    }

    /// Global site of local window coordinates `(u, v)`.
    pub fn site(&self, geometry: &LatticeGeometry, u: usize, v: usize) -> Site {
        geometry
            .offset(self.center, u as i64 - self.l as i64, v as i64 - self.l as i64)
            .expect("validated window stays in bounds")
    }

    /// Whether a global site lies in the window.
    pub fn contains(&self, geometry: &LatticeGeometry, site: Site) -> bool {
        let near = |a: usize, c: usize, len: usize| {
            let d = a.abs_diff(c);
            let d = if geometry.is_torus() { d.min(len - d) } else { d };
            d <= self.l
        };
        near(site.x, self.center.x, geometry.width()) && near(site.y, self.center.y, geometry.height())
    }

    /// Number of dual vertices inside the window, `(2L)^2`.
    pub fn n_dual_vertices(&self) -> usize {
        4 * self.l * self.l
    }

    /// Upper bound on corners for windows not known to be e-absent.
    pub fn corner_bound(&self) -> usize {
        4 * (2 * self.l + 1)
    }
}

/// Dual vertex in local window coordinates.
pub type DualVertex = (i32, i32);

/// The unsatisfied edges of one window, in local coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowContours {
    l: usize,
    /// `hbond[v * side + u]`: bond `(u, v)`–`(u + 1, v)`, `u < 2L`.
    hbond: Vec<bool>,
    /// `vbond[v * side + u]`: bond `(u, v)`–`(u, v + 1)`, `v < 2L`.
    vbond: Vec<bool>,
}

impl WindowContours {
    pub fn from_config(config: &SpinConfig, window: &Window) -> Self {
        let g = config.geometry();
        let side = window.side();
        let mut local = vec![false; side * side];
        for v in 0..side {
            for u in 0..side {
                local[v * side + u] = config.is_plus(g.index(window.site(g, u, v)));
            }
        }
        let mut hbond = vec![false; side * side];
        let mut vbond = vec![false; side * side];
        for v in 0..side {
            for u in 0..side {
                if u + 1 < side {
                    hbond[v * side + u] = local[v * side + u] != local[v * side + u + 1];
                }
                if v + 1 < side {
                    vbond[v * side + u] = local[v * side + u] != local[(v + 1) * side + u];
                }
            }
        }
        Self {
            l: window.l,
            hbond,
            vbond,
        }
    }

    pub fn from_contours(contours: &ContourSet, window: &Window) -> Self {
        let g = contours.geometry();
        let side = window.side();
        let mut hbond = vec![false; side * side];
        let mut vbond = vec![false; side * side];
        for v in 0..side {
            for u in 0..side {
                let i = g.index(window.site(g, u, v));
                if u + 1 < side {
                    hbond[v * side + u] = contours.bond(i, Dir::E);
                }
                if v + 1 < side {
                    vbond[v * side + u] = contours.bond(i, Dir::N);
                }
            }
        }
        Self {
            l: window.l,
            hbond,
            vbond,
        }
    }

    pub fn l(&self) -> usize {
        self.l
    }

    fn side(&self) -> i32 {
        2 * self.l as i32 + 1
    }

    fn h(&self, u: i32, v: i32) -> bool {
        let s = self.side();
        (0..s - 1).contains(&u) && (0..s).contains(&v) && self.hbond[(v * s + u) as usize]
    }

    fn v(&self, u: i32, v: i32) -> bool {
        let s = self.side();
        (0..s).contains(&u) && (0..s - 1).contains(&v) && self.vbond[(v * s + u) as usize]
    }

    /// Number of unsatisfied edges in the window.
    pub fn len(&self) -> usize {
        self.hbond.iter().filter(|&&b| b).count() + self.vbond.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge(&self, (a, b): DualVertex, dir: Dir) -> bool {
        match dir {
            Dir::E => self.v(a + 1, b),
            Dir::N => self.h(a, b + 1),
            Dir::W => self.v(a, b),
            Dir::S => self.h(a, b),
        }
    }

    fn edges(&self, p: DualVertex) -> [bool; 4] {
        Dir::ALL.map(|d| self.edge(p, d))
    }

    pub fn is_inside(&self, (a, b): DualVertex) -> bool {
        let n = 2 * self.l as i32;
        (0..n).contains(&a) && (0..n).contains(&b)
    }

    /// Corner count `M_L` over the window's dual vertices.
    pub fn corner_count(&self) -> usize {
        let n = 2 * self.l as i32;
        let mut total = 0;
        for b in 0..n {
            for a in 0..n {
                total += corners_from_edges(self.edges((a, b))) as usize;
            }
        }
        total
    }

    /// Split the window's edges into edge-disjoint walls. Walls are followed
    /// through degree-2 vertices, and straight through degree-4 vertices.
    /// Open walls (endpoints just outside the window) come first, ordered by
    /// starting vertex; closed loops follow.
    pub fn decompose(&self) -> Vec<DomainWall> {
        let n = 2 * self.l as i32;
        let mut used_h = vec![false; self.hbond.len()];
        let mut used_v = vec![false; self.vbond.len()];
        let mut walls = Vec::new();

        let mut starts: Vec<DualVertex> = Vec::new();
        for b in -1..=n {
            for a in -1..=n {
                if !self.is_inside((a, b)) {
                    starts.push((a, b));
                }
            }
        }
        for b in 0..n {
            for a in 0..n {
                starts.push((a, b));
            }
        }
        for start in starts {
            for dir in Dir::ALL {
                if self.edge(start, dir) && !self.used(&used_h, &used_v, start, dir) {
                    walls.push(self.walk(start, dir, &mut used_h, &mut used_v));
                }
            }
        }
        walls
    }

    fn edge_slot(&self, (a, b): DualVertex, dir: Dir) -> (bool, usize) {
        let s = self.side();
        let (horizontal_bond, u, v) = match dir {
            Dir::E => (false, a + 1, b),
            Dir::W => (false, a, b),
            Dir::N => (true, a, b + 1),
            Dir::S => (true, a, b),
        };
        (horizontal_bond, (v * s + u) as usize)
    }

    fn used(&self, used_h: &[bool], used_v: &[bool], p: DualVertex, dir: Dir) -> bool {
        match self.edge_slot(p, dir) {
            (true, k) => used_h[k],
            (false, k) => used_v[k],
        }
    }

    fn walk(&self, start: DualVertex, first: Dir, used_h: &mut [bool], used_v: &mut [bool]) -> DomainWall {
        let mut vertices = vec![start];
        let mut moves = Vec::new();
        let mut cur = start;
        let mut dir = first;
        loop {
            match self.edge_slot(cur, dir) {
                (true, k) => used_h[k] = true,
                (false, k) => used_v[k] = true,
            }
            let (dx, dy) = dir.delta();
            cur = (cur.0 + dx as i32, cur.1 + dy as i32);
            vertices.push(cur);
            moves.push(dir);
            if !self.is_inside(cur) {
                break;
            }
            let e = self.edges(cur);
            let next = if e.iter().all(|&b| b) {
                dir
            } else {
                *Dir::ALL
                    .iter()
                    .find(|&&d| d != dir.opposite() && e[d as usize])
                    .expect("dual vertices have even degree")
            };
            if self.used(used_h, used_v, cur, next) {
                break;
            }
            dir = next;
        }
        let closed = cur == start;
        DomainWall::new(vertices, moves, closed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WallClass {
    FlatH,
    FlatV,
    MonoNe,
    MonoSe,
    NonMonotonic,
}

/// Axis-aligned rectangle of dual vertices, bounds inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub a_min: i32,
    pub a_max: i32,
    pub b_min: i32,
    pub b_max: i32,
}

impl Rect {
    pub fn spanning(p: DualVertex, q: DualVertex) -> Self {
        Self {
            a_min: p.0.min(q.0),
            a_max: p.0.max(q.0),
            b_min: p.1.min(q.1),
            b_max: p.1.max(q.1),
        }
    }

    /// Whether the rectangles share a dual site.
    pub fn intersects(&self, other: &Rect) -> bool {
        self.a_min <= other.a_max
            && other.a_min <= self.a_max
            && self.b_min <= other.b_max
            && other.b_min <= self.b_max
    }
}

/// True iff one directed reading of the moves uses only {N, E} or only
/// {S, E}. Reading a path backwards swaps N/S and E/W, so this amounts to
/// never using both N and S nor both E and W.
pub fn moves_are_monotonic(moves: &[Dir]) -> bool {
    let has = |d: Dir| moves.contains(&d);
    !(has(Dir::N) && has(Dir::S)) && !(has(Dir::E) && has(Dir::W))
}

/// A path of unsatisfied dual edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DomainWall {
    pub vertices: Vec<DualVertex>,
    pub moves: Vec<Dir>,
    pub closed: bool,
    pub class: WallClass,
    /// Rectangle with the endpoints as opposite corners; the bounding box for
    /// closed walls.
    pub rect: Rect,
    /// Direction changes along the wall.
    pub corners: usize,
}

impl DomainWall {
    pub fn new(vertices: Vec<DualVertex>, moves: Vec<Dir>, closed: bool) -> Self {
        let has = |d: Dir| moves.contains(&d);
        let class = if closed || !moves_are_monotonic(&moves) {
            WallClass::NonMonotonic
        } else if !has(Dir::N) && !has(Dir::S) {
            WallClass::FlatH
        } else if !has(Dir::E) && !has(Dir::W) {
            WallClass::FlatV
        } else if (has(Dir::N) && has(Dir::E)) || (has(Dir::S) && has(Dir::W)) {
            WallClass::MonoNe
        } else {
            WallClass::MonoSe
        };
        let rect = if closed {
            let mut r = Rect::spanning(vertices[0], vertices[0]);
            for &p in &vertices {
                r = Rect {
                    a_min: r.a_min.min(p.0),
                    a_max: r.a_max.max(p.0),
                    b_min: r.b_min.min(p.1),
                    b_max: r.b_max.max(p.1),
                };
            }
            r
        } else {
            Rect::spanning(vertices[0], *vertices.last().unwrap())
        };
        let mut corners = moves.windows(2).filter(|w| w[0] != w[1]).count();
        if closed && moves.len() > 1 && moves[0] != moves[moves.len() - 1] {
            corners += 1;
        }
        Self {
            vertices,
            moves,
            closed,
            class,
            rect,
            corners,
        }
    }

    pub fn is_monotonic(&self) -> bool {
        !self.closed && moves_are_monotonic(&self.moves)
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

pub fn is_monotonic(wall: &DomainWall) -> bool {
    wall.is_monotonic()
}

/// `M_L`: perpendicular edge pairs meeting at dual vertices of the window.
pub fn corner_count(contours: &ContourSet, window: &Window) -> usize {
    WindowContours::from_contours(contours, window).corner_count()
}

pub fn decompose_walls(contours: &ContourSet, window: &Window) -> Vec<DomainWall> {
    WindowContours::from_contours(contours, window).decompose()
}

/// Why a window pattern is known to be e-absent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EAbsentReason {
    /// (A) some wall is not monotonic.
    NonMonotonicWall,
    /// (B) two flat parallel walls one lattice spacing apart.
    AdjacentFlatWalls,
    /// (C) two walls whose spanning rectangles share a site, other than the
    /// cross made of one flat horizontal and one flat vertical wall.
    OverlappingRectangles,
}

impl EAbsentReason {
    pub fn code(self) -> char {
        match self {
            EAbsentReason::NonMonotonicWall => 'A',
            EAbsentReason::AdjacentFlatWalls => 'B',
            EAbsentReason::OverlappingRectangles => 'C',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EAbsence {
    ProvenEAbsent(EAbsentReason),
    /// None of the sufficient conditions apply. This does not mean the
    /// pattern recurs.
    NotClassified,
}

pub fn is_cross(walls: &[DomainWall]) -> bool {
    walls.len() == 2
        && walls.iter().any(|w| w.class == WallClass::FlatH)
        && walls.iter().any(|w| w.class == WallClass::FlatV)
}

/// Apply reasons A, B, C in that order to a window's wall decomposition.
pub fn classify_walls(walls: &[DomainWall]) -> EAbsence {
    if walls.iter().any(|w| w.class == WallClass::NonMonotonic) {
        return EAbsence::ProvenEAbsent(EAbsentReason::NonMonotonicWall);
    }
    let adjacent = |class: WallClass, coord: fn(&DomainWall) -> i32| {
        let mut lines: Vec<i32> = walls.iter().filter(|w| w.class == class).map(coord).collect();
        lines.sort_unstable();
        lines.windows(2).any(|p| p[1] - p[0] == 1)
    };
    if adjacent(WallClass::FlatH, |w| w.vertices[0].1) || adjacent(WallClass::FlatV, |w| w.vertices[0].0) {
        return EAbsence::ProvenEAbsent(EAbsentReason::AdjacentFlatWalls);
    }
    if walls.len() >= 2 && !is_cross(walls) {
        for (i, w) in walls.iter().enumerate() {
            if walls[i + 1..].iter().any(|o| w.rect.intersects(&o.rect)) {
                return EAbsence::ProvenEAbsent(EAbsentReason::OverlappingRectangles);
            }
        }
    }
    EAbsence::NotClassified
}

pub fn classify_e_absent(config: &SpinConfig, window: &Window) -> EAbsence {
    classify_walls(&WindowContours::from_config(config, window).decompose())
}

/// Whether the corner bound `M_L <= 4(2L + 1)` holds for a window that is
/// not known to be e-absent. Windows proven e-absent pass vacuously.
pub fn check_corner_bound(config: &SpinConfig, window: &Window) -> bool {
    WindowReport::new(config, window).bound_ok
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WallSummary {
    pub class: WallClass,
    pub corners: usize,
    pub closed: bool,
    /// Spanning rectangle as `[x_min, y_min, x_max, y_max]` dual-vertex
    /// offsets from the window center (half-integers).
    pub rect: [f64; 4],
}

/// Everything the `classify` command prints for one window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    #[serde(rename = "M_L")]
    pub m_l: usize,
    pub walls: Vec<WallSummary>,
    /// `"A"`, `"B"`, `"C"` or null.
    pub e_absent: Option<String>,
    pub bound_ok: bool,
}

impl WindowReport {
    pub fn new(config: &SpinConfig, window: &Window) -> Self {
        let wc = WindowContours::from_config(config, window);
        let walls = wc.decompose();
        let m_l = wc.corner_count();
        let verdict = classify_walls(&walls);
        let l = window.l as f64;
        let off = |k: i32| k as f64 - l + 0.5;
        Self {
            m_l,
            walls: walls
                .iter()
                .map(|w| WallSummary {
                    class: w.class,
                    corners: w.corners,
                    closed: w.closed,
                    rect: [off(w.rect.a_min), off(w.rect.b_min), off(w.rect.a_max), off(w.rect.b_max)],
                })
                .collect(),
            e_absent: match verdict {
                EAbsence::ProvenEAbsent(r) => Some(r.code().to_string()),
                EAbsence::NotClassified => None,
            },
            bound_ok: match verdict {
                EAbsence::ProvenEAbsent(_) => true,
                EAbsence::NotClassified => m_l <= window.corner_bound(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{init_random, Boundary};
    use crate::rng::RngSpec;
    use proptest::prelude::*;

    fn torus(n: usize) -> LatticeGeometry {
        LatticeGeometry::torus(n, n).unwrap()
    }

    /// Quadrant pattern with a flat horizontal and a flat vertical wall
    /// crossing at the dual vertex just NE of `(c, c)`.
    fn cross(n: usize, c: usize) -> SpinConfig {
        SpinConfig::from_fn(torus(n), |x, y| if (x <= c) == (y <= c) { 1 } else { -1 })
    }

    #[test]
    fn constant_has_no_contours() {
        assert!(extract_contours(&SpinConfig::constant(torus(8), 1)).is_empty());
    }

    #[test]
    fn single_minus_site_has_four_edges() {
        let g = torus(8);
        let mut c = SpinConfig::constant(g, 1);
        let i = g.index(Site::new(3, 3));
        c.set(i, -1);
        let cs = extract_contours(&c);
        assert_eq!(cs.len(), 4);
        for d in Dir::ALL {
            assert!(cs.bond(i, d));
        }
        let w = Window::new(&g, Site::new(3, 3), 2).unwrap();
        assert_eq!(corner_count(&cs, &w), 4);
        let walls = decompose_walls(&cs, &w);
        assert_eq!(walls.len(), 1);
        assert!(walls[0].closed);
        assert_eq!(walls[0].class, WallClass::NonMonotonic);
        assert_eq!(walls[0].corners, 4);
        assert_eq!(
            classify_e_absent(&c, &w),
            EAbsence::ProvenEAbsent(EAbsentReason::NonMonotonicWall)
        );
    }

    #[test]
    fn flat_interface_has_no_corners() {
        let g = torus(12);
        let c = SpinConfig::from_fn(g, |_, y| if y < 6 { 1 } else { -1 });
        let cs = extract_contours(&c);
        assert_eq!(cs.len(), 24);
        let w = Window::new(&g, Site::new(4, 5), 3).unwrap();
        assert_eq!(corner_count(&cs, &w), 0);
        let walls = decompose_walls(&cs, &w);
        assert_eq!(walls.len(), 1);
        assert_eq!(walls[0].class, WallClass::FlatH);
        assert!(walls[0].is_monotonic());
        assert_eq!(walls[0].moves, vec![Dir::E; 7]);
        assert_eq!(classify_e_absent(&c, &w), EAbsence::NotClassified);
        assert!(check_corner_bound(&c, &w));
    }

    #[test]
    fn cross_has_four_corners_and_two_flat_walls() {
        let c = cross(16, 8);
        let g = *c.geometry();
        let w = Window::new(&g, Site::new(8, 8), 3).unwrap();
        let cs = extract_contours(&c);
        assert_eq!(corner_count(&cs, &w), 4);
        let walls = decompose_walls(&cs, &w);
        assert_eq!(walls.len(), 2);
        let mut classes: Vec<WallClass> = walls.iter().map(|w| w.class).collect();
        classes.sort_by_key(|c| *c as u8);
        assert_eq!(classes, vec![WallClass::FlatH, WallClass::FlatV]);
        assert!(is_cross(&walls));
        assert_eq!(classify_e_absent(&c, &w), EAbsence::NotClassified);
        let report = WindowReport::new(&c, &w);
        assert_eq!(report.m_l, 4);
        assert!(4 <= w.corner_bound() && w.corner_bound() == 28);
        assert!(report.bound_ok);
    }

    #[test]
    fn staircase_is_one_monotone_ne_wall() {
        // plus below the staircase y <= x - 4 + steps
        let g = torus(20);
        let c = SpinConfig::from_fn(g, |x, y| if y as i64 <= x as i64 - 4 { 1 } else { -1 });
        let w = Window::new(&g, Site::new(10, 6), 3).unwrap();
        let walls = decompose_walls(&extract_contours(&c), &w);
        assert_eq!(walls.len(), 1);
        let wall = &walls[0];
        assert_eq!(wall.class, WallClass::MonoNe);
        assert!(wall.is_monotonic());
        // alternating E, N steps
        assert!(wall.moves.windows(2).all(|p| p[0] != p[1]));
        let report = WindowReport::new(&c, &w);
        assert_eq!(report.e_absent, None);
        assert!(report.m_l <= 2 * (2 * 3 + 1));
        assert!(report.bound_ok);
    }

    #[test]
    fn monotonicity_of_move_sequences() {
        use Dir::*;
        assert!(moves_are_monotonic(&[E, E, E]));
        assert!(moves_are_monotonic(&[E, N, E, N]));
        assert!(moves_are_monotonic(&[W, S, W]));
        assert!(moves_are_monotonic(&[S, E, S]));
        assert!(!moves_are_monotonic(&[E, N, E, S]));
        assert!(!moves_are_monotonic(&[N, E, N, W]));
    }

    #[test]
    fn width_one_stripe_is_reason_b() {
        let g = torus(12);
        let c = SpinConfig::from_fn(g, |_, y| if y == 5 { -1 } else { 1 });
        let w = Window::new(&g, Site::new(6, 5), 2).unwrap();
        assert_eq!(
            classify_e_absent(&c, &w),
            EAbsence::ProvenEAbsent(EAbsentReason::AdjacentFlatWalls)
        );
        // width 2 is fine
        let c2 = SpinConfig::from_fn(g, |_, y| if y == 5 || y == 6 { -1 } else { 1 });
        assert_eq!(classify_e_absent(&c2, &w), EAbsence::NotClassified);
    }

    #[test]
    fn overlapping_rectangles_are_reason_c() {
        // two parallel NE staircases one site apart: rectangles overlap
        let g = torus(24);
        let c = SpinConfig::from_fn(g, |x, y| {
            let d = y as i64 - x as i64;
            if d <= 0 || d > 2 {
                1
            } else {
                -1
            }
        });
        let w = Window::new(&g, Site::new(12, 12), 3).unwrap();
        let walls = decompose_walls(&extract_contours(&c), &w);
        assert!(walls.len() >= 2);
        assert!(walls.iter().all(|w| w.is_monotonic()));
        assert_eq!(
            classify_e_absent(&c, &w),
            EAbsence::ProvenEAbsent(EAbsentReason::OverlappingRectangles)
        );
    }

    #[test]
    fn corner_type_quadruple() {
        // four quarter-disc corner walls cutting the window's corners
        let g = torus(24);
        let (cx, cy, l) = (12i64, 12i64, 4i64);
        let c = SpinConfig::from_fn(g, |x, y| {
            let (dx, dy) = ((x as i64 - cx).abs(), (y as i64 - cy).abs());
            if dx + dy >= 2 * l - 1 && dx <= l + 1 && dy <= l + 1 {
                -1
            } else {
                1
            }
        });
        let w = Window::new(&g, Site::new(12, 12), l as usize).unwrap();
        let report = WindowReport::new(&c, &w);
        assert!(report.bound_ok, "{report:?}");
        assert!(report.walls.len() >= 4);
    }

    #[test]
    fn window_validation() {
        let g = torus(8);
        assert!(Window::new(&g, Site::new(0, 0), 2).is_ok());
        assert!(Window::new(&g, Site::new(0, 0), 3).is_err());
        assert!(Window::new(&g, Site::new(0, 0), 0).is_err());
        let f = LatticeGeometry::new(9, 9, Boundary::Free).unwrap();
        assert!(Window::new(&f, Site::new(4, 4), 3).is_ok());
        assert!(Window::new(&f, Site::new(3, 4), 3).is_err());
        assert!(Window::new(&f, Site::new(4, 4), 4).is_err());
    }

    #[test]
    fn tracker_follows_flips() {
        let g = torus(16);
        let mut c = init_random(g, 0.5, &RngSpec::new(4, 0)).unwrap();
        let mut t = ContourTracker::from_config(&c);
        for k in 0..2000usize {
            let i = (k * 7919) % g.n_sites();
            c.flip(i);
            t.apply_flip(i);
        }
        assert!(t.matches(&c));
        assert_eq!(t.contours().len(), c.unsatisfied_bonds());
    }

    #[test]
    fn random_t0_windows_are_mostly_e_absent() {
        let g = torus(64);
        let mut proven = 0;
        let mut total = 0;
        for r in 0..20 {
            let c = init_random(g, 0.5, &RngSpec::new(12, r)).unwrap();
            for cx in (5..64).step_by(11) {
                let w = Window::new(&g, Site::new(cx, cx), 3).unwrap();
                let report = WindowReport::new(&c, &w);
                assert!(report.bound_ok);
                total += 1;
                proven += report.e_absent.is_some() as usize;
            }
        }
        assert!(proven * 10 >= total * 9, "{proven}/{total}");
    }

    fn arb_config() -> impl Strategy<Value = SpinConfig> {
        (6usize..14, 6usize..14, any::<bool>(), any::<u64>(), 0.1f64..0.9).prop_map(|(w, h, free, seed, p)| {
            let b = if free { Boundary::Free } else { Boundary::Torus };
            let g = LatticeGeometry::new(w, h, b).unwrap();
            init_random(g, p, &RngSpec::new(seed, 1)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn contour_edges_are_unsatisfied_bonds(c in arb_config()) {
            let cs = extract_contours(&c);
            prop_assert_eq!(cs.len(), c.unsatisfied_bonds());
            for i in 0..c.geometry().n_sites() {
                let deg = cs.vertex_edges(i).iter().filter(|&&b| b).count();
                prop_assert!(deg % 2 == 0);
            }
        }

        #[test]
        fn contours_reconstruct_config(c in arb_config()) {
            let cs = extract_contours(&c);
            let r = Site::new(0, 0);
            let back = cs.reconstruct(r, c.spin_at(r)).unwrap();
            prop_assert_eq!(&back, &c);
            let flipped = cs.reconstruct(r, -c.spin_at(r)).unwrap();
            prop_assert_eq!(flipped, c.flipped());
        }

        #[test]
        fn decomposition_partitions_window_edges(c in arb_config(), l in 1usize..3) {
            let g = *c.geometry();
            let center = Site::new(g.width() / 2, g.height() / 2);
            if let Ok(w) = Window::new(&g, center, l) {
                let wc = WindowContours::from_config(&c, &w);
                prop_assert_eq!(&wc, &WindowContours::from_contours(&extract_contours(&c), &w));
                let walls = wc.decompose();
                let edges: usize = walls.iter().map(|w| w.len()).sum();
                prop_assert_eq!(edges, wc.len());
                let mut seen = std::collections::HashSet::new();
                for wall in &walls {
                    for (k, d) in wall.moves.iter().enumerate() {
                        let p = wall.vertices[k];
                        let (dx, dy) = d.delta();
                        let q = (p.0 + dx as i32, p.1 + dy as i32);
                        prop_assert_eq!(q, wall.vertices[k + 1]);
                        prop_assert!(wc.edge(p, *d));
                        let key = if p < q { (p, q) } else { (q, p) };
                        prop_assert!(seen.insert(key), "edge used twice");
                    }
                    if !wall.closed {
                        prop_assert!(!wc.is_inside(wall.vertices[0]));
                        prop_assert!(!wc.is_inside(*wall.vertices.last().unwrap()));
                    }
                }
                // corner parity and exact relation to direction changes
                let deg4 = (0..2 * l as i32)
                    .flat_map(|b| (0..2 * l as i32).map(move |a| (a, b)))
                    .filter(|&p| Dir::ALL.iter().all(|&d| wc.edge(p, d)))
                    .count();
                let changes: usize = walls.iter().map(|w| w.corners).sum();
                prop_assert_eq!(wc.corner_count(), changes + 4 * deg4);
                prop_assert_eq!(wc.corner_count() % 2, changes % 2);
            }
        }

        #[test]
        fn corner_bound_never_fails(c in arb_config(), l in 1usize..4) {
            let g = *c.geometry();
            for y in 0..g.height() {
                for x in 0..g.width() {
                    if let Ok(w) = Window::new(&g, Site::new(x, y), l) {
                        prop_assert!(check_corner_bound(&c, &w));
                    }
                }
            }
        }
    }
}
