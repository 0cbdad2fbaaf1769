//! Lattice geometry, spin state and the local energy rule.
//!
//! Sites are addressed either as [`Site`] coordinates or as row-major indices
//! `y * width + x`. The `y` axis points North. Spins are stored one bit per
//! site (1 = +1) but every public accessor speaks in `-1`/`+1`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Purpose, RngSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Torus,
    Free,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Torus => f.write_str("torus"),
            Boundary::Free => f.write_str("free"),
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "torus" | "periodic" => Ok(Boundary::Torus),
            "free" | "open" => Ok(Boundary::Free),
            other => Err(Error::Config(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: usize,
    pub y: usize,
}

impl Site {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// Compass directions on the primal and dual lattices. `N` is `+y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    E,
    N,
    W,
    S,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::E, Dir::N, Dir::W, Dir::S];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Dir::E => (1, 0),
            Dir::N => (0, 1),
            Dir::W => (-1, 0),
            Dir::S => (0, -1),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::E => Dir::W,
            Dir::N => Dir::S,
            Dir::W => Dir::E,
            Dir::S => Dir::N,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Dir::E | Dir::W)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeGeometry {
    width: usize,
    height: usize,
    boundary: Boundary,
}

impl LatticeGeometry {
    pub fn new(width: usize, height: usize, boundary: Boundary) -> Result<Self> {
        if width < 4 || height < 4 {
            return Err(Error::InvalidGeometry { width, height });
        }
        Ok(Self {
            width,
            height,
            boundary,
        })
    }

    pub fn torus(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, Boundary::Torus)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_torus(&self) -> bool {
        self.boundary == Boundary::Torus
    }

    pub fn n_sites(&self) -> usize {
        self.width * self.height
    }

    /// Number of nearest-neighbor bonds.
    pub fn n_bonds(&self) -> usize {
        match self.boundary {
            Boundary::Torus => 2 * self.n_sites(),
            Boundary::Free => (self.width - 1) * self.height + self.width * (self.height - 1),
        }
    }

    pub fn contains(&self, site: Site) -> bool {
        site.x < self.width && site.y < self.height
    }

    pub fn check(&self, site: Site) -> Result<()> {
        if self.contains(site) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                x: site.x,
                y: site.y,
                width: self.width,
                height: self.height,
            })
        }
    }

    #[inline]
    pub fn index(&self, site: Site) -> usize {
        site.y * self.width + site.x
    }

    #[inline]
    pub fn site(&self, index: usize) -> Site {
        Site::new(index % self.width, index / self.width)
    }

    /// Neighbor of `index` in direction `dir`, or `None` across a free edge.
    #[inline]
    pub fn step(&self, index: usize, dir: Dir) -> Option<usize> {
        let (w, h) = (self.width, self.height);
        let x = index % w;
        let y = index / w;
        let torus = self.boundary == Boundary::Torus;
        match dir {
            Dir::E if x + 1 < w => Some(index + 1),
            Dir::E if torus => Some(index + 1 - w),
            Dir::W if x > 0 => Some(index - 1),
            Dir::W if torus => Some(index + w - 1),
            Dir::N if y + 1 < h => Some(index + w),
            Dir::N if torus => Some(x),
            Dir::S if y > 0 => Some(index - w),
            Dir::S if torus => Some(index + w * (h - 1)),
            _ => None,
        }
    }

    /// Neighbor indices in E, N, W, S order; absent neighbors are `None`.
    #[inline]
    pub fn neighbor_slots(&self, index: usize) -> [Option<usize>; 4] {
        [
            self.step(index, Dir::E),
            self.step(index, Dir::N),
            self.step(index, Dir::W),
            self.step(index, Dir::S),
        ]
    }

    pub fn neighbor_indices(&self, index: usize) -> impl Iterator<Item = usize> {
        self.neighbor_slots(index).into_iter().flatten()
    }

    /// Nearest neighbors of `site`: four wrapped neighbors on the torus, the
    /// in-bounds subset under free boundaries.
    pub fn neighbors(&self, site: Site) -> Result<Vec<Site>> {
        self.check(site)?;
        let i = self.index(site);
        Ok(self.neighbor_indices(i).map(|j| self.site(j)).collect())
    }

    /// Wrap an integer offset from `origin` onto the lattice. Under free
    /// boundaries, returns `None` if the target leaves the lattice.
    pub fn offset(&self, origin: Site, dx: i64, dy: i64) -> Option<Site> {
        let x = origin.x as i64 + dx;
        let y = origin.y as i64 + dy;
        match self.boundary {
            Boundary::Torus => Some(Site::new(
                x.rem_euclid(self.width as i64) as usize,
                y.rem_euclid(self.height as i64) as usize,
            )),
            Boundary::Free => {
                if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
                    None
                } else {
                    Some(Site::new(x as usize, y as usize))
                }
            }
        }
    }

    /// Shortest displacement between two coordinates along an axis of length
    /// `len` (minimum over wrapped images on the torus).
    fn axis_delta(&self, a: usize, b: usize, len: usize) -> f64 {
        let d = a.abs_diff(b);
        match self.boundary {
            Boundary::Torus => d.min(len - d) as f64,
            Boundary::Free => d as f64,
        }
    }

    /// Euclidean distance, using the minimum image on the torus.
    pub fn distance(&self, a: Site, b: Site) -> f64 {
        let dx = self.axis_delta(a.x, b.x, self.width);
        let dy = self.axis_delta(a.y, b.y, self.height);
        dx.hypot(dy)
    }
}

/// Fixed-length bit array backed by 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PackedBits {
    words: Vec<u64>,
    len: usize,
}

impl PackedBits {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut bits = Self {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        bits.clear_tail();
        bits
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn invert(&mut self) {
        for w in &mut self.words {
            *w = !*w;
        }
        self.clear_tail();
    }
}

/// Flip rate of a single site under zero-temperature dynamics with rate-1
/// clocks: energy-lowering flips always happen, ties happen on a fair coin,
/// energy-raising flips never happen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rate {
    Zero,
    Half,
    One,
}

impl Rate {
    pub fn from_delta_h(delta_h: i32) -> Self {
        match delta_h.signum() {
            -1 => Rate::One,
            0 => Rate::Half,
            _ => Rate::Zero,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Rate::Zero => 0.0,
            Rate::Half => 0.5,
            Rate::One => 1.0,
        }
    }
}

/// A spin configuration on a finite lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    geometry: LatticeGeometry,
    bits: PackedBits,
}

impl SpinConfig {
    pub fn constant(geometry: LatticeGeometry, spin: i8) -> Self {
        let n = geometry.n_sites();
        let bits = if spin > 0 {
            PackedBits::ones(n)
        } else {
            PackedBits::zeros(n)
        };
        Self { geometry, bits }
    }

    pub fn from_fn(geometry: LatticeGeometry, mut f: impl FnMut(usize, usize) -> i8) -> Self {
        let mut bits = PackedBits::zeros(geometry.n_sites());
        for y in 0..geometry.height() {
            for x in 0..geometry.width() {
                if f(x, y) > 0 {
                    bits.set(y * geometry.width() + x, true);
                }
            }
        }
        Self { geometry, bits }
    }

    pub fn from_spins(geometry: LatticeGeometry, spins: &[i8]) -> Result<Self> {
        if spins.len() != geometry.n_sites() {
            return Err(Error::LengthMismatch {
                got: spins.len(),
                expected: geometry.n_sites(),
            });
        }
        let mut bits = PackedBits::zeros(spins.len());
        for (i, &s) in spins.iter().enumerate() {
            match s {
                1 => bits.set(i, true),
                -1 => {}
                other => return Err(Error::InvalidSpin(other as i64)),
            }
        }
        Ok(Self { geometry, bits })
    }

    /// Build from text rows of `+`/`-`. The first row is the top of the
    /// lattice (`y = height - 1`).
    pub fn from_rows(boundary: Boundary, rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let geometry = LatticeGeometry::new(width, height, boundary)?;
        let mut spins = vec![0i8; geometry.n_sites()];
        for (r, row) in rows.iter().enumerate() {
            let y = height - 1 - r;
            let chars: Vec<char> = row.chars().collect();
            if chars.len() != width {
                return Err(Error::LengthMismatch {
                    got: chars.len(),
                    expected: width,
                });
            }
            for (x, c) in chars.into_iter().enumerate() {
                spins[y * width + x] = match c {
                    '+' => 1,
                    '-' => -1,
                    _ => return Err(Error::InvalidSpin(c as i64)),
                };
            }
        }
        Self::from_spins(geometry, &spins)
    }

    pub(crate) fn from_bits(geometry: LatticeGeometry, bits: PackedBits) -> Self {
        debug_assert_eq!(bits.len(), geometry.n_sites());
        Self { geometry, bits }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn bits(&self) -> &PackedBits {
        &self.bits
    }

    #[inline]
    pub fn is_plus(&self, index: usize) -> bool {
        self.bits.get(index)
    }

    #[inline]
    pub fn spin(&self, index: usize) -> i8 {
        if self.bits.get(index) {
            1
        } else {
            -1
        }
    }

    pub fn spin_at(&self, site: Site) -> i8 {
        self.spin(self.geometry.index(site))
    }

    pub fn set(&mut self, index: usize, spin: i8) {
        self.bits.set(index, spin > 0);
    }

    #[inline]
    pub fn flip(&mut self, index: usize) {
        self.bits.toggle(index);
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.geometry.n_sites()).map(|i| self.spin(i)).collect()
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.invert();
        Self {
            geometry: self.geometry,
            bits,
        }
    }

    pub fn plus_count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn magnetization(&self) -> f64 {
        let n = self.geometry.n_sites() as f64;
        (2.0 * self.plus_count() as f64 - n) / n
    }

    pub fn is_constant(&self) -> bool {
        let plus = self.plus_count();
        plus == 0 || plus == self.geometry.n_sites()
    }

    /// Number of neighbors of `index` and how many of them disagree with it.
    #[inline]
    pub fn disagreements(&self, index: usize) -> (u8, u8) {
        let s = self.bits.get(index);
        let mut n = 0;
        let mut k = 0;
        for j in self.geometry.neighbor_slots(index).into_iter().flatten() {
            n += 1;
            k += (self.bits.get(j) != s) as u8;
        }
        (n, k)
    }

    /// Energy change `2 * s_x * sum_y s_y` of flipping the spin at `index`.
    #[inline]
    pub fn delta_h_index(&self, index: usize) -> i32 {
        let (n, k) = self.disagreements(index);
        2 * (n as i32 - 2 * k as i32)
    }

    pub fn delta_h(&self, site: Site) -> Result<i32> {
        self.geometry.check(site)?;
        Ok(self.delta_h_index(self.geometry.index(site)))
    }

    #[inline]
    pub fn flip_rate_index(&self, index: usize) -> Rate {
        Rate::from_delta_h(self.delta_h_index(index))
    }

    pub fn flip_rate(&self, site: Site) -> Result<Rate> {
        Ok(Rate::from_delta_h(self.delta_h(site)?))
    }

    /// Whether the bond from `index` to its neighbor in direction `E` or `N`
    /// exists and joins opposite spins.
    #[inline]
    pub fn bond_unsatisfied(&self, index: usize, dir: Dir) -> bool {
        match self.geometry.step(index, dir) {
            Some(j) => self.bits.get(index) != self.bits.get(j),
            None => false,
        }
    }

    pub fn unsatisfied_bonds(&self) -> usize {
        (0..self.geometry.n_sites())
            .map(|i| {
                self.bond_unsatisfied(i, Dir::E) as usize + self.bond_unsatisfied(i, Dir::N) as usize
            })
            .sum()
    }

    /// Fraction of nearest-neighbor bonds joining opposite spins.
    pub fn wall_density(&self) -> f64 {
        self.unsatisfied_bonds() as f64 / self.geometry.n_bonds() as f64
    }

    /// Lattice picture with the top row first, `+`/`-` per site.
    pub fn to_rows(&self) -> Vec<String> {
        let (w, h) = (self.geometry.width(), self.geometry.height());
        (0..h)
            .rev()
            .map(|y| {
                (0..w)
                    .map(|x| if self.is_plus(y * w + x) { '+' } else { '-' })
                    .collect()
            })
            .collect()
    }
}

/// Sample each spin independently: `+1` with probability `p_plus`.
pub fn init_random(geometry: LatticeGeometry, p_plus: f64, rng: &RngSpec) -> Result<SpinConfig> {
    let mut r = rng.rng(Purpose::InitialCondition);
    init_random_with(geometry, p_plus, &mut r)
}

pub fn init_random_with<R: Rng + ?Sized>(
    geometry: LatticeGeometry,
    p_plus: f64,
    rng: &mut R,
) -> Result<SpinConfig> {
    if !(0.0..=1.0).contains(&p_plus) {
        return Err(Error::InvalidProbability(p_plus));
    }
    let mut bits = PackedBits::zeros(geometry.n_sites());
    for i in 0..geometry.n_sites() {
        if rng.random::<f64>() < p_plus {
            bits.set(i, true);
        }
    }
    Ok(SpinConfig { geometry, bits })
}

pub fn wall_density(config: &SpinConfig) -> f64 {
    config.wall_density()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn torus(n: usize) -> LatticeGeometry {
        LatticeGeometry::torus(n, n).unwrap()
    }

    fn sorted(mut v: Vec<Site>) -> Vec<Site> {
        v.sort();
        v
    }

    #[test]
    fn rejects_small_lattices() {
        assert!(LatticeGeometry::torus(3, 8).is_err());
        assert!(LatticeGeometry::new(8, 2, Boundary::Free).is_err());
    }

    #[test]
    fn torus_neighbors_wrap() {
        let g = torus(8);
        let got = sorted(g.neighbors(Site::new(0, 0)).unwrap());
        let want = sorted(vec![
            Site::new(1, 0),
            Site::new(7, 0),
            Site::new(0, 1),
            Site::new(0, 7),
        ]);
        assert_eq!(got, want);
    }

    #[test]
    fn free_corner_has_two_neighbors() {
        let g = LatticeGeometry::new(8, 8, Boundary::Free).unwrap();
        let got = sorted(g.neighbors(Site::new(0, 0)).unwrap());
        assert_eq!(got, vec![Site::new(0, 1), Site::new(1, 0)]);
        assert_eq!(g.neighbors(Site::new(3, 0)).unwrap().len(), 3);
        assert_eq!(g.neighbors(Site::new(3, 3)).unwrap().len(), 4);
    }

    #[test]
    fn out_of_bounds_site_is_an_error() {
        let g = torus(8);
        assert!(matches!(
            g.neighbors(Site::new(8, 0)),
            Err(Error::OutOfBounds { .. })
        ));
        let c = SpinConfig::constant(g, 1);
        assert!(c.delta_h(Site::new(0, 9)).is_err());
    }

    #[test]
    fn neighbor_relation_is_symmetric() {
        for g in [torus(6), LatticeGeometry::new(5, 7, Boundary::Free).unwrap()] {
            for i in 0..g.n_sites() {
                for j in g.neighbor_indices(i) {
                    assert!(g.neighbor_indices(j).any(|k| k == i));
                }
            }
        }
    }

    #[test]
    fn delta_h_values() {
        let g = torus(8);
        let plus = SpinConfig::constant(g, 1);
        assert_eq!(plus.delta_h(Site::new(3, 3)).unwrap(), 8);

        let mut isolated = plus.clone();
        isolated.set(g.index(Site::new(3, 3)), -1);
        assert_eq!(isolated.delta_h(Site::new(3, 3)).unwrap(), -8);

        // vertical stripe of width 1: two horizontal disagreements
        let stripe = SpinConfig::from_fn(g, |x, _| if x == 3 { -1 } else { 1 });
        assert_eq!(stripe.delta_h(Site::new(3, 0)).unwrap(), 0);
        assert_eq!(stripe.flip_rate(Site::new(3, 0)).unwrap(), Rate::Half);
    }

    #[test]
    fn flip_rates_follow_majority_rule() {
        let g = torus(8);
        let base = SpinConfig::constant(g, 1);
        let centre = g.index(Site::new(4, 4));
        let mut c = base.clone();
        c.set(centre, -1);
        // disagree with 3 of 4
        c.set(g.step(centre, Dir::E).unwrap(), -1);
        assert_eq!(c.delta_h_index(centre), -4);
        assert_eq!(c.flip_rate_index(centre), Rate::One);
        // disagree with exactly 2
        c.set(g.step(centre, Dir::W).unwrap(), -1);
        assert_eq!(c.delta_h_index(centre), 0);
        assert_eq!(c.flip_rate_index(centre), Rate::Half);
        // disagree with 1
        c.set(g.step(centre, Dir::N).unwrap(), -1);
        assert_eq!(c.delta_h_index(centre), 4);
        assert_eq!(c.flip_rate_index(centre), Rate::Zero);
    }

    #[test]
    fn wall_density_examples() {
        let g = torus(8);
        assert_eq!(SpinConfig::constant(g, 1).wall_density(), 0.0);
        let checker = SpinConfig::from_fn(g, |x, y| if (x + y) % 2 == 0 { 1 } else { -1 });
        assert_eq!(checker.wall_density(), 1.0);
        // two flat horizontal walls: rows 0..4 plus, 4..8 minus
        let stripes = SpinConfig::from_fn(g, |_, y| if y < 4 { 1 } else { -1 });
        assert_eq!(stripes.unsatisfied_bonds(), 16);
        assert_eq!(g.n_bonds(), 128);
        assert_eq!(stripes.wall_density(), 0.125);
    }

    #[test]
    fn init_random_degenerate_and_invalid() {
        let g = torus(16);
        let spec = RngSpec::new(1, 0);
        assert_eq!(init_random(g, 1.0, &spec).unwrap(), SpinConfig::constant(g, 1));
        assert_eq!(init_random(g, 0.0, &spec).unwrap(), SpinConfig::constant(g, -1));
        assert!(matches!(
            init_random(g, 1.5, &spec),
            Err(Error::InvalidProbability(_))
        ));
        assert!(init_random(g, -0.1, &spec).is_err());
    }

    #[test]
    fn init_random_plus_fraction_concentrates() {
        let g = torus(256);
        let c = init_random(g, 0.5, &RngSpec::new(2024, 0)).unwrap();
        let frac = c.plus_count() as f64 / g.n_sites() as f64;
        assert!((frac - 0.5).abs() < 3.0 / 256.0, "plus fraction {frac}");
    }

    #[test]
    fn initial_wall_density_has_mean_one_half() {
        let g = torus(32);
        let samples: Vec<f64> = (0..100)
            .map(|r| init_random(g, 0.5, &RngSpec::new(99, r)).unwrap().wall_density())
            .collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn from_rows_orientation() {
        let c = SpinConfig::from_rows(
            Boundary::Torus,
            &["-+++", "++++", "++++", "+++-"],
        )
        .unwrap();
        assert_eq!(c.spin_at(Site::new(0, 3)), -1);
        assert_eq!(c.spin_at(Site::new(3, 0)), -1);
        assert_eq!(c.to_rows()[0], "-+++");
    }

    #[test]
    fn packed_bits_iter_ones() {
        let mut b = PackedBits::zeros(130);
        for i in [0, 63, 64, 129] {
            b.set(i, true);
        }
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        b.invert();
        assert_eq!(b.count_ones(), 126);
    }

    fn arb_config() -> impl Strategy<Value = SpinConfig> {
        (4usize..10, 4usize..10, any::<bool>()).prop_flat_map(|(w, h, free)| {
            let boundary = if free { Boundary::Free } else { Boundary::Torus };
            proptest::collection::vec(any::<bool>(), w * h).prop_map(move |v| {
                let g = LatticeGeometry::new(w, h, boundary).unwrap();
                let spins: Vec<i8> = v.iter().map(|&b| if b { 1 } else { -1 }).collect();
                SpinConfig::from_spins(g, &spins).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn delta_h_is_antisymmetric_under_flip(c in arb_config()) {
            for i in 0..c.geometry().n_sites() {
                let mut f = c.clone();
                f.flip(i);
                prop_assert_eq!(c.delta_h_index(i), -f.delta_h_index(i));
            }
        }

        #[test]
        fn flip_rate_is_invariant_under_global_flip(c in arb_config()) {
            let f = c.flipped();
            for i in 0..c.geometry().n_sites() {
                prop_assert_eq!(c.flip_rate_index(i), f.flip_rate_index(i));
            }
        }

        #[test]
        fn delta_h_takes_allowed_values(c in arb_config()) {
            for i in 0..c.geometry().n_sites() {
                let d = c.delta_h_index(i);
                let n = c.geometry().neighbor_indices(i).count() as i32;
                prop_assert!(d % 2 == 0 && d.abs() <= 2 * n);
                if c.geometry().is_torus() {
                    prop_assert!([-8, -4, 0, 4, 8].contains(&d));
                }
            }
        }

        #[test]
        fn wall_density_zero_iff_constant_on_torus(c in arb_config()) {
            if c.geometry().is_torus() {
                prop_assert_eq!(c.wall_density() == 0.0, c.is_constant());
            }
        }
    }
}
