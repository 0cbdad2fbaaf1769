//! Continuous-time zero-temperature Glauber dynamics.
//!
//! Two exact engines share [`SimState`]:
//!
//! * [`Engine::NaiveClocks`] superposes the rate-1 clocks of all `N` sites:
//!   the next ring comes after an `Exp(N)` wait at a uniform site, which
//!   flips if that lowers the energy, tosses a fair coin on a tie, and stays
//!   put otherwise.
//! * [`Engine::ActiveSet`] is rejection free. Only sites with nonzero rate
//!   are kept, in a rate-1 bucket and a rate-1/2 bucket; the wait is
//!   `Exp(R)` with `R = |one| + |half| / 2` and the chosen site always flips.
//!
//! Both engines draw the next event time lazily and keep it pending across
//! [`SimState::run_until`] calls, so splitting a run at observation times
//! does not change the trajectory.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Rate, Site, SpinConfig};
use crate::rng::RngSpec;
use crate::stats::MeanSe;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Engine {
    #[serde(rename = "naive")]
    NaiveClocks,
    #[serde(rename = "kmc")]
    ActiveSet,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Engine::NaiveClocks => f.write_str("naive"),
            Engine::ActiveSet => f.write_str("kmc"),
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" | "naive_clocks" => Ok(Engine::NaiveClocks),
            "kmc" | "active_set" | "active" => Ok(Engine::ActiveSet),
            other => Err(Error::Config(format!("unknown engine '{other}'"))),
        }
    }
}

const NO_SLOT: u32 = u32::MAX;

/// Sites with nonzero flip rate, split by rate. Membership is kept in
/// swap-remove vectors with a per-site slot index, so insertion, removal and
/// uniform selection are all O(1).
#[derive(Clone, Debug)]
pub struct ActiveSet {
    one: Vec<u32>,
    half: Vec<u32>,
    slot: Vec<u32>,
    rate: Vec<Rate>,
}

impl ActiveSet {
    pub fn from_config(config: &SpinConfig) -> Self {
        let n = config.geometry().n_sites();
        let mut set = Self {
            one: Vec::new(),
            half: Vec::new(),
            slot: vec![NO_SLOT; n],
            rate: vec![Rate::Zero; n],
        };
        for i in 0..n {
            set.update(i, config.flip_rate_index(i));
        }
        set
    }

    fn bucket_mut(&mut self, rate: Rate) -> Option<&mut Vec<u32>> {
        match rate {
            Rate::Zero => None,
            Rate::Half => Some(&mut self.half),
            Rate::One => Some(&mut self.one),
        }
    }

    pub fn update(&mut self, site: usize, new_rate: Rate) {
        let old = self.rate[site];
        if old == new_rate {
            return;
        }
        let slot = self.slot[site];
        if let Some(bucket) = self.bucket_mut(old) {
            let pos = slot as usize;
            bucket.swap_remove(pos);
            if let Some(&moved) = bucket.get(pos) {
                self.slot[moved as usize] = slot;
            }
        }
        self.slot[site] = NO_SLOT;
        if let Some(bucket) = self.bucket_mut(new_rate) {
            let pos = bucket.len() as u32;
            bucket.push(site as u32);
            self.slot[site] = pos;
        }
        self.rate[site] = new_rate;
    }

    pub fn rate(&self, site: usize) -> Rate {
        self.rate[site]
    }

    pub fn n_one(&self) -> usize {
        self.one.len()
    }

    pub fn n_half(&self) -> usize {
        self.half.len()
    }

    pub fn total_rate(&self) -> f64 {
        self.one.len() as f64 + 0.5 * self.half.len() as f64
    }

    pub fn is_empty(&self) -> bool {
        self.one.is_empty() && self.half.is_empty()
    }

    /// Pick a site with probability proportional to its rate. Rate-1 sites
    /// carry weight 2 and rate-1/2 sites weight 1, so one integer draw does it.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let weight = 2 * self.one.len() + self.half.len();
        let pick = rng.random_range(0..weight);
        if pick < 2 * self.one.len() {
            self.one[pick / 2] as usize
        } else {
            self.half[pick - 2 * self.one.len()] as usize
        }
    }

    /// Sorted members of the rate-1 and rate-1/2 buckets.
    pub fn members(&self) -> (Vec<usize>, Vec<usize>) {
        let mut one: Vec<usize> = self.one.iter().map(|&i| i as usize).collect();
        let mut half: Vec<usize> = self.half.iter().map(|&i| i as usize).collect();
        one.sort_unstable();
        half.sort_unstable();
        (one, half)
    }

    /// Compare against a from-scratch rate scan of `config`.
    pub fn matches(&self, config: &SpinConfig) -> bool {
        let scratch = ActiveSet::from_config(config);
        if self.rate != scratch.rate || self.members() != scratch.members() {
            return false;
        }
        let slots_ok = |bucket: &[u32]| {
            bucket
                .iter()
                .enumerate()
                .all(|(pos, &s)| self.slot[s as usize] as usize == pos)
        };
        slots_ok(&self.one) && slots_ok(&self.half)
    }
}

/// One clock ring (naive) or one flip (active set).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub time: f64,
    pub site: Site,
    #[serde(rename = "dH")]
    pub delta_h: i32,
    pub flipped: bool,
    /// Tie-breaking coin, present only when one was tossed.
    pub coin: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    Event(EventRecord),
    /// No site can flip; the configuration is frozen.
    Absorbed,
}

/// Per-site flip accounting.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteStats {
    flip_count: Vec<u32>,
    lowering_count: Vec<u32>,
    last_flip: Vec<Option<f64>>,
}

impl SiteStats {
    pub fn new(n_sites: usize) -> Self {
        Self {
            flip_count: vec![0; n_sites],
            lowering_count: vec![0; n_sites],
            last_flip: vec![None; n_sites],
        }
    }

    fn record(&mut self, event: &EventRecord, index: usize) {
        if event.flipped {
            self.flip_count[index] += 1;
            if event.delta_h < 0 {
                self.lowering_count[index] += 1;
            }
            self.last_flip[index] = Some(event.time);
        }
    }

    pub fn n_sites(&self) -> usize {
        self.flip_count.len()
    }

    pub fn flip_count(&self, index: usize) -> u32 {
        self.flip_count[index]
    }

    pub fn energy_lowering_flip_count(&self, index: usize) -> u32 {
        self.lowering_count[index]
    }

    pub fn last_flip_time(&self, index: usize) -> Option<f64> {
        self.last_flip[index]
    }

    pub fn persistent(&self, index: usize) -> bool {
        self.flip_count[index] == 0
    }

    pub fn max_energy_lowering_flips(&self) -> u32 {
        self.lowering_count.iter().copied().max().unwrap_or(0)
    }

    pub fn total_flips(&self) -> u64 {
        self.flip_count.iter().map(|&c| c as u64).sum()
    }

    /// Fraction of sites that have never flipped.
    pub fn persistence_fraction(&self) -> f64 {
        let n = self.flip_count.len();
        self.flip_count.iter().filter(|&&c| c == 0).count() as f64 / n as f64
    }
}

pub fn persistence_fraction(stats: &SiteStats) -> f64 {
    stats.persistence_fraction()
}

/// Summary of one [`SimState::run_until`] call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunReport {
    pub events: u64,
    pub flips: u64,
    pub absorbed: bool,
}

#[derive(Clone, Debug)]
pub struct SimState {
    config: SpinConfig,
    time: f64,
    engine: Engine,
    active: Option<ActiveSet>,
    /// Number of sites with nonzero rate; maintained for the naive engine so
    /// it can detect absorption without a bucket structure.
    unstable: usize,
    plus_count: usize,
    unsatisfied: usize,
    stats: SiteStats,
    seq: u64,
    pending: Option<f64>,
}

impl SimState {
    pub fn new(config: SpinConfig, engine: Engine) -> Self {
        let n = config.geometry().n_sites();
        let active = match engine {
            Engine::ActiveSet => Some(ActiveSet::from_config(&config)),
            Engine::NaiveClocks => None,
        };
        let unstable = (0..n)
            .filter(|&i| config.flip_rate_index(i) != Rate::Zero)
            .count();
        Self {
            plus_count: config.plus_count(),
            unsatisfied: config.unsatisfied_bonds(),
            time: 0.0,
            engine,
            active,
            unstable,
            stats: SiteStats::new(n),
            seq: 0,
            pending: None,
            config,
        }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn config(&self) -> &SpinConfig {
        &self.config
    }

    pub fn into_config(self) -> SpinConfig {
        self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn active_set(&self) -> Option<&ActiveSet> {
        self.active.as_ref()
    }

    pub fn stats(&self) -> &SiteStats {
        &self.stats
    }

    pub fn events(&self) -> u64 {
        self.seq
    }

    pub fn plus_count(&self) -> usize {
        self.plus_count
    }

    pub fn unsatisfied_bonds(&self) -> usize {
        self.unsatisfied
    }

    pub fn wall_density(&self) -> f64 {
        self.unsatisfied as f64 / self.config.geometry().n_bonds() as f64
    }

    pub fn magnetization(&self) -> f64 {
        let n = self.config.geometry().n_sites() as f64;
        (2.0 * self.plus_count as f64 - n) / n
    }

    /// Total flip rate of the configuration.
    pub fn total_rate(&self) -> f64 {
        match &self.active {
            Some(a) => a.total_rate(),
            None => (0..self.config.geometry().n_sites())
                .map(|i| self.config.flip_rate_index(i).as_f64())
                .sum(),
        }
    }

    pub fn is_absorbed(&self) -> bool {
        match &self.active {
            Some(a) => a.is_empty(),
            None => self.unstable == 0,
        }
    }

    /// Flip `index` and bring every cache up to date.
    fn apply_flip(&mut self, index: usize) {
        let g = *self.config.geometry();
        let neighbors = g.neighbor_slots(index);
        if self.active.is_none() {
            self.unstable -= (self.config.flip_rate_index(index) != Rate::Zero) as usize;
            for j in neighbors.iter().flatten() {
                self.unstable -= (self.config.flip_rate_index(*j) != Rate::Zero) as usize;
            }
        }
        let (n, k) = self.config.disagreements(index);
        self.config.flip(index);
        self.unsatisfied = self.unsatisfied + n as usize - 2 * k as usize;
        if self.config.is_plus(index) {
            self.plus_count += 1;
        } else {
            self.plus_count -= 1;
        }
        match &mut self.active {
            Some(active) => {
                active.update(index, self.config.flip_rate_index(index));
                for j in neighbors.iter().flatten() {
                    active.update(*j, self.config.flip_rate_index(*j));
                }
            }
            None => {
                self.unstable += (self.config.flip_rate_index(index) != Rate::Zero) as usize;
                for j in neighbors.iter().flatten() {
                    self.unstable += (self.config.flip_rate_index(*j) != Rate::Zero) as usize;
                }
            }
        }
    }

    fn next_time<R: Rng + ?Sized>(&mut self, rng: &mut R, rate: f64) -> f64 {
        match self.pending.take() {
            Some(t) => t,
            None => {
                let wait: f64 = rng.sample(Exp1);
                self.time + wait / rate
            }
        }
    }

    fn record(&mut self, time: f64, index: usize, delta_h: i32, flipped: bool, coin: Option<bool>) -> EventRecord {
        assert!(!flipped || delta_h <= 0, "energy-raising flip at site {index}");
        self.time = time;
        self.seq += 1;
        let event = EventRecord {
            seq: self.seq,
            time,
            site: self.config.geometry().site(index),
            delta_h,
            flipped,
            coin,
        };
        self.stats.record(&event, index);
        event
    }

    /// One clock ring of the naive engine. Always advances time, even in an
    /// absorbing configuration.
    pub fn step_naive<R: Rng + ?Sized>(&mut self, rng: &mut R) -> EventRecord {
        assert_eq!(self.engine, Engine::NaiveClocks, "step_naive on an active-set state");
        let n = self.config.geometry().n_sites();
        let time = self.next_time(rng, n as f64);
        let index = rng.random_range(0..n);
        self.ring(time, index, rng)
    }

    fn ring<R: Rng + ?Sized>(&mut self, time: f64, index: usize, rng: &mut R) -> EventRecord {
        let delta_h = self.config.delta_h_index(index);
        let (flipped, coin) = match delta_h.signum() {
            -1 => (true, None),
            0 => {
                let c: bool = rng.random();
                (c, Some(c))
            }
            _ => (false, None),
        };
        if flipped {
            self.apply_flip(index);
        }
        self.record(time, index, delta_h, flipped, coin)
    }

    /// One event of the rejection-free engine.
    pub fn step_kmc<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        let active = self
            .active
            .as_ref()
            .expect("step_kmc requires the active-set engine");
        if active.is_empty() {
            self.pending = None;
            return StepOutcome::Absorbed;
        }
        let rate = active.total_rate();
        let time = self.next_time(rng, rate);
        let index = self.active.as_ref().unwrap().sample(rng);
        let delta_h = self.config.delta_h_index(index);
        self.apply_flip(index);
        StepOutcome::Event(self.record(time, index, delta_h, true, None))
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        match self.engine {
            Engine::NaiveClocks => StepOutcome::Event(self.step_naive(rng)),
            Engine::ActiveSet => self.step_kmc(rng),
        }
    }

    /// Apply every event with time `<= t_end`, calling `observer` after each
    /// one. On return `time() == t_end`. Stops early (reporting `absorbed`)
    /// once no site can flip.
    pub fn run_until<R, F>(&mut self, t_end: f64, rng: &mut R, mut observer: F) -> RunReport
    where
        R: Rng + ?Sized,
        F: FnMut(&SimState, &EventRecord),
    {
        assert!(t_end >= self.time, "run_until({t_end}) called at time {}", self.time);
        let mut report = RunReport::default();
        loop {
            if self.is_absorbed() {
                self.pending = None;
                report.absorbed = true;
                break;
            }
            let n = self.config.geometry().n_sites();
            let rate = match &self.active {
                Some(a) => a.total_rate(),
                None => n as f64,
            };
            let time = self.next_time(rng, rate);
            if time > t_end {
                self.pending = Some(time);
                break;
            }
            let event = match self.engine {
                Engine::NaiveClocks => {
                    let index = rng.random_range(0..n);
                    self.ring(time, index, rng)
                }
                Engine::ActiveSet => {
                    let index = self.active.as_ref().unwrap().sample(rng);
                    let delta_h = self.config.delta_h_index(index);
                    self.apply_flip(index);
                    self.record(time, index, delta_h, true, None)
                }
            };
            report.events += 1;
            report.flips += event.flipped as u64;
            observer(self, &event);
        }
        self.time = t_end;
        report
    }

    /// Check every incrementally maintained cache against a recomputation
    /// from the spins alone. Returns a description of the first mismatch.
    pub fn verify_caches(&self) -> std::result::Result<(), String> {
        let c = &self.config;
        if self.plus_count != c.plus_count() {
            return Err(format!("plus count {} != {}", self.plus_count, c.plus_count()));
        }
        if self.unsatisfied != c.unsatisfied_bonds() {
            return Err(format!(
                "unsatisfied bonds {} != {}",
                self.unsatisfied,
                c.unsatisfied_bonds()
            ));
        }
        match &self.active {
            Some(a) => {
                if !a.matches(c) {
                    return Err("active-set buckets differ from a rate scan".into());
                }
            }
            None => {
                let scratch = (0..c.geometry().n_sites())
                    .filter(|&i| c.flip_rate_index(i) != Rate::Zero)
                    .count();
                if scratch != self.unstable {
                    return Err(format!("unstable count {} != {}", self.unstable, scratch));
                }
            }
        }
        Ok(())
    }
}

/// How much of the event stream an [`EventLog`] writes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogGranularity {
    Flips,
    All,
}

impl std::str::FromStr for LogGranularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flips" => Ok(LogGranularity::Flips),
            "all" => Ok(LogGranularity::All),
            other => Err(Error::Config(format!("unknown log granularity '{other}'"))),
        }
    }
}

/// JSON-lines event log: `{seq, time, site, dH, flipped, coin}` per line.
pub struct EventLog<W: Write> {
    out: W,
    granularity: LogGranularity,
    error: Option<std::io::Error>,
}

impl<W: Write> EventLog<W> {
    pub fn new(out: W, granularity: LogGranularity) -> Self {
        Self {
            out,
            granularity,
            error: None,
        }
    }

    pub fn log(&mut self, event: &EventRecord) {
        if self.error.is_some() || (self.granularity == LogGranularity::Flips && !event.flipped) {
            return;
        }
        let res = serde_json::to_writer(&mut self.out, event)
            .map_err(std::io::Error::from)
            .and_then(|_| self.out.write_all(b"\n"));
        if let Err(e) = res {
            self.error = Some(e);
        }
    }

    pub fn finish(mut self) -> Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e.into());
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Ensemble means of the observables used to compare the two engines.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EngineProbe {
    pub time: f64,
    pub wall_density: MeanSe,
    pub magnetization: MeanSe,
    pub abs_magnetization: MeanSe,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EngineComparison {
    pub naive: Vec<EngineProbe>,
    pub kmc: Vec<EngineProbe>,
}

impl EngineComparison {
    /// Largest separation, in combined standard errors, over every probe time
    /// and observable.
    pub fn max_z(&self) -> f64 {
        self.naive
            .iter()
            .zip(&self.kmc)
            .flat_map(|(a, b)| {
                [
                    a.wall_density.z_distance(&b.wall_density),
                    a.magnetization.z_distance(&b.magnetization),
                    a.abs_magnetization.z_distance(&b.abs_magnetization),
                ]
            })
            .fold(0.0, f64::max)
    }
}

/// Run `n_replicas` trajectories per engine from `family` and compare
/// ensemble means at each probe time. Replica `r` uses stream `r` for its
/// initial condition under both engines; the naive engine's dynamics use
/// streams offset by `n_replicas` so the two ensembles are independent.
pub fn engines_agree<F>(family: F, probes: &[f64], n_replicas: usize, master_seed: u64) -> EngineComparison
where
    F: Fn(&RngSpec) -> SpinConfig + Sync,
{
    let run = |engine: Engine| -> Vec<EngineProbe> {
        let offset = match engine {
            Engine::ActiveSet => 0,
            Engine::NaiveClocks => n_replicas as u64,
        };
        let per_replica: Vec<Vec<(f64, f64)>> = crate::parallel::map_indexed(n_replicas, |r| {
            let spec = RngSpec::new(master_seed, offset + r as u64);
            let mut state = SimState::new(family(&spec), engine);
            let mut rng = spec.dynamics_rng();
            probes
                .iter()
                .map(|&t| {
                    state.run_until(t, &mut rng, |_, _| {});
                    (state.wall_density(), state.magnetization())
                })
                .collect()
        });
        probes
            .iter()
            .enumerate()
            .map(|(k, &time)| {
                let wd: Vec<f64> = per_replica.iter().map(|p| p[k].0).collect();
                let m: Vec<f64> = per_replica.iter().map(|p| p[k].1).collect();
                let am: Vec<f64> = m.iter().map(|v| v.abs()).collect();
                EngineProbe {
                    time,
                    wall_density: MeanSe::from_samples(&wd),
                    magnetization: MeanSe::from_samples(&m),
                    abs_magnetization: MeanSe::from_samples(&am),
                }
            })
            .collect()
    };
    EngineComparison {
        naive: run(Engine::NaiveClocks),
        kmc: run(Engine::ActiveSet),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{init_random, LatticeGeometry, SpinConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn torus(n: usize) -> LatticeGeometry {
        LatticeGeometry::torus(n, n).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn all_plus_never_flips_under_naive_clocks() {
        let mut s = SimState::new(SpinConfig::constant(torus(8), 1), Engine::NaiveClocks);
        let mut r = rng(1);
        for _ in 0..1000 {
            let e = s.step_naive(&mut r);
            assert!(!e.flipped);
            assert_eq!(e.delta_h, 8);
        }
        assert!(s.time() > 0.0);
    }

    #[test]
    fn all_plus_is_absorbed_for_kmc() {
        let mut s = SimState::new(SpinConfig::constant(torus(8), 1), Engine::ActiveSet);
        assert_eq!(s.step_kmc(&mut rng(1)), StepOutcome::Absorbed);
        assert_eq!(s.time(), 0.0);
        let report = s.run_until(5.0, &mut rng(1), |_, _| {});
        assert!(report.absorbed);
        assert_eq!(report.events, 0);
        assert_eq!(s.time(), 5.0);
    }

    #[test]
    fn isolated_minus_flips_at_its_first_ring() {
        let g = torus(8);
        let mut c = SpinConfig::constant(g, 1);
        let target = g.index(Site::new(2, 5));
        c.set(target, -1);
        let mut s = SimState::new(c, Engine::NaiveClocks);
        let mut r = rng(7);
        loop {
            let e = s.step_naive(&mut r);
            if g.index(e.site) == target {
                assert!(e.flipped);
                assert_eq!(e.delta_h, -8);
                assert_eq!(e.coin, None);
                break;
            }
            assert!(!e.flipped);
        }
        assert!(s.config().is_constant());
        assert!(s.is_absorbed());
    }

    #[test]
    fn tie_rings_flip_on_a_fair_coin() {
        // width-1 vertical stripe: every stripe site has dH = 0
        let g = torus(8);
        let c = SpinConfig::from_fn(g, |x, _| if x == 3 { -1 } else { 1 });
        let site = g.index(Site::new(3, 4));
        let mut flips = 0;
        let trials = 10_000;
        let mut r = rng(11);
        for _ in 0..trials {
            let mut s = SimState::new(c.clone(), Engine::NaiveClocks);
            let e = s.ring(0.5, site, &mut r);
            assert_eq!(e.delta_h, 0);
            assert_eq!(e.coin, Some(e.flipped));
            flips += e.flipped as usize;
        }
        let frac = flips as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.015, "flip fraction {frac}");
    }

    #[test]
    fn single_rate_one_site_flips_with_exp1_holding_time() {
        // one isolated minus site: rate 1; no rate-1/2 sites
        let g = torus(8);
        let mut c = SpinConfig::constant(g, 1);
        let target = g.index(Site::new(4, 4));
        c.set(target, -1);
        let mut total = 0.0;
        let n = 4000;
        for seed in 0..n {
            let mut s = SimState::new(c.clone(), Engine::ActiveSet);
            let a = s.active_set().unwrap();
            assert_eq!((a.n_one(), a.n_half()), (1, 0));
            match s.step_kmc(&mut rng(seed)) {
                StepOutcome::Event(e) => {
                    assert_eq!(g.index(e.site), target);
                    assert!(e.flipped);
                    total += e.time;
                }
                StepOutcome::Absorbed => panic!("not absorbing"),
            }
            assert!(s.config().is_constant());
        }
        let mean = total / n as f64;
        // Exp(1): mean 1, sd 1
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt(), "mean holding time {mean}");
    }

    #[test]
    fn stripe_buckets_match_rate_scan() {
        let g = torus(8);
        let c = SpinConfig::from_fn(g, |x, _| if x == 3 { -1 } else { 1 });
        let s = SimState::new(c.clone(), Engine::ActiveSet);
        let a = s.active_set().unwrap();
        assert!(a.matches(&c));
        // stripe sites are ties; the flanking columns have one disagreement
        let (one, half) = a.members();
        assert!(one.is_empty());
        assert_eq!(half.len(), 8);
        for y in 0..8 {
            assert!(c.delta_h(Site::new(3, y)).unwrap() <= 0);
        }
    }

    #[test]
    fn buckets_track_scratch_along_a_run() {
        let g = torus(24);
        let c = init_random(g, 0.5, &RngSpec::new(3, 0)).unwrap();
        let mut s = SimState::new(c, Engine::ActiveSet);
        let mut r = rng(3);
        for k in 0..5000 {
            if let StepOutcome::Absorbed = s.step_kmc(&mut r) {
                break;
            }
            if k % 97 == 0 {
                s.verify_caches().unwrap();
            }
        }
        s.verify_caches().unwrap();
    }

    #[test]
    fn naive_caches_track_scratch() {
        let g = LatticeGeometry::new(12, 9, crate::lattice::Boundary::Free).unwrap();
        let c = init_random(g, 0.5, &RngSpec::new(5, 0)).unwrap();
        let mut s = SimState::new(c, Engine::NaiveClocks);
        let mut r = rng(5);
        s.run_until(3.0, &mut r, |st, _| {
            if st.events() % 50 == 0 {
                st.verify_caches().unwrap();
            }
        });
        s.verify_caches().unwrap();
    }

    #[test]
    fn run_until_same_time_is_identity() {
        let g = torus(16);
        let c = init_random(g, 0.5, &RngSpec::new(1, 1)).unwrap();
        for engine in [Engine::NaiveClocks, Engine::ActiveSet] {
            let mut s = SimState::new(c.clone(), engine);
            let report = s.run_until(0.0, &mut rng(0), |_, _| {});
            assert_eq!(report.events, 0);
            assert_eq!(s.config(), &c);
        }
    }

    #[test]
    fn tiny_horizon_usually_has_no_events() {
        let g = torus(64);
        let c = init_random(g, 0.5, &RngSpec::new(1, 2)).unwrap();
        let s0 = SimState::new(c.clone(), Engine::ActiveSet);
        let rate = s0.total_rate();
        // P(no event) = exp(-R * 1e-6) > 0.99 for R < 1e4
        assert!((-rate * 1e-6f64).exp() > 0.99);
        let mut quiet = 0;
        for seed in 0..200 {
            let mut s = SimState::new(c.clone(), Engine::ActiveSet);
            quiet += (s.run_until(1e-6, &mut rng(seed), |_, _| {}).events == 0) as usize;
        }
        assert!(quiet >= 190, "{quiet} of 200 runs had no events");
    }

    #[test]
    fn runs_are_deterministic_and_split_invariant() {
        let g = torus(32);
        let c = init_random(g, 0.5, &RngSpec::new(9, 0)).unwrap();
        for engine in [Engine::NaiveClocks, Engine::ActiveSet] {
            let mut a = SimState::new(c.clone(), engine);
            a.run_until(8.0, &mut rng(4), |_, _| {});
            let mut b = SimState::new(c.clone(), engine);
            b.run_until(8.0, &mut rng(4), |_, _| {});
            assert_eq!(a.config(), b.config());
            assert_eq!(a.stats(), b.stats());

            let mut split = SimState::new(c.clone(), engine);
            let mut r = rng(4);
            for t in [0.5, 1.0, 3.0, 8.0] {
                split.run_until(t, &mut r, |_, _| {});
            }
            assert_eq!(split.config(), a.config());
            assert_eq!(split.stats(), a.stats());
            assert_eq!(split.events(), a.events());
        }
    }

    #[test]
    fn no_energy_raising_flips_and_stats_consistent() {
        let g = torus(32);
        let c = init_random(g, 0.5, &RngSpec::new(21, 0)).unwrap();
        let mut s = SimState::new(c, Engine::NaiveClocks);
        let mut last = 0.0;
        s.run_until(6.0, &mut rng(21), |_, e| {
            assert!(e.time >= last);
            last = e.time;
            if e.flipped {
                assert!(e.delta_h <= 0);
            }
            assert_eq!(e.coin.is_some(), e.delta_h == 0);
        });
        let st = s.stats();
        for i in 0..g.n_sites() {
            assert!(st.energy_lowering_flip_count(i) <= st.flip_count(i));
            assert_eq!(st.persistent(i), st.flip_count(i) == 0);
            assert_eq!(st.persistent(i), st.last_flip_time(i).is_none());
        }
        let p = st.persistence_fraction();
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn persistence_is_nonincreasing() {
        let g = torus(32);
        let c = init_random(g, 0.5, &RngSpec::new(8, 0)).unwrap();
        let mut s = SimState::new(c, Engine::ActiveSet);
        assert_eq!(s.stats().persistence_fraction(), 1.0);
        let mut r = rng(8);
        let mut prev = 1.0;
        for t in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            s.run_until(t, &mut r, |_, _| {});
            let p = persistence_fraction(s.stats());
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn event_log_writes_json_lines() {
        let g = torus(8);
        let c = SpinConfig::from_fn(g, |x, _| if x == 3 { -1 } else { 1 });
        let mut s = SimState::new(c, Engine::NaiveClocks);
        let mut log = EventLog::new(Vec::new(), LogGranularity::All);
        s.run_until(0.5, &mut rng(2), |_, e| log.log(e));
        let out = String::from_utf8(log.finish().unwrap()).unwrap();
        let first = out.lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(first).unwrap();
        for key in ["seq", "time", "site", "dH", "flipped", "coin"] {
            assert!(v.get(key).is_some(), "missing {key} in {first}");
        }
        assert_eq!(out.lines().count() as u64, s.events());
    }

    #[test]
    fn engines_agree_on_constant_family() {
        let g = torus(8);
        let cmp = engines_agree(|_| SpinConfig::constant(g, 1), &[1.0, 2.0], 4, 0);
        assert_eq!(cmp.max_z(), 0.0);
        assert!(cmp.kmc.iter().all(|p| p.wall_density.mean == 0.0));
    }
}
