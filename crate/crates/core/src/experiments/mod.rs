//! Ensemble runs and the estimators built on them.
//!
//! Each replica is an independent trajectory keyed by its stream id. Workers
//! may run replicas in any order; results are merged in replica order and
//! every estimate is computed from the per-replica observations, so outputs
//! depend only on the configuration, never on scheduling.

mod config;
mod output;
mod recurrence;

pub use config::{parse_list, ExperimentConfig, Observables};
pub use output::{analyze_snapshot, write_outputs, AnalyzeRow, Manifest};
pub use recurrence::{recurrence_summary, ClassVisits, Proportion, RecurrenceLog, RecurrenceSummary, Transition};

use serde::{Deserialize, Serialize};

use crate::clusters::label_clusters;
use crate::contours::{ContourTracker, Window};
use crate::dynamics::SimState;
use crate::error::{Error, Result};
use crate::lattice::{init_random, LatticeGeometry, Site, SpinConfig};
use crate::rng::RngSpec;
use crate::snapshot::Snapshot;
use crate::stats::{linear_fit, median, median_se, MeanSe};
use crate::windows::{classify_window, window_events_with_class, window_grid, WindowEvents, WindowKind};

/// The reference site for single-site observables and the recurrence window.
pub fn origin(geometry: &LatticeGeometry) -> Site {
    Site::new(geometry.width() / 2, geometry.height() / 2)
}

/// Window classes and event indicators counted over a grid of
/// non-overlapping windows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowTally {
    pub l: usize,
    pub n_windows: u32,
    /// Indexed by [`WindowKind`].
    pub classes: [u32; 7],
    /// Indexed like [`WindowEvents::NAMES`].
    pub events: [u32; 7],
}

impl WindowTally {
    pub fn from_config(config: &SpinConfig, l: usize) -> Self {
        let mut tally = Self {
            l,
            n_windows: 0,
            classes: [0; 7],
            events: [0; 7],
        };
        for w in window_grid(config.geometry(), l) {
            let class = classify_window(config, &w);
            let ev: WindowEvents = window_events_with_class(config, &w, &class);
            tally.n_windows += 1;
            tally.classes[class.kind() as usize] += 1;
            for (k, hit) in ev.as_array().into_iter().enumerate() {
                tally.events[k] += hit as u32;
            }
        }
        tally
    }

    pub fn event_fraction(&self, k: usize) -> f64 {
        self.events[k] as f64 / self.n_windows as f64
    }

    pub fn class_fraction(&self, kind: WindowKind) -> f64 {
        self.classes[kind as usize] as f64 / self.n_windows as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterObservation {
    pub n_clusters: usize,
    pub max_cluster: usize,
    pub origin_size: usize,
    pub any_wraps: bool,
    pub r_star_min: Option<f64>,
    pub r_star_max: Option<f64>,
    /// The origin's cluster wraps or is at least half the lattice across, so
    /// its radii depend on the torus and are left out of radius statistics.
    pub radius_excluded: bool,
}

impl ClusterObservation {
    pub fn from_config(config: &SpinConfig) -> Self {
        let g = config.geometry();
        let map = label_clusters(config);
        let o = origin(g);
        let c = map.cluster_at(o);
        let half = g.width().min(g.height()) / 2;
        Self {
            n_clusters: map.n_clusters(),
            max_cluster: map.max_cluster_size(),
            origin_size: c.size,
            any_wraps: map.wrapping_report().any,
            r_star_min: map.r_star_min(o),
            r_star_max: map.r_star_max(o),
            radius_excluded: c.wraps() || c.diameter() >= half,
        }
    }
}

/// The observables that depend only on the spin configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigObservation {
    pub wall_density: f64,
    pub magnetization: f64,
    pub corner_density: Option<f64>,
    pub clusters: Option<ClusterObservation>,
    pub windows: Vec<WindowTally>,
}

impl ConfigObservation {
    /// From-scratch evaluation, used when re-analyzing snapshots.
    pub fn from_config(config: &SpinConfig, obs: &Observables, ls: &[usize]) -> Self {
        Self {
            wall_density: config.wall_density(),
            magnetization: config.magnetization(),
            corner_density: obs.corners.then(|| ContourTracker::from_config(config).corner_density()),
            clusters: obs.clusters.then(|| ClusterObservation::from_config(config)),
            windows: if obs.windows {
                ls.iter().map(|&l| WindowTally::from_config(config, l)).collect()
            } else {
                Vec::new()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeObservation {
    pub t: f64,
    #[serde(flatten)]
    pub config: ConfigObservation,
    pub persistence: Option<f64>,
    pub max_lowering_flips: u32,
    pub events: u64,
    /// The whole lattice is frozen at this probe.
    pub absorbed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub replica: u64,
    pub probes: Vec<ProbeObservation>,
    pub recurrence: Option<RecurrenceLog>,
    #[serde(skip)]
    pub snapshots: Vec<Snapshot>,
}

/// Run one trajectory and observe it at every probe time.
pub fn run_replica(cfg: &ExperimentConfig, replica: u64) -> Result<ReplicaResult> {
    let spec = RngSpec::new(cfg.master_seed, replica);
    let g = cfg.geometry;
    let initial = init_random(g, cfg.p_plus, &spec)?;
    let obs = cfg.observables;
    let mut tracker = obs.corners.then(|| ContourTracker::from_config(&initial));
    let rec_window = Window::new(&g, origin(&g), cfg.recurrence_l)?;
    let mut log = obs
        .recurrence
        .then(|| RecurrenceLog::new(replica, cfg.recurrence_l, classify_window(&initial, &rec_window).kind()));
    let mut state = SimState::new(initial, cfg.engine);
    let mut rng = spec.dynamics_rng();
    let mut last_flip = 0.0;
    let mut probes = Vec::with_capacity(cfg.probe_times.len());
    let mut snapshots = Vec::new();

    for &t in &cfg.probe_times {
        let report = state.run_until(t, &mut rng, |st, ev| {
            if !ev.flipped {
                return;
            }
            last_flip = ev.time;
            let g = st.config().geometry();
            if let Some(tr) = tracker.as_mut() {
                tr.apply_flip(g.index(ev.site));
            }
            if let Some(log) = log.as_mut() {
                if rec_window.contains(g, ev.site) {
                    log.observe(ev.time, classify_window(st.config(), &rec_window).kind());
                }
            }
        });
        if report.absorbed {
            if let Some(log) = log.as_mut() {
                log.absorbed_at.get_or_insert(last_flip);
            }
        }
        let config = state.config();
        let observation = ProbeObservation {
            t,
            config: ConfigObservation {
                wall_density: state.wall_density(),
                magnetization: state.magnetization(),
                corner_density: tracker.as_ref().map(ContourTracker::corner_density),
                clusters: obs.clusters.then(|| ClusterObservation::from_config(config)),
                windows: if obs.windows {
                    cfg.window_ls
                        .iter()
                        .map(|&l| WindowTally::from_config(config, l))
                        .collect()
                } else {
                    Vec::new()
                },
            },
            persistence: obs.persistence.then(|| state.stats().persistence_fraction()),
            max_lowering_flips: state.stats().max_energy_lowering_flips(),
            events: state.events(),
            absorbed: state.is_absorbed(),
        };
        probes.push(observation);
        if cfg.snapshots {
            snapshots.push(Snapshot::new(config.clone(), t, spec));
        }
    }
    if let Some(log) = log.as_mut() {
        log.horizon = *cfg.probe_times.last().expect("validated");
    }
    Ok(ReplicaResult {
        replica,
        probes,
        recurrence: log,
        snapshots,
    })
}

/// One row of `stats.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatRecord {
    pub observable: String,
    pub t: f64,
    pub l: Option<usize>,
    pub estimate: f64,
    pub stderr: f64,
    /// Replicas contributing to the estimate.
    pub n: usize,
    /// Replicas left out (only radius statistics exclude any).
    pub excluded: usize,
}

impl StatRecord {
    fn from_samples(observable: &str, t: f64, l: Option<usize>, samples: &[f64]) -> Self {
        let m = MeanSe::from_samples(samples);
        Self {
            observable: observable.to_string(),
            t,
            l,
            estimate: m.mean,
            stderr: m.stderr,
            n: m.n,
            excluded: 0,
        }
    }

    pub fn mean_se(&self) -> MeanSe {
        MeanSe {
            mean: self.estimate,
            stderr: self.stderr,
            n: self.n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleOutput {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
    pub replicas: Vec<ReplicaResult>,
    pub records: Vec<StatRecord>,
}

impl EnsembleOutput {
    pub fn record(&self, observable: &str, t: f64, l: Option<usize>) -> Option<&StatRecord> {
        self.records
            .iter()
            .find(|r| r.observable == observable && r.t == t && r.l == l)
    }

    /// Estimates of one observable across the probe grid.
    pub fn series(&self, observable: &str, l: Option<usize>) -> Vec<&StatRecord> {
        self.records
            .iter()
            .filter(|r| r.observable == observable && r.l == l)
            .collect()
    }

    pub fn recurrence_logs(&self) -> Vec<RecurrenceLog> {
        self.replicas.iter().filter_map(|r| r.recurrence.clone()).collect()
    }
}

/// Run the whole ensemble described by `cfg`.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleOutput> {
    let warnings = cfg.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let results: Vec<Result<ReplicaResult>> = crate::parallel::with_threads(cfg.threads, || {
        crate::parallel::map_indexed(cfg.n_replicas, |k| run_replica(cfg, cfg.first_replica + k as u64))
    });
    let replicas = results.into_iter().collect::<Result<Vec<_>>>()?;
    let records = estimate_all(&replicas, &cfg.probe_times, &cfg.window_ls);
    Ok(EnsembleOutput {
        config: cfg.clone(),
        warnings,
        replicas,
        records,
    })
}

type Extractor<'a> = (&'a str, &'a dyn Fn(&ProbeObservation) -> Option<f64>);

fn column<F: Fn(&ProbeObservation) -> Option<f64>>(replicas: &[ReplicaResult], k: usize, f: F) -> Vec<f64> {
    replicas.iter().filter_map(|r| f(&r.probes[k])).collect()
}

/// Every estimator, in a fixed order.
pub fn estimate_all(replicas: &[ReplicaResult], probe_times: &[f64], ls: &[usize]) -> Vec<StatRecord> {
    let mut out = Vec::new();
    for (k, &t) in probe_times.iter().enumerate() {
        let scalar = |name: &str, f: &dyn Fn(&ProbeObservation) -> Option<f64>| {
            let s = column(replicas, k, f);
            (!s.is_empty()).then(|| StatRecord::from_samples(name, t, None, &s))
        };
        let simple: [Extractor; 6] = [
            ("wall_density", &|p| Some(p.config.wall_density)),
            ("magnetization", &|p| Some(p.config.magnetization)),
            ("abs_magnetization", &|p| Some(p.config.magnetization.abs())),
            ("persistence", &|p| p.persistence),
            ("max_lowering_flips", &|p| Some(f64::from(p.max_lowering_flips))),
            ("absorbed_fraction", &|p| Some(p.absorbed as u8 as f64)),
        ];
        out.extend(simple.iter().filter_map(|(name, f)| scalar(name, f)));
        out.extend(cluster_records(replicas, k, t));
    }
    out.extend(estimate_corner_density(replicas, probe_times));
    for &l in ls {
        out.extend(estimate_window_probs(replicas, probe_times, l));
    }
    out
}

fn cluster_records(replicas: &[ReplicaResult], k: usize, t: f64) -> Vec<StatRecord> {
    let cl: Vec<&ClusterObservation> = replicas
        .iter()
        .filter_map(|r| r.probes[k].config.clusters.as_ref())
        .collect();
    if cl.is_empty() {
        return Vec::new();
    }
    let sizes: Vec<f64> = cl.iter().map(|c| c.origin_size as f64).collect();
    let mut out = vec![
        StatRecord {
            observable: "origin_cluster_size_median".into(),
            t,
            l: None,
            estimate: median(&sizes),
            stderr: median_se(&sizes),
            n: sizes.len(),
            excluded: 0,
        },
        StatRecord::from_samples("origin_cluster_size", t, None, &sizes),
        StatRecord::from_samples(
            "max_cluster_size",
            t,
            None,
            &cl.iter().map(|c| c.max_cluster as f64).collect::<Vec<_>>(),
        ),
        StatRecord::from_samples(
            "n_clusters",
            t,
            None,
            &cl.iter().map(|c| c.n_clusters as f64).collect::<Vec<_>>(),
        ),
        StatRecord::from_samples(
            "wrap_fraction",
            t,
            None,
            &cl.iter().map(|c| c.any_wraps as u8 as f64).collect::<Vec<_>>(),
        ),
    ];
    let excluded = cl.iter().filter(|c| c.radius_excluded).count();
    for (name, pick) in [
        ("r_star_min", (|c: &ClusterObservation| c.r_star_min) as fn(&ClusterObservation) -> Option<f64>),
        ("r_star_max", |c: &ClusterObservation| c.r_star_max),
    ] {
        let s: Vec<f64> = cl
            .iter()
            .filter(|c| !c.radius_excluded)
            .filter_map(|c| pick(c))
            .collect();
        let mut rec = StatRecord::from_samples(name, t, None, &s);
        rec.excluded = cl.len() - s.len();
        debug_assert!(rec.excluded >= excluded);
        out.push(rec);
    }
    out
}

/// `P(F)`: probability that a dual vertex hosts a corner, averaged over all
/// vertices of each replica, one sample per replica.
pub fn estimate_corner_density(replicas: &[ReplicaResult], probe_times: &[f64]) -> Vec<StatRecord> {
    probe_times
        .iter()
        .enumerate()
        .filter_map(|(k, &t)| {
            let s = column(replicas, k, |p| p.config.corner_density);
            (!s.is_empty()).then(|| StatRecord::from_samples("corner_density", t, None, &s))
        })
        .collect()
}

/// Window-event probabilities `P(C_L+)`, `P(C_L-)`, `P(A_L)` and the line
/// events, plus class fractions. Each replica contributes its average over
/// window positions; errors come from replica-to-replica variation.
pub fn estimate_window_probs(replicas: &[ReplicaResult], probe_times: &[f64], l: usize) -> Vec<StatRecord> {
    let mut out = Vec::new();
    for (k, &t) in probe_times.iter().enumerate() {
        let tallies: Vec<&WindowTally> = replicas
            .iter()
            .filter_map(|r| r.probes[k].config.windows.iter().find(|w| w.l == l))
            .collect();
        if tallies.is_empty() {
            continue;
        }
        for (e, name) in WindowEvents::NAMES.iter().enumerate() {
            let s: Vec<f64> = tallies.iter().map(|w| w.event_fraction(e)).collect();
            out.push(StatRecord::from_samples(&format!("P_{name}"), t, Some(l), &s));
        }
        for kind in WindowKind::ALL {
            let s: Vec<f64> = tallies.iter().map(|w| w.class_fraction(kind)).collect();
            out.push(StatRecord::from_samples(&format!("class_{}", kind.name()), t, Some(l), &s));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// Exponent of `rho ~ t^slope`.
    pub slope: f64,
    /// `log(rho)` at `t = 1` (natural log).
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `log(rho)` against `log(t)`. Needs at least four
/// positive points spanning at least 1.5 decades in `t`.
pub fn fit_wall_density_exponent(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 probe times, got {}", points.len())));
    }
    if points.iter().any(|&(t, rho)| t <= 0.0 || rho <= 0.0) {
        return Err(Error::Fit("times and densities must be positive".into()));
    }
    let t_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let decades = (t_max / t_min).log10();
    if decades < 1.5 {
        return Err(Error::Fit(format!("probe times span {decades:.2} decades, need 1.5")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, r)| (t.ln(), r.ln())).collect();
    let fit = linear_fit(&logs).ok_or_else(|| Error::Fit("degenerate time grid".into()))?;
    Ok(PowerLawFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
    })
}

/// Log-log slope of a series `(t, value)`, restricted to `t` in `[lo, hi]`;
/// reported for persistence, not asserted.
pub fn loglog_slope(points: &[(f64, f64)], lo: f64, hi: f64) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(t, v)| t >= lo && t <= hi && t > 0.0 && v > 0.0)
        .map(|&(t, v)| (t.ln(), v.ln()))
        .collect();
    linear_fit(&logs).map(|f| f.slope)
}
