//! Experiment configuration and its key-value file format.
//!
//! ```text
//! # lines starting with '#' are comments
//! seed = 42
//! size = 256            # or width = ... / height = ...
//! boundary = torus
//! p_plus = 0.5
//! engine = kmc          # or naive
//! t_grid = 1,2,4,8,16,32,64
//! replicas = 200
//! first_replica = 0
//! L = 2,4
//! recurrence_L = 2
//! observables = walls,corners,clusters,windows,persistence,recurrence
//! threads = 0           # 0 = one per core
//! snapshots = false
//! output = runs/demo
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::Engine;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, LatticeGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Observables {
    pub walls: bool,
    pub corners: bool,
    pub clusters: bool,
    pub windows: bool,
    pub persistence: bool,
    pub recurrence: bool,
}

impl Observables {
    pub fn all() -> Self {
        Self {
            walls: true,
            corners: true,
            clusters: true,
            windows: true,
            persistence: true,
            recurrence: true,
        }
    }

    pub fn none() -> Self {
        Self {
            walls: false,
            corners: false,
            clusters: false,
            windows: false,
            persistence: false,
            recurrence: false,
        }
    }
}

impl FromStr for Observables {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut o = Observables::none();
        for item in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "all" => o = Observables::all(),
                "walls" => o.walls = true,
                "corners" => o.corners = true,
                "clusters" => o.clusters = true,
                "windows" => o.windows = true,
                "persistence" => o.persistence = true,
                "recurrence" => o.recurrence = true,
                other => return Err(Error::Config(format!("unknown observable '{other}'"))),
            }
        }
        Ok(o)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub geometry: LatticeGeometry,
    pub p_plus: f64,
    pub engine: Engine,
    /// Strictly increasing observation times.
    pub probe_times: Vec<f64>,
    pub n_replicas: usize,
    /// Stream id of the first replica; replica `k` uses `first_replica + k`.
    pub first_replica: u64,
    /// Window half-widths for the window estimators.
    pub window_ls: Vec<usize>,
    /// Half-width of the center window followed by the recurrence log.
    pub recurrence_l: usize,
    pub master_seed: u64,
    pub observables: Observables,
    /// Worker threads; 0 uses one per core.
    pub threads: usize,
    pub snapshots: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: LatticeGeometry::torus(64, 64).expect("valid default"),
            p_plus: 0.5,
            engine: Engine::ActiveSet,
            probe_times: (0..=6).map(|k| f64::from(1u32 << k)).collect(),
            n_replicas: 16,
            first_replica: 0,
            window_ls: vec![2],
            recurrence_l: 2,
            master_seed: 0,
            observables: Observables::all(),
            threads: 0,
            snapshots: false,
            output_dir: None,
        }
    }
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::Config(format!("bad {what} entry '{v}'")))
        })
        .collect()
}

fn parse_one<T: FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| Error::Config(format!("bad value '{s}' for '{key}'")))
}

fn parse_bool(s: &str, key: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean '{s}' for '{key}'"))),
    }
}

impl ExperimentConfig {
    /// Parse the key-value format, starting from the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut width = cfg.geometry.width();
        let mut height = cfg.geometry.height();
        let mut boundary = cfg.geometry.boundary();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "seed" | "master_seed" => cfg.master_seed = parse_one(value, key)?,
                "size" => {
                    width = parse_one(value, key)?;
                    height = width;
                }
                "width" => width = parse_one(value, key)?,
                "height" => height = parse_one(value, key)?,
                "boundary" => boundary = value.parse()?,
                "p_plus" => cfg.p_plus = parse_one(value, key)?,
                "engine" => cfg.engine = value.parse()?,
                "t_grid" | "probe_times" => cfg.probe_times = parse_list(value, key)?,
                "replicas" | "n_replicas" => cfg.n_replicas = parse_one(value, key)?,
                "first_replica" => cfg.first_replica = parse_one(value, key)?,
                "L" | "window_L" => cfg.window_ls = parse_list(value, key)?,
                "recurrence_L" => cfg.recurrence_l = parse_one(value, key)?,
                "observables" => cfg.observables = value.parse()?,
                "threads" => cfg.threads = parse_one(value, key)?,
                "snapshots" => cfg.snapshots = parse_bool(value, key)?,
                "output" | "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
                other => return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        cfg.geometry = LatticeGeometry::new(width, height, boundary)?;
        Ok(cfg)
    }

    pub fn with_size(mut self, width: usize, height: usize, boundary: Boundary) -> Result<Self> {
        self.geometry = LatticeGeometry::new(width, height, boundary)?;
        Ok(self)
    }

    /// Latest time at which finite-size effects are not expected to matter:
    /// the coarsening length grows like `sqrt(t)`, so `(min(w, h) / 8)^2`.
    pub fn trusted_horizon(&self) -> f64 {
        let side = self.geometry.width().min(self.geometry.height()) as f64;
        (side / 8.0).powi(2)
    }

    /// Check hard constraints; returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(0.0..=1.0).contains(&self.p_plus) {
            return Err(Error::InvalidProbability(self.p_plus));
        }
        if self.n_replicas == 0 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if self.probe_times.is_empty() {
            return Err(Error::Config("probe time grid is empty".into()));
        }
        if self.probe_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Config("probe times must be finite and non-negative".into()));
        }
        if self.probe_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("probe times must be strictly increasing".into()));
        }
        let center = super::origin(&self.geometry);
        let mut ls = self.window_ls.clone();
        if self.observables.recurrence {
            ls.push(self.recurrence_l);
        }
        for l in ls {
            crate::contours::Window::new(&self.geometry, center, l)?;
        }
        let mut warnings = Vec::new();
        let horizon = self.trusted_horizon();
        let t_max = *self.probe_times.last().unwrap();
        if t_max > horizon {
            warnings.push(format!(
                "largest probe time {t_max} exceeds the finite-size horizon {horizon} for a {}x{} lattice",
                self.geometry.width(),
                self.geometry.height()
            ));
        }
        Ok(warnings)
    }
}
