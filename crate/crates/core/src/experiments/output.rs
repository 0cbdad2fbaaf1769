//! On-disk outputs of an ensemble run.
//!
//! A run directory holds
//!
//! - `stats.csv`: `observable,t,L,estimate,stderr,n`, one row per estimate;
//! - `observations.jsonl`: one line per replica and probe, raw observables;
//! - `recurrence.jsonl`: one class-transition log per replica;
//! - `windows.csv`: pooled window-class counts and event frequencies;
//! - `snapshots/r<replica>_t<time>.ztis` when snapshots are enabled;
//! - `manifest.json`: the configuration, warnings and the files written.
//!
//! Rows are written in replica and probe order, so the files are
//! byte-identical for a given configuration whatever the thread count.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{origin, EnsembleOutput, ExperimentConfig, WindowTally};
use crate::clusters::label_clusters;
use crate::error::Result;
use crate::snapshot::Snapshot;
use crate::windows::{WindowEvents, WindowKind};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Set when writing stopped early; `files` lists what made it to disk.
    pub error: Option<String>,
}

fn opt(v: Option<impl ToString>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn stats_csv(out: &EnsembleOutput) -> String {
    let mut s = String::from("observable,t,L,estimate,stderr,n\n");
    for r in &out.records {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.observable, r.t, opt(r.l), r.estimate, r.stderr, r.n);
    }
    s
}

fn windows_csv(out: &EnsembleOutput) -> String {
    let mut s = String::from("t,L,windows");
    for kind in WindowKind::ALL {
        let _ = write!(s, ",{}", kind.name());
    }
    for name in WindowEvents::NAMES {
        let _ = write!(s, ",P_{name}");
    }
    s.push('\n');
    for (k, &t) in out.config.probe_times.iter().enumerate() {
        for &l in &out.config.window_ls {
            let tallies: Vec<&WindowTally> = out
                .replicas
                .iter()
                .filter_map(|r| r.probes[k].config.windows.iter().find(|w| w.l == l))
                .collect();
            if tallies.is_empty() {
                continue;
            }
            let n: u64 = tallies.iter().map(|w| u64::from(w.n_windows)).sum();
            let _ = write!(s, "{t},{l},{n}");
            for c in 0..7 {
                let _ = write!(s, ",{}", tallies.iter().map(|w| u64::from(w.classes[c])).sum::<u64>());
            }
            for e in 0..7 {
                let hits: u64 = tallies.iter().map(|w| u64::from(w.events[e])).sum();
                let _ = write!(s, ",{}", hits as f64 / n as f64);
            }
            s.push('\n');
        }
    }
    s
}

#[derive(Serialize)]
struct ObservationLine<'a> {
    replica: u64,
    #[serde(flatten)]
    probe: &'a super::ProbeObservation,
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<String> {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(&item)?);
        s.push('\n');
    }
    Ok(s)
}

fn snapshot_name(replica: u64, time: f64) -> String {
    format!("r{replica:06}_t{time}.ztis")
}

/// Write every output file into `dir`. On failure a manifest recording the
/// error and the files already written is still attempted before the error
/// is returned.
pub fn write_outputs(out: &EnsembleOutput, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let mut manifest = Manifest {
        config: out.config.clone(),
        warnings: out.warnings.clone(),
        files: Vec::new(),
        error: None,
    };
    let result = write_all(out, dir, &mut manifest.files);
    if let Err(e) = &result {
        manifest.error = Some(e.to_string());
    }
    let text = serde_json::to_string_pretty(&manifest)?;
    let written = fs::write(dir.join("manifest.json"), text + "\n");
    result?;
    written?;
    Ok(manifest)
}

fn write_all(out: &EnsembleOutput, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut put = |name: &str, contents: String| -> Result<()> {
        fs::write(dir.join(name), contents)?;
        files.push(PathBuf::from(name));
        Ok(())
    };
    put("stats.csv", stats_csv(out))?;
    put(
        "observations.jsonl",
        jsonl(out.replicas.iter().flat_map(|r| {
            r.probes.iter().map(move |probe| ObservationLine {
                replica: r.replica,
                probe,
            })
        }))?,
    )?;
    if out.config.observables.recurrence {
        put("recurrence.jsonl", jsonl(out.replicas.iter().filter_map(|r| r.recurrence.as_ref()))?)?;
    }
    if out.config.observables.windows && !out.config.window_ls.is_empty() {
        put("windows.csv", windows_csv(out))?;
    }
    let snaps: Vec<&Snapshot> = out.replicas.iter().flat_map(|r| &r.snapshots).collect();
    if !snaps.is_empty() {
        fs::create_dir_all(dir.join("snapshots"))?;
        for s in snaps {
            let name = Path::new("snapshots").join(snapshot_name(s.rng.stream_id, s.time));
            let mut w = BufWriter::new(fs::File::create(dir.join(&name))?);
            s.write_to(&mut w)?;
            w.flush()?;
            files.push(name);
        }
    }
    Ok(())
}

/// Cluster observables of one snapshot, as written by `analyze`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyzeRow {
    pub time: f64,
    pub n_clusters: usize,
    pub max_cluster: usize,
    pub origin_cluster: usize,
    pub r_star_min: Option<f64>,
    pub r_star_max: Option<f64>,
    pub wraps: bool,
}

impl AnalyzeRow {
    pub const HEADER: &'static str = "time,n_clusters,max_cluster,|C_o|,R*_min,R*_max,wraps";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.time,
            self.n_clusters,
            self.max_cluster,
            self.origin_cluster,
            opt(self.r_star_min),
            opt(self.r_star_max),
            self.wraps
        )
    }
}

pub fn analyze_snapshot(snapshot: &Snapshot) -> AnalyzeRow {
    let config = &snapshot.config;
    let map = label_clusters(config);
    let o = origin(config.geometry());
    AnalyzeRow {
        time: snapshot.time,
        n_clusters: map.n_clusters(),
        max_cluster: map.max_cluster_size(),
        origin_cluster: map.cluster_at(o).size,
        r_star_min: map.r_star_min(o),
        r_star_max: map.r_star_max(o),
        wraps: map.wrapping_report().any,
    }
}
