//! `zising`: run, sweep, analyze and classify zero-temperature Ising
//! coarsening experiments.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zising_core::dynamics::{EventLog, LogGranularity};
use zising_core::experiments::{analyze_snapshot, origin, parse_list, write_outputs, AnalyzeRow, ExperimentConfig};
use zising_core::{init_random, Boundary, Engine, LatticeGeometry, RngSpec, SimState, Site, Snapshot, Window, WindowReport};

#[derive(Parser)]
#[command(name = "zising", version, about = "Zero-temperature Glauber dynamics for the 2D Ising model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trajectory and write a snapshot at every probe time.
    Run(RunArgs),
    /// Run an ensemble and write stats.csv, recurrence.jsonl and friends.
    Sweep(SweepArgs),
    /// Recompute cluster observables from snapshot files.
    Analyze(AnalyzeArgs),
    /// Classify one window of a snapshot.
    Classify(ClassifyArgs),
}

/// Flags shared by `run` and `sweep`; unset flags keep the config value.
#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// naive or kmc
    #[arg(long)]
    engine: Option<Engine>,
    /// Side length, or WIDTHxHEIGHT.
    #[arg(long)]
    size: Option<String>,
    /// torus or free
    #[arg(long)]
    boundary: Option<Boundary>,
    /// Probability of +1 in the initial condition.
    #[arg(long)]
    p_plus: Option<f64>,
    /// Comma-separated, strictly increasing probe times.
    #[arg(long)]
    t_grid: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Stream id of the trajectory.
    #[arg(long, default_value_t = 0)]
    replica: u64,
    /// Directory for snapshots and trajectory.csv.
    #[arg(long, short)]
    out: PathBuf,
    /// Write a JSONL event log to this file.
    #[arg(long)]
    event_log: Option<PathBuf>,
    /// Which events the log keeps: flips or all.
    #[arg(long, default_value = "flips")]
    log_events: LogGranularity,
}

#[derive(Args)]
struct SweepArgs {
    /// Key-value config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    replicas: Option<usize>,
    /// Comma-separated window half-widths.
    #[arg(long = "L")]
    l: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// Also write ZTIS1 snapshots of every replica at every probe.
    #[arg(long)]
    snapshots: bool,
    /// Output directory (overrides the config's `output`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Snapshot files, or directories searched for *.ztis.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    snapshot: PathBuf,
    /// Window center as x,y (default: the lattice center).
    #[arg(long)]
    center: Option<String>,
    #[arg(long = "L")]
    l: usize,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn parse_size(s: &str) -> AnyResult<(usize, usize)> {
    let (w, h) = s.split_once('x').unwrap_or((s, s));
    Ok((w.trim().parse()?, h.trim().parse()?))
}

fn apply_model(cfg: &mut ExperimentConfig, m: &ModelArgs) -> AnyResult<()> {
    if let Some(seed) = m.seed {
        cfg.master_seed = seed;
    }
    if let Some(engine) = m.engine {
        cfg.engine = engine;
    }
    if let Some(p) = m.p_plus {
        cfg.p_plus = p;
    }
    if let Some(t) = &m.t_grid {
        cfg.probe_times = parse_list(t, "t-grid")?;
    }
    if m.size.is_some() || m.boundary.is_some() {
        let (w, h) = match &m.size {
            Some(s) => parse_size(s)?,
            None => (cfg.geometry.width(), cfg.geometry.height()),
        };
        cfg.geometry = LatticeGeometry::new(w, h, m.boundary.unwrap_or(cfg.geometry.boundary()))?;
    }
    Ok(())
}

fn run(args: RunArgs) -> AnyResult<()> {
    let mut cfg = ExperimentConfig::default();
    apply_model(&mut cfg, &args.model)?;
    cfg.n_replicas = 1;
    for w in cfg.validate()? {
        log::warn!("{w}");
    }
    let spec = RngSpec::new(cfg.master_seed, args.replica);
    let mut state = SimState::new(init_random(cfg.geometry, cfg.p_plus, &spec)?, cfg.engine);
    let mut rng = spec.dynamics_rng();
    fs::create_dir_all(&args.out)?;
    let mut log = match &args.event_log {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            Some(EventLog::new(BufWriter::new(fs::File::create(p)?), args.log_events))
        }
        None => None,
    };
    let mut table = String::from("t,events,wall_density,magnetization,persistence,absorbed,snapshot\n");
    for &t in &cfg.probe_times {
        state.run_until(t, &mut rng, |_, ev| {
            if let Some(l) = log.as_mut() {
                l.log(ev);
            }
        });
        let name = format!("t{t}.ztis");
        Snapshot::new(state.config().clone(), t, spec).save(args.out.join(&name))?;
        table.push_str(&format!(
            "{t},{},{},{},{},{},{name}\n",
            state.events(),
            state.wall_density(),
            state.magnetization(),
            state.stats().persistence_fraction(),
            state.is_absorbed()
        ));
    }
    if let Some(l) = log {
        l.finish()?;
    }
    fs::write(args.out.join("trajectory.csv"), &table)?;
    io::stdout().write_all(table.as_bytes())?;
    Ok(())
}

fn sweep(args: SweepArgs) -> AnyResult<()> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::parse(&fs::read_to_string(p)?)?,
        None => ExperimentConfig::default(),
    };
    apply_model(&mut cfg, &args.model)?;
    if let Some(r) = args.replicas {
        cfg.n_replicas = r;
    }
    if let Some(l) = &args.l {
        cfg.window_ls = parse_list(l, "L")?;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    cfg.snapshots |= args.snapshots;
    if let Some(o) = args.out {
        cfg.output_dir = Some(o);
    }
    let dir = cfg
        .output_dir
        .clone()
        .ok_or("no output directory: pass --out or set `output` in the config")?;
    let out = zising_core::run_ensemble(&cfg)?;
    let manifest = write_outputs(&out, &dir)?;
    log::info!("wrote {} files to {}", manifest.files.len(), dir.display());
    for f in &manifest.files {
        println!("{}", dir.join(f).display());
    }
    Ok(())
}

fn collect_snapshots(inputs: &[PathBuf]) -> AnyResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<io::Result<_>>()?;
            found.retain(|f| f.extension().is_some_and(|e| e == "ztis"));
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn analyze(args: AnalyzeArgs) -> AnyResult<()> {
    let mut rows = Vec::new();
    for f in collect_snapshots(&args.inputs)? {
        let snap = Snapshot::load(&f).map_err(|e| format!("{}: {e}", f.display()))?;
        rows.push(analyze_snapshot(&snap));
    }
    rows.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut text = format!("{}\n", AnalyzeRow::HEADER);
    for r in &rows {
        text.push_str(&r.csv_line());
        text.push('\n');
    }
    match args.out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_center(s: &str) -> AnyResult<Site> {
    let (x, y) = s.split_once(',').ok_or("center must be x,y")?;
    Ok(Site::new(x.trim().parse()?, y.trim().parse()?))
}

fn classify(args: ClassifyArgs) -> AnyResult<()> {
    let snap = Snapshot::load(&args.snapshot)?;
    let g = snap.config.geometry();
    let center = match &args.center {
        Some(c) => parse_center(c)?,
        None => origin(g),
    };
    let window = Window::new(g, center, args.l)?;
    let report = WindowReport::new(&snap.config, &window);
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Analyze(a) => analyze(a),
        Command::Classify(a) => classify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
