//! Exact event-driven zero-temperature Glauber dynamics for the
//! two-dimensional Ising ferromagnet on square lattices, with the cluster,
//! contour and window observables used to study its coarsening.
//!
//! ```
//! use zising_core::{init_random, Engine, LatticeGeometry, RngSpec, SimState};
//!
//! let g = LatticeGeometry::torus(32, 32).unwrap();
//! let spec = RngSpec::new(42, 0);
//! let mut state = SimState::new(init_random(g, 0.5, &spec).unwrap(), Engine::ActiveSet);
//! let mut rng = spec.dynamics_rng();
//! state.run_until(4.0, &mut rng, |_, _| {});
//! assert!(state.wall_density() < 0.5);
//! ```

pub mod clusters;
pub mod contours;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod parallel;
pub mod rng;
pub mod snapshot;
pub mod stats;
pub mod windows;

pub use clusters::{label_clusters, Cluster, ClusterMap, PercolationMode, WrappingReport};
pub use contours::{
    classify_e_absent, decompose_walls, extract_contours, ContourSet, ContourTracker, DomainWall, EAbsence,
    EAbsentReason, WallClass, Window, WindowContours, WindowReport,
};
pub use dynamics::{EventLog, EventRecord, Engine, LogGranularity, RunReport, SimState, StepOutcome};
pub use error::{Error, Result};
pub use experiments::{run_ensemble, ExperimentConfig};
pub use lattice::{init_random, Boundary, Dir, LatticeGeometry, Rate, Site, SpinConfig};
pub use rng::{Purpose, RngSpec, StreamRng};
pub use snapshot::Snapshot;
pub use windows::{classify_window, window_events, WindowClass, WindowEvents, WindowKind};
