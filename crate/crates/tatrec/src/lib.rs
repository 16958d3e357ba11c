//! 2D thermoacoustic tomography on uniform grids.
//!
//! The crate simulates the forward acoustic problem `p_tt = c^2(x) Δp` with a
//! variable sound speed, records the pressure on a discrete observation circle,
//! and reconstructs the initial pressure by solving the wave equation backward
//! in time with the recorded data injected on the circle (time reversal). A
//! smooth temporal cutoff makes the zero terminal data of the backward problem
//! compatible with the injected boundary values.
//!
//! Supporting machinery: Hamiltonian ray tracing to classify sound speeds as
//! trapping or non-trapping, discrete `L²`/`H¹` error norms over the unit disc,
//! an error-vs-cutoff-time sweep with log-log regression of the decay rate, and
//! binary/CSV/PGM/SVG exporters for all artifacts.

// parameter checks are written as `!(x > 0.0)` so NaN is rejected along with
// out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutoff;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod rays;
pub mod reversal;
pub mod sensor;
pub mod speed;

pub use cutoff::{cutoff, cutoff_alpha, transition, transition_deriv, TRANSITION_DERIV_BOUND};
pub use error::{Error, Result};
pub use forward::{
    discrete_energy, first_step, leapfrog_step, simulate_forward, BoundaryTrace, SimParams,
    Snapshot,
};
pub use grid::{sample_field, AnalyticField, Grid, ScalarField};
pub use metrics::{
    error_sweep, h1_norm, l2_norm, loglog_slope, min_cutoff_time, noise_experiment, DiscMask,
    NoiseParams, NormKind, SweepParams, SweepResult,
};
pub use phantom::{Ellipse, PhantomSpec};
pub use rays::{
    classify_trapping, default_seed_lattice, hamiltonian_rhs, trace_ray, RayPath, RaySeed,
    TrappingReport, Verdict,
};
pub use reversal::{
    resample_trace, reverse, terminal_velocity_start, Reconstruction, ResampledBoundary,
    ReversalMode, ReversalParams,
};
pub use sensor::{build_sensor_ring, SensorRing};
pub use speed::{Bump, SpeedProfile};
