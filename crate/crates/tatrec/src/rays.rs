//! Bicharacteristic integration and trapping classification.
//!
//! The flow is the Hamiltonian system with `H = c²(x)|ξ|²/2`:
//! `x' = c²(x) ξ`, `ξ' = -∇(c²)(x) |ξ|²/2`. A speed is non-trapping when
//! every ray escapes to infinity; a machine proxy decides per seed whether
//! the ray leaves the radius `r_escape` before `t_max`. `H` is conserved
//! along exact trajectories, so its drift measures integration quality.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::speed::SpeedProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySeed {
    pub x: (f64, f64),
    pub xi: (f64, f64),
}

impl RaySeed {
    pub fn new(x: (f64, f64), xi: (f64, f64)) -> Result<Self> {
        if xi.0 == 0.0 && xi.1 == 0.0 {
            return Err(Error::InvalidParams("ray seed with zero covector".into()));
        }
        Ok(Self { x, xi })
    }
}

/// `(dx, dxi)` of the Hamiltonian system at `(x, xi)`.
pub fn hamiltonian_rhs(
    x: (f64, f64),
    xi: (f64, f64),
    speed: &SpeedProfile,
) -> ((f64, f64), (f64, f64)) {
    let c2 = speed.speed_squared(x.0, x.1);
    let (gx, gy) = speed.grad_speed_squared(x.0, x.1);
    let xi2 = xi.0 * xi.0 + xi.1 * xi.1;
    ((c2 * xi.0, c2 * xi.1), (-0.5 * gx * xi2, -0.5 * gy * xi2))
}

fn hamiltonian(state: &[f64; 4], speed: &SpeedProfile) -> f64 {
    let c2 = speed.speed_squared(state[0], state[1]);
    0.5 * c2 * (state[2] * state[2] + state[3] * state[3])
}

fn rhs(state: &[f64; 4], speed: &SpeedProfile) -> [f64; 4] {
    let ((dx, dy), (dkx, dky)) = hamiltonian_rhs((state[0], state[1]), (state[2], state[3]), speed);
    [dx, dy, dkx, dky]
}

fn rk4_step(state: &[f64; 4], dt: f64, speed: &SpeedProfile) -> [f64; 4] {
    let k1 = rhs(state, speed);
    let mid1 = advance(state, &k1, dt / 2.0);
    let k2 = rhs(&mid1, speed);
    let mid2 = advance(state, &k2, dt / 2.0);
    let k3 = rhs(&mid2, speed);
    let end = advance(state, &k3, dt);
    let k4 = rhs(&end, speed);
    let mut out = *state;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn advance(state: &[f64; 4], k: &[f64; 4], dt: f64) -> [f64; 4] {
    [
        state[0] + dt * k[0],
        state[1] + dt * k[1],
        state[2] + dt * k[2],
        state[3] + dt * k[3],
    ]
}

/// One recorded point of a ray path.
#[derive(Debug, Clone, Copy)]
pub struct RaySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub xi_x: f64,
    pub xi_y: f64,
    pub hamiltonian: f64,
}

/// `H` drift above this relative threshold flags a path as unreliable
/// (time step too large, or a crater kink was crossed).
pub const H_DRIFT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct RayPath {
    /// Strided samples (the final state is always included).
    pub samples: Vec<RaySample>,
    pub h_initial: f64,
    /// Max of `|H - H0| / H0` along the path.
    pub h_drift: f64,
    /// First time `|x| > r_escape`, if the ray escaped.
    pub escape: Option<f64>,
    pub min_radius: f64,
    pub max_radius: f64,
    pub reliable: bool,
}

impl RayPath {
    pub fn last(&self) -> &RaySample {
        self.samples.last().expect("path has at least the seed")
    }
}

struct Integration {
    final_state: [f64; 4],
    t_final: f64,
    h_initial: f64,
    h_drift: f64,
    escape: Option<f64>,
    min_radius: f64,
    max_radius: f64,
    samples: Vec<(f64, [f64; 4])>,
}

fn integrate(
    seed: &RaySeed,
    speed: &SpeedProfile,
    t_max: f64,
    dt: f64,
    r_escape: f64,
    sample_stride: Option<usize>,
) -> Integration {
    let mut state = [seed.x.0, seed.x.1, seed.xi.0, seed.xi.1];
    let h0 = hamiltonian(&state, speed);
    let n_steps = (t_max / dt).ceil() as usize;
    let r0 = f64::hypot(state[0], state[1]);
    let mut out = Integration {
        final_state: state,
        t_final: 0.0,
        h_initial: h0,
        h_drift: 0.0,
        escape: None,
        min_radius: r0,
        max_radius: r0,
        samples: Vec::new(),
    };
    if sample_stride.is_some() {
        out.samples.push((0.0, state));
    }
    for step in 1..=n_steps {
        state = rk4_step(&state, dt, speed);
        let t = step as f64 * dt;
        let r = f64::hypot(state[0], state[1]);
        out.min_radius = out.min_radius.min(r);
        out.max_radius = out.max_radius.max(r);
        let h = hamiltonian(&state, speed);
        out.h_drift = out.h_drift.max((h - h0).abs() / h0);
        if let Some(stride) = sample_stride {
            if step % stride == 0 || step == n_steps {
                out.samples.push((t, state));
            }
        }
        if r > r_escape {
            out.escape = Some(t);
            out.final_state = state;
            out.t_final = t;
            if sample_stride.is_some() && out.samples.last().map(|s| s.0) != Some(t) {
                out.samples.push((t, state));
            }
            return out;
        }
        out.final_state = state;
        out.t_final = t;
    }
    out
}

/// Classical fixed-step RK4 integration of one ray. Stops at `t_max` or on
/// the first exit past `r_escape`.
pub fn trace_ray(
    seed: &RaySeed,
    speed: &SpeedProfile,
    t_max: f64,
    dt: f64,
    r_escape: f64,
) -> Result<RayPath> {
    validate_ray_args(seed, t_max, dt, r_escape)?;
    let n_steps = (t_max / dt).ceil() as usize;
    let stride = (n_steps / 4096).max(1);
    let run = integrate(seed, speed, t_max, dt, r_escape, Some(stride));
    let samples = run
        .samples
        .iter()
        .map(|&(t, s)| RaySample {
            t,
            x: s[0],
            y: s[1],
            xi_x: s[2],
            xi_y: s[3],
            hamiltonian: hamiltonian(&s, speed),
        })
        .collect();
    Ok(RayPath {
        samples,
        h_initial: run.h_initial,
        h_drift: run.h_drift,
        escape: run.escape,
        min_radius: run.min_radius,
        max_radius: run.max_radius,
        reliable: run.h_drift <= H_DRIFT_TOLERANCE,
    })
}

fn validate_ray_args(seed: &RaySeed, t_max: f64, dt: f64, r_escape: f64) -> Result<()> {
    if seed.xi.0 == 0.0 && seed.xi.1 == 0.0 {
        return Err(Error::InvalidParams("ray seed with zero covector".into()));
    }
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidParams(format!(
            "t_max = {t_max}, dt = {dt} must be positive"
        )));
    }
    if !(r_escape > 1.0) {
        return Err(Error::InvalidParams(format!(
            "escape radius {r_escape} must exceed 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// The ray left the escape radius at this time.
    Escaped(f64),
    /// Still inside at `t_max`; carries the largest radius seen.
    Trapped { t_max: f64, max_radius: f64 },
}

#[derive(Debug, Clone)]
pub struct TrappingReport {
    pub speed_tag: String,
    pub t_max: f64,
    pub dt: f64,
    pub r_escape: f64,
    pub verdicts: Vec<(RaySeed, Verdict, bool)>,
    pub n_unreliable: usize,
}

impl TrappingReport {
    pub fn n_escaped(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|(_, v, _)| matches!(v, Verdict::Escaped(_)))
            .count()
    }

    pub fn fraction_escaped(&self) -> f64 {
        self.n_escaped() as f64 / self.verdicts.len() as f64
    }

    pub fn all_escaped(&self) -> bool {
        self.n_escaped() == self.verdicts.len()
    }
}

/// Traces every seed (in parallel) and aggregates escape verdicts.
pub fn classify_trapping(
    speed: &SpeedProfile,
    seeds: &[RaySeed],
    t_max: f64,
    dt: f64,
    r_escape: f64,
) -> Result<TrappingReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidParams("empty seed set".into()));
    }
    for s in seeds {
        validate_ray_args(s, t_max, dt, r_escape)?;
    }
    let verdicts: Vec<(RaySeed, Verdict, bool)> = seeds
        .par_iter()
        .map(|seed| {
            let run = integrate(seed, speed, t_max, dt, r_escape, None);
            let verdict = match run.escape {
                Some(t) => Verdict::Escaped(t),
                None => Verdict::Trapped {
                    t_max,
                    max_radius: run.max_radius,
                },
            };
            (*seed, verdict, run.h_drift <= H_DRIFT_TOLERANCE)
        })
        .collect();
    let n_unreliable = verdicts.iter().filter(|(_, _, ok)| !ok).count();
    Ok(TrappingReport {
        speed_tag: speed.tag().to_string(),
        t_max,
        dt,
        r_escape,
        verdicts,
        n_unreliable,
    })
}

/// Deterministic seed set: lattice positions with spacing 0.25 inside radius
/// 0.75, each paired with 16 unit covector directions.
pub fn default_seed_lattice() -> Vec<RaySeed> {
    let mut seeds = Vec::new();
    let coords: Vec<f64> = (-3..=3).map(|k| 0.25 * k as f64).collect();
    for &px in &coords {
        for &py in &coords {
            if px.hypot(py) > 0.75 + 1e-12 {
                continue;
            }
            for k in 0..16 {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
                seeds.push(RaySeed {
                    x: (px, py),
                    xi: (th.cos(), th.sin()),
                });
            }
        }
    }
    seeds
}
