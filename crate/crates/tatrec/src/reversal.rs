//! Backward-in-time solve on the reconstruction square.
//!
//! The wave equation is time-symmetric, so the backward march reuses the
//! forward leapfrog stencil with the step index running from the cutoff time
//! down to zero. After every step the ring nodes are overwritten with the
//! recorded data (hard Dirichlet): the raw values in exact mode, the values
//! times the smooth cutoff in approximate mode. The band between the ring and
//! the square edge is evolved but excluded from the output.

use crate::cutoff::cutoff;
use crate::error::{Error, Result};
use crate::forward::{step_into, BoundaryTrace, Snapshot};
use crate::grid::{Grid, ScalarField};
use crate::sensor::SensorRing;
use crate::speed::SpeedProfile;

/// Half-width of the reconstruction square.
pub const RECON_HALF_WIDTH: f64 = 1.2;

#[derive(Debug, Clone)]
pub enum ReversalMode {
    /// Zero terminal data, cutoff-weighted boundary injection.
    Approximate,
    /// Terminal data from a forward snapshot, raw boundary injection.
    Exact(Snapshot),
}

#[derive(Debug, Clone)]
pub struct ReversalParams {
    grid: Grid,
    t_cut: f64,
    eps: f64,
    dt: f64,
    n_steps: usize,
    mode: ReversalMode,
}

impl ReversalParams {
    /// Approximate reversal on the square `[-1.2, 1.2]²` with spacing `h`.
    /// The cutoff time is snapped to the nearest multiple of `dt`.
    pub fn approximate(
        h: f64,
        t_cut: f64,
        eps: f64,
        cfl: f64,
        speed: &SpeedProfile,
    ) -> Result<Self> {
        speed.validate()?;
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "Courant factor {cfl} outside (0, 1]"
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParams(format!("eps = {eps}")));
        }
        let grid = Grid::make_grid(-RECON_HALF_WIDTH, RECON_HALF_WIDTH, h)?;
        let dt = cfl * h / (speed.c_max() * std::f64::consts::SQRT_2);
        let n_steps = (t_cut / dt).round().max(1.0) as usize;
        let t_cut = n_steps as f64 * dt;
        if !(t_cut - eps > 0.0) {
            return Err(Error::InvalidParams(format!(
                "cutoff time {t_cut} must exceed eps = {eps}"
            )));
        }
        Ok(Self {
            grid,
            t_cut,
            eps,
            dt,
            n_steps,
            mode: ReversalMode::Approximate,
        })
    }

    /// Exact reversal from a forward snapshot: same grid, same time step.
    pub fn exact(snapshot: Snapshot, trace: &BoundaryTrace) -> Result<Self> {
        if snapshot.step == 0 {
            return Err(Error::InvalidParams("snapshot at t = 0".into()));
        }
        let grid = *snapshot.p.grid();
        let dt = trace.dt;
        let t_cut = snapshot.time;
        let n_steps = snapshot.step;
        if ((t_cut / dt) - n_steps as f64).abs() > 1e-6 {
            return Err(Error::InvalidParams(format!(
                "snapshot time {t_cut} is not step {n_steps} of dt = {dt}"
            )));
        }
        Ok(Self {
            grid,
            t_cut,
            eps: 1.0,
            dt,
            n_steps,
            mode: ReversalMode::Exact(snapshot),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn t_cut(&self) -> f64 {
        self.t_cut
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
}

/// Recorded boundary data carried over to the reconstruction ring, nearest
/// sensor in space and nearest recorded step in time (ties round down).
#[derive(Debug, Clone)]
pub struct ResampledBoundary {
    pub n_levels: usize,
    pub n_nodes: usize,
    /// `n_levels x n_nodes`, level-major; level `k` is backward time `k * dt_new`.
    pub values: Vec<f64>,
}

impl ResampledBoundary {
    pub fn level(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_nodes..(k + 1) * self.n_nodes]
    }
}

/// Index of the recorded step nearest to time `t`; exact half-way ties round
/// down.
pub(crate) fn nearest_step(t: f64, dt: f64, last: usize) -> usize {
    (((t / dt - 0.5).ceil().max(0.0)) as usize).min(last)
}

pub fn resample_trace(
    trace: &BoundaryTrace,
    ring: &SensorRing,
    dt_new: f64,
    t_end: f64,
) -> Result<ResampledBoundary> {
    if ring.is_empty() {
        return Err(Error::TraceMismatch("empty reconstruction ring".into()));
    }
    if trace.n_sensors() == 0 || trace.n_samples() == 0 {
        return Err(Error::TraceMismatch("empty trace".into()));
    }
    if trace.duration() < t_end - 1e-9 {
        return Err(Error::TraceMismatch(format!(
            "trace covers [0, {:.6}], reversal needs [0, {t_end:.6}]",
            trace.duration()
        )));
    }

    // nearest recorded sensor for every reconstruction ring node
    let nearest: Vec<usize> = ring
        .coords()
        .iter()
        .map(|&(x, y)| {
            let mut best = 0;
            let mut best_d2 = f64::INFINITY;
            for (s, &(sx, sy)) in trace.sensor_coords.iter().enumerate() {
                let d2 = (sx - x) * (sx - x) + (sy - y) * (sy - y);
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = s;
                }
            }
            best
        })
        .collect();

    let n_levels = (t_end / dt_new).round() as usize + 1;
    let last_row = trace.n_samples() - 1;
    let mut values = Vec::with_capacity(n_levels * nearest.len());
    for k in 0..n_levels {
        let row = nearest_step(k as f64 * dt_new, trace.dt, last_row);
        let src = trace.row(row);
        values.extend(nearest.iter().map(|&s| src[s]));
    }
    Ok(ResampledBoundary {
        n_levels,
        n_nodes: nearest.len(),
        values,
    })
}

/// Second-order backward start from terminal data:
/// `v(T - dt) = v_T - dt * vt_T + (dt²/2) c² Δ_h v_T`, edges zero.
pub fn terminal_velocity_start(
    v_t: &ScalarField,
    vt_t: &ScalarField,
    c2: &ScalarField,
    dt: f64,
) -> ScalarField {
    assert_eq!(v_t.grid(), vt_t.grid(), "fields live on different grids");
    assert_eq!(v_t.grid(), c2.grid(), "fields live on different grids");
    let g = *v_t.grid();
    let r2 = 0.5 * (dt / g.h()) * (dt / g.h());
    let mut out = ScalarField::zeros(g);
    step_into(
        out.values_mut(),
        v_t.values(),
        v_t.values(),
        c2.values(),
        g.nx(),
        g.ny(),
        r2,
    );
    let vt = vt_t.values();
    let (nx, ny) = (g.nx(), g.ny());
    let o = out.values_mut();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            o[j * nx + i] -= dt * vt[j * nx + i];
        }
    }
    out
}

/// The time-reversal approximation: `v(., 0)` restricted to the closed unit
/// disc, with the untrusted band outside the ring zeroed.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub field: ScalarField,
    pub t_cut: f64,
    pub eps: f64,
    pub dt: f64,
    pub speed_tag: String,
    pub phantom_tag: String,
}

pub fn reverse(
    params: &ReversalParams,
    trace: &BoundaryTrace,
    speed: &SpeedProfile,
    ring: &SensorRing,
) -> Result<Reconstruction> {
    if ring.grid() != params.grid() {
        return Err(Error::TraceMismatch(
            "sensor ring was built on a different grid".into(),
        ));
    }
    let grid = *params.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let dt = params.dt;
    let n = params.n_steps;
    let r2 = (dt / grid.h()) * (dt / grid.h());
    let c2 = speed.sample_speed_squared(grid);
    let boundary = resample_trace(trace, ring, dt, params.t_cut)?;
    let ring_idx = ring.linear_indices();

    let weight = |level: usize| -> f64 {
        match params.mode {
            ReversalMode::Approximate => cutoff(level as f64 * dt, params.t_cut, params.eps),
            ReversalMode::Exact(_) => 1.0,
        }
    };
    let inject = |field: &mut ScalarField, level: usize| {
        let w = weight(level);
        let src = boundary.level(level);
        let v = field.values_mut();
        for (pos, &idx) in ring_idx.iter().enumerate() {
            v[idx] = w * src[pos];
        }
    };

    // terminal pair: levels n and n-1
    let (mut v_next, vt_terminal) = match &params.mode {
        ReversalMode::Approximate => (ScalarField::zeros(grid), ScalarField::zeros(grid)),
        ReversalMode::Exact(snap) => {
            if snap.p.grid() != &grid {
                return Err(Error::InvalidParams(
                    "snapshot grid differs from reversal grid".into(),
                ));
            }
            (snap.p.clone(), snap.p_t.clone())
        }
    };
    inject(&mut v_next, n);
    let mut v_curr = terminal_velocity_start(&v_next, &vt_terminal, &c2, dt);
    inject(&mut v_curr, n - 1);

    let mut v_prev = ScalarField::zeros(grid);
    for level in (0..n - 1).rev() {
        step_into(
            v_prev.values_mut(),
            v_next.values(),
            v_curr.values(),
            c2.values(),
            nx,
            ny,
            r2,
        );
        inject(&mut v_prev, level);
        std::mem::swap(&mut v_next, &mut v_curr);
        std::mem::swap(&mut v_curr, &mut v_prev);
    }

    // v_curr is now v(., 0); zero everything outside the ring barrier or
    // outside the closed unit disc
    let outside = ring.outside_mask();
    let vals = v_curr.values_mut();
    for j in 0..ny {
        for i in 0..nx {
            let idx = j * nx + i;
            let (x, y) = grid.node(i, j);
            if outside[idx] || x.hypot(y) > 1.0 + 1e-12 {
                vals[idx] = 0.0;
            }
        }
    }

    Ok(Reconstruction {
        field: v_curr,
        t_cut: params.t_cut,
        eps: params.eps,
        dt,
        speed_tag: trace.speed_tag.clone(),
        phantom_tag: trace.phantom_tag.clone(),
    })
}
