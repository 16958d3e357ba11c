//! Forward FDTD solve of `p_tt = c²(x) Δp` on a large square with
//! homogeneous Dirichlet edges.
//!
//! The scheme is the classic 5-point leapfrog, second order in space and
//! time. The square is auto-sized so no edge reflection can reach the unit
//! circle within the simulated time, which replaces absorbing layers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{sample_field, Grid, ScalarField};
use crate::phantom::PhantomSpec;
use crate::reversal::RECON_HALF_WIDTH;
use crate::sensor::SensorRing;
use crate::speed::SpeedProfile;

/// One leapfrog update into `out`; rows are independent, so the loop is a
/// parallel map over rows. Edge rows/columns are pinned to 0 (Dirichlet).
pub(crate) fn step_into(
    out: &mut [f64],
    prev: &[f64],
    curr: &[f64],
    c2: &[f64],
    nx: usize,
    ny: usize,
    r2: f64,
) {
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        if j == 0 || j == ny - 1 {
            row.fill(0.0);
            return;
        }
        let base = j * nx;
        row[0] = 0.0;
        row[nx - 1] = 0.0;
        #[allow(clippy::needless_range_loop)]
        for i in 1..nx - 1 {
            let idx = base + i;
            let lap =
                curr[idx - 1] + curr[idx + 1] + curr[idx - nx] + curr[idx + nx] - 4.0 * curr[idx];
            row[i] = 2.0 * curr[idx] - prev[idx] + r2 * c2[idx] * lap;
        }
    });
}

fn assert_same_grid(a: &ScalarField, b: &ScalarField) {
    assert_eq!(a.grid(), b.grid(), "fields live on different grids");
}

/// `p_next = 2 p_curr - p_prev + (dt²/h²) c² Δ_h p_curr` at interior nodes,
/// zero on the edges.
pub fn leapfrog_step(
    p_prev: &ScalarField,
    p_curr: &ScalarField,
    c2: &ScalarField,
    dt: f64,
) -> ScalarField {
    assert_same_grid(p_prev, p_curr);
    assert_same_grid(p_curr, c2);
    let g = *p_curr.grid();
    let r2 = (dt / g.h()) * (dt / g.h());
    let mut out = ScalarField::zeros(g);
    step_into(
        out.values_mut(),
        p_prev.values(),
        p_curr.values(),
        c2.values(),
        g.nx(),
        g.ny(),
        r2,
    );
    out
}

/// Taylor start consistent with zero initial velocity:
/// `p¹ = p⁰ + (dt²/2) c² Δ_h p⁰` (one leapfrog step with halved weight).
pub fn first_step(p0: &ScalarField, c2: &ScalarField, dt: f64) -> ScalarField {
    assert_same_grid(p0, c2);
    let g = *p0.grid();
    let r2 = 0.5 * (dt / g.h()) * (dt / g.h());
    let mut out = ScalarField::zeros(g);
    step_into(
        out.values_mut(),
        p0.values(),
        p0.values(),
        c2.values(),
        g.nx(),
        g.ny(),
        r2,
    );
    out
}

/// Discrete energy of a consecutive state pair: half the squared forward
/// differences of the time-averaged field plus `c⁻²` times the squared
/// discrete velocity, times the cell area.
pub fn discrete_energy(
    p_prev: &ScalarField,
    p_curr: &ScalarField,
    c2: &ScalarField,
    dt: f64,
) -> f64 {
    assert_same_grid(p_prev, p_curr);
    assert_same_grid(p_curr, c2);
    let g = *p_curr.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let a = p_prev.values();
    let b = p_curr.values();
    let c2v = c2.values();
    let avg = |idx: usize| 0.5 * (a[idx] + b[idx]);
    let mut grad2 = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let idx = j * nx + i;
            if i + 1 < nx {
                let gx = (avg(idx + 1) - avg(idx)) / h;
                grad2 += gx * gx;
            }
            if j + 1 < ny {
                let gy = (avg(idx + nx) - avg(idx)) / h;
                grad2 += gy * gy;
            }
        }
    }
    let mut kin = 0.0;
    for idx in 0..nx * ny {
        let v = (b[idx] - a[idx]) / dt;
        kin += v * v / c2v[idx];
    }
    0.5 * h * h * (grad2 + kin)
}

/// Parameters of one forward run. `dt` always equals
/// `cfl * h / (c_max * sqrt(2))`, the 2D leapfrog stability bound scaled by
/// the Courant factor.
#[derive(Debug, Clone)]
pub struct SimParams {
    grid: Grid,
    dt: f64,
    n_steps: usize,
    cfl: f64,
    snapshot_steps: Vec<usize>,
}

fn compute_dt(h: f64, cfl: f64, c_max: f64) -> f64 {
    cfl * h / (c_max * std::f64::consts::SQRT_2)
}

/// Smallest half-width such that a reflection leaving the unit circle cannot
/// return to it within the simulated time, with one unit of slack.
fn min_half_width(c_max: f64, total_time: f64) -> f64 {
    1.0 + (c_max * total_time + 1.0) / 2.0
}

impl SimParams {
    /// Auto-sized domain: half-width grows with the simulated time so edge
    /// reflections never reach the circle.
    pub fn auto(h: f64, cfl: f64, t_end: f64, speed: &SpeedProfile) -> Result<Self> {
        let (dt, n_steps) = Self::time_stepping(h, cfl, t_end, speed)?;
        let a_min = min_half_width(speed.c_max(), n_steps as f64 * dt);
        let a = h * (a_min / h - 1e-12).ceil();
        let grid = Grid::make_grid(-a, a, h)?;
        Ok(Self {
            grid,
            dt,
            n_steps,
            cfl,
            snapshot_steps: Vec::new(),
        })
    }

    /// Caller-chosen half-width; rejected if the no-reflection inequality is
    /// violated.
    pub fn with_half_width(
        a: f64,
        h: f64,
        cfl: f64,
        t_end: f64,
        speed: &SpeedProfile,
    ) -> Result<Self> {
        let (dt, n_steps) = Self::time_stepping(h, cfl, t_end, speed)?;
        let a_min = min_half_width(speed.c_max(), n_steps as f64 * dt);
        if a < a_min - 1e-12 {
            return Err(Error::InvalidParams(format!(
                "half-width {a} lets reflections reach the circle; need >= {a_min:.4}"
            )));
        }
        let grid = Grid::make_grid(-a, a, h)?;
        Ok(Self {
            grid,
            dt,
            n_steps,
            cfl,
            snapshot_steps: Vec::new(),
        })
    }

    fn time_stepping(h: f64, cfl: f64, t_end: f64, speed: &SpeedProfile) -> Result<(f64, usize)> {
        speed.validate()?;
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "Courant factor {cfl} outside (0, 1]"
            )));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParams(format!("spacing h = {h}")));
        }
        if !(t_end > 0.0) {
            return Err(Error::InvalidParams(format!("t_end = {t_end}")));
        }
        let dt = compute_dt(h, cfl, speed.c_max());
        let n_steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
        Ok((dt, n_steps))
    }

    /// Requests interior snapshots at the steps nearest the given times.
    pub fn with_snapshot_times(mut self, times: &[f64]) -> Result<Self> {
        let mut steps = Vec::with_capacity(times.len());
        for &t in times {
            let s = (t / self.dt).round();
            if !(0.0..=self.n_steps as f64).contains(&s) {
                return Err(Error::InvalidParams(format!(
                    "snapshot time {t} outside the simulated range"
                )));
            }
            steps.push(s as usize);
        }
        steps.sort_unstable();
        steps.dedup();
        self.snapshot_steps = steps;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn cfl(&self) -> f64 {
        self.cfl
    }

    pub fn total_time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn snapshot_steps(&self) -> &[usize] {
        &self.snapshot_steps
    }

    #[cfg(test)]
    pub(crate) fn raw(grid: Grid, dt: f64, n_steps: usize) -> Self {
        Self {
            grid,
            dt,
            n_steps,
            cfl: f64::NAN,
            snapshot_steps: Vec::new(),
        }
    }
}

/// Pressure history on the sensor ring: `n_samples` rows (row 0 is `t = 0`)
/// by `n_sensors` columns, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub h: f64,
    pub dt: f64,
    pub sensor_coords: Vec<(f64, f64)>,
    pub data: Vec<f64>,
    pub speed_tag: String,
    pub phantom_tag: String,
}

impl BoundaryTrace {
    pub fn n_sensors(&self) -> usize {
        self.sensor_coords.len()
    }

    pub fn n_samples(&self) -> usize {
        if self.sensor_coords.is_empty() {
            0
        } else {
            self.data.len() / self.sensor_coords.len()
        }
    }

    /// Time of the last recorded row.
    pub fn duration(&self) -> f64 {
        (self.n_samples().saturating_sub(1)) as f64 * self.dt
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.n_sensors();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Interior state at one time step, restricted to the reconstruction region,
/// with the discrete time derivative by centered difference.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub p: ScalarField,
    pub p_t: ScalarField,
}

/// The aligned subgrid of `grid` covering the reconstruction square.
pub(crate) fn reconstruction_window(grid: &Grid) -> Grid {
    let (x0, y0) = grid.origin();
    let h = grid.h();
    let lo = |o: f64| ((-RECON_HALF_WIDTH - o) / h - 1e-9).ceil().max(0.0) as usize;
    let hi = |o: f64, n: usize| (((RECON_HALF_WIDTH - o) / h + 1e-9).floor() as usize).min(n - 1);
    let (i0, j0) = (lo(x0), lo(y0));
    let (i1, j1) = (hi(x0, grid.nx()), hi(y0, grid.ny()));
    Grid::new(grid.node(i0, j0), h, i1 - i0 + 1, j1 - j0 + 1)
        .expect("window is at least 3 nodes wide")
}

/// Runs the forward problem: phantom as initial pressure, zero initial
/// velocity, Dirichlet edges. The pressure at the ring nodes is appended to
/// the trace after every step; requested snapshots carry the interior state.
pub fn simulate_forward(
    params: &SimParams,
    speed: &SpeedProfile,
    phantom: &PhantomSpec,
    ring: &SensorRing,
) -> Result<(BoundaryTrace, Vec<Snapshot>)> {
    if ring.grid() != params.grid() {
        return Err(Error::TraceMismatch(
            "sensor ring was built on a different grid".into(),
        ));
    }
    let grid = *params.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let r2 = (params.dt / grid.h()) * (params.dt / grid.h());
    let c2 = speed.sample_speed_squared(grid);
    let mut p_prev = sample_field(phantom, grid);
    zero_edges(&mut p_prev);
    let max_f = p_prev.max_abs();
    let guard = if max_f > 0.0 { 10.0 * max_f } else { 1.0 };

    let ring_idx = ring.linear_indices();
    let window = reconstruction_window(&grid);
    let mut data = Vec::with_capacity((params.n_steps + 1) * ring_idx.len());
    let mut snapshots = Vec::new();
    let record = |data: &mut Vec<f64>, field: &ScalarField| {
        data.extend(ring_idx.iter().map(|&k| field.values()[k]));
    };

    record(&mut data, &p_prev);
    if params.snapshot_steps.first() == Some(&0) {
        snapshots.push(Snapshot {
            step: 0,
            time: 0.0,
            p: p_prev.restrict(window)?,
            p_t: ScalarField::zeros(window),
        });
    }

    let mut p_curr = first_step(&p_prev, &c2, params.dt);
    record(&mut data, &p_curr);
    check_stable(&p_curr, guard, 1)?;

    let mut p_next = ScalarField::zeros(grid);
    for n in 1..params.n_steps {
        step_into(
            p_next.values_mut(),
            p_prev.values(),
            p_curr.values(),
            c2.values(),
            nx,
            ny,
            r2,
        );
        record(&mut data, &p_next);
        check_stable(&p_next, guard, n + 1)?;
        if params.snapshot_steps.binary_search(&n).is_ok() {
            let p_t = p_next.sub(&p_prev).scale(1.0 / (2.0 * params.dt));
            snapshots.push(Snapshot {
                step: n,
                time: n as f64 * params.dt,
                p: p_curr.restrict(window)?,
                p_t: p_t.restrict(window)?,
            });
        }
        std::mem::swap(&mut p_prev, &mut p_curr);
        std::mem::swap(&mut p_curr, &mut p_next);
    }

    // a snapshot at the final step needs one extra level for the centered
    // time derivative
    if params.snapshot_steps.binary_search(&params.n_steps).is_ok() && params.n_steps >= 1 {
        step_into(
            p_next.values_mut(),
            p_prev.values(),
            p_curr.values(),
            c2.values(),
            nx,
            ny,
            r2,
        );
        let p_t = p_next.sub(&p_prev).scale(1.0 / (2.0 * params.dt));
        snapshots.push(Snapshot {
            step: params.n_steps,
            time: params.total_time(),
            p: p_curr.restrict(window)?,
            p_t: p_t.restrict(window)?,
        });
    }

    let trace = BoundaryTrace {
        h: grid.h(),
        dt: params.dt,
        sensor_coords: ring.coords().to_vec(),
        data,
        speed_tag: speed.tag().to_string(),
        phantom_tag: phantom.tag().to_string(),
    };
    Ok((trace, snapshots))
}

fn zero_edges(field: &mut ScalarField) {
    let g = *field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let v = field.values_mut();
    for i in 0..nx {
        v[i] = 0.0;
        v[(ny - 1) * nx + i] = 0.0;
    }
    for j in 0..ny {
        v[j * nx] = 0.0;
        v[j * nx + nx - 1] = 0.0;
    }
}

fn check_stable(field: &ScalarField, guard: f64, step: usize) -> Result<()> {
    let m = field.max_abs();
    if !m.is_finite() || m > guard {
        return Err(Error::Instability { step, max_abs: m });
    }
    Ok(())
}
