//! Discrete norms over the unit disc, the error-vs-cutoff-time sweep, and
//! the noise-stability experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::BoundaryTrace;
use crate::grid::{sample_field, Grid, ScalarField};
use crate::phantom::PhantomSpec;
use crate::reversal::{reverse, ReversalParams};
use crate::sensor::SensorRing;
use crate::speed::SpeedProfile;

/// Per-node integration mask. Deterministic for a given grid.
#[derive(Debug, Clone)]
pub struct DiscMask {
    grid: Grid,
    inside: Vec<bool>,
}

impl DiscMask {
    /// Every node (for oracle tests on plain rectangles).
    pub fn all(grid: Grid) -> Self {
        Self {
            inside: vec![true; grid.len()],
            grid,
        }
    }

    /// Nodes strictly inside the circle of the given radius.
    pub fn disc(grid: Grid, radius: f64) -> Self {
        let mut inside = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let (x, y) = grid.node(i, j);
                inside.push(x.hypot(y) < radius);
            }
        }
        Self { grid, inside }
    }

    /// The error-norm mask of a reconstruction: strictly inside the sensor
    /// barrier, off the ring itself, and clear of the width-`h` boundary band
    /// where the injection leaves artifacts.
    pub fn reconstruction(ring: &SensorRing) -> Self {
        let grid = *ring.grid();
        let outside = ring.outside_mask();
        let on_ring = ring.ring_mask();
        let limit = 1.0 - grid.h();
        let mut inside = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let idx = grid.idx(i, j);
                let (x, y) = grid.node(i, j);
                inside.push(!outside[idx] && !on_ring[idx] && x.hypot(y) < limit);
            }
        }
        Self { grid, inside }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.inside[self.grid.idx(i, j)]
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }
}

/// `sqrt(h² Σ v²)` over masked nodes.
pub fn l2_norm(field: &ScalarField, mask: &DiscMask) -> f64 {
    assert_eq!(field.grid(), mask.grid(), "field and mask grids differ");
    let mut sum = 0.0;
    for (v, &m) in field.values().iter().zip(&mask.inside) {
        if m {
            sum += v * v;
        }
    }
    field.grid().h() * sum.sqrt()
}

/// `sqrt(l2² + h² Σ |∇_h v|²)` with forward differences over node pairs that
/// are both masked.
pub fn h1_norm(field: &ScalarField, mask: &DiscMask) -> f64 {
    assert_eq!(field.grid(), mask.grid(), "field and mask grids differ");
    let g = field.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let v = field.values();
    let m = &mask.inside;
    let mut sum = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let idx = j * nx + i;
            if !m[idx] {
                continue;
            }
            sum += v[idx] * v[idx];
            if i + 1 < nx && m[idx + 1] {
                let gx = (v[idx + 1] - v[idx]) / h;
                sum += gx * gx;
            }
            if j + 1 < ny && m[idx + nx] {
                let gy = (v[idx + nx] - v[idx]) / h;
                sum += gy * gy;
            }
        }
    }
    h * sum.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    H1,
}

impl NormKind {
    pub fn apply(self, field: &ScalarField, mask: &DiscMask) -> f64 {
        match self {
            NormKind::L2 => l2_norm(field, mask),
            NormKind::H1 => h1_norm(field, mask),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L2 => "l2",
            NormKind::H1 => "h1",
        }
    }
}

/// Earliest admissible cutoff time: the time a wave needs to cross the unit
/// circle, `max_θ ∫ ds / c` over diameters, by midpoint quadrature.
pub fn min_cutoff_time(speed: &SpeedProfile) -> f64 {
    let n_dirs = 64;
    let n_steps = 4000;
    let ds = 2.0 / n_steps as f64;
    let mut worst: f64 = 0.0;
    for k in 0..n_dirs {
        let th = std::f64::consts::PI * k as f64 / n_dirs as f64;
        let (ex, ey) = (th.cos(), th.sin());
        let mut t = 0.0;
        for i in 0..n_steps {
            let s = -1.0 + (i as f64 + 0.5) * ds;
            t += ds / speed.speed(s * ex, s * ey);
        }
        worst = worst.max(t);
    }
    worst
}

/// Ordinary least squares of `ln err` against `ln T`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least 3 for a regression",
            points.len()
        )));
    }
    if let Some(&(t, e)) = points.iter().find(|&&(t, e)| !(t > 0.0) || !(e > 0.0)) {
        return Err(Error::InsufficientData(format!(
            "non-positive point ({t}, {e}) in log-log regression"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(t, _)| t.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all regression abscissae coincide".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    Ok((slope, intercept))
}

fn r_squared(points: &[(f64, f64)], slope: f64, intercept: f64) -> f64 {
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - ym) * (y - ym)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|&(t, e)| {
            let r = e.ln() - (slope * t.ln() + intercept);
            r * r
        })
        .sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Leading points kept by the leveling-off rule: the list is cut at the first
/// position where the error has failed to decrease by at least 2% on two
/// consecutive steps (the plateau comes from the discretization, not from the
/// continuum decay). A non-positive error ends the usable range immediately.
pub(crate) fn usable_prefix(errs: &[f64]) -> usize {
    let mut n = errs.len();
    for (k, &e) in errs.iter().enumerate() {
        if !(e > 0.0) {
            n = k;
            break;
        }
    }
    let mut fails = 0;
    for i in 1..n {
        if errs[i] > 0.98 * errs[i - 1] {
            fails += 1;
        } else {
            fails = 0;
        }
        if fails == 2 {
            return i - 1;
        }
    }
    n
}

#[derive(Debug, Clone)]
pub struct SweepParams {
    /// Strictly increasing cutoff times.
    pub t_list: Vec<f64>,
    pub eps: f64,
    pub cfl: f64,
    pub norm: NormKind,
}

/// Error-vs-cutoff-time measurement.
#[derive(Debug, Clone)]
pub struct SweepResult {
    /// All measured `(T, error)` pairs, in increasing `T`.
    pub points: Vec<(f64, f64)>,
    /// Leading count of points used for the regression (plateau excluded).
    pub usable: usize,
    pub norm: NormKind,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl SweepResult {
    pub fn usable_points(&self) -> &[(f64, f64)] {
        &self.points[..self.usable]
    }
}

/// Runs one reconstruction per cutoff time (in parallel), measures the
/// requested norm of `v(., 0) - f` over the disc mask, and fits the decay
/// rate on the usable prefix.
pub fn error_sweep(
    trace: &BoundaryTrace,
    speed: &SpeedProfile,
    phantom: &PhantomSpec,
    ring: &SensorRing,
    params: &SweepParams,
) -> Result<SweepResult> {
    if params.t_list.is_empty() {
        return Err(Error::InsufficientData("empty cutoff-time list".into()));
    }
    if params.t_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(
            "cutoff times must be strictly increasing".into(),
        ));
    }
    let t_min = min_cutoff_time(speed);
    if params.t_list[0] < t_min - 1e-9 {
        return Err(Error::InvalidParams(format!(
            "cutoff time {} is below the disc-crossing time {t_min:.3} for this speed",
            params.t_list[0]
        )));
    }
    let t_max = *params.t_list.last().unwrap();
    if t_max > trace.duration() + 1e-9 {
        return Err(Error::InvalidParams(format!(
            "cutoff time {t_max} exceeds the trace duration {:.3}",
            trace.duration()
        )));
    }

    let grid = *ring.grid();
    let f_ref = sample_field(phantom, grid);
    let mask = DiscMask::reconstruction(ring);

    // points carry the dt-snapped cutoff actually used, not the requested one
    let points: Vec<(f64, f64)> = params
        .t_list
        .par_iter()
        .map(|&t_cut| -> Result<(f64, f64)> {
            let rp = ReversalParams::approximate(grid.h(), t_cut, params.eps, params.cfl, speed)?;
            let rec = reverse(&rp, trace, speed, ring)?;
            Ok((rp.t_cut(), params.norm.apply(&rec.field.sub(&f_ref), &mask)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    if points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::InvalidParams(
            "cutoff times collide after snapping to the time step".into(),
        ));
    }
    let usable = usable_prefix(&points.iter().map(|&(_, e)| e).collect::<Vec<_>>());
    if usable < 3 {
        return Err(Error::InsufficientData(format!(
            "only {usable} usable points before the error levels off"
        )));
    }
    let (slope, intercept) = loglog_slope(&points[..usable])?;
    let r2 = r_squared(&points[..usable], slope, intercept);
    Ok(SweepResult {
        points,
        usable,
        norm: params.norm,
        slope,
        intercept,
        r_squared: r2,
    })
}

#[derive(Debug, Clone)]
pub struct NoiseParams {
    pub t_cut: f64,
    pub eps: f64,
    pub cfl: f64,
    pub amplitudes: Vec<f64>,
    pub seed: u64,
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Adds i.i.d. Gaussian noise of each amplitude to the trace, reconstructs,
/// and reports the L² error against the phantom. Amplitude 0 reproduces the
/// noiseless error exactly.
pub fn noise_experiment(
    trace: &BoundaryTrace,
    speed: &SpeedProfile,
    phantom: &PhantomSpec,
    ring: &SensorRing,
    params: &NoiseParams,
) -> Result<Vec<(f64, f64)>> {
    if params.amplitudes.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::InvalidParams("negative noise amplitude".into()));
    }
    let grid = *ring.grid();
    let f_ref = sample_field(phantom, grid);
    let mask = DiscMask::reconstruction(ring);
    let rp = ReversalParams::approximate(grid.h(), params.t_cut, params.eps, params.cfl, speed)?;

    params
        .amplitudes
        .par_iter()
        .enumerate()
        .map(|(k, &amp)| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(k as u64));
            let mut noisy = trace.clone();
            for v in &mut noisy.data {
                *v += amp * standard_normal(&mut rng);
            }
            let rec = reverse(&rp, &noisy, speed, ring)?;
            Ok((amp, l2_norm(&rec.field.sub(&f_ref), &mask)))
        })
        .collect()
}
