//! Analytic sound-speed profiles with closed-form `c`, `c²` and `grad(c²)`.
//!
//! Every non-constant profile deviates from its exterior constant only inside
//! the unit circle, so the speed is known exactly outside the observation
//! circle. The crater and paraboloid are the two trapping examples; the radial
//! and bump profiles are non-trapping (verified empirically by the ray
//! module, not assumed).

use std::f64::consts::PI;

use crate::cutoff::{transition, transition_deriv};
use crate::error::{Error, Result};
use crate::grid::{sample_field, AnalyticField, Grid, ScalarField};

/// One Gaussian component of [`SpeedProfile::BumpNonTrapping`].
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: (f64, f64),
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpeedProfile {
    /// `c = c0` everywhere.
    Constant { c0: f64 },
    /// Radial oscillation `c(r) = 1 + amplitude * cos(m*pi*r) * w(r)` with a
    /// C-infinity taper `w` equal to 1 on `[0, 0.8]` and 0 for `r >= 1`. The
    /// cosine keeps the profile smooth at the origin (a sine would put a cone
    /// point there that sheds grid-scale scatter for as long as the wave
    /// keeps crossing it).
    RadialNonTrapping { amplitude: f64, oscillations: u32 },
    /// `c = 1 + w(|x|) * sum_i a_i exp(-|x - x_i|² / w_i²)`, tapered to 1 at
    /// the unit circle.
    BumpNonTrapping { bumps: Vec<Bump> },
    /// `c = 0.5` for `|x| <= 0.5`, `c = |x|` in the annulus `0.5 < |x| < 1`,
    /// `c = 1` outside. Lipschitz only at the two kink circles.
    TrappingCrater,
    /// `c = |x|² + 0.1` for `|x| < 1`, `c = 1.1` outside. Severe trapping.
    Paraboloid,
}

/// Taper `w(r)`: 1 for `r <= 0.8`, 0 for `r >= 1`, C-infinity in between.
#[inline]
fn taper(r: f64) -> f64 {
    transition((r - 1.0) / 0.2)
}

#[inline]
fn taper_deriv(r: f64) -> f64 {
    transition_deriv((r - 1.0) / 0.2) / 0.2
}

impl SpeedProfile {
    /// The radial non-trapping profile with default amplitude 0.25 and three
    /// oscillations. At this amplitude the slow annulus of the cosine profile
    /// does not yet waveguide, so reconstruction errors decay fast.
    pub fn radial_default() -> Self {
        SpeedProfile::RadialNonTrapping {
            amplitude: 0.25,
            oscillations: 3,
        }
    }

    /// The bump profile with two off-center Gaussians of amplitude ±0.25 and
    /// width 0.3 (a non-radial, non-trapping example).
    pub fn bump_default() -> Self {
        SpeedProfile::BumpNonTrapping {
            bumps: vec![
                Bump {
                    center: (-0.4, 0.15),
                    width: 0.3,
                    amplitude: 0.25,
                },
                Bump {
                    center: (0.4, -0.15),
                    width: 0.3,
                    amplitude: -0.25,
                },
            ],
        }
    }

    /// Checks the positivity invariant `c >= c_min > 0`.
    pub fn validate(&self) -> Result<()> {
        match self {
            SpeedProfile::Constant { c0 } => {
                if !(c0.is_finite() && *c0 > 0.0) {
                    return Err(Error::InvalidSpeed(format!("constant speed c0 = {c0}")));
                }
            }
            SpeedProfile::RadialNonTrapping {
                amplitude,
                oscillations,
            } => {
                if !(amplitude.is_finite() && amplitude.abs() < 1.0) {
                    return Err(Error::InvalidSpeed(format!(
                        "radial amplitude {amplitude} must satisfy |A| < 1"
                    )));
                }
                if *oscillations == 0 {
                    return Err(Error::InvalidSpeed("oscillation count must be >= 1".into()));
                }
            }
            SpeedProfile::BumpNonTrapping { bumps } => {
                let dip: f64 = bumps.iter().map(|b| b.amplitude.min(0.0).abs()).sum();
                if dip >= 1.0 {
                    return Err(Error::InvalidSpeed(format!(
                        "bump amplitudes drive speed to {} <= 0",
                        1.0 - dip
                    )));
                }
                if bumps.iter().any(|b| !(b.width > 0.0)) {
                    return Err(Error::InvalidSpeed("bump width must be > 0".into()));
                }
            }
            SpeedProfile::TrappingCrater | SpeedProfile::Paraboloid => {}
        }
        Ok(())
    }

    /// Lower bound on `c` over the plane.
    pub fn c_min(&self) -> f64 {
        match self {
            SpeedProfile::Constant { c0 } => *c0,
            SpeedProfile::RadialNonTrapping { amplitude, .. } => 1.0 - amplitude.abs(),
            SpeedProfile::BumpNonTrapping { bumps } => {
                1.0 - bumps
                    .iter()
                    .map(|b| b.amplitude.min(0.0).abs())
                    .sum::<f64>()
            }
            SpeedProfile::TrappingCrater => 0.5,
            SpeedProfile::Paraboloid => 0.1,
        }
    }

    /// Upper bound on `c` over the plane.
    pub fn c_max(&self) -> f64 {
        match self {
            SpeedProfile::Constant { c0 } => *c0,
            SpeedProfile::RadialNonTrapping { amplitude, .. } => 1.0 + amplitude.abs(),
            SpeedProfile::BumpNonTrapping { bumps } => {
                1.0 + bumps.iter().map(|b| b.amplitude.max(0.0)).sum::<f64>()
            }
            SpeedProfile::TrappingCrater => 1.0,
            SpeedProfile::Paraboloid => 1.1,
        }
    }

    /// The constant value taken for `|x| >= 1`.
    pub fn exterior_speed(&self) -> f64 {
        match self {
            SpeedProfile::Constant { c0 } => *c0,
            SpeedProfile::Paraboloid => 1.1,
            _ => 1.0,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SpeedProfile::Constant { .. } => "constant",
            SpeedProfile::RadialNonTrapping { .. } => "radial-non-trapping",
            SpeedProfile::BumpNonTrapping { .. } => "bump-non-trapping",
            SpeedProfile::TrappingCrater => "trapping-crater",
            SpeedProfile::Paraboloid => "paraboloid",
        }
    }

    /// `c(x, y)`.
    pub fn speed(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        match self {
            SpeedProfile::Constant { c0 } => *c0,
            SpeedProfile::RadialNonTrapping {
                amplitude,
                oscillations,
            } => 1.0 + amplitude * (*oscillations as f64 * PI * r).cos() * taper(r),
            SpeedProfile::BumpNonTrapping { bumps } => 1.0 + taper(r) * bump_sum(bumps, x, y),
            SpeedProfile::TrappingCrater => {
                if r <= 0.5 {
                    0.5
                } else if r < 1.0 {
                    r
                } else {
                    1.0
                }
            }
            SpeedProfile::Paraboloid => {
                if r < 1.0 {
                    r * r + 0.1
                } else {
                    1.1
                }
            }
        }
    }

    /// `c²(x, y)`.
    pub fn speed_squared(&self, x: f64, y: f64) -> f64 {
        let c = self.speed(x, y);
        c * c
    }

    /// Analytic `grad(c²)(x, y)`. On the crater's kink circles the gradient
    /// of the piece that defines the value there is used (the one-sided
    /// choice): zero at `|x| = 0.5` and at `|x| = 1`.
    pub fn grad_speed_squared(&self, x: f64, y: f64) -> (f64, f64) {
        let r = x.hypot(y);
        match self {
            SpeedProfile::Constant { .. } => (0.0, 0.0),
            SpeedProfile::RadialNonTrapping {
                amplitude,
                oscillations,
            } => {
                if r == 0.0 {
                    return (0.0, 0.0);
                }
                let k = *oscillations as f64 * PI;
                let c = 1.0 + amplitude * (k * r).cos() * taper(r);
                let dc_dr =
                    amplitude * (-k * (k * r).sin() * taper(r) + (k * r).cos() * taper_deriv(r));
                let d_c2_dr = 2.0 * c * dc_dr;
                (d_c2_dr * x / r, d_c2_dr * y / r)
            }
            SpeedProfile::BumpNonTrapping { bumps } => {
                let s = bump_sum(bumps, x, y);
                let (sx, sy) = bump_sum_grad(bumps, x, y);
                let w = taper(r);
                let c = 1.0 + w * s;
                let (wx, wy) = if r == 0.0 {
                    (0.0, 0.0)
                } else {
                    let dw = taper_deriv(r);
                    (dw * x / r, dw * y / r)
                };
                (2.0 * c * (wx * s + w * sx), 2.0 * c * (wy * s + w * sy))
            }
            SpeedProfile::TrappingCrater => {
                // c² = r² in the open annulus, constant elsewhere
                if r > 0.5 && r < 1.0 {
                    (2.0 * x, 2.0 * y)
                } else {
                    (0.0, 0.0)
                }
            }
            SpeedProfile::Paraboloid => {
                // d(c²)/dr = 4 r c, so grad(c²) = 4 c * x
                if r < 1.0 {
                    let c = r * r + 0.1;
                    (4.0 * c * x, 4.0 * c * y)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    /// Samples `c²` at every node (the field the FDTD kernel consumes).
    pub fn sample_speed_squared(&self, grid: Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| self.speed_squared(x, y))
    }

    /// Samples `c` at every node.
    pub fn sample_speed(&self, grid: Grid) -> ScalarField {
        sample_field(self, grid)
    }
}

impl AnalyticField for SpeedProfile {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.speed(x, y)
    }
}

fn bump_sum(bumps: &[Bump], x: f64, y: f64) -> f64 {
    bumps
        .iter()
        .map(|b| {
            let dx = x - b.center.0;
            let dy = y - b.center.1;
            b.amplitude * (-(dx * dx + dy * dy) / (b.width * b.width)).exp()
        })
        .sum()
}

fn bump_sum_grad(bumps: &[Bump], x: f64, y: f64) -> (f64, f64) {
    let mut gx = 0.0;
    let mut gy = 0.0;
    for b in bumps {
        let dx = x - b.center.0;
        let dy = y - b.center.1;
        let g = b.amplitude * (-(dx * dx + dy * dy) / (b.width * b.width)).exp();
        let k = -2.0 / (b.width * b.width);
        gx += g * k * dx;
        gy += g * k * dy;
    }
    (gx, gy)
}

/// The five profiles exercised by the test and acceptance suites.
pub fn builtin_profiles() -> Vec<SpeedProfile> {
    vec![
        SpeedProfile::Constant { c0: 1.0 },
        SpeedProfile::radial_default(),
        SpeedProfile::bump_default(),
        SpeedProfile::TrappingCrater,
        SpeedProfile::Paraboloid,
    ]
}
