//! Initial-pressure phantoms built from (optionally mollified) ellipses.

use crate::cutoff::transition;
use crate::error::{Error, Result};
use crate::grid::AnalyticField;

/// One ellipse component: indicator of the rotated ellipse scaled by
/// `intensity`, optionally smoothed at the rim.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipse {
    pub center: (f64, f64),
    /// Semi-axes `(a, b)` along the rotated x/y directions.
    pub semi_axes: (f64, f64),
    /// Rotation angle in radians.
    pub angle: f64,
    pub intensity: f64,
}

impl Ellipse {
    pub fn disc(center: (f64, f64), radius: f64, intensity: f64) -> Self {
        Ellipse {
            center,
            semi_axes: (radius, radius),
            angle: 0.0,
            intensity,
        }
    }

    /// Elliptic radial coordinate: 1 on the rim, < 1 inside.
    fn rho(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        let (sin, cos) = self.angle.sin_cos();
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        f64::hypot(u / self.semi_axes.0, v / self.semi_axes.1)
    }

    /// `|center| + max(a, b)`: radius of a circle around the origin that
    /// bounds this component.
    fn bounding_radius(&self) -> f64 {
        f64::hypot(self.center.0, self.center.1) + self.semi_axes.0.max(self.semi_axes.1)
    }
}

/// Sum of ellipse components. With `sigma > 0`, each indicator is replaced by
/// a smooth ramp of width `sigma` just inside the rim, so mollification never
/// enlarges the support.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    components: Vec<Ellipse>,
    sigma: f64,
    name: String,
}

/// Phantom support must stay strictly inside this radius, which leaves a
/// margin between the support and the unit observation circle.
pub const SUPPORT_LIMIT: f64 = 0.9;

impl PhantomSpec {
    pub fn new(components: Vec<Ellipse>, sigma: f64) -> Result<Self> {
        Self::named("custom", components, sigma)
    }

    pub fn named(name: &str, components: Vec<Ellipse>, sigma: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidPhantom("no components".into()));
        }
        if !(sigma >= 0.0) {
            return Err(Error::InvalidPhantom(format!("sigma = {sigma}")));
        }
        for e in &components {
            if !(e.semi_axes.0 > 0.0 && e.semi_axes.1 > 0.0) {
                return Err(Error::InvalidPhantom(format!(
                    "non-positive semi-axes {:?}",
                    e.semi_axes
                )));
            }
            if e.bounding_radius() >= SUPPORT_LIMIT {
                return Err(Error::InvalidPhantom(format!(
                    "component at {:?} reaches radius {:.3} >= {SUPPORT_LIMIT}",
                    e.center,
                    e.bounding_radius()
                )));
            }
        }
        Ok(Self {
            components,
            sigma,
            name: name.to_string(),
        })
    }

    /// Two discs of different size and intensity; the workhorse phantom.
    pub fn two_discs(sigma: f64) -> Self {
        Self::named(
            "two-discs",
            vec![
                Ellipse::disc((-0.25, -0.15), 0.18, 1.0),
                Ellipse::disc((0.3, 0.2), 0.12, 0.8),
            ],
            sigma,
        )
        .expect("builtin phantom is valid")
    }

    /// Four parallel bars (strong directional singularities).
    pub fn comb(sigma: f64) -> Self {
        let bar = |cx: f64| Ellipse {
            center: (cx, 0.0),
            semi_axes: (0.08, 0.35),
            angle: 0.0,
            intensity: 1.0,
        };
        Self::named(
            "comb",
            vec![bar(-0.45), bar(-0.15), bar(0.15), bar(0.45)],
            sigma,
        )
        .expect("builtin phantom is valid")
    }

    /// Two discs and a wide flat ellipse.
    pub fn face(sigma: f64) -> Self {
        Self::named(
            "face",
            vec![
                Ellipse::disc((-0.3, 0.25), 0.1, 1.0),
                Ellipse::disc((0.3, 0.25), 0.1, 1.0),
                Ellipse {
                    center: (0.0, -0.3),
                    semi_axes: (0.4, 0.12),
                    angle: 0.0,
                    intensity: 0.8,
                },
            ],
            sigma,
        )
        .expect("builtin phantom is valid")
    }

    /// Single centered disc; handy for causality oracles.
    pub fn centered_disc(radius: f64, sigma: f64) -> Result<Self> {
        Self::named("disc", vec![Ellipse::disc((0.0, 0.0), radius, 1.0)], sigma)
    }

    pub fn components(&self) -> &[Ellipse] {
        &self.components
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same geometry with a different smoothing width.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::named(&self.name, self.components.clone(), sigma)
    }

    pub fn tag(&self) -> &str {
        &self.name
    }

    /// Radius of a circle around the origin containing the support.
    pub fn support_radius(&self) -> f64 {
        self.components
            .iter()
            .map(Ellipse::bounding_radius)
            .fold(0.0, f64::max)
    }

    /// Lower bound on the distance from the support to the circle of the
    /// given radius (exact for discs whose rim touches the bounding circle).
    pub fn distance_to_circle(&self, radius: f64) -> f64 {
        (radius - self.support_radius()).max(0.0)
    }
}

impl AnalyticField for PhantomSpec {
    fn eval(&self, x: f64, y: f64) -> f64 {
        let mut v = 0.0;
        for e in &self.components {
            let rho = e.rho(x, y);
            if self.sigma == 0.0 {
                if rho <= 1.0 {
                    v += e.intensity;
                }
            } else {
                // ramp of physical width sigma across the inside of the rim
                let min_axis = e.semi_axes.0.min(e.semi_axes.1);
                v += e.intensity * transition((rho - 1.0) * min_axis / self.sigma);
            }
        }
        v
    }
}
