//! Smooth temporal cutoff for the backward boundary data.
//!
//! The backward problem injects `g(y,t) * cutoff(t, T, eps)` on the
//! observation circle. The cutoff equals 1 up to `T - alpha` and decays
//! smoothly to 0 at `t = T`, with `alpha = min(eps, 1)`, so the injected data
//! is compatible with the zero terminal condition at `t = T`.

/// `exp(-1/r)` for `r > 0`, else 0: the standard C-infinity bump ingredient.
#[inline]
fn q(r: f64) -> f64 {
    if r > 0.0 {
        (-1.0 / r).exp()
    } else {
        0.0
    }
}

/// Derivative of [`q`]: `exp(-1/r) / r²` for `r > 0`, else 0.
#[inline]
fn q_deriv(r: f64) -> f64 {
    if r > 0.0 {
        (-1.0 / r).exp() / (r * r)
    } else {
        0.0
    }
}

/// C-infinity transition: 1 for `s <= -1`, 0 for `s >= 0`, strictly
/// decreasing in between. Built as `q(-s) / (q(-s) + q(1+s))`, which is
/// symmetric about `s = -1/2`.
pub fn transition(s: f64) -> f64 {
    if s <= -1.0 {
        return 1.0;
    }
    if s >= 0.0 {
        return 0.0;
    }
    let a = q(-s);
    let b = q(1.0 + s);
    a / (a + b)
}

/// Analytic derivative of [`transition`]; zero outside `(-1, 0)`.
pub fn transition_deriv(s: f64) -> f64 {
    if s <= -1.0 || s >= 0.0 {
        return 0.0;
    }
    let a = q(-s);
    let b = q(1.0 + s);
    let da = -q_deriv(-s);
    let db = q_deriv(1.0 + s);
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Measured-and-frozen bound on `max |transition'|`, attained at the
/// midpoint `s = -1/2` where the derivative equals exactly -2. Consequently
/// `|d/dt cutoff(t, T, eps)| <= TRANSITION_DERIV_BOUND / alpha`.
pub const TRANSITION_DERIV_BOUND: f64 = 2.0;

/// Width actually used by the cutoff: `alpha = min(eps, 1)`.
#[inline]
pub fn cutoff_alpha(eps: f64) -> f64 {
    eps.min(1.0)
}

/// The cutoff weight `transition((t - t_cut) / alpha)` applied to boundary
/// data at time `t` for cutoff time `t_cut`. Callers must keep
/// `t in [0, t_cut]`, `t_cut > 0`, `eps > 0`.
pub fn cutoff(t: f64, t_cut: f64, eps: f64) -> f64 {
    debug_assert!(t_cut > 0.0 && eps > 0.0, "cutoff parameters out of range");
    debug_assert!(
        (0.0..=t_cut * (1.0 + 1e-12)).contains(&t),
        "cutoff time {t} outside [0, {t_cut}]"
    );
    transition((t - t_cut) / cutoff_alpha(eps))
}
