//! Run configuration: a single TOML file in which every parameter of a run
//! is spelled out, plus the built-in example recipes.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use tatrec::{Bump, Ellipse, NormKind, PhantomSpec, SpeedProfile};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// RNG seed for the noise experiment and anything randomized.
    pub seed: u64,
    /// Output directory; created if missing.
    pub out_dir: String,
    /// Courant factor for both solvers.
    pub cfl: f64,
    /// Cutoff width.
    pub eps: f64,
    pub speed: SpeedConfig,
    pub phantom: PhantomConfig,
    pub forward: ForwardConfig,
    pub reconstruct: ReconstructConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedConfig {
    /// One of: constant, radial-non-trapping, bump-non-trapping,
    /// trapping-crater, paraboloid.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillations: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bumps: Option<Vec<BumpConfig>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomConfig {
    /// One of: two-discs, comb, face, custom.
    pub kind: String,
    /// Mollification width; omit for the default `2 * forward.h`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ellipses: Option<Vec<EllipseConfig>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseConfig {
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    #[serde(default)]
    pub angle: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    /// Forward grid spacing.
    pub h: f64,
    /// Simulated duration (the trace covers [0, t_end]).
    pub t_end: f64,
    /// Times at which to store interior snapshots.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructConfig {
    /// Reconstruction grid spacing (may differ from forward.h).
    pub h: f64,
    /// Cutoff time for a single reconstruction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Cutoff times for a sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t_list: Vec<f64>,
    /// "l2" or "h1".
    pub norm: String,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| anyhow!("config {}: {e}", path.display()))?;
        cfg.validate()
            .map_err(|e| anyhow!("config {}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every downstream invariant that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            bail!("[cfl] {} outside (0, 1]", self.cfl);
        }
        if !(self.eps > 0.0) {
            bail!("[eps] {} must be positive", self.eps);
        }
        let speed = self.speed_profile()?;
        speed.validate().map_err(|e| anyhow!("[speed] {e}"))?;
        self.phantom_spec().map_err(|e| anyhow!("[phantom] {e}"))?;
        if !(self.forward.h > 0.0) {
            bail!("[forward] h = {} must be positive", self.forward.h);
        }
        if !(self.forward.t_end > 0.0) {
            bail!("[forward] t_end = {} must be positive", self.forward.t_end);
        }
        if !(self.reconstruct.h > 0.0) {
            bail!("[reconstruct] h = {} must be positive", self.reconstruct.h);
        }
        self.norm_kind()?;
        if let Some(t) = self.reconstruct.t {
            if !(t > self.eps) {
                bail!("[reconstruct] t = {t} must exceed eps = {}", self.eps);
            }
        }
        if self.reconstruct.t_list.windows(2).any(|w| w[0] >= w[1]) {
            bail!("[reconstruct] t_list must be strictly increasing");
        }
        Ok(())
    }

    pub fn speed_profile(&self) -> Result<SpeedProfile> {
        let profile = match self.speed.kind.as_str() {
            "constant" => SpeedProfile::Constant {
                c0: self.speed.c0.unwrap_or(1.0),
            },
            "radial-non-trapping" => {
                let default = SpeedProfile::radial_default();
                let (da, dm) = match default {
                    SpeedProfile::RadialNonTrapping {
                        amplitude,
                        oscillations,
                    } => (amplitude, oscillations),
                    _ => unreachable!(),
                };
                SpeedProfile::RadialNonTrapping {
                    amplitude: self.speed.amplitude.unwrap_or(da),
                    oscillations: self.speed.oscillations.unwrap_or(dm),
                }
            }
            "bump-non-trapping" => match &self.speed.bumps {
                None => SpeedProfile::bump_default(),
                Some(bumps) => SpeedProfile::BumpNonTrapping {
                    bumps: bumps
                        .iter()
                        .map(|b| Bump {
                            center: (b.center[0], b.center[1]),
                            width: b.width,
                            amplitude: b.amplitude,
                        })
                        .collect(),
                },
            },
            "trapping-crater" => SpeedProfile::TrappingCrater,
            "paraboloid" => SpeedProfile::Paraboloid,
            other => bail!(
                "[speed] unknown kind {other:?} (expected constant, radial-non-trapping, \
                 bump-non-trapping, trapping-crater or paraboloid)"
            ),
        };
        Ok(profile)
    }

    /// The phantom with the configured smoothing (default `2 * forward.h`).
    pub fn phantom_spec(&self) -> Result<PhantomSpec> {
        let sigma = self.phantom.sigma.unwrap_or(2.0 * self.forward.h);
        if !(sigma >= 0.0) {
            bail!("sigma = {sigma} must be nonnegative");
        }
        let spec = match self.phantom.kind.as_str() {
            "two-discs" => PhantomSpec::two_discs(sigma),
            "comb" => PhantomSpec::comb(sigma),
            "face" => PhantomSpec::face(sigma),
            "custom" => {
                let ellipses = self
                    .phantom
                    .ellipses
                    .as_ref()
                    .ok_or_else(|| anyhow!("custom phantom needs [[phantom.ellipses]]"))?;
                let components = ellipses
                    .iter()
                    .map(|e| Ellipse {
                        center: (e.center[0], e.center[1]),
                        semi_axes: (e.semi_axes[0], e.semi_axes[1]),
                        angle: e.angle,
                        intensity: e.intensity,
                    })
                    .collect();
                PhantomSpec::new(components, sigma)?
            }
            other => bail!("unknown phantom kind {other:?}"),
        };
        Ok(spec)
    }

    pub fn norm_kind(&self) -> Result<NormKind> {
        match self.reconstruct.norm.as_str() {
            "l2" => Ok(NormKind::L2),
            "h1" => Ok(NormKind::H1),
            other => bail!("[reconstruct] unknown norm {other:?} (expected l2 or h1)"),
        }
    }
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
            (t * 1000.0).round() / 1000.0
        })
        .collect()
}

/// The default run: the radial non-trapping speed with the two-disc phantom,
/// matching the main error-decay experiment.
pub fn default_config() -> RunConfig {
    RunConfig {
        seed: 0,
        out_dir: "runs/default".into(),
        cfl: 0.5,
        eps: 1.0,
        speed: SpeedConfig {
            kind: "radial-non-trapping".into(),
            c0: None,
            amplitude: Some(0.25),
            oscillations: Some(3),
            bumps: None,
        },
        phantom: PhantomConfig {
            kind: "two-discs".into(),
            sigma: Some(0.12),
            ellipses: None,
        },
        forward: ForwardConfig {
            h: 0.01,
            t_end: 8.01,
            snapshot_times: vec![],
        },
        reconstruct: ReconstructConfig {
            h: 0.01,
            t: Some(8.0),
            t_list: geomspace(2.9, 8.0, 8),
            norm: "h1".into(),
        },
    }
}

/// Bundled recipes for the four error-decay studies: non-trapping radial and
/// bump speeds measured in H¹, trapping crater and paraboloid in L².
pub fn preset(name: &str) -> Result<RunConfig> {
    let mut cfg = default_config();
    match name {
        "fig2" => {
            cfg.out_dir = "runs/fig2".into();
            cfg.phantom.kind = "comb".into();
            cfg.phantom.sigma = Some(0.1);
        }
        "fig3" => {
            cfg.out_dir = "runs/fig3".into();
            cfg.speed = SpeedConfig {
                kind: "bump-non-trapping".into(),
                c0: None,
                amplitude: None,
                oscillations: None,
                bumps: None,
            };
            cfg.phantom.kind = "comb".into();
            cfg.phantom.sigma = Some(0.1);
            cfg.reconstruct.t_list = geomspace(2.8, 8.0, 8);
        }
        "fig4" => {
            cfg.out_dir = "runs/fig4".into();
            cfg.speed = SpeedConfig {
                kind: "trapping-crater".into(),
                c0: None,
                amplitude: None,
                oscillations: None,
                bumps: None,
            };
            cfg.phantom.sigma = Some(0.1);
            cfg.forward.h = 0.02;
            cfg.forward.t_end = 12.01;
            cfg.reconstruct.h = 0.02;
            cfg.reconstruct.t = Some(12.0);
            cfg.reconstruct.t_list = geomspace(3.4, 12.0, 8);
            cfg.reconstruct.norm = "l2".into();
        }
        "fig5" => {
            cfg.out_dir = "runs/fig5".into();
            cfg.speed = SpeedConfig {
                kind: "paraboloid".into(),
                c0: None,
                amplitude: None,
                oscillations: None,
                bumps: None,
            };
            cfg.phantom = PhantomConfig {
                kind: "custom".into(),
                sigma: Some(0.06),
                ellipses: Some(vec![EllipseConfig {
                    center: [0.55, 0.2],
                    semi_axes: [0.12, 0.12],
                    angle: 0.0,
                    intensity: 1.0,
                }]),
            };
            cfg.forward.h = 0.03;
            cfg.forward.t_end = 40.01;
            cfg.reconstruct.h = 0.03;
            cfg.reconstruct.t = Some(40.0);
            cfg.reconstruct.t_list = geomspace(8.0, 40.0, 8);
            cfg.reconstruct.norm = "l2".into();
        }
        other => bail!("unknown preset {other:?} (expected fig2, fig3, fig4 or fig5)"),
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_and_validates() {
        let cfg = default_config();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn presets_validate() {
        for name in ["fig2", "fig3", "fig4", "fig5"] {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let t_min = tatrec::min_cutoff_time(&cfg.speed_profile().unwrap());
            assert!(
                cfg.reconstruct.t_list[0] >= t_min - 1e-9,
                "{name}: first cutoff {} below crossing time {t_min}",
                cfg.reconstruct.t_list[0]
            );
            assert!(*cfg.reconstruct.t_list.last().unwrap() <= cfg.forward.t_end);
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut cfg = default_config();
        cfg.cfl = 1.5;
        assert!(cfg.validate().is_err());

        let mut cfg = default_config();
        cfg.speed.kind = "warp".into();
        assert!(cfg.validate().is_err());

        let mut cfg = default_config();
        cfg.reconstruct.norm = "linf".into();
        assert!(cfg.validate().is_err());

        let mut cfg = default_config();
        cfg.phantom.kind = "custom".into();
        cfg.phantom.ellipses = Some(vec![EllipseConfig {
            center: [0.85, 0.0],
            semi_axes: [0.2, 0.2],
            angle: 0.0,
            intensity: 1.0,
        }]);
        assert!(cfg.validate().is_err(), "support outside 0.9 must fail");
    }

    #[test]
    fn unknown_keys_are_diagnosed() {
        let text = default_config().to_toml() + "\nunknown_knob = 3\n";
        assert!(toml::from_str::<RunConfig>(&text).is_err());
    }
}
