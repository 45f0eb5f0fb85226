//! JSON configuration shared by every command-line subcommand.
//!
//! All sections are optional at parse time; each command asks for the ones
//! it needs and gets a precise error when one is missing. Unknown keys are
//! rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::MseConfig;
use crate::encoder::TemParams;
use crate::error::{invalid, Error, Result};
use crate::kernel::{bound_c, design, BoundMode, KernelSpec};
use crate::model::FriSignal;
use crate::recovery::DelayModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryMethod {
    /// DC-including kernel, matrix `A`.
    #[default]
    WithDc,
    /// DC-free kernel, matrix `B`.
    NoDc,
}

impl RecoveryMethod {
    pub fn include_dc(self) -> bool {
        matches!(self, RecoveryMethod::WithDc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(rename = "K")]
    pub k: usize,
    /// Overrides the choice implied by the recovery method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub include_dc: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemSection {
    pub b: f64,
    pub kappa: f64,
    pub delta: f64,
    /// Bound on `|y|`; computed from the signal (dense-grid mode) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    #[serde(default)]
    pub t_start: f64,
    pub t_obs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RecoverySection {
    #[serde(default)]
    pub method: RecoveryMethod,
    #[serde(default)]
    pub on_grid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<f64>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub variance: f64,
}

/// Overrides for the experiment runners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(rename = "L_max", default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<FriSignal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tem: Option<TemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<RecoverySection>,
    /// Firing instants for `recover`: a `.json` firing record or an `n,t_n` CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub firings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySection>,
}

fn missing(section: &str) -> Error {
    invalid(format!("configuration has no `{section}` section"))
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads a config file; a relative `firings` path is resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(f) = &cfg.firings {
            if f.is_relative() {
                let base = path.parent().unwrap_or_else(|| Path::new("."));
                cfg.firings = Some(base.join(f));
            }
        }
        Ok(cfg)
    }

    pub fn signal(&self) -> Result<&FriSignal> {
        self.signal.as_ref().ok_or_else(|| missing("signal"))
    }

    pub fn recovery(&self) -> RecoverySection {
        self.recovery.clone().unwrap_or_default()
    }

    /// Period from the signal section; falls back to 1 when only firings are given.
    pub fn period(&self) -> f64 {
        self.signal.as_ref().map_or(1.0, FriSignal::period)
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let k = self.kernel.as_ref().ok_or_else(|| missing("kernel"))?;
        let dc = k.include_dc.unwrap_or_else(|| self.recovery().method.include_dc());
        design(k.k, dc, self.period())
    }

    /// TEM parameters; without an explicit `c` the tight bound of the
    /// filtered signal is used.
    pub fn tem_params(&self, spec: Option<&KernelSpec>) -> Result<TemParams> {
        let t = self.tem.as_ref().ok_or_else(|| missing("tem"))?;
        let c = match (t.c, self.signal.as_ref(), spec) {
            (Some(c), _, _) => c,
            (None, Some(x), Some(spec)) => bound_c(x, spec, BoundMode::Grid)?,
            (None, _, _) => 0.0,
        };
        TemParams::new(t.b, t.kappa, t.delta, c)
    }

    pub fn window(&self) -> (f64, f64) {
        match &self.window {
            Some(w) => (w.t_start, w.t_obs),
            None => (0.0, self.period()),
        }
    }

    /// Model order: explicit `recovery.L`, else the order of the signal.
    pub fn model_order(&self) -> Result<usize> {
        match (self.recovery().l, &self.signal) {
            (Some(l), _) => Ok(l),
            (None, Some(x)) => Ok(x.order()),
            (None, None) => Err(invalid("model order unknown: set `recovery.L` or give a `signal`")),
        }
    }

    pub fn delay_model(&self) -> Result<DelayModel> {
        let r = self.recovery();
        if !r.on_grid {
            return Ok(DelayModel::OffGrid);
        }
        let resolution =
            r.grid_resolution.ok_or_else(|| invalid("on-grid recovery needs `recovery.grid_resolution`"))?;
        Ok(DelayModel::OnGrid { resolution })
    }

    /// Noise-study settings, starting from the reference configuration.
    pub fn mse_config(&self) -> Result<MseConfig> {
        let mut cfg = MseConfig::default();
        if let Some(x) = &self.signal {
            cfg.signal = x.clone();
        }
        if let Some(t) = &self.tem {
            cfg.b = t.b;
            cfg.kappa = t.kappa;
        }
        if let Some(n) = &self.noise {
            cfg.variance = n.variance;
        }
        if let Some(r) = &self.recovery {
            if let Some(g) = r.grid_resolution {
                cfg.grid_resolution = g;
            }
        }
        if let Some(s) = &self.study {
            if let Some(d) = &s.deltas {
                cfg.deltas = d.clone();
            }
            cfg.k = s.k.or(cfg.k);
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if cfg.deltas.is_empty() {
            return Err(invalid("threshold sweep is empty"));
        }
        Ok(cfg)
    }
}
