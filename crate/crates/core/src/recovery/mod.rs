//! Recovery of FRI parameters from firing instants.
//!
//! The chain is: measurements → measurement matrix (`A` with DC, `B`
//! without) → pseudo-inverse estimate of the retained Fourier coefficients →
//! spectral estimation, either the annihilating filter (off-grid delays) or
//! orthogonal matching pursuit (delays on a known grid).

mod annihilate;
mod matrix;
mod nonperiodic;
mod omp;
mod pipeline;

pub use annihilate::{annihilating_filter, delay_from_root};
pub use matrix::{build_matrix, solve_fsc, FscSolution, MatrixKind, MeasurementMatrix};
pub use nonperiodic::{periodize_kernel, NonperiodicSignal, PeriodizedKernel};
pub use omp::omp_recover;
pub use pipeline::{reconstruct, reconstruct_alg1, reconstruct_alg2, DelayModel, DEGENERATE_LEVEL};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Annihilating,
    Omp,
}

/// Estimated amplitudes and delays, sorted by delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveredParams {
    pub method: Method,
    pub amplitudes: Vec<f64>,
    pub delays: Vec<f64>,
    pub residual: f64,
    /// Condition number of the linear system behind the estimate; `null` in
    /// JSON when infinite.
    #[serde(with = "nullable_f64")]
    pub condition_number: f64,
    /// The measurements carried no signal; delays are meaningless.
    #[serde(skip)]
    pub degenerate: bool,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl RecoveredParams {
    pub(crate) fn sorted(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.delays.len()).collect();
        order.sort_by(|&i, &j| self.delays[i].total_cmp(&self.delays[j]));
        self.delays = order.iter().map(|&i| self.delays[i]).collect();
        self.amplitudes = order.iter().map(|&i| self.amplitudes[i]).collect();
        self
    }

    pub fn order(&self) -> usize {
        self.delays.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: RecoveredParams = serde_json::from_str(text)?;
        if p.amplitudes.len() != p.delays.len() {
            return Err(crate::error::Error::DimensionMismatch("amplitudes and delays differ in length".into()));
        }
        Ok(p)
    }
}

mod nullable_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Shortest distance between two delays on the circle of circumference `period`.
pub fn wrapped_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}
