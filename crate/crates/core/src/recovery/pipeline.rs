use super::{annihilating_filter, build_matrix, omp_recover, solve_fsc, MatrixKind, Method, RecoveredParams};
use crate::encoder::{measurements, TemParams};
use crate::error::{invalid, Error, Result};
use crate::kernel::{design, KernelSpec};
use crate::model::{ratio_sequence, PulseShape};

/// Measurements at or below this fraction of `κδ` are treated as signal-free.
pub const DEGENERATE_LEVEL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayModel {
    /// Arbitrary delays; annihilating filter on consecutive coefficients.
    OffGrid,
    /// Delays on `{0, Δ, …, T−Δ}`; orthogonal matching pursuit.
    OnGrid { resolution: f64 },
}

/// Full recovery chain for either kernel.
///
/// Requirements: `N ≥ 2K+2` instants in one period, and `K ≥ L` except for
/// off-grid delays without the DC component, which need `K ≥ 2L`.
pub fn reconstruct(
    instants: &[f64],
    params: &TemParams,
    spec: &KernelSpec,
    pulse: &PulseShape,
    l: usize,
    delays: DelayModel,
) -> Result<RecoveredParams> {
    let k = spec.K();
    if l == 0 {
        return Err(invalid("model order L must be positive"));
    }
    let required = 2 * k + 2;
    if instants.len() < required {
        return Err(Error::InsufficientFirings { got: instants.len(), required });
    }
    match (spec.include_dc(), delays) {
        (false, DelayModel::OffGrid) if k < 2 * l => return Err(Error::OffGridOrder { k, l }),
        _ if k < l => return Err(invalid(format!("recovery needs K >= L (K={k}, L={l})"))),
        _ => {}
    }
    let kind = if spec.include_dc() { MatrixKind::A } else { MatrixKind::B };
    let y = measurements(instants, params)?;
    let matrix = build_matrix(instants, k, spec.omega0(), kind)?;
    let solution = solve_fsc(&matrix, &y)?;
    let period = spec.period();

    let level = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if level <= DEGENERATE_LEVEL * params.threshold() {
        return Ok(RecoveredParams {
            method: match delays {
                DelayModel::OffGrid => Method::Annihilating,
                DelayModel::OnGrid { .. } => Method::Omp,
            },
            amplitudes: vec![0.0; l],
            delays: vec![0.0; l],
            residual: solution.residual_norm,
            condition_number: solution.condition_number,
            degenerate: true,
            warnings: vec!["measurements carry no signal; delays are unconstrained".into()],
        });
    }

    let mut out = match delays {
        DelayModel::OffGrid => {
            let ratios = ratio_sequence(&solution.fscs, pulse)?;
            let ratios = if spec.include_dc() { ratios } else { ratios.filter_indices(|i| i > 0) };
            annihilating_filter(&ratios, l, period)?
        }
        DelayModel::OnGrid { resolution } => omp_recover(&solution.fscs, pulse, l, resolution, period)?,
    };
    out.condition_number = solution.condition_number;
    if solution.underdetermined {
        out.warnings.push("fewer than 2K+2 firings: minimum-norm coefficients".into());
    }
    Ok(out)
}

/// Recovery with the DC-including kernel and matrix `A`; off-grid delays.
pub fn reconstruct_alg1(
    instants: &[f64],
    params: &TemParams,
    k: usize,
    pulse: &PulseShape,
    l: usize,
    period: f64,
) -> Result<RecoveredParams> {
    let spec = design(k, true, period)?;
    reconstruct(instants, params, &spec, pulse, l, DelayModel::OffGrid)
}

/// Recovery with the DC-free kernel and matrix `B`.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_alg2(
    instants: &[f64],
    params: &TemParams,
    k: usize,
    pulse: &PulseShape,
    l: usize,
    period: f64,
    delays_on_grid: bool,
    grid_resolution: f64,
) -> Result<RecoveredParams> {
    let spec = design(k, false, period)?;
    let model = if delays_on_grid { DelayModel::OnGrid { resolution: grid_resolution } } else { DelayModel::OffGrid };
    reconstruct(instants, params, &spec, pulse, l, model)
}
