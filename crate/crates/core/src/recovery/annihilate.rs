use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Method, RecoveredParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{lstsq, null_vector, polynomial_roots, CMatrix, CVector, SVD_RTOL};
use crate::model::FscVector;

/// Singular-value gap below which the annihilation system is declared to
/// have more than one null direction.
const ORDER_RTOL: f64 = 1e-13;

/// Longest run of consecutive indices as `(start, len)`; ties go to the run
/// starting at the larger index.
fn longest_run(indices: &[i64]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut start = 0;
    for i in 0..indices.len() {
        if i > 0 && indices[i] != indices[i - 1] + 1 {
            start = i;
        }
        let len = i + 1 - start;
        if len >= best.1 {
            best = (start, len);
        }
    }
    best
}

/// Maps an annihilating-filter root `u = e^{−jω₀τ}` to a delay in `[0, T)`.
pub fn delay_from_root(root: Complex64, period: f64) -> f64 {
    let tau = (-root.arg() * period / (2.0 * PI)).rem_euclid(period);
    if tau >= period - 1e-12 * period {
        0.0
    } else {
        tau
    }
}

/// Recovers `L` delays and amplitudes from a sum-of-exponentials sequence
/// `r[k] = (1/T) Σ a_ℓ e^{−jkω₀τ_ℓ}`.
///
/// The filter is the smallest right singular vector of the Toeplitz system
/// built on the longest consecutive index run; its roots give the delays and
/// a Vandermonde least-squares fit over every supplied index gives the
/// amplitudes.
pub fn annihilating_filter(ratios: &FscVector, l: usize, period: f64) -> Result<RecoveredParams> {
    if l == 0 {
        return Err(invalid("model order L must be positive"));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(invalid("period must be positive"));
    }
    let idx = ratios.indices();
    let vals = ratios.coeffs();
    let (start, len) = longest_run(idx);
    if len < 2 * l {
        return Err(Error::InsufficientConsecutive { needed: 2 * l, available: len });
    }
    if vals.iter().all(|v| v.norm() == 0.0) {
        return Ok(RecoveredParams {
            method: Method::Annihilating,
            amplitudes: vec![0.0; l],
            delays: vec![0.0; l],
            residual: 0.0,
            condition_number: f64::INFINITY,
            degenerate: true,
            warnings: vec!["all coefficients vanish; delays are unconstrained".into()],
        });
    }
    let run = &vals[start..start + len];
    let rows = len - l;
    let toeplitz = CMatrix::from_fn(rows, l + 1, |i, j| run[l + i - j]);
    let (filter, sv) = null_vector(&toeplitz)?;
    if l >= 1 && sv[l - 1] <= ORDER_RTOL * sv[0] {
        return Err(Error::ModelOrderMismatch(l));
    }
    let coeffs: Vec<Complex64> = filter.iter().copied().collect();
    let roots = polynomial_roots(&coeffs)?;
    if roots.len() != l {
        return Err(Error::Numerical(format!("expected {l} roots, found {}", roots.len())));
    }
    let mut roots: Vec<Complex64> = roots.into_iter().map(|u| u / u.norm()).collect();
    roots.sort_by(|a, b| delay_from_root(*a, period).total_cmp(&delay_from_root(*b, period)));
    let delays: Vec<f64> = roots.iter().map(|&u| delay_from_root(u, period)).collect();

    // amplitudes: r[k] = Σ_ℓ (a_ℓ/T) u_ℓ^k
    let omega0 = ratios.omega0();
    let v = CMatrix::from_fn(idx.len(), l, |i, j| {
        Complex64::from_polar(1.0 / period, -(idx[i] as f64) * omega0 * delays[j])
    });
    let rhs = CVector::from_column_slice(vals);
    let fit = lstsq(&v, &rhs, SVD_RTOL)?;
    let amplitudes = fit.x.iter().map(|c| c.re).collect();
    Ok(RecoveredParams {
        method: Method::Annihilating,
        amplitudes,
        delays,
        residual: fit.residual_norm,
        condition_number: fit.condition_number(),
        degenerate: false,
        warnings: Vec::new(),
    }
    .sorted())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FriSignal, PulseShape};

    #[test]
    fn runs() {
        assert_eq!(longest_run(&[-3, -2, -1, 1, 2, 3]), (3, 3));
        assert_eq!(longest_run(&[-2, -1, 0, 1, 2]), (0, 5));
        assert_eq!(longest_run(&[1, 3, 4]), (1, 2));
    }

    #[test]
    fn single_exponential_closed_form() {
        let x = FriSignal::new(PulseShape::Dirac, vec![2.0], vec![0.25], 1.0).unwrap();
        let r = x.fscs(&[-1, 0, 1]).unwrap();
        let p = annihilating_filter(&r, 1, 1.0).unwrap();
        assert!((p.delays[0] - 0.25).abs() < 1e-12);
        assert!((p.amplitudes[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_consecutive() {
        let x = FriSignal::new(PulseShape::Dirac, vec![1.0, 1.0], vec![0.1, 0.5], 1.0).unwrap();
        let r = x.fscs(&[-2, -1, 1, 2]).unwrap();
        assert!(matches!(
            annihilating_filter(&r, 2, 1.0),
            Err(Error::InsufficientConsecutive { needed: 4, available: 2 })
        ));
    }

    #[test]
    fn order_mismatch_detected() {
        // one pulse, but two requested
        let x = FriSignal::new(PulseShape::Dirac, vec![1.0], vec![0.3], 1.0).unwrap();
        let r = x.fscs(&[-3, -2, -1, 0, 1, 2, 3]).unwrap();
        assert!(matches!(annihilating_filter(&r, 2, 1.0), Err(Error::ModelOrderMismatch(2))));
    }

    #[test]
    fn delay_wraps_near_period() {
        let u = Complex64::from_polar(1.0, 1e-14);
        assert_eq!(delay_from_root(u, 1.0), 0.0);
    }
}
