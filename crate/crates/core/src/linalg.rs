//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative singular-value cutoff used for every pseudo-inverse.
pub const SVD_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub x: CVector,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub residual_norm: f64,
}

impl LeastSquares {
    /// `σ_max/σ_min` over all singular values; infinite when rank deficient.
    pub fn condition_number(&self) -> f64 {
        condition_from(&self.singular_values)
    }
}

pub(crate) fn condition_from(sv: &[f64]) -> f64 {
    let max = sv.first().copied().unwrap_or(0.0);
    let min = sv.last().copied().unwrap_or(0.0);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn sorted_svd(a: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    if a.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return V^H".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = CMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let vt = CMatrix::from_fn(order.len(), vt.ncols(), |r, c| vt[(order[r], c)]);
    Ok((u, sv, vt))
}

/// Singular values of `a`, descending.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    Ok(sorted_svd(a)?.1)
}

pub fn condition_number(a: &CMatrix) -> Result<f64> {
    Ok(condition_from(&singular_values(a)?))
}

/// Minimum-norm least-squares solution through a truncated SVD.
pub fn lstsq(a: &CMatrix, b: &CVector, rtol: f64) -> Result<LeastSquares> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, right-hand side has {}",
            a.nrows(),
            b.len()
        )));
    }
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(Error::DimensionMismatch("empty system".into()));
    }
    let (u, sv, vt) = sorted_svd(a)?;
    let cutoff = rtol * sv[0];
    let rank = sv.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let mut x = CVector::zeros(a.ncols());
    for i in 0..rank {
        let ui = u.column(i);
        let coef = ui.dotc(b) / sv[i];
        for j in 0..a.ncols() {
            x[j] += vt[(i, j)].conj() * coef;
        }
    }
    let residual_norm = (a * &x - b).norm();
    // pad to the full column count so condition numbers see rank deficiency
    let mut full = sv;
    full.resize(a.ncols(), 0.0);
    Ok(LeastSquares { x, singular_values: full, rank, residual_norm })
}

/// Right singular vector of the smallest singular value, plus all singular
/// values (descending, padded with zeros to the column count).
pub fn null_vector(a: &CMatrix) -> Result<(CVector, Vec<f64>)> {
    let n = a.ncols();
    let padded;
    let m = if a.nrows() < n {
        padded = CMatrix::from_fn(n, n, |r, c| if r < a.nrows() { a[(r, c)] } else { Complex64::new(0.0, 0.0) });
        &padded
    } else {
        a
    };
    let (_, sv, vt) = sorted_svd(m)?;
    let last = vt.nrows() - 1;
    let v = CVector::from_fn(n, |j, _| vt[(last, j)].conj());
    let mut full = sv;
    full.resize(n, 0.0);
    Ok((v, full))
}

/// Roots of `Σ_i coeffs[i] z^{deg−i}` (highest power first).
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let lead_idx =
        coeffs.iter().position(|c| c.norm() > 0.0).ok_or_else(|| Error::Numerical("zero polynomial".into()))?;
    let p = &coeffs[lead_idx..];
    let deg = p.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = p[0];
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if lead.norm() < 1e-14 * scale {
        return Err(Error::Numerical("annihilating polynomial has a vanishing leading coefficient".into()));
    }
    let monic: Vec<Complex64> = p.iter().map(|c| c / lead).collect();
    let mut comp = CMatrix::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -monic[j + 1];
    }
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let eig =
        comp.schur().eigenvalues().ok_or_else(|| Error::Numerical("companion eigenvalues did not converge".into()))?;
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for &c in &monic {
            d = d * z + v;
            v = v * z + c;
        }
        (v, d)
    };
    Ok(eig
        .iter()
        .map(|&z0| {
            let mut z = z0;
            for _ in 0..3 {
                let (v, d) = eval(z);
                if d.norm() == 0.0 {
                    break;
                }
                let step = v / d;
                let cand = z - step;
                if eval(cand).0.norm() < v.norm() {
                    z = cand;
                } else {
                    break;
                }
            }
            z
        })
        .collect())
}
