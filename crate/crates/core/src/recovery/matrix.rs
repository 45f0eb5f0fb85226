//! Linear map from Fourier coefficients to encoder measurements.
//!
//! Integrating `y(t) = Σ x̂[k] e^{jkω₀t}` between consecutive firings gives
//! `y_n = Σ_{k≠0} x̂[k] (e^{jkω₀t_{n+1}} − e^{jkω₀t_n})/(jkω₀) + x̂[0](t_{n+1} − t_n)`,
//! i.e. `y = M u` with unknowns `u_k = x̂[k]/(jkω₀)` (`u_0 = x̂[0]`). With the
//! DC column present `M` is the matrix `A`; without it, `B`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoder::check_increasing;
use crate::error::{invalid, Error, Result};
use crate::linalg::{lstsq, CMatrix, CVector, SVD_RTOL};
use crate::model::FscVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    /// DC column included, `(N−1) × (2K+1)`.
    A,
    /// DC column removed, `(N−1) × 2K`.
    B,
}

impl MatrixKind {
    pub fn includes_dc(self) -> bool {
        matches!(self, MatrixKind::A)
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementMatrix {
    kind: MatrixKind,
    entries: CMatrix,
    instants: Vec<f64>,
    k: usize,
    omega0: f64,
}

fn column_indices(kind: MatrixKind, k: usize) -> Vec<i64> {
    let k = k as i64;
    (-k..=k).filter(|&i| kind.includes_dc() || i != 0).collect()
}

/// Builds `A` or `B` from firing instants lying within one period.
pub fn build_matrix(instants: &[f64], k: usize, omega0: f64, kind: MatrixKind) -> Result<MeasurementMatrix> {
    if instants.len() < 2 {
        return Err(invalid("need at least two firing instants"));
    }
    if k == 0 {
        return Err(invalid("K must be positive"));
    }
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(invalid("omega0 must be positive"));
    }
    check_increasing(instants)?;
    let period = 2.0 * PI / omega0;
    let span = instants[instants.len() - 1] - instants[0];
    if span >= period {
        return Err(Error::WindowExceedsPeriod { span, period });
    }
    let cols = column_indices(kind, k);
    let rows = instants.len() - 1;
    let entries = CMatrix::from_fn(rows, cols.len(), |n, c| {
        let (t0, t1) = (instants[n], instants[n + 1]);
        match cols[c] {
            0 => Complex64::new(t1 - t0, 0.0),
            kk => {
                let w = kk as f64 * omega0;
                Complex64::from_polar(1.0, w * t1) - Complex64::from_polar(1.0, w * t0)
            }
        }
    });
    Ok(MeasurementMatrix { kind, entries, instants: instants.to_vec(), k, omega0 })
}

impl MeasurementMatrix {
    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    #[allow(non_snake_case)]
    pub fn K(&self) -> usize {
        self.k
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Harmonic index of each column.
    pub fn column_indices(&self) -> Vec<i64> {
        column_indices(self.kind, self.k)
    }

    /// `D`, the `(N−1) × N` first-difference operator.
    pub fn difference_operator(&self) -> DMatrix<f64> {
        let n = self.instants.len();
        DMatrix::from_fn(n - 1, n, |r, c| {
            if c == r {
                -1.0
            } else if c == r + 1 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// `V`, the `N × |columns|` matrix with rows `[e^{jkω₀t_n}]` (and `t_n` in
    /// the DC column), so that the measurement matrix equals `D·V`.
    pub fn vandermonde(&self) -> CMatrix {
        let cols = self.column_indices();
        CMatrix::from_fn(self.instants.len(), cols.len(), |n, c| {
            let t = self.instants[n];
            match cols[c] {
                0 => Complex64::new(t, 0.0),
                kk => Complex64::from_polar(1.0, kk as f64 * self.omega0 * t),
            }
        })
    }

    /// Maps coefficients to the unknown vector `u_k = x̂[k]/(jkω₀)`, `u_0 = x̂[0]`.
    pub fn scale_unknowns(&self, fscs: &FscVector) -> Result<CVector> {
        let cols = self.column_indices();
        let mut u = CVector::zeros(cols.len());
        for (i, &k) in cols.iter().enumerate() {
            let v = fscs.get(k).ok_or_else(|| invalid(format!("coefficient {k} missing")))?;
            u[i] = if k == 0 { v } else { v / Complex64::new(0.0, k as f64 * self.omega0) };
        }
        Ok(u)
    }

    /// Forward model: measurement vector produced by the given coefficients.
    pub fn apply(&self, fscs: &FscVector) -> Result<Vec<f64>> {
        let y = &self.entries * self.scale_unknowns(fscs)?;
        Ok(y.iter().map(|v| v.re).collect())
    }

    /// Matrix as CSV (`row,col,k,re,im`), for debugging.
    pub fn to_csv(&self) -> String {
        let cols = self.column_indices();
        let mut out = String::from("row,col,k,re,im\n");
        for r in 0..self.entries.nrows() {
            for (c, k) in cols.iter().enumerate() {
                let v = self.entries[(r, c)];
                out.push_str(&format!("{r},{c},{k},{},{}\n", crate::kernel::fmt17(v.re), crate::kernel::fmt17(v.im)));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct FscSolution {
    /// Recovered coefficients, exactly conjugate symmetric.
    pub fscs: FscVector,
    pub condition_number: f64,
    pub residual_norm: f64,
    pub rank: usize,
    /// `max |x̂[k] − x̂[−k]*|` before symmetrization.
    pub asymmetry: f64,
    /// Set when `N < 2K+2`: the minimum-norm solution is returned.
    pub underdetermined: bool,
}

/// Least-squares estimate of the retained Fourier coefficients from the
/// measurements, via a truncated-SVD pseudo-inverse.
pub fn solve_fsc(matrix: &MeasurementMatrix, y: &[f64]) -> Result<FscSolution> {
    if matrix.entries.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows but {} measurements were given",
            matrix.entries.nrows(),
            y.len()
        )));
    }
    let rhs = CVector::from_iterator(y.len(), y.iter().map(|&v| Complex64::new(v, 0.0)));
    let ls = lstsq(&matrix.entries, &rhs, SVD_RTOL)?;
    let cols = matrix.column_indices();
    let raw: Vec<Complex64> = cols
        .iter()
        .zip(ls.x.iter())
        .map(|(&k, &u)| if k == 0 { u } else { u * Complex64::new(0.0, k as f64 * matrix.omega0) })
        .collect();
    let raw = FscVector::new(cols.clone(), raw, matrix.omega0)?;
    let asymmetry = raw.max_asymmetry();
    let sym: Vec<Complex64> = raw
        .iter()
        .map(|(k, v)| {
            let w = raw.get(-k).unwrap_or(v);
            if k == 0 {
                Complex64::new(v.re, 0.0)
            } else {
                0.5 * (v + w.conj())
            }
        })
        .collect();
    Ok(FscSolution {
        fscs: FscVector::new(cols, sym, matrix.omega0)?,
        condition_number: ls.condition_number(),
        residual_norm: ls.residual_norm,
        rank: ls.rank,
        asymmetry,
        underdetermined: matrix.instants.len() < 2 * matrix.k + 2,
    })
}
