use num_complex::Complex64;

use super::{delay_from_root, Method, RecoveredParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{lstsq, polynomial_roots, CMatrix, CVector, SVD_RTOL};
use crate::model::{FscVector, PulseShape};

/// Atoms correlating above this level are reported as a coherence warning.
const COHERENCE_WARN: f64 = 0.999;
const MAX_GRID_POINTS: usize = 1 << 20;
const MAX_SWAP_SWEEPS: usize = 64;
/// Pair swaps are only tried when one sweep needs at most this many fits.
const MAX_PAIR_TRIALS: usize = 5_000;

/// Orthogonal matching pursuit over delays on the grid `{0, Δ, …, T−Δ}`.
///
/// Atom `m` is `ĥ(kω₀) e^{−jkω₀mΔ}/T` over the available indices `k`, which
/// need not be consecutive. Each of the `L` iterations picks the atom most
/// correlated with the residual and re-projects the real amplitudes onto all
/// selected atoms.
///
/// With few coefficients the atoms are strongly coherent and the greedy pick
/// can land between two true spikes, so the greedy support is then polished
/// by single-atom swaps that strictly lower the residual, and by two-atom
/// swaps once single swaps stall and the grid is small enough. Supports
/// from a Toeplitz eigen-decomposition of the first `L` ratios are tried as
/// alternative starting points.
pub fn omp_recover(
    fscs: &FscVector,
    pulse: &PulseShape,
    l: usize,
    grid_resolution: f64,
    period: f64,
) -> Result<RecoveredParams> {
    if l == 0 {
        return Err(invalid("model order L must be positive"));
    }
    if !(grid_resolution.is_finite() && grid_resolution > 0.0 && period.is_finite() && period > 0.0) {
        return Err(invalid("grid resolution and period must be positive"));
    }
    let ratio = period / grid_resolution;
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio || m > MAX_GRID_POINTS as f64 {
        return Err(invalid(format!(
            "grid resolution {grid_resolution} must divide the period {period} into at most {MAX_GRID_POINTS} cells"
        )));
    }
    let m = m as usize;
    if l > m {
        return Err(invalid(format!("L={l} exceeds the {m} grid points")));
    }
    if fscs.is_empty() {
        return Err(invalid("no coefficients to match"));
    }
    let idx = fscs.indices();
    let omega0 = fscs.omega0();
    let spectra = idx.iter().map(|&k| pulse.spectrum(k, omega0)).collect::<Result<Vec<_>>>()?;
    // Amplitudes are real, so the fit is done on stacked real and imaginary
    // parts; a complex fit would let the ±k halves disagree.
    let rows = idx.len();
    let atom = |i: usize, j: usize| {
        spectra[i] * Complex64::from_polar(1.0 / period, -(idx[i] as f64) * omega0 * grid_resolution * j as f64)
    };
    let dict = CMatrix::from_fn(2 * rows, m, |i, j| {
        let v = atom(i % rows, j);
        Complex64::new(if i < rows { v.re } else { v.im }, 0.0)
    });
    let norms: Vec<f64> = dict.column_iter().map(|c| c.norm()).collect();
    if norms.iter().all(|&n| n == 0.0) {
        return Err(Error::VanishingSpectrum(idx[0]));
    }
    let coeffs = fscs.coeffs();
    let data = CVector::from_fn(2 * rows, |i, _| {
        let v = coeffs[i % rows];
        Complex64::new(if i < rows { v.re } else { v.im }, 0.0)
    });
    let mut residual = data.clone();
    let mut selected: Vec<usize> = Vec::with_capacity(l);
    let mut fit = None;
    for _ in 0..l {
        let corr = dict.ad_mul(&residual);
        let best = (0..m)
            .filter(|j| !selected.contains(j) && norms[*j] > 0.0)
            .max_by(|&a, &b| (corr[a].norm() / norms[a]).total_cmp(&(corr[b].norm() / norms[b])))
            .ok_or_else(|| Error::Numerical("no atom left to select".into()))?;
        selected.push(best);
        let sub = dict.select_columns(selected.iter());
        let ls = lstsq(&sub, &data, SVD_RTOL)?;
        residual = &data - &sub * &ls.x;
        fit = Some(ls);
    }
    let mut fit = fit.expect("at least one iteration");
    let mut best_res = residual.norm();
    for trial in toeplitz_supports(fscs, &spectra, l, m, grid_resolution, period) {
        let sub = dict.select_columns(trial.iter());
        let ls = lstsq(&sub, &data, SVD_RTOL)?;
        let r = (&data - &sub * &ls.x).norm();
        if r < best_res * (1.0 - 1e-12) {
            best_res = r;
            selected = trial;
            fit = ls;
        }
    }
    let floor = 1e-14 * data.norm();
    let usable: Vec<usize> = (0..m).filter(|&j| norms[j] > 0.0).collect();
    let pair_cost = l * l.saturating_sub(1) / 2 * usable.len() * usable.len() / 2;
    for _ in 0..MAX_SWAP_SWEEPS {
        if best_res <= floor {
            break;
        }
        let mut improved = None;
        let consider = |trial: Vec<usize>, best_res: &mut f64, improved: &mut Option<_>| -> Result<()> {
            let sub = dict.select_columns(trial.iter());
            let ls = lstsq(&sub, &data, SVD_RTOL)?;
            let r = (&data - &sub * &ls.x).norm();
            if r < *best_res * (1.0 - 1e-12) {
                *best_res = r;
                *improved = Some((trial, ls));
            }
            Ok(())
        };
        for pos in 0..selected.len() {
            for &cand in &usable {
                if !selected.contains(&cand) {
                    let mut trial = selected.clone();
                    trial[pos] = cand;
                    consider(trial, &mut best_res, &mut improved)?;
                }
            }
        }
        if improved.is_none() && l >= 2 && pair_cost <= MAX_PAIR_TRIALS {
            for p in 0..l {
                for q in p + 1..l {
                    for (ia, &a) in usable.iter().enumerate() {
                        if selected.contains(&a) {
                            continue;
                        }
                        for &b in &usable[ia + 1..] {
                            if !selected.contains(&b) {
                                let mut trial = selected.clone();
                                trial[p] = a;
                                trial[q] = b;
                                consider(trial, &mut best_res, &mut improved)?;
                            }
                        }
                    }
                }
            }
        }
        match improved {
            Some((trial, ls)) => {
                selected = trial;
                fit = ls;
            }
            None => break,
        }
    }
    let sub = dict.select_columns(selected.iter());
    residual = &data - &sub * &fit.x;

    let mut warnings = Vec::new();
    for (a, &i) in selected.iter().enumerate() {
        for &j in &selected[a + 1..] {
            let g = dict.column(i).dotc(&dict.column(j)).norm() / (norms[i] * norms[j]);
            if g > COHERENCE_WARN {
                warnings.push(format!("atoms at grid points {i} and {j} are coherent ({g:.6})"));
            }
        }
    }
    Ok(RecoveredParams {
        method: Method::Omp,
        amplitudes: fit.x.iter().map(|c| c.re).collect(),
        delays: selected.iter().map(|&j| j as f64 * grid_resolution).collect(),
        residual: residual.norm(),
        condition_number: fit.condition_number(),
        degenerate: false,
        warnings,
    }
    .sorted())
}

/// Candidate supports from the ratios `r[k]`, `|k| ≤ L`, with the unknown
/// `r[0] = Σ a_ℓ/T` left free. Real amplitudes make the `(L+1)×(L+1)`
/// Toeplitz matrix `[r[i−j]]` Hermitian, so each eigenvector of its
/// zero-diagonal part annihilates the sequence for `r[0] = −λ`; the roots
/// of every eigenvector, snapped to the grid, give one candidate.
fn toeplitz_supports(
    fscs: &FscVector,
    spectra: &[Complex64],
    l: usize,
    m: usize,
    grid_resolution: f64,
    period: f64,
) -> Vec<Vec<usize>> {
    let idx = fscs.indices();
    let mut r = vec![Complex64::new(0.0, 0.0); l + 1];
    for (k, slot) in r.iter_mut().enumerate().skip(1) {
        let Some(pos) = idx.iter().position(|&i| i == k as i64) else { return Vec::new() };
        if spectra[pos].norm() == 0.0 {
            return Vec::new();
        }
        *slot = fscs.coeffs()[pos] / spectra[pos];
    }
    let t0 = CMatrix::from_fn(l + 1, l + 1, |i, j| if i >= j { r[i - j] } else { r[j - i].conj() });
    let eig = t0.symmetric_eigen();
    let mut out = Vec::new();
    for v in eig.eigenvectors.column_iter() {
        let coeffs: Vec<Complex64> = v.iter().copied().collect();
        let Ok(roots) = polynomial_roots(&coeffs) else { continue };
        let mut support: Vec<usize> =
            roots.iter().map(|&u| (delay_from_root(u, period) / grid_resolution).round() as usize % m).collect();
        support.sort_unstable();
        support.dedup();
        if support.len() == l {
            out.push(support);
        }
    }
    out
}
