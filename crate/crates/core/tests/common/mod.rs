//! Independent reference computations used as test oracles. Nothing here
//! calls into the library's numerical routines.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Composite 5-point Gauss-Legendre rule over `panels` equal panels.
pub fn gauss5(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] =
        [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for i in 0..5 {
            acc += W[i] * f(c + 0.5 * h * X[i]);
        }
    }
    0.5 * h * acc
}

/// Centered cardinal B-spline of order `n` by the Cox-de Boor recursion on
/// the knots `−(n+1)/2, …, (n+1)/2`.
pub fn cox_de_boor(n: usize, x: f64) -> f64 {
    let shift = (n + 1) as f64 / 2.0;
    let u = x + shift;
    let knots: Vec<f64> = (0..=n + 1).map(|i| i as f64).collect();
    let mut basis: Vec<f64> = (0..=n).map(|i| if u >= knots[i] && u < knots[i + 1] { 1.0 } else { 0.0 }).collect();
    for d in 1..=n {
        for i in 0..=n - d {
            let left = (u - knots[i]) / d as f64 * basis[i];
            let right = (knots[i + d + 1] - u) / d as f64 * basis[i + 1];
            basis[i] = left + right;
        }
    }
    basis[0]
}

/// Periodized spline stream `Σ_ℓ Σ_m a_ℓ β(s(t − τ_ℓ − mT))` in the time domain.
pub fn spline_stream(order: usize, scale: f64, amps: &[f64], delays: &[f64], period: f64, t: f64) -> f64 {
    let half = (order + 1) as f64 / 2.0 / scale;
    let reach = (half / period).ceil() as i64 + 1;
    let mut acc = 0.0;
    for (&a, &tau) in amps.iter().zip(delays) {
        for m in -reach..=reach {
            acc += a * cox_de_boor(order, scale * (t - tau - m as f64 * period));
        }
    }
    acc
}

/// Dirac-stream Fourier coefficient `(1/T) Σ a_ℓ e^{−jkω₀τ_ℓ}`: the sifting
/// property evaluates the defining integral exactly.
pub fn dirac_fsc(amps: &[f64], delays: &[f64], period: f64, k: i64) -> Complex64 {
    let w = 2.0 * PI / period;
    amps.iter().zip(delays).map(|(&a, &t)| Complex64::from_polar(a / period, -(k as f64) * w * t)).sum()
}

/// Sum-of-sincs kernel written out as a cosine series.
pub fn sos_kernel(k: usize, include_dc: bool, period: f64, t: f64) -> f64 {
    let w = 2.0 * PI / period;
    let mut acc = if include_dc { 1.0 } else { 0.0 };
    for i in 1..=k {
        acc += 2.0 * (i as f64 * w * t).cos();
    }
    acc
}

/// Maximum of `f` on a uniform grid of `n` points over one period.
pub fn brute_max(f: &dyn Fn(f64) -> f64, period: f64, n: usize) -> f64 {
    (0..n).map(|i| f(period * i as f64 / n as f64).abs()).fold(0.0, f64::max)
}

/// Least-squares residual and real amplitudes of `data ≈ Σ_j c_j atoms[j]`
/// by the normal equations, solved with Gaussian elimination.
pub fn ls_fit(atoms: &[Vec<Complex64>], data: &[Complex64]) -> (Vec<f64>, f64) {
    let n = atoms.len();
    // real parameterization: stack real and imaginary parts
    let mut g = vec![vec![0.0; n]; n];
    let mut r = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = atoms[i].iter().zip(&atoms[j]).map(|(a, b)| (a.conj() * b).re).sum();
        }
        r[i] = atoms[i].iter().zip(data).map(|(a, d)| (a.conj() * d).re).sum();
    }
    let c = solve_dense(g, r);
    let res: f64 = data
        .iter()
        .enumerate()
        .map(|(m, d)| {
            let fit: Complex64 = (0..n).map(|j| atoms[j][m] * c[j]).sum();
            (d - fit).norm_sqr()
        })
        .sum::<f64>()
        .sqrt();
    (c, res)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (top, bottom) = a.split_at_mut(row);
            for (x, p) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Dictionary atom for a pulse spectrum sampled at `indices`.
pub fn atom(spectrum: &[Complex64], indices: &[i64], period: f64, tau: f64) -> Vec<Complex64> {
    let w = 2.0 * PI / period;
    indices
        .iter()
        .zip(spectrum)
        .map(|(&k, &h)| h * Complex64::from_polar(1.0 / period, -(k as f64) * w * tau))
        .collect()
}

/// Exhaustive `L`-sparse search over grid supports; returns the support
/// with the smallest least-squares residual.
pub fn exhaustive_support(
    spectrum: &[Complex64],
    indices: &[i64],
    data: &[Complex64],
    l: usize,
    m: usize,
    period: f64,
) -> Vec<usize> {
    let atoms: Vec<Vec<Complex64>> =
        (0..m).map(|j| atom(spectrum, indices, period, j as f64 * period / m as f64)).collect();
    let mut best = (f64::INFINITY, vec![]);
    let mut support = vec![0usize; l];
    fn rec(
        pos: usize,
        start: usize,
        support: &mut Vec<usize>,
        atoms: &[Vec<Complex64>],
        data: &[Complex64],
        best: &mut (f64, Vec<usize>),
    ) {
        if pos == support.len() {
            let chosen: Vec<Vec<Complex64>> = support.iter().map(|&j| atoms[j].clone()).collect();
            let (_, r) = ls_fit(&chosen, data);
            if r < best.0 {
                *best = (r, support.clone());
            }
            return;
        }
        for j in start..atoms.len() {
            support[pos] = j;
            rec(pos + 1, j + 1, support, atoms, data, best);
        }
    }
    rec(0, 0, &mut support, &atoms, data, &mut best);
    best.1
}

/// Spectral-estimation oracle: periodogram search with deflation on a fine
/// delay grid, then joint Gauss-Newton refinement of all delays with
/// amplitudes eliminated by least squares (variable projection).
pub fn grid_search_delays(ratios: &[(i64, Complex64)], l: usize, period: f64, grid_step: f64) -> (Vec<f64>, Vec<f64>) {
    let idx: Vec<i64> = ratios.iter().map(|r| r.0).collect();
    let data: Vec<Complex64> = ratios.iter().map(|r| r.1).collect();
    let ones = vec![Complex64::new(1.0, 0.0); idx.len()];
    let n_grid = (period / grid_step).round() as usize;
    let mut delays: Vec<f64> = Vec::new();
    for _ in 0..l {
        let atoms: Vec<Vec<Complex64>> = delays.iter().map(|&t| atom(&ones, &idx, period, t)).collect();
        let resid: Vec<Complex64> = if atoms.is_empty() {
            data.clone()
        } else {
            let (c, _) = ls_fit(&atoms, &data);
            data.iter()
                .enumerate()
                .map(|(m, d)| d - (0..atoms.len()).map(|j| atoms[j][m] * c[j]).sum::<Complex64>())
                .collect()
        };
        let mut best = (0.0, 0.0);
        for g in 0..n_grid {
            let t = g as f64 * grid_step;
            let a = atom(&ones, &idx, period, t);
            let c: Complex64 = a.iter().zip(&resid).map(|(a, r)| a.conj() * r).sum();
            if c.norm() > best.0 {
                best = (c.norm(), t);
            }
        }
        delays.push(best.1);
    }
    let cost = |d: &[f64]| {
        let atoms: Vec<Vec<Complex64>> = d.iter().map(|&t| atom(&ones, &idx, period, t)).collect();
        ls_fit(&atoms, &data).1
    };
    let mut h = grid_step;
    for _ in 0..20_000 {
        let base = cost(&delays);
        let mut moved = false;
        for i in 0..l {
            for dir in [-1.0, 1.0] {
                let mut trial = delays.clone();
                trial[i] += dir * h;
                if cost(&trial) < base {
                    delays = trial;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            h *= 0.5;
            if h < 1e-15 {
                break;
            }
        }
    }
    let delays: Vec<f64> = delays.into_iter().map(|t| t.rem_euclid(period)).collect();
    let atoms: Vec<Vec<Complex64>> = delays.iter().map(|&t| atom(&ones, &idx, period, t)).collect();
    let (amps, _) = ls_fit(&atoms, &data);
    let mut pairs: Vec<(f64, f64)> = delays.into_iter().zip(amps).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub fn circ_dist(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Delays at least `min_sep` apart (circularly), sorted, with amplitudes
/// bounded away from zero.
pub fn separated_params(rng: &mut impl Rng, l: usize, min_sep: f64, period: f64) -> (Vec<f64>, Vec<f64>) {
    loop {
        let mut d: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..period)).collect();
        d.sort_by(f64::total_cmp);
        let ok = (0..l).all(|i| circ_dist(d[i], d[(i + 1) % l], period) >= min_sep || l == 1);
        if ok {
            let a = (0..l)
                .map(|_| {
                    let m: f64 = rng.random_range(0.2..1.0);
                    if rng.random_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                })
                .collect();
            return (a, d);
        }
    }
}
