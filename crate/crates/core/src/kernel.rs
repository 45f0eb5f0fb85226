//! Sum-of-sincs sampling kernel and the filtered signal it produces.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{FriSignal, FscVector};

/// Grid points per period used by the tight amplitude bound.
pub const BOUND_GRID_POINTS: usize = 1 << 16;

/// SoS kernel passing the harmonics `{−K..K}` (or `{−K..−1, 1..K}` without DC).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelDoc", into = "KernelDoc")]
pub struct KernelSpec {
    k: usize,
    include_dc: bool,
    period: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelDoc {
    #[serde(rename = "K")]
    k: usize,
    include_dc: bool,
    period: f64,
}

impl TryFrom<KernelDoc> for KernelSpec {
    type Error = Error;
    fn try_from(d: KernelDoc) -> Result<Self> {
        design(d.k, d.include_dc, d.period)
    }
}

impl From<KernelSpec> for KernelDoc {
    fn from(s: KernelSpec) -> Self {
        KernelDoc { k: s.k, include_dc: s.include_dc, period: s.period }
    }
}

/// Largest supported `K`; keeps index arithmetic and matrix sizes sane.
pub const MAX_K: usize = 4096;

pub fn design(k: usize, include_dc: bool, period: f64) -> Result<KernelSpec> {
    if k == 0 || k > MAX_K {
        return Err(invalid(format!("K must be in 1..={MAX_K}")));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(invalid("period must be positive"));
    }
    Ok(KernelSpec { k, include_dc, period })
}

impl KernelSpec {
    #[allow(non_snake_case)]
    pub fn K(&self) -> usize {
        self.k
    }

    pub fn include_dc(&self) -> bool {
        self.include_dc
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// The index set `𝒦`, sorted.
    pub fn indices(&self) -> Vec<i64> {
        let k = self.k as i64;
        (-k..=k).filter(|&i| self.include_dc || i != 0).collect()
    }

    pub fn len(&self) -> usize {
        2 * self.k + usize::from(self.include_dc)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i64) -> bool {
        k.unsigned_abs() as usize <= self.k && (self.include_dc || k != 0)
    }

    /// Time-domain kernel `g(t) = Σ_{k∈𝒦} e^{jkω₀t}` on `(−T/2, T/2]`, zero elsewhere.
    pub fn eval(&self, t: f64) -> f64 {
        let half = self.period / 2.0;
        if t <= -half || t > half {
            return 0.0;
        }
        self.eval_periodic(t)
    }

    /// The trigonometric polynomial behind `g`, without the support window.
    pub fn eval_periodic(&self, t: f64) -> f64 {
        let w = self.omega0() * t;
        let s: f64 = (1..=self.k).map(|k| (k as f64 * w).cos()).sum();
        2.0 * s + if self.include_dc { 1.0 } else { 0.0 }
    }

    /// `‖g‖_∞ = |𝒦|`, attained at `t = 0`.
    pub fn sup_norm(&self) -> f64 {
        self.len() as f64
    }

    /// CSV samples of `g(t)` over one support window, columns `t,g`.
    pub fn samples_csv(&self, points: usize) -> String {
        let mut out = String::from("t,g\n");
        let n = points.max(2);
        let half = self.period / 2.0;
        for i in 0..n {
            // (−T/2, T/2]
            let t = -half + self.period * (i + 1) as f64 / n as f64;
            let _ = writeln!(out, "{},{}", fmt17(t), fmt17(self.eval(t)));
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Floating-point text with 17 significant digits.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `y(t) = Σ_{k∈𝒦} x̂[k] e^{jkω₀t}`, the kernel output fed to the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSignal {
    fscs: FscVector,
}

impl FilteredSignal {
    /// Wraps a coefficient set; requires conjugate symmetry so that `y` is real.
    pub fn new(fscs: FscVector) -> Result<Self> {
        for (k, v) in fscs.iter() {
            let Some(w) = fscs.get(-k) else {
                return Err(invalid(format!("index {k} has no conjugate partner")));
            };
            if (v - w.conj()).norm() > 1e-12 * v.norm().max(w.norm()) {
                return Err(invalid(format!("coefficients not conjugate symmetric at k={k}")));
            }
        }
        Ok(Self { fscs })
    }

    pub fn zero(spec: &KernelSpec) -> Self {
        let idx = spec.indices();
        let n = idx.len();
        Self {
            fscs: FscVector::new(idx, vec![Complex64::new(0.0, 0.0); n], spec.omega0())
                .expect("kernel indices are sorted"),
        }
    }

    pub fn fscs(&self) -> &FscVector {
        &self.fscs
    }

    pub fn period(&self) -> f64 {
        self.fscs.period()
    }

    pub fn omega0(&self) -> f64 {
        self.fscs.omega0()
    }

    pub fn dc(&self) -> f64 {
        self.fscs.get(0).map_or(0.0, |v| v.re)
    }

    /// Coefficients on the positive indices, as `(k, x̂[k])`.
    fn positive(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.fscs.iter().filter(|(k, _)| *k > 0)
    }

    /// `y(t)`, evaluated as `x̂[0] + 2 Re Σ_{k>0} x̂[k] e^{jkω₀t}`.
    pub fn eval(&self, t: f64) -> f64 {
        let w = self.omega0() * t;
        let s: f64 = self.positive().map(|(k, v)| (v * Complex64::from_polar(1.0, k as f64 * w)).re).sum();
        self.dc() + 2.0 * s
    }

    /// `∫_a^b y(s) ds` from the closed-form primitive.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let w0 = self.omega0();
        let s: f64 = self
            .positive()
            .map(|(k, v)| {
                let kw = k as f64 * w0;
                let d = Complex64::from_polar(1.0, kw * b) - Complex64::from_polar(1.0, kw * a);
                (v * d / Complex64::new(0.0, kw)).re
            })
            .sum();
        self.dc() * (b - a) + 2.0 * s
    }

    /// Samples `y` on `n` uniform points of `[0, T)`.
    pub fn sample_grid(&self, n: usize) -> Vec<f64> {
        let w0 = self.omega0();
        let dt = self.period() / n as f64;
        let pos: Vec<(i64, Complex64)> = self.positive().collect();
        let kmax = pos.last().map_or(0, |p| p.0) as usize;
        let mut dense = vec![Complex64::new(0.0, 0.0); kmax + 1];
        for (k, v) in pos {
            dense[k as usize] = v;
        }
        let dc = self.dc();
        (0..n)
            .map(|i| {
                let z = Complex64::from_polar(1.0, w0 * dt * i as f64);
                // Horner in z over k = kmax..1
                let mut acc = Complex64::new(0.0, 0.0);
                for c in dense.iter().skip(1).rev() {
                    acc = (acc + c) * z;
                }
                dc + 2.0 * acc.re
            })
            .collect()
    }

    /// Tight estimate of `max_t |y(t)|`: dense grid followed by golden-section
    /// refinement around every near-maximal grid peak.
    pub fn max_abs(&self) -> f64 {
        self.max_abs_with_grid(BOUND_GRID_POINTS)
    }

    pub fn max_abs_with_grid(&self, n: usize) -> f64 {
        let n = n.max(8);
        let vals: Vec<f64> = self.sample_grid(n).into_iter().map(f64::abs).collect();
        let peak = vals.iter().copied().fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let dt = self.period() / n as f64;
        let mut best = peak;
        for i in 0..n {
            let prev = vals[(i + n - 1) % n];
            let next = vals[(i + 1) % n];
            if vals[i] >= prev && vals[i] >= next && vals[i] >= 0.999 * peak {
                let t = dt * i as f64;
                let refined = golden_max(|s| self.eval(s).abs(), t - dt, t + dt);
                best = best.max(refined);
            }
        }
        best
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = fc.max(fd);
    for _ in 0..80 {
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
    }
    best
}

/// Passes `x̂[k]` for `k ∈ 𝒦` and annihilates every other coefficient.
pub fn filter(signal: &FriSignal, spec: &KernelSpec) -> Result<FilteredSignal> {
    if (signal.period() - spec.period()).abs() > 1e-12 * spec.period() {
        return Err(invalid(format!("signal period {} differs from kernel period {}", signal.period(), spec.period())));
    }
    let mut fscs = signal.fscs(&spec.indices())?;
    // exact symmetry: mirror the positive half
    let mirrored: Vec<Complex64> = fscs
        .iter()
        .map(|(k, v)| match k {
            k if k < 0 => fscs.get(-k).map_or(v, |w| w.conj()),
            0 => Complex64::new(v.re, 0.0),
            _ => v,
        })
        .collect();
    fscs = FscVector::new(fscs.indices().to_vec(), mirrored, fscs.omega0())?;
    FilteredSignal::new(fscs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// `L·a_max·‖g‖_∞·‖h‖₁` from Young's inequality.
    Analytic,
    /// Dense-grid maximum of `|y(t)|`.
    Grid,
}

/// Amplitude bound `c` on the filtered signal.
pub fn bound_c(signal: &FriSignal, spec: &KernelSpec, mode: BoundMode) -> Result<f64> {
    match mode {
        BoundMode::Analytic => {
            let h1 = signal.pulse().l1_norm().ok_or_else(|| invalid("analytic bound needs a known pulse L1 norm"))?;
            Ok(signal.order() as f64 * signal.a_max() * spec.sup_norm() * h1 / spec.period())
        }
        BoundMode::Grid => Ok(filter(signal, spec)?.max_abs()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PulseShape;

    #[test]
    fn kernel_peak_is_index_count() {
        let s = design(2, true, 1.0).unwrap();
        assert!((s.eval(0.0) - 5.0).abs() < 1e-14);
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn dc_free_kernel_values() {
        let s = design(1, false, 1.0).unwrap();
        assert!((s.eval(0.0) - 2.0).abs() < 1e-14);
        assert!((s.eval(0.5) + 2.0).abs() < 1e-14);
        assert_eq!(s.eval(-0.5), 0.0);
        assert_eq!(s.eval(0.75), 0.0);
        assert_eq!(s.indices(), vec![-1, 1]);
    }

    #[test]
    fn design_rejects_bad_input() {
        assert!(design(0, true, 1.0).is_err());
        assert!(design(3, true, 0.0).is_err());
        assert!(design(3, true, f64::NAN).is_err());
    }

    #[test]
    fn zero_signal_filters_to_zero() {
        let x = FriSignal::new(PulseShape::Dirac, vec![0.0; 3], vec![0.1, 0.2, 0.3], 1.0).unwrap();
        let s = design(3, true, 1.0).unwrap();
        let y = filter(&x, &s).unwrap();
        assert!(y.fscs().coeffs().iter().all(|c| c.norm() == 0.0));
        assert_eq!(bound_c(&x, &s, BoundMode::Grid).unwrap(), 0.0);
        assert_eq!(bound_c(&x, &s, BoundMode::Analytic).unwrap(), 0.0);
    }

    #[test]
    fn analytic_bound_for_dirac_stream() {
        let x = FriSignal::with_a_max(PulseShape::Dirac, vec![0.3, 0.9, 0.5], vec![0.1, 0.4, 0.7], 1.0, 1.0).unwrap();
        let s = design(3, true, 1.0).unwrap();
        assert!((bound_c(&x, &s, BoundMode::Analytic).unwrap() - 21.0).abs() < 1e-12);
    }

    #[test]
    fn dc_dropped_without_dc() {
        let x = FriSignal::new(PulseShape::Dirac, vec![1.0, 0.5], vec![0.1, 0.6], 1.0).unwrap();
        let s = design(2, false, 1.0).unwrap();
        let y = filter(&x, &s).unwrap();
        assert!(y.fscs().get(0).is_none());
        assert_eq!(y.dc(), 0.0);
    }

    #[test]
    fn integral_matches_primitive_of_constant() {
        let x = FriSignal::new(PulseShape::Dirac, vec![1.0], vec![0.0], 1.0).unwrap();
        let s = design(1, true, 1.0).unwrap();
        let y = filter(&x, &s).unwrap();
        // y = 1 + 2cos(2πt): integral over a full period is 1
        assert!((y.integral(0.3, 1.3) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_json_roundtrip() {
        let s = design(4, false, 2.0).unwrap();
        let t = s.to_json().unwrap();
        assert!(t.contains("\"K\""));
        assert_eq!(KernelSpec::from_json(&t).unwrap(), s);
        assert!(KernelSpec::from_json(r#"{"K":0,"include_dc":true,"period":1}"#).is_err());
        assert!(KernelSpec::from_json(r#"{"K":2,"include_dc":true,"period":1,"z":0}"#).is_err());
    }

    #[test]
    fn samples_csv_shape() {
        let s = design(2, true, 1.0).unwrap();
        let csv = s.samples_csv(10);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,g");
        assert_eq!(lines.len(), 11);
    }
}
