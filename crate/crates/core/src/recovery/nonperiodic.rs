//! Nonperiodic streams `x̃(t) = Σ a_ℓ h(t − τ_ℓ)` with finitely supported pulses.
//!
//! Filtering with the periodized kernel `g̃(t) = Σ_{s=−S}^{S} g(t + sT)`
//! reproduces, on `[0, T)`, the filtered signal of the periodic stream with the
//! same parameters, so the periodic recovery chain applies unchanged.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::kernel::{FilteredSignal, KernelSpec};
use crate::model::{FscVector, PulseShape};

#[derive(Debug, Clone, PartialEq)]
pub struct NonperiodicSignal {
    pulse: PulseShape,
    amplitudes: Vec<f64>,
    delays: Vec<f64>,
    window: f64,
}

impl NonperiodicSignal {
    /// Delays must lie in `[0, window)`.
    pub fn new(pulse: PulseShape, amplitudes: Vec<f64>, delays: Vec<f64>, window: f64) -> Result<Self> {
        if !(window.is_finite() && window > 0.0) {
            return Err(invalid("window must be positive"));
        }
        if amplitudes.is_empty() || amplitudes.len() != delays.len() {
            return Err(Error::DimensionMismatch("amplitudes and delays must match and be non-empty".into()));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(invalid("amplitudes must be finite"));
        }
        if delays.iter().any(|&d| !(d.is_finite() && (0.0..window).contains(&d))) {
            return Err(invalid("delays must lie in [0, window)"));
        }
        Ok(Self { pulse, amplitudes, delays, window })
    }

    pub fn pulse(&self) -> &PulseShape {
        &self.pulse
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// `x̃(t)`; `None` for pulses without a time-domain form.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.amplitudes.iter().zip(&self.delays).map(|(&a, &tau)| self.pulse.value(t - tau).map(|h| a * h)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodizedKernel {
    spec: KernelSpec,
    copies: usize,
    pulse_support: f64,
}

/// Chooses the number of kernel copies `S` for a pulse of support width `R`.
///
/// `g̃` equals the periodic kernel polynomial on `(−(2S+1)T/2, (2S+1)T/2]`;
/// filtering pulses with delays in `[0, T)` and evaluating on `[0, T)` needs
/// that window to cover `|t| ≤ T + R/2`, i.e. `S ≥ (1 + R/T)/2`.
pub fn periodize_kernel(spec: &KernelSpec, pulse_support: f64, period: f64) -> Result<PeriodizedKernel> {
    if !pulse_support.is_finite() {
        return Err(Error::InfiniteSupport);
    }
    if pulse_support < 0.0 {
        return Err(invalid("pulse support must be non-negative"));
    }
    if (period - spec.period()).abs() > 1e-12 * period {
        return Err(invalid("kernel period differs from the window"));
    }
    let s = ((1.0 + pulse_support / period) / 2.0).ceil().max(1.0);
    if s > 1e6 {
        return Err(invalid("pulse support too wide for periodization"));
    }
    Ok(PeriodizedKernel { spec: *spec, copies: s as usize, pulse_support })
}

impl PeriodizedKernel {
    /// Number of copies `S` on each side.
    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn pulse_support(&self) -> f64 {
        self.pulse_support
    }

    /// `g̃(t) = Σ_{s=−S}^{S} g(t + sT)`.
    pub fn eval(&self, t: f64) -> f64 {
        let s = self.copies as i64;
        let period = self.spec.period();
        (-s..=s).map(|i| self.spec.eval(t + i as f64 * period)).sum()
    }

    /// `ỹ(t) = (1/T)(x̃ * g̃)(t)`, with the convolution integral evaluated
    /// numerically over the pulse supports.
    pub fn filtered_value(&self, x: &NonperiodicSignal, t: f64) -> Result<f64> {
        let period = self.spec.period();
        let support = x.pulse().support().ok_or(Error::InfiniteSupport)?;
        if support > self.pulse_support * (1.0 + 1e-12) + 1e-300 {
            return Err(invalid("signal pulse is wider than the periodization allows"));
        }
        let mut acc = 0.0;
        match x.pulse() {
            PulseShape::Dirac => {
                for (&a, &tau) in x.amplitudes().iter().zip(x.delays()) {
                    acc += a * self.eval(t - tau);
                }
            }
            PulseShape::BSpline { order, scale } => {
                let pieces = *order as usize + 1;
                let half = pieces as f64 / 2.0;
                let (nodes, weights) = gauss_legendre(24);
                for (&a, &tau) in x.amplitudes().iter().zip(x.delays()) {
                    for p in 0..pieces {
                        let lo = tau + (p as f64 - half) / scale;
                        let hi = lo + 1.0 / scale;
                        let (mid, rad) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                        let s: f64 = nodes
                            .iter()
                            .zip(&weights)
                            .map(|(&z, &w)| {
                                let u = mid + rad * z;
                                w * x.pulse().value(u - tau).unwrap_or(0.0) * self.eval(t - u)
                            })
                            .sum();
                        acc += a * rad * s;
                    }
                }
            }
            PulseShape::Tabulated(_) => return Err(Error::InfiniteSupport),
        }
        Ok(acc / period)
    }

    /// Fourier coefficients of `ỹ` on `[0, T)`, from uniform samples of the
    /// numerically filtered signal.
    pub fn filter(&self, x: &NonperiodicSignal) -> Result<FilteredSignal> {
        let period = self.spec.period();
        if (x.window() - period).abs() > 1e-12 * period {
            return Err(invalid("signal window differs from kernel period"));
        }
        let k = self.spec.K();
        let m = 4 * k + 4;
        let samples =
            (0..m).map(|i| self.filtered_value(x, period * i as f64 / m as f64)).collect::<Result<Vec<_>>>()?;
        let omega0 = self.spec.omega0();
        let dft = |kk: i64| -> Complex64 {
            samples
                .iter()
                .enumerate()
                .map(|(i, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (kk * i as i64) as f64 / m as f64))
                .sum::<Complex64>()
                / m as f64
        };
        let indices = self.spec.indices();
        let coeffs: Vec<Complex64> = indices
            .iter()
            .map(|&kk| match kk {
                0 => Complex64::new(dft(0).re, 0.0),
                kk if kk > 0 => dft(kk),
                kk => dft(-kk).conj(),
            })
            .collect();
        FilteredSignal::new(FscVector::new(indices, coeffs, omega0)?)
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
