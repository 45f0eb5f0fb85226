//! Periodic FRI signals: streams of `L` scaled and shifted copies of a known
//! pulse, repeated with period `T`, and their Fourier-series coefficients.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative tolerance below which `|ĥ(kω₀)|` is treated as zero.
pub const SPECTRUM_TOLERANCE: f64 = 1e-10;

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - (PI * x).powi(2) / 6.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Centered B-spline of degree `order`, supported on `[-(order+1)/2, (order+1)/2]`.
pub fn bspline(order: u32, x: f64) -> f64 {
    let n = order as i32;
    let half = (n + 1) as f64 / 2.0;
    if x.abs() >= half {
        return 0.0;
    }
    if n == 0 {
        return 1.0;
    }
    // truncated-power form: (1/n!) Σ (-1)^i C(n+1, i) (x + half - i)_+^n
    let mut acc = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for i in 1..=n {
        fact *= i as f64;
    }
    for i in 0..=(n + 1) {
        let u = x + half - i as f64;
        if u > 0.0 {
            let term = binom * u.powi(n);
            acc += if i % 2 == 0 { term } else { -term };
        }
        binom = binom * ((n + 1 - i) as f64) / ((i + 1) as f64);
    }
    acc / fact
}

/// Pulse spectrum sampled at harmonics `kω₀`, for pulses only known in frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSpectrum {
    values: BTreeMap<i64, Complex64>,
    l1_norm: Option<f64>,
}

impl TabulatedSpectrum {
    pub fn new(values: BTreeMap<i64, Complex64>, l1_norm: Option<f64>) -> Result<Self> {
        for (&k, v) in &values {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(invalid(format!("non-finite spectrum value at k={k}")));
            }
            if let Some(w) = values.get(&-k) {
                let tol = 1e-9 * v.norm().max(w.norm()).max(1.0);
                if (v - w.conj()).norm() > tol {
                    return Err(invalid(format!("tabulated spectrum violates conjugate symmetry at k={k}")));
                }
            }
        }
        if let Some(n) = l1_norm {
            if !(n.is_finite() && n >= 0.0) {
                return Err(invalid("l1_norm must be finite and non-negative"));
            }
        }
        Ok(Self { values, l1_norm })
    }

    pub fn get(&self, k: i64) -> Option<Complex64> {
        self.values.get(&k).copied()
    }

    pub fn values(&self) -> &BTreeMap<i64, Complex64> {
        &self.values
    }

    pub fn l1_norm(&self) -> Option<f64> {
        self.l1_norm
    }
}

/// Known real pulse `h(t)` of the FRI model.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    Dirac,
    /// `h(t) = β⁽ⁿ⁾(scale·t)` with `β⁽ⁿ⁾` the centered B-spline of degree `order`.
    BSpline {
        order: u32,
        scale: f64,
    },
    Tabulated(TabulatedSpectrum),
}

impl PulseShape {
    pub fn bspline(order: u32, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid("B-spline time scale must be positive"));
        }
        Ok(PulseShape::BSpline { order, scale })
    }

    /// Continuous-time Fourier transform `ĥ(ω)` evaluated at `ω = k·ω₀`.
    ///
    /// For the B-spline, `ĥ(ω) = (1/s)·sinc^{n+1}(ω/(2πs))` with the
    /// normalized sinc.
    pub fn spectrum(&self, k: i64, omega0: f64) -> Result<Complex64> {
        match self {
            PulseShape::Dirac => Ok(Complex64::new(1.0, 0.0)),
            PulseShape::BSpline { order, scale } => {
                let w = k as f64 * omega0;
                let v = sinc(w / (2.0 * PI * scale)).powi(*order as i32 + 1) / scale;
                Ok(Complex64::new(v, 0.0))
            }
            PulseShape::Tabulated(tab) => tab.get(k).ok_or(Error::SpectrumNotCovered(k)),
        }
    }

    /// `‖h‖₁`, with the Dirac taken as a unit mass.
    pub fn l1_norm(&self) -> Option<f64> {
        match self {
            PulseShape::Dirac => Some(1.0),
            PulseShape::BSpline { scale, .. } => Some(1.0 / scale),
            PulseShape::Tabulated(tab) => tab.l1_norm(),
        }
    }

    /// Width `R` of the pulse support (`h(t) = 0` for `|t| ≥ R/2`), if finite and known.
    pub fn support(&self) -> Option<f64> {
        match self {
            PulseShape::Dirac => Some(0.0),
            PulseShape::BSpline { order, scale } => Some((*order as f64 + 1.0) / scale),
            PulseShape::Tabulated(_) => None,
        }
    }

    /// Time-domain value `h(t)`; only defined for pulses that are ordinary functions.
    pub fn value(&self, t: f64) -> Option<f64> {
        match self {
            PulseShape::BSpline { order, scale } => Some(bspline(*order, scale * t)),
            _ => None,
        }
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self, PulseShape::Dirac)
    }
}

/// Fourier-series coefficients on a sorted index set.
#[derive(Debug, Clone, PartialEq)]
pub struct FscVector {
    indices: Vec<i64>,
    coeffs: Vec<Complex64>,
    omega0: f64,
}

impl FscVector {
    pub fn new(indices: Vec<i64>, coeffs: Vec<Complex64>, omega0: f64) -> Result<Self> {
        if indices.len() != coeffs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} indices but {} coefficients",
                indices.len(),
                coeffs.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("coefficient indices must be strictly increasing"));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(invalid("omega0 must be positive"));
        }
        Ok(Self { indices, coeffs, omega0 })
    }

    pub fn from_fn(indices: &[i64], omega0: f64, mut f: impl FnMut(i64) -> Result<Complex64>) -> Result<Self> {
        let coeffs = indices.iter().map(|&k| f(k)).collect::<Result<Vec<_>>>()?;
        Self::new(indices.to_vec(), coeffs, omega0)
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega0
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, k: i64) -> Option<Complex64> {
        self.indices.binary_search(&k).ok().map(|i| self.coeffs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.indices.iter().copied().zip(self.coeffs.iter().copied())
    }

    /// Largest `|x̂[k] − x̂[−k]*|` over index pairs present in the set.
    pub fn max_asymmetry(&self) -> f64 {
        self.iter().filter_map(|(k, v)| self.get(-k).map(|w| (v - w.conj()).norm())).fold(0.0, f64::max)
    }

    /// Keeps only the entries whose index satisfies `keep`.
    pub fn filter_indices(&self, keep: impl Fn(i64) -> bool) -> FscVector {
        let (indices, coeffs) = self.iter().filter(|(k, _)| keep(*k)).unzip();
        FscVector { indices, coeffs, omega0: self.omega0 }
    }

    /// Real partial Fourier synthesis `Σ x̂[k] e^{jkω₀t}` over the stored indices.
    pub fn synthesize(&self, t: f64) -> Complex64 {
        self.iter().map(|(k, v)| v * Complex64::from_polar(1.0, k as f64 * self.omega0 * t)).sum()
    }
}

/// `T`-periodic stream of `L` pulses, `x(t) = Σ_p Σ_ℓ a_ℓ h(t − τ_ℓ − pT)`.
///
/// Amplitudes may be signed; `a_max` defaults to `max |a_ℓ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalDoc", into = "SignalDoc")]
pub struct FriSignal {
    pulse: PulseShape,
    amplitudes: Vec<f64>,
    delays: Vec<f64>,
    period: f64,
    a_max: f64,
}

impl FriSignal {
    pub fn new(pulse: PulseShape, amplitudes: Vec<f64>, delays: Vec<f64>, period: f64) -> Result<Self> {
        let a_max = amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        Self::with_a_max(pulse, amplitudes, delays, period, a_max)
    }

    pub fn with_a_max(
        pulse: PulseShape,
        amplitudes: Vec<f64>,
        delays: Vec<f64>,
        period: f64,
        a_max: f64,
    ) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(invalid("period must be positive"));
        }
        if amplitudes.is_empty() {
            return Err(invalid("signal needs at least one pulse"));
        }
        if amplitudes.len() != delays.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes but {} delays",
                amplitudes.len(),
                delays.len()
            )));
        }
        if let Some(a) = amplitudes.iter().find(|a| !a.is_finite()) {
            return Err(invalid(format!("non-finite amplitude {a}")));
        }
        if let Some(d) = delays.iter().find(|&&d| !(d.is_finite() && (0.0..period).contains(&d))) {
            return Err(invalid(format!("delay {d} outside [0, {period})")));
        }
        if !(a_max.is_finite() && amplitudes.iter().all(|a| a.abs() <= a_max)) {
            return Err(invalid("a_max must bound every |a_l|"));
        }
        if let PulseShape::BSpline { scale, .. } = pulse {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(invalid("B-spline time scale must be positive"));
            }
        }
        Ok(Self { pulse, amplitudes, delays, period, a_max })
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

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    /// Number of pulses `L`.
    pub fn order(&self) -> usize {
        self.amplitudes.len()
    }

    /// Returns the same stream with every amplitude multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        let amps = self.amplitudes.iter().map(|a| a * gain).collect();
        Self::with_a_max(self.pulse.clone(), amps, self.delays.clone(), self.period, self.a_max * gain.abs())
    }

    /// `(1/T) Σ_ℓ a_ℓ e^{−jkω₀τ_ℓ}`, the pulse-free exponential sum.
    pub fn exponential_sum(&self, k: i64) -> Complex64 {
        let w = k as f64 * self.omega0();
        let s: Complex64 =
            self.amplitudes.iter().zip(&self.delays).map(|(&a, &tau)| a * Complex64::from_polar(1.0, -w * tau)).sum();
        s / self.period
    }

    /// Fourier-series coefficient `x̂[k] = (1/T) ĥ(kω₀) Σ a_ℓ e^{−jkω₀τ_ℓ}`.
    pub fn fsc(&self, k: i64) -> Result<Complex64> {
        Ok(self.pulse.spectrum(k, self.omega0())? * self.exponential_sum(k))
    }

    pub fn fscs(&self, indices: &[i64]) -> Result<FscVector> {
        FscVector::from_fn(indices, self.omega0(), |k| self.fsc(k))
    }

    /// Partial Fourier synthesis `Σ_{|k|≤truncation} x̂[k] e^{jkω₀t}`.
    pub fn evaluate(&self, t: f64, truncation: usize) -> Result<f64> {
        if self.pulse.is_dirac() {
            return Err(Error::NotPointwiseEvaluable);
        }
        if truncation == 0 {
            return Err(invalid("truncation must be at least 1"));
        }
        let w = self.omega0();
        let mut acc = self.fsc(0)?;
        for k in 1..=truncation as i64 {
            let pos = self.fsc(k)?;
            let neg = self.fsc(-k)?;
            let z = Complex64::from_polar(1.0, k as f64 * w * t);
            acc += pos * z + neg * z.conj();
        }
        let scale = acc.re.abs().max(1.0);
        if acc.im.abs() > 1e-9 * scale {
            return Err(Error::Numerical(format!("synthesis has imaginary residue {} at t={t}", acc.im)));
        }
        Ok(acc.re)
    }

    /// Exact time-domain value of the periodized stream; `None` unless the
    /// pulse is an ordinary function with finite support.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let support = self.pulse.support()?;
        if self.pulse.is_dirac() {
            return None;
        }
        let half = support / 2.0;
        let mut acc = 0.0;
        for (&a, &tau) in self.amplitudes.iter().zip(&self.delays) {
            let rel = t - tau;
            let p_lo = ((rel - half) / self.period).ceil() as i64;
            let p_hi = ((rel + half) / self.period).floor() as i64;
            for p in p_lo..=p_hi {
                acc += a * self.pulse.value(rel - p as f64 * self.period)?;
            }
        }
        Some(acc)
    }
}

/// Divides each coefficient by the pulse spectrum: `x̂[k]/ĥ(kω₀)`.
///
/// Fails on any index where `|ĥ(kω₀)|` falls below `tolerance` times the
/// largest magnitude over the index set.
pub fn ratio_sequence_with_tolerance(fscs: &FscVector, pulse: &PulseShape, tolerance: f64) -> Result<FscVector> {
    let spectra = fscs.indices().iter().map(|&k| pulse.spectrum(k, fscs.omega0())).collect::<Result<Vec<_>>>()?;
    let peak = spectra.iter().fold(0.0f64, |m, h| m.max(h.norm()));
    let mut out = Vec::with_capacity(fscs.len());
    for ((k, x), h) in fscs.iter().zip(spectra) {
        if h.norm() <= tolerance * peak || h.norm() == 0.0 {
            return Err(Error::VanishingSpectrum(k));
        }
        out.push(x / h);
    }
    FscVector::new(fscs.indices().to_vec(), out, fscs.omega0())
}

pub fn ratio_sequence(fscs: &FscVector, pulse: &PulseShape) -> Result<FscVector> {
    ratio_sequence_with_tolerance(fscs, pulse, SPECTRUM_TOLERANCE)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SpectrumEntry {
    k: i64,
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub(crate) enum PulseDoc {
    Dirac,
    Bspline {
        order: u32,
        scale: f64,
    },
    Tabulated {
        spectrum: Vec<SpectrumEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l1_norm: Option<f64>,
    },
}

impl TryFrom<PulseDoc> for PulseShape {
    type Error = Error;

    fn try_from(doc: PulseDoc) -> Result<Self> {
        match doc {
            PulseDoc::Dirac => Ok(PulseShape::Dirac),
            PulseDoc::Bspline { order, scale } => {
                if order > 16 {
                    return Err(invalid("B-spline order above 16 is not supported"));
                }
                PulseShape::bspline(order, scale)
            }
            PulseDoc::Tabulated { spectrum, l1_norm } => {
                let mut values = BTreeMap::new();
                for e in spectrum {
                    if values.insert(e.k, Complex64::new(e.re, e.im)).is_some() {
                        return Err(invalid(format!("duplicate spectrum index {}", e.k)));
                    }
                }
                Ok(PulseShape::Tabulated(TabulatedSpectrum::new(values, l1_norm)?))
            }
        }
    }
}

impl From<&PulseShape> for PulseDoc {
    fn from(p: &PulseShape) -> Self {
        match p {
            PulseShape::Dirac => PulseDoc::Dirac,
            PulseShape::BSpline { order, scale } => PulseDoc::Bspline { order: *order, scale: *scale },
            PulseShape::Tabulated(tab) => PulseDoc::Tabulated {
                spectrum: tab.values().iter().map(|(&k, v)| SpectrumEntry { k, re: v.re, im: v.im }).collect(),
                l1_norm: tab.l1_norm(),
            },
        }
    }
}

impl Serialize for PulseShape {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PulseDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PulseShape {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = PulseDoc::deserialize(d)?;
        PulseShape::try_from(doc).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SignalDoc {
    period: f64,
    pulse: PulseShape,
    amplitudes: Vec<f64>,
    delays: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a_max: Option<f64>,
}

impl TryFrom<SignalDoc> for FriSignal {
    type Error = Error;

    fn try_from(doc: SignalDoc) -> Result<Self> {
        match doc.a_max {
            Some(a_max) => FriSignal::with_a_max(doc.pulse, doc.amplitudes, doc.delays, doc.period, a_max),
            None => FriSignal::new(doc.pulse, doc.amplitudes, doc.delays, doc.period),
        }
    }
}

impl From<FriSignal> for SignalDoc {
    fn from(s: FriSignal) -> Self {
        SignalDoc { period: s.period, pulse: s.pulse, amplitudes: s.amplitudes, delays: s.delays, a_max: Some(s.a_max) }
    }
}

impl FriSignal {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
