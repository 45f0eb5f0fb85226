//! Integrate-and-fire time encoding.
//!
//! The encoder adds a bias `b` to the filtered signal, integrates with scale
//! `1/κ` and fires whenever the integral reaches `δ`, after which the
//! integrator resets:
//!
//! ```text
//! (1/κ) ∫_{t_n}^{t_{n+1}} (y(s) + b) ds = δ
//! ```
//!
//! Since `y` is a finite trigonometric polynomial, the integral has a closed
//! form and each firing instant is the root of a strictly increasing
//! function. Roots are bracketed with the spacing bounds
//! `κδ/(b+c) ≤ t_{n+1} − t_n ≤ κδ/(b−c)` and located by bisection.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{fmt17, FilteredSignal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TemParamsDoc", into = "TemParamsDoc")]
pub struct TemParams {
    b: f64,
    kappa: f64,
    delta: f64,
    c: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemParamsDoc {
    b: f64,
    kappa: f64,
    delta: f64,
    #[serde(default)]
    c: f64,
}

impl TryFrom<TemParamsDoc> for TemParams {
    type Error = Error;
    fn try_from(d: TemParamsDoc) -> Result<Self> {
        TemParams::new(d.b, d.kappa, d.delta, d.c)
    }
}

impl From<TemParams> for TemParamsDoc {
    fn from(p: TemParams) -> Self {
        TemParamsDoc { b: p.b, kappa: p.kappa, delta: p.delta, c: p.c }
    }
}

impl TemParams {
    /// `c` is the assumed bound on `|y(t)|`; it must satisfy `0 ≤ c < b`.
    pub fn new(b: f64, kappa: f64, delta: f64, c: f64) -> Result<Self> {
        let finite = [b, kappa, delta, c].iter().all(|v| v.is_finite());
        if !finite {
            return Err(invalid("TEM parameters must be finite"));
        }
        if !(kappa > 0.0 && delta > 0.0) {
            return Err(invalid("kappa and delta must be positive"));
        }
        if c < 0.0 {
            return Err(invalid("signal bound c must be non-negative"));
        }
        if b <= c {
            return Err(Error::BiasBelowBound { b, c });
        }
        Ok(Self { b, kappa, delta, c })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn with_c(&self, c: f64) -> Result<Self> {
        Self::new(self.b, self.kappa, self.delta, c)
    }

    /// `κδ`, the integral of `y + b` between consecutive firings.
    pub fn threshold(&self) -> f64 {
        self.kappa * self.delta
    }

    pub fn min_spacing(&self) -> f64 {
        self.threshold() / (self.b + self.c)
    }

    pub fn max_spacing(&self) -> f64 {
        self.threshold() / (self.b - self.c)
    }
}

/// Firing instants of one encoding run, with the parameters that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiringRecord {
    pub params: TemParams,
    pub instants: Vec<f64>,
}

impl FiringRecord {
    pub fn new(params: TemParams, instants: Vec<f64>) -> Result<Self> {
        check_increasing(&instants)?;
        Ok(Self { params, instants })
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn measurements(&self) -> Result<Vec<f64>> {
        measurements(&self.instants, &self.params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: FiringRecord = serde_json::from_str(text)?;
        check_increasing(&rec.instants)?;
        Ok(rec)
    }

    pub fn to_csv(&self) -> String {
        instants_to_csv(&self.instants)
    }
}

/// CSV with header `n,t_n`; instants printed with 17 significant digits.
pub fn instants_to_csv(instants: &[f64]) -> String {
    let mut out = String::from("n,t_n\n");
    for (n, t) in instants.iter().enumerate() {
        out.push_str(&format!("{},{}\n", n + 1, fmt17(*t)));
    }
    out
}

/// Parses the `n,t_n` CSV layout, checking the header, the row numbering and
/// strict monotonicity of the instants.
pub fn instants_from_csv(text: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "n" || &headers[1] != "t_n" {
        return Err(Error::Parse("expected header `n,t_n`".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!("row {} has {} fields", i + 1, rec.len())));
        }
        let n: usize =
            rec[0].trim().parse().map_err(|_| Error::Parse(format!("row {}: bad index `{}`", i + 1, &rec[0])))?;
        if n != i + 1 {
            return Err(Error::Parse(format!("row {}: index {} out of sequence", i + 1, n)));
        }
        let t: f64 =
            rec[1].trim().parse().map_err(|_| Error::Parse(format!("row {}: bad instant `{}`", i + 1, &rec[1])))?;
        if !t.is_finite() {
            return Err(Error::Parse(format!("row {}: non-finite instant", i + 1)));
        }
        out.push(t);
    }
    check_increasing(&out)?;
    Ok(out)
}

pub(crate) fn check_increasing(instants: &[f64]) -> Result<()> {
    if let Some(i) = instants.iter().position(|t| !t.is_finite()) {
        return Err(invalid(format!("instant {i} is not finite")));
    }
    match instants.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(Error::UnorderedFirings { index: i + 1 }),
        None => Ok(()),
    }
}

/// Simulates the encoder on `y` over `[t_start, t_start + t_obs)`, starting
/// from a reset integrator at `t_start`.
pub fn encode(y: &FilteredSignal, params: &TemParams, t_start: f64, t_obs: f64) -> Result<FiringRecord> {
    if !(t_obs.is_finite() && t_obs > 0.0 && t_start.is_finite()) {
        return Err(invalid("observation window must be finite with positive length"));
    }
    let true_c = y.max_abs();
    if params.b <= true_c {
        return Err(Error::BiasBelowBound { b: params.b, c: true_c });
    }
    let c = params.c.max(true_c);
    let b = params.b;
    let theta = params.threshold();
    let end = t_start + t_obs;
    let tol = 1e-13 * y.period();

    // accumulated (y + b) from `from` to `t`
    let phi = |from: f64, t: f64| y.integral(from, t) + b * (t - from);

    let max_firings = (t_obs * (b + c) / theta).ceil() as usize + 2;
    let mut instants = Vec::with_capacity(max_firings);
    let mut prev = t_start;
    loop {
        if phi(prev, end) < theta {
            break;
        }
        let mut lo = prev + theta / (b + c);
        let mut hi = (prev + theta / (b - c)).min(end);
        if phi(prev, lo) > theta {
            lo = prev;
        }
        if phi(prev, hi) < theta {
            hi = end;
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if phi(prev, mid) < theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // one Newton step from the midpoint, kept inside the bracket
        let mid = 0.5 * (lo + hi);
        let slope = y.eval(mid) + b;
        let mut t = mid - (phi(prev, mid) - theta) / slope;
        if !(t >= lo && t <= hi) {
            t = mid;
        }
        if t >= end || t <= prev {
            break;
        }
        instants.push(t);
        prev = t;
        if instants.len() > max_firings {
            return Err(Error::Numerical("firing count exceeds the rate bound".into()));
        }
    }
    FiringRecord::new(*params, instants)
}

/// `y_n = −b(t_{n+1} − t_n) + κδ`, one value per consecutive pair.
pub fn measurements(instants: &[f64], params: &TemParams) -> Result<Vec<f64>> {
    if instants.len() < 2 {
        return Err(invalid("need at least two firing instants"));
    }
    check_increasing(instants)?;
    Ok(instants.windows(2).map(|w| -params.b * (w[1] - w[0]) + params.threshold()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub ok: bool,
    pub min_rate: f64,
    pub max_rate: f64,
    pub required: f64,
}

/// Compares the guaranteed minimum firing rate `(b−c)/(κδ)` with the
/// `(2K+2)/T` firings per period needed for a left-invertible system.
pub fn validate_rate(params: &TemParams, k: usize, period: f64) -> RateCheck {
    let min_rate = (params.b - params.c) / params.threshold();
    let max_rate = (params.b + params.c) / params.threshold();
    let required = (2 * k + 2) as f64 / period;
    RateCheck { ok: min_rate >= required, min_rate, max_rate, required }
}

/// Largest threshold meeting the rate requirement, shrunk by `safety` (≤ 1).
pub fn suggest_delta(b: f64, kappa: f64, c: f64, k: usize, period: f64, safety: f64) -> Result<f64> {
    if b <= c {
        return Err(Error::BiasBelowBound { b, c });
    }
    if !(kappa > 0.0 && period > 0.0 && safety > 0.0 && safety <= 1.0) {
        return Err(invalid("kappa, period must be positive and safety in (0, 1]"));
    }
    Ok(safety * (b - c) * period / (kappa * (2 * k + 2) as f64))
}

pub const DEFAULT_DELTA_SAFETY: f64 = 0.9;
