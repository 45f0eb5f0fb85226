//! Seeded experiment harness: firing-rate table, conditioning study and the
//! noisy-instant MSE comparison of the two recovery schemes.
//!
//! Every trial draws from its own ChaCha stream seeded by
//! `trial_seed(master, index)`, so reports are reproducible byte for byte and
//! independent of the order in which trials execute.
//!
//! Relative errors in dB use `10·log₁₀(ratio)`, applied to the norm ratio
//! `‖x − x̄‖/‖x‖`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{encode, TemParams};
use crate::error::{invalid, Error, Result};
use crate::kernel::{design, filter, fmt17, FilteredSignal, KernelSpec};
use crate::linalg::condition_number;
use crate::model::{FriSignal, PulseShape};
use crate::recovery::{build_matrix, reconstruct, wrapped_distance, DelayModel, MatrixKind, RecoveredParams};

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 1;
/// Gap used to separate tied instants after jitter.
pub const TIE_NUDGE: f64 = 1e-12;
/// Default grid size for the discretized L2 norm.
pub const MSE_GRID_POINTS: usize = 1 << 14;
/// Filtered-signal bound, as a fraction of the bias, used to scale the
/// random Dirac streams of the firing-rate table.
pub const TABLE1_BOUND_FRACTION: f64 = 0.1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed derived from the master seed and the trial index.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial.wrapping_add(0x5DEE_CE66)))
}

/// Adds i.i.d. `N(0, variance)` jitter to each instant, sorts, and nudges
/// ties apart by [`TIE_NUDGE`].
pub fn perturb_instants(instants: &[f64], variance: f64, seed: u64) -> Result<Vec<f64>> {
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(invalid("variance must be non-negative"));
    }
    if variance == 0.0 {
        return Ok(instants.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| invalid(e.to_string()))?;
    let mut out: Vec<f64> = instants.iter().map(|t| t + normal.sample(&mut rng)).collect();
    out.sort_by(f64::total_cmp);
    for i in 1..out.len() {
        if out[i] <= out[i - 1] {
            out[i] = out[i - 1] + TIE_NUDGE;
        }
    }
    Ok(out)
}

fn signal_from_estimate(truth: &FriSignal, est: &RecoveredParams) -> Result<FriSignal> {
    let period = truth.period();
    let delays = est.delays.iter().map(|d| d.rem_euclid(period)).map(|d| if d >= period { 0.0 } else { d }).collect();
    let a_max = est.amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    FriSignal::with_a_max(truth.pulse().clone(), est.amplitudes.clone(), delays, period, a_max)
}

/// Relative error `‖x − x̄‖/‖x‖` over one period, discretized on a uniform grid.
///
/// Dirac streams have no L2 norm; for them the error is measured in
/// parameter space after pairing pulses in delay order:
/// `sqrt(Σ (a_ℓ − â_ℓ)² + Σ (a_ℓ d(τ_ℓ, τ̂_ℓ)/T)²) / ‖a‖` with `d` the
/// circular delay distance.
pub fn relative_mse(truth: &FriSignal, est: &RecoveredParams, grid_points: usize) -> Result<f64> {
    if grid_points == 0 {
        return Err(invalid("grid must have at least one point"));
    }
    if est.amplitudes.len() != est.delays.len() {
        return Err(Error::DimensionMismatch("estimate amplitudes/delays differ in length".into()));
    }
    let period = truth.period();
    if truth.pulse().is_dirac() {
        let mut pairs: Vec<(f64, f64)> =
            truth.delays().iter().copied().zip(truth.amplitudes().iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let norm: f64 = pairs.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if est.delays.len() != pairs.len() {
            return Err(Error::DimensionMismatch("estimate order differs from the true order".into()));
        }
        let err: f64 = pairs
            .iter()
            .zip(est.delays.iter().zip(&est.amplitudes))
            .map(|(&(tau, a), (&th, &ah))| {
                let d = wrapped_distance(tau, th, period) / period;
                (a - ah).powi(2) + (a * d).powi(2)
            })
            .sum();
        return Ok(err.sqrt() / norm);
    }
    let est = signal_from_estimate(truth, est)?;
    let dt = period / grid_points as f64;
    let sample = |x: &FriSignal, t: f64| -> Result<f64> {
        match x.value_at(t) {
            Some(v) => Ok(v),
            None => {
                let trunc = tabulated_truncation(x.pulse()).ok_or(Error::NotPointwiseEvaluable)?;
                x.evaluate(t, trunc)
            }
        }
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid_points {
        let t = dt * i as f64;
        let a = sample(truth, t)?;
        let b = sample(&est, t)?;
        num += (a - b).powi(2);
        den += a * a;
    }
    if den == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((num / den).sqrt())
}

fn tabulated_truncation(pulse: &PulseShape) -> Option<usize> {
    let PulseShape::Tabulated(tab) = pulse else { return None };
    let mut k = 0i64;
    while tab.get(k + 1).is_some() && tab.get(-(k + 1)).is_some() {
        k += 1;
    }
    (k >= 1 && tab.get(0).is_some()).then_some(k as usize)
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// One row of the per-trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// Swept quantity of the study (L or δ).
    pub param: f64,
    pub firing_count: Option<usize>,
    pub firing_count_b: Option<usize>,
    pub cond_a: Option<f64>,
    pub cond_b: Option<f64>,
    pub delay_error: Option<f64>,
    pub amplitude_error: Option<f64>,
    pub mse_alg1: Option<f64>,
    pub mse_alg2: Option<f64>,
    pub ok: bool,
    pub note: String,
}

impl TrialRecord {
    fn new(trial: usize, seed: u64, param: f64) -> Self {
        Self {
            trial,
            seed,
            param,
            firing_count: None,
            firing_count_b: None,
            cond_a: None,
            cond_b: None,
            delay_error: None,
            amplitude_error: None,
            mse_alg1: None,
            mse_alg2: None,
            ok: true,
            note: String::new(),
        }
    }
}

/// Aggregates for one value of the swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub param: f64,
    pub trials: usize,
    pub failures: usize,
    pub mean_firing_count: Option<f64>,
    pub kernel_order: Option<usize>,
    pub median_cond_a: Option<f64>,
    pub median_cond_b: Option<f64>,
    pub mean_cond_a: Option<f64>,
    pub mean_cond_b: Option<f64>,
    pub max_delay_error: Option<f64>,
    pub max_amplitude_error: Option<f64>,
    pub median_mse_alg1: Option<f64>,
    pub median_mse_alg2: Option<f64>,
    pub mad_mse_alg1: Option<f64>,
    pub mad_mse_alg2: Option<f64>,
    pub mse_alg1_db: Option<f64>,
    pub mse_alg2_db: Option<f64>,
    pub gap_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenario: String,
    pub master_seed: u64,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub checks: Vec<Check>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Median absolute deviation about the median.
pub fn mad(values: &[f64]) -> Option<f64> {
    let m = median(values)?;
    let dev: Vec<f64> = values.iter().filter(|x| !x.is_nan()).map(|x| (x - m).abs()).collect();
    median(&dev)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

impl StudyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Per-trial CSV; floats carry 17 significant digits and missing values
    /// are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "trial,seed,param,firing_count,firing_count_b,cond_a,cond_b,delay_error,amplitude_error,mse_alg1,mse_alg2,ok,note\n",
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.trial,
                r.seed,
                fmt17(r.param),
                r.firing_count.map(|v| v.to_string()).unwrap_or_default(),
                r.firing_count_b.map(|v| v.to_string()).unwrap_or_default(),
                opt(r.cond_a),
                opt(r.cond_b),
                opt(r.delay_error),
                opt(r.amplitude_error),
                opt(r.mse_alg1),
                opt(r.mse_alg2),
                r.ok,
                csv_escape(&r.note),
            );
        }
        out
    }

    /// JSON summary: aggregates and checks, without the per-trial rows.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            scenario: &'a str,
            master_seed: u64,
            trials: usize,
            passed: bool,
            summary: &'a [SummaryRow],
            checks: &'a [Check],
        }
        Ok(serde_json::to_string_pretty(&Summary {
            scenario: &self.scenario,
            master_seed: self.master_seed,
            trials: self.records.len(),
            passed: self.passed(),
            summary: &self.summary,
            checks: &self.checks,
        })?)
    }

    /// Writes `{scenario}_{seed}.csv` and `{scenario}_{seed}.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let stem = format!("{}_{}", self.scenario, self.master_seed);
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&csv, self.to_csv())?;
        std::fs::write(&json, self.summary_json()?)?;
        Ok((csv, json))
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Largest error between true and estimated parameters after pairing in
/// delay order: `(max circular delay error, max relative amplitude error)`.
pub fn parameter_errors(truth: &FriSignal, est: &RecoveredParams) -> (f64, f64) {
    let mut pairs: Vec<(f64, f64)> = truth.delays().iter().copied().zip(truth.amplitudes().iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.len() != est.delays.len() {
        return (f64::INFINITY, f64::INFINITY);
    }
    let mut de = 0.0f64;
    let mut ae = 0.0f64;
    for ((tau, a), (th, ah)) in pairs.iter().zip(est.delays.iter().zip(&est.amplitudes)) {
        de = de.max(wrapped_distance(*tau, *th, truth.period()));
        ae = ae.max((a - ah).abs() / a.abs().max(f64::MIN_POSITIVE));
    }
    (de, ae)
}

/// Reference firing-count configuration: `(L, b)` with `δ = 0.07`, `κ = 1`, `T = 1`, `K = L`.
pub const TABLE1_ROWS: [(usize, f64, usize); 3] = [(3, 0.9, 13), (5, 1.3, 18), (10, 2.5, 36)];
pub const TABLE1_DELTA: f64 = 0.07;
/// Allowed deviation from the tabulated firing counts.
pub const TABLE1_COUNT_TOLERANCE: usize = 2;

/// Random Dirac stream with delays and amplitudes uniform on `(0, 1)`,
/// rescaled so that the filtered signal peaks at `fraction · b`.
pub fn table1_signal(l: usize, b: f64, fraction: f64, seed: u64) -> Result<(FriSignal, KernelSpec, FilteredSignal)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delays: Vec<f64> = (0..l).map(|_| rng.random_range(f64::EPSILON..1.0)).collect();
    let amps: Vec<f64> = (0..l).map(|_| rng.random_range(f64::EPSILON..1.0)).collect();
    let raw = FriSignal::new(PulseShape::Dirac, amps, delays, 1.0)?;
    let spec = design(l, true, 1.0)?;
    let peak = filter(&raw, &spec)?.max_abs();
    let x = raw.scaled(fraction * b / peak)?;
    let y = filter(&x, &spec)?;
    Ok((x, spec, y))
}

/// Firing counts and exactness of the DC-kernel recovery for each reference row.
pub fn run_table1(master_seed: u64) -> Result<StudyReport> {
    let mut records = Vec::new();
    let mut summary = Vec::new();
    let mut checks = Vec::new();
    for (i, &(l, b, expected)) in TABLE1_ROWS.iter().enumerate() {
        let seed = trial_seed(master_seed, i as u64);
        let mut rec = TrialRecord::new(i, seed, l as f64);
        let (x, spec, y) = table1_signal(l, b, TABLE1_BOUND_FRACTION, seed)?;
        let params = TemParams::new(b, 1.0, TABLE1_DELTA, y.max_abs())?;
        let firings = encode(&y, &params, 0.0, 1.0)?;
        rec.firing_count = Some(firings.len());
        match reconstruct(&firings.instants, &params, &spec, x.pulse(), l, DelayModel::OffGrid) {
            Ok(est) => {
                let (de, ae) = parameter_errors(&x, &est);
                rec.delay_error = Some(de);
                rec.amplitude_error = Some(ae);
                rec.cond_a = Some(est.condition_number);
                rec.ok = de < 1e-6;
            }
            Err(e) => {
                rec.ok = false;
                rec.note = e.to_string();
            }
        }
        let n = firings.len();
        let count_ok = n.abs_diff(expected) <= TABLE1_COUNT_TOLERANCE;
        checks.push(Check {
            name: format!("table1_L{l}_firings"),
            passed: count_ok,
            detail: format!("{n} firings per period, expected {expected} ± {TABLE1_COUNT_TOLERANCE}"),
        });
        checks.push(Check {
            name: format!("table1_L{l}_recovery"),
            passed: rec.ok,
            detail: match rec.delay_error {
                Some(e) => format!("max delay error {e:.3e} (limit 1e-6)"),
                None => format!("recovery failed: {}", rec.note),
            },
        });
        summary.push(SummaryRow {
            param: l as f64,
            trials: 1,
            failures: usize::from(!rec.ok),
            mean_firing_count: Some(n as f64),
            kernel_order: Some(l),
            median_cond_a: rec.cond_a,
            median_cond_b: None,
            mean_cond_a: rec.cond_a,
            mean_cond_b: None,
            max_delay_error: rec.delay_error,
            max_amplitude_error: rec.amplitude_error,
            median_mse_alg1: None,
            median_mse_alg2: None,
            mad_mse_alg1: None,
            mad_mse_alg2: None,
            mse_alg1_db: None,
            mse_alg2_db: None,
            gap_db: None,
        });
        records.push(rec);
    }
    Ok(StudyReport { scenario: "table1".into(), master_seed, records, summary, checks })
}

/// `n` sorted uniform instants in `[0, period)`, ties nudged apart.
pub fn random_instants(n: usize, period: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..period)).collect();
    t.sort_by(f64::total_cmp);
    for i in 1..t.len() {
        if t[i] <= t[i - 1] {
            t[i] = t[i - 1] + TIE_NUDGE;
        }
    }
    t
}

/// `(cond(A), cond(B))` for the same instants and `K`.
pub fn condition_pair(instants: &[f64], k: usize, period: f64) -> Result<(f64, f64)> {
    let omega0 = 2.0 * std::f64::consts::PI / period;
    let a = build_matrix(instants, k, omega0, MatrixKind::A)?;
    let b = build_matrix(instants, k, omega0, MatrixKind::B)?;
    Ok((condition_number(a.entries())?, condition_number(b.entries())?))
}

/// Condition numbers of `A` and `B` on random instant sets with `N = 2K+2`
/// and `K = L`, for each `L` in the range.
pub fn run_condition_study(
    l_range: std::ops::RangeInclusive<usize>,
    trials: usize,
    master_seed: u64,
) -> Result<StudyReport> {
    if trials < 100 {
        return Err(invalid("condition study needs at least 100 trials"));
    }
    if *l_range.start() == 0 {
        return Err(invalid("L must start at 1"));
    }
    let period = 1.0;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    let mut checks = Vec::new();
    for l in l_range {
        let k = l;
        let n = 2 * k + 2;
        let rows: Vec<TrialRecord> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let index = (l * trials + i) as u64;
                let seed = trial_seed(master_seed, index);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let t = random_instants(n, period, &mut rng);
                let mut rec = TrialRecord::new(records_len_hint(l, trials, i), seed, l as f64);
                rec.firing_count = Some(n);
                match condition_pair(&t, k, period) {
                    Ok((ca, cb)) => {
                        rec.cond_a = Some(ca);
                        rec.cond_b = Some(cb);
                        rec.ok = ca >= 1.0 && cb >= 1.0;
                    }
                    Err(e) => {
                        rec.ok = false;
                        rec.note = e.to_string();
                    }
                }
                rec
            })
            .collect();
        let ca: Vec<f64> = rows.iter().filter_map(|r| r.cond_a).collect();
        let cb: Vec<f64> = rows.iter().filter_map(|r| r.cond_b).collect();
        let (ma, mb) = (median(&ca), median(&cb));
        let failures = rows.iter().filter(|r| !r.ok).count();
        checks.push(Check {
            name: format!("cond_L{l}_median_b_below_a"),
            passed: matches!((ma, mb), (Some(a), Some(b)) if b < a),
            detail: format!("median cond(A) {}, median cond(B) {}", opt(ma), opt(mb)),
        });
        checks.push(Check {
            name: format!("cond_L{l}_at_least_one"),
            passed: failures == 0,
            detail: format!("{failures} trials with cond < 1 or failure"),
        });
        summary.push(SummaryRow {
            param: l as f64,
            trials,
            failures,
            mean_firing_count: Some(n as f64),
            kernel_order: Some(l),
            median_cond_a: ma,
            median_cond_b: mb,
            mean_cond_a: mean(&ca),
            mean_cond_b: mean(&cb),
            max_delay_error: None,
            max_amplitude_error: None,
            median_mse_alg1: None,
            median_mse_alg2: None,
            mad_mse_alg1: None,
            mad_mse_alg2: None,
            mse_alg1_db: None,
            mse_alg2_db: None,
            gap_db: None,
        });
        records.extend(rows);
    }
    let gap = search_condition_gap(2, 7, CONDITION_GAP_RATIO, CONDITION_GAP_DRAWS, trial_seed(master_seed, u64::MAX))?;
    checks.push(Check {
        name: "cond_K2_N7_gap_exists".into(),
        passed: gap.is_some(),
        detail: match gap {
            Some((t, ca, cb)) => format!("cond(A)={ca:.3}, cond(B)={cb:.3} at instants {t:?}"),
            None => {
                format!("no instant set with cond(A)/cond(B) > {CONDITION_GAP_RATIO} in {CONDITION_GAP_DRAWS} draws")
            }
        },
    });
    Ok(StudyReport { scenario: "cond".into(), master_seed, records, summary, checks })
}

fn records_len_hint(l: usize, trials: usize, i: usize) -> usize {
    (l - 1) * trials + i
}

pub const CONDITION_GAP_RATIO: f64 = 10.0;
pub const CONDITION_GAP_DRAWS: usize = 100_000;

/// Random search for an instant set where `cond(A)/cond(B)` exceeds `ratio`.
pub fn search_condition_gap(
    k: usize,
    n: usize,
    ratio: f64,
    max_draws: usize,
    seed: u64,
) -> Result<Option<(Vec<f64>, f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_draws {
        let t = random_instants(n, 1.0, &mut rng);
        let (ca, cb) = condition_pair(&t, k, 1.0)?;
        if ca > ratio * cb {
            return Ok(Some((t, ca, cb)));
        }
    }
    Ok(None)
}

/// Noisy-instant comparison of the two recovery schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MseConfig {
    pub signal: FriSignal,
    pub b: f64,
    pub kappa: f64,
    pub deltas: Vec<f64>,
    /// Kernel order; `None` picks, per threshold, the largest `K` whose
    /// `2K+2` firings fit in one period for both kernels.
    #[serde(rename = "K", default)]
    pub k: Option<usize>,
    pub grid_resolution: f64,
    pub variance: f64,
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for MseConfig {
    fn default() -> Self {
        let pulse = PulseShape::bspline(3, 20.0).expect("valid scale");
        let signal = FriSignal::new(pulse, vec![0.5, -0.45, 0.4], vec![0.2, 0.4, 0.8], 1.0).expect("valid signal");
        Self {
            signal,
            b: 1.2,
            kappa: 1.0,
            deltas: vec![0.04, 0.05, 0.06, 0.07, 0.08, 0.09],
            k: None,
            grid_resolution: 0.01,
            variance: 0.001,
            trials: 200,
            master_seed: DEFAULT_SEED,
        }
    }
}

type Encoded = (KernelSpec, TemParams, crate::encoder::FiringRecord);

fn encode_with(x: &FriSignal, k: usize, include_dc: bool, b: f64, kappa: f64, delta: f64) -> Result<Encoded> {
    let spec = design(k, include_dc, x.period())?;
    let y = filter(x, &spec)?;
    let params = TemParams::new(b, kappa, delta, y.max_abs())?;
    let f = encode(&y, &params, 0.0, x.period())?;
    Ok((spec, params, f))
}

/// Largest `K ≥ L` for which both kernels yield `N ≥ 2K+2` firings in one
/// period. The firing count depends weakly on `K`, so candidates are tried
/// downward from the bias-only estimate `bT/(κδ)`.
pub fn auto_order(x: &FriSignal, b: f64, kappa: f64, delta: f64) -> Result<usize> {
    let l = x.order();
    let estimate = (b * x.period() / (kappa * delta)).ceil() as usize + 2;
    let mut k = (estimate.saturating_sub(2) / 2).clamp(l, crate::kernel::MAX_K);
    loop {
        let n = [true, false]
            .into_iter()
            .map(|dc| encode_with(x, k, dc, b, kappa, delta).map(|e| e.2.len()))
            .collect::<Result<Vec<_>>>()?;
        if n.iter().all(|&n| n >= 2 * k + 2) {
            return Ok(k);
        }
        if k == l {
            return Err(Error::InsufficientFirings { got: *n.iter().min().unwrap_or(&0), required: 2 * k + 2 });
        }
        k -= 1;
    }
}

/// Median relative MSE of both schemes (OMP on the delay grid) for every
/// threshold in the sweep, over jittered firing instants.
pub fn run_mse_study(config: &MseConfig) -> Result<StudyReport> {
    if config.trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if !(config.variance.is_finite() && config.variance >= 0.0) {
        return Err(invalid("variance must be non-negative"));
    }
    let x = &config.signal;
    let l = x.order();
    let period = x.period();
    let model = DelayModel::OnGrid { resolution: config.grid_resolution };
    let noiseless = config.variance == 0.0;

    let mut records = Vec::new();
    let mut summary = Vec::new();
    let mut checks = Vec::new();
    for (di, &delta) in config.deltas.iter().enumerate() {
        let k = match config.k {
            Some(k) => k,
            None => auto_order(x, config.b, config.kappa, delta)?,
        };
        let [a, b] = [true, false].map(|dc| encode_with(x, k, dc, config.b, config.kappa, delta));
        let ((spec_a, p_a, f_a), (spec_b, p_b, f_b)) = (a?, b?);
        let rows: Vec<TrialRecord> = (0..config.trials)
            .into_par_iter()
            .map(|i| {
                let index = (di * config.trials + i) as u64;
                let seed = trial_seed(config.master_seed, index);
                let mut rec = TrialRecord::new(index as usize, seed, delta);
                rec.firing_count = Some(f_a.len());
                rec.firing_count_b = Some(f_b.len());
                let run =
                    |instants: &[f64], params: &TemParams, spec: &KernelSpec, stream: u64| -> Result<(f64, f64)> {
                        // jitter can push the end instants out of the observation window
                        let t: Vec<f64> = perturb_instants(instants, config.variance, splitmix64(seed ^ stream))?
                            .into_iter()
                            .filter(|t| (0.0..period).contains(t))
                            .collect();
                        let est = reconstruct(&t, params, spec, x.pulse(), l, model)?;
                        Ok((relative_mse(x, &est, MSE_GRID_POINTS)?, est.condition_number))
                    };
                let mut notes = Vec::new();
                match run(&f_a.instants, &p_a, &spec_a, 1) {
                    Ok((m, c)) => {
                        rec.mse_alg1 = Some(m);
                        rec.cond_a = Some(c);
                    }
                    Err(e) => notes.push(format!("alg1: {e}")),
                }
                match run(&f_b.instants, &p_b, &spec_b, 2) {
                    Ok((m, c)) => {
                        rec.mse_alg2 = Some(m);
                        rec.cond_b = Some(c);
                    }
                    Err(e) => notes.push(format!("alg2: {e}")),
                }
                rec.ok = notes.is_empty();
                rec.note = notes.join("; ");
                rec
            })
            .collect();
        // paired: only trials where both schemes produced an estimate
        let (m1, m2): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| Some((r.mse_alg1?, r.mse_alg2?))).unzip();
        let (med1, med2) = (median(&m1), median(&m2));
        let gap = match (med1, med2) {
            (Some(a), Some(b)) => Some(to_db(a) - to_db(b)),
            _ => None,
        };
        let failures = rows.iter().filter(|r| !r.ok).count();
        if noiseless {
            checks.push(Check {
                name: format!("mse_delta{delta}_noiseless_exact"),
                passed: matches!((med1, med2), (Some(a), Some(b)) if a < 1e-6 && b < 1e-6) && failures == 0,
                detail: format!("K={k}, median MSE alg1 {}, alg2 {}", opt(med1), opt(med2)),
            });
        } else {
            checks.push(Check {
                name: format!("mse_delta{delta}_alg2_below_alg1"),
                passed: matches!(gap, Some(g) if g >= 1.0),
                detail: format!(
                    "K={k}, {} / {} firings, gap {} dB (reference band 2-6 dB)",
                    f_a.len(),
                    f_b.len(),
                    gap.map_or("n/a".into(), |g| format!("{g:.3}"))
                ),
            });
        }
        let ca: Vec<f64> = rows.iter().filter_map(|r| r.cond_a).collect();
        let cb: Vec<f64> = rows.iter().filter_map(|r| r.cond_b).collect();
        summary.push(SummaryRow {
            param: delta,
            trials: config.trials,
            failures,
            mean_firing_count: Some(0.5 * (f_a.len() + f_b.len()) as f64),
            kernel_order: Some(k),
            median_cond_a: median(&ca),
            median_cond_b: median(&cb),
            mean_cond_a: mean(&ca),
            mean_cond_b: mean(&cb),
            max_delay_error: None,
            max_amplitude_error: None,
            median_mse_alg1: med1,
            median_mse_alg2: med2,
            mad_mse_alg1: mad(&m1),
            mad_mse_alg2: mad(&m2),
            mse_alg1_db: med1.map(to_db),
            mse_alg2_db: med2.map(to_db),
            gap_db: gap,
        });
        records.extend(rows);
    }
    let scenario = if noiseless { "mse_noiseless" } else { "mse" };
    Ok(StudyReport { scenario: scenario.into(), master_seed: config.master_seed, records, summary, checks })
}
