mod common;

use fritem::bench::{table1_signal, TABLE1_BOUND_FRACTION};
use fritem::encoder::{instants_from_csv, instants_to_csv, DEFAULT_DELTA_SAFETY};
use fritem::{
    design, encode, filter, measurements, suggest_delta, validate_rate, Error, FilteredSignal, FiringRecord, FriSignal,
    PulseShape, TemParams,
};
use rand::Rng;

#[test]
fn zero_input_spacing() {
    let y = FilteredSignal::zero(&design(2, true, 1.0).unwrap());
    let p = TemParams::new(1.0, 1.0, 0.5, 0.0).unwrap();
    let rec = encode(&y, &p, 0.0, 2.0).unwrap();
    assert_eq!(rec.instants.len(), 3);
    for (t, want) in rec.instants.iter().zip([0.5, 1.0, 1.5]) {
        assert!((t - want).abs() < 1e-13);
    }
}

#[test]
fn table1_l10_firing_count() {
    let (_, _, y) = table1_signal(10, 2.5, TABLE1_BOUND_FRACTION, 99).unwrap();
    let p = TemParams::new(2.5, 1.0, 0.07, y.max_abs()).unwrap();
    let n = encode(&y, &p, 0.0, 1.0).unwrap().len();
    assert!(n.abs_diff(36) <= 2, "{n}");
}

#[test]
fn bias_below_bound_is_rejected() {
    let x = FriSignal::new(PulseShape::Dirac, vec![1.0], vec![0.3], 1.0).unwrap();
    let y = filter(&x, &design(3, true, 1.0).unwrap()).unwrap();
    let p = TemParams::new(1.0, 1.0, 0.1, 0.0).unwrap();
    assert!(matches!(encode(&y, &p, 0.0, 1.0), Err(Error::BiasBelowBound { .. })));
    assert!(TemParams::new(1.0, 1.0, 0.1, 1.0).is_err());
    assert!(TemParams::new(1.0, 0.0, 0.1, 0.0).is_err());
}

fn random_case(rng: &mut impl Rng) -> (FilteredSignal, TemParams) {
    let l = rng.random_range(1..5);
    let amps: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..1.0)).collect();
    let delays: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..1.0)).collect();
    let pulse = if rng.random_bool(0.5) { PulseShape::Dirac } else { PulseShape::bspline(3, 20.0).unwrap() };
    let x = FriSignal::new(pulse, amps, delays, 1.0).unwrap();
    let y = filter(&x, &design(rng.random_range(1..8), rng.random_bool(0.5), 1.0).unwrap()).unwrap();
    let c = y.max_abs();
    let b = c * rng.random_range(1.2..4.0) + 0.01;
    let p = TemParams::new(b, rng.random_range(0.5..2.0), rng.random_range(0.01..0.1), c).unwrap();
    (y, p)
}

#[test]
fn intervals_integrate_to_threshold() {
    let mut rng = common::rng(3);
    for _ in 0..20 {
        let (y, p) = random_case(&mut rng);
        let rec = encode(&y, &p, 0.0, 1.0).unwrap();
        let meas = measurements(&rec.instants, &p).unwrap();
        for (w, m) in rec.instants.windows(2).zip(&meas) {
            let q = common::simpson(&|t| y.eval(t), w[0], w[1], 1e-14);
            assert!((q - m).abs() < 1e-10, "{q} vs {m}");
        }
        // the reset at t_start counts as the first interval boundary
        let first = common::simpson(&|t| y.eval(t) + p.b(), 0.0, rec.instants[0], 1e-14);
        assert!((first - p.threshold()).abs() < 1e-10);
    }
}

#[test]
fn measurement_arithmetic() {
    let p = TemParams::new(1.0, 1.0, 0.5, 0.0).unwrap();
    assert_eq!(measurements(&[0.0, 0.5], &p).unwrap(), vec![0.0]);
    let p = TemParams::new(2.0, 1.0, 1.0, 0.0).unwrap();
    assert_eq!(measurements(&[0.0, 0.25, 0.75], &p).unwrap(), vec![0.5, 0.0]);
    assert!(matches!(measurements(&[0.0, 0.5, 0.5], &p), Err(Error::UnorderedFirings { index: 2 })));
}

#[test]
fn rate_validation() {
    let p = TemParams::new(0.9, 1.0, 0.07, 0.3).unwrap();
    assert!(validate_rate(&p, 3, 1.0).ok);
    let p = TemParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
    let r = validate_rate(&p, 1, 1.0);
    assert!(!r.ok);
    assert_eq!(r.min_rate, 1.0);
    assert_eq!(r.required, 4.0);
}

#[test]
fn firing_count_within_rate_bounds() {
    let mut rng = common::rng(8);
    for _ in 0..50 {
        let (y, p) = random_case(&mut rng);
        let t_obs = rng.random_range(0.5..3.0);
        let n = encode(&y, &p, 0.0, t_obs).unwrap().len() as f64;
        let lo = (t_obs * (p.b() - p.c()) / p.threshold()).floor() - 1.0;
        let hi = (t_obs * (p.b() + p.c()) / p.threshold()).ceil() + 1.0;
        assert!(n >= lo && n <= hi, "{lo} <= {n} <= {hi}");
    }
}

#[test]
fn suggested_threshold() {
    assert_eq!(suggest_delta(1.0, 1.0, 0.0, 0, 1.0, 1.0).unwrap(), 0.5);
    // a bound of 0.1·b leaves the table's 0.07 inside the admissible range
    assert!(suggest_delta(0.9, 1.0, 0.09, 3, 1.0, 1.0).unwrap() >= 0.07);
    let mut rng = common::rng(2);
    for _ in 0..100 {
        let b: f64 = rng.random_range(0.1..5.0);
        let c = b * rng.random_range(0.0..0.99);
        let k = rng.random_range(0..50);
        let period = rng.random_range(0.1..10.0);
        let kappa = rng.random_range(0.1..3.0);
        let d = suggest_delta(b, kappa, c, k, period, DEFAULT_DELTA_SAFETY).unwrap();
        assert!(validate_rate(&TemParams::new(b, kappa, d, c).unwrap(), k, period).ok);
    }
    assert!(suggest_delta(1.0, 1.0, 1.0, 2, 1.0, 1.0).is_err());
}

#[test]
fn window_offset_and_reset() {
    let y = FilteredSignal::zero(&design(2, true, 1.0).unwrap());
    let p = TemParams::new(2.0, 1.0, 0.5, 0.0).unwrap();
    let rec = encode(&y, &p, 10.0, 1.0).unwrap();
    assert_eq!(rec.len(), 3);
    assert!((rec.instants[0] - 10.25).abs() < 1e-13);
    assert!(rec.instants.iter().all(|t| (10.0..11.0).contains(t)));
}

#[test]
fn csv_round_trip_and_validation() {
    let t = vec![0.1, 0.2500000000000001, 0.7];
    let csv = instants_to_csv(&t);
    assert!(csv.starts_with("n,t_n\n"));
    assert_eq!(instants_from_csv(&csv).unwrap(), t);
    assert!(instants_from_csv("n,t_n\n0,0.5\n1,0.4\n").is_err());
    assert!(instants_from_csv("n,t_n\n0,0.5\n2,0.6\n").is_err());
    assert!(instants_from_csv("t\n0.5\n").is_err());
    assert!(instants_from_csv("n,t_n\n0,abc\n").is_err());
}

#[test]
fn record_json_round_trip() {
    let rec = FiringRecord::new(TemParams::new(1.0, 1.0, 0.5, 0.2).unwrap(), vec![0.3, 0.6]).unwrap();
    assert_eq!(FiringRecord::from_json(&rec.to_json().unwrap()).unwrap(), rec);
    assert!(
        FiringRecord::from_json(r#"{"params": {"b": 1, "kappa": 1, "delta": 0.5}, "instants": [0.5, 0.1]}"#).is_err()
    );
    assert!(
        FiringRecord::from_json(r#"{"params": {"b": 1, "kappa": 1, "delta": 0.5, "c": 2}, "instants": []}"#).is_err()
    );
}
