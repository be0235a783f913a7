//! Record statistics of i.i.d. ℕ-valued sequences.
//!
//! A time n is a record time when X_n equals the running maximum M_n (ties
//! included). The record at time n is *simple* when M_n is attained exactly
//! once among X_1..X_n.

mod tail;

use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use tail::{
    format_rational, hurwitz_zeta, parse_rational, rational_to_f64, TailClass, TailDistribution, TailSpec,
};

use crate::error::{Error, Result};
use crate::seed;

/// Record bookkeeping for a finite sequence. Times are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordTrace {
    pub values: Vec<u64>,
    pub running_max: Vec<u64>,
    pub record_times: Vec<usize>,
    pub record_values: Vec<u64>,
    /// `simple[n-1]` tells whether M_n is attained exactly once in X_1..X_n.
    pub simple: Vec<bool>,
}

impl RecordTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_record_time(&self, n: usize) -> bool {
        self.record_times.binary_search(&n).is_ok()
    }

    /// CSV with columns `n,X_n,M_n,is_record,is_simple`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,X_n,M_n,is_record,is_simple")?;
        let mut rec = self.record_times.iter().peekable();
        for n in 1..=self.len() {
            let is_record = rec.peek() == Some(&&n);
            if is_record {
                rec.next();
            }
            writeln!(
                out,
                "{},{},{},{},{}",
                n,
                self.values[n - 1],
                self.running_max[n - 1],
                is_record as u8,
                self.simple[n - 1] as u8
            )?;
        }
        Ok(())
    }
}

pub fn record_times(values: &[u64]) -> Result<RecordTrace> {
    if values.is_empty() {
        return Err(Error::EmptyInput("record_times needs a nonempty sequence"));
    }
    let mut running_max = Vec::with_capacity(values.len());
    let mut simple = Vec::with_capacity(values.len());
    let mut record_times = Vec::new();
    let mut record_values = Vec::new();
    let mut max = values[0];
    let mut max_count = 0usize;
    for (i, &x) in values.iter().enumerate() {
        if i == 0 || x > max {
            max = x;
            max_count = 1;
        } else if x == max {
            max_count += 1;
        }
        if x == max {
            record_times.push(i + 1);
            record_values.push(x);
        }
        running_max.push(max);
        simple.push(max_count == 1);
    }
    Ok(RecordTrace { values: values.to_vec(), running_max, record_times, record_values, simple })
}

pub fn is_simple_record(trace: &RecordTrace, n: usize) -> Result<bool> {
    if n == 0 || n > trace.len() {
        return Err(Error::IndexOutOfRange { index: n, len: trace.len() });
    }
    Ok(trace.simple[n - 1])
}

/// Verdict on Σ_j (p_j / tail(j))².
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Criterion {
    Converges,
    Diverges,
    Undetermined { partial_sum: f64, terms: u64 },
}

/// Partial sum of the square-ratio series over the first `terms` indices,
/// stopping early where the tail vanishes.
pub fn criterion_partial_sum(p: &TailDistribution, terms: u64) -> f64 {
    let mut sum = 0.0;
    for j in 0..terms {
        let t = p.tail(j);
        if t <= 0.0 {
            break;
        }
        let ratio = p.mass(j) / t;
        sum += ratio * ratio;
    }
    sum
}

pub fn simple_records_criterion(p: &TailDistribution, partial_terms: u64) -> Criterion {
    if !p.support_infinite() {
        return Criterion::Diverges;
    }
    match p.tail_class() {
        TailClass::PolynomialDecay { .. } => Criterion::Converges,
        TailClass::Geometric { .. } => Criterion::Diverges,
        TailClass::ExplicitFinite { .. } => Criterion::Diverges,
        TailClass::Custom => Criterion::Undetermined {
            partial_sum: criterion_partial_sum(p, partial_terms),
            terms: partial_terms,
        },
    }
}

/// Φ(r) = ⌈(r+2)² / tail(r)⌉, saturating at `u64::MAX`.
///
/// tail is nonincreasing and (r+2)² is increasing, so the raw formula is
/// already nondecreasing and equals its own running maximum.
pub fn gauge(p: &TailDistribution, r: u64) -> Result<u64> {
    let square = (r as u128 + 2) * (r as u128 + 2);
    match p.tail_exact(r) {
        Some(t) => {
            if t.is_zero() {
                return Err(Error::BeyondSupport(r));
            }
            let value = BigRational::from_integer(BigInt::from(square)) / t;
            let ceil = value.numer().div_ceil(value.denom());
            Ok(ceil.to_u64().unwrap_or(u64::MAX))
        }
        None => {
            let t = p.tail(r);
            if t <= 0.0 {
                return Err(Error::BeyondSupport(r));
            }
            let v = (square as f64 / t).ceil();
            Ok(if v >= u64::MAX as f64 { u64::MAX } else { v as u64 })
        }
    }
}

/// Draws X_1..X_horizon for trajectory `index` of a run seeded by `base_seed`.
pub fn sample_sequence(p: &TailDistribution, horizon: usize, base_seed: u64, index: u64) -> Vec<u64> {
    let mut rng = seed::rng_for(base_seed, index);
    (0..horizon).map(|_| p.sample(&mut rng)).collect()
}

/// T_{k+1} ≤ Φ(R_k) for every record with T_k > horizon/10, skipping records
/// at the maximum of a finite support.
pub fn gauge_holds(p: &TailDistribution, trace: &RecordTrace, horizon: usize) -> bool {
    let start = horizon / 10;
    // a record at the top of a finite support is frozen: only ties follow it
    let frozen = p.support_max();
    trace
        .record_times
        .windows(2)
        .zip(&trace.record_values)
        .filter(|(w, r)| w[0] > start && Some(**r) != frozen)
        .all(|(w, &r)| match gauge(p, r) {
            Ok(bound) => (w[1] as u64) <= bound,
            Err(_) => false,
        })
}

/// Fraction of trajectories on which T_{k+1} ≤ Φ(R_k) holds for every
/// observed record with T_k > horizon/10. Records sitting at the maximum of a
/// finite support are skipped.
pub fn empirical_gauge_validation(p: &TailDistribution, horizon: usize, trials: usize, base_seed: u64) -> f64 {
    if horizon == 0 || trials == 0 {
        return 1.0;
    }
    let passes: usize = (0..trials)
        .into_par_iter()
        .map(|i| {
            let xs = sample_sequence(p, horizon, base_seed, i as u64);
            let trace = record_times(&xs).expect("nonempty");
            gauge_holds(p, &trace, horizon) as usize
        })
        .sum();
    passes as f64 / trials as f64
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimplicityStats {
    pub trials: usize,
    pub horizon: usize,
    /// Fraction of trajectories whose record at the horizon is simple.
    pub fraction_simple_at_horizon: Option<f64>,
    /// Mean over trajectories of the last time n ≤ horizon with M_n non-simple
    /// (0 when every record was simple).
    pub mean_last_violation_index: Option<f64>,
    /// Fraction of all (trajectory, step) pairs whose current record is non-simple.
    pub fraction_nonsimple_steps: Option<f64>,
}

pub fn empirical_eventual_simplicity(
    p: &TailDistribution,
    horizon: usize,
    trials: usize,
    base_seed: u64,
) -> SimplicityStats {
    if trials == 0 || horizon == 0 {
        return SimplicityStats { trials, horizon, ..Default::default() };
    }
    let per: Vec<(bool, usize, usize)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let xs = sample_sequence(p, horizon, base_seed, i as u64);
            let trace = record_times(&xs).expect("nonempty");
            let last_violation = trace.simple.iter().rposition(|s| !s).map(|i| i + 1).unwrap_or(0);
            let nonsimple = trace.simple.iter().filter(|s| !**s).count();
            (trace.simple[horizon - 1], last_violation, nonsimple)
        })
        .collect();
    let n = trials as f64;
    SimplicityStats {
        trials,
        horizon,
        fraction_simple_at_horizon: Some(per.iter().filter(|r| r.0).count() as f64 / n),
        mean_last_violation_index: Some(per.iter().map(|r| r.1 as f64).sum::<f64>() / n),
        fraction_nonsimple_steps: Some(per.iter().map(|r| r.2 as f64).sum::<f64>() / (n * horizon as f64)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// O(n²) restatement of the record definitions.
    fn naive(values: &[u64]) -> (Vec<usize>, Vec<bool>) {
        let mut times = Vec::new();
        let mut simple = Vec::new();
        for n in 1..=values.len() {
            let m = *values[..n].iter().max().unwrap();
            if values[n - 1] == m {
                times.push(n);
            }
            simple.push(values[..n].iter().filter(|&&x| x == m).count() == 1);
        }
        (times, simple)
    }

    #[test]
    fn simple_record_examples() {
        let t = record_times(&[3, 1, 3]).unwrap();
        assert!(!is_simple_record(&t, 3).unwrap());
        let t = record_times(&[3, 1, 5]).unwrap();
        assert!(is_simple_record(&t, 3).unwrap());
        let t = record_times(&[0, 2, 2, 5, 1, 5]).unwrap();
        assert!(!is_simple_record(&t, 6).unwrap());
        assert!(matches!(is_simple_record(&t, 7), Err(Error::IndexOutOfRange { .. })));
        assert!(is_simple_record(&t, 0).is_err());
    }

    #[test]
    fn record_time_examples() {
        let t = record_times(&[0, 2, 2, 5, 1, 5]).unwrap();
        assert_eq!(t.record_times, vec![1, 2, 3, 4, 6]);
        assert_eq!(t.record_values, vec![0, 2, 2, 5, 5]);
        let t = record_times(&[7]).unwrap();
        assert_eq!((t.record_times, t.record_values), (vec![1], vec![7]));
        assert_eq!(record_times(&[1, 2, 3, 4]).unwrap().record_times, vec![1, 2, 3, 4]);
        assert!(record_times(&[]).is_err());
    }

    #[test]
    fn criterion_verdicts() {
        assert_eq!(simple_records_criterion(&TailDistribution::telescoping(), 100), Criterion::Converges);
        let zeta = TailDistribution::new(TailSpec::Zeta { exponent: 2 }).unwrap();
        assert_eq!(simple_records_criterion(&zeta, 100), Criterion::Converges);
        let geo = TailDistribution::geometric_half();
        assert_eq!(simple_records_criterion(&geo, 100), Criterion::Diverges);
        // partial-sum oracle: every term equals 1/4
        let partial = criterion_partial_sum(&geo, 40);
        assert!((partial - 10.0).abs() < 1e-12);
        let fin = TailDistribution::new(TailSpec::Finite { masses: vec!["1/3".into(), "2/3".into()] }).unwrap();
        assert_eq!(simple_records_criterion(&fin, 100), Criterion::Diverges);
        let custom = TailDistribution::new(TailSpec::Custom { prefix: vec!["1/2".into()] }).unwrap();
        match simple_records_criterion(&custom, 50) {
            Criterion::Undetermined { partial_sum, terms } => {
                assert_eq!(terms, 50);
                assert!(partial_sum > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(gauge(&TailDistribution::geometric_half(), 3).unwrap(), 200);
        assert_eq!(gauge(&TailDistribution::telescoping(), 0).unwrap(), 4);
        assert_eq!(gauge(&TailDistribution::geometric_half(), 0).unwrap(), 4);
        // tail(1) = 1 - 1/ζ(2) = 1 - 6/π²
        let zeta = TailDistribution::new(TailSpec::Zeta { exponent: 2 }).unwrap();
        let tail1 = 1.0 - 6.0 / std::f64::consts::PI.powi(2);
        assert_eq!(gauge(&zeta, 1).unwrap(), (9.0 / tail1).ceil() as u64);
        assert_eq!(gauge(&zeta, 1).unwrap(), 23);
        let fin = TailDistribution::new(TailSpec::Finite { masses: vec!["1/2".into(), "1/2".into()] }).unwrap();
        assert!(matches!(gauge(&fin, 2), Err(Error::BeyondSupport(2))));
    }

    #[test]
    fn gauge_is_monotone() {
        for p in [
            TailDistribution::telescoping(),
            TailDistribution::geometric_half(),
            TailDistribution::new(TailSpec::Zeta { exponent: 2 }).unwrap(),
            TailDistribution::new(TailSpec::Custom { prefix: vec!["1/8".into(), "5/8".into()] }).unwrap(),
        ] {
            let mut prev = 0;
            for r in 0..200 {
                let g = gauge(&p, r).unwrap();
                assert!(g >= prev, "{:?} r={r}", p.spec());
                prev = g;
            }
        }
    }

    #[test]
    fn degenerate_validations() {
        let p = TailDistribution::telescoping();
        assert_eq!(empirical_gauge_validation(&p, 0, 10, 1), 1.0);
        let s = empirical_eventual_simplicity(&p, 100, 0, 1);
        assert_eq!(s.fraction_simple_at_horizon, None);
        let fin = TailDistribution::new(TailSpec::Finite { masses: vec!["1/4".into(), "3/4".into()] }).unwrap();
        assert_eq!(empirical_gauge_validation(&fin, 500, 20, 3), 1.0);
    }

    #[test]
    fn csv_export() {
        let t = record_times(&[0, 2, 2]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,X_n,M_n,is_record,is_simple\n1,0,0,1,1\n2,2,2,1,1\n3,2,2,1,0\n");
    }

    proptest::proptest! {
        #[test]
        fn traces_match_naive_oracle(values in proptest::collection::vec(0u64..6, 1..60)) {
            let trace = record_times(&values).unwrap();
            let (times, simple) = naive(&values);
            proptest::prop_assert_eq!(&trace.record_times, &times);
            proptest::prop_assert_eq!(&trace.simple, &simple);
            for (n, m) in trace.running_max.iter().enumerate() {
                proptest::prop_assert_eq!(*m, *values[..=n].iter().max().unwrap());
            }
            proptest::prop_assert!(trace.record_values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn sequences_are_deterministic() {
        let p = TailDistribution::telescoping();
        assert_eq!(sample_sequence(&p, 1000, 5, 2), sample_sequence(&p, 1000, 5, 2));
        assert_ne!(sample_sequence(&p, 1000, 5, 2), sample_sequence(&p, 1000, 5, 3));
    }
}
