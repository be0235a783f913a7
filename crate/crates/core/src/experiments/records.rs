use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Event, ExperimentConfig, Manifest, RunOutput, VerifyCheck};
use crate::error::Result;
use crate::records::{self, gauge_holds, record_times, sample_sequence, simple_records_criterion, TailDistribution};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TrajectoryRow {
    law: String,
    index: u64,
    simple_at_horizon: bool,
    last_violation: usize,
    nonsimple_steps: usize,
    records: usize,
    gauge_ok: bool,
}

fn trajectories(p: &TailDistribution, law: &str, cfg: &ExperimentConfig) -> Vec<TrajectoryRow> {
    let horizon = cfg.horizon as usize;
    if horizon == 0 {
        return Vec::new();
    }
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let xs = sample_sequence(p, horizon, cfg.seed, i);
            let t = record_times(&xs).expect("nonempty");
            TrajectoryRow {
                law: law.into(),
                index: i,
                simple_at_horizon: t.simple[horizon - 1],
                last_violation: t.simple.iter().rposition(|s| !s).map_or(0, |k| k + 1),
                nonsimple_steps: t.simple.iter().filter(|s| !**s).count(),
                records: t.record_times.len(),
                gauge_ok: gauge_holds(p, &t, horizon),
            }
        })
        .collect()
}

struct Aggregate {
    simple_at_horizon: Option<f64>,
    nonsimple_steps: Option<f64>,
    gauge: Option<f64>,
}

fn aggregate(rows: &[&TrajectoryRow], horizon: u64) -> Aggregate {
    if rows.is_empty() || horizon == 0 {
        return Aggregate { simple_at_horizon: None, nonsimple_steps: None, gauge: None };
    }
    let n = rows.len() as f64;
    Aggregate {
        simple_at_horizon: Some(rows.iter().filter(|r| r.simple_at_horizon).count() as f64 / n),
        nonsimple_steps: Some(rows.iter().map(|r| r.nonsimple_steps as f64).sum::<f64>() / (n * horizon as f64)),
        gauge: Some(rows.iter().filter(|r| r.gauge_ok).count() as f64 / n),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v}"))
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    out.header(&[
        "law",
        "trials",
        "horizon",
        "criterion",
        "fraction_simple_at_horizon",
        "fraction_nonsimple_steps",
        "gauge_validation",
    ]);
    let laws = [("default", &cfg.records.tail), ("contrast", &cfg.records.contrast)];
    let mut all = Vec::new();
    for (label, spec) in laws {
        let p = TailDistribution::new(spec.clone())?;
        let verdict = simple_records_criterion(&p, cfg.records.partial_terms);
        let rows = trajectories(&p, label, cfg);
        let agg = aggregate(&rows.iter().collect::<Vec<_>>(), cfg.horizon);
        out.row(vec![
            label.into(),
            cfg.trials.to_string(),
            cfg.horizon.to_string(),
            format!("{verdict:?}"),
            opt(agg.simple_at_horizon),
            opt(agg.nonsimple_steps),
            opt(agg.gauge),
        ]);
        out.metric(&format!("{label}.criterion"), format!("{verdict:?}"));
        out.metric(&format!("{label}.fraction_simple_at_horizon"), agg.simple_at_horizon);
        out.metric(&format!("{label}.fraction_nonsimple_steps"), agg.nonsimple_steps);
        out.metric(&format!("{label}.gauge_validation"), agg.gauge);
        if label == "default" {
            out.metric("default.gauge_at_0", records::gauge(&p, 0)?);
            out.check("simple_at_horizon >= 0.95", agg.simple_at_horizon.is_some_and(|x| x >= 0.95));
            out.check("gauge_validation >= 0.99", agg.gauge.is_some_and(|x| x >= 0.99));
        } else {
            out.check("contrast nonsimple steps > 0.05", agg.nonsimple_steps.is_some_and(|x| x > 0.05));
        }
        all.extend(rows);
    }
    out.events = all
        .into_iter()
        .map(|r| Event::new(seed::trajectory_seed(cfg.seed, r.index), cfg.horizon, "trajectory", r))
        .collect();
    Ok(out)
}

/// The logged per-trajectory rows must reproduce the reported fractions.
pub(super) fn verify(cfg: &ExperimentConfig, manifest: &Manifest, events: &[Event]) -> Result<Vec<VerifyCheck>> {
    let rows: Vec<TrajectoryRow> =
        events.iter().map(|e| serde_json::from_value(e.payload.clone())).collect::<std::result::Result<_, _>>()?;
    let mut checks = Vec::new();
    for label in ["default", "contrast"] {
        let mine: Vec<&TrajectoryRow> = rows.iter().filter(|r| r.law == label).collect();
        checks.push(VerifyCheck::new(format!("{label} trajectory count"), mine.len() == cfg.trials || cfg.horizon == 0, mine.len().to_string()));
        let agg = aggregate(&mine, cfg.horizon);
        for (name, value) in [
            ("fraction_simple_at_horizon", agg.simple_at_horizon),
            ("fraction_nonsimple_steps", agg.nonsimple_steps),
            ("gauge_validation", agg.gauge),
        ] {
            let logged = manifest.metrics.get(&format!("{label}.{name}")).and_then(|v| v.as_f64());
            checks.push(VerifyCheck::new(format!("{label} {name}"), logged == value, format!("{value:?}")));
        }
    }
    Ok(checks)
}
