use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Event, ExperimentConfig, Manifest, RunOutput, VerifyCheck};
use crate::chabauty::{LampConfiguration, Subgroup, WreathDiagonal};
use crate::error::{Error, Result};
use crate::groups::{BaseElement, BaseGroup, Group, Site, WreathElement, WreathGroup};
use crate::seed;
use crate::walks::{
    box_sites, compare_equivariance, eta_pool, fingerprint_census, lamp_limit, lazy_uniform_steps, martingale_mass,
    normalish_counts, single_site_probe, UniformSampler,
};

/// A limit configuration on box(radius), as logged.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct LoggedConfiguration {
    radius: i64,
    values: Vec<(Site, BaseElement)>,
    uncertified: Vec<Site>,
}

impl LoggedConfiguration {
    fn from_conf(conf: &LampConfiguration, radius: i64) -> Self {
        Self {
            radius,
            values: conf.values.iter().map(|(s, v)| (s.clone(), v.clone())).collect(),
            uncertified: conf.uncertified.iter().cloned().collect(),
        }
    }

    fn to_conf(&self, base: &BaseGroup) -> LampConfiguration {
        LampConfiguration {
            values: self.values.iter().cloned().collect(),
            uncertified: self.uncertified.iter().cloned().collect(),
            window: Some(box_sites(base, self.radius).into_iter().collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct EquivarianceEvent {
    pair: u64,
    g: String,
    w: LoggedConfiguration,
    gw: LoggedConfiguration,
    compared: usize,
    undetermined: usize,
    mismatches: usize,
}

fn parse_lamp(lamp: &BaseGroup, text: &str) -> Result<BaseElement> {
    let a = lamp.parse(text)?;
    if a == lamp.identity() {
        return Err(Error::Config("a must be a nontrivial lamp value".into()));
    }
    Ok(a)
}

/// A product of 1..=len lazy steps drawn from the pair's own stream.
fn random_g(group: &WreathGroup, steps: &[WreathElement], base_seed: u64, pair: u64, len: usize) -> WreathElement {
    let mut rng = seed::rng_for(seed::splitmix64(base_seed ^ 0x9e0), pair);
    let n = rng.gen_range(1..=len.max(1));
    (0..n).fold(group.identity(), |acc, _| group.mul(&acc, &steps[rng.gen_range(0..steps.len())]))
}

pub(super) fn run_srs(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let c = &cfg.wreath;
    let group = WreathGroup::new(c.lamp.clone(), c.base.clone());
    let a = parse_lamp(&group.lamp, &c.a)?;
    let steps = lazy_uniform_steps(&group);
    let sampler = UniformSampler { elements: steps.clone() };
    let mut out = RunOutput::default();
    out.header(&["part", "metric", "value", "trials", "horizon", "guard"]);
    let row = |out: &mut RunOutput, part: &str, metric: &str, value: String| {
        out.row(vec![
            part.into(),
            metric.into(),
            value,
            cfg.trials.to_string(),
            cfg.horizon.to_string(),
            c.guard.to_string(),
        ]);
    };

    // certification on box(window_radius)
    let sites = box_sites(&group.base, c.window_radius);
    let window: BTreeSet<Site> = sites.iter().cloned().collect();
    let certified: Vec<usize> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let rec = lamp_limit(&group, &sampler, &group.identity(), cfg.horizon, cfg.seed, i, Some(window.clone()), c.guard);
            sites.iter().filter(|s| rec.is_certified(s)).count()
        })
        .collect();
    for (i, n) in certified.iter().enumerate() {
        let payload = serde_json::json!({ "index": i, "certified": n, "sites": sites.len() });
        out.events.push(Event::new(seed::trajectory_seed(cfg.seed, i as u64), cfg.horizon, "certification", payload));
    }
    let total = (sites.len() * certified.len()) as f64;
    let fraction = (total > 0.0).then(|| certified.iter().sum::<usize>() as f64 / total);
    let min_fraction = certified.iter().map(|&n| n as f64 / sites.len() as f64).reduce(f64::min);
    out.metric("certified_fraction", fraction);
    out.metric("min_certified_fraction", min_fraction);
    out.check("certified_fraction >= 0.9", fraction.is_some_and(|x| x >= 0.9));
    row(&mut out, "certification", "certified_fraction", format!("{fraction:?}"));

    // equivariance on random (g, seed) pairs
    let radius = c.probe_radius + c.g_length as i64;
    let probe = single_site_probe(&group, &box_sites(&group.base, c.probe_radius));
    let win: BTreeSet<Site> = box_sites(&group.base, radius).into_iter().collect();
    let pairs: Vec<EquivarianceEvent> = (0..c.equivariance_pairs as u64)
        .into_par_iter()
        .map(|j| {
            let g = random_g(&group, &steps, cfg.seed, j, c.g_length);
            let w = lamp_limit(&group, &sampler, &group.identity(), cfg.horizon, cfg.seed, j, Some(win.clone()), c.guard);
            let gw = lamp_limit(&group, &sampler, &g, cfg.horizon, cfg.seed, j, Some(win.clone()), c.guard);
            let (w, gw) = (w.configuration(), gw.configuration());
            let o = compare_equivariance(&group, &a, &g, &w, &gw, &probe)?;
            Ok(EquivarianceEvent {
                pair: j,
                g: group.format(&g),
                w: LoggedConfiguration::from_conf(&w, radius),
                gw: LoggedConfiguration::from_conf(&gw, radius),
                compared: o.compared,
                undetermined: o.undetermined,
                mismatches: o.mismatches,
            })
        })
        .collect::<Result<_>>()?;
    let compared: usize = pairs.iter().map(|p| p.compared).sum();
    let undetermined: usize = pairs.iter().map(|p| p.undetermined).sum();
    let mismatches: usize = pairs.iter().map(|p| p.mismatches).sum();
    out.metric("equivariance_pairs", pairs.len());
    out.metric("equivariance_compared", compared);
    out.metric("equivariance_undetermined", undetermined);
    out.metric("equivariance_mismatches", mismatches);
    out.check("equivariance exact", mismatches == 0 && (pairs.is_empty() || compared > 0));
    row(&mut out, "equivariance", "mismatches", mismatches.to_string());
    row(&mut out, "equivariance", "compared", compared.to_string());
    row(&mut out, "equivariance", "undetermined", undetermined.to_string());
    for p in pairs {
        out.events.push(Event::new(seed::trajectory_seed(cfg.seed, p.pair), cfg.horizon, "equivariance", p));
    }

    // fingerprint census, non-abelian lamps and the abelian control
    let control = WreathGroup::new(c.control_lamp.clone(), c.base.clone());
    let control_a = parse_lamp(&control.lamp, &c.control_a)?;
    let control_sampler = UniformSampler { elements: lazy_uniform_steps(&control) };
    let main = fingerprint_census(&group, &sampler, &a, c.census_radius, cfg.horizon, cfg.trials, cfg.seed, c.guard)?;
    let ctrl = fingerprint_census(
        &control,
        &control_sampler,
        &control_a,
        c.census_radius,
        cfg.horizon,
        cfg.trials,
        cfg.seed,
        c.guard,
    )?;
    out.metric("census_distinct", main.distinct());
    out.metric("census_with_undetermined", main.with_undetermined);
    out.metric("control_census_distinct", ctrl.distinct());
    out.check("control census has one fingerprint", ctrl.distinct() == 1 || cfg.trials == 0);
    out.check("census has at least two fingerprints", main.distinct() >= 2);
    row(&mut out, "census", "distinct", main.distinct().to_string());
    row(&mut out, "census_control", "distinct", ctrl.distinct().to_string());
    for (label, census) in [("census", &main), ("census_control", &ctrl)] {
        for (fp, count) in &census.counts {
            let payload = serde_json::json!({ "window": census.window_label, "fingerprint": fp, "count": count });
            out.events.push(Event::new(cfg.seed, cfg.horizon, label, payload));
        }
    }
    Ok(out)
}

/// Recomputes every logged equivariance comparison from the logged limit
/// configurations.
pub(super) fn verify_srs(cfg: &ExperimentConfig, events: &[Event]) -> Result<Vec<VerifyCheck>> {
    let c = &cfg.wreath;
    let group = WreathGroup::new(c.lamp.clone(), c.base.clone());
    let a = parse_lamp(&group.lamp, &c.a)?;
    let probe = single_site_probe(&group, &box_sites(&group.base, c.probe_radius));
    let mut checks = Vec::new();
    let mut agree = 0usize;
    let mut total = 0usize;
    let mut mismatches = 0usize;
    for e in events.iter().filter(|e| e.event_kind == "equivariance") {
        let p: EquivarianceEvent = serde_json::from_value(e.payload.clone())?;
        let g = group.parse(&p.g)?;
        let o = compare_equivariance(&group, &a, &g, &p.w.to_conf(&group.base), &p.gw.to_conf(&group.base), &probe)?;
        total += 1;
        mismatches += o.mismatches;
        agree += (o.compared == p.compared && o.undetermined == p.undetermined && o.mismatches == p.mismatches) as usize;
    }
    checks.push(VerifyCheck::new("equivariance recomputed", agree == total, format!("{agree}/{total}")));
    checks.push(VerifyCheck::new("equivariance equalities", mismatches == 0, format!("{mismatches} mismatches")));
    checks.push(VerifyCheck::new(
        "equivariance pair count",
        total == c.equivariance_pairs,
        total.to_string(),
    ));
    Ok(checks)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct NormalishEvent {
    index: u64,
    counts: Vec<usize>,
}

fn normalish_ok(counts: &[usize]) -> bool {
    counts.windows(2).all(|w| w[0] <= w[1]) && counts.iter().enumerate().all(|(r, &c)| c >= r)
}

pub(super) fn run_martingale(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let c = &cfg.martingale;
    let group = WreathGroup::new(c.lamp.clone(), c.base.clone());
    let a = parse_lamp(&group.lamp, &c.a)?;
    let steps = lazy_uniform_steps(&group);
    let sampler = UniformSampler { elements: steps.clone() };
    let origin = Site::Point(group.base.identity());
    let h = group.delta(origin, a.clone());
    let pool = eta_pool(&group, &sampler, c.pool, cfg.horizon, seed::splitmix64(cfg.seed ^ 0xe7a), c.guard);
    let checkpoints: Vec<u64> = (0..=cfg.horizon / c.checkpoint_every)
        .map(|k| k * c.checkpoint_every)
        .chain(std::iter::once(cfg.horizon))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let runs: Vec<_> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| martingale_mass(&group, &sampler, &h, &a, &pool, &checkpoints, cfg.seed, i))
        .collect();
    let mut out = RunOutput::default();
    out.header(&["index", "terminal_estimate", "near_dirac", "terminal_undetermined", "pool", "horizon"]);
    for r in &runs {
        let last = r.points.last();
        out.row(vec![
            r.index.to_string(),
            r.terminal().map_or_else(String::new, |x| x.to_string()),
            r.near_dirac(c.tolerance).to_string(),
            last.map_or(0, |p| p.undetermined).to_string(),
            c.pool.to_string(),
            cfg.horizon.to_string(),
        ]);
        for p in &r.points {
            out.events.push(Event::new(seed::trajectory_seed(cfg.seed, r.index), p.step, "checkpoint", p));
        }
    }
    let near = runs.iter().filter(|r| r.near_dirac(c.tolerance)).count();
    let fraction = (!runs.is_empty()).then(|| near as f64 / runs.len() as f64);
    out.metric("near_dirac_fraction", fraction);
    out.metric("near_dirac", near);
    out.metric("pool", pool.len());
    out.check("near_dirac_fraction >= 0.9", fraction.is_some_and(|x| x >= 0.9));

    // normalish witness counts of limit subgroups H(w)
    let z = steps;
    let counts: Vec<NormalishEvent> = (0..c.normalish_subgroups as u64)
        .into_par_iter()
        .map(|i| {
            let rec = lamp_limit(&group, &sampler, &group.identity(), cfg.horizon, cfg.seed, i, None, c.guard);
            let hw = Subgroup::family(WreathDiagonal::new(&group, a.clone(), rec.configuration())?);
            Ok(NormalishEvent { index: i, counts: normalish_counts(&group, &hw, &z, c.normalish_max_radius) })
        })
        .collect::<Result<_>>()?;
    let ok = counts.iter().filter(|e| normalish_ok(&e.counts)).count();
    out.metric("normalish_subgroups", counts.len());
    out.metric("normalish_ok", ok);
    out.metric("normalish_min_counts", counts.iter().map(|e| e.counts.clone()).min());
    out.check("normalish counts nondecreasing and >= r", ok == counts.len());
    for e in counts {
        out.events.push(Event::new(seed::trajectory_seed(cfg.seed, e.index), cfg.horizon, "normalish", e));
    }
    Ok(out)
}

pub(super) fn verify_martingale(cfg: &ExperimentConfig, manifest: &Manifest, events: &[Event]) -> Result<Vec<VerifyCheck>> {
    let c = &cfg.martingale;
    let mut terminal: std::collections::BTreeMap<u64, Option<f64>> = Default::default();
    for e in events.iter().filter(|e| e.event_kind == "checkpoint" && e.step == cfg.horizon) {
        let est = e.payload.get("estimate").and_then(|v| v.as_f64());
        terminal.insert(e.seed, est);
    }
    let near = terminal.values().filter(|x| x.is_some_and(|v| v <= c.tolerance || v >= 1.0 - c.tolerance)).count();
    let mut checks = vec![VerifyCheck::new(
        "near-Dirac count",
        manifest.metric_u64("near_dirac") == Some(near as u64) && terminal.len() == cfg.trials,
        format!("{near}/{}", terminal.len()),
    )];
    let mut ok = 0;
    let mut total = 0;
    for e in events.iter().filter(|e| e.event_kind == "normalish") {
        let n: NormalishEvent = serde_json::from_value(e.payload.clone())?;
        total += 1;
        ok += normalish_ok(&n.counts) as usize;
    }
    checks.push(VerifyCheck::new(
        "normalish counts",
        manifest.metric_u64("normalish_ok") == Some(ok as u64) && total == c.normalish_subgroups,
        format!("{ok}/{total}"),
    ));
    Ok(checks)
}
