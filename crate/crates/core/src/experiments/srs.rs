use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Event, ExperimentConfig, ExperimentKind, Manifest, RunOutput, VerifyCheck, BUILDER};
use crate::chabauty::{
    fingerprint_of_hex, mask_hex, ConjugationTracker, GenericTracker, PermWreathSum, Subgroup, ThompsonH, ThompsonTracker,
};
use crate::error::{Error, Result};
use crate::groups::{Group, Site, Thompson, ThompsonElement, WreathGroup};
use crate::measure::{check_artifact, AbcReport, BuilderArtifact, BuilderConfig, BuilderState, BuiltMeasure, WitnessSearch};
use crate::records::TailDistribution;
use crate::walks::{run_pipeline, TrajectoryOutcome};

/// The elements of one window, formatted, so that verify can decide which
/// logged members are the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct WindowEvent {
    label: String,
    elements: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ChangesEvent {
    index: u64,
    label: String,
    size: usize,
    /// (step, mask_hex)
    changes: Vec<(u64, String)>,
}

struct Setup<'a, G: Group> {
    group: G,
    h: Subgroup<G>,
    h0: G::Element,
    i_max: usize,
    delta_cap: usize,
    windows: usize,
    guard: f64,
    cfg: &'a ExperimentConfig,
}

fn run_srs<G, T, F>(s: Setup<'_, G>, make_tracker: F) -> Result<RunOutput>
where
    G: WitnessSearch,
    T: ConjugationTracker<G>,
    F: Fn(&[G::Element]) -> T + Sync,
{
    let cfg = s.cfg;
    let config = BuilderConfig { i_max: s.i_max, delta_cap: s.delta_cap, ..Default::default() };
    let state = BuilderState::build(s.group.clone(), s.h, s.h0, TailDistribution::telescoping(), config)?;
    let measure = BuiltMeasure::assemble(&state);
    let artifact = BuilderArtifact::from_build(&state, &measure);
    let mut out = RunOutput::default();

    let check = check_artifact(&s.group, &artifact)?;
    out.metric("tile_sums_exact", check.tile_sums_exact);
    out.metric("tile_masses_match_law", check.tile_masses_match_law);
    out.metric("symmetric", check.symmetric);
    out.metric("entropy_mu", check.entropy.entropy_mu);
    out.metric("entropy_bound", check.entropy.bound);
    out.metric("entropy_slack", check.entropy.slack);
    out.metric("support", measure.masses().len());
    out.check("tile masses sum exactly to p_i", check.tile_sums_exact && check.tile_masses_match_law);
    out.check("measure symmetric", check.symmetric);
    out.check("entropy bound holds", check.entropy.holds);
    let capped = state.capped_levels();
    out.metric("capped_levels", &capped);
    if !capped.is_empty() {
        out.warnings.push(format!("Δ cap {} saturated at levels {capped:?}", s.delta_cap));
    }
    out.files.push((BUILDER.into(), (artifact.to_json()? + "\n").into_bytes()));

    let windows: Vec<_> = (1..=s.windows).map(|j| state.q_window(j)).collect();
    for w in &windows {
        let payload = WindowEvent { label: w.label.clone(), elements: w.elements().iter().map(|x| s.group.format(x)).collect() };
        out.events.push(Event::new(cfg.seed, 0, "window", payload));
    }
    out.metric("window_sizes", windows.iter().map(|w| w.len()).collect::<Vec<_>>());
    let outcomes = run_pipeline(&measure, &windows, make_tracker, cfg.horizon, cfg.trials, cfg.seed, s.guard)?;

    out.header(&[
        "index",
        "seed",
        "horizon",
        "records",
        "k0",
        "abc",
        "stabilized",
        "stabilization_index",
        "nontrivial",
        "draws",
        "truncated",
        "capped_levels",
    ]);
    for o in &outcomes {
        out.row(vec![
            o.index.to_string(),
            o.seed.to_string(),
            o.horizon.to_string(),
            o.abc.records.len().to_string(),
            o.abc.k0.map_or_else(String::new, |k| k.to_string()),
            o.abc_holds().to_string(),
            o.windows.iter().map(|w| w.stabilized.to_string()).collect::<Vec<_>>().join(";"),
            o.windows.iter().map(|w| w.stabilization_index.to_string()).collect::<Vec<_>>().join(";"),
            o.windows.iter().map(|w| w.nontrivial.to_string()).collect::<Vec<_>>().join(";"),
            o.stats.draws.to_string(),
            o.stats.truncated.to_string(),
            capped.len().to_string(),
        ]);
        out.events.push(Event::new(o.seed, o.horizon, "trajectory", o));
        for t in &o.traces {
            let changes = t.changes.iter().map(|(step, m)| (*step, mask_hex(m))).collect();
            let payload = ChangesEvent { index: o.index, label: t.label.clone(), size: t.size, changes };
            out.events.push(Event::new(o.seed, t.stabilization_index(), "trace", payload));
        }
    }
    summarize(&mut out, &outcomes, s.windows);
    Ok(out)
}

fn fraction(n: usize, d: usize) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

fn summarize(out: &mut RunOutput, outcomes: &[TrajectoryOutcome], windows: usize) {
    let n = outcomes.len();
    let abc = outcomes.iter().filter(|o| o.abc_holds()).count();
    let stabilized = outcomes.iter().filter(|o| o.all_stabilized()).count();
    let stab_nontrivial = outcomes.iter().filter(|o| o.stabilized_nontrivial()).count();
    let per_window: Vec<usize> =
        (0..windows).map(|j| outcomes.iter().filter(|o| o.windows[j].stabilized && o.windows[j].nontrivial).count()).collect();
    let stabilized_windows: Vec<usize> = (0..windows).map(|j| outcomes.iter().filter(|o| o.windows[j].stabilized).count()).collect();
    // the limit is nontrivial as soon as some window shows a non-identity member
    let limit_nontrivial = outcomes.iter().filter(|o| o.windows.iter().any(|w| w.stabilized && w.nontrivial)).count();
    out.metric("trajectories", n);
    out.metric("abc", abc);
    out.metric("abc_fraction", fraction(abc, n));
    out.metric("stabilized", stabilized);
    out.metric("stabilized_fraction", fraction(stabilized, n));
    out.metric("stabilized_nontrivial", stab_nontrivial);
    out.metric("stabilized_windows", stabilized_windows);
    out.metric("nontrivial_windows", per_window);
    out.metric("limit_nontrivial", limit_nontrivial);
    out.metric("truncated_draws", outcomes.iter().map(|o| o.stats.truncated).sum::<u64>());
    out.metric("draws", outcomes.iter().map(|o| o.stats.draws).sum::<u64>());
    out.check("abc holds on >= 90% of seeds", fraction(abc, n).is_some_and(|x| x >= 0.9));
    out.check("traces stabilize on >= 90% of seeds", fraction(stabilized, n).is_some_and(|x| x >= 0.9));
    out.check("every stabilized trace has a non-identity member", n > 0 && stab_nontrivial == n);
}

pub(super) fn run_thompson(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let c = &cfg.thompson;
    let f = ThompsonElement::default_f();
    let h = Arc::new(ThompsonH::new(f.clone())?);
    let setup = Setup {
        group: Thompson,
        h: Subgroup::Family(h.clone()),
        h0: f,
        i_max: c.i_max,
        delta_cap: c.delta_cap,
        windows: c.windows,
        guard: c.guard,
        cfg,
    };
    run_srs(setup, |e| ThompsonTracker::new(h.clone(), e))
}

fn permwreath_group(cfg: &ExperimentConfig) -> WreathGroup {
    WreathGroup::permutational(cfg.permwreath.lamp.clone(), cfg.permwreath.base.clone())
}

pub(super) fn run_permwreath(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let c = &cfg.permwreath;
    let group = permwreath_group(cfg);
    let a = group.lamp.parse(&c.a)?;
    if a == group.lamp.identity() {
        return Err(Error::Config("a must be a nontrivial lamp value".into()));
    }
    let h = Subgroup::family(PermWreathSum { a: a.clone() });
    let h0 = group.delta(Site::Point(group.base.identity()), a);
    let setup = Setup {
        group: group.clone(),
        h: h.clone(),
        h0,
        i_max: c.i_max,
        delta_cap: c.delta_cap,
        windows: c.windows,
        guard: c.guard,
        cfg,
    };
    run_srs(setup, |e| GenericTracker::new(group.clone(), h.clone(), e))
}

/// The first record index from which every record satisfies (A), (B), (C).
fn k0_of(abc: &AbcReport) -> Option<usize> {
    let bad = abc.records.iter().rposition(|f| !(f.a && f.b && f.c));
    match bad {
        Some(k) if k + 1 == abc.records.len() => None,
        Some(k) => Some(k + 1),
        None => (!abc.records.is_empty()).then_some(0),
    }
}

fn in_bits(hex_mask: &str, size: usize) -> Result<Vec<bool>> {
    let bytes = hex::decode(hex_mask.split('?').next().unwrap_or(""))
        .map_err(|e| Error::Parse(format!("mask {hex_mask:?}: {e}")))?;
    Ok((0..size).map(|i| bytes.get(i / 8).is_some_and(|b| b >> (i % 8) & 1 == 1)).collect())
}

fn verify_with<G: Group>(
    group: &G,
    guard: f64,
    windows: usize,
    manifest: &Manifest,
    builder: &[u8],
    events: &[Event],
) -> Result<Vec<VerifyCheck>> {
    let cfg = &manifest.config;
    let artifact = BuilderArtifact::from_json(std::str::from_utf8(builder).map_err(|e| Error::Parse(e.to_string()))?)?;
    let check = check_artifact(group, &artifact)?;
    let mut checks = vec![
        VerifyCheck::new("tile sums exact", check.tile_sums_exact && check.tile_masses_match_law, ""),
        VerifyCheck::new("measure symmetric", check.symmetric, ""),
        VerifyCheck::new("entropy bound", check.entropy.holds, format!("slack {}", check.entropy.slack)),
    ];

    let mut identity_at: std::collections::BTreeMap<String, Vec<bool>> = Default::default();
    for e in events.iter().filter(|e| e.event_kind == "window") {
        let w: WindowEvent = serde_json::from_value(e.payload.clone())?;
        let ids = w.elements.iter().map(|x| Ok(group.is_identity(&group.parse(x)?))).collect::<Result<_>>()?;
        identity_at.insert(w.label, ids);
    }
    let outcomes: Vec<TrajectoryOutcome> = events
        .iter()
        .filter(|e| e.event_kind == "trajectory")
        .map(|e| serde_json::from_value(e.payload.clone()))
        .collect::<std::result::Result<_, _>>()?;
    let traces: Vec<ChangesEvent> = events
        .iter()
        .filter(|e| e.event_kind == "trace")
        .map(|e| serde_json::from_value(e.payload.clone()))
        .collect::<std::result::Result<_, _>>()?;

    let k0_ok = outcomes.iter().filter(|o| k0_of(&o.abc) == o.abc.k0).count();
    checks.push(VerifyCheck::new("k0 from record flags", k0_ok == outcomes.len(), format!("{k0_ok}/{}", outcomes.len())));

    let mut agree = 0usize;
    for t in &traces {
        let Some(o) = outcomes.iter().find(|o| o.index == t.index) else { continue };
        let Some(w) = o.windows.iter().find(|w| w.label == t.label) else { continue };
        let Some((last, mask)) = t.changes.last() else { continue };
        let ids = identity_at.get(&t.label).cloned().unwrap_or_default();
        let nontrivial = in_bits(mask, t.size)?.iter().zip(&ids).any(|(&bit, &id)| bit && !id);
        let fingerprint = fingerprint_of_hex(&t.label, t.size, mask);
        let stabilized = (*last as f64) <= (1.0 - guard) * o.horizon as f64;
        let ok = w.stabilization_index == *last
            && w.changes + 1 == t.changes.len()
            && w.stabilized == stabilized
            && w.nontrivial == nontrivial
            && w.fingerprint == fingerprint
            && ids.len() == t.size;
        agree += ok as usize;
    }
    checks.push(VerifyCheck::new(
        "window summaries from logged traces",
        agree == outcomes.len() * windows && traces.len() == agree,
        format!("{agree}/{}", outcomes.len() * windows),
    ));

    let mut recomputed = RunOutput::default();
    summarize(&mut recomputed, &outcomes, windows);
    let same = recomputed.metrics.iter().all(|(k, v)| manifest.metrics.get(k) == Some(v));
    checks.push(VerifyCheck::new("aggregates", same && outcomes.len() == cfg.trials, outcomes.len().to_string()));
    Ok(checks)
}

pub(super) fn verify(cfg: &ExperimentConfig, manifest: &Manifest, builder: &[u8], events: &[Event]) -> Result<Vec<VerifyCheck>> {
    match cfg.kind {
        ExperimentKind::ThompsonMu => {
            verify_with(&Thompson, cfg.thompson.guard, cfg.thompson.windows, manifest, builder, events)
        }
        _ => verify_with(&permwreath_group(cfg), cfg.permwreath.guard, cfg.permwreath.windows, manifest, builder, events),
    }
}
