use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{Event, ExperimentConfig, RunOutput, VerifyCheck};
use crate::bass_serre::{height_range, BassSerreTree, TreeVertex};
use crate::error::{Error, Result};
use crate::groups::{BaumslagSolitar, BsElement, Group};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct FixedVertex {
    vertex: String,
    height: i64,
    zeta: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ZetaEvent {
    m: i64,
    n: i64,
    element: String,
    radius: usize,
    vertices: Vec<FixedVertex>,
}

fn tree(mn: (i64, i64)) -> Result<BassSerreTree> {
    Ok(BassSerreTree::new(BaumslagSolitar::new(mn.0, mn.1)?))
}

/// Vertices of ball(root, r) fixed by g, and those in the {a, t⁻¹}-subtree.
fn claim_sets(tree: &BassSerreTree, g: &BsElement, r: usize) -> (BTreeSet<TreeVertex>, BTreeSet<TreeVertex>) {
    let ball = tree.ball(&tree.root(), r);
    let fixed = ball.entries.iter().map(|e| &e.vertex).filter(|v| tree.fixes(g, v)).cloned().collect();
    let lower = ball.entries.iter().map(|e| &e.vertex).filter(|v| v.in_lower_subtree()).cloned().collect();
    (fixed, lower)
}

fn zeta_holds(m: i64, n: i64, vertices: &[(i64, BigInt)]) -> bool {
    let ratio = BigRational::new(m.into(), n.into());
    let pow = |e: i64| {
        let base = if e < 0 { ratio.recip() } else { ratio.clone() };
        (0..e.unsigned_abs()).fold(BigRational::from_integer(1.into()), |acc, _| acc * &base)
    };
    vertices.iter().all(|(h, z)| {
        vertices
            .iter()
            .all(|(h2, z2)| BigRational::from_integer(z2.clone()) == pow(h2 - h) * BigRational::from_integer(z.clone()))
    })
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let c = &cfg.bs;
    let mut out = RunOutput::default();
    out.header(&["part", "group", "element", "radius", "value", "holds"]);
    let label = |mn: (i64, i64)| format!("BS({},{})", mn.0, mn.1);

    // fixed subtree of the claim element against the syntactic subtree
    let claim = tree(c.claim_group)?;
    let g = claim.group().parse(&c.claim_element)?;
    let mut claim_ok = true;
    let mut contained = true;
    let mut extra = 0usize;
    for r in 0..=c.claim_radius {
        let (fixed, lower) = claim_sets(&claim, &g, r);
        let sub: BTreeSet<TreeVertex> = claim.fixed_subtree(&g, r).vertices.into_iter().collect();
        let holds = fixed == lower && sub.is_subset(&fixed);
        claim_ok &= holds;
        contained &= lower.is_subset(&fixed);
        extra = extra.max(fixed.difference(&lower).count());
        out.row(vec![
            "fixed_subtree".into(),
            label(c.claim_group),
            c.claim_element.clone(),
            r.to_string(),
            format!("{}/{}", fixed.len(), lower.len()),
            holds.to_string(),
        ]);
        let payload = serde_json::json!({ "radius": r, "fixed": fixed.len(), "lower": lower.len(), "holds": holds });
        out.events.push(Event::new(cfg.seed, r as u64, "claim", payload));
    }
    out.metric("claim_holds", claim_ok);
    out.metric("claim_contained", contained);
    out.metric("claim_extra_fixed", extra);
    out.check("fixed subtree equals the syntactic subtree", claim_ok);
    out.check("syntactic subtree lies in the fixed subtree", contained);

    let sub = claim.fixed_subtree(&g, c.claim_radius);
    if sub.loxodromic {
        return Err(Error::Config(format!("{} is not elliptic", c.claim_element)));
    }
    let vertices: Vec<FixedVertex> = sub
        .vertices
        .iter()
        .map(|v| Ok(FixedVertex { vertex: v.to_string(), height: claim.height(v), zeta: claim.zeta(&g, v)?.to_string() }))
        .collect::<Result<_>>()?;
    let zeta_ok = claim.zeta_relation_check(&g, c.claim_radius)?;
    out.metric("zeta_pairs", vertices.len() * vertices.len());
    out.metric("zeta_relation", zeta_ok);
    out.check("zeta relation exact", zeta_ok);
    out.row(vec![
        "zeta_relation".into(),
        label(c.claim_group),
        c.claim_element.clone(),
        c.claim_radius.to_string(),
        vertices.len().to_string(),
        zeta_ok.to_string(),
    ]);
    let payload = ZetaEvent {
        m: c.claim_group.0,
        n: c.claim_group.1,
        element: c.claim_element.clone(),
        radius: c.claim_radius,
        vertices,
    };
    out.events.push(Event::new(cfg.seed, c.claim_radius as u64, "zeta", payload));

    // bounded heights of fixed subtrees of a^j
    let bounded = tree(c.bounded_group)?;
    let mut max_abs = 0i64;
    for &j in &c.bounded_powers {
        let x = bounded.group().pow(&bounded.group().a(), j);
        let sub = bounded.fixed_subtree(&x, c.bounded_radius);
        let range = height_range(&bounded, &sub.vertices);
        let abs = range.map_or(0, |(lo, hi)| lo.abs().max(hi.abs()));
        max_abs = max_abs.max(abs);
        out.row(vec![
            "height_range".into(),
            label(c.bounded_group),
            format!("a^{j}"),
            c.bounded_radius.to_string(),
            format!("{range:?}"),
            String::new(),
        ]);
        let payload = serde_json::json!({ "power": j, "range": range, "vertices": sub.vertices.len() });
        out.events.push(Event::new(cfg.seed, j as u64, "height_range", payload));
    }
    let bounded_ok = max_abs < c.bounded_radius as i64;
    out.metric("max_abs_height", max_abs);
    out.check("heights bounded below the radius", bounded_ok);

    let mut found = true;
    for e in &c.index_elements {
        let x = bounded.group().parse(e)?;
        let k = bounded.intersection_index_witness(&x, c.index_bound);
        found &= k.is_some();
        out.metric(&format!("index.{e}"), k);
        out.row(vec![
            "intersection_index".into(),
            label(c.bounded_group),
            e.clone(),
            c.index_bound.to_string(),
            k.map_or_else(String::new, |k| k.to_string()),
            k.is_some().to_string(),
        ]);
        out.events.push(Event::new(cfg.seed, 0, "index", serde_json::json!({ "element": e, "k": k })));
    }
    out.check("intersection index witnesses found", found);
    Ok(out)
}

/// Re-checks the ζ-relation exactly from the logged fixed vertices.
pub(super) fn verify(cfg: &ExperimentConfig, events: &[Event]) -> Result<Vec<VerifyCheck>> {
    let mut checks = Vec::new();
    let zetas: Vec<ZetaEvent> = events
        .iter()
        .filter(|e| e.event_kind == "zeta")
        .map(|e| serde_json::from_value(e.payload.clone()))
        .collect::<std::result::Result<_, _>>()?;
    for z in &zetas {
        let data: Vec<(i64, BigInt)> = z
            .vertices
            .iter()
            .map(|v| v.zeta.parse().map(|k| (v.height, k)).map_err(|_| Error::Parse(format!("zeta {:?}", v.zeta))))
            .collect::<Result<_>>()?;
        checks.push(VerifyCheck::new(
            format!("zeta relation {}", z.element),
            !data.is_empty() && zeta_holds(z.m, z.n, &data),
            format!("{} vertices", data.len()),
        ));
    }
    checks.push(VerifyCheck::new("zeta events", zetas.len() == 1, zetas.len().to_string()));
    let claims = events.iter().filter(|e| e.event_kind == "claim").count();
    checks.push(VerifyCheck::new("claim radii", claims == cfg.bs.claim_radius + 1, claims.to_string()));
    Ok(checks)
}
