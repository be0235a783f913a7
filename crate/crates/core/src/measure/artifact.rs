//! Versioned JSON form of a built measure, and re-checks that need only the
//! artifact.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{BuilderConfig, BuilderState, BuiltMeasure, EntropyReport, Verification};
use crate::error::{Error, Result};
use crate::groups::Group;
use crate::records::{format_rational, parse_rational, rational_to_f64, TailDistribution, TailSpec};

pub const FORMAT: &str = "srslab-builder/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub element: String,
    pub mass: String,
    pub is_b: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileRecord {
    pub index: usize,
    pub p: String,
    pub entries: Vec<EntryRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub index: usize,
    pub gauge: u64,
    pub tile: Vec<String>,
    pub a: Vec<String>,
    pub delta_size: usize,
    pub delta_capped: bool,
    pub delta: Vec<String>,
    pub q_added: Vec<String>,
    pub b: Option<String>,
    pub verification: Option<Verification>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuilderArtifact {
    pub format: String,
    pub group: String,
    pub subgroup: String,
    pub h0: String,
    pub tail: TailSpec,
    pub alpha: String,
    pub config: BuilderConfig,
    pub levels: Vec<LevelRecord>,
    pub i_max: usize,
    pub residual: String,
    pub tiles: Vec<TileRecord>,
}

impl BuilderArtifact {
    pub fn from_build<G: Group>(state: &BuilderState<G>, measure: &BuiltMeasure<G>) -> Self {
        let g = &state.group;
        let fmt = |xs: &[G::Element]| xs.iter().map(|x| g.format(x)).collect::<Vec<_>>();
        let levels = state
            .levels
            .iter()
            .map(|l| LevelRecord {
                index: l.index,
                gauge: l.gauge,
                tile: fmt(&l.tile),
                a: fmt(&l.a),
                delta_size: l.delta.len(),
                delta_capped: l.delta_capped,
                delta: fmt(&l.delta),
                q_added: fmt(&l.q_added),
                b: l.b.as_ref().map(|b| g.format(b)),
                verification: l.verification.clone(),
            })
            .collect();
        let tiles = measure
            .tiles
            .iter()
            .map(|t| TileRecord {
                index: t.index,
                p: format_rational(&t.p),
                entries: t
                    .entries
                    .iter()
                    .map(|e| EntryRecord { element: g.format(&e.element), mass: format_rational(&e.mass), is_b: e.is_b })
                    .collect(),
            })
            .collect();
        Self {
            format: FORMAT.into(),
            group: g.describe(),
            subgroup: state.h.describe(g),
            h0: g.format(&state.h0),
            tail: state.p.spec().clone(),
            alpha: "2^-i".into(),
            config: state.config.clone(),
            levels,
            i_max: measure.i_max,
            residual: format_rational(&measure.residual),
            tiles,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(text)?;
        if a.format != FORMAT {
            return Err(Error::Parse(format!("unsupported builder format {:?}", a.format)));
        }
        Ok(a)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactCheck {
    pub tile_sums_exact: bool,
    pub tile_masses_match_law: bool,
    pub symmetric: bool,
    pub entropy: EntropyReport,
}

impl ArtifactCheck {
    pub fn passed(&self) -> bool {
        self.tile_sums_exact && self.tile_masses_match_law && self.symmetric && self.entropy.holds
    }
}

/// Re-derives the exact invariants of a measure from its artifact alone.
pub fn check_artifact<G: Group>(group: &G, artifact: &BuilderArtifact) -> Result<ArtifactCheck> {
    let law = TailDistribution::new(artifact.tail.clone())?;
    let mut masses: HashMap<G::Element, BigRational> = HashMap::new();
    let mut tile_sums_exact = true;
    let mut tile_masses_match_law = true;
    for t in &artifact.tiles {
        let p = parse_rational(&t.p)?;
        tile_masses_match_law &= law.mass_exact(t.index as u64).as_ref() == Some(&p);
        let mut sum = BigRational::zero();
        for e in &t.entries {
            let m = parse_rational(&e.mass)?;
            sum += &m;
            *masses.entry(group.parse(&e.element)?).or_insert_with(BigRational::zero) += m;
        }
        tile_sums_exact &= sum == p;
    }
    let symmetric = masses.iter().all(|(g, m)| masses.get(&group.inv(g)) == Some(m));
    let entropy_mu = super::entropy_of(masses.values().map(rational_to_f64));
    let bound = 4f64.ln() + law.partial_entropy(artifact.i_max as u64);
    let max_tile_entropy = artifact
        .tiles
        .iter()
        .map(|t| {
            let p = parse_rational(&t.p).map(|p| rational_to_f64(&p)).unwrap_or(f64::NAN);
            t.entries
                .iter()
                .filter_map(|e| parse_rational(&e.mass).ok())
                .map(|m| rational_to_f64(&m) / p)
                .filter(|&x| x > 0.0)
                .map(|x| -x * x.ln())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let slack = bound - entropy_mu;
    Ok(ArtifactCheck {
        tile_sums_exact,
        tile_masses_match_law,
        symmetric,
        entropy: EntropyReport { entropy_mu, bound, slack, holds: slack >= 0.0, max_tile_entropy },
    })
}
