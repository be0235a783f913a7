//! Walks under a built measure: records (A)(B)(C) and window traces of
//! w_n H w_n⁻¹, one trajectory per seed index.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stream_steps;
use crate::chabauty::{ConjugationTracker, TraceRecorder, Window, WindowTrace};
use crate::error::Result;
use crate::groups::Group;
use crate::measure::{verify_abc, AbcReport, BuiltMeasure, SamplerStats};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub label: String,
    pub size: usize,
    pub stabilization_index: u64,
    pub changes: usize,
    pub stabilized: bool,
    /// final mask has an element other than e
    pub nontrivial: bool,
    pub undetermined: bool,
    pub fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub index: u64,
    pub seed: u64,
    pub horizon: u64,
    pub abc: AbcReport,
    pub windows: Vec<WindowSummary>,
    pub stats: SamplerStats,
    #[serde(skip)]
    pub traces: Vec<WindowTrace>,
}

impl TrajectoryOutcome {
    pub fn abc_holds(&self) -> bool {
        self.abc.k0.is_some()
    }

    pub fn all_stabilized(&self) -> bool {
        self.windows.iter().all(|w| w.stabilized)
    }

    /// Every stabilized window ends on a mask with a non-identity member.
    pub fn stabilized_nontrivial(&self) -> bool {
        self.windows.iter().filter(|w| w.stabilized).all(|w| w.nontrivial)
    }
}

/// The union of the windows (in first-seen order) and each window as
/// indices into it.
pub fn window_layout<E: Clone + Eq + std::hash::Hash>(windows: &[Window<E>]) -> (Vec<E>, Vec<(String, Vec<usize>)>) {
    let mut elements = Vec::new();
    let mut pos: HashMap<E, usize> = HashMap::new();
    let layout = windows
        .iter()
        .map(|w| {
            let idx = w
                .elements()
                .iter()
                .map(|x| {
                    *pos.entry(x.clone()).or_insert_with(|| {
                        elements.push(x.clone());
                        elements.len() - 1
                    })
                })
                .collect();
            (w.label.clone(), idx)
        })
        .collect();
    (elements, layout)
}

/// One streamed trajectory: tile indices and witness flags feed verify_abc,
/// the steps feed the conjugation tracker.
#[allow(clippy::too_many_arguments)]
pub fn measure_trajectory<G, T>(
    measure: &BuiltMeasure<G>,
    windows: &[Window<G::Element>],
    mut tracker: T,
    layout: &[(String, Vec<usize>)],
    horizon: u64,
    base_seed: u64,
    index: u64,
    guard: f64,
) -> Result<TrajectoryOutcome>
where
    G: Group,
    T: ConjugationTracker<G>,
{
    let group = &measure.group;
    let mut indices = Vec::with_capacity(horizon as usize);
    let mut flags = Vec::with_capacity(horizon as usize);
    let mut rec = TraceRecorder::new(&mut tracker, layout);
    let stats = stream_steps::<G, _, _>(measure, horizon, base_seed, index, |_, step| {
        indices.push(step.tile.unwrap_or(0) as u64);
        flags.push(step.is_b);
        rec.step(&mut tracker, &step.element);
    });
    let traces = rec.finish();
    let abc = verify_abc(&indices, &flags, &measure.p)?;
    let summaries = traces
        .iter()
        .zip(windows)
        .map(|(t, w)| WindowSummary {
            label: t.label.clone(),
            size: t.size,
            stabilization_index: t.stabilization_index(),
            changes: t.changes.len() - 1,
            stabilized: t.stabilized_before(guard),
            nontrivial: t.has_nontrivial_member(group, w),
            undetermined: t.has_undetermined(),
            fingerprint: t.fingerprint(),
        })
        .collect();
    Ok(TrajectoryOutcome {
        index,
        seed: seed::trajectory_seed(base_seed, index),
        horizon,
        abc,
        windows: summaries,
        stats,
        traces,
    })
}

/// Runs `trials` trajectories in parallel; results are sorted by index.
/// `make_tracker` builds a fresh tracker over the union of the windows.
#[allow(clippy::too_many_arguments)]
pub fn run_pipeline<G, T, F>(
    measure: &BuiltMeasure<G>,
    windows: &[Window<G::Element>],
    make_tracker: F,
    horizon: u64,
    trials: usize,
    base_seed: u64,
    guard: f64,
) -> Result<Vec<TrajectoryOutcome>>
where
    G: Group,
    T: ConjugationTracker<G>,
    F: Fn(&[G::Element]) -> T + Sync,
{
    let (elements, layout) = window_layout(windows);
    let mut out: Vec<TrajectoryOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|i| measure_trajectory(measure, windows, make_tracker(&elements), &layout, horizon, base_seed, i, guard))
        .collect::<Result<_>>()?;
    out.sort_by_key(|o| o.index);
    Ok(out)
}
