//! Right random walks w_n = g_1 ⋯ g_n and the experiments built on them.

mod lamps;
mod pipeline;

use rand::Rng;

pub use lamps::{
    box_sites, compare_equivariance, eta_pool, equivariance_check, fingerprint_census, lamp_limit, lamp_limit_of, lazy_uniform_steps,
    limit_subgroup, martingale_mass, normalish_counts, single_site_probe, Census, EquivarianceOutcome, LampRecord,
    MartingalePoint, MartingaleRun,
};
pub use pipeline::{measure_trajectory, run_pipeline, window_layout, TrajectoryOutcome, WindowSummary};

use crate::groups::Group;
use crate::measure::{BuiltMeasure, SamplerStats};
use crate::seed;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step<E> {
    pub element: E,
    /// tile index when drawn from a built measure
    pub tile: Option<usize>,
    pub is_b: bool,
}

pub trait StepSampler<G: Group>: Sync {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, stats: &mut SamplerStats) -> Step<G::Element>;
}

/// Uniform on a finite list (repeat an element to weight it).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformSampler<E> {
    pub elements: Vec<E>,
}

impl<G: Group> StepSampler<G> for UniformSampler<G::Element> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, stats: &mut SamplerStats) -> Step<G::Element> {
        stats.draws += 1;
        let element = self.elements[rng.gen_range(0..self.elements.len())].clone();
        Step { element, tile: None, is_b: false }
    }
}

impl<G: Group> StepSampler<G> for BuiltMeasure<G> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, stats: &mut SamplerStats) -> Step<G::Element> {
        let (entry, i) = BuiltMeasure::sample(self, rng, stats);
        Step { element: entry.element.clone(), tile: Some(i), is_b: entry.is_b }
    }
}

/// Calls `visit(n, g_n, w_n)` for n = 1..=horizon without storing the walk.
/// Trajectory `index` of a run seeded by `base_seed` uses seed::rng_for.
pub fn stream_walk<G, S, F>(
    group: &G,
    sampler: &S,
    start: &G::Element,
    horizon: u64,
    base_seed: u64,
    index: u64,
    mut visit: F,
) -> SamplerStats
where
    G: Group,
    S: StepSampler<G>,
    F: FnMut(u64, &Step<G::Element>, &G::Element),
{
    let mut w = start.clone();
    stream_steps::<G, S, _>(sampler, horizon, base_seed, index, |n, step| {
        group.mul_assign(&mut w, &step.element);
        visit(n, step, &w);
    })
}

/// Like [`stream_walk`] but without forming the products.
pub fn stream_steps<G, S, F>(sampler: &S, horizon: u64, base_seed: u64, index: u64, mut visit: F) -> SamplerStats
where
    G: Group,
    S: StepSampler<G>,
    F: FnMut(u64, &Step<G::Element>),
{
    let mut rng = seed::rng_for(base_seed, index);
    let mut stats = SamplerStats::default();
    for n in 1..=horizon {
        let step = sampler.sample(&mut rng, &mut stats);
        visit(n, &step);
    }
    stats
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory<E> {
    pub seed: u64,
    pub steps: Vec<Step<E>>,
    /// w_0 = start, then w_n = w_{n−1} g_n
    pub products: Vec<E>,
    pub stats: SamplerStats,
}

impl<E: Clone + Eq> Trajectory<E> {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn tile_indices(&self) -> Option<Vec<u64>> {
        self.steps.iter().map(|s| s.tile.map(|t| t as u64)).collect()
    }

    pub fn witness_flags(&self) -> Vec<bool> {
        self.steps.iter().map(|s| s.is_b).collect()
    }

    /// Recomputes every product from the steps.
    pub fn products_consistent<G: Group<Element = E>>(&self, group: &G) -> bool {
        self.products.len() == self.steps.len() + 1
            && self.steps.iter().zip(self.products.windows(2)).all(|(s, w)| group.mul(&w[0], &s.element) == w[1])
    }
}

pub fn run_walk<G: Group, S: StepSampler<G>>(
    group: &G,
    sampler: &S,
    horizon: u64,
    base_seed: u64,
    index: u64,
) -> Trajectory<G::Element> {
    run_walk_from(group, sampler, &group.identity(), horizon, base_seed, index)
}

pub fn run_walk_from<G: Group, S: StepSampler<G>>(
    group: &G,
    sampler: &S,
    start: &G::Element,
    horizon: u64,
    base_seed: u64,
    index: u64,
) -> Trajectory<G::Element> {
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut products = vec![start.clone()];
    let stats = stream_walk(group, sampler, start, horizon, base_seed, index, |_, s, w| {
        steps.push(s.clone());
        products.push(w.clone());
    });
    Trajectory { seed: seed::trajectory_seed(base_seed, index), steps, products, stats }
}
