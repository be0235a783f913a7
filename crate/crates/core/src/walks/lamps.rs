//! Lamp stabilisation on wreath products and the limit subgroups H(w).

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stream_walk, StepSampler, Trajectory};
use crate::chabauty::{
    mask_fingerprint, normalish_witnesses, wreath_limit_membership, LampConfiguration, Membership, Subgroup,
    WreathDiagonal,
};
use crate::error::{Error, Result};
use crate::groups::{BaseElement, BaseGroup, Group, Site, WreathElement, WreathGroup};

/// Identity, δ_0^s for each lamp generator s, and (1, ±e_i).
pub fn lazy_uniform_steps(group: &WreathGroup) -> Vec<WreathElement> {
    let o = Site::Point(group.base.identity());
    let mut steps = vec![group.identity()];
    steps.extend(group.lamp.generators().into_iter().map(|s| group.delta(o.clone(), s)));
    steps.extend(group.base.generators().into_iter().map(|b| group.translation(b)));
    steps
}

/// Sites of the ℓ∞ ball of radius r in ℤ or ℤ^d (empty for other bases).
pub fn box_sites(base: &BaseGroup, r: i64) -> Vec<Site> {
    match base {
        BaseGroup::Integer => (-r..=r).map(|x| Site::Point(BaseElement::Integer(x))).collect(),
        BaseGroup::Lattice(d) => {
            let mut out = vec![Vec::new()];
            for _ in 0..*d {
                out = out
                    .into_iter()
                    .flat_map(|v: Vec<i64>| {
                        (-r..=r).map(move |x| {
                            let mut w = v.clone();
                            w.push(x);
                            w
                        })
                    })
                    .collect();
            }
            out.into_iter().map(|v| Site::Point(BaseElement::Tuple(v))).collect()
        }
        _ => Vec::new(),
    }
}

/// δ_b^s for every site b and every nontrivial lamp value s (lamp generators
/// when the lamp group is infinite).
pub fn single_site_probe(group: &WreathGroup, sites: &[Site]) -> Vec<WreathElement> {
    let values: Vec<BaseElement> = match group.lamp.elements() {
        Some(all) => all.into_iter().filter(|v| *v != group.lamp.identity()).collect(),
        None => group.lamp.generators(),
    };
    sites.iter().flat_map(|b| values.iter().map(|v| group.delta(b.clone(), v.clone()))).collect()
}

/// Final lamps of a walk and, per site, the last step at which the walker
/// stood there or wrote to it. A site is certified when it lies in the window
/// and was left alone during the final `guard` fraction of the horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LampRecord {
    pub horizon: u64,
    /// guard in parts per million of the horizon
    pub guard_ppm: u32,
    pub window: Option<BTreeSet<Site>>,
    pub last_visit: BTreeMap<Site, u64>,
    pub final_lamps: BTreeMap<Site, BaseElement>,
    pub final_position: BaseElement,
}

fn guard_ppm(guard: f64) -> u32 {
    (guard.clamp(0.0, 1.0) * 1e6).round() as u32
}

impl LampRecord {
    /// Last step that may still touch a certified site.
    pub fn cutoff(&self) -> u64 {
        self.horizon - (self.horizon * self.guard_ppm as u64).div_ceil(1_000_000)
    }

    pub fn in_window(&self, site: &Site) -> bool {
        self.window.as_ref().map_or(true, |w| w.contains(site))
    }

    pub fn is_certified(&self, site: &Site) -> bool {
        self.in_window(site) && self.last_visit.get(site).map_or(true, |&t| t <= self.cutoff())
    }

    pub fn certified_fraction(&self, sites: &[Site]) -> f64 {
        if sites.is_empty() {
            return 1.0;
        }
        sites.iter().filter(|s| self.is_certified(s)).count() as f64 / sites.len() as f64
    }

    pub fn configuration(&self) -> LampConfiguration {
        let values = self.final_lamps.iter().filter(|(s, _)| self.in_window(s)).map(|(s, v)| (s.clone(), v.clone())).collect();
        let cutoff = self.cutoff();
        let uncertified =
            self.last_visit.iter().filter(|(s, &t)| t > cutoff && self.in_window(s)).map(|(s, _)| s.clone()).collect();
        LampConfiguration { values, uncertified, window: self.window.clone() }
    }
}

struct LampObserver<'a> {
    group: &'a WreathGroup,
    window: Option<BTreeSet<Site>>,
    last_visit: BTreeMap<Site, u64>,
    position: BaseElement,
}

impl<'a> LampObserver<'a> {
    fn new(group: &'a WreathGroup, start: &WreathElement, window: Option<BTreeSet<Site>>) -> Self {
        let mut o = Self { group, window, last_visit: BTreeMap::new(), position: start.position.clone() };
        o.touch(Site::Point(start.position.clone()), 0);
        o
    }

    fn touch(&mut self, site: Site, n: u64) {
        if self.window.as_ref().map_or(true, |w| w.contains(&site)) {
            self.last_visit.insert(site, n);
        }
    }

    fn observe(&mut self, n: u64, step: &WreathElement, w: &WreathElement) {
        for s in step.lamps.keys() {
            let target = self.group.act(&self.position, s);
            self.touch(target, n);
        }
        self.position = w.position.clone();
        self.touch(Site::Point(w.position.clone()), n);
    }

    fn finish(self, horizon: u64, guard: f64, w: &WreathElement) -> LampRecord {
        LampRecord {
            horizon,
            guard_ppm: guard_ppm(guard),
            window: self.window,
            last_visit: self.last_visit,
            final_lamps: w.lamps.clone(),
            final_position: w.position.clone(),
        }
    }
}

/// Streams a walk from `start` and records its lamps on `window` (all sites if None).
#[allow(clippy::too_many_arguments)]
pub fn lamp_limit<S: StepSampler<WreathGroup>>(
    group: &WreathGroup,
    sampler: &S,
    start: &WreathElement,
    horizon: u64,
    base_seed: u64,
    index: u64,
    window: Option<BTreeSet<Site>>,
    guard: f64,
) -> LampRecord {
    let mut obs = LampObserver::new(group, start, window);
    let mut last = start.clone();
    stream_walk(group, sampler, start, horizon, base_seed, index, |n, step, w| {
        obs.observe(n, &step.element, w);
        if n == horizon {
            last = w.clone();
        }
    });
    obs.finish(horizon, guard, &last)
}

/// The same record computed from a stored trajectory.
pub fn lamp_limit_of(
    group: &WreathGroup,
    traj: &Trajectory<WreathElement>,
    window: Option<BTreeSet<Site>>,
    guard: f64,
) -> LampRecord {
    let mut obs = LampObserver::new(group, &traj.products[0], window);
    for (n, (s, w)) in traj.steps.iter().zip(&traj.products[1..]).enumerate() {
        obs.observe(n as u64 + 1, &s.element, w);
    }
    obs.finish(traj.horizon() as u64, guard, traj.products.last().unwrap())
}

/// H(w) = ⟨δ_b^{c_b a c_b⁻¹}⟩ with c_b the limit lamp at b.
pub fn limit_subgroup(group: &WreathGroup, record: &LampRecord, a: &BaseElement) -> Result<Subgroup<WreathGroup>> {
    Ok(Subgroup::family(WreathDiagonal::new(group, a.clone(), record.configuration())?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivarianceOutcome {
    pub compared: usize,
    pub undetermined: usize,
    pub mismatches: usize,
}

impl EquivarianceOutcome {
    pub fn holds(&self) -> bool {
        self.mismatches == 0
    }
}

/// Compares H(g·w) with g H(w) g⁻¹ on the probe, where g·w is the same walk
/// started at g. Probe elements undetermined on either side are skipped.
#[allow(clippy::too_many_arguments)]
pub fn equivariance_check<S: StepSampler<WreathGroup>>(
    group: &WreathGroup,
    sampler: &S,
    a: &BaseElement,
    g: &WreathElement,
    probe: &[WreathElement],
    horizon: u64,
    base_seed: u64,
    index: u64,
    guard: f64,
) -> Result<EquivarianceOutcome> {
    let w = lamp_limit(group, sampler, &group.identity(), horizon, base_seed, index, None, guard);
    let gw = lamp_limit(group, sampler, g, horizon, base_seed, index, None, guard);
    compare_equivariance(group, a, g, &w.configuration(), &gw.configuration(), probe)
}

/// The comparison behind [`equivariance_check`], from the two limit configurations.
pub fn compare_equivariance(
    group: &WreathGroup,
    a: &BaseElement,
    g: &WreathElement,
    w: &LampConfiguration,
    gw: &LampConfiguration,
    probe: &[WreathElement],
) -> Result<EquivarianceOutcome> {
    let hw = Subgroup::family(WreathDiagonal::new(group, a.clone(), w.clone())?);
    let hgw = Subgroup::family(WreathDiagonal::new(group, a.clone(), gw.clone())?);
    let conj = hw.conjugate(group, g);
    let mut out = EquivarianceOutcome { compared: 0, undetermined: 0, mismatches: 0 };
    for x in probe {
        match (hgw.contains(group, x), conj.contains(group, x)) {
            (Membership::Undetermined, _) | (_, Membership::Undetermined) => out.undetermined += 1,
            (l, r) => {
                out.compared += 1;
                if l != r {
                    out.mismatches += 1;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub window_label: String,
    pub trials: usize,
    /// fingerprint → number of trajectories
    pub counts: BTreeMap<String, usize>,
    pub with_undetermined: usize,
}

impl Census {
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

/// Fingerprints of H(w) on the single-site probe over box(radius), one per trajectory.
#[allow(clippy::too_many_arguments)]
pub fn fingerprint_census<S: StepSampler<WreathGroup>>(
    group: &WreathGroup,
    sampler: &S,
    a: &BaseElement,
    radius: i64,
    horizon: u64,
    trials: usize,
    base_seed: u64,
    guard: f64,
) -> Result<Census> {
    if *a == group.lamp.identity() {
        return Err(Error::Precondition("a must be a nontrivial lamp value".into()));
    }
    let sites = box_sites(&group.base, radius);
    let probe = single_site_probe(group, &sites);
    let label = format!("box{radius}");
    let window: BTreeSet<Site> = sites.iter().cloned().collect();
    let masks: Vec<Vec<Membership>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let rec = lamp_limit(group, sampler, &group.identity(), horizon, base_seed, i as u64, Some(window.clone()), guard);
            let h = limit_subgroup(group, &rec, a)?;
            Ok(probe.iter().map(|x| h.contains(group, x)).collect())
        })
        .collect::<Result<_>>()?;
    let mut census = Census { window_label: label.clone(), trials, ..Default::default() };
    for m in masks {
        if m.contains(&Membership::Undetermined) {
            census.with_undetermined += 1;
        }
        *census.counts.entry(mask_fingerprint(&label, &m)).or_default() += 1;
    }
    Ok(census)
}

/// Limit lamp configurations of `size` independent walks, the samples of η.
pub fn eta_pool<S: StepSampler<WreathGroup>>(
    group: &WreathGroup,
    sampler: &S,
    size: usize,
    horizon: u64,
    pool_seed: u64,
    guard: f64,
) -> Vec<LampConfiguration> {
    (0..size)
        .into_par_iter()
        .map(|j| lamp_limit(group, sampler, &group.identity(), horizon, pool_seed, j as u64, None, guard).configuration())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingalePoint {
    pub step: u64,
    /// fraction of determined samples H with w_n⁻¹ h w_n ∈ H; None if none is determined
    pub estimate: Option<f64>,
    pub determined: usize,
    pub undetermined: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRun {
    pub index: u64,
    pub points: Vec<MartingalePoint>,
}

impl MartingaleRun {
    pub fn terminal(&self) -> Option<f64> {
        self.points.last().and_then(|p| p.estimate)
    }

    /// Terminal estimate within `tol` of 0 or 1.
    pub fn near_dirac(&self, tol: f64) -> bool {
        self.terminal().is_some_and(|x| x <= tol || x >= 1.0 - tol)
    }
}

fn eta_estimate(group: &WreathGroup, x: &WreathElement, a: &BaseElement, pool: &[LampConfiguration]) -> (usize, usize, usize) {
    let (mut inside, mut determined, mut undetermined) = (0, 0, 0);
    for conf in pool {
        let m = if x.position != group.base.identity() {
            Membership::Out
        } else {
            wreath_limit_membership(&group.lamp, &x.lamps, conf, a)
        };
        match m {
            Membership::In => {
                inside += 1;
                determined += 1;
            }
            Membership::Out => determined += 1,
            Membership::Undetermined => undetermined += 1,
        }
    }
    (inside, determined, undetermined)
}

/// Monte Carlo estimates of η({H : h ∈ w_n H w_n⁻¹}) at the checkpoints.
#[allow(clippy::too_many_arguments)]
pub fn martingale_mass<S: StepSampler<WreathGroup>>(
    group: &WreathGroup,
    sampler: &S,
    h: &WreathElement,
    a: &BaseElement,
    pool: &[LampConfiguration],
    checkpoints: &[u64],
    base_seed: u64,
    index: u64,
) -> MartingaleRun {
    let horizon = checkpoints.iter().copied().max().unwrap_or(0);
    let wanted: BTreeSet<u64> = checkpoints.iter().copied().collect();
    let mut points = Vec::with_capacity(wanted.len());
    let mut record = |n: u64, w: &WreathElement| {
        let x = group.mul(&group.mul(&group.inv(w), h), w);
        let (inside, determined, undetermined) = eta_estimate(group, &x, a, pool);
        let estimate = (determined > 0).then(|| inside as f64 / determined as f64);
        points.push(MartingalePoint { step: n, estimate, determined, undetermined });
    };
    if wanted.contains(&0) {
        record(0, &group.identity());
    }
    stream_walk(group, sampler, &group.identity(), horizon, base_seed, index, |n, _, w| {
        if wanted.contains(&n) {
            record(n, w);
        }
    });
    MartingaleRun { index, points }
}

/// Witness counts of `h` against the conjugators `z` on single-site probes over box(r), r = 0..=max_radius.
pub fn normalish_counts(group: &WreathGroup, h: &Subgroup<WreathGroup>, z: &[WreathElement], max_radius: i64) -> Vec<usize> {
    (0..=max_radius)
        .map(|r| normalish_witnesses(group, h, z, &single_site_probe(group, &box_sites(&group.base, r))).len())
        .collect()
}
