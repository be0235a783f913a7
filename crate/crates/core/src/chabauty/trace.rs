//! Incremental tracking of Q ∩ w_n H w_n⁻¹ along a trajectory.
//!
//! Membership of q in w_n H w_n⁻¹ is membership of c_n = w_n⁻¹ q w_n in H, and
//! c_n = g_n⁻¹ c_{n−1} g_n. Steps known to normalize H are absorbed into an
//! accumulator ν with c_n = ν⁻¹ ĉ ν, so only the remaining steps touch ĉ.

use std::io::Write;
use std::sync::Arc;

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use super::{Membership, Subgroup, ThompsonH, Window};
use crate::groups::{Dyadic, Group, ThompsonElement};

pub trait ConjugationTracker<G: Group> {
    fn len(&self) -> usize;
    /// Replaces every tracked c by g⁻¹ c g; returns whether some membership may have changed.
    fn step(&mut self, g: &G::Element) -> bool;
    fn memberships(&mut self) -> &[Membership];
}

pub struct GenericTracker<G: Group> {
    group: G,
    h: Subgroup<G>,
    nu: G::Element,
    tracked: Vec<G::Element>,
    mem: Vec<Membership>,
    dirty: bool,
}

impl<G: Group> GenericTracker<G> {
    pub fn new(group: G, h: Subgroup<G>, elements: &[G::Element]) -> Self {
        let mem = elements.iter().map(|q| h.contains(&group, q)).collect();
        let nu = group.identity();
        Self { group, h, nu, tracked: elements.to_vec(), mem, dirty: false }
    }
}

impl<G: Group> ConjugationTracker<G> for GenericTracker<G> {
    fn len(&self) -> usize {
        self.tracked.len()
    }

    fn step(&mut self, g: &G::Element) -> bool {
        if self.h.normalizes(&self.group, g) {
            self.nu = self.group.mul(&self.nu, g);
            return false;
        }
        let gp = self.group.conj(&self.nu, g);
        let gpi = self.group.inv(&gp);
        for c in &mut self.tracked {
            *c = self.group.mul(&self.group.mul(&gpi, c), &gp);
        }
        self.dirty = true;
        true
    }

    fn memberships(&mut self) -> &[Membership] {
        if self.dirty {
            for (m, c) in self.mem.iter_mut().zip(&self.tracked) {
                *m = self.h.contains(&self.group, c);
            }
            self.dirty = false;
        }
        &self.mem
    }
}

struct Tracked {
    base: ThompsonElement,
    offset: BigInt,
    /// breakpoint hull of `base`; None for elements whose membership never changes
    hull: Option<(Dyadic, Dyadic)>,
}

/// Tracker for the translation-invariant subgroup H of F. Translations are
/// absorbed into ν; a non-translation step only conjugates the tracked elements
/// whose support meets its breakpoint hull, and shifts the others.
pub struct ThompsonTracker {
    h: Arc<ThompsonH>,
    shift: BigInt,
    tracked: Vec<Tracked>,
    mem: Vec<Membership>,
}

impl ThompsonTracker {
    pub fn new(h: Arc<ThompsonH>, elements: &[ThompsonElement]) -> Self {
        let mut mem = Vec::with_capacity(elements.len());
        let tracked = elements
            .iter()
            .map(|q| {
                mem.push(Membership::from_bool(h.contains_element(q)));
                let hull = if q.in_commutator() {
                    q.breakpoint_hull().map(|(a, b)| (a.clone(), b.clone()))
                } else {
                    None
                };
                Tracked { base: q.clone(), offset: BigInt::from(0), hull }
            })
            .collect();
        Self { h, shift: BigInt::from(0), tracked, mem }
    }

    /// The current c_i = w⁻¹ q_i w up to conjugation by ν.
    pub fn current(&self, i: usize) -> ThompsonElement {
        let t = &self.tracked[i];
        t.base.conj_shift(&(&t.offset - &self.shift))
    }
}

impl ConjugationTracker<crate::groups::Thompson> for ThompsonTracker {
    fn len(&self) -> usize {
        self.tracked.len()
    }

    fn step(&mut self, g: &ThompsonElement) -> bool {
        let Some((g_lo, g_hi)) = g.breakpoint_hull() else {
            self.shift += &g.left_shift;
            return false;
        };
        let img_lo = g_lo + &Dyadic::from_int(g.left_shift.clone());
        let img_hi = g_hi + &Dyadic::from_int(g.right_shift.clone());
        let mut gp: Option<(ThompsonElement, ThompsonElement)> = None;
        let mut changed = false;
        for (t, m) in self.tracked.iter_mut().zip(self.mem.iter_mut()) {
            let Some((lo, hi)) = &t.hull else { continue };
            // g⁻¹ ĉ g only sees g⁻¹ on supp ĉ, which is a translation outside g([b_1, b_n])
            let rel = Dyadic::from_int(&t.offset - &self.shift);
            if hi + &rel <= img_lo {
                t.offset -= &g.left_shift;
                continue;
            }
            if lo + &rel >= img_hi {
                t.offset -= &g.right_shift;
                continue;
            }
            let (gp, gpi) = gp.get_or_insert_with(|| {
                let x = g.conj_shift(&self.shift);
                let xi = x.inverse();
                (x, xi)
            });
            let c = t.base.conj_shift(&t.offset);
            let next = gpi.compose(&c).compose(gp);
            t.hull = next.breakpoint_hull().map(|(a, b)| (a.clone(), b.clone()));
            t.base = next;
            t.offset = BigInt::from(0);
            *m = Membership::from_bool(self.h.contains_element(&t.base));
            changed = true;
        }
        changed
    }

    fn memberships(&mut self) -> &[Membership] {
        &self.mem
    }
}

/// Hex of the In-bits (element i is bit i, little-endian bytes), with a
/// `?`-suffixed hex of the Undetermined bits when there are any.
pub fn mask_hex(mask: &[Membership]) -> String {
    let pack = |want: Membership| {
        let mut bytes = vec![0u8; mask.len().div_ceil(8)];
        for (i, m) in mask.iter().enumerate() {
            if *m == want {
                bytes[i / 8] |= 1 << (i % 8);
            }
        }
        hex::encode(bytes)
    };
    let mut s = pack(Membership::In);
    if mask.contains(&Membership::Undetermined) {
        s.push('?');
        s.push_str(&pack(Membership::Undetermined));
    }
    s
}

/// First 16 hex digits of SHA-256 over the window label, size and mask.
pub fn mask_fingerprint(label: &str, mask: &[Membership]) -> String {
    fingerprint_of_hex(label, mask.len(), &mask_hex(mask))
}

/// The same fingerprint from a window size and an already formatted mask_hex.
pub fn fingerprint_of_hex(label: &str, size: usize, hex_mask: &str) -> String {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update(b"|");
    h.update((size as u64).to_le_bytes());
    h.update(b"|");
    h.update(hex_mask.as_bytes());
    hex::encode(&h.finalize()[..8])
}

/// The sequence n ↦ Q ∩ w_n H w_n⁻¹ for one window, stored as change points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowTrace {
    pub label: String,
    pub size: usize,
    pub horizon: u64,
    /// (step, mask) at step 0 and at every step where the mask changed
    pub changes: Vec<(u64, Vec<Membership>)>,
}

impl WindowTrace {
    pub fn new(label: impl Into<String>, initial: Vec<Membership>) -> Self {
        Self { label: label.into(), size: initial.len(), horizon: 0, changes: vec![(0, initial)] }
    }

    pub fn record(&mut self, step: u64, mask: Vec<Membership>) {
        self.horizon = self.horizon.max(step);
        if self.changes.last().map(|(_, m)| m) != Some(&mask) {
            self.changes.push((step, mask));
        }
    }

    /// The last step at which the mask changed (0 if it never did).
    pub fn stabilization_index(&self) -> u64 {
        self.changes.last().map(|(s, _)| *s).unwrap_or(0)
    }

    /// Stabilized no later than (1 − guard) · horizon.
    pub fn stabilized_before(&self, guard: f64) -> bool {
        (self.stabilization_index() as f64) <= (1.0 - guard) * self.horizon as f64
    }

    pub fn final_mask(&self) -> &[Membership] {
        &self.changes.last().expect("trace has an initial row").1
    }

    pub fn has_undetermined(&self) -> bool {
        self.changes.iter().any(|(_, m)| m.contains(&Membership::Undetermined))
    }

    pub fn fingerprint(&self) -> String {
        mask_fingerprint(&self.label, self.final_mask())
    }

    /// Whether the final mask contains an element other than the identity.
    pub fn has_nontrivial_member<G: Group>(&self, group: &G, window: &Window<G::Element>) -> bool {
        self.final_mask()
            .iter()
            .zip(window.elements())
            .any(|(m, x)| m.is_in() && !group.is_identity(x))
    }

    /// CSV rows: step,window_label,bitmask,changed
    pub fn write_csv<W: Write>(&self, mut out: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(out, "step,window_label,bitmask,changed")?;
        }
        for (i, (step, mask)) in self.changes.iter().enumerate() {
            writeln!(out, "{},{},{},{}", step, self.label, mask_hex(mask), i > 0)?;
        }
        Ok(())
    }
}

/// Records window traces step by step, for trajectories that are streamed
/// rather than stored. Windows are index lists into the tracker's elements.
pub struct TraceRecorder {
    windows: Vec<(String, Vec<usize>)>,
    traces: Vec<WindowTrace>,
    steps: u64,
}

impl TraceRecorder {
    pub fn new<G: Group, T: ConjugationTracker<G>>(tracker: &mut T, windows: &[(String, Vec<usize>)]) -> Self {
        let mem = tracker.memberships();
        let traces = windows.iter().map(|(l, idx)| WindowTrace::new(l.clone(), select(mem, idx))).collect();
        Self { windows: windows.to_vec(), traces, steps: 0 }
    }

    pub fn step<G: Group, T: ConjugationTracker<G>>(&mut self, tracker: &mut T, g: &G::Element) {
        self.steps += 1;
        if tracker.step(g) {
            let mem = tracker.memberships();
            for (t, (_, idx)) in self.traces.iter_mut().zip(&self.windows) {
                t.record(self.steps, select(mem, idx));
            }
        }
    }

    pub fn finish(mut self) -> Vec<WindowTrace> {
        for t in &mut self.traces {
            t.horizon = self.steps;
        }
        self.traces
    }
}

fn select(mem: &[Membership], idx: &[usize]) -> Vec<Membership> {
    idx.iter().map(|&i| mem[i]).collect()
}

/// Traces each window along the steps.
pub fn trace_conjugates<'a, G, T, I>(tracker: &mut T, steps: I, windows: &[(String, Vec<usize>)]) -> Vec<WindowTrace>
where
    G: Group + 'a,
    T: ConjugationTracker<G>,
    I: IntoIterator<Item = &'a G::Element>,
{
    let mut rec = TraceRecorder::new(tracker, windows);
    for g in steps {
        rec.step(tracker, g);
    }
    rec.finish()
}
