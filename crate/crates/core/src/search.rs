//! Discrete circuit search over the restricted gate toolbox.
//!
//! The toolbox is deliberately narrow so solutions stay interpretable:
//! `R_y^(01)`, `R_x^(12)`, `R_y^(12)` at angles `{+-pi, +-pi/2}`, at most
//! one free-angle `R_y^(01)` slot per candidate (optimized by golden-section
//! search at evaluation time), and the device CNOT on connected pairs.
//!
//! Candidates are layered templates: up to `max_cnots` CNOT slots with local
//! layers between them, two sub-slots per qutrit per layer. The search runs
//! seeded random restarts, each refined by coordinate descent over the
//! template slots; every distinct canonical circuit evaluated consumes one
//! trial, and previously seen canonical forms are served from a memo table
//! instead of re-simulating. Plain uniform sequence sampling has a hit
//! probability far too small for practical budgets (the solution needs nine
//! coordinated gates out of a ~40-symbol alphabet), while descent over the
//! template reaches it reliably.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_2, PI};

// Float supplies the f64 math methods when building without std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::circuit::{apply_circuit, Circuit, Connectivity, GateSpec};
use crate::gates::{Axis, CnotModelParams, Subspace};
use crate::rng::ShotRng;
use crate::state::{ghz_family_fidelity, PureState};
use crate::{Error, Result};

/// The twelve fixed local toolbox gates: three families times four angles.
pub const TOOLBOX_FAMILIES: [(Axis, Subspace); 3] =
    [(Axis::Y, Subspace::S01), (Axis::X, Subspace::S12), (Axis::Y, Subspace::S12)];

pub const TOOLBOX_ANGLES: [f64; 4] = [PI, -PI, FRAC_PI_2, -FRAC_PI_2];

/// Search budget and constraints.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub max_cnots: usize,
    /// Maximum number of local gates in a candidate (free slot included).
    pub max_local: usize,
    /// Evaluation budget: each distinct canonical candidate costs one trial.
    pub trials: u64,
    pub seed: u64,
    pub connectivity: Connectivity,
    pub n_qutrits: usize,
    /// Stop as soon as a candidate scores above this.
    pub success_threshold: f64,
    /// CNOT model used during evaluation.
    pub cnot: CnotModelParams,
}

impl SearchConfig {
    /// Three-qutrit line with the paper's budgets.
    pub fn line3(max_cnots: usize, trials: u64, seed: u64) -> Self {
        SearchConfig {
            max_cnots,
            max_local: 6,
            trials,
            seed,
            connectivity: Connectivity::line(3),
            n_qutrits: 3,
            success_threshold: 0.999,
            cnot: CnotModelParams::default_model(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.n_qutrits == 0 {
            return Err(Error::InvalidConfig(String::from("budgets must be positive")));
        }
        if !(0.0..=1.0).contains(&self.success_threshold) {
            return Err(Error::InvalidConfig(String::from("threshold outside [0, 1]")));
        }
        Ok(())
    }
}

/// A scored candidate circuit. The circuit carries the optimized free angle
/// when one was used.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub circuit: Circuit,
    pub score: f64,
    pub free_angle: Option<f64>,
    pub canonical_key: String,
}

/// One evaluated candidate, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub trial: u64,
    pub cnots: usize,
    pub locals: usize,
    pub score: f64,
}

/// Search outcome: the best candidate found, the full evaluation log, and
/// whether the success threshold was reached within the budget.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: Candidate,
    pub log: Vec<LogEntry>,
    pub converged: bool,
    pub trials_used: u64,
}

// ---------------------------------------------------------------------------
// Template representation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LocalGate {
    /// Index into the 12-gate fixed toolbox (family * 4 + angle).
    Fixed(usize),
    /// The free-angle R_y^(01) slot.
    Free,
}

fn toolbox_gate(index: usize) -> (Axis, Subspace, f64) {
    let (axis, subspace) = TOOLBOX_FAMILIES[index / 4];
    (axis, subspace, TOOLBOX_ANGLES[index % 4])
}

/// Layered candidate: `max_cnots + 1` local layers with two sub-slots per
/// qutrit, and a CNOT slot (possibly empty) after each layer but the last.
#[derive(Debug, Clone, PartialEq)]
struct Template {
    locals: Vec<Vec<[Option<LocalGate>; 2]>>,
    cnots: Vec<Option<(usize, usize)>>,
    n_qutrits: usize,
}

impl Template {
    fn empty(n_qutrits: usize, max_cnots: usize) -> Self {
        Template {
            locals: vec![vec![[None; 2]; n_qutrits]; max_cnots + 1],
            cnots: vec![None; max_cnots],
            n_qutrits,
        }
    }

    fn local_count(&self) -> usize {
        self.locals
            .iter()
            .flat_map(|layer| layer.iter())
            .flat_map(|subs| subs.iter())
            .filter(|s| s.is_some())
            .count()
    }

    fn free_count(&self) -> usize {
        self.locals
            .iter()
            .flat_map(|layer| layer.iter())
            .flat_map(|subs| subs.iter())
            .filter(|s| matches!(s, Some(LocalGate::Free)))
            .count()
    }

    fn cnot_count(&self) -> usize {
        self.cnots.iter().filter(|c| c.is_some()).count()
    }

    /// Concrete circuit with the free slot (if any) instantiated at `theta`.
    fn to_circuit(&self, connectivity: &Connectivity, theta: f64) -> Circuit {
        let mut c = Circuit::new(self.n_qutrits, connectivity.clone());
        for (layer, subs) in self.locals.iter().enumerate() {
            for (q, pair) in subs.iter().enumerate() {
                for slot in pair.iter().flatten() {
                    match slot {
                        LocalGate::Fixed(i) => {
                            let (axis, subspace, angle) = toolbox_gate(*i);
                            c.push(GateSpec::Rotation { axis, subspace, theta: angle }, &[q]);
                        }
                        LocalGate::Free => {
                            c.push(
                                GateSpec::Rotation {
                                    axis: Axis::Y,
                                    subspace: Subspace::S01,
                                    theta,
                                },
                                &[q],
                            );
                        }
                    }
                }
            }
            if layer < self.cnots.len() {
                if let Some((control, target)) = self.cnots[layer] {
                    c.push(GateSpec::Cnot(CnotModelParams::default_model()), &[control, target]);
                }
            }
        }
        c
    }

    /// Canonical signature: per layer and qutrit, sub-slot gates with
    /// adjacent same-family rotations merged (angles summed mod 4 pi,
    /// identities dropped), then the CNOT slots. Free slots are symbolic.
    fn canonical_key(&self) -> String {
        let mut key = String::new();
        for (layer, subs) in self.locals.iter().enumerate() {
            for (q, pair) in subs.iter().enumerate() {
                let mut merged: Vec<(usize, f64, bool)> = Vec::new(); // (family, angle, free)
                for slot in pair.iter().flatten() {
                    match slot {
                        LocalGate::Free => merged.push((0, 0.0, true)),
                        LocalGate::Fixed(i) => {
                            let family = i / 4;
                            let angle = TOOLBOX_ANGLES[i % 4];
                            match merged.last_mut() {
                                Some((f, a, false)) if *f == family => {
                                    *a = wrap_4pi(*a + angle);
                                    if a.abs() < 1e-12 {
                                        merged.pop();
                                    }
                                }
                                _ => merged.push((family, angle, false)),
                            }
                        }
                    }
                }
                for (family, angle, free) in merged {
                    if free {
                        key.push_str(&format!("L{layer}q{q}F;"));
                    } else {
                        key.push_str(&format!("L{layer}q{q}f{family}a{angle:.4};"));
                    }
                }
            }
            if layer < self.cnots.len() {
                match self.cnots[layer] {
                    Some((c2, t)) => key.push_str(&format!("C{layer}:{c2}-{t};")),
                    None => {}
                }
            }
        }
        key
    }
}

fn wrap_4pi(x: f64) -> f64 {
    let period = 4.0 * PI;
    let mut v = x % period;
    if v > 2.0 * PI {
        v -= period;
    } else if v < -2.0 * PI {
        v += period;
    }
    v
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// GHZ-family score of a circuit on `|00...0>`. When `free_slot` names an
/// instruction, its rotation angle is optimized by golden-section search
/// over `[0, pi]` (tolerance 1e-9) and the best angle is returned.
pub fn evaluate_candidate(
    circuit: &Circuit,
    free_slot: Option<usize>,
) -> Result<(f64, Option<f64>)> {
    let score_at = |theta: f64| -> Result<f64> {
        let mut c = circuit.clone();
        if let Some(idx) = free_slot {
            match &mut c.instructions[idx].gate {
                GateSpec::Rotation { theta: t, .. } => *t = theta,
                _ => {
                    return Err(Error::InvalidConfig(String::from(
                        "free slot must point at a rotation",
                    )))
                }
            }
        }
        let out = apply_circuit(&c, &PureState::zero(c.n_qutrits))?;
        ghz_family_fidelity(&out)
    };

    match free_slot {
        None => Ok((score_at(0.0)?, None)),
        Some(_) => {
            let (theta, score) = golden_section_max(&|t| score_at(t), 0.0, PI, 1e-9)?;
            Ok((score, Some(theta)))
        }
    }
}

fn golden_section_max(
    f: &dyn Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok((mid, f(mid)?))
}

// ---------------------------------------------------------------------------
// Search driver
// ---------------------------------------------------------------------------

struct SearchState<'a> {
    cfg: &'a SearchConfig,
    memo: BTreeMap<String, f64>,
    log: Vec<LogEntry>,
    trials_used: u64,
    best: Option<Candidate>,
}

impl<'a> SearchState<'a> {
    fn budget_left(&self) -> bool {
        self.trials_used < self.cfg.trials
    }

    /// Scores a template, consuming a trial only for canonical forms not
    /// seen before. Returns `None` when the budget is exhausted.
    fn score(&mut self, t: &Template) -> Result<Option<f64>> {
        let key = t.canonical_key();
        if let Some(score) = self.memo.get(&key) {
            return Ok(Some(*score));
        }
        if !self.budget_left() {
            return Ok(None);
        }
        let free_present = t.free_count() > 0;
        let circuit = t.to_circuit(&self.cfg.connectivity, 0.0);
        debug_assert!(circuit.validate().is_empty());
        let free_slot = if free_present {
            circuit.instructions.iter().position(|inst| {
                matches!(
                    inst.gate,
                    GateSpec::Rotation { axis: Axis::Y, subspace: Subspace::S01, theta }
                        if theta == 0.0
                )
            })
        } else {
            None
        };
        let (score, best_theta) = evaluate_candidate(&circuit, free_slot)?;
        self.trials_used += 1;
        self.log.push(LogEntry {
            trial: self.trials_used,
            cnots: t.cnot_count(),
            locals: t.local_count(),
            score,
        });
        self.memo.insert(key.clone(), score);
        let better = self.best.as_ref().map_or(true, |b| score > b.score);
        if better {
            let theta = best_theta.unwrap_or(0.0);
            self.best = Some(Candidate {
                circuit: t.to_circuit(&self.cfg.connectivity, theta),
                score,
                free_angle: best_theta,
                canonical_key: key,
            });
        }
        Ok(Some(score))
    }
}

fn connected_pairs(cfg: &SearchConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &(a, b) in cfg.connectivity.pairs() {
        if a < cfg.n_qutrits && b < cfg.n_qutrits {
            out.push((a, b));
            out.push((b, a));
        }
    }
    out
}

fn random_template(cfg: &SearchConfig, pairs: &[(usize, usize)], rng: &mut ShotRng) -> Template {
    let mut t = Template::empty(cfg.n_qutrits, cfg.max_cnots);
    for slot in t.cnots.iter_mut() {
        if !pairs.is_empty() {
            *slot = Some(pairs[rng.below(pairs.len())]);
        }
    }
    // Sparse random locals within budget; the descent fills in the rest.
    let mut budget = cfg.max_local.min(4);
    let layers = t.locals.len();
    while budget > 0 && rng.uniform() < 0.7 {
        let layer = rng.below(layers);
        let q = rng.below(cfg.n_qutrits);
        let sub = rng.below(2);
        if t.locals[layer][q][sub].is_none() {
            let gate = if t.free_count() == 0 && rng.uniform() < 0.2 {
                LocalGate::Free
            } else {
                LocalGate::Fixed(rng.below(12))
            };
            t.locals[layer][q][sub] = Some(gate);
            budget -= 1;
        }
    }
    t
}

/// Seeded random-restart search: each restart draws a random template and
/// refines it by coordinate descent over every slot (CNOT choices included)
/// until no single-slot change improves the score. Deterministic given the
/// seed; stops early once the threshold is crossed.
pub fn run_search(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let pairs = connected_pairs(cfg);
    let mut rng = ShotRng::seed_from_u64(cfg.seed);
    let mut st = SearchState {
        cfg,
        memo: BTreeMap::new(),
        log: Vec::new(),
        trials_used: 0,
        best: None,
    };

    // Always score the empty template so the result is well-defined even
    // with a one-trial budget.
    let empty = Template::empty(cfg.n_qutrits, cfg.max_cnots);
    st.score(&empty)?;

    'restarts: while st.budget_left() {
        let mut current = random_template(cfg, &pairs, &mut rng);
        let mut current_score = match st.score(&current)? {
            Some(s) => s,
            None => break,
        };

        loop {
            let mut improved = false;
            // slot visit order reshuffled every sweep
            let n_local_slots = current.locals.len() * cfg.n_qutrits * 2;
            let n_slots = n_local_slots + current.cnots.len();
            let mut order: Vec<usize> = (0..n_slots).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, rng.below(i + 1));
            }

            for slot in order {
                if reached(&st, cfg) {
                    break 'restarts;
                }
                if !st.budget_left() {
                    break 'restarts;
                }
                if slot < n_local_slots {
                    let layer = slot / (cfg.n_qutrits * 2);
                    let q = (slot / 2) % cfg.n_qutrits;
                    let sub = slot % 2;
                    let original = current.locals[layer][q][sub];
                    let mut best_option = original;
                    let mut best_score = current_score;
                    let mut options: Vec<Option<LocalGate>> =
                        (0..12).map(|i| Some(LocalGate::Fixed(i))).collect();
                    options.push(None);
                    options.push(Some(LocalGate::Free));
                    for opt in options {
                        if opt == original {
                            continue;
                        }
                        current.locals[layer][q][sub] = opt;
                        let feasible = current.local_count() <= cfg.max_local
                            && current.free_count() <= 1;
                        if feasible {
                            if let Some(s) = st.score(&current)? {
                                if s > best_score + 1e-12 {
                                    best_score = s;
                                    best_option = opt;
                                }
                            } else {
                                current.locals[layer][q][sub] = original;
                                break 'restarts;
                            }
                        }
                    }
                    current.locals[layer][q][sub] = best_option;
                    if best_score > current_score + 1e-12 {
                        current_score = best_score;
                        improved = true;
                    }
                } else {
                    let k = slot - n_local_slots;
                    let original = current.cnots[k];
                    let mut best_option = original;
                    let mut best_score = current_score;
                    let mut options: Vec<Option<(usize, usize)>> =
                        pairs.iter().map(|p| Some(*p)).collect();
                    options.push(None);
                    for opt in options {
                        if opt == original {
                            continue;
                        }
                        current.cnots[k] = opt;
                        if let Some(s) = st.score(&current)? {
                            if s > best_score + 1e-12 {
                                best_score = s;
                                best_option = opt;
                            }
                        } else {
                            current.cnots[k] = original;
                            break 'restarts;
                        }
                    }
                    current.cnots[k] = best_option;
                    if best_score > current_score + 1e-12 {
                        current_score = best_score;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if reached(&st, cfg) {
            break;
        }
    }

    let converged = reached(&st, cfg);
    let best = st.best.expect("at least the empty template was scored");
    Ok(SearchResult { best, log: st.log, converged, trials_used: st.trials_used })
}

fn reached(st: &SearchState, cfg: &SearchConfig) -> bool {
    st.best.as_ref().map_or(false, |b| b.score > cfg.success_threshold)
}

/// Canonical form of a circuit: adjacent same-axis same-subspace rotations
/// on the same qutrit merged (angles summed, identities dropped), other
/// gates untouched. Simulates to the same state as the input.
pub fn canonical_circuit(circuit: &Circuit) -> Circuit {
    let mut out = Circuit::new(circuit.n_qutrits, circuit.connectivity.clone());
    for inst in &circuit.instructions {
        if let GateSpec::Rotation { axis, subspace, theta } = inst.gate {
            if let Some(last) = out.instructions.last_mut() {
                if last.targets == inst.targets {
                    if let GateSpec::Rotation { axis: la, subspace: ls, theta: lt } = last.gate
                    {
                        if la == axis && ls == subspace {
                            let merged = wrap_4pi(lt + theta);
                            if merged.abs() < 1e-12 {
                                out.instructions.pop();
                            } else {
                                last.gate =
                                    GateSpec::Rotation { axis, subspace, theta: merged };
                            }
                            continue;
                        }
                    }
                }
            }
        }
        out.instructions.push(inst.clone());
    }
    out
}
