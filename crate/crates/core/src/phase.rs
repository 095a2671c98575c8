//! Rotating-frame dephasing model and the compensation phase scan.
//!
//! Gates in the (12) subspace are implemented with amplitude-modulated
//! pulses referenced to the (01) frame, so each occurrence accumulates an
//! extra in-plane axis phase. The model replaces every ideal
//! `R_x^(12)`/`R_y^(12)` with [`crate::gates::dephased_r12`] at its nominal
//! axis phase plus a per-occurrence offset, and compensates by scanning an
//! `R_z^(01)(phi)` inserted between preparation and tomography.
//!
//! The compensation gate is inserted on a single qutrit: the interference
//! phase it adds is `phi/2`, matching the closed-form oscillation
//! `P(111) = (1/24) |1 + exp(i(sum_i (b_i - 2 a_i) + phi/2))|^2`
//! of the x-basis (12) projection. (Inserting it on all three qutrits
//! would triple the slope to `3 phi/2`.)

use alloc::string::String;
use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_2, PI};

// Float supplies the f64 math methods when building without std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::circuit::{Circuit, GateInstruction, GateSpec};
use crate::gates::{basis_gate_decomposition, x_plus_decomposition, Axis, Subspace};
use crate::{Error, Result};

/// Per-qutrit frame phases for the (12)-rotation occurrences of a circuit:
/// the k-th occurrence on a qutrit gets `a` (k even) or `b` (k odd), in
/// application order. `a` is the phase of the first rotation inside a
/// measurement-basis decomposition, `b` the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePhase {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl FramePhase {
    pub fn zero() -> Self {
        FramePhase { a: [0.0; 3], b: [0.0; 3] }
    }

    /// Equal phases on every qutrit (the default hardware assumption).
    pub fn uniform(a: f64, b: f64) -> Self {
        FramePhase { a: [a; 3], b: [b; 3] }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(self.b.iter()).all(|v| *v == 0.0)
    }

    /// Offset assigned to the `k`-th (12)-rotation occurrence on `qutrit`.
    pub fn occurrence(&self, qutrit: usize, k: usize) -> f64 {
        if k % 2 == 0 {
            self.a[qutrit]
        } else {
            self.b[qutrit]
        }
    }

    /// `sum_i (b_i - 2 a_i)`, the accumulated phase entering the
    /// oscillation formula.
    pub fn accumulated(&self) -> f64 {
        (0..3).map(|i| self.b[i] - 2.0 * self.a[i]).sum()
    }
}

/// Nominal axis phase of an ideal (12) rotation in the dephased
/// parameterization.
pub fn nominal_axis_phase(axis: Axis) -> f64 {
    match axis {
        Axis::X => PI,
        Axis::Y => FRAC_PI_2,
        Axis::Z => 0.0,
    }
}

/// Grid of compensation phases and degenerate-fit policy for a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    /// Scanned values of the compensation phase, strictly increasing.
    pub grid: Vec<f64>,
}

impl ScanConfig {
    /// 24 points spaced `pi/12` over `[0, 2 pi)`.
    pub fn default_grid() -> Self {
        ScanConfig { grid: (0..24).map(|k| k as f64 * PI / 12.0).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig(String::from("scan grid is empty")));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(String::from(
                "scan grid must be strictly increasing",
            )));
        }
        Ok(())
    }
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig::default_grid()
    }
}

/// Probability of the `|111>` outcome of the x-basis (12) projection of the
/// GHZ state under per-gate frame phases `a`, `b` and a compensation phase:
/// `(1/24) |1 + exp(i(sum_i (b_i - 2 a_i) + phi_z/2))|^2`, which oscillates
/// between 0 and 1/6.
pub fn predicted_oscillation(a: &[f64; 3], b: &[f64; 3], phi_z: f64) -> f64 {
    let acc: f64 = (0..3).map(|i| b[i] - 2.0 * a[i]).sum();
    (1.0 + (acc + phi_z / 2.0).cos()) / 12.0
}

/// Least-squares fit of `A cos(phi/2 + delta) + C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub delta: f64,
    pub offset: f64,
}

impl SinusoidFit {
    pub fn eval(&self, phi: f64) -> f64 {
        self.amplitude * (phi / 2.0 + self.delta).cos() + self.offset
    }

    /// Compensation phase at the fitted maximum, reduced into `[0, 4 pi)`
    /// (the fit model is `4 pi`-periodic in the scanned phase).
    pub fn best_phi(&self) -> f64 {
        let period = 4.0 * PI;
        let mut phi = -2.0 * self.delta % period;
        if phi < 0.0 {
            phi += period;
        }
        phi
    }
}

/// Fits `A cos(phi/2 + delta) + C` to `(phi, value)` samples. The model is
/// linear in `(A cos delta, -A sin delta, C)`.
pub fn fit_cos_half(points: &[(f64, f64)]) -> Result<SinusoidFit> {
    if points.len() < 3 {
        return Err(Error::InvalidConfig(String::from("need at least 3 scan points to fit")));
    }
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|(phi, _)| alloc::vec![(phi / 2.0).cos(), (phi / 2.0).sin(), 1.0])
        .collect();
    let values: Vec<f64> = points.iter().map(|(_, v)| *v).collect();
    let sol = crate::linalg::least_squares(&rows, &values)
        .ok_or_else(|| Error::InvalidConfig(String::from("degenerate scan grid")))?;
    let (p, q, c0) = (sol[0], sol[1], sol[2]);
    Ok(SinusoidFit { amplitude: p.hypot(q), delta: f64::atan2(-q, p), offset: c0 })
}

/// Replaces every (12)-subspace x/y rotation in `circuit` by the dephased
/// rotation at its nominal axis phase plus the occurrence's frame phase.
/// Composite single-qutrit gates (basis changes, `X_+`) are expanded into
/// their native decompositions first so each internal rotation picks up its
/// own occurrence phase. A zero `FramePhase` returns the circuit unchanged.
pub fn dephase_circuit(circuit: &Circuit, fp: &FramePhase) -> Circuit {
    if fp.is_zero() {
        return circuit.clone();
    }
    let mut out = Circuit::new(circuit.n_qutrits, circuit.connectivity.clone());
    let mut occurrences = alloc::vec![0usize; circuit.n_qutrits];
    for inst in &circuit.instructions {
        match &inst.gate {
            GateSpec::Basis { kind, subspace } => {
                let q = inst.targets[0];
                for (axis, sub, theta) in basis_gate_decomposition(*kind, *subspace) {
                    push_dephased_rotation(&mut out, fp, &mut occurrences, q, axis, sub, theta);
                }
            }
            GateSpec::XPlus => {
                let q = inst.targets[0];
                for (axis, sub, theta) in x_plus_decomposition() {
                    push_dephased_rotation(&mut out, fp, &mut occurrences, q, axis, sub, theta);
                }
            }
            GateSpec::Rotation { axis, subspace, theta } => {
                let q = inst.targets[0];
                push_dephased_rotation(&mut out, fp, &mut occurrences, q, *axis, *subspace, *theta);
            }
            GateSpec::DephasedR12 { theta, phi } => {
                let q = inst.targets[0];
                let k = occurrences[q];
                occurrences[q] += 1;
                out.push(
                    GateSpec::DephasedR12 { theta: *theta, phi: phi + fp.occurrence(q, k) },
                    &inst.targets,
                );
            }
            GateSpec::Cnot(_) => {
                out.instructions.push(GateInstruction {
                    gate: inst.gate.clone(),
                    targets: inst.targets.clone(),
                });
            }
        }
    }
    out
}

fn push_dephased_rotation(
    out: &mut Circuit,
    fp: &FramePhase,
    occurrences: &mut [usize],
    q: usize,
    axis: Axis,
    subspace: Subspace,
    theta: f64,
) {
    let is_frame_sensitive = subspace == Subspace::S12 && matches!(axis, Axis::X | Axis::Y);
    if is_frame_sensitive {
        let k = occurrences[q];
        occurrences[q] += 1;
        let offset = fp.occurrence(q, k);
        if offset != 0.0 {
            out.push(
                GateSpec::DephasedR12 { theta, phi: nominal_axis_phase(axis) + offset },
                &[q],
            );
            return;
        }
    }
    out.push(GateSpec::Rotation { axis, subspace, theta }, &[q]);
}

// ---------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------

use crate::tomography::{
    expectation_with_variance_full, PauliString, Preparation, PipelineConfig, ScanPoint,
    StringScanCurve, RE_STRINGS,
};

/// Outcome of a compensation-phase scan of one subspace's x-basis string.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanOutcome {
    pub subspace: Subspace,
    pub fit: SinusoidFit,
    /// Compensation phase at the fitted maximum, in `[0, 4 pi)`.
    pub best_phi: f64,
    /// False when the fitted amplitude stays below three times the
    /// statistical floor: the oscillation is not resolved.
    pub resolved: bool,
    /// Basis-element probabilities of the xxx string at every grid point.
    pub curve: StringScanCurve,
}

fn prepared_state(prep: &Preparation, fp: Option<&FramePhase>) -> crate::Result<crate::state::PureState> {
    match prep {
        Preparation::State(s) => Ok(s.clone()),
        Preparation::Circuit(c) => {
            let circuit = match fp {
                Some(f) => dephase_circuit(c, f),
                None => c.clone(),
            };
            crate::circuit::apply_circuit(&circuit, &crate::state::PureState::zero(c.n_qutrits))
        }
    }
}

/// Scans the compensation phase `R_z^(01)(phi)` (inserted on qutrit 0
/// between preparation and the tomography rotations) over the grid, tracking
/// the basis-element probabilities of the subspace's xxx string. Fits
/// `A cos(phi/2 + delta) + C` to the all-lower-level element and returns the
/// phase at the fitted maximum.
///
/// Requires dephasing to be enabled in the pipeline config.
pub fn phase_scan(
    prep: &Preparation,
    cfg: &PipelineConfig,
    subspace: Subspace,
) -> crate::Result<PhaseScanOutcome> {
    let fp = cfg
        .dephasing
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig(String::from("phase scan requires dephasing")))?;
    let scan = cfg.scan.clone().unwrap_or_default();
    scan.validate()?;
    let cm = cfg.readout.as_ref().map(crate::measurement::build_confusion);
    let state = prepared_state(prep, Some(fp))?;

    let p = PauliString::new(RE_STRINGS[0], subspace)?;
    let mut points = Vec::with_capacity(scan.grid.len());
    let mut experiment = 0u64;
    for &phi in &scan.grid {
        let est = expectation_with_variance_full(
            &state,
            &p,
            cfg.mode,
            cm.as_ref(),
            Some(fp),
            phi,
            cfg.seed.wrapping_add(experiment),
        )?;
        experiment += 8;
        let best = est.best().clone();
        points.push(ScanPoint {
            phi,
            expectation: best.value,
            variance: best.variance,
            element_probs: est.element_probs,
            element_stds: est.element_stds,
        });
    }

    let target: Vec<(f64, f64)> =
        points.iter().map(|pt| (pt.phi, pt.element_probs[0])).collect();
    let fit = fit_cos_half(&target)?;
    let mean_var: f64 = points
        .iter()
        .map(|pt| pt.element_stds[0] * pt.element_stds[0])
        .sum::<f64>()
        / points.len() as f64;
    let resolved = fit.amplitude > 3.0 * mean_var.sqrt().max(1e-9);
    Ok(PhaseScanOutcome {
        subspace,
        fit,
        best_phi: fit.best_phi(),
        resolved,
        curve: StringScanCurve { axes: RE_STRINGS[0], points },
    })
}

/// One sampled point of a delay-scan curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayPoint {
    pub delay: f64,
    pub value: f64,
    pub std: f64,
}

/// Expectation-vs-delay curve of one Pauli string.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayScanCurve {
    pub subspace: Subspace,
    pub axes: [Axis; 3],
    pub points: Vec<DelayPoint>,
}

/// Maps delays inserted between the tomography (12) rotations to frame
/// phases (`delay * phase_per_unit_delay`, an anharmonicity proxy) and
/// evaluates the tomography expectations. The delay enters the same
/// interference slot as the compensation gate — the two are the paper's
/// interchangeable strategies — so it only affects the subspaces whose
/// basis gates contain (12) rotations, and the oscillation period in the
/// delay is `4 pi / phase_per_unit_delay`.
pub fn delay_scan(
    prep: &Preparation,
    cfg: &PipelineConfig,
    delays: &[f64],
    phase_per_unit_delay: f64,
) -> crate::Result<Vec<DelayScanCurve>> {
    if delays.is_empty() {
        return Err(Error::InvalidConfig(String::from("delay list is empty")));
    }
    let fp = cfg
        .dephasing
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig(String::from("delay scan requires dephasing")))?;
    let cm = cfg.readout.as_ref().map(crate::measurement::build_confusion);
    let state = prepared_state(prep, Some(fp))?;

    let mut curves = Vec::new();
    let mut experiment = 0u64;
    for subspace in Subspace::ALL {
        // (01) basis changes contain no (12) rotations: no delay is inserted.
        let delay_sensitive = subspace != Subspace::S01;
        for axes in RE_STRINGS {
            let p = PauliString::new(axes, subspace)?;
            let mut points = Vec::with_capacity(delays.len());
            for &d in delays {
                let comp = if delay_sensitive { phase_per_unit_delay * d } else { 0.0 };
                let est = expectation_with_variance_full(
                    &state,
                    &p,
                    cfg.mode,
                    cm.as_ref(),
                    Some(fp),
                    comp,
                    cfg.seed.wrapping_add(experiment),
                )?;
                experiment += 8;
                let best = est.best();
                points.push(DelayPoint {
                    delay: d,
                    value: best.value,
                    std: best.variance.sqrt(),
                });
            }
            curves.push(DelayScanCurve { subspace, axes, points });
        }
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply_circuit, ghz_circuit, ghz_free_theta};
    use crate::state::{ghz_family_fidelity, PureState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn oscillation_bounds() {
        // zero accumulated phase: maximum 1/6
        assert_abs_diff_eq!(predicted_oscillation(&[0.0; 3], &[0.0; 3], 0.0), 1.0 / 6.0);
        // argument pi: minimum 0
        let p = predicted_oscillation(&[0.0; 3], &[PI; 3], -4.0 * PI);
        assert_abs_diff_eq!(p, (1.0 + (3.0f64 * PI - 2.0 * PI).cos()) / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-12);
        // compensated back to zero argument
        let a = [0.1, 0.2, -0.05];
        let b = [0.3, -0.4, 0.25];
        let acc: f64 = (0..3).map(|i| b[i] - 2.0 * a[i]).sum();
        assert_abs_diff_eq!(
            predicted_oscillation(&a, &b, -2.0 * acc),
            1.0 / 6.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fit_recovers_injected_sinusoid() {
        let grid = ScanConfig::default_grid().grid;
        let (a0, d0, c0) = (0.0825, 0.9, 0.0833);
        let pts: Vec<(f64, f64)> =
            grid.iter().map(|phi| (*phi, a0 * (phi / 2.0 + d0).cos() + c0)).collect();
        let fit = fit_cos_half(&pts).unwrap();
        assert_abs_diff_eq!(fit.amplitude, a0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.delta, d0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.offset, c0, epsilon = 1e-10);
        // extremum at phi = -2 delta, folded into [0, 4 pi)
        assert_abs_diff_eq!(fit.best_phi(), 4.0 * PI - 2.0 * d0, epsilon = 1e-9);
    }

    #[test]
    fn scan_config_validation() {
        assert!(ScanConfig::default_grid().validate().is_ok());
        assert_eq!(ScanConfig::default_grid().grid.len(), 24);
        assert!(ScanConfig { grid: alloc::vec![] }.validate().is_err());
        assert!(ScanConfig { grid: alloc::vec![0.0, 0.0] }.validate().is_err());
    }

    #[test]
    fn zero_frame_phase_leaves_circuit_unchanged() {
        let c = ghz_circuit(ghz_free_theta());
        let d = dephase_circuit(&c, &FramePhase::zero());
        assert_eq!(c, d);
    }

    #[test]
    fn dephased_ghz_keeps_family_fidelity() {
        let c = ghz_circuit(ghz_free_theta());
        for (a, b) in [(0.3, -0.2), (1.0, 0.5), (-2.0, 0.9)] {
            let d = dephase_circuit(&c, &FramePhase::uniform(a, b));
            let out = apply_circuit(&d, &PureState::zero(3)).unwrap();
            assert_abs_diff_eq!(ghz_family_fidelity(&out).unwrap(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn occurrence_counting_is_per_qutrit() {
        use crate::circuit::Connectivity;
        let mut c = Circuit::new(3, Connectivity::line(3));
        // two (12) rotations on qutrit 0, one on qutrit 1
        c.push(GateSpec::Rotation { axis: Axis::X, subspace: Subspace::S12, theta: PI }, &[0]);
        c.push(GateSpec::Rotation { axis: Axis::Y, subspace: Subspace::S12, theta: PI }, &[1]);
        c.push(GateSpec::Rotation { axis: Axis::Y, subspace: Subspace::S12, theta: -PI }, &[0]);
        let fp = FramePhase { a: [0.1, 0.2, 0.3], b: [0.4, 0.5, 0.6] };
        let d = dephase_circuit(&c, &fp);
        match &d.instructions[0].gate {
            GateSpec::DephasedR12 { phi, .. } => {
                assert_abs_diff_eq!(*phi, PI + 0.1, epsilon = 1e-15)
            }
            g => panic!("unexpected gate {g:?}"),
        }
        match &d.instructions[1].gate {
            GateSpec::DephasedR12 { phi, .. } => {
                assert_abs_diff_eq!(*phi, FRAC_PI_2 + 0.2, epsilon = 1e-15)
            }
            g => panic!("unexpected gate {g:?}"),
        }
        match &d.instructions[2].gate {
            // second occurrence on qutrit 0 takes the b phase
            GateSpec::DephasedR12 { phi, .. } => {
                assert_abs_diff_eq!(*phi, FRAC_PI_2 + 0.4, epsilon = 1e-15)
            }
            g => panic!("unexpected gate {g:?}"),
        }
    }

    proptest! {
        // Dephasing the preparation never leaves the GHZ family.
        #[test]
        fn family_fidelity_invariant_under_random_frame_phases(
            a in proptest::collection::vec(-3.0f64..3.0, 3),
            b in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let fp = FramePhase { a: [a[0], a[1], a[2]], b: [b[0], b[1], b[2]] };
            let d = dephase_circuit(&ghz_circuit(ghz_free_theta()), &fp);
            let out = apply_circuit(&d, &PureState::zero(3)).unwrap();
            let f = ghz_family_fidelity(&out).unwrap();
            prop_assert!((f - 1.0).abs() < 1e-10);
        }
    }

    fn exact_cfg_with(fp: FramePhase) -> PipelineConfig {
        let mut cfg = PipelineConfig::exact();
        cfg.dephasing = Some(fp);
        cfg.scan = Some(ScanConfig::default_grid());
        cfg
    }

    // Formula-vs-simulator oracle: the x-basis (12) |111> probability of the
    // clean GHZ state under measurement-gate dephasing equals the closed
    // form pointwise.
    #[test]
    fn simulated_oscillation_matches_closed_form() {
        let fp = FramePhase { a: [0.17, -0.4, 0.09], b: [0.33, 0.21, -0.55] };
        let prep = Preparation::State(PureState::ghz());
        let out = phase_scan(&prep, &exact_cfg_with(fp), Subspace::S12).unwrap();
        for pt in &out.curve.points {
            let predicted = predicted_oscillation(&fp.a, &fp.b, pt.phi);
            assert_abs_diff_eq!(pt.element_probs[0], predicted, epsilon = 1e-10);
        }
        // the oscillation spans exactly [0, 1/6]
        assert_abs_diff_eq!(out.fit.amplitude, 1.0 / 12.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.fit.offset, 1.0 / 12.0, epsilon = 1e-9);
        assert!(out.resolved);
    }

    #[test]
    fn scan_recovers_injected_phase() {
        // injected accumulated phase s: best phi must be -2s mod 4 pi
        let fp = FramePhase::uniform(0.1, 0.45);
        let s = fp.accumulated();
        let prep = Preparation::State(PureState::ghz());
        let out = phase_scan(&prep, &exact_cfg_with(fp), Subspace::S12).unwrap();
        let period = 4.0 * PI;
        let expect = ((-2.0 * s) % period + period) % period;
        assert_abs_diff_eq!(out.best_phi, expect, epsilon = 1e-6);
    }

    #[test]
    fn zero_dephasing_curve_is_the_bare_formula() {
        let fp = FramePhase::zero();
        let prep = Preparation::State(PureState::ghz());
        let out = phase_scan(&prep, &exact_cfg_with(fp), Subspace::S12).unwrap();
        for pt in &out.curve.points {
            assert_abs_diff_eq!(
                pt.element_probs[0],
                predicted_oscillation(&[0.0; 3], &[0.0; 3], pt.phi),
                epsilon = 1e-10
            );
        }
        assert_abs_diff_eq!(out.fit.delta, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn phase_scan_requires_dephasing() {
        let prep = Preparation::State(PureState::ghz());
        assert!(phase_scan(&prep, &PipelineConfig::exact(), Subspace::S12).is_err());
    }

    // Compensation closes the loop: with the injected optimum sitting on the
    // grid, the scanned pipeline reproduces the dephasing-free fidelity.
    #[test]
    fn compensated_tomography_recovers_fidelity() {
        use crate::tomography::run_full_tomography;
        // accumulated s = 3(b - 2a) = -pi/4, optimum at phi = pi/2 (on grid)
        let fp = FramePhase::uniform(0.0, -PI / 12.0);
        let prep = Preparation::ghz_circuit_ideal();
        let clean =
            run_full_tomography(&prep, &PipelineConfig::exact()).unwrap();
        let scanned = run_full_tomography(&prep, &exact_cfg_with(fp)).unwrap();
        assert_abs_diff_eq!(scanned.fidelity, clean.fidelity, epsilon = 1e-9);
        for scan in &scanned.scans {
            assert!(scan.resolved);
            // Each subspace accumulates its own phase: the (12) basis change
            // picks up sum(b - 2a) = -pi/4 (optimum at pi/2), while in the
            // (02) basis change the two (12) rotations cancel their b phases
            // and leave -sum(a) = 0 (optimum at 0).
            let expect = match scan.subspace {
                Subspace::S12 => PI / 2.0,
                _ => 0.0,
            };
            assert_abs_diff_eq!(scan.selected_phi, expect, epsilon = 1e-12);
        }
    }

    // Dephased lowering gates never change basis-probability estimates: the
    // frame phase of X_+ is a global phase on the counted amplitude.
    #[test]
    fn dephased_lowering_leaves_estimates_unchanged() {
        use crate::measurement::SampleMode;
        use crate::tomography::diagonal_estimate;
        let mut rng = crate::rng::ShotRng::seed_from_u64(3);
        let amps: alloc::vec::Vec<crate::Complex64> = (0..27)
            .map(|_| crate::Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5))
            .collect();
        let st = PureState::normalized(3, amps).unwrap();
        let fp = FramePhase { a: [0.7, -1.2, 0.3], b: [0.2, 2.0, -0.8] };
        for i in 0..27 {
            let d = crate::state::digits_of(i, 3);
            let basis = [d[0], d[1], d[2]];
            let plain =
                diagonal_estimate(&st, &basis, SampleMode::Exact, None, None, 0).unwrap();
            let dephased =
                diagonal_estimate(&st, &basis, SampleMode::Exact, None, Some(&fp), 0).unwrap();
            assert_abs_diff_eq!(plain.raw.p, dephased.raw.p, epsilon = 1e-12);
        }
    }

    #[test]
    fn delay_scan_behaviour() {
        let fp = FramePhase::uniform(0.05, 0.12);
        let mut cfg = PipelineConfig::exact();
        cfg.dephasing = Some(fp);
        let prep = Preparation::State(PureState::ghz());
        let rate = 0.8;
        let delays: alloc::vec::Vec<f64> = (0..40).map(|k| k as f64 * 0.5).collect();
        let curves = delay_scan(&prep, &cfg, &delays, rate).unwrap();

        // zero-delay entries match the direct (no-delay) estimates exactly
        for curve in &curves {
            let p = PauliString::new(curve.axes, curve.subspace).unwrap();
            let st = PureState::ghz();
            let direct = expectation_with_variance_full(
                &st,
                &p,
                crate::measurement::SampleMode::Exact,
                None,
                Some(&fp),
                0.0,
                0,
            )
            .unwrap();
            assert_abs_diff_eq!(curve.points[0].value, direct.raw.value, epsilon = 1e-12);
        }

        for curve in &curves {
            let values: alloc::vec::Vec<f64> =
                curve.points.iter().map(|p| p.value).collect();
            let spread =
                values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - values.iter().cloned().fold(f64::INFINITY, f64::min);
            match curve.subspace {
                // (01) expectations are delay-independent
                Subspace::S01 => assert!(spread < 1e-12, "S01 spread {spread}"),
                // (12) and (02) oscillate
                _ => assert!(spread > 0.3, "{:?} spread {spread}", curve.subspace),
            }
        }

        // period 4 pi / rate: compare f(d) with f(d + period)
        let period = 4.0 * PI / rate;
        let fine: alloc::vec::Vec<f64> = alloc::vec![0.3, 0.3 + period, 1.1, 1.1 + period];
        let curves = delay_scan(&prep, &cfg, &fine, rate).unwrap();
        for curve in curves.iter().filter(|c| c.subspace == Subspace::S12) {
            assert_abs_diff_eq!(curve.points[0].value, curve.points[1].value, epsilon = 1e-10);
            assert_abs_diff_eq!(curve.points[2].value, curve.points[3].value, epsilon = 1e-10);
        }

        // empty delay list is rejected
        assert!(delay_scan(&prep, &cfg, &[], rate).is_err());
    }
}
