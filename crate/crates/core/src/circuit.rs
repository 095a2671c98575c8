//! Circuit data model, device connectivity, exact statevector execution, and
//! the canonical GHZ preparation circuit.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
// Float supplies the f64 math methods when building without std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::gates::{
    cnot_model, dephased_r12, measurement_basis_gate, rotation_gate, x_plus, Axis,
    BasisGateKind, CnotModelParams, QutritGate, Subspace, TwoQutritGate,
};
use crate::state::PureState;
use crate::{Error, Result};

/// Free angle of the first GHZ gate: `2 arctan(1/sqrt(2))`, splitting
/// `|0>` into `sqrt(2/3)|0> + sqrt(1/3)|1>`.
pub fn ghz_free_theta() -> f64 {
    2.0 * (1.0f64 / 2.0f64.sqrt()).atan()
}

/// A gate reference by kind and parameters (not by raw matrix).
#[derive(Debug, Clone, PartialEq)]
pub enum GateSpec {
    Rotation { axis: Axis, subspace: Subspace, theta: f64 },
    DephasedR12 { theta: f64, phi: f64 },
    Basis { kind: BasisGateKind, subspace: Subspace },
    XPlus,
    Cnot(CnotModelParams),
}

impl GateSpec {
    pub fn arity(&self) -> usize {
        match self {
            GateSpec::Cnot(_) => 2,
            _ => 1,
        }
    }

    /// Matrix of a single-qutrit spec (`None` for two-qutrit gates).
    pub fn single_matrix(&self) -> Option<QutritGate> {
        match self {
            GateSpec::Rotation { axis, subspace, theta } => {
                Some(rotation_gate(*axis, *subspace, *theta))
            }
            GateSpec::DephasedR12 { theta, phi } => Some(dephased_r12(*theta, *phi)),
            GateSpec::Basis { kind, subspace } => Some(measurement_basis_gate(*kind, *subspace)),
            GateSpec::XPlus => Some(x_plus()),
            GateSpec::Cnot(_) => None,
        }
    }

    pub fn pair_matrix(&self) -> Option<TwoQutritGate> {
        match self {
            GateSpec::Cnot(p) => Some(cnot_model(*p)),
            _ => None,
        }
    }

    /// Spec of the inverse gate.
    pub fn inverse(&self) -> GateSpec {
        match self {
            GateSpec::Rotation { axis, subspace, theta } => {
                GateSpec::Rotation { axis: *axis, subspace: *subspace, theta: -theta }
            }
            GateSpec::DephasedR12 { theta, phi } => {
                GateSpec::DephasedR12 { theta: -theta, phi: *phi }
            }
            // No named inverse; callers invert composites through
            // apply_inverse, which daggers matrices directly.
            other => other.clone(),
        }
    }
}

impl core::fmt::Display for GateSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GateSpec::Rotation { axis, subspace, theta } => {
                write!(f, "r{}{}({theta})", axis.label(), subspace.label())
            }
            GateSpec::DephasedR12 { theta, phi } => write!(f, "rn12({theta},{phi})"),
            GateSpec::Basis { kind, subspace } => {
                write!(f, "{}{}", kind.label(), subspace.label())
            }
            GateSpec::XPlus => write!(f, "xplus"),
            GateSpec::Cnot(p) => write!(f, "cnot({},{},{})", p.alpha, p.beta, p.phi),
        }
    }
}

/// One gate application; two-qutrit targets are ordered control-first.
#[derive(Debug, Clone, PartialEq)]
pub struct GateInstruction {
    pub gate: GateSpec,
    pub targets: Vec<usize>,
}

/// Allowed two-qutrit pairs, stored as unordered pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    pairs: BTreeSet<(usize, usize)>,
}

impl Connectivity {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Connectivity {
            pairs: pairs
                .into_iter()
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect(),
        }
    }

    /// Linear chain `0 - 1 - ... - n-1`, matching the device layout.
    pub fn line(n: usize) -> Self {
        Connectivity::new((1..n).map(|i| (i - 1, i)))
    }

    pub fn allows(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a.min(b), a.max(b)))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.pairs.iter()
    }
}

/// An ordered gate list over `n_qutrits` sites with a connectivity constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qutrits: usize,
    pub connectivity: Connectivity,
    pub instructions: Vec<GateInstruction>,
}

/// A problem reported by [`Circuit::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Connectivity { instruction: usize, control: usize, target: usize },
    IndexOutOfRange { instruction: usize, index: usize },
    Arity { instruction: usize, expected: usize, found: usize },
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::Connectivity { instruction, control, target } => write!(
                f,
                "instruction {instruction}: pair ({control},{target}) not in connectivity"
            ),
            Violation::IndexOutOfRange { instruction, index } => {
                write!(f, "instruction {instruction}: qutrit index {index} out of range")
            }
            Violation::Arity { instruction, expected, found } => write!(
                f,
                "instruction {instruction}: expected {expected} targets, found {found}"
            ),
        }
    }
}

impl Circuit {
    pub fn new(n_qutrits: usize, connectivity: Connectivity) -> Self {
        Circuit { n_qutrits, connectivity, instructions: Vec::new() }
    }

    pub fn push(&mut self, gate: GateSpec, targets: &[usize]) {
        self.instructions.push(GateInstruction { gate, targets: targets.to_vec() });
    }

    pub fn cnot_count(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i.gate, GateSpec::Cnot(_)))
            .count()
    }

    pub fn local_count(&self) -> usize {
        self.instructions.len() - self.cnot_count()
    }

    /// Checks connectivity, index ranges, and instruction arity.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, inst) in self.instructions.iter().enumerate() {
            let expected = inst.gate.arity();
            if inst.targets.len() != expected {
                out.push(Violation::Arity {
                    instruction: k,
                    expected,
                    found: inst.targets.len(),
                });
                continue;
            }
            let mut in_range = true;
            for &t in &inst.targets {
                if t >= self.n_qutrits {
                    out.push(Violation::IndexOutOfRange { instruction: k, index: t });
                    in_range = false;
                }
            }
            if expected == 2 && in_range {
                let (control, target) = (inst.targets[0], inst.targets[1]);
                if control == target || !self.connectivity.allows(control, target) {
                    out.push(Violation::Connectivity { instruction: k, control, target });
                }
            }
        }
        out
    }

    /// A copy with only the first `k` instructions.
    pub fn prefix(&self, k: usize) -> Circuit {
        Circuit {
            n_qutrits: self.n_qutrits,
            connectivity: self.connectivity.clone(),
            instructions: self.instructions[..k.min(self.instructions.len())].to_vec(),
        }
    }
}

fn apply_instruction(state: &mut PureState, inst: &GateInstruction) -> Result<()> {
    if let Some(g) = inst.gate.single_matrix() {
        state.apply_single(&g.matrix, inst.targets[0])
    } else {
        let g = inst.gate.pair_matrix().expect("two-qutrit gate");
        state.apply_pair(&g.matrix, inst.targets[0], inst.targets[1])
    }
}

/// Left-to-right application of every instruction. Connectivity and index
/// violations abort before any gate is applied.
pub fn apply_circuit(circuit: &Circuit, input: &PureState) -> Result<PureState> {
    if input.n_qutrits() != circuit.n_qutrits {
        return Err(Error::DimensionMismatch {
            expected: crate::state::dim(circuit.n_qutrits),
            found: input.dim(),
        });
    }
    if let Some(v) = circuit.validate().first() {
        return Err(match v {
            Violation::Connectivity { control, target, .. } => {
                Error::ConnectivityViolation { control: *control, target: *target }
            }
            Violation::IndexOutOfRange { index, .. } => {
                Error::IndexOutOfRange { index: *index, n_qutrits: circuit.n_qutrits }
            }
            Violation::Arity { expected, found, .. } => {
                Error::DimensionMismatch { expected: *expected, found: *found }
            }
        });
    }
    let mut st = input.clone();
    for inst in &circuit.instructions {
        apply_instruction(&mut st, inst)?;
    }
    debug_assert!((st.norm_sqr() - 1.0).abs() < 1e-10);
    Ok(st)
}

/// Applies the instruction-wise inverse, in reverse order.
pub fn apply_inverse(circuit: &Circuit, input: &PureState) -> Result<PureState> {
    let mut st = input.clone();
    for inst in circuit.instructions.iter().rev() {
        if let Some(g) = inst.gate.single_matrix() {
            st.apply_single(&g.dagger().matrix, inst.targets[0])?;
        } else {
            let g = inst.gate.pair_matrix().expect("two-qutrit gate");
            let mut m = [[Complex64::new(0.0, 0.0); 9]; 9];
            for (i, row) in g.matrix.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    m[j][i] = v.conj();
                }
            }
            st.apply_pair(&m, inst.targets[0], inst.targets[1])?;
        }
    }
    Ok(st)
}

/// Instruction counts after each of the four stages of the GHZ circuit.
pub const GHZ_STAGE_ENDS: [usize; 4] = [1, 3, 6, 9];

/// The GHZ preparation circuit on a three-site line (middle qutrit controls
/// every CNOT), with the default CNOT model.
///
/// Stage layout:
/// * (a) `R_y^(01)(free_theta)` on the middle qutrit,
/// * (b) CNOTs middle->left and middle->right,
/// * (c) `R_y^(12)(pi)` on each qutrit, moving the `|111>` branch to
///   `|222>` (fixed from the restricted angle set by exhaustive check: 16 of
///   the 64 axis/sign combinations reproduce the zero-phase state with the
///   ideal CNOT; all-`R_y(+pi)` is the simplest of them),
/// * (d) `R_y^(01)(pi/2)` on the middle qutrit, then the two CNOTs again.
///
/// With CNOT phase `phi` the output is
/// `(|000> + |111> + e^{2 i phi}|222>)/sqrt(3)`.
pub fn ghz_circuit(free_theta: f64) -> Circuit {
    ghz_circuit_with(free_theta, CnotModelParams::default_model())
}

/// [`ghz_circuit`] with explicit CNOT-model parameters.
pub fn ghz_circuit_with(free_theta: f64, cnot: CnotModelParams) -> Circuit {
    let mut c = Circuit::new(3, Connectivity::line(3));
    // (a)
    c.push(GateSpec::Rotation { axis: Axis::Y, subspace: Subspace::S01, theta: free_theta }, &[1]);
    // (b)
    c.push(GateSpec::Cnot(cnot), &[1, 0]);
    c.push(GateSpec::Cnot(cnot), &[1, 2]);
    // (c)
    for q in 0..3 {
        c.push(GateSpec::Rotation { axis: Axis::Y, subspace: Subspace::S12, theta: PI }, &[q]);
    }
    // (d)
    c.push(GateSpec::Rotation { axis: Axis::Y, subspace: Subspace::S01, theta: FRAC_PI_2 }, &[1]);
    c.push(GateSpec::Cnot(cnot), &[1, 0]);
    c.push(GateSpec::Cnot(cnot), &[1, 2]);
    c
}

/// Human-readable validation summary, empty string when the circuit is ok.
pub fn violation_report(violations: &[Violation]) -> String {
    let mut s = String::new();
    for v in violations {
        s.push_str(&format!("{v}\n"));
    }
    s
}
