//! The single- and two-qutrit gate library.
//!
//! Single-qutrit gates act as qubit rotations inside one two-level subspace
//! and leave the spectator level untouched. The two-qutrit gate is the
//! device CNOT extended to the full two-qutrit space: an ordinary qubit CNOT
//! when the control stays in the (01) subspace, with phase and mixing action
//! on the `|2>` rows parameterized by [`CnotModelParams`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
// Float supplies the f64 math methods when building without std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Unitarity tolerance for constructed gates.
pub const GATE_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Ordered two-level subspace of a qutrit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subspace {
    S01,
    S12,
    S02,
}

impl Subspace {
    pub const ALL: [Subspace; 3] = [Subspace::S01, Subspace::S12, Subspace::S02];

    /// The (lower, upper) levels of the subspace.
    pub fn levels(self) -> (usize, usize) {
        match self {
            Subspace::S01 => (0, 1),
            Subspace::S12 => (1, 2),
            Subspace::S02 => (0, 2),
        }
    }

    /// The level the subspace does not touch.
    pub fn spectator(self) -> usize {
        match self {
            Subspace::S01 => 2,
            Subspace::S12 => 0,
            Subspace::S02 => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Subspace::S01 => "01",
            Subspace::S12 => "12",
            Subspace::S02 => "02",
        }
    }
}

/// Rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// A 3x3 unitary with a symbolic label.
#[derive(Debug, Clone, PartialEq)]
pub struct QutritGate {
    pub matrix: [[Complex64; 3]; 3],
    pub label: String,
}

impl QutritGate {
    pub fn identity() -> Self {
        QutritGate { matrix: identity3(), label: String::from("id") }
    }

    /// Largest deviation of `U^dagger U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = c(0.0, 0.0);
                for k in 0..3 {
                    acc += self.matrix[k][i].conj() * self.matrix[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - c(expect, 0.0)).norm());
            }
        }
        worst
    }

    pub fn dagger(&self) -> QutritGate {
        let mut m = identity3();
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m[j][i] = v.conj();
            }
        }
        QutritGate { matrix: m, label: format!("{}^dag", self.label) }
    }
}

/// A 9x9 unitary over an ordered (control, target) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQutritGate {
    pub matrix: [[Complex64; 9]; 9],
    pub label: String,
}

impl TwoQutritGate {
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..9 {
            for j in 0..9 {
                let mut acc = c(0.0, 0.0);
                for k in 0..9 {
                    acc += self.matrix[k][i].conj() * self.matrix[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - c(expect, 0.0)).norm());
            }
        }
        worst
    }
}

/// Parameters of the device-CNOT model: the phases of the `|2>`-control
/// block `[[a, b*], [b, c]]` with `a = e^{i alpha}/sqrt(2)`,
/// `b = e^{i beta}/sqrt(2)`, `c = -e^{-i alpha}/sqrt(2)`, and the phase
/// `e^{i phi}` on `|22>`. The block is unitary for every real choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnotModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

impl CnotModelParams {
    /// Hardware values are unreported, so the defaults are a documented,
    /// configurable choice. Any value leaves the prepared state inside the
    /// GHZ family.
    pub fn default_model() -> Self {
        CnotModelParams { alpha: 0.0, beta: 0.0, phi: core::f64::consts::FRAC_PI_2 }
    }

    /// `phi = 0`, so the GHZ circuit output carries no relative phase on
    /// `|222>`. Used by golden tests that compare against the zero-phase
    /// GHZ state.
    pub fn ideal() -> Self {
        CnotModelParams { alpha: 0.0, beta: 0.0, phi: 0.0 }
    }
}

impl Default for CnotModelParams {
    fn default() -> Self {
        CnotModelParams::default_model()
    }
}

/// Pauli operator restricted to a two-level subspace; zero on the spectator.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePauli {
    pub axis: Axis,
    pub subspace: Subspace,
    pub matrix: [[Complex64; 3]; 3],
}

/// `sigma_x^(ab) = |a><b| + |b><a|`, `sigma_y^(ab) = -i|a><b| + i|b><a|`.
pub fn subspace_pauli(axis: Axis, subspace: Subspace) -> SubspacePauli {
    let (a, b) = subspace.levels();
    let mut m = [[c(0.0, 0.0); 3]; 3];
    match axis {
        Axis::X => {
            m[a][b] = c(1.0, 0.0);
            m[b][a] = c(1.0, 0.0);
        }
        Axis::Y => {
            m[a][b] = c(0.0, -1.0);
            m[b][a] = c(0.0, 1.0);
        }
        Axis::Z => {
            m[a][a] = c(1.0, 0.0);
            m[b][b] = c(-1.0, 0.0);
        }
    }
    SubspacePauli { axis, subspace, matrix: m }
}

fn identity3() -> [[Complex64; 3]; 3] {
    let mut m = [[c(0.0, 0.0); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

/// `exp(-i theta/2 sigma_axis^(subspace))` with a unit entry on the
/// spectator level. Reproduces the device gate table entrywise for the
/// x- and y-axis rotations; the z rotation is
/// `diag(e^{-i theta/2}, e^{+i theta/2})` on the subspace.
pub fn rotation_gate(axis: Axis, subspace: Subspace, theta: f64) -> QutritGate {
    let (a, b) = subspace.levels();
    let half = 0.5 * theta;
    let mut m = identity3();
    match axis {
        Axis::X => {
            m[a][a] = c(half.cos(), 0.0);
            m[b][b] = c(half.cos(), 0.0);
            m[a][b] = c(0.0, -half.sin());
            m[b][a] = c(0.0, -half.sin());
        }
        Axis::Y => {
            m[a][a] = c(half.cos(), 0.0);
            m[b][b] = c(half.cos(), 0.0);
            m[a][b] = c(-half.sin(), 0.0);
            m[b][a] = c(half.sin(), 0.0);
        }
        Axis::Z => {
            m[a][a] = c(half.cos(), -half.sin());
            m[b][b] = c(half.cos(), half.sin());
        }
    }
    QutritGate {
        matrix: m,
        label: format!("r{}{}({})", axis.label(), subspace.label(), theta),
    }
}

/// Rotation in the (12) subspace about an in-plane axis set by `phi`:
/// `phi = pi` gives `R_x^(12)(theta)`, `phi = pi/2` gives `R_y^(12)(theta)`.
///
/// This is the gate the hardware actually applies when the rotating frame
/// has accumulated a phase: the nominal x/y axis tilts inside the
/// equatorial plane.
pub fn dephased_r12(theta: f64, phi: f64) -> QutritGate {
    let half = 0.5 * theta;
    let mut m = identity3();
    // i e^{+i phi} and i e^{-i phi}
    let upper = c(-phi.sin(), phi.cos()) * half.sin();
    let lower = c(phi.sin(), phi.cos()) * half.sin();
    m[1][1] = c(half.cos(), 0.0);
    m[2][2] = c(half.cos(), 0.0);
    m[1][2] = upper;
    m[2][1] = lower;
    QutritGate { matrix: m, label: format!("rn12({theta},{phi})") }
}

/// The device CNOT extended to qutrits, basis `|control target>`:
///
/// ```text
/// |00> -> |00>   |01> -> |01>   |02> -> |02>
/// |10> -> |11>   |11> -> |10>   |12> -> i|12>
/// |20> -> a|20> + b|21>         |21> -> b*|20> + c|21>
/// |22> -> e^{i phi} |22>
/// ```
pub fn cnot_model(params: CnotModelParams) -> TwoQutritGate {
    let mut m = [[c(0.0, 0.0); 9]; 9];
    let idx = |control: usize, target: usize| 3 * control + target;
    // control 0: identity on the target
    for t in 0..3 {
        m[idx(0, t)][idx(0, t)] = c(1.0, 0.0);
    }
    // control 1: qubit flip, i phase on |2>
    m[idx(1, 1)][idx(1, 0)] = c(1.0, 0.0);
    m[idx(1, 0)][idx(1, 1)] = c(1.0, 0.0);
    m[idx(1, 2)][idx(1, 2)] = c(0.0, 1.0);
    // control 2: parameterized unitary block on the target's (01) subspace
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let a = c(params.alpha.cos(), params.alpha.sin()) * s;
    let b = c(params.beta.cos(), params.beta.sin()) * s;
    let cc = -c(params.alpha.cos(), -params.alpha.sin()) * s;
    m[idx(2, 0)][idx(2, 0)] = a;
    m[idx(2, 1)][idx(2, 0)] = b;
    m[idx(2, 0)][idx(2, 1)] = b.conj();
    m[idx(2, 1)][idx(2, 1)] = cc;
    m[idx(2, 2)][idx(2, 2)] = c(params.phi.cos(), params.phi.sin());
    let gate = TwoQutritGate {
        matrix: m,
        label: format!("cnot({},{},{})", params.alpha, params.beta, params.phi),
    };
    debug_assert!(gate.unitarity_defect() < GATE_TOL);
    gate
}

/// Projective-measurement basis changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisGateKind {
    /// Maps the x basis of the subspace onto the computational basis.
    H,
    /// Maps the y basis of the subspace onto the computational basis.
    Hy,
}

impl BasisGateKind {
    pub fn label(self) -> &'static str {
        match self {
            BasisGateKind::H => "h",
            BasisGateKind::Hy => "hy",
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            BasisGateKind::H => Axis::X,
            BasisGateKind::Hy => Axis::Y,
        }
    }
}

/// Native-gate decomposition of a basis-change gate, in application order
/// (first-applied factor first).
pub fn basis_gate_decomposition(
    kind: BasisGateKind,
    subspace: Subspace,
) -> Vec<(Axis, Subspace, f64)> {
    use core::f64::consts::{FRAC_PI_2, PI};
    use Axis::{X, Y};
    use Subspace::{S01, S12};
    let mut v = Vec::new();
    match (kind, subspace) {
        // H^(01) = Rx01(-pi) . Ry01(pi/2)
        (BasisGateKind::H, Subspace::S01) => {
            v.push((Y, S01, FRAC_PI_2));
            v.push((X, S01, -PI));
        }
        // H^(12) = Ry12(-pi/2) . Rx12(-pi)
        (BasisGateKind::H, Subspace::S12) => {
            v.push((X, S12, -PI));
            v.push((Y, S12, -FRAC_PI_2));
        }
        // H^(02) = Ry01(pi) . Rx12(pi) . Ry12(-pi/2) . Ry01(-pi)
        (BasisGateKind::H, Subspace::S02) => {
            v.push((Y, S01, -PI));
            v.push((Y, S12, -FRAC_PI_2));
            v.push((X, S12, PI));
            v.push((Y, S01, PI));
        }
        // Hy^(01) = Rx01(-pi/2) . Ry01(pi)
        (BasisGateKind::Hy, Subspace::S01) => {
            v.push((Y, S01, PI));
            v.push((X, S01, -FRAC_PI_2));
        }
        // Hy^(12) = Rx12(-pi/2) . Ry12(pi)
        (BasisGateKind::Hy, Subspace::S12) => {
            v.push((Y, S12, PI));
            v.push((X, S12, -FRAC_PI_2));
        }
        // Hy^(02) = Ry12(pi) . Rx01(-pi/2) . Ry01(pi) . Ry12(-pi)
        (BasisGateKind::Hy, Subspace::S02) => {
            v.push((Y, S12, -PI));
            v.push((Y, S01, PI));
            v.push((X, S01, -FRAC_PI_2));
            v.push((Y, S12, PI));
        }
    }
    v
}

fn matmul3(a: &[[Complex64; 3]; 3], b: &[[Complex64; 3]; 3]) -> [[Complex64; 3]; 3] {
    let mut out = [[c(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = c(0.0, 0.0);
            for k in 0..3 {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Composes a decomposition list (application order) into a single matrix.
pub(crate) fn compose(parts: &[(Axis, Subspace, f64)]) -> [[Complex64; 3]; 3] {
    let mut m = identity3();
    for &(axis, subspace, theta) in parts {
        m = matmul3(&rotation_gate(axis, subspace, theta).matrix, &m);
    }
    m
}

/// The composed basis-change gate. Conjugating the matching subspace Pauli,
/// `U sigma U^dagger` is diagonal; the `H` gates place the +1 eigenvalue on
/// the lower subspace level, the `Hy` gates place it on the upper level.
pub fn measurement_basis_gate(kind: BasisGateKind, subspace: Subspace) -> QutritGate {
    let m = compose(&basis_gate_decomposition(kind, subspace));
    QutritGate { matrix: m, label: format!("{}{}", kind.label(), subspace.label()) }
}

/// `X_+ = R_y^(01)(pi) R_y^(12)(pi)`: lowers `|2>` to `|0>` up to phase.
pub fn x_plus() -> QutritGate {
    let parts = x_plus_decomposition();
    QutritGate { matrix: compose(&parts), label: String::from("xplus") }
}

/// Decomposition of `X_+` in application order.
pub fn x_plus_decomposition() -> Vec<(Axis, Subspace, f64)> {
    use core::f64::consts::PI;
    let mut v = Vec::new();
    v.push((Axis::Y, Subspace::S12, PI));
    v.push((Axis::Y, Subspace::S01, PI));
    v
}

/// Local operations that lower `|basis>` to `|00...0>` (up to a global
/// phase): digit 1 gets `X^(01) = R_y^(01)(pi)`, digit 2 gets `X_+`.
pub fn lowering_sequence(basis: &[u8]) -> Result<Vec<(usize, QutritGate)>> {
    let mut out = Vec::new();
    for (q, &d) in basis.iter().enumerate() {
        match d {
            0 => {}
            1 => out.push((q, rotation_gate(Axis::Y, Subspace::S01, core::f64::consts::PI))),
            2 => out.push((q, x_plus())),
            _ => return Err(Error::InvalidTrit { position: q }),
        }
    }
    Ok(out)
}

/// Native-gate decomposition of the lowering of one digit, in application
/// order. Empty for digit 0.
pub fn lowering_decomposition(digit: u8) -> Result<Vec<(Axis, Subspace, f64)>> {
    use core::f64::consts::PI;
    match digit {
        0 => Ok(Vec::new()),
        1 => Ok(alloc::vec![(Axis::Y, Subspace::S01, PI)]),
        2 => Ok(x_plus_decomposition()),
        _ => Err(Error::InvalidTrit { position: 0 }),
    }
}
