//! Pure states and density matrices of qutrit registers, with the
//! entanglement diagnostics used to characterize the GHZ state.
//!
//! Basis convention: basis index `i` encodes the base-3 digit string of the
//! register with the **leftmost qutrit as the most significant digit**, so
//! printed states read like ket notation `|q0 q1 q2>`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// Float supplies the f64 math methods when building without std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::{Error, Result, FRAC_1_SQRT_3};

/// Tolerance used by state invariants (normalization, Hermiticity).
pub const STATE_TOL: f64 = 1e-10;

/// Default singular-value cutoff for Schmidt ranks: separates exact zeros
/// from float noise at 27-dimensional scale.
pub const DEFAULT_SCHMIDT_TOL: f64 = 1e-8;

pub fn dim(n_qutrits: usize) -> usize {
    3usize.pow(n_qutrits as u32)
}

/// Base-3 digits of `index`, leftmost qutrit first.
pub fn digits_of(index: usize, n_qutrits: usize) -> Vec<u8> {
    let mut out = vec![0u8; n_qutrits];
    let mut rem = index;
    for k in (0..n_qutrits).rev() {
        out[k] = (rem % 3) as u8;
        rem /= 3;
    }
    out
}

/// Basis index of a digit string, leftmost qutrit most significant.
pub fn index_of(digits: &[u8]) -> usize {
    digits.iter().fold(0usize, |acc, &d| acc * 3 + d as usize)
}

/// Parses a base-3 string like "012" into digits.
pub fn parse_trits(s: &str) -> Result<Vec<u8>> {
    s.bytes()
        .enumerate()
        .map(|(i, b)| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            b'2' => Ok(2),
            _ => Err(Error::InvalidTrit { position: i }),
        })
        .collect()
}

/// Bipartition of a three-qutrit register.
///
/// The label names the first block: `A|BC` splits qutrit 0 from qutrits 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bipartition {
    /// qutrit 0 vs. qutrits 1, 2
    ABc,
    /// qutrits 0, 1 vs. qutrit 2
    AbC,
    /// qutrits 0, 2 vs. qutrit 1
    AcB,
}

impl Bipartition {
    pub const ALL: [Bipartition; 3] = [Bipartition::ABc, Bipartition::AbC, Bipartition::AcB];

    /// The single qutrit that sits alone on one side of the cut.
    fn lone_qutrit(self) -> usize {
        match self {
            Bipartition::ABc => 0,
            Bipartition::AbC => 2,
            Bipartition::AcB => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bipartition::ABc => "A|BC",
            Bipartition::AbC => "AB|C",
            Bipartition::AcB => "AC|B",
        }
    }
}

/// Normalized complex state vector over `3^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qutrits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Builds a state from raw amplitudes, checking length and normalization.
    pub fn new(n_qutrits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_qutrits == 0 || amplitudes.len() != dim(n_qutrits) {
            return Err(Error::DimensionMismatch {
                expected: dim(n_qutrits),
                found: amplitudes.len(),
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidProbability(String::from(
                "state vector is not normalized",
            )));
        }
        Ok(PureState { n_qutrits, amplitudes })
    }

    /// Normalizes the given amplitudes (used by constructors that build
    /// superpositions from integer weights).
    pub fn normalized(n_qutrits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::InvalidProbability(String::from("zero vector")));
        }
        let inv = 1.0 / norm_sq.sqrt();
        for a in &mut amplitudes {
            *a *= inv;
        }
        PureState::new(n_qutrits, amplitudes)
    }

    /// Computational basis state `|digits>`.
    pub fn basis(digits: &[u8]) -> Self {
        let n = digits.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); dim(n)];
        amps[index_of(digits)] = Complex64::new(1.0, 0.0);
        PureState { n_qutrits: n, amplitudes: amps }
    }

    /// `|00...0>` on `n` qutrits.
    pub fn zero(n_qutrits: usize) -> Self {
        PureState::basis(&vec![0u8; n_qutrits])
    }

    /// The three-qutrit GHZ state `(|000> + |111> + |222>)/sqrt(3)`.
    pub fn ghz() -> Self {
        PureState::ghz_with_phases(0.0, 0.0)
    }

    /// `(|000> + e^{i phi1} |111> + e^{i phi2} |222>)/sqrt(3)`.
    pub fn ghz_with_phases(phi1: f64, phi2: f64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 27];
        amps[index_of(&[0, 0, 0])] = Complex64::new(FRAC_1_SQRT_3, 0.0);
        amps[index_of(&[1, 1, 1])] = Complex64::new(0.0, phi1).exp() * FRAC_1_SQRT_3;
        amps[index_of(&[2, 2, 2])] = Complex64::new(0.0, phi2).exp() * FRAC_1_SQRT_3;
        PureState { n_qutrits: 3, amplitudes: amps }
    }

    pub fn n_qutrits(&self) -> usize {
        self.n_qutrits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, digits: &[u8]) -> Complex64 {
        self.amplitudes[index_of(digits)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Density matrix `|self><self|`.
    pub fn density(&self) -> DensityMatrix {
        let mut entries = CMat::zeros(self.dim(), self.dim());
        entries.add_scaled_outer(&self.amplitudes, 1.0);
        DensityMatrix { n_qutrits: self.n_qutrits, entries, reconstructed: false }
    }

    /// In-place application of a 3x3 unitary to qutrit `q`.
    pub(crate) fn apply_single(&mut self, matrix: &[[Complex64; 3]; 3], q: usize) -> Result<()> {
        if q >= self.n_qutrits {
            return Err(Error::IndexOutOfRange { index: q, n_qutrits: self.n_qutrits });
        }
        let stride = dim(self.n_qutrits - 1 - q);
        let block = stride * 3;
        let d = self.dim();
        let mut base = 0;
        while base < d {
            for off in 0..stride {
                let i0 = base + off;
                let i1 = i0 + stride;
                let i2 = i1 + stride;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                let a2 = self.amplitudes[i2];
                self.amplitudes[i0] = matrix[0][0] * a0 + matrix[0][1] * a1 + matrix[0][2] * a2;
                self.amplitudes[i1] = matrix[1][0] * a0 + matrix[1][1] * a1 + matrix[1][2] * a2;
                self.amplitudes[i2] = matrix[2][0] * a0 + matrix[2][1] * a1 + matrix[2][2] * a2;
            }
            base += block;
        }
        Ok(())
    }

    /// In-place application of a 9x9 unitary to the ordered pair
    /// `(control, target)`.
    pub(crate) fn apply_pair(
        &mut self,
        matrix: &[[Complex64; 9]; 9],
        control: usize,
        target: usize,
    ) -> Result<()> {
        let n = self.n_qutrits;
        if control >= n {
            return Err(Error::IndexOutOfRange { index: control, n_qutrits: n });
        }
        if target >= n {
            return Err(Error::IndexOutOfRange { index: target, n_qutrits: n });
        }
        assert_ne!(control, target, "control and target must differ");
        let sc = dim(n - 1 - control);
        let st = dim(n - 1 - target);
        let d = self.dim();
        let mut scratch = [Complex64::new(0.0, 0.0); 9];
        // Iterate over all indices whose control and target digits are zero,
        // then mix the 9 amplitudes addressed by those two digits.
        for i in 0..d {
            let dc = (i / sc) % 3;
            let dt = (i / st) % 3;
            if dc != 0 || dt != 0 {
                continue;
            }
            for c in 0..3 {
                for t in 0..3 {
                    scratch[3 * c + t] = self.amplitudes[i + c * sc + t * st];
                }
            }
            for c in 0..3 {
                for t in 0..3 {
                    let row = 3 * c + t;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for col in 0..9 {
                        acc += matrix[row][col] * scratch[col];
                    }
                    self.amplitudes[i + c * sc + t * st] = acc;
                }
            }
        }
        Ok(())
    }
}

/// Hermitian matrix over the register basis.
///
/// Matrices reconstructed from experimental counts may violate the unit-trace
/// and positivity constraints; they carry `reconstructed = true`, which
/// exempts them from the trace check on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qutrits: usize,
    entries: CMat,
    reconstructed: bool,
}

impl DensityMatrix {
    pub fn new(n_qutrits: usize, entries: CMat, reconstructed: bool) -> Result<Self> {
        let d = dim(n_qutrits);
        if entries.rows() != d || entries.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: entries.rows() });
        }
        if entries.hermiticity_defect() > STATE_TOL {
            return Err(Error::InvalidProbability(String::from("matrix is not Hermitian")));
        }
        let tr = entries.trace();
        if tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidProbability(String::from("trace is not real")));
        }
        if !reconstructed && (tr.re - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidProbability(String::from("trace differs from one")));
        }
        Ok(DensityMatrix { n_qutrits, entries, reconstructed })
    }

    /// Maximally mixed state `I / 3^n`.
    pub fn maximally_mixed(n_qutrits: usize) -> Self {
        let d = dim(n_qutrits);
        let mut entries = CMat::zeros(d, d);
        for i in 0..d {
            entries[(i, i)] = Complex64::new(1.0 / d as f64, 0.0);
        }
        DensityMatrix { n_qutrits, entries, reconstructed: false }
    }

    pub fn n_qutrits(&self) -> usize {
        self.n_qutrits
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn reconstructed(&self) -> bool {
        self.reconstructed
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    /// Matrix rank: number of eigenvalues above `tol` in absolute value.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|e| e.abs() > tol).count()
    }
}

/// Schmidt ranks across the three bipartitions of a three-qutrit pure state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchmidtRankVector {
    /// Ranks ordered as (A|BC, AB|C, AC|B).
    pub ranks: (usize, usize, usize),
}

impl SchmidtRankVector {
    pub fn as_array(&self) -> [usize; 3] {
        [self.ranks.0, self.ranks.1, self.ranks.2]
    }
}

/// Singular values of the matricization of `state` across `cut`.
///
/// Only defined for three-qutrit states; each cut isolates a single qutrit,
/// so the Gram matrix of the matricization is 3x3.
fn schmidt_coefficients(state: &PureState, cut: Bipartition) -> Result<Vec<f64>> {
    if state.n_qutrits() != 3 {
        return Err(Error::DimensionMismatch { expected: 27, found: state.dim() });
    }
    let lone = cut.lone_qutrit();
    // Gram matrix G[a][b] = sum_rest amp(a, rest) * conj(amp(b, rest)),
    // where a, b run over the lone qutrit's levels.
    let mut gram = CMat::zeros(3, 3);
    for i in 0..27 {
        let d = digits_of(i, 3);
        for b in 0..3u8 {
            let mut dj = d.clone();
            dj[lone] = b;
            let j = index_of(&dj);
            let a = d[lone] as usize;
            gram[(a, b as usize)] += state.amplitudes[i] * state.amplitudes[j].conj();
        }
    }
    let eig = hermitian_eigenvalues(&gram);
    Ok(eig.iter().map(|e| e.max(0.0).sqrt()).collect())
}

/// Schmidt rank vector by singular-value decomposition of each bipartition's
/// matricization; singular values at or below `tol` are discarded.
pub fn schmidt_rank_vector(state: &PureState, tol: f64) -> Result<SchmidtRankVector> {
    let mut ranks = [0usize; 3];
    for (k, cut) in Bipartition::ALL.iter().enumerate() {
        let sv = schmidt_coefficients(state, *cut)?;
        ranks[k] = sv.iter().filter(|s| **s > tol).count();
    }
    Ok(SchmidtRankVector { ranks: (ranks[0], ranks[1], ranks[2]) })
}

/// Von Neumann entropy of the reduced state across `cut`, logarithm base 3
/// (so a maximally entangled qutrit pair reads 1). `0 log 0 := 0`.
pub fn bipartite_entropy(state: &PureState, cut: Bipartition) -> Result<f64> {
    let sv = schmidt_coefficients(state, cut)?;
    let ln3 = 3.0f64.ln();
    let mut s = 0.0;
    for v in sv {
        let p = v * v;
        if p > 0.0 {
            s -= p * p.ln() / ln3;
        }
    }
    Ok(s)
}

/// `Tr(rho |target><target|) = <target| rho |target>`, the fidelity of a
/// mixed state against a pure target.
pub fn fidelity(rho: &DensityMatrix, target: &PureState) -> Result<f64> {
    let d = rho.dim();
    if target.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: target.dim() });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += target.amplitudes[i].conj() * rho.entries[(i, j)] * target.amplitudes[j];
        }
    }
    debug_assert!(acc.im.abs() < STATE_TOL, "fidelity of a Hermitian matrix must be real");
    Ok(acc.re)
}

/// Largest overlap `|<GHZ(phi1, phi2)|psi>|^2` over all relative phases.
///
/// Closed form `(|a_000| + |a_111| + |a_222|)^2 / 3`: the phases can always
/// be chosen to align the three diagonal amplitudes.
pub fn ghz_family_fidelity(state: &PureState) -> Result<f64> {
    if state.n_qutrits() != 3 {
        return Err(Error::DimensionMismatch { expected: 27, found: state.dim() });
    }
    let s = state.amplitude(&[0, 0, 0]).norm()
        + state.amplitude(&[1, 1, 1]).norm()
        + state.amplitude(&[2, 2, 2]).norm();
    Ok(s * s / 3.0)
}

/// Lower-dimensional entangled reference mixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddedMixture {
    /// Equal mixture of the three two-dimensional GHZ states
    /// `(|iii> + |jjj>)/sqrt(2)`.
    TwoDimGhz,
    /// Equal mixture of the three two-party Bell states
    /// `(|00>_{ij} + |11>_{ij}) |0>_k / sqrt(2)`.
    TwoPartyBell,
}

/// Builds the reference mixtures used to probe the entanglement witness.
pub fn build_embedded_mixture(kind: EmbeddedMixture) -> DensityMatrix {
    let mut entries = CMat::zeros(27, 27);
    let third = 1.0 / 3.0;
    match kind {
        EmbeddedMixture::TwoDimGhz => {
            for (i, j) in [(0u8, 1u8), (0, 2), (1, 2)] {
                let mut v = vec![Complex64::new(0.0, 0.0); 27];
                let w = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
                v[index_of(&[i, i, i])] = w;
                v[index_of(&[j, j, j])] = w;
                entries.add_scaled_outer(&v, third);
            }
        }
        EmbeddedMixture::TwoPartyBell => {
            // |B_{i,j,k}>: qutrits i and j carry the Bell pair, qutrit k
            // stays in |0>.
            for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let mut v = vec![Complex64::new(0.0, 0.0); 27];
                let w = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
                let mut zeros = [0u8; 3];
                v[index_of(&zeros)] = w;
                zeros[i] = 1;
                zeros[j] = 1;
                v[index_of(&zeros)] = w;
                entries.add_scaled_outer(&v, third);
            }
        }
    }
    DensityMatrix { n_qutrits: 3, entries, reconstructed: false }
}

/// Partial trace keeping the qutrits listed in `keep` (ascending output
/// order follows the order of `keep` as given).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qutrits();
    if keep.is_empty() {
        return Err(Error::InvalidConfig(String::from("keep set must be non-empty")));
    }
    for &q in keep {
        if q >= n {
            return Err(Error::IndexOutOfRange { index: q, n_qutrits: n });
        }
    }
    let mut seen = vec![false; n];
    for &q in keep {
        if seen[q] {
            return Err(Error::InvalidConfig(String::from("keep set has duplicates")));
        }
        seen[q] = true;
    }
    let traced: Vec<usize> = (0..n).filter(|q| !seen[*q]).collect();
    let dk = dim(keep.len());
    let dt = dim(traced.len());
    let mut out = CMat::zeros(dk, dk);
    for a in 0..dk {
        let da = digits_of(a, keep.len());
        for b in 0..dk {
            let db = digits_of(b, keep.len());
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..dt {
                let dtr = digits_of(t, traced.len());
                let mut full_a = vec![0u8; n];
                let mut full_b = vec![0u8; n];
                for (k, &q) in keep.iter().enumerate() {
                    full_a[q] = da[k];
                    full_b[q] = db[k];
                }
                for (k, &q) in traced.iter().enumerate() {
                    full_a[q] = dtr[k];
                    full_b[q] = dtr[k];
                }
                acc += rho.entries[(index_of(&full_a), index_of(&full_b))];
            }
            out[(a, b)] = acc;
        }
    }
    DensityMatrix::new(keep.len(), out, rho.reconstructed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn index_digit_roundtrip() {
        for i in 0..27 {
            assert_eq!(index_of(&digits_of(i, 3)), i);
        }
        assert_eq!(index_of(&[1, 0, 2]), 9 + 2);
        assert_eq!(digits_of(9 + 2, 3), vec![1, 0, 2]);
    }

    #[test]
    fn parse_trits_rejects_garbage() {
        assert_eq!(parse_trits("012").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_trits("0x2"), Err(Error::InvalidTrit { position: 1 }));
    }

    #[test]
    fn ghz_srv_is_333() {
        let srv = schmidt_rank_vector(&PureState::ghz(), DEFAULT_SCHMIDT_TOL).unwrap();
        assert_eq!(srv.ranks, (3, 3, 3));
    }

    #[test]
    fn product_state_srv_is_111() {
        let srv =
            schmidt_rank_vector(&PureState::basis(&[0, 0, 0]), DEFAULT_SCHMIDT_TOL).unwrap();
        assert_eq!(srv.ranks, (1, 1, 1));
    }

    #[test]
    fn two_dim_ghz_srv_is_222() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 27];
        let w = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[index_of(&[0, 0, 0])] = w;
        amps[index_of(&[1, 1, 1])] = w;
        let st = PureState::new(3, amps).unwrap();
        let srv = schmidt_rank_vector(&st, DEFAULT_SCHMIDT_TOL).unwrap();
        assert_eq!(srv.ranks, (2, 2, 2));
    }

    #[test]
    fn srv_rejects_wrong_size() {
        let st = PureState::basis(&[0, 0]);
        assert!(schmidt_rank_vector(&st, DEFAULT_SCHMIDT_TOL).is_err());
    }

    #[test]
    fn ghz_entropy_is_one_for_all_cuts() {
        for cut in Bipartition::ALL {
            let s = bipartite_entropy(&PureState::ghz(), cut).unwrap();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn product_state_entropy_is_zero() {
        for cut in Bipartition::ALL {
            let s = bipartite_entropy(&PureState::basis(&[0, 1, 2]), cut).unwrap();
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn qubit_pair_entropy_is_log3_of_2() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 27];
        let w = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[index_of(&[0, 0, 0])] = w;
        amps[index_of(&[1, 1, 1])] = w;
        let st = PureState::new(3, amps).unwrap();
        let s = bipartite_entropy(&st, Bipartition::ABc).unwrap();
        assert_abs_diff_eq!(s, 2.0f64.ln() / 3.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn self_fidelity_is_one() {
        let ghz = PureState::ghz();
        assert_abs_diff_eq!(fidelity(&ghz.density(), &ghz).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn maximally_mixed_fidelity() {
        let f = fidelity(&DensityMatrix::maximally_mixed(3), &PureState::ghz()).unwrap();
        assert_abs_diff_eq!(f, 1.0 / 27.0, epsilon = 1e-14);
    }

    #[test]
    fn embedded_mixture_fidelities_hit_their_bounds() {
        let ghz = PureState::ghz();
        let f2d = fidelity(&build_embedded_mixture(EmbeddedMixture::TwoDimGhz), &ghz).unwrap();
        assert_abs_diff_eq!(f2d, 2.0 / 3.0, epsilon = 1e-12);
        let f2n =
            fidelity(&build_embedded_mixture(EmbeddedMixture::TwoPartyBell), &ghz).unwrap();
        assert_abs_diff_eq!(f2n, 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn two_dim_ghz_mixture_has_rank_three() {
        let rho = build_embedded_mixture(EmbeddedMixture::TwoDimGhz);
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
        assert!(rho.entries().hermiticity_defect() < 1e-14);
        assert_eq!(rho.rank(1e-9), 3);
    }

    // Independent oracle for the rank claim: eigendecomposition of the
    // explicit 27x27 matrix through nalgebra.
    #[test]
    fn mixture_rank_matches_nalgebra_eigendecomposition() {
        use nalgebra::{Complex, DMatrix};
        for kind in [EmbeddedMixture::TwoDimGhz, EmbeddedMixture::TwoPartyBell] {
            let rho = build_embedded_mixture(kind);
            let m = DMatrix::from_fn(27, 27, |i, j| {
                let z = rho.entries()[(i, j)];
                Complex::new(z.re, z.im)
            });
            let eig = m.symmetric_eigen().eigenvalues;
            let rank = eig.iter().filter(|e| e.abs() > 1e-9).count();
            assert_eq!(rho.rank(1e-9), rank);
            assert_eq!(rank, 3);
        }
    }

    #[test]
    fn ghz_family_fidelity_examples() {
        // Phases are maximized out.
        let st = PureState::ghz_with_phases(core::f64::consts::FRAC_PI_3, -1.0);
        assert_abs_diff_eq!(ghz_family_fidelity(&st).unwrap(), 1.0, epsilon = 1e-12);
        // |000> keeps only one of the three diagonal amplitudes.
        let f = ghz_family_fidelity(&PureState::basis(&[0, 0, 0])).unwrap();
        assert_abs_diff_eq!(f, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_of_ghz_is_maximally_mixed() {
        let rho = PureState::ghz().density();
        let red = partial_trace(&rho, &[0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 / 3.0 } else { 0.0 };
                assert_abs_diff_eq!(red.entries()[(i, j)].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(red.entries()[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_keep_all_is_identity() {
        let rho = PureState::ghz().density();
        let same = partial_trace(&rho, &[0, 1, 2]).unwrap();
        for i in 0..27 {
            for j in 0..27 {
                assert_abs_diff_eq!(
                    (same.entries()[(i, j)] - rho.entries()[(i, j)]).norm(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = PureState::basis(&[0, 0, 0]).density();
        let red = partial_trace(&rho, &[2]).unwrap();
        assert_abs_diff_eq!(red.entries()[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(red.entries()[(1, 1)].re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(red.entries()[(2, 2)].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_rejects_bad_keep() {
        let rho = PureState::ghz().density();
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[3]).is_err());
        assert!(partial_trace(&rho, &[0, 0]).is_err());
    }

    #[test]
    fn reconstructed_flag_relaxes_trace() {
        let mut entries = CMat::zeros(27, 27);
        for i in 0..27 {
            entries[(i, i)] = Complex64::new(1.12 / 27.0, 0.0);
        }
        assert!(DensityMatrix::new(3, entries.clone(), false).is_err());
        let rho = DensityMatrix::new(3, entries, true).unwrap();
        assert_abs_diff_eq!(rho.trace(), 1.12, epsilon = 1e-12);
    }

    prop_compose! {
        fn arb_pure_state()(parts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 27)) -> Option<PureState> {
            let amps: alloc::vec::Vec<Complex64> =
                parts.iter().map(|(re, im)| Complex64::new(*re, *im)).collect();
            PureState::normalized(3, amps).ok()
        }
    }

    // Entropy of the two-qutrit side of the cut, computed through the 9x9
    // reduced density matrix. Independent route used to check Schmidt
    // symmetry.
    fn complement_entropy(state: &PureState, cut: Bipartition) -> f64 {
        let keep: Vec<usize> = match cut {
            Bipartition::ABc => vec![1, 2],
            Bipartition::AbC => vec![0, 1],
            Bipartition::AcB => vec![0, 2],
        };
        let red = partial_trace(&state.density(), &keep).unwrap();
        let ln3 = 3.0f64.ln();
        red.eigenvalues()
            .iter()
            .filter(|p| **p > 1e-15)
            .map(|p| -p * p.ln() / ln3)
            .sum()
    }

    proptest! {
        // Schmidt symmetry: both sides of a cut share the nonzero spectrum.
        #[test]
        fn entropy_equals_complementary_cut(state in arb_pure_state()) {
            if let Some(st) = state {
                for cut in Bipartition::ALL {
                    let s = bipartite_entropy(&st, cut).unwrap();
                    let sc = complement_entropy(&st, cut);
                    prop_assert!((s - sc).abs() < 1e-10, "cut {:?}: {} vs {}", cut, s, sc);
                }
            }
        }

        // The family fidelity dominates the fixed-phase fidelity.
        #[test]
        fn family_fidelity_dominates(state in arb_pure_state()) {
            if let Some(st) = state {
                let fixed = fidelity(&st.density(), &PureState::ghz()).unwrap();
                let family = ghz_family_fidelity(&st).unwrap();
                prop_assert!(family + 1e-10 >= fixed);
            }
        }
    }
}
