//! The virtual measurement stack.
//!
//! The readout chain mirrors the hardware protocol: Born probabilities over
//! the 27 trit outcomes, a 0-1 discriminator that classifies `|2>` as `|1>`,
//! per-shot readout misclassification drawn from a column-stochastic
//! confusion matrix, and non-negative least-squares mitigation. Basis-state
//! populations are estimated by lowering the target basis state to `|000>`
//! and counting all-zeros outcomes.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::gates::lowering_sequence;
use crate::linalg::{hermitian_eigenvalues, nnls, CMat};
use crate::rng::ShotRng;
use crate::state::PureState;
use crate::{Error, Result};

/// Number of bit patterns over three sites.
pub const N_PATTERNS: usize = 8;

/// Per-site readout error probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutErrorParams {
    /// P(read 1 | prepared 0)
    pub p10: f64,
    /// P(read 0 | prepared 1)
    pub p01: f64,
}

impl ReadoutErrorParams {
    pub fn new(p10: f64, p01: f64) -> Result<Self> {
        for p in [p10, p01] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(format!(
                    "readout error probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(ReadoutErrorParams { p10, p01 })
    }
}

/// Readout calibration of the transmons the experiment ran on (device rows
/// Q2, Q3, Q4; "Prob. Prep. |0> Meas. |1>" and "Prob. Prep. |1> Meas. |0>").
pub const ROME_Q2_Q4_READOUT: [ReadoutErrorParams; 3] = [
    ReadoutErrorParams { p10: 0.035, p01: 0.017 },
    ReadoutErrorParams { p10: 0.035, p01: 0.008 },
    ReadoutErrorParams { p10: 0.029, p01: 0.010 },
];

/// Column-stochastic 8x8 readout-error model: entry `(measured, prepared)`
/// is the probability of reading `measured` given `prepared`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    matrix: [[f64; N_PATTERNS]; N_PATTERNS],
}

impl ConfusionMatrix {
    pub fn identity() -> Self {
        let mut m = [[0.0; N_PATTERNS]; N_PATTERNS];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        ConfusionMatrix { matrix: m }
    }

    pub fn from_matrix(matrix: [[f64; N_PATTERNS]; N_PATTERNS]) -> Result<Self> {
        for j in 0..N_PATTERNS {
            let mut col = 0.0;
            for row in &matrix {
                if !(0.0..=1.0).contains(&row[j]) {
                    return Err(Error::InvalidProbability(format!(
                        "confusion entry {} outside [0, 1]",
                        row[j]
                    )));
                }
                col += row[j];
            }
            if (col - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidProbability(format!(
                    "confusion column {j} sums to {col}"
                )));
            }
        }
        Ok(ConfusionMatrix { matrix })
    }

    pub fn entry(&self, measured: usize, prepared: usize) -> f64 {
        self.matrix[measured][prepared]
    }

    pub fn matrix(&self) -> &[[f64; N_PATTERNS]; N_PATTERNS] {
        &self.matrix
    }

    /// `cm . p`: the measured distribution produced by a true one.
    pub fn apply(&self, p: &[f64; N_PATTERNS]) -> [f64; N_PATTERNS] {
        let mut out = [0.0; N_PATTERNS];
        for (m, row) in self.matrix.iter().enumerate() {
            out[m] = row.iter().zip(p.iter()).map(|(c, q)| c * q).sum();
        }
        out
    }

    /// Condition number estimate through the Gram matrix spectrum.
    fn condition(&self) -> f64 {
        let mut gram = CMat::zeros(N_PATTERNS, N_PATTERNS);
        for i in 0..N_PATTERNS {
            for j in 0..N_PATTERNS {
                let mut acc = 0.0;
                for row in &self.matrix {
                    acc += row[i] * row[j];
                }
                gram[(i, j)] = crate::Complex64::new(acc, 0.0);
            }
        }
        let eig = hermitian_eigenvalues(&gram);
        let max = eig.first().copied().unwrap_or(0.0).max(0.0);
        let min = eig.last().copied().unwrap_or(0.0).max(0.0);
        if min <= 0.0 {
            f64::infinity()
        } else {
            (max / min).sqrt()
        }
    }
}

/// Tensor product of per-site two-level channels
/// `[[1 - p10, p01], [p10, 1 - p01]]`; site 0 is the most significant bit of
/// the pattern index.
pub fn build_confusion(params: &[ReadoutErrorParams; 3]) -> ConfusionMatrix {
    let site: Vec<[[f64; 2]; 2]> = params
        .iter()
        .map(|p| [[1.0 - p.p10, p.p01], [p.p10, 1.0 - p.p01]])
        .collect();
    let mut m = [[0.0; N_PATTERNS]; N_PATTERNS];
    for (measured, row) in m.iter_mut().enumerate() {
        for (prepared, v) in row.iter_mut().enumerate() {
            let mut acc = 1.0;
            for (s, ch) in site.iter().enumerate() {
                let mb = (measured >> (2 - s)) & 1;
                let pb = (prepared >> (2 - s)) & 1;
                acc *= ch[mb][pb];
            }
            *v = acc;
        }
    }
    ConfusionMatrix { matrix: m }
}

/// Integer outcome tallies over the 8 bit patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotCounts {
    counts: [u64; N_PATTERNS],
    n_shots: u64,
}

impl ShotCounts {
    pub fn new(counts: [u64; N_PATTERNS]) -> Self {
        let n_shots = counts.iter().sum();
        ShotCounts { counts, n_shots }
    }

    pub fn counts(&self) -> &[u64; N_PATTERNS] {
        &self.counts
    }

    pub fn n_shots(&self) -> u64 {
        self.n_shots
    }

    pub fn count_of_pattern(&self, pattern: usize) -> u64 {
        self.counts[pattern]
    }

    /// Empirical distribution over the 8 patterns.
    pub fn distribution(&self) -> [f64; N_PATTERNS] {
        let mut p = [0.0; N_PATTERNS];
        if self.n_shots > 0 {
            for (pi, ci) in p.iter_mut().zip(self.counts.iter()) {
                *pi = *ci as f64 / self.n_shots as f64;
            }
        }
        p
    }
}

/// Bit-pattern label like "011" for pattern index `i` (site 0 first).
pub fn pattern_label(i: usize) -> String {
    format!("{}{}{}", (i >> 2) & 1, (i >> 1) & 1, i & 1)
}

/// Born probabilities `|amplitude_i|^2` in basis order.
pub fn born_probabilities(state: &PureState) -> Vec<f64> {
    state.amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

/// The 0-1 discriminator: per digit, 0 stays 0 and both excited levels read
/// as 1. Idempotent on bit patterns.
pub fn discriminate(trits: &[u8]) -> Vec<u8> {
    trits.iter().map(|&d| if d == 0 { 0 } else { 1 }).collect()
}

fn pattern_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Pattern index the discriminator assigns to trit-basis index `i`.
fn discriminated_pattern(i: usize, n_qutrits: usize) -> usize {
    pattern_index(&discriminate(&crate::state::digits_of(i, n_qutrits)))
}

/// Exact measured-bit-pattern distribution of a three-qutrit state: Born
/// probabilities marginalized through the discriminator.
pub fn measured_bit_distribution(state: &PureState) -> [f64; N_PATTERNS] {
    debug_assert_eq!(state.n_qutrits(), 3);
    let mut out = [0.0; N_PATTERNS];
    for (i, a) in state.amplitudes().iter().enumerate() {
        out[discriminated_pattern(i, 3)] += a.norm_sqr();
    }
    out
}

/// Draws `n` shots from the 27-outcome distribution `probs`, discriminates
/// each outcome to a bit pattern, and (when `noise` is given) misclassifies
/// it per the confusion column of its true pattern. Deterministic given
/// `seed`.
pub fn sample_shots(
    probs: &[f64],
    n: u64,
    noise: Option<&ConfusionMatrix>,
    seed: u64,
) -> Result<ShotCounts> {
    if probs.len() != 27 {
        return Err(Error::DimensionMismatch { expected: 27, found: probs.len() });
    }
    if n == 0 {
        return Err(Error::InvalidProbability(String::from("need at least one shot")));
    }
    let mut total = 0.0;
    for &p in probs {
        if p < -1e-10 {
            return Err(Error::InvalidProbability(format!("negative probability {p}")));
        }
        total += p.max(0.0);
    }
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidProbability(format!("probabilities sum to {total}")));
    }

    let mut rng = ShotRng::seed_from_u64(seed);
    let mut counts = [0u64; N_PATTERNS];
    for _ in 0..n {
        let outcome = rng.categorical(probs);
        let mut pattern = discriminated_pattern(outcome, 3);
        if let Some(cm) = noise {
            let mut col = [0.0; N_PATTERNS];
            for (m, cv) in col.iter_mut().enumerate() {
                *cv = cm.entry(m, pattern);
            }
            pattern = rng.categorical(&col);
        }
        counts[pattern] += 1;
    }
    Ok(ShotCounts::new(counts))
}

/// How an estimate is produced: analytically or from a finite shot budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Analytic probabilities, zero variance.
    Exact,
    /// Multinomial sampling with this many shots.
    Shots(u64),
}

/// A probability estimate with its normal-approximation variance
/// `p(1-p)/n` (zero in exact mode).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub p: f64,
    pub var: f64,
}

/// Raw and (when a confusion model is active) mitigated estimates of one
/// basis-state population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisEstimate {
    pub raw: Estimate,
    pub mitigated: Option<Estimate>,
}

impl BasisEstimate {
    /// The estimate analysis should use: mitigated when available.
    pub fn best(&self) -> Estimate {
        self.mitigated.unwrap_or(self.raw)
    }
}

/// Estimates `|<basis|state>|^2` through the lowering protocol: apply the
/// local gates that map `|basis>` to `|000>`, then count all-zeros readouts.
///
/// With a confusion model the mitigated estimate solves the 8-pattern
/// distribution through [`mitigate`] and reads its all-zeros component; its
/// variance keeps the binomial form at the mitigated point estimate.
pub fn estimate_basis_probability(
    state: &PureState,
    basis: &[u8],
    mode: SampleMode,
    noise: Option<&ConfusionMatrix>,
    seed: u64,
) -> Result<BasisEstimate> {
    if basis.len() != state.n_qutrits() {
        return Err(Error::DimensionMismatch { expected: state.n_qutrits(), found: basis.len() });
    }
    let mut lowered = state.clone();
    for (q, gate) in lowering_sequence(basis)? {
        lowered.apply_single(&gate.matrix, q)?;
    }
    estimate_all_zeros(&lowered, mode, noise, seed)
}

/// Estimates the all-zeros readout probability of an already-lowered state.
pub(crate) fn estimate_all_zeros(
    lowered: &PureState,
    mode: SampleMode,
    noise: Option<&ConfusionMatrix>,
    seed: u64,
) -> Result<BasisEstimate> {
    match mode {
        SampleMode::Exact => {
            let ideal = measured_bit_distribution(lowered);
            match noise {
                None => Ok(BasisEstimate { raw: Estimate { p: ideal[0], var: 0.0 }, mitigated: None }),
                Some(cm) => {
                    let noisy = cm.apply(&ideal);
                    let q = mitigate_distribution(&noisy, cm)?;
                    Ok(BasisEstimate {
                        raw: Estimate { p: noisy[0], var: 0.0 },
                        mitigated: Some(Estimate { p: q[0], var: 0.0 }),
                    })
                }
            }
        }
        SampleMode::Shots(n) => {
            let probs = born_probabilities(lowered);
            let counts = sample_shots(&probs, n, noise, seed)?;
            let p = counts.count_of_pattern(0) as f64 / n as f64;
            let raw = Estimate { p, var: p * (1.0 - p) / n as f64 };
            let mitigated = match noise {
                None => None,
                Some(cm) => {
                    let q = mitigate(&counts, cm)?;
                    let pm = q[0].clamp(0.0, 1.0);
                    Some(Estimate { p: q[0], var: pm * (1.0 - pm) / n as f64 })
                }
            };
            Ok(BasisEstimate { raw, mitigated })
        }
    }
}

/// Readout-error mitigation: solves `cm . q ~ p_hat` for `q >= 0` by
/// non-negative least squares. The total of `q` is not constrained to one,
/// so reconstructed traces may drift from unity like the hardware results.
pub fn mitigate(counts: &ShotCounts, cm: &ConfusionMatrix) -> Result<[f64; N_PATTERNS]> {
    mitigate_distribution(&counts.distribution(), cm)
}

/// [`mitigate`] on an explicit measured distribution.
pub fn mitigate_distribution(
    p_hat: &[f64; N_PATTERNS],
    cm: &ConfusionMatrix,
) -> Result<[f64; N_PATTERNS]> {
    let cond = cm.condition();
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::IllConditioned { condition: cond });
    }
    let rows: Vec<Vec<f64>> = cm.matrix.iter().map(|r| r.to_vec()).collect();
    let q = nnls(&rows, p_hat).ok_or(Error::IllConditioned { condition: cond })?;
    let mut out = [0.0; N_PATTERNS];
    out.copy_from_slice(&q);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{index_of, parse_trits};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn born_probabilities_of_ghz() {
        let p = born_probabilities(&PureState::ghz());
        for (i, v) in p.iter().enumerate() {
            let expect = if [index_of(&[0, 0, 0]), index_of(&[1, 1, 1]), index_of(&[2, 2, 2])]
                .contains(&i)
            {
                1.0 / 3.0
            } else {
                0.0
            };
            assert_abs_diff_eq!(v, &expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn born_point_mass_and_uniform() {
        let p = born_probabilities(&PureState::basis(&[0, 1, 2]));
        assert_abs_diff_eq!(p[index_of(&[0, 1, 2])], 1.0, epsilon = 1e-15);
        let amps = alloc::vec![crate::Complex64::new(1.0, 0.0); 27];
        let uniform = PureState::normalized(3, amps).unwrap();
        for v in born_probabilities(&uniform) {
            assert_abs_diff_eq!(v, 1.0 / 27.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn discriminator_examples() {
        assert_eq!(discriminate(&parse_trits("022").unwrap()), vec![0, 1, 1]);
        assert_eq!(discriminate(&parse_trits("000").unwrap()), vec![0, 0, 0]);
        assert_eq!(discriminate(&parse_trits("111").unwrap()), vec![1, 1, 1]);
    }

    #[test]
    fn sample_point_mass_lands_on_one_pattern() {
        let mut probs = alloc::vec![0.0; 27];
        probs[index_of(&[0, 0, 0])] = 1.0;
        let counts = sample_shots(&probs, 500, None, 1).unwrap();
        assert_eq!(counts.count_of_pattern(0), 500);
        assert_eq!(counts.n_shots(), 500);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let probs = born_probabilities(&PureState::ghz());
        let a = sample_shots(&probs, 1024, None, 9).unwrap();
        let b = sample_shots(&probs, 1024, None, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_shots(&probs, 1024, None, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ghz_discriminates_to_one_third_two_thirds() {
        // both 111 and 222 read as pattern "111"
        let probs = born_probabilities(&PureState::ghz());
        let counts = sample_shots(&probs, 200_000, None, 3).unwrap();
        let p000 = counts.count_of_pattern(0) as f64 / 200_000.0;
        let p111 = counts.count_of_pattern(7) as f64 / 200_000.0;
        assert_abs_diff_eq!(p000, 1.0 / 3.0, epsilon = 5e-3);
        assert_abs_diff_eq!(p111, 2.0 / 3.0, epsilon = 5e-3);
    }

    #[test]
    fn sample_rejects_bad_input() {
        let probs = alloc::vec![1.0 / 26.0; 26];
        assert!(sample_shots(&probs, 10, None, 0).is_err());
        let mut bad = alloc::vec![0.0; 27];
        bad[0] = 0.5;
        assert!(sample_shots(&bad, 10, None, 0).is_err());
        let mut neg = alloc::vec![1.0 / 25.0; 27];
        neg[0] = -0.04;
        neg[1] = 0.0;
        assert!(sample_shots(&neg, 10, None, 0).is_err());
    }

    #[test]
    fn estimate_matches_prepared_basis_state() {
        let st = PureState::basis(&[0, 1, 0]);
        let est =
            estimate_basis_probability(&st, &[0, 1, 0], SampleMode::Shots(256), None, 5).unwrap();
        assert_abs_diff_eq!(est.raw.p, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.raw.var, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn estimate_ghz_222_tends_to_one_third() {
        let est = estimate_basis_probability(
            &PureState::ghz(),
            &[2, 2, 2],
            SampleMode::Shots(100_000),
            None,
            11,
        )
        .unwrap();
        assert_abs_diff_eq!(est.raw.p, 1.0 / 3.0, epsilon = 6e-3);
    }

    #[test]
    fn estimate_variance_is_binomial() {
        let est = estimate_basis_probability(
            &PureState::ghz(),
            &[0, 0, 0],
            SampleMode::Shots(1024),
            None,
            2,
        )
        .unwrap();
        assert_abs_diff_eq!(
            est.raw.var,
            est.raw.p * (1.0 - est.raw.p) / 1024.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn exact_mode_equals_overlap() {
        let st = PureState::ghz();
        for basis in [[0u8, 0, 0], [1, 1, 1], [2, 2, 2], [0, 1, 2]] {
            let est =
                estimate_basis_probability(&st, &basis, SampleMode::Exact, None, 0).unwrap();
            let expect = st.amplitude(&basis).norm_sqr();
            assert_abs_diff_eq!(est.raw.p, expect, epsilon = 1e-12);
            assert_eq!(est.raw.var, 0.0);
        }
    }

    #[test]
    fn confusion_identity_at_zero_errors() {
        let zero = ReadoutErrorParams { p10: 0.0, p01: 0.0 };
        let cm = build_confusion(&[zero, zero, zero]);
        assert_eq!(cm, ConfusionMatrix::identity());
    }

    #[test]
    fn confusion_single_site_column() {
        // Q2 row: prepared 0 reads (0.965, 0.035) on that site.
        let q2 = ReadoutErrorParams { p10: 0.035, p01: 0.017 };
        let zero = ReadoutErrorParams { p10: 0.0, p01: 0.0 };
        let cm = build_confusion(&[q2, zero, zero]);
        // prepared pattern 000, measured 000 and 100
        assert_abs_diff_eq!(cm.entry(0, 0), 0.965, epsilon = 1e-12);
        assert_abs_diff_eq!(cm.entry(4, 0), 0.035, epsilon = 1e-12);
    }

    #[test]
    fn mitigate_with_identity_is_identity() {
        let counts = ShotCounts::new([100, 50, 0, 0, 0, 0, 0, 50]);
        let q = mitigate(&counts, &ConfusionMatrix::identity()).unwrap();
        let p = counts.distribution();
        for (qi, pi) in q.iter().zip(p.iter()) {
            assert_abs_diff_eq!(qi, pi, epsilon = 1e-10);
        }
    }

    #[test]
    fn mitigation_round_trip_recovers_truth() {
        let cm = build_confusion(&ROME_Q2_Q4_READOUT);
        let q_true = [0.31, 0.02, 0.01, 0.05, 0.0, 0.0, 0.01, 0.60];
        let p_hat = cm.apply(&q_true);
        let q = mitigate_distribution(&p_hat, &cm).unwrap();
        for (a, b) in q.iter().zip(q_true.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn mitigate_rejects_singular_matrix() {
        // Every column identical: perfectly singular but column-stochastic.
        let m = [[0.125; 8]; 8];
        let cm = ConfusionMatrix::from_matrix(m).unwrap();
        assert!(matches!(
            mitigate_distribution(&[0.2; 8], &cm),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn analytic_noise_composition_matches_definition() {
        // Infinite-shot limit: measured distribution is cm applied to the
        // discriminator-marginalized Born vector.
        let st = PureState::ghz();
        let cm = build_confusion(&ROME_Q2_Q4_READOUT);
        let ideal = measured_bit_distribution(&st);
        let noisy = cm.apply(&ideal);
        let mut manual = [0.0; 8];
        for m in 0..8 {
            for (t, pt) in ideal.iter().enumerate() {
                manual[m] += cm.entry(m, t) * pt;
            }
        }
        for (a, b) in noisy.iter().zip(manual.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        // and sampling converges to it
        let counts =
            sample_shots(&born_probabilities(&st), 400_000, Some(&cm), 17).unwrap();
        let emp = counts.distribution();
        for (e, t) in emp.iter().zip(noisy.iter()) {
            assert_abs_diff_eq!(e, t, epsilon = 5e-3);
        }
    }

    #[test]
    fn pattern_labels() {
        assert_eq!(pattern_label(0), "000");
        assert_eq!(pattern_label(3), "011");
        assert_eq!(pattern_label(7), "111");
    }

    proptest! {
        // The discriminator is idempotent on bit patterns.
        #[test]
        fn discriminate_idempotent(bits in proptest::collection::vec(0u8..2, 3)) {
            let once = discriminate(&bits);
            prop_assert_eq!(&once, &bits);
        }

        // Confusion columns sum to one for any valid per-site parameters.
        #[test]
        fn confusion_columns_stochastic(
            p in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3)
        ) {
            let params = [
                ReadoutErrorParams { p10: p[0].0, p01: p[0].1 },
                ReadoutErrorParams { p10: p[1].0, p01: p[1].1 },
                ReadoutErrorParams { p10: p[2].0, p01: p[2].1 },
            ];
            let cm = build_confusion(&params);
            for j in 0..8 {
                let col: f64 = (0..8).map(|i| cm.entry(i, j)).sum();
                prop_assert!((col - 1.0).abs() < 1e-10);
            }
        }

        // Mitigation undoes an analytically applied confusion model.
        #[test]
        fn mitigation_inverts_confusion(
            q in proptest::collection::vec(0.0f64..1.0, 8),
            p10 in 0.0f64..0.12,
            p01 in 0.0f64..0.12,
        ) {
            let total: f64 = q.iter().sum();
            prop_assume!(total > 1e-6);
            let q: Vec<f64> = q.iter().map(|v| v / total).collect();
            let params = ReadoutErrorParams { p10, p01 };
            let cm = build_confusion(&[params, params, params]);
            let mut q8 = [0.0; 8];
            q8.copy_from_slice(&q);
            let p_hat = cm.apply(&q8);
            let rec = mitigate_distribution(&p_hat, &cm).unwrap();
            for (a, b) in rec.iter().zip(q8.iter()) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
