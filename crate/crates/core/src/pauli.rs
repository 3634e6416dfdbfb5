//! Normalized n-qubit Pauli basis `W_k = P_k / √d`.
//!
//! Label convention (used everywhere in the crate): the label `k` is read as
//! a base-4 number whose digit `q` (counting from the least significant) is
//! the letter on qubit `q`, with `I = 0, X = 1, Y = 2, Z = 3`. Written as a
//! word, the leftmost character is the highest qubit, so for two qubits
//! `"IZ"` is `Z` on qubit 0 and has label 3. Label 0 is always `I⊗…⊗I`.

use std::fmt;

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, StateVector, C64, ONE, ZERO};

/// Imaginary residue of a χ entry above which the input is rejected.
pub const IMAG_TOLERANCE: f64 = 1e-10;
/// Probabilities below this are clamped to exactly zero.
pub const PROBABILITY_FLOOR: f64 = 1e-15;
/// Allowed deviation of `Σ Pr(k)` from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_digit(digit: usize) -> Pauli {
        Self::ALL[digit & 3]
    }

    pub fn digit(self) -> usize {
        self as usize
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        ['I', 'X', 'Y', 'Z'][self as usize]
    }
}

/// Index into the normalized Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PauliLabel(pub usize);

impl PauliLabel {
    pub const IDENTITY: PauliLabel = PauliLabel(0);

    pub fn index(self) -> usize {
        self.0
    }

    pub fn count(qubits: usize) -> usize {
        1usize << (2 * qubits)
    }

    pub fn from_letters(letters: &[Pauli]) -> PauliLabel {
        PauliLabel(
            letters
                .iter()
                .enumerate()
                .map(|(q, p)| p.digit() << (2 * q))
                .sum(),
        )
    }

    /// Parses a word such as `"XIZ"` (leftmost character = highest qubit).
    pub fn from_word(word: &str) -> Option<PauliLabel> {
        let letters: Option<Vec<Pauli>> = word.chars().rev().map(Pauli::from_char).collect();
        letters.map(|l| Self::from_letters(&l))
    }

    pub fn letter(self, qubit: usize) -> Pauli {
        Pauli::from_digit(self.0 >> (2 * qubit))
    }

    pub fn word(self, qubits: usize) -> String {
        (0..qubits).rev().map(|q| self.letter(q).as_char()).collect()
    }

    pub fn validate(self, qubits: usize) -> Result<()> {
        if self.0 < Self::count(qubits) {
            Ok(())
        } else {
            Err(Error::InvalidLabel {
                label: self.0,
                qubits,
            })
        }
    }

    /// Bit masks of the qubits carrying an X-type (`X`, `Y`) or Z-type
    /// (`Y`, `Z`) factor.
    pub fn masks(self, qubits: usize) -> PauliMasks {
        let mut x = 0;
        let mut z = 0;
        let mut ys = 0;
        for q in 0..qubits {
            match self.letter(q) {
                Pauli::I => {}
                Pauli::X => x |= 1 << q,
                Pauli::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                    ys += 1;
                }
                Pauli::Z => z |= 1 << q,
            }
        }
        PauliMasks { x, z, ys }
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Action of a Pauli word on basis states: `P|i⟩ = phase(i) |i ^ x⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliMasks {
    pub x: usize,
    pub z: usize,
    pub ys: u32,
}

impl PauliMasks {
    #[inline]
    pub fn phase(&self, basis: usize) -> C64 {
        // Y|b⟩ = i(-1)^b |1-b⟩, Z|b⟩ = (-1)^b |b⟩
        let sign = if (basis & self.z).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        match self.ys % 4 {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        }
    }
}

/// Dense (unnormalized) Pauli matrix `P_k`.
pub fn pauli_matrix(label: PauliLabel, qubits: usize) -> Matrix {
    let dim = linalg::dim_for(qubits);
    let masks = label.masks(qubits);
    let mut m = Matrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i ^ masks.x, i)] = masks.phase(i);
    }
    m
}

pub fn apply_pauli(label: PauliLabel, qubits: usize, psi: &StateVector) -> StateVector {
    let masks = label.masks(qubits);
    let mut out = StateVector::zeros(psi.len());
    for i in 0..psi.len() {
        out[i ^ masks.x] = masks.phase(i) * psi[i];
    }
    out
}

/// `Tr[P_k ρ]` without forming `P_k`.
pub fn pauli_expectation(rho: &Matrix, label: PauliLabel, qubits: usize) -> C64 {
    let masks = label.masks(qubits);
    (0..rho.nrows())
        .map(|i| masks.phase(i) * rho[(i, i ^ masks.x)])
        .sum()
}

/// `⟨ψ|P_k|ψ⟩`.
pub fn pauli_expectation_pure(psi: &StateVector, label: PauliLabel, qubits: usize) -> C64 {
    let masks = label.masks(qubits);
    (0..psi.len())
        .map(|i| psi[i ^ masks.x].conj() * masks.phase(i) * psi[i])
        .sum()
}

/// Expansion coefficients `χ(k) = Tr[W_k ρ]` of a state in the normalized
/// Pauli basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiVector {
    qubits: usize,
    values: Vec<f64>,
}

impl ChiVector {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        linalg::dim_for(self.qubits)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, label: PauliLabel) -> f64 {
        self.values[label.0]
    }

    /// `Σ_k χ(k)²`, which equals `Tr[ρ²]`.
    pub fn purity(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `Σ_k χ_a(k) χ_b(k)`, which equals `Tr[ρ_a ρ_b]`.
    pub fn overlap(&self, other: &ChiVector) -> Result<f64> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }
}

fn real_entry(value: C64, label: usize) -> Result<f64> {
    if value.im.abs() > IMAG_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "χ({label}) has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// χ-vector of a density matrix.
pub fn chi_vector(rho: &Matrix, qubits: usize) -> Result<ChiVector> {
    let dim = linalg::dim_for(qubits);
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: rho.nrows(),
        });
    }
    let defect = linalg::hermitian_defect(rho);
    if defect > IMAG_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "density matrix is not Hermitian (defect {defect:e})"
        )));
    }
    let tr = linalg::trace(rho);
    if (tr - ONE).norm() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
    }
    let norm = 1.0 / (dim as f64).sqrt();
    let values = (0..PauliLabel::count(qubits))
        .map(|k| real_entry(pauli_expectation(rho, PauliLabel(k), qubits) * norm, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChiVector { qubits, values })
}

fn check_normalized(psi: &StateVector, qubits: usize) -> Result<()> {
    let dim = linalg::dim_for(qubits);
    if psi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: psi.len(),
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "state vector has norm {norm}, expected 1"
        )));
    }
    Ok(())
}

/// χ-vector of a pure state `|ψ⟩⟨ψ|`, computed from the vector directly.
pub fn chi_vector_pure(psi: &StateVector, qubits: usize) -> Result<ChiVector> {
    check_normalized(psi, qubits)?;
    let norm = 1.0 / (psi.len() as f64).sqrt();
    let values = (0..PauliLabel::count(qubits))
        .map(|k| real_entry(pauli_expectation_pure(psi, PauliLabel(k), qubits) * norm, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChiVector { qubits, values })
}

/// Importance-sampling distribution `Pr(k) = χ_id(k)²` over Pauli labels.
#[derive(Debug, Clone)]
pub struct SamplingDistribution {
    qubits: usize,
    probabilities: Vec<f64>,
    source: String,
    index: WeightedIndex<f64>,
}

impl SamplingDistribution {
    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, label: PauliLabel) -> f64 {
        self.probabilities[label.0]
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    /// Labels with nonzero probability.
    pub fn support(&self) -> impl Iterator<Item = PauliLabel> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, _)| PauliLabel(k))
    }

    /// Draws one label with probability `Pr(k)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliLabel {
        PauliLabel(self.index.sample(rng))
    }
}

/// Builds `Pr(k) = χ_id(k)²` from the χ-vector of a pure ideal state.
pub fn sampling_distribution(chi_id: &ChiVector) -> Result<SamplingDistribution> {
    let sum: f64 = chi_id.values.iter().map(|c| c * c).sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::ImpureSource { sum });
    }
    let probabilities: Vec<f64> = chi_id
        .values
        .iter()
        .map(|c| {
            let p = c * c;
            if p < PROBABILITY_FLOOR {
                0.0
            } else {
                p
            }
        })
        .collect();
    let index = WeightedIndex::new(&probabilities)
        .map_err(|e| Error::Internal(format!("sampling distribution: {e}")))?;
    Ok(SamplingDistribution {
        qubits: chi_id.qubits,
        probabilities,
        source: String::from("ideal"),
        index,
    })
}

pub fn sample_operator_direct<R: Rng + ?Sized>(
    dist: &SamplingDistribution,
    rng: &mut R,
) -> PauliLabel {
    dist.sample(rng)
}

/// Unnormalized marginal weight of the words whose letters on qubits
/// `0..prefix.len()` equal `prefix`, summed over all letters on the rest.
///
/// Writing `A` for the fixed qubits and `B` for the rest, the weight is
/// `2^|B| Tr[K²] / d` with `K = Tr_A[(P_prefix ⊗ 1) |ψ⟩⟨ψ|]`.
fn prefix_weight(psi: &StateVector, qubits: usize, prefix: &[Pauli]) -> f64 {
    let fixed = prefix.len();
    let masks = PauliLabel::from_letters(prefix).masks(fixed);
    let low = 1usize << fixed;
    let high = 1usize << (qubits - fixed);
    let mut sum_sq = 0.0;
    for b in 0..high {
        for b2 in 0..high {
            let mut k = ZERO;
            for i in 0..low {
                k += masks.phase(i) * psi[i | (b << fixed)] * psi[(i ^ masks.x) | (b2 << fixed)].conj();
            }
            sum_sq += k.norm_sqr();
        }
    }
    sum_sq * high as f64 / linalg::dim_for(qubits) as f64
}

/// Exact conditional probabilities of the four letters on qubit
/// `prefix.len()`, given the letters already drawn on the lower qubits.
pub fn conditional_letter_probabilities(
    psi: &StateVector,
    qubits: usize,
    prefix: &[Pauli],
) -> [f64; 4] {
    assert!(prefix.len() < qubits, "prefix covers every qubit");
    let mut word = prefix.to_vec();
    word.push(Pauli::I);
    let mut weights = [0.0; 4];
    for (w, letter) in weights.iter_mut().zip(Pauli::ALL) {
        *word.last_mut().unwrap() = letter;
        let value = prefix_weight(psi, qubits, &word);
        *w = if value < PROBABILITY_FLOOR { 0.0 } else { value };
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for w in &mut weights {
            *w /= total;
        }
    }
    weights
}

/// Samples `k` with probability `χ_id(k)²` one qubit at a time from exact
/// conditional marginals, without materializing all `4^n` probabilities.
pub fn sample_operator_conditional<R: Rng + ?Sized>(
    psi: &StateVector,
    qubits: usize,
    rng: &mut R,
) -> Result<PauliLabel> {
    check_normalized(psi, qubits)?;
    let mut prefix = Vec::with_capacity(qubits);
    for _ in 0..qubits {
        let probs = conditional_letter_probabilities(psi, qubits, &prefix);
        let index = WeightedIndex::new(probs)
            .map_err(|e| Error::Internal(format!("conditional marginal: {e}")))?;
        prefix.push(Pauli::from_digit(index.sample(rng)));
    }
    Ok(PauliLabel::from_letters(&prefix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_state, density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn label_word_convention() {
        assert_eq!(PauliLabel::from_word("IZ"), Some(PauliLabel(3)));
        assert_eq!(PauliLabel::from_word("ZI"), Some(PauliLabel(12)));
        assert_eq!(PauliLabel(6).word(2), "XY");
        assert_eq!(PauliLabel::IDENTITY.word(3), "III");
        assert_eq!(PauliLabel::from_word("XQ"), None);
    }

    #[test]
    fn pauli_matrices_match_textbook() {
        let y = pauli_matrix(PauliLabel(2), 1);
        assert_eq!(y[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], C64::new(0.0, 1.0));
        let z = pauli_matrix(PauliLabel(3), 1);
        assert_eq!(z[(1, 1)], C64::new(-1.0, 0.0));
    }

    #[test]
    fn chi_of_zero_state() {
        let rho = density(&basis_state(2, 0));
        let chi = chi_vector(&rho, 1).unwrap();
        let expected = [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2];
        for (a, b) in chi.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn chi_of_maximally_mixed() {
        let rho = Matrix::identity(2, 2).scale(0.5);
        let chi = chi_vector(&rho, 1).unwrap();
        assert!((chi.values()[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(chi.values()[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn chi_of_two_qubit_ground_state_by_brute_force() {
        let rho = density(&basis_state(4, 0));
        let chi = chi_vector(&rho, 2).unwrap();
        for k in 0..16 {
            // brute force: full matrix trace
            let brute = (pauli_matrix(PauliLabel(k), 2) * &rho).trace().re / 2.0;
            assert!((chi.values()[k] - brute).abs() < 1e-14);
        }
        let support: Vec<String> = (0..16)
            .filter(|&k| chi.values()[k].abs() > 1e-12)
            .map(|k| PauliLabel(k).word(2))
            .collect();
        assert_eq!(support, ["II", "IZ", "ZI", "ZZ"]);
        for w in &support {
            assert!((chi.get(PauliLabel::from_word(w).unwrap()) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn chi_rejects_bad_input() {
        let wrong_dim = Matrix::identity(3, 3);
        assert!(matches!(
            chi_vector(&wrong_dim, 1),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut non_hermitian = density(&basis_state(2, 0));
        non_hermitian[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(
            chi_vector(&non_hermitian, 1),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn distributions_of_simple_states() {
        let zero = chi_vector_pure(&basis_state(2, 0), 1).unwrap();
        let dist = sampling_distribution(&zero).unwrap();
        let p = dist.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[3] - 0.5).abs() < 1e-15);
        assert_eq!([p[1], p[2]], [0.0, 0.0]);

        let plus = StateVector::from_element(2, C64::new(FRAC_1_SQRT_2, 0.0));
        let dist = sampling_distribution(&chi_vector_pure(&plus, 1).unwrap()).unwrap();
        let p = dist.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert_eq!(&p[2..], &[0.0, 0.0]);
    }

    #[test]
    fn mixed_source_is_rejected() {
        let rho = Matrix::identity(2, 2).scale(0.5);
        let chi = chi_vector(&rho, 1).unwrap();
        assert!(matches!(
            sampling_distribution(&chi),
            Err(Error::ImpureSource { .. })
        ));
    }

    #[test]
    fn point_mass_always_samples_identity() {
        // |0⟩ has Pr = (1/2, 0, 0, 1/2); a 0-qubit-like point mass is built by hand
        let chi = ChiVector {
            qubits: 1,
            values: vec![1.0, 0.0, 0.0, 0.0],
        };
        let dist = sampling_distribution(&chi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..1000).all(|_| sample_operator_direct(&dist, &mut rng) == PauliLabel(0)));
    }

    #[test]
    fn direct_sampling_frequencies() {
        let dist = sampling_distribution(&chi_vector_pure(&basis_state(2, 0), 1).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let z_count = (0..draws)
            .filter(|_| dist.sample(&mut rng) == PauliLabel(3))
            .count();
        assert!((z_count as f64 / draws as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let dist = sampling_distribution(&chi_vector_pure(&basis_state(4, 0), 2).unwrap()).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| dist.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn conditional_single_qubit_marginal() {
        let probs = conditional_letter_probabilities(&basis_state(2, 0), 1, &[]);
        assert!((probs[0] - 0.5).abs() < 1e-15 && (probs[3] - 0.5).abs() < 1e-15);
        assert_eq!([probs[1], probs[2]], [0.0, 0.0]);
    }

    #[test]
    fn conditional_sampling_frequencies_on_ground_state() {
        let psi = basis_state(4, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 16];
        let draws = 100_000;
        for _ in 0..draws {
            counts[sample_operator_conditional(&psi, 2, &mut rng).unwrap().0] += 1;
        }
        for w in ["II", "IZ", "ZI", "ZZ"] {
            let f = counts[PauliLabel::from_word(w).unwrap().0] as f64 / draws as f64;
            assert!((f - 0.25).abs() < 0.01, "{w}: {f}");
        }
        assert_eq!(counts.iter().sum::<usize>(), draws);
    }

    #[test]
    fn conditional_rejects_unnormalized() {
        let psi = basis_state(2, 0).scale(1.1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(sample_operator_conditional(&psi, 1, &mut rng).is_err());
    }
}
