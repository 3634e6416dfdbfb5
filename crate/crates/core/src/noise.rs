//! Density-matrix simulation of noisy gate sequences.
//!
//! Channels are kept in Kraus form and applied as explicit Kraus sums.
//! Within a sequence, a Clifford `C_j` is applied before its error channel
//! `Λ_j`, while the target gate's channel `Λ_V` acts before `V`, matching the
//! per-step product `V Λ_V Λ_j C_j` (rightmost acts first).

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::clifford::{CliffordElement, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, StateVector, C64, ONE, ZERO};
use crate::pauli::{self, PauliLabel};

/// Tolerance on `Σ K†K = 1`.
pub const TRACE_PRESERVATION_TOLERANCE: f64 = 1e-10;

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    label: String,
    dim: usize,
    kraus: Vec<Matrix>,
}

impl QuantumChannel {
    pub fn new(label: impl Into<String>, kraus: Vec<Matrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let dim = first.nrows();
        if kraus.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
            return Err(Error::InvalidChannel(
                "Kraus operators must be square and of equal size".into(),
            ));
        }
        let sum = kraus
            .iter()
            .fold(Matrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        let defect = (sum - Matrix::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > TRACE_PRESERVATION_TOLERANCE {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (defect {defect:e})"
            )));
        }
        Ok(QuantumChannel {
            label: label.into(),
            dim,
            kraus,
        })
    }

    pub fn identity(dim: usize) -> Self {
        QuantumChannel {
            label: "identity".into(),
            dim,
            kraus: vec![Matrix::identity(dim, dim)],
        }
    }

    pub fn unitary(label: impl Into<String>, u: Matrix) -> Result<Self> {
        Self::new(label, vec![u])
    }

    /// `ρ ↦ pρ + (1−p) 1/d`, realized as a Pauli mixture.
    pub fn depolarizing(p: f64, dim: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("{p} is outside [0, 1]")));
        }
        let qubits = linalg::qubits_for(dim)
            .ok_or_else(|| Error::param("dim", format!("{dim} is not a power of two")))?;
        let d2 = (dim * dim) as f64;
        let mut kraus = vec![Matrix::identity(dim, dim).scale((p + (1.0 - p) / d2).sqrt())];
        if p < 1.0 {
            let w = ((1.0 - p) / d2).sqrt();
            kraus.extend(
                (1..PauliLabel::count(qubits))
                    .map(|k| pauli::pauli_matrix(PauliLabel(k), qubits).scale(w)),
            );
        }
        Self::new(format!("depolarizing(p={p})"), kraus)
    }

    /// Independent amplitude damping with rate `gamma` on every qubit.
    pub fn amplitude_damping(gamma: f64, qubits: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::param("gamma", format!("{gamma} is outside [0, 1]")));
        }
        let k0 = Matrix::from_row_slice(
            2,
            2,
            &[ONE, ZERO, ZERO, C64::new((1.0 - gamma).sqrt(), 0.0)],
        );
        let k1 = Matrix::from_row_slice(2, 2, &[ZERO, C64::new(gamma.sqrt(), 0.0), ZERO, ZERO]);
        Self::new(
            format!("amplitude_damping(gamma={gamma})"),
            tensor_power(&[k0, k1], qubits),
        )
    }

    /// Independent phase flip with probability `p` on every qubit.
    pub fn dephasing(p: f64, qubits: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("p", format!("{p} is outside [0, 1]")));
        }
        let k0 = Matrix::identity(2, 2).scale((1.0 - p).sqrt());
        let k1 = pauli::pauli_matrix(PauliLabel(3), 1).scale(p.sqrt());
        Self::new(format!("dephasing(p={p})"), tensor_power(&[k0, k1], qubits))
    }

    /// Random channel with `rank` Kraus operators, `K_i = G_i (Σ G†G)^{-1/2}`
    /// for complex Gaussian `G_i`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Self {
        let gs: Vec<Matrix> = (0..rank.max(1))
            .map(|_| {
                Matrix::from_fn(dim, dim, |_, _| {
                    C64::new(
                        rng.sample(rand_distr::StandardNormal),
                        rng.sample(rand_distr::StandardNormal),
                    )
                })
            })
            .collect();
        let s = gs
            .iter()
            .fold(Matrix::zeros(dim, dim), |acc, g| acc + g.adjoint() * g);
        let inv = linalg::inverse_sqrt_hermitian(&s);
        QuantumChannel {
            label: "random".into(),
            dim,
            kraus: gs.iter().map(|g| g * &inv).collect(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[Matrix] {
        &self.kraus
    }

    pub fn is_identity(&self) -> bool {
        self.kraus.len() == 1 && self.kraus[0] == Matrix::identity(self.dim, self.dim)
    }

    pub fn apply(&self, rho: &Matrix) -> Matrix {
        if self.is_identity() {
            return rho.clone();
        }
        self.kraus
            .iter()
            .fold(Matrix::zeros(self.dim, self.dim), |acc, k| {
                acc + k * rho * k.adjoint()
            })
    }

    /// Channel that applies `self`, then `after`.
    pub fn then(&self, after: &QuantumChannel) -> Result<QuantumChannel> {
        if self.dim != after.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: after.dim,
            });
        }
        let kraus = after
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        Ok(QuantumChannel {
            label: format!("{} then {}", self.label, after.label),
            dim: self.dim,
            kraus,
        })
    }

    /// Real matrix `R_ij = Tr[P_i Λ(P_j)] / d`.
    pub fn pauli_transfer_matrix(&self) -> nalgebra::DMatrix<f64> {
        let qubits = linalg::qubits_for(self.dim).expect("qubit channel");
        let count = PauliLabel::count(qubits);
        let mut r = nalgebra::DMatrix::zeros(count, count);
        for j in 0..count {
            let out = self.apply(&pauli::pauli_matrix(PauliLabel(j), qubits));
            for i in 0..count {
                r[(i, j)] =
                    pauli::pauli_expectation(&out, PauliLabel(i), qubits).re / self.dim as f64;
            }
        }
        r
    }

    /// Average of `C† ∘ Λ ∘ C` over `group`.
    pub fn twirl(&self, group: &[CliffordElement]) -> QuantumChannel {
        let w = 1.0 / (group.len() as f64).sqrt();
        let kraus = group
            .iter()
            .flat_map(|c| {
                let u = c.to_unitary();
                self.kraus
                    .iter()
                    .map(move |k| (u.adjoint() * k * &u).scale(w))
            })
            .collect();
        QuantumChannel {
            label: format!("twirl({})", self.label),
            dim: self.dim,
            kraus,
        }
    }
}

fn tensor_power(single: &[Matrix], qubits: usize) -> Vec<Matrix> {
    let mut ops = vec![Matrix::identity(1, 1)];
    for _ in 0..qubits {
        ops = ops
            .iter()
            .flat_map(|acc| single.iter().map(move |k| linalg::kron(k, acc)))
            .collect();
    }
    ops
}

/// Serializable description of a channel family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChannelSpec {
    Identity,
    Depolarizing { p: f64 },
    AmplitudeDamping { gamma: f64 },
    Dephasing { p: f64 },
}

impl ChannelSpec {
    pub fn build(&self, qubits: usize) -> Result<QuantumChannel> {
        let dim = linalg::dim_for(qubits);
        match *self {
            ChannelSpec::Identity => Ok(QuantumChannel::identity(dim)),
            ChannelSpec::Depolarizing { p } => QuantumChannel::depolarizing(p, dim),
            ChannelSpec::AmplitudeDamping { gamma } => {
                QuantumChannel::amplitude_damping(gamma, qubits)
            }
            ChannelSpec::Dephasing { p } => QuantumChannel::dephasing(p, qubits),
        }
    }
}

/// Depolarizing decay parameter whose channel has average error `eps` in
/// dimension `dim`: `ε = (d−1)(1−p)/d`.
pub fn depolarizing_for_error(eps: f64, dim: usize) -> f64 {
    1.0 - eps * dim as f64 / (dim as f64 - 1.0)
}

/// Error channels attached to gates, plus optional SPAM channels.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub clifford: QuantumChannel,
    /// Gate-dependent channels that replace `clifford` for specific elements.
    pub overrides: Vec<(CliffordElement, QuantumChannel)>,
    pub target: QuantumChannel,
    pub preparation: Option<QuantumChannel>,
    pub measurement: Option<QuantumChannel>,
}

impl NoiseModel {
    pub fn noiseless(qubits: usize) -> Self {
        let id = QuantumChannel::identity(linalg::dim_for(qubits));
        NoiseModel {
            clifford: id.clone(),
            overrides: Vec::new(),
            target: id,
            preparation: None,
            measurement: None,
        }
    }

    /// Same channel after every Clifford, noiseless target and SPAM.
    pub fn gate_independent(channel: QuantumChannel) -> Self {
        let id = QuantumChannel::identity(channel.dim());
        NoiseModel {
            clifford: channel,
            overrides: Vec::new(),
            target: id,
            preparation: None,
            measurement: None,
        }
    }

    pub fn with_target(mut self, channel: QuantumChannel) -> Self {
        self.target = channel;
        self
    }

    pub fn with_spam(
        mut self,
        preparation: Option<QuantumChannel>,
        measurement: Option<QuantumChannel>,
    ) -> Self {
        self.preparation = preparation;
        self.measurement = measurement;
        self
    }

    pub fn with_override(mut self, gate: CliffordElement, channel: QuantumChannel) -> Self {
        self.overrides.push((gate, channel));
        self
    }

    pub fn dim(&self) -> usize {
        self.clifford.dim()
    }

    pub fn channel_for(&self, gate: &CliffordElement) -> &QuantumChannel {
        self.overrides
            .iter()
            .find(|(g, _)| g == gate)
            .map(|(_, ch)| ch)
            .unwrap_or(&self.clifford)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let channels = std::iter::once(&self.target)
            .chain(self.overrides.iter().map(|(_, c)| c))
            .chain(self.preparation.iter())
            .chain(self.measurement.iter());
        for ch in channels {
            if ch.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: ch.dim(),
                });
            }
        }
        Ok(())
    }

    /// State after the measurement-error channel (identity when absent).
    pub fn before_measurement(&self, rho: &Matrix) -> Matrix {
        match &self.measurement {
            Some(ch) => ch.apply(rho),
            None => rho.clone(),
        }
    }
}

/// Arbitrary target gate `V` given as a unitary on the full register.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetGate {
    pub name: String,
    pub unitary: Matrix,
}

fn embed_low(gate: &Matrix, gate_qubits: usize, qubits: usize) -> Matrix {
    let rest = linalg::dim_for(qubits - gate_qubits);
    linalg::kron(&Matrix::identity(rest, rest), gate)
}

impl TargetGate {
    pub fn new(name: impl Into<String>, unitary: Matrix) -> Result<Self> {
        let dim = unitary.nrows();
        if linalg::qubits_for(dim).is_none() || !linalg::is_unitary(&unitary, 1e-10) {
            return Err(Error::param("unitary", "target gate must be a 2^n x 2^n unitary"));
        }
        Ok(TargetGate {
            name: name.into(),
            unitary,
        })
    }

    fn check(qubits: usize, needed: usize) -> Result<()> {
        if qubits < needed || qubits > MAX_QUBITS {
            return Err(Error::QubitCount(qubits));
        }
        Ok(())
    }

    /// π/8 gate `diag(1, e^{iπ/4})` on qubit 0.
    pub fn t_gate(qubits: usize) -> Result<Self> {
        Self::check(qubits, 1)?;
        let mut t = Matrix::identity(2, 2);
        t[(1, 1)] = C64::from_polar(1.0, FRAC_PI_4);
        Self::new("T", embed_low(&t, 1, qubits))
    }

    pub fn hadamard(qubits: usize) -> Result<Self> {
        Self::check(qubits, 1)?;
        Self::new("H", CliffordElement::hadamard(0, qubits).to_unitary())
    }

    pub fn phase(qubits: usize) -> Result<Self> {
        Self::check(qubits, 1)?;
        Self::new("S", CliffordElement::phase_gate(0, qubits).to_unitary())
    }

    /// CNOT with control qubit 0 and target qubit 1.
    pub fn cnot(qubits: usize) -> Result<Self> {
        Self::check(qubits, 2)?;
        Self::new("CNOT", CliffordElement::cnot(0, 1, qubits).to_unitary())
    }

    pub fn qubits(&self) -> usize {
        linalg::qubits_for(self.unitary.nrows()).unwrap_or(0)
    }

    pub fn as_clifford(&self) -> Option<CliffordElement> {
        CliffordElement::from_unitary(&self.unitary, self.qubits())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Clifford(CliffordElement),
    /// The sequence's target gate `V`.
    Target,
}

/// Ordered gate list of one benchmark experiment.
#[derive(Debug, Clone)]
pub struct SequenceSpec {
    qubits: usize,
    gates: Vec<Gate>,
    target: Option<TargetGate>,
    length: usize,
}

impl SequenceSpec {
    /// Plain Clifford sequence; the length `y` counts every element.
    pub fn plain(qubits: usize, cliffords: Vec<CliffordElement>) -> Result<Self> {
        Self::check_cliffords(qubits, &cliffords)?;
        let length = cliffords.len();
        Ok(SequenceSpec {
            qubits,
            gates: cliffords.into_iter().map(Gate::Clifford).collect(),
            target: None,
            length,
        })
    }

    /// `C_1, V, C_2, V, …, C_y, V`.
    pub fn interleaved(
        qubits: usize,
        cliffords: Vec<CliffordElement>,
        target: TargetGate,
    ) -> Result<Self> {
        Self::check_cliffords(qubits, &cliffords)?;
        if target.qubits() != qubits {
            return Err(Error::DimensionMismatch {
                expected: qubits,
                actual: target.qubits(),
            });
        }
        let length = cliffords.len();
        let gates = cliffords
            .into_iter()
            .flat_map(|c| [Gate::Clifford(c), Gate::Target])
            .collect();
        Ok(SequenceSpec {
            qubits,
            gates,
            target: Some(target),
            length,
        })
    }

    pub fn random_plain<R: Rng + ?Sized>(qubits: usize, length: usize, rng: &mut R) -> Result<Self> {
        let cliffords = (0..length)
            .map(|_| CliffordElement::random(qubits, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::plain(qubits, cliffords)
    }

    pub fn random_interleaved<R: Rng + ?Sized>(
        qubits: usize,
        length: usize,
        target: &TargetGate,
        rng: &mut R,
    ) -> Result<Self> {
        let cliffords = (0..length)
            .map(|_| CliffordElement::random(qubits, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::interleaved(qubits, cliffords, target.clone())
    }

    fn check_cliffords(qubits: usize, cliffords: &[CliffordElement]) -> Result<()> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::QubitCount(qubits));
        }
        match cliffords.iter().find(|c| c.qubits() != qubits) {
            Some(c) => Err(Error::DimensionMismatch {
                expected: qubits,
                actual: c.qubits(),
            }),
            None => Ok(()),
        }
    }

    /// Appends a Clifford, e.g. the inverting gate of standard RB. The
    /// sequence length `y` is unchanged.
    pub fn push_clifford(&mut self, c: CliffordElement) -> Result<()> {
        Self::check_cliffords(self.qubits, std::slice::from_ref(&c))?;
        self.gates.push(Gate::Clifford(c));
        Ok(())
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        linalg::dim_for(self.qubits)
    }

    /// Number of random Cliffords `y`.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn target(&self) -> Option<&TargetGate> {
        self.target.as_ref()
    }

    pub fn is_interleaved(&self) -> bool {
        self.target.is_some()
    }

    pub fn cliffords(&self) -> impl Iterator<Item = &CliffordElement> {
        self.gates.iter().filter_map(|g| match g {
            Gate::Clifford(c) => Some(c),
            Gate::Target => None,
        })
    }

    fn target_unitary(&self) -> Result<&Matrix> {
        self.target
            .as_ref()
            .map(|t| &t.unitary)
            .ok_or_else(|| Error::Internal("target gate referenced but not set".into()))
    }
}

/// Ideal state after every gate of `seq` acts on `psi0`; costs `O(y d²)`.
pub fn ideal_state(psi0: &StateVector, seq: &SequenceSpec) -> Result<StateVector> {
    let dim = seq.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: psi0.len(),
        });
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!(
            "initial state has norm {}",
            psi0.norm()
        )));
    }
    let mut psi = psi0.clone();
    for gate in seq.gates() {
        psi = match gate {
            Gate::Clifford(c) => c.to_unitary() * psi,
            Gate::Target => seq.target_unitary()? * psi,
        };
    }
    Ok(psi)
}

/// Noisy state `ρ_act` realized by one execution of `seq`, including the
/// preparation channel but not the measurement channel.
pub fn apply_sequence_noisy(
    rho0: &Matrix,
    seq: &SequenceSpec,
    noise: &NoiseModel,
) -> Result<Matrix> {
    let dim = seq.dim();
    if rho0.nrows() != dim || rho0.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: rho0.nrows(),
        });
    }
    if noise.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: noise.dim(),
        });
    }
    noise.validate()?;
    let mut rho = match &noise.preparation {
        Some(ch) => ch.apply(rho0),
        None => rho0.clone(),
    };
    for gate in seq.gates() {
        rho = match gate {
            Gate::Clifford(c) => {
                let u = c.to_unitary();
                noise.channel_for(c).apply(&(&u * rho * u.adjoint()))
            }
            Gate::Target => {
                let v = seq.target_unitary()?;
                let noisy = noise.target.apply(&rho);
                v * noisy * v.adjoint()
            }
        };
    }
    Ok(rho)
}

/// Average fidelity between the implementation `Λ ∘ U` and the ideal `U`,
/// via `F = (d F_e + 1)/(d + 1)`.
pub fn average_gate_fidelity_exact(error: &QuantumChannel, target: &Matrix) -> Result<f64> {
    if error.dim() != target.nrows() {
        return Err(Error::DimensionMismatch {
            expected: error.dim(),
            actual: target.nrows(),
        });
    }
    let implementation: Vec<Matrix> = error.kraus().iter().map(|k| k * target).collect();
    Ok(average_fidelity_of_kraus(&implementation, target))
}

/// Average fidelity of an arbitrary implementation channel against `target`.
pub fn process_average_fidelity(implementation: &QuantumChannel, target: &Matrix) -> Result<f64> {
    if implementation.dim() != target.nrows() {
        return Err(Error::DimensionMismatch {
            expected: implementation.dim(),
            actual: target.nrows(),
        });
    }
    Ok(average_fidelity_of_kraus(implementation.kraus(), target))
}

fn average_fidelity_of_kraus(kraus: &[Matrix], target: &Matrix) -> f64 {
    let d = target.nrows() as f64;
    let entanglement: f64 = kraus
        .iter()
        .map(|k| linalg::trace(&(target.adjoint() * k)).norm_sqr())
        .sum::<f64>()
        / (d * d);
    (d * entanglement + 1.0) / (d + 1.0)
}

/// Probability that a projective measurement onto `psi0` succeeds after the
/// measurement-error channel.
pub fn survival_probability(rho: &Matrix, psi0: &StateVector, noise: &NoiseModel) -> f64 {
    let measured = noise.before_measurement(rho);
    (psi0.adjoint() * measured * psi0)[(0, 0)].re.clamp(0.0, 1.0)
}

/// Single-shot readout of one Pauli operator on a fixed state.
#[derive(Debug, Clone, Copy)]
pub struct PauliMeasurement {
    /// `Pr(outcome = +1)`.
    pub p_plus: f64,
    /// Scale of the returned outcomes, `1/√d`.
    pub scale: f64,
}

impl PauliMeasurement {
    /// Prepares readout of `P_k` on `rho` after the measurement-error channel.
    pub fn new(rho: &Matrix, label: PauliLabel, noise: &NoiseModel) -> Result<Self> {
        let qubits = linalg::qubits_for(rho.nrows())
            .ok_or_else(|| Error::InvalidState("dimension is not a power of two".into()))?;
        label.validate(qubits)?;
        let measured = noise.before_measurement(rho);
        Ok(Self::from_state(&measured, label, qubits))
    }

    /// Readout of a state that already includes any measurement error.
    pub fn from_state(rho: &Matrix, label: PauliLabel, qubits: usize) -> Self {
        let expectation = pauli::pauli_expectation(rho, label, qubits).re;
        PauliMeasurement {
            p_plus: ((1.0 + expectation) / 2.0).clamp(0.0, 1.0),
            scale: 1.0 / (rho.nrows() as f64).sqrt(),
        }
    }

    /// Expected value of one shot, `Tr[W_k ρ]`.
    pub fn mean(&self) -> f64 {
        (2.0 * self.p_plus - 1.0) * self.scale
    }

    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.p_plus {
            self.scale
        } else {
            -self.scale
        }
    }

    /// Sum of `shots` independent outcomes, each `±1/√d`.
    pub fn shot_sum<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> f64 {
        let plus = if shots <= 16 {
            (0..shots).filter(|_| rng.random::<f64>() < self.p_plus).count() as u64
        } else {
            Binomial::new(shots, self.p_plus)
                .expect("p_plus is clamped to [0, 1]")
                .sample(rng)
        };
        (2.0 * plus as f64 - shots as f64) * self.scale
    }
}

/// One shot of `W_k` on `rho`: `±1/√d` with `Pr(+) = (1 + Tr[P_k ρ′])/2`,
/// `ρ′` being `rho` after the measurement-error channel.
pub fn pauli_shot<R: Rng + ?Sized>(
    rho: &Matrix,
    label: PauliLabel,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<f64> {
    Ok(PauliMeasurement::new(rho, label, noise)?.shot(rng))
}
