//! Clifford group elements stored as stabilizer tableaux.
//!
//! An element is determined by where conjugation sends the generators
//! `X_0..X_{n-1}, Z_0..Z_{n-1}`. Each image is a Hermitian Pauli word with
//! a sign, so equality of tableaux is equality of the induced channels.
//! Dense unitaries are rendered on demand with the global phase fixed so
//! that the first nonzero entry of column 0 is real and positive.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, StateVector, C64, ONE};
use crate::pauli::{self, PauliLabel};

/// Largest register handled by the dense simulator.
pub const MAX_QUBITS: usize = 4;

/// `i^phase · X^x · Z^z`, where `X^x` is the product of `X_q` over the set
/// bits of `x` (likewise for `Z^z`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliOp {
    pub x: u32,
    pub z: u32,
    pub phase: u8,
}

impl PauliOp {
    pub fn identity() -> Self {
        PauliOp {
            x: 0,
            z: 0,
            phase: 0,
        }
    }

    /// Hermitian word with the given X/Z support and sign (`Y = iXZ`).
    pub fn hermitian(x: u32, z: u32, negative: bool) -> Self {
        let ys = (x & z).count_ones() as u8;
        PauliOp {
            x,
            z,
            phase: (ys + if negative { 2 } else { 0 }) % 4,
        }
    }

    pub fn from_label(label: PauliLabel, qubits: usize) -> Self {
        let m = label.masks(qubits);
        Self::hermitian(m.x as u32, m.z as u32, false)
    }

    pub fn label(&self) -> PauliLabel {
        let mut k = 0;
        let support = self.x | self.z;
        for q in 0..32 {
            if support >> q & 1 == 0 {
                continue;
            }
            let digit = match (self.x >> q & 1, self.z >> q & 1) {
                (1, 0) => 1,
                (1, 1) => 2,
                _ => 3,
            };
            k |= digit << (2 * q);
        }
        PauliLabel(k)
    }

    /// Phase relative to the Hermitian word of the same support, as a power
    /// of `i`. Hermitian operators have relative phase 0 or 2.
    fn relative_phase(&self) -> u8 {
        (self.phase + 4 - (self.x & self.z).count_ones() as u8 % 4) % 4
    }

    pub fn is_hermitian(&self) -> bool {
        self.relative_phase().is_multiple_of(2)
    }

    /// Sign of a Hermitian operator relative to its unsigned word.
    pub fn is_negative(&self) -> bool {
        self.relative_phase() == 2
    }

    pub fn mul(&self, rhs: &PauliOp) -> PauliOp {
        // Z^a X^b = (-1)^{|a & b|} X^b Z^a
        let swap = 2 * ((self.z & rhs.x).count_ones() % 2) as u8;
        PauliOp {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: (self.phase + rhs.phase + swap) % 4,
        }
    }

    /// Symplectic form: 1 if the operators anticommute.
    pub fn symplectic(&self, other: &PauliOp) -> u32 {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2
    }

    fn phase_factor(&self) -> C64 {
        [
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, -1.0),
        ][self.phase as usize]
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let mut out = StateVector::zeros(psi.len());
        let factor = self.phase_factor();
        for i in 0..psi.len() {
            let sign = if (i as u32 & self.z).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            out[i ^ self.x as usize] = factor * sign * psi[i];
        }
        out
    }
}

/// Element of the n-qubit Clifford group (modulo global phase).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CliffordElement {
    qubits: usize,
    /// Images of `X_0..X_{n-1}` followed by `Z_0..Z_{n-1}`.
    images: Vec<PauliOp>,
}

fn check_qubits(qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&qubits) {
        Ok(())
    } else {
        Err(Error::QubitCount(qubits))
    }
}

fn generator(index: usize, qubits: usize) -> PauliOp {
    if index < qubits {
        PauliOp::hermitian(1 << index, 0, false)
    } else {
        PauliOp::hermitian(0, 1 << (index - qubits), false)
    }
}

impl CliffordElement {
    pub fn identity(qubits: usize) -> Self {
        CliffordElement {
            qubits,
            images: (0..2 * qubits).map(|i| generator(i, qubits)).collect(),
        }
    }

    /// Builds an element from generator images, checking that they are
    /// Hermitian and satisfy the symplectic commutation relations.
    pub fn from_images(qubits: usize, images: Vec<PauliOp>) -> Result<Self> {
        check_qubits(qubits)?;
        if images.len() != 2 * qubits {
            return Err(Error::DimensionMismatch {
                expected: 2 * qubits,
                actual: images.len(),
            });
        }
        let c = CliffordElement { qubits, images };
        if !c.is_valid() {
            return Err(Error::InvalidParameter {
                name: "images",
                reason: "generator images do not form a symplectic tableau".into(),
            });
        }
        Ok(c)
    }

    pub fn hadamard(qubit: usize, qubits: usize) -> Self {
        let mut c = Self::identity(qubits);
        c.images[qubit] = PauliOp::hermitian(0, 1 << qubit, false);
        c.images[qubits + qubit] = PauliOp::hermitian(1 << qubit, 0, false);
        c
    }

    /// `S = diag(1, i)`: `X → Y`, `Z → Z`.
    pub fn phase_gate(qubit: usize, qubits: usize) -> Self {
        let mut c = Self::identity(qubits);
        c.images[qubit] = PauliOp::hermitian(1 << qubit, 1 << qubit, false);
        c
    }

    pub fn cnot(control: usize, target: usize, qubits: usize) -> Self {
        let mut c = Self::identity(qubits);
        c.images[control] = PauliOp::hermitian((1 << control) | (1 << target), 0, false);
        c.images[qubits + target] = PauliOp::hermitian(0, (1 << control) | (1 << target), false);
        c
    }

    /// Conjugation by a Pauli word: flips the signs of anticommuting generators.
    pub fn pauli(label: PauliLabel, qubits: usize) -> Self {
        let p = PauliOp::from_label(label, qubits);
        let mut c = Self::identity(qubits);
        for img in &mut c.images {
            if p.symplectic(img) == 1 {
                img.phase = (img.phase + 2) % 4;
            }
        }
        c
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn images(&self) -> &[PauliOp] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.qubits)
    }

    /// Symplectic form preserved and every image Hermitian.
    pub fn is_valid(&self) -> bool {
        let n = self.qubits;
        self.images.iter().all(PauliOp::is_hermitian)
            && (0..2 * n).all(|i| {
                (0..2 * n).all(|j| {
                    self.images[i].symplectic(&self.images[j])
                        == generator(i, n).symplectic(&generator(j, n))
                })
            })
    }

    /// Image of an arbitrary Pauli operator under conjugation `U P U†`.
    pub fn conjugate(&self, p: &PauliOp) -> PauliOp {
        let n = self.qubits;
        let mut out = PauliOp {
            x: 0,
            z: 0,
            phase: p.phase,
        };
        for q in 0..n {
            if p.x >> q & 1 == 1 {
                out = out.mul(&self.images[q]);
            }
        }
        for q in 0..n {
            if p.z >> q & 1 == 1 {
                out = out.mul(&self.images[n + q]);
            }
        }
        out
    }

    /// `U P_k U† = ± P_k'`; returns `(negative, k')`.
    pub fn conjugate_label(&self, label: PauliLabel) -> (bool, PauliLabel) {
        let img = self.conjugate(&PauliOp::from_label(label, self.qubits));
        (img.is_negative(), img.label())
    }

    fn check_same(&self, other: &CliffordElement) -> Result<()> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.qubits,
                actual: other.qubits,
            });
        }
        Ok(())
    }

    /// Uniformly random element of the full n-qubit Clifford group.
    ///
    /// Draws an ordered symplectic basis one pair at a time: each new pair
    /// is uniform over vectors commuting with all earlier pairs (rejection
    /// sampling), which makes the induced symplectic matrix uniform. The
    /// `2^{2n}` image signs are independent fair bits.
    pub fn random<R: Rng + ?Sized>(qubits: usize, rng: &mut R) -> Result<Self> {
        check_qubits(qubits)?;
        let n = qubits;
        let mask = (1u64 << (2 * n)) - 1;
        let split = |v: u64| ((v & ((1 << n) - 1)) as u32, (v >> n) as u32);
        let mut xs: Vec<PauliOp> = Vec::with_capacity(n);
        let mut zs: Vec<PauliOp> = Vec::with_capacity(n);
        let commutes_with_previous =
            |p: &PauliOp, xs: &[PauliOp], zs: &[PauliOp]| {
                xs.iter().chain(zs).all(|q| p.symplectic(q) == 0)
            };
        for _ in 0..n {
            let x_img = loop {
                let (x, z) = split(rng.random::<u64>() & mask);
                let p = PauliOp::hermitian(x, z, false);
                if (x | z) != 0 && commutes_with_previous(&p, &xs, &zs) {
                    break p;
                }
            };
            let z_img = loop {
                let (x, z) = split(rng.random::<u64>() & mask);
                let p = PauliOp::hermitian(x, z, false);
                if p.symplectic(&x_img) == 1 && commutes_with_previous(&p, &xs, &zs) {
                    break p;
                }
            };
            xs.push(x_img);
            zs.push(z_img);
        }
        let mut images: Vec<PauliOp> = xs.into_iter().chain(zs).collect();
        for img in &mut images {
            if rng.random::<bool>() {
                img.phase = (img.phase + 2) % 4;
            }
        }
        Ok(CliffordElement { qubits, images })
    }

    /// Element acting as "apply `b`, then `self`".
    pub fn compose(&self, b: &CliffordElement) -> Result<CliffordElement> {
        self.check_same(b)?;
        Ok(CliffordElement {
            qubits: self.qubits,
            images: b.images.iter().map(|img| self.conjugate(img)).collect(),
        })
    }

    pub fn inverse(&self) -> CliffordElement {
        let n = self.qubits;
        // U† g U has support v with v_x[r] = ω(g, U Z_r U†), v_z[r] = ω(g, U X_r U†).
        let images = (0..2 * n)
            .map(|i| {
                let g = generator(i, n);
                let mut x = 0u32;
                let mut z = 0u32;
                for r in 0..n {
                    x |= g.symplectic(&self.images[n + r]) << r;
                    z |= g.symplectic(&self.images[r]) << r;
                }
                let candidate = PauliOp::hermitian(x, z, false);
                let mapped = self.conjugate(&candidate);
                debug_assert_eq!((mapped.x, mapped.z), (g.x, g.z));
                PauliOp::hermitian(x, z, mapped.is_negative())
            })
            .collect();
        CliffordElement { qubits: n, images }
    }

    /// Dense unitary with `U P U† = self.conjugate(P)`.
    ///
    /// Column 0 is the stabilizer state of the Z-images; column `j` is the
    /// X-image word for `j` applied to it. The global phase makes the first
    /// nonzero entry of column 0 real positive.
    pub fn to_unitary(&self) -> Matrix {
        let n = self.qubits;
        let dim = linalg::dim_for(n);
        let project = |mut v: StateVector| {
            for q in 0..n {
                let sv = self.images[n + q].apply(&v);
                v = (v + sv).scale(0.5);
            }
            v
        };
        let mut best = (0.0, StateVector::zeros(dim));
        for j in 0..dim {
            let v = project(linalg::basis_state(dim, j));
            let norm = v.norm();
            if norm > best.0 + 1e-12 {
                best = (norm, v);
            }
        }
        let col0 = best.1.unscale(best.0);
        let first = col0
            .iter()
            .find(|z| z.norm() > 1e-12)
            .copied()
            .unwrap_or(ONE);
        let col0 = col0 * (first.conj() / first.norm());

        let mut u = Matrix::zeros(dim, dim);
        for j in 0..dim {
            let mut word = PauliOp::identity();
            for q in 0..n {
                if j >> q & 1 == 1 {
                    word = word.mul(&self.images[q]);
                }
            }
            u.set_column(j, &word.apply(&col0));
        }
        u
    }

    /// Recognizes a Clifford unitary, returning `None` if conjugation sends
    /// some generator outside the signed Pauli group.
    pub fn from_unitary(u: &Matrix, qubits: usize) -> Option<CliffordElement> {
        check_qubits(qubits).ok()?;
        let dim = linalg::dim_for(qubits);
        if u.nrows() != dim || !linalg::is_unitary(u, 1e-9) {
            return None;
        }
        let mut images = Vec::with_capacity(2 * qubits);
        for i in 0..2 * qubits {
            let g = generator(i, qubits);
            let conj = u * pauli::pauli_matrix(g.label(), qubits) * u.adjoint();
            let found = (0..PauliLabel::count(qubits)).find_map(|k| {
                let c = pauli::pauli_expectation(&conj, PauliLabel(k), qubits) / dim as f64;
                ((c.norm() - 1.0).abs() < 1e-9 && c.im.abs() < 1e-9).then_some((k, c.re < 0.0))
            })?;
            let op = PauliOp::from_label(PauliLabel(found.0), qubits);
            images.push(PauliOp::hermitian(op.x, op.z, found.1));
        }
        CliffordElement::from_images(qubits, images).ok()
    }
}

/// The element `C_{y+1}` that undoes `seq` (applied first to last).
pub fn inverting_gate(seq: &[CliffordElement]) -> Result<CliffordElement> {
    let (first, rest) = seq.split_first().ok_or(Error::EmptySequence)?;
    let mut total = first.clone();
    for c in rest {
        total = c.compose(&total)?;
    }
    Ok(total.inverse())
}

/// Every element of the group, by breadth-first closure over `H`, `S` and
/// nearest-neighbour `CNOT`. Only practical for one or two qubits.
pub fn all_elements(qubits: usize) -> Result<Vec<CliffordElement>> {
    check_qubits(qubits)?;
    if qubits > 2 {
        return Err(Error::param("qubits", "group enumeration is limited to n <= 2"));
    }
    let mut generators = Vec::new();
    for q in 0..qubits {
        generators.push(CliffordElement::hadamard(q, qubits));
        generators.push(CliffordElement::phase_gate(q, qubits));
    }
    for q in 1..qubits {
        generators.push(CliffordElement::cnot(q - 1, q, qubits));
    }
    let start = CliffordElement::identity(qubits);
    let mut seen = std::collections::HashSet::from([start.clone()]);
    let mut order = vec![start];
    let mut cursor = 0;
    while cursor < order.len() {
        let current = order[cursor].clone();
        cursor += 1;
        for g in &generators {
            let next = g.compose(&current)?;
            if seen.insert(next.clone()) {
                order.push(next);
            }
        }
    }
    Ok(order)
}

/// `|C_n| / ` global phase `= 2^{n²+2n} Π_{j=1..n} (4^j − 1)`.
pub fn group_order(qubits: usize) -> u128 {
    let n = qubits as u32;
    let mut order: u128 = 1u128 << (n * n + 2 * n);
    for j in 1..=n {
        order *= 4u128.pow(j) - 1;
    }
    order
}
