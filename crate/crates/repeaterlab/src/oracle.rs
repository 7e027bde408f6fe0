//! Brute-force density-matrix reference for the Bell-diagonal algebra.
//!
//! Runs the purification and swap circuits on full 4- and 16-dimensional
//! density matrices with the gate depolarization channel and readout-error
//! measurements, with no Bell-diagonal assumption anywhere. The closed forms
//! in [`crate::bell`] were derived from these circuits and must match them
//! component-wise; the integration tests keep that equivalence pinned.
//!
//! This module is test-support machinery: correctness over speed, dimensions
//! 4 and 16 only.

use num_complex::Complex64;

use crate::bell::{BellVector, ErrorModel};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex square matrix, row-major. Doubles as operator and state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Σ vₖ |Bₖ⟩⟨Bₖ| in the `{Ψ⁻, Φ⁺, Φ⁻, Ψ⁺}` ordering.
    pub fn from_bell_vector(v: &BellVector) -> Self {
        let mut rho = Self::zeros(4);
        for (k, basis) in bell_basis().iter().enumerate() {
            let w = Complex64::new(v.get(k), 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    let x = rho.get(i, j) + w * basis[i] * basis[j].conj();
                    rho.set(i, j, x);
                }
            }
        }
        rho
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let d1 = self.dim;
        let d2 = other.dim;
        let mut out = Self::zeros(d1 * d2);
        for i1 in 0..d1 {
            for j1 in 0..d1 {
                for i2 in 0..d2 {
                    for j2 in 0..d2 {
                        out.set(i1 * d2 + i2, j1 * d2 + j2, self.get(i1, j1) * other.get(i2, j2));
                    }
                }
            }
        }
        out
    }

    fn matmul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    let x = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, x);
                }
            }
        }
        out
    }

    fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    /// `M ρ M†`.
    fn conjugated_by(&self, m: &Self) -> Self {
        m.matmul(self).matmul(&m.adjoint())
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    /// Partial trace keeping the qubits listed in `keep` (qubit 0 is the most
    /// significant bit of the basis index).
    pub fn partial_trace(&self, keep: &[usize]) -> Self {
        let n = self.dim.trailing_zeros() as usize;
        let other: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let dk = 1 << keep.len();
        let do_ = 1 << other.len();
        let mut out = Self::zeros(dk);
        for r in 0..dk {
            for c in 0..dk {
                let mut acc = ZERO;
                for o in 0..do_ {
                    let mut ri = 0usize;
                    let mut ci = 0usize;
                    for (bit, &q) in keep.iter().enumerate() {
                        let shift = n - 1 - q;
                        ri |= ((r >> (keep.len() - 1 - bit)) & 1) << shift;
                        ci |= ((c >> (keep.len() - 1 - bit)) & 1) << shift;
                    }
                    for (bit, &q) in other.iter().enumerate() {
                        let shift = n - 1 - q;
                        let ob = (o >> (other.len() - 1 - bit)) & 1;
                        ri |= ob << shift;
                        ci |= ob << shift;
                    }
                    acc += self.get(ri, ci);
                }
                out.set(r, c, acc);
            }
        }
        out
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue, via cyclic Jacobi on the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(self)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

/// The Bell basis as state vectors, paper ordering `{Ψ⁻, Φ⁺, Φ⁻, Ψ⁺}`.
fn bell_basis() -> [[Complex64; 4]; 4] {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [
        [ZERO, s, -s, ZERO],
        [s, ZERO, ZERO, s],
        [s, ZERO, ZERO, -s],
        [ZERO, s, s, ZERO],
    ]
}

/// The four diagonal entries of a two-qubit state in the Bell ordering.
/// Off-diagonal content is discarded; diagonal extraction never changes the
/// diagonal entries themselves.
pub fn diag_in_bell_basis(rho: &DensityMatrix) -> Result<BellVector> {
    if rho.dim() != 4 {
        return Err(Error::Domain(format!(
            "Bell diagonal extraction needs a two-qubit state, got dim {}",
            rho.dim()
        )));
    }
    let basis = bell_basis();
    let mut comps = [0.0; 4];
    for (k, b) in basis.iter().enumerate() {
        let mut acc = ZERO;
        for i in 0..4 {
            for j in 0..4 {
                acc += b[i].conj() * rho.get(i, j) * b[j];
            }
        }
        comps[k] = acc.re;
    }
    BellVector::new(comps[0], comps[1], comps[2], comps[3])
}

/// Largest magnitude among the off-diagonal Bell-basis matrix elements.
pub fn bell_offdiag_max(rho: &DensityMatrix) -> f64 {
    let basis = bell_basis();
    let mut worst = 0.0f64;
    for k in 0..4 {
        for l in 0..4 {
            if k == l {
                continue;
            }
            let mut acc = ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    acc += basis[k][i].conj() * rho.get(i, j) * basis[l][j];
                }
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

fn embed_one(n: usize, q: usize, u: &[[Complex64; 2]; 2]) -> DensityMatrix {
    let dim = 1 << n;
    let mut m = DensityMatrix::zeros(dim);
    let shift = n - 1 - q;
    for col in 0..dim {
        let b = (col >> shift) & 1;
        for (out_b, row_u) in u.iter().enumerate() {
            let amp = row_u[b];
            if amp == ZERO {
                continue;
            }
            let row = (col & !(1 << shift)) | (out_b << shift);
            let x = m.get(row, col) + amp;
            m.set(row, col, x);
        }
    }
    m
}

fn embed_two(n: usize, q1: usize, q2: usize, u: &[[Complex64; 4]; 4]) -> DensityMatrix {
    let dim = 1 << n;
    let s1 = n - 1 - q1;
    let s2 = n - 1 - q2;
    let mut m = DensityMatrix::zeros(dim);
    for col in 0..dim {
        let sub_in = (((col >> s1) & 1) << 1) | ((col >> s2) & 1);
        for sub_out in 0..4 {
            let amp = u[sub_out][sub_in];
            if amp == ZERO {
                continue;
            }
            let row = (col & !(1 << s1) & !(1 << s2))
                | (((sub_out >> 1) & 1) << s1)
                | ((sub_out & 1) << s2);
            let x = m.get(row, col) + amp;
            m.set(row, col, x);
        }
    }
    m
}

fn unitarity_defect(u: &[[Complex64; 4]; 4]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                acc += u[k][i].conj() * u[k][j];
            }
            let expect = if i == j { ONE } else { ZERO };
            worst = worst.max((acc - expect).norm());
        }
    }
    worst
}

const PAULI_I: [[Complex64; 2]; 2] = [[ONE, ZERO], [ZERO, ONE]];
const PAULI_X: [[Complex64; 2]; 2] = [[ZERO, ONE], [ONE, ZERO]];
const PAULI_Z: [[Complex64; 2]; 2] = [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];
const PAULI_Y: [[Complex64; 2]; 2] = [
    [ZERO, Complex64::new(0.0, -1.0)],
    [Complex64::new(0.0, 1.0), ZERO],
];

/// The two-qubit gate channel: `p UρU† + (1−p)/4 · Tr_ij(ρ) ⊗ I_ij`.
///
/// The mixed branch is realized as the uniform two-qubit Pauli twirl on the
/// gate's qubits, which equals the marginal-times-identity replacement.
pub fn noisy_gate(
    rho: &DensityMatrix,
    u: &[[Complex64; 4]; 4],
    qubits: (usize, usize),
    p: f64,
) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("gate reliability p = {p} not in [0, 1]")));
    }
    if unitarity_defect(u) > 1e-12 {
        return Err(Error::Domain("noisy_gate requires a unitary operation".into()));
    }
    let n = rho.dim().trailing_zeros() as usize;
    let full = embed_two(n, qubits.0, qubits.1, u);
    let mut out = rho.conjugated_by(&full).scaled(p);

    let mut mixed = DensityMatrix::zeros(rho.dim());
    for pa in [PAULI_I, PAULI_X, PAULI_Y, PAULI_Z] {
        for pb in [PAULI_I, PAULI_X, PAULI_Y, PAULI_Z] {
            let op = embed_one(n, qubits.0, &pa).matmul(&embed_one(n, qubits.1, &pb));
            mixed.add_assign(&rho.conjugated_by(&op));
        }
    }
    out.add_assign(&mixed.scaled((1.0 - p) / 16.0));
    Ok(out)
}

/// Readout-error measurement of one qubit in the computational basis: the
/// qubit is projected exactly, but the reported label is flipped with
/// probability `1 − eta`. Returns the unnormalized post-measurement state for
/// the reported `outcome` together with its probability, so the two outcomes
/// sum to the input trace.
pub fn noisy_measure(
    rho: &DensityMatrix,
    qubit: usize,
    outcome: u8,
    eta: f64,
) -> Result<(DensityMatrix, f64)> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("eta = {eta} not in (0, 1]")));
    }
    let n = rho.dim().trailing_zeros() as usize;
    let proj = |b: u8| -> [[Complex64; 2]; 2] {
        if b == 0 {
            [[ONE, ZERO], [ZERO, ZERO]]
        } else {
            [[ZERO, ZERO], [ZERO, ONE]]
        }
    };
    let hit = embed_one(n, qubit, &proj(outcome));
    let miss = embed_one(n, qubit, &proj(1 - outcome));
    let mut out = rho.conjugated_by(&hit).scaled(eta);
    out.add_assign(&rho.conjugated_by(&miss).scaled(1.0 - eta));
    let prob = out.trace().re;
    Ok((out, prob))
}

/// π/2 rotation applied to every spin before the purification gates:
/// `|0⟩ → (|0⟩ + i|1⟩)/√2`, `|1⟩ → (|1⟩ + i|0⟩)/√2`.
fn half_rotation() -> [[Complex64; 2]; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [Complex64::new(s, 0.0), Complex64::new(0.0, s)],
        [Complex64::new(0.0, s), Complex64::new(s, 0.0)],
    ]
}

/// Two-qubit purification gate at location i, basis |stored, aux⟩:
/// identity on the stored-spin-down block, `−X` on the aux spin when the
/// stored spin is up.
fn purify_gate_i() -> [[Complex64; 4]; 4] {
    let m = Complex64::new(-1.0, 0.0);
    [
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, ZERO, m],
        [ZERO, ZERO, m, ZERO],
    ]
}

/// Two-qubit purification gate at location j: `X` on the aux spin when the
/// stored spin is down, identity otherwise.
fn purify_gate_j() -> [[Complex64; 4]; 4] {
    [
        [ZERO, ONE, ZERO, ZERO],
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ZERO, ONE, ZERO],
        [ZERO, ZERO, ZERO, ONE],
    ]
}

/// Full 16-dimensional purification circuit. Qubit order is
/// `[stored_i, stored_j, aux_i, aux_j]`; the gates couple `(stored, aux)` at
/// each location, the aux spins are measured, and the two opposite-outcome
/// branches are kept. Single-qubit rotations are applied exactly.
///
/// Returns the renormalized post-selected stored-pair state and the success
/// probability.
pub fn purify_circuit(
    stored: &DensityMatrix,
    aux: &DensityMatrix,
    err: &ErrorModel,
) -> Result<(DensityMatrix, f64)> {
    if stored.dim() != 4 || aux.dim() != 4 {
        return Err(Error::Domain("purify_circuit needs two two-qubit states".into()));
    }
    let mut rho = stored.kron(aux);
    let rot = half_rotation();
    for q in 0..4 {
        rho = rho.conjugated_by(&embed_one(4, q, &rot));
    }
    rho = noisy_gate(&rho, &purify_gate_i(), (0, 2), err.p)?;
    rho = noisy_gate(&rho, &purify_gate_j(), (1, 3), err.p)?;

    let mut kept = DensityMatrix::zeros(16);
    let mut success = 0.0;
    for (x, y) in [(0u8, 1u8), (1, 0)] {
        let (after_x, _) = noisy_measure(&rho, 2, x, err.eta)?;
        let (branch, prob) = noisy_measure(&after_x, 3, y, err.eta)?;
        success += prob;
        kept.add_assign(&branch);
    }
    if success < 1e-15 {
        return Err(Error::DegenerateInput(
            "purification circuit post-selection has zero probability".into(),
        ));
    }
    let post = kept.partial_trace(&[0, 1]).scaled(1.0 / success);
    Ok((post, success))
}

/// Bell-analyzer unitary on the middle pair: maps the Bell basis to the
/// computational basis (CNOT followed by a Hadamard on the first qubit).
fn bell_analyzer() -> [[Complex64; 4]; 4] {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [
        [s, ZERO, ZERO, s],
        [ZERO, s, s, ZERO],
        [s, ZERO, ZERO, -s],
        [ZERO, s, -s, ZERO],
    ]
}

/// Full 16-dimensional entanglement swap. Qubit order is
/// `[outer_left, mid_left, mid_right, outer_right]`; the Bell measurement on
/// the middle pair is one noisy two-qubit gate plus two readout-error
/// measurements, the reported outcome selects the Pauli correction on the
/// right outer qubit, and the result is averaged over all four outcomes.
pub fn swap_circuit(
    left: &DensityMatrix,
    right: &DensityMatrix,
    err: &ErrorModel,
) -> Result<DensityMatrix> {
    if left.dim() != 4 || right.dim() != 4 {
        return Err(Error::Domain("swap_circuit needs two two-qubit states".into()));
    }
    let rho = left.kron(right);
    let rho = noisy_gate(&rho, &bell_analyzer(), (1, 2), err.p)?;

    // analyzer outcome (x, y) -> Bell label found on the middle pair
    let outcome_label = |x: u8, y: u8| -> usize {
        match (x, y) {
            (0, 0) => 1, // Φ⁺
            (0, 1) => 3, // Ψ⁺
            (1, 0) => 2, // Φ⁻
            _ => 0,      // Ψ⁻
        }
    };
    let correction = |label: usize| -> DensityMatrix {
        match label {
            0 => embed_one(4, 3, &PAULI_I),
            1 => embed_one(4, 3, &PAULI_X).matmul(&embed_one(4, 3, &PAULI_Z)),
            2 => embed_one(4, 3, &PAULI_X),
            _ => embed_one(4, 3, &PAULI_Z),
        }
    };

    let mut out = DensityMatrix::zeros(16);
    for x in 0..2u8 {
        for y in 0..2u8 {
            let (after_x, _) = noisy_measure(&rho, 1, x, err.eta)?;
            let (branch, _) = noisy_measure(&after_x, 2, y, err.eta)?;
            out.add_assign(&branch.conjugated_by(&correction(outcome_label(x, y))));
        }
    }
    Ok(out.partial_trace(&[0, 3]))
}

/// Eigenvalues of the Hermitian part of `m` by cyclic complex Jacobi sweeps.
fn hermitian_eigenvalues(m: &DensityMatrix) -> Vec<f64> {
    let d = m.dim();
    // hermitize to wash out representation noise
    let mut a = vec![ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] = (m.get(i, j) + m.get(j, i).conj()) * 0.5;
        }
    }
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[p * d + q].norm());
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = a[p * d + p].re;
                let aqq = a[q * d + q].re;
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (c, s) = (theta.cos(), theta.sin());
                // rotate columns then rows with U = [[c, s·phase], [-s·conj(phase), c]]
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = akp * c - akq * s * phase.conj();
                    a[k * d + q] = akp * s * phase + akq * c;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = apk * c - aqk * s * phase;
                    a[q * d + k] = apk * s * phase.conj() + aqk * c;
                }
            }
        }
    }
    (0..d).map(|i| a[i * d + i].re).collect()
}
