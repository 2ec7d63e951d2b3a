//! Dense statevector over an N-qubit chain.
//!
//! Qubit `q` addresses bit `q` of the basis index (little-endian), so the
//! nearest-neighbour bond between sites `i` and `i + 1` touches the adjacent
//! bits `i - 1` and `i`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// Largest register the simulator will allocate (2^26 amplitudes = 1 GiB).
pub const MAX_QUBITS: usize = 26;

/// Allowed deviation of the squared norm from one before sampling refuses a state.
pub const SAMPLING_NORM_TOLERANCE: f64 = 1e-6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// A 4×4 unitary acting on an ordered qubit pair `(q_a, q_b)`.
///
/// Row and column index `m = bit(q_a) + 2·bit(q_b)`, matching the global
/// little-endian ordering when `q_a < q_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoQubitGate {
    matrix: [[Complex64; 4]; 4],
    // Gate only mixes |01⟩ with |10⟩; |00⟩ and |11⟩ pick up phases.
    excitation_preserving: bool,
}

impl TwoQubitGate {
    pub const UNITARITY_TOLERANCE: f64 = 1e-12;

    pub fn new(matrix: [[Complex64; 4]; 4]) -> Result<Self> {
        let deviation = unitarity_deviation(&matrix);
        if !(deviation <= Self::UNITARITY_TOLERANCE) {
            return Err(invalid(format!(
                "two-qubit gate is not unitary (max |U†U - I| = {deviation:e})"
            )));
        }
        Ok(Self::from_unitary(matrix))
    }

    /// Skips the unitarity check. Callers must guarantee `matrix` is unitary.
    pub(crate) fn from_unitary(matrix: [[Complex64; 4]; 4]) -> Self {
        let off_block = [
            (0, 1),
            (0, 2),
            (0, 3),
            (1, 0),
            (1, 3),
            (2, 0),
            (2, 3),
            (3, 0),
            (3, 1),
            (3, 2),
        ];
        let excitation_preserving = off_block.iter().all(|&(r, c)| matrix[r][c] == ZERO);
        Self {
            matrix,
            excitation_preserving,
        }
    }

    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self::from_unitary(m)
    }

    pub fn swap() -> Self {
        let mut m = [[ZERO; 4]; 4];
        m[0][0] = ONE;
        m[1][2] = ONE;
        m[2][1] = ONE;
        m[3][3] = ONE;
        Self::from_unitary(m)
    }

    pub fn matrix(&self) -> &[[Complex64; 4]; 4] {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.matrix[c][r].conj();
            }
        }
        Self::from_unitary(m)
    }

    /// Matrix product `self · other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.matrix[r][k] * other.matrix[k][c]).sum();
            }
        }
        Self::from_unitary(m)
    }
}

fn unitarity_deviation(m: &[[Complex64; 4]; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            let dot: Complex64 = (0..4).map(|k| m[k][r].conj() * m[k][c]).sum();
            let target = if r == c { ONE } else { ZERO };
            let d = (dot - target).norm();
            worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
        }
    }
    worst
}

/// Inserts a zero bit at position `bit` of `k`.
#[inline(always)]
fn insert_zero(k: usize, bit: usize) -> usize {
    let low = k & ((1 << bit) - 1);
    ((k >> bit) << (bit + 1)) | low
}

impl StateVector {
    fn check_size(n_qubits: usize) -> Result<()> {
        if n_qubits < 2 {
            return Err(invalid(format!("need at least 2 qubits, got {n_qubits}")));
        }
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit limit"
            )));
        }
        Ok(())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        Self::check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; no normalization
    /// is applied.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() {
            return Err(invalid(format!("amplitude count {dim} is not a power of two")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        Self::check_size(n_qubits)?;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Product of singlets on qubit pairs (0,1), (2,3), ...
    ///
    /// Each pair carries `(|01⟩ - |10⟩)/√2` in index notation, i.e. amplitude
    /// `+1/√2` where the lower qubit of the pair is down.
    pub fn bell_pairs(n_qubits: usize) -> Result<Self> {
        if n_qubits % 2 != 0 {
            return Err(invalid(format!("Bell-pair initialization needs an even qubit count, got {n_qubits}")));
        }
        Self::check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let pairs = n_qubits / 2;
        let weight = 0.5f64.powf(pairs as f64 / 2.0);
        let mut amplitudes = vec![ZERO; dim];
        // Each pair contributes either index bits 01 (+) or 10 (-).
        for choice in 0..(1usize << pairs) {
            let mut index = 0usize;
            let mut sign = 1.0;
            for pair in 0..pairs {
                if (choice >> pair) & 1 == 0 {
                    index |= 1 << (2 * pair);
                } else {
                    index |= 1 << (2 * pair + 1);
                    sign = -sign;
                }
            }
            amplitudes[index] = Complex64::new(sign * weight, 0.0);
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    #[cfg(test)]
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::StateInvariant(format!("cannot normalize a state of norm {n}")));
        }
        let inv = 1.0 / n;
        self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(invalid(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub(crate) fn ensure_normalized(&self, tolerance: f64) -> Result<()> {
        let n2 = self.norm_sqr();
        if !((n2 - 1.0).abs() <= tolerance) {
            return Err(Error::StateInvariant(format!(
                "state is not normalized (|ψ|² = {n2})"
            )));
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(invalid(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Applies `gate` to the ordered pair `(q_a, q_b)` in place.
    pub fn apply_two_qubit_gate(&mut self, gate: &TwoQubitGate, q_a: usize, q_b: usize) -> Result<()> {
        self.check_qubit(q_a)?;
        self.check_qubit(q_b)?;
        if q_a == q_b {
            return Err(invalid(format!("two-qubit gate needs distinct qubits, got {q_a} twice")));
        }
        let (lo, hi) = (q_a.min(q_b), q_a.max(q_b));
        let mask_a = 1usize << q_a;
        let mask_b = 1usize << q_b;
        let m = &gate.matrix;
        let amps = &mut self.amplitudes;
        let quarter = amps.len() >> 2;

        if gate.excitation_preserving {
            let (p00, p11) = (m[0][0], m[3][3]);
            let (u11, u12, u21, u22) = (m[1][1], m[1][2], m[2][1], m[2][2]);
            for k in 0..quarter {
                let i00 = insert_zero(insert_zero(k, lo), hi);
                let i01 = i00 | mask_a;
                let i10 = i00 | mask_b;
                let i11 = i01 | mask_b;
                amps[i00] *= p00;
                amps[i11] *= p11;
                let (a, b) = (amps[i01], amps[i10]);
                amps[i01] = u11 * a + u12 * b;
                amps[i10] = u21 * a + u22 * b;
            }
        } else {
            for k in 0..quarter {
                let i00 = insert_zero(insert_zero(k, lo), hi);
                let idx = [i00, i00 | mask_a, i00 | mask_b, i00 | mask_a | mask_b];
                let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
                for (r, &target) in idx.iter().enumerate() {
                    amps[target] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
                }
            }
        }
        Ok(())
    }

    /// Applies a 2×2 matrix to qubit `q` (row/column index = bit value).
    pub fn apply_single_qubit(&mut self, matrix: &[[Complex64; 2]; 2], q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        let half = self.amplitudes.len() >> 1;
        for k in 0..half {
            let i0 = insert_zero(k, q);
            let i1 = i0 | mask;
            let (a, b) = (self.amplitudes[i0], self.amplitudes[i1]);
            self.amplitudes[i0] = matrix[0][0] * a + matrix[0][1] * b;
            self.amplitudes[i1] = matrix[1][0] * a + matrix[1][1] * b;
        }
        Ok(())
    }

    /// Draws `shots` i.i.d. basis indices from `|amplitude|²`.
    ///
    /// The sequence depends only on `(state, shots, seed)`.
    pub fn sample_bitstrings(&self, shots: usize, seed: u64) -> Result<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(shots, &mut rng)
    }

    pub(crate) fn sample_with<R: Rng>(&self, shots: usize, rng: &mut R) -> Result<Vec<usize>> {
        if shots == 0 {
            return Err(invalid("shot count must be at least 1"));
        }
        self.ensure_normalized(SAMPLING_NORM_TOLERANCE)?;
        let mut cumulative = Vec::with_capacity(self.dim());
        let mut acc = 0.0;
        for a in &self.amplitudes {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let total = acc;
        let last = cumulative.len() - 1;
        Ok((0..shots)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                cumulative.partition_point(|&c| c <= u).min(last)
            })
            .collect())
    }

    /// Von Neumann entropy (nats) of qubits `0..cut`.
    pub fn subsystem_entropy(&self, cut: usize) -> Result<f64> {
        if cut == 0 || cut >= self.n_qubits {
            return Err(invalid(format!(
                "entropy cut {cut} outside 1..{}",
                self.n_qubits - 1
            )));
        }
        self.ensure_normalized(SAMPLING_NORM_TOLERANCE)?;
        let rows = 1usize << cut;
        let cols = 1usize << (self.n_qubits - cut);
        let schmidt = DMatrix::from_fn(rows, cols, |r, c| self.amplitudes[r | (c << cut)]);
        let entropy = schmidt
            .singular_values()
            .iter()
            .map(|s| s * s)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum::<f64>();
        Ok(entropy.max(0.0))
    }
}

/// Free-function form of [`StateVector::bell_pairs`].
pub fn init_bell_pairs(n_qubits: usize) -> Result<StateVector> {
    StateVector::bell_pairs(n_qubits)
}
