//! The alternating-layer variational circuit.
//!
//! Starting from Bell pairs on bonds (1,2), (3,4), ..., each level `k`
//! applies `exp(-iγ_k H2)` (the pair bonds) followed by `exp(-iβ_k H1)` (the
//! bonds linking neighbouring pairs). Bonds inside a layer are disjoint, so
//! each layer factors exactly into per-bond exponentials.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hamiltonian::Axis;
use crate::statevector::{StateVector, TwoQubitGate};

/// Half-width of the interval used by [`InitStrategy::UniformRandom`].
pub const RANDOM_INIT_HALF_WIDTH: f64 = 0.1;

/// Layer angles `(γ_1..γ_p, β_1..β_p)` in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub p: usize,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl AnsatzParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(invalid(format!(
                "need p >= 1 matching gammas/betas, got {} and {}",
                gammas.len(),
                betas.len()
            )));
        }
        if !gammas.iter().chain(&betas).all(|a| a.is_finite()) {
            return Err(invalid("ansatz angles must be finite"));
        }
        Ok(Self {
            p: gammas.len(),
            gammas,
            betas,
        })
    }

    /// From the interleaved vector `(γ_1, β_1, ..., γ_p, β_p)`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % 2 != 0 {
            return Err(invalid(format!("flat parameter vector has odd length {}", flat.len())));
        }
        let gammas = flat.iter().step_by(2).copied().collect();
        let betas = flat.iter().skip(1).step_by(2).copied().collect();
        Self::new(gammas, betas)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas
            .iter()
            .zip(&self.betas)
            .flat_map(|(&g, &b)| [g, b])
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.gammas.len() != self.p || self.betas.len() != self.p {
            return Err(invalid(format!(
                "inconsistent parameters: p = {}, {} gammas, {} betas",
                self.p,
                self.gammas.len(),
                self.betas.len()
            )));
        }
        if !self.gammas.iter().chain(&self.betas).all(|a| a.is_finite()) {
            return Err(invalid("ansatz angles must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitStrategy {
    Zeros,
    UniformRandom { seed: u64 },
}

pub fn init_params(p: usize, strategy: InitStrategy) -> Result<AnsatzParams> {
    if p == 0 {
        return Err(invalid("layer count p must be at least 1"));
    }
    match strategy {
        InitStrategy::Zeros => AnsatzParams::new(vec![0.0; p], vec![0.0; p]),
        InitStrategy::UniformRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = RANDOM_INIT_HALF_WIDTH;
            let flat: Vec<f64> = (0..2 * p).map(|_| rng.random_range(-w..=w)).collect();
            AnsatzParams::from_flat(&flat)
        }
    }
}

/// `exp(-iθ (S^xS^x + S^yS^y + Δ S^zS^z))` on one bond, in closed form.
///
/// Eigenphases: `|00⟩, |11⟩ → e^{-iθΔ/4}`, triplet `(|01⟩+|10⟩)/√2 → e^{-iθ(2-Δ)/4}`,
/// singlet `(|01⟩-|10⟩)/√2 → e^{-iθ(-2-Δ)/4}`.
pub fn bond_gate(theta: f64, delta: f64) -> TwoQubitGate {
    let aligned = Complex64::from_polar(1.0, -theta * delta / 4.0);
    let triplet = Complex64::from_polar(1.0, -theta * (2.0 - delta) / 4.0);
    let singlet = Complex64::from_polar(1.0, -theta * (-2.0 - delta) / 4.0);
    let diag = (triplet + singlet) * 0.5;
    let off = (triplet - singlet) * 0.5;
    let zero = Complex64::new(0.0, 0.0);
    TwoQubitGate::from_unitary([
        [aligned, zero, zero, zero],
        [zero, diag, off, zero],
        [zero, off, diag, zero],
        [zero, zero, zero, aligned],
    ])
}

/// `exp(-i φ σ^axis ⊗ σ^axis)`.
pub fn pauli_pair_rotation(axis: Axis, phi: f64) -> TwoQubitGate {
    let (c, s) = (phi.cos(), phi.sin());
    let cos = Complex64::new(c, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mis = Complex64::new(0.0, -s);
    match axis {
        // XX maps |00⟩↔|11⟩ and |01⟩↔|10⟩ with unit amplitude.
        Axis::X => TwoQubitGate::from_unitary([
            [cos, zero, zero, mis],
            [zero, cos, mis, zero],
            [zero, mis, cos, zero],
            [mis, zero, zero, cos],
        ]),
        // YY: -1 on the aligned flips, +1 on the anti-aligned flips.
        Axis::Y => TwoQubitGate::from_unitary([
            [cos, zero, zero, -mis],
            [zero, cos, mis, zero],
            [zero, mis, cos, zero],
            [-mis, zero, zero, cos],
        ]),
        Axis::Z => {
            let plus = Complex64::from_polar(1.0, -phi);
            let minus = Complex64::from_polar(1.0, phi);
            TwoQubitGate::from_unitary([
                [plus, zero, zero, zero],
                [zero, minus, zero, zero],
                [zero, zero, minus, zero],
                [zero, zero, zero, plus],
            ])
        }
    }
}

/// Which half of the chain's bonds a layer exponentiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    /// Bonds (1,2), (3,4), ... (`H2`, angle γ).
    Pairs,
    /// Bonds (2,3), (4,5), ... (`H1`, angle β).
    Links,
}

impl LayerKind {
    /// Layer kind for position `j` of the interleaved parameter vector.
    pub fn for_flat_index(j: usize) -> Self {
        if j % 2 == 0 {
            LayerKind::Pairs
        } else {
            LayerKind::Links
        }
    }

    /// Qubit pairs (0-based) of this layer on an open chain of `n` sites.
    pub fn bonds(self, n: usize) -> Vec<(usize, usize)> {
        let start = match self {
            LayerKind::Pairs => 0,
            LayerKind::Links => 1,
        };
        (start..n.saturating_sub(1))
            .step_by(2)
            .map(|q| (q, q + 1))
            .collect()
    }
}

pub fn apply_layer(state: &mut StateVector, kind: LayerKind, theta: f64, delta: f64) -> Result<()> {
    let gate = bond_gate(theta, delta);
    for (a, b) in kind.bonds(state.n_qubits()) {
        state.apply_two_qubit_gate(&gate, a, b)?;
    }
    Ok(())
}

fn check_chain(n_sites: usize) -> Result<()> {
    if n_sites % 2 != 0 || n_sites < 2 {
        return Err(invalid(format!(
            "the ansatz needs an even chain length >= 2, got {n_sites}"
        )));
    }
    Ok(())
}

/// Applies interleaved layers `flat[from..]` to `state`.
pub(crate) fn apply_layers_from(state: &mut StateVector, flat: &[f64], from: usize, delta: f64) -> Result<()> {
    for (j, &theta) in flat.iter().enumerate().skip(from) {
        apply_layer(state, LayerKind::for_flat_index(j), theta, delta)?;
    }
    Ok(())
}

/// Prepares `|ψ(γ, β)⟩_p` on an open chain of `n_sites` spins.
pub fn apply_ansatz(params: &AnsatzParams, delta: f64, n_sites: usize) -> Result<StateVector> {
    params.validate()?;
    check_chain(n_sites)?;
    if !delta.is_finite() {
        return Err(invalid("anisotropy must be finite"));
    }
    let mut state = StateVector::bell_pairs(n_sites)?;
    apply_layers_from(&mut state, &params.to_flat(), 0, delta)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::exact_energy;
    use crate::hamiltonian::tests::dense_matrix;
    use crate::hamiltonian::PauliHamiltonian;
    use crate::testutil::{expm, fidelity};
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::PI;

    type CMat = DMatrix<Complex64>;

    fn gate_as_matrix(g: &TwoQubitGate) -> CMat {
        CMat::from_fn(4, 4, |r, c| g.matrix()[r][c])
    }

    fn max_entry_diff(a: &CMat, b: &CMat) -> f64 {
        (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_angle_is_identity() {
        assert_eq!(bond_gate(0.0, 0.7), TwoQubitGate::identity());
    }

    #[test]
    fn full_period_is_identity_up_to_phase() {
        let g = gate_as_matrix(&bond_gate(8.0 * PI, 1.0));
        let phase = g[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!(max_entry_diff(&g, &(CMat::identity(4, 4) * phase)) < 1e-10);
    }

    #[test]
    fn closed_form_matches_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let theta = rng.random_range(-6.0..6.0);
            let delta = rng.random_range(-2.0..3.0);
            let bond = PauliHamiltonian::xxz(2, delta).unwrap();
            let generator = dense_matrix(&bond) * Complex64::new(0.0, -theta);
            let oracle = expm(&generator);
            let got = gate_as_matrix(&bond_gate(theta, delta));
            assert!(max_entry_diff(&oracle, &got) < 1e-10);
            let u = bond_gate(theta, delta);
            assert!(TwoQubitGate::new(*u.matrix()).is_ok(), "unitarity");
        }
    }

    #[test]
    fn isotropic_bond_matches_swap_form() {
        // exp(-iθ S·S) = e^{iθ/4} (cos(θ/2) I - i sin(θ/2) SWAP)
        for theta in [0.3, -1.7, 2.9] {
            let phase = Complex64::from_polar(1.0, theta / 4.0);
            let swap = gate_as_matrix(&TwoQubitGate::swap());
            let reference = (CMat::identity(4, 4) * Complex64::new((theta / 2.0f64).cos(), 0.0)
                - swap * Complex64::new(0.0, (theta / 2.0f64).sin()))
                * phase;
            assert!(max_entry_diff(&reference, &gate_as_matrix(&bond_gate(theta, 1.0))) < 1e-12);
        }
    }

    #[test]
    fn pauli_rotations_compose_to_bond_gate() {
        for (theta, delta) in [(0.4, 0.3), (-2.2, 2.5), (1.1, -1.0)] {
            let composed = pauli_pair_rotation(Axis::X, theta / 4.0)
                .compose(&pauli_pair_rotation(Axis::Y, theta / 4.0))
                .compose(&pauli_pair_rotation(Axis::Z, theta * delta / 4.0));
            let direct = bond_gate(theta, delta);
            assert!(max_entry_diff(&gate_as_matrix(&composed), &gate_as_matrix(&direct)) < 1e-12);
        }
    }

    #[test]
    fn zero_params_give_bell_pairs_exactly() {
        let params = init_params(3, InitStrategy::Zeros).unwrap();
        let state = apply_ansatz(&params, 0.4, 8).unwrap();
        assert_eq!(state, StateVector::bell_pairs(8).unwrap());
    }

    #[test]
    fn two_site_chain_only_gains_phase() {
        let params = AnsatzParams::new(vec![0.8, -0.3], vec![1.2, 2.0]).unwrap();
        let state = apply_ansatz(&params, 1.0, 2).unwrap();
        let f = fidelity(&state, &StateVector::bell_pairs(2).unwrap());
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_circuit_simulation() {
        let (n, delta) = (4, 0.6);
        let params = AnsatzParams::new(vec![0.31, -0.72], vec![1.05, 0.44]).unwrap();
        let full = PauliHamiltonian::xxz(n, delta).unwrap();
        let (h1, h2) = full.split_even_odd().unwrap();
        let (m1, m2) = (dense_matrix(&h1), dense_matrix(&h2));
        let mut psi = DVector::from_column_slice(StateVector::bell_pairs(n).unwrap().amplitudes());
        for k in 0..params.p {
            psi = expm(&(&m2 * Complex64::new(0.0, -params.gammas[k]))) * psi;
            psi = expm(&(&m1 * Complex64::new(0.0, -params.betas[k]))) * psi;
        }
        let dense_h = dense_matrix(&full);
        let oracle = (psi.adjoint() * &dense_h * &psi)[(0, 0)].re;

        let state = apply_ansatz(&params, delta, n).unwrap();
        let e = exact_energy(&state, &full).unwrap().value;
        assert!((e - oracle).abs() < 1e-10, "{e} vs {oracle}");
        for (a, b) in state.amplitudes().iter().zip(psi.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn layer_order_does_not_matter() {
        let n = 8;
        let params = init_params(2, InitStrategy::UniformRandom { seed: 9 }).unwrap();
        let reference = apply_ansatz(&params, 0.3, n).unwrap();
        let mut state = StateVector::bell_pairs(n).unwrap();
        for (j, theta) in params.to_flat().into_iter().enumerate() {
            let gate = bond_gate(theta, 0.3);
            let mut bonds = LayerKind::for_flat_index(j).bonds(n);
            bonds.reverse();
            for (a, b) in bonds {
                // Reverse the qubit order inside the bond as well; the gate is symmetric.
                state.apply_two_qubit_gate(&gate, b, a).unwrap();
            }
        }
        for (a, b) in state.amplitudes().iter().zip(reference.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_delta_matches_heisenberg_reference() {
        let n = 6;
        let params = init_params(3, InitStrategy::UniformRandom { seed: 2 }).unwrap();
        let state = apply_ansatz(&params, 1.0, n).unwrap();
        let mut reference = StateVector::bell_pairs(n).unwrap();
        for (j, theta) in params.to_flat().into_iter().enumerate() {
            let phase = Complex64::from_polar(1.0, theta / 4.0);
            let i = Complex64::new(0.0, 1.0);
            let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
            let c = Complex64::new((theta / 2.0).cos(), 0.0) * phase;
            let s = -i * (theta / 2.0).sin() * phase;
            m[0][0] = c + s;
            m[3][3] = c + s;
            m[1][1] = c;
            m[2][2] = c;
            m[1][2] = s;
            m[2][1] = s;
            let gate = TwoQubitGate::new(m).unwrap();
            for (a, b) in LayerKind::for_flat_index(j).bonds(n) {
                reference.apply_two_qubit_gate(&gate, a, b).unwrap();
            }
        }
        for (a, b) in state.amplitudes().iter().zip(reference.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn random_params_keep_unit_norm() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let flat: Vec<f64> = (0..8).map(|_| rng.random_range(-PI..PI)).collect();
            let params = AnsatzParams::from_flat(&flat).unwrap();
            let state = apply_ansatz(&params, rng.random_range(-1.0..2.5), 10).unwrap();
            assert!((state.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn init_strategies() {
        let z = init_params(3, InitStrategy::Zeros).unwrap();
        assert_eq!(z.to_flat(), vec![0.0; 6]);
        let a = init_params(3, InitStrategy::UniformRandom { seed: 5 }).unwrap();
        let b = init_params(3, InitStrategy::UniformRandom { seed: 5 }).unwrap();
        assert_eq!(a, b);
        assert!(a.to_flat().iter().all(|x| x.abs() <= RANDOM_INIT_HALF_WIDTH));
        assert!(init_params(0, InitStrategy::Zeros).is_err());
    }

    #[test]
    fn zero_init_cost_is_bell_pair_energy() {
        for n in [2, 4, 8, 12] {
            let params = init_params(2, InitStrategy::Zeros).unwrap();
            let state = apply_ansatz(&params, 1.0, n).unwrap();
            let h = PauliHamiltonian::isotropic(n, 1.0).unwrap();
            let e = exact_energy(&state, &h).unwrap().value;
            assert!((e + 3.0 * n as f64 / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_round_trip_and_errors() {
        let p = AnsatzParams::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(p.to_flat(), vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(AnsatzParams::from_flat(&p.to_flat()).unwrap(), p);
        assert!(AnsatzParams::from_flat(&[1.0]).is_err());
        assert!(AnsatzParams::new(vec![f64::NAN], vec![0.0]).is_err());
        assert!(apply_ansatz(&p, 1.0, 5).is_err());
    }
}
