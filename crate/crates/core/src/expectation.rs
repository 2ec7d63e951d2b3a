//! Energy estimators: the exact inner product and a shot-sampled estimate
//! built from the three axis measurement groups.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_ansatz, AnsatzParams};
use crate::error::{invalid, Result};
use crate::hamiltonian::{Axis, MeasurementGroup, PauliHamiltonian};
use crate::statevector::{StateVector, SAMPLING_NORM_TOLERANCE};

/// Default shots per measurement group.
pub const DEFAULT_SHOTS_PER_GROUP: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    /// Standard error of `value`; zero for the exact estimator.
    pub std_error: f64,
    pub shots_used: usize,
    /// Time spent in the estimator itself.
    #[serde(with = "secs")]
    pub wall_time: Duration,
    /// Time spent preparing the state; zero unless produced by [`cost_function`].
    #[serde(with = "secs", default)]
    pub state_prep_time: Duration,
}

impl EnergyEstimate {
    pub fn total_time(&self) -> Duration {
        self.wall_time + self.state_prep_time
    }
}

pub(crate) mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Ok(Duration::try_from_secs_f64(v).unwrap_or_default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotBudget {
    pub shots_per_group: usize,
    pub seed: u64,
}

impl ShotBudget {
    pub fn new(shots_per_group: usize, seed: u64) -> Result<Self> {
        if shots_per_group == 0 {
            return Err(invalid("shots per group must be at least 1"));
        }
        Ok(Self {
            shots_per_group,
            seed,
        })
    }

    /// Same shot count, different seed.
    pub fn reseeded(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum EstimatorMode {
    Exact,
    Sampled(ShotBudget),
}

/// `Re⟨ψ|H|ψ⟩`.
pub fn exact_energy(state: &StateVector, h: &PauliHamiltonian) -> Result<EnergyEstimate> {
    let start = Instant::now();
    state.ensure_normalized(SAMPLING_NORM_TOLERANCE)?;
    let h_psi = h.apply(state)?;
    let value = state.inner(&h_psi)?.re;
    Ok(EnergyEstimate {
        value,
        std_error: 0.0,
        shots_used: 0,
        wall_time: start.elapsed(),
        state_prep_time: Duration::ZERO,
    })
}

/// Rotates `state` so that a Z-basis measurement measures `axis` on every qubit.
fn rotate_into_basis(state: &mut StateVector, axis: Axis) -> Result<()> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| Complex64::new(x, 0.0);
    let rotation = match axis {
        Axis::Z => return Ok(()),
        // H
        Axis::X => [[r(h), r(h)], [r(h), r(-h)]],
        // H · S†
        Axis::Y => [
            [r(h), Complex64::new(0.0, -h)],
            [r(h), Complex64::new(0.0, h)],
        ],
    };
    for q in 0..state.n_qubits() {
        state.apply_single_qubit(&rotation, q)?;
    }
    Ok(())
}

/// Group energy for one measured bitstring: each term contributes `±coefficient`.
fn shot_value(group: &MeasurementGroup, outcome: usize) -> f64 {
    group
        .terms
        .iter()
        .map(|t| {
            let (a, b) = t.qubits();
            let parity = ((outcome >> a) ^ (outcome >> b)) & 1;
            if parity == 0 {
                t.coefficient
            } else {
                -t.coefficient
            }
        })
        .sum()
}

/// Exact expectation of each measurement group, computed from the rotated
/// state's outcome distribution.
pub fn group_expectations(state: &StateVector, h: &PauliHamiltonian) -> Result<Vec<(Axis, f64)>> {
    check_dims(state, h)?;
    h.measurement_groups()
        .iter()
        .map(|g| {
            let mut rotated = state.clone();
            rotate_into_basis(&mut rotated, g.axis)?;
            let mean = rotated
                .probabilities()
                .iter()
                .enumerate()
                .map(|(k, p)| p * shot_value(g, k))
                .sum();
            Ok((g.axis, mean))
        })
        .collect()
}

fn check_dims(state: &StateVector, h: &PauliHamiltonian) -> Result<()> {
    if state.n_qubits() != h.n_sites() {
        return Err(invalid(format!(
            "Hamiltonian on {} sites measured on a {}-qubit state",
            h.n_sites(),
            state.n_qubits()
        )));
    }
    Ok(())
}

/// Shot-sampled energy.
///
/// Each non-trivial axis group gets `shots_per_group` shots from its own
/// random stream `(seed, group index)`, so the estimate depends only on the
/// state, the Hamiltonian and the budget.
pub fn sampled_energy(state: &StateVector, h: &PauliHamiltonian, budget: ShotBudget) -> Result<EnergyEstimate> {
    let start = Instant::now();
    check_dims(state, h)?;
    if budget.shots_per_group == 0 {
        return Err(invalid("shots per group must be at least 1"));
    }
    state.ensure_normalized(SAMPLING_NORM_TOLERANCE)?;

    let m = budget.shots_per_group;
    let mut value = 0.0;
    let mut variance = 0.0;
    let mut shots_used = 0;
    for (stream, group) in h.measurement_groups().iter().enumerate() {
        if group.is_trivial() {
            continue;
        }
        let mut rotated = state.clone();
        rotate_into_basis(&mut rotated, group.axis)?;
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        rng.set_stream(stream as u64);
        let samples: Vec<f64> = rotated
            .sample_with(m, &mut rng)?
            .into_iter()
            .map(|k| shot_value(group, k))
            .collect();
        let mean = samples.iter().sum::<f64>() / m as f64;
        if m > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            variance += var / m as f64;
        }
        value += mean;
        shots_used += m;
    }
    Ok(EnergyEstimate {
        value,
        std_error: variance.sqrt(),
        shots_used,
        wall_time: start.elapsed(),
        state_prep_time: Duration::ZERO,
    })
}

pub fn estimate(state: &StateVector, h: &PauliHamiltonian, mode: EstimatorMode) -> Result<EnergyEstimate> {
    match mode {
        EstimatorMode::Exact => exact_energy(state, h),
        EstimatorMode::Sampled(budget) => sampled_energy(state, h, budget),
    }
}

/// Prepares the ansatz state and estimates its energy under `h`.
///
/// `delta` is the anisotropy threaded into the circuit; `h` is the cost
/// Hamiltonian and fixes the chain length.
pub fn evaluate_cost(
    params: &AnsatzParams,
    delta: f64,
    h: &PauliHamiltonian,
    mode: EstimatorMode,
) -> Result<EnergyEstimate> {
    let start = Instant::now();
    let state = apply_ansatz(params, delta, h.n_sites())?;
    let state_prep_time = start.elapsed();
    let mut est = estimate(&state, h, mode)?;
    est.state_prep_time = state_prep_time;
    Ok(est)
}

/// `F_p(γ, β)` for the open XXZ chain of `n_sites` with anisotropy `delta`
/// (the isotropic chain at `delta = 1`).
pub fn cost_function(
    params: &AnsatzParams,
    delta: f64,
    n_sites: usize,
    mode: EstimatorMode,
) -> Result<EnergyEstimate> {
    let h = PauliHamiltonian::xxz(n_sites, delta)?;
    evaluate_cost(params, delta, &h, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{init_params, InitStrategy};
    use crate::statevector::tests::random_state;

    fn sampled(state: &StateVector, h: &PauliHamiltonian, m: usize, seed: u64) -> EnergyEstimate {
        sampled_energy(state, h, ShotBudget::new(m, seed).unwrap()).unwrap()
    }

    #[test]
    fn bell_pair_energy() {
        let h = PauliHamiltonian::isotropic(8, 1.0).unwrap();
        let e = exact_energy(&StateVector::bell_pairs(8).unwrap(), &h).unwrap();
        assert!((e.value + 3.0).abs() < 1e-10);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.shots_used, 0);
    }

    #[test]
    fn all_up_energy() {
        for l in [2, 5, 9] {
            let h = PauliHamiltonian::isotropic(l, 1.0).unwrap();
            let e = exact_energy(&StateVector::basis_state(l, 0).unwrap(), &h).unwrap();
            assert!((e.value - (l - 1) as f64 / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn group_expectations_sum_to_energy() {
        for (seed, delta) in [(1, 1.0), (2, 0.0), (3, -0.6), (4, 2.5)] {
            let h = PauliHamiltonian::xxz(6, delta).unwrap();
            let s = random_state(6, seed);
            let total: f64 = group_expectations(&s, &h).unwrap().iter().map(|(_, e)| e).sum();
            let exact = exact_energy(&s, &h).unwrap().value;
            assert!((total - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_converges_to_exact() {
        let h = PauliHamiltonian::isotropic(4, 1.0).unwrap();
        let s = random_state(4, 12);
        let exact = exact_energy(&s, &h).unwrap().value;
        let est = sampled(&s, &h, 1_000_000, 3);
        assert!(est.std_error < 1e-3);
        assert!((est.value - exact).abs() < 3.0 * est.std_error);
        assert_eq!(est.shots_used, 3_000_000);
    }

    #[test]
    fn z_eigenstate_has_zero_variance() {
        // |0101⟩ in site order: sites 2 and 4 down.
        let s = StateVector::basis_state(4, 0b1010).unwrap();
        let z_chain = crate::hamiltonian::tests::with_axes_zeroed(
            &PauliHamiltonian::isotropic(4, 1.0).unwrap(),
            &[Axis::X, Axis::Y],
        );
        let est = sampled(&s, &z_chain, 500, 9);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.value, -0.75);
        assert_eq!(est.shots_used, 500);

        let full = sampled(&s, &PauliHamiltonian::isotropic(4, 1.0).unwrap(), 500, 9);
        assert!(full.std_error > 0.0);
    }

    #[test]
    fn sampled_is_deterministic_per_seed() {
        let params = init_params(2, InitStrategy::UniformRandom { seed: 1 }).unwrap();
        let budget = ShotBudget::new(256, 77).unwrap();
        let a = cost_function(&params, 0.5, 6, EstimatorMode::Sampled(budget)).unwrap();
        let b = cost_function(&params, 0.5, 6, EstimatorMode::Sampled(budget)).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.std_error, b.std_error);
    }

    #[test]
    fn zero_params_cost() {
        let params = init_params(4, InitStrategy::Zeros).unwrap();
        let e = cost_function(&params, 1.0, 8, EstimatorMode::Exact).unwrap();
        assert!((e.value + 3.0).abs() < 1e-10);
    }

    #[test]
    fn xy_model_skips_z_group() {
        let h = PauliHamiltonian::xxz(4, 0.0).unwrap();
        let s = random_state(4, 3);
        assert_eq!(sampled(&s, &h, 100, 1).shots_used, 200);
    }

    #[test]
    fn unbiased_over_many_seeds() {
        let h = PauliHamiltonian::isotropic(6, 1.0).unwrap();
        let s = random_state(6, 40);
        let exact = exact_energy(&s, &h).unwrap().value;
        let runs: Vec<_> = (0..200).map(|seed| sampled(&s, &h, 256, 1000 + seed)).collect();
        let mean = runs.iter().map(|e| e.value).sum::<f64>() / runs.len() as f64;
        let pooled = (runs.iter().map(|e| e.std_error.powi(2)).sum::<f64>() / runs.len() as f64).sqrt()
            / (runs.len() as f64).sqrt();
        assert!((mean - exact).abs() < 4.0 * pooled, "{mean} vs {exact} (pooled {pooled})");
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = PauliHamiltonian::isotropic(4, 1.0).unwrap();
        assert!(ShotBudget::new(0, 1).is_err());
        let bad = ShotBudget {
            shots_per_group: 0,
            seed: 1,
        };
        let s = random_state(4, 1);
        assert!(sampled_energy(&s, &h, bad).is_err());
        assert!(exact_energy(&random_state(5, 1), &h).is_err());
        let mut unnormalized = StateVector::bell_pairs(4).unwrap();
        unnormalized.amplitudes_mut()[0b0101] *= 2.0;
        assert!(sampled_energy(&unnormalized, &h, ShotBudget::new(10, 1).unwrap()).is_err());
    }
}
