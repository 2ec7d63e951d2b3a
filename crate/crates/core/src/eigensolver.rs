//! Exact-diagonalization reference energies.
//!
//! Two independent routes to the ground state of a [`PauliHamiltonian`]:
//! a dense eigendecomposition (block-diagonal in total `S^z` when the chain
//! conserves it) and a matrix-free Lanczos iteration with full
//! reorthogonalization and explicit restarts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{Axis, PauliHamiltonian};
use crate::statevector::StateVector;

/// Largest chain the dense path will materialize.
pub const DENSE_MAX_SITES: usize = 12;
/// Largest chain the Lanczos path accepts.
pub const LANCZOS_MAX_SITES: usize = 24;

pub const DEFAULT_KRYLOV_DIM: usize = 200;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Restart cap for [`lanczos_ground_state`].
pub const MAX_RESTARTS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub e0: f64,
    pub ground_vector: Option<StateVector>,
    pub method: SpectrumMethod,
    /// `‖H v - e0 v‖` for the returned vector.
    pub residual_norm: f64,
}

/// Applies one Pauli term to basis state `k`: returns `(target, amplitude)`.
fn term_action(axis: Axis, a: usize, b: usize, coefficient: f64, k: usize) -> (usize, Complex64) {
    let (ba, bb) = ((k >> a) & 1, (k >> b) & 1);
    let mask = (1 << a) | (1 << b);
    let phase = |bit: usize| {
        // Y|0⟩ = i|1⟩, Y|1⟩ = -i|0⟩
        if bit == 0 {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(0.0, -1.0)
        }
    };
    match axis {
        Axis::X => (k ^ mask, Complex64::new(coefficient, 0.0)),
        Axis::Y => (k ^ mask, phase(ba) * phase(bb) * coefficient),
        Axis::Z => {
            let sign = if ba == bb { 1.0 } else { -1.0 };
            (k, Complex64::new(sign * coefficient, 0.0))
        }
    }
}

fn conserves_magnetization(h: &PauliHamiltonian) -> bool {
    let c = h.couplings();
    c.jx == c.jy
}

/// Dense ground state. Chains that conserve total `S^z` are diagonalized
/// sector by sector; the lowest eigenvalue over all sectors is returned.
pub fn dense_ground_state(h: &PauliHamiltonian) -> Result<SpectrumResult> {
    let n = h.n_sites();
    if n > DENSE_MAX_SITES {
        return Err(Error::Capacity(format!(
            "dense diagonalization is limited to {DENSE_MAX_SITES} sites, got {n}"
        )));
    }
    let dim = 1usize << n;
    let sectors: Vec<Vec<usize>> = if conserves_magnetization(h) {
        (0..=n)
            .map(|m| (0..dim).filter(|k| k.count_ones() as usize == m).collect())
            .collect()
    } else {
        vec![(0..dim).collect()]
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut position = vec![usize::MAX; dim];
    for basis in &sectors {
        for (i, &k) in basis.iter().enumerate() {
            position[k] = i;
        }
        let size = basis.len();
        let mut block = DMatrix::<f64>::zeros(size, size);
        // XX and YY each flip two spins; only their sum stays in the sector.
        let mut column: Vec<(usize, f64)> = Vec::new();
        for (col, &k) in basis.iter().enumerate() {
            column.clear();
            for t in h.terms() {
                let (a, b) = (t.site_a - 1, t.site_b - 1);
                let (target, amp) = term_action(t.axis, a, b, t.coefficient, k);
                match column.iter_mut().find(|(j, _)| *j == target) {
                    Some(entry) => entry.1 += amp.re,
                    None => column.push((target, amp.re)),
                }
            }
            for &(target, amp) in &column {
                match position[target] {
                    usize::MAX if amp.abs() > 1e-14 => {
                        return Err(invalid("Hamiltonian leaves the magnetization sector"));
                    }
                    usize::MAX => {}
                    row => block[(row, col)] += amp,
                }
            }
        }
        let eig = SymmetricEigen::new(block);
        let (idx, &e) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty sector");
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            let mut full = vec![0.0; dim];
            for (i, &k) in basis.iter().enumerate() {
                full[k] = eig.eigenvectors[(i, idx)];
            }
            best = Some((e, full));
        }
        for &k in basis {
            position[k] = usize::MAX;
        }
    }

    let (e0, vector) = best.expect("at least one sector");
    let residual_norm = residual(h, &vector, e0);
    Ok(SpectrumResult {
        e0,
        ground_vector: Some(real_to_state(vector)?),
        method: SpectrumMethod::Dense,
        residual_norm,
    })
}

fn real_to_state(v: Vec<f64>) -> Result<StateVector> {
    let mut s = StateVector::from_amplitudes(v.into_iter().map(|x| Complex64::new(x, 0.0)).collect())?;
    s.normalize()?;
    Ok(s)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual(h: &PauliHamiltonian, v: &[f64], e: f64) -> f64 {
    let mut hv = vec![0.0; v.len()];
    h.apply_slice(v, &mut hv);
    let scale = norm(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - e * b).powi(2))
        .sum::<f64>()
        .sqrt()
        / scale
}

/// Lowest Ritz pair of the tridiagonal matrix `(alpha, beta)`.
fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, DVector<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (theta, eig.eigenvectors.column(idx).into_owned())
}

/// Restarted Lanczos with full reorthogonalization.
///
/// Each cycle builds at most `krylov_dim` basis vectors, then restarts from
/// the lowest Ritz vector until `‖Hv - θv‖ < tol · max(1, |θ|)`.
pub fn lanczos_ground_state(
    h: &PauliHamiltonian,
    krylov_dim: usize,
    tol: f64,
    seed: u64,
) -> Result<SpectrumResult> {
    let n = h.n_sites();
    if n > LANCZOS_MAX_SITES {
        return Err(Error::Capacity(format!(
            "Lanczos is limited to {LANCZOS_MAX_SITES} sites, got {n}"
        )));
    }
    if krylov_dim < 2 {
        return Err(invalid("Krylov dimension must be at least 2"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let dim = h.dim();
    let krylov_dim = krylov_dim.min(dim);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut best = (f64::INFINITY, f64::INFINITY);

    for _restart in 0..MAX_RESTARTS {
        let s = norm(&start);
        start.iter_mut().for_each(|x| *x /= s);
        let mut basis: Vec<Vec<f64>> = vec![start];
        let mut alpha = Vec::with_capacity(krylov_dim);
        let mut beta = Vec::with_capacity(krylov_dim);
        let mut w = vec![0.0; dim];

        loop {
            let j = basis.len() - 1;
            h.apply_slice(&basis[j], &mut w);
            let a = dot(&basis[j], &w);
            alpha.push(a);
            // Two passes of classical Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for q in &basis {
                    let overlap = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= overlap * y);
                }
            }
            let b = norm(&w);
            let size = alpha.len();
            let exhausted = b < 1e-12 * a.abs().max(1.0) || size >= krylov_dim;
            // Residual estimate of the lowest Ritz pair: |b · y_last|.
            if exhausted || size % 10 == 0 {
                let (theta, y) = lowest_ritz(&alpha, &beta);
                let estimate = (b * y[size - 1]).abs();
                if exhausted || estimate < 0.1 * tol * theta.abs().max(1.0) {
                    let mut ritz = vec![0.0; dim];
                    for (coef, q) in y.iter().zip(&basis) {
                        ritz.iter_mut().zip(q).for_each(|(r, x)| *r += coef * x);
                    }
                    let rn = norm(&ritz);
                    ritz.iter_mut().for_each(|x| *x /= rn);
                    let res = residual(h, &ritz, theta);
                    if res < best.1 {
                        best = (theta, res);
                    }
                    if res < tol * theta.abs().max(1.0) {
                        return Ok(SpectrumResult {
                            e0: theta,
                            ground_vector: Some(real_to_state(ritz)?),
                            method: SpectrumMethod::Lanczos,
                            residual_norm: res,
                        });
                    }
                    if exhausted {
                        start = ritz;
                        break;
                    }
                }
            }
            beta.push(b);
            let next: Vec<f64> = w.iter().map(|x| x / b).collect();
            basis.push(next);
        }
    }
    Err(Error::Convergence {
        restarts: MAX_RESTARTS,
        best_e0: best.0,
        residual: best.1,
    })
}

/// Memory allowed for the Krylov basis when [`ground_state`] picks the dimension.
pub const KRYLOV_MEMORY_BUDGET: usize = 512 << 20;

/// Krylov dimension that keeps the basis inside [`KRYLOV_MEMORY_BUDGET`].
pub fn krylov_dim_for(n_sites: usize) -> usize {
    let per_vector = (1usize << n_sites.min(40)) * std::mem::size_of::<f64>();
    (KRYLOV_MEMORY_BUDGET / per_vector).clamp(20, DEFAULT_KRYLOV_DIM)
}

/// Dense when the chain fits, Lanczos otherwise.
pub fn ground_state(h: &PauliHamiltonian, seed: u64) -> Result<SpectrumResult> {
    if h.n_sites() <= DENSE_MAX_SITES {
        dense_ground_state(h)
    } else {
        lanczos_ground_state(h, krylov_dim_for(h.n_sites()), DEFAULT_TOLERANCE, seed)
    }
}
