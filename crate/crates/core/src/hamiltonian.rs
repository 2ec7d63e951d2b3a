//! Nearest-neighbour spin-chain Hamiltonians as lists of two-site Pauli terms.
//!
//! Each `S^α_i S^α_{i+1}` is stored as `(J_α / 4) σ^α_i σ^α_{i+1}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::statevector::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// `coefficient · σ^axis_{site_a} σ^axis_{site_b}` with 1-based sites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub axis: Axis,
    pub site_a: usize,
    pub site_b: usize,
}

impl PauliTerm {
    pub(crate) fn qubits(&self) -> (usize, usize) {
        (self.site_a - 1, self.site_b - 1)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Isotropic,
    Xxz,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

/// Provenance record written alongside run outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianDescription {
    pub model: Model,
    #[serde(rename = "L")]
    pub n_sites: usize,
    pub couplings: Couplings,
    pub boundary: Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliHamiltonian {
    model: Model,
    n_sites: usize,
    couplings: Couplings,
    boundary: Boundary,
    terms: Vec<PauliTerm>,
}

/// One measurement setting: every term shares the same Pauli axis.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementGroup {
    pub axis: Axis,
    pub terms: Vec<PauliTerm>,
}

impl MeasurementGroup {
    /// True when all coefficients vanish and the group can be skipped.
    pub fn is_trivial(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient == 0.0)
    }
}

impl PauliHamiltonian {
    fn chain(model: Model, n_sites: usize, couplings: Couplings) -> Result<Self> {
        if n_sites < 2 {
            return Err(invalid(format!("chain needs at least 2 sites, got {n_sites}")));
        }
        let Couplings { jx, jy, jz } = couplings;
        if ![jx, jy, jz].iter().all(|j| j.is_finite()) {
            return Err(invalid("couplings must be finite"));
        }
        let mut h = Self {
            model,
            n_sites,
            couplings,
            boundary: Boundary::Open,
            terms: Vec::with_capacity(3 * (n_sites - 1)),
        };
        for site in 1..n_sites {
            h.push_bond(site, site + 1);
        }
        Ok(h)
    }

    fn push_bond(&mut self, site_a: usize, site_b: usize) {
        let Couplings { jx, jy, jz } = self.couplings;
        for (axis, j) in [(Axis::X, jx), (Axis::Y, jy), (Axis::Z, jz)] {
            self.terms.push(PauliTerm {
                coefficient: j / 4.0,
                axis,
                site_a,
                site_b,
            });
        }
    }

    /// Open chain `J Σ S_i·S_{i+1}`.
    pub fn isotropic(n_sites: usize, j: f64) -> Result<Self> {
        Self::chain(
            Model::Isotropic,
            n_sites,
            Couplings {
                jx: j,
                jy: j,
                jz: j,
            },
        )
    }

    /// Open XXZ chain with `J_x = J_y = 1` and `J_z = delta`.
    pub fn xxz(n_sites: usize, delta: f64) -> Result<Self> {
        Self::chain(
            Model::Xxz,
            n_sites,
            Couplings {
                jx: 1.0,
                jy: 1.0,
                jz: delta,
            },
        )
    }

    /// Adds the wrap bond `(L, 1)` for periodic boundaries. Chains of two sites
    /// are left unchanged, since the wrap would duplicate the only bond.
    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        if boundary == self.boundary {
            return self;
        }
        match boundary {
            Boundary::Periodic => {
                if self.n_sites > 2 {
                    self.push_bond(self.n_sites, 1);
                }
            }
            Boundary::Open => self.terms.retain(|t| t.site_b == t.site_a + 1),
        }
        self.boundary = boundary;
        self
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn couplings(&self) -> Couplings {
        self.couplings
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn describe(&self) -> HamiltonianDescription {
        HamiltonianDescription {
            model: self.model,
            n_sites: self.n_sites,
            couplings: self.couplings,
            boundary: self.boundary,
        }
    }

    fn with_terms(&self, terms: Vec<PauliTerm>) -> Self {
        Self {
            terms,
            ..self.clone()
        }
    }

    /// Splits an open chain of even length into `(H1, H2)`.
    ///
    /// `H2` holds the Bell-pair bonds (1,2), (3,4), ...; `H1` holds the bonds
    /// (2,3), (4,5), ... between pairs.
    pub fn split_even_odd(&self) -> Result<(Self, Self)> {
        if self.n_sites % 2 != 0 {
            return Err(invalid(format!(
                "even/odd bond split needs an even chain length, got {}",
                self.n_sites
            )));
        }
        if self.boundary != Boundary::Open {
            return Err(invalid("even/odd bond split is defined for open chains only"));
        }
        let (h2, h1): (Vec<_>, Vec<_>) = self.terms.iter().partition(|t| t.site_a % 2 == 1);
        Ok((self.with_terms(h1), self.with_terms(h2)))
    }

    /// Terms grouped by Pauli axis (X, Y, Z). Same-axis terms commute.
    pub fn measurement_groups(&self) -> Vec<MeasurementGroup> {
        Axis::ALL
            .iter()
            .map(|&axis| MeasurementGroup {
                axis,
                terms: self.terms.iter().filter(|t| t.axis == axis).copied().collect(),
            })
            .collect()
    }

    /// Per-bond `(qubit_a, qubit_b, [cx, cy, cz])`, merging terms on the same bond.
    pub(crate) fn bonds(&self) -> Vec<(usize, usize, [f64; 3])> {
        let mut bonds: Vec<(usize, usize, [f64; 3])> = Vec::new();
        for t in &self.terms {
            let (a, b) = t.qubits();
            let (a, b) = (a.min(b), a.max(b));
            match bonds.iter_mut().find(|(x, y, _)| *x == a && *y == b) {
                Some((_, _, c)) => c[t.axis.index()] += t.coefficient,
                None => {
                    let mut c = [0.0; 3];
                    c[t.axis.index()] = t.coefficient;
                    bonds.push((a, b, c));
                }
            }
        }
        bonds
    }

    /// Matrix-free `H·v` (the result is not normalized).
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.n_qubits() != self.n_sites {
            return Err(invalid(format!(
                "Hamiltonian on {} sites applied to a {}-qubit state",
                self.n_sites,
                v.n_qubits()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); v.dim()];
        self.apply_slice(v.amplitudes(), &mut out);
        StateVector::from_amplitudes(out)
    }

    /// `out = H·input` on raw amplitudes. The Hamiltonian is real in the
    /// computational basis, so the same kernel serves real and complex vectors.
    pub(crate) fn apply_slice<T>(&self, input: &[T], out: &mut [T])
    where
        T: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    {
        debug_assert_eq!(input.len(), out.len());
        out.iter_mut().for_each(|x| *x = T::default());
        for (a, b, [cx, cy, cz]) in self.bonds() {
            let mask = (1usize << a) | (1usize << b);
            // Flipping both spins: amplitude cx - cy when aligned, cx + cy when anti-aligned.
            let aligned_flip = cx - cy;
            let anti_flip = cx + cy;
            for (k, &x) in input.iter().enumerate() {
                let aligned = ((k >> a) ^ (k >> b)) & 1 == 0;
                if aligned {
                    out[k] += x * cz;
                    if aligned_flip != 0.0 {
                        out[k ^ mask] += x * aligned_flip;
                    }
                } else {
                    out[k] += x * -cz;
                    if anti_flip != 0.0 {
                        out[k ^ mask] += x * anti_flip;
                    }
                }
            }
        }
    }
}

/// Free-function aliases mirroring the constructor names.
pub fn build_isotropic(n_sites: usize, j: f64) -> Result<PauliHamiltonian> {
    PauliHamiltonian::isotropic(n_sites, j)
}

pub fn build_xxz(n_sites: usize, delta: f64) -> Result<PauliHamiltonian> {
    PauliHamiltonian::xxz(n_sites, delta)
}

pub fn apply_hamiltonian(h: &PauliHamiltonian, v: &StateVector) -> Result<StateVector> {
    h.apply(v)
}
