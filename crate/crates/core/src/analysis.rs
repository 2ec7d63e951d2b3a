//! Diagnostics of prepared states: spin correlations, entanglement entropy
//! profiles, and the coefficient of determination for energy sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::statevector::{StateVector, SAMPLING_NORM_TOLERANCE};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationKind {
    /// `⟨S^z_i S^z_j⟩`
    #[default]
    Zz,
    /// `⟨S_i · S_j⟩`
    FullDot,
    /// `⟨S^x_i S^x_j + S^y_i S^y_j⟩`
    Transverse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    /// 1-based reference site.
    pub reference_site: usize,
    pub kind: CorrelationKind,
    /// `(r, C(r))` for `r = 1..=L - reference_site`.
    pub values: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    /// `(cut, entropy in nats)` for cuts `1..L`.
    pub values: Vec<(usize, f64)>,
}

impl EntropyProfile {
    pub fn entropy(&self, cut: usize) -> Option<f64> {
        self.values.iter().find(|(c, _)| *c == cut).map(|&(_, s)| s)
    }

    /// True when every odd cut lies strictly above its even neighbours.
    pub fn is_dimerized(&self) -> bool {
        self.values.iter().all(|&(cut, s)| {
            if cut % 2 == 0 {
                return true;
            }
            [cut.wrapping_sub(1), cut + 1]
                .iter()
                .filter_map(|&c| self.entropy(c))
                .all(|even| s > even)
        })
    }
}

/// `⟨S^z_a S^z_b⟩` for 0-based qubits.
fn zz(state: &StateVector, a: usize, b: usize) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, amp)| {
            let same = ((k >> a) ^ (k >> b)) & 1 == 0;
            let p = amp.norm_sqr();
            if same {
                0.25 * p
            } else {
                -0.25 * p
            }
        })
        .sum()
}

/// `⟨S^x_a S^x_b + S^y_a S^y_b⟩` for 0-based qubits.
fn flip_flop(state: &StateVector, a: usize, b: usize) -> f64 {
    let amps = state.amplitudes();
    let mask = (1usize << a) | (1usize << b);
    // (XX + YY)/4 moves |..0..1..⟩ ↔ |..1..0..⟩ with amplitude 1/2.
    amps.iter()
        .enumerate()
        .filter(|(k, _)| ((k >> a) ^ (k >> b)) & 1 == 1)
        .map(|(k, amp)| 0.5 * (amps[k ^ mask].conj() * amp).re)
        .sum()
}

pub fn correlation_profile(
    state: &StateVector,
    reference_site: usize,
    kind: CorrelationKind,
) -> Result<CorrelationProfile> {
    let n = state.n_qubits();
    if reference_site == 0 || reference_site >= n {
        return Err(invalid(format!(
            "reference site {reference_site} outside 1..{}",
            n - 1
        )));
    }
    state.ensure_normalized(SAMPLING_NORM_TOLERANCE)?;
    let a = reference_site - 1;
    let values = (1..=n - reference_site)
        .map(|r| {
            let b = a + r;
            let c = match kind {
                CorrelationKind::Zz => zz(state, a, b),
                CorrelationKind::FullDot => zz(state, a, b) + flip_flop(state, a, b),
                CorrelationKind::Transverse => flip_flop(state, a, b),
            };
            (r, c)
        })
        .collect();
    Ok(CorrelationProfile {
        reference_site,
        kind,
        values,
    })
}

/// `C(r) = ⟨S^z_ref S^z_{ref+r}⟩`.
pub fn correlation_function(state: &StateVector, reference_site: usize) -> Result<CorrelationProfile> {
    correlation_profile(state, reference_site, CorrelationKind::Zz)
}

pub fn entropy_profile(state: &StateVector) -> Result<EntropyProfile> {
    let values = (1..state.n_qubits())
        .map(|cut| Ok((cut, state.subsystem_entropy(cut)?)))
        .collect::<Result<_>>()?;
    Ok(EntropyProfile { values })
}

/// Coefficient of determination `1 - SS_res / SS_tot`, with `reference` as
/// ground truth.
pub fn r_squared(predicted: &[f64], reference: &[f64]) -> Result<f64> {
    if predicted.len() != reference.len() {
        return Err(invalid(format!(
            "length mismatch: {} predictions, {} references",
            predicted.len(),
            reference.len()
        )));
    }
    if reference.len() < 2 {
        return Err(invalid("R² needs at least two points"));
    }
    let mean = reference.iter().sum::<f64>() / reference.len() as f64;
    let ss_tot: f64 = reference.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Undefined("R² of a constant reference".into()));
    }
    let ss_res: f64 = predicted
        .iter()
        .zip(reference)
        .map(|(p, y)| (y - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayClass {
    Exponential,
    PowerLaw,
}

/// Least-squares comparison of `ln|C|` against `r` (exponential) and
/// against `ln r` (power law).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponential_residual: f64,
    pub power_law_residual: f64,
    /// `1/ξ` from `|C| ~ e^{-r/ξ}`.
    pub exponential_rate: f64,
    /// `η` from `|C| ~ r^{-η}`.
    pub power_law_exponent: f64,
    pub preferred: DecayClass,
    pub points: usize,
}

/// Slope and sum of squared residuals of the straight-line fit `y ≈ a + b x`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (my + slope * (a - mx))).powi(2))
        .sum();
    (slope, residual)
}

/// Magnitudes below this are treated as exact zeros and left out of the fit.
const FIT_FLOOR: f64 = 1e-14;

/// Classifies the decay of `|C(r)|` for `r <= max_distance` (all distances
/// when `None`).
pub fn classify_decay(profile: &CorrelationProfile, max_distance: Option<usize>) -> Result<DecayFit> {
    let (r, ln_c): (Vec<f64>, Vec<f64>) = profile
        .values
        .iter()
        .filter(|(r, c)| max_distance.is_none_or(|m| *r <= m) && c.abs() > FIT_FLOOR)
        .map(|&(r, c)| (r as f64, c.abs().ln()))
        .unzip();
    if r.len() < 3 {
        return Err(invalid(format!(
            "decay fit needs at least 3 non-zero correlations, got {}",
            r.len()
        )));
    }
    let ln_r: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let (exp_slope, exponential_residual) = line_fit(&r, &ln_c);
    let (pow_slope, power_law_residual) = line_fit(&ln_r, &ln_c);
    let preferred = if exponential_residual < power_law_residual {
        DecayClass::Exponential
    } else {
        DecayClass::PowerLaw
    };
    Ok(DecayFit {
        exponential_residual,
        power_law_residual,
        exponential_rate: -exp_slope,
        power_law_exponent: -pow_slope,
        preferred,
        points: r.len(),
    })
}
