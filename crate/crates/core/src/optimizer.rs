//! Classical outer loop: Nelder-Mead, SPSA and gradient descent driven by
//! parameter-shift gradients, each recording a per-iteration trace.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{apply_layer, apply_layers_from, pauli_pair_rotation, AnsatzParams, LayerKind};
use crate::error::{invalid, Error, Result};
use crate::expectation::{estimate, evaluate_cost, EnergyEstimate, EstimatorMode};
use crate::hamiltonian::{Axis, PauliHamiltonian};
use crate::statevector::StateVector;

/// Something the optimizers can minimize.
pub trait Objective {
    fn evaluate(&mut self, x: &[f64]) -> Result<EnergyEstimate>;

    /// Defaults to central finite differences with step `1e-5`.
    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        central_differences(self, x, 1e-5)
    }
}

pub fn central_differences<O: Objective + ?Sized>(obj: &mut O, x: &[f64], step: f64) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = obj.evaluate(&probe)?.value;
            probe[i] = x[i] - step;
            let down = obj.evaluate(&probe)?.value;
            probe[i] = x[i];
            Ok((up - down) / (2.0 * step))
        })
        .collect()
}

/// Deterministic scalar function wrapped as an [`Objective`].
pub struct FnObjective<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn evaluate(&mut self, x: &[f64]) -> Result<EnergyEstimate> {
        Ok(EnergyEstimate {
            value: (self.0)(x),
            std_error: 0.0,
            shots_used: 0,
            wall_time: Default::default(),
            state_prep_time: Default::default(),
        })
    }
}

/// splitmix64 finalizer, used to derive independent seeds from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The variational energy `F_p` as an optimizer objective.
///
/// In sampled mode every evaluation draws fresh shots from a seed derived
/// from the budget seed and a running evaluation counter, so a run is
/// reproducible while successive evaluations stay independent.
#[derive(Clone, Debug)]
pub struct VqeObjective {
    h: PauliHamiltonian,
    delta: f64,
    mode: EstimatorMode,
    evaluations: u64,
}

impl VqeObjective {
    pub fn new(h: PauliHamiltonian, delta: f64, mode: EstimatorMode) -> Self {
        Self {
            h,
            delta,
            mode,
            evaluations: 0,
        }
    }

    pub fn hamiltonian(&self) -> &PauliHamiltonian {
        &self.h
    }

    fn next_mode(&mut self) -> EstimatorMode {
        let i = self.evaluations;
        self.evaluations += 1;
        match self.mode {
            EstimatorMode::Exact => EstimatorMode::Exact,
            EstimatorMode::Sampled(b) => EstimatorMode::Sampled(b.reseeded(derive_seed(b.seed, i))),
        }
    }
}

impl Objective for VqeObjective {
    fn evaluate(&mut self, x: &[f64]) -> Result<EnergyEstimate> {
        let params = AnsatzParams::from_flat(x)?;
        let mode = self.next_mode();
        evaluate_cost(&params, self.delta, &self.h, mode)
    }

    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let params = AnsatzParams::from_flat(x)?;
        let h = self.h.clone();
        let delta = self.delta;
        shift_rule(&params, delta, &h, || self.next_mode())
    }
}

/// Exact derivative of `F_p` with respect to every layer angle.
///
/// The bond generator `S^xS^x + S^yS^y + Δ S^zS^z` splits into three
/// commuting Pauli products `σσ/4`, each with eigenvalues ±1, so every
/// layer exponential factors into single-Pauli rotations and the two-term
/// shift rule `dE/dφ = E(φ + π/4) - E(φ - π/4)` applies to each factor.
pub fn parameter_shift_gradient(
    params: &AnsatzParams,
    delta: f64,
    n_sites: usize,
    mode: EstimatorMode,
) -> Result<Vec<f64>> {
    let h = PauliHamiltonian::xxz(n_sites, delta)?;
    let mut counter = 0u64;
    shift_rule(params, delta, &h, || {
        let i = counter;
        counter += 1;
        match mode {
            EstimatorMode::Exact => EstimatorMode::Exact,
            EstimatorMode::Sampled(b) => EstimatorMode::Sampled(b.reseeded(derive_seed(b.seed, i))),
        }
    })
}

fn shift_rule(
    params: &AnsatzParams,
    delta: f64,
    h: &PauliHamiltonian,
    mut next_mode: impl FnMut() -> EstimatorMode,
) -> Result<Vec<f64>> {
    params.validate()?;
    let n = h.n_sites();
    let flat = params.to_flat();
    let mut prefix = StateVector::bell_pairs(n)?;
    let factors = [(Axis::X, 0.25), (Axis::Y, 0.25), (Axis::Z, delta / 4.0)];
    let mut grad = Vec::with_capacity(flat.len());
    for (j, &theta) in flat.iter().enumerate() {
        let kind = LayerKind::for_flat_index(j);
        apply_layer(&mut prefix, kind, theta, delta)?;
        let mut g = 0.0;
        for (a, b) in kind.bonds(n) {
            for &(axis, weight) in &factors {
                if weight == 0.0 {
                    continue;
                }
                let mut shifted = [0.0; 2];
                for (slot, shift) in shifted.iter_mut().zip([FRAC_PI_4, -FRAC_PI_4]) {
                    let mut state = prefix.clone();
                    state.apply_two_qubit_gate(&pauli_pair_rotation(axis, shift), a, b)?;
                    apply_layers_from(&mut state, &flat, j + 1, delta)?;
                    *slot = estimate(&state, h, next_mode())?.value;
                }
                g += weight * (shifted[0] - shifted[1]);
            }
        }
        grad.push(g);
    }
    Ok(grad)
}

/// Central finite differences of the exact cost, one layer angle at a time.
pub fn finite_difference_gradient(params: &AnsatzParams, delta: f64, n_sites: usize, step: f64) -> Result<Vec<f64>> {
    let h = PauliHamiltonian::xxz(n_sites, delta)?;
    let mut obj = VqeObjective::new(h, delta, EstimatorMode::Exact);
    central_differences(&mut obj, &params.to_flat(), step)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    NelderMead,
    Spsa,
    ParameterShiftGd,
    ParameterShiftBfgs,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nelder-mead" => Ok(Method::NelderMead),
            "spsa" => Ok(Method::Spsa),
            "parameter-shift-gd" => Ok(Method::ParameterShiftGd),
            "parameter-shift-bfgs" => Ok(Method::ParameterShiftBfgs),
            other => Err(invalid(format!("unknown optimizer method '{other}'"))),
        }
    }
}

/// SPSA gain sequences `a_k = a / (k + 1 + A)^α`, `c_k = c / (k + 1)^γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpsaGains {
    /// Step numerator. `None` calibrates it so the first step moves each
    /// parameter by about `target_step`.
    pub a: Option<f64>,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Stability constant `A`.
    pub stability: f64,
    pub target_step: f64,
    /// Gradient estimates averaged during calibration.
    pub calibration_samples: usize,
    /// Any single coordinate update is capped at `max_step / dim`, so a gain
    /// calibrated on a flat start cannot throw the iterate away once
    /// gradients grow. The energy effect of a step with every coordinate
    /// moved grows with the dimension, hence the scaling.
    #[serde(default = "default_max_step")]
    pub max_step: f64,
}

fn default_max_step() -> f64 {
    SpsaGains::default().max_step
}

impl Default for SpsaGains {
    fn default() -> Self {
        Self {
            a: None,
            c: 0.1,
            alpha: 0.602,
            gamma: 0.101,
            stability: 20.0,
            target_step: 0.15,
            calibration_samples: 5,
            max_step: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_iters: usize,
    /// Relative tolerance on best-energy improvement.
    pub ftol: f64,
    /// Iterations over which the best-energy improvement is measured.
    pub stall_window: usize,
    pub seed: u64,
    /// Initial Nelder-Mead simplex edge length (radians).
    pub simplex_scale: f64,
    pub spsa: SpsaGains,
    /// Initial gradient-descent step; adapted by backtracking.
    pub learning_rate: f64,
}

impl OptimizerConfig {
    pub const DEFAULT_MAX_ITERS: usize = 500;
    pub const DEFAULT_STALL_WINDOW: usize = 10;
    pub const EXACT_FTOL: f64 = 1e-6;
    pub const SAMPLED_FTOL: f64 = 1e-3;

    pub fn new(method: Method) -> Self {
        let ftol = match method {
            Method::Spsa => Self::SAMPLED_FTOL,
            _ => Self::EXACT_FTOL,
        };
        Self {
            method,
            max_iters: Self::DEFAULT_MAX_ITERS,
            ftol,
            stall_window: Self::DEFAULT_STALL_WINDOW,
            seed: 0,
            simplex_scale: 0.5,
            spsa: SpsaGains::default(),
            learning_rate: 0.1,
        }
    }

    /// Quasi-Newton on exact gradients for the exact estimator, SPSA for sampled estimates.
    pub fn default_for(mode: &EstimatorMode) -> Self {
        match mode {
            EstimatorMode::Exact => Self::new(Method::ParameterShiftBfgs),
            EstimatorMode::Sampled(_) => Self::new(Method::Spsa),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.stall_window == 0 {
            return Err(invalid("iteration cap and stall window must be positive"));
        }
        if !(self.ftol > 0.0) {
            return Err(invalid("ftol must be positive"));
        }
        if !(self.simplex_scale > 0.0 && self.learning_rate > 0.0 && self.spsa.c > 0.0 && self.spsa.max_step > 0.0) {
            return Err(invalid("step sizes must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Tolerance,
    MaxIter,
    Stall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub params: Vec<f64>,
    pub energy: f64,
    pub std_error: f64,
    pub shots: usize,
    pub best_energy: f64,
    pub evaluations: usize,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub stop_reason: Option<StopReason>,
    pub evaluations: usize,
    pub total_shots: usize,
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub params: Vec<f64>,
    pub energy: f64,
    pub trace: OptimizationTrace,
}

/// Bookkeeping shared by all methods: counts evaluations, tracks the best
/// point, and decides when to stop.
struct Recorder<'a, O: Objective + ?Sized> {
    obj: &'a mut O,
    config: &'a OptimizerConfig,
    start: Instant,
    trace: OptimizationTrace,
    best: (f64, Vec<f64>),
}

impl<'a, O: Objective + ?Sized> Recorder<'a, O> {
    fn new(obj: &'a mut O, config: &'a OptimizerConfig, x0: &[f64]) -> Self {
        Self {
            obj,
            config,
            start: Instant::now(),
            trace: OptimizationTrace::default(),
            best: (f64::INFINITY, x0.to_vec()),
        }
    }

    fn eval(&mut self, x: &[f64]) -> Result<EnergyEstimate> {
        let e = self.obj.evaluate(x)?;
        self.trace.evaluations += 1;
        self.trace.total_shots += e.shots_used;
        if !e.value.is_finite() {
            return Err(Error::NonFiniteCost {
                iteration: self.trace.iterations.len(),
                trace: Box::new(self.trace.clone()),
            });
        }
        Ok(e)
    }

    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.obj.gradient(x)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCost {
                iteration: self.trace.iterations.len(),
                trace: Box::new(self.trace.clone()),
            });
        }
        Ok(g)
    }

    fn record(&mut self, x: &[f64], energy: f64, std_error: f64, shots: usize) {
        if energy < self.best.0 {
            self.best = (energy, x.to_vec());
        }
        let iteration = self.trace.iterations.len();
        self.trace.iterations.push(IterationRecord {
            iteration,
            params: x.to_vec(),
            energy,
            std_error,
            shots,
            best_energy: self.best.0,
            evaluations: self.trace.evaluations,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        });
    }

    /// Relative improvement of the best energy over the last `w` iterations is below ftol.
    fn stalled(&self, w: usize) -> bool {
        let its = &self.trace.iterations;
        if its.len() <= w {
            return false;
        }
        let then = its[its.len() - 1 - w].best_energy;
        let now = its[its.len() - 1].best_energy;
        (then - now) <= self.config.ftol * now.abs().max(1e-12)
    }

    fn done(&self) -> bool {
        self.trace.iterations.len() >= self.config.max_iters
    }

    /// Mean energy over the last `w` iterations no longer improves on the
    /// mean over the `w` before it by more than ftol (relative).
    fn stalled_on_average(&self, w: usize) -> bool {
        let its = &self.trace.iterations;
        if its.len() < 2 * w {
            return false;
        }
        let mean = |r: &[IterationRecord]| r.iter().map(|r| r.energy).sum::<f64>() / r.len() as f64;
        let recent = mean(&its[its.len() - w..]);
        let before = mean(&its[its.len() - 2 * w..its.len() - w]);
        (before - recent) <= self.config.ftol * recent.abs().max(1e-12)
    }

    /// Ends the run returning the mean of the last `w` iterates (at most the
    /// second half of the run) and their mean energy rather than the best
    /// recorded point. Noise-free runs return the final iterate.
    fn finish_averaged(self, reason: StopReason, w: usize) -> Minimum {
        let its = &self.trace.iterations;
        let noisy = its.iter().any(|r| r.std_error > 0.0);
        let w = if noisy { w.min(its.len() / 2).max(1) } else { 1 };
        let tail = &its[its.len().saturating_sub(w)..];
        let k = tail.len() as f64;
        let dim = tail[0].params.len();
        let params = (0..dim).map(|i| tail.iter().map(|r| r.params[i]).sum::<f64>() / k).collect();
        let energy = tail.iter().map(|r| r.energy).sum::<f64>() / k;
        let mut m = self.finish(reason);
        m.params = params;
        m.energy = energy;
        m
    }

    fn finish(mut self, reason: StopReason) -> Minimum {
        self.trace.converged = reason != StopReason::MaxIter;
        self.trace.stop_reason = Some(reason);
        Minimum {
            params: self.best.1,
            energy: self.best.0,
            trace: self.trace,
        }
    }
}

/// Minimizes `obj` from `initial`. Returns the best point seen and the trace.
pub fn minimize<O: Objective + ?Sized>(config: &OptimizerConfig, obj: &mut O, initial: &[f64]) -> Result<Minimum> {
    config.validate()?;
    if initial.is_empty() {
        return Err(invalid("empty parameter vector"));
    }
    match config.method {
        Method::NelderMead => nelder_mead(config, obj, initial),
        Method::Spsa => spsa(config, obj, initial),
        Method::ParameterShiftGd => descent(config, obj, initial, false),
        Method::ParameterShiftBfgs => descent(config, obj, initial, true),
    }
}

/// Nelder-Mead with dimension-adapted coefficients. A collapsed simplex is
/// rebuilt around the best vertex at half the previous edge length for as
/// long as that keeps improving the best energy. One stall-window unit is a
/// sweep of `dim` simplex moves.
fn nelder_mead<O: Objective + ?Sized>(config: &OptimizerConfig, obj: &mut O, x0: &[f64]) -> Result<Minimum> {
    const MAX_REBUILDS: usize = 8;
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut rec = Recorder::new(obj, config, x0);

    let build = |rec: &mut Recorder<O>, origin: &[f64], f_origin: f64, scale: f64| -> Result<Vec<(Vec<f64>, f64)>> {
        let mut simplex = Vec::with_capacity(n + 1);
        simplex.push((origin.to_vec(), f_origin));
        for i in 0..n {
            let mut x = origin.to_vec();
            x[i] += scale;
            let f = rec.eval(&x)?.value;
            simplex.push((x, f));
        }
        Ok(simplex)
    };
    let f0 = rec.eval(x0)?.value;
    let mut scale = config.simplex_scale;
    let mut simplex = build(&mut rec, x0, f0, scale)?;
    let mut rebuilds = 0;
    let mut best_at_rebuild = f0;

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best_x, best_f) = simplex[0].clone();
        rec.record(&best_x, best_f, 0.0, 0);

        let worst_f = simplex[n].1;
        if (worst_f - best_f).abs() <= config.ftol * best_f.abs().max(1e-12) {
            let gained = best_at_rebuild - best_f > config.ftol * best_f.abs().max(1e-12);
            if !gained || rebuilds == MAX_REBUILDS {
                return Ok(rec.finish(StopReason::Tolerance));
            }
            rebuilds += 1;
            best_at_rebuild = best_f;
            scale *= 0.5;
            simplex = build(&mut rec, &best_x, best_f, scale)?;
            continue;
        }
        if rec.stalled(config.stall_window * n) {
            return Ok(rec.finish(StopReason::Stall));
        }
        if rec.done() {
            return Ok(rec.finish(StopReason::MaxIter));
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect()
        };
        let worst = simplex[n].0.clone();
        let second_worst_f = simplex[n - 1].1;

        let xr = along(alpha, &worst);
        let fr = rec.eval(&xr)?.value;
        if fr < best_f {
            let xe = along(alpha * gamma, &worst);
            let fe = rec.eval(&xe)?.value;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst_f {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst_f {
            let xc = along(alpha * rho, &worst);
            let fc = rec.eval(&xc)?.value;
            (xc, fc)
        } else {
            let xc = along(-rho, &worst);
            let fc = rec.eval(&xc)?.value;
            (xc, fc)
        };
        if fc < fr.min(worst_f) {
            simplex[n] = (xc, fc);
            continue;
        }
        // Shrink towards the best vertex.
        for k in 1..=n {
            let x: Vec<f64> = best_x
                .iter()
                .zip(&simplex[k].0)
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            let f = rec.eval(&x)?.value;
            simplex[k] = (x, f);
        }
    }
}

/// SPSA. Noisy estimates make the best-so-far point unreliable, so stalling
/// is judged on windowed means over `stall_window * dim` iterations and,
/// under shot noise, the returned point is the average of the iterates in
/// the last window.
fn spsa<O: Objective + ?Sized>(config: &OptimizerConfig, obj: &mut O, x0: &[f64]) -> Result<Minimum> {
    let gains = config.spsa;
    let n = x0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rec = Recorder::new(obj, config, x0);
    let mut x = x0.to_vec();

    let perturbation = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
    };

    // One two-sided estimate; returns (gradient, mean value, std error of mean, shots).
    let estimate_at = |rec: &mut Recorder<O>, x: &[f64], ck: f64, delta: &[f64]| -> Result<(Vec<f64>, f64, f64, usize)> {
        let plus: Vec<f64> = x.iter().zip(delta).map(|(v, d)| v + ck * d).collect();
        let minus: Vec<f64> = x.iter().zip(delta).map(|(v, d)| v - ck * d).collect();
        let yp = rec.eval(&plus)?;
        let ym = rec.eval(&minus)?;
        let diff = (yp.value - ym.value) / (2.0 * ck);
        let g = delta.iter().map(|d| diff / d).collect();
        let mean = 0.5 * (yp.value + ym.value);
        let se = 0.5 * (yp.std_error.powi(2) + ym.std_error.powi(2)).sqrt();
        Ok((g, mean, se, yp.shots_used + ym.shots_used))
    };

    let a = match gains.a {
        Some(a) => a,
        None => {
            let samples = gains.calibration_samples.max(1);
            let mut mean_abs = 0.0;
            for _ in 0..samples {
                let d = perturbation(&mut rng);
                let (g, ..) = estimate_at(&mut rec, &x, gains.c, &d)?;
                mean_abs += g.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
            }
            mean_abs /= samples as f64;
            if mean_abs > 0.0 {
                gains.target_step * (gains.stability + 1.0).powf(gains.alpha) / mean_abs
            } else {
                gains.target_step
            }
        }
    };

    let window = config.stall_window * n;
    for k in 0.. {
        let ak = a / (k as f64 + 1.0 + gains.stability).powf(gains.alpha);
        let ck = gains.c / (k as f64 + 1.0).powf(gains.gamma);
        let d = perturbation(&mut rng);
        let (g, mean, se, shots) = estimate_at(&mut rec, &x, ck, &d)?;
        rec.record(&x, mean, se, shots);
        if rec.stalled_on_average(window) {
            return Ok(rec.finish_averaged(StopReason::Stall, window));
        }
        if rec.done() {
            return Ok(rec.finish_averaged(StopReason::MaxIter, window));
        }
        let cap = gains.max_step / n as f64;
        x.iter_mut().zip(&g).for_each(|(v, gi)| *v -= (ak * gi).clamp(-cap, cap));
    }
    unreachable!()
}

/// Armijo line-search descent along `-g` or, with `quasi_newton`, along the
/// BFGS direction `-H g` built from successive gradients.
fn descent<O: Objective + ?Sized>(
    config: &OptimizerConfig,
    obj: &mut O,
    x0: &[f64],
    quasi_newton: bool,
) -> Result<Minimum> {
    let n = x0.len();
    let mut rec = Recorder::new(obj, config, x0);
    let mut x = DVector::from_column_slice(x0);
    let mut fx = rec.eval(x.as_slice())?;
    let mut g = DVector::from_vec(rec.gradient(x.as_slice())?);
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut step = config.learning_rate;
    loop {
        rec.record(x.as_slice(), fx.value, fx.std_error, fx.shots_used);
        if rec.stalled(config.stall_window) {
            return Ok(rec.finish(StopReason::Stall));
        }
        if rec.done() {
            return Ok(rec.finish(StopReason::MaxIter));
        }
        if g.norm_squared() == 0.0 {
            return Ok(rec.finish(StopReason::Tolerance));
        }
        let mut direction = if quasi_newton { -(&hinv * &g) } else { -g.clone() };
        let mut slope = g.dot(&direction);
        if slope >= 0.0 {
            hinv.fill_with_identity();
            direction = -g.clone();
            slope = -g.norm_squared();
        }
        // A successful first try lets the gradient step grow.
        let mut t = if quasi_newton { 1.0 } else { 2.0 * step };
        let accepted = loop {
            let trial = &x + t * &direction;
            let ft = rec.eval(trial.as_slice())?;
            if ft.value <= fx.value + 1e-4 * t * slope {
                break Some((trial, ft));
            }
            t *= 0.5;
            if t < 1e-12 {
                break None;
            }
        };
        let Some((trial, ft)) = accepted else {
            return Ok(rec.finish(StopReason::Tolerance));
        };
        let improvement = fx.value - ft.value;
        let g_new = DVector::from_vec(rec.gradient(trial.as_slice())?);
        if quasi_newton {
            let s = &trial - &x;
            let y = &g_new - &g;
            let sy = s.dot(&y);
            if sy > 1e-14 {
                let rho = 1.0 / sy;
                let hy = &hinv * &y;
                let yhy = y.dot(&hy);
                // H+ = (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ, expanded.
                hinv += (rho * rho * yhy + rho) * &s * s.transpose()
                    - rho * (&hy * s.transpose() + &s * hy.transpose());
            }
        }
        step = t;
        x = trial;
        fx = ft;
        g = g_new;
        if improvement <= config.ftol * 1e-3 * fx.value.abs().max(1e-12) {
            rec.record(x.as_slice(), fx.value, fx.std_error, fx.shots_used);
            return Ok(rec.finish(StopReason::Tolerance));
        }
    }
}
