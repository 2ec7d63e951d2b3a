//! Reference routines shared by unit tests. Deliberately naive.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::statevector::StateVector;

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let norm: f64 = a.iter().map(|x| x.norm()).sum();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a * Complex64::new(0.5f64.powi(squarings as i32), 0.0);
    let n = a.nrows();
    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..30 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `|⟨a|b⟩|`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).unwrap().norm()
}
