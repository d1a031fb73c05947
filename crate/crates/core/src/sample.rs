//! Seeded random inputs for sweeps and property checks.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsops::KernelMatrix;
use crate::measure::{Field, MeasureSpace};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weights `k/8` with `k` uniform in `4..=16`; sums of a few of them are
/// exact in floating point, which keeps oracle comparisons exact.
pub fn dyadic_weights(rng: &mut SampleRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(4..=16) as f64 / 8.0).collect()
}

/// Field with entries uniform in the unit square (or `[-1, 1]` if real),
/// each cell zero with probability `sparsity`. At least one cell is nonzero.
pub fn random_field(rng: &mut SampleRng, space: &Arc<MeasureSpace>, complex: bool, sparsity: f64) -> Field {
    let n = space.len();
    let mut values: Vec<Complex64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < sparsity {
                return Complex64::new(0.0, 0.0);
            }
            let re = rng.random_range(-1.0..1.0);
            let im = if complex { rng.random_range(-1.0..1.0) } else { 0.0 };
            Complex64::new(re, im)
        })
        .collect();
    if values.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        values[rng.random_range(0..n)] = Complex64::new(1.0, 0.0);
    }
    Field::new(space.clone(), values).expect("finite values of matching length")
}

fn normalise_to_ds(entries: DMatrix<Complex64>, weights: &[f64], slack: f64) -> KernelMatrix {
    let raw = KernelMatrix::new(entries).expect("finite entries");
    let cert = raw.certificate(weights);
    let worst = cert.max_row_sum.max(cert.max_column_sum);
    if worst == 0.0 {
        return raw;
    }
    raw.scaled(Complex64::new(slack / worst, 0.0))
}

/// Nonnegative kernel with row sums and weighted column sums at most 1;
/// `density` is the chance that an entry is nonzero.
pub fn random_substochastic(rng: &mut SampleRng, weights: &[f64], density: f64) -> KernelMatrix {
    let n = weights.len();
    let entries = DMatrix::from_fn(n, n, |_, _| {
        let v = if rng.random::<f64>() < density { rng.random::<f64>() } else { 0.0 };
        Complex64::new(v, 0.0)
    });
    let slack = rng.random_range(0.7..=1.0);
    normalise_to_ds(entries, weights, slack)
}

/// Complex kernel whose modulus is DS.
pub fn random_complex_ds(rng: &mut SampleRng, weights: &[f64], density: f64) -> KernelMatrix {
    let n = weights.len();
    let entries = DMatrix::from_fn(n, n, |_, _| {
        if rng.random::<f64>() < density {
            Complex64::from_polar(rng.random::<f64>(), rng.random_range(0.0..std::f64::consts::TAU))
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let slack = rng.random_range(0.7..=1.0);
    normalise_to_ds(entries, weights, slack)
}

/// Generator with nonnegative off-diagonal rates and a diagonal dominating
/// both the row sums and the weighted column sums, so `e^{sQ}` is DS.
pub fn random_generator(rng: &mut SampleRng, weights: &[f64], density: f64, rate: f64) -> DMatrix<f64> {
    let n = weights.len();
    let mut q = DMatrix::from_fn(n, n, |i, j| if i != j && rng.random::<f64>() < density { rate * rng.random::<f64>() } else { 0.0 });
    for j in 0..n {
        let row: f64 = (0..n).filter(|&k| k != j).map(|k| q[(j, k)]).sum();
        let col: f64 = (0..n).filter(|&i| i != j).map(|i| q[(i, j)] * weights[i] / weights[j]).sum();
        q[(j, j)] = -row.max(col) - rate * 0.1 * rng.random::<f64>();
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsops::check_generator;

    #[test]
    fn seeded_draws_repeat() {
        let space = MeasureSpace::counting(0, 8).unwrap();
        let a = random_field(&mut rng(7), &space, true, 0.3);
        let b = random_field(&mut rng(7), &space, true, 0.3);
        assert_eq!(a, b);
        assert!(!a.is_zero());
    }

    #[test]
    fn kernels_are_ds() {
        let weights = [1.0, 0.5, 2.0, 1.5, 1.0];
        let mut r = rng(3);
        for _ in 0..20 {
            assert!(random_substochastic(&mut r, &weights, 0.6).certificate(&weights).is_ds());
            assert!(random_complex_ds(&mut r, &weights, 0.6).certificate(&weights).is_ds());
            check_generator(&random_generator(&mut r, &weights, 0.5, 2.0), &weights).unwrap();
        }
    }
}
