//! Maximal functions over time grids and the weak-type inequalities
//!
//! `mu{ sup_t |M_t(T, beta) f| > lambda } <= (4C ||f||_p / lambda)^p`
//!
//! and, for discrete averages of a DS operator,
//! `mu{ sup_n M_n(T)|f| > lambda } <= (2 ||f||_p / lambda)^p`.
//!
//! The supremum is taken over a finite grid, which can only shrink the left
//! side, so a pass is sound.

use num_complex::Complex64;

use crate::dsops::{LinearOp, Semigroup};
use crate::error::{Error, Result};
use crate::grid::{self, Direction};
use crate::measure::{check_exponent, distribution_of, Field};
use crate::weights::Weight;

pub const DEFAULT_LAMBDA_COUNT: usize = 25;

/// Pointwise `max_{t in grid} |M_t(T, beta) f|`, stored as a real field.
pub fn maximal_function(semigroup: &Semigroup, beta: &Weight, f: &Field, times: &[f64]) -> Result<Field> {
    let direction = if times.len() > 1 && times[0] > times[1] { Direction::ToZero } else { Direction::ToInfinity };
    let steps = grid::validate(times, semigroup.step(), direction)?;
    let mut sorted = steps.clone();
    sorted.sort_unstable();
    let max_steps = *sorted.last().expect("validated grid is non-empty");

    let h = semigroup.step();
    let mut acc = vec![Complex64::new(0.0, 0.0); f.len()];
    let mut sup = vec![0.0f64; f.len()];
    let mut next = 0usize;
    for (k, v) in semigroup.orbit(f)?.take(max_steps as usize).enumerate() {
        let b = beta.eval_bounded(k as f64 * h)?;
        for (a, x) in acc.iter_mut().zip(&v) {
            *a += b * x;
        }
        let done = k as u64 + 1;
        if next < sorted.len() && sorted[next] == done {
            let inv = 1.0 / done as f64;
            for (s, a) in sup.iter_mut().zip(&acc) {
                let m = (a * inv).norm();
                if m > *s {
                    *s = m;
                }
            }
            next += 1;
        }
    }
    Ok(real_field(f, sup))
}

fn real_field(like: &Field, values: Vec<f64>) -> Field {
    Field::from_parts(like.space().clone(), values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
}

/// Pointwise `max_{1 <= n <= n_max} |(1/n) sum_{k<n} op^k g|`.
pub fn discrete_maximal(op: &LinearOp, g: &Field, n_max: u64) -> Result<Field> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut sup = vec![0.0f64; g.len()];
    let mut current = g.values().to_vec();
    for n in 1..=n_max {
        for (a, x) in acc.iter_mut().zip(&current) {
            *a += x;
        }
        let inv = 1.0 / n as f64;
        for (s, a) in sup.iter_mut().zip(&acc) {
            let m = (a * inv).norm();
            if m > *s {
                *s = m;
            }
        }
        if n < n_max {
            current = op.apply_values(&current);
        }
    }
    Ok(real_field(g, sup))
}

/// `count` log-spaced thresholds over `[norm_p * 1e-3, bound * sup * 1.1]`.
pub fn default_lambda_grid(norm_p: f64, bound: f64, sup: f64, count: usize) -> Vec<f64> {
    let lo = norm_p * 1e-3;
    let hi = bound * sup * 1.1;
    if !(lo > 0.0 && hi > lo) || count == 0 {
        return if hi > 0.0 { vec![hi] } else { vec![1.0] };
    }
    if count == 1 {
        return vec![hi];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (ratio * i as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakTypeRow {
    pub lambda: f64,
    /// `mu{M* > lambda}`
    pub measure: f64,
    /// `(K ||f||_p / lambda)^p` for the constant `K` of the inequality.
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

fn weak_type_rows(maximal: &[f64], weights: &[f64], constant: f64, norm_p: f64, p: f64, lambdas: &[f64]) -> Vec<WeakTypeRow> {
    lambdas
        .iter()
        .map(|&lambda| {
            let measure = distribution_of(maximal, weights, lambda);
            let bound = (constant * norm_p / lambda).powf(p);
            let ratio = if measure == 0.0 { 0.0 } else { measure / bound };
            WeakTypeRow { lambda, measure, bound, ratio, pass: measure <= bound }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalReport {
    pub maximal_field: Field,
    pub p: f64,
    pub bound_c: f64,
    pub norm_p: f64,
    /// Rows against `(4C ||f||_p / lambda)^p`.
    pub rows: Vec<WeakTypeRow>,
    /// For `beta = 1`: rows against `(2 ||f||_p / lambda)^p`.
    pub discrete_rows: Option<Vec<WeakTypeRow>>,
    pub pass: bool,
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter("thresholds must be positive and finite".into()));
    }
    Ok(())
}

pub fn weak_type_check(
    semigroup: &Semigroup,
    beta: &Weight,
    f: &Field,
    p: f64,
    times: &[f64],
    lambdas: Option<&[f64]>,
) -> Result<MaximalReport> {
    let p = check_exponent(p)?;
    if p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    let maximal = maximal_function(semigroup, beta, f, times)?;
    let norm_p = f.lp_norm(p)?;
    let c = beta.bound();
    let lambdas = match lambdas {
        Some(l) => l.to_vec(),
        None => default_lambda_grid(norm_p, c, f.lp_norm(f64::INFINITY)?, DEFAULT_LAMBDA_COUNT),
    };
    check_lambdas(&lambdas)?;
    let values: Vec<f64> = maximal.values().iter().map(|v| v.re).collect();
    let weights = f.space().weights();
    let rows = weak_type_rows(&values, weights, 4.0 * c, norm_p, p, &lambdas);
    let discrete_rows = beta.is_unit().then(|| weak_type_rows(&values, weights, 2.0, norm_p, p, &lambdas));
    let pass = rows.iter().all(|r| r.pass) && discrete_rows.as_ref().is_none_or(|d| d.iter().all(|r| r.pass));
    Ok(MaximalReport { maximal_field: maximal, p, bound_c: c, norm_p, rows, discrete_rows, pass })
}

/// Discrete maximal inequality for `sup_{n <= n_max} M_n(op)|f|`.
pub fn discrete_weak_type(op: &LinearOp, f: &Field, p: f64, n_max: u64, lambdas: Option<&[f64]>) -> Result<(Field, Vec<WeakTypeRow>)> {
    let p = check_exponent(p)?;
    if p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    let maximal = discrete_maximal(op, &f.modulus(), n_max)?;
    let norm_p = f.lp_norm(p)?;
    let lambdas = match lambdas {
        Some(l) => l.to_vec(),
        None => default_lambda_grid(norm_p, 1.0, f.lp_norm(f64::INFINITY)?, DEFAULT_LAMBDA_COUNT),
    };
    check_lambdas(&lambdas)?;
    let values: Vec<f64> = maximal.values().iter().map(|v| v.re).collect();
    let rows = weak_type_rows(&values, f.space().weights(), 2.0, norm_p, p, &lambdas);
    Ok((maximal, rows))
}
