//! Weighted ergodic averages `M_t(T, beta) f = (1/t) int_0^t beta(s) T_s f ds`,
//! discretised by the left-endpoint rule on the step grid:
//!
//! `M_{nh} f = (1/n) sum_{k<n} beta(kh) T_{kh} f`.
//!
//! With `|beta| <= C` this makes `C^{-1} M_t` an exact convex combination of
//! DS operators.

use num_complex::Complex64;

use crate::dsops::{KernelMatrix, Semigroup, VERIFY_TOL};
use crate::error::{Error, Result};
use crate::grid::{self, Direction};
use crate::measure::{check_exponent, Field};
use crate::weights::Weight;

pub fn ergodic_average(semigroup: &Semigroup, beta: &Weight, f: &Field, t: f64) -> Result<Field> {
    let n = semigroup.steps_for(t)?;
    if n == 0 {
        return Err(Error::NotGridAligned { time: t, step: semigroup.step() });
    }
    let h = semigroup.step();
    let mut acc = vec![Complex64::new(0.0, 0.0); f.len()];
    for (k, v) in semigroup.orbit(f)?.take(n as usize).enumerate() {
        let b = beta.eval_bounded(k as f64 * h)?;
        for (a, x) in acc.iter_mut().zip(&v) {
            *a += b * x;
        }
    }
    let inv = 1.0 / n as f64;
    Ok(Field::from_parts(f.space().clone(), acc.into_iter().map(|a| a * inv).collect()))
}

/// Averages `M_t f` for every `t` of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageProfile {
    pub times: Vec<f64>,
    pub steps: Vec<u64>,
    pub fields: Vec<Field>,
    pub bound: f64,
    pub p: f64,
    /// `||f||_p` of the averaged field.
    pub source_norm: f64,
}

impl AverageProfile {
    /// Largest `||M_t f||_p - C ||f||_p` over the grid; non-positive (up to
    /// 1e-9) whenever `T` is DS.
    pub fn max_contraction_excess(&self) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for field in &self.fields {
            worst = worst.max(field.lp_norm(self.p)? - self.bound * self.source_norm);
        }
        Ok(worst)
    }

    pub fn satisfies_contraction(&self) -> Result<bool> {
        Ok(self.max_contraction_excess()? <= VERIFY_TOL)
    }

    pub fn last(&self) -> Option<&Field> {
        self.fields.last()
    }

    /// `(t, ||M_t f - reference||_p)`.
    pub fn norm_table(&self, reference: &Field) -> Result<Vec<(f64, f64)>> {
        self.times
            .iter()
            .zip(&self.fields)
            .map(|(&t, m)| Ok((t, m.sub(reference)?.lp_norm(self.p)?)))
            .collect()
    }
}

/// Builds a profile with a single running sum, extended step by step; the
/// grid may be monotone in either direction and is returned in input order.
pub fn average_profile(semigroup: &Semigroup, beta: &Weight, f: &Field, times: &[f64], p: f64) -> Result<AverageProfile> {
    check_exponent(p)?;
    let direction = if times.len() > 1 && times[0] > times[1] { Direction::ToZero } else { Direction::ToInfinity };
    let steps = grid::validate(times, semigroup.step(), direction)?;
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.sort_by_key(|&i| steps[i]);
    let max_steps = steps[order[order.len() - 1]];

    let h = semigroup.step();
    let mut fields: Vec<Option<Field>> = vec![None; steps.len()];
    let mut acc = vec![Complex64::new(0.0, 0.0); f.len()];
    let mut next = 0usize;
    for (k, v) in semigroup.orbit(f)?.take(max_steps as usize).enumerate() {
        let b = beta.eval_bounded(k as f64 * h)?;
        for (a, x) in acc.iter_mut().zip(&v) {
            *a += b * x;
        }
        let done = k as u64 + 1;
        while next < order.len() && steps[order[next]] == done {
            let inv = 1.0 / done as f64;
            let values = acc.iter().map(|a| a * inv).collect();
            fields[order[next]] = Some(Field::from_parts(f.space().clone(), values));
            next += 1;
        }
    }
    Ok(AverageProfile {
        times: times.to_vec(),
        steps,
        fields: fields.into_iter().map(|x| x.expect("every grid point is reached")).collect(),
        bound: beta.bound(),
        p,
        source_norm: f.lp_norm(p)?,
    })
}

/// `(1/n) sum_{k<n} K^k g`.
pub fn discrete_average_oracle(kernel: &KernelMatrix, g: &Field, n: u64) -> Result<Field> {
    if n == 0 {
        return Err(Error::InvalidParameter("average length must be at least 1".into()));
    }
    if kernel.dim() != g.len() {
        return Err(Error::InvalidKernel("kernel dimension does not match the field".into()));
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut current = g.values().to_vec();
    for k in 0..n {
        for (a, x) in acc.iter_mut().zip(&current) {
            *a += x;
        }
        if k + 1 < n {
            current = kernel.apply_values(&current);
        }
    }
    let inv = 1.0 / n as f64;
    Ok(Field::from_parts(g.space().clone(), acc.into_iter().map(|a| a * inv).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    /// `max_x (|M_{n/m}(T, beta) f| - 2C M_n(|T_{1/m}|) g)(x)`.
    pub max_violation: f64,
    /// `min_x RHS / LHS` over cells where the left side is nonzero.
    pub min_slack_ratio: f64,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub pass: bool,
}

/// Checks the pointwise reduction of a continuous-time weighted average to
/// a discrete average of the linear modulus:
///
/// `|M_{n/m}(T, beta) f| <= 2C M_n(|T_{1/m}|) g`, `g = m int_0^{1/m} |T_s f| ds`,
///
/// with `g` discretised by the same left-endpoint rule as the average.
pub fn reduction_check(semigroup: &Semigroup, beta: &Weight, f: &Field, n: u64, m: u64) -> Result<ReductionReport> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be positive".into()));
    }
    let q = semigroup.steps_for(1.0 / m as f64)?;
    if q == 0 {
        return Err(Error::NotGridAligned { time: 1.0 / m as f64, step: semigroup.step() });
    }
    let average = ergodic_average(semigroup, beta, f, (n * q) as f64 * semigroup.step())?;
    let lhs = average.moduli();

    let mut g = vec![0.0; f.len()];
    for v in semigroup.orbit(f)?.take(q as usize) {
        for (gi, x) in g.iter_mut().zip(&v) {
            *gi += x.norm();
        }
    }
    let g: Vec<Complex64> = g.into_iter().map(|x| Complex64::new(x / q as f64, 0.0)).collect();

    let modulus = semigroup.operator_at_steps(q).modulus();
    let mut acc = vec![0.0; f.len()];
    let mut current = g;
    for k in 0..n {
        for (a, x) in acc.iter_mut().zip(&current) {
            *a += x.re;
        }
        if k + 1 < n {
            current = modulus.apply_values(&current);
        }
    }
    let scale = 2.0 * beta.bound() / n as f64;
    let rhs: Vec<f64> = acc.into_iter().map(|a| scale * a).collect();

    let max_violation = lhs.iter().zip(&rhs).map(|(l, r)| l - r).fold(f64::NEG_INFINITY, f64::max);
    let min_slack_ratio = lhs
        .iter()
        .zip(&rhs)
        .filter(|(l, _)| **l > 0.0)
        .map(|(l, r)| r / l)
        .fold(f64::INFINITY, f64::min);
    Ok(ReductionReport { max_violation, min_slack_ratio, lhs, rhs, pass: max_violation <= VERIFY_TOL })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingReport {
    /// `||M_t(M_{t0} g) - M_{t0} g||_p`
    pub deviation: f64,
    /// `(2t / t0) ||g||_p`
    pub bound: f64,
    pub pass: bool,
}

/// For `f = M_{t0}(T) g` (unweighted), checks
/// `||M_t f - f||_p <= (2t/t0) ||g||_p`.
pub fn smoothing_bound_check(semigroup: &Semigroup, g: &Field, t0: f64, t: f64, p: f64) -> Result<SmoothingReport> {
    check_exponent(p)?;
    let one = Weight::one();
    let f = ergodic_average(semigroup, &one, g, t0)?;
    let mt = ergodic_average(semigroup, &one, &f, t)?;
    let deviation = mt.sub(&f)?.lp_norm(p)?;
    let bound = 2.0 * t / t0 * g.lp_norm(p)?;
    Ok(SmoothingReport { deviation, bound, pass: deviation <= bound + VERIFY_TOL })
}

/// `||M_t f - M_t' f||_p` where `M_t'` uses the grid refined by two; an
/// estimate of the left-endpoint quadrature bias.
pub fn quadrature_bias(semigroup: &Semigroup, beta: &Weight, f: &Field, t: f64, p: f64) -> Result<f64> {
    let coarse = ergodic_average(semigroup, beta, f, t)?;
    let fine = ergodic_average(&semigroup.refined(2)?, beta, f, t)?;
    coarse.sub(&fine)?.lp_norm(p)
}
