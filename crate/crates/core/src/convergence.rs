//! Almost-uniform convergence diagnostics.
//!
//! Egorov's existential set becomes a constructive one: cells are removed in
//! decreasing order of their worst tail deviation until the measure budget
//! is spent. A report that passes is consistent with a.u. convergence on the
//! sampled grid; it is not a proof.

use num_complex::Complex64;

use crate::averages::{average_profile, ergodic_average};
use crate::dsops::Semigroup;
use crate::error::{Error, Result};
use crate::grid::{self, Direction};
use crate::measure::{same_space, Field, SubsetMask};
use crate::par;
use crate::weights::{mean_deviation, TrigPolynomial, Weight};

/// Default threshold for the final tail supremum.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;
/// Residual allowed in the transfer bound.
pub const TRANSFER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EgorovRow {
    pub t0: f64,
    /// Supremum over the tail starting at `t0` of the deviation on the kept set.
    pub tail_sup: f64,
    pub kept_measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgorovReport {
    pub epsilon: f64,
    pub direction: Direction,
    pub mask: SubsetMask,
    pub removed_measure: f64,
    /// Rows in the order of the supplied `t0` grid.
    pub rows: Vec<EgorovRow>,
    pub threshold: f64,
    /// Tail supremum at the most extreme `t0` (largest for `ToInfinity`,
    /// smallest for `ToZero`).
    pub final_tail_sup: f64,
    pub verdict: bool,
}

impl EgorovReport {
    /// Kept-set tail supremum at the weakest `t0` (the one the mask was
    /// optimised for).
    pub fn base_tail_sup(&self) -> f64 {
        let weakest = match self.direction {
            Direction::ToInfinity => self.rows.iter().min_by(|a, b| a.t0.total_cmp(&b.t0)),
            Direction::ToZero => self.rows.iter().max_by(|a, b| a.t0.total_cmp(&b.t0)),
        };
        weakest.map_or(0.0, |r| r.tail_sup)
    }
}

fn in_tail(t: f64, t0: f64, direction: Direction) -> bool {
    match direction {
        Direction::ToInfinity => t >= t0,
        Direction::ToZero => t <= t0,
    }
}

/// Sorts times from the extreme end inward, so that every tail is a prefix.
fn tail_order(times: &[f64], direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    match direction {
        Direction::ToInfinity => order.sort_by(|&a, &b| times[b].total_cmp(&times[a])),
        Direction::ToZero => order.sort_by(|&a, &b| times[a].total_cmp(&times[b])),
    }
    order
}

/// Number of prefix entries of `sorted_times` inside the tail of `t0`.
fn prefix_len(sorted_times: &[f64], t0: f64, direction: Direction) -> usize {
    sorted_times.iter().take_while(|&&t| in_tail(t, t0, direction)).count()
}

/// `cum[x][i]`: per-cell running tail statistic over the first `i + 1`
/// entries of the tail order.
type CellProfiles = Vec<Vec<f64>>;

fn deviation_profiles(fields: &[&Field], limit: &Field) -> CellProfiles {
    let n = limit.len();
    par::map_range(n, |x| {
        let mut run = 0.0f64;
        fields
            .iter()
            .map(|f| {
                run = run.max((f.values()[x] - limit.values()[x]).norm());
                run
            })
            .collect()
    })
}

fn diameter_profiles(fields: &[&Field], cells: usize) -> CellProfiles {
    par::map_range(cells, |x| {
        let zs: Vec<Complex64> = fields.iter().map(|f| f.values()[x]).collect();
        let mut diam = 0.0f64;
        (0..zs.len())
            .map(|i| {
                for j in 0..i {
                    diam = diam.max((zs[i] - zs[j]).norm());
                }
                diam
            })
            .collect()
    })
}

/// Greedy optimum: remove cells in decreasing `score` (ties by index) while
/// the removed weight stays within `epsilon`.
pub fn greedy_mask(scores: &[f64], weights: &[f64], epsilon: f64) -> (Vec<bool>, f64) {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep = vec![true; scores.len()];
    let mut removed = 0.0;
    for i in order {
        if scores[i] <= 0.0 || removed + weights[i] > epsilon {
            break;
        }
        removed += weights[i];
        keep[i] = false;
    }
    (keep, removed)
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    profiles: &CellProfiles,
    sorted_times: &[f64],
    space: &std::sync::Arc<crate::measure::MeasureSpace>,
    epsilon: f64,
    t0_grid: &[f64],
    direction: Direction,
    threshold: f64,
    min_tail: usize,
) -> Result<EgorovReport> {
    let weights = space.weights();
    let weakest = match direction {
        Direction::ToInfinity => t0_grid.iter().copied().fold(f64::INFINITY, f64::min),
        Direction::ToZero => t0_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let base_len = prefix_len(sorted_times, weakest, direction);
    let scores: Vec<f64> = profiles
        .iter()
        .map(|p| if base_len == 0 { 0.0 } else { p[base_len - 1] })
        .collect();
    let (keep, removed_measure) = greedy_mask(&scores, weights, epsilon);
    let mask = SubsetMask::new(space.clone(), keep)?;
    let kept_measure = mask.measure();

    let rows: Vec<EgorovRow> = t0_grid
        .iter()
        .map(|&t0| {
            let len = prefix_len(sorted_times, t0, direction);
            let tail_sup = if len == 0 {
                0.0
            } else {
                profiles
                    .iter()
                    .zip(mask.included())
                    .filter(|(_, k)| **k)
                    .map(|(p, _)| p[len - 1])
                    .fold(0.0, f64::max)
            };
            EgorovRow { t0, tail_sup, kept_measure }
        })
        .collect();
    // The verdict reads the deepest tail holding at least `min_tail` times.
    let deep = rows.iter().filter(|r| prefix_len(sorted_times, r.t0, direction) >= min_tail);
    let extreme = match direction {
        Direction::ToInfinity => deep.max_by(|a, b| a.t0.total_cmp(&b.t0)),
        Direction::ToZero => deep.min_by(|a, b| a.t0.total_cmp(&b.t0)),
    };
    let final_tail_sup = extreme.map_or(f64::INFINITY, |r| r.tail_sup);
    Ok(EgorovReport {
        epsilon,
        direction,
        mask,
        removed_measure,
        rows,
        threshold,
        final_tail_sup,
        verdict: final_tail_sup <= threshold,
    })
}

fn check_egorov_inputs(fields: &[(f64, Field)], epsilon: f64, t0_grid: &[f64]) -> Result<()> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!("measure budget must be positive, got {epsilon}")));
    }
    if fields.is_empty() || t0_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let space = fields[0].1.space();
    if fields.iter().any(|(_, f)| !same_space(space, f.space())) {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// Egorov set for convergence of `f_t` to a known `limit` along the tail.
pub fn egorov_search(
    fields: &[(f64, Field)],
    limit: &Field,
    epsilon: f64,
    t0_grid: &[f64],
    direction: Direction,
    threshold: f64,
) -> Result<EgorovReport> {
    check_egorov_inputs(fields, epsilon, t0_grid)?;
    if !same_space(fields[0].1.space(), limit.space()) {
        return Err(Error::SpaceMismatch);
    }
    let times: Vec<f64> = fields.iter().map(|(t, _)| *t).collect();
    let order = tail_order(&times, direction);
    let sorted_times: Vec<f64> = order.iter().map(|&i| times[i]).collect();
    let sorted_fields: Vec<&Field> = order.iter().map(|&i| &fields[i].1).collect();
    let profiles = deviation_profiles(&sorted_fields, limit);
    build_report(&profiles, &sorted_times, limit.space(), epsilon, t0_grid, direction, threshold, 1)
}

/// Egorov set for the a.u. Cauchy property: tail statistic is
/// `sup_{t', t'' in tail} |f_t' - f_t''|`. A one-point tail has diameter 0,
/// so the verdict uses the deepest tail with two or more times.
pub fn egorov_cauchy(
    fields: &[(f64, Field)],
    epsilon: f64,
    t0_grid: &[f64],
    direction: Direction,
    threshold: f64,
) -> Result<EgorovReport> {
    check_egorov_inputs(fields, epsilon, t0_grid)?;
    let times: Vec<f64> = fields.iter().map(|(t, _)| *t).collect();
    let order = tail_order(&times, direction);
    let sorted_times: Vec<f64> = order.iter().map(|&i| times[i]).collect();
    let sorted_fields: Vec<&Field> = order.iter().map(|&i| &fields[i].1).collect();
    let space = fields[0].1.space().clone();
    let profiles = diameter_profiles(&sorted_fields, space.len());
    build_report(&profiles, &sorted_times, &space, epsilon, t0_grid, direction, threshold, 2)
}

/// `(t, ||M_t(T, beta) f - reference||_p)`.
pub fn mean_convergence_table(
    semigroup: &Semigroup,
    beta: &Weight,
    f: &Field,
    p: f64,
    times: &[f64],
    reference: &Field,
) -> Result<Vec<(f64, f64)>> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    average_profile(semigroup, beta, f, times, p)?.norm_table(reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceMode {
    FlowInfinity,
    LocalZero,
    WeightedInfinity,
    WeightedZero,
}

impl ConvergenceMode {
    pub fn name(self) -> &'static str {
        match self {
            ConvergenceMode::FlowInfinity => "flow_infinity",
            ConvergenceMode::LocalZero => "local_zero",
            ConvergenceMode::WeightedInfinity => "weighted_infinity",
            ConvergenceMode::WeightedZero => "weighted_zero",
        }
    }
}

/// Scalar limit estimate for local averages, compared with `p_n(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEstimate {
    pub estimate: Complex64,
    /// `p_n(0)` for the last stored approximant.
    pub reference: Complex64,
    /// Mean deviation of `beta` from `p_n` on `[0, t_min]`.
    pub mean_deviation: f64,
    /// `||P_t f - p_n(0) f||_2 / ||f||_2` at `t_min`.
    pub polynomial_term: f64,
    /// `|estimate - reference|`, bounded by `mean_deviation + polynomial_term`.
    pub gap: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub mode: ConvergenceMode,
    pub limit: Option<Field>,
    pub lambda: Option<LambdaEstimate>,
    pub mean_norm_table: Vec<(f64, f64)>,
    pub egorov: EgorovReport,
}

/// Identifies the local limit `lambda(f) f` of `M_t(T, beta) f` as `t -> 0`
/// along a decreasing grid, estimating `lambda(f)` by
/// `<M_{t_min} f, f> / <f, f>`.
pub fn identify_local_limit(
    semigroup: &Semigroup,
    beta: &Weight,
    f: &Field,
    p: f64,
    times: &[f64],
    epsilon: f64,
    threshold: f64,
) -> Result<ConvergenceReport> {
    if f.is_zero() {
        return Err(Error::InvalidParameter("local limit identification needs a nonzero field".into()));
    }
    let approximant = beta
        .approximants()
        .last()
        .ok_or_else(|| Error::InvalidWeight("weight has no approximant sequence".into()))?;
    grid::validate(times, semigroup.step(), Direction::ToZero)?;
    let profile = average_profile(semigroup, beta, f, times, p)?;
    let t_min = *times.last().expect("validated grid is non-empty");
    let m_min = profile.last().expect("validated grid is non-empty");
    let estimate = m_min.inner(f)? / f.inner(f)?;
    let limit = f.scale(estimate);

    let reference = approximant.at_zero();
    let mean_dev = mean_deviation(beta, approximant, t_min, semigroup.step())?;
    let poly_weight = Weight::trig(approximant.clone())?;
    let poly_avg = ergodic_average(semigroup, &poly_weight, f, t_min)?;
    let polynomial_term = poly_avg.sub(&f.scale(reference))?.lp_norm(2.0)? / f.lp_norm(2.0)?;
    let gap = (estimate - reference).norm();
    let lambda = LambdaEstimate {
        estimate,
        reference,
        mean_deviation: mean_dev,
        polynomial_term,
        gap,
        within_bound: gap <= mean_dev + polynomial_term + 1e-9,
    };

    let mean_norm_table = profile.norm_table(&limit)?;
    let fields: Vec<(f64, Field)> = times.iter().copied().zip(profile.fields).collect();
    let egorov = egorov_search(&fields, &limit, epsilon, times, Direction::ToZero, threshold)?;
    let mode = if beta.is_unit() { ConvergenceMode::LocalZero } else { ConvergenceMode::WeightedZero };
    Ok(ConvergenceReport { mode, limit: Some(limit), lambda: Some(lambda), mean_norm_table, egorov })
}

/// Convergence of `M_t(T, beta) f` as `t -> inf`: against the known limit
/// when the semigroup has one, otherwise through the a.u. Cauchy property.
pub fn flow_convergence_report(
    semigroup: &Semigroup,
    beta: &Weight,
    f: &Field,
    p: f64,
    times: &[f64],
    epsilon: f64,
    threshold: f64,
) -> Result<ConvergenceReport> {
    grid::validate(times, semigroup.step(), Direction::ToInfinity)?;
    let profile = average_profile(semigroup, beta, f, times, p)?;
    let mode = if beta.is_unit() { ConvergenceMode::FlowInfinity } else { ConvergenceMode::WeightedInfinity };
    let known = semigroup.known_flow_limit();
    let reference = match &known {
        Some(limit) => limit.clone(),
        None => profile.last().expect("validated grid is non-empty").clone(),
    };
    let mean_norm_table = profile.norm_table(&reference)?;
    let fields: Vec<(f64, Field)> = times.iter().copied().zip(profile.fields).collect();
    let egorov = match &known {
        Some(limit) => egorov_search(&fields, limit, epsilon, times, Direction::ToInfinity, threshold)?,
        None => egorov_cauchy(&fields, epsilon, times, Direction::ToInfinity, threshold)?,
    };
    Ok(ConvergenceReport { mode, limit: known, lambda: None, mean_norm_table, egorov })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    /// `||M_t(T, beta) f - P_t(T) f||_inf`
    pub lhs: f64,
    /// `mean_deviation(beta, p, t) ||f||_inf`
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Sup-norm transfer bound between `beta`-weighted and `p`-weighted averages.
pub fn transfer_bound_check(
    semigroup: &Semigroup,
    beta: &Weight,
    p: &TrigPolynomial,
    f: &Field,
    t: f64,
) -> Result<TransferReport> {
    let weighted = ergodic_average(semigroup, beta, f, t)?;
    let poly = ergodic_average(semigroup, &Weight::trig(p.clone())?, f, t)?;
    let lhs = weighted.sub(&poly)?.lp_norm(f64::INFINITY)?;
    let rhs = mean_deviation(beta, p, t, semigroup.step())? * f.lp_norm(f64::INFINITY)?;
    let residual = lhs - rhs;
    Ok(TransferReport { lhs, rhs, residual, pass: residual <= TRANSFER_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsops::path_laplacian;
    use crate::measure::MeasureSpace;

    fn delta_shift(n: i64) -> (Semigroup, Field) {
        let space = MeasureSpace::counting(0, n).unwrap();
        let t = Semigroup::shift(space.clone(), 1.0).unwrap();
        (t, Field::delta(space, 0).unwrap())
    }

    #[test]
    fn zero_deviation_keeps_everything() {
        let space = MeasureSpace::counting(0, 5).unwrap();
        let f = Field::delta(space.clone(), 2).unwrap();
        let fields = vec![(1.0, f.clone()), (2.0, f.clone())];
        let r = egorov_search(&fields, &f, 1.0, &[1.0, 2.0], Direction::ToInfinity, 1e-3).unwrap();
        assert_eq!(r.mask.included(), &[true; 5]);
        assert_eq!(r.removed_measure, 0.0);
        assert!(r.rows.iter().all(|row| row.tail_sup == 0.0));
        assert!(r.verdict);
    }

    #[test]
    fn shifted_delta_egorov_closed_form() {
        let (t, f) = delta_shift(40);
        let times = grid::linear(1.0, 4, 30, 1).unwrap();
        let r = flow_convergence_report(&t, &Weight::one(), &f, 1.0, &times, 2.0, 1.0).unwrap();
        assert_eq!(r.egorov.removed_measure, 2.0);
        assert_eq!(&r.egorov.mask.included()[..3], &[false, false, true]);
        assert_eq!(r.egorov.rows[0].tail_sup, 0.25);
        for row in &r.egorov.rows {
            assert!((row.tail_sup - 1.0 / row.t0.max(3.0)).abs() < 1e-12);
        }
        // The flow limit is 0 pointwise, but the mean norm stays at 1.
        for (_, v) in &r.mean_norm_table {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_prefers_largest_and_respects_budget() {
        let (keep, removed) = greedy_mask(&[0.1, 9.0, 0.2], &[1.0, 2.0, 1.0], 2.0);
        assert_eq!(keep, vec![true, false, true]);
        assert_eq!(removed, 2.0);
        let (keep, removed) = greedy_mask(&[0.1, 9.0, 0.2], &[1.0, 2.5, 1.0], 2.0);
        assert_eq!(keep, vec![true; 3]);
        assert_eq!(removed, 0.0);
    }

    #[test]
    fn egorov_rejects_bad_budget() {
        let space = MeasureSpace::counting(0, 2).unwrap();
        let f = Field::zeros(space);
        assert!(egorov_search(&[(1.0, f.clone())], &f, 0.0, &[1.0], Direction::ToInfinity, 1e-3).is_err());
    }

    #[test]
    fn cauchy_verdict_skips_one_point_tails() {
        let space = MeasureSpace::counting(0, 2).unwrap();
        let a = Field::delta(space.clone(), 0).unwrap();
        let b = Field::delta(space, 1).unwrap();
        let r = egorov_cauchy(&[(1.0, a.clone()), (2.0, b)], 0.5, &[1.0, 2.0], Direction::ToInfinity, 1e-3).unwrap();
        assert_eq!(r.final_tail_sup, 1.0);
        assert!(!r.verdict);
        let single = egorov_cauchy(&[(1.0, a)], 0.5, &[1.0], Direction::ToInfinity, 1e-3).unwrap();
        assert!(!single.verdict);
    }

    #[test]
    fn invariant_field_has_zero_cauchy_gap() {
        let space = MeasureSpace::counting(0, 6).unwrap();
        let t = Semigroup::generator(space.clone(), 0.5, path_laplacian(6, 1.0)).unwrap();
        let f = Field::constant(space, Complex64::new(0.7, 0.0));
        let times = grid::linear(0.5, 1, 20, 1).unwrap();
        let r = flow_convergence_report(&t, &Weight::one(), &f, 1.0, &times, 1.0, 1e-3).unwrap();
        assert!(r.limit.is_none());
        assert!(r.egorov.rows.iter().all(|row| row.tail_sup < 1e-13));
    }

    #[test]
    fn twisted_flow_with_cancelling_weight_matches_plain_shift() {
        let space = MeasureSpace::counting(0, 30).unwrap();
        let alpha = 0.9;
        let twisted = Semigroup::twisted_shift(space.clone(), 1.0, alpha).unwrap();
        let plain = Semigroup::shift(space.clone(), 1.0).unwrap();
        let f = Field::from_real(space, &(0..30).map(|i| if i < 3 { 1.0 } else { 0.0 }).collect::<Vec<_>>()).unwrap();
        let times = grid::linear(1.0, 2, 20, 2).unwrap();
        let a = flow_convergence_report(&twisted, &Weight::phase(-alpha).unwrap(), &f, 1.0, &times, 1.0, 1.0).unwrap();
        let b = flow_convergence_report(&plain, &Weight::one(), &f, 1.0, &times, 1.0, 1.0).unwrap();
        for (ra, rb) in a.egorov.rows.iter().zip(&b.egorov.rows) {
            assert!((ra.tail_sup - rb.tail_sup).abs() < 1e-15);
        }
        assert_eq!(a.mode, ConvergenceMode::WeightedInfinity);
        assert_eq!(b.mode, ConvergenceMode::FlowInfinity);
    }

    #[test]
    fn local_limit_of_trig_weight_is_exact_at_one_step() {
        let space = MeasureSpace::counting(0, 8).unwrap();
        let t = Semigroup::generator(space.clone(), 0.01, path_laplacian(8, 1.0)).unwrap();
        let p = TrigPolynomial::new(vec![(Complex64::new(0.5, 0.0), 2.0), (Complex64::new(0.25, 0.5), -1.0)]).unwrap();
        let beta = Weight::trig(p.clone()).unwrap();
        let f = Field::delta(space, 3).unwrap();
        let times = [0.08, 0.04, 0.02, 0.01];
        let r = identify_local_limit(&t, &beta, &f, 2.0, &times, 1.0, 1.0).unwrap();
        let lambda = r.lambda.unwrap();
        assert_eq!(lambda.estimate, p.at_zero());
        assert!(lambda.within_bound);
        assert_eq!(r.mode, ConvergenceMode::WeightedZero);
    }

    #[test]
    fn local_limit_rejects_zero_field() {
        let space = MeasureSpace::counting(0, 4).unwrap();
        let t = Semigroup::shift(space.clone(), 1.0).unwrap();
        assert!(identify_local_limit(&t, &Weight::one(), &Field::zeros(space), 1.0, &[2.0, 1.0], 1.0, 1e-3).is_err());
    }

    #[test]
    fn mean_table_is_zero_at_one_step() {
        let space = MeasureSpace::counting(0, 6).unwrap();
        let t = Semigroup::generator(space.clone(), 0.1, path_laplacian(6, 1.0)).unwrap();
        let f = Field::delta(space, 1).unwrap();
        let table = mean_convergence_table(&t, &Weight::one(), &f, 1.0, &[0.4, 0.2, 0.1], &f).unwrap();
        assert_eq!(table[2].1, 0.0);
        assert!(table[0].1 > table[1].1);
    }

    #[test]
    fn transfer_bound_on_square_wave() {
        let space = MeasureSpace::counting(0, 10).unwrap();
        let t = Semigroup::twisted_shift(space.clone(), 0.25, 0.3).unwrap();
        let beta = Weight::square_wave(3.0, crate::weights::WeightMode::PlainBounded, 0).unwrap();
        let p = TrigPolynomial::phase(1.0);
        let f = Field::from_real(space, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0, 0.0, 0.0, 0.2, 1.0]).unwrap();
        let r = transfer_bound_check(&t, &beta, &p, &f, 2.0).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
