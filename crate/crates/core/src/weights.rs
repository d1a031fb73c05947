//! Modulating weights `beta(s)` and their trigonometric-polynomial
//! approximants.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dsops::steps_for;
use crate::error::{Error, Result};
use crate::grid::{self, Direction};
use crate::par;
use crate::quad;

/// Tolerance for Fourier coefficient quadrature.
pub const FOURIER_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub coeff: Complex64,
    /// Frequency `theta`, so the term is `coeff * e^{i theta s}`.
    pub freq: f64,
}

/// `p(s) = sum_j w_j e^{i theta_j s}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPolynomial {
    terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(terms: Vec<(Complex64, f64)>) -> Result<Self> {
        let terms: Vec<TrigTerm> = terms.into_iter().map(|(coeff, freq)| TrigTerm { coeff, freq }).collect();
        if terms
            .iter()
            .any(|t| !t.freq.is_finite() || !t.coeff.re.is_finite() || !t.coeff.im.is_finite())
        {
            return Err(Error::InvalidWeight("trigonometric polynomial with non-finite term".into()));
        }
        Ok(Self { terms })
    }

    pub fn constant(c: Complex64) -> Self {
        Self { terms: vec![TrigTerm { coeff: c, freq: 0.0 }] }
    }

    pub fn phase(theta: f64) -> Self {
        Self { terms: vec![TrigTerm { coeff: Complex64::new(1.0, 0.0), freq: theta }] }
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn eval(&self, s: f64) -> Complex64 {
        self.terms.iter().map(|t| t.coeff * Complex64::from_polar(1.0, t.freq * s)).sum()
    }

    /// `p(0) = sum_j w_j`.
    pub fn at_zero(&self) -> Complex64 {
        self.terms.iter().map(|t| t.coeff).sum()
    }

    /// `sum_j |w_j|`, an upper bound for `sup |p|`.
    pub fn coefficient_mass(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    BesicovitchAtInfinity,
    LocallyBesicovitch,
    PlainBounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightShape {
    Constant(Complex64),
    Phase { theta: f64 },
    Trig(TrigPolynomial),
    /// `+1` on the first half of each period, `-1` on the second.
    SquareWave { period: f64 },
    /// `e^{i theta s} + amplitude / (1 + s)`.
    PhasePlusDecay { theta: f64, amplitude: f64 },
    /// `e^{i theta s} + s`; bounded only on bounded time windows.
    PhasePlusLinear { theta: f64 },
    /// Values at grid points only.
    Tabulated { times: Vec<f64>, values: Vec<Complex64> },
}

impl WeightShape {
    pub fn eval(&self, s: f64) -> Result<Complex64> {
        Ok(match self {
            WeightShape::Constant(c) => *c,
            WeightShape::Phase { theta } => Complex64::from_polar(1.0, theta * s),
            WeightShape::Trig(p) => p.eval(s),
            WeightShape::SquareWave { period } => {
                let phase = (s / period).rem_euclid(1.0);
                Complex64::new(if phase < 0.5 { 1.0 } else { -1.0 }, 0.0)
            }
            WeightShape::PhasePlusDecay { theta, amplitude } => {
                Complex64::from_polar(1.0, theta * s) + amplitude / (1.0 + s)
            }
            WeightShape::PhasePlusLinear { theta } => Complex64::from_polar(1.0, theta * s) + s,
            WeightShape::Tabulated { times, values } => {
                let i = times.partition_point(|&t| t < s - 1e-9 * s.abs().max(1.0));
                match times.get(i) {
                    Some(&t) if (t - s).abs() <= 1e-9 * s.abs().max(1.0) => values[i],
                    _ => {
                        return Err(Error::InvalidWeight(format!("tabulated weight has no entry at s = {s}")));
                    }
                }
            }
        })
    }

    /// Closed-form `sup |beta|` when the shape is globally bounded.
    pub fn sup_modulus(&self) -> Option<f64> {
        match self {
            WeightShape::Constant(c) => Some(c.norm()),
            WeightShape::Phase { .. } => Some(1.0),
            WeightShape::Trig(p) => Some(p.coefficient_mass()),
            WeightShape::SquareWave { .. } => Some(1.0),
            WeightShape::PhasePlusDecay { amplitude, .. } => Some(1.0 + amplitude.abs()),
            WeightShape::PhasePlusLinear { .. } => None,
            WeightShape::Tabulated { values, .. } => Some(values.iter().map(|v| v.norm()).fold(0.0, f64::max)),
        }
    }

    /// Jump points of `beta` inside `[a, b]`.
    fn jumps(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            WeightShape::SquareWave { period } => {
                let half = 0.5 * period;
                let first = (a / half).ceil() as i64;
                let last = (b / half).floor() as i64;
                (first..=last).map(|k| k as f64 * half).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// A bounded modulating weight `beta` with `sup |beta| <= bound`, plus an
/// optional approximant sequence `p_1, p_2, ...` where `p_n` approximates
/// `beta` in Cesàro mean to within `1/n` (at infinity or near zero,
/// according to `mode`).
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    shape: WeightShape,
    bound: f64,
    mode: WeightMode,
    approximants: Vec<TrigPolynomial>,
}

impl Weight {
    pub fn new(shape: WeightShape, bound: f64, mode: WeightMode, approximants: Vec<TrigPolynomial>) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidWeight(format!("bound must be positive and finite, got {bound}")));
        }
        if let WeightShape::Tabulated { times, values } = &shape {
            if times.len() != values.len() || times.is_empty() {
                return Err(Error::InvalidWeight("tabulated weight needs matching, non-empty columns".into()));
            }
            if !times.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidWeight("tabulated times must be strictly increasing".into()));
            }
        }
        if let Some(sup) = shape.sup_modulus() {
            if sup > bound * (1.0 + 1e-12) {
                return Err(Error::InvalidWeight(format!("sup |beta| = {sup} exceeds the bound {bound}")));
            }
        }
        Ok(Self { shape, bound, mode, approximants })
    }

    /// `beta = 1`.
    pub fn one() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self::new(WeightShape::Constant(one), 1.0, WeightMode::BesicovitchAtInfinity, vec![TrigPolynomial::constant(one)])
            .expect("constant weight is valid")
    }

    pub fn constant(c: Complex64) -> Result<Self> {
        let bound = c.norm().max(f64::MIN_POSITIVE);
        Self::new(WeightShape::Constant(c), bound, WeightMode::BesicovitchAtInfinity, vec![TrigPolynomial::constant(c)])
    }

    /// `beta(s) = e^{i theta s}`.
    pub fn phase(theta: f64) -> Result<Self> {
        Self::new(
            WeightShape::Phase { theta },
            1.0,
            WeightMode::BesicovitchAtInfinity,
            vec![TrigPolynomial::phase(theta)],
        )
    }

    pub fn trig(p: TrigPolynomial) -> Result<Self> {
        let bound = p.coefficient_mass().max(f64::MIN_POSITIVE);
        Self::new(WeightShape::Trig(p.clone()), bound, WeightMode::BesicovitchAtInfinity, vec![p])
    }

    /// Square wave of the given period with `count` approximants.
    ///
    /// At infinity `p_n` is the shortest odd Fourier partial sum whose
    /// one-period mean deviation is below `1/n`. Near zero the wave equals 1
    /// on `[0, period/2)`, so every `p_n` is the constant 1.
    pub fn square_wave(period: f64, mode: WeightMode, count: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidWeight(format!("period must be positive, got {period}")));
        }
        let shape = WeightShape::SquareWave { period };
        let approximants = match mode {
            WeightMode::BesicovitchAtInfinity => square_wave_approximants(period, count)?,
            WeightMode::LocallyBesicovitch => vec![TrigPolynomial::constant(Complex64::new(1.0, 0.0)); count],
            WeightMode::PlainBounded => Vec::new(),
        };
        Self::new(shape, 1.0, mode, approximants)
    }

    /// `beta(s) = e^{i theta s} + amplitude / (1 + s)`; its Cesàro
    /// approximant at infinity is the pure phase.
    pub fn phase_plus_decay(theta: f64, amplitude: f64) -> Result<Self> {
        Self::new(
            WeightShape::PhasePlusDecay { theta, amplitude },
            1.0 + amplitude.abs(),
            WeightMode::BesicovitchAtInfinity,
            vec![TrigPolynomial::phase(theta)],
        )
    }

    /// `beta(s) = e^{i theta s} + s`, used on windows where `|beta| <= bound`.
    pub fn phase_plus_linear(theta: f64, bound: f64) -> Result<Self> {
        Self::new(
            WeightShape::PhasePlusLinear { theta },
            bound,
            WeightMode::LocallyBesicovitch,
            vec![TrigPolynomial::phase(theta)],
        )
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<Complex64>, bound: f64, mode: WeightMode) -> Result<Self> {
        Self::new(WeightShape::Tabulated { times, values }, bound, mode, Vec::new())
    }

    /// Replaces the bound, which must still dominate `sup |beta|`.
    pub fn with_bound(self, bound: f64) -> Result<Self> {
        Self::new(self.shape, bound, self.mode, self.approximants)
    }

    pub fn with_approximants(self, approximants: Vec<TrigPolynomial>) -> Result<Self> {
        Self::new(self.shape, self.bound, self.mode, approximants)
    }

    pub fn shape(&self) -> &WeightShape {
        &self.shape
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn approximants(&self) -> &[TrigPolynomial] {
        &self.approximants
    }

    /// `p_n`, 1-based.
    pub fn approximant(&self, n: usize) -> Option<&TrigPolynomial> {
        n.checked_sub(1).and_then(|i| self.approximants.get(i))
    }

    pub fn is_unit(&self) -> bool {
        self.shape == WeightShape::Constant(Complex64::new(1.0, 0.0))
    }

    pub fn eval(&self, s: f64) -> Result<Complex64> {
        self.shape.eval(s)
    }

    /// `beta(s)` checked against the declared bound.
    pub fn eval_bounded(&self, s: f64) -> Result<Complex64> {
        let v = self.shape.eval(s)?;
        if v.norm() > self.bound * (1.0 + 1e-12) {
            return Err(Error::WeightBoundExceeded { time: s, modulus: v.norm(), bound: self.bound });
        }
        Ok(v)
    }

    pub fn period(&self) -> Option<f64> {
        match &self.shape {
            WeightShape::SquareWave { period } => Some(*period),
            WeightShape::Phase { theta } if *theta != 0.0 => Some(2.0 * PI / theta.abs()),
            _ => None,
        }
    }
}

fn square_wave_approximants(period: f64, count: usize) -> Result<Vec<TrigPolynomial>> {
    let wave = WeightShape::SquareWave { period };
    let mut out = Vec::with_capacity(count);
    let mut m = 1usize;
    for n in 1..=count {
        loop {
            let p = square_wave_partial_sum(period, m);
            if period_mean_deviation(&wave, &p, period) < 1.0 / n as f64 {
                out.push(p);
                break;
            }
            m += 2;
            if m > 1 << 16 {
                return Err(Error::InvalidWeight(format!("no square-wave approximant within 1/{n}")));
            }
        }
    }
    Ok(out)
}

/// Closed-form partial Fourier sum of the square wave over `|k| <= m`:
/// `c_k = 2 / (i pi k)` for odd `k`.
pub fn square_wave_partial_sum(period: f64, m: usize) -> TrigPolynomial {
    let mut terms = Vec::new();
    for k in (1..=m as i64).step_by(2) {
        let c = Complex64::new(0.0, -2.0 / (PI * k as f64));
        let freq = 2.0 * PI * k as f64 / period;
        terms.push(TrigTerm { coeff: c, freq });
        terms.push(TrigTerm { coeff: -c, freq: -freq });
    }
    TrigPolynomial { terms }
}

/// `(1/P) int_0^P |beta - p|` by adaptive quadrature.
pub fn period_mean_deviation(shape: &WeightShape, p: &TrigPolynomial, period: f64) -> f64 {
    let breaks = shape.jumps(0.0, period);
    let integrand = |s: f64| Complex64::new((shape.eval(s).unwrap_or_default() - p.eval(s)).norm(), 0.0);
    quad::integrate(integrand, 0.0, period, &breaks, 1e-10).re / period
}

/// Left-endpoint Riemann mean `(h/t) sum_{k < t/h} |beta(kh) - p(kh)|`.
pub fn mean_deviation(beta: &Weight, p: &TrigPolynomial, t: f64, step: f64) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidParameter(format!("averaging time must be positive, got {t}")));
    }
    let n = steps_for(t, step)?;
    if n == 0 {
        return Err(Error::NotGridAligned { time: t, step });
    }
    let mut sum = 0.0;
    for k in 0..n {
        let s = k as f64 * step;
        sum += (beta.eval(s)? - p.eval(s)).norm();
    }
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimsupRow {
    pub t: f64,
    pub deviation: f64,
    /// Supremum of `deviation` from this row to the end of the grid.
    pub tail_sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimsupProfile {
    pub direction: Direction,
    pub rows: Vec<LimsupRow>,
    /// Max deviation over the last quarter of the grid; an estimate of the
    /// limsup, not a bound on it.
    pub estimate: f64,
}

/// Mean deviations of `beta` from `p` along a grid tending to infinity or
/// to zero.
pub fn limsup_profile(
    beta: &Weight,
    p: &TrigPolynomial,
    direction: Direction,
    times: &[f64],
    step: f64,
) -> Result<LimsupProfile> {
    grid::validate(times, step, direction)?;
    let devs = par::map(times, |&t| mean_deviation(beta, p, t, step));
    let devs = devs.into_iter().collect::<Result<Vec<f64>>>()?;
    let mut rows: Vec<LimsupRow> = times
        .iter()
        .zip(&devs)
        .map(|(&t, &deviation)| LimsupRow { t, deviation, tail_sup: deviation })
        .collect();
    for i in (0..rows.len().saturating_sub(1)).rev() {
        rows[i].tail_sup = rows[i].deviation.max(rows[i + 1].tail_sup);
    }
    let quarter = rows.len().div_ceil(4).max(1);
    let estimate = devs[devs.len() - quarter..].iter().copied().fold(0.0, f64::max);
    Ok(LimsupProfile { direction, rows, estimate })
}

/// Partial Fourier sums `S_1, ..., S_{n_max}` of a periodic weight, with
/// frequencies `2 pi k / period`. Coefficients below the quadrature
/// tolerance are dropped.
pub fn fourier_partial_sums(beta: &Weight, period: f64, n_max: usize) -> Result<Vec<TrigPolynomial>> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
    }
    let breaks = beta.shape.jumps(0.0, period);
    let ks: Vec<i64> = (-(n_max as i64)..=n_max as i64).collect();
    let coeffs: Vec<Result<Complex64>> = par::map(&ks, |&k| {
        let freq = 2.0 * PI * k as f64 / period;
        let failed = Cell::new(false);
        let integrand = |s: f64| match beta.eval(s) {
            Ok(v) => v * Complex64::from_polar(1.0, -freq * s),
            Err(_) => {
                failed.set(true);
                Complex64::default()
            }
        };
        let c = quad::integrate(integrand, 0.0, period, &breaks, FOURIER_QUAD_TOL * period) / period;
        if failed.get() {
            return Err(Error::InvalidWeight("weight cannot be evaluated off its tabulated points".into()));
        }
        Ok(c)
    });
    let coeffs = coeffs.into_iter().collect::<Result<Vec<Complex64>>>()?;
    let mut sums = Vec::with_capacity(n_max);
    for n in 1..=n_max as i64 {
        let terms = ks
            .iter()
            .zip(&coeffs)
            .filter(|(k, c)| k.abs() <= n && c.norm() > FOURIER_QUAD_TOL)
            .map(|(&k, &c)| TrigTerm { coeff: c, freq: 2.0 * PI * k as f64 / period })
            .collect();
        sums.push(TrigPolynomial { terms });
    }
    Ok(sums)
}
