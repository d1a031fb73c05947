//! Dunford-Schwartz semigroups on atomic spaces.
//!
//! Time is restricted to multiples of the step `h`, which makes the shift
//! flows satisfy `T_{r+s} = T_r T_s` exactly.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::measure::{same_space, Field, MeasureSpace};
use crate::par;

/// Tolerance for the DS certificate of a kernel.
pub const KERNEL_DS_TOL: f64 = 1e-12;
/// Pass threshold for verification reports.
pub const VERIFY_TOL: f64 = 1e-9;
/// Relative tolerance for grid alignment of times.
pub const ALIGN_TOL: f64 = 1e-9;
/// Step multiples checked by [`verify_ds`] when no grid is supplied.
pub const DEFAULT_DS_STEPS: [u64; 7] = [0, 1, 2, 3, 4, 8, 16];

/// A dense complex matrix acting on field values (column convention:
/// `(K f)_i = sum_j K_ij f_j`).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<Complex64>,
}

/// Row sums bound the L^inf operator norm; weighted column sums
/// `sum_i |K_ij| w_i / w_j` bound the L^1 norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsCertificate {
    pub max_row_sum: f64,
    pub max_column_sum: f64,
}

impl DsCertificate {
    pub fn is_ds(&self) -> bool {
        self.max_row_sum <= 1.0 + KERNEL_DS_TOL && self.max_column_sum <= 1.0 + KERNEL_DS_TOL
    }
}

impl KernelMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidKernel(format!(
                "{}x{} is not square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidKernel("non-finite entry".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_real(entries: &DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: DMatrix::identity(n, n) }
    }

    /// Reads `(row, col, re, im)` records; absent entries are zero.
    pub fn from_csv<R: Read>(reader: R, dim: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let mut entries = DMatrix::<Complex64>::zeros(dim, dim);
        for record in rdr.records() {
            let record = record?;
            if record.len() != 4 {
                return Err(Error::InvalidKernel(format!("expected 4 columns, got {}", record.len())));
            }
            let parse = |i: usize| -> Result<f64> {
                record[i]
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidKernel(format!("column {i}: {e}")))
            };
            let (row, col) = (parse(0)?, parse(1)?);
            if row < 0.0 || col < 0.0 || row.fract() != 0.0 || col.fract() != 0.0 {
                return Err(Error::InvalidKernel(format!("bad index ({row}, {col})")));
            }
            let (row, col) = (row as usize, col as usize);
            if row >= dim || col >= dim {
                return Err(Error::InvalidKernel(format!("index ({row}, {col}) outside {dim}x{dim}")));
            }
            entries[(row, col)] = Complex64::new(parse(2)?, parse(3)?);
        }
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { entries: &self.entries * c }
    }

    /// Entrywise modulus `|K|`, the smallest positive operator dominating `K`
    /// on an atomic space.
    pub fn linear_modulus(&self) -> Self {
        Self { entries: self.entries.map(|v| Complex64::new(v.norm(), 0.0)) }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|v| v.im == 0.0 && v.re >= 0.0)
    }

    pub fn certificate(&self, weights: &[f64]) -> DsCertificate {
        let n = self.dim();
        assert_eq!(weights.len(), n, "weight vector does not match kernel dimension");
        let mut max_row_sum = 0.0f64;
        for i in 0..n {
            let s: f64 = self.entries.row(i).iter().map(|v| v.norm()).sum();
            max_row_sum = max_row_sum.max(s);
        }
        let mut max_column_sum = 0.0f64;
        for j in 0..n {
            let s: f64 = self
                .entries
                .column(j)
                .iter()
                .zip(weights)
                .map(|(v, w)| v.norm() * w)
                .sum();
            max_column_sum = max_column_sum.max(s / weights[j]);
        }
        DsCertificate { max_row_sum, max_column_sum }
    }

    pub fn apply_values(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                self.entries
                    .row(i)
                    .iter()
                    .zip(values)
                    .map(|(k, v)| k * v)
                    .sum()
            })
            .collect()
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.len() != self.dim() {
            return Err(Error::InvalidKernel(format!(
                "kernel of dimension {} applied to a field with {} cells",
                self.dim(),
                f.len()
            )));
        }
        Ok(Field::from_parts(f.space().clone(), self.apply_values(f.values())))
    }

    pub fn compose(&self, other: &KernelMatrix) -> KernelMatrix {
        KernelMatrix { entries: &self.entries * &other.entries }
    }

    pub fn power(&self, k: u64) -> KernelMatrix {
        let mut result = KernelMatrix::identity(self.dim());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.compose(&base);
            }
            base = base.compose(&base);
            k >>= 1;
        }
        result
    }
}

/// A single operator `T_s`, kept structured where possible.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOp {
    /// `(T f)[i] = phase * f[i - offset]`, mass past the last cell dropped.
    Shift { offset: usize, phase: Complex64 },
    Dense(KernelMatrix),
}

impl LinearOp {
    pub fn apply_values(&self, values: &[Complex64]) -> Vec<Complex64> {
        match self {
            LinearOp::Shift { offset, phase } => shift_values(values, *offset, *phase),
            LinearOp::Dense(k) => k.apply_values(values),
        }
    }

    /// The linear modulus `|T|`.
    pub fn modulus(&self) -> LinearOp {
        match self {
            LinearOp::Shift { offset, phase } => {
                LinearOp::Shift { offset: *offset, phase: Complex64::new(phase.norm(), 0.0) }
            }
            LinearOp::Dense(k) => LinearOp::Dense(k.linear_modulus()),
        }
    }

    pub fn to_kernel(&self, n: usize) -> KernelMatrix {
        match self {
            LinearOp::Dense(k) => k.clone(),
            LinearOp::Shift { offset, phase } => {
                let mut m = DMatrix::<Complex64>::zeros(n, n);
                for j in 0..n.saturating_sub(*offset) {
                    m[(j + offset, j)] = *phase;
                }
                KernelMatrix { entries: m }
            }
        }
    }
}

fn shift_values(values: &[Complex64], offset: usize, phase: Complex64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if offset < n {
        for (dst, src) in out[offset..].iter_mut().zip(&values[..n - offset]) {
            *dst = phase * src;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum SemigroupKind {
    /// Translation by one cell per step.
    Shift,
    /// `T_s f = e^{i alpha s} f(. - s)`: DS but not positive.
    TwistedShift { alpha: f64 },
    /// `T_s = exp(s Q)`.
    Generator { q: DMatrix<f64> },
    /// Discrete-time semigroup `T_{kh} = K^k`. Not checked for the DS
    /// property at construction, so violations can be demonstrated.
    KernelPower { kernel: KernelMatrix },
}

impl SemigroupKind {
    pub fn name(&self) -> &'static str {
        match self {
            SemigroupKind::Shift => "shift",
            SemigroupKind::TwistedShift { .. } => "twisted_shift",
            SemigroupKind::Generator { .. } => "generator",
            SemigroupKind::KernelPower { .. } => "kernel_power",
        }
    }
}

/// A semigroup `{T_s}` sampled at `s in h * {0, 1, 2, ...}`.
pub struct Semigroup {
    kind: SemigroupKind,
    space: Arc<MeasureSpace>,
    step: f64,
    step_op: LinearOp,
    cache: Mutex<HashMap<u64, Arc<LinearOp>>>,
}

impl fmt::Debug for Semigroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Semigroup")
            .field("kind", &self.kind.name())
            .field("cells", &self.space.len())
            .field("step", &self.step)
            .finish()
    }
}

impl Clone for Semigroup {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind.clone(),
            space: self.space.clone(),
            step: self.step,
            step_op: self.step_op.clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }
}

fn check_step(step: f64) -> Result<()> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSemigroup(format!("step must be positive and finite, got {step}")))
    }
}

fn check_shift_space(space: &MeasureSpace) -> Result<()> {
    if !space.is_lattice() {
        return Err(Error::InvalidSemigroup("shift flows need consecutive integer cells".into()));
    }
    if !space.is_uniform() {
        return Err(Error::InvalidSemigroup("shift flows need equal cell weights".into()));
    }
    Ok(())
}

/// Checks that `exp(sQ)` contracts both L^1(w) and L^inf: the row and weighted
/// column logarithmic norms of `Q` must be non-positive.
pub fn check_generator(q: &DMatrix<f64>, weights: &[f64]) -> Result<()> {
    if !q.is_square() || q.nrows() != weights.len() {
        return Err(Error::InvalidSemigroup(format!(
            "generator is {}x{} but the space has {} cells",
            q.nrows(),
            q.ncols(),
            weights.len()
        )));
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSemigroup("generator has a non-finite entry".into()));
    }
    let n = q.nrows();
    let tol = KERNEL_DS_TOL * q.amax().max(1.0);
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)].abs()).sum();
        if q[(i, i)] + off > tol {
            return Err(Error::InvalidSemigroup(format!(
                "row {i}: diagonal plus off-diagonal mass is {} > 0",
                q[(i, i)] + off
            )));
        }
    }
    for j in 0..n {
        let off: f64 = (0..n)
            .filter(|&i| i != j)
            .map(|i| q[(i, j)].abs() * weights[i] / weights[j])
            .sum();
        if q[(j, j)] + off > tol {
            return Err(Error::InvalidSemigroup(format!(
                "column {j}: diagonal plus weighted off-diagonal mass is {} > 0",
                q[(j, j)] + off
            )));
        }
    }
    Ok(())
}

impl Semigroup {
    fn build(kind: SemigroupKind, space: Arc<MeasureSpace>, step: f64) -> Result<Self> {
        check_step(step)?;
        let step_op = match &kind {
            SemigroupKind::Shift => {
                check_shift_space(&space)?;
                LinearOp::Shift { offset: 1, phase: Complex64::new(1.0, 0.0) }
            }
            SemigroupKind::TwistedShift { alpha } => {
                check_shift_space(&space)?;
                if !alpha.is_finite() {
                    return Err(Error::InvalidSemigroup("phase rate must be finite".into()));
                }
                LinearOp::Shift { offset: 1, phase: Complex64::from_polar(1.0, alpha * step) }
            }
            SemigroupKind::Generator { q } => {
                check_generator(q, space.weights())?;
                LinearOp::Dense(KernelMatrix::from_real(&expm(&(q * step)))?)
            }
            SemigroupKind::KernelPower { kernel } => {
                if kernel.dim() != space.len() {
                    return Err(Error::InvalidSemigroup(format!(
                        "kernel dimension {} but the space has {} cells",
                        kernel.dim(),
                        space.len()
                    )));
                }
                LinearOp::Dense(kernel.clone())
            }
        };
        Ok(Self { kind, space, step, step_op, cache: Mutex::new(HashMap::new()) })
    }

    pub fn shift(space: Arc<MeasureSpace>, step: f64) -> Result<Self> {
        Self::build(SemigroupKind::Shift, space, step)
    }

    pub fn twisted_shift(space: Arc<MeasureSpace>, step: f64, alpha: f64) -> Result<Self> {
        Self::build(SemigroupKind::TwistedShift { alpha }, space, step)
    }

    pub fn generator(space: Arc<MeasureSpace>, step: f64, q: DMatrix<f64>) -> Result<Self> {
        Self::build(SemigroupKind::Generator { q }, space, step)
    }

    pub fn kernel_power(space: Arc<MeasureSpace>, step: f64, kernel: KernelMatrix) -> Result<Self> {
        Self::build(SemigroupKind::KernelPower { kernel }, space, step)
    }

    pub fn kind(&self) -> &SemigroupKind {
        &self.kind
    }

    pub fn space(&self) -> &Arc<MeasureSpace> {
        &self.space
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of steps `s / h`, rejecting negative or misaligned times.
    pub fn steps_for(&self, s: f64) -> Result<u64> {
        steps_for(s, self.step)
    }

    /// The same dynamics on a grid `factor` times finer.
    ///
    /// Generators keep `Q`. Shift kinds keep moving one cell per step, so
    /// their continuity at the new step is limited by the lattice. Kernel
    /// powers have no finer grid.
    pub fn refined(&self, factor: u32) -> Result<Semigroup> {
        if factor == 0 {
            return Err(Error::InvalidParameter("refinement factor must be positive".into()));
        }
        if let SemigroupKind::KernelPower { .. } = self.kind {
            return Err(Error::InvalidSemigroup("a kernel-power semigroup cannot be refined".into()));
        }
        Self::build(self.kind.clone(), self.space.clone(), self.step / factor as f64)
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        if same_space(&self.space, f.space()) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// `T_h f`.
    pub fn step_once(&self, f: &Field) -> Result<Field> {
        self.check_field(f)?;
        Ok(Field::from_parts(f.space().clone(), self.step_op.apply_values(f.values())))
    }

    pub(crate) fn step_values(&self, values: &[Complex64]) -> Vec<Complex64> {
        self.step_op.apply_values(values)
    }

    /// `T_{kh}` as an operator; matrix exponentials are memoised per `k`.
    pub fn operator_at_steps(&self, k: u64) -> Arc<LinearOp> {
        match &self.kind {
            SemigroupKind::Shift => {
                Arc::new(LinearOp::Shift { offset: k as usize, phase: Complex64::new(1.0, 0.0) })
            }
            SemigroupKind::TwistedShift { alpha } => Arc::new(LinearOp::Shift {
                offset: k as usize,
                phase: Complex64::from_polar(1.0, alpha * self.step * k as f64),
            }),
            SemigroupKind::Generator { q } => {
                if let Some(op) = self.cache.lock().expect("cache poisoned").get(&k) {
                    return op.clone();
                }
                let e = expm(&(q * (self.step * k as f64)));
                let op = Arc::new(LinearOp::Dense(
                    KernelMatrix::from_real(&e).expect("exponential of a finite matrix is finite"),
                ));
                self.cache.lock().expect("cache poisoned").insert(k, op.clone());
                op
            }
            SemigroupKind::KernelPower { kernel } => {
                if let Some(op) = self.cache.lock().expect("cache poisoned").get(&k) {
                    return op.clone();
                }
                let op = Arc::new(LinearOp::Dense(kernel.power(k)));
                self.cache.lock().expect("cache poisoned").insert(k, op.clone());
                op
            }
        }
    }

    pub fn operator_at(&self, s: f64) -> Result<Arc<LinearOp>> {
        Ok(self.operator_at_steps(self.steps_for(s)?))
    }

    pub fn apply_steps(&self, f: &Field, k: u64) -> Result<Field> {
        self.check_field(f)?;
        if k == 0 {
            return Ok(f.clone());
        }
        let values = self.operator_at_steps(k).apply_values(f.values());
        Ok(Field::from_parts(f.space().clone(), values))
    }

    /// `T_s f`.
    pub fn apply(&self, f: &Field, s: f64) -> Result<Field> {
        let k = self.steps_for(s)?;
        self.apply_steps(f, k)
    }

    /// Fields `f, T_h f, T_{2h} f, ...` by repeated application of `T_h`.
    pub fn orbit<'a>(&'a self, f: &Field) -> Result<Orbit<'a>> {
        self.check_field(f)?;
        Ok(Orbit { semigroup: self, next: Some(f.values().to_vec()) })
    }

    /// The flow limit as `t -> inf` when it is known in closed form: shift
    /// flows carry every finitely supported field off to infinity.
    pub fn known_flow_limit(&self) -> Option<Field> {
        match self.kind {
            SemigroupKind::Shift | SemigroupKind::TwistedShift { .. } => {
                Some(Field::zeros(self.space.clone()))
            }
            _ => None,
        }
    }
}

pub(crate) fn steps_for(s: f64, step: f64) -> Result<u64> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::NotGridAligned { time: s, step });
    }
    let k = (s / step).round();
    if (k * step - s).abs() > ALIGN_TOL * s.abs().max(step) {
        return Err(Error::NotGridAligned { time: s, step });
    }
    Ok(k as u64)
}

/// Iterator over `T_{kh} f` for `k = 0, 1, 2, ...`.
pub struct Orbit<'a> {
    semigroup: &'a Semigroup,
    next: Option<Vec<Complex64>>,
}

impl Iterator for Orbit<'_> {
    type Item = Vec<Complex64>;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        self.next = Some(self.semigroup.step_values(&current));
        Some(current)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsRow {
    pub time: f64,
    pub max_l1_ratio: f64,
    pub max_linf_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DsReport {
    pub rows: Vec<DsRow>,
    pub max_l1_ratio: f64,
    pub max_linf_ratio: f64,
    pub pass: bool,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Measures `||T_s f||_1 / ||f||_1` and `||T_s f||_inf / ||f||_inf` over
/// samples and grid times `s = k h`.
pub fn verify_ds(semigroup: &Semigroup, samples: &[Field], steps: &[u64]) -> Result<DsReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("verify_ds needs at least one sample".into()));
    }
    for f in samples {
        semigroup.check_field(f)?;
    }
    let steps: Vec<u64> = if steps.is_empty() { DEFAULT_DS_STEPS.to_vec() } else { steps.to_vec() };
    let rows: Vec<DsRow> = par::map(&steps, |&k| {
        let op = semigroup.operator_at_steps(k);
        let mut l1 = 0.0f64;
        let mut linf = 0.0f64;
        for f in samples {
            let tf = if k == 0 {
                f.clone()
            } else {
                Field::from_parts(f.space().clone(), op.apply_values(f.values()))
            };
            l1 = l1.max(ratio(tf.lp_norm(1.0).unwrap(), f.lp_norm(1.0).unwrap()));
            linf = linf.max(ratio(tf.lp_norm(f64::INFINITY).unwrap(), f.lp_norm(f64::INFINITY).unwrap()));
        }
        DsRow { time: k as f64 * semigroup.step(), max_l1_ratio: l1, max_linf_ratio: linf }
    });
    let max_l1_ratio = rows.iter().map(|r| r.max_l1_ratio).fold(0.0, f64::max);
    let max_linf_ratio = rows.iter().map(|r| r.max_linf_ratio).fold(0.0, f64::max);
    let pass = max_l1_ratio <= 1.0 + VERIFY_TOL && max_linf_ratio <= 1.0 + VERIFY_TOL;
    Ok(DsReport { rows, max_l1_ratio, max_linf_ratio, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupReport {
    pub r: f64,
    pub s: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Maximum of `||T_{r+s} f - T_r T_s f||_1 / ||f||_1` over samples.
pub fn verify_semigroup(semigroup: &Semigroup, r: f64, s: f64, samples: &[Field]) -> Result<SemigroupReport> {
    let kr = semigroup.steps_for(r)?;
    let ks = semigroup.steps_for(s)?;
    let residuals = par::map(samples, |f| -> Result<f64> {
        let direct = semigroup.apply_steps(f, kr + ks)?;
        let composed = semigroup.apply_steps(&semigroup.apply_steps(f, ks)?, kr)?;
        Ok(ratio(direct.sub(&composed)?.lp_norm(1.0)?, f.lp_norm(1.0)?))
    });
    let mut residual = 0.0f64;
    for r in residuals {
        residual = residual.max(r?);
    }
    Ok(SemigroupReport { r, s, residual, pass: residual <= VERIFY_TOL })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// `(s, ||T_s f - f||_p)`, starting with `s = 0`, then `s = h, h/2, ...`.
    pub rows: Vec<(f64, f64)>,
    /// For grid-locked kinds, the smallest observable displacement.
    pub grid_floor: Option<f64>,
}

/// Tabulates `||T_s f - f||_p` as the step is halved `levels` times.
pub fn verify_strong_continuity(
    semigroup: &Semigroup,
    f: &Field,
    p: f64,
    levels: u32,
) -> Result<ContinuityReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    semigroup.check_field(f)?;
    let mut rows = vec![(0.0, 0.0)];
    match semigroup.kind() {
        SemigroupKind::Generator { .. } => {
            for level in 0..=levels {
                let refined = semigroup.refined(1 << level)?;
                let moved = refined.step_once(f)?;
                rows.push((refined.step(), moved.sub(f)?.lp_norm(p)?));
            }
            Ok(ContinuityReport { rows, grid_floor: None })
        }
        _ => {
            let moved = semigroup.step_once(f)?;
            let floor = moved.sub(f)?.lp_norm(p)?;
            rows.push((semigroup.step(), floor));
            Ok(ContinuityReport { rows, grid_floor: Some(floor) })
        }
    }
}

/// Symmetric path-graph Laplacian with rate `rate` (reflecting ends).
pub fn path_laplacian(n: usize, rate: f64) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        q[(i, i + 1)] = rate;
        q[(i + 1, i)] = rate;
        q[(i, i)] -= rate;
        q[(i + 1, i + 1)] -= rate;
    }
    q
}
