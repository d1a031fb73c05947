//! Scenario files. The grammar is TOML; `docs/scenario.md` lists every key.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ergolab::dsops::path_laplacian;
use ergolab::grid;
use ergolab::sample;
use ergolab::symmetric::{ConcaveFn, Growth, SymmetricNormSpec, TailClass, YoungFn};
use ergolab::{Complex64, Direction, Field, KernelMatrix, MeasureSpace, Semigroup, TrigPolynomial, Weight, WeightMode};
use nalgebra::DMatrix;
use serde::Deserialize;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<ergolab::Error> for ConfigError {
    fn from(e: ergolab::Error) -> Self {
        ConfigError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default = "one")]
    pub epsilon: f64,
    pub space: SpaceConfig,
    pub semigroup: SemigroupConfig,
    #[serde(default)]
    pub weight: WeightConfig,
    pub field: FieldConfig,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub lambda: LambdaConfig,
    #[serde(default)]
    pub norms: Vec<NormConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Expected Fava membership of the field, checked by `rearrange`.
    pub expect_fava_member: Option<bool>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_threshold")]
    pub egorov_threshold: f64,
    #[serde(default = "default_samples")]
    pub ds_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { egorov_threshold: default_threshold(), ds_samples: default_samples() }
    }
}

fn default_threshold() -> f64 {
    ergolab::convergence::DEFAULT_THRESHOLD
}

fn default_samples() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Counting {
        start: i64,
        end: i64,
        #[serde(default)]
        infinite_model: bool,
    },
    Uniform {
        start: i64,
        end: i64,
        weight: f64,
        #[serde(default)]
        infinite_model: bool,
    },
    /// Cells `0..weights.len()`.
    Weighted {
        weights: Vec<f64>,
        #[serde(default)]
        infinite_model: bool,
    },
    /// Cells `0..cells` with weights `k/8`, `k` drawn from `4..=16`.
    Random {
        cells: usize,
        #[serde(default)]
        infinite_model: bool,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SemigroupConfig {
    Shift {
        step: f64,
    },
    TwistedShift {
        step: f64,
        alpha: f64,
    },
    Generator {
        step: f64,
        generator: GeneratorSource,
    },
    Kernel {
        step: f64,
        kernel: KernelSource,
        #[serde(default = "one")]
        scale: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSource {
    PathLaplacian { rate: f64 },
    Random { density: f64, rate: f64 },
    Matrix { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSource {
    Identity,
    RandomSubstochastic { density: f64 },
    RandomComplex { density: f64 },
    /// Real entries.
    Matrix { matrix: Vec<Vec<f64>> },
    /// `(row, col, re, im)` records, path relative to the scenario file.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightConfig {
    #[default]
    One,
    Phase {
        theta: f64,
    },
    SquareWave {
        period: f64,
        #[serde(default)]
        mode: ModeConfig,
        #[serde(default = "default_count")]
        count: usize,
    },
    /// `terms = [[re, im, freq], ...]`.
    Trig {
        terms: Vec<[f64; 3]>,
    },
    PhasePlusDecay {
        theta: f64,
        amplitude: f64,
    },
    PhasePlusLinear {
        theta: f64,
        bound: f64,
    },
}

fn default_count() -> usize {
    8
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    #[default]
    Infinity,
    Local,
    Plain,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    Delta {
        cell: i64,
        #[serde(default)]
        tail: TailConfig,
    },
    Literal {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
        #[serde(default)]
        tail: TailConfig,
    },
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
        #[serde(default)]
        tail: TailConfig,
    },
    /// `amplitude / (1 + |x|)^exponent`.
    Decay {
        amplitude: f64,
        exponent: f64,
        #[serde(default)]
        tail: TailConfig,
    },
    Random {
        #[serde(default)]
        complex: bool,
        #[serde(default)]
        sparsity: f64,
        #[serde(default)]
        tail: TailConfig,
    },
}

impl FieldConfig {
    fn tail(&self) -> &TailConfig {
        match self {
            FieldConfig::Delta { tail, .. }
            | FieldConfig::Literal { tail, .. }
            | FieldConfig::Constant { tail, .. }
            | FieldConfig::Decay { tail, .. }
            | FieldConfig::Random { tail, .. } => tail,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailConfig {
    #[default]
    FiniteSupport,
    Decay {
        amplitude: f64,
        exponent: f64,
    },
    NonVanishing {
        level: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    /// Step counts `start, start + stride, ..., <= stop`; reversed for `to_zero`.
    Linear {
        start: u64,
        stop: u64,
        #[serde(default = "default_stride")]
        stride: u64,
        #[serde(default)]
        direction: DirectionConfig,
    },
    Geometric {
        start: u64,
        stop: u64,
        count: usize,
        #[serde(default)]
        direction: DirectionConfig,
    },
    /// `h / 2^i` for `i = 0..levels`, scaled by `scale` steps; always `to_zero`.
    Dyadic {
        scale: u64,
        levels: u32,
    },
}

fn default_stride() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DirectionConfig {
    #[default]
    ToInfinity,
    ToZero,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LambdaConfig {
    pub values: Option<Vec<f64>>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    /// `lp`, `lorentz`, `marcinkiewicz`, `orlicz`, or a preset name.
    pub kind: String,
    pub p: Option<f64>,
    pub exponent: Option<f64>,
    pub points: Option<Vec<[f64; 2]>>,
    pub growth: Option<String>,
    /// Expected result of the membership test for the constant 1.
    pub expect_contains_one: Option<bool>,
}

pub struct NormEntry {
    pub label: String,
    pub spec: SymmetricNormSpec,
    pub expect_contains_one: Option<bool>,
}

impl NormConfig {
    pub fn build(&self) -> Result<NormEntry> {
        let growth = match self.growth.as_deref() {
            None => None,
            Some("bounded") => Some(Growth::Bounded),
            Some("linear") => Some(Growth::Linear),
            Some("sublinear") => Some(Growth::Sublinear),
            Some(other) => return bad(format!("unknown growth class {other:?}")),
        };
        let concave = || -> Result<ConcaveFn> {
            match (&self.points, self.exponent) {
                (Some(points), None) => Ok(ConcaveFn::Table { points: points.iter().map(|p| (p[0], p[1])).collect(), growth }),
                (None, Some(a)) => Ok(ConcaveFn::Power { exponent: a }),
                _ => bad(format!("norm {:?} needs exactly one of `exponent` or `points`", self.kind)),
            }
        };
        let spec = match self.kind.as_str() {
            "lp" => SymmetricNormSpec::Lp(self.p.ok_or_else(|| ConfigError("lp norm needs `p`".into()))?),
            "lorentz" => SymmetricNormSpec::Lorentz(concave()?),
            "marcinkiewicz" => SymmetricNormSpec::Marcinkiewicz(concave()?),
            "orlicz" => match (&self.points, self.exponent) {
                (Some(points), None) => SymmetricNormSpec::Orlicz(YoungFn::Table { points: points.iter().map(|p| (p[0], p[1])).collect() }),
                (None, Some(p)) => SymmetricNormSpec::Orlicz(YoungFn::Power { exponent: p }),
                _ => return bad("orlicz norm needs exactly one of `exponent` or `points`"),
            },
            "l1" => SymmetricNormSpec::Lp(1.0),
            "l2" => SymmetricNormSpec::Lp(2.0),
            "linf" => SymmetricNormSpec::Lp(f64::INFINITY),
            "lorentz_sqrt" => SymmetricNormSpec::Lorentz(ConcaveFn::Power { exponent: 0.5 }),
            "marcinkiewicz_sqrt" => SymmetricNormSpec::Marcinkiewicz(ConcaveFn::Power { exponent: 0.5 }),
            "orlicz_square" => SymmetricNormSpec::Orlicz(YoungFn::Power { exponent: 2.0 }),
            other => return bad(format!("unknown norm kind {other:?}")),
        };
        spec.validate()?;
        Ok(NormEntry { label: self.kind.clone(), spec, expect_contains_one: self.expect_contains_one })
    }
}

/// Everything a pipeline needs, built once per scenario.
pub struct Built {
    pub scenario: Scenario,
    pub seed: u64,
    pub semigroup: Semigroup,
    pub weight: Weight,
    pub field: Field,
    pub tail: TailClass,
    pub times: Option<(Vec<f64>, Direction)>,
    pub norms: Vec<NormEntry>,
}

pub fn load(path: &Path) -> Result<(Scenario, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let scenario: Scenario = toml::from_str(text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    if scenario.name.is_empty() || !scenario.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return bad(format!("{}: scenario name must be non-empty [A-Za-z0-9_-]", path.display()));
    }
    Ok((scenario, bytes))
}

pub fn build(scenario: Scenario, base_dir: &Path, seed_override: Option<u64>, step_override: Option<f64>) -> Result<Built> {
    let seed = seed_override.unwrap_or(scenario.seed);
    let mut rng = sample::rng(seed);
    if scenario.epsilon.is_nan() || scenario.epsilon <= 0.0 {
        return bad("epsilon must be positive");
    }
    let space = build_space(&scenario.space, &mut rng)?;
    let semigroup = build_semigroup(&scenario.semigroup, &space, base_dir, step_override, &mut rng)?;
    let weight = build_weight(&scenario.weight)?;
    let field = build_field(&scenario.field, &space, &mut rng)?;
    let tail = match scenario.field.tail() {
        TailConfig::FiniteSupport => TailClass::FiniteSupport,
        TailConfig::Decay { amplitude, exponent } => TailClass::Decay { amplitude: *amplitude, exponent: *exponent },
        TailConfig::NonVanishing { level } => TailClass::NonVanishing { level: *level },
    };
    let times = match &scenario.grid {
        Some(g) => Some(build_grid(g, semigroup.step())?),
        None => None,
    };
    let norms = scenario.norms.iter().map(NormConfig::build).collect::<Result<Vec<_>>>()?;
    Ok(Built { scenario, seed, semigroup, weight, field, tail, times, norms })
}

fn build_space(cfg: &SpaceConfig, rng: &mut sample::SampleRng) -> Result<Arc<MeasureSpace>> {
    let (space, infinite) = match cfg {
        SpaceConfig::Counting { start, end, infinite_model } => (MeasureSpace::counting(*start, *end)?, *infinite_model),
        SpaceConfig::Uniform { start, end, weight, infinite_model } => (MeasureSpace::uniform(*start, *end, *weight)?, *infinite_model),
        SpaceConfig::Weighted { weights, infinite_model } => {
            (MeasureSpace::new((0..weights.len() as i64).collect(), weights.clone(), "weighted")?, *infinite_model)
        }
        SpaceConfig::Random { cells, infinite_model } => {
            let weights = sample::dyadic_weights(rng, *cells);
            (MeasureSpace::new((0..*cells as i64).collect(), weights, "random")?, *infinite_model)
        }
    };
    Ok(if infinite { space.into_infinite_model() } else { space })
}

fn dense(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return bad(format!("matrix must be {n}x{n} to match the space"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn build_semigroup(
    cfg: &SemigroupConfig,
    space: &Arc<MeasureSpace>,
    base_dir: &Path,
    step_override: Option<f64>,
    rng: &mut sample::SampleRng,
) -> Result<Semigroup> {
    let n = space.len();
    let space = space.clone();
    let step = |h: f64| step_override.unwrap_or(h);
    Ok(match cfg {
        SemigroupConfig::Shift { step: h } => Semigroup::shift(space, step(*h))?,
        SemigroupConfig::TwistedShift { step: h, alpha } => Semigroup::twisted_shift(space, step(*h), *alpha)?,
        SemigroupConfig::Generator { step: h, generator: source } => {
            let q = match source {
                GeneratorSource::PathLaplacian { rate } => path_laplacian(n, *rate),
                GeneratorSource::Random { density, rate } => sample::random_generator(rng, space.weights(), *density, *rate),
                GeneratorSource::Matrix { matrix } => dense(matrix, n)?,
            };
            Semigroup::generator(space, step(*h), q)?
        }
        SemigroupConfig::Kernel { step: h, kernel: source, scale } => {
            let k = match source {
                KernelSource::Identity => KernelMatrix::identity(n),
                KernelSource::RandomSubstochastic { density } => sample::random_substochastic(rng, space.weights(), *density),
                KernelSource::RandomComplex { density } => sample::random_complex_ds(rng, space.weights(), *density),
                KernelSource::Matrix { matrix } => KernelMatrix::from_real(&dense(matrix, n)?)?,
                KernelSource::Csv { path } => {
                    let full = base_dir.join(path);
                    let file = std::fs::File::open(&full).map_err(|e| ConfigError(format!("{}: {e}", full.display())))?;
                    KernelMatrix::from_csv(file, n)?
                }
            };
            Semigroup::kernel_power(space, step(*h), k.scaled(Complex64::new(*scale, 0.0)))?
        }
    })
}

fn build_weight(cfg: &WeightConfig) -> Result<Weight> {
    Ok(match cfg {
        WeightConfig::One => Weight::one(),
        WeightConfig::Phase { theta } => Weight::phase(*theta)?,
        WeightConfig::SquareWave { period, mode, count } => {
            let mode = match mode {
                ModeConfig::Infinity => WeightMode::BesicovitchAtInfinity,
                ModeConfig::Local => WeightMode::LocallyBesicovitch,
                ModeConfig::Plain => WeightMode::PlainBounded,
            };
            Weight::square_wave(*period, mode, *count)?
        }
        WeightConfig::Trig { terms } => {
            Weight::trig(TrigPolynomial::new(terms.iter().map(|t| (Complex64::new(t[0], t[1]), t[2])).collect())?)?
        }
        WeightConfig::PhasePlusDecay { theta, amplitude } => Weight::phase_plus_decay(*theta, *amplitude)?,
        WeightConfig::PhasePlusLinear { theta, bound } => Weight::phase_plus_linear(*theta, *bound)?,
    })
}

fn build_field(cfg: &FieldConfig, space: &Arc<MeasureSpace>, rng: &mut sample::SampleRng) -> Result<Field> {
    let n = space.len();
    Ok(match cfg {
        FieldConfig::Delta { cell, .. } => {
            let index = space.index_of(*cell).ok_or_else(|| ConfigError(format!("cell {cell} is not in the space")))?;
            Field::delta(space.clone(), index)?
        }
        FieldConfig::Literal { re, im, .. } => {
            if re.len() != n || !(im.is_empty() || im.len() == n) {
                return bad(format!("literal field needs {n} values"));
            }
            let values = (0..n).map(|i| Complex64::new(re[i], im.get(i).copied().unwrap_or(0.0))).collect();
            Field::new(space.clone(), values)?
        }
        FieldConfig::Constant { re, im, .. } => Field::constant(space.clone(), Complex64::new(*re, *im)),
        FieldConfig::Decay { amplitude, exponent, .. } => {
            let values: Vec<f64> = space.cells().iter().map(|&x| amplitude / (1.0 + x.abs() as f64).powf(*exponent)).collect();
            Field::from_real(space.clone(), &values)?
        }
        FieldConfig::Random { complex, sparsity, .. } => sample::random_field(rng, space, *complex, *sparsity),
    })
}

fn build_grid(cfg: &GridConfig, step: f64) -> Result<(Vec<f64>, Direction)> {
    let (mut times, direction) = match cfg {
        GridConfig::Linear { start, stop, stride, direction } => (grid::linear(step, *start, *stop, *stride)?, *direction),
        GridConfig::Geometric { start, stop, count, direction } => (grid::geometric(step, *start, *stop, *count)?, *direction),
        GridConfig::Dyadic { scale, levels } => {
            if *scale == 0 || (*scale >> levels) << levels != *scale {
                return bad("dyadic grid needs scale divisible by 2^levels");
            }
            ((0..=*levels).map(|i| (scale >> i) as f64 * step).collect(), DirectionConfig::ToZero)
        }
    };
    let direction = match direction {
        DirectionConfig::ToInfinity => Direction::ToInfinity,
        DirectionConfig::ToZero => {
            if !matches!(cfg, GridConfig::Dyadic { .. }) {
                times.reverse();
            }
            Direction::ToZero
        }
    };
    grid::validate(&times, step, direction)?;
    Ok((times, direction))
}
