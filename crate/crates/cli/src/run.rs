use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ergolab::averages::average_profile;
use ergolab::convergence::{flow_convergence_report, identify_local_limit, transfer_bound_check, ConvergenceReport};
use ergolab::dsops::{verify_ds, verify_semigroup, verify_strong_continuity, SemigroupKind, DEFAULT_DS_STEPS};
use ergolab::io::{self, num, Table};
use ergolab::maximal::weak_type_check;
use ergolab::plot::{self, Axes, Series};
use ergolab::sample;
use ergolab::symmetric::{contains_one, fava_decompose, fava_membership, limit_in_space_check, majorizes, rearrange};
use ergolab::weights::{fourier_partial_sums, limsup_profile};
use ergolab::{Direction, Field, TrigPolynomial};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{self, Built, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Pipeline {
    CheckDs,
    Converge,
    Maximal,
    Weights,
    Rearrange,
    All,
}

impl Pipeline {
    fn name(self) -> &'static str {
        match self {
            Pipeline::CheckDs => "check-ds",
            Pipeline::Converge => "converge",
            Pipeline::Maximal => "maximal",
            Pipeline::Weights => "weights",
            Pipeline::Rearrange => "rearrange",
            Pipeline::All => "all",
        }
    }
}

/// `Exact` checks are inequalities or identities that must hold on the
/// sampled data; `Estimate` checks read a limit off a finite grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    Exact,
    Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub pipeline: &'static str,
    pub check: String,
    pub grade: Grade,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub scenario: String,
    pub source: String,
    pub sha256: String,
    pub seed: u64,
    pub command: &'static str,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub artifacts: Vec<String>,
}

impl RunRecord {
    pub fn failures(&self, strict: bool) -> usize {
        self.verdicts.iter().filter(|v| !v.pass && (strict || v.grade == Grade::Exact)).count()
    }
}

pub struct Options {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub step: Option<f64>,
}

pub enum Outcome {
    Completed(RunRecord),
    ConfigError { source: PathBuf, message: String },
}

type Step = Result<(), ConfigError>;

struct Ctx<'a> {
    built: &'a Built,
    dir: PathBuf,
    comment: String,
    record: RunRecord,
    pipeline: &'static str,
}

impl Ctx<'_> {
    fn verdict(&mut self, check: impl Into<String>, grade: Grade, pass: bool, detail: impl Into<String>) {
        self.record.verdicts.push(Verdict { pipeline: self.pipeline, check: check.into(), grade, pass, detail: detail.into() });
    }

    fn note(&mut self, text: impl Into<String>) {
        self.record.notes.push(format!("{}: {}", self.pipeline, text.into()));
    }

    fn path(&self, file: &str) -> Result<(PathBuf, String), ConfigError> {
        let dir = self.dir.join(self.pipeline);
        std::fs::create_dir_all(&dir).map_err(|e| ConfigError(format!("{}: {e}", dir.display())))?;
        Ok((dir.join(file), format!("{}/{file}", self.pipeline)))
    }

    fn table(&mut self, file: &str, table: &Table) -> Step {
        let (path, rel) = self.path(file)?;
        table.write_file(&path, &self.comment)?;
        self.record.artifacts.push(rel);
        Ok(())
    }

    fn plot(&mut self, file: &str, title: &str, x: &str, y: &str, series: &[Series], axes: Axes) -> Step {
        let (path, rel) = self.path(file)?;
        plot::write_svg(&path, title, x, y, series, axes)?;
        self.record.artifacts.push(rel);
        Ok(())
    }
}

/// Runs one scenario file. Files go to `<out>/<scenario name>/<pipeline>/`.
pub fn run_scenario(path: &Path, pipeline: Pipeline, opts: &Options) -> Outcome {
    let fail = |message: String| Outcome::ConfigError { source: path.to_path_buf(), message };
    let (scenario, bytes) = match config::load(path) {
        Ok(x) => x,
        Err(e) => return fail(e.0),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let built = match config::build(scenario, base, opts.seed, opts.step) {
        Ok(b) => b,
        Err(e) => return fail(format!("{}: {}", path.display(), e.0)),
    };
    let sha256 = format!("{:x}", Sha256::digest(&bytes));
    let name = built.scenario.name.clone();
    let dir = opts.out.join(&name);
    let comment = format!("scenario={name} seed={} sha256={}", built.seed, &sha256[..16]);
    let record = RunRecord {
        scenario: name,
        source: path.display().to_string(),
        sha256,
        seed: built.seed,
        command: pipeline.name(),
        verdicts: Vec::new(),
        notes: Vec::new(),
        artifacts: Vec::new(),
    };
    let mut ctx = Ctx { built: &built, dir, comment, record, pipeline: pipeline.name() };
    let mut timings = BTreeMap::new();
    let stages: Vec<Pipeline> = match pipeline {
        Pipeline::All => vec![Pipeline::CheckDs, Pipeline::Converge, Pipeline::Maximal, Pipeline::Weights, Pipeline::Rearrange],
        single => vec![single],
    };
    for stage in stages {
        ctx.pipeline = stage.name();
        let started = Instant::now();
        let optional = pipeline == Pipeline::All;
        let result = match stage {
            Pipeline::CheckDs => check_ds(&mut ctx),
            Pipeline::Converge => converge(&mut ctx, optional),
            Pipeline::Maximal => maximal(&mut ctx, optional),
            Pipeline::Weights => weights(&mut ctx, optional),
            Pipeline::Rearrange => rearrange_pipeline(&mut ctx),
            Pipeline::All => unreachable!("expanded above"),
        };
        if let Err(e) = result {
            return fail(format!("{}: {}: {}", path.display(), stage.name(), e.0));
        }
        timings.insert(stage.name(), started.elapsed().as_secs_f64() * 1e3);
    }
    let record = ctx.record;
    if let Err(e) = write_json(&ctx.dir.join("record.json"), &record).and_then(|_| write_json(&ctx.dir.join("timings.json"), &timings)) {
        return fail(e.0);
    }
    Outcome::Completed(record)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Step {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| ConfigError(format!("{}: {e}", dir.display())))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| ConfigError(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

fn samples(built: &Built) -> Vec<Field> {
    let mut rng = sample::rng(built.seed.wrapping_add(1));
    let space = built.field.space();
    let mut out = vec![built.field.clone()];
    out.extend((0..built.scenario.tolerances.ds_samples).map(|_| sample::random_field(&mut rng, space, true, 0.3)));
    out
}

fn check_ds(ctx: &mut Ctx) -> Step {
    let t = &ctx.built.semigroup;
    let samples = samples(ctx.built);
    let ds = verify_ds(t, &samples, &DEFAULT_DS_STEPS)?;
    ctx.table("ds.csv", &io::ds_table(&ds))?;
    ctx.verdict(
        "ds_contraction",
        Grade::Exact,
        ds.pass,
        format!("max L1 ratio {}, max Linf ratio {}", num(ds.max_l1_ratio), num(ds.max_linf_ratio)),
    );

    let h = t.step();
    let mut law = Table::new(&["r", "s", "relative_l1_residual"]);
    let mut worst = 0.0f64;
    let mut pass = true;
    for (r, s) in [(h, h), (h, 2.0 * h), (3.0 * h, 5.0 * h)] {
        let rep = verify_semigroup(t, r, s, &samples)?;
        law.push([num(r), num(s), num(rep.residual)]);
        worst = worst.max(rep.residual);
        pass &= rep.pass;
    }
    ctx.table("semigroup_law.csv", &law)?;
    ctx.verdict("semigroup_law", Grade::Exact, pass, format!("max residual {}", num(worst)));

    let p = ctx.built.scenario.p;
    if p.is_finite() && !matches!(t.kind(), SemigroupKind::KernelPower { .. }) {
        let cont = verify_strong_continuity(t, &ctx.built.field, p, 4)?;
        ctx.table("continuity.csv", &io::pairs_table("s", "lp_displacement", &cont.rows))?;
        match cont.grid_floor {
            Some(floor) => ctx.note(format!("grid-locked kind; displacement floor at s = h is {}", num(floor))),
            None => {
                let refined = &cont.rows[1..];
                let monotone = refined.windows(2).all(|w| w[1].1 <= w[0].1);
                ctx.verdict("continuity_decreases", Grade::Estimate, monotone, "displacement shrinks as the step halves");
            }
        }
    }
    Ok(())
}

fn require_grid<'a>(ctx: &mut Ctx<'a>, optional: bool) -> Result<Option<(&'a [f64], Direction)>, ConfigError> {
    match &ctx.built.times {
        Some((t, d)) => Ok(Some((t.as_slice(), *d))),
        None if optional => {
            ctx.note("skipped: scenario has no grid");
            Ok(None)
        }
        None => Err(ConfigError("this pipeline needs a [grid] section".into())),
    }
}

fn converge(ctx: &mut Ctx, optional: bool) -> Step {
    let Some((times, direction)) = require_grid(ctx, optional)? else { return Ok(()) };
    let b = ctx.built;
    let (t, beta, f, p) = (&b.semigroup, &b.weight, &b.field, b.scenario.p);
    if !p.is_finite() {
        return Err(ConfigError("converge needs a finite exponent p".into()));
    }
    let ds = verify_ds(t, &samples(b), &DEFAULT_DS_STEPS)?;
    ctx.verdict("ds_precondition", Grade::Exact, ds.pass, format!("max norm ratio {}", num(ds.max_l1_ratio.max(ds.max_linf_ratio))));
    if !ds.pass {
        ctx.note("skipped convergence: the operator is not Dunford-Schwartz");
        return Ok(());
    }
    let (eps, thr) = (b.scenario.epsilon, b.scenario.tolerances.egorov_threshold);
    let report: ConvergenceReport = match direction {
        Direction::ToInfinity => flow_convergence_report(t, beta, f, p, times, eps, thr)?,
        Direction::ToZero => identify_local_limit(t, beta, f, p, times, eps, thr)?,
    };
    ctx.note(format!("mode {}", report.mode.name()));
    ctx.table("mean_norm.csv", &io::pairs_table("t", "lp_distance_to_limit", &report.mean_norm_table))?;
    ctx.table("egorov.csv", &io::egorov_table(&report.egorov))?;
    let axes = Axes { log_x: true, log_y: true };
    let tail: Vec<(f64, f64)> = report.egorov.rows.iter().map(|r| (r.t0, r.tail_sup)).collect();
    ctx.plot("egorov.svg", "kept-set tail supremum", "t0", "tail sup", &[Series::new("tail_sup", tail)], axes)?;
    ctx.plot("mean_norm.svg", "mean distance to the limit", "t", "Lp distance", &[Series::new("distance", report.mean_norm_table.clone())], axes)?;
    if let Some(limit) = &report.limit {
        ctx.table("limit.csv", &io::field_table(limit))?;
    }
    ctx.verdict(
        "egorov_tail",
        Grade::Estimate,
        report.egorov.verdict,
        format!(
            "final tail sup {} vs threshold {}, removed measure {}",
            num(report.egorov.final_tail_sup),
            num(thr),
            num(report.egorov.removed_measure)
        ),
    );
    if let Some(lambda) = &report.lambda {
        ctx.verdict(
            "lambda_bound",
            Grade::Exact,
            lambda.within_bound,
            format!(
                "estimate {}{:+}i, p_n(0) = {}{:+}i, gap {} <= {} + {}",
                num(lambda.estimate.re),
                lambda.estimate.im,
                num(lambda.reference.re),
                lambda.reference.im,
                num(lambda.gap),
                num(lambda.mean_deviation),
                num(lambda.polynomial_term)
            ),
        );
    }

    let profile = average_profile(t, beta, f, times, p)?;
    let source = rearrange(f);
    let mut worst = f64::INFINITY;
    for m in &profile.fields {
        worst = worst.min(majorizes(&source, &rearrange(m).scaled(1.0 / beta.bound())).margin);
    }
    ctx.verdict("averages_majorized", Grade::Exact, worst >= -ergolab::symmetric::MAJORIZATION_TOL, format!("smallest margin {}", num(worst)));

    if let Some(pn) = beta.approximants().last() {
        let last = *times.iter().max_by(|a, b| a.total_cmp(b)).expect("validated grid is non-empty");
        let tr = transfer_bound_check(t, beta, pn, f, last)?;
        ctx.verdict("transfer_bound", Grade::Exact, tr.pass, format!("lhs {} rhs {}", num(tr.lhs), num(tr.rhs)));
    }

    let mut norms = Table::new(&["norm", "contains_one", "limit_norm", "bound", "majorization_margin", "status"]);
    for entry in &b.norms {
        let has_one = contains_one(&entry.spec)?;
        if let Some(expected) = entry.expect_contains_one {
            ctx.verdict(format!("contains_one[{}]", entry.label), Grade::Exact, has_one == expected, format!("got {has_one}, expected {expected}"));
        }
        if has_one {
            norms.push([entry.label.clone(), "true".into(), String::new(), String::new(), String::new(), "rejected".into()]);
            continue;
        }
        let r = limit_in_space_check(&profile, report.limit.as_ref(), f, &entry.spec)?;
        norms.push([
            entry.label.clone(),
            "false".into(),
            num(r.limit_norm),
            num(r.norm_bound),
            num(r.majorization.margin),
            if r.pass { "pass" } else { "fail" }.into(),
        ]);
        ctx.verdict(format!("limit_in_space[{}]", entry.label), Grade::Exact, r.pass, format!("{} <= {}", num(r.limit_norm), num(r.norm_bound)));
    }
    if !b.norms.is_empty() {
        ctx.table("norms.csv", &norms)?;
    }
    Ok(())
}

fn maximal(ctx: &mut Ctx, optional: bool) -> Step {
    let Some((times, _)) = require_grid(ctx, optional)? else { return Ok(()) };
    let b = ctx.built;
    if !b.scenario.p.is_finite() {
        return Err(ConfigError("maximal needs a finite exponent p".into()));
    }
    let lambdas = match (&b.scenario.lambda.values, b.scenario.lambda.count) {
        (Some(v), _) => Some(v.clone()),
        (None, Some(count)) => {
            let norm = b.field.lp_norm(b.scenario.p)?;
            let sup = b.field.lp_norm(f64::INFINITY)?;
            Some(ergolab::maximal::default_lambda_grid(norm, b.weight.bound(), sup, count))
        }
        (None, None) => None,
    };
    let r = weak_type_check(&b.semigroup, &b.weight, &b.field, b.scenario.p, times, lambdas.as_deref())?;
    ctx.table("weak_type.csv", &io::weak_type_table(&r.rows))?;
    ctx.table("maximal_field.csv", &io::field_table(&r.maximal_field))?;
    let measured: Vec<(f64, f64)> = r.rows.iter().map(|w| (w.lambda, w.measure)).collect();
    let bound: Vec<(f64, f64)> = r.rows.iter().map(|w| (w.lambda, w.bound)).collect();
    let mut series = vec![Series::new("measure", measured), Series::new("weak-type bound", bound)];
    let worst = r.rows.iter().map(|w| w.ratio).fold(0.0, f64::max);
    ctx.verdict("weak_type", Grade::Exact, r.rows.iter().all(|w| w.pass), format!("{} thresholds, worst measure/bound {}", r.rows.len(), num(worst)));
    if let Some(d) = &r.discrete_rows {
        ctx.table("weak_type_discrete.csv", &io::weak_type_table(d))?;
        series.push(Series::new("discrete bound", d.iter().map(|w| (w.lambda, w.bound)).collect()));
        let worst = d.iter().map(|w| w.ratio).fold(0.0, f64::max);
        ctx.verdict("discrete_weak_type", Grade::Exact, d.iter().all(|w| w.pass), format!("worst measure/bound {}", num(worst)));
    }
    ctx.plot("weak_type.svg", "distribution of the maximal function", "lambda", "measure", &series, Axes { log_x: true, log_y: true })
}

fn weights(ctx: &mut Ctx, optional: bool) -> Step {
    let Some((times, direction)) = require_grid(ctx, optional)? else { return Ok(()) };
    let b = ctx.built;
    let beta = &b.weight;
    let approximants: Vec<TrigPolynomial> = if !beta.approximants().is_empty() {
        beta.approximants().to_vec()
    } else if let Some(period) = beta.period() {
        fourier_partial_sums(beta, period, 8)?
    } else if optional {
        ctx.note("skipped: weight has no approximant sequence");
        return Ok(());
    } else {
        return Err(ConfigError("weights needs a weight with approximants or a period".into()));
    };
    let h = b.semigroup.step();
    let mut summary = Table::new(&["n", "coefficient_mass", "limsup_estimate"]);
    let mut estimates = Vec::with_capacity(approximants.len());
    let mut last_profile = None;
    for (i, pn) in approximants.iter().enumerate() {
        let prof = limsup_profile(beta, pn, direction, times, h)?;
        summary.push([(i + 1).to_string(), num(pn.coefficient_mass()), num(prof.estimate)]);
        estimates.push(((i + 1) as f64, prof.estimate));
        last_profile = Some(prof);
    }
    ctx.table("approximants.csv", &summary)?;
    if let Some(prof) = &last_profile {
        ctx.table("mean_deviation.csv", &io::limsup_table(prof))?;
    }
    ctx.plot("approximants.svg", "limsup estimate of the mean deviation", "n", "estimate", &[Series::new("estimate", estimates.clone())], Axes::default())?;
    let improves = estimates.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9) + 1e-12);
    ctx.verdict("approximation_improves", Grade::Estimate, improves, format!("{} approximants", estimates.len()));
    let last_t = *times.iter().max_by(|a, b| a.total_cmp(b)).expect("validated grid is non-empty");
    let pn = approximants.last().expect("non-empty approximant list");
    let tr = transfer_bound_check(&b.semigroup, beta, pn, &b.field, last_t)?;
    ctx.verdict("transfer_bound", Grade::Exact, tr.pass, format!("lhs {} rhs {}", num(tr.lhs), num(tr.rhs)));
    Ok(())
}

fn rearrange_pipeline(ctx: &mut Ctx) -> Step {
    let b = ctx.built;
    let f = &b.field;
    let profile = rearrange(f);
    ctx.table("rearrangement.csv", &io::rearrangement_table(&profile))?;
    let steps: Vec<(f64, f64)> = std::iter::once(0.0)
        .chain(profile.breakpoints.iter().copied())
        .zip(profile.levels.iter().copied())
        .flat_map(|(a, l)| [(a, l), (a, l)])
        .enumerate()
        .map(|(i, (a, l))| if i % 2 == 0 { (a, l) } else { (profile.breakpoints[i / 2], l) })
        .collect();
    ctx.plot("rearrangement.svg", "non-increasing rearrangement", "t", "f*(t)", &[Series::new("f*", steps)], Axes::default())?;

    let moduli = f.moduli();
    let scale = profile.total().max(f.space().total_measure()).max(1.0);
    let equimeasurable = moduli
        .iter()
        .filter(|m| **m > 0.0)
        .all(|&l| (profile.distribution(l) - f.distribution(l).unwrap_or(f64::NAN)).abs() <= 1e-12 * scale);
    ctx.verdict("equimeasurable", Grade::Exact, equimeasurable, "distribution of f* matches |f| at every level");
    let l1 = f.lp_norm(1.0)?;
    ctx.verdict(
        "integral_preserved",
        Grade::Exact,
        (profile.total() - l1).abs() <= 1e-12 * l1.max(1.0),
        format!("integral of f* {} vs L1 norm {}", num(profile.total()), num(l1)),
    );

    let sup = f.lp_norm(f64::INFINITY)?;
    let probes: Vec<f64> = match &b.scenario.lambda.values {
        Some(v) => v.clone(),
        None if sup > 0.0 => (0..7).map(|k| sup * 10f64.powi(-k)).collect(),
        None => vec![1.0],
    };
    let fava = fava_membership(f, b.tail, &probes)?;
    ctx.table("fava.csv", &io::pairs_table("lambda", "distribution", &fava.rows))?;
    if let Some(expected) = b.scenario.expect_fava_member {
        ctx.verdict("fava_member", Grade::Exact, fava.member == expected, format!("member {}, expected {expected}", fava.member));
    } else {
        ctx.note(format!("Fava member: {}", fava.member));
    }
    if fava.member {
        let eps = b.scenario.epsilon;
        let (g, h) = fava_decompose(f, eps, b.tail)?;
        let exact = g.values().iter().zip(h.values()).zip(f.values()).all(|((a, c), z)| a + c == *z);
        let small = h.lp_norm(f64::INFINITY)? <= eps;
        ctx.table("fava_large_part.csv", &io::field_table(&g))?;
        ctx.table("fava_small_part.csv", &io::field_table(&h))?;
        ctx.verdict("fava_decomposition", Grade::Exact, exact && small, format!("epsilon {}", num(eps)));
    }

    let mut norms = Table::new(&["norm", "value", "contains_one"]);
    for entry in &b.norms {
        let value = ergolab::symmetric::symmetric_norm(f, &entry.spec)?;
        let has_one = contains_one(&entry.spec)?;
        norms.push([entry.label.clone(), num(value), has_one.to_string()]);
        if let Some(expected) = entry.expect_contains_one {
            ctx.verdict(format!("contains_one[{}]", entry.label), Grade::Exact, has_one == expected, format!("got {has_one}, expected {expected}"));
        }
    }
    if !b.norms.is_empty() {
        ctx.table("norms.csv", &norms)?;
    }
    Ok(())
}
