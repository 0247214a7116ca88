//! Executes a run configuration and writes its artifacts: one CSV ledger
//! and one JSON verdict per experiment, plus `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use knlab_core::experiments::checks::{
    cs_check, equator_restriction, equator_tube_mass, gauss_check, gram_check, kernel_decay, lp_scaling, row_scaling,
    tube_floor, tube_trend, zonal_sup,
};
use knlab_core::experiments::{
    delta, delta_table, holder_chain, kn_table, prop3_torus_check, verify_bourgain, verify_corollary2,
    verify_estimate_1, verify_theorem1, write_rows, InequalityReport, Ladder, LedgerRow, Workbench,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentSpec, RunConfig};
use crate::error::{CliError, Result};

/// Allowed deviation of a fitted `L^p` exponent from `delta(p)`.
pub const LP_SLOPE_TOLERANCE: f64 = 0.03;
/// Allowed deviation of the equatorial restriction exponent from 1/2.
pub const RESTRICTION_SLOPE_TOLERANCE: f64 = 0.05;
/// Largest accepted `|trend|` of the equatorial tube mass.
pub const TUBE_TREND_TOLERANCE: f64 = 0.05;
/// Degree at which the tube floor is calibrated.
pub const TUBE_FLOOR_K: usize = 64;
pub const ZONAL_TOLERANCE: f64 = 1e-6;
pub const GAUSS_TOLERANCE: f64 = 1e-5;
/// Step-halving ratios must lie within this fraction of 4.
pub const HALVING_TOLERANCE: f64 = 0.2;
/// Differencing steps of the Gauss-lemma check.
pub const GAUSS_STEP: f64 = 1e-3;
pub const GAUSS_COARSE_STEP: f64 = 0.02;
/// Frozen floor for `min |det|` over the sphere probe grid.
pub const CS_FLOOR: f64 = 9.65;
pub const CS_DEGENERATE_TOLERANCE: f64 = 1e-10;
/// Largest accepted kernel decay slope along the primary direction.
pub const KERNEL_SLOPE: f64 = -1.8;
/// Directions swept by `kernel-decay`; the first is the primary one.
pub const KERNEL_DIRECTIONS: [[f64; 2]; 4] = [[0.0, 1.0], [1.0, 0.0], [1.0, 1.0], [-1.0, 1.0]];
/// `N I(N)` may vary by at most this fraction across `N`.
pub const ROW_SPREAD: f64 = 0.25;
/// Largest accepted ratio of Gram norms across `lambda`.
pub const GRAM_FACTOR: f64 = 2.0;
/// `||G|| / J` may vary by at most this fraction across `J`.
pub const COINCIDENT_SPREAD: f64 = 0.1;

/// Verdict object written next to each ledger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRecord {
    pub experiment: String,
    pub family: String,
    pub params: serde_json::Value,
    /// `PASS` or `FAIL`.
    pub verdict: String,
    pub slopes: BTreeMap<String, f64>,
    pub max_ratio: Option<f64>,
    pub notes: Vec<String>,
    /// Per-family verdicts when the experiment covers several families.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<VerdictRecord>,
}

impl VerdictRecord {
    pub fn pass(&self) -> bool {
        self.verdict == "PASS"
    }
}

fn word(pass: bool) -> String {
    if pass { "PASS" } else { "FAIL" }.to_string()
}

/// Generic ledger line for the checks whose rows are not per-degree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub quantity: String,
    pub label: String,
    pub x: f64,
    pub value: f64,
}

fn m(quantity: &str, label: impl Into<String>, x: f64, value: f64) -> Measurement {
    Measurement {
        quantity: quantity.to_string(),
        label: label.into(),
        x,
        value,
    }
}

/// Ledger bytes and verdict of one experiment.
pub struct Outcome {
    pub csv: Vec<u8>,
    pub verdict: VerdictRecord,
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::io("ledger", e.into_error()))
}

fn ledger_bytes(rows: &[LedgerRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf)?;
    Ok(buf)
}

fn params_of(spec: &ExperimentSpec) -> serde_json::Value {
    let mut v = serde_json::to_value(spec).expect("spec serializes");
    if let Some(map) = v.as_object_mut() {
        map.remove("name");
    }
    v
}

/// Shared state of one run.
pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub workbench: &'a Workbench,
}

impl Context<'_> {
    fn families(&self, spec: &ExperimentSpec) -> Vec<Ladder> {
        spec.families
            .as_deref()
            .unwrap_or(&self.config.families)
            .iter()
            .map(|l| self.config.seeded(l))
            .collect()
    }

    fn scale(&self) -> f64 {
        self.workbench.settings().resolution_scale
    }
}

fn record(name: &str, family: impl Into<String>, spec: &ExperimentSpec) -> VerdictRecord {
    VerdictRecord {
        experiment: name.to_string(),
        family: family.into(),
        params: params_of(spec),
        verdict: word(true),
        slopes: BTreeMap::new(),
        max_ratio: None,
        notes: Vec::new(),
        details: Vec::new(),
    }
}

/// Record of one family; `params` holds the report's own parameters.
fn from_report(report: &InequalityReport) -> VerdictRecord {
    let params = serde_json::to_value(&report.params).expect("params serialize");
    VerdictRecord {
        experiment: report.experiment.clone(),
        family: report.family.clone(),
        params,
        verdict: word(report.verdict.pass),
        slopes: report.verdict.slopes.clone(),
        max_ratio: Some(report.verdict.max_ratio),
        notes: report.verdict.notes.clone(),
        details: Vec::new(),
    }
}

/// Folds per-family verdicts into one record: slopes keyed
/// `family:name`, the largest ratio, PASS iff every family passes.
fn combine(name: &str, spec: &ExperimentSpec, parts: Vec<VerdictRecord>) -> VerdictRecord {
    if parts.len() == 1 {
        let mut only = parts.into_iter().next().expect("one part");
        let mut params = params_of(spec);
        if let (Some(map), Some(own)) = (params.as_object_mut(), only.params.as_object()) {
            for (k, v) in own {
                map.entry(k.clone()).or_insert_with(|| v.clone());
            }
        }
        only.params = params;
        return only;
    }
    let mut out = record(
        name,
        parts.iter().map(|p| p.family.as_str()).collect::<Vec<_>>().join(","),
        spec,
    );
    for p in &parts {
        for (k, v) in &p.slopes {
            out.slopes.insert(format!("{}:{k}", p.family), *v);
        }
        out.max_ratio = match (out.max_ratio, p.max_ratio) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }
    out.verdict = word(parts.iter().all(|p| p.pass()));
    out.details = parts;
    out
}

fn ladder_reports(
    ctx: &Context,
    spec: &ExperimentSpec,
    f: impl Fn(&Ladder) -> knlab_core::Result<InequalityReport>,
) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut parts = Vec::new();
    for ladder in ctx.families(spec) {
        let report = f(&ladder)?;
        parts.push(from_report(&report));
        rows.extend(report.rows);
    }
    Ok(Outcome {
        csv: ledger_bytes(&rows)?,
        verdict: combine(&spec.name, spec, parts),
    })
}

/// Runs one resolved experiment.
pub fn execute(ctx: &Context, spec: &ExperimentSpec) -> Result<Outcome> {
    let wb = ctx.workbench;
    let name = spec.name.as_str();
    let ks = spec.k_range.clone().unwrap_or_default();
    match name {
        "delta-table" => {
            let rows = delta_table();
            let monotone = rows.windows(2).all(|w| w[0].delta <= w[1].delta);
            let mut v = record(name, "", spec);
            v.verdict = word(monotone && rows.last().map(|r| r.delta) == Some(0.5));
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: v,
            })
        }
        "zonal-sup" => {
            let rows = zonal_sup(&ks, ctx.scale())?;
            let err = rows.iter().map(|r| (r.computed - r.exact).abs()).fold(0.0, f64::max);
            let mut v = record(name, "zonal", spec);
            v.max_ratio = Some(rows.iter().map(|r| r.computed / r.exact).fold(0.0, f64::max));
            v.notes.push(format!("max |computed - exact| = {err:e}"));
            v.verdict = word(err <= ZONAL_TOLERANCE);
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: v,
            })
        }
        "lp-scaling" => {
            let ps = spec.ps.clone().unwrap_or_default();
            let mut rows = Vec::new();
            let mut parts = Vec::new();
            for ladder in ctx.families(spec) {
                let fits = lp_scaling(wb, &ladder, &ps, &ks)?;
                let mut v = record(name, ladder.label(), spec);
                let mut pass = true;
                for (p, fit) in &fits {
                    let expected = delta(*p)?;
                    v.slopes.insert(format!("p={p}"), fit.slope);
                    rows.push(m("slope", ladder.label(), *p, fit.slope));
                    rows.push(m("expected", ladder.label(), *p, expected));
                    rows.push(m("r2", ladder.label(), *p, fit.r2));
                    if ladder.saturating() {
                        pass &= (fit.slope - expected).abs() <= LP_SLOPE_TOLERANCE;
                    }
                }
                if !ladder.saturating() {
                    v.notes.push("non-saturating family: slopes recorded only".into());
                }
                v.verdict = word(pass);
                parts.push(v);
            }
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: combine(name, spec, parts),
            })
        }
        "equator-restriction" => {
            let fit = equator_restriction(&ks)?;
            let rows: Vec<Measurement> = ks
                .iter()
                .zip(&fit.pairs)
                .map(|(&k, &(l, v))| m("restriction", format!("k={k}"), l, v))
                .collect();
            let mut v = record(name, "highest_weight", spec);
            v.slopes.insert("fit".into(), fit.slope);
            v.verdict = word((fit.slope - 0.5).abs() <= RESTRICTION_SLOPE_TOLERANCE);
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: v,
            })
        }
        "tube-concentration" => {
            let rows = equator_tube_mass(&ks, ctx.scale())?;
            let trend = tube_trend(&rows)?;
            let floor = tube_floor();
            let above = rows.iter().filter(|r| r.k >= TUBE_FLOOR_K).all(|r| r.mass > floor);
            let mut v = record(name, "highest_weight", spec);
            v.slopes.insert("trend".into(), trend);
            v.max_ratio = rows.iter().map(|r| r.mass / floor).reduce(f64::max);
            v.notes.push(format!("floor c0 = {floor}"));
            v.verdict = word(trend.abs() <= TUBE_TREND_TOLERANCE && above);
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: v,
            })
        }
        "gauss-lemma" => {
            let count = spec.count.unwrap_or(50);
            let report = gauss_check(count, ctx.config.seed, GAUSS_STEP, GAUSS_COARSE_STEP)?;
            let mut rows = vec![
                m("residual_max", "sphere", GAUSS_STEP, report.sphere_max),
                m("residual_max", "perturbed_sphere", GAUSS_STEP, report.perturbed_max),
            ];
            rows.extend(
                report
                    .halving_ratios
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| m("halving_ratio", format!("config={i}"), GAUSS_COARSE_STEP, r)),
            );
            let ratios_ok = report
                .halving_ratios
                .iter()
                .all(|r| (r / 4.0 - 1.0).abs() <= HALVING_TOLERANCE);
            let mut v = record(name, "sphere,perturbed_sphere", spec);
            v.max_ratio = Some(report.sphere_max.max(report.perturbed_max) / GAUSS_TOLERANCE);
            v.notes.push(format!("median halving ratio {}", report.median_ratio()));
            v.verdict =
                word(report.sphere_max <= GAUSS_TOLERANCE && report.perturbed_max <= GAUSS_TOLERANCE && ratios_ok);
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: v,
            })
        }
        "cs-determinant" => {
            let n = spec.grid.unwrap_or(16);
            let r = cs_check(n)?;
            let rows = vec![
                m("min_abs_det", "sphere", n as f64, r.min_abs),
                m("max_abs_det", "sphere", n as f64, r.max_abs),
                m("max_abs_det", "degenerate", n as f64, r.degenerate_max),
            ];
            let mut v = record(name, "sphere", spec);
            v.max_ratio = Some(CS_FLOOR / r.min_abs);
            v.verdict = word(r.min_abs >= CS_FLOOR && r.degenerate_max <= CS_DEGENERATE_TOLERANCE);
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: v,
            })
        }
        "kernel-decay" => {
            let lambda = spec.lambda.unwrap_or(100.0);
            let ns: Vec<usize> = spec.ns.iter().flatten().map(|&n| n as usize).collect();
            let sweeps = kernel_decay(lambda, &KERNEL_DIRECTIONS)?;
            let mut rows = Vec::new();
            let mut v = record(name, "sphere", spec);
            for (s, d) in sweeps.iter().zip(KERNEL_DIRECTIONS) {
                let label = format!("({}, {})", d[0], d[1]);
                v.slopes.insert(format!("kernel{label}"), s.slope);
                rows.extend(s.points.iter().map(|&(r, k)| m("kernel", label.clone(), r, k)));
            }
            let integrals = row_scaling(lambda, &ns)?;
            let scaled: Vec<f64> = integrals.iter().map(|r| r.value * r.n as f64).collect();
            rows.extend(integrals.iter().map(|r| m("row_integral", "", r.n as f64, r.value)));
            let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = scaled.iter().copied().fold(0.0, f64::max);
            let spread = hi / lo - 1.0;
            v.slopes.insert("row_n_spread".into(), spread);
            let decay_ok = sweeps[0].slope <= KERNEL_SLOPE;
            let rows_ok = spread <= ROW_SPREAD;
            if !rows_ok {
                v.notes
                    .push(format!("N I(N) varies by {:.0}% across N", 100.0 * spread));
            }
            v.verdict = word(decay_ok && rows_ok);
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: v,
            })
        }
        "gram-norm" => {
            let lambdas = spec.lambdas.clone().unwrap_or_default();
            let coincident = spec.coincident.clone().unwrap_or_default();
            let r = gram_check(&lambdas, spec.count.unwrap_or(32), &coincident)?;
            let mut rows: Vec<Measurement> = r.separated.iter().map(|&(l, g)| m("separated", "", l, g)).collect();
            rows.extend(r.coincident.iter().map(|&(j, g)| m("coincident", "", j as f64, g)));
            let sep: Vec<f64> = r.separated.iter().map(|p| p.1).collect();
            let factor = sep.iter().copied().fold(0.0, f64::max) / sep.iter().copied().fold(f64::INFINITY, f64::min);
            let per_j: Vec<f64> = r.coincident.iter().map(|&(j, g)| g / j as f64).collect();
            let spread =
                per_j.iter().copied().fold(0.0, f64::max) / per_j.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
            let mut v = record(name, "sphere", spec);
            v.max_ratio = Some(factor);
            v.slopes.insert("coincident_spread".into(), spread);
            v.verdict = word(factor <= GRAM_FACTOR && spread <= COINCIDENT_SPREAD);
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: v,
            })
        }
        "holder-chain" => {
            let cells: Vec<(Ladder, usize)> = ctx
                .families(spec)
                .into_iter()
                .flat_map(|l| ks.iter().map(move |&k| (l.clone(), k)))
                .collect();
            cells.par_iter().try_for_each(|(l, k)| -> knlab_core::Result<()> {
                let cell = wb.cell(l, *k)?;
                wb.kn(&cell)?;
                Ok(())
            })?;
            let rows = holder_chain(wb)?;
            let mut v = record(name, "all", spec);
            v.max_ratio = rows.iter().map(|r| r.lhs / r.rhs).reduce(f64::max);
            v.notes.push(format!("{} (field, tube) pairs", rows.len()));
            v.verdict = word(rows.iter().all(|r| r.holds));
            Ok(Outcome {
                csv: csv_bytes(&rows)?,
                verdict: v,
            })
        }
        "kn-maximal" => ladder_reports(ctx, spec, |l| kn_table(wb, l, &ks)),
        "verify-estimate1" => ladder_reports(ctx, spec, |l| verify_estimate_1(wb, l, spec.p.unwrap_or(4.0), &ks)),
        "verify-bourgain" => ladder_reports(ctx, spec, |l| verify_bourgain(wb, l, spec.p.unwrap_or(4.0), &ks)),
        "verify-theorem1" => {
            let eps = spec.eps_grid.clone().unwrap_or_default();
            ladder_reports(ctx, spec, |l| verify_theorem1(wb, l, &ks, &eps))
        }
        "verify-corollary2" => {
            let report = verify_corollary2(wb, &ctx.families(spec), spec.p.unwrap_or(4.0), &ks)?;
            let parts = report
                .families
                .iter()
                .map(|t| {
                    let mut v = record(name, t.family.clone(), spec);
                    for (q, s) in ["bi", "bii", "biii"].iter().zip(t.slopes) {
                        v.slopes.insert((*q).into(), s);
                    }
                    v.notes.push(format!(
                        "{} family; classes {:?}",
                        if t.saturating { "saturating" } else { "non-saturating" },
                        t.classes
                    ));
                    v.verdict = word(t.as_expected);
                    v
                })
                .collect();
            let mut v = combine(name, spec, parts);
            if !report.equivalence_consistent {
                v.notes
                    .push("a family has decaying (bii) with non-decaying (biii)".into());
            }
            v.verdict = word(report.pass);
            Ok(Outcome {
                csv: ledger_bytes(&report.rows)?,
                verdict: v,
            })
        }
        "prop3-torus" => {
            let report = prop3_torus_check(
                spec.ns.as_deref().unwrap_or_default(),
                spec.slopes.as_deref().unwrap_or_default(),
            )?;
            let mut v = record(name, "torus_wave", spec);
            for (sigma, s) in &report.fits {
                v.slopes.insert(format!("slope={sigma}"), *s);
            }
            v.notes = report.warnings.clone();
            v.verdict = word(report.pass);
            Ok(Outcome {
                csv: csv_bytes(&report.rows)?,
                verdict: v,
            })
        }
        other => Err(CliError::config("experiments", format!("unknown experiment `{other}`"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentEntry {
    pub index: usize,
    pub name: String,
    pub csv: String,
    pub json: String,
    pub verdict: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Pass,
    Fail,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    /// The resolved configuration as TOML.
    pub config: String,
    pub jobs: usize,
    pub status: RunStatus,
    pub experiments: Vec<ExperimentEntry>,
    pub error: Option<String>,
    pub total_seconds: f64,
}

pub struct RunOptions {
    pub out: PathBuf,
    pub jobs: usize,
}

/// Name of the marker left in the output directory by a run that stopped
/// on a numerical error.
pub const FAILED_MARKER: &str = "FAILED";

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Runs every experiment of `config` in order, sharing one workbench.
/// Returns the manifest; a numerical error stops the run, leaves the
/// finished artifacts and a `FAILED` marker, and is returned as `Err`.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<Manifest> {
    config.validate(None)?;
    let resolved = config.resolved();
    fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
    let marker = opts.out.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| CliError::io(&marker, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build()?;
    let workbench = Workbench::new(resolved.settings);
    let ctx = Context {
        config: &resolved,
        workbench: &workbench,
    };
    let start = Instant::now();
    let mut manifest = Manifest {
        tool: "knlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config.hash(),
        config: resolved.to_toml(),
        jobs: opts.jobs,
        status: RunStatus::Pass,
        experiments: Vec::new(),
        error: None,
        total_seconds: 0.0,
    };
    let mut failure = None;
    for (i, spec) in resolved.experiments.iter().enumerate() {
        let t = Instant::now();
        let outcome = pool.install(|| execute(&ctx, spec));
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                let msg = format!("experiments[{i}] {}: {e}", spec.name);
                write(&marker, format!("{msg}\n").as_bytes())?;
                manifest.status = RunStatus::Failed;
                manifest.error = Some(msg);
                failure = Some(e);
                break;
            }
        };
        let stem = format!("{:02}-{}", i, spec.name);
        let csv = format!("{stem}.csv");
        let json = format!("{stem}.json");
        write(&opts.out.join(&csv), &outcome.csv)?;
        let mut text = serde_json::to_vec_pretty(&outcome.verdict)?;
        text.push(b'\n');
        write(&opts.out.join(&json), &text)?;
        if !outcome.verdict.pass() && manifest.status == RunStatus::Pass {
            manifest.status = RunStatus::Fail;
        }
        manifest.experiments.push(ExperimentEntry {
            index: i,
            name: spec.name.clone(),
            csv,
            json,
            verdict: outcome.verdict.verdict.clone(),
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    manifest.total_seconds = start.elapsed().as_secs_f64();
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    write(&opts.out.join("manifest.json"), &text)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
