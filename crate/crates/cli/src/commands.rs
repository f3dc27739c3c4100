//! The three subcommands. Each returns the process exit code on success.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;
use wfock::harness::{InstanceFamily, Num, VerificationReport, Workbench};
use wfock::{FockModel, WeightMassCache};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::tables::Tables;

pub struct Context {
    pub out: PathBuf,
    pub quiet: bool,
}

impl Context {
    pub fn new(config: &RunConfig, out: Option<PathBuf>, quiet: bool) -> Self {
        let out = out
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("wfock-out"));
        Context { out, quiet }
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn prepare(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| io(&self.out, e))
    }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Runs every configured verification over the family, builds a merged
/// report and checks that it re-reads to the same verdicts.
pub fn analyze_report(family: &InstanceFamily) -> Result<VerificationReport, CliError> {
    let wb = Workbench::new(family)?;
    let mut reports = vec![wb.boundedness(), wb.compactness()];
    for &p in &family.analysis.p_list {
        reports.push(wb.schatten(p)?);
    }
    for g in &family.analysis.gauges {
        reports.push(wb.schatten_gauge(g)?);
    }
    Ok(VerificationReport::merge(reports)?)
}

fn check_round_trip(report: &VerificationReport, json: &str) -> Result<(), CliError> {
    let back = VerificationReport::from_json(json).map_err(|e| CliError::RoundTrip(e.to_string()))?;
    let mismatches = back.rederive_verdicts();
    if let Some((key, stored, derived)) = mismatches.first() {
        return Err(CliError::RoundTrip(format!(
            "{key}: stored {stored}, re-derived {derived}"
        )));
    }
    if back.verdicts != report.verdicts || back.compute_hash() != report.determinism_hash {
        return Err(CliError::RoundTrip(
            "re-read report differs from the one written".into(),
        ));
    }
    Ok(())
}

pub fn analyze(config: &RunConfig, ctx: &Context) -> Result<u8, CliError> {
    let family = config.family()?;
    ctx.prepare()?;
    let report = analyze_report(&family)?;
    let json = report.to_json()?;
    let path = ctx.out.join("report.json");
    std::fs::write(&path, &json).map_err(|e| io(&path, e))?;
    let tables = Tables::from_report(&report);
    tables.write(&ctx.out.join("tables"))?;
    check_round_trip(&report, &json)?;
    for (key, verdict) in &report.verdicts {
        ctx.say(format!("{key}: {verdict}"));
    }
    ctx.say(format!("family constant {}", report.family_constant));
    ctx.say(format!("wrote {}", path.display()));
    Ok(if report.any_failure() { 2 } else { 0 })
}

pub fn spectrum(config: &RunConfig, label: &str, ctx: &Context) -> Result<u8, CliError> {
    let mut family = config.family()?;
    family.measures.retain(|m| m.label == label);
    if family.measures.is_empty() {
        let known: Vec<&str> = config.measures.iter().map(|m| m.label.as_str()).collect();
        return Err(CliError::Config(format!(
            "no measure labeled `{label}` (known: {})",
            known.join(", ")
        )));
    }
    ctx.prepare()?;
    let wb = Workbench::new(&family)?;
    let s = wb.spectrum(label)?;
    let path = ctx.out.join(format!("spectrum_{label}.csv"));
    let err = csv_error(&path);
    let mut w = csv::Writer::from_path(&path).map_err(&err)?;
    w.write_record(["n", "s_n"]).map_err(&err)?;
    for (n, v) in s.values.iter().enumerate() {
        w.write_record([(n + 1).to_string(), Num(*v).to_string()])
            .map_err(&err)?;
    }
    w.flush().map_err(|e| io(&path, e))?;
    ctx.say(format!(
        "{label}: {} singular values at N={}, s_1 = {}",
        s.len(),
        wb.largest_model().degree(),
        s.s(1)
    ));
    ctx.say(format!("wrote {}", path.display()));
    Ok(0)
}

#[derive(Debug, Deserialize)]
struct PointPair {
    a_re: f64,
    a_im: f64,
    z_re: f64,
    z_im: f64,
}

/// Kernel diagnostics of one pair; `None` values go out as NaN.
struct KernelRow {
    abs_kernel: f64,
    norm_a: f64,
    norm_z: f64,
    kernel_norm_ratio: f64,
    upper: f64,
    lower: f64,
}

fn kernel_row(m: &FockModel, masses: &WeightMassCache, r: f64, a: Complex64, z: Complex64) -> wfock::Result<KernelRow> {
    let k = m.kernel_eval(a, z)?;
    let (ma, mz) = (masses.disk_mass(a, r)?, masses.disk_mass(z, r)?);
    let damped = m.damped_kernel_modulus(a, z);
    Ok(KernelRow {
        abs_kernel: k.value.norm(),
        norm_a: k.norm_a,
        norm_z: m.kernel_diagonal(z).sqrt(),
        kernel_norm_ratio: m.damped_kernel_diagonal(a) * ma,
        upper: damped * (ma * mz).sqrt(),
        lower: damped * ma,
    })
}

pub fn kernels(config: &RunConfig, points: &Path, ctx: &Context) -> Result<u8, CliError> {
    let model = config.model();
    let degree = config.kernel_degree();
    let r = config.analysis.r;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(points)
        .map_err(csv_error(points))?;
    let pairs = reader
        .deserialize::<PointPair>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(csv_error(points))?;
    ctx.prepare()?;
    let m = model.build(degree)?;
    let masses = WeightMassCache::new(model.weight.clone(), model.plan);
    let path = ctx.out.join("kernels.csv");
    let err = csv_error(&path);
    let mut w = csv::Writer::from_path(&path).map_err(&err)?;
    w.write_record([
        "a_re",
        "a_im",
        "z_re",
        "z_im",
        "abs_kernel",
        "norm_a",
        "norm_z",
        "kernel_norm_ratio",
        "upper_bound_quantity",
        "lower_bound_quantity",
        "flag",
    ])
    .map_err(&err)?;
    let mut flagged = 0;
    for p in &pairs {
        let (a, z) = (Complex64::new(p.a_re, p.a_im), Complex64::new(p.z_re, p.z_im));
        let (row, flag) = match kernel_row(&m, &masses, r, a, z) {
            Ok(row) => (row, String::new()),
            Err(e) => {
                flagged += 1;
                let nan = f64::NAN;
                let row = KernelRow {
                    abs_kernel: nan,
                    norm_a: nan,
                    norm_z: nan,
                    kernel_norm_ratio: nan,
                    upper: nan,
                    lower: nan,
                };
                (row, e.to_string())
            }
        };
        let mut record: Vec<String> = [p.a_re, p.a_im, p.z_re, p.z_im].iter().map(|v| v.to_string()).collect();
        record.extend(
            [
                row.abs_kernel,
                row.norm_a,
                row.norm_z,
                row.kernel_norm_ratio,
                row.upper,
                row.lower,
            ]
            .iter()
            .map(|v| Num(*v).to_string()),
        );
        record.push(flag);
        w.write_record(&record).map_err(&err)?;
    }
    w.flush().map_err(|e| io(&path, e))?;
    ctx.say(format!(
        "{} pairs at N={degree} (evaluation radius {:.3}), {flagged} flagged",
        pairs.len(),
        m.eval_radius()
    ));
    ctx.say(format!("wrote {}", path.display()));
    Ok(0)
}
