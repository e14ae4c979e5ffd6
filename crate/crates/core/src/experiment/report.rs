use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::sweep::{SweepResults, SweepRow};
use crate::dp_pipelines::{ArtifactMetadata, DpMethod};
use crate::{Error, Result};

pub const RESULTS_COLUMNS: [&str; 13] = [
    "method",
    "epsilon",
    "seed",
    "acc_nonprivate",
    "acc_private",
    "utility_loss",
    "tpr",
    "fpr",
    "privacy_leakage",
    "true_revealed_records",
    "trr_rate",
    "wall_time_seconds",
    "status",
];

const RESULTS_FILE: &str = "results.csv";
const SUMMARY_FILE: &str = "summary.json";
const FIG_UTILITY: &str = "fig_utility_loss.csv";
const FIG_LEAKAGE: &str = "fig_privacy_leakage.csv";
const FIG_TRR: &str = "fig_trr.csv";

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros
/// dropped, scientific notation outside `1e-4 ..< 1e12`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if !(-4..12).contains(&exponent) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exponent.abs())
    } else {
        let decimals = (11 - exponent) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// Medians over seeds for one (method, ε). `None` when every seed failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub method: DpMethod,
    pub epsilon: f64,
    pub seeds_ok: usize,
    pub seeds_failed: usize,
    pub acc_private: Option<f64>,
    pub utility_loss: Option<f64>,
    pub privacy_leakage: Option<f64>,
    pub true_revealed_records: Option<f64>,
    pub trr_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config_fingerprint: String,
    pub groups: Vec<GroupSummary>,
}

impl Summary {
    pub fn group(&self, method: DpMethod, epsilon: f64) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.method == method && g.epsilon == epsilon)
    }

    /// ε-ordered series of one metric for one method.
    pub fn series(&self, method: DpMethod, metric: impl Fn(&GroupSummary) -> Option<f64>) -> Vec<(f64, Option<f64>)> {
        self.groups
            .iter()
            .filter(|g| g.method == method)
            .map(|g| (g.epsilon, metric(g)))
            .collect()
    }
}

/// Median over successful seeds per (method, ε), in cell order.
pub fn summarize(results: &SweepResults) -> Summary {
    let mut groups: Vec<((DpMethod, u64), Vec<&SweepRow>)> = Vec::new();
    for row in &results.rows {
        let key = (row.cell.method, row.cell.epsilon.to_bits());
        match groups.last_mut() {
            Some((k, rows)) if *k == key => rows.push(row),
            _ => groups.push((key, vec![row])),
        }
    }
    let groups = groups
        .into_iter()
        .map(|((method, eps_bits), rows)| {
            let ok: Vec<_> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let med = |f: &dyn Fn(&crate::audit::AuditReport) -> f64| {
                let mut v: Vec<f64> = ok.iter().map(|r| f(r)).collect();
                median(&mut v)
            };
            GroupSummary {
                method,
                epsilon: f64::from_bits(eps_bits),
                seeds_ok: ok.len(),
                seeds_failed: rows.len() - ok.len(),
                acc_private: med(&|r| r.acc_private),
                utility_loss: med(&|r| r.utility_loss),
                privacy_leakage: med(&|r| r.privacy_leakage),
                true_revealed_records: med(&|r| r.true_revealed_records as f64),
                trr_rate: med(&|r| r.trr_rate),
            }
        })
        .collect();
    Summary {
        config_fingerprint: results.config_fingerprint.clone(),
        groups,
    }
}

fn results_csv(results: &SweepResults) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(RESULTS_COLUMNS)?;
    for row in &results.rows {
        let wall = if results.record_wall_time {
            format_float(row.wall_time_seconds)
        } else {
            String::new()
        };
        let mut record = vec![
            row.cell.method.as_str().to_string(),
            format_float(row.cell.epsilon),
            row.cell.seed.to_string(),
        ];
        match &row.outcome {
            Ok(r) => record.extend([
                format_float(r.acc_nonprivate),
                format_float(r.acc_private),
                format_float(r.utility_loss),
                format_float(r.tpr),
                format_float(r.fpr),
                format_float(r.privacy_leakage),
                r.true_revealed_records.to_string(),
                format_float(r.trr_rate),
            ]),
            Err(_) => record.extend(std::iter::repeat_n(String::new(), 8)),
        }
        record.push(wall);
        record.push(row.status());
        out.write_record(&record)?;
    }
    out.into_inner().map_err(|e| Error::io(RESULTS_FILE, e.into_error()))
}

fn figure_csv(summary: &Summary, metric: fn(&GroupSummary) -> Option<f64>) -> Result<Vec<u8>> {
    let mut methods: Vec<DpMethod> = summary.groups.iter().map(|g| g.method).collect();
    methods.dedup();
    let mut by_eps: BTreeMap<u64, BTreeMap<DpMethod, Option<f64>>> = BTreeMap::new();
    for g in &summary.groups {
        // positive finite floats order like their bit patterns
        by_eps.entry(g.epsilon.to_bits()).or_default().insert(g.method, metric(g));
    }
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["epsilon".to_string()];
    header.extend(methods.iter().map(|m| m.as_str().to_string()));
    out.write_record(&header)?;
    for (eps_bits, values) in by_eps {
        let mut record = vec![format_float(f64::from_bits(eps_bits))];
        for m in &methods {
            record.push(values.get(m).copied().flatten().map(format_float).unwrap_or_default());
        }
        out.write_record(&record)?;
    }
    out.into_inner().map_err(|e| Error::io("figure csv", e.into_error()))
}

#[derive(Serialize)]
struct CellRecord<'a> {
    method: DpMethod,
    epsilon: f64,
    delta: f64,
    seed: u64,
    status: String,
    wall_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    artifact: Option<&'a ArtifactMetadata>,
}

#[derive(Serialize)]
struct Environment {
    package: &'static str,
    version: &'static str,
    os: &'static str,
    arch: &'static str,
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    config_fingerprint: &'a str,
    environment: Environment,
    cells_total: usize,
    cells_failed: usize,
    groups: &'a [GroupSummary],
    cells: Vec<CellRecord<'a>>,
}

fn summary_json(results: &SweepResults, summary: &Summary) -> Result<Vec<u8>> {
    let doc = SummaryDocument {
        config_fingerprint: &summary.config_fingerprint,
        environment: Environment {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
        },
        cells_total: results.rows.len(),
        cells_failed: results.failed_cells(),
        groups: &summary.groups,
        cells: results
            .rows
            .iter()
            .map(|r| CellRecord {
                method: r.cell.method,
                epsilon: r.cell.epsilon,
                delta: r.delta,
                seed: r.cell.seed,
                status: r.status(),
                wall_time_seconds: r.wall_time_seconds,
                artifact: r.metadata.as_ref(),
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes results.csv, summary.json and the three figure series into
/// `output_dir`. Existing files are only replaced when `force` is set; the
/// check happens before anything is written.
pub fn emit_report(results: &SweepResults, summary: &Summary, output_dir: &Path, force: bool) -> Result<Vec<PathBuf>> {
    let files: Vec<(&str, Vec<u8>)> = vec![
        (RESULTS_FILE, results_csv(results)?),
        (SUMMARY_FILE, summary_json(results, summary)?),
        (FIG_UTILITY, figure_csv(summary, |g| g.utility_loss)?),
        (FIG_LEAKAGE, figure_csv(summary, |g| g.privacy_leakage)?),
        (FIG_TRR, figure_csv(summary, |g| g.true_revealed_records)?),
    ];
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let paths: Vec<PathBuf> = files.iter().map(|(name, _)| output_dir.join(name)).collect();
    if !force {
        if let Some(existing) = paths.iter().find(|p| p.exists()) {
            return Err(Error::WouldOverwrite(existing.clone()));
        }
    }
    for (path, (_, bytes)) in paths.iter().zip(&files) {
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    }
    Ok(paths)
}
