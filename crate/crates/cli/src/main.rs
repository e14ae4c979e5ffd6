//! `dp-la`: run privacy sweeps, generate synthetic data, sanity-check the
//! Laplace mechanism and inspect single audits.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpla_core::data::{synth_generate, SynthParams};
use dpla_core::dp_pipelines::DpMethod;
use dpla_core::experiment::{emit_report, run_cell, run_sweep, summarize, ExperimentConfig, SweepCell};
use dpla_core::mechanisms::{empirical_dp_check, DpCheckConfig, PrivacyBudget, RngState, Sensitivity};
use dpla_core::Error;

const THREADS_ENV: &str = "DP_LA_THREADS";

#[derive(Parser)]
#[command(name = "dp-la", version, about = "Differentially private learning analytics: privacy/utility sweeps with membership-inference audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full method × ε × seed sweep and write the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace existing report files.
        #[arg(long)]
        force: bool,
        /// Worker threads; falls back to DP_LA_THREADS, then the config.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write a synthetic dataset (data.csv) and its schema (schema.json).
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        numeric: usize,
        #[arg(long, default_value_t = 2)]
        categorical: usize,
        #[arg(long, default_value_t = 2.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirically check the ε-DP inequality for a Laplace-noised count on
    /// two neighbouring 10-record datasets.
    CheckDp {
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one cell of a config and print the audit in detail. The cell
    /// defaults to the first method, ε and seed of the config.
    Audit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: Option<DpMethod>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Failure classes, mapped to exit codes 1 and 2.
enum Failure {
    Error(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            force,
            threads,
        } => cmd_run(&config, seed, out, force, threads),
        Command::Synth {
            n,
            numeric,
            categorical,
            separation,
            seed,
            out,
        } => cmd_synth(SynthParams::new(n, numeric, categorical, separation, seed), &out),
        Command::CheckDp { epsilon, trials, seed } => cmd_check_dp(epsilon, trials, seed),
        Command::Audit {
            config,
            method,
            epsilon,
            seed,
        } => cmd_audit(&config, method, epsilon, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn threads_from_env() -> Result<Option<usize>, Error> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::invalid(THREADS_ENV, format!("not a positive integer: {v:?}"))),
        _ => Ok(None),
    }
}

fn cmd_run(
    config_path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    force: bool,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let mut config = ExperimentConfig::from_json_file(config_path)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    if let Some(t) = threads.or(threads_from_env()?) {
        config.threads = Some(t);
    }
    config.validate()?;

    let results = run_sweep(&config)?;
    let summary = summarize(&results);
    let paths = emit_report(&results, &summary, &config.output_dir, force)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    let failed = results.failed_cells();
    println!(
        "{} cells, {} failed, config {}",
        results.rows.len(),
        failed,
        &results.config_fingerprint[..12]
    );
    if failed > 0 {
        for row in results.rows.iter().filter(|r| !r.is_ok()) {
            eprintln!(
                "{} eps={} seed={}: {}",
                row.cell.method, row.cell.epsilon, row.cell.seed, row.status()
            );
        }
        return Err(Failure::Check(format!("{failed} cell(s) failed")));
    }
    Ok(())
}

fn cmd_synth(params: SynthParams, out: &Path) -> Result<(), Failure> {
    let (table, schema) = synth_generate(&params)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let data_path = out.join("data.csv");
    let file = fs::File::create(&data_path).map_err(|e| Error::io(&data_path, e))?;
    table.write_csv(std::io::BufWriter::new(file))?;
    let schema_path = out.join("schema.json");
    fs::write(&schema_path, schema.to_json_string()).map_err(|e| Error::io(&schema_path, e))?;
    println!("wrote {} ({} rows)", data_path.display(), table.n_rows());
    println!("wrote {}", schema_path.display());
    Ok(())
}

fn cmd_check_dp(epsilon: f64, trials: usize, seed: u64) -> Result<(), Failure> {
    // Ten binary records; the neighbour flips one of them.
    let d: Vec<u8> = vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
    let mut d_prime = d.clone();
    d_prime[0] = 0;
    let count = |rows: &[u8]| rows.iter().map(|&r| f64::from(r)).sum::<f64>();
    let config = DpCheckConfig {
        trials,
        ..DpCheckConfig::default()
    };
    let report = empirical_dp_check(
        count,
        &d,
        &d_prime,
        Sensitivity::l1(1.0)?,
        PrivacyBudget::pure(epsilon)?,
        &config,
        &mut RngState::from_seed(seed),
    )?;
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    let line = format!(
        "{verdict} epsilon={} trials={trials} max_ratio={:.4} bound={:.4} bins_compared={}",
        report.epsilon, report.max_ratio, report.bound, report.bins_compared
    );
    if report.passed {
        println!("{line}");
        Ok(())
    } else {
        Err(Failure::Check(line))
    }
}

fn cmd_audit(
    config_path: &Path,
    method: Option<DpMethod>,
    epsilon: Option<f64>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let config = ExperimentConfig::from_json_file(config_path)?;
    let cell = SweepCell {
        method: method.unwrap_or(config.methods[0]),
        epsilon: epsilon.unwrap_or(config.epsilons[0]),
        seed: seed.unwrap_or(config.seeds[0]),
    };
    let dataset = config.load_dataset()?;
    let audit = match run_cell(&dataset, &config, &cell) {
        Ok(a) => a,
        Err(e) => return Err(Failure::Check(format!("cell failed: {e}"))),
    };
    let r = &audit.report;
    let m = &audit.mia;
    println!("cell             {} eps={} seed={}", cell.method, cell.epsilon, cell.seed);
    println!("dataset          {} rows x {} features", dataset.n_rows(), dataset.n_features());
    println!("config           {}", config.fingerprint());
    println!("acc_nonprivate   {:.6}", r.acc_nonprivate);
    println!("acc_private      {:.6}", r.acc_private);
    println!("utility_loss     {:+.6}", r.utility_loss);
    println!("shadow test acc  {:.6}", audit.shadow_test_accuracy);
    println!("attack advantage {:.6} on shadow rows", audit.attack_shadow_advantage);
    println!(
        "attack           {}",
        if audit.attack_active { "active" } else { "abstains (shadow advantage not significant)" }
    );
    println!("attack train acc {:.6}", audit.attack_training_accuracy);
    println!("members          {} flagged of {} (tpr {:.6})", m.true_positive_count, m.member_count, m.tpr);
    println!("non-members      {} flagged of {} (fpr {:.6})", m.false_positive_count, m.nonmember_count, m.fpr);
    println!("privacy_leakage  {:+.6}", r.privacy_leakage);
    println!("true_revealed    {} (rate {:.6})", r.true_revealed_records, r.trr_rate);
    let md = &audit.metadata;
    let fields = [
        ("sigma", md.sigma),
        ("b_norm", md.b_norm),
        ("epsilon_prime", md.epsilon_prime),
        ("extra_l2", md.extra_l2),
        ("composed_epsilon", md.composed_epsilon),
    ];
    for (name, value) in fields {
        if let Some(v) = value {
            println!("{name:<16} {v:.6}");
        }
    }
    if let Some(q) = md.queries {
        println!("queries          {q}");
    }
    Ok(())
}
