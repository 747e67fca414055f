use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use deflatecrb::bounds::BoundReport;
use deflatecrb::config::{workers_from_env, ScenarioConfig};
use deflatecrb::harness::{
    export, reproduce_figure, run_experiment_with_workers, EstimatorKind, ExperimentResult,
    ExportFormat, FigureOptions, Workload,
};
use deflatecrb::model::{gen_dictionary_with, DictionaryKind, ProblemDims};
use deflatecrb::rmt::{mp_density, mp_moment, mp_stieltjes, verify_lemma1, FSource, MPLaw};
use deflatecrb::stats::MeanStderr;
use deflatecrb::{stream_rng, Error, Result};
use num_complex::Complex64;

#[derive(Parser)]
#[command(name = "deflatecrb", version, about = "Bounds, random-matrix checks and Monte-Carlo runs for sparse estimation under known interference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the deflated, joint and ideal bounds for random dictionaries
    Bound(BoundArgs),
    /// Tabulate the Marchenko-Pastur law
    #[command(allow_negative_numbers = true)]
    Mp(MpArgs),
    /// Check the trace limits of the deflated signal Gram matrix
    Lemma1(Lemma1Args),
    /// Run a Monte-Carlo scenario from a TOML file
    Simulate(SimulateArgs),
    /// Reproduce the dataset behind one of the reference figures (2-5)
    Figure(FigureArgs),
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    n: usize,
    /// Dictionary width (default 4N)
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    la: usize,
    #[arg(long)]
    lb: usize,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_alpha2: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_beta2: f64,
    /// Number of dictionary draws to average
    #[arg(long, default_value_t = 1)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct MpArgs {
    #[arg(long)]
    rho_tilde: f64,
    /// Number of density points across the support
    #[arg(long, default_value_t = 11)]
    grid: usize,
    #[arg(long, default_value_t = 4)]
    moments_up_to: u32,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (CSV or JSON)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when omitted
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (default: DEFLATECRB_WORKERS or all processors)
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct Lemma1Args {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    la: usize,
    #[arg(long)]
    lb: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw F by deflating Gaussian atoms or directly with i.i.d. entries
    #[arg(long, value_parser = ["deflated", "iid"], default_value = "deflated")]
    source: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides run.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.trials
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(long)]
    id: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Dictionary width as a multiple of N
    #[arg(long)]
    k_factor: Option<usize>,
    /// Comma-separated SNR grid in dB
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    /// Comma-separated subset of omp, cosamp, bpdn, oracle_ls
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    #[command(flatten)]
    output: OutputArgs,
}

fn dims_from(n: usize, k: Option<usize>, la: usize, lb: usize) -> Result<ProblemDims> {
    ProblemDims::new(n, k.unwrap_or(4 * n), la, lb)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize {
        path: PathBuf::from("<stdout>"),
        msg: e.to_string(),
    })?;
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

#[derive(Serialize)]
struct BoundSummary {
    dims: ProblemDims,
    snr_db: f64,
    draws: usize,
    c_deflated: MeanStderr,
    c_joint: MeanStderr,
    c_ideal: MeanStderr,
    c_deflated_inf: f64,
    c_joint_inf: f64,
    c_ideal_inf: f64,
    snr_na_deflated: MeanStderr,
    snr_na_joint: MeanStderr,
    snr_na_ideal: MeanStderr,
    sigma2: f64,
    sigma0_2: f64,
    sigma1_2: f64,
}

fn cmd_bound(a: BoundArgs) -> Result<()> {
    let dims = dims_from(a.n, a.k, a.la, a.lb)?;
    if a.draws == 0 {
        return Err(Error::InvalidArgument("--draws must be at least 1".into()));
    }
    let active = ProblemDims {
        k: dims.l_a + dims.l_b,
        ..dims
    };
    let reports = (0..a.draws as u64)
        .map(|d| {
            let g = gen_dictionary_with(&active, DictionaryKind::Gaussian, &mut stream_rng(a.seed, d));
            BoundReport::compute(
                &g.columns(0, dims.l_a).into_owned(),
                &g.columns(dims.l_a, dims.l_b).into_owned(),
                a.snr_db,
                a.sigma_alpha2,
                a.sigma_beta2,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let stat = |f: fn(&BoundReport) -> f64| MeanStderr::of(reports.iter().map(f));
    let first = &reports[0];
    let s = BoundSummary {
        dims,
        snr_db: a.snr_db,
        draws: a.draws,
        c_deflated: stat(|r| r.c_deflated),
        c_joint: stat(|r| r.c_joint),
        c_ideal: stat(|r| r.c_ideal),
        c_deflated_inf: first.c_deflated_inf,
        c_joint_inf: first.c_joint_inf,
        c_ideal_inf: first.c_ideal_inf,
        snr_na_deflated: stat(|r| r.snr_na_deflated),
        snr_na_joint: stat(|r| r.snr_na_joint),
        snr_na_ideal: stat(|r| r.snr_na_ideal),
        sigma2: first.sigma2,
        sigma0_2: first.sigma0_2,
        sigma1_2: first.sigma1_2,
    };
    if a.json {
        return print_json(&s);
    }
    let r = first.ratios;
    println!(
        "N={} K={} L_A={} L_B={}  rho={:.4} c={:.4}  SNR={} dB  draws={}",
        dims.n, dims.k, dims.l_a, dims.l_b, r.rho, r.c, a.snr_db, a.draws
    );
    println!("noise variances: deflated {:.6e}  joint {:.6e}  ideal {:.6e}", s.sigma2, s.sigma0_2, s.sigma1_2);
    println!("{:<10} {:>14} {:>12} {:>14} {:>14}", "model", "ecrb", "stderr", "asymptotic", "snr_na");
    for (name, c, inf, snr) in [
        ("deflated", s.c_deflated, s.c_deflated_inf, s.snr_na_deflated),
        ("joint", s.c_joint, s.c_joint_inf, s.snr_na_joint),
        ("ideal", s.c_ideal, s.c_ideal_inf, s.snr_na_ideal),
    ] {
        println!(
            "{name:<10} {:>14.6e} {:>12.3e} {:>14.6e} {:>14.6e}",
            c.mean, c.stderr, inf, snr.mean
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct MpSummary {
    rho_tilde: f64,
    lambda_minus: f64,
    lambda_plus: f64,
    zero_mass: f64,
    density: Vec<(f64, f64)>,
    moments: Vec<f64>,
    stieltjes_at_zero: Option<f64>,
}

fn cmd_mp(a: MpArgs) -> Result<()> {
    let law = MPLaw::new(a.rho_tilde)?;
    if a.grid < 2 {
        return Err(Error::InvalidArgument("--grid needs at least 2 points".into()));
    }
    let step = (law.lambda_plus - law.lambda_minus) / (a.grid - 1) as f64;
    let density = (0..a.grid)
        .map(|i| {
            let x = law.lambda_minus + i as f64 * step;
            (x, mp_density(x, &law))
        })
        .collect();
    let stieltjes_at_zero = if a.rho_tilde > 1.0 {
        Some(mp_stieltjes(Complex64::new(0.0, 0.0), &law)?.re)
    } else {
        None
    };
    let s = MpSummary {
        rho_tilde: a.rho_tilde,
        lambda_minus: law.lambda_minus,
        lambda_plus: law.lambda_plus,
        zero_mass: law.zero_mass(),
        density,
        moments: (1..=a.moments_up_to).map(|k| mp_moment(k, &law)).collect(),
        stieltjes_at_zero,
    };
    if a.json {
        return print_json(&s);
    }
    println!("rho_tilde = {}", s.rho_tilde);
    println!("support = [{}, {}]", s.lambda_minus, s.lambda_plus);
    println!("atom at zero = {}", s.zero_mass);
    if let Some(v) = s.stieltjes_at_zero {
        println!("S(0) = {v}");
    }
    for (k, m) in s.moments.iter().enumerate() {
        println!("moment {} = {m}", k + 1);
    }
    println!("{:>14} {:>14}", "x", "density");
    for (x, d) in &s.density {
        println!("{x:>14.6} {d:>14.6e}");
    }
    Ok(())
}

fn resolve_workers(flag: Option<usize>) -> Result<Option<usize>> {
    match flag {
        Some(0) => Err(Error::InvalidArgument("--workers must be at least 1".into())),
        Some(w) => Ok(Some(w)),
        None => workers_from_env(),
    }
}

fn resolve_format(o: &OutputArgs) -> Result<ExportFormat> {
    if let Some(f) = &o.format {
        return ExportFormat::parse(f);
    }
    let is_json = o
        .out
        .as_ref()
        .and_then(|p| p.extension())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    Ok(if is_json { ExportFormat::Json } else { ExportFormat::Csv })
}

fn cmd_lemma1(a: Lemma1Args) -> Result<()> {
    let dims = dims_from(a.n, a.k, a.la, a.lb)?;
    let source = if a.source == "iid" { FSource::Iid } else { FSource::Deflated };
    let format = resolve_format(&a.output)?;
    let workers = resolve_workers(a.output.workers)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| verify_lemma1(&dims, a.trials, source, a.seed))?;
    if let Some(path) = &a.output.out {
        write_lemma1(&report, format, path)?;
    }
    if a.output.json {
        return print_json(&report);
    }
    println!(
        "N={} L_A={} L_B={} trials={}: (1/L_A)Tr{{(F^T F)^-1}} = {:.6} +- {:.2e} (limit {:.6}, gap {:.3}%), (1/(N-L_B))Tr{{F^T F}} = {:.6} +- {:.2e} (limit {:.6}, gap {:.3}%)",
        dims.n,
        dims.l_a,
        dims.l_b,
        report.trials,
        report.inverse_trace.mean,
        report.inverse_trace.stderr,
        report.limit_inverse_trace,
        100.0 * report.rel_gap_inverse_trace,
        report.trace.mean,
        report.trace.stderr,
        report.limit_trace,
        100.0 * report.rel_gap_trace
    );
    Ok(())
}

fn write_lemma1(report: &deflatecrb::rmt::Lemma1Report, format: ExportFormat, path: &std::path::Path) -> Result<()> {
    let ser = |e: &dyn std::fmt::Display| Error::Serialize {
        path: path.to_path_buf(),
        msg: e.to_string(),
    };
    match format {
        ExportFormat::Json => {
            let text = serde_json::to_string_pretty(report).map_err(|e| ser(&e))?;
            std::fs::write(path, text + "\n").map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })
        }
        ExportFormat::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(|e| ser(&e))?;
            w.write_record(["trial", "inverse_trace", "trace"]).map_err(|e| ser(&e))?;
            for (t, (inv, tr)) in report
                .per_trial_inverse_trace
                .iter()
                .zip(&report.per_trial_trace)
                .enumerate()
            {
                w.write_record([t.to_string(), inv.to_string(), tr.to_string()])
                    .map_err(|e| ser(&e))?;
            }
            w.flush().map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })
        }
    }
}

fn finish_experiment(result: &ExperimentResult, output: &OutputArgs) -> Result<()> {
    if let Some(path) = &output.out {
        export(result, resolve_format(output)?, path)?;
    }
    if output.json {
        return print_json(result);
    }
    for g in &result.grid {
        let d = g.point.dims;
        let mut line = format!(
            "N={} K={} L_A={} L_B={} snr={}dB ok={} failed={} c_deflated={:.4e}",
            d.n, d.k, d.l_a, d.l_b, g.point.snr_db, g.trials_ok, g.trials_failed, g.c_deflated.mean
        );
        for r in result.rows.iter().filter(|r| {
            r.n == d.n && r.k == d.k && r.l_a == d.l_a && r.l_b == d.l_b && r.snr_db == g.point.snr_db
        }) {
            let arm = if r.deflated || result.scenario.workload != Workload::Estimation {
                ""
            } else {
                "/raw"
            };
            line.push_str(&format!(" {}{arm}={:.4e}", r.estimator, r.mse));
        }
        println!("{line}");
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut scenario = ScenarioConfig::load(&a.config)?.to_scenario()?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    if let Some(trials) = a.trials {
        scenario.trials = trials;
    }
    resolve_format(&a.output)?;
    let workers = resolve_workers(a.output.workers)?;
    let result = run_experiment_with_workers(&scenario, workers)?;
    finish_experiment(&result, &a.output)
}

fn cmd_figure(a: FigureArgs) -> Result<()> {
    let estimators = a
        .estimators
        .as_ref()
        .map(|names| names.iter().map(|n| EstimatorKind::parse(n.trim())).collect::<Result<Vec<_>>>())
        .transpose()?;
    let opts = FigureOptions {
        seed: a.seed,
        trials: a.trials,
        snr_grid_db: a.snr_db.clone(),
        k_factor: a.k_factor,
        estimators,
    };
    resolve_format(&a.output)?;
    let workers = resolve_workers(a.output.workers)?;
    let result = reproduce_figure(a.id, &opts, workers)?;
    finish_experiment(&result, &a.output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Mp(a) => cmd_mp(a),
        Command::Lemma1(a) => cmd_lemma1(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Figure(a) => cmd_figure(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
