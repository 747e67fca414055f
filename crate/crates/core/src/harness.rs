//! Seeded Monte-Carlo experiments comparing sparse estimators with the bounds.
//!
//! Every `(grid point, trial)` cell draws from its own random stream, so the
//! result table does not depend on the number of workers or on the order in
//! which cells complete.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{linear_to_db, BoundReport};
use crate::error::{Error, Result};
use crate::estimators::{self, SolverOptions, SparseEstimate};
use crate::model::{
    draw_amplitudes, draw_supports, gen_dictionary_with, synthesize_observation, AmplitudePrior,
    Deflator, DictionaryKind, ProblemDims,
};
use crate::stats::MeanStderr;

/// Fraction of failed trials tolerated at a grid point.
pub const MAX_FAILURE_RATE: f64 = 0.10;

/// Default SNR sweep of the estimation figures, in dB.
pub const DEFAULT_SNR_GRID: [f64; 9] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];

pub const CSV_HEADER: [&str; 18] = [
    "figure_id",
    "n",
    "k",
    "l_a",
    "l_b",
    "snr_db",
    "estimator",
    "deflated",
    "mse",
    "mse_db",
    "c_deflated",
    "c_deflated_inf",
    "c_joint",
    "c_joint_inf",
    "c_ideal",
    "c_ideal_inf",
    "trials_ok",
    "stderr",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Omp,
    Cosamp,
    Bpdn,
    OracleLs,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Omp,
        EstimatorKind::Cosamp,
        EstimatorKind::Bpdn,
        EstimatorKind::OracleLs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Omp => "omp",
            EstimatorKind::Cosamp => "cosamp",
            EstimatorKind::Bpdn => "bpdn",
            EstimatorKind::OracleLs => "oracle_ls",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown estimator '{name}' (expected omp, cosamp, bpdn or oracle_ls)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeflationMode {
    On,
    Off,
    Both,
}

impl DeflationMode {
    fn arms(self) -> &'static [bool] {
        match self {
            DeflationMode::On => &[true],
            DeflationMode::Off => &[false],
            DeflationMode::Both => &[true, false],
        }
    }
}

/// What each trial computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workload {
    /// Full pipeline: observation, deflation, estimators, scoring.
    Estimation,
    /// Bounds only, reported as the mean deflated bound.
    Bounds,
    /// Bounds only, reported as squared relative gaps to the closed forms.
    BoundGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub dims: ProblemDims,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Label copied into exported rows; 0 for ad-hoc scenarios.
    pub figure_id: u32,
    pub grid: Vec<GridPoint>,
    pub sigma_alpha2: f64,
    pub sigma_beta2: f64,
    pub prior: AmplitudePrior,
    pub dictionary: DictionaryKind,
    pub trials: usize,
    pub estimators: Vec<EstimatorKind>,
    pub deflation: DeflationMode,
    pub seed: u64,
    pub workload: Workload,
    /// BPDN weight; the universal threshold of each system when absent.
    pub lambda: Option<f64>,
}

impl Scenario {
    /// One dims point swept over `snr_grid_db`, running every estimator on the deflated system.
    pub fn sweep(dims: ProblemDims, snr_grid_db: &[f64], trials: usize, seed: u64) -> Self {
        Self {
            figure_id: 0,
            grid: snr_grid_db
                .iter()
                .map(|&snr_db| GridPoint { dims, snr_db })
                .collect(),
            sigma_alpha2: 1.0,
            sigma_beta2: 1.0,
            prior: AmplitudePrior::Gaussian,
            dictionary: DictionaryKind::Gaussian,
            trials,
            estimators: EstimatorKind::ALL.to_vec(),
            deflation: DeflationMode::On,
            seed,
            workload: Workload::Estimation,
            lambda: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidArgument("scenario grid is empty".into()));
        }
        if self.workload == Workload::Estimation && self.estimators.is_empty() {
            return Err(Error::InvalidArgument("no estimators configured".into()));
        }
        for (i, e) in self.estimators.iter().enumerate() {
            if self.estimators[..i].contains(e) {
                return Err(Error::InvalidArgument(format!(
                    "estimator '{}' listed twice",
                    e.name()
                )));
            }
        }
        for v in [self.sigma_alpha2, self.sigma_beta2] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "amplitude variances must be positive, got {v}"
                )));
            }
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {l}")));
            }
        }
        for p in &self.grid {
            p.dims.validate()?;
            if !p.snr_db.is_finite() {
                return Err(Error::InvalidArgument(format!("SNR must be finite, got {}", p.snr_db)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorScore {
    pub estimator: EstimatorKind,
    pub deflated: bool,
    pub mse: f64,
    /// Recovered fraction of the support the estimator was asked to find.
    pub hit_rate: f64,
    pub false_alarms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: usize,
    pub bounds: BoundReport,
    pub scores: Vec<EstimatorScore>,
}

impl TrialResult {
    pub fn mse(&self, estimator: EstimatorKind, deflated: bool) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.estimator == estimator && s.deflated == deflated)
            .map(|s| s.mse)
    }
}

/// One exported line: an estimator (or bound summary) at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub figure_id: u32,
    pub n: usize,
    pub k: usize,
    pub l_a: usize,
    pub l_b: usize,
    pub snr_db: f64,
    pub estimator: String,
    pub deflated: bool,
    pub mse: f64,
    pub mse_db: f64,
    pub c_deflated: f64,
    pub c_deflated_inf: f64,
    pub c_joint: f64,
    pub c_joint_inf: f64,
    pub c_ideal: f64,
    pub c_ideal_inf: f64,
    pub trials_ok: usize,
    pub stderr: f64,
}

/// Per-grid-point bookkeeping alongside the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub point: GridPoint,
    pub trials_ok: usize,
    pub trials_failed: usize,
    pub c_deflated: MeanStderr,
    pub c_joint: MeanStderr,
    pub c_ideal: MeanStderr,
    pub c_deflated_inf: f64,
    pub c_joint_inf: f64,
    pub c_ideal_inf: f64,
    /// Mean support recovery per estimator arm; empty for bound-only workloads.
    pub support: Vec<SupportSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSummary {
    pub estimator: EstimatorKind,
    pub deflated: bool,
    pub hit_rate: f64,
    pub false_alarms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub grid: Vec<GridSummary>,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn row(&self, grid_index: usize, estimator: &str, deflated: bool) -> Option<&ResultRow> {
        let p = self.scenario.grid.get(grid_index)?;
        self.rows.iter().find(|r| {
            r.estimator == estimator
                && r.deflated == deflated
                && r.n == p.dims.n
                && r.k == p.dims.k
                && r.l_a == p.dims.l_a
                && r.l_b == p.dims.l_b
                && r.snr_db == p.snr_db
        })
    }
}

fn trial_stream(grid_index: usize, trial_index: usize) -> u64 {
    ((grid_index as u64) << 32) | trial_index as u64
}

/// dB value of a non-negative quantity, finite even at zero.
fn to_db(x: f64) -> f64 {
    linear_to_db(x.max(1e-300))
}

fn run_estimator(
    kind: EstimatorKind,
    h: &DMatrix<f64>,
    y: &DVector<f64>,
    sparsity: usize,
    support: &[usize],
    noise_var: f64,
    lambda: Option<f64>,
) -> Result<SparseEstimate> {
    match kind {
        EstimatorKind::Omp => estimators::omp(h, y, &SolverOptions::omp(sparsity)),
        EstimatorKind::Cosamp => estimators::cosamp(h, y, &SolverOptions::cosamp(sparsity)),
        EstimatorKind::Bpdn => {
            let lambda = lambda.unwrap_or_else(|| {
                SolverOptions::universal_lambda(noise_var.sqrt(), h.ncols())
            });
            estimators::bpdn(h, y, &SolverOptions::bpdn(lambda))
        }
        EstimatorKind::OracleLs => estimators::oracle_ls(h, y, support),
    }
}

/// Runs one Monte-Carlo cell. Deterministic in `(scenario.seed, grid_index, trial_index)`.
pub fn run_trial(scenario: &Scenario, grid_index: usize, trial_index: usize) -> Result<TrialResult> {
    let point = scenario.grid.get(grid_index).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "grid index {grid_index} out of range ({} points)",
            scenario.grid.len()
        ))
    })?;
    let dims = point.dims;
    dims.validate()?;
    let mut rng = crate::stream_rng(scenario.seed, trial_stream(grid_index, trial_index));

    if scenario.workload != Workload::Estimation {
        // columns are i.i.d., so drawing only the active ones is equivalent
        let active = ProblemDims {
            k: dims.l_a + dims.l_b,
            ..dims
        };
        let g = gen_dictionary_with(&active, scenario.dictionary, &mut rng);
        let a = g.columns(0, dims.l_a).into_owned();
        let b = g.columns(dims.l_a, dims.l_b).into_owned();
        let bounds =
            BoundReport::compute(&a, &b, point.snr_db, scenario.sigma_alpha2, scenario.sigma_beta2)?;
        return Ok(TrialResult {
            trial_index,
            bounds,
            scores: Vec::new(),
        });
    }

    let h = gen_dictionary_with(&dims, scenario.dictionary, &mut rng);
    let supports = draw_supports(dims.k, dims.l_a, dims.l_b, &mut rng)?;
    let alpha = draw_amplitudes(dims.l_a, scenario.sigma_alpha2, scenario.prior, &mut rng)?;
    let beta = draw_amplitudes(dims.l_b, scenario.sigma_beta2, scenario.prior, &mut rng)?;
    let a = crate::linalg::select_columns(&h, &supports.t);
    let b = crate::linalg::select_columns(&h, &supports.t_tilde);
    let bounds = BoundReport::compute(&a, &b, point.snr_db, scenario.sigma_alpha2, scenario.sigma_beta2)?;
    let noise_var = bounds.sigma2;
    let scene = synthesize_observation(h, supports, alpha, beta, noise_var, &mut rng)?;

    let mut scores = Vec::with_capacity(scenario.estimators.len() * 2);
    for &deflated in scenario.deflation.arms() {
        let (h_sys, y_sys, sparsity, support) = if deflated {
            let deflator = Deflator::new(&b)?;
            (
                deflator.project(&scene.h),
                deflator.project_vec(&scene.y),
                dims.l_a,
                scene.supports.t.clone(),
            )
        } else {
            (
                scene.h.clone(),
                scene.y.clone(),
                dims.l_a + dims.l_b,
                scene.supports.joint(),
            )
        };
        for &kind in &scenario.estimators {
            let est = run_estimator(kind, &h_sys, &y_sys, sparsity, &support, noise_var, scenario.lambda)?;
            let mse = estimators::mse(&est.restrict(&scene.supports.t), &scene.alpha)?;
            let (hit_rate, false_alarms) = estimators::support_metrics(&est, &support);
            scores.push(EstimatorScore {
                estimator: kind,
                deflated,
                mse,
                hit_rate,
                false_alarms,
            });
        }
    }
    Ok(TrialResult {
        trial_index,
        bounds,
        scores,
    })
}

fn build_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::InvalidArgument("worker count must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// Runs every cell on the default number of workers.
pub fn run_experiment(scenario: &Scenario) -> Result<ExperimentResult> {
    run_experiment_with_workers(scenario, None)
}

/// Runs every cell on `workers` threads (all available processors when `None`).
pub fn run_experiment_with_workers(
    scenario: &Scenario,
    workers: Option<usize>,
) -> Result<ExperimentResult> {
    scenario.validate()?;
    let pool = build_pool(workers)?;
    let trials = scenario.trials;
    let cells: Vec<(usize, usize)> = (0..scenario.grid.len())
        .flat_map(|g| (0..trials).map(move |t| (g, t)))
        .collect();
    let outcomes: Vec<Result<TrialResult>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(g, t)| run_trial(scenario, g, t))
            .collect()
    });
    let mut per_grid: Vec<Vec<TrialResult>> = vec![Vec::with_capacity(trials); scenario.grid.len()];
    let mut failures: Vec<Vec<Error>> = (0..scenario.grid.len()).map(|_| Vec::new()).collect();
    for (&(g, _), outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(r) => per_grid[g].push(r),
            Err(e) => failures[g].push(e),
        }
    }
    let mut grid = Vec::with_capacity(scenario.grid.len());
    let mut rows = Vec::new();
    for (g, (ok, failed)) in per_grid.into_iter().zip(failures).enumerate() {
        if ok.is_empty() || failed.len() as f64 > MAX_FAILURE_RATE * trials as f64 {
            if ok.is_empty() && failed.len() == trials {
                // a systematic failure is more informative than the count
                if let Some(first) = failed.into_iter().next() {
                    if first.is_usage() {
                        return Err(first);
                    }
                }
            }
            return Err(Error::TooManyFailures {
                grid: g,
                failed: trials - ok.len(),
                total: trials,
            });
        }
        let (summary, point_rows) = aggregate(scenario, g, &ok, trials - ok.len());
        grid.push(summary);
        rows.extend(point_rows);
    }
    Ok(ExperimentResult {
        scenario: scenario.clone(),
        grid,
        rows,
    })
}

fn aggregate(
    scenario: &Scenario,
    g: usize,
    ok: &[TrialResult],
    failed: usize,
) -> (GridSummary, Vec<ResultRow>) {
    let point = scenario.grid[g];
    let first = &ok[0].bounds;
    let arms: Vec<(EstimatorKind, bool)> = match scenario.workload {
        Workload::Estimation => scenario
            .deflation
            .arms()
            .iter()
            .flat_map(|&deflated| scenario.estimators.iter().map(move |&e| (e, deflated)))
            .collect(),
        _ => Vec::new(),
    };
    let scores = |e: EstimatorKind, deflated: bool| {
        ok.iter()
            .flat_map(|t| &t.scores)
            .filter(move |s| s.estimator == e && s.deflated == deflated)
    };
    let support = arms
        .iter()
        .map(|&(e, deflated)| SupportSummary {
            estimator: e,
            deflated,
            hit_rate: MeanStderr::of(scores(e, deflated).map(|s| s.hit_rate)).mean,
            false_alarms: MeanStderr::of(scores(e, deflated).map(|s| s.false_alarms as f64)).mean,
        })
        .collect();
    let summary = GridSummary {
        point,
        trials_ok: ok.len(),
        trials_failed: failed,
        c_deflated: MeanStderr::of(ok.iter().map(|t| t.bounds.c_deflated)),
        c_joint: MeanStderr::of(ok.iter().map(|t| t.bounds.c_joint)),
        c_ideal: MeanStderr::of(ok.iter().map(|t| t.bounds.c_ideal)),
        c_deflated_inf: first.c_deflated_inf,
        c_joint_inf: first.c_joint_inf,
        c_ideal_inf: first.c_ideal_inf,
        support,
    };
    let row = |estimator: &str, deflated: bool, stat: MeanStderr| ResultRow {
        figure_id: scenario.figure_id,
        n: point.dims.n,
        k: point.dims.k,
        l_a: point.dims.l_a,
        l_b: point.dims.l_b,
        snr_db: point.snr_db,
        estimator: estimator.to_string(),
        deflated,
        mse: stat.mean,
        mse_db: to_db(stat.mean),
        c_deflated: summary.c_deflated.mean,
        c_deflated_inf: summary.c_deflated_inf,
        c_joint: summary.c_joint.mean,
        c_joint_inf: summary.c_joint_inf,
        c_ideal: summary.c_ideal.mean,
        c_ideal_inf: summary.c_ideal_inf,
        trials_ok: ok.len(),
        stderr: stat.stderr,
    };
    let rows = match scenario.workload {
        Workload::Estimation => arms
            .iter()
            .map(|&(e, deflated)| {
                let stat = MeanStderr::of(ok.iter().filter_map(|t| t.mse(e, deflated)));
                row(e.name(), deflated, stat)
            })
            .collect(),
        Workload::Bounds => vec![row("bound", true, summary.c_deflated)],
        Workload::BoundGap => {
            let gap = |c: fn(&BoundReport) -> f64, c_inf: fn(&BoundReport) -> f64| {
                MeanStderr::of(ok.iter().map(|t| {
                    let rel = (c(&t.bounds) - c_inf(&t.bounds)) / c_inf(&t.bounds);
                    rel * rel
                }))
            };
            vec![
                row("gap_deflated", true, gap(|b| b.c_deflated, |b| b.c_deflated_inf)),
                row("gap_joint", false, gap(|b| b.c_joint, |b| b.c_joint_inf)),
                row("gap_ideal", false, gap(|b| b.c_ideal, |b| b.c_ideal_inf)),
            ]
        }
    };
    (summary, rows)
}

/// Overrides applied on top of a figure's default parameters.
#[derive(Debug, Clone, Default)]
pub struct FigureOptions {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub snr_grid_db: Option<Vec<f64>>,
    /// Dictionary width as a multiple of `N`.
    pub k_factor: Option<usize>,
    pub estimators: Option<Vec<EstimatorKind>>,
}

pub const DEFAULT_K_FACTOR: usize = 4;
pub const DEFAULT_FIGURE_SEED: u64 = 2015;
/// Sizes of the signal support swept by the bound-versus-interference figure.
pub const FIG3_L_A: [usize; 6] = [1, 5, 10, 15, 20, 30];
pub const FIG3_L_B: [usize; 7] = [5, 10, 20, 30, 40, 50, 60];

/// The scenario behind one of the reference figures (ids 2 to 5).
pub fn figure_scenario(id: u32, opts: &FigureOptions) -> Result<Scenario> {
    let kf = opts.k_factor.unwrap_or(DEFAULT_K_FACTOR);
    if kf < 2 {
        return Err(Error::InvalidArgument(format!(
            "dictionary width factor must be at least 2, got {kf}"
        )));
    }
    let seed = opts.seed.unwrap_or(DEFAULT_FIGURE_SEED);
    let snr_grid = opts
        .snr_grid_db
        .clone()
        .unwrap_or_else(|| DEFAULT_SNR_GRID.to_vec());
    let estimators = opts
        .estimators
        .clone()
        .unwrap_or_else(|| EstimatorKind::ALL.to_vec());
    let at = |n: usize, l_a: usize, l_b: usize, snr_db: f64| -> Result<GridPoint> {
        Ok(GridPoint {
            dims: ProblemDims::new(n, kf * n, l_a, l_b)?,
            snr_db,
        })
    };
    let sweep = |n, l_a, l_b| -> Result<Vec<GridPoint>> {
        snr_grid.iter().map(|&s| at(n, l_a, l_b, s)).collect()
    };
    let base = |grid: Vec<GridPoint>, sigma_beta2: f64, trials: usize, workload: Workload| Scenario {
        figure_id: id,
        grid,
        sigma_alpha2: 1.0,
        sigma_beta2,
        prior: AmplitudePrior::Gaussian,
        dictionary: DictionaryKind::Gaussian,
        trials: opts.trials.unwrap_or(trials),
        estimators: estimators.clone(),
        deflation: DeflationMode::Both,
        seed,
        workload,
        lambda: None,
    };
    let scenario = match id {
        2 => {
            let grid = (1..=10)
                .map(|i| at(100 * i, 10 * i, 10 * i, 10.0))
                .collect::<Result<_>>()?;
            base(grid, 10.0, 50, Workload::BoundGap)
        }
        3 => {
            let mut grid = Vec::new();
            for l_a in FIG3_L_A {
                for l_b in FIG3_L_B {
                    if 100 >= l_a + l_b + 5 {
                        grid.push(at(100, l_a, l_b, 10.0)?);
                    }
                }
            }
            base(grid, 1.0, 100, Workload::Bounds)
        }
        4 => base(sweep(100, 10, 10)?, 1.0, 500, Workload::Estimation),
        5 => base(sweep(100, 10, 50)?, 100.0, 500, Workload::Estimation),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown figure id {id} (expected 2, 3, 4 or 5)"
            )))
        }
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn reproduce_figure(id: u32, opts: &FigureOptions, workers: Option<usize>) -> Result<ExperimentResult> {
    run_experiment_with_workers(&figure_scenario(id, opts)?, workers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidArgument(format!(
                "unknown format '{s}' (expected csv or json)"
            ))),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn ser_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Serialize {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    }
}

/// Writes the rows as CSV with the fixed 18-column header.
pub fn write_csv<W: Write>(result: &ExperimentResult, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in &result.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export(result: &ExperimentResult, format: ExportFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        ExportFormat::Csv => write_csv(result, &mut out).map_err(|e| ser_err(path, e))?,
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, result).map_err(|e| ser_err(path, e))?;
            out.write_all(b"\n").map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn read_json(path: &Path) -> Result<ExperimentResult> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| ser_err(path, e))
}

pub fn read_csv_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ser_err(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|e| ser_err(path, e))
}
