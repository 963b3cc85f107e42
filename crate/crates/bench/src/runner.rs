//! Seeded experiment sweeps.
//!
//! A cell is one `(size, trial)` pair. Everything random in a cell derives
//! from the cell seed `derive(master_seed, [size_index, trial])`, so all
//! methods and sample counts in the cell see the same ground truth, and each
//! sample count sees the same signals across methods. Cells run in parallel;
//! rows are emitted in sorted index order.

use std::fs;
use std::path::Path;

use prodgraph::eval::{eval_full, eval_product, Adjacency, ProductEval};
use prodgraph::graph::{erdos_renyi, product, product_matrix, Gso};
use prodgraph::rng::{derive, stream};
use prodgraph::signal::{
    analytic_cov, covariances_from_full, generate_2d, generate_mrf, generate_polycov, mrf_covariance,
    nonsingular_polycov_filter, polycov_covariance, random_filter, sample_cov, CovarianceSet, PolyFilter, Provenance,
    SignalError, SignalTensor,
};
use prodgraph::solver::{solve_kst, solve_sepkst, solve_st, SolveReport};
use prodgraph::{Matrix, ProductKind, SolverOptions};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, GeneratorKind, Method, SampleCount};
use crate::summary::{summarize, write_summary};
use crate::BenchError;

/// Ground-truth redraws allowed when a polynomial covariance is singular.
pub const MAX_TRUTH_DRAWS: u64 = 100;
/// Seed tag separating signal streams from ground-truth streams.
const SIGNAL_TAG: u64 = 0x5167_4e41_4c00_0000;

/// Column order of `results.csv`.
pub const RESULT_HEADER: [&str; 15] = [
    "method",
    "P",
    "Q",
    "R",
    "trial",
    "seed",
    "tau",
    "precision",
    "recall",
    "fscore_p",
    "fscore_q",
    "fscore_prod",
    "commutativity",
    "wall_time_s",
    "status",
];

/// One `results.csv` row. Precision and recall refer to the product graph;
/// `seed` is the cell seed that reproduces the trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "R")]
    pub r: String,
    pub trial: usize,
    pub seed: u64,
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
    pub fscore_p: Option<f64>,
    pub fscore_q: Option<f64>,
    pub fscore_prod: f64,
    pub commutativity: Option<f64>,
    pub wall_time_s: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub version: String,
    /// Seconds since the Unix epoch; omitted when timing is disabled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct NamedReport {
    pub name: String,
    pub report: SolveReport,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub reports: Vec<NamedReport>,
    pub environment: Environment,
}

enum Model {
    Filters { hp: PolyFilter, hq: PolyFilter },
    Mrf { s: Gso },
    Poly { s: Gso, coeffs: Vec<f64> },
}

struct Truth {
    gp: Gso,
    gq: Gso,
    p: Adjacency,
    q: Adjacency,
    product: Adjacency,
    model: Model,
}

fn draw_truth(cfg: &ExperimentConfig, p: usize, q: usize, cell_seed: u64) -> Result<Truth, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    for attempt in 0..MAX_TRUTH_DRAWS {
        let base = derive(cell_seed, &[attempt]);
        let gp = erdos_renyi(p, cfg.er_p, derive(base, &[0])).map_err(|e| err(&e))?;
        let gq = erdos_renyi(q, cfg.er_p, derive(base, &[1])).map_err(|e| err(&e))?;
        let model = match cfg.generator {
            GeneratorKind::Assumption1 => Model::Filters {
                hp: random_filter(&gp, cfg.filter_len, derive(base, &[2])).map_err(|e| err(&e))?,
                hq: random_filter(&gq, cfg.filter_len, derive(base, &[3])).map_err(|e| err(&e))?,
            },
            GeneratorKind::Mrf => Model::Mrf { s: product(&gp, &gq, cfg.product) },
            GeneratorKind::Poly => {
                let s = product(&gp, &gq, cfg.product);
                let mut rng = stream(derive(base, &[2]), 0);
                let coeffs: Vec<f64> = (0..cfg.filter_len).map(|_| rng.random_range(-1.0..=1.0)).collect();
                match nonsingular_polycov_filter(&s, &coeffs) {
                    Ok(_) => Model::Poly { s, coeffs },
                    Err(SignalError::SingularFilter { .. }) => continue,
                    Err(e) => return Err(e.to_string()),
                }
            }
        };
        let product = Adjacency::support(&product_matrix(gp.weights(), gq.weights(), cfg.product));
        return Ok(Truth {
            p: Adjacency::support(gp.weights()),
            q: Adjacency::support(gq.weights()),
            gp,
            gq,
            product,
            model,
        });
    }
    Err(format!("no nonsingular polynomial covariance after {MAX_TRUTH_DRAWS} ground-truth draws"))
}

fn signals(truth: &Truth, p: usize, q: usize, r: usize, seed: u64) -> Result<SignalTensor, SignalError> {
    match &truth.model {
        Model::Filters { hp, hq } => generate_2d(hp, hq, r, seed),
        Model::Mrf { s } => generate_mrf(s, p, q, r, seed),
        Model::Poly { s, coeffs } => generate_polycov(s, coeffs, p, q, r, seed, false),
    }
}

fn covariances(truth: &Truth, p: usize, q: usize, count: SampleCount, seed: u64) -> Result<CovarianceSet, SignalError> {
    match count {
        SampleCount::Analytic => match &truth.model {
            Model::Filters { hp, hq } => Ok(analytic_cov(hp, hq, true)),
            Model::Mrf { s } => Ok(covariances_from_full(mrf_covariance(s)?, p, q, Provenance::Analytic)),
            Model::Poly { s, coeffs } => Ok(covariances_from_full(polycov_covariance(s, coeffs)?, p, q, Provenance::Analytic)),
        },
        SampleCount::Samples(r) => Ok(sample_cov(&signals(truth, p, q, r, seed)?, true)),
    }
}

/// Data of a single trial, as seen by every method in its cell.
pub struct Instance {
    pub gp: Gso,
    pub gq: Gso,
    /// Support of the ground-truth product graph.
    pub product: Adjacency,
    /// `(H_P, H_Q)` for the filtered-noise generator.
    pub filters: Option<(PolyFilter, PolyFilter)>,
    /// Joint shift operator for the MRF and polynomial generators.
    pub joint: Option<Gso>,
    pub cov: CovarianceSet,
    pub tensor: Option<SignalTensor>,
}

/// Regenerates the data of size `(p, q)` for a cell seed, using the
/// ground-truth settings of `cfg` and the signal stream of sample-count
/// index `r_idx`.
pub fn generate_instance(
    cfg: &ExperimentConfig,
    p: usize,
    q: usize,
    count: SampleCount,
    r_idx: usize,
    cell_seed: u64,
) -> Result<Instance, BenchError> {
    let truth = draw_truth(cfg, p, q, cell_seed).map_err(BenchError::Input)?;
    let seed = derive(cell_seed, &[SIGNAL_TAG, r_idx as u64]);
    let input = |e: SignalError| BenchError::Input(e.to_string());
    let (cov, tensor) = match count {
        SampleCount::Analytic => (covariances(&truth, p, q, count, seed).map_err(input)?, None),
        SampleCount::Samples(r) => {
            let t = signals(&truth, p, q, r, seed).map_err(input)?;
            (sample_cov(&t, true), Some(t))
        }
    };
    let (filters, joint) = match truth.model {
        Model::Filters { hp, hq } => (Some((hp, hq)), None),
        Model::Mrf { s } | Model::Poly { s, .. } => (None, Some(s)),
    };
    Ok(Instance { gp: truth.gp, gq: truth.gq, product: truth.product, filters, joint, cov, tensor })
}

fn solve(method: Method, cov: &CovarianceSet, p: usize, q: usize, opts: &SolverOptions) -> Result<SolveReport, String> {
    let full = || cov.c_y.as_ref().ok_or_else(|| "full covariance unavailable".to_string());
    let out = match method {
        Method::St => solve_st(full()?, opts),
        Method::Kst => solve_kst(full()?, p, q, opts),
        Method::Sepkst => solve_sepkst(&cov.c_p, &cov.c_q, opts),
    };
    out.map_err(|e| e.to_string())
}

fn evaluate(
    method: Method,
    rep: &SolveReport,
    truth: &Truth,
    cov: &CovarianceSet,
    kind: ProductKind,
    tau: f64,
) -> Option<ProductEval> {
    let c_y = cov.c_y.as_ref();
    let eval = match method {
        Method::St => eval_full(rep.s_full.as_ref()?.weights(), &truth.product, c_y, tau),
        Method::Kst | Method::Sepkst => {
            if rep.s_p.is_none() && rep.s_q.is_none() {
                return None;
            }
            let or_zero = |g: Option<&Gso>, n: usize| g.map(|g| g.weights().clone()).unwrap_or_else(|| Matrix::zeros(n, n));
            let sp = or_zero(rep.s_p.as_ref(), truth.p.n());
            let sq = or_zero(rep.s_q.as_ref(), truth.q.n());
            eval_product(&sp, &sq, &truth.p, &truth.q, kind, c_y, tau)
        }
    };
    eval.ok()
}

struct Outcome {
    r_idx: usize,
    method: Method,
    row: ResultRow,
    report: Option<SolveReport>,
}

fn run_cell(cfg: &ExperimentConfig, size_idx: usize, trial: usize) -> Vec<Outcome> {
    let (p, q) = cfg.sizes[size_idx];
    let cell_seed = derive(cfg.master_seed, &[size_idx as u64, trial as u64]);
    let truth = draw_truth(cfg, p, q, cell_seed);
    let mut out = Vec::new();
    for (r_idx, &count) in cfg.sample_counts.iter().enumerate() {
        let signal_seed = derive(cell_seed, &[SIGNAL_TAG, r_idx as u64]);
        let cov = truth.as_ref().map_err(|e| e.clone()).and_then(|t| covariances(t, p, q, count, signal_seed).map_err(|e| e.to_string()));
        let opts = match count {
            SampleCount::Analytic => cfg.solver,
            SampleCount::Samples(_) => SolverOptions { epsilon_rel: cfg.sample_epsilon_rel, ..cfg.solver },
        };
        for &method in &cfg.methods {
            let mut row = ResultRow {
                method: method.to_string(),
                p,
                q,
                r: count.to_string(),
                trial,
                seed: cell_seed,
                tau: cfg.tau,
                precision: 0.0,
                recall: 0.0,
                fscore_p: None,
                fscore_q: None,
                fscore_prod: 0.0,
                commutativity: None,
                wall_time_s: 0.0,
                status: "error".into(),
            };
            let (truth, cov) = match (&truth, &cov) {
                (Ok(t), Ok(c)) => (t, c),
                _ => {
                    out.push(Outcome { r_idx, method, row, report: None });
                    continue;
                }
            };
            let report = match solve(method, cov, p, q, &opts) {
                Ok(mut rep) => {
                    if !cfg.record_timing {
                        rep.wall_time_s = 0.0;
                    }
                    row.status = rep.status.as_str().to_string();
                    row.wall_time_s = rep.wall_time_s;
                    if let Some(ev) = evaluate(method, &rep, truth, cov, cfg.product, cfg.tau) {
                        row.precision = ev.product.precision;
                        row.recall = ev.product.recall;
                        row.fscore_prod = ev.product.fscore;
                        row.fscore_p = ev.p.map(|e| e.fscore);
                        row.fscore_q = ev.q.map(|e| e.fscore);
                        row.commutativity = ev.product.commutativity;
                    }
                    Some(rep)
                }
                Err(_) => None,
            };
            out.push(Outcome { r_idx, method, row, report });
        }
    }
    out
}

fn worker_count(cfg: &ExperimentConfig) -> Result<Option<usize>, BenchError> {
    match std::env::var("PRODGRAPH_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(BenchError::Config(format!("PRODGRAPH_WORKERS={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(cfg.workers),
    }
}

/// Runs every `(size, sample count, method, trial)` combination. Failures in
/// a trial become rows with a non-optimal status; only configuration errors
/// abort.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord, BenchError> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(cfg)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| BenchError::Io(format!("thread pool: {e}")))?;
    let cells: Vec<(usize, usize)> =
        (0..cfg.sizes.len()).flat_map(|s| (0..cfg.trials).map(move |t| (s, t))).collect();
    let results: Vec<Vec<Outcome>> = pool.install(|| cells.par_iter().map(|&(s, t)| run_cell(cfg, s, t)).collect());

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut pending = results;
    for s in 0..cfg.sizes.len() {
        for r_idx in 0..cfg.sample_counts.len() {
            for &method in &cfg.methods {
                for t in 0..cfg.trials {
                    let cell = &mut pending[s * cfg.trials + t];
                    let pos = cell
                        .iter()
                        .position(|o| o.r_idx == r_idx && o.method == method)
                        .expect("every cell covers every combination");
                    let o = cell.swap_remove(pos);
                    if let Some(report) = o.report {
                        let name = format!("{}_P{}_Q{}_R{}_trial{:04}.json", o.row.method, o.row.p, o.row.q, o.row.r, t);
                        reports.push(NamedReport { name, report });
                    }
                    rows.push(o.row);
                }
            }
        }
    }
    let timestamp = cfg.record_timing.then(|| {
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    });
    Ok(RunRecord {
        config: cfg.clone(),
        rows,
        reports,
        environment: Environment { version: env!("CARGO_PKG_VERSION").to_string(), timestamp },
    })
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(RESULT_HEADER).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn write(path: &Path, text: &str) -> Result<(), BenchError> {
    fs::write(path, text).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}

/// Writes `results.csv`, `summary.csv`, `run.json` and `reports/*.json`
/// under `dir`.
pub fn write_outputs(record: &RunRecord, dir: &Path) -> Result<(), BenchError> {
    let reports_dir = dir.join("reports");
    fs::create_dir_all(&reports_dir).map_err(|e| BenchError::Io(format!("{}: {e}", reports_dir.display())))?;
    write(&dir.join("results.csv"), &rows_to_csv(&record.rows))?;
    write_summary(&dir.join("summary.csv"), &summarize(&record.rows))?;
    let run = serde_json::json!({ "config": record.config, "environment": record.environment });
    write(&dir.join("run.json"), &serde_json::to_string_pretty(&run).expect("serializable"))?;
    for r in &record.reports {
        write(&reports_dir.join(&r.name), &r.report.to_json())?;
    }
    Ok(())
}
