use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prodgraph::eval::{eval_full, eval_product, Adjacency, DEFAULT_TAU};
use prodgraph::graph::erdos_renyi;
use prodgraph::io::{read_matrix, write_gso, write_matrix, write_report, write_tensor, IoError};
use prodgraph::solver::{solve_kst, solve_sepkst, solve_st};
use prodgraph::{Matrix, NormMode, ProductKind, SolveError, SolveStatus, SolverOptions};
use prodgraph_bench::config::{Experiment, ExperimentConfig, GeneratorKind, Method, SampleCount};
use prodgraph_bench::summary::{read_results, summary_to_csv};
use prodgraph_bench::{generate_instance, run_experiment, summarize, write_outputs, BenchError};

const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_NOT_OPTIMAL: u8 = 4;

/// Product-graph topology inference from two-dimensional graph signals.
#[derive(Parser)]
#[command(name = "prodgraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random graph, or a full synthetic instance with covariances.
    Generate(GenerateArgs),
    /// Estimate graph shift operators from covariance CSVs.
    Solve(SolveArgs),
    /// Score an estimate against a ground-truth graph.
    Eval(EvalArgs),
    /// Run an experiment sweep from a JSON config.
    Bench(BenchArgs),
    /// Aggregate one or more results.csv files.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Single Erdős–Rényi graph with N nodes and edge probability P.
    #[arg(long, num_args = 2, value_names = ["N", "P"], conflicts_with = "size")]
    er: Option<Vec<String>>,
    /// Factor sizes of a full instance.
    #[arg(long, num_args = 2, value_names = ["P", "Q"])]
    size: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// File stem for `--er`.
    #[arg(long, default_value = "er")]
    stem: String,
    #[arg(long, default_value_t = 0.3)]
    er_p: f64,
    #[arg(long, default_value_t = 3)]
    filter_len: usize,
    #[arg(long, value_enum, default_value_t = GeneratorArg::Assumption1)]
    generator: GeneratorArg,
    #[arg(long, value_enum, default_value_t = ProductArg::Kronecker)]
    product: ProductArg,
    /// Number of observations; omitted means exact covariances only.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Assumption1,
    Mrf,
    Poly,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProductArg {
    Kronecker,
    Cartesian,
    Strong,
}

impl From<ProductArg> for ProductKind {
    fn from(p: ProductArg) -> Self {
        match p {
            ProductArg::Kronecker => ProductKind::Kronecker,
            ProductArg::Cartesian => ProductKind::Cartesian,
            ProductArg::Strong => ProductKind::Strong,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    FirstRowUnit,
    RowStochastic,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(value_enum)]
    method: MethodArg,
    /// Dimension-wise covariance over the P nodes.
    #[arg(long)]
    cp: Option<PathBuf>,
    /// Dimension-wise covariance over the Q nodes.
    #[arg(long)]
    cq: Option<PathBuf>,
    /// Full PQ×PQ covariance of vec(Y).
    #[arg(long)]
    cy: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    /// JSON solver options; flags below override its fields.
    #[arg(long)]
    options: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
    #[arg(long, value_enum)]
    norm_mode: Option<NormArg>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Write a zero wall time so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    St,
    Kst,
    Sepkst,
}

#[derive(Args)]
struct EvalArgs {
    /// Full estimate.
    #[arg(long, requires = "truth", conflicts_with_all = ["pred_p", "pred_q"])]
    pred: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, requires_all = ["pred_q", "truth_p", "truth_q"])]
    pred_p: Option<PathBuf>,
    #[arg(long)]
    pred_q: Option<PathBuf>,
    #[arg(long)]
    truth_p: Option<PathBuf>,
    #[arg(long)]
    truth_q: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ProductArg::Kronecker)]
    product: ProductArg,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Full covariance for the commutativity metric.
    #[arg(long)]
    cov: Option<PathBuf>,
    /// Also write the result here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(required = true)]
    results: Vec<PathBuf>,
    /// Destination CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Input(String),
    Other(String),
    NotOptimal(SolveStatus),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(m) => Failure::Usage(m),
            BenchError::Io(m) => Failure::Other(m),
            e @ (BenchError::Input(_) | BenchError::SchemaMismatch(_)) => Failure::Input(e.to_string()),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::InvalidOptions(_) => Failure::Usage(e.to_string()),
            SolveError::InvalidInput(_) | SolveError::Graph(_) => Failure::Input(e.to_string()),
            SolveError::Reference(_) => Failure::Other(e.to_string()),
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Other(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    create_dir(&a.out)?;
    if let Some(er) = a.er {
        let n: usize = er[0].parse().map_err(|_| Failure::Usage(format!("--er: bad node count {:?}", er[0])))?;
        let p: f64 = er[1].parse().map_err(|_| Failure::Usage(format!("--er: bad probability {:?}", er[1])))?;
        let g = erdos_renyi(n, p, a.seed).map_err(|e| Failure::Usage(e.to_string()))?;
        let path = write_gso(&a.out, &a.stem, &g)?;
        println!("{}", path.display());
        return Ok(());
    }
    let Some(size) = a.size else {
        return Err(Failure::Usage("generate needs --er N P or --size P Q".into()));
    };
    let (p, q) = (size[0], size[1]);
    let cfg = ExperimentConfig {
        experiment: Experiment::AccuracyVsSize,
        sizes: vec![(p, q)],
        sample_counts: vec![a.samples.map_or(SampleCount::Analytic, SampleCount::Samples)],
        trials: 1,
        er_p: a.er_p,
        filter_len: a.filter_len,
        methods: vec![Method::Sepkst],
        generator: match a.generator {
            GeneratorArg::Assumption1 => GeneratorKind::Assumption1,
            GeneratorArg::Mrf => GeneratorKind::Mrf,
            GeneratorArg::Poly => GeneratorKind::Poly,
        },
        solver: SolverOptions::default(),
        tau: DEFAULT_TAU,
        master_seed: a.seed,
        output_dir: a.out.clone(),
        product: a.product.into(),
        sample_epsilon_rel: 0.0,
        record_timing: false,
        workers: None,
    };
    cfg.validate()?;
    let inst = generate_instance(&cfg, p, q, cfg.sample_counts[0], 0, a.seed)?;
    let out = &a.out;
    write_gso(out, "truth_p", &inst.gp)?;
    write_gso(out, "truth_q", &inst.gq)?;
    write_matrix(&out.join("truth_product.csv"), inst.product.matrix())?;
    if let Some((hp, hq)) = &inst.filters {
        write_matrix(&out.join("hp.csv"), hp.matrix())?;
        write_matrix(&out.join("hq.csv"), hq.matrix())?;
    }
    if let Some(s) = &inst.joint {
        write_matrix(&out.join("joint_shift.csv"), s.weights())?;
    }
    write_matrix(&out.join("cp.csv"), &inst.cov.c_p)?;
    write_matrix(&out.join("cq.csv"), &inst.cov.c_q)?;
    if let Some(c_y) = &inst.cov.c_y {
        write_matrix(&out.join("cy.csv"), c_y)?;
    }
    if let Some(t) = &inst.tensor {
        write_tensor(&out.join("tensor"), t)?;
    }
    Ok(())
}

fn solver_options(a: &SolveArgs) -> Result<SolverOptions, Failure> {
    let mut opts = match &a.options {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?
        }
        None => SolverOptions::default(),
    };
    if let Some(v) = a.eps {
        opts.epsilon = v;
    }
    if let Some(v) = a.eps_rel {
        opts.epsilon_rel = v;
    }
    if let Some(m) = a.norm_mode {
        opts.norm_mode = match m {
            NormArg::FirstRowUnit => NormMode::FirstRowUnit,
            NormArg::RowStochastic => NormMode::RowStochastic,
        };
    }
    if let Some(v) = a.beta {
        opts.beta = v;
    }
    if let Some(v) = a.tol {
        opts.tol = v;
    }
    if let Some(v) = a.max_iter {
        opts.max_iter = v;
    }
    opts.validate()?;
    Ok(opts)
}

fn required<'a, T>(v: &'a Option<T>, flag: &str, method: &str) -> Result<&'a T, Failure> {
    v.as_ref().ok_or_else(|| Failure::Usage(format!("solve {method} needs {flag}")))
}

fn cmd_solve(a: SolveArgs) -> Result<(), Failure> {
    let opts = solver_options(&a)?;
    let mut report = match a.method {
        MethodArg::St => solve_st(&read_matrix(required(&a.cy, "--cy", "st")?)?, &opts)?,
        MethodArg::Kst => {
            let c_y = read_matrix(required(&a.cy, "--cy", "kst")?)?;
            solve_kst(&c_y, *required(&a.p, "--p", "kst")?, *required(&a.q, "--q", "kst")?, &opts)?
        }
        MethodArg::Sepkst => solve_sepkst(
            &read_matrix(required(&a.cp, "--cp", "sepkst")?)?,
            &read_matrix(required(&a.cq, "--cq", "sepkst")?)?,
            &opts,
        )?,
    };
    if a.no_timing {
        report.wall_time_s = 0.0;
    }
    create_dir(&a.out)?;
    for (stem, g) in [("s_p", &report.s_p), ("s_q", &report.s_q), ("s_full", &report.s_full)] {
        if let Some(g) = g {
            write_gso(&a.out, stem, g)?;
        }
    }
    write_report(&a.out.join("report.json"), &report)?;
    println!("{}", report.status.as_str());
    match report.status {
        SolveStatus::Optimal => Ok(()),
        s => Err(Failure::NotOptimal(s)),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<(), Failure> {
    let cov = a.cov.as_deref().map(read_matrix).transpose()?;
    let input = |e: prodgraph::EvalError| Failure::Input(e.to_string());
    let result = if let (Some(pred), Some(truth)) = (&a.pred, &a.truth) {
        let truth = Adjacency::support(&read_matrix(truth)?);
        eval_full(&read_matrix(pred)?, &truth, cov.as_ref(), a.tau).map_err(input)?
    } else if let (Some(pp), Some(pq), Some(tp), Some(tq)) = (&a.pred_p, &a.pred_q, &a.truth_p, &a.truth_q) {
        let support = |path: &PathBuf| -> Result<Adjacency, Failure> { Ok(Adjacency::support(&read_matrix(path)?)) };
        let (sp, sq): (Matrix, Matrix) = (read_matrix(pp)?, read_matrix(pq)?);
        eval_product(&sp, &sq, &support(tp)?, &support(tq)?, a.product.into(), cov.as_ref(), a.tau).map_err(input)?
    } else {
        return Err(Failure::Usage("eval needs --pred/--truth or --pred-p/--pred-q/--truth-p/--truth-q".into()));
    };
    let json = serde_json::to_string_pretty(&result).expect("serializable");
    if let Some(out) = &a.out {
        write_text(out, &json)?;
    }
    println!("{json}");
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(&a.config).map_err(|e| match e {
        BenchError::Io(m) => Failure::Input(m),
        e => Failure::from(e),
    })?;
    if let Some(dir) = a.output_dir {
        cfg.output_dir = dir;
    }
    let record = run_experiment(&cfg)?;
    write_outputs(&record, &cfg.output_dir)?;
    println!("{} rows -> {}", record.rows.len(), cfg.output_dir.display());
    Ok(())
}

fn cmd_summarize(a: SummarizeArgs) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for path in &a.results {
        rows.extend(read_results(path).map_err(|e| match e {
            BenchError::Io(m) => Failure::Input(m),
            e => Failure::from(e),
        })?);
    }
    let csv = summary_to_csv(&summarize(&rows));
    match &a.out {
        Some(out) => write_text(out, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Summarize(a) => cmd_summarize(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = match &f {
                Failure::Usage(m) => {
                    eprintln!("usage error: {m}");
                    EXIT_USAGE
                }
                Failure::Input(m) => {
                    eprintln!("input error: {m}");
                    EXIT_INPUT
                }
                Failure::NotOptimal(s) => {
                    eprintln!("solver finished with status {}", s.as_str());
                    EXIT_NOT_OPTIMAL
                }
                Failure::Other(m) => {
                    eprintln!("error: {m}");
                    1
                }
            };
            ExitCode::from(code)
        }
    }
}
