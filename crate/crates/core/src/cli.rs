//! The `beam` command line: `fit`, `simulate` and `bench`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{BeamError, Result};
use crate::inference::{
    check_level, degree_distribution, AdjustmentMethod, GraphBuilder, GraphResult, StreamingAdjuster, TestType,
};
use crate::io::{fmt_g17, fmt_sci17, read_table, Delimiter, HeaderMode, OutFile, ReadOptions};
use crate::model::{alpha_grid, fit_delta, ml_curve, standardize, DataMatrix, ModelFit, PriorSpec};
use crate::pairstats::{pair_count, warn_flagged, KernelPath, PairComputer, PairStat};
use crate::simulate::{gen_precision, run_benchmark, sample_mvn, ShiftScope, SimScenario, Structure};

const ML_GRID_POINTS: usize = 999;

#[derive(Debug, Parser)]
#[command(name = "beam", version, about = "Bayesian estimation of marginal and conditional independence graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the model to a data file and write pair statistics and graphs.
    Fit(FitArgs),
    /// Generate a synthetic dataset with a known precision matrix.
    Simulate(SimulateArgs),
    /// Score the conditional test against simulated ground truth over replicates.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Delimited text file, rows = observations, columns = variables.
    input: PathBuf,
    /// Field separator: tab, comma or auto.
    #[arg(long, default_value = "auto")]
    delimiter: Delimiter,
    /// Whether the first row holds variable names: yes, no or auto.
    #[arg(long, default_value = "auto")]
    header: HeaderMode,
    /// Rows are variables and columns observations.
    #[arg(long)]
    transpose: bool,
    /// Prior expectation of the covariance: identity, scaled:<tau>, or a file holding a p × p matrix.
    #[arg(long, default_value = "identity")]
    prior: String,
    /// Use this δ instead of maximizing the marginal likelihood.
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated subset of marginal,conditional.
    #[arg(long, default_value = "marginal,conditional", value_delimiter = ',')]
    tests: Vec<TestType>,
    /// Multiplicity adjustment: bonferroni, holm, bh, by or none.
    #[arg(long, default_value = "bonferroni")]
    adjust: AdjustmentMethod,
    /// Error rate at which adjusted tail probabilities are declared edges.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, short = 'o', default_value = ".")]
    output_dir: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "BEAM_THREADS", default_value_t = 0)]
    threads: usize,
    /// Never hold all pairs in memory; adjust through sorted runs on disk.
    #[arg(long)]
    streaming: bool,
    /// In-memory budget for the streaming sort, in MiB.
    #[arg(long, default_value_t = 512)]
    memory_budget: usize,
    /// Number of points of the α grid in ml_curve.tsv (0 to skip).
    #[arg(long, default_value_t = ML_GRID_POINTS)]
    ml_grid: usize,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// JSON scenario file; explicit flags override its fields.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// band, cluster, hub or random.
    #[arg(long)]
    structure: Option<Structure>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    edge_prob: Option<f64>,
    #[arg(long)]
    min_eigen: Option<f64>,
    /// block or whole: where the eigenvalue floor is enforced for cluster and hub.
    #[arg(long)]
    shift_scope: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, short = 'o', default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, short = 'o', default_value = ".")]
    output_dir: PathBuf,
    #[arg(long, env = "BEAM_THREADS", default_value_t = 0)]
    threads: usize,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<SimScenario> {
        let mut s = match &self.scenario {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| BeamError::io(path, e))?;
                serde_json::from_str::<SimScenario>(&text)
                    .map_err(|e| BeamError::config(format!("{}: {e}", path.display())))?
            }
            None => {
                let structure = self
                    .structure
                    .ok_or_else(|| BeamError::config("--structure is required without --scenario"))?;
                SimScenario::new(structure, 200, 100, 1)
            }
        };
        if let Some(v) = self.structure {
            s.structure = v;
        }
        if let Some(v) = self.p {
            s.p = v;
        }
        if let Some(v) = self.n {
            s.n = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.block_size {
            s.block_size = v;
        }
        if let Some(v) = self.edge_prob {
            s.edge_prob = v;
        }
        if let Some(v) = self.min_eigen {
            s.min_eigen = v;
        }
        if let Some(v) = &self.shift_scope {
            s.shift_scope = match v.as_str() {
                "block" => ShiftScope::Block,
                "whole" => ShiftScope::Whole,
                _ => return Err(BeamError::config(format!("unknown shift scope '{v}' (expected block or whole)"))),
            };
        }
        s.validate()?;
        Ok(s)
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    }
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BeamError::config(format!("cannot start {threads} threads: {e}")))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BeamError::io(dir, e))
}

fn parse_prior(spec: &str, p: usize, opts: ReadOptions) -> Result<PriorSpec> {
    if spec.eq_ignore_ascii_case("identity") {
        return Ok(PriorSpec::Identity);
    }
    if let Some(tau) = spec.strip_prefix("scaled:") {
        let tau: f64 = tau
            .parse()
            .map_err(|_| BeamError::config(format!("bad prior scale '{tau}'")))?;
        return PriorSpec::scaled_identity(tau).map_err(|e| BeamError::config(e.to_string()));
    }
    let path = Path::new(spec);
    let table = read_table(
        path,
        ReadOptions {
            header: HeaderMode::Auto,
            transpose: false,
            ..opts
        },
    )?;
    if table.values.shape() != (p, p) {
        return Err(BeamError::config(format!(
            "prior matrix in {} is {}x{}, expected {p}x{p}",
            path.display(),
            table.values.nrows(),
            table.values.ncols()
        )));
    }
    PriorSpec::explicit(table.values).map_err(|e| BeamError::config(e.to_string()))
}

#[derive(Serialize)]
struct FitSummary<'a> {
    n: usize,
    p: usize,
    delta: f64,
    alpha: f64,
    logml: f64,
    prior: crate::model::PriorDescriptor,
    delta_source: &'a str,
    tests: Vec<TestSummary>,
}

#[derive(Serialize)]
struct TestSummary {
    test: TestType,
    adjustment: AdjustmentMethod,
    level: f64,
    edges: usize,
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    check_level(a.level)?;
    if a.tests.is_empty() {
        return Err(BeamError::config("no tests selected"));
    }
    let mut tests = a.tests.clone();
    tests.dedup();
    let opts = ReadOptions {
        delimiter: a.delimiter,
        header: a.header,
        transpose: a.transpose,
    };
    let table = read_table(&a.input, opts)?;
    let mut data = standardize(&table.values)?;
    if let Some(names) = table.names {
        data = data.with_column_names(names)?;
    }
    let prior = parse_prior(&a.prior, data.p(), opts)?;
    let pool = thread_pool(a.threads)?;
    pool.install(|| {
        let fit = match a.delta {
            Some(delta) => {
                if !(delta > data.p() as f64 + 1.0) {
                    return Err(BeamError::config(format!(
                        "--delta must exceed p + 1 = {}, got {delta}",
                        data.p() + 1
                    )));
                }
                ModelFit::with_delta(&data, prior, delta)?
            }
            None => fit_delta(&data, prior)?,
        };
        ensure_dir(&a.output_dir)?;
        let graphs = if a.streaming {
            write_edges_streaming(&data, &fit, &tests, a)?
        } else {
            write_edges_in_memory(&data, &fit, &tests, a)?
        };
        for g in &graphs {
            write_degrees(&data, g, &a.output_dir)?;
        }
        if a.ml_grid > 0 {
            write_ml_curve(&data, &fit, a.ml_grid, &a.output_dir)?;
        }
        let summary = FitSummary {
            n: data.n(),
            p: data.p(),
            delta: fit.delta,
            alpha: fit.alpha,
            logml: fit.log_ml,
            prior: fit.prior.describe(),
            delta_source: if a.delta.is_some() { "fixed" } else { "marginal likelihood" },
            tests: graphs
                .iter()
                .map(|g| TestSummary {
                    test: g.test,
                    adjustment: g.error_rate.method,
                    level: g.error_rate.level,
                    edges: g.edge_count(),
                })
                .collect(),
        };
        let path = a.output_dir.join("fit.json");
        let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        fs::write(&path, json + "\n").map_err(|e| BeamError::io(&path, e))?;
        log::info!("n = {}, p = {}, delta = {}, alpha = {}", data.n(), data.p(), fit.delta, fit.alpha);
        Ok(())
    })
}

const EDGE_HEADER: [&str; 9] = [
    "i",
    "j",
    "name_i",
    "name_j",
    "r_posterior",
    "log_sbf",
    "tail_prob",
    "adjusted_tail",
    "selected",
];

fn name(data: &DataMatrix, k: u32) -> String {
    match data.column_names() {
        Some(n) => n[k as usize].clone(),
        None => format!("V{}", k + 1),
    }
}

struct EdgeWriter {
    test: TestType,
    out: OutFile,
    graph: GraphBuilder,
}

impl EdgeWriter {
    fn new(test: TestType, data: &DataMatrix, a: &FitArgs) -> Result<Self> {
        let mut out = OutFile::create(&a.output_dir.join(format!("edges_{test}.tsv")))?;
        out.line(&EDGE_HEADER)?;
        Ok(EdgeWriter {
            test,
            out,
            graph: GraphBuilder::new(test, data.p(), a.adjust, a.level)?,
        })
    }

    fn row(&mut self, data: &DataMatrix, s: &PairStat, adjusted: f64) -> Result<()> {
        let (log_sbf, tail, r) = self.test.columns(s);
        let selected = self.graph.offer(s.i, s.j, log_sbf, tail, adjusted);
        self.out.line(&[
            &(s.i + 1).to_string(),
            &(s.j + 1).to_string(),
            &name(data, s.i),
            &name(data, s.j),
            &fmt_g17(r),
            &fmt_g17(log_sbf),
            &fmt_sci17(tail),
            &fmt_sci17(adjusted),
            if selected { "1" } else { "0" },
        ])
    }

    fn finish(self) -> Result<GraphResult> {
        self.out.finish()?;
        Ok(self.graph.finish())
    }
}

fn write_edges_in_memory(data: &DataMatrix, fit: &ModelFit, tests: &[TestType], a: &FitArgs) -> Result<Vec<GraphResult>> {
    let comp = PairComputer::new(data, fit, KernelPath::Auto)?;
    let pairs = comp.all_pairs();
    warn_flagged(pairs.iter().filter(|s| s.is_flagged()), data.column_names());
    let mut graphs = Vec::new();
    for &test in tests {
        let tails: Vec<f64> = pairs.iter().map(|s| test.columns(s).1).collect();
        let adjusted = crate::inference::adjust(&tails, a.adjust)?;
        let mut w = EdgeWriter::new(test, data, a)?;
        for (s, &adj) in pairs.iter().zip(&adjusted) {
            w.row(data, s, adj)?;
        }
        graphs.push(w.finish()?);
    }
    Ok(graphs)
}

/// Two sweeps over the pairs: the first feeds the tail probabilities to
/// out-of-core adjusters, the second recomputes each pair and writes it next
/// to its adjusted value.
fn write_edges_streaming(data: &DataMatrix, fit: &ModelFit, tests: &[TestType], a: &FitArgs) -> Result<Vec<GraphResult>> {
    let comp = PairComputer::new(data, fit, KernelPath::Auto)?;
    let m = pair_count(data.p()) as u64;
    let budget = (a.memory_budget << 20) / (2 * tests.len()).max(1);
    let batch = (budget / std::mem::size_of::<PairStat>()).max(1);

    let mut adjusters: Vec<StreamingAdjuster> =
        tests.iter().map(|_| StreamingAdjuster::new(a.adjust, m, budget)).collect();
    let mut k = 0u64;
    let mut flagged = Vec::new();
    comp.stream(batch, |chunk| {
        for s in chunk {
            for (t, adj) in tests.iter().zip(adjusters.iter_mut()) {
                adj.push(t.columns(s).1, k)?;
            }
            if s.is_flagged() && flagged.len() < 1000 {
                flagged.push(*s);
            }
            k += 1;
        }
        Ok(())
    })?;
    warn_flagged(flagged.iter(), data.column_names());

    let mut adjusted = adjusters
        .into_iter()
        .map(StreamingAdjuster::finish)
        .collect::<Result<Vec<_>>>()?;
    let mut writers = tests
        .iter()
        .map(|&t| EdgeWriter::new(t, data, a))
        .collect::<Result<Vec<_>>>()?;
    comp.stream(batch, |chunk| {
        for s in chunk {
            for (w, it) in writers.iter_mut().zip(adjusted.iter_mut()) {
                let (adj, _) = it
                    .next()
                    .ok_or_else(|| BeamError::numerical("adjusted tail stream ended early"))??;
                w.row(data, s, adj)?;
            }
        }
        Ok(())
    })?;
    writers.into_iter().map(EdgeWriter::finish).collect()
}

fn write_degrees(data: &DataMatrix, g: &GraphResult, dir: &Path) -> Result<()> {
    let mut out = OutFile::create(&dir.join(format!("degrees_{}.tsv", g.test)))?;
    out.line(&["node", "name", "degree"])?;
    for (k, d) in g.degrees.iter().enumerate() {
        out.line(&[&(k + 1).to_string(), &name(data, k as u32), &d.to_string()])?;
    }
    out.finish()?;
    let mut out = OutFile::create(&dir.join(format!("degree_hist_{}.tsv", g.test)))?;
    out.line(&["degree", "count"])?;
    for (d, c) in degree_distribution(g) {
        out.line(&[&d.to_string(), &c.to_string()])?;
    }
    out.finish()
}

fn write_ml_curve(data: &DataMatrix, fit: &ModelFit, points: usize, dir: &Path) -> Result<()> {
    let rows = ml_curve(data, &fit.prior, &alpha_grid(points))?;
    let mut out = OutFile::create(&dir.join("ml_curve.tsv"))?;
    out.line(&["alpha", "delta", "logml"])?;
    for (alpha, delta, logml) in rows {
        out.line(&[&fmt_g17(alpha), &fmt_g17(delta), &fmt_g17(logml)])?;
    }
    out.finish()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, json + "\n").map_err(|e| BeamError::io(path, e))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let s = a.scenario.resolve()?;
    let truth = gen_precision(&s)?;
    let x = sample_mvn(s.n, &truth, s.seed)?;
    ensure_dir(&a.output_dir)?;

    let mut out = OutFile::create(&a.output_dir.join("data.tsv"))?;
    let header: Vec<String> = (1..=s.p).map(|k| format!("V{k}")).collect();
    out.raw(&(header.join("\t") + "\n"))?;
    let mut line = String::new();
    for row in x.row_iter() {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push('\t');
            }
            line.push_str(&fmt_g17(*v));
        }
        line.push('\n');
        out.raw(&line)?;
    }
    out.finish()?;

    let mut out = OutFile::create(&a.output_dir.join("truth.tsv"))?;
    out.line(&["i", "j", "precision"])?;
    for &(i, j) in &truth.edges {
        out.line(&[&(i + 1).to_string(), &(j + 1).to_string(), &fmt_g17(truth.psi[(i, j)])])?;
    }
    out.finish()?;
    write_json(&a.output_dir.join("scenario.json"), &s)?;
    log::info!("{} variables, {} observations, {} true edges", s.p, s.n, truth.edges.len());
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let s = a.scenario.resolve()?;
    if a.replicates == 0 {
        return Err(BeamError::config("--replicates must be at least 1"));
    }
    ensure_dir(&a.output_dir)?;
    let summary = thread_pool(a.threads)?.install(|| run_benchmark(&s, a.replicates))?;

    let mut out = OutFile::create(&a.output_dir.join("bench_replicates.tsv"))?;
    out.line(&["structure", "p", "n", "replicate", "seed", "auc_roc", "auc_pr", "runtime_seconds", "delta"])?;
    for r in &summary.replicates {
        out.line(&[
            s.structure.as_str(),
            &s.p.to_string(),
            &s.n.to_string(),
            &r.replicate.to_string(),
            &r.seed.to_string(),
            &fmt_g17(r.auc_roc),
            &fmt_g17(r.auc_pr),
            &fmt_g17(r.runtime_seconds),
            &fmt_g17(r.delta),
        ])?;
    }
    out.finish()?;

    let header = ["structure", "p", "n", "replicates", "mean_auc_roc", "sd_auc_roc", "mean_auc_pr", "sd_auc_pr", "mean_runtime_seconds"];
    let row = [
        s.structure.as_str().to_owned(),
        s.p.to_string(),
        s.n.to_string(),
        a.replicates.to_string(),
        fmt_g17(summary.mean_roc),
        fmt_g17(summary.sd_roc),
        fmt_g17(summary.mean_pr),
        fmt_g17(summary.sd_pr),
        fmt_g17(summary.mean_runtime),
    ];
    let mut out = OutFile::create(&a.output_dir.join("bench_summary.tsv"))?;
    out.line(&header)?;
    let refs: Vec<&str> = row.iter().map(String::as_str).collect();
    out.line(&refs)?;
    out.finish()?;
    println!("{}\n{}", header.join("\t"), row.join("\t"));
    write_json(&a.output_dir.join("scenario.json"), &s)
}
