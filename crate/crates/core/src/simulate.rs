//! Synthetic sparse precision matrices, Gaussian sampling and ROC/PR scoring.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{BeamError, Result};
use crate::linalg;
use crate::model::{fit_delta, standardize, PriorSpec};
use crate::pairstats::{compute_all_pairs, pair_count, pair_index};

/// ChaCha20 stream used for the precision matrix of a seed.
const TRUTH_STREAM: u64 = 0;
/// ChaCha20 stream used for the observations of a seed.
const SAMPLE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    /// Tridiagonal.
    Band,
    /// Block diagonal, each within-block pair present with probability `edge_prob`.
    Cluster,
    /// Block diagonal stars centred on the first variable of each block.
    Hub,
    /// Band with rows and columns jointly permuted.
    Random,
}

impl Structure {
    pub const ALL: [Structure; 4] = [Structure::Band, Structure::Cluster, Structure::Hub, Structure::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Structure::Band => "band",
            Structure::Cluster => "cluster",
            Structure::Hub => "hub",
            Structure::Random => "random",
        }
    }

    fn is_blocked(self) -> bool {
        matches!(self, Structure::Cluster | Structure::Hub)
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Structure {
    type Err = BeamError;

    fn from_str(s: &str) -> Result<Self> {
        Structure::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| BeamError::config(format!("unknown structure '{s}' (expected band, cluster, hub or random)")))
    }
}

/// Where the eigenvalue floor is enforced for block-diagonal structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftScope {
    /// Each diagonal block is shifted separately.
    Block,
    /// One shift for the whole matrix.
    Whole,
}

fn default_block_size() -> usize {
    20
}
fn default_edge_prob() -> f64 {
    0.1
}
fn default_min_eigen() -> f64 {
    0.1
}
fn default_shift_scope() -> ShiftScope {
    ShiftScope::Block
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub structure: Structure,
    pub p: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    #[serde(default = "default_edge_prob")]
    pub edge_prob: f64,
    #[serde(default = "default_min_eigen")]
    pub min_eigen: f64,
    #[serde(default = "default_shift_scope")]
    pub shift_scope: ShiftScope,
}

impl SimScenario {
    pub fn new(structure: Structure, p: usize, n: usize, seed: u64) -> Self {
        SimScenario {
            structure,
            p,
            n,
            seed,
            block_size: default_block_size(),
            edge_prob: default_edge_prob(),
            min_eigen: default_min_eigen(),
            shift_scope: default_shift_scope(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(BeamError::config(format!("p must be at least 2, got {}", self.p)));
        }
        if self.n < 3 {
            return Err(BeamError::config(format!("n must be at least 3, got {}", self.n)));
        }
        if self.structure.is_blocked() {
            if self.block_size < 2 {
                return Err(BeamError::config("block size must be at least 2"));
            }
            if self.p % self.block_size != 0 {
                return Err(BeamError::config(format!(
                    "p = {} is not divisible by block size {}",
                    self.p, self.block_size
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(BeamError::config(format!("edge probability {} outside [0, 1]", self.edge_prob)));
        }
        if !(self.min_eigen > 0.0 && self.min_eigen.is_finite()) {
            return Err(BeamError::config(format!("minimum eigenvalue must be positive, got {}", self.min_eigen)));
        }
        Ok(())
    }

    /// The same scenario with seed `seed + replicate`.
    pub fn replicate(&self, replicate: u64) -> Self {
        SimScenario {
            seed: self.seed.wrapping_add(replicate),
            ..self.clone()
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub psi: DMatrix<f64>,
    /// Non-zero off-diagonal positions `(i, j)`, `i < j`, 0-based, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl GroundTruth {
    pub fn p(&self) -> usize {
        self.psi.nrows()
    }

    /// Edge indicator per pair in row-major pair order.
    pub fn edge_indicator(&self) -> Vec<bool> {
        let p = self.p();
        let mut ind = vec![false; pair_count(p)];
        for &(i, j) in &self.edges {
            ind[pair_index(i, j, p)] = true;
        }
        ind
    }
}

fn weight(rng: &mut ChaCha20Rng) -> f64 {
    rng.random_range(-1.0..=1.0)
}

/// Adds `(floor - λ_min)` to the diagonal of the principal block
/// `[start, start + len)` when its smallest eigenvalue is below `floor`.
fn lift_block(psi: &mut DMatrix<f64>, start: usize, len: usize, floor: f64) {
    let block = psi.view((start, start), (len, len)).clone_owned();
    let lambda_min = *linalg::sym_eigenvalues_desc(block).last().unwrap();
    if lambda_min < floor {
        let shift = floor - lambda_min;
        for k in start..start + len {
            psi[(k, k)] += shift;
        }
    }
}

/// Draws a sparse SPD precision matrix for the scenario.
pub fn gen_precision(s: &SimScenario) -> Result<GroundTruth> {
    s.validate()?;
    let p = s.p;
    let mut rng = rng_for(s.seed, TRUTH_STREAM);
    let mut psi = DMatrix::<f64>::zeros(p, p);
    let set = |psi: &mut DMatrix<f64>, i: usize, j: usize, w: f64| {
        psi[(i, j)] = w;
        psi[(j, i)] = w;
    };
    match s.structure {
        Structure::Band | Structure::Random => {
            for i in 0..p - 1 {
                let w = weight(&mut rng);
                set(&mut psi, i, i + 1, w);
            }
        }
        Structure::Cluster => {
            for b in (0..p).step_by(s.block_size) {
                for i in b..b + s.block_size {
                    for j in (i + 1)..b + s.block_size {
                        if rng.random_bool(s.edge_prob) {
                            let w = weight(&mut rng);
                            set(&mut psi, i, j, w);
                        }
                    }
                }
            }
        }
        Structure::Hub => {
            for b in (0..p).step_by(s.block_size) {
                for j in (b + 1)..b + s.block_size {
                    let w = weight(&mut rng);
                    set(&mut psi, b, j, w);
                }
            }
        }
    }
    if s.structure == Structure::Random {
        let mut perm: Vec<usize> = (0..p).collect();
        perm.shuffle(&mut rng);
        let band = psi.clone();
        for i in 0..p {
            for j in 0..p {
                psi[(perm[i], perm[j])] = band[(i, j)];
            }
        }
    }

    if s.structure.is_blocked() && s.shift_scope == ShiftScope::Block {
        for b in (0..p).step_by(s.block_size) {
            lift_block(&mut psi, b, s.block_size, s.min_eigen);
        }
    } else {
        lift_block(&mut psi, 0, p, s.min_eigen);
    }

    let mut edges = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if psi[(i, j)] != 0.0 {
                edges.push((i, j));
            }
        }
    }
    Ok(GroundTruth { psi, edges })
}

/// `n` rows drawn i.i.d. from `N(0, Ψ⁻¹)`: `x = L⁻ᵀz` with `Ψ = LLᵀ`.
pub fn sample_mvn(n: usize, truth: &GroundTruth, seed: u64) -> Result<DMatrix<f64>> {
    let p = truth.p();
    let chol = linalg::cholesky(truth.psi.clone(), "precision matrix")?;
    let mut rng = rng_for(seed, SAMPLE_STREAM);
    // Column k of `zt` is observation k, filled observation by observation.
    let mut zt = DMatrix::<f64>::zeros(p, n);
    for k in 0..n {
        for v in zt.column_mut(k).iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }
    let xt = chol
        .l()
        .transpose()
        .solve_upper_triangular(&zt)
        .ok_or_else(|| BeamError::numerical("singular Cholesky factor of the precision matrix"))?;
    Ok(xt.transpose())
}

fn check_labels(truth: &[bool], len: usize) -> Result<(usize, usize)> {
    if truth.len() != len {
        return Err(BeamError::domain(format!("{len} scores for {} labels", truth.len())));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    if pos == 0 || pos == len {
        return Err(BeamError::domain("ROC and PR need at least one edge and one non-edge"));
    }
    Ok((pos, len - pos))
}

/// Probability that a random edge outscores a random non-edge, ties
/// counted one half (Mann-Whitney with mid-ranks).
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    let (pos, neg) = check_labels(truth, scores.len())?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && scores[order[end]] == scores[order[k]] {
            end += 1;
        }
        // Ranks k+1..=end share their mean.
        let mid = (k + 1 + end) as f64 / 2.0;
        let hits = order[k..end].iter().filter(|&&i| truth[i]).count();
        rank_sum += mid * hits as f64;
        k = end;
    }
    let (pf, nf) = (pos as f64, neg as f64);
    Ok((rank_sum - pf * (pf + 1.0) / 2.0) / (pf * nf))
}

/// Average precision: `Σ_k (R_k - R_{k-1}) P_k` over descending score
/// thresholds, tied scores entering together.
pub fn pr_auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    let (pos, _) = check_labels(truth, scores.len())?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && scores[order[end]] == scores[order[k]] {
            end += 1;
        }
        let hits = order[k..end].iter().filter(|&&i| truth[i]).count();
        tp += hits;
        seen += end - k;
        if hits > 0 {
            ap += hits as f64 / pos as f64 * (tp as f64 / seen as f64);
        }
        k = end;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalResult {
    pub replicate: u64,
    pub seed: u64,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub runtime_seconds: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub scenario: SimScenario,
    pub replicates: Vec<EvalResult>,
    pub mean_roc: f64,
    pub sd_roc: f64,
    pub mean_pr: f64,
    pub sd_pr: f64,
    pub mean_runtime: f64,
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// One replicate: generate, sample, then time standardize → fit → all pairs,
/// scoring pairs by their negated conditional tail probability.
pub fn run_replicate(scenario: &SimScenario, replicate: u64) -> Result<EvalResult> {
    let s = scenario.replicate(replicate);
    let truth = gen_precision(&s)?;
    let raw = sample_mvn(s.n, &truth, s.seed)?;
    let start = Instant::now();
    let data = standardize(&raw)?;
    let fit = fit_delta(&data, PriorSpec::Identity)?;
    let table = compute_all_pairs(&data, &fit)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    let scores: Vec<f64> = table.pairs.iter().map(|st| -st.tail_c).collect();
    let labels = truth.edge_indicator();
    Ok(EvalResult {
        replicate,
        seed: s.seed,
        auc_roc: roc_auc(&scores, &labels)?,
        auc_pr: pr_auc(&scores, &labels)?,
        runtime_seconds,
        delta: fit.delta,
    })
}

/// Runs `replicates` replicates in order and summarizes them.
pub fn run_benchmark(scenario: &SimScenario, replicates: usize) -> Result<BenchSummary> {
    scenario.validate()?;
    if replicates == 0 {
        return Err(BeamError::config("at least one replicate is required"));
    }
    let results = (0..replicates as u64)
        .map(|r| run_replicate(scenario, r))
        .collect::<Result<Vec<_>>>()?;
    let roc: Vec<f64> = results.iter().map(|r| r.auc_roc).collect();
    let pr: Vec<f64> = results.iter().map(|r| r.auc_pr).collect();
    let (mean_roc, sd_roc) = mean_sd(&roc);
    let (mean_pr, sd_pr) = mean_sd(&pr);
    let mean_runtime = results.iter().map(|r| r.runtime_seconds).sum::<f64>() / replicates as f64;
    Ok(BenchSummary {
        scenario: scenario.clone(),
        replicates: results,
        mean_roc,
        sd_roc,
        mean_pr,
        sd_pr,
        mean_runtime,
    })
}
