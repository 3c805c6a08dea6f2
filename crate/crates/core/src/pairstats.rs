//! Per-pair Bayes factors and tail probabilities for all `p(p-1)/2` pairs.
//!
//! Both tests reduce to 2 × 2 blocks of two `p × p` matrices:
//!
//! * marginal independence (`σ_ij = 0`) reads `F_aa` and `T_aa = F_aa + S_aa`;
//! * conditional independence (`ω_ij = 0`) reads the Schur complements
//!   `F_aa.b = {(F⁻¹)_aa}⁻¹` and `T_aa.b = {(T⁻¹)_aa}⁻¹`,
//!
//! with `a = {i, j}` and `b` the remaining variables. After `T⁻¹` is formed
//! once, every pair costs O(1).
//!
//! Both scaled Bayes factors share one shape,
//!
//! ```text
//! ln sBF = h(ν, n) + (ν/2) ln(1 - r_prior²) - ((ν+n)/2) ln(1 - r_post²)
//! h(ν, n) = ln Γ((ν+n)/2) + ln Γ((ν+n-1)/2) + 2 ln Γ((ν+1)/2)
//!         - ln Γ(ν/2) - ln Γ((ν-1)/2) - 2 ln Γ((ν+n+1)/2)
//! ```
//!
//! with `ν = δ` for the conditional test and `ν = δ - p + 2` for the marginal
//! one (the bivariate marginal of an inverse Wishart loses `p - 2` degrees of
//! freedom).

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{BeamError, Result};
use crate::linalg;
use crate::mathfn::{beta_upper_tail_unchecked, log_gamma_unchecked, LogValue};
use crate::model::{DataMatrix, ModelFit};

/// Correlations within this distance of ±1 are treated as exactly ±1.
pub const UNIT_CORRELATION_TOL: f64 = 1e-12;

/// Pairs per work unit in the parallel sweep.
const SWEEP_BLOCK: usize = 1 << 14;

/// How `T⁻¹` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPath {
    /// Woodbury when `D = τI` and `n < p`, Cholesky of `T` otherwise.
    Auto,
    /// `p × p` Cholesky of `T = F + S`.
    Direct,
    /// `T⁻¹ = f⁻¹(I - Yᵀ(fIₙ + YYᵀ)⁻¹Y)`; requires `D = τI`.
    Woodbury,
}

/// Prior part of the kernels: `F = (δ-p-1)D` and `F⁻¹`.
#[derive(Debug, Clone)]
pub enum PriorKernel {
    /// `F = fI`, `f = (δ-p-1)τ`.
    Scalar(f64),
    Dense { f: DMatrix<f64>, f_inv: DMatrix<f64> },
}

/// `F`, `F⁻¹` and `T⁻¹` for one fitted model.
#[derive(Debug, Clone)]
pub struct PrecomputedKernels {
    n: usize,
    p: usize,
    delta: f64,
    prior: PriorKernel,
    t_inv: DMatrix<f64>,
    path: KernelPath,
}

impl PrecomputedKernels {
    pub fn t_inv(&self) -> &DMatrix<f64> {
        &self.t_inv
    }

    pub fn prior(&self) -> &PriorKernel {
        &self.prior
    }

    /// `(δ-p-1)τ` when `D = τI`.
    pub fn f_scalar(&self) -> Option<f64> {
        match self.prior {
            PriorKernel::Scalar(f) => Some(f),
            PriorKernel::Dense { .. } => None,
        }
    }

    /// The path actually taken (never `Auto`).
    pub fn path(&self) -> KernelPath {
        self.path
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dense `T = F + S`, rebuilt on demand for checks.
    pub fn t_matrix(&self, data: &DataMatrix) -> DMatrix<f64> {
        let mut t = data.gram().clone();
        match &self.prior {
            PriorKernel::Scalar(f) => {
                for i in 0..self.p {
                    t[(i, i)] += f;
                }
            }
            PriorKernel::Dense { f, .. } => t += f,
        }
        t
    }

    fn f_entry(&self, i: usize, j: usize) -> f64 {
        match &self.prior {
            PriorKernel::Scalar(f) => {
                if i == j {
                    *f
                } else {
                    0.0
                }
            }
            PriorKernel::Dense { f, .. } => f[(i, j)],
        }
    }
}

/// Forms `F`, `F⁻¹` and `T⁻¹`.
pub fn precompute_kernels(data: &DataMatrix, fit: &ModelFit, path: KernelPath) -> Result<PrecomputedKernels> {
    let (n, p) = (data.n(), data.p());
    fit.prior.check_dim(p)?;
    let weight = fit.prior_weight(p);
    if !(weight > 0.0) {
        return Err(BeamError::domain(format!(
            "delta must exceed p + 1 = {}, got {}",
            p + 1,
            fit.delta
        )));
    }
    let scale = fit.prior.identity_scale();
    let path = match (path, scale) {
        (KernelPath::Woodbury, None) => {
            return Err(BeamError::config(
                "the Woodbury path needs a (scaled) identity prior",
            ))
        }
        (KernelPath::Auto, Some(_)) if n < p => KernelPath::Woodbury,
        (KernelPath::Auto, _) => KernelPath::Direct,
        (other, _) => other,
    };

    let prior = match (&fit.prior, scale) {
        (_, Some(tau)) => PriorKernel::Scalar(weight * tau),
        (crate::model::PriorSpec::Explicit(d), None) => PriorKernel::Dense {
            f: d.matrix() * weight,
            f_inv: d.inverse() / weight,
        },
        _ => unreachable!("identity kinds always report a scale"),
    };

    let t_inv = match (path, &prior) {
        (KernelPath::Woodbury, PriorKernel::Scalar(f)) => woodbury_t_inv(data.y(), *f)?,
        _ => {
            let mut t = data.gram().clone();
            match &prior {
                PriorKernel::Scalar(f) => {
                    for i in 0..p {
                        t[(i, i)] += f;
                    }
                }
                PriorKernel::Dense { f, .. } => t += f,
            }
            linalg::spd_inverse(t, "T = F + S")?
        }
    };
    Ok(PrecomputedKernels {
        n,
        p,
        delta: fit.delta,
        prior,
        t_inv,
        path,
    })
}

/// `(fI_p + YᵀY)⁻¹ = f⁻¹(I_p - XᵀX)` with `X = L⁻¹Y`, `LLᵀ = fIₙ + YYᵀ`.
fn woodbury_t_inv(y: &DMatrix<f64>, f: f64) -> Result<DMatrix<f64>> {
    let (n, p) = y.shape();
    let mut inner = y * y.transpose();
    linalg::symmetrize(&mut inner);
    for i in 0..n {
        inner[(i, i)] += f;
    }
    let chol = linalg::cholesky(inner, "fI + YYᵀ")?;
    let x = chol
        .l_dirty()
        .lower_triangle()
        .solve_lower_triangular(y)
        .ok_or_else(|| BeamError::numerical("singular Cholesky factor of fI + YYᵀ"))?;
    let mut t_inv = linalg::gram(&x);
    t_inv.neg_mut();
    for i in 0..p {
        t_inv[(i, i)] += 1.0;
    }
    t_inv /= f;
    Ok(t_inv)
}

/// Prior and posterior marginal quantities of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalStats {
    pub f_ii: f64,
    pub f_jj: f64,
    pub t_ii: f64,
    pub t_jj: f64,
    /// Prior marginal correlation.
    pub r_f: f64,
    /// Posterior marginal correlation.
    pub r_t: f64,
    /// Sample correlation `s_ij / √(s_ii s_jj)`.
    pub r_s: f64,
}

/// Prior and posterior partial quantities of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalStats {
    pub g_ii: f64,
    pub g_jj: f64,
    pub g_ij: f64,
    pub q_ii: f64,
    pub q_jj: f64,
    pub q_ij: f64,
    /// Prior partial correlation.
    pub r_g: f64,
    /// Posterior partial correlation.
    pub r_q: f64,
}

impl ConditionalStats {
    /// Entries of `Z = T_aa.b - F_aa.b`, the data part of the posterior Schur complement.
    pub fn z(&self) -> (f64, f64, f64) {
        (self.q_ii - self.g_ii, self.q_jj - self.g_jj, self.q_ij - self.g_ij)
    }
}

fn corr(xy: f64, xx: f64, yy: f64) -> f64 {
    (xy / (xx * yy).sqrt()).clamp(-1.0, 1.0)
}

fn near_unit(r: f64) -> bool {
    1.0 - r.abs() <= UNIT_CORRELATION_TOL
}

pub fn pair_marginal_stats(kern: &PrecomputedKernels, data: &DataMatrix, i: usize, j: usize) -> MarginalStats {
    debug_assert!(i < j && j < kern.p);
    let s = data.gram();
    let (s_ii, s_jj, s_ij) = (s[(i, i)], s[(j, j)], s[(i, j)]);
    let (f_ii, f_jj, f_ij) = (kern.f_entry(i, i), kern.f_entry(j, j), kern.f_entry(i, j));
    let (t_ii, t_jj, t_ij) = (f_ii + s_ii, f_jj + s_jj, f_ij + s_ij);
    MarginalStats {
        f_ii,
        f_jj,
        t_ii,
        t_jj,
        r_f: corr(f_ij, f_ii, f_jj),
        r_t: corr(t_ij, t_ii, t_jj),
        r_s: corr(s_ij, s_ii, s_jj),
    }
}

/// Inverts the 2 × 2 block `[[m_ii, m_ij], [m_ij, m_jj]]`.
fn invert_block(m_ii: f64, m_jj: f64, m_ij: f64, what: &str) -> Result<(f64, f64, f64)> {
    let det = m_ii * m_jj - m_ij * m_ij;
    if !(det > 0.0) {
        return Err(BeamError::numerical(format!(
            "2x2 block of {what} has non-positive determinant {det}"
        )));
    }
    Ok((m_jj / det, m_ii / det, -m_ij / det))
}

pub fn pair_conditional_stats(kern: &PrecomputedKernels, i: usize, j: usize) -> Result<ConditionalStats> {
    debug_assert!(i < j && j < kern.p);
    let m = &kern.t_inv;
    let (q_ii, q_jj, q_ij) = invert_block(m[(i, i)], m[(j, j)], m[(i, j)], "T⁻¹")?;
    let (g_ii, g_jj, g_ij) = match &kern.prior {
        PriorKernel::Scalar(f) => (*f, *f, 0.0),
        PriorKernel::Dense { f_inv, .. } => {
            invert_block(f_inv[(i, i)], f_inv[(j, j)], f_inv[(i, j)], "F⁻¹")?
        }
    };
    Ok(ConditionalStats {
        g_ii,
        g_jj,
        g_ij,
        q_ii,
        q_jj,
        q_ij,
        r_g: corr(g_ij, g_ii, g_jj),
        r_q: (-m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt()).clamp(-1.0, 1.0),
    })
}

/// Data-independent Γ-ratio parts of the two scaled Bayes factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfConstants {
    pub n: usize,
    pub delta: f64,
    /// `ν = δ - p + 2` of the marginal test.
    pub nu_marginal: f64,
    pub log_gamma_marginal: f64,
    pub log_gamma_conditional: f64,
}

impl BfConstants {
    pub fn new(delta: f64, n: usize, p: usize) -> Result<Self> {
        if !(delta > p as f64 + 1.0) {
            return Err(BeamError::domain(format!(
                "delta must exceed p + 1 = {}, got {delta}",
                p + 1
            )));
        }
        let nu_marginal = delta - p as f64 + 2.0;
        Ok(BfConstants {
            n,
            delta,
            nu_marginal,
            log_gamma_marginal: gamma_ratio(nu_marginal, n as f64),
            log_gamma_conditional: gamma_ratio(delta, n as f64),
        })
    }

    pub fn from_fit(fit: &ModelFit, n: usize, p: usize) -> Result<Self> {
        Self::new(fit.delta, n, p)
    }
}

/// `h(ν, n)`, grouped as differences of neighbouring Γ terms so that large
/// arguments do not cancel catastrophically.
fn gamma_ratio(nu: f64, n: f64) -> f64 {
    let lg = log_gamma_unchecked;
    let top = lg((nu + n + 1.0) / 2.0);
    (lg((nu + n) / 2.0) - top)
        + (lg((nu + n - 1.0) / 2.0) - top)
        + (lg((nu + 1.0) / 2.0) - lg(nu / 2.0))
        + (lg((nu + 1.0) / 2.0) - lg((nu - 1.0) / 2.0))
}

fn log_scaled_bf(constant: f64, nu: f64, n: f64, r_prior: f64, r_post: f64) -> LogValue {
    if near_unit(r_post) {
        return f64::INFINITY;
    }
    constant + nu / 2.0 * (-r_prior * r_prior).ln_1p() - (nu + n) / 2.0 * (-r_post * r_post).ln_1p()
}

/// Log scaled Bayes factor for marginal dependence of the pair.
pub fn log_sbf_marginal(stats: &MarginalStats, c: &BfConstants) -> LogValue {
    log_scaled_bf(c.log_gamma_marginal, c.nu_marginal, c.n as f64, stats.r_f, stats.r_t)
}

/// Log Bayes factor for marginal dependence: the scaled version plus
/// `½ ln(t_ii t_jj / (f_ii f_jj))`.
pub fn log_bf_marginal(stats: &MarginalStats, c: &BfConstants) -> LogValue {
    log_sbf_marginal(stats, c) + 0.5 * ((stats.t_ii * stats.t_jj) / (stats.f_ii * stats.f_jj)).ln()
}

/// Log scaled Bayes factor for conditional dependence of the pair.
pub fn log_sbf_conditional(stats: &ConditionalStats, c: &BfConstants) -> LogValue {
    log_scaled_bf(c.log_gamma_conditional, c.delta, c.n as f64, stats.r_g, stats.r_q)
}

/// Log Bayes factor for conditional dependence: the scaled version plus
/// `½ ln(q_ii q_jj / (g_ii g_jj))`.
pub fn log_bf_conditional(stats: &ConditionalStats, c: &BfConstants) -> LogValue {
    log_sbf_conditional(stats, c) + 0.5 * ((stats.q_ii * stats.q_jj) / (stats.g_ii * stats.g_jj)).ln()
}

/// Null tail probability of a squared correlation: `Pr(r² > observed)` for
/// `r² ~ Beta(1/2, (n-1)/2)`.
pub fn null_tail(r: f64, n: usize) -> f64 {
    if near_unit(r) {
        return 0.0;
    }
    beta_upper_tail_unchecked((r * r).min(1.0), 0.5, (n as f64 - 1.0) / 2.0)
}

/// Tail probability of the marginal scaled Bayes factor.
pub fn tail_prob_marginal(stats: &MarginalStats, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(BeamError::domain("tail probabilities need n >= 2"));
    }
    Ok(null_tail(stats.r_s, n))
}

/// Tail probability of the conditional scaled Bayes factor, through the
/// correlation of `Z = T_aa.b - F_aa.b`.
pub fn tail_prob_conditional(stats: &ConditionalStats, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(BeamError::domain("tail probabilities need n >= 2"));
    }
    let (z_ii, z_jj, z_ij) = stats.z();
    if !(z_ii > 0.0 && z_jj > 0.0) {
        return Err(BeamError::numerical(format!(
            "residual block Z has non-positive diagonal ({z_ii}, {z_jj})"
        )));
    }
    Ok(null_tail(corr(z_ij, z_ii, z_jj), n))
}

/// The posterior marginal correlation reached ±1.
pub const FLAG_MARGINAL_UNIT: u8 = 1;
/// The posterior partial correlation reached ±1.
pub const FLAG_CONDITIONAL_UNIT: u8 = 1 << 1;
/// The sample correlation or the residual correlation reached ±1.
pub const FLAG_TAIL_UNIT: u8 = 1 << 2;
/// `Z` had a non-positive diagonal; the conditional tail is reported as 1.
pub const FLAG_DEGENERATE_RESIDUAL: u8 = 1 << 3;

/// Statistics of one pair `i < j` (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStat {
    pub i: u32,
    pub j: u32,
    pub r_t: f64,
    pub r_f: f64,
    pub r_q: f64,
    pub r_g: f64,
    pub log_sbf_m: f64,
    pub log_sbf_c: f64,
    pub tail_m: f64,
    pub tail_c: f64,
    pub flags: u8,
}

impl PairStat {
    pub fn is_flagged(&self) -> bool {
        self.flags != 0
    }
}

/// Row-major position of pair `(i, j)`, `i < j < p`, all 0-based:
/// `k = i(2p - i - 1)/2 + (j - i - 1)`.
pub fn pair_index(i: usize, j: usize, p: usize) -> usize {
    debug_assert!(i < j && j < p);
    i * (2 * p - i - 1) / 2 + (j - i - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_coords(k: usize, p: usize) -> (usize, usize) {
    debug_assert!(k < p * (p - 1) / 2);
    // Start from the real root of the row-offset quadratic and correct for rounding.
    let pf = p as f64;
    let disc = (2.0 * pf - 1.0).powi(2) - 8.0 * k as f64;
    let mut i = (((2.0 * pf - 1.0) - disc.max(0.0).sqrt()) / 2.0).floor() as usize;
    let offset = |i: usize| i * (2 * p - i - 1) / 2;
    while i > 0 && offset(i) > k {
        i -= 1;
    }
    while offset(i + 1) <= k {
        i += 1;
    }
    (i, k - offset(i) + i + 1)
}

pub fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

/// Everything needed to evaluate any single pair.
pub struct PairComputer<'a> {
    data: &'a DataMatrix,
    kern: PrecomputedKernels,
    consts: BfConstants,
}

impl<'a> PairComputer<'a> {
    pub fn new(data: &'a DataMatrix, fit: &ModelFit, path: KernelPath) -> Result<Self> {
        let kern = precompute_kernels(data, fit, path)?;
        let consts = BfConstants::from_fit(fit, data.n(), data.p())?;
        Ok(PairComputer { data, kern, consts })
    }

    pub fn kernels(&self) -> &PrecomputedKernels {
        &self.kern
    }

    pub fn constants(&self) -> &BfConstants {
        &self.consts
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    pub fn pair(&self, i: usize, j: usize) -> PairStat {
        let n = self.data.n();
        let marg = pair_marginal_stats(&self.kern, self.data, i, j);
        let mut flags = 0;
        if near_unit(marg.r_t) {
            flags |= FLAG_MARGINAL_UNIT;
        }
        if near_unit(marg.r_s) {
            flags |= FLAG_TAIL_UNIT;
        }
        let tail_m = null_tail(marg.r_s, n);
        let log_sbf_m = log_sbf_marginal(&marg, &self.consts);

        let (r_q, r_g, log_sbf_c, tail_c) = match pair_conditional_stats(&self.kern, i, j) {
            Ok(cond) => {
                if near_unit(cond.r_q) {
                    flags |= FLAG_CONDITIONAL_UNIT;
                }
                let tail = match tail_prob_conditional(&cond, n) {
                    Ok(t) => {
                        let (z_ii, z_jj, z_ij) = cond.z();
                        if near_unit(corr(z_ij, z_ii, z_jj)) {
                            flags |= FLAG_TAIL_UNIT;
                        }
                        t
                    }
                    Err(_) => {
                        flags |= FLAG_DEGENERATE_RESIDUAL;
                        1.0
                    }
                };
                (cond.r_q, cond.r_g, log_sbf_conditional(&cond, &self.consts), tail)
            }
            Err(_) => {
                // T⁻¹ is SPD; only reachable through severe rounding.
                flags |= FLAG_DEGENERATE_RESIDUAL;
                (0.0, 0.0, f64::NAN, 1.0)
            }
        };
        PairStat {
            i: i as u32,
            j: j as u32,
            r_t: marg.r_t,
            r_f: marg.r_f,
            r_q,
            r_g,
            log_sbf_m,
            log_sbf_c,
            tail_m,
            tail_c,
            flags,
        }
    }

    /// Fills `out` with pairs `start, start + 1, ...` in row-major order.
    pub fn fill(&self, start: usize, out: &mut [PairStat]) {
        if out.is_empty() {
            return;
        }
        let p = self.p();
        let (mut i, mut j) = pair_coords(start, p);
        for slot in out.iter_mut() {
            *slot = self.pair(i, j);
            j += 1;
            if j == p {
                i += 1;
                j = i + 1;
            }
        }
    }

    /// Computes every pair in parallel into pre-assigned slots.
    pub fn all_pairs(&self) -> Vec<PairStat> {
        let m = pair_count(self.p());
        let blank = PairStat {
            i: 0,
            j: 0,
            r_t: 0.0,
            r_f: 0.0,
            r_q: 0.0,
            r_g: 0.0,
            log_sbf_m: 0.0,
            log_sbf_c: 0.0,
            tail_m: 1.0,
            tail_c: 1.0,
            flags: 0,
        };
        let mut pairs = vec![blank; m];
        pairs
            .par_chunks_mut(SWEEP_BLOCK)
            .enumerate()
            .for_each(|(b, chunk)| self.fill(b * SWEEP_BLOCK, chunk));
        pairs
    }

    /// Streams every pair in row-major order to `sink`, `batch` pairs at a
    /// time, computing each batch in parallel.
    pub fn stream<F>(&self, batch: usize, mut sink: F) -> Result<()>
    where
        F: FnMut(&[PairStat]) -> Result<()>,
    {
        let m = pair_count(self.p());
        let batch = batch.max(SWEEP_BLOCK);
        let mut buf: Vec<PairStat> = Vec::with_capacity(batch.min(m));
        let mut start = 0;
        while start < m {
            let len = batch.min(m - start);
            buf.clear();
            buf.resize(len, self.pair(0, 1));
            buf.par_chunks_mut(SWEEP_BLOCK)
                .enumerate()
                .for_each(|(b, chunk)| self.fill(start + b * SWEEP_BLOCK, chunk));
            sink(&buf)?;
            start += len;
        }
        Ok(())
    }
}

/// All pair statistics of one dataset.
#[derive(Debug, Clone)]
pub struct PairTable {
    pub n: usize,
    pub p: usize,
    pub delta: f64,
    pub pairs: Vec<PairStat>,
}

impl PairTable {
    pub fn get(&self, i: usize, j: usize) -> &PairStat {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        &self.pairs[pair_index(a, b, self.p)]
    }

    pub fn flagged(&self) -> impl Iterator<Item = &PairStat> {
        self.pairs.iter().filter(|s| s.is_flagged())
    }
}

/// Runs the whole sweep and logs degenerate pairs.
pub fn compute_all_pairs(data: &DataMatrix, fit: &ModelFit) -> Result<PairTable> {
    compute_all_pairs_with(data, fit, KernelPath::Auto)
}

pub fn compute_all_pairs_with(data: &DataMatrix, fit: &ModelFit, path: KernelPath) -> Result<PairTable> {
    let computer = PairComputer::new(data, fit, path)?;
    let pairs = computer.all_pairs();
    let table = PairTable {
        n: data.n(),
        p: data.p(),
        delta: fit.delta,
        pairs,
    };
    warn_flagged(table.flagged(), data.column_names());
    Ok(table)
}

const MAX_FLAG_WARNINGS: usize = 20;

pub(crate) fn warn_flagged<'a>(flagged: impl Iterator<Item = &'a PairStat>, names: Option<&[String]>) -> usize {
    let mut count = 0;
    for s in flagged {
        if count < MAX_FLAG_WARNINGS {
            let label = |k: u32| match names {
                Some(n) => n[k as usize].clone(),
                None => format!("#{}", k + 1),
            };
            log::warn!(
                "pair ({}, {}) flagged: {}",
                label(s.i),
                label(s.j),
                describe_flags(s.flags)
            );
        }
        count += 1;
    }
    if count > MAX_FLAG_WARNINGS {
        log::warn!("{} further pairs flagged", count - MAX_FLAG_WARNINGS);
    }
    count
}

pub fn describe_flags(flags: u8) -> String {
    let mut parts = Vec::new();
    if flags & FLAG_MARGINAL_UNIT != 0 {
        parts.push("posterior marginal correlation is ±1");
    }
    if flags & FLAG_CONDITIONAL_UNIT != 0 {
        parts.push("posterior partial correlation is ±1");
    }
    if flags & FLAG_TAIL_UNIT != 0 {
        parts.push("perfectly correlated columns");
    }
    if flags & FLAG_DEGENERATE_RESIDUAL != 0 {
        parts.push("degenerate residual covariance");
    }
    parts.join("; ")
}
