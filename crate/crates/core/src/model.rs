//! Gaussian conjugate model: standardized data, prior target, empirical-Bayes
//! choice of the degrees of freedom, and the closed-form posterior means.
//!
//! Model: rows of `Y` are i.i.d. `N_p(0, Σ)` and `Σ ~ IW_p((δ-p-1)D, δ)` with
//! `δ > p + 1`, so that `E(Σ) = D`. Throughout, `F = (δ-p-1)D` and
//! `T = F + S` with `S = YᵀY`.

use std::borrow::Cow;
use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::Serialize;

use crate::error::{BeamError, Result};
use crate::linalg;
use crate::mathfn::log_gamma_unchecked;
use crate::optimize::maximize_bounded;
use crate::pairstats::{precompute_kernels, KernelPath};

/// Search interval for the shrinkage weight α.
pub const ALPHA_MIN: f64 = 1e-4;
pub const ALPHA_MAX: f64 = 1.0 - 1e-4;
const ALPHA_XTOL: f64 = 1e-8;
const ALPHA_MAX_ITER: usize = 200;

/// Standardized observation matrix with its Gram matrix and spectrum.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    y: DMatrix<f64>,
    gram: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    column_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn p(&self) -> usize {
        self.y.ncols()
    }

    /// The standardized `n × p` matrix `Y`.
    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// `S = YᵀY`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Eigenvalues of `S`, non-increasing, zero-padded to length `p`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(BeamError::config(format!(
                "{} column names for {} variables",
                names.len(),
                self.p()
            )));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    /// Eigenvalues of `D⁻¹S` for the given prior, non-increasing.
    pub fn spectrum(&self, prior: &PriorSpec) -> Cow<'_, [f64]> {
        match prior {
            PriorSpec::Identity => Cow::Borrowed(&self.eigenvalues),
            PriorSpec::ScaledIdentity(tau) => {
                Cow::Owned(self.eigenvalues.iter().map(|e| e / tau).collect())
            }
            PriorSpec::Explicit(d) => Cow::Owned(d.generalized_spectrum(&self.y)),
        }
    }
}

/// Centers each column and scales it so that `YⱼᵀYⱼ / n = 1`.
pub fn standardize(raw: &DMatrix<f64>) -> Result<DataMatrix> {
    let n = raw.nrows();
    if n < 3 {
        return Err(BeamError::InsufficientSamples { n });
    }
    if let Some((idx, _)) = raw.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(BeamError::domain(format!(
            "non-finite value at row {}, column {}",
            idx % n,
            idx / n
        )));
    }
    let nf = n as f64;
    let mut y = raw.clone();
    for (j, mut col) in y.column_iter_mut().enumerate() {
        let mean = col.sum() / nf;
        col.add_scalar_mut(-mean);
        let ss = col.norm_squared();
        let scale = (ss / nf).sqrt();
        // A column whose spread is at rounding level of its magnitude is constant.
        if !(scale > 0.0) || scale <= 1e-12 * mean.abs() {
            return Err(BeamError::ConstantColumn { index: j });
        }
        col /= scale;
    }
    Ok(from_standardized(y))
}

/// Builds the Gram matrix and spectrum for an already standardized `Y`.
fn from_standardized(y: DMatrix<f64>) -> DataMatrix {
    let (n, p) = y.shape();
    let gram = linalg::gram(&y);
    let mut eigenvalues = if n < p {
        // YYᵀ shares the non-zero spectrum of YᵀY.
        let mut outer = &y * y.transpose();
        linalg::symmetrize(&mut outer);
        linalg::sym_eigenvalues_desc(outer)
    } else {
        linalg::sym_eigenvalues_desc(gram.clone())
    };
    for e in eigenvalues.iter_mut() {
        *e = e.max(0.0);
    }
    eigenvalues.resize(p, 0.0);
    DataMatrix {
        y,
        gram,
        eigenvalues,
        column_names: None,
    }
}

/// Prior expectation `D` of `Σ`.
#[derive(Debug, Clone)]
pub enum PriorSpec {
    /// `D = I_p`.
    Identity,
    /// `D = τ I_p`.
    ScaledIdentity(f64),
    /// Arbitrary symmetric positive definite `D`.
    Explicit(ExplicitPrior),
}

impl PriorSpec {
    pub fn scaled_identity(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(BeamError::config(format!("prior scale must be positive, got {tau}")));
        }
        Ok(PriorSpec::ScaledIdentity(tau))
    }

    pub fn explicit(d: DMatrix<f64>) -> Result<Self> {
        Ok(PriorSpec::Explicit(ExplicitPrior::new(d)?))
    }

    /// `τ` when `D = τI`, `None` for an explicit matrix.
    pub fn identity_scale(&self) -> Option<f64> {
        match self {
            PriorSpec::Identity => Some(1.0),
            PriorSpec::ScaledIdentity(tau) => Some(*tau),
            PriorSpec::Explicit(_) => None,
        }
    }

    /// `ln |D|` for a `p`-dimensional model.
    pub fn log_det(&self, p: usize) -> f64 {
        match self {
            PriorSpec::Identity => 0.0,
            PriorSpec::ScaledIdentity(tau) => p as f64 * tau.ln(),
            PriorSpec::Explicit(d) => d.log_det,
        }
    }

    /// Dense `D` (materialized on demand for the identity kinds).
    pub fn matrix(&self, p: usize) -> Cow<'_, DMatrix<f64>> {
        match self {
            PriorSpec::Identity => Cow::Owned(DMatrix::identity(p, p)),
            PriorSpec::ScaledIdentity(tau) => Cow::Owned(DMatrix::identity(p, p) * *tau),
            PriorSpec::Explicit(d) => Cow::Borrowed(&d.matrix),
        }
    }

    pub(crate) fn check_dim(&self, p: usize) -> Result<()> {
        match self {
            PriorSpec::Explicit(d) if d.matrix.nrows() != p => Err(BeamError::config(format!(
                "prior matrix is {0}x{0} but data have {p} variables",
                d.matrix.nrows()
            ))),
            _ => Ok(()),
        }
    }

    /// Short description used in `fit.json`.
    pub fn describe(&self) -> PriorDescriptor {
        match self {
            PriorSpec::Identity => PriorDescriptor {
                kind: "identity",
                scale: None,
            },
            PriorSpec::ScaledIdentity(tau) => PriorDescriptor {
                kind: "scaled_identity",
                scale: Some(*tau),
            },
            PriorSpec::Explicit(_) => PriorDescriptor {
                kind: "explicit",
                scale: None,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PriorDescriptor {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// Explicit SPD prior matrix with its cached factorization.
#[derive(Debug, Clone)]
pub struct ExplicitPrior {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl ExplicitPrior {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(BeamError::config("prior matrix must be square"));
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-10 * matrix.amax().max(1.0) {
            return Err(BeamError::config("prior matrix must be symmetric"));
        }
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| BeamError::config("prior matrix must be positive definite"))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(ExplicitPrior {
            matrix,
            chol,
            log_det,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub(crate) fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.chol.inverse();
        linalg::symmetrize(&mut inv);
        inv
    }

    /// Eigenvalues of `D⁻¹S` via the symmetric form `L⁻¹ S L⁻ᵀ`, `D = LLᵀ`.
    fn generalized_spectrum(&self, y: &DMatrix<f64>) -> Vec<f64> {
        let (n, p) = y.shape();
        // W = L⁻¹Yᵀ (p × n), so that L⁻¹SL⁻ᵀ = WWᵀ.
        let w = self
            .chol
            .l_dirty()
            .lower_triangle()
            .solve_lower_triangular(&y.transpose())
            .expect("Cholesky factor has a positive diagonal");
        let mut ev = if n < p {
            linalg::sym_eigenvalues_desc(linalg::gram(&w))
        } else {
            let mut m = &w * w.transpose();
            linalg::symmetrize(&mut m);
            linalg::sym_eigenvalues_desc(m)
        };
        for e in ev.iter_mut() {
            *e = e.max(0.0);
        }
        ev.resize(p, 0.0);
        ev
    }
}

/// Fitted hyperparameters of the conjugate model.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub delta: f64,
    pub alpha: f64,
    pub log_ml: f64,
    pub prior: PriorSpec,
}

impl ModelFit {
    /// Fit with a user-supplied `δ`, bypassing the empirical-Bayes search.
    pub fn with_delta(data: &DataMatrix, prior: PriorSpec, delta: f64) -> Result<Self> {
        prior.check_dim(data.p())?;
        let log_ml = log_marginal_likelihood(data, &prior, delta)?;
        Ok(ModelFit {
            delta,
            alpha: alpha_from_delta(delta, data.n(), data.p()),
            log_ml,
            prior,
        })
    }

    /// `f = δ - p - 1`, the multiplier of `D` in `F`.
    pub fn prior_weight(&self, p: usize) -> f64 {
        self.delta - p as f64 - 1.0
    }
}

/// `δ(α) = p + 1 + αn / (1 - α)`.
pub fn delta_from_alpha(alpha: f64, n: usize, p: usize) -> f64 {
    p as f64 + 1.0 + alpha * n as f64 / (1.0 - alpha)
}

/// `α(δ) = (δ - p - 1) / (δ + n - p - 1)`.
pub fn alpha_from_delta(delta: f64, n: usize, p: usize) -> f64 {
    let f = delta - p as f64 - 1.0;
    f / (f + n as f64)
}

/// `ln p(Y; δ)`, evaluated from the pre-computed spectrum of `D⁻¹S`.
pub fn log_marginal_likelihood(data: &DataMatrix, prior: &PriorSpec, delta: f64) -> Result<f64> {
    prior.check_dim(data.p())?;
    let spectrum = data.spectrum(prior);
    log_ml_from_spectrum(&spectrum, data.n(), prior.log_det(data.p()), delta)
}

/// `ln p(Y; δ)` given the eigenvalues `e_l` of `D⁻¹S` and `ln|D|`:
///
/// `-(np/2) ln π + ln Γ_p((δ+n)/2) - ln Γ_p(δ/2) + (δ/2)(p ln f + ln|D|)
///  - ((δ+n)/2)(ln|D| + Σ ln(f + e_l))`, with `f = δ - p - 1`.
pub fn log_ml_from_spectrum(spectrum: &[f64], n: usize, log_det_d: f64, delta: f64) -> Result<f64> {
    let p = spectrum.len();
    let (nf, pf) = (n as f64, p as f64);
    let f = delta - pf - 1.0;
    if !(f > 0.0 && delta.is_finite()) {
        return Err(BeamError::domain(format!(
            "delta must exceed p + 1 = {}, got {delta}",
            pf + 1.0
        )));
    }
    // Γ_p ratio as a sum of per-factor differences; the π terms cancel.
    let half_n = nf / 2.0;
    let mut gamma_ratio = 0.0;
    for i in 0..p {
        let x = (delta - i as f64) / 2.0;
        gamma_ratio += log_gamma_unchecked(x + half_n) - log_gamma_unchecked(x);
    }
    let sum_log: f64 = spectrum.iter().map(|e| (f + e).ln()).sum();
    Ok(-(nf * pf / 2.0) * PI.ln() + gamma_ratio + (delta / 2.0) * (pf * f.ln() + log_det_d)
        - ((delta + nf) / 2.0) * (log_det_d + sum_log))
}

/// Empirical-Bayes `δ`: maximizes the log-marginal likelihood over
/// `α ∈ [ALPHA_MIN, ALPHA_MAX]` with `δ = δ(α)`.
pub fn fit_delta(data: &DataMatrix, prior: PriorSpec) -> Result<ModelFit> {
    prior.check_dim(data.p())?;
    let (n, p) = (data.n(), data.p());
    let spectrum = data.spectrum(&prior);
    let log_det = prior.log_det(p);
    let objective = |alpha: f64| {
        log_ml_from_spectrum(&spectrum, n, log_det, delta_from_alpha(alpha, n, p))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let opt = maximize_bounded(objective, ALPHA_MIN, ALPHA_MAX, ALPHA_XTOL, ALPHA_MAX_ITER);
    Ok(ModelFit {
        delta: delta_from_alpha(opt.x, n, p),
        alpha: opt.x,
        log_ml: opt.value,
        prior,
    })
}

/// Log-marginal likelihood along an α grid, as `(α, δ, ln p(Y; δ))` rows.
pub fn ml_curve(data: &DataMatrix, prior: &PriorSpec, alphas: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    prior.check_dim(data.p())?;
    let (n, p) = (data.n(), data.p());
    let spectrum = data.spectrum(prior);
    let log_det = prior.log_det(p);
    alphas
        .iter()
        .map(|&a| {
            let delta = delta_from_alpha(a, n, p);
            Ok((a, delta, log_ml_from_spectrum(&spectrum, n, log_det, delta)?))
        })
        .collect()
}

/// Uniform grid `k / (points + 1)`, `k = 1..=points`.
pub fn alpha_grid(points: usize) -> Vec<f64> {
    let denom = (points + 1) as f64;
    (1..=points).map(|k| k as f64 / denom).collect()
}

/// `E(Σ | Y) = {(δ-p-1)D + S} / (δ+n-p-1) = αD + (1-α)S/n`.
pub fn posterior_mean_sigma(data: &DataMatrix, fit: &ModelFit) -> DMatrix<f64> {
    let p = data.p();
    let f = fit.prior_weight(p);
    let mut t = data.gram().clone();
    match fit.prior.identity_scale() {
        Some(tau) => {
            for i in 0..p {
                t[(i, i)] += f * tau;
            }
        }
        None => t += fit.prior.matrix(p).as_ref() * f,
    }
    t / (f + data.n() as f64)
}

/// `E(Ω | Y) = (δ+n) {(δ-p-1)D + S}⁻¹`, through the same `T⁻¹` used by the
/// pair sweep.
pub fn posterior_mean_omega(data: &DataMatrix, fit: &ModelFit) -> Result<DMatrix<f64>> {
    let kern = precompute_kernels(data, fit, KernelPath::Auto)?;
    Ok(kern.t_inv() * (fit.delta + data.n() as f64))
}
