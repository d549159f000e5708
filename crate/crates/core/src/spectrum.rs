//! Diagonal model of the integral operator `L_K` on `L^2([0,1], dx)`.
//!
//! The operator acts as `L_K e_i = sigma_i e_i` on the trigonometric basis
//! `e_1 = 1`, `e_{2k}(x) = sqrt(2) cos(2 pi k x)`, `e_{2k+1}(x) = sqrt(2) sin(2 pi k x)`.
//! Functions are represented by their coordinates in that basis, so norms are
//! plain l2 norms (Parseval) and every function of the operator is a
//! per-coordinate multiplier.

use std::f64::consts::{SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use crate::conventions;
use crate::error::{Error, Result};

/// Orthonormal basis of `L^2_rho` the operator is diagonal in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Trigonometric basis on `[0,1]` under the uniform marginal.
    #[default]
    Trigonometric,
}

impl Basis {
    /// Value of the `index`-th basis function (0-based, so index 0 is `e_1`).
    #[inline]
    pub fn eval(self, index: usize, x: f64) -> f64 {
        match self {
            Basis::Trigonometric => {
                if index == 0 {
                    1.0
                } else {
                    let k = index.div_ceil(2) as f64;
                    let angle = TAU * k * x;
                    if index % 2 == 1 {
                        SQRT_2 * angle.cos()
                    } else {
                        SQRT_2 * angle.sin()
                    }
                }
            }
        }
    }

    /// Fills `out[i] = e_{i+1}(x)` for every `i`.
    ///
    /// Uses the angle-addition recurrence, so only one `sin_cos` call is made
    /// regardless of `out.len()`.
    pub fn eval_all(self, x: f64, out: &mut [f64]) {
        match self {
            Basis::Trigonometric => {
                if out.is_empty() {
                    return;
                }
                out[0] = 1.0;
                let (s1, c1) = (TAU * x).sin_cos();
                let (mut s, mut c) = (s1, c1);
                let mut i = 1;
                while i < out.len() {
                    out[i] = SQRT_2 * c;
                    if i + 1 < out.len() {
                        out[i + 1] = SQRT_2 * s;
                    }
                    let next_c = c * c1 - s * s1;
                    let next_s = s * c1 + c * s1;
                    c = next_c;
                    s = next_s;
                    i += 2;
                }
            }
        }
    }

    /// `sup_x e_i(x)^2` over the whole basis.
    pub fn sup_sq(self) -> f64 {
        match self {
            Basis::Trigonometric => 2.0,
        }
    }
}

/// Coordinates of a function of `L^2_rho` in an operator's basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionCoeffs(Vec<f64>);

impl FunctionCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `||f||_rho^2`.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `||f - g||_rho^2`.
    pub fn distance_sq(&self, other: &FunctionCoeffs) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// Pointwise value `sum_i f_i e_i(x)`.
    pub fn eval(&self, basis: Basis, x: f64) -> f64 {
        let mut values = vec![0.0; self.len()];
        basis.eval_all(x, &mut values);
        self.0.iter().zip(&values).map(|(c, e)| c * e).sum()
    }
}

impl From<Vec<f64>> for FunctionCoeffs {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Truncated diagonal operator with non-increasing, non-negative eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralOperator {
    eigenvalues: Vec<f64>,
    basis: Basis,
    #[serde(skip)]
    trace: f64,
    #[serde(skip)]
    kappa_sq: f64,
}

#[derive(Deserialize)]
struct RawOperator {
    eigenvalues: Vec<f64>,
    #[serde(default)]
    basis: Basis,
}

impl<'de> Deserialize<'de> for SpectralOperator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawOperator::deserialize(deserializer)?;
        SpectralOperator::with_basis(raw.eigenvalues, raw.basis).map_err(serde::de::Error::custom)
    }
}

impl SpectralOperator {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        Self::with_basis(eigenvalues, Basis::Trigonometric)
    }

    pub fn with_basis(eigenvalues: Vec<f64>, basis: Basis) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::param("eigenvalues", "must be non-empty"));
        }
        if let Some(bad) = eigenvalues.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(Error::param(
                "eigenvalues",
                format!("must be finite and non-negative, found {bad}"),
            ));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::param("eigenvalues", "must be non-increasing"));
        }
        let trace: f64 = eigenvalues.iter().sum();
        // kappa^2 bounds phi_v(x) phi_v(x') = trace * e_i(x) e_i(x'); it is
        // floored at 1 since the analysis assumes kappa >= 1.
        let kappa_sq = (basis.sup_sq() * trace).max(1.0);
        Ok(Self {
            eigenvalues,
            basis,
            trace,
            kappa_sq,
        })
    }

    /// `sigma_i = i^{-exponent}` for `i = 1..=n`.
    pub fn power_law(exponent: f64, n: usize) -> Result<Self> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::param("exponent", format!("must be positive, got {exponent}")));
        }
        Self::new((1..=n).map(|i| (i as f64).powf(-exponent)).collect())
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// `tr(L_K) = sum_i sigma_i`.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn kappa_sq(&self) -> f64 {
        self.kappa_sq
    }

    /// `L_K^zeta f`.
    pub fn apply_power(&self, zeta: f64, f: &FunctionCoeffs) -> Result<FunctionCoeffs> {
        if !(zeta >= 0.0) {
            return Err(Error::param("zeta", format!("must be non-negative, got {zeta}")));
        }
        check_dim(self.dim(), f.len())?;
        Ok(FunctionCoeffs(
            self.eigenvalues
                .iter()
                .zip(f.as_slice())
                .map(|(s, c)| conventions::pow(*s, zeta) * c)
                .collect(),
        ))
    }

    /// `L_K^{-zeta} f`, i.e. division by `sigma_i^zeta`; coordinates on a
    /// zero eigenvalue become infinite unless they vanish.
    pub fn apply_inverse_power(&self, zeta: f64, f: &FunctionCoeffs) -> Result<FunctionCoeffs> {
        if !(zeta >= 0.0) {
            return Err(Error::param("zeta", format!("must be non-negative, got {zeta}")));
        }
        check_dim(self.dim(), f.len())?;
        Ok(FunctionCoeffs(
            self.eigenvalues
                .iter()
                .zip(f.as_slice())
                .map(|(s, c)| conventions::div(*c, conventions::pow(*s, zeta)))
                .collect(),
        ))
    }

    /// `||f||_K^2 = sum_i f_i^2 / sigma_i`.
    pub fn rkhs_norm_sq(&self, f: &FunctionCoeffs) -> Result<f64> {
        check_dim(self.dim(), f.len())?;
        Ok(self
            .eigenvalues
            .iter()
            .zip(f.as_slice())
            .map(|(s, c)| conventions::div(c * c, *s))
            .sum())
    }

    /// `tr(L_K (L_K + lambda I)^{-1})`.
    pub fn effective_dimension(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
        }
        Ok(self.eigenvalues.iter().map(|s| s / (s + lambda)).sum())
    }

    /// Whether the effective dimension stays below `c_gamma * lambda^{-gamma}`
    /// on every grid point.
    pub fn verify_capacity(&self, gamma: f64, c_gamma: f64, lambdas: &[f64]) -> bool {
        !lambdas.is_empty()
            && lambdas.iter().all(|&lambda| {
                self.effective_dimension(lambda)
                    .map(|d| d <= c_gamma * conventions::pow(lambda, -gamma))
                    .unwrap_or(false)
            })
    }

    pub(crate) fn check_steps(&self, etas: &[f64], lambda: f64, k: usize, t: usize) -> Result<()> {
        if !(lambda >= 0.0) {
            return Err(Error::param("lambda", format!("must be non-negative, got {lambda}")));
        }
        if k > t {
            return Err(Error::param("k", format!("must not exceed t, got k = {k}, t = {t}")));
        }
        if t > etas.len() {
            return Err(Error::param(
                "t",
                format!("only {} step sizes supplied, t = {t}", etas.len()),
            ));
        }
        for (j, &eta) in etas.iter().enumerate().take(t).skip(k) {
            if !(eta > 0.0) || eta * (lambda + self.kappa_sq) > 1.0 + 1e-12 {
                return Err(Error::StepSizeTooLarge {
                    step: j + 1,
                    eta,
                    lambda,
                    kappa_sq: self.kappa_sq,
                });
            }
        }
        Ok(())
    }

    /// Diagonal of `Pi_{k+1}^t(L_{K,lambda}) L_K^zeta`:
    /// coordinate `i` is `sigma_i^zeta prod_{j=k+1}^t (1 - eta_j (lambda + sigma_i))`.
    ///
    /// `etas[j - 1]` is the step size of step `j`; `k = t` gives the empty product.
    pub fn pi_product_diag(
        &self,
        etas: &[f64],
        lambda: f64,
        k: usize,
        t: usize,
        zeta: f64,
    ) -> Result<FunctionCoeffs> {
        if !(zeta >= 0.0) {
            return Err(Error::param("zeta", format!("must be non-negative, got {zeta}")));
        }
        self.check_steps(etas, lambda, k, t)?;
        let window = &etas[k..t];
        Ok(FunctionCoeffs(
            self.eigenvalues
                .iter()
                .map(|&s| {
                    let c = lambda + s;
                    conventions::pow(s, zeta) * conventions::contraction_product(window.iter().map(|e| e * c))
                })
                .collect(),
        ))
    }

    /// `tr(Pi_{k+1}^t(L_{K,lambda})^2 L_K)`.
    pub fn trace_term(&self, etas: &[f64], lambda: f64, k: usize, t: usize) -> Result<f64> {
        self.check_steps(etas, lambda, k, t)?;
        let window = &etas[k..t];
        Ok(self
            .eigenvalues
            .iter()
            .map(|&s| {
                let c = lambda + s;
                let p = conventions::contraction_product(window.iter().map(|e| e * c));
                s * p * p
            })
            .sum())
    }

    /// `sum_{k=1}^t eta_k^2 tr(Pi_{k+1}^t(L_{K,lambda})^2 L_K)` in O(t N)
    /// via the backward recurrence `P(k-1) = P(k) (1 - eta_k c_i)^2`.
    pub fn weighted_trace_sum(&self, etas: &[f64], lambda: f64, t: usize) -> Result<f64> {
        self.check_steps(etas, lambda, 0, t)?;
        let mut total = 0.0;
        for &s in &self.eigenvalues {
            let c = lambda + s;
            let mut p = 1.0;
            let mut acc = 0.0;
            for k in (1..=t).rev() {
                let eta = etas[k - 1];
                acc += eta * eta * p;
                let f = 1.0 - eta * c;
                p *= f * f;
            }
            total += s * acc;
        }
        Ok(total)
    }

    /// Operator norm of a diagonal operator given by its diagonal.
    pub fn diag_norm(diag: &FunctionCoeffs) -> f64 {
        diag.as_slice().iter().fold(0.0_f64, |m, d| m.max(d.abs()))
    }
}

/// Log-spaced grid `10^lo ..= 10^hi` with `points` entries.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..points)
            .map(|j| 10f64.powf(lo + (hi - lo) * j as f64 / (points - 1) as f64))
            .collect(),
    }
}
