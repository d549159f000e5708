//! Random feature maps `phi_v` with `K(x, x') = E_v[phi_v(x) phi_v(x')]`.
//!
//! Two families are supported:
//!
//! - Gaussian random Fourier features, `phi_v(x) = sqrt(2) cos(omega . x + b)` with
//!   `omega ~ N(0, I / sigma^2)` and `b ~ U[0, 2 pi)`, realizing the Gaussian kernel
//!   `exp(-|x - x'|^2 / (2 sigma^2))`.
//! - Spectral features over a [`SpectralOperator`]: index `i` is drawn with
//!   probability `sigma_i / tr(L_K)` and `phi_i(x) = sqrt(tr(L_K)) e_i(x)`, which
//!   realizes the truncated Mercer kernel `sum_i sigma_i e_i(x) e_i(x')`.
//!
//! A feature is a pure function of `(spec, seed)`; nothing is ever cached
//! across calls except the sampling table of a spectral map.

use std::f64::consts::{SQRT_2, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};
use crate::spectrum::SpectralOperator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMapSpec {
    GaussianRff { sigma: f64, dim: usize },
    Spectral { operator: SpectralOperator },
}

impl FeatureMapSpec {
    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
        }
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        Ok(FeatureMapSpec::GaussianRff { sigma, dim })
    }

    pub fn spectral(operator: SpectralOperator) -> Self {
        FeatureMapSpec::Spectral { operator }
    }

    /// Almost-sure bound on `phi_v(x) phi_v(x')`.
    pub fn kappa_sq(&self) -> f64 {
        match self {
            FeatureMapSpec::GaussianRff { .. } => 2.0,
            FeatureMapSpec::Spectral { operator } => operator.kappa_sq(),
        }
    }

    /// Dimension of an input point.
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMapSpec::GaussianRff { dim, .. } => *dim,
            FeatureMapSpec::Spectral { .. } => 1,
        }
    }
}

/// Realized randomness of one feature.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureHandle {
    Fourier { omega: Vec<f64>, phase: f64 },
    /// 0-based basis index.
    Basis { index: usize },
}

/// A [`FeatureMapSpec`] prepared for sampling.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    spec: FeatureMapSpec,
    // Cumulative eigenvalue sums, spectral maps only.
    cumulative: Option<Arc<[f64]>>,
}

impl FeatureMap {
    pub fn new(spec: FeatureMapSpec) -> Result<Self> {
        let cumulative = match &spec {
            FeatureMapSpec::GaussianRff { .. } => None,
            FeatureMapSpec::Spectral { operator } => {
                if !(operator.trace() > 0.0) {
                    return Err(Error::DegenerateSpectrum);
                }
                let cum: Vec<f64> = operator
                    .eigenvalues()
                    .iter()
                    .scan(0.0, |acc, s| {
                        *acc += s;
                        Some(*acc)
                    })
                    .collect();
                Some(cum.into())
            }
        };
        Ok(Self { spec, cumulative })
    }

    pub fn spec(&self) -> &FeatureMapSpec {
        &self.spec
    }

    pub fn kappa_sq(&self) -> f64 {
        self.spec.kappa_sq()
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn operator(&self) -> Option<&SpectralOperator> {
        match &self.spec {
            FeatureMapSpec::Spectral { operator } => Some(operator),
            FeatureMapSpec::GaussianRff { .. } => None,
        }
    }

    /// Deterministic feature for `seed`.
    pub fn sample(&self, seed: u64) -> FeatureHandle {
        let mut rng = SplitMix64::new(seed);
        match &self.spec {
            FeatureMapSpec::GaussianRff { sigma, dim } => {
                let phase = TAU * rng.next_f64();
                let mut omega = vec![0.0; *dim];
                rng.fill_gaussian(&mut omega);
                for w in &mut omega {
                    *w /= sigma;
                }
                FeatureHandle::Fourier { omega, phase }
            }
            FeatureMapSpec::Spectral { .. } => FeatureHandle::Basis {
                index: self.sample_index(&mut rng),
            },
        }
    }

    fn sample_index(&self, rng: &mut SplitMix64) -> usize {
        let cum = self.cumulative.as_deref().expect("spectral map has a sampling table");
        let total = cum[cum.len() - 1];
        let u = rng.next_f64() * total;
        let index = cum.partition_point(|&c| c <= u);
        if index < cum.len() {
            index
        } else {
            // u rounded up to the total; take the last index with positive mass.
            cum.partition_point(|&c| c < total)
        }
    }

    /// Basis index of the spectral feature drawn from `seed`.
    pub fn basis_index(&self, seed: u64) -> Option<usize> {
        self.cumulative
            .as_ref()
            .map(|_| self.sample_index(&mut SplitMix64::new(seed)))
    }

    /// `phi_v(x)`.
    pub fn eval(&self, handle: &FeatureHandle, x: &[f64]) -> f64 {
        match (&self.spec, handle) {
            (FeatureMapSpec::GaussianRff { .. }, FeatureHandle::Fourier { omega, phase }) => {
                let mut dot = 0.0;
                for (w, xi) in omega.iter().zip(x) {
                    dot += w * xi;
                }
                SQRT_2 * (dot + phase).cos()
            }
            (FeatureMapSpec::Spectral { operator }, FeatureHandle::Basis { index }) => {
                operator.trace().sqrt() * operator.basis().eval(*index, x[0])
            }
            _ => panic!("feature handle does not belong to this feature map"),
        }
    }

    /// `phi_v(x)` for the feature drawn from `seed`, without materializing the
    /// handle. Bit-identical to `self.eval(&self.sample(seed), x)`.
    pub fn eval_seeded(&self, seed: u64, x: &[f64]) -> f64 {
        let mut rng = SplitMix64::new(seed);
        match &self.spec {
            FeatureMapSpec::GaussianRff { sigma, dim } => {
                let phase = TAU * rng.next_f64();
                let mut dot = 0.0;
                let mut j = 0;
                while j < *dim {
                    let (a, b) = rng.next_gaussian_pair();
                    dot += (a / sigma) * x[j];
                    if j + 1 < *dim {
                        dot += (b / sigma) * x[j + 1];
                    }
                    j += 2;
                }
                SQRT_2 * (dot + phase).cos()
            }
            FeatureMapSpec::Spectral { operator } => {
                let index = self.sample_index(&mut rng);
                operator.trace().sqrt() * operator.basis().eval(index, x[0])
            }
        }
    }

    /// Closed-form kernel `K(x, x')`.
    pub fn kernel_exact(&self, x: &[f64], x_prime: &[f64]) -> f64 {
        match &self.spec {
            FeatureMapSpec::GaussianRff { sigma, .. } => {
                let dist_sq: f64 = x.iter().zip(x_prime).map(|(a, b)| (a - b) * (a - b)).sum();
                (-dist_sq / (2.0 * sigma * sigma)).exp()
            }
            FeatureMapSpec::Spectral { operator } => {
                let n = operator.dim();
                let mut ex = vec![0.0; n];
                let mut ey = vec![0.0; n];
                operator.basis().eval_all(x[0], &mut ex);
                operator.basis().eval_all(x_prime[0], &mut ey);
                operator
                    .eigenvalues()
                    .iter()
                    .zip(ex.iter().zip(&ey))
                    .map(|(s, (a, b))| s * a * b)
                    .sum()
            }
        }
    }

    /// Monte-Carlo kernel estimate from `m` features with seeds
    /// `derive_seed(seed, 1..=m)`.
    pub fn kernel_mc(&self, x: &[f64], x_prime: &[f64], m: usize, seed: u64) -> Result<f64> {
        if m == 0 {
            return Err(Error::param("m", "must be at least 1"));
        }
        let sum: f64 = (1..=m as u64)
            .map(|j| {
                let h = self.sample(derive_seed(seed, j));
                self.eval(&h, x) * self.eval(&h, x_prime)
            })
            .sum();
        Ok(sum / m as f64)
    }
}
