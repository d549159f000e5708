//! Synthetic regression problems with a known regression function.
//!
//! The marginal is uniform on `[0,1]`, the operator is diagonal in the
//! trigonometric basis with `sigma_i = i^{-1/gamma}`, and
//! `f_rho = R L_K^zeta g` for a unit vector `g`. Observations are
//! `y = f_rho(x) + tau xi` with standard Gaussian `xi`, so the Bayes risk is `tau^2`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMap, FeatureMapSpec};
use crate::learner::{Model, Sample};
use crate::rng::SplitMix64;
use crate::spectrum::{log_grid, FunctionCoeffs, SpectralOperator};

/// Relative tail mass allowed beyond the truncation.
pub const TAIL_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_TRUNCATION: usize = 2000;
pub const DEFAULT_NOISE: f64 = 0.1;
pub const DEFAULT_MC_POINTS: usize = 100_000;

/// Shape of the unit direction `g`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GMode {
    /// `g_i` proportional to `1/i`, normalized over the truncation.
    #[default]
    PowerDecay,
    /// `g = e_{index}`, 0-based.
    Single { index: usize },
}


/// Serializable description of a [`SpectralProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub gamma: f64,
    pub zeta: f64,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub g_mode: GMode,
}

fn one() -> f64 {
    1.0
}

fn default_noise() -> f64 {
    DEFAULT_NOISE
}

fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}

impl ProblemSpec {
    pub fn build(&self) -> Result<SpectralProblem> {
        make_problem(self.gamma, self.zeta, self.radius, self.noise_std, self.truncation, self.g_mode)
    }
}

#[derive(Debug, Clone)]
pub struct SpectralProblem {
    operator: SpectralOperator,
    zeta: f64,
    radius: f64,
    g: FunctionCoeffs,
    noise_std: f64,
    gamma: f64,
    c_gamma: f64,
    f_rho: FunctionCoeffs,
    tail_mass: f64,
}

/// Capacity constant valid for `sigma_i = i^{-1/gamma}` at every `lambda > 0`.
///
/// For `gamma < 1` the sum is dominated by `int_0^inf dx / (1 + lambda x^{1/gamma})
/// = lambda^{-gamma} gamma pi / sin(gamma pi)`; for `gamma = 1` the trace works.
pub fn power_law_c_gamma(gamma: f64, operator: &SpectralOperator) -> f64 {
    if gamma < 1.0 {
        gamma * PI / (gamma * PI).sin()
    } else {
        operator.trace()
    }
}

/// Lambda grid used to check the capacity condition.
pub fn capacity_grid() -> Vec<f64> {
    log_grid(-8.0, 2.0, 41)
}

/// Estimate of `R^2 sum_{i>N} sigma_i^{2 zeta} g_i^2` for the power-decay profile,
/// using the midpoint integral of `i^{-p}`, `p = 2 + 2 zeta / gamma`.
fn power_decay_tail(gamma: f64, zeta: f64, radius: f64, n: usize) -> f64 {
    let p = 2.0 + 2.0 * zeta / gamma;
    let z: f64 = (1..=n).map(|i| (i as f64).powi(-2)).sum();
    radius * radius / z * (n as f64 + 0.5).powf(1.0 - p) / (p - 1.0)
}

fn power_decay_norm_sq(gamma: f64, zeta: f64, radius: f64, n: usize) -> f64 {
    let z: f64 = (1..=n).map(|i| (i as f64).powi(-2)).sum();
    let p = 2.0 + 2.0 * zeta / gamma;
    radius * radius / z * (1..=n).map(|i| (i as f64).powf(-p)).sum::<f64>()
}

/// Smallest truncation meeting the tail criterion for the power-decay profile.
pub fn required_truncation(gamma: f64, zeta: f64) -> usize {
    let ok = |n: usize| power_decay_tail(gamma, zeta, 1.0, n) < TAIL_TOLERANCE * power_decay_norm_sq(gamma, zeta, 1.0, n);
    let mut hi = 1;
    while !ok(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn make_problem(
    gamma: f64,
    zeta: f64,
    radius: f64,
    noise_std: f64,
    truncation: usize,
    g_mode: GMode,
) -> Result<SpectralProblem> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param("gamma", format!("must lie in (0, 1], got {gamma}")));
    }
    if !(zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::param("zeta", format!("must be positive, got {zeta}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::param("radius", format!("must be positive, got {radius}")));
    }
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::param("noise_std", format!("must be non-negative, got {noise_std}")));
    }
    if truncation == 0 {
        return Err(Error::param("truncation", "must be at least 1"));
    }
    let operator = SpectralOperator::power_law(1.0 / gamma, truncation)?;
    let (g, tail_mass) = match g_mode {
        GMode::PowerDecay => {
            let tail = power_decay_tail(gamma, zeta, radius, truncation);
            let norm_sq = power_decay_norm_sq(gamma, zeta, radius, truncation);
            if tail >= TAIL_TOLERANCE * norm_sq {
                return Err(Error::TruncationTooShort {
                    actual: truncation,
                    required: required_truncation(gamma, zeta),
                    tail,
                });
            }
            let raw: Vec<f64> = (1..=truncation).map(|i| 1.0 / i as f64).collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            (FunctionCoeffs::new(raw.into_iter().map(|v| v / norm).collect()), tail)
        }
        GMode::Single { index } => {
            if index >= truncation {
                return Err(Error::param(
                    "g_mode",
                    format!("index {index} outside truncation {truncation}"),
                ));
            }
            let mut g = vec![0.0; truncation];
            g[index] = 1.0;
            (FunctionCoeffs::new(g), 0.0)
        }
    };
    let f_rho = operator.apply_power(zeta, &g)?;
    let f_rho = FunctionCoeffs::new(f_rho.into_vec().into_iter().map(|c| radius * c).collect());
    let c_gamma = power_law_c_gamma(gamma, &operator);
    debug_assert!(operator.verify_capacity(gamma, c_gamma, &capacity_grid()));
    Ok(SpectralProblem {
        operator,
        zeta,
        radius,
        g,
        noise_std,
        gamma,
        c_gamma,
        f_rho,
        tail_mass,
    })
}

impl SpectralProblem {
    pub fn operator(&self) -> &SpectralOperator {
        &self.operator
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn g(&self) -> &FunctionCoeffs {
        &self.g
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c_gamma(&self) -> f64 {
        self.c_gamma
    }

    pub fn kappa_sq(&self) -> f64 {
        self.operator.kappa_sq()
    }

    pub fn truncation(&self) -> usize {
        self.operator.dim()
    }

    /// Estimated `||f_rho||^2` mass discarded by the truncation.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn f_rho(&self) -> &FunctionCoeffs {
        &self.f_rho
    }

    pub fn f_rho_norm(&self) -> f64 {
        self.f_rho.norm()
    }

    /// `E(f_rho)`, the noise variance.
    pub fn bayes_risk(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    /// The spectral feature map over this problem's operator.
    pub fn feature_map(&self) -> Result<FeatureMap> {
        FeatureMap::new(FeatureMapSpec::spectral(self.operator.clone()))
    }

    pub fn f_rho_at(&self, x: f64) -> f64 {
        self.f_rho.eval(self.operator.basis(), x)
    }

    /// Endless i.i.d. stream of observations.
    pub fn stream(&self, seed: u64) -> SampleStream<'_> {
        SampleStream {
            problem: self,
            rng: SplitMix64::new(seed),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<Sample> {
        self.stream(seed).take(n).collect()
    }

    /// `||f - f_rho||^2` by Parseval.
    pub fn excess_risk_exact(&self, f: &FunctionCoeffs) -> Result<f64> {
        f.distance_sq(&self.f_rho)
    }

    /// Exact excess risk of a spectral-feature model.
    pub fn model_excess_risk(&self, model: &Model) -> Result<f64> {
        self.excess_risk_exact(&self.project_to_basis(model)?)
    }

    /// Basis coordinates of a spectral-feature model over this problem's operator.
    pub fn project_to_basis(&self, model: &Model) -> Result<FunctionCoeffs> {
        let op = model.map().operator().ok_or(Error::NotSpectral)?;
        if op.eigenvalues() != self.operator.eigenvalues() {
            return Err(Error::param("model", "feature map operator differs from the problem's"));
        }
        model.basis_coefficients()
    }

    /// Monte-Carlo `||f - f_rho||^2` on `m` fresh uniform points: (estimate, standard error).
    pub fn excess_risk_mc_fn(&self, f: impl Fn(&[f64]) -> f64, m: usize, seed: u64) -> Result<(f64, f64)> {
        if m < 2 {
            return Err(Error::param("m", format!("need at least 2 points, got {m}")));
        }
        let mut rng = SplitMix64::new(seed);
        let mut basis = vec![0.0; self.truncation()];
        let values = (0..m).map(|_| {
            let x = rng.next_f64();
            self.operator.basis().eval_all(x, &mut basis);
            let target: f64 = self.f_rho.as_slice().iter().zip(&basis).map(|(c, e)| c * e).sum();
            let d = f(&[x]) - target;
            d * d
        });
        Ok(mean_and_se(values, m))
    }

    pub fn excess_risk_mc(&self, model: &Model, m: usize, seed: u64) -> Result<(f64, f64)> {
        if model.map().input_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: model.map().input_dim(),
            });
        }
        self.excess_risk_mc_fn(|x| model.predict(x), m, seed)
    }

    /// Monte-Carlo `E(f)` against noisy labels: (estimate, standard error).
    pub fn risk_mc_fn(&self, f: impl Fn(&[f64]) -> f64, m: usize, seed: u64) -> Result<(f64, f64)> {
        if m < 2 {
            return Err(Error::param("m", format!("need at least 2 points, got {m}")));
        }
        let values = self.stream(seed).take(m).map(|s| {
            let d = f(&s.x) - s.y;
            d * d
        });
        Ok(mean_and_se(values, m))
    }
}

fn mean_and_se(values: impl Iterator<Item = f64>, m: usize) -> (f64, f64) {
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (n, v) in values.enumerate() {
        let delta = v - mean;
        mean += delta / (n + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

pub struct SampleStream<'a> {
    problem: &'a SpectralProblem,
    rng: SplitMix64,
}

impl Iterator for SampleStream<'_> {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        let x = self.rng.next_f64();
        let xi = self.rng.next_gaussian();
        let y = self.problem.f_rho_at(x) + self.problem.noise_std * xi;
        Some(Sample::new(vec![x], y))
    }
}

/// Spectral feature map shared across runs of one problem.
pub fn shared_feature_map(problem: &SpectralProblem) -> Result<Arc<FeatureMap>> {
    problem.feature_map().map(Arc::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::EvalMode;

    fn default_problem() -> SpectralProblem {
        make_problem(0.5, 0.5, 1.0, 0.1, 2000, GMode::PowerDecay).unwrap()
    }

    #[test]
    fn sobolev_decay() {
        let p = default_problem();
        let s = p.operator().eigenvalues();
        assert_eq!(s[0], 1.0);
        assert!((s[1] - 0.25).abs() < 1e-15);
        assert!((s[9] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn source_condition_holds_with_equality() {
        for (gamma, zeta) in [(0.5, 0.5), (0.25, 0.1), (0.75, 1.0), (1.0, 2.0)] {
            let n = required_truncation(gamma, zeta).max(10);
            let p = make_problem(gamma, zeta, 2.5, 0.1, n, GMode::PowerDecay).unwrap();
            let g0 = p.operator().apply_inverse_power(zeta, p.f_rho()).unwrap();
            assert!((g0.norm() - 2.5).abs() <= 1e-12 * 2.5, "{gamma} {zeta}");
        }
    }

    #[test]
    fn single_coordinate() {
        let p = make_problem(0.5, 0.7, 1.5, 0.0, 50, GMode::Single { index: 0 }).unwrap();
        assert_eq!(p.f_rho().as_slice()[0], 1.5);
        assert_eq!(p.f_rho_norm(), 1.5);
        assert_eq!(p.tail_mass(), 0.0);
        assert!((p.f_rho_at(0.37) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn capacity_holds() {
        for gamma in [0.25, 0.5, 0.75, 1.0] {
            let p = make_problem(gamma, 1.0, 1.0, 0.1, 2000, GMode::Single { index: 0 }).unwrap();
            assert!(p.operator().verify_capacity(gamma, p.c_gamma(), &capacity_grid()));
            assert!(p.kappa_sq() >= 1.0);
        }
    }

    #[test]
    fn short_truncation_names_required() {
        let err = make_problem(0.5, 0.5, 1.0, 0.1, 20, GMode::PowerDecay).unwrap_err();
        match err {
            Error::TruncationTooShort { actual, required, .. } => {
                assert_eq!(actual, 20);
                assert!(required > 20 && required <= 2000);
                assert!(make_problem(0.5, 0.5, 1.0, 0.1, required, GMode::PowerDecay).is_ok());
                assert!(make_problem(0.5, 0.5, 1.0, 0.1, required - 1, GMode::PowerDecay).is_err());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_parameters() {
        assert!(make_problem(0.0, 0.5, 1.0, 0.1, 10, GMode::Single { index: 0 }).is_err());
        assert!(make_problem(1.5, 0.5, 1.0, 0.1, 10, GMode::Single { index: 0 }).is_err());
        assert!(make_problem(0.5, 0.0, 1.0, 0.1, 10, GMode::Single { index: 0 }).is_err());
        assert!(make_problem(0.5, 0.5, 1.0, -0.1, 10, GMode::Single { index: 0 }).is_err());
        assert!(make_problem(0.5, 0.5, 1.0, 0.1, 10, GMode::Single { index: 10 }).is_err());
    }

    #[test]
    fn noiseless_samples_hit_f_rho() {
        let p = make_problem(0.5, 0.5, 1.0, 0.0, 2000, GMode::PowerDecay).unwrap();
        for s in p.sample(50, 3) {
            assert_eq!(s.y, p.f_rho_at(s.x[0]));
        }
        assert_eq!(p.sample(20, 9), p.sample(20, 9));
        assert_ne!(p.sample(20, 9), p.sample(20, 10));
    }

    #[test]
    fn binned_labels_average_to_f_rho() {
        let p = make_problem(0.5, 0.5, 1.0, 0.5, 2000, GMode::PowerDecay).unwrap();
        let (lo, hi) = (0.40, 0.41);
        let ys: Vec<f64> = p
            .stream(4)
            .take(200_000)
            .filter(|s| s.x[0] >= lo && s.x[0] < hi)
            .map(|s| s.y - p.f_rho_at(s.x[0]))
            .collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        assert!(mean.abs() <= 3.0 * 0.5 / (ys.len() as f64).sqrt());
    }

    #[test]
    fn zero_function_risk_is_norm() {
        let p = default_problem();
        let zero = FunctionCoeffs::zeros(p.truncation());
        let exact = p.excess_risk_exact(&zero).unwrap();
        assert!((exact - p.f_rho().norm_sq()).abs() < 1e-15);
        assert_eq!(p.excess_risk_exact(p.f_rho()).unwrap(), 0.0);
        let (est, se) = p.excess_risk_mc_fn(|_| 0.0, 20_000, 5).unwrap();
        assert!((est - exact).abs() <= 3.0 * se, "{est} ± {se} vs {exact}");
    }

    #[test]
    fn mc_agrees_with_exact_on_random_function() {
        let p = make_problem(0.5, 0.5, 1.0, 0.1, 200, GMode::Single { index: 2 }).unwrap();
        let mut rng = SplitMix64::new(6);
        let f = FunctionCoeffs::new((0..200).map(|i| rng.next_gaussian() / (1 + i) as f64).collect());
        let exact = p.excess_risk_exact(&f).unwrap();
        let basis = p.operator().basis();
        let (est, se) = p.excess_risk_mc_fn(|x| f.eval(basis, x[0]), 20_000, 8).unwrap();
        assert!((est - exact).abs() <= 3.0 * se, "{est} ± {se} vs {exact}");
        assert!(p.excess_risk_mc_fn(|_| 0.0, 1, 0).is_err());
    }

    #[test]
    fn risk_identity() {
        let p = make_problem(0.5, 0.5, 1.0, 0.3, 100, GMode::Single { index: 1 }).unwrap();
        let f = FunctionCoeffs::new((0..100).map(|i| if i < 3 { 0.2 } else { 0.0 }).collect());
        let basis = p.operator().basis();
        let (risk, se) = p.risk_mc_fn(|x| f.eval(basis, x[0]), 50_000, 12).unwrap();
        let excess = p.excess_risk_exact(&f).unwrap();
        assert!((risk - p.bayes_risk() - excess).abs() <= 3.0 * se);
    }

    #[test]
    fn projection_and_mc_agree_for_spectral_model() {
        let p = make_problem(0.5, 0.5, 1.0, 0.1, 100, GMode::Single { index: 0 }).unwrap();
        let map = shared_feature_map(&p).unwrap();
        let empty = Model::new(map.clone(), 1, 0.0).unwrap();
        assert_eq!(p.project_to_basis(&empty).unwrap(), FunctionCoeffs::zeros(100));

        let mut model = Model::new(map, 1, 0.0).unwrap().with_mode(EvalMode::Cached);
        let mut stream = p.stream(2);
        let first = stream.next().unwrap();
        model.step(&first.x, first.y, 0.05).unwrap();
        let one = p.project_to_basis(&model).unwrap();
        assert_eq!(one.as_slice().iter().filter(|c| **c != 0.0).count(), 1);

        for s in stream.take(300) {
            model.step(&s.x, s.y, 0.05).unwrap();
        }
        let coeffs = p.project_to_basis(&model).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..100 {
            let x = rng.next_f64();
            let (a, b) = (model.predict(&[x]), coeffs.eval(p.operator().basis(), x));
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
        let exact = p.excess_risk_exact(&coeffs).unwrap();
        let (est, se) = p.excess_risk_mc(&model, 20_000, 4).unwrap();
        assert!((est - exact).abs() <= 3.0 * se, "{est} ± {se} vs {exact}");
    }

    #[test]
    fn projection_requires_spectral_map() {
        let p = default_problem();
        let rff = Arc::new(FeatureMap::new(FeatureMapSpec::gaussian(1.0, 1).unwrap()).unwrap());
        let model = Model::new(rff, 0, 0.0).unwrap();
        assert!(matches!(p.project_to_basis(&model), Err(Error::NotSpectral)));
    }
}
