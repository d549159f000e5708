//! The doubly stochastic update
//!
//! ```text
//! f_1 = 0,  f_{t+1} = (1 - eta_t lambda) f_t - eta_t (f_t(x_t) - y_t) phi_{v_t}(x_t) phi_{v_t}
//! ```
//!
//! and the classic kernel online update it approximates.
//!
//! A [`Model`] stores only one scalar per step. The feature of step `t` is
//! regenerated from `derive_seed(master_seed, t)` whenever it is needed, and
//! the `(1 - eta_t lambda)` shrinkage is kept in a global scale factor so a
//! step costs one prediction plus O(1) bookkeeping.

mod model_file;

use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::features::{FeatureHandle, FeatureMap};
use crate::rng::derive_seed;
use crate::schedules::Schedule;
use crate::spectrum::{FunctionCoeffs, SpectralOperator};

pub use model_file::FORMAT_VERSION;

/// Scale below which the global multiplier is folded into the coefficients.
pub const SCALE_FLOOR: f64 = 1e-150;

/// One observation `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

/// How predictions obtain the features of past steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Regenerate every feature from its seed: O(t) memory-free replay.
    #[default]
    Replay,
    /// Keep realized features in memory. Spectral maps additionally merge
    /// coefficients sharing a basis index, so a prediction costs
    /// O(distinct indices) instead of O(t).
    Cached,
}

#[derive(Debug, Clone)]
enum FeatureCache {
    Handles(Vec<FeatureHandle>),
    Basis { weights: Vec<f64>, touched: Vec<usize> },
}

/// The learned function `f_t = scale * sum_k b_k phi_{v_k}`.
#[derive(Debug, Clone)]
pub struct Model {
    map: Arc<FeatureMap>,
    master_seed: u64,
    coefficients: Vec<f64>,
    scale: f64,
    lambda: f64,
    cache: Option<FeatureCache>,
}

/// Seed of the feature drawn at step `t` (1-based).
#[inline]
pub fn feature_seed(master_seed: u64, t: usize) -> u64 {
    derive_seed(master_seed, t as u64)
}

impl Model {
    /// The zero function `f_1 = 0`.
    pub fn new(map: Arc<FeatureMap>, master_seed: u64, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be non-negative, got {lambda}")));
        }
        Ok(Self {
            map,
            master_seed,
            coefficients: Vec::new(),
            scale: 1.0,
            lambda,
            cache: None,
        })
    }

    pub(crate) fn from_parts(
        map: Arc<FeatureMap>,
        master_seed: u64,
        lambda: f64,
        scale: f64,
        coefficients: Vec<f64>,
    ) -> Self {
        Self {
            map,
            master_seed,
            coefficients,
            scale,
            lambda,
            cache: None,
        }
    }

    pub fn map(&self) -> &Arc<FeatureMap> {
        &self.map
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn steps_taken(&self) -> usize {
        self.coefficients.len()
    }

    pub fn mode(&self) -> EvalMode {
        if self.cache.is_some() {
            EvalMode::Cached
        } else {
            EvalMode::Replay
        }
    }

    /// Switches evaluation mode, rebuilding or dropping the feature cache.
    pub fn set_mode(&mut self, mode: EvalMode) {
        self.cache = match mode {
            EvalMode::Replay => None,
            EvalMode::Cached => Some(self.build_cache()),
        };
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Self {
        self.set_mode(mode);
        self
    }

    fn build_cache(&self) -> FeatureCache {
        match self.map.operator() {
            Some(op) => {
                let mut weights = vec![0.0; op.dim()];
                let mut touched = Vec::new();
                for (k, b) in self.coefficients.iter().enumerate() {
                    let i = self.feature_index(k + 1).expect("spectral map");
                    if weights[i] == 0.0 && !touched.contains(&i) {
                        touched.push(i);
                    }
                    weights[i] += b;
                }
                FeatureCache::Basis { weights, touched }
            }
            None => FeatureCache::Handles((1..=self.steps_taken()).map(|t| self.feature(t)).collect()),
        }
    }

    /// Feature of step `t` (1-based), regenerated from its seed.
    pub fn feature(&self, t: usize) -> FeatureHandle {
        self.map.sample(feature_seed(self.master_seed, t))
    }

    /// Basis index of the feature of step `t` for spectral maps.
    pub fn feature_index(&self, t: usize) -> Option<usize> {
        self.map.basis_index(feature_seed(self.master_seed, t))
    }

    /// `f_t(x)`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.map.input_dim());
        let sum = match &self.cache {
            None => {
                let mut acc = 0.0;
                for (k, b) in self.coefficients.iter().enumerate() {
                    acc += b * self.map.eval_seeded(feature_seed(self.master_seed, k + 1), x);
                }
                acc
            }
            Some(FeatureCache::Handles(handles)) => {
                let mut acc = 0.0;
                for (b, h) in self.coefficients.iter().zip(handles) {
                    acc += b * self.map.eval(h, x);
                }
                acc
            }
            Some(FeatureCache::Basis { weights, touched }) => {
                let op = self.map.operator().expect("spectral map");
                let basis = op.basis();
                let mut acc = 0.0;
                for &i in touched {
                    acc += weights[i] * basis.eval(i, x[0]);
                }
                acc * op.trace().sqrt()
            }
        };
        self.scale * sum
    }

    /// One doubly stochastic step on `(x, y)` with step size `eta`.
    pub fn step(&mut self, x: &[f64], y: f64, eta: f64) -> Result<()> {
        if x.len() != self.map.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.map.input_dim(),
                actual: x.len(),
            });
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::param("eta", format!("must be positive, got {eta}")));
        }
        let decay = 1.0 - eta * self.lambda;
        if !(decay > 0.0) {
            return Err(Error::param(
                "eta",
                format!("eta * lambda must stay below 1, got {}", eta * self.lambda),
            ));
        }
        let residual = self.predict(x) - y;
        let t = self.steps_taken() + 1;
        let seed = feature_seed(self.master_seed, t);
        let b = -eta * residual * self.map.eval_seeded(seed, x) / (self.scale * decay);
        self.coefficients.push(b);
        match &mut self.cache {
            None => {}
            Some(FeatureCache::Handles(handles)) => handles.push(self.map.sample(seed)),
            Some(FeatureCache::Basis { weights, touched }) => {
                let i = self.map.basis_index(seed).expect("spectral map");
                if weights[i] == 0.0 && !touched.contains(&i) {
                    touched.push(i);
                }
                weights[i] += b;
            }
        }
        self.scale *= decay;
        if self.scale < SCALE_FLOOR {
            self.fold_scale();
        }
        Ok(())
    }

    /// Moves the global scale into the coefficients and resets it to one.
    pub fn fold_scale(&mut self) {
        let s = self.scale;
        self.coefficients.iter_mut().for_each(|b| *b *= s);
        if let Some(FeatureCache::Basis { weights, .. }) = &mut self.cache {
            weights.iter_mut().for_each(|w| *w *= s);
        }
        self.scale = 1.0;
    }

    /// Re-expresses the model as `(scale * c, coefficients / c)`.
    pub fn rebalance(&mut self, c: f64) {
        assert!(c > 0.0, "rebalance factor must be positive");
        self.scale *= c;
        self.coefficients.iter_mut().for_each(|b| *b /= c);
        if let Some(FeatureCache::Basis { weights, .. }) = &mut self.cache {
            weights.iter_mut().for_each(|w| *w /= c);
        }
    }

    /// Coordinates of `f_t` in the operator's basis (spectral maps only):
    /// coordinate `i` is `scale * sqrt(tr L_K) * sum_{k : i_k = i} b_k`.
    pub fn basis_coefficients(&self) -> Result<FunctionCoeffs> {
        let op = self.map.operator().ok_or(Error::NotSpectral)?;
        let root_trace = op.trace().sqrt();
        let mut coeffs = vec![0.0; op.dim()];
        match &self.cache {
            Some(FeatureCache::Basis { weights, .. }) => {
                for (c, w) in coeffs.iter_mut().zip(weights) {
                    *c = w * root_trace * self.scale;
                }
            }
            _ => {
                let mut sums = vec![0.0; op.dim()];
                for (k, b) in self.coefficients.iter().enumerate() {
                    let i = self.feature_index(k + 1).expect("spectral map");
                    sums[i] += b;
                }
                for (c, s) in coeffs.iter_mut().zip(sums) {
                    *c = s * root_trace * self.scale;
                }
            }
        }
        Ok(FunctionCoeffs::new(coeffs))
    }

    pub fn serialize(&self) -> Vec<u8> {
        model_file::serialize(self)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        model_file::deserialize(bytes)
    }
}

/// Training options beyond the schedule.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub master_seed: u64,
    pub mode: EvalMode,
    /// Step counts after which to record a checkpoint; strictly increasing.
    pub checkpoints: Vec<usize>,
}

impl TrainOptions {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            mode: EvalMode::Replay,
            checkpoints: Vec::new(),
        }
    }

    pub fn mode(mut self, mode: EvalMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn checkpoints(mut self, checkpoints: Vec<usize>) -> Self {
        self.checkpoints = checkpoints;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: usize,
    pub excess_risk: Option<f64>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub checkpoints: Vec<Checkpoint>,
}

/// `ceil(2^{j/2})` for `j = 0, 1, ...`, deduplicated, capped at and ending with `horizon`.
pub fn geometric_checkpoints(horizon: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    if horizon == 0 {
        return out;
    }
    for j in 0.. {
        let t = 2f64.powf(j as f64 / 2.0).ceil() as usize;
        if t > horizon {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
    }
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

/// Runs `schedule.horizon()` steps over `samples`, consumed in order.
///
/// `risk` is called on the model at every checkpoint; return `None` when the
/// excess risk is not evaluable.
pub fn train<I, F>(
    samples: I,
    schedule: &Schedule,
    map: Arc<FeatureMap>,
    opts: &TrainOptions,
    mut risk: F,
) -> Result<(Model, TrajectoryRecord)>
where
    I: IntoIterator<Item = Sample>,
    F: FnMut(&Model) -> Option<f64>,
{
    if opts.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("checkpoints", "must be strictly increasing"));
    }
    let horizon = schedule.horizon();
    let mut model = Model::new(map, opts.master_seed, schedule.lambda())?.with_mode(opts.mode);
    let mut record = TrajectoryRecord::default();
    let mut pending = opts.checkpoints.iter().copied().filter(|&t| t <= horizon).peekable();
    let start = Instant::now();
    let mut stream = samples.into_iter();

    let mut checkpoint = |model: &Model, record: &mut TrajectoryRecord| {
        record.checkpoints.push(Checkpoint {
            t: model.steps_taken(),
            excess_risk: risk(model),
            elapsed_secs: start.elapsed().as_secs_f64(),
        });
    };

    if pending.peek() == Some(&0) {
        pending.next();
        checkpoint(&model, &mut record);
    }
    for t in 1..=horizon {
        let sample = stream.next().ok_or(Error::StreamExhausted {
            got: t - 1,
            needed: horizon,
        })?;
        let eta = schedule.step_size(t)?;
        model.step(&sample.x, sample.y, eta)?;
        if pending.peek() == Some(&t) {
            pending.next();
            checkpoint(&model, &mut record);
        }
    }
    Ok((model, record))
}

/// One step of the classic kernel online update in basis coordinates:
/// `h_{t+1} = (1 - eta lambda) h_t - eta (h_t(x) - y) K_x`, where `K_x` has
/// coordinates `sigma_i e_i(x)`.
pub fn step_exact_kernel(
    state: &FunctionCoeffs,
    x: f64,
    y: f64,
    eta: f64,
    lambda: f64,
    op: &SpectralOperator,
) -> Result<FunctionCoeffs> {
    if state.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: state.len(),
        });
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::param("eta", format!("must be positive, got {eta}")));
    }
    if !(lambda >= 0.0) || eta * lambda >= 1.0 {
        return Err(Error::param(
            "lambda",
            format!("need lambda >= 0 and eta * lambda < 1, got lambda = {lambda}"),
        ));
    }
    let mut basis = vec![0.0; op.dim()];
    op.basis().eval_all(x, &mut basis);
    let value: f64 = state.as_slice().iter().zip(&basis).map(|(c, e)| c * e).sum();
    let residual = value - y;
    let decay = 1.0 - eta * lambda;
    Ok(FunctionCoeffs::new(
        state
            .as_slice()
            .iter()
            .zip(op.eigenvalues().iter().zip(&basis))
            .map(|(h, (s, e))| decay * h - eta * residual * s * e)
            .collect(),
    ))
}
