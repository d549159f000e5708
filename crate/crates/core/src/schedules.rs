//! Step-size and regularization schedules `eta_t = eta_1 t^{-theta}`.
//!
//! Each preset carries the closed-form constants of the corresponding
//! convergence result together with the parameters it was built from.
//! Presets are built exactly as stated; whether they meet the step-size
//! conditions is reported by [`Schedule::validate`].

use serde::{Deserialize, Serialize};

use crate::conventions::positive_part;
use crate::error::{Error, Result};

/// Which closed-form rule produced a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Provenance {
    /// Fixed step tuned to capacity `(gamma, c_gamma)`.
    ConstantCapacity { zeta: f64, gamma: f64, c_gamma: f64, kappa_sq: f64 },
    /// Fixed step, capacity-independent (`gamma = 1`, `c_gamma = kappa^2`).
    ConstantIndependent { zeta: f64, kappa_sq: f64 },
    /// Fixed step for `f_rho` in the RKHS (`zeta = 1/2`), capacity-independent.
    ConstantHk { kappa_sq: f64 },
    /// Decaying step, `2 zeta < 1 - gamma` branch.
    DecayingSmall { zeta: f64, gamma: f64, c_gamma: f64, kappa_sq: f64 },
    /// Decaying step with `theta = 1/2`, `2 zeta >= 1 - gamma` branch.
    DecayingLarge { gamma: f64, c_gamma: f64, kappa_sq: f64 },
    /// Decaying step with explicit regularization `lambda > 0`.
    Regularized { zeta: f64, gamma: f64, c_gamma: f64, kappa_sq: f64, epsilon: f64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    eta1: f64,
    theta: f64,
    horizon: usize,
    lambda: f64,
    provenance: Provenance,
}

/// Outcome of [`Schedule::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub passed: bool,
    /// `eta^{gamma+1} T^gamma ln(2T)` for fixed steps, `eta_1` for decaying ones.
    pub lhs: f64,
    /// The admissible upper limit for `lhs`.
    pub rhs: f64,
    /// `rhs - lhs`; non-negative when the step-size condition holds.
    pub slack: f64,
    /// `c_{theta,gamma}` (decaying schedules only).
    pub c_theta_gamma: Option<f64>,
    /// `eta_1 (lambda + kappa^2) <= 1`.
    pub contraction_ok: bool,
    /// `theta` in `(gamma / (gamma + 1), 1)` (decaying schedules only).
    pub theta_ok: bool,
}

fn require(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::param(name, reason()))
    }
}

fn check_common(gamma: f64, c_gamma: f64, kappa_sq: f64, horizon: usize) -> Result<()> {
    require((0.0..=1.0).contains(&gamma), "gamma", || format!("must lie in [0, 1], got {gamma}"))?;
    require(c_gamma > 0.0 && c_gamma.is_finite(), "c_gamma", || {
        format!("must be positive, got {c_gamma}")
    })?;
    require(kappa_sq >= 1.0 && kappa_sq.is_finite(), "kappa_sq", || {
        format!("must be at least 1, got {kappa_sq}")
    })?;
    require(horizon >= 1, "horizon", || "must be at least 1".into())
}

fn check_zeta(zeta: f64) -> Result<()> {
    require(zeta > 0.0 && zeta.is_finite(), "zeta", || format!("must be positive, got {zeta}"))
}

/// `c_{theta,gamma} = max_{t in [T]} t^{gamma - theta (gamma + 1) + (2 theta - 1)_+} ln(2t)`,
/// by direct maximization.
pub fn c_theta_gamma(theta: f64, gamma: f64, horizon: usize) -> f64 {
    let exponent = gamma - theta * (gamma + 1.0) + positive_part(2.0 * theta - 1.0);
    (1..=horizon)
        .map(|t| {
            let t = t as f64;
            t.powf(exponent) * (2.0 * t).ln()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

impl Schedule {
    /// Fixed step `zeta / (4 kappa^2 (c_gamma + kappa^2)(zeta + 1)) T^{-(gamma+2 zeta)/(gamma+2 zeta+1)}`, `lambda = 0`.
    pub fn constant_capacity(zeta: f64, gamma: f64, c_gamma: f64, kappa_sq: f64, horizon: usize) -> Result<Self> {
        check_zeta(zeta)?;
        check_common(gamma, c_gamma, kappa_sq, horizon)?;
        let a = gamma + 2.0 * zeta;
        let eta = zeta / (4.0 * kappa_sq * (c_gamma + kappa_sq) * (zeta + 1.0)) * (horizon as f64).powf(-a / (a + 1.0));
        Self::preset(
            eta,
            0.0,
            horizon,
            0.0,
            Provenance::ConstantCapacity { zeta, gamma, c_gamma, kappa_sq },
        )
    }

    /// Fixed step `zeta / (8 kappa^4 (zeta + 1)) T^{-(2 zeta + 1)/(2 zeta + 2)}`.
    pub fn constant_independent(zeta: f64, kappa_sq: f64, horizon: usize) -> Result<Self> {
        check_zeta(zeta)?;
        check_common(1.0, kappa_sq, kappa_sq, horizon)?;
        let eta = zeta / (8.0 * kappa_sq * kappa_sq * (zeta + 1.0))
            * (horizon as f64).powf(-(2.0 * zeta + 1.0) / (2.0 * zeta + 2.0));
        Self::preset(
            eta,
            0.0,
            horizon,
            0.0,
            Provenance::ConstantIndependent { zeta, kappa_sq },
        )
    }

    /// Fixed step `1 / (24 kappa^4 T^{2/3})`.
    pub fn constant_hk(kappa_sq: f64, horizon: usize) -> Result<Self> {
        check_common(1.0, kappa_sq, kappa_sq, horizon)?;
        let eta = 1.0 / (24.0 * kappa_sq * kappa_sq * (horizon as f64).powf(2.0 / 3.0));
        Self::preset(
            eta,
            0.0,
            horizon,
            0.0,
            Provenance::ConstantHk { kappa_sq },
        )
    }

    /// Decaying step without regularization. For `2 zeta < 1 - gamma`:
    /// `theta = (2 zeta + gamma)/(2 zeta + gamma + 1)`, `eta_1 = zeta / (3 kappa^2 (2 c_gamma + kappa^2))`;
    /// otherwise `theta = 1/2`, `eta_1 = (1 - gamma) / (6 kappa^2 (2 c_gamma + kappa^2))`.
    pub fn decaying(zeta: f64, gamma: f64, c_gamma: f64, kappa_sq: f64, horizon: usize) -> Result<Self> {
        check_zeta(zeta)?;
        check_common(gamma, c_gamma, kappa_sq, horizon)?;
        require(gamma < 1.0, "gamma", || "decaying schedules require gamma != 1".into())?;
        let denom = kappa_sq * (2.0 * c_gamma + kappa_sq);
        let (eta1, theta, provenance) = if 2.0 * zeta < 1.0 - gamma {
            let a = 2.0 * zeta + gamma;
            (
                zeta / (3.0 * denom),
                a / (a + 1.0),
                Provenance::DecayingSmall { zeta, gamma, c_gamma, kappa_sq },
            )
        } else {
            (
                (1.0 - gamma) / (6.0 * denom),
                0.5,
                Provenance::DecayingLarge { gamma, c_gamma, kappa_sq },
            )
        };
        Self::preset(eta1, theta, horizon, 0.0, provenance)
    }

    /// Regularized decaying step:
    /// `eta_t = zeta / (3 kappa^2 (3 c_gamma + kappa^2)(1 + zeta)) t^{-(2 zeta + gamma)/(2 zeta + gamma + 1)}`,
    /// `lambda = T^{-1/(2 zeta + gamma + 1) + epsilon / (2 zeta)}`.
    pub fn regularized(
        zeta: f64,
        gamma: f64,
        c_gamma: f64,
        kappa_sq: f64,
        horizon: usize,
        epsilon: f64,
    ) -> Result<Self> {
        check_zeta(zeta)?;
        require(zeta <= 1.0, "zeta", || format!("regularized schedules require zeta <= 1, got {zeta}"))?;
        check_common(gamma, c_gamma, kappa_sq, horizon)?;
        require(gamma < 1.0, "gamma", || "regularized schedules require gamma != 1".into())?;
        let a = 2.0 * zeta + gamma;
        let eps_max = 2.0 * zeta / (a + 1.0);
        require(epsilon > 0.0 && epsilon <= eps_max, "epsilon", || {
            format!("must lie in (0, {eps_max}], got {epsilon}")
        })?;
        let eta1 = zeta / (3.0 * kappa_sq * (3.0 * c_gamma + kappa_sq) * (1.0 + zeta));
        let lambda = (horizon as f64).powf(-1.0 / (a + 1.0) + epsilon / (2.0 * zeta));
        Self::preset(
            eta1,
            a / (a + 1.0),
            horizon,
            lambda,
            Provenance::Regularized { zeta, gamma, c_gamma, kappa_sq, epsilon },
        )
    }

    /// Arbitrary `(eta_1, theta, lambda)`; validity is left to [`Schedule::validate`].
    pub fn custom(eta1: f64, theta: f64, horizon: usize, lambda: f64) -> Result<Self> {
        require(eta1 > 0.0 && eta1.is_finite(), "eta1", || format!("must be positive, got {eta1}"))?;
        require((0.0..=1.0).contains(&theta), "theta", || format!("must lie in [0, 1], got {theta}"))?;
        require(lambda >= 0.0 && lambda.is_finite(), "lambda", || {
            format!("must be non-negative, got {lambda}")
        })?;
        require(horizon >= 1, "horizon", || "must be at least 1".into())?;
        Ok(Self {
            eta1,
            theta,
            horizon,
            lambda,
            provenance: Provenance::Custom,
        })
    }

    fn preset(
        eta1: f64,
        theta: f64,
        horizon: usize,
        lambda: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        Ok(Self {
            eta1,
            theta,
            horizon,
            lambda,
            provenance,
        })
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `eta_t = eta_1 t^{-theta}` for `1 <= t <= T`.
    pub fn step_size(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.horizon {
            return Err(Error::param(
                "t",
                format!("must lie in [1, {}], got {t}", self.horizon),
            ));
        }
        Ok(self.eta_at(t))
    }

    #[inline]
    fn eta_at(&self, t: usize) -> f64 {
        if self.theta == 0.0 {
            self.eta1
        } else {
            self.eta1 * (t as f64).powf(-self.theta)
        }
    }

    /// `[eta_1, ..., eta_T]`.
    pub fn etas(&self) -> Vec<f64> {
        (1..=self.horizon).map(|t| self.eta_at(t)).collect()
    }

    /// Exponent `a` of the `O(T^a ln T)` rate the preset is tuned for.
    pub fn theoretical_exponent(&self) -> Option<f64> {
        match self.provenance {
            Provenance::ConstantCapacity { zeta, gamma, .. } | Provenance::DecayingSmall { zeta, gamma, .. } => {
                Some(-2.0 * zeta / (2.0 * zeta + gamma + 1.0))
            }
            Provenance::ConstantIndependent { zeta, .. } => Some(-zeta / (zeta + 1.0)),
            Provenance::ConstantHk { .. } => Some(-1.0 / 3.0),
            Provenance::DecayingLarge { gamma, .. } => Some((gamma - 1.0) / 2.0),
            Provenance::Regularized { zeta, gamma, epsilon, .. } => {
                Some(-2.0 * zeta / (2.0 * zeta + gamma + 1.0) + epsilon)
            }
            Provenance::Custom => None,
        }
    }

    /// Checks the step-size condition of the matching convergence result.
    ///
    /// Fixed steps (`theta = 0`) need
    /// `0 < eta^{gamma+1} T^gamma ln(2T) <= 1 / (4 kappa^2 (c_gamma + kappa^2))`.
    /// Decaying steps need `gamma / (gamma + 1) < theta < 1` and
    /// `0 < eta_1 <= 1 / (4 kappa^2 (2^{2 theta} c_gamma + kappa^2) c_{theta,gamma})`.
    /// Both also need `eta_1 (lambda + kappa^2) <= 1`.
    pub fn validate(&self, gamma: f64, c_gamma: f64, kappa_sq: f64) -> Validation {
        let contraction_ok = self.eta1 * (self.lambda + kappa_sq) <= 1.0;
        let t = self.horizon as f64;
        let (lhs, rhs, c_tg, theta_ok) = if self.theta == 0.0 {
            let lhs = self.eta1.powf(gamma + 1.0) * t.powf(gamma) * (2.0 * t).ln();
            (lhs, 1.0 / (4.0 * kappa_sq * (c_gamma + kappa_sq)), None, true)
        } else {
            let c = c_theta_gamma(self.theta, gamma, self.horizon);
            let rhs = 1.0 / (4.0 * kappa_sq * (2f64.powf(2.0 * self.theta) * c_gamma + kappa_sq) * c);
            let theta_ok = self.theta > gamma / (gamma + 1.0) && self.theta < 1.0;
            (self.eta1, rhs, Some(c), theta_ok)
        };
        let slack = rhs - lhs;
        Validation {
            passed: lhs > 0.0 && lhs <= rhs && contraction_ok && theta_ok,
            lhs,
            rhs,
            slack,
            c_theta_gamma: c_tg,
            contraction_ok,
            theta_ok,
        }
    }
}
