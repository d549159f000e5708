//! Arithmetic conventions shared by every spectral formula:
//! `0^0 = 1`, `1/0 = +inf`, empty products are `1`, empty sums are `0`,
//! and `(a)_+ = max(a, 0)`.

/// `base^exp` with `0^0 = 1` and `0^(negative) = +inf`.
#[inline]
pub fn pow(base: f64, exp: f64) -> f64 {
    if exp == 0.0 {
        1.0
    } else if base == 0.0 {
        if exp > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        base.powf(exp)
    }
}

/// `num / den` with `x/0 = +inf` for `x > 0` and `0/0 = 0`.
///
/// The `0/0` case only arises for terms like `f_i^2 / sigma_i` where both
/// the coefficient and the eigenvalue vanish, which contribute nothing.
#[inline]
pub fn div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

#[inline]
pub fn positive_part(a: f64) -> f64 {
    a.max(0.0)
}

#[inline]
pub fn indicator(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

/// `sum_{j=from}^{to} a_j`; zero when `from > to`.
pub fn range_sum(a: impl Fn(usize) -> f64, from: usize, to: usize) -> f64 {
    (from..=to).map(a).sum()
}

/// `prod_{j=from}^{to} a_j`; one when `from > to`.
pub fn range_product(a: impl Fn(usize) -> f64, from: usize, to: usize) -> f64 {
    (from..=to).map(a).product()
}

/// `prod_j (1 - x_j)` for `x_j <= 1`.
///
/// Accumulated as `exp(sum ln(1 - x_j))` when every factor is positive, which
/// keeps long products of factors close to one from losing precision; falls
/// back to a direct product when any factor is zero or negative.
pub fn contraction_product(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    if xs.clone().all(|x| x < 1.0) {
        xs.map(|x| (-x).ln_1p()).sum::<f64>().exp()
    } else {
        xs.map(|x| 1.0 - x).product()
    }
}
