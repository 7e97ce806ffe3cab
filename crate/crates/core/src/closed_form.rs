//! Closed-form quantities for both modified games.
//!
//! All logarithms here are natural. In particular the constant `2 ln 2`
//! appearing in the tail formulas comes from integrating `dy/y` across one
//! dyadic band plus the mass above it; reading it in any other base would
//! silently rescale every tail estimate.

use crate::engine::discount::DiscountScaling;
use crate::error::{Error, Result};

use std::f64::consts::LN_2;

/// Survival function of the exponential limit of the truncated game's
/// normalized gain count: `P(U >= u) = e^(-u)`.
pub fn exp_limit_survival(u: f64) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::invalid("u", format!("must be nonnegative, got {u}")));
    }
    Ok((-u).exp())
}

/// Expected net gain of one truncated session evaluated exactly as written:
/// `1 (1 - 2^(-c)) - (2^c - 1) 2^(-c)`.
///
/// Both terms are dyadic rationals representable in f64 for `c <= 52`, so
/// the result is exactly 0.0: the truncated game is fair, with no rounding
/// residue at all.
pub fn truncated_expected_gain(c: u32) -> Result<f64> {
    if c == 0 || c > 52 {
        return Err(Error::invalid(
            "c",
            format!("must lie in 1..=52 for exact evaluation, got {c}"),
        ));
    }
    let p_stop = (-(c as f64)).exp2();
    let capital_minus_one = (c as f64).exp2() - 1.0;
    Ok(1.0 * (1.0 - p_stop) - capital_minus_one * p_stop)
}

/// Mean present value of a single discounted game: `r / (1 - r)`.
pub fn mean_discounted_gain(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid("r", format!("must lie in (0, 1), got {r}")));
    }
    Ok(r / (1.0 - r))
}

/// A positive number split as `y = x * 2^m` with `x` in `[1, 2)`.
///
/// The split is read straight off the floating-point representation, so it
/// is exact: `x` carries the mantissa, `m` the unbiased exponent. Values
/// `y = 2^k` land on `(x = 1, m = k)`; ties roll upward to the next band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dyadic {
    /// Band index; any sign.
    pub m: i32,
    /// Mantissa in `[1, 2)`.
    pub x: f64,
}

impl Dyadic {
    pub fn value(&self) -> f64 {
        self.x * (self.m as f64).exp2()
    }
}

/// Splits `y > 0` into `x * 2^m`, `x` in `[1, 2)`, exactly.
pub fn dyadic_split(y: f64) -> Result<Dyadic> {
    if !y.is_normal() || y <= 0.0 {
        return Err(Error::invalid(
            "y",
            format!("must be positive, finite and normal, got {y}"),
        ));
    }
    let bits = y.to_bits();
    let m = ((bits >> 52) & 0x7FF) as i32 - 1023;
    let x = f64::from_bits((bits & 0x000F_FFFF_FFFF_FFFF) | (1023u64 << 52));
    debug_assert!((1.0..2.0).contains(&x));
    Ok(Dyadic { m, x })
}

/// Tail of the Lévy measure of `U` above `y`: with `y = x 2^k`,
/// `Lbar(y) = 2^(-k) (2 ln 2 - ln x) / (2a)`.
pub fn levy_measure_tail(y: f64, a: f64) -> Result<f64> {
    check_a(a)?;
    let split = dyadic_split(y)?;
    Ok((-(split.m as f64)).exp2() * (2.0 * LN_2 - split.x.ln()) / (2.0 * a))
}

/// Dyadic tail approximation for `U`:
/// `P(U > x 2^m + m/(2a)) ~= 2^(-m) (2 ln 2 - ln x) / (2a)` for `m >= 0`.
pub fn tail_probability_approx(threshold: &Dyadic, a: f64) -> Result<f64> {
    check_a(a)?;
    if threshold.m < 0 {
        return Err(Error::invalid(
            "m",
            format!("tail approximation needs m >= 0, got {}", threshold.m),
        ));
    }
    if !(1.0..2.0).contains(&threshold.x) {
        return Err(Error::invalid(
            "x",
            format!("mantissa must lie in [1, 2), got {}", threshold.x),
        ));
    }
    Ok((-(threshold.m as f64)).exp2() * (2.0 * LN_2 - threshold.x.ln()) / (2.0 * a))
}

/// The threshold the approximation refers to, including its drift term:
/// `x 2^m + m/(2a)`.
pub fn shifted_threshold(threshold: &Dyadic, a: f64) -> f64 {
    threshold.value() + threshold.m as f64 / (2.0 * a)
}

/// Tail estimate for the premium question "how large must `v` be so that
/// `P(V(r) > v)` is small".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PremiumEstimate {
    /// `x (2 ln 2 - ln x) / (2 (1 - r) v)`, the form stated directly in the
    /// discount factor.
    pub rate_form: f64,
    /// `(N/v) (2 ln 2 - ln x) (x / 2a)`, the same quantity through the
    /// canonical `(a, N)` scaling; differs from `rate_form` only because
    /// `1 - r` and `a/N` differ at order `(1-r)^2`.
    pub scaled_form: f64,
    /// Band split of `v / N`.
    pub m: i32,
    pub x: f64,
    /// `|rate_form / scaled_form - 1|`, recording the `1-r` vs `a/N` gap.
    pub rel_gap: f64,
}

/// Estimates `P(V(r) > v)` by the dyadic tail law, reporting both printed
/// forms. The drift term `m/(2a)` is deliberately neglected here (the
/// premium question is posed at `v` scales where it is immaterial); the
/// Monte Carlo comparisons keep it.
pub fn premium_tail_estimate(v: f64, r: f64) -> Result<PremiumEstimate> {
    if v.is_nan() || v <= 0.0 {
        return Err(Error::invalid("v", format!("must be positive, got {v}")));
    }
    let scaling = DiscountScaling::from_r(r)?;
    let split = dyadic_split(v / scaling.big_n())?;
    let shape = 2.0 * LN_2 - split.x.ln();
    let scaled_form = (scaling.big_n() / v) * shape * (split.x / (2.0 * scaling.a()));
    let rate_form = split.x * shape / (2.0 * (1.0 - r) * v);

    // scaled_form is algebraically identical to 2^(-m) * shape / 2a; the
    // dyadic split is exact, so the two routes agree to rounding.
    let dyadic_route = (-(split.m as f64)).exp2() * shape / (2.0 * scaling.a());
    debug_assert!((scaled_form / dyadic_route - 1.0).abs() < 1e-12);

    Ok(PremiumEstimate {
        rate_form,
        scaled_form,
        m: split.m,
        x: split.x,
        rel_gap: (rate_form / scaled_form - 1.0).abs(),
    })
}

/// The two closed-form candidates for the ruin probability
/// `R = P(doubling stream PV < 0) = P(U > N / (2 a^2))`.
///
/// With `N/(2a^2) = x 2^m`, the dyadic tail law gives
/// `tail_form = 2^(-m) (2 ln 2 - ln x) / (2a)`, while the rate-substituted
/// display is `rate_form = (1 - r) (2 a x) (2 ln 2 - ln x)`. The two differ
/// by a factor `2a`; both are always reported and the discrepancy is left
/// for measurement to adjudicate, never silently resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuinEstimate {
    pub rate_form: f64,
    pub tail_form: f64,
    pub m: i32,
    pub x: f64,
    /// The threshold `N / (2 a^2)` both forms refer to.
    pub threshold: f64,
}

/// Ruin estimate from a raw discount factor; see [`ruin_probability_scaled`].
pub fn ruin_probability(r: f64) -> Result<RuinEstimate> {
    ruin_probability_scaled(&DiscountScaling::from_r(r)?)
}

/// Ruin estimate in canonical `(a, n)` coordinates.
pub fn ruin_probability_scaled(scaling: &DiscountScaling) -> Result<RuinEstimate> {
    let a = scaling.a();
    let threshold = scaling.big_n() / (2.0 * a * a);
    let split = dyadic_split(threshold)?;
    let shape = 2.0 * LN_2 - split.x.ln();
    Ok(RuinEstimate {
        rate_form: scaling.one_minus_r() * 2.0 * a * split.x * shape,
        tail_form: (-(split.m as f64)).exp2() * shape / (2.0 * a),
        m: split.m,
        x: split.x,
        threshold,
    })
}

fn check_a(a: f64) -> Result<()> {
    if !(1.0..2.0).contains(&a) {
        return Err(Error::invalid("a", format!("must lie in [1, 2), got {a}")));
    }
    Ok(())
}
