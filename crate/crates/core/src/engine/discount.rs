//! The Petersburg game with interest on borrowed stakes.
//!
//! With discount factor `r = 1/(1 + d)` per toss, the present value of one
//! game's payoff is `(2r)^T`, which has finite mean `r/(1 - r)`. Games
//! repeat forever; their start times form a renewal process, and the
//! present value of the whole stream is
//!
//! ```text
//! V(r) = sum_i r^(T_{i-1}) (2r)^(T_i - T_{i-1}).
//! ```
//!
//! Everything here is parametrized by [`DiscountScaling`]: `N = 2^n`,
//! `r = e^(-a/N)` with `1 <= a < 2`. In these coordinates the normalized
//! value `(2(1-r) V(r) - n) / 2a` converges in distribution (as `n` grows)
//! to the limit variable `U` that [`super::levy`] samples directly from its
//! compound-Poisson representation; [`sample_u_via_scaling`] is the
//! independent route to the same law.
//!
//! The doubling-strategy counterpart replaces each game's payoff by the
//! present value of its stakes and win,
//! `r/(2r-1) - (2r)^T (1-r)/(2r-1)`, which has mean zero: the discounted
//! doubling game is fair, and [`simulate_doubling_stream`] accumulates its
//! stream value.

use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::game::sample_stopping_time;

/// Largest supported scale exponent `n`. Past this point `r = e^(-a/N)`
/// rounds into 1.0 territory and a session would take geologic time anyway.
pub const MAX_SCALE_EXP: u32 = 40;

/// The `(a, n)` parametrization of the interest rate: `N = 2^n`,
/// `r = e^(-a/N)`, interest rate `d = 1/r - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountScaling {
    a: f64,
    n: u32,
    big_n: f64,
    r: f64,
    one_minus_r: f64,
    d: f64,
}

impl DiscountScaling {
    /// Builds the scaling from `a` in `[1, 2)` and `n <= MAX_SCALE_EXP`.
    pub fn new(a: f64, n: u32) -> Result<Self> {
        if !(1.0..2.0).contains(&a) {
            return Err(Error::invalid("a", format!("must lie in [1, 2), got {a}")));
        }
        if n > MAX_SCALE_EXP {
            return Err(Error::invalid(
                "n",
                format!("must be at most {MAX_SCALE_EXP}, got {n}"),
            ));
        }
        let big_n = (n as f64).exp2();
        let q = a / big_n;
        let r = (-q).exp();
        let one_minus_r = -(-q).exp_m1();
        let d = q.exp_m1();
        let s = DiscountScaling {
            a,
            n,
            big_n,
            r,
            one_minus_r,
            d,
        };
        debug_assert!(s.r > 0.0 && s.r < 1.0 && s.d > 0.0);
        // Consistency of the derived fields. Rounding r near 1 costs up to
        // N ulps when mapped back through ln, so the bound is ulp-aware;
        // at desk scales (n <= 13) it is the plain 1e-12.
        debug_assert!(
            (s.big_n * (-s.r.ln()) - s.a).abs() < 1e-12f64.max(s.big_n * 4.0 * f64::EPSILON)
        );
        Ok(s)
    }

    /// Maps a discount factor `r` to the canonical `(a, n)`: the unique
    /// nonnegative `n` with `a = 2^n (-ln r)` in `[1, 2)`.
    ///
    /// Rejects `r <= e^(-2)` (no nonnegative `n` works) and `r` so close to
    /// 1 that `n` would exceed [`MAX_SCALE_EXP`]. The stored `r` is the
    /// reconstructed `e^(-a/N)`, which agrees with the input to rounding.
    pub fn from_r(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid("r", format!("must lie in (0, 1), got {r}")));
        }
        let q = -r.ln();
        if q >= 2.0 {
            return Err(Error::invalid(
                "r",
                format!("r = {r} is below e^-2; a would fall outside [1, 2)"),
            ));
        }
        let split = crate::closed_form::dyadic_split(q)?;
        // q = x 2^m with x in [1, 2)  =>  a = x, n = -m.
        let n = -split.m;
        if n < 0 {
            return Err(Error::invalid("r", format!("r = {r} maps to negative n")));
        }
        DiscountScaling::new(split.x, n as u32)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `N = 2^n`.
    pub fn big_n(&self) -> f64 {
        self.big_n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `1 - r`, computed without cancellation.
    pub fn one_minus_r(&self) -> f64 {
        self.one_minus_r
    }

    /// Interest rate `d = 1/r - 1`.
    pub fn d(&self) -> f64 {
        self.d
    }
}

/// A truncated run of the discounted renewal stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedTrace {
    /// Renewal times `T_1 < T_2 < ...` of the included terms.
    pub renewal_times: Vec<u64>,
    /// The truncated sum `sum r^(T_{i-1}) (2r)^(T_i - T_{i-1})`.
    pub pv_gain: f64,
    /// Exact expected value of the discarded tail given the stopping point:
    /// `r^(T_k) * (r/(1-r)) / (1 - r/(2-r))`.
    pub truncation_bound: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ));
    }
    Ok(())
}

/// Expected present value of the full stream, `r(2-r) / (2(1-r)^2)`; the
/// truncation bound is this scaled by the leading discount at the stop.
fn expected_stream_value(r: f64, one_minus_r: f64) -> f64 {
    (r / one_minus_r) / (1.0 - r / (2.0 - r))
}

/// Shared renewal-accumulation loop. Stops once the leading discount
/// `r^(T_{i-1})` drops below `epsilon`; reports each included renewal time
/// and returns `(pv, discount at stop)`.
fn run_discounted_stream(
    scaling: &DiscountScaling,
    epsilon: f64,
    rng: &mut RngStream,
    mut per_term: impl FnMut(u64, f64, f64),
) -> (f64, f64) {
    let r = scaling.r;
    let two_r = 2.0 * r;
    let mut discount = 1.0f64; // r^(T_{i-1}), starting from T_0 = 0
    let mut t_prev = 0u64;
    let mut pv = 0.0f64;
    while discount >= epsilon {
        let dt = sample_stopping_time(rng);
        let t_next = t_prev + dt as u64;
        let term = discount * two_r.powi(dt as i32);
        pv += term;
        per_term(t_next, discount, term);
        discount *= r.powi(dt as i32);
        t_prev = t_next;
    }
    (pv, discount)
}

/// Simulates the discounted gain stream `V(r)` truncated at
/// `r^(T_{i-1}) < epsilon`, with the expected value of the discarded tail
/// attached.
pub fn simulate_discounted_gain(
    scaling: &DiscountScaling,
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<DiscountedTrace> {
    check_epsilon(epsilon)?;
    let mut times = Vec::new();
    let (pv, discount) =
        run_discounted_stream(scaling, epsilon, rng, |t, _, _| times.push(t));
    Ok(DiscountedTrace {
        renewal_times: times,
        pv_gain: pv,
        truncation_bound: discount * expected_stream_value(scaling.r, scaling.one_minus_r),
    })
}

/// One approximate draw of the limit variable `U` through the renewal
/// stream: `(2 (1-r) V(r) - n) / 2a`. The bias is a finite-`n` effect and
/// shrinks as `n` grows; the claim is checked by cross-validating against
/// the band sampler in `engine::levy`.
pub fn sample_u_via_scaling(
    scaling: &DiscountScaling,
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (pv, _) = run_discounted_stream(scaling, epsilon, rng, |_, _, _| {});
    Ok((2.0 * scaling.one_minus_r * pv - scaling.n as f64) / (2.0 * scaling.a))
}

/// Present value of one doubling-strategy game of duration `t` at discount
/// factor `r`: `r/(2r-1) - (2r)^t (1-r)/(2r-1)`.
///
/// Requires `1/2 < r < 1`; the closed form has a pole at `2r = 1`.
pub fn doubling_game_present_value(t: u32, r: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::invalid("t", "duration must be at least 1"));
    }
    if !(r > 0.5 && r < 1.0) {
        return Err(Error::invalid(
            "r",
            format!("must lie in (1/2, 1), got {r}"),
        ));
    }
    let two_r_minus_one = 2.0 * r - 1.0;
    Ok(r / two_r_minus_one - (2.0 * r).powi(t as i32) * (1.0 - r) / two_r_minus_one)
}

/// A truncated run of the discounted doubling stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingTrace {
    /// The truncated stream value (estimate of the total gain's PV).
    pub pv_gain: f64,
    /// `sum r^(T_{i-1})` over the included terms.
    pub discount_sum: f64,
    /// `sum r^(T_{i-1}) (2r)^(T_i - T_{i-1})` over the same terms, i.e. the
    /// plain gain stream on the same randomness.
    pub base_pv: f64,
    /// Bound on the expected absolute value of the discarded tail.
    pub truncation_bound: f64,
    /// Number of games included before the stop.
    pub games: u64,
}

/// Accumulates the discounted doubling-game stream
/// `sum r^(T_{i-1}) (r/(2r-1) - ((1-r)/(2r-1)) (2r)^(T_i - T_{i-1}))`
/// until `r^(T_{i-1}) < epsilon`.
///
/// The trace also carries `sum r^(T_{i-1})` and the plain stream on the same
/// renewal times, so the identity
/// `pv_gain = (r * discount_sum - (1-r) * base_pv) / (2r-1)` can be checked
/// against shared randomness.
pub fn simulate_doubling_stream(
    scaling: &DiscountScaling,
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<DoublingTrace> {
    check_epsilon(epsilon)?;
    let r = scaling.r;
    if r <= 0.5 {
        return Err(Error::invalid(
            "scaling",
            format!("doubling stream needs r > 1/2, got r = {r}"),
        ));
    }
    let gain_coef = r / (2.0 * r - 1.0);
    let loss_coef = scaling.one_minus_r / (2.0 * r - 1.0);

    let mut discount_sum = 0.0f64;
    let mut pv_doubling = 0.0f64;
    let mut games = 0u64;
    let (base_pv, discount) = run_discounted_stream(scaling, epsilon, rng, |_, disc, term| {
        discount_sum += disc;
        pv_doubling += disc * gain_coef - term * loss_coef;
        games += 1;
    });

    // Expected absolute tail: E[sum_{i>k} r^(T_{i-1})] times the per-game
    // mean absolute value, gain_coef + loss_coef * E[(2r)^dT].
    let per_game_abs = gain_coef + loss_coef * (r / scaling.one_minus_r);
    let tail_discounts = discount * (2.0 - r) / (2.0 * scaling.one_minus_r);
    Ok(DoublingTrace {
        pv_gain: pv_doubling,
        discount_sum,
        base_pv,
        truncation_bound: tail_discounts * per_game_abs,
        games,
    })
}
