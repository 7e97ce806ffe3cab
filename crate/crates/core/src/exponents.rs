//! Lévy exponents of the two limit objects, evaluated numerically.
//!
//! The centered-gain limit process has exponent
//!
//! ```text
//! l(z) = sum_{k<=0} 2^(-k) (e^(iz 2^k) - 1 - iz 2^k)
//!      + sum_{k>=1} 2^(-k) (e^(iz 2^k) - 1),
//! ```
//!
//! a pure series over the dyadic atoms `x = 2^k` of its Lévy measure. The
//! discounted limit `U` smears each atom into a band and carries the
//! characteristic function `E e^(izU) = e^(g(z)/2a)` with
//!
//! ```text
//! g(z) = 2iz + sum_l 2^(-l) I_l(z),
//! I_l(z) = int_{2^l}^{2^(l+1)} (e^(izx) - 1 - izx [l<=0]) dx/x.
//! ```
//!
//! Band integrals are done by adaptive Gauss–Kronrod quadrature while the
//! oscillation across the band is modest. Once the phase `z 2^l` passes
//! the oscillation threshold (64), a Gauss rule would have to resolve up
//! to ~10^12 oscillations and its error estimate stops meaning anything,
//! so those bands switch to an integration-by-parts expansion of
//! `int e^(izx)/x dx` whose truncation error is below 1e-15 at the
//! switchover and falls like `phase^(-14)` beyond it.
//!
//! Both sums extend their band range automatically until the analytic
//! remainder bounds drop under the requested tolerance: the low tail is
//! dominated by `z^2 2^l`, the high tail by `2^(-l)`. Bands are accumulated
//! from `l = 0` outward to keep cancellation in check.

use num_complex::Complex64;

use crate::engine::levy::LevyTruncation;
use crate::error::{Error, Result};

use std::f64::consts::LN_2;

/// Tolerances and starting band range for exponent evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Absolute tolerance on the total remainder; also allocated per band.
    pub abs_tol: f64,
    /// Relative tolerance used inside the adaptive rule.
    pub rel_tol: f64,
    /// Bands always evaluated, before automatic extension.
    pub band_range: LevyTruncation,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            band_range: LevyTruncation::default(),
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        let positive = |t: f64| t.is_finite() && t > 0.0;
        if !positive(self.abs_tol) || !positive(self.rel_tol) {
            return Err(Error::invalid(
                "tolerance",
                format!(
                    "tolerances must be positive, got abs {} rel {}",
                    self.abs_tol, self.rel_tol
                ),
            ));
        }
        Ok(())
    }
}

/// Beyond this band index magnitude a sum that still misses its tolerance
/// is reported as non-convergent rather than ground on forever.
const MAX_BAND_INDEX: i32 = 1000;

/// Phase `|z| 2^l` at which band integrals switch from the adaptive rule to
/// the integration-by-parts expansion.
const OSC_PHASE_MIN: f64 = 64.0;

/// `e^(i theta) - 1`, cancellation-free: `(cos t - 1, sin t)` with the real
/// part as `-2 sin^2(t/2)`.
#[inline]
fn cexpm1(theta: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    Complex64::new(-2.0 * s * s, theta.sin())
}

/// `e^(i theta) - 1 - i theta`. The imaginary part `sin t - t` switches to
/// its series for small `t`; the band scaling multiplies these values by
/// `2^(-l)`, so absolute accuracy of the tiny values matters.
#[inline]
fn cexpm1_centered(theta: f64) -> Complex64 {
    let s = (0.5 * theta).sin();
    Complex64::new(-2.0 * s * s, sin_minus_arg(theta))
}

#[inline]
fn sin_minus_arg(theta: f64) -> f64 {
    if theta.abs() < 0.25 {
        let t2 = theta * theta;
        // sin t - t = -t^3/6 (1 - t^2/20 + t^4/840 - t^6/60480 + ...)
        let series = 1.0 - t2 / 20.0 + t2 * t2 / 840.0 - t2 * t2 * t2 / 60_480.0;
        -theta * t2 / 6.0 * series
    } else {
        theta.sin() - theta
    }
}

/// Lévy exponent of the centered-gain limit process.
///
/// `k_range` must cover at least `[-40, 40]`; the sums are extended past it
/// automatically until the remainder bounds (`z^2 2^k` below, `2^(2-k)`
/// above) fall under `quad.abs_tol`.
pub fn levy_exponent_process(
    z: f64,
    k_range: (i32, i32),
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    quad.validate()?;
    if !z.is_finite() {
        return Err(Error::invalid("z", "must be finite"));
    }
    if k_range.0 > -40 || k_range.1 < 40 {
        return Err(Error::invalid(
            "k_range",
            format!("must cover [-40, 40], got [{}, {}]", k_range.0, k_range.1),
        ));
    }
    if z == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let mut acc = Complex64::new(0.0, 0.0);
    // Centered atoms, k = 0 downward.
    let mut k = 0i32;
    loop {
        let theta = z * (k as f64).exp2();
        acc += (-(k as f64)).exp2() * cexpm1_centered(theta);
        let tail_bound = z * z * (k as f64).exp2(); // sum_{j<k} z^2 2^j / 2 * 2
        if k <= k_range.0 && tail_bound < quad.abs_tol {
            break;
        }
        if k <= -MAX_BAND_INDEX {
            return Err(Error::NonConvergence {
                tol: quad.abs_tol,
                remainder: tail_bound,
            });
        }
        k -= 1;
    }
    // Uncentered atoms, k = 1 upward.
    let mut k = 1i32;
    loop {
        let theta = z * (k as f64).exp2();
        acc += (-(k as f64)).exp2() * cexpm1(theta);
        let tail_bound = (2.0f64 - k as f64).exp2(); // sum_{j>k} 2 * 2^-j
        if k >= k_range.1 && tail_bound < quad.abs_tol {
            break;
        }
        if k >= MAX_BAND_INDEX {
            return Err(Error::NonConvergence {
                tol: quad.abs_tol,
                remainder: tail_bound,
            });
        }
        k += 1;
    }
    Ok(acc)
}

/// Lévy exponent `g` of the discounted limit: `E e^(izU) = e^(g(z)/2a)`.
pub fn levy_exponent_discounted(z: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    quad.validate()?;
    if !z.is_finite() {
        return Err(Error::invalid("z", "must be finite"));
    }
    if z == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }

    let mut acc = Complex64::new(0.0, 2.0 * z);
    // Centered bands, l = 0 downward.
    let mut l = 0i32;
    loop {
        acc += band_term(z, l, quad)?;
        let tail_bound = 1.5 * z * z * (l as f64).exp2();
        if l <= quad.band_range.l_min() && tail_bound < quad.abs_tol {
            break;
        }
        if l <= -MAX_BAND_INDEX {
            return Err(Error::NonConvergence {
                tol: quad.abs_tol,
                remainder: tail_bound,
            });
        }
        l -= 1;
    }
    // Uncentered bands, l = 1 upward.
    let mut l = 1i32;
    loop {
        acc += band_term(z, l, quad)?;
        let tail_bound = 4.0 * LN_2 * (-(l as f64)).exp2();
        if l >= quad.band_range.l_max() && tail_bound < quad.abs_tol {
            break;
        }
        if l >= MAX_BAND_INDEX {
            return Err(Error::NonConvergence {
                tol: quad.abs_tol,
                remainder: tail_bound,
            });
        }
        l += 1;
    }
    Ok(acc)
}

/// Characteristic function of `U`: `e^(g(z)/2a)`.
pub fn char_fn_u(z: f64, a: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    if !(1.0..2.0).contains(&a) {
        return Err(Error::invalid("a", format!("must lie in [1, 2), got {a}")));
    }
    Ok((levy_exponent_discounted(z, quad)? / (2.0 * a)).exp())
}

/// One band's contribution `2^(-l) I_l(z)`.
fn band_term(z: f64, l: i32, quad: &QuadratureSpec) -> Result<Complex64> {
    Ok((-(l as f64)).exp2() * band_integral(z, l, quad)?)
}

fn band_integral(z: f64, l: i32, quad: &QuadratureSpec) -> Result<Complex64> {
    let a = (l as f64).exp2();
    let b = 2.0 * a;
    let centered = l <= 0;
    let phase = z.abs() * a;
    if phase >= OSC_PHASE_MIN {
        // int (e^izx - 1 - izx c)/x dx = osc - ln 2 - izc (b - a).
        let mut val = osc_integral_ibp(z, a, b) - Complex64::new(LN_2, 0.0);
        if centered {
            val -= Complex64::new(0.0, z * a);
        }
        Ok(val)
    } else {
        // The integrand is banded-smooth here (at most ~10 oscillations).
        // Tolerances: absolute scaled so the 2^(-l) band weight still meets
        // quad.abs_tol, relative so tiny low bands are not over-resolved.
        let abs_tol = 0.25 * quad.abs_tol * a;
        let f = |x: f64| {
            let theta = z * x;
            let num = if centered {
                cexpm1_centered(theta)
            } else {
                cexpm1(theta)
            };
            num / x
        };
        match gk_adaptive(&f, a, b, abs_tol, 1e-14) {
            Ok(v) => Ok(v),
            Err(err_estimate) => Err(Error::NonConvergence {
                tol: abs_tol,
                remainder: err_estimate,
            }),
        }
    }
}

/// `int_a^b e^(izx)/x dx` by repeated integration by parts:
///
/// ```text
/// sum_{j=1..J} (j-1)! [ e^(izb) / (izb)^j - e^(iza) / (iza)^j ]
/// ```
///
/// with truncation error below `(J-1)! / (|z| a)^J`; at the switchover
/// phase 64 and `J = 14` that is ~3e-16. Powers are built from `1/(izx)`
/// directly so nothing overflows at extreme band indices.
fn osc_integral_ibp(z: f64, a: f64, b: f64) -> Complex64 {
    const J: usize = 14;
    let eia = Complex64::from_polar(1.0, z * a);
    let eib = Complex64::from_polar(1.0, z * b);
    let ua = (Complex64::new(0.0, z) * a).finv();
    let ub = (Complex64::new(0.0, z) * b).finv();
    let mut pa = ua; // (j-1)! * ua^j
    let mut pb = ub;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 1..=J {
        sum += pb * eib - pa * eia;
        pa *= ua * j as f64;
        pb *= ub * j as f64;
    }
    sum
}

// --- adaptive Gauss-Kronrod (G7, K15) -----------------------------------

// Kronrod-15 abscissae on [0, 1] side of the symmetric rule and weights;
// the Gauss-7 subset sits at the odd indices.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).norm())
}

/// Plain bisection driver over the G7K15 pair. If the segment budget runs
/// out, remaining segments are accepted as-is and the accumulated error
/// estimate is returned as the failure value.
fn gk_adaptive<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> std::result::Result<Complex64, f64> {
    const MAX_SEGMENTS: usize = 4096;
    let mut stack = vec![(a, b, abs_tol)];
    let mut total = Complex64::new(0.0, 0.0);
    let mut forced_err = 0.0f64;
    let mut segments = 0usize;
    while let Some((lo, hi, tol)) = stack.pop() {
        segments += 1;
        let (value, err) = gk15(f, lo, hi);
        let converged = err <= tol.max(rel_tol * value.norm()) || hi - lo < 1e-15 * (b - a);
        if converged {
            total += value;
        } else if segments > MAX_SEGMENTS {
            total += value;
            forced_err += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * tol));
            stack.push((mid, hi, 0.5 * tol));
        }
    }
    if forced_err > abs_tol {
        Err(forced_err)
    } else {
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::game::sample_stopping_time;
    use crate::rng::RngStream;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn exponents_vanish_at_zero() {
        let l = levy_exponent_process(0.0, (-40, 40), &quad()).unwrap();
        assert_eq!(l, Complex64::new(0.0, 0.0));
        let g = levy_exponent_discounted(0.0, &quad()).unwrap();
        assert_eq!(g, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn k_range_must_cover_the_core() {
        assert!(levy_exponent_process(1.0, (-10, 40), &quad()).is_err());
        assert!(levy_exponent_process(1.0, (-40, 10), &quad()).is_err());
    }

    #[test]
    fn hermitian_symmetry() {
        for z in [0.3, 1.0, 2.5] {
            let lp = levy_exponent_process(z, (-40, 40), &quad()).unwrap();
            let lm = levy_exponent_process(-z, (-40, 40), &quad()).unwrap();
            assert!((lm - lp.conj()).norm() < 1e-12, "l at z = {z}");

            let gp = levy_exponent_discounted(z, &quad()).unwrap();
            let gm = levy_exponent_discounted(-z, &quad()).unwrap();
            assert!((gm - gp.conj()).norm() < 1e-12, "g at z = {z}");
        }
    }

    #[test]
    fn quasi_semi_stable_functional_equation() {
        // g(z 2^-m) = 2^-m (g(z) + izm), checked as
        // |2^m g(z 2^-m) - g(z) - izm| < 1e-8 (1 + |g(z)|).
        for z in [0.25, 0.5, 1.0, 2.0] {
            let g = levy_exponent_discounted(z, &quad()).unwrap();
            for m in 1..=8 {
                let scaled = levy_exponent_discounted(z * (-(m as f64)).exp2(), &quad()).unwrap();
                let residual =
                    ((m as f64).exp2() * scaled - g - Complex64::new(0.0, z * m as f64)).norm();
                assert!(
                    residual < 1e-8 * (1.0 + g.norm()),
                    "z = {z}, m = {m}: residual {residual}"
                );
            }
        }
    }

    #[test]
    fn band_methods_agree_at_the_switchover() {
        // Evaluate one band both ways near phase 64 and compare.
        let q = quad();
        for (z, l) in [(70.0, 0i32), (130.0, -1), (66.0, 1)] {
            let a = (l as f64).exp2();
            let b = 2.0 * a;
            let phase = z * a;
            assert!(phase >= OSC_PHASE_MIN, "test setup");
            let ibp = band_integral(z, l, &q).unwrap();
            let centered = l <= 0;
            let f = |x: f64| {
                let theta = z * x;
                let num = if centered {
                    cexpm1_centered(theta)
                } else {
                    cexpm1(theta)
                };
                num / x
            };
            // 1e-13 is near the floor of what the K15-G7 error estimate can
            // certify on an oscillatory integrand of unit scale.
            let gk = gk_adaptive(&f, a, b, 1e-13, 1e-13).unwrap();
            assert!((ibp - gk).norm() < 1e-11, "z={z} l={l}: {ibp} vs {gk}");
        }
    }

    #[test]
    fn extreme_argument_reports_non_convergence() {
        // At z = 1e200 the low-band remainder z^2 2^l cannot reach the
        // tolerance within the band-index cap.
        match levy_exponent_process(1e200, (-40, 40), &quad()) {
            Err(Error::NonConvergence { remainder, .. }) => assert!(remainder > 0.0),
            other => panic!("expected NonConvergence, got {other:?}"),
        }
        match levy_exponent_discounted(1e200, &quad()) {
            Err(Error::NonConvergence { .. }) => {}
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn process_exponent_matches_simulated_random_walk() {
        // Oracle: simulate the centered sums S_N/N - n at n = 14 and compare
        // (1/t) log of the empirical characteristic function at t = 1
        // against the series value of l(z), z = 1.
        let z = 1.0;
        let n_exp = 14u32;
        let big_n = 1u64 << n_exp;
        let sims = 60_000u64;
        let mut rng = RngStream::new(41, 0);
        let mut sum_cos = 0.0;
        let mut sum_sin = 0.0;
        let mut sq_cos = 0.0;
        let mut sq_sin = 0.0;
        for _ in 0..sims {
            let mut total = 0.0f64;
            for _ in 0..big_n {
                total += (sample_stopping_time(&mut rng) as f64).exp2();
            }
            let centered = total / big_n as f64 - n_exp as f64;
            let (s, c) = (z * centered).sin_cos();
            sum_cos += c;
            sum_sin += s;
            sq_cos += c * c;
            sq_sin += s * s;
        }
        let m = sims as f64;
        let ecf = Complex64::new(sum_cos / m, sum_sin / m);
        let se_re = ((sq_cos - sum_cos * sum_cos / m) / (m - 1.0) / m).sqrt();
        let se_im = ((sq_sin - sum_sin * sum_sin / m) / (m - 1.0) / m).sqrt();

        let expected = levy_exponent_process(z, (-40, 40), &quad()).unwrap();
        let estimated = ecf.ln();
        // First-order error propagation through the logarithm.
        let tol = 3.0 * (se_re + se_im) / ecf.norm();
        assert!(
            (estimated.re - expected.re).abs() < tol,
            "Re: {} vs {} (tol {tol})",
            estimated.re,
            expected.re
        );
        assert!(
            (estimated.im - expected.im).abs() < tol,
            "Im: {} vs {} (tol {tol})",
            estimated.im,
            expected.im
        );
    }
}
