//! Statistical verification machinery: empirical CDFs, Kolmogorov–Smirnov
//! tests, tail frequencies with Wilson intervals, empirical characteristic
//! functions, and CLT mean intervals.
//!
//! The KS critical values are fixed at the p = 0.001 asymptotic point;
//! acceptance checks need a hard threshold, not a p-value surface. Tail
//! intervals are Wilson rather than Wald because the interesting
//! probabilities here sit near zero.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Asymptotic sup-norm KS coefficient at the p = 0.001 level:
/// `P(sqrt(n) D > c) = 0.001` gives `c ~= 1.949`.
pub const KS_CRITICAL_COEF_P001: f64 = 1.949;

/// A batch of sampled values together with enough metadata to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    values: Vec<f64>,
    meta: BatchMeta,
}

/// Where a batch came from: generator name, a parameter summary, the seed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BatchMeta {
    pub generator: String,
    pub params: String,
    pub seed: u64,
}

impl SampleBatch {
    /// Requires a nonempty batch of finite values.
    pub fn new(values: Vec<f64>, meta: BatchMeta) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "values",
                format!("batch contains a non-finite value {bad}"),
            ));
        }
        Ok(SampleBatch { values, meta })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &BatchMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
        v
    }
}

/// A KS statistic next to its fixed p = 0.001 critical value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub critical_001: f64,
}

impl KsResult {
    pub fn rejects(&self) -> bool {
        self.statistic >= self.critical_001
    }
}

/// One-sample KS: sup-norm distance between the batch ECDF and `cdf`,
/// which must be a nondecreasing distribution function.
pub fn ks_one_sample<F: Fn(f64) -> f64>(batch: &SampleBatch, cdf: F) -> Result<KsResult> {
    let xs = batch.sorted();
    let n = xs.len() as f64;
    let mut stat = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        stat = stat.max(above).max(below);
    }
    Ok(KsResult {
        statistic: stat,
        critical_001: KS_CRITICAL_COEF_P001 / n.sqrt(),
    })
}

/// Two-sample KS: sup-norm distance between the two ECDFs.
pub fn ks_two_sample(a: &SampleBatch, b: &SampleBatch) -> Result<KsResult> {
    let xs = a.sorted();
    let ys = b.sorted();
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut stat = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        stat = stat.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult {
        statistic: stat,
        critical_001: KS_CRITICAL_COEF_P001 * ((na + nb) / (na * nb)).sqrt(),
    })
}

/// Estimated exceedance probability with a Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub threshold: f64,
    pub p_hat: f64,
    pub n: usize,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
}

/// Fraction of the batch strictly above `threshold`, with a Wilson interval
/// at confidence `level`.
pub fn tail_frequency(batch: &SampleBatch, threshold: f64, level: f64) -> Result<TailEstimate> {
    check_level(level)?;
    let n = batch.len();
    let hits = batch.values().iter().filter(|&&v| v > threshold).count();
    let p_hat = hits as f64 / n as f64;
    let z = normal_quantile(0.5 + level / 2.0)?;
    let nf = n as f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p_hat + z2 / (2.0 * nf)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // The interval endpoints equal p_hat exactly at the boundary counts;
    // spell that out rather than leave rounding residue.
    let ci_lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let ci_hi = if hits == n { 1.0 } else { (center + half).min(1.0) };
    Ok(TailEstimate {
        threshold,
        p_hat,
        n,
        ci_lo,
        ci_hi,
        level,
    })
}

/// Empirical characteristic function value at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcfEstimate {
    pub value: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

/// Mean of `(cos(z v), sin(z v))` over the batch with componentwise
/// standard errors.
pub fn empirical_cf(batch: &SampleBatch, z: f64) -> Result<EcfEstimate> {
    let n = batch.len() as f64;
    let mut sum_c = 0.0;
    let mut sum_s = 0.0;
    let mut sq_c = 0.0;
    let mut sq_s = 0.0;
    for &v in batch.values() {
        let (s, c) = (z * v).sin_cos();
        sum_c += c;
        sum_s += s;
        sq_c += c * c;
        sq_s += s * s;
    }
    let stderr = |sum: f64, sq: f64| {
        if batch.len() < 2 {
            0.0
        } else {
            let var = ((sq - sum * sum / n) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        }
    };
    Ok(EcfEstimate {
        value: Complex64::new(sum_c / n, sum_s / n),
        stderr_re: stderr(sum_c, sq_c),
        stderr_im: stderr(sum_s, sq_s),
    })
}

/// CLT mean interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
}

impl MeanEstimate {
    pub fn contains(&self, target: f64) -> bool {
        self.ci_lo <= target && target <= self.ci_hi
    }
}

/// Sample mean with a normal-approximation interval at confidence `level`.
/// Needs at least two values.
pub fn mean_with_ci(batch: &SampleBatch, level: f64) -> Result<MeanEstimate> {
    check_level(level)?;
    let n = batch.len();
    if n < 2 {
        return Err(Error::invalid(
            "batch",
            "mean interval needs at least two values",
        ));
    }
    let nf = n as f64;
    let mean = batch.values().iter().sum::<f64>() / nf;
    let var = batch
        .values()
        .iter()
        .map(|v| {
            let d = v - mean;
            d * d
        })
        .sum::<f64>()
        / (nf - 1.0);
    let stderr = (var / nf).sqrt();
    let z = normal_quantile(0.5 + level / 2.0)?;
    Ok(MeanEstimate {
        mean,
        stderr,
        ci_lo: mean - z * stderr,
        ci_hi: mean + z * stderr,
        level,
    })
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(
            "level",
            format!("confidence level must lie in (0, 1), got {level}"),
        ));
    }
    Ok(())
}

/// Standard normal quantile by the Acklam rational approximation
/// (absolute relative error below 1.2e-9 across (0, 1)).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(
            "p",
            format!("quantile argument must lie in (0, 1), got {p}"),
        ));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    };
    Ok(x)
}
