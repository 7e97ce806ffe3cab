//! Named, seeded experiments with deterministic reports.
//!
//! Each experiment draws what it needs from streams derived from
//! `(seed, experiment id, substream, chunk)`, generates its batches in
//! fixed-size chunks (one stream per chunk), and reduces them in a fixed
//! order. Results are therefore identical for any worker count and any
//! scheduling; the worker count only changes wall-clock time.
//!
//! Experiments validate every parameter before any sampling starts and
//! reject unknown keys by name.

mod report;
mod runs;

pub use report::{MetricRow, Report};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// The experiment catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    TruncatedLimit,
    DiscountedFairness,
    UCrossCheck,
    UTail,
    CharFn,
    Premium,
    Ruin,
    Doubling,
    All,
}

impl ExperimentKind {
    pub const SINGLE_KINDS: [ExperimentKind; 8] = [
        ExperimentKind::TruncatedLimit,
        ExperimentKind::DiscountedFairness,
        ExperimentKind::UCrossCheck,
        ExperimentKind::UTail,
        ExperimentKind::CharFn,
        ExperimentKind::Premium,
        ExperimentKind::Ruin,
        ExperimentKind::Doubling,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::TruncatedLimit => "truncated-limit",
            ExperimentKind::DiscountedFairness => "discounted-fairness",
            ExperimentKind::UCrossCheck => "u-cross-check",
            ExperimentKind::UTail => "u-tail",
            ExperimentKind::CharFn => "char-fn",
            ExperimentKind::Premium => "premium",
            ExperimentKind::Ruin => "ruin",
            ExperimentKind::Doubling => "doubling",
            ExperimentKind::All => "all",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let all = [
            ExperimentKind::TruncatedLimit,
            ExperimentKind::DiscountedFairness,
            ExperimentKind::UCrossCheck,
            ExperimentKind::UTail,
            ExperimentKind::CharFn,
            ExperimentKind::Premium,
            ExperimentKind::Ruin,
            ExperimentKind::Doubling,
            ExperimentKind::All,
        ];
        all.into_iter().find(|k| k.name() == name)
    }

    /// Stable stream-namespace id; part of the reproducibility contract.
    fn id(&self) -> u64 {
        match self {
            ExperimentKind::TruncatedLimit => 1,
            ExperimentKind::DiscountedFairness => 2,
            ExperimentKind::UCrossCheck => 3,
            ExperimentKind::UTail => 4,
            ExperimentKind::CharFn => 5,
            ExperimentKind::Ruin => 6,
            ExperimentKind::Doubling => 7,
            ExperimentKind::Premium => 8,
            ExperimentKind::All => 0,
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by every experiment.
#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    pub seed: u64,
    /// Overrides the experiment's primary sample count when set.
    pub samples: Option<u64>,
    /// Worker threads; `None` uses the process-global pool.
    pub workers: Option<usize>,
    /// Per-experiment parameters as raw `key = value` strings.
    pub params: BTreeMap<String, String>,
}

/// Runs one experiment (or the whole suite) and assembles its report.
pub fn run(kind: ExperimentKind, settings: &RunSettings) -> Result<Report> {
    let body = || -> Result<Report> {
        let mut config = vec![
            ("experiment".to_string(), kind.name().to_string()),
            ("seed".to_string(), settings.seed.to_string()),
            (
                "samples".to_string(),
                settings
                    .samples
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "default".to_string()),
            ),
            (
                "workers".to_string(),
                // Materialize the default so the report is self-describing.
                settings
                    .workers
                    .unwrap_or_else(rayon::current_num_threads)
                    .to_string(),
            ),
        ];
        let mut rows = Vec::new();
        match kind {
            ExperimentKind::All => {
                for sub in ExperimentKind::SINGLE_KINDS {
                    let (sub_rows, resolved) = dispatch(sub, settings)?;
                    rows.extend(sub_rows);
                    for (k, v) in resolved {
                        config.push((format!("{}.{k}", sub.name()), v));
                    }
                }
            }
            single => {
                let (sub_rows, resolved) = dispatch(single, settings)?;
                rows.extend(sub_rows);
                for (k, v) in resolved {
                    config.push((format!("{}.{k}", single.name()), v));
                }
            }
        }
        Ok(Report {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            rows,
        })
    };

    match settings.workers {
        None => body(),
        Some(w) => {
            if w == 0 {
                return Err(Error::invalid("workers", "must be at least 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?;
            pool.install(body)
        }
    }
}

pub(crate) type ExperimentOutput = (Vec<MetricRow>, Vec<(String, String)>);

fn dispatch(kind: ExperimentKind, settings: &RunSettings) -> Result<ExperimentOutput> {
    let ctx = Ctx {
        seed: settings.seed,
        samples: settings.samples,
        exp: kind,
    };
    match kind {
        ExperimentKind::TruncatedLimit => runs::truncated_limit(&ctx, &settings.params),
        ExperimentKind::DiscountedFairness => runs::discounted_fairness(&ctx, &settings.params),
        ExperimentKind::UCrossCheck => runs::u_cross_check(&ctx, &settings.params),
        ExperimentKind::UTail => runs::u_tail(&ctx, &settings.params),
        ExperimentKind::CharFn => runs::char_fn(&ctx, &settings.params),
        ExperimentKind::Premium => runs::premium(&ctx, &settings.params),
        ExperimentKind::Ruin => runs::ruin(&ctx, &settings.params),
        ExperimentKind::Doubling => runs::doubling(&ctx, &settings.params),
        ExperimentKind::All => unreachable!("run() expands `all` before dispatch"),
    }
}

/// Per-experiment context: the seed and the stream namespace.
pub(crate) struct Ctx {
    seed: u64,
    samples: Option<u64>,
    exp: ExperimentKind,
}

impl Ctx {
    pub(crate) fn name(&self) -> &'static str {
        self.exp.name()
    }

    pub(crate) fn samples_override(&self) -> Option<u64> {
        self.samples
    }

    /// Deterministic parallel batch in this experiment's stream namespace:
    /// substream `sub` occupies stream ids `(id << 32) | (sub << 24) | chunk`.
    pub(crate) fn par_batch<T, F>(&self, sub: u64, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut RngStream) -> T + Sync + Send,
    {
        debug_assert!(sub < 1 << 8 && count <= crate::rng::BATCH_CHUNK << 24);
        let base = (self.exp.id() << 32) | (sub << 24);
        crate::rng::par_batch(self.seed, base, count, f)
    }
}

/// Declared parameters with defaults; validates overrides and materializes
/// the resolved list for the report header.
pub(crate) struct Params {
    resolved: Vec<(String, String)>,
}

impl Params {
    pub(crate) fn resolve(
        declared: &[(&str, String)],
        overrides: &BTreeMap<String, String>,
    ) -> Result<Self> {
        for key in overrides.keys() {
            if !declared.iter().any(|(k, _)| k == key) {
                return Err(Error::InvalidParam {
                    name: "param",
                    reason: format!("unknown parameter key `{key}`"),
                });
            }
        }
        let resolved = declared
            .iter()
            .map(|(k, default)| {
                let v = overrides.get(*k).cloned().unwrap_or_else(|| default.clone());
                (k.to_string(), v)
            })
            .collect();
        Ok(Params { resolved })
    }

    pub(crate) fn into_resolved(self) -> Vec<(String, String)> {
        self.resolved
    }

    /// The resolved raw value of a key, if declared.
    pub(crate) fn resolved_value(&self, key: &str) -> Option<&str> {
        self.resolved
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn raw(&self, key: &str) -> &str {
        self.resolved
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .expect("declared key")
    }

    pub(crate) fn get_f64(&self, key: &'static str) -> Result<f64> {
        self.raw(key).trim().parse().map_err(|_| Error::InvalidParam {
            name: key,
            reason: format!("`{}` is not a number", self.raw(key)),
        })
    }

    pub(crate) fn get_u64(&self, key: &'static str) -> Result<u64> {
        self.raw(key).trim().parse().map_err(|_| Error::InvalidParam {
            name: key,
            reason: format!("`{}` is not a nonnegative integer", self.raw(key)),
        })
    }

    pub(crate) fn get_i32(&self, key: &'static str) -> Result<i32> {
        self.raw(key).trim().parse().map_err(|_| Error::InvalidParam {
            name: key,
            reason: format!("`{}` is not an integer", self.raw(key)),
        })
    }

    /// Comma-separated list, returned as `(original token, parsed)` pairs so
    /// metric names can reuse the exact token.
    pub(crate) fn get_list<T: std::str::FromStr>(
        &self,
        key: &'static str,
    ) -> Result<Vec<(String, T)>> {
        self.raw(key)
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<T>()
                    .map(|v| (tok.to_string(), v))
                    .map_err(|_| Error::InvalidParam {
                        name: key,
                        reason: format!("could not parse list element `{tok}`"),
                    })
            })
            .collect()
    }
}
