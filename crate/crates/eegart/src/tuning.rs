//! Hyperparameter search: per-family spaces, seeded random search, and a
//! lightweight tree-structured Parzen estimator (`tpe_lite`).
//!
//! The trial sequence is generated serially from the seed, so evaluating
//! objectives in parallel cannot change which points are visited.

use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Family, ParamValue, Params};
use crate::{Error, Result};

/// One search dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DimKind {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    IntRange { lo: i64, hi: i64 },
    Categorical { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dim {
    pub name: String,
    pub kind: DimKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<Dim>,
}

impl SearchSpace {
    fn dim(name: &str, kind: DimKind) -> Dim {
        Dim { name: name.to_string(), kind }
    }

    pub fn validate(&self) -> Result<()> {
        for d in &self.dims {
            let ok = match &d.kind {
                DimKind::Uniform { lo, hi } => lo < hi,
                DimKind::LogUniform { lo, hi } => *lo > 0.0 && lo < hi,
                DimKind::IntRange { lo, hi } => lo <= hi,
                DimKind::Categorical { choices } => !choices.is_empty(),
            };
            if !ok {
                return Err(Error::Tuning(format!("dimension {} has invalid bounds", d.name)));
            }
        }
        Ok(())
    }

    pub fn contains(&self, params: &Params) -> bool {
        self.dims.iter().all(|d| match (params.get(&d.name), &d.kind) {
            (Some(v), DimKind::Uniform { lo, hi }) | (Some(v), DimKind::LogUniform { lo, hi }) => {
                v.as_f64().is_some_and(|x| x >= *lo && x <= *hi)
            }
            (Some(v), DimKind::IntRange { lo, hi }) => {
                v.as_i64().is_some_and(|x| x >= *lo && x <= *hi)
            }
            (Some(v), DimKind::Categorical { choices }) => {
                choices.iter().any(|c| choice_to_value(c) == *v)
            }
            (None, _) => false,
        })
    }
}

/// Categorical choices are stored as strings; numeric choices become
/// numeric parameter values and `none` maps to the integer 0 sentinel
/// (used by tree-depth dimensions for "unlimited").
pub fn choice_to_value(choice: &str) -> ParamValue {
    if choice == "none" {
        return ParamValue::Int(0);
    }
    if let Ok(i) = choice.parse::<i64>() {
        return ParamValue::Int(i);
    }
    if let Ok(x) = choice.parse::<f64>() {
        return ParamValue::Real(x);
    }
    ParamValue::Text(choice.to_string())
}

/// The declared search space of each family.
pub fn default_space(family: Family) -> SearchSpace {
    let dims = match family {
        Family::GaussianNb => vec![SearchSpace::dim(
            "var_smoothing",
            DimKind::LogUniform { lo: 1e-11, hi: 1e-7 },
        )],
        Family::Knn => vec![SearchSpace::dim("k", DimKind::IntRange { lo: 1, hi: 50 })],
        Family::Lda => vec![SearchSpace::dim("shrinkage", DimKind::Uniform { lo: 0.0, hi: 1.0 })],
        Family::SgdLinear => vec![
            SearchSpace::dim("l2", DimKind::LogUniform { lo: 1e-6, hi: 1e-1 }),
            SearchSpace::dim("eta0", DimKind::LogUniform { lo: 1e-4, hi: 1e-1 }),
        ],
        Family::Mlp => vec![
            SearchSpace::dim("hidden_layers", DimKind::IntRange { lo: 1, hi: 2 }),
            SearchSpace::dim(
                "width",
                DimKind::Categorical {
                    choices: vec!["16".into(), "32".into(), "64".into(), "128".into()],
                },
            ),
            SearchSpace::dim("learning_rate", DimKind::LogUniform { lo: 1e-4, hi: 1e-1 }),
        ],
        Family::RandomForest => vec![
            SearchSpace::dim("trees", DimKind::IntRange { lo: 50, hi: 500 }),
            SearchSpace::dim(
                "max_depth",
                DimKind::Categorical {
                    choices: vec![
                        "4".into(),
                        "8".into(),
                        "12".into(),
                        "16".into(),
                        "24".into(),
                        "32".into(),
                        "none".into(),
                    ],
                },
            ),
            SearchSpace::dim(
                "max_features",
                DimKind::Categorical {
                    choices: vec!["sqrt".into(), "half".into(), "all".into()],
                },
            ),
        ],
        Family::AdaBoost => vec![
            SearchSpace::dim("stages", DimKind::IntRange { lo: 50, hi: 500 }),
            SearchSpace::dim("learning_rate", DimKind::Uniform { lo: 0.01, hi: 1.0 }),
        ],
        Family::GradientBoost => vec![
            SearchSpace::dim("shrinkage", DimKind::Uniform { lo: 0.01, hi: 0.3 }),
            SearchSpace::dim("depth", DimKind::IntRange { lo: 2, hi: 8 }),
            SearchSpace::dim("rounds", DimKind::IntRange { lo: 50, hi: 500 }),
            SearchSpace::dim("subsample", DimKind::Uniform { lo: 0.5, hi: 1.0 }),
        ],
    };
    SearchSpace { dims }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    TpeLite,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "random" => Ok(Strategy::Random),
            "tpe_lite" | "tpe" => Ok(Strategy::TpeLite),
            other => Err(Error::Tuning(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trial {
    pub params: Params,
    /// Objective value; non-finite objectives record as failed trials.
    pub score: f64,
    pub failed: bool,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialLog {
    pub trials: Vec<Trial>,
    pub best_index: usize,
}

impl TrialLog {
    pub fn best(&self) -> &Trial {
        &self.trials[self.best_index]
    }

    /// One JSON object per trial.
    pub fn to_jsonl(&self, family: Family) -> String {
        self.trials
            .iter()
            .map(|t| {
                serde_json::json!({
                    "family": family.name(),
                    "params": t.params,
                    "score": if t.failed { serde_json::Value::Null } else { t.score.into() },
                    "duration_s": t.duration_s,
                })
                .to_string()
                    + "\n"
            })
            .collect()
    }
}

fn sample_dim(dim: &Dim, rng: &mut impl Rng) -> ParamValue {
    match &dim.kind {
        DimKind::Uniform { lo, hi } => ParamValue::Real(rng.gen_range(*lo..=*hi)),
        DimKind::LogUniform { lo, hi } => {
            ParamValue::Real(rng.gen_range(lo.ln()..=hi.ln()).exp())
        }
        DimKind::IntRange { lo, hi } => ParamValue::Int(rng.gen_range(*lo..=*hi)),
        DimKind::Categorical { choices } => {
            choice_to_value(&choices[rng.gen_range(0..choices.len())])
        }
    }
}

fn sample_point(space: &SearchSpace, rng: &mut impl Rng) -> Params {
    space
        .dims
        .iter()
        .map(|d| (d.name.clone(), sample_dim(d, rng)))
        .collect()
}

const TPE_GAMMA: f64 = 0.25;
const TPE_CANDIDATES: usize = 24;

/// Per-dimension Gaussian (or frequency) kernel density over a trial subset.
fn log_density(space: &SearchSpace, group: &[&Trial], point: &Params) -> f64 {
    if group.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mut total = 0.0;
    for dim in &space.dims {
        let value = &point[&dim.name];
        let density = match &dim.kind {
            DimKind::Categorical { choices } => {
                // Laplace-smoothed frequency
                let hits = group
                    .iter()
                    .filter(|t| t.params.get(&dim.name) == Some(value))
                    .count() as f64;
                (hits + 1.0) / (group.len() as f64 + choices.len() as f64)
            }
            DimKind::IntRange { lo, hi } => {
                let x = value.as_i64().unwrap() as f64;
                let bw = (((hi - lo) as f64) / (group.len() as f64).sqrt()).max(1.0);
                kernel_mean(group, &dim.name, x, bw, false)
            }
            DimKind::Uniform { lo, hi } => {
                let x = value.as_f64().unwrap();
                let bw = ((hi - lo) / (group.len() as f64).sqrt()).max(1e-12);
                kernel_mean(group, &dim.name, x, bw, false)
            }
            DimKind::LogUniform { lo, hi } => {
                let x = value.as_f64().unwrap().ln();
                let bw = ((hi.ln() - lo.ln()) / (group.len() as f64).sqrt()).max(1e-12);
                kernel_mean(group, &dim.name, x, bw, true)
            }
        };
        total += density.max(1e-300).ln();
    }
    total
}

fn kernel_mean(group: &[&Trial], name: &str, x: f64, bandwidth: f64, log_space: bool) -> f64 {
    let norm = 1.0 / (bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let sum: f64 = group
        .iter()
        .map(|t| {
            let mut c = t.params[name].as_f64().unwrap();
            if log_space {
                c = c.ln();
            }
            let z = (x - c) / bandwidth;
            norm * (-0.5 * z * z).exp()
        })
        .sum();
    sum / group.len() as f64
}

fn mutate_from_good(
    space: &SearchSpace,
    good: &[&Trial],
    rng: &mut impl Rng,
) -> Params {
    space
        .dims
        .iter()
        .map(|dim| {
            let parent = good[rng.gen_range(0..good.len())];
            let value = match &dim.kind {
                DimKind::Categorical { choices } => {
                    if rng.gen_bool(0.8) {
                        parent.params[&dim.name].clone()
                    } else {
                        choice_to_value(&choices[rng.gen_range(0..choices.len())])
                    }
                }
                DimKind::IntRange { lo, hi } => {
                    let bw = (((hi - lo) as f64) / (good.len() as f64).sqrt()).max(1.0);
                    let base = parent.params[&dim.name].as_i64().unwrap() as f64;
                    let x = (base + gaussian(rng) * bw).round() as i64;
                    ParamValue::Int(x.clamp(*lo, *hi))
                }
                DimKind::Uniform { lo, hi } => {
                    let bw = ((hi - lo) / (good.len() as f64).sqrt()).max(1e-12);
                    let base = parent.params[&dim.name].as_f64().unwrap();
                    ParamValue::Real((base + gaussian(rng) * bw).clamp(*lo, *hi))
                }
                DimKind::LogUniform { lo, hi } => {
                    let bw = ((hi.ln() - lo.ln()) / (good.len() as f64).sqrt()).max(1e-12);
                    let base = parent.params[&dim.name].as_f64().unwrap().ln();
                    ParamValue::Real((base + gaussian(rng) * bw).exp().clamp(*lo, *hi))
                }
            };
            (dim.name.clone(), value)
        })
        .collect()
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Run exactly `budget` objective evaluations and return the trial log.
pub fn search<F>(
    space: &SearchSpace,
    budget: usize,
    mut objective: F,
    seed: u64,
    strategy: Strategy,
) -> Result<TrialLog>
where
    F: FnMut(&Params) -> f64,
{
    if budget == 0 {
        return Err(Error::Tuning("budget must be at least 1".into()));
    }
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_startup = match strategy {
        Strategy::Random => budget,
        Strategy::TpeLite => (budget / 5).max(10),
    };
    let mut trials: Vec<Trial> = Vec::with_capacity(budget);
    for t in 0..budget {
        let params = if t < n_startup {
            sample_point(space, &mut rng)
        } else {
            let mut finished: Vec<&Trial> = trials.iter().filter(|t| !t.failed).collect();
            if finished.is_empty() {
                sample_point(space, &mut rng)
            } else {
                finished.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
                let n_good = ((finished.len() as f64 * TPE_GAMMA).ceil() as usize)
                    .clamp(1, finished.len());
                let (good, bad) = finished.split_at(n_good);
                let mut best_candidate: Option<(f64, Params)> = None;
                for _ in 0..TPE_CANDIDATES {
                    let cand = mutate_from_good(space, good, &mut rng);
                    let ratio = log_density(space, good, &cand)
                        - if bad.is_empty() { 0.0 } else { log_density(space, bad, &cand) };
                    if best_candidate.as_ref().is_none_or(|(r, _)| ratio > *r) {
                        best_candidate = Some((ratio, cand));
                    }
                }
                best_candidate.unwrap().1
            }
        };
        let started = std::time::Instant::now();
        let raw = objective(&params);
        let duration_s = started.elapsed().as_secs_f64();
        let failed = !raw.is_finite();
        trials.push(Trial {
            params,
            score: if failed { f64::NEG_INFINITY } else { raw },
            failed,
            duration_s,
        });
    }
    let best_index = trials
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.failed)
        .max_by(|a, b| {
            a.1.score
                .partial_cmp(&b.1.score)
                .unwrap()
                .then(b.0.cmp(&a.0)) // ties go to the earliest trial
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Tuning("every trial failed".into()))?;
    Ok(TrialLog { trials, best_index })
}
