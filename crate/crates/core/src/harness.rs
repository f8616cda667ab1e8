//! k-fold cross-validation, multi-realization averaging and parameter sweeps.
//!
//! Work is parallel over folds and users, but every reduction walks its
//! inputs in a fixed order, so reports are bit-identical for any thread
//! count.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{RatingGraph, ResourceVector};
use crate::ingest::Dataset;
use crate::metrics::{
    self, hamming_distance, pair_similarity_prefix, reduce_auc, reduce_ranking_score, user_auc,
    user_degree_sum, user_hits, user_precision_recall_f1, user_rank_terms, EvaluationContext, Metric,
    MetricError, MetricValue,
};
use crate::recommend::{top_l, Method, MethodConfig, RecommendError, RecommendationList};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 2018;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_REALIZATIONS: usize = 20;
pub const DEFAULT_LIST_LENGTH: usize = 10;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot split {links} links into {folds} folds")]
    TooFewLinks { links: usize, folds: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("fold {fold} out of range for a {folds}-fold plan")]
    FoldOutOfRange { fold: usize, folds: usize },
    #[error("split plan covers {plan} links but the graph has {graph}")]
    PlanMismatch { plan: usize, graph: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Assignment of every rating link (in user-major order) to a fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    fold_of_link: Vec<usize>,
    folds: usize,
    seed: u64,
}

impl SplitPlan {
    /// A plan with an explicit assignment, e.g. to hold out chosen links.
    pub fn from_assignment(fold_of_link: Vec<usize>, folds: usize) -> Result<Self, HarnessError> {
        if folds < 2 {
            return Err(HarnessError::InvalidConfig(format!("need at least 2 folds, got {folds}")));
        }
        if let Some(&bad) = fold_of_link.iter().find(|&&f| f >= folds) {
            return Err(HarnessError::FoldOutOfRange { fold: bad, folds });
        }
        Ok(Self {
            fold_of_link,
            folds,
            seed: 0,
        })
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of_link(&self) -> &[usize] {
        &self.fold_of_link
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &f in &self.fold_of_link {
            sizes[f] += 1;
        }
        sizes
    }

    /// Training graph (all other folds) and held-out links of `fold`.
    pub fn partition(&self, g: &RatingGraph, fold: usize) -> Result<(RatingGraph, Vec<(usize, usize)>), HarnessError> {
        if fold >= self.folds {
            return Err(HarnessError::FoldOutOfRange {
                fold,
                folds: self.folds,
            });
        }
        if self.fold_of_link.len() != g.links() {
            return Err(HarnessError::PlanMismatch {
                plan: self.fold_of_link.len(),
                graph: g.links(),
            });
        }
        let mut rows = vec![Vec::new(); g.users()];
        let mut test = Vec::new();
        for ((u, o), &f) in g.iter_links().zip(&self.fold_of_link) {
            if f == fold {
                test.push((u, o));
            } else {
                rows[u].push(o);
            }
        }
        Ok((RatingGraph::from_user_adjacency(rows, g.objects()), test))
    }
}

/// Shuffles the links with a seeded ChaCha20 stream and deals them round-robin into `folds` folds.
pub fn make_split(g: &RatingGraph, folds: usize, seed: u64) -> Result<SplitPlan, HarnessError> {
    if folds < 2 {
        return Err(HarnessError::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    let links = g.links();
    if links < folds {
        return Err(HarnessError::TooFewLinks { links, folds });
    }
    let mut order: Vec<usize> = (0..links).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut fold_of_link = vec![0; links];
    for (position, &link) in order.iter().enumerate() {
        fold_of_link[link] = position % folds;
    }
    Ok(SplitPlan {
        fold_of_link,
        folds,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub methods: Vec<MethodConfig>,
    pub list_lengths: Vec<usize>,
    pub theta_values: Vec<f64>,
    pub folds: usize,
    pub realizations: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL
                .into_iter()
                .map(|m| MethodConfig {
                    method: m,
                    theta: if m == Method::CosRaT { 0.70 } else { 1.0 },
                })
                .collect(),
            list_lengths: vec![DEFAULT_LIST_LENGTH],
            theta_values: theta_grid(0.0, 1.0, 0.05).expect("valid default grid"),
            folds: DEFAULT_FOLDS,
            realizations: DEFAULT_REALIZATIONS,
            seed: DEFAULT_SEED,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.folds < 2 {
            return bad(format!("need at least 2 folds, got {}", self.folds));
        }
        if self.realizations < 1 {
            return bad("need at least 1 realization".into());
        }
        if self.methods.is_empty() {
            return bad("no methods given".into());
        }
        if self.list_lengths.is_empty() || self.list_lengths.contains(&0) {
            return bad("list lengths must be a nonempty set of positive integers".into());
        }
        for m in &self.methods {
            MethodConfig::new(m.method, m.theta)?;
        }
        for &t in &self.theta_values {
            if !(0.0..=1.0).contains(&t) {
                return Err(RecommendError::ThetaOutOfRange(t).into());
            }
        }
        Ok(())
    }

    fn max_list_length(&self) -> usize {
        self.list_lengths.iter().copied().max().unwrap_or(0)
    }
}

/// Evenly spaced values `start, start + step, ..., end` (inclusive, rounded to 1e-9).
pub fn theta_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>, HarnessError> {
    let valid = step > 0.0 && end >= start && start.is_finite() && end.is_finite();
    if !valid {
        return Err(HarnessError::InvalidConfig(format!("bad grid {start}:{end}:{step}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

/// One metric value from one fold. `value` is `None` when undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldRow {
    pub method: MethodConfig,
    pub metric: Metric,
    pub list_len: Option<usize>,
    pub value: Option<f64>,
    pub evaluable_users: usize,
}

/// Everything the metrics need from one user's score vector.
struct UserOutcome {
    auc: Option<f64>,
    rank: (f64, usize),
    list: RecommendationList,
    pair_prefix: Vec<f64>,
}

fn row(method: MethodConfig, metric: Metric, list_len: Option<usize>, v: Result<MetricValue, MetricError>) -> FoldRow {
    match v {
        Ok(v) => FoldRow {
            method,
            metric,
            list_len,
            value: Some(v.value),
            evaluable_users: v.evaluable_users,
        },
        Err(_) => FoldRow {
            method,
            metric,
            list_len,
            value: None,
            evaluable_users: 0,
        },
    }
}

/// Top-`max_len` lists of every evaluable user for each method, in user order.
fn score_users<F, T>(
    d: &Dataset,
    ctx: &EvaluationContext<'_>,
    methods: &[MethodConfig],
    users: &[usize],
    per_user: F,
) -> Vec<Vec<T>>
where
    F: Fn(usize, &ResourceVector) -> T + Sync,
    T: Send,
{
    let train = ctx.train();
    users
        .par_iter()
        .map(|&u| {
            methods
                .iter()
                .map(|m| {
                    let scores = m.score(train, &d.trust_graph, u);
                    per_user(u, &scores)
                })
                .collect()
        })
        .collect()
}

/// Evaluates every configured method on one fold.
///
/// Rows come out per method as AUC, RS, then P, R, F1, H, I, N for each list
/// length in configuration order.
pub fn run_fold(d: &Dataset, plan: &SplitPlan, fold: usize, cfg: &ExperimentConfig) -> Result<Vec<FoldRow>, HarnessError> {
    cfg.validate()?;
    let (train, test) = plan.partition(&d.rating_graph, fold)?;
    let ctx = EvaluationContext::new(&train, &test)?;
    let users = ctx.evaluable_users();
    let max_len = cfg.max_list_length();
    let outcomes = score_users(d, &ctx, &cfg.methods, &users, |u, scores| {
        let collected = train.user_objects(u);
        let probes = ctx.probes(u);
        let list = top_l(u, scores, collected, max_len);
        let pair_prefix = if max_len >= 2 {
            pair_similarity_prefix(&train, &list.items)
        } else {
            Vec::new()
        };
        UserOutcome {
            auc: user_auc(scores.values(), collected, probes),
            rank: user_rank_terms(scores.values(), collected, probes),
            list,
            pair_prefix,
        }
    });

    let mut rows = Vec::new();
    for (mi, &method) in cfg.methods.iter().enumerate() {
        let per_method = || outcomes.iter().map(|o| &o[mi]);
        rows.push(row(method, Metric::Auc, None, reduce_auc(per_method().map(|o| o.auc))));
        rows.push(row(
            method,
            Metric::RankingScore,
            None,
            reduce_ranking_score(per_method().map(|o| o.rank)),
        ));
        let lists: Vec<RecommendationList> = per_method().map(|o| o.list.clone()).collect();
        for &len in &cfg.list_lengths {
            let prf: Vec<(f64, f64, f64)> = per_method()
                .map(|o| {
                    let probes = ctx.probes(o.list.user);
                    user_precision_recall_f1(user_hits(&o.list.items, probes, len), probes.len(), len)
                })
                .collect();
            let l = Some(len);
            rows.push(row(method, Metric::Precision, l, metrics::mean_value(Metric::Precision, l, prf.iter().map(|v| v.0))));
            rows.push(row(method, Metric::Recall, l, metrics::mean_value(Metric::Recall, l, prf.iter().map(|v| v.1))));
            rows.push(row(method, Metric::F1, l, metrics::mean_value(Metric::F1, l, prf.iter().map(|v| v.2))));
            rows.push(row(method, Metric::Hamming, l, hamming_distance(&lists, len)));
            let intra = if len < 2 {
                Err(MetricError::ListTooShort {
                    metric: Metric::IntraSimilarity,
                    min: 2,
                    len,
                })
            } else {
                let norm = (len * (len - 1)) as f64;
                metrics::mean_value(
                    Metric::IntraSimilarity,
                    l,
                    per_method().map(|o| o.pair_prefix[len.min(o.list.len())] / norm),
                )
            };
            rows.push(row(method, Metric::IntraSimilarity, l, intra));
            rows.push(row(
                method,
                Metric::Popularity,
                l,
                metrics::mean_value(
                    Metric::Popularity,
                    l,
                    per_method().map(|o| user_degree_sum(&train, &o.list.items, len) / len as f64),
                ),
            ));
        }
    }
    Ok(rows)
}

/// Raw fold rows indexed as `[realization][fold][row]`.
pub type RawResults = Vec<Vec<Vec<FoldRow>>>;

/// Runs every fold of every realization; realization `r` splits with seed `seed + r`.
pub fn run_experiment_raw(d: &Dataset, cfg: &ExperimentConfig) -> Result<RawResults, HarnessError> {
    cfg.validate()?;
    (0..cfg.realizations)
        .map(|r| {
            let plan = make_split(&d.rating_graph, cfg.folds, cfg.seed.wrapping_add(r as u64))?;
            (0..cfg.folds)
                .into_par_iter()
                .map(|f| run_fold(d, &plan, f, cfg))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

/// One aggregated line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub metric: Metric,
    #[serde(rename = "L")]
    pub list_len: Option<usize>,
    pub theta: Option<f64>,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub evaluable_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Averages folds within each realization, then takes mean and standard
/// error across realizations. Undefined fold values are skipped.
pub fn aggregate(dataset: &str, cfg: &ExperimentConfig, raw: &RawResults) -> MetricsReport {
    let template = raw.first().and_then(|r| r.first()).cloned().unwrap_or_default();
    let rows = template
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut per_realization = Vec::new();
            let mut users = Vec::new();
            for realization in raw {
                let defined: Vec<&FoldRow> = realization.iter().map(|f| &f[i]).filter(|r| r.value.is_some()).collect();
                if defined.is_empty() {
                    continue;
                }
                let n = defined.len() as f64;
                per_realization.push(defined.iter().map(|r| r.value.unwrap()).sum::<f64>() / n);
                users.push(defined.iter().map(|r| r.evaluable_users as f64).sum::<f64>() / n);
            }
            let (mean, stderr, evaluable_users) = if per_realization.is_empty() {
                (None, None, 0)
            } else {
                let (m, s) = mean_and_stderr(&per_realization);
                let u = users.iter().sum::<f64>() / users.len() as f64;
                (Some(m), Some(s), u.round() as usize)
            };
            ReportRow {
                method: t.method.method,
                metric: t.metric,
                list_len: t.list_len,
                theta: t.method.uses_theta().then_some(t.method.theta),
                mean,
                stderr,
                evaluable_users,
            }
        })
        .collect();
    MetricsReport {
        dataset: dataset.to_string(),
        config: cfg.clone(),
        rows,
    }
}

pub fn run_experiment(d: &Dataset, dataset_name: &str, cfg: &ExperimentConfig) -> Result<MetricsReport, HarnessError> {
    let raw = run_experiment_raw(d, cfg)?;
    Ok(aggregate(dataset_name, cfg, &raw))
}

impl MetricsReport {
    pub fn find(&self, method: Method, metric: Metric, list_len: Option<usize>, theta: Option<f64>) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.method == method
                && r.metric == metric
                && r.list_len == list_len
                && (theta.is_none() || r.theta == theta)
        })
    }

    /// Tidy CSV: `method,metric,L,theta,mean,stderr,evaluable_users`; missing values are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), HarnessError> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Best theta for one metric (and list length).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaOptimum {
    pub metric: Metric,
    #[serde(rename = "L")]
    pub list_len: Option<usize>,
    pub theta: f64,
    pub value: f64,
}

/// Optimal theta averaged over list lengths for one metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricThetaMean {
    pub metric: Metric,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSummary {
    pub optima: Vec<ThetaOptimum>,
    pub per_metric: Vec<MetricThetaMean>,
    /// Mean of the per-metric optimal thetas.
    pub overall: f64,
}

const ACCURACY_METRICS: [Metric; 5] = [
    Metric::Auc,
    Metric::RankingScore,
    Metric::Precision,
    Metric::Recall,
    Metric::F1,
];

/// Finds the argbest theta per accuracy metric; ties keep the smallest theta.
pub fn summarize_theta(report: &MetricsReport) -> ThetaSummary {
    let mut optima = Vec::new();
    let mut per_metric = Vec::new();
    for metric in ACCURACY_METRICS {
        let lens: Vec<Option<usize>> = if metric.depends_on_length() {
            report.config.list_lengths.iter().map(|&l| Some(l)).collect()
        } else {
            vec![None]
        };
        let mut thetas = Vec::new();
        for len in lens {
            let mut best: Option<(f64, f64)> = None;
            for r in report.rows.iter().filter(|r| r.metric == metric && r.list_len == len) {
                let (Some(theta), Some(v)) = (r.theta, r.mean) else { continue };
                let better = match best {
                    None => true,
                    Some((_, b)) if metric.higher_is_better() => v > b,
                    Some((_, b)) => v < b,
                };
                if better {
                    best = Some((theta, v));
                }
            }
            if let Some((theta, value)) = best {
                thetas.push(theta);
                optima.push(ThetaOptimum {
                    metric,
                    list_len: len,
                    theta,
                    value,
                });
            }
        }
        if !thetas.is_empty() {
            let (mean, stderr) = mean_and_stderr(&thetas);
            per_metric.push(MetricThetaMean { metric, mean, stderr });
        }
    }
    let overall = if per_metric.is_empty() {
        f64::NAN
    } else {
        per_metric.iter().map(|m| m.mean).sum::<f64>() / per_metric.len() as f64
    };
    ThetaSummary {
        optima,
        per_metric,
        overall,
    }
}

/// CosRA+T over every theta in `cfg.theta_values`, all sharing the same splits.
pub fn sweep_theta(d: &Dataset, dataset_name: &str, cfg: &ExperimentConfig) -> Result<(MetricsReport, ThetaSummary), HarnessError> {
    if cfg.theta_values.is_empty() {
        return Err(HarnessError::InvalidConfig("empty theta grid".into()));
    }
    let methods = cfg
        .theta_values
        .iter()
        .map(|&t| MethodConfig::cosra_t(t))
        .collect::<Result<Vec<_>, _>>()?;
    let sweep_cfg = ExperimentConfig {
        methods,
        ..cfg.clone()
    };
    let report = run_experiment(d, dataset_name, &sweep_cfg)?;
    let summary = summarize_theta(&report);
    Ok((report, summary))
}

/// All configured methods over the list lengths in `cfg.list_lengths`.
///
/// Scores are computed once per user and method; every length is read off
/// the same ranked list.
pub fn sweep_length(d: &Dataset, dataset_name: &str, cfg: &ExperimentConfig) -> Result<MetricsReport, HarnessError> {
    let mut cfg = cfg.clone();
    cfg.list_lengths.sort_unstable();
    cfg.list_lengths.dedup();
    run_experiment(d, dataset_name, &cfg)
}

/// `(degree, count)` pairs of training degrees over all top-L lists of one
/// fold (fold 0 of the split drawn with `seed`), sorted by degree.
pub fn recommended_degree_distribution(
    d: &Dataset,
    method: MethodConfig,
    len: usize,
    folds: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>, HarnessError> {
    if len == 0 {
        return Err(HarnessError::InvalidConfig("list length must be positive".into()));
    }
    MethodConfig::new(method.method, method.theta)?;
    let plan = make_split(&d.rating_graph, folds, seed)?;
    let (train, test) = plan.partition(&d.rating_graph, 0)?;
    let ctx = EvaluationContext::new(&train, &test)?;
    let users = ctx.evaluable_users();
    let lists = score_users(d, &ctx, &[method], &users, |u, scores| {
        top_l(u, scores, train.user_objects(u), len).items
    });
    let mut counts = std::collections::BTreeMap::new();
    for items in lists.iter().flatten() {
        for &o in items {
            *counts.entry(train.object_degree(o)).or_insert(0usize) += 1;
        }
    }
    Ok(counts.into_iter().collect())
}
