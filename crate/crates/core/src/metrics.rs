//! Accuracy, diversity and novelty metrics for top-L recommendation.
//!
//! Per-user quantities are exposed separately (`user_*`) so callers that
//! stream users one at a time can reduce them without keeping every score
//! vector alive. The aggregate functions are thin reductions over them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{cosine_object_similarity, RatingGraph, ResourceVector};
use crate::recommend::RecommendationList;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("{metric} is undefined: {reason}")]
    Undefined { metric: Metric, reason: &'static str },
    #[error("{metric} needs a list length of at least {min}, got {len}")]
    ListTooShort { metric: Metric, min: usize, len: usize },
    #[error("probe link ({user}, {object}) is {problem}")]
    InvalidProbe {
        user: usize,
        object: usize,
        problem: &'static str,
    },
    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "AUC")]
    Auc,
    #[serde(rename = "RS")]
    RankingScore,
    #[serde(rename = "P")]
    Precision,
    #[serde(rename = "R")]
    Recall,
    #[serde(rename = "F1")]
    F1,
    #[serde(rename = "H")]
    Hamming,
    #[serde(rename = "I")]
    IntraSimilarity,
    #[serde(rename = "N")]
    Popularity,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Auc,
        Metric::RankingScore,
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
        Metric::Hamming,
        Metric::IntraSimilarity,
        Metric::Popularity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Auc => "AUC",
            Metric::RankingScore => "RS",
            Metric::Precision => "P",
            Metric::Recall => "R",
            Metric::F1 => "F1",
            Metric::Hamming => "H",
            Metric::IntraSimilarity => "I",
            Metric::Popularity => "N",
        }
    }

    /// Whether the metric depends on the recommendation list length.
    pub fn depends_on_length(self) -> bool {
        !matches!(self, Metric::Auc | Metric::RankingScore)
    }

    /// True when larger values are better.
    pub fn higher_is_better(self) -> bool {
        !matches!(
            self,
            Metric::RankingScore | Metric::IntraSimilarity | Metric::Popularity
        )
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| MetricError::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric: Metric,
    pub list_len: Option<usize>,
    pub value: f64,
    pub evaluable_users: usize,
}

/// Training graph plus the held-out probe objects of every user.
#[derive(Debug, Clone)]
pub struct EvaluationContext<'a> {
    train: &'a RatingGraph,
    probes: Vec<Vec<usize>>,
}

impl<'a> EvaluationContext<'a> {
    /// `probe_links` must be disjoint from the training links.
    pub fn new(train: &'a RatingGraph, probe_links: &[(usize, usize)]) -> Result<Self, MetricError> {
        let mut probes = vec![Vec::new(); train.users()];
        for &(user, object) in probe_links {
            if user >= train.users() || object >= train.objects() {
                return Err(MetricError::InvalidProbe {
                    user,
                    object,
                    problem: "out of range",
                });
            }
            if train.has_link(user, object) {
                return Err(MetricError::InvalidProbe {
                    user,
                    object,
                    problem: "also a training link",
                });
            }
            probes[user].push(object);
        }
        for row in &mut probes {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Self { train, probes })
    }

    pub fn train(&self) -> &'a RatingGraph {
        self.train
    }

    /// Sorted probe objects of `user` (its `D(i)` is the length).
    pub fn probes(&self, user: usize) -> &[usize] {
        &self.probes[user]
    }

    /// `|E^P|`.
    pub fn probe_links(&self) -> usize {
        self.probes.iter().map(Vec::len).sum()
    }

    /// A user is evaluated when it has training links and at least one probe.
    pub fn is_evaluable(&self, user: usize) -> bool {
        self.train.user_degree(user) > 0 && !self.probes[user].is_empty()
    }

    pub fn evaluable_users(&self) -> Vec<usize> {
        (0..self.train.users()).filter(|&u| self.is_evaluable(u)).collect()
    }
}

/// Scores of the objects `user` has not collected, paired with a probe flag.
fn candidates(scores: &[f64], collected: &[usize], probes: &[usize]) -> Vec<(f64, bool)> {
    let mut out = Vec::with_capacity(scores.len().saturating_sub(collected.len()));
    let (mut c, mut p) = (0, 0);
    for (object, &s) in scores.iter().enumerate() {
        if c < collected.len() && collected[c] == object {
            c += 1;
            continue;
        }
        let is_probe = p < probes.len() && probes[p] == object;
        if is_probe {
            p += 1;
        }
        out.push((s, is_probe));
    }
    out
}

/// Exact AUC of one user: probability that a probe object outscores a
/// non-probe uncollected object, ties counting one half.
///
/// `None` if the user has no probe or no non-probe candidate.
pub fn user_auc(scores: &[f64], collected: &[usize], probes: &[usize]) -> Option<f64> {
    let mut cands = candidates(scores, collected, probes);
    let positives = cands.iter().filter(|c| c.1).count();
    let negatives = cands.len() - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    cands.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    // walk tie groups in ascending score order
    let (mut wins, mut ties) = (0u64, 0u64);
    let mut negatives_below = 0u64;
    let mut start = 0;
    while start < cands.len() {
        let mut end = start;
        let (mut pos, mut neg) = (0u64, 0u64);
        while end < cands.len() && cands[end].0 == cands[start].0 {
            if cands[end].1 {
                pos += 1;
            } else {
                neg += 1;
            }
            end += 1;
        }
        wins += pos * negatives_below;
        ties += pos * neg;
        negatives_below += neg;
        start = end;
    }
    Some((wins as f64 + 0.5 * ties as f64) / (positives as f64 * negatives as f64))
}

/// Sum of `p / l_i` over the user's probes, and the number of terms.
///
/// `p` is the 1-based position among the `l_i` uncollected objects in
/// descending score order; a tied group shares the mean of its positions.
pub fn user_rank_terms(scores: &[f64], collected: &[usize], probes: &[usize]) -> (f64, usize) {
    let cands = candidates(scores, collected, probes);
    let total = cands.len();
    if total == 0 || probes.is_empty() {
        return (0.0, 0);
    }
    let mut sorted: Vec<f64> = cands.iter().map(|c| c.0).collect();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut sum = 0.0;
    let mut terms = 0;
    for &(s, is_probe) in &cands {
        if !is_probe {
            continue;
        }
        let above = sorted.partition_point(|&x| x > s);
        let through = sorted.partition_point(|&x| x >= s);
        let position = above as f64 + (through - above + 1) as f64 / 2.0;
        sum += position / total as f64;
        terms += 1;
    }
    (sum, terms)
}

/// Number of probe objects in the first `len` entries of the list.
pub fn user_hits(items: &[usize], probes: &[usize], len: usize) -> usize {
    items
        .iter()
        .take(len)
        .filter(|o| probes.binary_search(o).is_ok())
        .count()
}

/// Per-user precision, recall and F1 at list length `len`.
pub fn user_precision_recall_f1(hits: usize, probes: usize, len: usize) -> (f64, f64, f64) {
    let p = hits as f64 / len as f64;
    let r = hits as f64 / probes as f64;
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// Running sums of ordered-pair cosine similarity over list prefixes:
/// entry `l` covers the first `l` items (so entry 0 and 1 are zero).
pub fn pair_similarity_prefix(g: &RatingGraph, items: &[usize]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(items.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for (l, &alpha) in items.iter().enumerate() {
        let added: f64 = items[..l]
            .iter()
            .map(|&beta| cosine_object_similarity(g, alpha, beta))
            .sum();
        acc += 2.0 * added;
        prefix.push(acc);
    }
    prefix
}

/// Sum of training degrees of the first `len` items.
pub fn user_degree_sum(g: &RatingGraph, items: &[usize], len: usize) -> f64 {
    items
        .iter()
        .take(len)
        .map(|&o| g.object_degree(o) as f64)
        .sum()
}

/// Plain mean of per-user values; undefined when there are none.
pub fn mean_value(
    metric: Metric,
    list_len: Option<usize>,
    values: impl IntoIterator<Item = f64>,
) -> Result<MetricValue, MetricError> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        return Err(MetricError::Undefined {
            metric,
            reason: "no evaluable user",
        });
    }
    Ok(MetricValue {
        metric,
        list_len,
        value: sum / count as f64,
        evaluable_users: count,
    })
}

/// Averages per-user AUC values, skipping users without one.
pub fn reduce_auc(per_user: impl IntoIterator<Item = Option<f64>>) -> Result<MetricValue, MetricError> {
    mean_value(Metric::Auc, None, per_user.into_iter().flatten())
}

/// Combines per-user `(sum, terms)` pairs into the ranking score.
pub fn reduce_ranking_score(
    per_user: impl IntoIterator<Item = (f64, usize)>,
) -> Result<MetricValue, MetricError> {
    let (mut sum, mut terms, mut users) = (0.0, 0usize, 0usize);
    for (s, t) in per_user {
        if t > 0 {
            sum += s;
            terms += t;
            users += 1;
        }
    }
    if terms == 0 {
        return Err(MetricError::Undefined {
            metric: Metric::RankingScore,
            reason: "empty probe set",
        });
    }
    Ok(MetricValue {
        metric: Metric::RankingScore,
        list_len: None,
        value: sum / terms as f64,
        evaluable_users: users,
    })
}

fn score_slice(scores: &[ResourceVector], user: usize) -> &[f64] {
    scores[user].values()
}

/// Mean exact AUC over evaluable users. `scores` is indexed by user.
pub fn auc(ctx: &EvaluationContext<'_>, scores: &[ResourceVector]) -> Result<MetricValue, MetricError> {
    reduce_auc(ctx.evaluable_users().into_iter().map(|u| {
        user_auc(score_slice(scores, u), ctx.train().user_objects(u), ctx.probes(u))
    }))
}

/// Ranking score over all probe links of evaluable users. `scores` is indexed by user.
pub fn ranking_score(
    ctx: &EvaluationContext<'_>,
    scores: &[ResourceVector],
) -> Result<MetricValue, MetricError> {
    reduce_ranking_score(ctx.evaluable_users().into_iter().map(|u| {
        user_rank_terms(score_slice(scores, u), ctx.train().user_objects(u), ctx.probes(u))
    }))
}

fn require_len(metric: Metric, len: usize, min: usize) -> Result<(), MetricError> {
    if len < min {
        Err(MetricError::ListTooShort { metric, min, len })
    } else {
        Ok(())
    }
}

/// Precision, recall and F1 at length `len`, averaged over lists of evaluable users.
pub fn precision_recall_f1(
    ctx: &EvaluationContext<'_>,
    lists: &[RecommendationList],
    len: usize,
) -> Result<(MetricValue, MetricValue, MetricValue), MetricError> {
    require_len(Metric::Precision, len, 1)?;
    let per_user: Vec<(f64, f64, f64)> = lists
        .iter()
        .filter(|l| ctx.is_evaluable(l.user))
        .map(|l| {
            let probes = ctx.probes(l.user);
            user_precision_recall_f1(user_hits(&l.items, probes, len), probes.len(), len)
        })
        .collect();
    Ok((
        mean_value(Metric::Precision, Some(len), per_user.iter().map(|v| v.0))?,
        mean_value(Metric::Recall, Some(len), per_user.iter().map(|v| v.1))?,
        mean_value(Metric::F1, Some(len), per_user.iter().map(|v| v.2))?,
    ))
}

/// Mean `1 - C(i,j)/L` over ordered pairs of distinct users with nonempty lists.
///
/// Uses `sum_{i != j} C(i,j) = sum_a c_a (c_a - 1)` where `c_a` counts the
/// lists containing object `a`.
pub fn hamming_distance(lists: &[RecommendationList], len: usize) -> Result<MetricValue, MetricError> {
    require_len(Metric::Hamming, len, 1)?;
    let mut counts: Vec<u64> = Vec::new();
    let mut users = 0u64;
    for list in lists {
        let items = &list.items[..list.items.len().min(len)];
        if items.is_empty() {
            continue;
        }
        users += 1;
        for &o in items {
            if o >= counts.len() {
                counts.resize(o + 1, 0);
            }
            counts[o] += 1;
        }
    }
    if users < 2 {
        return Err(MetricError::Undefined {
            metric: Metric::Hamming,
            reason: "fewer than two users with lists",
        });
    }
    let overlap: u64 = counts.iter().map(|&c| c * c.saturating_sub(1)).sum();
    let pairs = users * (users - 1);
    Ok(MetricValue {
        metric: Metric::Hamming,
        list_len: Some(len),
        value: 1.0 - overlap as f64 / (len as f64 * pairs as f64),
        evaluable_users: users as usize,
    })
}

/// Mean pairwise object cosine inside each list, normalized by `L (L - 1)`.
pub fn intra_similarity(
    g: &RatingGraph,
    lists: &[RecommendationList],
    len: usize,
) -> Result<MetricValue, MetricError> {
    require_len(Metric::IntraSimilarity, len, 2)?;
    let norm = (len * (len - 1)) as f64;
    mean_value(
        Metric::IntraSimilarity,
        Some(len),
        lists.iter().map(|l| {
            let items = &l.items[..l.items.len().min(len)];
            pair_similarity_prefix(g, items).last().copied().unwrap_or(0.0) / norm
        }),
    )
}

/// Mean training degree of recommended objects, normalized by `L`.
pub fn popularity(g: &RatingGraph, lists: &[RecommendationList], len: usize) -> Result<MetricValue, MetricError> {
    require_len(Metric::Popularity, len, 1)?;
    mean_value(
        Metric::Popularity,
        Some(len),
        lists
            .iter()
            .map(|l| user_degree_sum(g, &l.items, len) / len as f64),
    )
}
