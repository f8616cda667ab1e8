//! Scoring kernels and top-L extraction.
//!
//! Every kernel returns the final resource held by each object for one target
//! user. Diffusion kernels run as two matrix-free sweeps over the adjacency
//! lists (objects -> users -> objects).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{RatingGraph, ResourceVector, TrustGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecommendError {
    #[error("theta must lie in [0, 1], got {0}")]
    ThetaOutOfRange(f64),
    #[error("unknown method '{0}' (expected one of GR, UCF, HC, MD, CosRA, CosRA_T)")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "GR")]
    Gr,
    #[serde(rename = "UCF")]
    Ucf,
    #[serde(rename = "HC")]
    Hc,
    #[serde(rename = "MD")]
    Md,
    #[serde(rename = "CosRA")]
    CosRa,
    #[serde(rename = "CosRA_T")]
    CosRaT,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Gr,
        Method::Ucf,
        Method::Hc,
        Method::Md,
        Method::CosRa,
        Method::CosRaT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gr => "GR",
            Method::Ucf => "UCF",
            Method::Hc => "HC",
            Method::Md => "MD",
            Method::CosRa => "CosRA",
            Method::CosRaT => "CosRA_T",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = RecommendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "GR" => Ok(Method::Gr),
            "UCF" => Ok(Method::Ucf),
            "HC" => Ok(Method::Hc),
            "MD" => Ok(Method::Md),
            "CosRA" => Ok(Method::CosRa),
            "CosRA_T" | "CosRA+T" => Ok(Method::CosRaT),
            other => Err(RecommendError::UnknownMethod(other.to_string())),
        }
    }
}

/// A method together with its trust-scaling exponent.
///
/// `theta` only affects [`Method::CosRaT`]; it is still validated for every method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    pub theta: f64,
}

impl MethodConfig {
    pub fn new(method: Method, theta: f64) -> Result<Self, RecommendError> {
        check_theta(theta)?;
        Ok(Self { method, theta })
    }

    /// A method without a tunable parameter (theta fixed at 1).
    pub fn plain(method: Method) -> Self {
        Self { method, theta: 1.0 }
    }

    pub fn cosra_t(theta: f64) -> Result<Self, RecommendError> {
        Self::new(Method::CosRaT, theta)
    }

    pub fn uses_theta(&self) -> bool {
        self.method == Method::CosRaT
    }

    /// Scores every object for `user`.
    pub fn score(&self, g: &RatingGraph, trust: &TrustGraph, user: usize) -> ResourceVector {
        match self.method {
            Method::Gr => score_gr(g),
            Method::Ucf => score_ucf(g, user),
            Method::Hc => score_diffusion(g, user, Diffusion::HeatConduction),
            Method::Md => score_diffusion(g, user, Diffusion::MassDiffusion),
            Method::CosRa => score_cosra(g, user),
            Method::CosRaT => cosra_sweeps(g, user, trust.trusted_by(user), self.theta),
        }
    }
}

impl fmt::Display for MethodConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.uses_theta() {
            write!(f, "{}(theta={})", self.method, self.theta)
        } else {
            write!(f, "{}", self.method)
        }
    }
}

fn check_theta(theta: f64) -> Result<(), RecommendError> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(RecommendError::ThetaOutOfRange(theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diffusion {
    MassDiffusion,
    HeatConduction,
}

/// Global ranking: every object scores its degree.
pub fn score_gr(g: &RatingGraph) -> ResourceVector {
    g.object_degrees()
        .into_iter()
        .map(|k| k as f64)
        .collect::<Vec<_>>()
        .into()
}

/// User-based collaborative filtering with cosine user similarity.
pub fn score_ucf(g: &RatingGraph, user: usize) -> ResourceVector {
    let mut scores = vec![0.0; g.objects()];
    let ki = g.user_degree(user);
    if ki == 0 {
        return scores.into();
    }
    // overlap[j] = number of objects shared with the target
    let mut overlap = vec![0usize; g.users()];
    for &alpha in g.user_objects(user) {
        for &j in g.object_users(alpha) {
            overlap[j] += 1;
        }
    }
    overlap[user] = 0;
    for (j, &common) in overlap.iter().enumerate() {
        if common == 0 {
            continue;
        }
        let s = common as f64 / ((ki * g.user_degree(j)) as f64).sqrt();
        for &alpha in g.user_objects(j) {
            scores[alpha] += s;
        }
    }
    scores.into()
}

/// MD or HC: one object -> user -> object round trip from the user's collection.
pub fn score_diffusion(g: &RatingGraph, user: usize, kind: Diffusion) -> ResourceVector {
    let mut scores = vec![0.0; g.objects()];
    let start = g.user_objects(user);
    if start.is_empty() {
        return scores.into();
    }
    let mut received = vec![0.0; g.users()];
    match kind {
        Diffusion::MassDiffusion => {
            // each object splits its unit evenly among its collectors
            for &alpha in start {
                let share = 1.0 / g.object_degree(alpha) as f64;
                for &j in g.object_users(alpha) {
                    received[j] += share;
                }
            }
            for (j, &r) in received.iter().enumerate() {
                if r == 0.0 {
                    continue;
                }
                let share = r / g.user_degree(j) as f64;
                for &beta in g.user_objects(j) {
                    scores[beta] += share;
                }
            }
        }
        Diffusion::HeatConduction => {
            // users and then objects take the mean over their neighbours
            for &alpha in start {
                for &j in g.object_users(alpha) {
                    received[j] += 1.0;
                }
            }
            for (j, &r) in received.iter().enumerate() {
                if r == 0.0 {
                    continue;
                }
                let temp = r / g.user_degree(j) as f64;
                for &beta in g.user_objects(j) {
                    scores[beta] += temp;
                }
            }
            for (beta, s) in scores.iter_mut().enumerate() {
                if *s != 0.0 {
                    *s /= g.object_degree(beta) as f64;
                }
            }
        }
    }
    scores.into()
}

/// CosRA: `f' = S^CosRA f` with `f` the user's collection indicator.
pub fn score_cosra(g: &RatingGraph, user: usize) -> ResourceVector {
    cosra_sweeps(g, user, &[], 1.0)
}

/// CosRA+T: CosRA where the user-level resource of every user trusted by the
/// target is raised to `theta` before flowing back to objects.
pub fn score_cosra_t(
    g: &RatingGraph,
    trust: &TrustGraph,
    user: usize,
    theta: f64,
) -> Result<ResourceVector, RecommendError> {
    check_theta(theta)?;
    Ok(cosra_sweeps(g, user, trust.trusted_by(user), theta))
}

/// Resource each user holds after the first CosRA sweep.
pub fn cosra_user_resource(g: &RatingGraph, user: usize) -> Vec<f64> {
    let mut received = vec![0.0; g.users()];
    for &alpha in g.user_objects(user) {
        let ka = g.object_degree(alpha) as f64;
        for &j in g.object_users(alpha) {
            received[j] += 1.0 / (g.user_degree(j) as f64 * ka).sqrt();
        }
    }
    received
}

/// Trust scaling of a user-level resource. `0^theta` is `0` for every theta.
#[inline]
pub fn scale_trusted(resource: f64, theta: f64) -> f64 {
    if resource == 0.0 || theta == 1.0 {
        resource
    } else {
        resource.powf(theta)
    }
}

fn cosra_sweeps(g: &RatingGraph, user: usize, trusted: &[usize], theta: f64) -> ResourceVector {
    let mut scores = vec![0.0; g.objects()];
    if g.user_degree(user) == 0 {
        return scores.into();
    }
    let mut received = cosra_user_resource(g, user);
    for &j in trusted {
        received[j] = scale_trusted(received[j], theta);
    }
    for (j, &r) in received.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        let kj = g.user_degree(j) as f64;
        for &beta in g.user_objects(j) {
            scores[beta] += r / (kj * g.object_degree(beta) as f64).sqrt();
        }
    }
    scores.into()
}

/// Ranked top-L uncollected objects for one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user: usize,
    pub items: Vec<usize>,
    pub scores: Vec<f64>,
}

impl RecommendationList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The first `len` entries.
    pub fn truncated(&self, len: usize) -> RecommendationList {
        let len = len.min(self.items.len());
        RecommendationList {
            user: self.user,
            items: self.items[..len].to_vec(),
            scores: self.scores[..len].to_vec(),
        }
    }
}

/// Descending score, then ascending object index.
#[inline]
pub(crate) fn rank_order(a: (usize, f64), b: (usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// The `len` best uncollected objects. `collected` must be sorted.
pub fn top_l(user: usize, scores: &ResourceVector, collected: &[usize], len: usize) -> RecommendationList {
    let mut candidates: Vec<(usize, f64)> = Vec::with_capacity(scores.len().saturating_sub(collected.len()));
    let mut skip = collected.iter().peekable();
    for (object, &score) in scores.values().iter().enumerate() {
        if skip.peek() == Some(&&object) {
            skip.next();
            continue;
        }
        candidates.push((object, score));
    }
    if len < candidates.len() {
        if len == 0 {
            candidates.clear();
        } else {
            candidates.select_nth_unstable_by(len - 1, |a, b| rank_order(*a, *b));
            candidates.truncate(len);
        }
    }
    candidates.sort_unstable_by(|a, b| rank_order(*a, *b));
    RecommendationList {
        user,
        items: candidates.iter().map(|c| c.0).collect(),
        scores: candidates.iter().map(|c| c.1).collect(),
    }
}
