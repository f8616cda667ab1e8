//! Dense brute-force reference implementations. Nothing here calls the
//! library's scoring or metric code; only the graph accessors are shared.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trustrec_core::{RatingGraph, TrustGraph};

pub struct Dense {
    pub a: Vec<Vec<f64>>,
    pub ku: Vec<f64>,
    pub ko: Vec<f64>,
    pub m: usize,
    pub n: usize,
}

impl Dense {
    pub fn new(g: &RatingGraph) -> Self {
        let (m, n) = (g.users(), g.objects());
        let mut a = vec![vec![0.0; n]; m];
        for (u, o) in g.iter_links() {
            a[u][o] = 1.0;
        }
        let ku = (0..m).map(|i| a[i].iter().sum()).collect();
        let ko = (0..n).map(|b| (0..m).map(|i| a[i][b]).sum()).collect();
        Self { a, ku, ko, m, n }
    }

    /// `sum_i a_ia a_ib / k_i`
    fn ra(&self, alpha: usize, beta: usize) -> f64 {
        (0..self.m)
            .filter(|&i| self.ku[i] > 0.0)
            .map(|i| self.a[i][alpha] * self.a[i][beta] / self.ku[i])
            .sum()
    }

    pub fn md_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|a| {
                (0..self.n)
                    .map(|b| if self.ko[b] == 0.0 { 0.0 } else { self.ra(a, b) / self.ko[b] })
                    .collect()
            })
            .collect()
    }

    pub fn hc_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|a| {
                (0..self.n)
                    .map(|b| if self.ko[a] == 0.0 { 0.0 } else { self.ra(a, b) / self.ko[a] })
                    .collect()
            })
            .collect()
    }

    pub fn cosra_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|a| {
                (0..self.n)
                    .map(|b| {
                        if self.ko[a] == 0.0 || self.ko[b] == 0.0 {
                            0.0
                        } else {
                            self.ra(a, b) / (self.ko[a] * self.ko[b]).sqrt()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn object_cosine(&self, a: usize, b: usize) -> f64 {
        if self.ko[a] == 0.0 || self.ko[b] == 0.0 {
            return 0.0;
        }
        let common: f64 = (0..self.m).map(|i| self.a[i][a] * self.a[i][b]).sum();
        common / (self.ko[a] * self.ko[b]).sqrt()
    }

    pub fn user_cosine(&self, i: usize, j: usize) -> f64 {
        if self.ku[i] == 0.0 || self.ku[j] == 0.0 {
            return 0.0;
        }
        let common: f64 = (0..self.n).map(|b| self.a[i][b] * self.a[j][b]).sum();
        common / (self.ku[i] * self.ku[j]).sqrt()
    }

    fn indicator(&self, user: usize) -> Vec<f64> {
        self.a[user].clone()
    }

    pub fn apply(w: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
        w.iter()
            .map(|row| row.iter().zip(f).map(|(x, y)| x * y).sum())
            .collect()
    }

    pub fn gr(&self) -> Vec<f64> {
        self.ko.clone()
    }

    pub fn ucf(&self, user: usize) -> Vec<f64> {
        (0..self.n)
            .map(|b| {
                (0..self.m)
                    .filter(|&j| j != user)
                    .map(|j| self.user_cosine(user, j) * self.a[j][b])
                    .sum()
            })
            .collect()
    }

    pub fn md(&self, user: usize) -> Vec<f64> {
        Self::apply(&self.md_matrix(), &self.indicator(user))
    }

    pub fn hc(&self, user: usize) -> Vec<f64> {
        Self::apply(&self.hc_matrix(), &self.indicator(user))
    }

    pub fn cosra(&self, user: usize) -> Vec<f64> {
        Self::apply(&self.cosra_matrix(), &self.indicator(user))
    }

    /// The three-step trust-scaled diffusion written as its full double sum.
    pub fn cosra_t(&self, t: &TrustGraph, user: usize, theta: f64) -> Vec<f64> {
        let f = self.indicator(user);
        let fj: Vec<f64> = (0..self.m)
            .map(|j| {
                (0..self.n)
                    .filter(|&a| self.a[j][a] > 0.0)
                    .map(|a| self.a[j][a] / (self.ku[j] * self.ko[a]).sqrt() * f[a])
                    .sum()
            })
            .collect();
        (0..self.n)
            .map(|b| {
                (0..self.m)
                    .filter(|&j| self.a[j][b] > 0.0)
                    .map(|j| {
                        let bij = if t.trusts(user, j) { 1.0 } else { 0.0 };
                        let scaled = if fj[j] == 0.0 { 0.0 } else { fj[j].powf(theta) };
                        self.a[j][b] / (self.ku[j] * self.ko[b]).sqrt()
                            * (bij * scaled + (1.0 - bij) * fj[j])
                    })
                    .sum()
            })
            .collect()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph with `1..=max_m` users, `1..=max_n` objects and random density.
pub fn random_graph<R: Rng>(rng: &mut R, max_m: usize, max_n: usize) -> RatingGraph {
    let m = rng.gen_range(1..=max_m);
    let n = rng.gen_range(1..=max_n);
    let p = rng.gen_range(0.1..0.7);
    let mut links = Vec::new();
    for u in 0..m {
        for o in 0..n {
            if rng.gen_bool(p) {
                links.push((u, o));
            }
        }
    }
    RatingGraph::new(&links, m, n).unwrap()
}

pub fn random_trust<R: Rng>(rng: &mut R, m: usize) -> TrustGraph {
    let p = rng.gen_range(0.0..0.6);
    let mut edges = Vec::new();
    for u in 0..m {
        for v in 0..m {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    TrustGraph::new(&edges, m).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Candidate objects for `user`: uncollected in training.
pub fn candidates(train: &RatingGraph, user: usize) -> Vec<usize> {
    (0..train.objects()).filter(|&o| !train.has_link(user, o)).collect()
}

/// Exhaustive pair comparison AUC for one user.
pub fn oracle_user_auc(scores: &[f64], cands: &[usize], probes: &[usize]) -> Option<f64> {
    let negatives: Vec<usize> = cands.iter().copied().filter(|o| !probes.contains(o)).collect();
    if probes.is_empty() || negatives.is_empty() {
        return None;
    }
    let (mut n1, mut n2, mut total) = (0u64, 0u64, 0u64);
    for &p in probes {
        for &q in &negatives {
            total += 1;
            if scores[p] > scores[q] {
                n1 += 1;
            } else if scores[p] == scores[q] {
                n2 += 1;
            }
        }
    }
    Some((n1 as f64 + 0.5 * n2 as f64) / total as f64)
}

/// Positions by explicit tie expansion: sort descending, number 1..l, then
/// replace every tied run by the mean of its positions.
pub fn oracle_positions(scores: &[f64], cands: &[usize]) -> Vec<(usize, f64)> {
    let mut order: Vec<usize> = cands.to_vec();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut positions = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let explicit: Vec<f64> = (start + 1..=end).map(|p| p as f64).collect();
        let mean = explicit.iter().sum::<f64>() / explicit.len() as f64;
        for &o in &order[start..end] {
            positions.push((o, mean));
        }
        start = end;
    }
    positions
}
