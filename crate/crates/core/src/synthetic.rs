//! Seeded random graphs for tests and benchmarks.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::graph::{RatingGraph, TrustGraph};
use crate::ingest::Dataset;

/// Zipf-like weights `(rank + 1)^-exponent`.
fn zipf_weights(count: usize, exponent: f64) -> Vec<f64> {
    (0..count).map(|r| ((r + 1) as f64).powf(-exponent)).collect()
}

/// Draws `want` distinct indices from `dist` (at most `limit` distinct exist).
fn distinct_draws<R: Rng>(rng: &mut R, dist: &WeightedIndex<f64>, want: usize, limit: usize, out: &mut Vec<usize>) {
    let want = want.min(limit);
    let mut tries = 0;
    while out.len() < want && tries < want * 50 {
        let o = dist.sample(rng);
        if !out.contains(&o) {
            out.push(o);
        }
        tries += 1;
    }
}

/// Bipartite graph whose object popularity follows a power law.
///
/// User degrees are uniform in `[min_degree, 3 min_degree]`; each user picks
/// distinct objects with probability proportional to a Zipf weight.
pub fn power_law_bipartite(users: usize, objects: usize, min_degree: usize, exponent: f64, seed: u64) -> RatingGraph {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dist = WeightedIndex::new(zipf_weights(objects, exponent)).expect("positive weights");
    let mut links = Vec::new();
    let mut picked = Vec::new();
    for u in 0..users {
        let degree = rng.gen_range(min_degree..=3 * min_degree);
        picked.clear();
        distinct_draws(&mut rng, &dist, degree, objects, &mut picked);
        links.extend(picked.iter().map(|&o| (u, o)));
    }
    RatingGraph::new(&links, users, objects).expect("indices in range")
}

/// Parameters of [`community_dataset`].
#[derive(Debug, Clone, Copy)]
pub struct CommunityParams {
    pub users: usize,
    pub objects: usize,
    pub communities: usize,
    /// Links per user (before deduplication).
    pub degree: usize,
    /// Probability that a link stays inside the user's community.
    pub taste_locality: f64,
    /// Out-degree of every user in the trust graph.
    pub trust_degree: usize,
    /// Probability that a trust edge points to a same-community user.
    pub trust_locality: f64,
    /// Popularity exponent inside each community.
    pub exponent: f64,
}

impl Default for CommunityParams {
    fn default() -> Self {
        Self {
            users: 300,
            objects: 400,
            communities: 6,
            degree: 12,
            taste_locality: 0.8,
            trust_degree: 8,
            trust_locality: 0.8,
            exponent: 0.8,
        }
    }
}

/// Users and objects split into taste communities; ratings and trust edges
/// prefer the user's own community, the rest is uniform noise.
pub fn community_dataset(p: CommunityParams, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let community_of_user = |u: usize| u % p.communities;
    let members: Vec<Vec<usize>> = (0..p.communities)
        .map(|c| (0..p.objects).filter(|o| o % p.communities == c).collect())
        .collect();
    let local: Vec<WeightedIndex<f64>> = members
        .iter()
        .map(|m| WeightedIndex::new(zipf_weights(m.len(), p.exponent)).expect("nonempty community"))
        .collect();
    let global = WeightedIndex::new(zipf_weights(p.objects, p.exponent)).expect("objects");

    let mut links = Vec::new();
    for u in 0..p.users {
        let c = community_of_user(u);
        let mut picked: Vec<usize> = Vec::new();
        let mut tries = 0;
        while picked.len() < p.degree && tries < p.degree * 50 {
            tries += 1;
            let o = if rng.gen_bool(p.taste_locality) {
                members[c][local[c].sample(&mut rng)]
            } else {
                global.sample(&mut rng)
            };
            if !picked.contains(&o) {
                picked.push(o);
            }
        }
        links.extend(picked.into_iter().map(|o| (u, o)));
    }

    let mut edges = Vec::new();
    for u in 0..p.users {
        let c = community_of_user(u);
        for _ in 0..p.trust_degree {
            let v = if rng.gen_bool(p.trust_locality) {
                let k = (p.users - c).div_ceil(p.communities);
                c + p.communities * rng.gen_range(0..k)
            } else {
                rng.gen_range(0..p.users)
            };
            edges.push((u, v));
        }
    }
    let g = RatingGraph::new(&links, p.users, p.objects).expect("indices in range");
    let t = TrustGraph::new(&edges, p.users).expect("indices in range");
    Dataset::from_graphs(g, t).expect("same user count")
}

/// Uniform random graph with each link present with probability `density`,
/// plus uniform random trust edges.
pub fn uniform_dataset(users: usize, objects: usize, density: f64, trust_density: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut links = Vec::new();
    for u in 0..users {
        for o in 0..objects {
            if rng.gen_bool(density) {
                links.push((u, o));
            }
        }
    }
    let mut edges = Vec::new();
    for u in 0..users {
        for v in 0..users {
            if u != v && rng.gen_bool(trust_density) {
                edges.push((u, v));
            }
        }
    }
    let g = RatingGraph::new(&links, users, objects).expect("indices in range");
    let t = TrustGraph::new(&edges, users).expect("indices in range");
    Dataset::from_graphs(g, t).expect("same user count")
}
