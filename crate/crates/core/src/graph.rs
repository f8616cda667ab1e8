//! Sparse bipartite rating network and directed trust network.
//!
//! Both graphs are immutable once built. Adjacency lists are kept sorted so
//! that co-occurrence sums reduce to linear merges. The element-level
//! similarity and transfer functions here are the reference definitions; the
//! recommenders in [`crate::recommend`] never materialize the `n x n`
//! matrices and instead sweep the adjacency lists directly.

use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("rating link #{position} ({user}, {object}) out of range for {users} users x {objects} objects")]
    RatingLinkOutOfRange {
        position: usize,
        user: usize,
        object: usize,
        users: usize,
        objects: usize,
    },
    #[error("trust edge #{position} ({truster} -> {trustee}) out of range for {users} users")]
    TrustEdgeOutOfRange {
        position: usize,
        truster: usize,
        trustee: usize,
        users: usize,
    },
}

/// Binary user-object adjacency stored in both user-major and object-major form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingGraph {
    users: usize,
    objects: usize,
    user_adj: Vec<Vec<usize>>,
    object_adj: Vec<Vec<usize>>,
    links: usize,
}

impl RatingGraph {
    /// Builds the graph from `(user, object)` pairs. Duplicates are collapsed.
    pub fn new(links: &[(usize, usize)], users: usize, objects: usize) -> Result<Self, GraphError> {
        let mut user_adj = vec![Vec::new(); users];
        for (position, &(user, object)) in links.iter().enumerate() {
            if user >= users || object >= objects {
                return Err(GraphError::RatingLinkOutOfRange {
                    position,
                    user,
                    object,
                    users,
                    objects,
                });
            }
            user_adj[user].push(object);
        }
        for row in &mut user_adj {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Self::from_user_adjacency(user_adj, objects))
    }

    /// Builds from already sorted, deduplicated user rows.
    pub(crate) fn from_user_adjacency(user_adj: Vec<Vec<usize>>, objects: usize) -> Self {
        let mut object_adj = vec![Vec::new(); objects];
        let mut links = 0;
        // users are visited in increasing order, so every column comes out sorted
        for (user, row) in user_adj.iter().enumerate() {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]));
            links += row.len();
            for &object in row {
                object_adj[object].push(user);
            }
        }
        Self {
            users: user_adj.len(),
            objects,
            user_adj,
            object_adj,
            links,
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    /// Total number of distinct links, `l_R`.
    pub fn links(&self) -> usize {
        self.links
    }

    /// Sorted objects collected by `user`.
    pub fn user_objects(&self, user: usize) -> &[usize] {
        &self.user_adj[user]
    }

    /// Sorted users who collected `object`.
    pub fn object_users(&self, object: usize) -> &[usize] {
        &self.object_adj[object]
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.user_adj[user].len()
    }

    pub fn object_degree(&self, object: usize) -> usize {
        self.object_adj[object].len()
    }

    pub fn user_degrees(&self) -> Vec<usize> {
        self.user_adj.iter().map(Vec::len).collect()
    }

    pub fn object_degrees(&self) -> Vec<usize> {
        self.object_adj.iter().map(Vec::len).collect()
    }

    pub fn has_link(&self, user: usize, object: usize) -> bool {
        self.user_adj[user].binary_search(&object).is_ok()
    }

    /// All links in user-major order.
    pub fn iter_links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.user_adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |&o| (u, o)))
    }

    /// Link density `l_R / (m n)`.
    pub fn sparsity(&self) -> f64 {
        if self.users == 0 || self.objects == 0 {
            0.0
        } else {
            self.links as f64 / (self.users as f64 * self.objects as f64)
        }
    }
}

/// Directed user -> user trust adjacency, without self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustGraph {
    users: usize,
    out_adj: Vec<Vec<usize>>,
    links: usize,
}

impl TrustGraph {
    /// Self-loops and duplicate edges are silently dropped.
    pub fn new(edges: &[(usize, usize)], users: usize) -> Result<Self, GraphError> {
        let mut out_adj = vec![Vec::new(); users];
        for (position, &(truster, trustee)) in edges.iter().enumerate() {
            if truster >= users || trustee >= users {
                return Err(GraphError::TrustEdgeOutOfRange {
                    position,
                    truster,
                    trustee,
                    users,
                });
            }
            if truster != trustee {
                out_adj[truster].push(trustee);
            }
        }
        let mut links = 0;
        for row in &mut out_adj {
            row.sort_unstable();
            row.dedup();
            links += row.len();
        }
        Ok(Self {
            users,
            out_adj,
            links,
        })
    }

    /// A trust graph with no edges.
    pub fn empty(users: usize) -> Self {
        Self {
            users,
            out_adj: vec![Vec::new(); users],
            links: 0,
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// Number of distinct trust links, `l_T`.
    pub fn links(&self) -> usize {
        self.links
    }

    /// Sorted users trusted by `user`.
    pub fn trusted_by(&self, user: usize) -> &[usize] {
        &self.out_adj[user]
    }

    pub fn trusts(&self, truster: usize, trustee: usize) -> bool {
        self.out_adj[truster].binary_search(&trustee).is_ok()
    }

    pub fn iter_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |&v| (u, v)))
    }

    /// Link density `l_T / m^2`.
    pub fn sparsity(&self) -> f64 {
        if self.users == 0 {
            0.0
        } else {
            self.links as f64 / (self.users as f64 * self.users as f64)
        }
    }
}

/// Dense non-negative resource held by each object after a diffusion.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResourceVector(Vec<f64>);

impl ResourceVector {
    pub fn zeros(objects: usize) -> Self {
        Self(vec![0.0; objects])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ResourceVector {
    fn from(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self(values)
    }
}

impl Index<usize> for ResourceVector {
    type Output = f64;

    fn index(&self, object: usize) -> &f64 {
        &self.0[object]
    }
}

/// Merges two sorted lists, summing `weight(x)` over their common elements.
fn sorted_overlap<F: Fn(usize) -> f64>(a: &[usize], b: &[usize], weight: F) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += weight(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Number of common elements of two sorted lists.
pub(crate) fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    sorted_overlap(a, b, |_| 1.0) as usize
}

/// Cosine similarity of two users' collections, `0` for an empty profile.
pub fn cosine_user_similarity(g: &RatingGraph, i: usize, j: usize) -> f64 {
    let (ki, kj) = (g.user_degree(i), g.user_degree(j));
    if ki == 0 || kj == 0 {
        return 0.0;
    }
    let common = sorted_intersection_len(g.user_objects(i), g.user_objects(j));
    common as f64 / ((ki * kj) as f64).sqrt()
}

/// Cosine similarity of two objects' collector sets, `0` for an uncollected object.
pub fn cosine_object_similarity(g: &RatingGraph, alpha: usize, beta: usize) -> f64 {
    let (ka, kb) = (g.object_degree(alpha), g.object_degree(beta));
    if ka == 0 || kb == 0 {
        return 0.0;
    }
    let common = sorted_intersection_len(g.object_users(alpha), g.object_users(beta));
    common as f64 / ((ka * kb) as f64).sqrt()
}

/// `sum_i a_ia a_ib / k_i` over the common collectors of two objects.
fn resource_allocation_sum(g: &RatingGraph, alpha: usize, beta: usize) -> f64 {
    sorted_overlap(g.object_users(alpha), g.object_users(beta), |u| {
        1.0 / g.user_degree(u) as f64
    })
}

/// CosRA similarity: resource allocation weighted by `1 / sqrt(k_a k_b)`.
pub fn cosra_index(g: &RatingGraph, alpha: usize, beta: usize) -> f64 {
    let (ka, kb) = (g.object_degree(alpha), g.object_degree(beta));
    if ka == 0 || kb == 0 {
        return 0.0;
    }
    resource_allocation_sum(g, alpha, beta) / ((ka * kb) as f64).sqrt()
}

/// Mass-diffusion transfer weight from `beta` to `alpha` (column-stochastic).
pub fn md_transfer(g: &RatingGraph, alpha: usize, beta: usize) -> f64 {
    let kb = g.object_degree(beta);
    if kb == 0 {
        return 0.0;
    }
    resource_allocation_sum(g, alpha, beta) / kb as f64
}

/// Heat-conduction transfer weight from `beta` to `alpha` (row-stochastic).
pub fn hc_transfer(g: &RatingGraph, alpha: usize, beta: usize) -> f64 {
    let ka = g.object_degree(alpha);
    if ka == 0 {
        return 0.0;
    }
    resource_allocation_sum(g, alpha, beta) / ka as f64
}
