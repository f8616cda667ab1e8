mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trustrec_core::metrics::{auc, precision_recall_f1, ranking_score, user_auc, user_rank_terms};
use trustrec_core::recommend::top_l;
use trustrec_core::{EvaluationContext, MetricError, RatingGraph, ResourceVector};

/// Many users, each with one probe among many candidates, scored at random.
fn random_scoring(users: usize, objects: usize, seed: u64) -> (RatingGraph, Vec<(usize, usize)>, Vec<ResourceVector>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut probe = Vec::new();
    for u in 0..users {
        train.push((u, rng.gen_range(0..objects / 2)));
        probe.push((u, objects / 2 + rng.gen_range(0..objects / 2)));
    }
    let g = RatingGraph::new(&train, users, objects).unwrap();
    let scores = (0..users)
        .map(|_| (0..objects).map(|_| rng.gen::<f64>()).collect::<Vec<_>>().into())
        .collect();
    (g, probe, scores)
}

#[test]
fn random_scores_give_chance_auc_and_rs() {
    let (g, probe, scores) = random_scoring(10_000, 40, 5);
    let ctx = EvaluationContext::new(&g, &probe).unwrap();
    let a = auc(&ctx, &scores).unwrap();
    let rs = ranking_score(&ctx, &scores).unwrap();
    assert_eq!(a.evaluable_users, 10_000);
    assert!((a.value - 0.5).abs() < 0.02, "AUC {}", a.value);
    assert!((rs.value - 0.5).abs() < 0.02, "RS {}", rs.value);
}

#[test]
fn constant_scores_give_exact_half_auc() {
    let (g, probe, scores) = random_scoring(50, 20, 6);
    let flat: Vec<ResourceVector> = scores.iter().map(|s| ResourceVector::zeros(s.len())).collect();
    let ctx = EvaluationContext::new(&g, &probe).unwrap();
    assert_eq!(auc(&ctx, &flat).unwrap().value, 0.5);
    // all candidates share the mean position (l + 1) / 2, so RS = (l + 1) / 2l with l = 19
    assert!((ranking_score(&ctx, &flat).unwrap().value - 20.0 / 38.0).abs() < 1e-15);
}

#[test]
fn probe_overlapping_training_is_rejected() {
    let g = RatingGraph::new(&[(0, 0), (0, 1)], 1, 3).unwrap();
    assert!(matches!(EvaluationContext::new(&g, &[(0, 1)]), Err(MetricError::InvalidProbe { .. })));
    assert!(matches!(EvaluationContext::new(&g, &[(0, 7)]), Err(MetricError::InvalidProbe { .. })));
    assert!(matches!(EvaluationContext::new(&g, &[(3, 2)]), Err(MetricError::InvalidProbe { .. })));
}

#[test]
fn cold_start_users_are_excluded() {
    // user 1 has probes but no training links
    let g = RatingGraph::new(&[(0, 0), (2, 1)], 3, 4).unwrap();
    let ctx = EvaluationContext::new(&g, &[(0, 2), (1, 3), (1, 2)]).unwrap();
    assert_eq!(ctx.evaluable_users(), vec![0]);
    let scores: Vec<ResourceVector> = (0..3).map(|_| vec![0.0, 0.0, 1.0, 0.5].into()).collect();
    let a = auc(&ctx, &scores).unwrap();
    assert_eq!((a.value, a.evaluable_users), (1.0, 1));
    let lists = vec![top_l(0, &scores[0], g.user_objects(0), 1)];
    let (p, r, f1) = precision_recall_f1(&ctx, &lists, 1).unwrap();
    assert_eq!((p.value, r.value, f1.value), (1.0, 1.0, 1.0));
}

#[test]
fn nothing_evaluable_is_undefined() {
    let g = RatingGraph::new(&[(0, 0)], 2, 2).unwrap();
    let ctx = EvaluationContext::new(&g, &[(1, 1)]).unwrap();
    let scores = vec![ResourceVector::zeros(2); 2];
    assert!(matches!(auc(&ctx, &scores), Err(MetricError::Undefined { .. })));
    assert!(matches!(ranking_score(&ctx, &scores), Err(MetricError::Undefined { .. })));
}

proptest! {
    #[test]
    fn per_user_auc_matches_pair_oracle(
        scores in prop::collection::vec(0u8..4, 2..25),
        roles in prop::collection::vec(0u8..3, 25),
    ) {
        let n = scores.len();
        let values: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
        let collected: Vec<usize> = (0..n).filter(|&o| roles[o] == 0).collect();
        let probes: Vec<usize> = (0..n).filter(|&o| roles[o] == 1).collect();
        let cands: Vec<usize> = (0..n).filter(|&o| roles[o] != 0).collect();
        let fast = user_auc(&values, &collected, &probes);
        let slow = oracle_user_auc(&values, &cands, &probes);
        match (fast, slow) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a, b),
        }

        let (sum, count) = user_rank_terms(&values, &collected, &probes);
        prop_assert_eq!(count, probes.len());
        let positions = oracle_positions(&values, &cands);
        let expected: f64 = probes
            .iter()
            .map(|p| positions.iter().find(|x| x.0 == *p).unwrap().1 / cands.len() as f64)
            .sum();
        prop_assert!((sum - expected).abs() < 1e-12);
    }
}
