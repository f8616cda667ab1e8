use trustrec_core::harness::{aggregate, recommended_degree_distribution, run_experiment_raw, sweep_length, theta_grid};
use trustrec_core::metrics::{auc, hamming_distance, intra_similarity, popularity, precision_recall_f1, ranking_score};
use trustrec_core::recommend::top_l;
use trustrec_core::synthetic::{community_dataset, uniform_dataset, CommunityParams};
use trustrec_core::{
    make_split, run_experiment, run_fold, sweep_theta, Dataset, EvaluationContext, ExperimentConfig, Method,
    MethodConfig, Metric, ResourceVector,
};

fn small() -> Dataset {
    community_dataset(
        CommunityParams {
            users: 80,
            objects: 120,
            degree: 8,
            ..Default::default()
        },
        3,
    )
}

fn quick_config() -> ExperimentConfig {
    ExperimentConfig {
        list_lengths: vec![3, 10],
        folds: 5,
        realizations: 3,
        ..Default::default()
    }
}

fn csv_bytes(d: &Dataset, cfg: &ExperimentConfig) -> Vec<u8> {
    let mut out = Vec::new();
    run_experiment(d, "small", cfg).unwrap().write_csv(&mut out).unwrap();
    out
}

#[test]
fn output_is_identical_across_worker_counts() {
    let d = small();
    let cfg = quick_config();
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| csv_bytes(&d, &cfg))
    };
    let one = run_with(1);
    assert_eq!(one, run_with(4));
    assert_eq!(one, run_with(7));
}

#[test]
fn folds_partition_the_links() {
    let d = small();
    let g = &d.rating_graph;
    let plan = make_split(g, 7, 42).unwrap();
    let mut seen = vec![0usize; g.links()];
    let all: Vec<(usize, usize)> = g.iter_links().collect();
    for f in 0..7 {
        let (train, test) = plan.partition(g, f).unwrap();
        assert_eq!(train.links() + test.len(), g.links());
        for link in &test {
            seen[all.binary_search(link).unwrap()] += 1;
            assert!(!train.has_link(link.0, link.1));
        }
    }
    assert!(seen.iter().all(|&c| c == 1));
    let sizes = plan.fold_sizes();
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
}

#[test]
fn fold_rows_match_direct_metric_calls() {
    let d = small();
    let cfg = ExperimentConfig {
        methods: vec![MethodConfig::cosra_t(0.6).unwrap(), MethodConfig::plain(Method::Hc)],
        list_lengths: vec![4],
        folds: 5,
        realizations: 1,
        ..Default::default()
    };
    let plan = make_split(&d.rating_graph, 5, 8).unwrap();
    let rows = run_fold(&d, &plan, 2, &cfg).unwrap();
    let (train, test) = plan.partition(&d.rating_graph, 2).unwrap();
    let ctx = EvaluationContext::new(&train, &test).unwrap();
    for method in &cfg.methods {
        let scores: Vec<ResourceVector> =
            (0..train.users()).map(|u| method.score(&train, &d.trust_graph, u)).collect();
        let lists: Vec<_> = ctx
            .evaluable_users()
            .into_iter()
            .map(|u| top_l(u, &scores[u], train.user_objects(u), 4))
            .collect();
        let (p, r, f1) = precision_recall_f1(&ctx, &lists, 4).unwrap();
        let expected = [
            (Metric::Auc, auc(&ctx, &scores).unwrap()),
            (Metric::RankingScore, ranking_score(&ctx, &scores).unwrap()),
            (Metric::Precision, p),
            (Metric::Recall, r),
            (Metric::F1, f1),
            (Metric::Hamming, hamming_distance(&lists, 4).unwrap()),
            (Metric::IntraSimilarity, intra_similarity(&train, &lists, 4).unwrap()),
            (Metric::Popularity, popularity(&train, &lists, 4).unwrap()),
        ];
        for (metric, want) in expected {
            let row = rows.iter().find(|r| r.method == *method && r.metric == metric).unwrap();
            let got = row.value.unwrap();
            assert!((got - want.value).abs() < 1e-12, "{} {metric}: {got} vs {}", method.method, want.value);
            assert_eq!(row.evaluable_users, want.evaluable_users);
        }
    }
}

#[test]
fn report_is_mean_of_fold_means() {
    let d = small();
    let cfg = quick_config();
    let raw = run_experiment_raw(&d, &cfg).unwrap();
    let report = aggregate("small", &cfg, &raw);
    assert_eq!(report, run_experiment(&d, "small", &cfg).unwrap());
    for (i, row) in report.rows.iter().enumerate() {
        let per_realization: Vec<f64> = raw
            .iter()
            .filter_map(|folds| {
                let vals: Vec<f64> = folds.iter().filter_map(|f| f[i].value).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        let r = per_realization.len() as f64;
        let mean = per_realization.iter().sum::<f64>() / r;
        let sd = (per_realization.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt();
        assert!((row.mean.unwrap() - mean).abs() < 1e-12);
        assert!((row.stderr.unwrap() - sd / r.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn realizations_use_consecutive_seeds() {
    let d = small();
    let cfg = ExperimentConfig { realizations: 3, seed: 100, ..quick_config() };
    let shifted = ExperimentConfig { realizations: 2, seed: 101, ..quick_config() };
    let a = run_experiment_raw(&d, &cfg).unwrap();
    let b = run_experiment_raw(&d, &shifted).unwrap();
    assert_eq!(a[1..], b[..]);
}

#[test]
fn theta_one_sweep_equals_plain_cosra() {
    let d = small();
    let cfg = ExperimentConfig {
        methods: vec![MethodConfig::plain(Method::CosRa)],
        theta_values: vec![1.0],
        ..quick_config()
    };
    let plain = run_experiment(&d, "small", &cfg).unwrap();
    let (sweep, _) = sweep_theta(&d, "small", &cfg).unwrap();
    assert_eq!(plain.rows.len(), sweep.rows.len());
    for (a, b) in plain.rows.iter().zip(&sweep.rows) {
        assert_eq!(b.method, Method::CosRaT);
        assert_eq!(b.theta, Some(1.0));
        assert_eq!((a.metric, a.list_len, a.mean, a.stderr), (b.metric, b.list_len, b.mean, b.stderr));
    }
}

#[test]
fn sweep_theta_covers_the_grid() {
    let d = small();
    let grid = theta_grid(0.0, 1.0, 0.25).unwrap();
    let cfg = ExperimentConfig { theta_values: grid.clone(), realizations: 1, ..quick_config() };
    let (report, summary) = sweep_theta(&d, "small", &cfg).unwrap();
    for t in &grid {
        assert!(report.find(Method::CosRaT, Metric::Auc, None, Some(*t)).is_some());
    }
    assert!(report.rows.iter().all(|r| r.method == Method::CosRaT));
    assert!(summary.optima.iter().all(|o| grid.contains(&o.theta)));
    assert!((0.0..=1.0).contains(&summary.overall));
}

#[test]
fn length_sweep_trends() {
    let d = small();
    let cfg = ExperimentConfig { list_lengths: vec![20, 1, 5, 5, 10], realizations: 1, ..quick_config() };
    let report = sweep_length(&d, "small", &cfg).unwrap();
    assert_eq!(report.config.list_lengths, vec![1, 5, 10, 20]);
    for m in Method::ALL {
        let recall: Vec<f64> = [1, 5, 10, 20]
            .iter()
            .map(|&l| report.find(m, Metric::Recall, Some(l), None).unwrap().mean.unwrap())
            .collect();
        assert!(recall.windows(2).all(|w| w[1] >= w[0]), "{m}: {recall:?}");
    }
}

#[test]
fn degree_distribution_is_consistent_with_popularity() {
    let d = small();
    let len = 5;
    for method in [MethodConfig::plain(Method::Gr), MethodConfig::plain(Method::Md), MethodConfig::cosra_t(0.7).unwrap()] {
        let hist = recommended_degree_distribution(&d, method, len, 10, 2018).unwrap();
        let cfg = ExperimentConfig { methods: vec![method], list_lengths: vec![len], folds: 10, realizations: 1, ..Default::default() };
        let plan = make_split(&d.rating_graph, 10, 2018).unwrap();
        let rows = run_fold(&d, &plan, 0, &cfg).unwrap();
        let n = rows.iter().find(|r| r.metric == Metric::Popularity).unwrap();
        let total: usize = hist.iter().map(|h| h.1).sum();
        let weighted: f64 = hist.iter().map(|&(k, c)| (k * c) as f64).sum();
        // every evaluable user has at least `len` candidates here, so lists are full
        assert_eq!(total, n.evaluable_users * len);
        assert!((weighted / total as f64 - n.value.unwrap()).abs() < 1e-9);
    }
}

#[test]
fn gr_recommends_the_most_popular_candidates() {
    let d = uniform_dataset(60, 50, 0.1, 0.05, 4);
    let plan = make_split(&d.rating_graph, 10, 1).unwrap();
    let (train, _) = plan.partition(&d.rating_graph, 0).unwrap();
    let scores = MethodConfig::plain(Method::Gr).score(&train, &d.trust_graph, 0);
    for u in 0..train.users() {
        let list = top_l(u, &scores, train.user_objects(u), 5);
        let min_in = list.items.iter().map(|&o| train.object_degree(o)).min().unwrap();
        let max_out = (0..train.objects())
            .filter(|o| !train.has_link(u, *o) && !list.items.contains(o))
            .map(|o| train.object_degree(o))
            .max()
            .unwrap_or(0);
        assert!(min_in >= max_out);
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let d = small();
    for cfg in [
        ExperimentConfig { folds: 1, ..quick_config() },
        ExperimentConfig { realizations: 0, ..quick_config() },
        ExperimentConfig { list_lengths: vec![], ..quick_config() },
        ExperimentConfig { list_lengths: vec![0], ..quick_config() },
        ExperimentConfig { methods: vec![], ..quick_config() },
    ] {
        assert!(run_experiment(&d, "small", &cfg).is_err());
    }
    assert!(theta_grid(0.0, 1.0, 0.0).is_err());
    assert!(recommended_degree_distribution(&d, MethodConfig::plain(Method::Gr), 0, 10, 1).is_err());
}
