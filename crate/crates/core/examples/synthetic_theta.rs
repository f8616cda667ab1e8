//! Prints the AUC / RS / F1 theta curves of CosRA+T on a synthetic community dataset.

use trustrec_core::harness::{sweep_theta, theta_grid, ExperimentConfig};
use trustrec_core::metrics::Metric;
use trustrec_core::synthetic::{community_dataset, CommunityParams};

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    let mut p = CommunityParams::default();
    if let [tl, trl, deg, td] = args[..] {
        p.taste_locality = tl;
        p.trust_locality = trl;
        p.degree = deg as usize;
        p.trust_degree = td as usize;
    }
    let d = community_dataset(p, 1);
    let cfg = ExperimentConfig {
        theta_values: theta_grid(0.0, 1.0, 0.1).unwrap(),
        list_lengths: vec![10],
        folds: 5,
        realizations: 2,
        ..Default::default()
    };
    let (report, summary) = sweep_theta(&d, "synthetic", &cfg).unwrap();
    for metric in [Metric::Auc, Metric::RankingScore, Metric::F1] {
        let curve: Vec<String> = report
            .rows
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| format!("{:.4}", r.mean.unwrap()))
            .collect();
        println!("{metric}: {}", curve.join(" "));
    }
    println!("optima: {:?}", summary.optima.iter().map(|o| (o.metric, o.theta)).collect::<Vec<_>>());
}
