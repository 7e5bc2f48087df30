use lattice_gramian::metrics::{bound_neg_log_det, bound_trace_inverse};
use lattice_gramian::nn1d::NN1DParams;
use lattice_gramian::placement::{
    distance_heuristic, max_distance, rank_candidates, PlacementMetric, PlacementProblem,
};
use lattice_gramian::{NodeIndex, TargetSet};

fn nodes(v: impl IntoIterator<Item = i64>) -> Vec<NodeIndex> {
    v.into_iter().map(NodeIndex::scalar).collect()
}

fn p3() -> NN1DParams {
    NN1DParams::new(-3.0, 1.0).unwrap()
}

#[test]
fn heuristic_attains_minimax_distance() {
    let candidates = nodes(0..8);
    for targets in [vec![0, 7], vec![1, 2, 6], vec![5], vec![0, 1, 2, 3, 4, 5, 6, 7]] {
        let t = TargetSet::scalars(targets).unwrap();
        let h = distance_heuristic(&t, &candidates).unwrap();
        let best = candidates.iter().map(|c| max_distance(c, &t)).min().unwrap();
        assert_eq!(max_distance(&h, &t), best);
    }
    let all = TargetSet::scalars(0..8).unwrap();
    assert!([3, 4].contains(&distance_heuristic(&all, &candidates).unwrap().coords()[0]));
}

#[test]
fn single_target_heuristic_is_exact_for_both_metrics() {
    for metric in [PlacementMetric::TraceInverse, PlacementMetric::NegLogDetScaled] {
        for target in 0..8 {
            let problem = PlacementProblem::chain(p3(), TargetSet::scalars([target]).unwrap(), nodes(0..8), metric).unwrap();
            let report = rank_candidates(&problem).unwrap();
            assert!(report.heuristic_agrees(), "{metric} target {target}");
            assert_eq!(report.exact_winner, NodeIndex::scalar(target));
        }
    }
}

#[test]
fn distance_and_energy_are_rank_correlated() {
    let problem = PlacementProblem::chain(p3(), TargetSet::scalars([0, 7]).unwrap(), nodes(0..8), PlacementMetric::TraceInverse).unwrap();
    let report = rank_candidates(&problem).unwrap();
    assert!(report.spearman.unwrap() > 0.9);
    let winner = report.candidates.iter().find(|c| c.rank == 0).unwrap();
    assert_eq!(winner.node, report.exact_winner);
    assert!(report.candidates.iter().all(|c| c.value.unwrap() >= winner.value.unwrap()));
}

#[test]
fn every_candidate_respects_its_bound() {
    for metric in [PlacementMetric::TraceInverse, PlacementMetric::NegLogDetScaled] {
        let targets = TargetSet::scalars([1, 3, 6]).unwrap();
        let problem = PlacementProblem::chain(p3(), targets.clone(), nodes(-2..10), metric).unwrap();
        for c in rank_candidates(&problem).unwrap().candidates {
            let ell = max_distance(&c.node, &targets);
            let bound = match metric {
                PlacementMetric::TraceInverse => bound_trace_inverse(ell, &p3()).unwrap().exact,
                PlacementMetric::NegLogDetScaled => bound_neg_log_det(ell, &p3(), 3).unwrap().exact,
            };
            assert_eq!(c.bound, Some(bound));
            if let Some(v) = c.value {
                assert!(v >= bound - 1e-12 * bound.abs(), "{metric} {}: {v} < {bound}", c.node);
            }
        }
    }
}

#[test]
fn mirror_symmetric_driver_is_flagged_and_ranked_last() {
    // With the driver midway, targets 2 and 4 move identically.
    let problem = PlacementProblem::chain(p3(), TargetSet::scalars([2, 4]).unwrap(), nodes([3, 0, 6]), PlacementMetric::TraceInverse).unwrap();
    let report = rank_candidates(&problem).unwrap();
    let mid = &report.candidates[0];
    assert!(mid.value.is_none());
    assert_eq!(mid.rank, 2);
    assert_eq!(report.heuristic_winner, NodeIndex::scalar(3));
    assert_ne!(report.exact_winner, NodeIndex::scalar(3));
}
