//! Single-driver placement: exact metric ranking against the minimax-distance
//! heuristic.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, NodeIndex};
use crate::metrics::{bound_neg_log_det, bound_trace_inverse, neg_log_det_scaled, trace_inverse, OutputGramian};
use crate::nn1d::{entry_contour, nn1d_output_gramian, ContourConfig, NN1DParams};
use crate::quadrature::QuadratureConfig;
use crate::spectral::{DriverSet, GramianMode, SpectralGramian, TargetSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementMetric {
    TraceInverse,
    NegLogDetScaled,
}

impl PlacementMetric {
    pub fn name(&self) -> &'static str {
        match self {
            PlacementMetric::TraceInverse => "trace_inverse",
            PlacementMetric::NegLogDetScaled => "neg_log_det_scaled",
        }
    }
}

impl fmt::Display for PlacementMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlacementMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace_inverse" | "trace-inverse" => Ok(PlacementMetric::TraceInverse),
            "neg_log_det_scaled" | "neg-log-det-scaled" | "logdet" => Ok(PlacementMetric::NegLogDetScaled),
            other => Err(Error::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}

/// The lattice a placement problem lives on.
#[derive(Debug, Clone)]
pub enum PlacementLattice {
    Chain(NN1DParams),
    /// General lattice; entries by spectral quadrature, distances by
    /// breadth-first search inside a box of the given radius.
    General {
        spec: LatticeSpec,
        quadrature: QuadratureConfig,
        hop_window: i64,
    },
}

#[derive(Debug, Clone)]
pub struct PlacementProblem {
    pub lattice: PlacementLattice,
    pub targets: TargetSet,
    pub candidates: Vec<NodeIndex>,
    pub metric: PlacementMetric,
}

impl PlacementProblem {
    pub fn chain(params: NN1DParams, targets: TargetSet, candidates: Vec<NodeIndex>, metric: PlacementMetric) -> Result<Self> {
        let problem = PlacementProblem {
            lattice: PlacementLattice::Chain(params),
            targets,
            candidates,
            metric,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::InvalidArgument("no candidate drivers".into()));
        }
        let d = match &self.lattice {
            PlacementLattice::Chain(_) => 1,
            PlacementLattice::General { spec, .. } => spec.dim(),
        };
        if self.targets.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.targets.dim(),
            });
        }
        let mut seen = HashSet::new();
        for c in &self.candidates {
            if c.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.dim() });
            }
            if !seen.insert(c) {
                return Err(Error::InvalidArgument(format!("candidate {c} listed twice")));
            }
        }
        Ok(())
    }
}

/// Largest `|i - a|` (hop count on the chain, `l1` distance in general) from
/// the driver to a target.
pub fn max_distance(a: &NodeIndex, targets: &TargetSet) -> usize {
    targets.iter().map(|t| (t - a).l1_norm() as usize).max().unwrap_or(0)
}

/// Candidate with the smallest [`max_distance`]; ties go to the smaller node.
pub fn distance_heuristic(targets: &TargetSet, candidates: &[NodeIndex]) -> Result<NodeIndex> {
    candidates
        .iter()
        .min_by(|x, y| max_distance(x, targets).cmp(&max_distance(y, targets)).then_with(|| x.cmp(y)))
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("no candidate drivers".into()))
}

/// Shortest directed path length from `from` to `to` in the lattice graph,
/// where node `a` influences node `a - n` through the weight `psi(n)`.
/// The search is confined to the box `[-window, window]^d`, so the result
/// approximates the infinite-lattice distance; `None` when no path exists
/// inside the box.
pub fn hop_distance(spec: &LatticeSpec, from: &NodeIndex, to: &NodeIndex, window: i64) -> Option<usize> {
    let inside = |n: &NodeIndex| n.coords().iter().all(|c| c.abs() <= window);
    if !inside(from) || !inside(to) {
        return None;
    }
    let steps: Vec<NodeIndex> = spec
        .terms()
        .filter(|(n, w)| !n.is_origin() && *w != 0.0)
        .map(|(n, _)| -n)
        .collect();
    let mut dist: HashMap<NodeIndex, usize> = HashMap::from([(from.clone(), 0)]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(node) = queue.pop_front() {
        let d = dist[&node];
        if &node == to {
            return Some(d);
        }
        for step in &steps {
            let next = &node + step;
            if inside(&next) && !dist.contains_key(&next) {
                dist.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResult {
    pub node: NodeIndex,
    pub max_distance: usize,
    /// `None` when the targets are not output controllable from this node.
    pub value: Option<f64>,
    /// Lower bound on `value` at this `max_distance` (chain only).
    pub bound: Option<f64>,
    /// Position in the exact ranking, 0 for the winner.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementReport {
    pub metric: PlacementMetric,
    /// In the order the candidates were given.
    pub candidates: Vec<CandidateResult>,
    pub exact_winner: NodeIndex,
    pub heuristic_winner: NodeIndex,
    /// Spearman correlation between distance and metric over controllable
    /// candidates; `None` if fewer than two or either side is constant.
    pub spearman: Option<f64>,
}

impl PlacementReport {
    pub fn heuristic_agrees(&self) -> bool {
        self.exact_winner == self.heuristic_winner
    }
}

fn metric_value(metric: PlacementMetric, gram: &OutputGramian, g00: f64) -> Result<f64> {
    match metric {
        PlacementMetric::TraceInverse => trace_inverse(gram),
        PlacementMetric::NegLogDetScaled => neg_log_det_scaled(gram, g00),
    }
}

/// Evaluates every candidate as the single driver.
pub fn rank_candidates(problem: &PlacementProblem) -> Result<PlacementReport> {
    problem.validate()?;
    let targets = &problem.targets;
    let mut evaluated: Vec<(NodeIndex, usize, Option<f64>, Option<f64>)> = Vec::new();
    match &problem.lattice {
        PlacementLattice::Chain(params) => {
            let cfg = ContourConfig::default();
            let g00 = entry_contour(params, 0, 0, cfg)?;
            for c in &problem.candidates {
                let ell = max_distance(c, targets);
                let gram = nn1d_output_gramian(params, &DriverSet::new(vec![c.clone()])?, targets, cfg)?;
                let value = metric_value(problem.metric, &gram, g00).ok();
                let bound = match problem.metric {
                    PlacementMetric::TraceInverse => bound_trace_inverse(ell, params).map(|b| b.exact),
                    PlacementMetric::NegLogDetScaled => bound_neg_log_det(ell, params, targets.len()).map(|b| b.exact),
                }
                .ok();
                evaluated.push((c.clone(), ell, value, bound));
            }
        }
        PlacementLattice::General {
            spec,
            quadrature,
            hop_window,
        } => {
            let mut sg = SpectralGramian::new(spec, *quadrature)?;
            let origin = NodeIndex::origin(spec.dim());
            let g00 = sg.shifted_entry(&origin, &origin, GramianMode::Steady)?;
            for c in &problem.candidates {
                let hops: Option<Vec<usize>> = targets.iter().map(|t| hop_distance(spec, c, t, *hop_window)).collect();
                let ell = hops.map_or(usize::MAX, |h| h.into_iter().max().unwrap_or(0));
                let gram = sg.output_gramian(&DriverSet::new(vec![c.clone()])?, targets, GramianMode::Steady);
                let value = gram.and_then(|g| metric_value(problem.metric, &g, g00)).ok();
                evaluated.push((c.clone(), ell, value, None));
            }
        }
    }

    let mut order: Vec<usize> = (0..evaluated.len()).collect();
    order.sort_by(|&x, &y| {
        let (ex, ey) = (&evaluated[x], &evaluated[y]);
        let by_value = match (ex.2, ey.2) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        by_value.then(ex.1.cmp(&ey.1)).then_with(|| ex.0.cmp(&ey.0))
    });
    let mut rank = vec![0; evaluated.len()];
    for (r, &k) in order.iter().enumerate() {
        rank[k] = r;
    }
    let exact_winner = evaluated[order[0]].0.clone();

    let heuristic_winner = evaluated
        .iter()
        .min_by(|x, y| x.1.cmp(&y.1).then_with(|| x.0.cmp(&y.0)))
        .map(|e| e.0.clone())
        .expect("candidates are non-empty");

    let (dist, vals): (Vec<f64>, Vec<f64>) = evaluated
        .iter()
        .filter_map(|e| e.2.map(|v| (e.1 as f64, v)))
        .unzip();
    let spearman = spearman(&dist, &vals);

    let candidates = evaluated
        .into_iter()
        .zip(rank)
        .map(|((node, max_distance, value, bound), rank)| CandidateResult {
            node,
            max_distance,
            value,
            bound,
            rank,
        })
        .collect();
    Ok(PlacementReport {
        metric: problem.metric,
        candidates,
        exact_winner,
        heuristic_winner,
        spearman,
    })
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(v: impl IntoIterator<Item = i64>) -> Vec<NodeIndex> {
        v.into_iter().map(NodeIndex::scalar).collect()
    }

    fn targets(v: impl IntoIterator<Item = i64>) -> TargetSet {
        TargetSet::scalars(v).unwrap()
    }

    #[test]
    fn max_distance_examples() {
        assert_eq!(max_distance(&NodeIndex::scalar(0), &targets([0])), 0);
        assert_eq!(max_distance(&NodeIndex::scalar(0), &targets([1, 4, 7])), 7);
        assert_eq!(max_distance(&NodeIndex::scalar(4), &targets([1, 4, 7])), 3);
    }

    #[test]
    fn heuristic_examples() {
        let c = nodes(0..8);
        assert_eq!(distance_heuristic(&targets([2]), &c).unwrap(), NodeIndex::scalar(2));
        assert_eq!(distance_heuristic(&targets([0, 7]), &c).unwrap(), NodeIndex::scalar(3));
        assert_eq!(distance_heuristic(&targets([1, 2, 3]), &c).unwrap(), NodeIndex::scalar(2));
        assert!(distance_heuristic(&targets([1]), &[]).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 100.0, 1000.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[3.0, 2.0]), None);
        assert_eq!(spearman(&[1.0], &[3.0]), None);
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(r > 0.9 && r < 1.0);
    }

    #[test]
    fn hop_distance_on_directed_lattice() {
        // Node a feeds a-1 only: information flows toward -inf.
        let spec = LatticeSpec::new(1, vec![vec![0], vec![1]], vec![-2.0, 1.0]).unwrap();
        let a = NodeIndex::scalar(3);
        assert_eq!(hop_distance(&spec, &a, &NodeIndex::scalar(0), 10), Some(3));
        assert_eq!(hop_distance(&spec, &a, &NodeIndex::scalar(5), 10), None);
        assert_eq!(hop_distance(&spec, &a, &NodeIndex::scalar(-20), 10), None);
    }

    #[test]
    fn hop_distance_matches_l1_on_square_lattice() {
        let spec = LatticeSpec::nearest_neighbor(2, -5.0, 1.0);
        let a = NodeIndex::new(vec![1, -1]);
        for t in [vec![1, -1], vec![3, 2], vec![-2, 0]] {
            let t = NodeIndex::new(t);
            assert_eq!(hop_distance(&spec, &a, &t, 5), Some((&t - &a).l1_norm() as usize));
        }
    }

    #[test]
    fn driver_on_single_target_wins() {
        let params = NN1DParams::new(-3.0, 1.0).unwrap();
        let problem = PlacementProblem::chain(params, targets([0]), nodes(0..3), PlacementMetric::TraceInverse).unwrap();
        let report = rank_candidates(&problem).unwrap();
        assert_eq!(report.exact_winner, NodeIndex::scalar(0));
        assert!(report.heuristic_agrees());
    }

    #[test]
    fn rejects_bad_problems() {
        let params = NN1DParams::new(-3.0, 1.0).unwrap();
        assert!(PlacementProblem::chain(params, targets([0]), vec![], PlacementMetric::TraceInverse).is_err());
        assert!(PlacementProblem::chain(params, targets([0]), nodes([1, 1]), PlacementMetric::TraceInverse).is_err());
        assert!("volume".parse::<PlacementMetric>().is_err());
        assert_eq!("trace_inverse".parse::<PlacementMetric>().unwrap(), PlacementMetric::TraceInverse);
    }
}
