//! Shortest paths by message passing with a learned minimum aggregator.
//!
//! Every node folds the list `[d(v)] ++ [d(u) + w(u, v)]` with one shared
//! recurrent minimum cell. Training is teacher-forced on Bellman-Ford
//! iterates; evaluation rolls the model out freely for `n` iterations.

use crate::autodiff::{GradBuffer, Model, Parameter, RngStream};
use crate::error::Result;
use crate::harness::{train_with, LossCurve, TrainConfig};
use crate::nsr::{NsrParams, NsrWeightRow};
use crate::recurrent::MinCell;
use crate::tasks::{bellman_ford, ComparisonOp, WeightedGraph};

/// Order in which a node's neighbour messages enter the fold. The node's
/// own distance always comes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageOrder {
    Ascending,
    /// Neighbours shuffled afresh for every node and step from this seed.
    Shuffled(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnnModel {
    pub cell: MinCell<NsrParams>,
}

impl GnnModel {
    pub fn init(redundancy: usize, lambda: f64, rng: &mut RngStream) -> Result<Self> {
        Ok(GnnModel { cell: MinCell::new(NsrParams::init(2, redundancy, lambda, rng)?) })
    }

    /// Gate that keeps the state iff it is below the incoming message.
    pub fn perfect() -> Self {
        let gate = NsrWeightRow::for_op(ComparisonOp::Lt).build(1.0).expect("table row is valid");
        GnnModel { cell: MinCell::new(gate) }
    }
}

impl Model for GnnModel {
    fn parameters(&self) -> Vec<&Parameter> {
        self.cell.parameters()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.cell.parameters_mut()
    }
}

/// Message list of every node for the distances `states`.
pub fn messages(adjacency: &[Vec<(usize, u64)>], states: &[f64]) -> Vec<Vec<f64>> {
    adjacency
        .iter()
        .enumerate()
        .map(|(v, nbrs)| {
            let mut m = Vec::with_capacity(nbrs.len() + 1);
            m.push(states[v]);
            m.extend(nbrs.iter().map(|&(u, w)| states[u] + w as f64));
            m
        })
        .collect()
}

/// One synchronous update with neighbours in ascending id order.
pub fn gnn_step(graph: &WeightedGraph, states: &[f64], model: &GnnModel) -> Vec<f64> {
    step_with(&graph.adjacency(), states, model, None)
}

fn step_with(adjacency: &[Vec<(usize, u64)>], states: &[f64], model: &GnnModel, shuffle: Option<&mut RngStream>) -> Vec<f64> {
    let mut lists = messages(adjacency, states);
    if let Some(rng) = shuffle {
        for list in &mut lists {
            rng.shuffle(&mut list[1..]);
        }
    }
    lists.iter().map(|list| model.cell.run(list)).collect()
}

/// Teacher-forced training: at every iteration the inputs are the true
/// previous Bellman-Ford table and the target is the next one. The loss is
/// the mean absolute error over graphs, iterations and nodes.
pub fn train_teacher_forced(graphs: &[WeightedGraph], model: &mut GnnModel, config: &TrainConfig) -> Result<LossCurve> {
    let mut cases: Vec<(Vec<f64>, f64)> = Vec::new();
    for g in graphs {
        let adjacency = g.adjacency();
        let iterates = bellman_ford(g);
        for w in iterates.windows(2) {
            for (list, &target) in messages(&adjacency, &w[0]).into_iter().zip(&w[1]) {
                cases.push((list, target));
            }
        }
    }
    if cases.is_empty() {
        return Ok(LossCurve::default());
    }
    let inv = 1.0 / cases.len() as f64;
    train_with(model, config, |m: &GnnModel, grads: &mut GradBuffer| {
        let total: f64 = cases.iter().map(|(list, t)| m.cell.mae_backward(list, *t, grads)).sum();
        grads.scale(inv);
        total * inv
    })
}

/// Free-running distances after `graph.n` steps.
pub fn rollout(graph: &WeightedGraph, model: &GnnModel, order: MessageOrder) -> Vec<f64> {
    let adjacency = graph.adjacency();
    let mut states = bellman_ford_start(graph);
    let mut rng = match order {
        MessageOrder::Ascending => None,
        MessageOrder::Shuffled(seed) => Some(RngStream::new(seed)),
    };
    for _ in 0..graph.n {
        states = step_with(&adjacency, &states, model, rng.as_mut());
    }
    states
}

fn bellman_ford_start(graph: &WeightedGraph) -> Vec<f64> {
    let init = graph.unreached_distance();
    (0..graph.n).map(|v| if v == graph.source { 0.0 } else { init }).collect()
}

/// Mean `|predicted - true|` distance after a free rollout, divided by
/// `max_weight`.
pub fn eval_rollout(graph: &WeightedGraph, model: &GnnModel, max_weight: f64, order: MessageOrder) -> f64 {
    let pred = rollout(graph, model, order);
    let truth = bellman_ford(graph).pop().expect("at least d^0");
    let err: f64 = pred.iter().zip(&truth).map(|(p, t)| (p - t).abs()).sum();
    err / graph.n as f64 / max_weight
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::random_graph;

    #[test]
    fn perfect_gate_step_is_bellman_ford() {
        let model = GnnModel::perfect();
        let mut rng = RngStream::new(2);
        for _ in 0..100 {
            let n = 2 + rng.index(9);
            let g = random_graph(n, 20, &mut rng).unwrap();
            let it = bellman_ford(&g);
            for w in it.windows(2) {
                assert_eq!(gnn_step(&g, &w[0], &model), w[1]);
            }
        }
    }

    #[test]
    fn single_edge_one_step() {
        let g = WeightedGraph::new(2, 0, [(0, 1, 7)]).unwrap();
        let d = gnn_step(&g, &bellman_ford_start(&g), &GnnModel::perfect());
        assert_eq!(d, vec![0.0, 7.0]);
    }

    #[test]
    fn settled_distances_are_fixed() {
        let g = WeightedGraph::new(3, 0, [(0, 1, 2), (1, 2, 2), (0, 2, 9)]).unwrap();
        let d = vec![0.0, 2.0, 4.0];
        assert_eq!(gnn_step(&g, &d, &GnnModel::perfect()), d);
    }

    #[test]
    fn perfect_rollout_has_zero_error() {
        let mut rng = RngStream::new(5);
        for order in [MessageOrder::Ascending, MessageOrder::Shuffled(3)] {
            let g = random_graph(12, 30, &mut rng).unwrap();
            assert_eq!(eval_rollout(&g, &GnnModel::perfect(), 30.0, order), 0.0);
        }
    }

    #[test]
    fn random_gate_has_positive_error() {
        let g = random_graph(10, 10, &mut RngStream::new(8)).unwrap();
        let m = GnnModel::init(10, 1.0, &mut RngStream::new(1)).unwrap();
        assert!(eval_rollout(&g, &m, 10.0, MessageOrder::Ascending) > 0.0);
    }

    #[test]
    fn teacher_forced_loss_is_zero_at_the_optimum() {
        let g = random_graph(6, 5, &mut RngStream::new(4)).unwrap();
        let mut m = GnnModel::perfect();
        let curve = train_teacher_forced(&[g], &mut m, &TrainConfig::default().with_epochs(1)).unwrap();
        assert!(curve.points[0].1 < 1e-12, "{curve:?}");
    }

    #[test]
    fn zero_epochs_leave_model_unchanged() {
        let g = random_graph(5, 5, &mut RngStream::new(4)).unwrap();
        let mut m = GnnModel::init(3, 1.0, &mut RngStream::new(0)).unwrap();
        let before = m.clone();
        train_teacher_forced(&[g], &mut m, &TrainConfig::default().with_epochs(0)).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn weights_are_tied() {
        let m = GnnModel::init(10, 1.0, &mut RngStream::new(0)).unwrap();
        assert_eq!(m.parameter_count(), 70);
        assert_eq!(m.cell.gate.snapshot().entries.len(), 6);
    }
}
