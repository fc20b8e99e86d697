use std::io::Write;

use crate::autodiff::{GradBuffer, Model, RngStream};
use crate::baselines::{MlpParams, OutputActivation, HIDDEN};
use crate::error::Result;
use crate::gnn::{eval_rollout, train_teacher_forced, GnnModel, MessageOrder};
use crate::model::ScalarModel;
use crate::nsr::NsrParams;
use crate::recurrent::{CountCell, MinCell};
use crate::tasks::{
    random_graph, ComparisonOp, Dataset, Magnitude, PiecewiseFn, SequenceExample, SequenceKind, TaskKind, TaskSpec,
};

use super::eval::{eval_classification, eval_regression};
use super::gated::GatedPiecewise;
use super::pool::run_ordered;
use super::result::{Metric, ResultWriter, RunResult};
use super::train::{train, train_with, TrainConfig};

/// Comparison model against the MLP on integer pairs, evaluated on the
/// training set and on base-10 extrapolation suites.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareCell {
    pub op: ComparisonOp,
    pub train: TrainConfig,
    pub exponents: Vec<u32>,
}

/// NSR only, inputs scaled by `delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatsCell {
    pub op: ComparisonOp,
    pub delta: f64,
    pub train: TrainConfig,
    pub exponents: Vec<u32>,
}

/// Gated NSR against a linear-output MLP, base-3 suites.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseCell {
    pub func: PiecewiseFn,
    pub train: TrainConfig,
    pub exponents: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RedundancyTask {
    Comparison(ComparisonOp),
    Piecewise(PiecewiseFn),
}

/// One NSR run at the redundancy in `train`. Comparisons use base-10
/// suites, piecewise functions base 3.
#[derive(Clone, Debug, PartialEq)]
pub struct RedundancyCell {
    pub task: RedundancyTask,
    pub train: TrainConfig,
    pub exponents: Vec<u32>,
}

/// Recurrent NSR and MLP cells trained on short lists. `magnitudes` holds
/// base-3 exponents; `None` is the training range.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentCell {
    pub kind: SequenceKind,
    pub train: TrainConfig,
    pub train_lists: usize,
    pub train_len: usize,
    pub lengths: Vec<usize>,
    pub magnitudes: Vec<Option<u32>>,
    pub eval_lists: usize,
}

/// Message-passing shortest paths. Node counts and maximum weights are
/// scaled by `3^i` for every `i` in `scales`, one axis at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct SsspCell {
    pub train: TrainConfig,
    pub train_graphs: usize,
    pub base_nodes: usize,
    pub base_weight: u64,
    pub scales: Vec<u32>,
    pub test_graphs: usize,
    pub order: MessageOrder,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    Compare(CompareCell),
    Floats(FloatsCell),
    Piecewise(PiecewiseCell),
    Redundancy(RedundancyCell),
    Recurrent(RecurrentCell),
    Sssp(SsspCell),
}

pub const NSR: &str = "nsr";
pub const NSR_GATED: &str = "nsr-gated";
pub const MLP: &str = "mlp";

struct RowTemplate<'a> {
    task: &'a str,
    op: String,
    seed: u64,
    delta: f64,
}

impl RowTemplate<'_> {
    fn row(&self, model: &str, cfg: Option<&TrainConfig>, magnitude: Option<Magnitude>, value: Option<f64>) -> RunResult {
        RunResult {
            task: self.task.to_string(),
            op: self.op.clone(),
            model: model.to_string(),
            seed: self.seed,
            magnitude,
            seq_len: None,
            delta: self.delta,
            lambda: cfg.map(|c| c.lambda),
            redundancy: cfg.map(|c| c.redundancy),
            metric: Metric::Accuracy,
            value,
        }
    }

    /// Training-set row plus one row per suite; all values empty on failure.
    fn rows(
        &self,
        model: &str,
        cfg: Option<&TrainConfig>,
        train: Option<f64>,
        suites: &[(Magnitude, Dataset)],
        score: impl Fn(&Dataset) -> f64,
    ) -> Vec<RunResult> {
        let ok = train.is_some();
        let mut out = vec![self.row(model, cfg, None, train)];
        out.extend(suites.iter().map(|(m, d)| self.row(model, cfg, Some(*m), ok.then(|| score(d)))));
        out
    }
}

fn magnitudes(base: u32, exponents: &[u32]) -> Result<Vec<Magnitude>> {
    exponents.iter().map(|&e| Magnitude::new(base, e)).collect()
}

fn suites(kind: TaskKind, seed: u64, delta: f64, mags: &[Magnitude]) -> Result<Vec<(Magnitude, Dataset)>> {
    mags.iter()
        .map(|&m| Ok((m, TaskSpec::new(kind, seed).with_delta(delta).with_magnitude(m).dataset()?)))
        .collect()
}

fn init_stream(seed: u64, label: &str) -> RngStream {
    RngStream::new(seed).split_named(label)
}

/// Trains and returns `Some(score on the training set)`, or `None` if
/// training diverged.
fn fit<M: ScalarModel>(model: &mut M, data: &Dataset, cfg: &TrainConfig, score: impl Fn(&M, &Dataset) -> f64) -> Option<f64> {
    match train(model, data, cfg) {
        Ok(_) => Some(score(model, data)),
        Err(_) => None,
    }
}

impl CompareCell {
    fn run(&self, seed: u64) -> Result<Vec<RunResult>> {
        let kind = TaskKind::Comparison(self.op);
        let data = TaskSpec::new(kind, seed).dataset()?;
        let suites = suites(kind, seed, 1.0, &magnitudes(10, &self.exponents)?)?;
        let t = RowTemplate { task: "compare", op: self.op.to_string(), seed, delta: 1.0 };
        let cfg = &self.train;

        let mut nsr = NsrParams::init(2, cfg.redundancy, cfg.lambda, &mut init_stream(seed, "compare/nsr"))?;
        let acc = fit(&mut nsr, &data, cfg, eval_classification);
        let mut rows = t.rows(NSR, Some(cfg), acc, &suites, |d| eval_classification(&nsr, d));

        let mut mlp = MlpParams::init(2, HIDDEN, OutputActivation::Sigmoid, &mut init_stream(seed, "compare/mlp"))?;
        let acc = fit(&mut mlp, &data, cfg, eval_classification);
        rows.extend(t.rows(MLP, None, acc, &suites, |d| eval_classification(&mlp, d)));
        Ok(rows)
    }
}

impl FloatsCell {
    fn run(&self, seed: u64) -> Result<Vec<RunResult>> {
        let kind = TaskKind::Comparison(self.op);
        let data = TaskSpec::new(kind, seed).with_delta(self.delta).dataset()?;
        let suites = suites(kind, seed, self.delta, &magnitudes(10, &self.exponents)?)?;
        let t = RowTemplate { task: "floats", op: self.op.to_string(), seed, delta: self.delta };
        let cfg = &self.train;
        let mut nsr = NsrParams::init(2, cfg.redundancy, cfg.lambda, &mut init_stream(seed, "floats/nsr"))?;
        let acc = fit(&mut nsr, &data, cfg, eval_classification);
        Ok(t.rows(NSR, Some(cfg), acc, &suites, |d| eval_classification(&nsr, d)))
    }
}

impl PiecewiseCell {
    fn run(&self, seed: u64) -> Result<Vec<RunResult>> {
        let kind = TaskKind::Piecewise(self.func);
        let data = TaskSpec::new(kind, seed).dataset()?;
        let suites = suites(kind, seed, 1.0, &magnitudes(3, &self.exponents)?)?;
        let t = RowTemplate { task: "piecewise", op: self.func.to_string(), seed, delta: 1.0 };
        let cfg = &self.train;
        let n = self.func.input_dim();

        let mut gated = GatedPiecewise::init(n, cfg.redundancy, cfg.lambda, &mut init_stream(seed, "piecewise/nsr"))?;
        let acc = fit(&mut gated, &data, cfg, |m, d| eval_regression(m, d, cfg.tolerance));
        let mut rows = t.rows(NSR_GATED, Some(cfg), acc, &suites, |d| eval_regression(&gated, d, cfg.tolerance));

        let mut mlp = MlpParams::init(n, HIDDEN, OutputActivation::Linear, &mut init_stream(seed, "piecewise/mlp"))?;
        let acc = fit(&mut mlp, &data, cfg, |m, d| eval_regression(m, d, cfg.tolerance));
        rows.extend(t.rows(MLP, None, acc, &suites, |d| eval_regression(&mlp, d, cfg.tolerance)));
        Ok(rows)
    }
}

impl RedundancyCell {
    fn run(&self, seed: u64) -> Result<Vec<RunResult>> {
        let cfg = &self.train;
        match self.task {
            RedundancyTask::Comparison(op) => {
                let kind = TaskKind::Comparison(op);
                let data = TaskSpec::new(kind, seed).dataset()?;
                let suites = suites(kind, seed, 1.0, &magnitudes(10, &self.exponents)?)?;
                let t = RowTemplate { task: "redundancy", op: op.to_string(), seed, delta: 1.0 };
                let mut nsr = NsrParams::init(2, cfg.redundancy, cfg.lambda, &mut init_stream(seed, "redundancy/nsr"))?;
                let acc = fit(&mut nsr, &data, cfg, eval_classification);
                Ok(t.rows(NSR, Some(cfg), acc, &suites, |d| eval_classification(&nsr, d)))
            }
            RedundancyTask::Piecewise(func) => {
                let kind = TaskKind::Piecewise(func);
                let data = TaskSpec::new(kind, seed).dataset()?;
                let suites = suites(kind, seed, 1.0, &magnitudes(3, &self.exponents)?)?;
                let t = RowTemplate { task: "redundancy", op: func.to_string(), seed, delta: 1.0 };
                let mut gated =
                    GatedPiecewise::init(func.input_dim(), cfg.redundancy, cfg.lambda, &mut init_stream(seed, "redundancy/nsr"))?;
                let acc = fit(&mut gated, &data, cfg, |m, d| eval_regression(m, d, cfg.tolerance));
                Ok(t.rows(NSR_GATED, Some(cfg), acc, &suites, |d| eval_regression(&gated, d, cfg.tolerance)))
            }
        }
    }
}

/// A recurrent cell seen through the operations the harness needs.
trait SequenceModel: Model {
    fn output(&self, list: &[f64]) -> f64;
    fn loss_backward(&self, list: &[f64], target: f64, grads: &mut GradBuffer) -> f64;
}

impl<G: ScalarModel> SequenceModel for MinCell<G> {
    fn output(&self, list: &[f64]) -> f64 {
        self.run(list)
    }
    fn loss_backward(&self, list: &[f64], target: f64, grads: &mut GradBuffer) -> f64 {
        self.mae_backward(list, target, grads)
    }
}

impl<G: ScalarModel> SequenceModel for CountCell<G> {
    fn output(&self, list: &[f64]) -> f64 {
        self.run(list)
    }
    fn loss_backward(&self, list: &[f64], target: f64, grads: &mut GradBuffer) -> f64 {
        self.mae_backward(list, target, grads)
    }
}

fn train_sequences<M: SequenceModel>(model: &mut M, set: &[SequenceExample], cfg: &TrainConfig) -> Result<()> {
    let inv = 1.0 / set.len() as f64;
    train_with(model, cfg, |m, g| {
        let total: f64 = set.iter().map(|e| m.loss_backward(&e.list, e.target, g)).sum();
        g.scale(inv);
        total * inv
    })?;
    Ok(())
}

fn sequence_accuracy<M: SequenceModel>(model: &M, set: &[SequenceExample], tol: f64) -> f64 {
    if set.is_empty() {
        return f64::NAN;
    }
    let hits = set.iter().filter(|e| (model.output(&e.list) - e.target).abs() <= tol).count();
    hits as f64 / set.len() as f64
}

impl RecurrentCell {
    fn run(&self, seed: u64) -> Result<Vec<RunResult>> {
        let kind = TaskKind::Sequence(self.kind);
        let train_set = TaskSpec::new(kind, seed).with_sequences(self.train_lists, self.train_len).sequences()?;
        let mut evals = Vec::new();
        for &len in &self.lengths {
            for &exp in &self.magnitudes {
                let mag = exp.map(|e| Magnitude::new(3, e)).transpose()?;
                let mut spec = TaskSpec::new(kind, seed).with_sequences(self.eval_lists, len);
                spec.magnitude = mag;
                evals.push((len, mag, spec.sequences()?));
            }
        }
        let cfg = &self.train;
        let gate_nsr = NsrParams::init(2, cfg.redundancy, cfg.lambda, &mut init_stream(seed, "recurrent/nsr"))?;
        let gate_mlp = MlpParams::init(2, HIDDEN, OutputActivation::Sigmoid, &mut init_stream(seed, "recurrent/mlp"))?;
        let mut rows = Vec::new();
        match self.kind {
            SequenceKind::Min => {
                rows.extend(self.fit_and_score(MinCell::new(gate_nsr), NSR, Some(cfg), &train_set, &evals, seed));
                rows.extend(self.fit_and_score(MinCell::new(gate_mlp), MLP, None, &train_set, &evals, seed));
            }
            SequenceKind::Count => {
                rows.extend(self.fit_and_score(CountCell::new(gate_nsr), NSR, Some(cfg), &train_set, &evals, seed));
                rows.extend(self.fit_and_score(CountCell::new(gate_mlp), MLP, None, &train_set, &evals, seed));
            }
        }
        Ok(rows)
    }

    fn fit_and_score<M: SequenceModel>(
        &self,
        mut model: M,
        name: &str,
        cfg: Option<&TrainConfig>,
        train_set: &[SequenceExample],
        evals: &[(usize, Option<Magnitude>, Vec<SequenceExample>)],
        seed: u64,
    ) -> Vec<RunResult> {
        let ok = train_sequences(&mut model, train_set, &self.train).is_ok();
        let t = RowTemplate { task: "recurrent", op: self.kind.to_string(), seed, delta: 1.0 };
        let tol = self.train.tolerance;
        let mut rows = Vec::new();
        for (len, mag, set) in evals {
            let mut r = t.row(name, cfg, *mag, ok.then(|| sequence_accuracy(&model, set, tol)));
            r.seq_len = Some(*len);
            rows.push(r);
        }
        rows
    }
}

impl SsspCell {
    fn run(&self, seed: u64) -> Result<Vec<RunResult>> {
        let cfg = &self.train;
        let mut rng = RngStream::new(seed).split_named("sssp/train-graphs");
        let graphs = (0..self.train_graphs)
            .map(|_| random_graph(self.base_nodes, self.base_weight, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let mut model = GnnModel::init(cfg.redundancy, cfg.lambda, &mut init_stream(seed, "sssp/nsr"))?;
        let ok = train_teacher_forced(&graphs, &mut model, cfg).is_ok();
        let model_name = match self.order {
            MessageOrder::Ascending => NSR.to_string(),
            MessageOrder::Shuffled(_) => format!("{NSR}-shuffled"),
        };
        let mut rows = Vec::new();
        for axis in ["nodes", "weights"] {
            for &i in &self.scales {
                let factor = 3u64.pow(i);
                let (n, w) = match axis {
                    "nodes" => (self.base_nodes * factor as usize, self.base_weight),
                    _ => (self.base_nodes, self.base_weight * factor),
                };
                let mut rng = RngStream::new(seed).split_named(&format!("sssp/test/{n}/{w}"));
                let mut total = 0.0;
                for k in 0..self.test_graphs {
                    let g = random_graph(n, w, &mut rng)?;
                    let order = match self.order {
                        MessageOrder::Ascending => MessageOrder::Ascending,
                        MessageOrder::Shuffled(s) => {
                            MessageOrder::Shuffled(RngStream::new(seed).split_named(&format!("sssp/order/{s}/{k}")).seed())
                        }
                    };
                    total += eval_rollout(&g, &model, w as f64, order);
                }
                rows.push(RunResult {
                    task: "sssp".into(),
                    op: axis.into(),
                    model: model_name.clone(),
                    seed,
                    magnitude: Some(Magnitude::new(3, i)?),
                    seq_len: None,
                    delta: 1.0,
                    lambda: Some(cfg.lambda),
                    redundancy: Some(cfg.redundancy),
                    metric: Metric::NormalizedMae,
                    value: ok.then(|| total / self.test_graphs as f64),
                });
            }
        }
        Ok(rows)
    }
}

impl Experiment {
    /// Trains and evaluates one seed. Diverged runs come back as rows with
    /// empty values; `Err` means the cell itself is misconfigured.
    pub fn run(&self, seed: u64) -> Result<Vec<RunResult>> {
        match self {
            Experiment::Compare(c) => c.run(seed),
            Experiment::Floats(c) => c.run(seed),
            Experiment::Piecewise(c) => c.run(seed),
            Experiment::Redundancy(c) => c.run(seed),
            Experiment::Recurrent(c) => c.run(seed),
            Experiment::Sssp(c) => c.run(seed),
        }
    }

    pub fn train_config(&self) -> &TrainConfig {
        match self {
            Experiment::Compare(c) => &c.train,
            Experiment::Floats(c) => &c.train,
            Experiment::Piecewise(c) => &c.train,
            Experiment::Redundancy(c) => &c.train,
            Experiment::Recurrent(c) => &c.train,
            Experiment::Sssp(c) => &c.train,
        }
    }
}

/// Runs every cell for every seed (cell-major) on `workers` threads and
/// writes rows in job order as they complete. A misconfigured cell is
/// reported on stderr and skipped; the first write error aborts.
pub fn sweep<W: Write>(
    cells: &[Experiment],
    seeds: &[u64],
    workers: usize,
    writer: &mut ResultWriter<W>,
) -> Result<Vec<RunResult>> {
    let jobs: Vec<(&Experiment, u64)> = cells.iter().flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let mut all = Vec::new();
    let mut write_err = None;
    run_ordered(
        &jobs,
        workers,
        |(cell, seed)| cell.run(*seed),
        |i, res| match res {
            Ok(rows) => {
                for r in &rows {
                    if write_err.is_none() {
                        write_err = writer.write(r).err();
                    }
                }
                all.extend(rows);
            }
            Err(e) => eprintln!("cell {i} (seed {}) failed: {e}", jobs[i].1),
        },
    );
    match write_err {
        Some(e) => Err(e),
        None => Ok(all),
    }
}
