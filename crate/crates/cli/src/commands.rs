use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nsrlab_core::gnn::MessageOrder;
use nsrlab_core::harness::{
    sweep, workers_from_env, CompareCell, Experiment, FloatsCell, PiecewiseCell, RecurrentCell, RedundancyCell,
    RedundancyTask, ResultWriter, RunResult, SsspCell, TrainConfig,
};
use nsrlab_core::tasks::Magnitude;
use nsrlab_core::{selftest, Error};

use crate::args::{
    AblationTask, CompareArgs, FloatsArgs, List, ModelArgs, PiecewiseArgs, RecurrentArgs, RedundancyArgs, RunArgs,
    SsspArgs,
};

/// Failures split by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

/// Effective configuration, one `key = value` line each.
struct Echo(Vec<(String, String)>);

impl Echo {
    fn new(command: &str) -> Self {
        Echo(vec![("command".into(), command.into()), ("version".into(), env!("CARGO_PKG_VERSION").into())])
    }

    fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.0.push((key.into(), value.to_string()));
        self
    }

    fn list<T: Display>(&mut self, key: &str, items: &[T]) -> &mut Self {
        let joined = items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        self.set(key, joined)
    }

    fn text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}.config.txt"))
}

fn train_config(run: &RunArgs, lambda: f64, redundancy: usize) -> Result<TrainConfig, Failure> {
    let cfg = TrainConfig::default().with_epochs(run.epochs).with_lambda(lambda).with_redundancy(redundancy);
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn check_magnitudes(base: u32, exponents: &[u32]) -> Result<(), Failure> {
    for &e in exponents {
        Magnitude::new(base, e).map_err(usage)?;
    }
    Ok(())
}

fn nonempty<T>(name: &str, items: &List<T>) -> Result<(), Failure> {
    if items.0.is_empty() {
        return Err(Failure::Usage(format!("--{name} must not be empty")));
    }
    Ok(())
}

fn run_args_echo(echo: &mut Echo, run: &RunArgs, workers: usize) {
    echo.list("seeds", &run.seeds.0).set("epochs", run.epochs).set("out", run.out.display()).set("workers", workers);
}

fn model_echo(echo: &mut Echo, model: &ModelArgs) {
    echo.set("lambda", model.lambda).set("redundancy", model.redundancy);
}

/// Writes the sidecar, runs every cell for every seed and streams rows to
/// the CSV.
fn execute(cells: Vec<Experiment>, run: &RunArgs, mut echo: Echo) -> Result<Vec<RunResult>, Failure> {
    let workers = workers_from_env(run.workers);
    run_args_echo(&mut echo, run, workers);
    if let Some(dir) = run.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let sidecar = sidecar_path(&run.out);
    fs::write(&sidecar, echo.text()).with_context(|| format!("writing {}", sidecar.display()))?;
    let mut writer = ResultWriter::create(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    let rows = sweep(&cells, &run.seeds.0, workers, &mut writer).with_context(|| format!("writing {}", run.out.display()))?;
    let expected: usize = cells.len() * run.seeds.0.len();
    eprintln!("{} rows from {expected} runs written to {}", rows.len(), run.out.display());
    Ok(rows)
}

pub fn compare(a: &CompareArgs) -> Result<Vec<RunResult>, Failure> {
    let train = train_config(&a.run, a.model.lambda, a.model.redundancy)?;
    check_magnitudes(10, &a.exponents.0)?;
    let mut echo = Echo::new("compare");
    echo.set("op", a.op);
    model_echo(&mut echo, &a.model);
    echo.list("exponents", &a.exponents.0);
    let cell = Experiment::Compare(CompareCell { op: a.op, train, exponents: a.exponents.0.clone() });
    execute(vec![cell], &a.run, echo)
}

pub fn floats(a: &FloatsArgs) -> Result<Vec<RunResult>, Failure> {
    nonempty("ops", &a.ops)?;
    nonempty("deltas", &a.deltas)?;
    nonempty("lambdas", &a.lambdas)?;
    check_magnitudes(10, &a.exponents.0)?;
    if let Some(d) = a.deltas.0.iter().find(|d| **d <= 0.0) {
        return Err(Failure::Usage(format!("delta must be positive, got {d}")));
    }
    let mut cells = Vec::new();
    for &op in &a.ops.0 {
        for &delta in &a.deltas.0 {
            for &lambda in &a.lambdas.0 {
                let train = train_config(&a.run, lambda, a.redundancy)?;
                cells.push(Experiment::Floats(FloatsCell { op, delta, train, exponents: a.exponents.0.clone() }));
            }
        }
    }
    let mut echo = Echo::new("floats");
    echo.list("ops", &a.ops.0)
        .list("deltas", &a.deltas.0)
        .list("lambdas", &a.lambdas.0)
        .set("redundancy", a.redundancy)
        .list("exponents", &a.exponents.0);
    execute(cells, &a.run, echo)
}

pub fn piecewise(a: &PiecewiseArgs) -> Result<Vec<RunResult>, Failure> {
    let mut train = train_config(&a.run, a.model.lambda, a.model.redundancy)?;
    train.tolerance = a.tolerance;
    train.validate().map_err(usage)?;
    check_magnitudes(3, &a.exponents.0)?;
    let mut echo = Echo::new("piecewise");
    echo.set("fn", a.func);
    model_echo(&mut echo, &a.model);
    echo.set("tolerance", a.tolerance).list("exponents", &a.exponents.0);
    let cell = Experiment::Piecewise(PiecewiseCell { func: a.func, train, exponents: a.exponents.0.clone() });
    execute(vec![cell], &a.run, echo)
}

pub fn redundancy(a: &RedundancyArgs) -> Result<Vec<RunResult>, Failure> {
    nonempty("tasks", &a.tasks)?;
    nonempty("r-range", &a.r_range)?;
    let mut cells = Vec::new();
    for &task in &a.tasks.0 {
        let (task, base) = match task {
            AblationTask::Comparison(op) => (RedundancyTask::Comparison(op), 10),
            AblationTask::Piecewise(func) => (RedundancyTask::Piecewise(func), 3),
        };
        check_magnitudes(base, &a.exponents.0)?;
        for &r in &a.r_range.0 {
            let train = train_config(&a.run, a.lambda, r)?;
            cells.push(Experiment::Redundancy(RedundancyCell { task, train, exponents: a.exponents.0.clone() }));
        }
    }
    let mut echo = Echo::new("redundancy");
    echo.list("tasks", &a.tasks.0).list("r_range", &a.r_range.0).set("lambda", a.lambda).list("exponents", &a.exponents.0);
    execute(cells, &a.run, echo)
}

pub fn recurrent(a: &RecurrentArgs) -> Result<Vec<RunResult>, Failure> {
    nonempty("lengths", &a.lengths)?;
    nonempty("magnitudes", &a.magnitudes)?;
    let mut train = train_config(&a.run, a.model.lambda, a.model.redundancy)?;
    train.tolerance = a.tolerance;
    train.validate().map_err(usage)?;
    let exps: Vec<u32> = a.magnitudes.0.iter().filter_map(|s| s.0).collect();
    check_magnitudes(3, &exps)?;
    if a.lengths.0.contains(&0) || a.train_len == 0 {
        return Err(Failure::Usage("list lengths must be >= 1".into()));
    }
    if a.train_lists == 0 || a.eval_lists == 0 {
        return Err(Failure::Usage("--train-lists and --eval-lists must be >= 1".into()));
    }
    let mut echo = Echo::new("recurrent");
    echo.set("kind", a.kind);
    model_echo(&mut echo, &a.model);
    echo.list("lengths", &a.lengths.0)
        .list("magnitudes", &a.magnitudes.0)
        .set("train_lists", a.train_lists)
        .set("train_len", a.train_len)
        .set("eval_lists", a.eval_lists)
        .set("tolerance", a.tolerance);
    let cell = Experiment::Recurrent(RecurrentCell {
        kind: a.kind,
        train,
        train_lists: a.train_lists,
        train_len: a.train_len,
        lengths: a.lengths.0.clone(),
        magnitudes: a.magnitudes.0.iter().map(|s| s.0).collect(),
        eval_lists: a.eval_lists,
    });
    execute(vec![cell], &a.run, echo)
}

pub fn sssp(a: &SsspArgs) -> Result<Vec<RunResult>, Failure> {
    nonempty("scales", &a.scales)?;
    let train = train_config(&a.run, a.model.lambda, a.model.redundancy)?;
    check_magnitudes(3, &a.scales.0)?;
    if a.nodes < 2 || a.max_weight == 0 || a.train_graphs == 0 || a.test_graphs == 0 {
        return Err(Failure::Usage("need --nodes >= 2 and positive --max-weight, --train-graphs, --test-graphs".into()));
    }
    let order = if a.shuffled_order { MessageOrder::Shuffled(0) } else { MessageOrder::Ascending };
    let mut echo = Echo::new("sssp");
    model_echo(&mut echo, &a.model);
    echo.list("scales", &a.scales.0)
        .set("train_graphs", a.train_graphs)
        .set("nodes", a.nodes)
        .set("max_weight", a.max_weight)
        .set("test_graphs", a.test_graphs)
        .set("shuffled_order", a.shuffled_order);
    let cell = Experiment::Sssp(SsspCell {
        train,
        train_graphs: a.train_graphs,
        base_nodes: a.nodes,
        base_weight: a.max_weight,
        scales: a.scales.0.clone(),
        test_graphs: a.test_graphs,
        order,
    });
    execute(vec![cell], &a.run, echo)
}

/// Prints one line per check; `Ok(false)` if any failed.
pub fn selftest(seed: u64) -> bool {
    let report = selftest::run(seed, |c, secs| println!("{c} ({secs:.1}s)"));
    let passed = report.passed();
    println!("selftest {}", if passed { "passed" } else { "FAILED" });
    passed
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_sits_next_to_the_csv() {
        assert_eq!(sidecar_path(Path::new("out/run.csv")), PathBuf::from("out/run.config.txt"));
        assert_eq!(sidecar_path(Path::new("plain")), PathBuf::from("plain.config.txt"));
    }

    #[test]
    fn echo_lines() {
        let mut e = Echo::new("compare");
        e.set("op", "gt").list("seeds", &[0, 1, 2]);
        let text = e.text();
        assert!(text.starts_with("command = compare\n"));
        assert!(text.ends_with("op = gt\nseeds = 0,1,2\n"));
    }
}
