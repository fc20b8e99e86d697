use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use nsrlab_core::tasks::{ComparisonOp, PiecewiseFn, SequenceKind};

pub const DECADES: &str = "0.001,0.01,0.1,1,10,100,1000";

#[derive(Parser, Debug)]
#[command(name = "nsrlab", version, about = "Train and evaluate neural status registers against MLP baselines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integer comparisons with extrapolation to 10^2..10^13
    Compare(CompareArgs),
    /// Comparisons on floats over a delta x lambda grid
    Floats(FloatsArgs),
    /// Piecewise functions with a gated NSR against an MLP
    Piecewise(PiecewiseArgs),
    /// Redundancy ablation over r
    Redundancy(RedundancyArgs),
    /// Recurrent minimum and counting over lists
    Recurrent(RecurrentArgs),
    /// Shortest paths with a message-passing network
    Sssp(SsspArgs),
    /// Gradient, truth-table and shortest-path oracle checks
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Seeds: inclusive range `a..b`, comma list, or a mix
    #[arg(long, default_value = "0..9", value_parser = list::<u64>)]
    pub seeds: List<u64>,

    /// Training epochs (full-batch Adam steps)
    #[arg(long, default_value_t = 50_000)]
    pub epochs: usize,

    /// Output CSV; the effective config is written next to it as `<stem>.config.txt`
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,

    /// Parallel workers; NSRLAB_WORKERS overrides this flag
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Bit-activation scale lambda
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    /// Redundant NSR units
    #[arg(long, default_value_t = 10)]
    pub redundancy: usize,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// gt, lt, ge, le, eq or ne
    #[arg(long, value_parser = ComparisonOp::from_str)]
    pub op: ComparisonOp,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Base-10 extrapolation exponents
    #[arg(long, default_value = "2..13", value_parser = list::<u32>)]
    pub exponents: List<u32>,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct FloatsArgs {
    /// Comparisons to train
    #[arg(long, default_value = "gt,eq", value_parser = list::<ComparisonOp>)]
    pub ops: List<ComparisonOp>,

    /// Minimum distances delta between non-equal inputs
    #[arg(long, default_value = DECADES, value_parser = list::<f64>)]
    pub deltas: List<f64>,

    /// Bit-activation scales lambda
    #[arg(long, default_value = DECADES, value_parser = list::<f64>)]
    pub lambdas: List<f64>,

    /// Redundant NSR units
    #[arg(long, default_value_t = 10)]
    pub redundancy: usize,

    /// Base-10 extrapolation exponents
    #[arg(long, default_value = "2..13", value_parser = list::<u32>)]
    pub exponents: List<u32>,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct PiecewiseArgs {
    /// abs or f
    #[arg(long = "fn", value_parser = PiecewiseFn::from_str)]
    pub func: PiecewiseFn,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Largest |prediction - target| counted as correct
    #[arg(long, default_value_t = 0.1)]
    pub tolerance: f64,

    /// Base-3 extrapolation exponents
    #[arg(long, default_value = "2..13", value_parser = list::<u32>)]
    pub exponents: List<u32>,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct RedundancyArgs {
    /// Tasks: comparison ops and/or piecewise functions
    #[arg(long, default_value = "eq,ne,f", value_parser = list::<AblationTask>)]
    pub tasks: List<AblationTask>,

    /// Redundancies r
    #[arg(long = "r-range", default_value = "1..15", value_parser = list::<usize>)]
    pub r_range: List<usize>,

    /// Bit-activation scale lambda
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    /// Extrapolation exponents (base 10 for comparisons, base 3 for functions)
    #[arg(long, default_value = "2..13", value_parser = list::<u32>)]
    pub exponents: List<u32>,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct RecurrentArgs {
    /// min or count
    #[arg(long, value_parser = SequenceKind::from_str)]
    pub kind: SequenceKind,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Evaluation list lengths
    #[arg(long, default_value = "5,10,15,20,25,30,35,40,45,50", value_parser = list::<usize>)]
    pub lengths: List<usize>,

    /// Evaluation magnitudes: `train` for the training range, or base-3 exponents
    #[arg(long, default_value = "train,1..13", value_parser = list::<Scale>)]
    pub magnitudes: List<Scale>,

    /// Training lists
    #[arg(long, default_value_t = 500)]
    pub train_lists: usize,

    /// Training list length
    #[arg(long, default_value_t = 5)]
    pub train_len: usize,

    /// Evaluation lists per length and magnitude
    #[arg(long, default_value_t = 50)]
    pub eval_lists: usize,

    /// Largest |prediction - target| counted as correct
    #[arg(long, default_value_t = 0.1)]
    pub tolerance: f64,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct SsspArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Exponents i: test graphs scale nodes or max edge weight by 3^i
    #[arg(long, default_value = "0..3", value_parser = list::<u32>)]
    pub scales: List<u32>,

    /// Training graphs
    #[arg(long, default_value_t = 25)]
    pub train_graphs: usize,

    /// Nodes per training graph
    #[arg(long, default_value_t = 10)]
    pub nodes: usize,

    /// Largest training edge weight
    #[arg(long, default_value_t = 10)]
    pub max_weight: u64,

    /// Test graphs per seed and scale
    #[arg(long, default_value_t = 10)]
    pub test_graphs: usize,

    /// Shuffle neighbour messages at evaluation instead of ascending id order
    #[arg(long)]
    pub shuffled_order: bool,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Seed for the random draws
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parsed list flag; a newtype so clap treats it as one value.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AblationTask {
    Comparison(ComparisonOp),
    Piecewise(PiecewiseFn),
}

impl FromStr for AblationTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(op) = s.parse::<ComparisonOp>() {
            return Ok(AblationTask::Comparison(op));
        }
        s.parse::<PiecewiseFn>()
            .map(AblationTask::Piecewise)
            .map_err(|_| format!("unknown task `{s}` (expected a comparison op or a function)"))
    }
}

impl Display for AblationTask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AblationTask::Comparison(op) => write!(f, "{op}"),
            AblationTask::Piecewise(func) => write!(f, "{func}"),
        }
    }
}

/// Evaluation magnitude: the training range or `3^exp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale(pub Option<u32>);

impl Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            None => f.write_str("train"),
            Some(e) => write!(f, "{e}"),
        }
    }
}

/// Types that can appear in a list flag, with `a..b` expanding inclusively.
pub trait ListItem: Sized {
    fn parse_item(s: &str) -> Result<Vec<Self>, String>;
}

fn range<T: FromStr + Copy + Into<u64> + TryFrom<u64>>(s: &str) -> Result<Vec<T>, String> {
    let parse = |v: &str| v.trim().parse::<T>().map_err(|_| format!("invalid number `{v}`"));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (parse(a)?.into(), parse(b)?.into());
            if a > b {
                return Err(format!("empty range `{s}`"));
            }
            Ok((a..=b).map(|v| T::try_from(v).ok().expect("within the bounds just parsed")).collect())
        }
        None => Ok(vec![parse(s)?]),
    }
}

macro_rules! integer_items {
    ($($t:ty),*) => {$(
        impl ListItem for $t {
            fn parse_item(s: &str) -> Result<Vec<Self>, String> {
                range::<$t>(s)
            }
        }
    )*};
}

integer_items!(u32, u64);

impl ListItem for usize {
    fn parse_item(s: &str) -> Result<Vec<Self>, String> {
        Ok(range::<u64>(s)?.into_iter().map(|v| v as usize).collect())
    }
}

impl ListItem for f64 {
    fn parse_item(s: &str) -> Result<Vec<Self>, String> {
        let v: f64 = s.parse().map_err(|_| format!("invalid number `{s}`"))?;
        if !v.is_finite() {
            return Err(format!("`{s}` is not finite"));
        }
        Ok(vec![v])
    }
}

impl ListItem for Scale {
    fn parse_item(s: &str) -> Result<Vec<Self>, String> {
        if s == "train" {
            return Ok(vec![Scale(None)]);
        }
        Ok(range::<u32>(s)?.into_iter().map(|e| Scale(Some(e))).collect())
    }
}

macro_rules! named_items {
    ($($t:ty),*) => {$(
        impl ListItem for $t {
            fn parse_item(s: &str) -> Result<Vec<Self>, String> {
                s.parse::<$t>().map(|v| vec![v]).map_err(|e| e.to_string())
            }
        }
    )*};
}

named_items!(ComparisonOp, AblationTask);

/// Comma-separated items, each possibly an inclusive range.
pub fn list<T: ListItem>(s: &str) -> Result<List<T>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(format!("empty item in `{s}`"));
        }
        out.extend(T::parse_item(part)?);
    }
    Ok(List(out))
}
