use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use omd_core::rational;
use omd_core::Rational;

#[derive(Debug, Parser)]
#[command(name = "omd", version, about = "Exact optimal mechanisms for one additive bidder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance through the lattice flow and verify the result.
    Solve(SolveArgs),
    /// Run a counting reduction.
    Reduce(ReduceArgs),
    /// Run the built-in two-item examples.
    Examples(CommonArgs),
    /// Draw allocations from the optimal mechanism.
    Sample(SampleArgs),
    /// Solve a budget-additive instance.
    Budgeted(BudgetedArgs),
    /// Check a mechanism file against an instance.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Also write the run report to this path.
    #[arg(long, value_name = "PATH")]
    pub json_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Instance JSON: {"n": .., "a": [..], "d": [..], "p": [..]}.
    pub instance: PathBuf,
    /// Cross-check the revenue against the full LP.
    #[arg(long)]
    pub oracle: bool,
    /// Skip the lattice path and solve the full LP only.
    #[arg(long, conflicts_with_all = ["oracle", "kappa", "dump_lattice"])]
    pub oracle_only: bool,
    /// Normalization B - sum p_i x_i of the relaxed program.
    #[arg(long, value_name = "R", value_parser = parse_rational)]
    pub kappa: Option<Rational>,
    /// Write the lattice nodes with cost, balance and absorbed flow.
    #[arg(long, value_name = "PATH")]
    pub dump_lattice: Option<PathBuf>,
    /// Write the full LP in text form.
    #[arg(long, value_name = "PATH")]
    pub dump_lp: Option<PathBuf>,
    /// Write the mechanism JSON.
    #[arg(long, value_name = "PATH")]
    pub mechanism_out: Option<PathBuf>,
    /// Lift the enumeration limits on the full LP.
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReduceKind {
    Lexrank,
    Subsetsum,
}

#[derive(Debug, Clone, Args)]
pub struct ReduceArgs {
    pub kind: ReduceKind,
    /// {"C": [..], "S": [..], "k": ..} or {"W": [..], "T": ..}.
    pub input: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    pub instance: PathBuf,
    /// Type to report, as 1-based items: "1,3"; empty for no high items.
    #[arg(long = "type", value_name = "ITEMS", value_parser = parse_items, default_value = "")]
    pub type_: ItemList,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Sample from this mechanism file instead of solving the instance.
    #[arg(long, value_name = "PATH")]
    pub mechanism: Option<PathBuf>,
    #[arg(long, value_name = "R", value_parser = parse_rational)]
    pub kappa: Option<Rational>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BudgetedArgs {
    /// {"x": [..], "budget": .., "eps": ".."}.
    pub input: PathBuf,
    /// Cross-check against the two-type LP.
    #[arg(long)]
    pub oracle: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    pub mechanism: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Solve(a) => &a.common,
            Command::Reduce(a) => &a.common,
            Command::Examples(a) => a,
            Command::Sample(a) => &a.common,
            Command::Budgeted(a) => &a.common,
            Command::Verify(a) => &a.common,
        }
    }
}

fn parse_rational(text: &str) -> Result<Rational, String> {
    rational::parse(text)
}

/// 1-based item indices given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemList(pub Vec<usize>);

fn parse_items(text: &str) -> Result<ItemList, String> {
    let body = text.trim().trim_start_matches('{').trim_end_matches('}');
    body.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|e| format!("bad item `{s}`: {e}")))
        .collect::<Result<_, _>>()
        .map(ItemList)
}
