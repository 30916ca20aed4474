use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "wrlab", version, about = "Widom-Rowlinson lattice toolkit")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat key=value file whose entries act as flags placed before the
    /// command-line ones; `#` starts a comment.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel work.
    #[arg(long, global = true, env = "WRLAB_THREADS")]
    pub threads: Option<usize>,

    /// Output file; standard output when absent.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dobrushin constant and uniqueness verdict over a simplex grid of a priori measures.
    DobrushinScan(ScanArgs),
    /// Peierls bound and phase-transition certificate over a (beta, lambda) grid.
    Peierls(PeierlsArgs),
    /// Heat-bath estimate of the origin law in a box.
    Sample(SampleArgs),
    /// Apply the independent spin-flip dynamics to a snapshot.
    Evolve(EvolveArgs),
    /// Gap of the finite-cluster window kernel on a line connector over (t, L).
    Badness(BadnessArgs),
    /// Transition times of the spin-flip dynamics.
    TransitionTimes(TimesArgs),
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Number of neighbours per site.
    #[arg(long = "B", value_name = "B")]
    pub degree: u32,
    /// Soft-core repulsion strength.
    #[arg(long, conflicts_with = "hardcore", required_unless_present = "hardcore")]
    pub beta: Option<f64>,
    /// Use the hard-core exclusion instead of a soft-core beta.
    #[arg(long)]
    pub hardcore: bool,
    /// Grid resolution N; points are multiples of 1/N.
    #[arg(long, default_value_t = 60)]
    pub res: u32,
}

#[derive(Args, Debug)]
pub struct PeierlsArgs {
    /// Lattice dimension, at least 2.
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    /// Comma-separated repulsion strengths; `inf` is the hard-core model.
    #[arg(long, value_delimiter = ',', default_value = "inf")]
    pub beta: Vec<f64>,
    /// Comma-separated activities.
    #[arg(long, value_delimiter = ',', default_value = "1e8")]
    pub lambda: Vec<f64>,
    /// Bisect for the smallest certified activity at each beta instead.
    #[arg(long)]
    pub find_lambda_c: bool,
    /// Relative bracket width for --find-lambda-c.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

/// A priori measure as (lambda, h) or as an explicit triple.
#[derive(Args, Debug, Clone)]
pub struct MeasureArgs {
    /// Activity lambda.
    #[arg(long, conflicts_with = "alpha")]
    pub lambda: Option<f64>,
    /// External field h.
    #[arg(long, conflicts_with = "alpha")]
    pub h: Option<f64>,
    /// Masses on (-1, 0, +1), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryArg {
    Plus,
    Minus,
    Zero,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Lattice dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Side length of the box, which is centred on the origin.
    #[arg(long, default_value_t = 16)]
    pub side: usize,
    /// Soft-core repulsion strength.
    #[arg(long, conflicts_with = "hardcore", required_unless_present = "hardcore")]
    pub beta: Option<f64>,
    /// Hard-core exclusion.
    #[arg(long)]
    pub hardcore: bool,
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// Frozen boundary spins.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Plus)]
    pub boundary: BoundaryArg,
    /// Sweeps per chain, burn-in included.
    #[arg(long, default_value_t = 10_000)]
    pub sweeps: u64,
    /// Initial sweeps per chain left out of the estimates.
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: u64,
    /// Run seed; chain k uses stream k of this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent chains, run in parallel.
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    /// Also estimate the probability that the origin's cluster reaches the inner layer.
    #[arg(long)]
    pub percolation: bool,
    /// Write a trace CSV with the origin indicators every this many recorded sweeps.
    #[arg(long, value_name = "N", requires = "trace")]
    pub trace_every: Option<u64>,
    /// Trace CSV path.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Write the final configuration of chain 0 to this file.
    #[arg(long, value_name = "FILE")]
    pub snapshot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    /// Snapshot to evolve, as written by `sample --snapshot`.
    #[arg(long, value_name = "FILE", required_unless_present = "checkerboard")]
    pub input: Option<PathBuf>,
    /// Start from the checkerboard configuration of a box of this side instead.
    #[arg(long, value_name = "SIDE", conflicts_with = "input")]
    pub checkerboard: Option<usize>,
    /// Dimension for --checkerboard.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Evolution time.
    #[arg(long)]
    pub t: f64,
    /// Seed of the flip decisions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct BadnessArgs {
    /// Ratio alpha(1)/alpha(-1); the zero mass comes from --alpha-zero.
    #[arg(long, conflicts_with = "alpha")]
    pub alpha_r: Option<f64>,
    /// Zero mass used with --alpha-r.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub alpha_zero: f64,
    /// Masses on (-1, 0, +1), comma separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "alpha_r")]
    pub alpha: Option<Vec<f64>>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    /// Comma-separated line lengths.
    #[arg(long = "L", value_name = "L", value_delimiter = ',', required = true)]
    pub lengths: Vec<usize>,
    /// Lattice dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Sites next to the origin that keep a fixed + decoration.
    #[arg(long, default_value_t = 1)]
    pub inner_radius: usize,
    /// Leave the inner sites empty, cutting the origin off from the annulus.
    #[arg(long)]
    pub no_connector: bool,
    /// Report the time at which the gap falls through this value, per L,
    /// bisecting between the smallest and largest --t.
    #[arg(long, value_name = "GAP")]
    pub crossover: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TimesArgs {
    /// Masses on (-1, 0, +1), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    /// Comma-separated soft-core strengths for t_0.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// Lattice dimension.
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    /// Time grid `start,stop,count` for a sweep of the constrained check at the first beta.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
}

const SUBCOMMANDS: [&str; 6] = [
    "dobrushin-scan",
    "peierls",
    "sample",
    "evolve",
    "badness",
    "transition-times",
];

/// Turns `key = value` lines into flags.
pub fn config_flags(text: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Inserts config-file flags right after the subcommand so that flags given
/// on the command line come later and win.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {path}: {e}")))?;
    let flags = config_flags(&text)?;
    let Some(at) = args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(args);
    };
    let mut out = args[..=at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[at + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn every_flag_is_documented() {
        let cmd = Cli::command();
        for sub in cmd.get_subcommands() {
            for arg in sub.get_arguments() {
                assert!(arg.get_help().is_some(), "{} --{}", sub.get_name(), arg.get_id());
            }
        }
    }

    #[test]
    fn config_lines_become_flags() {
        let flags = config_flags("# scan\nB = 4\nres=30  # coarse\nhardcore = true\nverbose = false\n").unwrap();
        assert_eq!(flags, ["--B", "4", "--res", "30", "--hardcore"]);
        assert!(config_flags("no equals sign").is_err());
    }

    #[test]
    fn command_line_overrides_config() {
        let args: Vec<String> = ["wrlab", "dobrushin-scan", "--B", "4", "--hardcore", "--res", "10", "--res", "20"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let cli = Cli::try_parse_from(args).unwrap();
        match cli.command {
            Command::DobrushinScan(a) => assert_eq!(a.res, 20),
            _ => panic!(),
        }
    }
}
