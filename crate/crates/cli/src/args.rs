use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dynk_core::report::{Aggregate, Binning, Format};
use dynk_core::{CombineMode, KSpec};

#[derive(Debug, Parser)]
#[command(
    name = "dynk",
    version,
    about = "Agreement reports for fixed and dynamic top-k token attributions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean agreement per selector pair and k specification
    Agree(AgreeArgs),
    /// Dynamic k minus fixed k agreement, one row per method and fixed k
    Delta(DeltaArgs),
    /// Agreement per sentence-length bin and k
    Bias(BiasArgs),
    /// Average pairwise difference across model runs and the most central run
    Apd(ApdArgs),
    /// Per-instance token selections
    Topk(TopkArgs),
    /// Check a corpus file and print a summary
    Validate(ValidateArgs),
    /// Write a seeded synthetic corpus
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus file, one JSON record per line
    #[arg(long, short)]
    pub input: PathBuf,
    /// Skip invalid records instead of failing
    #[arg(long)]
    pub lenient: bool,
    /// Force annotator marks on ASCII punctuation tokens to 0
    #[arg(long)]
    pub zero_punctuation: bool,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Worker threads; 0 uses every core
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    #[arg(long, value_enum, default_value_t = TieArg::Earliest)]
    pub tie: TieArg,
    /// Seed for random tie breaking
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rank by absolute score
    #[arg(long)]
    pub abs: bool,
}

#[derive(Debug, Args)]
pub struct SelectorArgs {
    #[arg(long, value_enum, default_value_t = SelectorsArg::AllPairs)]
    pub selectors: SelectorsArg,
    /// Method name for pair (twice) or human (once) selectors
    #[arg(long = "method")]
    pub methods: Vec<String>,
    #[arg(long, value_enum, default_value_t = CombineArg::Entities)]
    pub combine: CombineArg,
}

#[derive(Debug, Args)]
pub struct AgreeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub selectors: SelectorArgs,
    /// Comma list of fixed:N, fixed:A..B or dynamic
    #[arg(long, default_value = "fixed:1..10,dynamic", value_parser = parse_k_list)]
    pub k: KList,
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[command(flatten)]
    pub selectors: SelectorArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5", value_parser = parse_positive)]
    pub fixed_ks: Vec<usize>,
    /// How a method's agreements with several others are folded
    #[arg(long, value_enum, default_value_t = AggregateArg::Sum)]
    pub aggregate: AggregateArg,
}

#[derive(Debug, Args)]
pub struct BiasArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// quantile:Q or comma-separated inclusive upper edges
    #[arg(long, default_value = "quantile:5", value_parser = parse_bins)]
    pub bins: Binning,
    #[arg(long, default_value = "fixed:1..10", value_parser = parse_k_list)]
    pub k: KList,
}

#[derive(Debug, Args)]
pub struct ApdArgs {
    /// Run as ID=PATH; repeatable
    #[arg(long = "run", value_parser = parse_run)]
    pub runs: Vec<(String, PathBuf)>,
    /// Run corpus named by its file stem; repeatable
    #[arg(long = "input", short)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TopkArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long, default_value = "dynamic", value_parser = parse_k_list)]
    pub k: KList,
    /// Restrict to these methods; repeatable
    #[arg(long = "method")]
    pub methods: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output file, or directory when --runs is given; stdout when omitted
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 6)]
    pub methods: usize,
    #[arg(long, default_value_t = 5, value_parser = parse_positive)]
    pub min_len: usize,
    #[arg(long, default_value_t = 40, value_parser = parse_positive)]
    pub max_len: usize,
    #[arg(long, default_value_t = 3)]
    pub annotators: usize,
    /// Write this many perturbed runs of the corpus as run_N.jsonl
    #[arg(long)]
    pub runs: Option<usize>,
    /// Perturb this corpus file instead of generating one; needs --runs
    #[arg(long, requires = "runs")]
    pub base: Option<PathBuf>,
    /// Noise sd added to every score of a perturbed run
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TieArg {
    Earliest,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectorsArg {
    AllPairs,
    Pair,
    Human,
    AllHuman,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CombineArg {
    Entities,
    Average,
}

impl From<CombineArg> for CombineMode {
    fn from(c: CombineArg) -> Self {
        match c {
            CombineArg::Entities => CombineMode::AnnotatorsAsEntities,
            CombineArg::Average => CombineMode::TwoEntityAverage,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregateArg {
    Sum,
    Mean,
}

impl From<AggregateArg> for Aggregate {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::Sum => Aggregate::Sum,
            AggregateArg::Mean => Aggregate::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KList(pub Vec<KSpec>);

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("must be at least 1".to_owned()),
        Ok(n) => Ok(n),
        Err(e) => Err(format!("'{s}': {e}")),
    }
}

fn parse_range(s: &str) -> Result<Vec<usize>, String> {
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse_positive(a)?, parse_positive(b)?);
            if a > b {
                return Err(format!("empty range '{s}'"));
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![parse_positive(s)?]),
    }
}

/// Accepts `dynamic`, `fixed:N`, `fixed:A..B`, and bare `N` or `A..B`.
pub fn parse_k_list(s: &str) -> Result<KList, String> {
    let mut specs = Vec::new();
    for item in s.split(',').map(str::trim) {
        if item == "dynamic" {
            specs.push(KSpec::Dynamic);
            continue;
        }
        let body = item.strip_prefix("fixed:").unwrap_or(item);
        for k in parse_range(body).map_err(|e| format!("bad k '{item}': {e}"))? {
            specs.push(KSpec::fixed(k).map_err(|e| e.to_string())?);
        }
    }
    Ok(KList(specs))
}

fn parse_bins(s: &str) -> Result<Binning, String> {
    s.parse()
}

fn parse_run(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((id, path)) if !id.is_empty() && !path.is_empty() => {
            Ok((id.to_owned(), PathBuf::from(path)))
        }
        _ => Err(format!("expected ID=PATH, got '{s}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_lists() {
        let f = |k| KSpec::fixed(k).unwrap();
        assert_eq!(parse_k_list("dynamic").unwrap().0, [KSpec::Dynamic]);
        assert_eq!(
            parse_k_list("fixed:1..3,dynamic").unwrap().0,
            [f(1), f(2), f(3), KSpec::Dynamic]
        );
        assert_eq!(parse_k_list("4, fixed:2").unwrap().0, [f(4), f(2)]);
        assert!(parse_k_list("fixed:0").is_err());
        assert!(parse_k_list("fixed:3..1").is_err());
        assert!(parse_k_list("top5").is_err());
        assert!(parse_k_list("").is_err());
    }

    #[test]
    fn runs() {
        assert_eq!(
            parse_run("r1=a/b.jsonl").unwrap(),
            ("r1".to_owned(), PathBuf::from("a/b.jsonl"))
        );
        assert!(parse_run("a/b.jsonl").is_err());
        assert!(parse_run("=x").is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
