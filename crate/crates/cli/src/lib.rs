//! `soilcast` command line: synthesise data, train, cross-validate,
//! compare, select attributes, boost and predict.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or model error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use soilcast::adaboost::BoostParams;
use soilcast::cfs;
use soilcast::dataset::{load_csv, save_csv, ClassColumn, CsvOptions, Loaded};
use soilcast::evaluation::{
    compare_with, cross_validate_with, render_comparison, render_report, reports_to_csv, reports_to_json, CvOptions,
    EvaluationReport, SelectionScope,
};
use soilcast::measures::argmax;
use soilcast::persist::{load_model, save_model, ModelFile};
use soilcast::synth::{inject_noise_attributes, synthesize_soil_dataset, DEFAULT_SEPARATION};
use soilcast::{BaseLearner, Dataset, Pipeline};

pub const SEED_ENV: &str = "SOILCAST_SEED";

#[derive(Parser, Debug)]
#[command(name = "soilcast", version, about = "Decision-tree classifiers for soil fertility data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic soil-test dataset with six fertility classes.
    Synth(SynthArgs),
    /// Train a model on a CSV file and save it.
    Train(TrainArgs),
    /// Cross-validate one pipeline.
    Eval(EvalArgs),
    /// Cross-validate several learners on identical folds.
    Compare(CompareArgs),
    /// Run correlation-based attribute selection.
    Select(SelectArgs),
    /// Cross-validate AdaBoost.M1, optionally combined with selection.
    Boost(BoostArgs),
    /// Predict class labels for rows of a CSV file.
    Predict(PredictArgs),
}

#[derive(Args, Debug, Clone)]
struct SeedArg {
    /// Random seed (falls back to $SOILCAST_SEED, then 1).
    #[arg(long, env = SEED_ENV, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Class column: a header name, a 0-based index, or "last".
    #[arg(long, default_value = "last")]
    class: String,
    /// Token that marks a missing value.
    #[arg(long, default_value = "?")]
    missing: String,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 1988)]
    n: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// How far apart the class means sit, in standard deviations.
    #[arg(long, default_value_t = DEFAULT_SEPARATION)]
    separation: f64,
    /// Number of irrelevant standard-normal noise attributes to add.
    #[arg(long, default_value_t = 0)]
    noise: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Selector {
    Cfs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Nesting {
    /// Select attributes once on the training data, then boost.
    SelectThenBoost,
    /// Boost a learner that runs selection inside every round.
    BoostSelected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scope {
    PerFold,
    /// Select on all data before cross-validation (optimistic).
    Full,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Learner: j48 (c45), cart (simplecart), nbtree or majority.
    #[arg(long, default_value = "j48", value_parser = parse_learner)]
    algo: BaseLearner,
    /// Attribute selection before learning.
    #[arg(long, value_enum)]
    select: Option<Selector>,
    /// Wrap the learner in AdaBoost.M1 with this many rounds.
    #[arg(long)]
    boost: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Decimal places for accuracies (4 as in single reports, 2 for the short style).
    #[arg(long, default_value_t = 4)]
    decimals: usize,
    /// Also write a machine-readable summary (.csv or .json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Where to write the model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 10)]
    cv: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, value_enum, default_value_t = Scope::PerFold)]
    selection_scope: Scope,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated learners.
    #[arg(long, value_delimiter = ',', default_value = "j48,cart,nbtree", value_parser = parse_learner)]
    algos: Vec<BaseLearner>,
    #[arg(long, default_value_t = 10)]
    cv: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Non-improving expansions before the search stops.
    #[arg(long, default_value_t = cfs::DEFAULT_MAX_STALE)]
    max_stale: usize,
    /// Write the reduced dataset here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoostArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "j48", value_parser = parse_learner)]
    base: BaseLearner,
    #[arg(long, value_enum)]
    select: Option<Selector>,
    #[arg(long, value_enum, default_value_t = Nesting::SelectThenBoost)]
    nesting: Nesting,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    /// Train rounds on weighted bootstrap samples instead of weights.
    #[arg(long)]
    resample: bool,
    #[arg(long, default_value_t = 10)]
    cv: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV rows to classify; columns are matched to the model by name.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "?")]
    missing: String,
}

fn parse_learner(s: &str) -> std::result::Result<BaseLearner, String> {
    s.parse().map_err(|e: soilcast::Error| e.to_string())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        // A closed pipe (e.g. `| head`) is not a failure worth reporting.
        Err(e)
            if e
                .downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a, out),
        Command::Train(a) => train(a, out, err),
        Command::Eval(a) => eval(a, out, err),
        Command::Compare(a) => compare_cmd(a, out, err),
        Command::Select(a) => select(a, out, err),
        Command::Boost(a) => boost(a, out, err),
        Command::Predict(a) => predict(a, out),
    }
}

fn load(a: &DataArgs, err: &mut dyn Write) -> Result<Dataset> {
    let class = if a.class.eq_ignore_ascii_case("last") {
        ClassColumn::Last
    } else {
        a.class.parse().expect("infallible")
    };
    let options = CsvOptions {
        missing_token: a.missing.clone(),
        ..CsvOptions::default()
    };
    let Loaded { dataset, rejected_lines } =
        load_csv(&a.data, &class, &options).with_context(|| format!("reading {}", a.data.display()))?;
    if !rejected_lines.is_empty() {
        writeln!(
            err,
            "warning: skipped {} row(s) without a class label (lines {:?})",
            rejected_lines.len(),
            rejected_lines
        )?;
    }
    Ok(dataset)
}

/// Base learner with every internal seed taken from the command line.
fn seeded(learner: &BaseLearner, seed: u64) -> Pipeline {
    Pipeline::base(learner.with_seed(seed))
}

fn build_pipeline(a: &PipelineArgs, seed: u64) -> Pipeline {
    let mut p = seeded(&a.algo, seed);
    if let Some(rounds) = a.boost {
        p = Pipeline::boost(p, rounds, seed);
    }
    if a.select.is_some() {
        p = Pipeline::select(p);
    }
    p
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let mut d = synthesize_soil_dataset(a.n, a.seed.seed, a.separation)?;
    if a.noise > 0 {
        d = inject_noise_attributes(&d, a.noise, a.seed.seed);
    }
    save_csv(&d, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(
        out,
        "wrote {} instances ({} attributes + class) to {}",
        d.len(),
        d.num_attributes() - 1,
        a.out.display()
    )?;
    Ok(())
}

fn train(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let d = load(&a.data, err)?;
    let pipeline = build_pipeline(&a.pipeline, a.seed.seed);
    let model = pipeline.train(&d)?;
    writeln!(out, "{}", model.render(d.schema(), d.class_index()))?;
    let file = ModelFile::new(pipeline, &d, model);
    save_model(&file, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(out, "model saved to {}", a.out.display())?;
    Ok(())
}

fn write_summary(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => reports_to_json(reports)?,
        Some("csv") => reports_to_csv(reports)?,
        _ => bail!("report file {} must end in .csv or .json", path.display()),
    };
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn single_report(
    d: &Dataset,
    pipeline: &Pipeline,
    options: &CvOptions,
    report: &ReportArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let r = cross_validate_with(d, pipeline, options)?;
    write!(out, "{}", render_report(&r, report.decimals))?;
    if !r.fold_subsets.is_empty() {
        writeln!(out, "\n=== Attributes selected per fold ===")?;
        for (f, s) in r.fold_subsets.iter().enumerate() {
            let names: Vec<&str> = s.iter().map(|&a| d.attribute(a).name.as_str()).collect();
            writeln!(out, "fold {:>2}: {}", f + 1, names.join(", "))?;
        }
    }
    if let Some(path) = &report.out {
        write_summary(path, std::slice::from_ref(&r))?;
    }
    Ok(())
}

fn eval(a: EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let d = load(&a.data, err)?;
    let pipeline = build_pipeline(&a.pipeline, a.seed.seed);
    let options = CvOptions {
        folds: a.cv,
        seed: a.seed.seed,
        selection_scope: match a.selection_scope {
            Scope::PerFold => SelectionScope::PerFold,
            Scope::Full => SelectionScope::FullDataset,
        },
    };
    single_report(&d, &pipeline, &options, &a.report, out)
}

fn compare_cmd(a: CompareArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let d = load(&a.data, err)?;
    let pipelines: Vec<Pipeline> = a.algos.iter().map(|l| seeded(l, a.seed.seed)).collect();
    let options = CvOptions {
        folds: a.cv,
        seed: a.seed.seed,
        ..CvOptions::default()
    };
    let reports = compare_with(&d, &pipelines, &options)?;
    writeln!(
        out,
        "{} instances, {}-fold stratified cross-validation, seed {}\n",
        d.len(),
        a.cv,
        a.seed.seed
    )?;
    write!(out, "{}", render_comparison(&reports, a.report.decimals))?;
    if let Some(path) = &a.report.out {
        write_summary(path, &reports)?;
    }
    Ok(())
}

fn select(a: SelectArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    if a.max_stale == 0 {
        bail!("--max-stale must be at least 1");
    }
    let d = load(&a.data, err)?;
    let cache = cfs::build_correlations(&d)?;
    let subset = cfs::best_first_search(&cache, a.max_stale);
    writeln!(out, "Attribute-class symmetric uncertainty:")?;
    for (pos, &attr) in cache.attributes().iter().enumerate() {
        let mark = if subset.attribute_indices.contains(&attr) { "*" } else { " " };
        writeln!(out, " {mark} {:<12} {:.4}", d.attribute(attr).name, cache.r_cf(pos))?;
    }
    let names: Vec<&str> = subset.attribute_indices.iter().map(|&a| d.attribute(a).name.as_str()).collect();
    writeln!(
        out,
        "\nSelected {} of {} attributes: {}",
        names.len(),
        cache.len(),
        if names.is_empty() { "(none)".to_string() } else { names.join(", ") }
    )?;
    writeln!(out, "Merit of best subset: {:.4}", subset.merit)?;
    if let Some(path) = &a.out {
        save_csv(&cfs::filter_dataset(&d, &subset)?, path).with_context(|| format!("writing {}", path.display()))?;
        writeln!(out, "reduced dataset written to {}", path.display())?;
    }
    Ok(())
}

fn boost(a: BoostArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let d = load(&a.data, err)?;
    let seed = a.seed.seed;
    let boosted = |base: Pipeline| {
        Pipeline::Boost(BoostParams {
            iterations: a.iterations,
            base: Box::new(base),
            resample: a.resample,
            seed,
        })
    };
    let base = seeded(&a.base, seed);
    let pipeline = match (a.select, a.nesting) {
        (None, _) => boosted(base),
        (Some(Selector::Cfs), Nesting::SelectThenBoost) => Pipeline::select(boosted(base)),
        (Some(Selector::Cfs), Nesting::BoostSelected) => boosted(Pipeline::select(base)),
    };
    let options = CvOptions {
        folds: a.cv,
        seed,
        ..CvOptions::default()
    };
    single_report(&d, &pipeline, &options, &a.report, out)
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let file = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let options = CsvOptions {
        missing_token: a.missing.clone(),
        ..CsvOptions::default()
    };
    let input = fs::File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let rows = file
        .read_input(input, &options)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let labels = file.class_labels();
    write!(out, "row,predicted")?;
    for l in labels {
        write!(out, ",p({l})")?;
    }
    writeln!(out)?;
    for (i, inst) in rows.iter().enumerate() {
        let p = file.predict(inst)?;
        write!(out, "{},{}", i + 1, labels[argmax(&p)])?;
        for v in &p {
            write!(out, ",{v:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
