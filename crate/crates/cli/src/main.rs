use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use stance_core::corpus::{load_corpus, merge_timeline, read_gold_labels, write_gold_labels, UserCorpus};
use stance_core::evalkit::{confusion, report_csv, report_json, ReportRow};
use stance_core::pipeline::{
    bootstrap_training_set, orient_by_inspection, parse_key_values, run_experiment, BootstrapParams,
    Condition, ExperimentConfig, Method,
};
use stance_core::synth::{generate, CountSpec, SynthParams};
use stance_core::StanceLabel;

#[derive(Parser)]
#[command(
    name = "stance",
    version,
    about = "Stance classification of users from their retweets and posts"
)]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic polarized corpus.
    Synth(SynthArgs),
    /// Label the most active users by clustering their retweet vectors.
    Bootstrap(BootstrapArgs),
    /// Run one method on a train/test split and score it.
    Classify(ClassifyArgs),
    /// Score a predictions file against gold labels.
    Evaluate(EvaluateArgs),
    /// Merge report rows into CSV and JSON tables with per-method summaries.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    users_per_side: usize,
    #[arg(long, default_value_t = 200)]
    accounts_per_side: usize,
    #[arg(long, default_value_t = 0.9)]
    polarization: f64,
    #[arg(long, default_value_t = 1)]
    min_tweets: usize,
    #[arg(long, default_value_t = 100)]
    max_tweets: usize,
    /// Fraction of topical tweets that are retweets.
    #[arg(long, default_value_t = 1.0)]
    retweet_rate: f64,
    #[arg(long)]
    max_retweets: Option<usize>,
    #[arg(long, default_value_t = 0)]
    timeline_tweets: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "synthetic")]
    topic: String,
    #[arg(long, default_value = "")]
    id_prefix: String,
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long)]
    tweets: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5000)]
    n_active: usize,
    #[arg(long, default_value_t = 10)]
    min_tweets: usize,
    #[arg(long, default_value_t = 500)]
    per_cluster: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Labels for a few users, used to orient the clusters.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Users inspected per cluster when orienting with `--reference`.
    #[arg(long, default_value_t = 5)]
    inspect: usize,
    /// `umap.*` and `meanshift.*` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Key-value experiment config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    expand_train: bool,
    #[arg(long)]
    expand_test: bool,
    #[arg(long)]
    topic: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_tweets: PathBuf,
    /// `user_id<TAB>label`; unlabeled training users are used only by UNSUPERVISED.
    #[arg(long)]
    train_labels: PathBuf,
    #[arg(long)]
    train_timeline: Option<PathBuf>,
    #[arg(long)]
    test_tweets: PathBuf,
    #[arg(long)]
    test_gold: PathBuf,
    #[arg(long)]
    test_timeline: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    /// `user_id<TAB>label` with `UNASSIGNED` for abstentions.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value = "unknown")]
    topic: String,
    #[arg(long, default_value = "unknown")]
    method: String,
    #[arg(long, default_value = "no_expansion")]
    condition: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    /// Row files written by `classify` (one row or an array of rows each).
    #[arg(required = true)]
    rows: Vec<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match cli.command {
        Command::Synth(args) => synth(args),
        Command::Bootstrap(args) => bootstrap(args),
        Command::Classify(args) => classify(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Report(args) => report(args),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn split_override(raw: &str) -> Result<(&str, &str)> {
    raw.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .with_context(|| format!("expected KEY=VALUE, got {raw:?}"))
}

fn synth(args: SynthArgs) -> Result<()> {
    let params = SynthParams {
        n_users_per_side: args.users_per_side,
        n_accounts_per_side: args.accounts_per_side,
        polarization: args.polarization,
        tweets_per_user: CountSpec {
            min: args.min_tweets,
            max: args.max_tweets,
            ..SynthParams::default().tweets_per_user
        },
        seed: args.seed,
        retweet_rate: args.retweet_rate,
        max_retweets_per_user: args.max_retweets,
        timeline_tweets_per_user: args.timeline_tweets,
        id_prefix: args.id_prefix,
        topic: args.topic,
        ..SynthParams::default()
    };
    let data = generate(&params)?;
    data.write_to(&args.out)?;
    println!(
        "{} users, {} retweets ({} across sides) written to {}",
        data.corpus.len(),
        data.total_retweets,
        data.cross_side_retweets,
        args.out.display()
    );
    Ok(())
}

fn bootstrap(args: BootstrapArgs) -> Result<()> {
    let corpus = load_corpus(&args.tweets, "bootstrap")?;
    let mut config = ExperimentConfig::new("bootstrap", Method::Unsupervised);
    for raw in &args.overrides {
        let (key, value) = split_override(raw)?;
        if !(key.starts_with("umap.") || key.starts_with("meanshift.")) {
            bail!("bootstrap accepts only umap.* and meanshift.* keys, got {key:?}");
        }
        config.set(key, value)?;
    }
    let unsupervised = config.hyperparameters.unsupervised;
    let params = BootstrapParams {
        n_active: args.n_active,
        min_tweets: args.min_tweets,
        per_cluster: args.per_cluster,
        seed: args.seed,
        umap: unsupervised.umap,
        mean_shift: unsupervised.mean_shift,
    };
    let mut outcome = bootstrap_training_set(&corpus, &params)?;
    let flipped = match &args.reference {
        Some(path) => orient_by_inspection(&mut outcome, &read_gold_labels(path)?, args.inspect),
        None => false,
    };

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_gold_labels(&args.out.join("labels.tsv"), &outcome.labels())?;
    outcome
        .embedding
        .write_csv(&args.out.join("embedding.csv"), Some(&outcome.active_ids))?;
    write(
        &args.out.join("clusters.csv"),
        outcome.clusters.to_csv(Some(&outcome.active_ids)),
    )?;
    let summary = serde_json::json!({
        "active_users": outcome.active_ids.len(),
        "cluster_sizes": outcome.clusters.sizes,
        "unassigned": outcome.clusters.n_unassigned(),
        "bandwidth": outcome.clusters.bandwidth,
        "sampled": outcome.users.len(),
        "shortage": outcome.shortage,
        "flipped": flipped,
        "umap": params.umap,
        "mean_shift": params.mean_shift,
        "seed": params.seed,
    });
    write(
        &args.out.join("bootstrap.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "{} clusters among {} active users; {} users labeled in {}",
        outcome.clusters.n_clusters(),
        outcome.active_ids.len(),
        outcome.users.len(),
        args.out.display()
    );
    Ok(())
}

fn load_split(tweets: &Path, timeline: Option<&Path>, topic: &str) -> Result<UserCorpus> {
    let corpus = load_corpus(tweets, topic)?;
    match timeline {
        Some(path) => {
            let (merged, stats) = merge_timeline(&corpus, path)?;
            log::info!(
                "{}: {} timeline tweets appended, {} for unknown users, {} duplicates",
                path.display(),
                stats.appended,
                stats.skipped_unknown_user,
                stats.skipped_duplicate
            );
            Ok(merged)
        }
        None => Ok(corpus),
    }
}

fn experiment_config(args: &ClassifyArgs) -> Result<ExperimentConfig> {
    let mut pairs = match &args.config {
        Some(path) => {
            let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_key_values(&raw)?
        }
        None => BTreeMap::new(),
    };
    for raw in &args.overrides {
        let (key, value) = split_override(raw)?;
        pairs.insert(key.to_string(), value.to_string());
    }
    if args.method.is_none() && !pairs.contains_key("method") {
        bail!("no method given; pass --method or set method = ... in the config");
    }
    let mut config =
        ExperimentConfig::from_pairs(ExperimentConfig::new("default", Method::Unsupervised), &pairs)?;
    if let Some(method) = args.method {
        config.method = method;
    }
    if let Some(topic) = &args.topic {
        config.topic = topic.clone();
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.expand_train |= args.expand_train;
    config.expand_test |= args.expand_test;
    config.validate()?;
    Ok(config)
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let config = experiment_config(&args)?;
    let mut train = load_split(&args.train_tweets, args.train_timeline.as_deref(), &config.topic)?;
    let labeled = train.attach_gold(&read_gold_labels(&args.train_labels)?);
    log::info!("{labeled} of {} training users labeled", train.len());
    let mut test = load_split(&args.test_tweets, args.test_timeline.as_deref(), &config.topic)?;
    let gold = read_gold_labels(&args.test_gold)?;
    test.attach_gold(&gold);
    let gold = test
        .users
        .keys()
        .filter_map(|id| gold.get(id).map(|&c| (id.clone(), c)))
        .collect();

    let outcome = run_experiment(&config, &train, &test, &gold)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut predictions = String::new();
    for (user, label) in &outcome.predictions {
        predictions.push_str(&format!("{user}\t{label}\n"));
    }
    write(&args.out.join("predictions.tsv"), predictions)?;
    write(
        &args.out.join("row.json"),
        serde_json::to_string_pretty(&outcome.row)?,
    )?;
    write(
        &args.out.join("report.csv"),
        report_csv(std::slice::from_ref(&outcome.row)),
    )?;
    write(
        &args.out.join("config.json"),
        serde_json::to_string_pretty(&config)?,
    )?;
    if !outcome.diagnostics.is_empty() {
        write(
            &args.out.join("diagnostics.json"),
            serde_json::to_string_pretty(&outcome.diagnostics)?,
        )?;
    }
    print!("{}", report_csv(std::slice::from_ref(&outcome.row)));
    Ok(())
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, StanceLabel>> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (user, label) = line
            .split_once('\t')
            .with_context(|| format!("{}:{}: expected user_id<TAB>label", path.display(), i + 1))?;
        let label: StanceLabel = label
            .parse()
            .map_err(|e: String| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1))?;
        if out.insert(user.to_string(), label).is_some() {
            bail!("{}:{}: user {user:?} listed twice", path.display(), i + 1);
        }
    }
    Ok(out)
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let gold = read_gold_labels(&args.gold)?;
    let predictions = read_predictions(&args.predictions)?;
    let missing = gold.keys().filter(|u| !predictions.contains_key(*u)).count();
    if missing > 0 {
        log::warn!("{missing} gold users have no prediction and are not scored");
    }
    let cm = confusion(&predictions, &gold)?;
    let row = ReportRow::new(&args.topic, &args.method, &args.condition, cm);
    match args.format {
        Format::Csv => print!("{}", report_csv(&[row])),
        Format::Json => println!("{}", report_json(&[row])),
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let mut rows: Vec<ReportRow> = Vec::new();
    for path in &args.rows {
        let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
        if value.is_array() {
            rows.extend(serde_json::from_value::<Vec<ReportRow>>(value)?);
        } else {
            rows.push(
                serde_json::from_value(value)
                    .with_context(|| format!("{} is not a report row", path.display()))?,
            );
        }
    }
    let order = |r: &ReportRow| {
        let method = r
            .method
            .parse::<Method>()
            .map(|m| Method::ALL.iter().position(|&x| x == m));
        let condition = Condition::ALL.iter().position(|c| c.name() == r.condition);
        (r.topic.clone(), method.ok().flatten(), condition)
    };
    rows.sort_by_key(order);
    let csv = report_csv(&rows);
    if let Some(path) = &args.csv {
        write(path, &csv)?;
    }
    if let Some(path) = &args.json {
        write(path, report_json(&rows))?;
    }
    if args.csv.is_none() && args.json.is_none() {
        print!("{csv}");
    }
    Ok(())
}
