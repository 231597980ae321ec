mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fds_hyper::baselines::{build_space, Measure, SlqsConfig};
use fds_hyper::corpusgen::{gen_generalization, generate_corpus, Corpus, Direction, Hypothesis};
use fds_hyper::evalkit::{
    auc, auc_by_subcategory, labeled_pairs, pairs_to_tsv, parse_pairs, run_generalization, run_synthetic_suite,
    sample_targets, score_all, BaselineDetector, Detector, DetectorSpec, FdsDetector, ModelCache, SuiteOptions,
    Topology,
};
use fds_hyper::fdsmodel::{FdsParams, Norm};
use fds_hyper::graphdata::{from_corpus, graphs_to_jsonl, load_corpus, CorpusFormat, SemGraph, Vocab};
use fds_hyper::hierarchy::{closure_pairs, derive_variant, gen_chains, gen_tree, NegativeSampling, Taxonomy, Variant};
use fds_hyper::plot::plot2d;
use fds_hyper::trainer::{telemetry_csv, train, Preset, TrainConfig, TrainStatus};

use manifest::{sha256_hex, Run};

/// Bad flags or configuration; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "fdshyp", version, about = "Hypernymy detection with functional distributional semantics")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic taxonomy.
    Hierarchy(HierarchyArgs),
    /// Generate a quantified corpus from a taxonomy.
    Corpus(CorpusArgs),
    /// Train a model on a corpus.
    Train(TrainArgs),
    /// Score word pairs with trained checkpoints.
    Score(ScoreArgs),
    /// Run an evaluation suite.
    Eval(EvalArgs),
    /// Draw the zero-level lines of a 2-D checkpoint as SVG.
    Plot2d(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Chains,
    Tree,
    TreeOverlap,
    Dag,
    DagOverlap,
}

#[derive(Clone, Copy, ValueEnum)]
enum HypothesisArg {
    Dih,
    Rdih,
    Mixed,
}

impl From<HypothesisArg> for Hypothesis {
    fn from(h: HypothesisArg) -> Self {
        match h {
            HypothesisArg::Dih => Hypothesis::Dih,
            HypothesisArg::Rdih => Hypothesis::Rdih,
            HypothesisArg::Mixed => Hypothesis::Mixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Upward,
    Downward,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Upward => Direction::Upward,
            DirectionArg::Downward => Direction::Downward,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Fds,
    FdsForall,
    FdsForallHalf,
    FdsConditional,
}

impl From<VariantArg> for Preset {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Fds => Preset::Fds,
            VariantArg::FdsForall => Preset::FdsForall,
            VariantArg::FdsForallHalf => Preset::FdsForallHalf,
            VariantArg::FdsConditional => Preset::FdsConditional,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Tsv,
    GraphJsonl,
}

impl From<FormatArg> for CorpusFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Tsv => CorpusFormat::Tsv,
            FormatArg::GraphJsonl => CorpusFormat::GraphJsonl,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Synthetic,
    Generalization,
    Pairs,
}

#[derive(Args)]
struct HierarchyArgs {
    #[arg(long, value_enum)]
    topology: TopologyArg,
    /// Tree height (tree-based topologies).
    #[arg(long, default_value_t = 5)]
    height: usize,
    /// Node pairs modified for overlap and DAG variants.
    #[arg(long, default_value_t = 5)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write all closure pairs as a labeled pair file.
    #[arg(long)]
    pairs_out: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    hierarchy: PathBuf,
    #[arg(long, value_enum)]
    hypothesis: HypothesisArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    format: FormatArg,
    /// Ablate this many generalization targets.
    #[arg(long, default_value_t = 0)]
    targets: usize,
    #[arg(long, value_enum, default_value = "upward")]
    direction: DirectionArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the generalization manifest.
    #[arg(long)]
    eval_manifest: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Defaults to graph-jsonl for `.jsonl` files, tsv otherwise.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Noun/context partition file for graph corpora.
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fds")]
    variant: VariantArg,
    /// JSON training configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    forall_weight: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss terms as CSV.
    #[arg(long)]
    telemetry: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// One checkpoint per seed; scores are averaged.
    #[arg(long, required = true)]
    checkpoint: Vec<PathBuf>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    hypo: Option<String>,
    #[arg(long)]
    hyper: Option<String>,
    #[arg(long, default_value_t = 2)]
    p: u8,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[arg(long)]
    out: PathBuf,
    /// Markdown tables (synthetic suite).
    #[arg(long)]
    markdown: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    topology: Vec<TopologyArg>,
    #[arg(long, value_enum, value_delimiter = ',')]
    hypothesis: Vec<HypothesisArg>,
    /// Detector names such as Fds, Fds_forall, WeedsPrec, invCL.
    #[arg(long, value_delimiter = ',')]
    detector: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    seeds: Vec<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    topology_seed: u64,
    /// Generalization suite: taxonomy file (H_DAG' when absent).
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "upward")]
    direction: DirectionArg,
    #[arg(long, value_enum, default_value = "fds-forall")]
    variant: VariantArg,
    #[arg(long, default_value_t = 5)]
    targets: usize,
    #[arg(long, default_value_t = 0)]
    target_seed: u64,
    /// Pairs suite: labeled pair file.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Pairs suite: checkpoints to evaluate, one per seed.
    #[arg(long)]
    checkpoint: Vec<PathBuf>,
    /// Pairs suite: corpus for count baselines.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    partition: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<fds_hyper::Error>() {
        Some(fds_hyper::Error::Numeric { .. }) => 4,
        _ => 3,
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Hierarchy(a) => cmd_hierarchy(a),
        Command::Corpus(a) => cmd_corpus(a),
        Command::Train(a) => cmd_train(a),
        Command::Score(a) => cmd_score(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Plot2d(a) => cmd_plot2d(a),
    }
}

fn topology(t: TopologyArg) -> Topology {
    match t {
        TopologyArg::Chains => Topology::Chains,
        TopologyArg::Tree => Topology::Tree,
        TopologyArg::TreeOverlap => Topology::TreeOverlap,
        TopologyArg::Dag => Topology::Dag,
        TopologyArg::DagOverlap => Topology::DagOverlap,
    }
}

fn cmd_hierarchy(a: HierarchyArgs) -> Result<()> {
    let variant = match a.topology {
        TopologyArg::TreeOverlap => Some(Variant::Overlap),
        TopologyArg::Dag => Some(Variant::Dag),
        TopologyArg::DagOverlap => Some(Variant::DagOverlap),
        _ => None,
    };
    let t = match a.topology {
        TopologyArg::Chains => gen_chains(),
        _ => {
            let tree = gen_tree(a.height)?;
            match variant {
                Some(v) => derive_variant(&tree, v, a.pairs, a.seed)?,
                None => tree,
            }
        }
    };
    let mut run = Run::new("hierarchy");
    run.config(json!({
        "topology": topology(a.topology).key(),
        "height": a.height,
        "pairs": a.pairs,
    }))
    .seeds(&[a.seed]);
    run.output(&a.out, t.to_json());
    if let Some(p) = &a.pairs_out {
        run.output(p, pairs_to_tsv(&labeled_pairs(&closure_pairs(&t, NegativeSampling::All)?)));
    }
    run.finish()?;
    log::info!("{} nodes written to {}", t.len(), a.out.display());
    Ok(())
}

fn read_taxonomy(run: &mut Run, path: &Path) -> Result<Taxonomy> {
    let text = run.read_string(path)?;
    Ok(Taxonomy::from_json(&text, &path.display().to_string())?)
}

fn corpus_bytes(corpus: &Corpus, format: FormatArg) -> Result<String> {
    Ok(match format {
        FormatArg::Tsv => corpus.to_tsv(),
        FormatArg::GraphJsonl => {
            let (vocab, graphs) = from_corpus(corpus)?;
            graphs_to_jsonl(&vocab, &graphs)
        }
    })
}

fn cmd_corpus(a: CorpusArgs) -> Result<()> {
    let mut run = Run::new("corpus");
    let t = read_taxonomy(&mut run, &a.hierarchy)?;
    let hypothesis: Hypothesis = a.hypothesis.into();
    let direction: Direction = a.direction.into();
    run.config(json!({
        "hypothesis": hypothesis,
        "format": a.format.to_possible_value().expect("no skipped variants").get_name(),
        "targets": a.targets,
        "direction": direction,
    }))
    .seeds(&[a.seed]);
    let corpus = if a.targets > 0 {
        let specs = sample_targets(&t, a.targets, direction, a.seed)?;
        let (corpus, manifest) = gen_generalization(&t, &specs, direction, hypothesis, a.seed)?;
        let Some(path) = &a.eval_manifest else {
            return Err(usage("--targets requires --eval-manifest"));
        };
        run.output(path, serde_json::to_string_pretty(&manifest)? + "\n");
        corpus
    } else {
        generate_corpus(&t, hypothesis)
    };
    run.output(&a.out, corpus_bytes(&corpus, a.format)?);
    run.finish()?;
    Ok(())
}

fn infer_format(path: &Path, explicit: Option<FormatArg>) -> CorpusFormat {
    match explicit {
        Some(f) => f.into(),
        None if path.extension().is_some_and(|e| e == "jsonl") => CorpusFormat::GraphJsonl,
        None => CorpusFormat::Tsv,
    }
}

fn read_corpus(
    run: &mut Run,
    path: &Path,
    format: CorpusFormat,
    partition: Option<&Path>,
) -> Result<(Vocab, Vec<SemGraph>)> {
    run.read(path)?;
    if let Some(p) = partition {
        run.read(p)?;
    }
    Ok(load_corpus(path, format, partition)?)
}

/// Preset, then size defaults, then the config file, then flags.
fn resolve_config(a: &TrainArgs, n_nouns: usize, file: Option<&str>) -> Result<TrainConfig> {
    let base = TrainConfig::preset(a.variant.into()).sized_for(n_nouns);
    let mut value = serde_json::to_value(&base)?;
    if let Some(text) = file {
        let overrides: serde_json::Value =
            serde_json::from_str(text).map_err(|e| usage(format!("config file is not valid JSON: {e}")))?;
        let serde_json::Value::Object(map) = overrides else {
            return Err(usage("config file must hold a JSON object"));
        };
        let target = value.as_object_mut().expect("config serializes to an object");
        for (k, v) in map {
            target.insert(k, v);
        }
    }
    let mut cfg: TrainConfig = serde_path_to_error::deserialize(value)
        .map_err(|e| usage(format!("invalid config at `{}`: {}", e.path(), e.inner())))?;
    if let Some(v) = a.dim {
        cfg.dim = v;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.negatives {
        cfg.negatives = v;
    }
    if let Some(v) = a.forall_weight {
        cfg.forall_weight = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.workers {
        cfg.workers = v;
    }
    cfg.validate().map_err(|e| usage(format!("invalid config: {e}")))?;
    Ok(cfg)
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os("FDS_HYPER_CACHE").filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut run = Run::new("train");
    let format = infer_format(&a.corpus, a.format);
    let (vocab, graphs) = read_corpus(&mut run, &a.corpus, format, a.partition.as_deref())?;
    let file = match &a.config {
        Some(p) => Some(run.read_string(p)?),
        None => None,
    };
    let cfg = resolve_config(&a, vocab.nouns().len(), file.as_deref())?;
    run.config(serde_json::to_value(&cfg)?).seeds(&[cfg.seed]);

    let cached = cache_dir().map(|dir| {
        let mut key = serde_json::to_string(&cfg).expect("config serializes").into_bytes();
        key.extend(std::fs::read(&a.corpus).unwrap_or_default());
        if let Some(p) = &a.partition {
            key.extend(std::fs::read(p).unwrap_or_default());
        }
        dir.join(format!("train-{}.json", sha256_hex(&key)))
    });
    if let Some(path) = cached.as_ref().filter(|p| p.exists()) {
        log::info!("reusing cached checkpoint {}", path.display());
        let params = FdsParams::load(path)?;
        run.output(&a.out, params.to_checkpoint_json());
        run.finish()?;
        return Ok(());
    }

    let outcome = train(&vocab, &graphs, &cfg)?;
    if outcome.skipped_universal > 0 {
        log::info!("{} universal statement(s) trained without the forall term", outcome.skipped_universal);
    }
    let checkpoint = outcome.params.to_checkpoint_json();
    run.output(&a.out, checkpoint.clone());
    if let Some(t) = &a.telemetry {
        run.output(t, telemetry_csv(&outcome.telemetry));
    }
    run.finish()?;
    if let TrainStatus::Diverged { epoch, reason } = outcome.status {
        return Err(fds_hyper::Error::Numeric {
            term: "training".into(),
            detail: format!("diverged at epoch {epoch} ({reason}); last finite parameters saved"),
        }
        .into());
    }
    if let Some(path) = cached {
        std::fs::create_dir_all(path.parent().expect("cache file has a parent"))?;
        std::fs::write(&path, checkpoint).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn load_checkpoints(run: &mut Run, paths: &[PathBuf]) -> Result<Vec<FdsParams>> {
    paths
        .iter()
        .map(|p| {
            let text = run.read_string(p)?;
            FdsParams::from_checkpoint_json(&text).with_context(|| format!("loading {}", p.display()))
        })
        .collect()
}

fn checkpoint_seeds(models: &[FdsParams]) -> Vec<u64> {
    models.iter().enumerate().map(|(i, m)| m.seed.unwrap_or(i as u64)).collect()
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let mut run = Run::new("score");
    let norm = Norm::from_p(a.p).map_err(|e| usage(e.to_string()))?;
    let models = load_checkpoints(&mut run, &a.checkpoint)?;
    let pairs = match (&a.pairs, &a.hypo, &a.hyper) {
        (Some(p), None, None) => {
            let text = run.read_string(p)?;
            parse_pairs(&text, &p.display().to_string())?
        }
        (None, Some(h), Some(hh)) => vec![fds_hyper::evalkit::LabeledPair {
            pair: fds_hyper::hierarchy::WordPair::new(h.clone(), hh.clone()),
            positive: true,
        }],
        _ => return Err(usage("give either --pairs or both --hypo and --hyper")),
    };
    let dets: Vec<FdsDetector> = models.iter().map(|m| FdsDetector { params: m, norm }).collect();
    let refs: Vec<&dyn Detector> = dets.iter().map(|d| d as &dyn Detector).collect();
    let seeds = checkpoint_seeds(&models);
    let scored = score_all(&refs, &seeds, &pairs)?;
    if scored.excluded_oov > 0 {
        eprintln!("{} pair(s) out of vocabulary", scored.excluded_oov);
    }
    run.config(json!({ "p": a.p })).seeds(&seeds);
    match &a.out {
        Some(out) => {
            run.output(out, scored.to_tsv());
            run.finish()?;
        }
        None => {
            for p in &scored.pairs {
                println!("{}\t{}\t{}", p.hypo, p.hyper, p.score);
            }
        }
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    match a.suite {
        SuiteArg::Synthetic => eval_synthetic(a),
        SuiteArg::Generalization => eval_generalization(a),
        SuiteArg::Pairs => eval_pairs(a),
    }
}

fn suite_options(a: &EvalArgs) -> SuiteOptions {
    SuiteOptions {
        seeds: a.seeds.clone(),
        epochs: a.epochs,
        workers: a.workers,
        topology_seed: a.topology_seed,
        slqs: SlqsConfig::default(),
        cache: ModelCache::new(cache_dir()),
    }
}

fn parse_detectors(names: &[String]) -> Result<Vec<DetectorSpec>> {
    names.iter().map(|n| n.parse::<DetectorSpec>().map_err(|e| usage(e.to_string()))).collect()
}

fn eval_synthetic(a: EvalArgs) -> Result<()> {
    let topologies: Vec<Topology> =
        if a.topology.is_empty() { Topology::ALL.to_vec() } else { a.topology.iter().map(|&t| topology(t)).collect() };
    let hypotheses: Vec<Hypothesis> = if a.hypothesis.is_empty() {
        vec![Hypothesis::Dih, Hypothesis::Rdih, Hypothesis::Mixed]
    } else {
        a.hypothesis.iter().map(|&h| h.into()).collect()
    };
    let detectors = if a.detector.is_empty() {
        vec![
            DetectorSpec::Model(Preset::Fds),
            DetectorSpec::Model(Preset::FdsForall),
            DetectorSpec::Model(Preset::FdsConditional),
            DetectorSpec::Baseline(Measure::WeedsPrec),
            DetectorSpec::Baseline(Measure::InvCl),
        ]
    } else {
        parse_detectors(&a.detector)?
    };
    let opts = suite_options(&a);
    let report = run_synthetic_suite(&topologies, &hypotheses, &detectors, &opts)?;
    let mut run = Run::new("eval-synthetic");
    run.config(json!({
        "topologies": topologies,
        "hypotheses": hypotheses,
        "detectors": detectors.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "epochs": a.epochs,
        "topology_seed": a.topology_seed,
    }))
    .seeds(&a.seeds);
    run.output(&a.out, report.to_csv());
    if let Some(md) = &a.markdown {
        run.output(md, report.to_markdown());
    }
    run.finish()?;
    print!("{}", report.to_markdown());
    Ok(())
}

fn eval_generalization(a: EvalArgs) -> Result<()> {
    let mut run = Run::new("eval-generalization");
    let t = match &a.hierarchy {
        Some(p) => read_taxonomy(&mut run, p)?,
        None => Topology::DagOverlap.build(a.topology_seed)?,
    };
    let hypothesis: Hypothesis = a.hypothesis.first().copied().unwrap_or(HypothesisArg::Rdih).into();
    let direction: Direction = a.direction.into();
    let variant: Preset = a.variant.into();
    let opts = suite_options(&a);
    let result = run_generalization(&t, a.targets, direction, hypothesis, variant, a.target_seed, &opts)?;
    run.config(json!({
        "direction": direction,
        "hypothesis": hypothesis,
        "variant": variant.name(),
        "targets": a.targets,
        "target_seed": a.target_seed,
        "topology_seed": a.topology_seed,
        "epochs": a.epochs,
    }))
    .seeds(&a.seeds);
    run.output(&a.out, serde_json::to_string_pretty(&result)? + "\n");
    run.finish()?;
    match result.mean_auc {
        Some(m) => println!("{variant} {hypothesis} {direction}: mean AUC {m:.3}"),
        None => println!("{variant} {hypothesis} {direction}: {}", result.status),
    }
    Ok(())
}

fn eval_pairs(a: EvalArgs) -> Result<()> {
    let mut run = Run::new("eval-pairs");
    let Some(pairs_path) = &a.pairs else {
        return Err(usage("--suite pairs requires --pairs"));
    };
    let text = run.read_string(pairs_path)?;
    let pairs = parse_pairs(&text, &pairs_path.display().to_string())?;
    let mut results = Vec::new();
    if !a.checkpoint.is_empty() {
        let models = load_checkpoints(&mut run, &a.checkpoint)?;
        let dets: Vec<FdsDetector> = models.iter().map(FdsDetector::new).collect();
        let refs: Vec<&dyn Detector> = dets.iter().map(|d| d as &dyn Detector).collect();
        let mut scored = score_all(&refs, &checkpoint_seeds(&models), &pairs)?;
        scored.detector = "checkpoint".into();
        results.push(scored);
    }
    if !a.detector.is_empty() {
        let Some(corpus) = &a.corpus else {
            return Err(usage("baseline detectors need --corpus"));
        };
        let format = infer_format(corpus, a.format);
        let (vocab, graphs) = read_corpus(&mut run, corpus, format, a.partition.as_deref())?;
        for spec in parse_detectors(&a.detector)? {
            let DetectorSpec::Baseline(measure) = spec else {
                return Err(usage(format!("{spec} is a model; pass its checkpoints with --checkpoint")));
            };
            let det = BaselineDetector::new(build_space(&vocab, &graphs), measure, SlqsConfig::default())?;
            let mut scored = score_all(&[&det], &[0], &pairs)?;
            scored.seeds.clear();
            results.push(scored);
        }
    }
    if results.is_empty() {
        bail!(usage("give --checkpoint and/or --detector with --corpus"));
    }
    let mut report = Vec::new();
    for scored in &results {
        let value = auc(scored)?;
        let groups = auc_by_subcategory(scored)?;
        println!("{}: AUC {value:.3} over {} pairs", scored.detector, scored.pairs.len());
        for (g, v) in &groups {
            println!("  {g}: {v:.3}");
        }
        report.push(json!({
            "detector": scored.detector,
            "auc": value,
            "subcategories": groups,
            "n_pairs": scored.pairs.len(),
            "excluded_oov": scored.excluded_oov,
            "excluded_undefined": scored.excluded_undefined,
        }));
    }
    run.config(json!({ "detectors": a.detector, "checkpoints": a.checkpoint.len() }));
    run.output(&a.out, serde_json::to_string_pretty(&report)? + "\n");
    run.finish()?;
    Ok(())
}

fn cmd_plot2d(a: PlotArgs) -> Result<()> {
    let mut run = Run::new("plot2d");
    let models = load_checkpoints(&mut run, std::slice::from_ref(&a.checkpoint))?;
    let svg = plot2d(&models[0])?;
    run.output(&a.out, svg);
    run.finish()?;
    Ok(())
}
