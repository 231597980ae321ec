//! Scoring pair sets with any detector, AUC, and the synthetic experiment protocols.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{
    build_space_from_corpus, cosine, inv_cl, slqs, slqs_cos, weeds_prec, CountSpace, Measure, SlqsConfig, SlqsTable,
};
use crate::corpusgen::{
    gen_generalization, generate_corpus, sibling_options, Corpus, Direction, GeneralizationManifest, Hypothesis,
    TargetSpec,
};
use crate::error::{read_to_string, Error, Result};
use crate::fdsmodel::{hyp_score_by_name, FdsParams, Norm};
use crate::hierarchy::{
    closure_pairs, derive_variant, gen_chains, gen_tree, NegativeSampling, Taxonomy, Variant, WordPair,
};
use crate::rng;
use crate::trainer::{train_corpus, Preset, TrainConfig, TrainStatus};

/// Anything that scores `(hypo, hyper)`; higher means more likely hypernymy.
pub trait Detector {
    fn id(&self) -> String;
    /// `Err(Lookup)` marks an out-of-vocabulary pair.
    fn score(&self, hypo: &str, hyper: &str) -> Result<f64>;
}

pub struct FdsDetector<'a> {
    pub params: &'a FdsParams,
    pub norm: Norm,
}

impl<'a> FdsDetector<'a> {
    pub fn new(params: &'a FdsParams) -> Self {
        FdsDetector { params, norm: Norm::L2 }
    }
}

impl Detector for FdsDetector<'_> {
    fn id(&self) -> String {
        "Fds".into()
    }

    fn score(&self, hypo: &str, hyper: &str) -> Result<f64> {
        hyp_score_by_name(self.params, hypo, hyper, self.norm)
    }
}

pub struct BaselineDetector {
    space: CountSpace,
    measure: Measure,
    slqs: Option<SlqsTable>,
}

impl BaselineDetector {
    pub fn new(space: CountSpace, measure: Measure, slqs_cfg: SlqsConfig) -> Result<Self> {
        let slqs = match measure {
            Measure::Slqs | Measure::SlqsCos => Some(SlqsTable::new(&space, slqs_cfg)?),
            _ => None,
        };
        Ok(BaselineDetector { space, measure, slqs })
    }

    pub fn space(&self) -> &CountSpace {
        &self.space
    }
}

impl Detector for BaselineDetector {
    fn id(&self) -> String {
        self.measure.name().into()
    }

    fn score(&self, hypo: &str, hyper: &str) -> Result<f64> {
        let (a, b) = (self.space.row(hypo)?, self.space.row(hyper)?);
        let s = &self.space;
        let value = match self.measure {
            Measure::WeedsPrec => weeds_prec(s, a, b),
            Measure::InvCl => inv_cl(s, a, b),
            Measure::Cosine => cosine(s, a, b),
            Measure::Slqs => return slqs(s, self.slqs.as_ref().expect("table built"), a, b),
            Measure::SlqsCos => return slqs_cos(s, self.slqs.as_ref().expect("table built"), a, b),
        };
        match value {
            Err(Error::UndefinedMeasure(why)) => {
                log::warn!("{} undefined for ({hypo}, {hyper}), scored 0: {why}", self.measure);
                Ok(0.0)
            }
            other => other,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub pair: WordPair,
    pub positive: bool,
}

pub fn labeled_pairs(set: &crate::hierarchy::PairSet) -> Vec<LabeledPair> {
    set.labeled().map(|(p, positive)| LabeledPair { pair: p.clone(), positive }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub hypo: String,
    pub hyper: String,
    pub score: f64,
    pub positive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredPairs {
    pub detector: String,
    pub seeds: Vec<u64>,
    pub pairs: Vec<ScoredPair>,
    /// Pairs dropped because a word is out of vocabulary.
    pub excluded_oov: usize,
    /// Pairs dropped because the measure is undefined for them.
    pub excluded_undefined: usize,
}

impl ScoredPairs {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("hypo\thyper\tscore\tlabel\tsubcategory\n");
        for p in &self.pairs {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                p.hypo,
                p.hyper,
                p.score,
                u8::from(p.positive),
                p.subcategory.as_deref().unwrap_or("")
            ));
        }
        out
    }
}

/// Mean score per pair across one detector per seed.
pub fn score_all(detectors: &[&dyn Detector], seeds: &[u64], pairs: &[LabeledPair]) -> Result<ScoredPairs> {
    if detectors.is_empty() || detectors.len() != seeds.len() {
        return Err(Error::InvalidArgument(format!(
            "need one detector per seed, got {} detectors for {} seeds",
            detectors.len(),
            seeds.len()
        )));
    }
    let mut out = ScoredPairs {
        detector: detectors[0].id(),
        seeds: seeds.to_vec(),
        pairs: Vec::with_capacity(pairs.len()),
        excluded_oov: 0,
        excluded_undefined: 0,
    };
    'pairs: for lp in pairs {
        let mut sum = 0.0;
        for d in detectors {
            match d.score(&lp.pair.hypo, &lp.pair.hyper) {
                Ok(s) => sum += s,
                Err(Error::Lookup(_)) => {
                    out.excluded_oov += 1;
                    continue 'pairs;
                }
                Err(Error::UndefinedMeasure(_)) => {
                    out.excluded_undefined += 1;
                    continue 'pairs;
                }
                Err(e) => return Err(e),
            }
        }
        let score = sum / detectors.len() as f64;
        if !score.is_finite() {
            return Err(Error::Numeric {
                term: "score".into(),
                detail: format!("({}, {}) scored {score}", lp.pair.hypo, lp.pair.hyper),
            });
        }
        out.pairs.push(ScoredPair {
            hypo: lp.pair.hypo.clone(),
            hyper: lp.pair.hyper.clone(),
            score,
            positive: lp.positive,
            subcategory: lp.pair.subcategory.clone(),
        });
    }
    if out.excluded_oov > 0 {
        log::info!("{}: {} out-of-vocabulary pair(s) excluded", out.detector, out.excluded_oov);
    }
    Ok(out)
}

/// Mann–Whitney AUC with half credit for ties, via midranks.
pub fn auc_from_scores(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes ({} positive, {} negative)",
            positives.len(),
            negatives.len()
        )));
    }
    let mut all: Vec<(f64, bool)> =
        positives.iter().map(|&s| (s, true)).chain(negatives.iter().map(|&s| (s, false))).collect();
    if all.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::UndefinedMetric("NaN score".into()));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += midrank * all[i..=j].iter().filter(|x| x.1).count() as f64;
        i = j + 1;
    }
    let p = positives.len() as f64;
    let n = negatives.len() as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

pub fn auc(scored: &ScoredPairs) -> Result<f64> {
    let (pos, neg) = split(scored.pairs.iter());
    auc_from_scores(&pos, &neg)
}

fn split<'a>(pairs: impl Iterator<Item = &'a ScoredPair>) -> (Vec<f64>, Vec<f64>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for p in pairs {
        if p.positive {
            pos.push(p.score);
        } else {
            neg.push(p.score);
        }
    }
    (pos, neg)
}

/// AUC of all positives against each negative subcategory.
pub fn auc_by_subcategory(scored: &ScoredPairs) -> Result<BTreeMap<String, f64>> {
    let groups: BTreeSet<&str> =
        scored.pairs.iter().filter(|p| !p.positive).filter_map(|p| p.subcategory.as_deref()).collect();
    let pos: Vec<f64> = scored.pairs.iter().filter(|p| p.positive).map(|p| p.score).collect();
    groups
        .into_iter()
        .map(|g| {
            let neg: Vec<f64> = scored
                .pairs
                .iter()
                .filter(|p| !p.positive && p.subcategory.as_deref() == Some(g))
                .map(|p| p.score)
                .collect();
            Ok((g.to_string(), auc_from_scores(&pos, &neg)?))
        })
        .collect()
}

/// `word1<TAB>word2<TAB>{1|0}[<TAB>subcategory]`, blank lines and `#` comments skipped.
pub fn parse_pairs(text: &str, origin: &str) -> Result<Vec<LabeledPair>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&f.len()) {
            return Err(Error::parse_at(
                origin,
                line_no,
                format!("expected 3 or 4 tab-separated fields, found {}", f.len()),
            ));
        }
        if f[0].is_empty() || f[1].is_empty() {
            return Err(Error::parse_at(origin, line_no, "empty word"));
        }
        let positive = match f[2].trim() {
            "1" => true,
            "0" => false,
            other => return Err(Error::parse_at(origin, line_no, format!("label must be 1 or 0, found {other:?}"))),
        };
        let subcategory = f.get(3).map(|s| s.trim()).filter(|s| !s.is_empty()).map(String::from);
        out.push(LabeledPair {
            pair: WordPair { hypo: f[0].to_string(), hyper: f[1].to_string(), subcategory },
            positive,
        });
    }
    Ok(out)
}

pub fn load_pairs(path: &Path) -> Result<Vec<LabeledPair>> {
    parse_pairs(&read_to_string(path)?, &path.display().to_string())
}

pub fn pairs_to_tsv(pairs: &[LabeledPair]) -> String {
    let mut out = String::new();
    for lp in pairs {
        out.push_str(&format!("{}\t{}\t{}", lp.pair.hypo, lp.pair.hyper, u8::from(lp.positive)));
        if let Some(s) = &lp.pair.subcategory {
            out.push('\t');
            out.push_str(s);
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Chains,
    Tree,
    TreeOverlap,
    Dag,
    DagOverlap,
}

impl Topology {
    pub const ALL: [Topology; 5] =
        [Topology::Chains, Topology::Tree, Topology::TreeOverlap, Topology::Dag, Topology::DagOverlap];
    pub const TREE_HEIGHT: usize = 5;
    pub const MODIFIED_PAIRS: usize = 5;

    pub fn key(self) -> &'static str {
        match self {
            Topology::Chains => "chains",
            Topology::Tree => "tree",
            Topology::TreeOverlap => "tree-overlap",
            Topology::Dag => "dag",
            Topology::DagOverlap => "dag-overlap",
        }
    }

    /// Column heading in reports.
    pub fn label(self) -> &'static str {
        match self {
            Topology::Chains => "H_chains",
            Topology::Tree => "H_tree",
            Topology::TreeOverlap => "H_tree'",
            Topology::Dag => "H_DAG",
            Topology::DagOverlap => "H_DAG'",
        }
    }

    pub fn build(self, seed: u64) -> Result<Taxonomy> {
        let variant = match self {
            Topology::Chains => return Ok(gen_chains()),
            Topology::Tree => return gen_tree(Self::TREE_HEIGHT),
            Topology::TreeOverlap => Variant::Overlap,
            Topology::Dag => Variant::Dag,
            Topology::DagOverlap => Variant::DagOverlap,
        };
        derive_variant(&gen_tree(Self::TREE_HEIGHT)?, variant, Self::MODIFIED_PAIRS, seed)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Topology::ALL
            .into_iter()
            .find(|t| t.key() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown topology {s:?}")))
    }
}

/// A row of the result tables: a trained model variant or a count baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorSpec {
    Model(Preset),
    Baseline(Measure),
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorSpec::Model(p) => p.fmt(f),
            DetectorSpec::Baseline(m) => m.fmt(f),
        }
    }
}

impl FromStr for DetectorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<Preset>()
            .map(DetectorSpec::Model)
            .or_else(|_| s.parse::<Measure>().map(DetectorSpec::Baseline))
            .map_err(|_| Error::InvalidArgument(format!("unknown detector {s:?}")))
    }
}

/// Trains models or reuses checkpoints keyed by corpus and configuration.
#[derive(Clone, Debug, Default)]
pub struct ModelCache {
    pub dir: Option<PathBuf>,
}

impl ModelCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        ModelCache { dir }
    }

    pub fn key(corpus: &Corpus, cfg: &TrainConfig) -> String {
        let mut h = Sha256::new();
        h.update(corpus.to_tsv().as_bytes());
        h.update(serde_json::to_string(cfg).expect("config serializes").as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn train(&self, corpus: &Corpus, cfg: &TrainConfig) -> Result<FdsParams> {
        let path = self.dir.as_ref().map(|d| d.join(format!("{}.json", Self::key(corpus, cfg))));
        if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            log::debug!("reusing checkpoint {}", p.display());
            return FdsParams::load(p);
        }
        let out = train_corpus(corpus, cfg)?;
        if let TrainStatus::Diverged { epoch, reason } = &out.status {
            return Err(Error::Numeric {
                term: "training".into(),
                detail: format!("diverged at epoch {epoch}: {reason}"),
            });
        }
        if let Some(p) = &path {
            std::fs::create_dir_all(p.parent().expect("cache file has a parent")).map_err(|e| Error::io(p, e))?;
            out.params.save(p)?;
        }
        Ok(out.params)
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seeds: Vec<u64>,
    /// Overrides the size-based epoch default.
    pub epochs: Option<usize>,
    pub workers: usize,
    /// Seed for overlap/DAG modifications.
    pub topology_seed: u64,
    pub slqs: SlqsConfig,
    pub cache: ModelCache,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seeds: vec![0, 1],
            epochs: None,
            workers: 1,
            topology_seed: 0,
            slqs: SlqsConfig::default(),
            cache: ModelCache::default(),
        }
    }
}

impl SuiteOptions {
    pub fn train_config(&self, preset: Preset, n_nouns: usize, seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig::preset(preset).sized_for(n_nouns).with_seed(seed);
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        cfg.workers = self.workers;
        cfg
    }
}

/// Score a detector on a corpus and pair list; models are trained once per seed.
pub fn evaluate_detector(
    spec: DetectorSpec,
    corpus: &Corpus,
    n_nouns: usize,
    pairs: &[LabeledPair],
    opts: &SuiteOptions,
) -> Result<ScoredPairs> {
    match spec {
        DetectorSpec::Model(preset) => {
            let models = opts
                .seeds
                .iter()
                .map(|&s| opts.cache.train(corpus, &opts.train_config(preset, n_nouns, s)))
                .collect::<Result<Vec<_>>>()?;
            let dets: Vec<FdsDetector> = models.iter().map(FdsDetector::new).collect();
            let refs: Vec<&dyn Detector> = dets.iter().map(|d| d as &dyn Detector).collect();
            let mut scored = score_all(&refs, &opts.seeds, pairs)?;
            scored.detector = preset.to_string();
            Ok(scored)
        }
        DetectorSpec::Baseline(measure) => {
            let det = BaselineDetector::new(build_space_from_corpus(corpus)?, measure, opts.slqs)?;
            score_all(&[&det], &[0], pairs).map(|mut s| {
                s.seeds.clear();
                s
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub topology: String,
    pub hypothesis: Hypothesis,
    pub detector: String,
    pub auc: f64,
    pub n_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seeds: Vec<u64>,
    pub config_hash: String,
    pub runtime_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cells: Vec<ReportCell>,
    pub meta: ReportMeta,
}

impl ExperimentReport {
    pub fn get(&self, topology: &str, hypothesis: Hypothesis, detector: &str) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.topology == topology && c.hypothesis == hypothesis && c.detector == detector)
            .map(|c| c.auc)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("hypothesis,detector,topology,auc,n_pairs\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{:.3},{}\n", c.hypothesis, c.detector, c.topology, c.auc, c.n_pairs));
        }
        out
    }

    /// One table per hypothesis: detectors as rows, topologies as columns.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let hyps: BTreeSet<String> = self.cells.iter().map(|c| c.hypothesis.to_string()).collect();
        for h in hyps {
            let cells: Vec<&ReportCell> = self.cells.iter().filter(|c| c.hypothesis.to_string() == h).collect();
            let mut topologies: Vec<&str> = Vec::new();
            let mut detectors: Vec<&str> = Vec::new();
            for c in &cells {
                if !topologies.contains(&c.topology.as_str()) {
                    topologies.push(&c.topology);
                }
                if !detectors.contains(&c.detector.as_str()) {
                    detectors.push(&c.detector);
                }
            }
            out.push_str(&format!("### AUC on {} corpora\n\n| Model |", h.to_uppercase().replace("RDIH", "rDIH")));
            for t in &topologies {
                out.push_str(&format!(" {t} |"));
            }
            out.push_str("\n|---|");
            out.push_str(&"---:|".repeat(topologies.len()));
            out.push('\n');
            for d in &detectors {
                out.push_str(&format!("| {d} |"));
                for t in &topologies {
                    match cells.iter().find(|c| c.detector == *d && c.topology == *t) {
                        Some(c) => out.push_str(&format!(" {} |", format_auc(c.auc))),
                        None => out.push_str(" – |"),
                    }
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// Three decimals with the leading zero dropped below 1.
pub fn format_auc(v: f64) -> String {
    let s = format!("{v:.3}");
    s.strip_prefix('0').map(String::from).unwrap_or(s)
}

pub fn run_synthetic_suite(
    topologies: &[Topology],
    hypotheses: &[Hypothesis],
    detectors: &[DetectorSpec],
    opts: &SuiteOptions,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut cells = Vec::new();
    for &topology in topologies {
        let t = topology.build(opts.topology_seed)?;
        let pairs = labeled_pairs(&closure_pairs(&t, NegativeSampling::All)?);
        for &hyp in hypotheses {
            let corpus = generate_corpus(&t, hyp);
            for &det in detectors {
                let scored = evaluate_detector(det, &corpus, t.len(), &pairs, opts)?;
                let value = auc(&scored)?;
                log::info!("{} {hyp} {det}: AUC {value:.3}", topology.label());
                cells.push(ReportCell {
                    topology: topology.label().into(),
                    hypothesis: hyp,
                    detector: det.to_string(),
                    auc: value,
                    n_pairs: scored.pairs.len(),
                });
            }
        }
    }
    let config = serde_json::json!({
        "topologies": topologies,
        "hypotheses": hypotheses,
        "detectors": detectors.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "seeds": opts.seeds,
        "epochs": opts.epochs,
        "topology_seed": opts.topology_seed,
        "slqs": opts.slqs,
    });
    let config_hash: String =
        Sha256::digest(config.to_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(ExperimentReport {
        cells,
        meta: ReportMeta { seeds: opts.seeds.clone(), config_hash, runtime_secs: start.elapsed().as_secs_f64() },
    })
}

/// `n` distinct targets with explicit siblings and distinct pivots, each keeping
/// at least one candidate after all ablations.
pub fn sample_targets(t: &Taxonomy, n: usize, direction: Direction, seed: u64) -> Result<Vec<TargetSpec>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut rng = rng::stream(seed, "eval/targets");
    for _ in 0..1000 {
        let mut order: Vec<usize> = (0..t.len()).collect();
        order.shuffle(&mut rng);
        let mut pivots: Vec<usize> = Vec::new();
        let mut specs = Vec::new();
        for x in order {
            if specs.len() == n {
                break;
            }
            let options: Vec<(usize, usize)> =
                sibling_options(t, x, direction).into_iter().filter(|(_, p)| !pivots.contains(p)).collect();
            let Some(&(s, p)) = options.choose(&mut rng) else {
                continue;
            };
            pivots.push(p);
            specs.push(TargetSpec::with_sibling(t.node(x).id.clone(), t.node(s).id.clone()));
        }
        if specs.len() < n {
            break;
        }
        let (_, manifest) = gen_generalization(t, &specs, direction, Hypothesis::Dih, seed)?;
        if manifest.targets.iter().all(|r| !r.candidates.is_empty()) {
            return Ok(specs);
        }
    }
    Err(Error::Generation(format!(
        "could not find {n} {direction} generalization targets in a {}-node taxonomy",
        t.len()
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationResult {
    pub manifest: GeneralizationManifest,
    pub variant: Preset,
    pub seeds: Vec<u64>,
    /// One random distractor per candidate, per target.
    pub sampled_distractors: Vec<Vec<String>>,
    pub per_target_auc: Vec<f64>,
    /// `None` with zero targets.
    pub mean_auc: Option<f64>,
    pub status: String,
}

pub fn run_generalization(
    t: &Taxonomy,
    n_targets: usize,
    direction: Direction,
    hypothesis: Hypothesis,
    variant: Preset,
    target_seed: u64,
    opts: &SuiteOptions,
) -> Result<GeneralizationResult> {
    let specs = sample_targets(t, n_targets, direction, target_seed)?;
    let (corpus, manifest) = gen_generalization(t, &specs, direction, hypothesis, target_seed)?;
    if manifest.targets.is_empty() {
        return Ok(GeneralizationResult {
            manifest,
            variant,
            seeds: opts.seeds.clone(),
            sampled_distractors: Vec::new(),
            per_target_auc: Vec::new(),
            mean_auc: None,
            status: "no targets".into(),
        });
    }
    let mut rng = rng::stream(target_seed, "eval/distractors");
    let mut pairs = Vec::new();
    let mut sampled_distractors = Vec::new();
    for rec in &manifest.targets {
        let make = |other: &String| match direction {
            Direction::Upward => WordPair::new(rec.target.clone(), other.clone()),
            Direction::Downward => WordPair::new(other.clone(), rec.target.clone()),
        };
        let drawn: Vec<String> = rec.distractors.choose_multiple(&mut rng, rec.candidates.len()).cloned().collect();
        pairs.push((
            rec.candidates.iter().map(|c| LabeledPair { pair: make(c), positive: true }).collect::<Vec<_>>(),
            drawn.iter().map(|c| LabeledPair { pair: make(c), positive: false }).collect::<Vec<_>>(),
        ));
        sampled_distractors.push(drawn);
    }
    let all: Vec<LabeledPair> = pairs.iter().flat_map(|(p, n)| p.iter().chain(n)).cloned().collect();
    let scored = evaluate_detector(DetectorSpec::Model(variant), &corpus, t.len(), &all, opts)?;
    let lookup: BTreeMap<(&str, &str), f64> =
        scored.pairs.iter().map(|p| ((p.hypo.as_str(), p.hyper.as_str()), p.score)).collect();
    let score = |lp: &LabeledPair| lookup[&(lp.pair.hypo.as_str(), lp.pair.hyper.as_str())];
    let per_target_auc = pairs
        .iter()
        .map(|(pos, neg)| {
            auc_from_scores(&pos.iter().map(score).collect::<Vec<_>>(), &neg.iter().map(score).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = per_target_auc.iter().sum::<f64>() / per_target_auc.len() as f64;
    Ok(GeneralizationResult {
        manifest,
        variant,
        seeds: opts.seeds.clone(),
        sampled_distractors,
        per_target_auc,
        mean_auc: Some(mean),
        status: "ok".into(),
    })
}
