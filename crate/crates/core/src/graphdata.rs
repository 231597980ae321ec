//! Predicate–argument graphs, vocabulary and negative sampling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpusgen::{Corpus, Quantifier};
use crate::error::{read_to_string, Error, Result};
use crate::hierarchy::MAX_ROLE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredKind {
    Noun,
    Context,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub pred: String,
    pub kind: PredKind,
    pub count: u64,
}

/// Predicates indexed densely, partitioned into nouns and context predicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
    nouns: Vec<usize>,
    contexts: Vec<usize>,
    roles: Vec<u8>,
    slots: Vec<(usize, u8)>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    entries: Vec<VocabEntry>,
    roles: Vec<u8>,
    slots: Vec<(usize, u8)>,
}

impl Serialize for Vocab {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VocabRepr { entries: self.entries.clone(), roles: self.roles.clone(), slots: self.slots.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocab {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = VocabRepr::deserialize(d)?;
        Vocab::from_parts(r.entries, r.roles, r.slots).map_err(serde::de::Error::custom)
    }
}

impl Vocab {
    pub fn from_parts(entries: Vec<VocabEntry>, roles: Vec<u8>, slots: Vec<(usize, u8)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.pred.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate predicate `{}`", e.pred)));
            }
        }
        if let Some(&(p, _)) = slots.iter().find(|(p, r)| *p >= entries.len() || !roles.contains(r)) {
            return Err(Error::InvalidArgument(format!("context slot refers to unknown predicate {p}")));
        }
        let nouns = (0..entries.len()).filter(|&i| entries[i].kind == PredKind::Noun).collect();
        let contexts = (0..entries.len()).filter(|&i| entries[i].kind == PredKind::Context).collect();
        Ok(Vocab { entries, index, nouns, contexts, roles, slots })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, pred: &str) -> Option<usize> {
        self.index.get(pred).copied()
    }

    pub fn lookup(&self, pred: &str) -> Result<usize> {
        self.get(pred).ok_or_else(|| Error::Lookup(format!("predicate `{pred}`")))
    }

    pub fn name(&self, i: usize) -> &str {
        &self.entries[i].pred
    }

    pub fn kind(&self, i: usize) -> PredKind {
        self.entries[i].kind
    }

    pub fn count(&self, i: usize) -> u64 {
        self.entries[i].count
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn nouns(&self) -> &[usize] {
        &self.nouns
    }

    pub fn contexts(&self) -> &[usize] {
        &self.contexts
    }

    pub fn partition(&self, kind: PredKind) -> &[usize] {
        match kind {
            PredKind::Noun => &self.nouns,
            PredKind::Context => &self.contexts,
        }
    }

    /// Argument roles observed on edges, ascending.
    pub fn roles(&self) -> &[u8] {
        &self.roles
    }

    pub fn role_index(&self, role: u8) -> Option<usize> {
        self.roles.iter().position(|&r| r == role)
    }

    /// `(head predicate, role)` pairs observed on edges, sorted.
    pub fn context_slots(&self) -> &[(usize, u8)] {
        &self.slots
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub pred: usize,
    pub quant: Option<Quantifier>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphEdge {
    pub head: usize,
    pub dep: usize,
    pub role: u8,
}

/// A training instance: nodes carry predicates, edges `head -ARG[role]→ dep`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl SemGraph {
    pub fn new(nodes: Vec<GraphNode>, edges: Vec<GraphEdge>) -> Result<Self> {
        let g = SemGraph { nodes, edges };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            if e.head >= self.nodes.len() || e.dep >= self.nodes.len() {
                return Err(Error::InvalidArgument(format!("dangling edge {}->{}", e.head, e.dep)));
            }
            if e.head == e.dep {
                return Err(Error::InvalidArgument(format!("self-loop on node {}", e.head)));
            }
            if !(1..=MAX_ROLE).contains(&e.role) {
                return Err(Error::InvalidArgument(format!("unknown role {}", e.role)));
            }
            if !seen.insert(*e) {
                return Err(Error::InvalidArgument(format!("repeated edge {}->{} role {}", e.head, e.dep, e.role)));
            }
        }
        Ok(())
    }

    /// A statement as a two-node graph: `context -ARG[role]→ noun`.
    pub fn from_statement(noun: usize, quant: Quantifier, context: usize, role: u8) -> Self {
        SemGraph {
            nodes: vec![GraphNode { pred: noun, quant: Some(quant) }, GraphNode { pred: context, quant: None }],
            edges: vec![GraphEdge { head: 1, dep: 0, role }],
        }
    }
}

/// A graph with predicates still given by name.
#[derive(Clone, Debug, Default)]
struct RawGraph {
    nodes: Vec<(String, Option<Quantifier>)>,
    edges: Vec<(usize, usize, u8)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv,
    GraphJsonl,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "graph-jsonl" | "jsonl" => Ok(CorpusFormat::GraphJsonl),
            other => Err(Error::InvalidArgument(format!("unknown corpus format `{other}`"))),
        }
    }
}

fn build(raw: Vec<RawGraph>, partition: Option<&HashMap<String, PredKind>>) -> Result<(Vocab, Vec<SemGraph>)> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut quantified = BTreeSet::new();
    let mut roles = BTreeSet::new();
    for g in &raw {
        for (p, q) in &g.nodes {
            *counts.entry(p.as_str()).or_default() += 1;
            if q.is_some() {
                quantified.insert(p.as_str());
            }
        }
        roles.extend(g.edges.iter().map(|e| e.2));
    }
    let mut entries = Vec::with_capacity(counts.len());
    for (&pred, &count) in &counts {
        let kind = match partition.and_then(|m| m.get(pred)) {
            Some(&k) => k,
            None if quantified.contains(pred) => PredKind::Noun,
            None => PredKind::Context,
        };
        entries.push(VocabEntry { pred: pred.to_string(), kind, count });
    }
    let index: HashMap<&str, usize> = entries.iter().enumerate().map(|(i, e)| (e.pred.as_str(), i)).collect();
    let mut slots = BTreeSet::new();
    let mut graphs = Vec::with_capacity(raw.len());
    for g in &raw {
        let nodes: Vec<GraphNode> =
            g.nodes.iter().map(|(p, q)| GraphNode { pred: index[p.as_str()], quant: *q }).collect();
        let edges: Vec<GraphEdge> = g.edges.iter().map(|&(head, dep, role)| GraphEdge { head, dep, role }).collect();
        for e in &edges {
            slots.insert((nodes[e.head].pred, e.role));
        }
        graphs.push(SemGraph::new(nodes, edges)?);
    }
    let vocab = Vocab::from_parts(entries, roles.into_iter().collect(), slots.into_iter().collect())?;
    Ok((vocab, graphs))
}

/// Vocabulary and two-node graphs for an in-memory corpus.
pub fn from_corpus(corpus: &Corpus) -> Result<(Vocab, Vec<SemGraph>)> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("empty corpus".into()));
    }
    let raw = corpus
        .statements
        .iter()
        .map(|s| RawGraph {
            nodes: vec![(s.noun.clone(), Some(s.quantifier)), (s.slot.predicate.clone(), None)],
            edges: vec![(1, 0, s.slot.role)],
        })
        .collect();
    build(raw, None)
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeId {
    Int(i64),
    Str(String),
}

impl NodeId {
    fn key(&self) -> String {
        match self {
            NodeId::Int(i) => i.to_string(),
            NodeId::Str(s) => s.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    id: NodeId,
    pred: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quant: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    head: NodeId,
    dep: NodeId,
    role: u8,
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    nodes: Vec<JsonNode>,
    edges: Vec<JsonEdge>,
}

fn parse_jsonl(text: &str, origin: &str) -> Result<Vec<RawGraph>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::parse_at(origin, lineno + 1, m);
        let jg: JsonGraph = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let mut ids = HashMap::new();
        let mut g = RawGraph::default();
        for (k, n) in jg.nodes.iter().enumerate() {
            if ids.insert(n.id.key(), k).is_some() {
                return Err(bad(format!("duplicate node id `{}`", n.id.key())));
            }
            if n.pred.is_empty() {
                return Err(bad("empty predicate".into()));
            }
            let quant = match n.quant.as_deref() {
                None | Some("") => None,
                Some(tok) => {
                    Some(Quantifier::from_token(tok).ok_or_else(|| bad(format!("unknown quantifier `{tok}`")))?)
                }
            };
            g.nodes.push((n.pred.clone(), quant));
        }
        for e in &jg.edges {
            let head = *ids.get(&e.head.key()).ok_or_else(|| bad(format!("dangling edge head `{}`", e.head.key())))?;
            let dep = *ids.get(&e.dep.key()).ok_or_else(|| bad(format!("dangling edge dep `{}`", e.dep.key())))?;
            if !(1..=MAX_ROLE).contains(&e.role) {
                return Err(bad(format!("unknown role {}", e.role)));
            }
            if head == dep {
                return Err(bad("self-loop".into()));
            }
            g.edges.push((head, dep, e.role));
        }
        out.push(g);
    }
    if out.is_empty() {
        return Err(Error::parse_at(origin, 1, "empty corpus"));
    }
    Ok(out)
}

fn parse_partition(text: &str, origin: &str) -> Result<HashMap<String, PredKind>> {
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (pred, kind) =
            line.split_once('\t').ok_or_else(|| Error::parse_at(origin, lineno + 1, "expected predicate<TAB>kind"))?;
        let kind = match kind.trim() {
            "noun" => PredKind::Noun,
            "context" => PredKind::Context,
            other => return Err(Error::parse_at(origin, lineno + 1, format!("unknown kind `{other}`"))),
        };
        map.insert(pred.to_string(), kind);
    }
    Ok(map)
}

pub fn load_corpus(path: &Path, format: CorpusFormat, partition: Option<&Path>) -> Result<(Vocab, Vec<SemGraph>)> {
    let text = read_to_string(path)?;
    let origin = path.display().to_string();
    let partition = match partition {
        Some(p) => Some(parse_partition(&read_to_string(p)?, &p.display().to_string())?),
        None => None,
    };
    match format {
        CorpusFormat::Tsv => {
            let corpus = Corpus::from_tsv(&text, &origin)?;
            let (vocab, graphs) = from_corpus(&corpus)?;
            match partition {
                None => Ok((vocab, graphs)),
                // Re-tag with the explicit partition.
                Some(map) => build(raw_from_graphs(&vocab, &graphs), Some(&map)),
            }
        }
        CorpusFormat::GraphJsonl => build(parse_jsonl(&text, &origin)?, partition.as_ref()),
    }
}

fn raw_from_graphs(vocab: &Vocab, graphs: &[SemGraph]) -> Vec<RawGraph> {
    graphs
        .iter()
        .map(|g| RawGraph {
            nodes: g.nodes.iter().map(|n| (vocab.name(n.pred).to_string(), n.quant)).collect(),
            edges: g.edges.iter().map(|e| (e.head, e.dep, e.role)).collect(),
        })
        .collect()
}

/// Serialize graphs as JSON lines with integer node ids.
pub fn graphs_to_jsonl(vocab: &Vocab, graphs: &[SemGraph]) -> String {
    let mut out = String::new();
    for g in graphs {
        let jg = JsonGraph {
            nodes: g
                .nodes
                .iter()
                .enumerate()
                .map(|(k, n)| JsonNode {
                    id: NodeId::Int(k as i64),
                    pred: vocab.name(n.pred).to_string(),
                    quant: n.quant.map(|q| q.token().to_string()),
                })
                .collect(),
            edges: g
                .edges
                .iter()
                .map(|e| JsonEdge { head: NodeId::Int(e.head as i64), dep: NodeId::Int(e.dep as i64), role: e.role })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&jg).expect("graph serializes"));
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
#[derive(Default)]
pub enum NegativeDistribution {
    #[default]
    Uniform,
    Unigram {
        alpha: f64,
    },
}

pub const DEFAULT_UNIGRAM_ALPHA: f64 = 0.75;

/// Precomputed sampling tables for one vocabulary.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    nouns: Vec<usize>,
    contexts: Vec<usize>,
    noun_weights: Option<WeightedIndex<f64>>,
    context_weights: Option<WeightedIndex<f64>>,
    slots: Vec<(usize, u8)>,
}

impl NegativeSampler {
    pub fn new(vocab: &Vocab, distribution: NegativeDistribution) -> Result<Self> {
        let weights = |members: &[usize]| -> Result<Option<WeightedIndex<f64>>> {
            match distribution {
                NegativeDistribution::Uniform => Ok(None),
                NegativeDistribution::Unigram { .. } if members.is_empty() => Ok(None),
                NegativeDistribution::Unigram { alpha } => {
                    let w: Vec<f64> = members.iter().map(|&i| (vocab.count(i) as f64).powf(alpha)).collect();
                    WeightedIndex::new(w).map(Some).map_err(|e| Error::Sampling(format!("unigram table: {e}")))
                }
            }
        };
        Ok(NegativeSampler {
            nouns: vocab.nouns().to_vec(),
            contexts: vocab.contexts().to_vec(),
            noun_weights: weights(vocab.nouns())?,
            context_weights: weights(vocab.contexts())?,
            slots: vocab.context_slots().to_vec(),
        })
    }

    /// One predicate from `kind`'s partition other than `exclude`.
    pub fn sample<R: Rng + ?Sized>(&self, kind: PredKind, exclude: usize, rng: &mut R) -> Result<usize> {
        let (members, weights) = match kind {
            PredKind::Noun => (&self.nouns, &self.noun_weights),
            PredKind::Context => (&self.contexts, &self.context_weights),
        };
        let usable = members.len() - usize::from(members.contains(&exclude));
        if members.len() <= 1 || usable == 0 {
            return Err(Error::Sampling(format!(
                "{kind:?} partition has {} member(s); nothing to sample",
                members.len()
            )));
        }
        loop {
            let k = match weights {
                Some(w) => w.sample(rng),
                None => rng.gen_range(0..members.len()),
            };
            if members[k] != exclude {
                return Ok(members[k]);
            }
        }
    }

    /// One observed `(context predicate, role)` slot other than `exclude`.
    pub fn sample_slot<R: Rng + ?Sized>(&self, exclude: (usize, u8), rng: &mut R) -> Result<(usize, u8)> {
        if self.slots.len() <= 1 {
            return Err(Error::Sampling(format!("only {} context slot(s) observed", self.slots.len())));
        }
        loop {
            let s = self.slots[rng.gen_range(0..self.slots.len())];
            if s != exclude {
                return Ok(s);
            }
        }
    }
}

/// `k` negatives from one partition, never equal to `exclude`.
pub fn negative_sample<R: Rng + ?Sized>(
    vocab: &Vocab,
    exclude: usize,
    kind: PredKind,
    distribution: NegativeDistribution,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let sampler = NegativeSampler::new(vocab, distribution)?;
    (0..k).map(|_| sampler.sample(kind, exclude, rng)).collect()
}
