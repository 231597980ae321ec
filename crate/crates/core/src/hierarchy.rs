//! Taxonomic hierarchies of nouns with attached contexts.
//!
//! A [`Taxonomy`] is a DAG whose edges point from a child noun to a direct
//! hypernym. Each node owns a set of contexts, i.e. `(role, predicate)` slots
//! that apply to the node's extension and to those of its hyponyms.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_string, Error, Result};
use crate::rng;

pub const MAX_ROLE: u8 = 4;

/// A context `←ARG[role]- predicate`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContextSlot {
    pub role: u8,
    #[serde(rename = "pred")]
    pub predicate: String,
}

impl ContextSlot {
    pub fn new(role: u8, predicate: impl Into<String>) -> Self {
        ContextSlot { role, predicate: predicate.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounNode {
    pub id: String,
    pub contexts: Vec<ContextSlot>,
}

impl NounNode {
    pub fn new(id: impl Into<String>, contexts: Vec<ContextSlot>) -> Self {
        NounNode { id: id.into(), contexts }
    }
}

/// Reasons a node/edge list does not form a valid taxonomy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Defect {
    DuplicateNoun(String),
    UnknownNode(String),
    SelfLoop(String),
    Cycle(String),
    BadRole(String, u8),
    EmptyPredicate(String),
    NounAsContext(String),
}

impl Defect {
    fn message(&self) -> String {
        match self {
            Defect::DuplicateNoun(id) => format!("duplicate noun `{id}`"),
            Defect::UnknownNode(id) => format!("edge refers to unknown node `{id}`"),
            Defect::SelfLoop(id) => format!("self-loop on `{id}`"),
            Defect::Cycle(id) => format!("cycle through `{id}`"),
            Defect::BadRole(id, role) => format!("node `{id}` has unknown role {role}"),
            Defect::EmptyPredicate(id) => format!("node `{id}` has an empty context predicate"),
            Defect::NounAsContext(p) => format!("`{p}` is used both as a noun and as a context predicate"),
        }
    }
}

/// A DAG of noun predicates. Immutable once built.
#[derive(Clone, Debug)]
pub struct Taxonomy {
    nodes: Vec<NounNode>,
    edges: Vec<(usize, usize)>,
    seed: Option<u64>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    ancestors: Vec<FixedBitSet>,
    topo: Vec<usize>,
}

impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges && self.seed == other.seed
    }
}

impl Taxonomy {
    /// Build from nodes and `(child, parent)` id pairs.
    pub fn new(nodes: Vec<NounNode>, edges: Vec<(String, String)>, seed: Option<u64>) -> Result<Self> {
        Self::build(nodes, edges, seed).map_err(|d| Error::InvalidArgument(d.message()))
    }

    pub(crate) fn build(
        nodes: Vec<NounNode>,
        edges: Vec<(String, String)>,
        seed: Option<u64>,
    ) -> std::result::Result<Self, Defect> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(Defect::DuplicateNoun(n.id.clone()));
            }
        }
        for n in &nodes {
            for c in &n.contexts {
                if c.role == 0 || c.role > MAX_ROLE {
                    return Err(Defect::BadRole(n.id.clone(), c.role));
                }
                if c.predicate.is_empty() {
                    return Err(Defect::EmptyPredicate(n.id.clone()));
                }
                if index.contains_key(&c.predicate) {
                    return Err(Defect::NounAsContext(c.predicate.clone()));
                }
            }
        }
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (c, p) in &edges {
            let ci = *index.get(c).ok_or_else(|| Defect::UnknownNode(c.clone()))?;
            let pi = *index.get(p).ok_or_else(|| Defect::UnknownNode(p.clone()))?;
            if ci == pi {
                return Err(Defect::SelfLoop(c.clone()));
            }
            idx_edges.push((ci, pi));
        }
        idx_edges.sort_unstable();
        idx_edges.dedup();

        let n = nodes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(c, p) in &idx_edges {
            parents[c].push(p);
            children[p].push(c);
        }

        // Kahn's algorithm, roots first.
        let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            topo.push(v);
            for &c in &children[v] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if topo.len() != n {
            let stuck = (0..n).find(|&i| pending[i] > 0).expect("cycle member");
            return Err(Defect::Cycle(nodes[stuck].id.clone()));
        }

        let mut ancestors = vec![FixedBitSet::with_capacity(n); n];
        for &v in &topo {
            let mut acc = FixedBitSet::with_capacity(n);
            for &p in &parents[v] {
                acc.insert(p);
                acc.union_with(&ancestors[p]);
            }
            ancestors[v] = acc;
        }

        Ok(Taxonomy { nodes, edges: idx_edges, seed, index, parents, children, ancestors, topo })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NounNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NounNode {
        &self.nodes[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Direct `(child, parent)` edges as node indices, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_ids(&self) -> Vec<(String, String)> {
        self.edges.iter().map(|&(c, p)| (self.nodes[c].id.clone(), self.nodes[p].id.clone())).collect()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Strict ancestors (all hypernyms) of node `i`.
    pub fn ancestors(&self, i: usize) -> &FixedBitSet {
        &self.ancestors[i]
    }

    pub fn is_ancestor(&self, anc: usize, of: usize) -> bool {
        self.ancestors[of].contains(anc)
    }

    /// Strict descendants (all hyponyms) of node `i`.
    pub fn descendants(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.ancestors[x].contains(i)).collect()
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        a == b || self.is_ancestor(a, b) || self.is_ancestor(b, a)
    }

    /// Nodes in topological order, hypernyms before hyponyms.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Level of each node: 1 for roots, otherwise 1 + the longest path to a root.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = vec![1usize; self.len()];
        for &v in &self.topo {
            for &p in &self.parents[v] {
                level[v] = level[v].max(level[p] + 1);
            }
        }
        level
    }

    pub fn closure_size(&self) -> usize {
        self.ancestors.iter().map(|a| a.count_ones(..)).sum()
    }

    pub(crate) fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Copy with node `i`'s own contexts replaced.
    pub fn with_contexts(&self, i: usize, contexts: Vec<ContextSlot>) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        nodes[i].contexts = contexts;
        Taxonomy::new(nodes, self.edge_ids(), self.seed)
    }

    pub fn with_edge(&self, child: usize, parent: usize) -> Result<Self> {
        let mut edges = self.edge_ids();
        edges.push((self.nodes[child].id.clone(), self.nodes[parent].id.clone()));
        Taxonomy::new(self.nodes.clone(), edges, self.seed)
    }

    pub fn without_edge(&self, child: usize, parent: usize) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .filter(|&&e| e != (child, parent))
            .map(|&(c, p)| (self.nodes[c].id.clone(), self.nodes[p].id.clone()))
            .collect();
        Taxonomy::new(self.nodes.clone(), edges, self.seed)
    }

    pub fn to_json(&self) -> String {
        let file = HierarchyFile {
            nodes: self.nodes.clone(),
            edges: self.edge_ids().into_iter().map(|(c, p)| [c, p]).collect(),
            seed: self.seed,
        };
        let mut s = serde_json::to_string_pretty(&file).expect("taxonomy serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let file: HierarchyFile =
            serde_json::from_str(text).map_err(|e| Error::parse_at(origin, e.line(), e.to_string()))?;
        if file.nodes.is_empty() {
            return Err(Error::parse_at(origin, locate(text, "\"nodes\"", 0), "empty node list"));
        }
        let edges = file.edges.into_iter().map(|[c, p]| (c, p)).collect();
        Taxonomy::build(file.nodes, edges, file.seed).map_err(|d| {
            let line = match &d {
                Defect::DuplicateNoun(id) => locate(text, &format!("\"{id}\""), 1),
                Defect::UnknownNode(id) | Defect::SelfLoop(id) | Defect::Cycle(id) => locate_edge(text, id),
                Defect::BadRole(_, role) => {
                    locate(text, &format!("\"role\": {role}"), 0).max(locate(text, &format!("\"role\":{role}"), 0))
                }
                Defect::EmptyPredicate(_) => locate(text, "\"\"", 0),
                Defect::NounAsContext(p) => locate(text, &format!("\"{p}\""), 0),
            };
            Error::parse_at(origin, line.max(1), d.message())
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HierarchyFile {
    nodes: Vec<NounNode>,
    edges: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

/// 1-based line of the `nth` occurrence of `needle` (or the first), 0 when absent.
fn locate(text: &str, needle: &str, nth: usize) -> usize {
    text.match_indices(needle)
        .nth(nth)
        .or_else(|| text.match_indices(needle).next())
        .map(|(pos, _)| text[..pos].matches('\n').count() + 1)
        .unwrap_or(0)
}

/// Line of the first edge mentioning `id`, falling back to any mention.
fn locate_edge(text: &str, id: &str) -> usize {
    let quoted = format!("\"{id}\"");
    let edges_at = text.find("\"edges\"").unwrap_or(0);
    match text[edges_at..].find(&quoted) {
        Some(pos) => text[..edges_at + pos].matches('\n').count() + 1,
        None => locate(text, &quoted, 0).max(1),
    }
}

pub fn import_taxonomy(path: &Path) -> Result<Taxonomy> {
    let text = read_to_string(path)?;
    Taxonomy::from_json(&text, &path.display().to_string())
}

pub fn export_taxonomy(t: &Taxonomy, path: &Path) -> Result<()> {
    write_string(path, &t.to_json())
}

fn slot(i: usize) -> Vec<ContextSlot> {
    vec![ContextSlot::new(1, format!("c{i}"))]
}

/// Four disjoint chains of three nouns; node `r_i` owns context `c_i`.
pub fn gen_chains() -> Taxonomy {
    let nodes = (1..=12).map(|i| NounNode::new(format!("r{i}"), slot(i))).collect();
    let mut edges = Vec::new();
    for chain in 0..4 {
        let base = 3 * chain + 1;
        edges.push((format!("r{}", base + 1), format!("r{base}")));
        edges.push((format!("r{}", base + 2), format!("r{}", base + 1)));
    }
    Taxonomy::new(nodes, edges, None).expect("chains are a valid taxonomy")
}

/// Tree where a node on level `h` has `h + 1` children. Nodes are numbered
/// breadth first from the root `r1`.
pub fn gen_tree(height: usize) -> Result<Taxonomy> {
    if height == 0 {
        return Err(Error::InvalidArgument("tree height must be at least 1".into()));
    }
    let mut nodes = vec![NounNode::new("r1", slot(1))];
    let mut edges = Vec::new();
    let mut frontier = vec![1usize];
    for level in 1..height {
        let mut next = Vec::new();
        for &parent in &frontier {
            for _ in 0..=level {
                let id = nodes.len() + 1;
                nodes.push(NounNode::new(format!("r{id}"), slot(id)));
                edges.push((format!("r{id}"), format!("r{parent}")));
                next.push(id);
            }
        }
        frontier = next;
    }
    Taxonomy::new(nodes, edges, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Overlap,
    Dag,
    DagOverlap,
}

/// Derive an overlap and/or DAG variant of `base`.
///
/// Overlap picks `n_pairs` node-disjoint pairs of incomparable internal nodes
/// and makes one node of each pair adopt the other's context set. DAG picks
/// `n_pairs` `(upper, lower)` pairs on different levels, each with a distinct
/// lower node, and adds `upper` as an extra direct parent of `lower`.
pub fn derive_variant(base: &Taxonomy, variant: Variant, n_pairs: usize, seed: u64) -> Result<Taxonomy> {
    let mut t = base.clone();
    if matches!(variant, Variant::Overlap | Variant::DagOverlap) {
        t = add_overlaps(&t, n_pairs, &mut rng::stream(seed, "hierarchy/overlap"))?;
    }
    if matches!(variant, Variant::Dag | Variant::DagOverlap) {
        t = add_dag_edges(&t, n_pairs, &mut rng::stream(seed, "hierarchy/dag"))?;
    }
    Ok(t.with_seed(Some(seed)))
}

fn add_overlaps<R: Rng>(t: &Taxonomy, n_pairs: usize, rng: &mut R) -> Result<Taxonomy> {
    if n_pairs == 0 {
        return Ok(t.clone());
    }
    let internal: Vec<usize> = (0..t.len()).filter(|&i| !t.children(i).is_empty()).collect();
    let mut candidates = Vec::new();
    for (k, &a) in internal.iter().enumerate() {
        for &b in &internal[k + 1..] {
            if !t.comparable(a, b) {
                candidates.push((a, b));
            }
        }
    }
    candidates.shuffle(rng);
    let mut used = HashSet::new();
    let mut chosen = Vec::new();
    for (a, b) in candidates {
        if chosen.len() == n_pairs {
            break;
        }
        if used.contains(&a) || used.contains(&b) {
            continue;
        }
        used.insert(a);
        used.insert(b);
        chosen.push(if rng.gen_bool(0.5) { (a, b) } else { (b, a) });
    }
    if chosen.len() < n_pairs {
        return Err(Error::Generation(format!(
            "found only {} node-disjoint incomparable internal pairs, {n_pairs} requested",
            chosen.len()
        )));
    }
    let mut nodes = t.nodes().to_vec();
    for (donor, adopter) in chosen {
        nodes[adopter].contexts = t.node(donor).contexts.clone();
    }
    Taxonomy::new(nodes, t.edge_ids(), t.seed())
}

fn add_dag_edges<R: Rng>(t: &Taxonomy, n_pairs: usize, rng: &mut R) -> Result<Taxonomy> {
    if n_pairs == 0 {
        return Ok(t.clone());
    }
    let level = t.levels();
    let mut candidates = Vec::new();
    for upper in 0..t.len() {
        for lower in 0..t.len() {
            if level[upper] < level[lower] && !t.comparable(upper, lower) {
                candidates.push((upper, lower));
            }
        }
    }
    candidates.shuffle(rng);
    let mut current = t.clone();
    let mut lowers = HashSet::new();
    let mut added = 0;
    for (upper, lower) in candidates {
        if added == n_pairs {
            break;
        }
        if lowers.contains(&lower) || current.comparable(upper, lower) {
            continue;
        }
        current = current.with_edge(lower, upper)?;
        lowers.insert(lower);
        added += 1;
    }
    if added < n_pairs {
        return Err(Error::Generation(format!(
            "found only {added} valid cross-level parent candidates, {n_pairs} requested"
        )));
    }
    Ok(current)
}

/// A hypernymy pair `(hypo, hyper)` with an optional dataset subcategory.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WordPair {
    pub hypo: String,
    pub hyper: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<String>,
}

impl WordPair {
    pub fn new(hypo: impl Into<String>, hyper: impl Into<String>) -> Self {
        WordPair { hypo: hypo.into(), hyper: hyper.into(), subcategory: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub positives: Vec<WordPair>,
    pub negatives: Vec<WordPair>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty()
    }

    /// All pairs with their gold label.
    pub fn labeled(&self) -> impl Iterator<Item = (&WordPair, bool)> {
        self.positives.iter().map(|p| (p, true)).chain(self.negatives.iter().map(|p| (p, false)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NegativeSampling {
    All,
    Sample { n: usize, seed: u64 },
}

/// Positives are the strict transitive closure; negatives are the remaining
/// ordered pairs of distinct nouns, or a uniform sample of them.
pub fn closure_pairs(t: &Taxonomy, negatives: NegativeSampling) -> Result<PairSet> {
    let n = t.len();
    let id = |i: usize| t.node(i).id.clone();
    let mut positives = Vec::with_capacity(t.closure_size());
    for x in 0..n {
        for a in t.ancestors(x).ones() {
            positives.push(WordPair::new(id(x), id(a)));
        }
    }
    let total_negatives = n * n.saturating_sub(1) - positives.len();
    let is_negative = |a: usize, b: usize| a != b && !t.is_ancestor(b, a);
    let negative_idx: Vec<(usize, usize)> = match negatives {
        NegativeSampling::All => {
            let mut v = Vec::with_capacity(total_negatives);
            for a in 0..n {
                for b in 0..n {
                    if is_negative(a, b) {
                        v.push((a, b));
                    }
                }
            }
            v
        }
        NegativeSampling::Sample { n: want, seed } => {
            if want > total_negatives {
                return Err(Error::InvalidArgument(format!(
                    "requested {want} negatives but only {total_negatives} exist"
                )));
            }
            let mut rng = rng::stream(seed, "hierarchy/negatives");
            if want * 2 <= total_negatives {
                // Rejection sampling keeps memory proportional to the sample.
                let mut seen = HashSet::with_capacity(want);
                let mut v = Vec::with_capacity(want);
                while v.len() < want {
                    let a = rng.gen_range(0..n);
                    let b = rng.gen_range(0..n);
                    if is_negative(a, b) && seen.insert((a, b)) {
                        v.push((a, b));
                    }
                }
                v.sort_unstable();
                v
            } else {
                let mut all = Vec::with_capacity(total_negatives);
                for a in 0..n {
                    for b in 0..n {
                        if is_negative(a, b) {
                            all.push((a, b));
                        }
                    }
                }
                let mut picked: Vec<(usize, usize)> =
                    rand::seq::index::sample(&mut rng, all.len(), want).into_iter().map(|k| all[k]).collect();
                picked.sort_unstable();
                picked
            }
        }
    };
    Ok(PairSet { positives, negatives: negative_idx.into_iter().map(|(a, b)| WordPair::new(id(a), id(b))).collect() })
}

/// The four-noun example hierarchy: animal > mammal > {dog, bat}.
pub fn example_animals() -> Taxonomy {
    let nodes = vec![
        NounNode::new("animal", vec![ContextSlot::new(1, "grow")]),
        NounNode::new("mammal", vec![ContextSlot::new(1, "furry")]),
        NounNode::new("dog", vec![ContextSlot::new(1, "bark")]),
        NounNode::new("bat", vec![ContextSlot::new(1, "fly")]),
    ];
    let edges = vec![
        ("mammal".to_string(), "animal".to_string()),
        ("dog".to_string(), "mammal".to_string()),
        ("bat".to_string(), "mammal".to_string()),
    ];
    Taxonomy::new(nodes, edges, None).expect("example hierarchy is valid")
}
