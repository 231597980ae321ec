//! Corpora of quantified `[quantifier] [noun] [context]` statements generated
//! from a taxonomy.
//!
//! * DIH corpora: `a n c` for every context `c` owned by `n` or a hyponym of `n`.
//! * rDIH corpora: `every n c` for every context owned by `n` or a hypernym of `n`.
//! * Mixed corpora: both of the above.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hierarchy::{ContextSlot, Taxonomy};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantifier {
    Existential,
    Universal,
}

impl Quantifier {
    pub fn token(self) -> &'static str {
        match self {
            Quantifier::Existential => "a",
            Quantifier::Universal => "every",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "a" => Some(Quantifier::Existential),
            "every" => Some(Quantifier::Universal),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Dih,
    Rdih,
    Mixed,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::Dih => "dih",
            Hypothesis::Rdih => "rdih",
            Hypothesis::Mixed => "mixed",
        })
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dih" => Ok(Hypothesis::Dih),
            "rdih" => Ok(Hypothesis::Rdih),
            "mixed" => Ok(Hypothesis::Mixed),
            other => Err(Error::InvalidArgument(format!("unknown hypothesis `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Statement {
    pub quantifier: Quantifier,
    pub noun: String,
    pub slot: ContextSlot,
}

impl Statement {
    pub fn new(quantifier: Quantifier, noun: impl Into<String>, slot: ContextSlot) -> Self {
        Statement { quantifier, noun: noun.into(), slot }
    }

    fn sort_key(&self) -> (&str, u8, &str) {
        (&self.noun, self.slot.role, &self.slot.predicate)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub taxonomy: String,
    pub hypothesis: Option<Hypothesis>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    pub statements: Vec<Statement>,
    pub nouns: BTreeSet<String>,
    pub context_predicates: BTreeSet<String>,
    pub provenance: Provenance,
}

impl Corpus {
    fn from_statements(statements: Vec<Statement>, provenance: Provenance) -> Self {
        let nouns = statements.iter().map(|s| s.noun.clone()).collect();
        let context_predicates = statements.iter().map(|s| s.slot.predicate.clone()).collect();
        Corpus { statements, nouns, context_predicates, provenance }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Context slots a noun appears with under a quantifier.
    pub fn contexts_of(&self, noun: &str, quantifier: Quantifier) -> BTreeSet<ContextSlot> {
        self.statements
            .iter()
            .filter(|s| s.noun == noun && s.quantifier == quantifier)
            .map(|s| s.slot.clone())
            .collect()
    }

    /// `quantifier<TAB>noun<TAB>role<TAB>context_pred`, one statement per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for s in &self.statements {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", s.quantifier.token(), s.noun, s.slot.role, s.slot.predicate));
        }
        out
    }

    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut statements = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |m: String| Error::parse_at(origin, lineno + 1, m);
            if cols.len() != 4 {
                return Err(bad(format!("expected 4 tab-separated columns, found {}", cols.len())));
            }
            let quantifier =
                Quantifier::from_token(cols[0]).ok_or_else(|| bad(format!("unknown quantifier `{}`", cols[0])))?;
            let role: u8 = cols[2].parse().map_err(|_| bad(format!("bad role `{}`", cols[2])))?;
            if !(1..=crate::hierarchy::MAX_ROLE).contains(&role) {
                return Err(bad(format!("unknown role {role}")));
            }
            if cols[1].is_empty() || cols[3].is_empty() {
                return Err(bad("empty predicate".into()));
            }
            statements.push(Statement::new(quantifier, cols[1], ContextSlot::new(role, cols[3])));
        }
        if statements.is_empty() {
            return Err(Error::parse_at(origin, 1, "empty corpus"));
        }
        let provenance = Provenance { taxonomy: String::new(), hypothesis: None, seed: None };
        Ok(Corpus::from_statements(statements, provenance))
    }

    /// Copy with statements shuffled under `seed`.
    pub fn shuffled(&self, seed: u64) -> Corpus {
        let mut c = self.clone();
        c.statements.shuffle(&mut rng::stream(seed, "corpus/shuffle"));
        c
    }
}

/// Short content hash identifying a taxonomy.
pub fn taxonomy_id(t: &Taxonomy) -> String {
    let digest = Sha256::digest(t.to_json().as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn union_of(t: &Taxonomy, nodes: impl Iterator<Item = usize>) -> BTreeSet<ContextSlot> {
    nodes.flat_map(|i| t.node(i).contexts.iter().cloned()).collect()
}

fn generate(t: &Taxonomy, quantifier: Quantifier) -> Vec<Statement> {
    let mut out = Vec::new();
    for n in 0..t.len() {
        let related: Vec<usize> = match quantifier {
            Quantifier::Existential => t.descendants(n),
            Quantifier::Universal => t.ancestors(n).ones().collect(),
        };
        let slots = union_of(t, std::iter::once(n).chain(related));
        let noun = &t.node(n).id;
        out.extend(slots.into_iter().map(|slot| Statement::new(quantifier, noun.clone(), slot)));
    }
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out
}

fn provenance(t: &Taxonomy, hypothesis: Hypothesis) -> Provenance {
    Provenance { taxonomy: taxonomy_id(t), hypothesis: Some(hypothesis), seed: t.seed() }
}

/// Existential statements following the distributional inclusion hypothesis.
pub fn gen_dih(t: &Taxonomy) -> Corpus {
    Corpus::from_statements(generate(t, Quantifier::Existential), provenance(t, Hypothesis::Dih))
}

/// Universal statements following the reversed inclusion hypothesis.
pub fn gen_rdih(t: &Taxonomy) -> Corpus {
    Corpus::from_statements(generate(t, Quantifier::Universal), provenance(t, Hypothesis::Rdih))
}

pub fn gen_mixed(t: &Taxonomy) -> Corpus {
    let mut statements = generate(t, Quantifier::Existential);
    statements.extend(generate(t, Quantifier::Universal));
    Corpus::from_statements(statements, provenance(t, Hypothesis::Mixed))
}

pub fn generate_corpus(t: &Taxonomy, hypothesis: Hypothesis) -> Corpus {
    match hypothesis {
        Hypothesis::Dih => gen_dih(t),
        Hypothesis::Rdih => gen_rdih(t),
        Hypothesis::Mixed => gen_mixed(t),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upward,
    Downward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Upward => "upward",
            Direction::Downward => "downward",
        })
    }
}

/// A noun whose hypernymy (or hyponymy) link is hidden from the corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub noun: String,
    /// Force the sibling whose contexts are copied; chosen at random when absent.
    pub sibling: Option<String>,
}

impl TargetSpec {
    pub fn new(noun: impl Into<String>) -> Self {
        TargetSpec { noun: noun.into(), sibling: None }
    }

    pub fn with_sibling(noun: impl Into<String>, sibling: impl Into<String>) -> Self {
        TargetSpec { noun: noun.into(), sibling: Some(sibling.into()) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub target: String,
    pub sibling: String,
    /// Common parent (upward) or common daughter (downward) whose link was removed.
    pub pivot: String,
    /// Hypernyms (upward) or hyponyms (downward) no longer derivable from the corpus.
    pub candidates: Vec<String>,
    /// Nouns that are neither the target nor related to it in the probed direction.
    pub distractors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizationManifest {
    pub direction: Direction,
    pub hypothesis: Hypothesis,
    pub targets: Vec<TargetRecord>,
}

/// Nouns that may serve as the sibling of `x`, paired with the shared pivot.
pub fn sibling_options(t: &Taxonomy, x: usize, direction: Direction) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    match direction {
        Direction::Upward => {
            for &p in t.parents(x) {
                for &s in t.children(p) {
                    if !t.comparable(s, x) {
                        out.push((s, p));
                    }
                }
            }
        }
        Direction::Downward => {
            for &ch in t.children(x) {
                for &s in t.parents(ch) {
                    if !t.comparable(s, x) {
                        out.push((s, ch));
                    }
                }
            }
        }
    }
    out
}

/// Ablated taxonomy plus the chosen `(target, sibling, pivot)` node triples.
pub type Ablation = (Taxonomy, Vec<(usize, usize, usize)>);

/// Ablated taxonomy for distributional generalization: each target takes a
/// sibling's context set and loses its link to the shared parent (upward) or
/// shared daughter (downward).
pub fn ablate(
    t: &Taxonomy,
    targets: &[TargetSpec],
    direction: Direction,
    seed: u64,
) -> Result<Ablation> {
    let mut rng = rng::stream(seed, "corpus/generalization");
    let mut ablated = t.clone();
    let mut chosen = Vec::with_capacity(targets.len());
    for spec in targets {
        let x =
            t.index_of(&spec.noun).ok_or_else(|| Error::InvalidArgument(format!("unknown target `{}`", spec.noun)))?;
        let mut options = sibling_options(t, x, direction);
        if let Some(name) = &spec.sibling {
            let s = t.index_of(name).ok_or_else(|| Error::InvalidArgument(format!("unknown sibling `{name}`")))?;
            options.retain(|&(cand, _)| cand == s);
        }
        let &(s, pivot) = options
            .choose(&mut rng)
            .ok_or_else(|| Error::InvalidArgument(format!("target `{}` has no sibling", spec.noun)))?;
        ablated = ablated.with_contexts(x, t.node(s).contexts.clone())?;
        ablated = match direction {
            Direction::Upward => ablated.without_edge(x, pivot)?,
            Direction::Downward => ablated.without_edge(pivot, x)?,
        };
        chosen.push((x, s, pivot));
    }
    Ok((ablated, chosen))
}

pub fn gen_generalization(
    t: &Taxonomy,
    targets: &[TargetSpec],
    direction: Direction,
    hypothesis: Hypothesis,
    seed: u64,
) -> Result<(Corpus, GeneralizationManifest)> {
    let (ablated, chosen) = ablate(t, targets, direction, seed)?;
    let id = |i: usize| t.node(i).id.clone();
    let records = chosen
        .into_iter()
        .map(|(x, s, pivot)| {
            let (before, after): (Vec<usize>, Vec<usize>) = match direction {
                Direction::Upward => (t.ancestors(x).ones().collect(), ablated.ancestors(x).ones().collect()),
                Direction::Downward => (t.descendants(x), ablated.descendants(x)),
            };
            let candidates = before.iter().filter(|i| !after.contains(i)).map(|&i| id(i)).collect();
            let distractors = (0..t.len()).filter(|&i| i != x && !before.contains(&i)).map(id).collect();
            TargetRecord { target: id(x), sibling: id(s), pivot: id(pivot), candidates, distractors }
        })
        .collect();
    let mut corpus = generate_corpus(&ablated, hypothesis);
    corpus.provenance = Provenance { taxonomy: taxonomy_id(t), hypothesis: Some(hypothesis), seed: Some(seed) };
    Ok((corpus, GeneralizationManifest { direction, hypothesis, targets: records }))
}
