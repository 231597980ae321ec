//! Count-based co-occurrence space and distributional hypernymy measures.
//!
//! Every edge `head -ARG[a]→ dep` is counted from both ends: the dependent
//! row gets column `(a, head)` and the head row gets the inverse column
//! `(−a, dep)`. Rows are predicates, so nouns and context predicates share one
//! symmetric adjacency space.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpusgen::Corpus;
use crate::error::{Error, Result};
use crate::graphdata::{from_corpus, SemGraph, Vocab};

/// Column key: signed role (negative for the inverse direction) and predicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextKey {
    pub role: i8,
    pub pred: String,
}

type SparseRow = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
pub struct CountSpace {
    rows: Vec<String>,
    row_index: HashMap<String, usize>,
    cols: Vec<ContextKey>,
    col_index: HashMap<ContextKey, usize>,
    counts: Vec<SparseRow>,
    ppmi: Vec<SparseRow>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    total: f64,
}

fn pmi(count: f64, row: f64, col: f64, total: f64) -> f64 {
    (count * total / (row * col)).ln()
}

pub fn build_space(vocab: &Vocab, graphs: &[SemGraph]) -> CountSpace {
    let mut cells: Vec<HashMap<(i8, usize), f64>> = vec![HashMap::new(); vocab.len()];
    for g in graphs {
        for e in &g.edges {
            let head = g.nodes[e.head].pred;
            let dep = g.nodes[e.dep].pred;
            let role = e.role as i8;
            *cells[dep].entry((role, head)).or_insert(0.0) += 1.0;
            *cells[head].entry((-role, dep)).or_insert(0.0) += 1.0;
        }
    }
    let mut keys: Vec<(i8, usize)> = cells.iter().flat_map(|m| m.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    let key_col: HashMap<(i8, usize), usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let cols = keys.iter().map(|&(role, p)| ContextKey { role, pred: vocab.name(p).to_string() }).collect();
    let counts = cells.into_iter().map(|m| m.into_iter().map(|(k, v)| (key_col[&k], v)).collect()).collect();
    let rows = (0..vocab.len()).map(|i| vocab.name(i).to_string()).collect();
    CountSpace::assemble(rows, cols, counts)
}

pub fn build_space_from_corpus(corpus: &Corpus) -> Result<CountSpace> {
    let (vocab, graphs) = from_corpus(corpus)?;
    Ok(build_space(&vocab, &graphs))
}

impl CountSpace {
    /// Space over an explicit dense count matrix.
    pub fn from_matrix(rows: Vec<String>, cols: Vec<ContextKey>, counts: &[Vec<f64>]) -> Result<Self> {
        if counts.len() != rows.len() || counts.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::InvalidArgument("count matrix shape does not match its labels".into()));
        }
        if counts.iter().flatten().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("counts must be finite and non-negative".into()));
        }
        let sparse = counts
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(c, &v)| (c, v)).collect())
            .collect();
        Ok(Self::assemble(rows, cols, sparse))
    }

    fn assemble(rows: Vec<String>, cols: Vec<ContextKey>, mut counts: Vec<SparseRow>) -> Self {
        for row in &mut counts {
            row.sort_by_key(|&(c, _)| c);
        }
        let row_sums: Vec<f64> = counts.iter().map(|r| r.iter().map(|&(_, v)| v).sum()).collect();
        let mut col_sums = vec![0.0; cols.len()];
        for row in &counts {
            for &(c, v) in row {
                col_sums[c] += v;
            }
        }
        let total: f64 = row_sums.iter().sum();
        let ppmi = counts
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .map(|&(c, v)| (c, pmi(v, row_sums[r], col_sums[c], total)))
                    .filter(|&(_, v)| v > 0.0)
                    .collect()
            })
            .collect();
        CountSpace {
            row_index: rows.iter().enumerate().map(|(i, r)| (r.clone(), i)).collect(),
            rows,
            col_index: cols.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect(),
            cols,
            counts,
            ppmi,
            row_sums,
            col_sums,
            total,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn row_name(&self, r: usize) -> &str {
        &self.rows[r]
    }

    pub fn row(&self, pred: &str) -> Result<usize> {
        self.row_index.get(pred).copied().ok_or_else(|| Error::Lookup(pred.to_string()))
    }

    pub fn col(&self, role: i8, pred: &str) -> Option<usize> {
        self.col_index.get(&ContextKey { role, pred: pred.to_string() }).copied()
    }

    pub fn count(&self, row: usize, col: usize) -> f64 {
        lookup(&self.counts[row], col)
    }

    pub fn ppmi(&self, row: usize, col: usize) -> f64 {
        lookup(&self.ppmi[row], col)
    }

    pub fn ppmi_row(&self, row: usize) -> &[(usize, f64)] {
        &self.ppmi[row]
    }

    /// Sparse triplets `row_pred,role,col_pred,count,ppmi`, rows then columns in order.
    pub fn to_triplet_csv(&self) -> String {
        let mut out = String::from("row_pred,role,col_pred,count,ppmi\n");
        for (r, row) in self.counts.iter().enumerate() {
            for &(c, v) in row {
                let key = &self.cols[c];
                out.push_str(&format!("{},{},{},{},{}\n", self.rows[r], key.role, key.pred, v, self.ppmi(r, c)));
            }
        }
        out
    }
}

fn lookup(row: &[(usize, f64)], col: usize) -> f64 {
    row.binary_search_by_key(&col, |&(c, _)| c).map(|i| row[i].1).unwrap_or(0.0)
}

/// Walk two sorted sparse rows together, calling `f(a_i, b_i)` on the union of supports.
fn merge(a: &[(usize, f64)], b: &[(usize, f64)], mut f: impl FnMut(f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |x| x.0);
        let cb = b.get(j).map_or(usize::MAX, |x| x.0);
        if ca == cb {
            f(a[i].1, b[j].1);
            i += 1;
            j += 1;
        } else if ca < cb {
            f(a[i].1, 0.0);
            i += 1;
        } else {
            f(0.0, b[j].1);
            j += 1;
        }
    }
}

fn weeds_prec_rows(u1: &[(usize, f64)], u2: &[(usize, f64)]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    merge(u1, u2, |a, b| {
        den += a;
        if b > 0.0 {
            num += a;
        }
    });
    (den > 0.0).then(|| num / den)
}

fn cl_rows(u1: &[(usize, f64)], u2: &[(usize, f64)]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    merge(u1, u2, |a, b| {
        num += a.min(b);
        den += a;
    });
    (den > 0.0).then(|| num / den)
}

fn cosine_rows(u1: &[(usize, f64)], u2: &[(usize, f64)]) -> Option<f64> {
    let (mut dot, mut n1, mut n2) = (0.0, 0.0, 0.0);
    merge(u1, u2, |a, b| {
        dot += a * b;
        n1 += a * a;
        n2 += b * b;
    });
    (n1 > 0.0 && n2 > 0.0).then(|| (dot / (n1.sqrt() * n2.sqrt())).min(1.0))
}

fn zero_row(space: &CountSpace, r: usize) -> Error {
    Error::UndefinedMeasure(format!("{} has an all-zero PPMI row", space.row_name(r)))
}

pub fn weeds_prec(space: &CountSpace, r1: usize, r2: usize) -> Result<f64> {
    weeds_prec_rows(&space.ppmi[r1], &space.ppmi[r2]).ok_or_else(|| zero_row(space, r1))
}

pub fn clarke_de(space: &CountSpace, r1: usize, r2: usize) -> Result<f64> {
    cl_rows(&space.ppmi[r1], &space.ppmi[r2]).ok_or_else(|| zero_row(space, r1))
}

pub fn inv_cl(space: &CountSpace, r1: usize, r2: usize) -> Result<f64> {
    let a = clarke_de(space, r1, r2)?;
    let b = clarke_de(space, r2, r1)?;
    Ok((a * (1.0 - b)).max(0.0).sqrt())
}

pub fn cosine(space: &CountSpace, r1: usize, r2: usize) -> Result<f64> {
    if space.ppmi[r1].is_empty() {
        return Err(zero_row(space, r1));
    }
    cosine_rows(&space.ppmi[r1], &space.ppmi[r2]).ok_or_else(|| zero_row(space, r2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlqsConfig {
    /// Number of top-LMI contexts per word.
    pub n: usize,
    /// Divide each column entropy by `ln` of its number of nonzero rows.
    pub normalize: bool,
}

impl Default for SlqsConfig {
    fn default() -> Self {
        SlqsConfig { n: 50, normalize: false }
    }
}

/// Column entropies and per-word medians, built once per space and configuration.
#[derive(Clone, Debug)]
pub struct SlqsTable {
    entropy: Vec<f64>,
    median: Vec<Option<f64>>,
}

impl SlqsTable {
    pub fn new(space: &CountSpace, cfg: SlqsConfig) -> Result<Self> {
        if cfg.n == 0 {
            return Err(Error::InvalidArgument("SLQS needs N >= 1".into()));
        }
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); space.cols.len()];
        for row in &space.counts {
            for &(c, v) in row {
                columns[c].push(v);
            }
        }
        let entropy = columns
            .iter()
            .zip(&space.col_sums)
            .map(|(col, &sum)| {
                let h: f64 = col
                    .iter()
                    .map(|&v| {
                        let p = v / sum;
                        -p * p.ln()
                    })
                    .sum();
                if cfg.normalize {
                    let k = col.len() as f64;
                    if k > 1.0 {
                        h / k.ln()
                    } else {
                        0.0
                    }
                } else {
                    h
                }
            })
            .collect::<Vec<f64>>();
        let median = (0..space.counts.len())
            .map(|r| {
                let top = top_lmi(space, r, cfg.n);
                if top.is_empty() {
                    return None;
                }
                let mut hs: Vec<f64> = top.iter().map(|&c| entropy[c]).collect();
                hs.sort_by(f64::total_cmp);
                let m = hs.len();
                Some(if m % 2 == 1 { hs[m / 2] } else { 0.5 * (hs[m / 2 - 1] + hs[m / 2]) })
            })
            .collect();
        Ok(SlqsTable { entropy, median })
    }

    pub fn entropy(&self, col: usize) -> f64 {
        self.entropy[col]
    }

    pub fn median(&self, r: usize) -> Option<f64> {
        self.median[r]
    }
}

/// Up to `n` columns with positive LMI for row `r`, strongest first, ties by column index.
pub fn top_lmi(space: &CountSpace, r: usize, n: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = space.counts[r]
        .iter()
        .map(|&(c, v)| (v * pmi(v, space.row_sums[r], space.col_sums[c], space.total), c))
        .filter(|&(lmi, _)| lmi > 0.0)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(n).map(|(_, c)| c).collect()
}

/// `1 − E_{r1}/E_{r2}`; positive when `r2` is the more general word.
pub fn slqs(space: &CountSpace, table: &SlqsTable, r1: usize, r2: usize) -> Result<f64> {
    let e1 = table.median(r1).ok_or_else(|| no_contexts(space, r1))?;
    let e2 = table.median(r2).ok_or_else(|| no_contexts(space, r2))?;
    if e2 == 0.0 {
        return Err(Error::UndefinedMeasure(format!("median context entropy of {} is zero", space.row_name(r2))));
    }
    Ok(1.0 - e1 / e2)
}

pub fn slqs_cos(space: &CountSpace, table: &SlqsTable, r1: usize, r2: usize) -> Result<f64> {
    Ok(slqs(space, table, r1, r2)? * cosine(space, r1, r2)?)
}

fn no_contexts(space: &CountSpace, r: usize) -> Error {
    Error::UndefinedMeasure(format!("{} has no positively associated context", space.row_name(r)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    WeedsPrec,
    InvCl,
    Slqs,
    SlqsCos,
    Cosine,
}

impl Measure {
    pub const ALL: [Measure; 5] =
        [Measure::WeedsPrec, Measure::InvCl, Measure::Slqs, Measure::SlqsCos, Measure::Cosine];

    pub fn name(self) -> &'static str {
        match self {
            Measure::WeedsPrec => "WeedsPrec",
            Measure::InvCl => "invCL",
            Measure::Slqs => "SLQS",
            Measure::SlqsCos => "SLQS-Cos",
            Measure::Cosine => "Cosine",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        Measure::ALL
            .into_iter()
            .find(|m| m.name().to_ascii_lowercase().replace('-', "") == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown measure {s:?}")))
    }
}
