//! Semantic functions, amortized posterior inference and hypernymy scores.
//!
//! All parameters live in one flat `Vec<f64>` addressed through [`Layout`], so
//! the trainer can run Adam and finite-difference checks over a single buffer.
//!
//! * unary truth `t(r, z) = S(v_r·z + b_r)`
//! * binary truth `t(r, a, z_h, z_d) = S(v1_{r,a}·z_h + v2_{r,a}·z_d + b_{r,a})`
//! * hypernymy score `s(h, H) = b_H − b_h − ‖v_H − v_h‖_p`, positive iff
//!   `t_H ≥ t_h` everywhere on the unit ball (p = 2) or unit cube (p = 1).

use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphdata::{SemGraph, Vocab};
use crate::rng;

pub const FORMAT_VERSION: u32 = 1;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln S(x)` without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn from_p(p: u8) -> Result<Self> {
        match p {
            1 => Ok(Norm::L1),
            2 => Ok(Norm::L2),
            other => Err(Error::InvalidArgument(format!("p must be 1 or 2, got {other}"))),
        }
    }

    pub fn p(self) -> u8 {
        match self {
            Norm::L1 => 1,
            Norm::L2 => 2,
        }
    }

    /// Norm of `a - b`.
    pub fn of_diff(self, a: &[f64], b: &[f64]) -> f64 {
        let it = a.iter().zip(b).map(|(x, y)| x - y);
        match self {
            Norm::L1 => it.map(f64::abs).sum(),
            Norm::L2 => it.map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Subgradient of `‖a − b‖` with respect to `a`, written into `out`.
    pub(crate) fn grad_of_diff(self, a: &[f64], b: &[f64], out: &mut [f64]) {
        match self {
            Norm::L1 => {
                for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                    *o = (x - y).signum() * f64::from(u8::from(x != y));
                }
            }
            Norm::L2 => {
                let n = self.of_diff(a, b);
                for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                    *o = if n > 0.0 { (x - y) / n } else { 0.0 };
                }
            }
        }
    }
}

/// Offsets of each parameter block inside the flat buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n_preds: usize,
    pub n_roles: usize,
    pub d: usize,
    unary_v: usize,
    unary_b: usize,
    bin_v1: usize,
    bin_v2: usize,
    bin_b: usize,
    e_self: usize,
    e_head: usize,
    e_dep: usize,
    e_top: usize,
    w_mu: usize,
    c_mu: usize,
    w_sigma: usize,
    c_sigma: usize,
    total: usize,
}

impl Layout {
    pub fn new(n_preds: usize, n_roles: usize, d: usize) -> Self {
        let mut at = 0;
        let mut take = |len: usize| {
            let start = at;
            at += len;
            start
        };
        let nr = n_preds * n_roles;
        let unary_v = take(n_preds * d);
        let unary_b = take(n_preds);
        let bin_v1 = take(nr * d);
        let bin_v2 = take(nr * d);
        let bin_b = take(nr);
        let e_self = take(n_preds * d);
        let e_head = take(nr * d);
        let e_dep = take(nr * d);
        let e_top = take(n_preds * d);
        let w_mu = take(d * d);
        let c_mu = take(d);
        let w_sigma = take(d);
        let c_sigma = take(1);
        Layout {
            n_preds,
            n_roles,
            d,
            unary_v,
            unary_b,
            bin_v1,
            bin_v2,
            bin_b,
            e_self,
            e_head,
            e_dep,
            e_top,
            w_mu,
            c_mu,
            w_sigma,
            c_sigma,
            total: at,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    fn vec(&self, base: usize, row: usize) -> Range<usize> {
        let s = base + row * self.d;
        s..s + self.d
    }

    pub fn unary_v(&self, r: usize) -> Range<usize> {
        self.vec(self.unary_v, r)
    }
    pub fn unary_b(&self, r: usize) -> usize {
        self.unary_b + r
    }
    pub fn bin_v1(&self, r: usize, ri: usize) -> Range<usize> {
        self.vec(self.bin_v1, r * self.n_roles + ri)
    }
    pub fn bin_v2(&self, r: usize, ri: usize) -> Range<usize> {
        self.vec(self.bin_v2, r * self.n_roles + ri)
    }
    pub fn bin_b(&self, r: usize, ri: usize) -> usize {
        self.bin_b + r * self.n_roles + ri
    }
    pub fn e_self(&self, r: usize) -> Range<usize> {
        self.vec(self.e_self, r)
    }
    pub fn e_head(&self, r: usize, ri: usize) -> Range<usize> {
        self.vec(self.e_head, r * self.n_roles + ri)
    }
    pub fn e_dep(&self, r: usize, ri: usize) -> Range<usize> {
        self.vec(self.e_dep, r * self.n_roles + ri)
    }
    pub fn e_top(&self, r: usize) -> Range<usize> {
        self.vec(self.e_top, r)
    }
    pub fn w_mu(&self) -> Range<usize> {
        self.w_mu..self.w_mu + self.d * self.d
    }
    pub fn c_mu(&self) -> Range<usize> {
        self.c_mu..self.c_mu + self.d
    }
    pub fn w_sigma(&self) -> Range<usize> {
        self.w_sigma..self.w_sigma + self.d
    }
    pub fn c_sigma(&self) -> usize {
        self.c_sigma
    }

    fn block(&self, start: usize, end: usize) -> Range<usize> {
        start..end
    }

    /// Ranges of the weight and embedding blocks (everything but biases and `c_σ`).
    fn weight_blocks(&self) -> Vec<Range<usize>> {
        vec![
            self.block(self.unary_v, self.unary_b),
            self.block(self.bin_v1, self.bin_b),
            self.block(self.e_self, self.c_mu),
            self.block(self.w_sigma, self.c_sigma),
        ]
    }
}

/// Spherical Gaussian `N(μ, σ² I)` over pixie space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGaussian {
    pub mean: Vec<f64>,
    pub variance: f64,
}

impl PosteriorGaussian {
    pub fn new(mean: Vec<f64>, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::InvalidArgument(format!("variance must be finite and non-negative, got {variance}")));
        }
        Ok(PosteriorGaussian { mean, variance })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ExpectationMethod {
    Probit,
    MonteCarlo { samples: usize, seed: u64 },
}

/// Probit approximation of `E[S(X)]`, `X ~ N(m, s2)`.
pub fn probit_sigmoid(m: f64, s2: f64) -> f64 {
    sigmoid(m / (1.0 + PI * s2 / 8.0).sqrt())
}

/// `ln S(sign · κ m)` with `κ = (1 + π s²/8)^{-1/2}`, and its partials in `m` and `s²`.
pub(crate) fn probit_log_sigmoid(sign: f64, m: f64, s2: f64) -> (f64, f64, f64) {
    let kappa = 1.0 / (1.0 + PI * s2 / 8.0).sqrt();
    let x = sign * kappa * m;
    let value = log_sigmoid(x);
    let dx = sigmoid(-x);
    let d_m = dx * sign * kappa;
    let d_s2 = dx * sign * m * (-PI / 16.0) * kappa.powi(3);
    (value, d_m, d_s2)
}

/// `E_{z~q}[S(w·z + b)]`.
pub fn expected_truth(w: &[f64], b: f64, q: &PosteriorGaussian, method: ExpectationMethod) -> Result<f64> {
    if w.len() != q.mean.len() {
        return Err(Error::InvalidArgument("weight and mean dimensions differ".into()));
    }
    match method {
        ExpectationMethod::Probit => Ok(probit_sigmoid(dot(w, &q.mean) + b, q.variance * sq_norm(w))),
        ExpectationMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("Monte-Carlo expectation needs at least one sample".into()));
            }
            let mut rng = rng::stream(seed, "fds/mc");
            let sd = q.variance.sqrt();
            let mut acc = 0.0;
            let mut z = vec![0.0; w.len()];
            for _ in 0..samples {
                for (zk, mk) in z.iter_mut().zip(&q.mean) {
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    *zk = mk + sd * eps;
                }
                acc += sigmoid(dot(w, &z) + b);
            }
            Ok(acc / samples as f64)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct EncoderConfig {
    /// Add the node's own predicate embedding to its pooled vector.
    pub self_embedding: bool,
}

/// Model parameters plus the vocabulary they are indexed by.
#[derive(Clone, Debug, PartialEq)]
pub struct FdsParams {
    pub vocab: Vocab,
    pub encoder: EncoderConfig,
    pub layout: Layout,
    pub data: Vec<f64>,
    pub seed: Option<u64>,
    pub hyperparams: serde_json::Value,
}

impl FdsParams {
    /// All-zero parameters.
    pub fn zeros(vocab: Vocab, d: usize, encoder: EncoderConfig) -> Self {
        let layout = Layout::new(vocab.len(), vocab.roles().len(), d);
        let data = vec![0.0; layout.len()];
        FdsParams { vocab, encoder, layout, data, seed: None, hyperparams: serde_json::Value::Null }
    }

    /// Weights and embeddings drawn from `N(0, 0.1²/d)`; biases zero.
    pub fn init<R: Rng>(vocab: Vocab, d: usize, encoder: EncoderConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(vocab, d, encoder);
        let normal = Normal::new(0.0, 0.1 / (d as f64).sqrt()).expect("valid std");
        for block in p.layout.weight_blocks() {
            for x in &mut p.data[block] {
                *x = normal.sample(rng);
            }
        }
        p
    }

    pub fn d(&self) -> usize {
        self.layout.d
    }

    pub fn role_index(&self, role: u8) -> Result<usize> {
        self.vocab.role_index(role).ok_or_else(|| Error::Lookup(format!("role {role}")))
    }

    fn check_pred(&self, r: usize) -> Result<()> {
        if r < self.vocab.len() {
            Ok(())
        } else {
            Err(Error::Lookup(format!("predicate index {r}")))
        }
    }

    pub fn unary(&self, r: usize) -> (&[f64], f64) {
        (&self.data[self.layout.unary_v(r)], self.data[self.layout.unary_b(r)])
    }

    pub fn binary(&self, r: usize, ri: usize) -> (&[f64], &[f64], f64) {
        (
            &self.data[self.layout.bin_v1(r, ri)],
            &self.data[self.layout.bin_v2(r, ri)],
            self.data[self.layout.bin_b(r, ri)],
        )
    }

    pub fn set_unary(&mut self, r: usize, v: &[f64], b: f64) {
        let range = self.layout.unary_v(r);
        self.data[range].copy_from_slice(v);
        let bi = self.layout.unary_b(r);
        self.data[bi] = b;
    }

    pub fn set_binary(&mut self, r: usize, ri: usize, v1: &[f64], v2: &[f64], b: f64) {
        let r1 = self.layout.bin_v1(r, ri);
        self.data[r1].copy_from_slice(v1);
        let r2 = self.layout.bin_v2(r, ri);
        self.data[r2].copy_from_slice(v2);
        let bi = self.layout.bin_b(r, ri);
        self.data[bi] = b;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

pub fn truth_unary(params: &FdsParams, r: usize, z: &[f64]) -> Result<f64> {
    params.check_pred(r)?;
    let (v, b) = params.unary(r);
    Ok(sigmoid(dot(v, z) + b))
}

pub fn truth_binary(params: &FdsParams, r: usize, role: u8, z_head: &[f64], z_dep: &[f64]) -> Result<f64> {
    params.check_pred(r)?;
    let (v1, v2, b) = params.binary(r, params.role_index(role)?);
    Ok(sigmoid(dot(v1, z_head) + dot(v2, z_dep) + b))
}

/// `s(h, H) = b_H − b_h − ‖v_H − v_h‖_p`.
pub fn hyp_score(params: &FdsParams, hypo: usize, hyper: usize, norm: Norm) -> Result<f64> {
    params.check_pred(hypo)?;
    params.check_pred(hyper)?;
    let (vh, bh) = params.unary(hypo);
    let (vuh, buh) = params.unary(hyper);
    Ok(buh - bh - norm.of_diff(vuh, vh))
}

pub fn hyp_score_by_name(params: &FdsParams, hypo: &str, hyper: &str, norm: Norm) -> Result<f64> {
    hyp_score(params, params.vocab.lookup(hypo)?, params.vocab.lookup(hyper)?, norm)
}

/// `s_a(r_i, r_j) = b_{r_i,a} − b_{r_j} − ‖v2_{r_i,a} − v_{r_j}‖_p`: how far the
/// extension of noun `r_j` sits inside argument `a` of predicate `r_i`.
pub fn forall_score(params: &FdsParams, pred: usize, role: u8, noun: usize, norm: Norm) -> Result<f64> {
    params.check_pred(pred)?;
    params.check_pred(noun)?;
    let ri = params.role_index(role)?;
    let (_, v2, b) = params.binary(pred, ri);
    let (vn, bn) = params.unary(noun);
    Ok(b - bn - norm.of_diff(v2, vn))
}

/// Intermediate values of one encoder pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct EncoderTape {
    pub pooled: Vec<Vec<f64>>,
    pub posteriors: Vec<PosteriorGaussian>,
    /// Per node: non-adjacent nodes feeding the topical mean.
    topical: Vec<Vec<usize>>,
}

fn adjacency(g: &SemGraph) -> Vec<Vec<bool>> {
    let n = g.nodes.len();
    let mut adj = vec![vec![false; n]; n];
    for e in &g.edges {
        adj[e.head][e.dep] = true;
        adj[e.dep][e.head] = true;
    }
    adj
}

pub(crate) fn encode_tape(params: &FdsParams, g: &SemGraph) -> Result<EncoderTape> {
    let l = &params.layout;
    let d = l.d;
    let n = g.nodes.len();
    for node in &g.nodes {
        params.check_pred(node.pred)?;
    }
    let adj = adjacency(g);
    let mut pooled = vec![vec![0.0; d]; n];
    let mut topical = Vec::with_capacity(n);
    for (i, h) in pooled.iter_mut().enumerate() {
        if params.encoder.self_embedding {
            add(h, &params.data[l.e_self(g.nodes[i].pred)]);
        }
        let others: Vec<usize> = (0..n).filter(|&k| k != i && !adj[i][k]).collect();
        if !others.is_empty() {
            let w = 1.0 / others.len() as f64;
            for &k in &others {
                axpy(h, w, &params.data[l.e_top(g.nodes[k].pred)]);
            }
        }
        topical.push(others);
    }
    for e in &g.edges {
        let ri = params.role_index(e.role)?;
        let dep_emb = l.e_dep(g.nodes[e.dep].pred, ri);
        add(&mut pooled[e.head], &params.data[dep_emb]);
        let head_emb = l.e_head(g.nodes[e.head].pred, ri);
        add(&mut pooled[e.dep], &params.data[head_emb]);
    }
    let w_mu = &params.data[l.w_mu()];
    let c_mu = &params.data[l.c_mu()];
    let w_sigma = &params.data[l.w_sigma()];
    let c_sigma = params.data[l.c_sigma()];
    let posteriors = pooled
        .iter()
        .map(|h| {
            let mean = (0..d).map(|k| dot(&w_mu[k * d..(k + 1) * d], h) + c_mu[k]).collect();
            let variance = (dot(w_sigma, h) + c_sigma).exp();
            PosteriorGaussian { mean, variance }
        })
        .collect();
    Ok(EncoderTape { pooled, posteriors, topical })
}

/// Accumulate encoder gradients given `∂/∂μ_i` and `∂/∂σ²_i` for every node.
pub(crate) fn encode_backward(
    params: &FdsParams,
    g: &SemGraph,
    tape: &EncoderTape,
    d_mean: &[Vec<f64>],
    d_var: &[f64],
    grad: &mut [f64],
) -> Result<()> {
    let l = &params.layout;
    let d = l.d;
    let n = g.nodes.len();
    let mut d_pooled = vec![vec![0.0; d]; n];
    let w_mu = l.w_mu().start;
    let w_sigma = l.w_sigma().start;
    for i in 0..n {
        let h = &tape.pooled[i];
        let d_log_var = d_var[i] * tape.posteriors[i].variance;
        let dh = &mut d_pooled[i];
        for k in 0..d {
            let dm = d_mean[i][k];
            if dm != 0.0 {
                let row = w_mu + k * d;
                for j in 0..d {
                    grad[row + j] += dm * h[j];
                    dh[j] += dm * params.data[row + j];
                }
            }
            grad[l.c_mu().start + k] += dm;
        }
        for j in 0..d {
            grad[w_sigma + j] += d_log_var * h[j];
            dh[j] += d_log_var * params.data[w_sigma + j];
        }
        grad[l.c_sigma()] += d_log_var;
    }
    for (i, dh) in d_pooled.iter().enumerate() {
        if params.encoder.self_embedding {
            add(&mut grad[l.e_self(g.nodes[i].pred)], dh);
        }
        let others = &tape.topical[i];
        if !others.is_empty() {
            let w = 1.0 / others.len() as f64;
            for &k in others {
                axpy(&mut grad[l.e_top(g.nodes[k].pred)], w, dh);
            }
        }
    }
    for e in &g.edges {
        let ri = params.role_index(e.role)?;
        let dep_emb = l.e_dep(g.nodes[e.dep].pred, ri);
        add(&mut grad[dep_emb], &d_pooled[e.head]);
        let head_emb = l.e_head(g.nodes[e.head].pred, ri);
        add(&mut grad[head_emb], &d_pooled[e.dep]);
    }
    Ok(())
}

/// Posterior over each node's pixie.
pub fn encode(params: &FdsParams, g: &SemGraph) -> Result<Vec<PosteriorGaussian>> {
    Ok(encode_tape(params, g)?.posteriors)
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn axpy(dst: &mut [f64], a: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * s;
    }
}

#[derive(Serialize, Deserialize)]
struct UnaryEntry {
    pred: String,
    v: Vec<f64>,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct BinaryEntry {
    pred: String,
    role: u8,
    v1: Vec<f64>,
    v2: Vec<f64>,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct EncoderArrays {
    config: EncoderConfig,
    e_self: Vec<f64>,
    e_head: Vec<f64>,
    e_dep: Vec<f64>,
    e_top: Vec<f64>,
    w_mu: Vec<f64>,
    c_mu: Vec<f64>,
    w_sigma: Vec<f64>,
    c_sigma: f64,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    d: usize,
    seed: Option<u64>,
    vocab: Vocab,
    unary: Vec<UnaryEntry>,
    binary: Vec<BinaryEntry>,
    encoder: EncoderArrays,
    hyperparams: serde_json::Value,
}

impl FdsParams {
    pub fn to_checkpoint_json(&self) -> String {
        let l = &self.layout;
        let roles = self.vocab.roles();
        let unary = (0..l.n_preds)
            .map(|r| {
                let (v, b) = self.unary(r);
                UnaryEntry { pred: self.vocab.name(r).to_string(), v: v.to_vec(), b }
            })
            .collect();
        let mut binary = Vec::with_capacity(l.n_preds * l.n_roles);
        for r in 0..l.n_preds {
            for (ri, &role) in roles.iter().enumerate() {
                let (v1, v2, b) = self.binary(r, ri);
                binary.push(BinaryEntry {
                    pred: self.vocab.name(r).to_string(),
                    role,
                    v1: v1.to_vec(),
                    v2: v2.to_vec(),
                    b,
                });
            }
        }
        let span = |a: Range<usize>, b: Range<usize>| self.data[a.start..b.start].to_vec();
        let nr = l.n_preds * l.n_roles;
        let encoder = EncoderArrays {
            config: self.encoder,
            e_self: self.data[l.e_self..l.e_self + l.n_preds * l.d].to_vec(),
            e_head: self.data[l.e_head..l.e_head + nr * l.d].to_vec(),
            e_dep: self.data[l.e_dep..l.e_dep + nr * l.d].to_vec(),
            e_top: self.data[l.e_top..l.e_top + l.n_preds * l.d].to_vec(),
            w_mu: self.data[l.w_mu()].to_vec(),
            c_mu: span(l.c_mu(), l.w_sigma()),
            w_sigma: self.data[l.w_sigma()].to_vec(),
            c_sigma: self.data[l.c_sigma()],
        };
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            d: l.d,
            seed: self.seed,
            vocab: self.vocab.clone(),
            unary,
            binary,
            encoder,
            hyperparams: self.hyperparams.clone(),
        };
        let mut s = serde_json::to_string(&file).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let f: CheckpointFile = serde_json::from_str(text)?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported checkpoint version {}", f.format_version)));
        }
        let mut p = FdsParams::zeros(f.vocab, f.d, f.encoder.config);
        p.seed = f.seed;
        p.hyperparams = f.hyperparams;
        let l = p.layout.clone();
        let wrong = |what: &str| Error::InvalidArgument(format!("checkpoint {what} has the wrong shape"));
        if f.unary.len() != l.n_preds || f.binary.len() != l.n_preds * l.n_roles {
            return Err(wrong("unary/binary table"));
        }
        for (r, u) in f.unary.iter().enumerate() {
            if u.pred != p.vocab.name(r) || u.v.len() != l.d {
                return Err(wrong("unary entry"));
            }
            p.set_unary(r, &u.v, u.b);
        }
        for (k, bin) in f.binary.iter().enumerate() {
            let (r, ri) = (k / l.n_roles, k % l.n_roles);
            if bin.pred != p.vocab.name(r) || bin.v1.len() != l.d || bin.v2.len() != l.d {
                return Err(wrong("binary entry"));
            }
            p.set_binary(r, ri, &bin.v1, &bin.v2, bin.b);
        }
        let e = &f.encoder;
        let nr = l.n_preds * l.n_roles;
        let blocks: [(&Vec<f64>, usize, usize); 7] = [
            (&e.e_self, l.e_self, l.n_preds * l.d),
            (&e.e_head, l.e_head, nr * l.d),
            (&e.e_dep, l.e_dep, nr * l.d),
            (&e.e_top, l.e_top, l.n_preds * l.d),
            (&e.w_mu, l.w_mu, l.d * l.d),
            (&e.c_mu, l.c_mu, l.d),
            (&e.w_sigma, l.w_sigma, l.d),
        ];
        for (src, start, len) in blocks {
            if src.len() != len {
                return Err(wrong("encoder array"));
            }
            p.data[start..start + len].copy_from_slice(src);
        }
        p.data[l.c_sigma] = e.c_sigma;
        if !p.is_finite() {
            return Err(Error::InvalidArgument("checkpoint contains non-finite values".into()));
        }
        Ok(p)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        crate::error::write_string(path, &self.to_checkpoint_json())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_checkpoint_json(&crate::error::read_to_string(path)?)
    }
}
