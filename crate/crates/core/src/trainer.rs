//! β-VAE training of the model, with the optional ∀-objective.

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpusgen::{Corpus, Quantifier};
use crate::error::{Error, Result};
use crate::fdsmodel::{encode_backward, encode_tape, probit_log_sigmoid, EncoderConfig, FdsParams, Norm};
use crate::graphdata::{from_corpus, NegativeDistribution, NegativeSampler, PredKind, SemGraph, Vocab};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForallMode {
    Never,
    Always,
    OnUniversalQuantifier,
}

/// How the mean penalty of the regularizer is scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanPenalty {
    /// `(β1/2)‖μ‖²`
    Half,
    /// `(d/2)β1‖μ‖²`
    DimScaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "Fds")]
    Fds,
    #[serde(rename = "Fds_forall")]
    FdsForall,
    #[serde(rename = "Fds_forall_half")]
    FdsForallHalf,
    #[serde(rename = "Fds_conditional")]
    FdsConditional,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fds, Preset::FdsForall, Preset::FdsForallHalf, Preset::FdsConditional];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fds => "Fds",
            Preset::FdsForall => "Fds_forall",
            Preset::FdsForallHalf => "Fds_forall_half",
            Preset::FdsConditional => "Fds_conditional",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub mean_penalty: MeanPenalty,
    pub negatives: usize,
    pub negative_distribution: NegativeDistribution,
    pub forall_weight: f64,
    pub forall_mode: ForallMode,
    pub forall_p: u8,
    pub encoder: EncoderConfig,
    pub workers: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 10,
            epochs: 5000,
            batch_size: 64,
            learning_rate: 0.01,
            beta1: 0.5,
            beta2: 1.0,
            mean_penalty: MeanPenalty::Half,
            negatives: 1,
            negative_distribution: NegativeDistribution::Uniform,
            forall_weight: 0.0,
            forall_mode: ForallMode::Never,
            forall_p: 1,
            encoder: EncoderConfig::default(),
            workers: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn preset(preset: Preset) -> Self {
        let (forall_weight, forall_mode) = match preset {
            Preset::Fds => (0.0, ForallMode::Never),
            Preset::FdsForall => (1.0, ForallMode::Always),
            Preset::FdsForallHalf => (0.5, ForallMode::Always),
            Preset::FdsConditional => (1.0, ForallMode::OnUniversalQuantifier),
        };
        TrainConfig { forall_weight, forall_mode, ..TrainConfig::default() }
    }

    /// Synthetic-experiment sizing: `d` and epochs by taxonomy size.
    pub fn sized_for(mut self, n_nouns: usize) -> Self {
        self.dim = default_dim(n_nouns);
        self.epochs = default_epochs(n_nouns);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 || self.workers == 0 {
            return bad("batch_size and workers must be at least 1".into());
        }
        if self.negatives == 0 {
            return bad("negatives (K) must be at least 1".into());
        }
        if !(self.forall_weight >= 0.0) || !self.forall_weight.is_finite() {
            return bad(format!("forall_weight must be non-negative, got {}", self.forall_weight));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.beta1 >= 0.0 && self.beta2 >= 0.0) {
            return bad("beta1 and beta2 must be non-negative".into());
        }
        Norm::from_p(self.forall_p)?;
        Ok(())
    }

    fn forall_active(&self) -> bool {
        self.forall_weight > 0.0 && self.forall_mode != ForallMode::Never
    }
}

/// 2 for chain-sized taxonomies, 10 for mid-size trees, 50 for large imports.
pub fn default_dim(n_nouns: usize) -> usize {
    match n_nouns {
        0..=12 => 2,
        13..=2000 => 10,
        _ => 50,
    }
}

pub fn default_epochs(n_nouns: usize) -> usize {
    if n_nouns > 2000 {
        2
    } else {
        5000
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub unary: f64,
    pub binary: f64,
    pub regularizer: f64,
    pub forall: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.unary + self.binary + self.regularizer + self.forall
    }

    pub fn is_finite(&self) -> bool {
        self.total().is_finite()
    }

    fn scaled(self, k: f64) -> Self {
        LossBreakdown {
            unary: self.unary * k,
            binary: self.binary * k,
            regularizer: self.regularizer * k,
            forall: self.forall * k,
        }
    }
}

impl AddAssign for LossBreakdown {
    fn add_assign(&mut self, o: Self) {
        self.unary += o.unary;
        self.binary += o.binary;
        self.regularizer += o.regularizer;
        self.forall += o.forall;
    }
}

/// ∀-objective samples for one `noun ←ARG[a]- pred` edge.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ForallNegatives {
    pub edge: usize,
    pub nouns: Vec<usize>,
    pub slots: Vec<(usize, u8)>,
}

/// Negative samples for one graph, drawn ahead of the loss so the loss itself is deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphNegatives {
    pub unary: Vec<Vec<usize>>,
    pub binary: Vec<Vec<usize>>,
    pub forall: Vec<ForallNegatives>,
    /// Universal nodes without an incoming edge.
    pub skipped_universal: usize,
}

/// Edges whose dependent receives the ∀-objective.
fn forall_edges(vocab: &Vocab, g: &SemGraph, cfg: &TrainConfig) -> (Vec<usize>, usize) {
    if !cfg.forall_active() {
        return (Vec::new(), 0);
    }
    let qualifies = |i: usize| {
        let node = &g.nodes[i];
        match cfg.forall_mode {
            ForallMode::Never => false,
            ForallMode::Always => vocab.kind(node.pred) == PredKind::Noun,
            ForallMode::OnUniversalQuantifier => node.quant == Some(Quantifier::Universal),
        }
    };
    let edges = (0..g.edges.len()).filter(|&e| qualifies(g.edges[e].dep)).collect();
    let skipped = (0..g.nodes.len())
        .filter(|&i| g.nodes[i].quant == Some(Quantifier::Universal) && qualifies(i))
        .filter(|&i| !g.edges.iter().any(|e| e.dep == i))
        .count();
    (edges, skipped)
}

pub fn draw_negatives<R: Rng + ?Sized>(
    vocab: &Vocab,
    sampler: &NegativeSampler,
    g: &SemGraph,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<GraphNegatives> {
    let k = cfg.negatives;
    let mut out = GraphNegatives::default();
    for node in &g.nodes {
        let kind = vocab.kind(node.pred);
        out.unary.push((0..k).map(|_| sampler.sample(kind, node.pred, rng)).collect::<Result<_>>()?);
    }
    for e in &g.edges {
        let head = g.nodes[e.head].pred;
        let kind = vocab.kind(head);
        out.binary.push((0..k).map(|_| sampler.sample(kind, head, rng)).collect::<Result<_>>()?);
    }
    let (edges, skipped) = forall_edges(vocab, g, cfg);
    out.skipped_universal = skipped;
    for edge in edges {
        let e = g.edges[edge];
        let noun = g.nodes[e.dep].pred;
        let pred = g.nodes[e.head].pred;
        let nouns = (0..k).map(|_| sampler.sample(PredKind::Noun, noun, rng)).collect::<Result<_>>()?;
        let slots = (0..k).map(|_| sampler.sample_slot((pred, e.role), rng)).collect::<Result<_>>()?;
        out.forall.push(ForallNegatives { edge, nouns, slots });
    }
    Ok(out)
}

fn numeric(term: &str, value: f64) -> Error {
    Error::Numeric { term: term.into(), detail: format!("value {value}") }
}

/// β-VAE objective of one graph (to be maximized); gradients are added into `grad`.
pub fn loss_graph(
    params: &FdsParams,
    g: &SemGraph,
    negs: &GraphNegatives,
    cfg: &TrainConfig,
    grad: &mut [f64],
) -> Result<LossBreakdown> {
    let l = &params.layout;
    let d = l.d;
    let tape = encode_tape(params, g)?;
    let n = g.nodes.len();
    let mut d_mean = vec![vec![0.0; d]; n];
    let mut d_var = vec![0.0; n];
    let mut out = LossBreakdown::default();

    for (i, node) in g.nodes.iter().enumerate() {
        let q = &tape.posteriors[i];
        let preds = std::iter::once((node.pred, 1.0)).chain(negs.unary[i].iter().map(|&r| (r, -1.0)));
        for (r, sign) in preds {
            let vr = l.unary_v(r);
            let bi = l.unary_b(r);
            let w = &params.data[vr.clone()];
            let m = dot(w, &q.mean) + params.data[bi];
            let wn = dot(w, w);
            let (val, dm, ds2) = probit_log_sigmoid(sign, m, q.variance * wn);
            out.unary += val;
            for k in 0..d {
                grad[vr.start + k] += dm * q.mean[k] + ds2 * q.variance * 2.0 * w[k];
                d_mean[i][k] += dm * w[k];
            }
            grad[bi] += dm;
            d_var[i] += ds2 * wn;
        }
    }
    if !out.unary.is_finite() {
        return Err(numeric("unary", out.unary));
    }

    for (ei, e) in g.edges.iter().enumerate() {
        let ri = params.role_index(e.role)?;
        let (qh, qd) = (&tape.posteriors[e.head], &tape.posteriors[e.dep]);
        let head = g.nodes[e.head].pred;
        let preds = std::iter::once((head, 1.0)).chain(negs.binary[ei].iter().map(|&r| (r, -1.0)));
        for (r, sign) in preds {
            let (r1, r2, bi) = (l.bin_v1(r, ri), l.bin_v2(r, ri), l.bin_b(r, ri));
            let v1 = &params.data[r1.clone()];
            let v2 = &params.data[r2.clone()];
            let m = dot(v1, &qh.mean) + dot(v2, &qd.mean) + params.data[bi];
            let (n1, n2) = (dot(v1, v1), dot(v2, v2));
            let s2 = qh.variance * n1 + qd.variance * n2;
            let (val, dm, ds2) = probit_log_sigmoid(sign, m, s2);
            out.binary += val;
            for k in 0..d {
                grad[r1.start + k] += dm * qh.mean[k] + ds2 * qh.variance * 2.0 * v1[k];
                grad[r2.start + k] += dm * qd.mean[k] + ds2 * qd.variance * 2.0 * v2[k];
                d_mean[e.head][k] += dm * v1[k];
                d_mean[e.dep][k] += dm * v2[k];
            }
            grad[bi] += dm;
            d_var[e.head] += ds2 * n1;
            d_var[e.dep] += ds2 * n2;
        }
    }
    if !out.binary.is_finite() {
        return Err(numeric("binary", out.binary));
    }

    let mean_scale = match cfg.mean_penalty {
        MeanPenalty::Half => 1.0,
        MeanPenalty::DimScaled => d as f64,
    };
    let df = d as f64;
    for (i, q) in tape.posteriors.iter().enumerate() {
        let s2 = q.variance;
        out.regularizer -= 0.5 * (mean_scale * cfg.beta1 * dot(&q.mean, &q.mean) + df * cfg.beta2 * (s2 - s2.ln()));
        for k in 0..d {
            d_mean[i][k] -= mean_scale * cfg.beta1 * q.mean[k];
        }
        d_var[i] -= 0.5 * df * cfg.beta2 * (1.0 - 1.0 / s2);
    }
    if !out.regularizer.is_finite() {
        return Err(numeric("regularizer", out.regularizer));
    }

    encode_backward(params, g, &tape, &d_mean, &d_var, grad)?;
    Ok(out)
}

/// Adds `k · ∂s_a(pred, noun)` into `grad` and returns `s_a(pred, noun)`.
fn forall_term(params: &FdsParams, pred: usize, ri: usize, noun: usize, norm: Norm, k: f64, grad: &mut [f64]) -> f64 {
    let l = &params.layout;
    let r2 = l.bin_v2(pred, ri);
    let rn = l.unary_v(noun);
    let v2 = &params.data[r2.clone()];
    let vn = &params.data[rn.clone()];
    let s = params.data[l.bin_b(pred, ri)] - params.data[l.unary_b(noun)] - norm.of_diff(v2, vn);
    if k != 0.0 {
        let mut g = vec![0.0; l.d];
        norm.grad_of_diff(v2, vn, &mut g);
        grad[l.bin_b(pred, ri)] += k;
        grad[l.unary_b(noun)] -= k;
        for (j, gj) in g.iter().enumerate() {
            grad[r2.start + j] -= k * gj;
            grad[rn.start + j] += k * gj;
        }
    }
    s
}

/// λ-scaled ∀-objective of one graph; gradients are added into `grad`.
pub fn loss_forall(
    params: &FdsParams,
    g: &SemGraph,
    negs: &GraphNegatives,
    cfg: &TrainConfig,
    grad: &mut [f64],
) -> Result<LossBreakdown> {
    let norm = Norm::from_p(cfg.forall_p)?;
    let lambda = cfg.forall_weight;
    let mut total = 0.0;
    for f in &negs.forall {
        let e = g.edges[f.edge];
        let ri = params.role_index(e.role)?;
        let pred = g.nodes[e.head].pred;
        let noun = g.nodes[e.dep].pred;
        total += forall_term(params, pred, ri, noun, norm, lambda, grad);
        for &neg in &f.nouns {
            let s = forall_term(params, pred, ri, neg, norm, 0.0, grad);
            if s > 0.0 {
                total -= forall_term(params, pred, ri, neg, norm, -lambda, grad);
            }
        }
        for &(neg_pred, neg_role) in &f.slots {
            let nri = params.role_index(neg_role)?;
            let s = forall_term(params, neg_pred, nri, noun, norm, 0.0, grad);
            if s > 0.0 {
                total -= forall_term(params, neg_pred, nri, noun, norm, -lambda, grad);
            }
        }
    }
    let forall = lambda * total;
    if !forall.is_finite() {
        return Err(numeric("forall", forall));
    }
    Ok(LossBreakdown { forall, ..LossBreakdown::default() })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTelemetry {
    pub epoch: usize,
    pub loss: LossBreakdown,
}

pub fn telemetry_csv(rows: &[EpochTelemetry]) -> String {
    let mut out = String::from("epoch,unary,binary,regularizer,forall,total\n");
    for r in rows {
        let l = &r.loss;
        out.push_str(&format!("{},{},{},{},{},{}\n", r.epoch, l.unary, l.binary, l.regularizer, l.forall, l.total()));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrainStatus {
    Completed,
    /// Training stopped; `params` hold the state before the failing update.
    Diverged {
        epoch: usize,
        reason: String,
    },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: FdsParams,
    pub telemetry: Vec<EpochTelemetry>,
    pub status: TrainStatus,
    pub skipped_universal: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// Ascent step along `grad`, written into `next`; false if any entry is non-finite.
    fn step(&mut self, params: &[f64], grad: &[f64], lr: f64, next: &mut [f64]) -> bool {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let mut finite = true;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g;
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g * g;
            next[i] = params[i] + lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
            finite &= next[i].is_finite();
        }
        finite
    }
}

struct Partial {
    loss: LossBreakdown,
    skipped: usize,
}

fn run_chunk<R: Rng>(
    params: &FdsParams,
    sampler: &NegativeSampler,
    graphs: &[SemGraph],
    chunk: &[usize],
    cfg: &TrainConfig,
    rng: &mut R,
    grad: &mut [f64],
) -> Result<Partial> {
    grad.fill(0.0);
    let mut loss = LossBreakdown::default();
    let mut skipped = 0;
    for &gi in chunk {
        let g = &graphs[gi];
        let negs = draw_negatives(&params.vocab, sampler, g, cfg, rng)?;
        skipped += negs.skipped_universal;
        loss += loss_graph(params, g, &negs, cfg, grad)?;
        if !negs.forall.is_empty() {
            loss += loss_forall(params, g, &negs, cfg, grad)?;
        }
    }
    Ok(Partial { loss, skipped })
}

/// Adam ascent over shuffled mini-batches.
pub fn train(vocab: &Vocab, graphs: &[SemGraph], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if graphs.is_empty() {
        return Err(Error::InvalidArgument("training corpus is empty".into()));
    }
    let sampler = NegativeSampler::new(vocab, cfg.negative_distribution)?;
    let mut init_rng = rng::stream(cfg.seed, "trainer/init");
    let mut params = FdsParams::init(vocab.clone(), cfg.dim, cfg.encoder, &mut init_rng);
    params.seed = Some(cfg.seed);
    params.hyperparams = serde_json::to_value(cfg)?;

    let mut order_rng = rng::stream(cfg.seed, "trainer/order");
    let mut worker_rngs: Vec<_> =
        (0..cfg.workers).map(|w| rng::worker_stream(cfg.seed, "trainer/negatives", w as u64)).collect();
    let mut adam = Adam::new(params.data.len());
    let mut order: Vec<usize> = (0..graphs.len()).collect();
    let mut telemetry = Vec::with_capacity(cfg.epochs);
    let mut skipped_universal = 0;
    let mut status = TrainStatus::Completed;
    let n = params.data.len();
    let mut grads: Vec<Vec<f64>> = (0..cfg.workers).map(|_| vec![0.0; n]).collect();
    let mut next = vec![0.0; n];

    'epochs: for epoch in 1..=cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut epoch_loss = LossBreakdown::default();
        for batch in order.chunks(cfg.batch_size) {
            let per = batch.len().div_ceil(cfg.workers);
            let chunks: Vec<&[usize]> = batch.chunks(per).collect();
            let partials: Vec<Result<Partial>> = if chunks.len() == 1 {
                vec![run_chunk(&params, &sampler, graphs, chunks[0], cfg, &mut worker_rngs[0], &mut grads[0])]
            } else {
                let p = &params;
                let s = &sampler;
                std::thread::scope(|scope| {
                    let handles: Vec<_> = chunks
                        .iter()
                        .zip(worker_rngs.iter_mut())
                        .zip(grads.iter_mut())
                        .map(|((chunk, r), g)| scope.spawn(move || run_chunk(p, s, graphs, chunk, cfg, r, g)))
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
                })
            };
            let used = partials.len();
            for partial in partials {
                let partial = match partial {
                    Ok(p) => p,
                    Err(e @ Error::Numeric { .. }) => {
                        status = TrainStatus::Diverged { epoch, reason: e.to_string() };
                        break 'epochs;
                    }
                    Err(e) => return Err(e),
                };
                epoch_loss += partial.loss;
                skipped_universal += partial.skipped;
            }
            let (first, rest) = grads.split_at_mut(1);
            let grad = &mut first[0];
            for other in &rest[..used - 1] {
                for (g, o) in grad.iter_mut().zip(other) {
                    *g += o;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            if !adam.step(&params.data, grad, cfg.learning_rate, &mut next) {
                status = TrainStatus::Diverged { epoch, reason: "non-finite parameters after update".into() };
                break 'epochs;
            }
            std::mem::swap(&mut params.data, &mut next);
        }
        log::debug!("epoch {epoch}: total {}", epoch_loss.total());
        telemetry.push(EpochTelemetry { epoch, loss: epoch_loss });
    }
    if let TrainStatus::Diverged { epoch, reason } = &status {
        log::warn!("training diverged at epoch {epoch}: {reason}");
    }
    if skipped_universal > 0 {
        log::warn!("{skipped_universal} universal node occurrence(s) had no incoming edge and were skipped");
    }
    Ok(TrainOutcome { params, telemetry, status, skipped_universal })
}

pub fn train_corpus(corpus: &Corpus, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let (vocab, graphs) = from_corpus(corpus)?;
    train(&vocab, &graphs, cfg)
}

/// Epoch-mean breakdown over a window, for smoothing telemetry.
pub fn window_means(rows: &[EpochTelemetry], window: usize) -> Vec<LossBreakdown> {
    rows.chunks(window.max(1))
        .map(|c| {
            let mut acc = LossBreakdown::default();
            for r in c {
                acc += r.loss;
            }
            acc.scaled(1.0 / c.len() as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpusgen::{gen_dih, gen_mixed, gen_rdih};
    use crate::fdsmodel::{hyp_score_by_name, EncoderConfig};
    use crate::graphdata::{GraphEdge, GraphNode, PredKind, VocabEntry};
    use crate::hierarchy::example_animals;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_params(vocab: &Vocab, d: usize) -> FdsParams {
        FdsParams::zeros(vocab.clone(), d, EncoderConfig { self_embedding: true })
    }

    #[test]
    fn presets() {
        assert_eq!(TrainConfig::preset(Preset::Fds).forall_weight, 0.0);
        assert_eq!(TrainConfig::preset(Preset::FdsForallHalf).forall_weight, 0.5);
        let c = TrainConfig::preset(Preset::FdsConditional);
        assert_eq!((c.forall_weight, c.forall_mode), (1.0, ForallMode::OnUniversalQuantifier));
        assert_eq!(TrainConfig::preset(Preset::FdsForall).forall_mode, ForallMode::Always);
        assert_eq!(TrainConfig::default().sized_for(12).dim, 2);
        assert_eq!(TrainConfig::default().sized_for(153).dim, 10);
        assert_eq!(TrainConfig::default().sized_for(80_000).epochs, 2);
        assert_eq!("fds_forall".parse::<Preset>().unwrap(), Preset::FdsForall);
        assert!("Fds_sometimes".parse::<Preset>().is_err());
        let cfg = TrainConfig::preset(Preset::FdsForall);
        let back: TrainConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn zero_params_single_node() {
        let (vocab, _) = from_corpus(&gen_dih(&example_animals())).unwrap();
        let p = zero_params(&vocab, 3);
        let g = SemGraph::new(vec![GraphNode { pred: 0, quant: None }], vec![]).unwrap();
        let negs = GraphNegatives { unary: vec![vec![1]], ..GraphNegatives::default() };
        let cfg = TrainConfig::default();
        let mut grad = vec![0.0; p.data.len()];
        let l = loss_graph(&p, &g, &negs, &cfg, &mut grad).unwrap();
        assert!((l.unary - 2.0 * 0.5f64.ln()).abs() < 1e-15);
        assert!((l.regularizer + 1.5 * cfg.beta2).abs() < 1e-15);
        assert_eq!(l.binary, 0.0);
        assert_eq!(l.total(), l.unary + l.regularizer);
    }

    #[test]
    fn regularizer_variance_term_is_stationary_at_one() {
        let f = |s2: f64| s2 - s2.ln();
        let h = 1e-6;
        assert!(((f(1.0 + h) - f(1.0 - h)) / (2.0 * h)).abs() < 1e-9);
        assert!(f(0.5) > f(1.0) && f(2.0) > f(1.0));
    }

    #[test]
    fn forall_zero_params_and_hinge() {
        let (vocab, graphs) = from_corpus(&gen_rdih(&example_animals())).unwrap();
        let mut p = zero_params(&vocab, 2);
        let cfg = TrainConfig::preset(Preset::FdsForall);
        let sampler = NegativeSampler::new(&vocab, cfg.negative_distribution).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let negs = draw_negatives(&vocab, &sampler, &graphs[0], &cfg, &mut rng).unwrap();
        assert_eq!(negs.forall.len(), 1);
        let mut grad = vec![0.0; p.data.len()];
        assert_eq!(loss_forall(&p, &graphs[0], &negs, &cfg, &mut grad).unwrap().forall, 0.0);

        // every dog barks / every cat barks with s_1(bark, cat) = −0.3: hinge inactive.
        let bark = vocab.lookup("bark").unwrap();
        let dog = vocab.lookup("dog").unwrap();
        let bat = vocab.lookup("bat").unwrap();
        let g = SemGraph::from_statement(dog, Quantifier::Universal, bark, 1);
        let negs = GraphNegatives {
            unary: vec![vec![bat], vec![vocab.lookup("fly").unwrap()]],
            binary: vec![vec![vocab.lookup("fly").unwrap()]],
            forall: vec![ForallNegatives { edge: 0, nouns: vec![bat], slots: vec![] }],
            skipped_universal: 0,
        };
        let bi = p.layout.unary_b(bat);
        p.data[bi] = 0.3;
        let mut grad = vec![0.0; p.data.len()];
        let f = loss_forall(&p, &g, &negs, &cfg, &mut grad).unwrap();
        assert_eq!(f.forall, 0.0);
        assert_eq!(grad[bi], 0.0);
        assert_eq!(grad[p.layout.bin_b(bark, 0)], 1.0);
        assert_eq!(grad[p.layout.unary_b(dog)], -1.0);
    }

    #[test]
    fn universal_without_incoming_edge_is_counted() {
        let (vocab, _) = from_corpus(&gen_rdih(&example_animals())).unwrap();
        let g = SemGraph::new(
            vec![GraphNode { pred: vocab.lookup("dog").unwrap(), quant: Some(Quantifier::Universal) }],
            vec![],
        )
        .unwrap();
        let cfg = TrainConfig::preset(Preset::FdsConditional);
        let sampler = NegativeSampler::new(&vocab, cfg.negative_distribution).unwrap();
        let negs = draw_negatives(&vocab, &sampler, &g, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(negs.skipped_universal, 1);
        assert!(negs.forall.is_empty());
    }

    /// Graph with two roles and a topical node: `n0 ←ARG1- v -ARG2→ n1`, plus `n2`.
    fn fd_setup(encoder: EncoderConfig) -> (FdsParams, SemGraph, GraphNegatives) {
        let names = ["a", "b", "c", "v", "w"];
        let entries = names
            .iter()
            .map(|&s| VocabEntry {
                pred: s.into(),
                kind: if s == "v" || s == "w" { PredKind::Context } else { PredKind::Noun },
                count: 1,
            })
            .collect();
        let vocab = Vocab::from_parts(entries, vec![1, 2], vec![(3, 1), (3, 2), (4, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = FdsParams::init(vocab, 3, encoder, &mut rng);
        for x in p.data.iter_mut() {
            *x += rng.gen_range(-0.6..0.6);
        }
        let g = SemGraph::new(
            vec![
                GraphNode { pred: 0, quant: Some(Quantifier::Universal) },
                GraphNode { pred: 3, quant: None },
                GraphNode { pred: 1, quant: Some(Quantifier::Existential) },
                GraphNode { pred: 2, quant: Some(Quantifier::Existential) },
            ],
            vec![GraphEdge { head: 1, dep: 0, role: 1 }, GraphEdge { head: 1, dep: 2, role: 2 }],
        )
        .unwrap();
        let negs = GraphNegatives {
            unary: vec![vec![1, 2], vec![4, 4], vec![0, 2], vec![1, 0]],
            binary: vec![vec![4, 4], vec![4, 4]],
            forall: vec![
                ForallNegatives { edge: 0, nouns: vec![1, 2], slots: vec![(4, 1), (3, 2)] },
                ForallNegatives { edge: 1, nouns: vec![0, 2], slots: vec![(3, 1), (4, 1)] },
            ],
            skipped_universal: 0,
        };
        (p, g, negs)
    }

    fn check_gradients(cfg: &TrainConfig, encoder: EncoderConfig) {
        let (mut p, g, negs) = fd_setup(encoder);
        // make some hinges active
        for f in &negs.forall {
            for &n in &f.nouns {
                let b = p.layout.unary_b(n);
                p.data[b] -= 1.5;
            }
        }
        let objective = |p: &FdsParams, grad: &mut [f64]| {
            let a = loss_graph(p, &g, &negs, cfg, grad).unwrap();
            let b = loss_forall(p, &g, &negs, cfg, grad).unwrap();
            a.total() + b.total()
        };
        let mut grad = vec![0.0; p.data.len()];
        objective(&p, &mut grad);
        let h = 1e-5;
        let mut scratch = vec![0.0; p.data.len()];
        let mut worst: f64 = 0.0;
        for i in 0..p.data.len() {
            let x = p.data[i];
            p.data[i] = x + h;
            let up = objective(&p, &mut scratch);
            p.data[i] = x - h;
            let down = objective(&p, &mut scratch);
            p.data[i] = x;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / (fd.abs() + grad[i].abs()).max(1e-6);
            worst = worst.max(rel);
            assert!(rel < 1e-4, "param {i}: analytic {} vs fd {fd}", grad[i]);
        }
        assert!(worst < 1e-4);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for preset in Preset::ALL {
            for p in [1, 2] {
                for mean_penalty in [MeanPenalty::Half, MeanPenalty::DimScaled] {
                    let cfg = TrainConfig { forall_p: p, mean_penalty, ..TrainConfig::preset(preset) };
                    check_gradients(&cfg, EncoderConfig { self_embedding: true });
                    check_gradients(&cfg, EncoderConfig { self_embedding: false });
                }
            }
        }
    }

    fn quick(preset: Preset, epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig { dim: 2, epochs, seed, ..TrainConfig::preset(preset) }
    }

    #[test]
    fn zero_epochs_rejected_one_epoch_finite() {
        let corpus = gen_dih(&example_animals());
        assert!(matches!(train_corpus(&corpus, &quick(Preset::Fds, 0, 1)), Err(Error::InvalidArgument(_))));
        let out = train_corpus(&corpus, &quick(Preset::Fds, 1, 1)).unwrap();
        assert!(out.params.is_finite());
        assert_eq!(out.telemetry.len(), 1);
        assert_eq!(out.status, TrainStatus::Completed);
        assert!(telemetry_csv(&out.telemetry).starts_with("epoch,unary,binary,regularizer,forall,total\n1,"));
    }

    #[test]
    fn training_is_bit_reproducible() {
        let corpus = gen_mixed(&example_animals());
        let a = train_corpus(&corpus, &quick(Preset::FdsForall, 30, 7)).unwrap();
        let b = train_corpus(&corpus, &quick(Preset::FdsForall, 30, 7)).unwrap();
        assert_eq!(a.params.to_checkpoint_json(), b.params.to_checkpoint_json());
        let c = train_corpus(&corpus, &quick(Preset::FdsForall, 30, 8)).unwrap();
        assert_ne!(a.params.data, c.params.data);
    }

    #[test]
    fn workers_are_reproducible_per_count() {
        let corpus = gen_mixed(&example_animals());
        let cfg = TrainConfig { workers: 3, batch_size: 6, ..quick(Preset::FdsForall, 20, 3) };
        let a = train_corpus(&corpus, &cfg).unwrap();
        let b = train_corpus(&corpus, &cfg).unwrap();
        assert_eq!(a.params.data, b.params.data);
    }

    #[test]
    fn conditional_without_universals_equals_fds() {
        let corpus = gen_dih(&example_animals());
        let a = train_corpus(&corpus, &quick(Preset::Fds, 50, 4)).unwrap();
        let b = train_corpus(&corpus, &quick(Preset::FdsConditional, 50, 4)).unwrap();
        assert_eq!(a.params.data, b.params.data);
        assert!(b.telemetry.iter().all(|t| t.loss.forall == 0.0));
    }

    #[test]
    fn divergence_keeps_last_good_parameters() {
        let corpus = gen_dih(&example_animals());
        let cfg = TrainConfig { learning_rate: 1e300, ..quick(Preset::Fds, 20, 1) };
        let out = train_corpus(&corpus, &cfg).unwrap();
        assert!(matches!(out.status, TrainStatus::Diverged { .. }));
        assert!(out.params.is_finite());
    }

    #[test]
    fn objective_rises_over_windows() {
        let corpus = gen_dih(&example_animals());
        let out = train_corpus(&corpus, &quick(Preset::Fds, 1000, 2)).unwrap();
        let w = window_means(&out.telemetry, 100);
        assert!(w.last().unwrap().total() > w[0].total());
    }

    /// Scores averaged over seeds, as in evaluation.
    fn mean_score(corpus: &Corpus, preset: Preset, hypo: &str, hyper: &str) -> f64 {
        let seeds = 4;
        (0..seeds)
            .map(|seed| {
                let out = train_corpus(corpus, &quick(preset, 5000, seed)).unwrap();
                hyp_score_by_name(&out.params, hypo, hyper, Norm::L2).unwrap()
            })
            .sum::<f64>()
            / seeds as f64
    }

    #[test]
    fn fds_learns_hypernymy_on_dih_corpus() {
        let corpus = gen_dih(&example_animals());
        assert!(mean_score(&corpus, Preset::Fds, "dog", "animal") > 0.0);
        assert!(mean_score(&corpus, Preset::Fds, "animal", "dog") < 0.0);
    }

    #[test]
    fn forall_orders_hypernymy_on_rdih_corpus() {
        let corpus = gen_rdih(&example_animals());
        let down = mean_score(&corpus, Preset::FdsForall, "dog", "mammal");
        let up = mean_score(&corpus, Preset::FdsForall, "mammal", "dog");
        assert!(down > up, "{down} vs {up}");
    }
}
