//! DeepSet network with a diagonal Gaussian head.
//!
//! Two set encoders (one per team) map each element through a single hidden
//! ReLU layer to an embedding; embeddings are sum-pooled and concatenated
//! with the per-robot features, then decoded by a single-hidden-layer
//! network into `(μ, raw σ)` with `σ = softplus(raw) + 1e-4`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, Observation, ValueObservation};

pub const SIGMA_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetKind {
    Policy,
    Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub kind: NetKind,
    /// Dimension of each set element.
    pub element_dim: usize,
    /// Dimension of the non-set features (relative goal, or `n_rg`).
    pub self_dim: usize,
    pub hidden: usize,
    pub embed: usize,
    pub out_dim: usize,
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    input: usize,
    output: usize,
    offset: usize,
}

impl Dense {
    fn weights<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.offset..self.offset + self.input * self.output]
    }

    fn bias<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        let b = self.offset + self.input * self.output;
        &p[b..b + self.output]
    }

    fn size(&self) -> usize {
        self.input * self.output + self.output
    }

    /// `y = W x + b`
    fn apply(&self, p: &[f64], x: &[f64], y: &mut [f64]) {
        let w = self.weights(p);
        let b = self.bias(p);
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &w[o * self.input..(o + 1) * self.input];
            *yo = b[o] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
        }
    }

    /// Accumulate parameter gradients for upstream `dy`; optionally write `dx`.
    fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], dy: &[f64], dx: Option<&mut [f64]>) {
        let (gw, gb) = g[self.offset..self.offset + self.size()].split_at_mut(self.input * self.output);
        for (o, &d) in dy.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            gb[o] += d;
            let row = &mut gw[o * self.input..(o + 1) * self.input];
            for (gwi, xi) in row.iter_mut().zip(x) {
                *gwi += d * xi;
            }
        }
        if let Some(dx) = dx {
            let w = self.weights(p);
            dx.iter_mut().for_each(|v| *v = 0.0);
            for (o, &d) in dy.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * self.input..(o + 1) * self.input];
                for (dxi, wi) in dx.iter_mut().zip(row) {
                    *dxi += d * wi;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    inner_a: [Dense; 2],
    inner_b: [Dense; 2],
    outer: [Dense; 2],
    total: usize,
}

impl Architecture {
    pub fn policy(spec: &GameSpec) -> Self {
        Self {
            kind: NetKind::Policy,
            element_dim: spec.state_dim(),
            self_dim: spec.state_dim(),
            hidden: 16,
            embed: 16,
            out_dim: spec.action_dim(),
        }
    }

    pub fn value(spec: &GameSpec) -> Self {
        Self {
            kind: NetKind::Value,
            element_dim: spec.state_dim(),
            self_dim: 1,
            hidden: 16,
            embed: 16,
            out_dim: 1,
        }
    }

    fn layout(&self) -> Layout {
        let mut offset = 0;
        let mut dense = |input, output| {
            let d = Dense { input, output, offset };
            offset += d.size();
            d
        };
        let inner_a = [dense(self.element_dim, self.hidden), dense(self.hidden, self.embed)];
        let inner_b = [dense(self.element_dim, self.hidden), dense(self.hidden, self.embed)];
        let outer = [
            dense(self.self_dim + 2 * self.embed, self.hidden),
            dense(self.hidden, 2 * self.out_dim),
        ];
        Layout {
            inner_a,
            inner_b,
            outer,
            total: offset,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layout().total
    }
}

/// Network input: per-robot features plus two variable-size sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetInput {
    pub features: Vec<f64>,
    pub set_a: Vec<Vec<f64>>,
    pub set_b: Vec<Vec<f64>>,
}

impl From<&Observation> for NetInput {
    fn from(z: &Observation) -> Self {
        NetInput {
            features: z.goal_relative.clone(),
            set_a: z.neighbors_a.clone(),
            set_b: z.neighbors_b.clone(),
        }
    }
}

impl From<&ValueObservation> for NetInput {
    fn from(y: &ValueObservation) -> Self {
        NetInput {
            features: vec![y.reached as f64],
            set_a: y.set_a.clone(),
            set_b: y.set_b.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianOutput {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl GaussianOutput {
    /// Reparameterized draw `μ + σ ⊙ ε`.
    pub fn sample(&self, eps: &[f64]) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.std)
            .zip(eps)
            .map(|((m, s), e)| m + s * e)
            .collect()
    }

    /// `(t-μ)ᵀ Σ⁻¹ (t-μ) + ½ ln|Σ|` with `Σ = diag(σ²)`.
    pub fn nll(&self, target: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.std)
            .zip(target)
            .map(|((m, s), t)| {
                let r = t - m;
                r * r / (s * s) + s.ln()
            })
            .sum()
    }
}

pub fn sample(out: &GaussianOutput, eps: &[f64]) -> Vec<f64> {
    out.sample(eps)
}

pub fn nll_loss(out: &GaussianOutput, target: &[f64]) -> f64 {
    out.nll(target)
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn relu_inplace(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

/// Elements in a canonical order so sum pooling is bit-exact under
/// permutation of the input set.
fn canonical(set: &[Vec<f64>]) -> Vec<&[f64]> {
    let mut v: Vec<&[f64]> = set.iter().map(|e| e.as_slice()).collect();
    v.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub arch: Architecture,
    pub params: Vec<f64>,
}

impl Network {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let layout = arch.layout();
        let mut params = vec![0.0; layout.total];
        let layers = layout.inner_a.iter().chain(&layout.inner_b).chain(&layout.outer);
        for d in layers {
            let bound = (6.0 / (d.input + d.output) as f64).sqrt();
            for w in &mut params[d.offset..d.offset + d.input * d.output] {
                *w = rng.random_range(-bound..=bound);
            }
        }
        Network { arch, params }
    }

    pub fn zeros(arch: Architecture) -> Self {
        Network {
            params: vec![0.0; arch.parameter_count()],
            arch,
        }
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.parameter_count() {
            return Err(Error::Dimension {
                what: "network parameters",
                expected: arch.parameter_count(),
                got: params.len(),
            });
        }
        Ok(Network { arch, params })
    }

    /// Round every parameter to the nearest `f32`, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        self.params.iter_mut().for_each(|p| *p = *p as f32 as f64);
    }

    fn check_input(&self, x: &NetInput) -> Result<()> {
        if x.features.len() != self.arch.self_dim {
            return Err(Error::Dimension {
                what: "network features",
                expected: self.arch.self_dim,
                got: x.features.len(),
            });
        }
        for e in x.set_a.iter().chain(&x.set_b) {
            if e.len() != self.arch.element_dim {
                return Err(Error::Dimension {
                    what: "set element",
                    expected: self.arch.element_dim,
                    got: e.len(),
                });
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &NetInput) -> Result<GaussianOutput> {
        self.check_input(x)?;
        let mut scratch = Scratch::new(&self.arch);
        Ok(self.forward_unchecked(x, &mut scratch))
    }

    fn encode(&self, enc: &[Dense; 2], set: &[&[f64]], h: &mut [f64], e: &mut [f64], sum: &mut [f64]) {
        sum.iter_mut().for_each(|v| *v = 0.0);
        for el in set {
            enc[0].apply(&self.params, el, h);
            relu_inplace(h);
            enc[1].apply(&self.params, h, e);
            sum.iter_mut().zip(e.iter()).for_each(|(s, v)| *s += v);
        }
    }

    fn forward_unchecked(&self, x: &NetInput, s: &mut Scratch) -> GaussianOutput {
        let l = self.arch.layout();
        let (sd, emb) = (self.arch.self_dim, self.arch.embed);
        let set_a = canonical(&x.set_a);
        let set_b = canonical(&x.set_b);
        s.outer_in[..sd].copy_from_slice(&x.features);
        {
            let (_, rest) = s.outer_in.split_at_mut(sd);
            let (ea, eb) = rest.split_at_mut(emb);
            self.encode(&l.inner_a, &set_a, &mut s.h_inner, &mut s.e_inner, ea);
            self.encode(&l.inner_b, &set_b, &mut s.h_inner, &mut s.e_inner, eb);
        }
        l.outer[0].apply(&self.params, &s.outer_in, &mut s.h_outer);
        relu_inplace(&mut s.h_outer);
        l.outer[1].apply(&self.params, &s.h_outer, &mut s.out);
        let k = self.arch.out_dim;
        GaussianOutput {
            mean: s.out[..k].to_vec(),
            std: s.out[k..].iter().map(|&r| softplus(r) + SIGMA_FLOOR).collect(),
        }
    }

    /// Add the gradient of one sample's loss into `grad`; returns the loss.
    fn accumulate(&self, x: &NetInput, target: &[f64], grad: &mut [f64], s: &mut Scratch) -> f64 {
        let l = self.arch.layout();
        let (sd, emb, k) = (self.arch.self_dim, self.arch.embed, self.arch.out_dim);
        let out = self.forward_unchecked(x, s);
        let loss = out.nll(target);

        // dL/d(output layer)
        for c in 0..k {
            let (m, sig, t) = (out.mean[c], out.std[c], target[c]);
            let r = t - m;
            s.d_out[c] = -2.0 * r / (sig * sig);
            let d_sigma = -2.0 * r * r / (sig * sig * sig) + 1.0 / sig;
            s.d_out[k + c] = d_sigma * sigmoid(s.out[k + c]);
        }
        l.outer[1].backward(&self.params, grad, &s.h_outer, &s.d_out, Some(&mut s.d_h_outer));
        for (d, h) in s.d_h_outer.iter_mut().zip(&s.h_outer) {
            if *h <= 0.0 {
                *d = 0.0;
            }
        }
        l.outer[0].backward(&self.params, grad, &s.outer_in, &s.d_h_outer, Some(&mut s.d_outer_in));

        let sets = [(&l.inner_a, &x.set_a), (&l.inner_b, &x.set_b)];
        for (idx, (enc, set)) in sets.into_iter().enumerate() {
            let d_emb = &s.d_outer_in[sd + idx * emb..sd + (idx + 1) * emb];
            for el in canonical(set) {
                enc[0].apply(&self.params, el, &mut s.h_inner);
                relu_inplace(&mut s.h_inner);
                enc[1].backward(&self.params, grad, &s.h_inner, d_emb, Some(&mut s.d_h_inner));
                for (d, h) in s.d_h_inner.iter_mut().zip(&s.h_inner) {
                    if *h <= 0.0 {
                        *d = 0.0;
                    }
                }
                enc[0].backward(&self.params, grad, el, &s.d_h_inner, None);
            }
        }
        loss
    }
}

/// Reusable activation buffers for one forward/backward pass.
struct Scratch {
    h_inner: Vec<f64>,
    e_inner: Vec<f64>,
    outer_in: Vec<f64>,
    h_outer: Vec<f64>,
    out: Vec<f64>,
    d_out: Vec<f64>,
    d_h_outer: Vec<f64>,
    d_outer_in: Vec<f64>,
    d_h_inner: Vec<f64>,
}

impl Scratch {
    fn new(a: &Architecture) -> Self {
        Scratch {
            h_inner: vec![0.0; a.hidden],
            e_inner: vec![0.0; a.embed],
            outer_in: vec![0.0; a.self_dim + 2 * a.embed],
            h_outer: vec![0.0; a.hidden],
            out: vec![0.0; 2 * a.out_dim],
            d_out: vec![0.0; 2 * a.out_dim],
            d_h_outer: vec![0.0; a.hidden],
            d_outer_in: vec![0.0; a.self_dim + 2 * a.embed],
            d_h_inner: vec![0.0; a.hidden],
        }
    }
}

/// One (input, target) pair with the seed of the game it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub input: NetInput,
    pub target: Vec<f64>,
    pub source_seed: u64,
}

const GRAD_CHUNK: usize = 64;

/// Exact gradient of the mean loss over `batch`, plus that mean loss.
///
/// Samples are processed in fixed-size chunks whose partial sums are
/// combined in order, so the result does not depend on thread count.
pub fn gradient(net: &Network, batch: &[TrainingSample]) -> Result<(Vec<f64>, f64)> {
    use rayon::prelude::*;
    if batch.is_empty() {
        return Err(Error::contract("gradient of an empty batch"));
    }
    for s in batch {
        net.check_input(&s.input)?;
        if s.target.len() != net.arch.out_dim {
            return Err(Error::Dimension {
                what: "training target",
                expected: net.arch.out_dim,
                got: s.target.len(),
            });
        }
    }
    let n = net.params.len();
    let partials: Vec<(Vec<f64>, f64)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = vec![0.0; n];
            let mut scratch = Scratch::new(&net.arch);
            let loss = chunk
                .iter()
                .map(|s| net.accumulate(&s.input, &s.target, &mut g, &mut scratch))
                .sum::<f64>();
            (g, loss)
        })
        .collect();
    let mut grad = vec![0.0; n];
    let mut loss = 0.0;
    for (g, l) in partials {
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        loss += l;
    }
    let inv = 1.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok((grad, loss * inv))
}

/// Mean loss over a dataset (no gradient).
pub fn mean_loss(net: &Network, data: &[TrainingSample]) -> Result<f64> {
    let mut total = 0.0;
    for s in data {
        total += net.forward(&s.input)?.nll(&s.target);
    }
    Ok(total / data.len().max(1) as f64)
}
