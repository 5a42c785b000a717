//! Training objective recorded on a tape, batched over equal-length windows.
//!
//! Frame-level matrices are stacked time-major: row `t * B + b` holds frame
//! `t` of window `b`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::infer::subsets;
use super::params::*;
use super::{AttentionMode, ModelError, ModelParams};
use crate::autodiff::{Axis, NodeId, Tape, Tensor};
use crate::synth::MultiViewSequence;

/// Equal-length windows with their reparameterisation noise.
#[derive(Clone, Debug)]
pub struct WindowBatch {
    /// `[view][t]`, each `B x D_v`.
    inputs: Vec<Vec<Tensor>>,
    /// `[b][t]`
    labels: Vec<Vec<usize>>,
    /// `TB x d`
    noise: Tensor,
}

impl WindowBatch {
    pub fn new(windows: &[MultiViewSequence], noise: Tensor) -> Result<Self, ModelError> {
        let first = windows.first().ok_or(ModelError::EmptyDataset)?;
        let (b, t) = (windows.len(), first.len());
        if t == 0 {
            return Err(ModelError::InconsistentViews("empty window".into()));
        }
        if let Some(w) = windows.iter().find(|w| w.len() != t || w.views.len() != first.views.len()) {
            return Err(ModelError::InconsistentViews(format!(
                "window {} does not match the first window's shape",
                w.id
            )));
        }
        if noise.rows() != t * b {
            return Err(ModelError::DimMismatch {
                what: "noise rows".into(),
                expected: t * b,
                got: noise.rows(),
            });
        }
        let inputs = (0..first.views.len())
            .map(|v| {
                let d = first.views[v].cols;
                (0..t)
                    .map(|s| {
                        let mut data = Vec::with_capacity(b * d);
                        for w in windows {
                            data.extend_from_slice(w.views[v].row(s));
                        }
                        Tensor::matrix(b, d, data)
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            inputs,
            labels: windows.iter().map(|w| w.labels.clone()).collect(),
            noise,
        })
    }

    /// Batch with fresh standard-normal noise.
    pub fn sampled<R: Rng + ?Sized>(
        windows: &[MultiViewSequence],
        latent_dim: usize,
        rng: &mut R,
    ) -> Result<Self, ModelError> {
        let rows = windows.len() * windows.first().map_or(0, MultiViewSequence::len);
        let data = (0..rows * latent_dim).map(|_| rng.sample(StandardNormal)).collect();
        Self::new(windows, Tensor::matrix(rows, latent_dim, data)?)
    }

    pub fn batch_size(&self) -> usize {
        self.labels.len()
    }

    pub fn frames(&self) -> usize {
        self.labels[0].len()
    }
}

/// Per-frame averages making up the objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms {
    /// `ll_term + lambda * elbo_term`
    pub loss: f64,
    /// Negative chain log-likelihood per frame.
    pub ll_term: f64,
    /// Negative ELBO per frame.
    pub elbo_term: f64,
}

/// The recorded objective with handles to its parameter leaves.
pub struct BatchLoss {
    pub tape: Tape,
    pub params: Vec<NodeId>,
    pub loss: NodeId,
    /// `TB x N` unary scores.
    pub unaries: NodeId,
    pub terms: LossTerms,
}

impl BatchLoss {
    pub fn build(params: &ModelParams, batch: &WindowBatch) -> Result<Self, ModelError> {
        Builder::new(params, batch).run()
    }

    /// Gradient for every parameter block, in block order.
    pub fn gradients(&self) -> Result<Vec<Tensor>, ModelError> {
        let mut g = self.tape.backward(self.loss)?;
        Ok(self.params.iter().map(|&id| g.take(id)).collect())
    }
}

struct Builder<'a> {
    params: &'a ModelParams,
    batch: &'a WindowBatch,
    tape: Tape,
    ids: Vec<NodeId>,
}

impl<'a> Builder<'a> {
    fn new(params: &'a ModelParams, batch: &'a WindowBatch) -> Self {
        let mut tape = Tape::new();
        let ids = params.blocks.iter().map(|b| tape.param(b.value.clone())).collect();
        Self {
            params,
            batch,
            tape,
            ids,
        }
    }

    fn view(&self, v: usize, which: usize) -> NodeId {
        self.ids[v * VIEW_BLOCKS.len() + which]
    }

    fn tail(&self, k: usize) -> NodeId {
        self.ids[self.params.config.views * VIEW_BLOCKS.len() + k]
    }

    fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId, ModelError> {
        let k = self.tape.constant(Tensor::scalar(c));
        Ok(self.tape.add(a, k)?)
    }

    fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId, ModelError> {
        let xw = self.tape.matmul(x, w)?;
        Ok(self.tape.add(xw, b)?)
    }

    /// Stacked hidden states `TB x H` of one view.
    fn encode(&mut self, v: usize) -> Result<NodeId, ModelError> {
        let (w, u, b) = (self.view(v, LSTM_W), self.view(v, LSTM_U), self.view(v, LSTM_B));
        let h_dim = self.params.config.hidden_dim;
        let mut state: Option<(NodeId, NodeId)> = None;
        let mut hs = Vec::with_capacity(self.batch.frames());
        for t in 0..self.batch.frames() {
            let x = self.tape.constant(self.batch.inputs[v][t].clone());
            let mut pre = self.tape.matmul(x, w)?;
            if let Some((h, _)) = state {
                let hu = self.tape.matmul(h, u)?;
                pre = self.tape.add(pre, hu)?;
            }
            pre = self.tape.add(pre, b)?;
            let mut gate = |k: usize| self.tape.slice(pre, Axis::Cols, k * h_dim, h_dim);
            let (i, f, o, g) = (gate(0)?, gate(1)?, gate(2)?, gate(3)?);
            let (i, f, o, g) = (
                self.tape.sigmoid(i),
                self.tape.sigmoid(f),
                self.tape.sigmoid(o),
                self.tape.tanh(g),
            );
            let mut c = self.tape.mul(i, g)?;
            if let Some((_, c_prev)) = state {
                let keep = self.tape.mul(f, c_prev)?;
                c = self.tape.add(keep, c)?;
            }
            let tc = self.tape.tanh(c);
            let h = self.tape.mul(tc, o)?;
            hs.push(h);
            state = Some((h, c));
        }
        Ok(self.tape.concat(&hs, Axis::Rows)?)
    }

    /// Mean and precision (`TB x d` each) of one view's expert.
    fn expert(&mut self, v: usize, h: NodeId) -> Result<(NodeId, NodeId), ModelError> {
        let d = self.params.config.latent_dim;
        let a = self.affine(h, self.view(v, INF_W1), self.view(v, INF_B1))?;
        let a = self.tape.tanh(a);
        let out = self.affine(a, self.view(v, INF_W2), self.view(v, INF_B2))?;
        let mu = self.tape.slice(out, Axis::Cols, 0, d)?;
        let raw = self.tape.slice(out, Axis::Cols, d, d)?;
        let sp = self.tape.softplus(raw);
        let one = self.tape.constant(Tensor::ones(&[1, d]));
        Ok((mu, self.tape.add(sp, one)?))
    }

    /// Fused mean and precision for one subset of views.
    fn fuse(
        &mut self,
        subset: &[usize],
        experts: &[(NodeId, NodeId)],
    ) -> Result<(NodeId, NodeId), ModelError> {
        if let [v] = subset {
            return Ok(experts[*v]);
        }
        let d = self.params.config.latent_dim;
        let mut num: Option<NodeId> = None;
        let mut prec: Option<NodeId> = None;
        for &v in subset {
            let (mu, p) = experts[v];
            let w = self.tape.mul(p, mu)?;
            num = Some(match num {
                Some(acc) => self.tape.add(acc, w)?,
                None => w,
            });
            prec = Some(match prec {
                Some(acc) => self.tape.add(acc, p)?,
                None => p,
            });
        }
        let prior = self
            .tape
            .constant(Tensor::filled(&[1, d], -(subset.len() as f64 - 1.0)));
        let prec = self.tape.add(prec.expect("nonempty subset"), prior)?;
        let inv = self.tape.reciprocal(prec);
        let gamma = self.tape.mul(num.expect("nonempty subset"), inv)?;
        Ok((gamma, prec))
    }

    /// `TB x N` unary scores from the fused posteriors.
    fn unaries(&mut self, fused: &[(NodeId, NodeId)]) -> Result<NodeId, ModelError> {
        let w = self.tail(2);
        let wt = self.tape.transpose(w);
        let projected: Vec<NodeId> = fused
            .iter()
            .map(|&(g, _)| self.tape.matmul(g, wt))
            .collect::<Result<_, _>>()?;
        let s = fused.len();
        match self.params.config.attention {
            AttentionMode::SharedOnly => Ok(projected[s - 1]),
            AttentionMode::Uniform => {
                let total = self.sum_nodes(&projected)?;
                Ok(self.tape.scale(total, 1.0 / s as f64))
            }
            AttentionMode::Learned => {
                let k = self.tape.matmul(self.tail(0), self.tail(1))?;
                let kt = self.tape.transpose(k);
                let scores: Vec<NodeId> = fused
                    .iter()
                    .map(|&(g, _)| self.tape.matmul(g, kt))
                    .collect::<Result<_, _>>()?;
                // softmax over subsets, shifted by a detached elementwise max
                let mut shift = self.tape.value(scores[0]).clone();
                for &r in &scores[1..] {
                    shift = shift.zip_map(self.tape.value(r), f64::max);
                }
                let shift = self.tape.constant(shift);
                let exps: Vec<NodeId> = scores
                    .iter()
                    .map(|&r| {
                        let c = self.tape.sub(r, shift)?;
                        Ok(self.tape.exp(c))
                    })
                    .collect::<Result<_, ModelError>>()?;
                let den = self.sum_nodes(&exps)?;
                let inv = self.tape.reciprocal(den);
                let mut terms = Vec::with_capacity(s);
                for (&e, &p) in exps.iter().zip(&projected) {
                    let ep = self.tape.mul(e, p)?;
                    terms.push(ep);
                }
                let num = self.sum_nodes(&terms)?;
                Ok(self.tape.mul(num, inv)?)
            }
        }
    }

    fn sum_nodes(&mut self, nodes: &[NodeId]) -> Result<NodeId, ModelError> {
        let mut acc = nodes[0];
        for &n in &nodes[1..] {
            acc = self.tape.add(acc, n)?;
        }
        Ok(acc)
    }

    /// Summed chain log-likelihood over the batch.
    fn chain_log_likelihood(&mut self, unaries: NodeId) -> Result<NodeId, ModelError> {
        let cfg = &self.params.config;
        let n = cfg.labels;
        let (b, t_len) = (self.batch.batch_size(), self.batch.frames());
        let trans = if cfg.transitions {
            self.tail(3)
        } else {
            self.tape.constant(Tensor::zeros(&[n, n]))
        };
        let bt = self.tape.transpose(trans);
        let columns: Vec<NodeId> = (0..n)
            .map(|j| self.tape.slice(bt, Axis::Rows, j, 1))
            .collect::<Result<_, _>>()?;
        let mut alpha = self.tape.slice(unaries, Axis::Rows, 0, b)?;
        for t in 1..t_len {
            let mut next = Vec::with_capacity(n);
            for &col in &columns {
                let s = self.tape.add(alpha, col)?;
                next.push(self.tape.log_sum_exp(s));
            }
            let next = self.tape.concat(&next, Axis::Cols)?;
            let u = self.tape.slice(unaries, Axis::Rows, t * b, b)?;
            alpha = self.tape.add(next, u)?;
        }
        let log_z = self.tape.log_sum_exp(alpha);
        let log_z = self.tape.sum(log_z);

        let mut onehot = Tensor::zeros(&[t_len * b, n]);
        let mut counts = Tensor::zeros(&[n, n]);
        for (bi, labels) in self.batch.labels.iter().enumerate() {
            for (t, &y) in labels.iter().enumerate() {
                if y >= n {
                    return Err(ModelError::LabelOutOfRange { label: y, labels: n });
                }
                onehot.set(t * b + bi, y, 1.0);
                if t > 0 {
                    let prev = labels[t - 1];
                    counts.set(prev, y, counts.get(prev, y) + 1.0);
                }
            }
        }
        let onehot = self.tape.constant(onehot);
        let counts = self.tape.constant(counts);
        let gold_u = self.tape.mul(unaries, onehot)?;
        let gold_u = self.tape.sum(gold_u);
        let gold_b = self.tape.mul(trans, counts)?;
        let gold_b = self.tape.sum(gold_b);
        let gold = self.tape.add(gold_u, gold_b)?;
        Ok(self.tape.sub(gold, log_z)?)
    }

    /// Summed single-sample ELBO of the all-view posterior.
    fn elbo(&mut self, hidden: &[NodeId], gamma: NodeId, prec: NodeId) -> Result<NodeId, ModelError> {
        let cfg = &self.params.config;
        let rows = self.batch.batch_size() * self.batch.frames();
        let (d, h_dim) = (cfg.latent_dim, cfg.hidden_dim);
        let log_prec = self.tape.log(prec);
        let half = self.tape.scale(log_prec, -0.5);
        let std = self.tape.exp(half);
        let noise = self.tape.constant(self.batch.noise.clone());
        let spread = self.tape.mul(std, noise)?;
        let z = self.tape.add(gamma, spread)?;

        let mut recon = Vec::with_capacity(hidden.len());
        for (v, &h) in hidden.iter().enumerate() {
            let a = self.affine(z, self.view(v, GEN_W1), self.view(v, GEN_B1))?;
            let a = self.tape.tanh(a);
            let dec = self.affine(a, self.view(v, GEN_W2), self.view(v, GEN_B2))?;
            let diff = self.tape.sub(h, dec)?;
            let sq = self.tape.square(diff);
            let sq = self.tape.sum(sq);
            recon.push(self.tape.scale(sq, -0.5));
        }
        let recon = self.sum_nodes(&recon)?;
        let recon = self.add_scalar(
            recon,
            -0.5 * (rows * h_dim * hidden.len()) as f64 * (2.0 * PI).ln(),
        )?;

        let lam = self.tape.reciprocal(prec);
        let tr = self.tape.sum(lam);
        let g2 = self.tape.square(gamma);
        let g2 = self.tape.sum(g2);
        let lp = self.tape.sum(log_prec);
        let kl = self.sum_nodes(&[tr, g2, lp])?;
        let kl = self.add_scalar(kl, -((rows * d) as f64))?;
        let kl = self.tape.scale(kl, 0.5);
        Ok(self.tape.sub(recon, kl)?)
    }

    fn run(mut self) -> Result<BatchLoss, ModelError> {
        let cfg = self.params.config.clone();
        if self.batch.inputs.len() != cfg.views {
            return Err(ModelError::DimMismatch {
                what: "view count".into(),
                expected: cfg.views,
                got: self.batch.inputs.len(),
            });
        }
        for (v, steps) in self.batch.inputs.iter().enumerate() {
            if steps[0].cols() != cfg.feature_dims[v] {
                return Err(ModelError::DimMismatch {
                    what: format!("view {v} features"),
                    expected: cfg.feature_dims[v],
                    got: steps[0].cols(),
                });
            }
        }
        let hidden: Vec<NodeId> = (0..cfg.views).map(|v| self.encode(v)).collect::<Result<_, _>>()?;
        let experts: Vec<(NodeId, NodeId)> = hidden
            .iter()
            .enumerate()
            .map(|(v, &h)| self.expert(v, h))
            .collect::<Result<_, _>>()?;
        let fused: Vec<(NodeId, NodeId)> = subsets(cfg.views)
            .iter()
            .map(|s| self.fuse(s, &experts))
            .collect::<Result<_, _>>()?;
        let unaries = self.unaries(&fused)?;
        let ll = self.chain_log_likelihood(unaries)?;
        let (gamma, prec) = *fused.last().expect("at least one view");
        let elbo = self.elbo(&hidden, gamma, prec)?;

        let frames = (self.batch.batch_size() * self.batch.frames()) as f64;
        let ll_term = self.tape.scale(ll, -1.0 / frames);
        let elbo_term = self.tape.scale(elbo, -1.0 / frames);
        let weighted = self.tape.scale(elbo_term, cfg.lambda_elbo);
        let loss = self.tape.add(ll_term, weighted)?;
        let scalar = |id: NodeId| self.tape.value(id).data()[0];
        let terms = LossTerms {
            loss: scalar(loss),
            ll_term: scalar(ll_term),
            elbo_term: scalar(elbo_term),
        };
        Ok(BatchLoss {
            tape: self.tape,
            params: self.ids,
            loss,
            unaries,
            terms,
        })
    }
}
