//! One causal self-attention block over item and position embeddings, with a
//! tied output layer.
//!
//! Positions are indexed by distance from the end of the prefix, so the most
//! recent item always carries position 0. Per position `t`:
//!
//! ```text
//! x_t = E[i_t] + P[L-1-t]
//! a_t = LN1(x_t);  q_t, k_t, v_t = Wq a_t, Wk a_t, Wv a_t
//! o_t = Σ_{u<=t} softmax_u(q_t·k_u / √d_h) v_u        (per head)
//! y_t = x_t + Wo o_t
//! z_t = y_t + W2 relu(W1 LN2(y_t) + b1) + b2
//! out_t = LNf(z_t)
//! ```
//!
//! Logits are `E out_{L-1}`.

use super::params::{
    apply_mask, axpy, dot, matvec, matvec_t_acc, outer_acc, Dropout, ParamSet, Tensor,
};
use crate::eval::{ScoreVector, Scorer};
use crate::numerics::{softmax_cross_entropy_into, Rng};
use crate::{Error, Result};

const EMB: usize = 0;
const POS: usize = 1;
const LN1_G: usize = 2;
const LN1_B: usize = 3;
const WQ: usize = 4;
const WK: usize = 5;
const WV: usize = 6;
const WO: usize = 7;
const LN2_G: usize = 8;
const LN2_B: usize = 9;
const W1: usize = 10;
const B1: usize = 11;
const W2: usize = 12;
const B2: usize = 13;
const LNF_G: usize = 14;
const LNF_B: usize = 15;

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttnDims {
    pub n_items: usize,
    pub dim: usize,
    pub ffn_dim: usize,
    pub n_heads: usize,
    pub max_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttnNet {
    dims: AttnDims,
    pub params: ParamSet,
}

struct LnCache {
    xhat: Vec<f64>,
    inv_std: f64,
}

fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64]) -> (Vec<f64>, LnCache) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv_std = 1.0 / (var + LN_EPS).sqrt();
    let xhat: Vec<f64> = x.iter().map(|v| (v - mean) * inv_std).collect();
    let out = xhat
        .iter()
        .zip(gain.iter().zip(bias))
        .map(|(h, (g, b))| g * h + b)
        .collect();
    (out, LnCache { xhat, inv_std })
}

/// Adds the input gradient to `dx` and the affine gradients to `dg`, `db`.
fn layer_norm_backward(
    dy: &[f64],
    cache: &LnCache,
    gain: &[f64],
    dg: &mut [f64],
    db: &mut [f64],
    dx: &mut [f64],
) {
    let n = dy.len() as f64;
    let mut dxhat = vec![0.0; dy.len()];
    for j in 0..dy.len() {
        dg[j] += dy[j] * cache.xhat[j];
        db[j] += dy[j];
        dxhat[j] = dy[j] * gain[j];
    }
    let mean_d = dxhat.iter().sum::<f64>() / n;
    let mean_dx = dot(&dxhat, &cache.xhat) / n;
    for j in 0..dy.len() {
        dx[j] += cache.inv_std * (dxhat[j] - mean_d - cache.xhat[j] * mean_dx);
    }
}

/// Per-sequence quantities shared by every query position.
struct Sequence {
    x: Vec<Vec<f64>>,
    emb_mask: Vec<Option<Vec<f64>>>,
    a: Vec<Vec<f64>>,
    ln1: Vec<LnCache>,
    k: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

/// Everything computed for one query position.
struct Query {
    t: usize,
    q: Vec<f64>,
    /// `[head][u]` for `u <= t`.
    weights: Vec<Vec<f64>>,
    o: Vec<f64>,
    attn_mask: Option<Vec<f64>>,
    ln2: LnCache,
    b: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
    ffn_mask: Option<Vec<f64>>,
    lnf: LnCache,
    out: Vec<f64>,
}

impl AttnNet {
    pub fn template(dims: AttnDims) -> ParamSet {
        let AttnDims {
            n_items,
            dim: d,
            ffn_dim: f,
            max_len,
            ..
        } = dims;
        ParamSet::new(vec![
            Tensor::zeros("item_emb", &[n_items, d]),
            Tensor::zeros("pos_emb", &[max_len, d]),
            Tensor::zeros("ln1_gain", &[d]),
            Tensor::zeros("ln1_bias", &[d]),
            Tensor::zeros("w_q", &[d, d]),
            Tensor::zeros("w_k", &[d, d]),
            Tensor::zeros("w_v", &[d, d]),
            Tensor::zeros("w_o", &[d, d]),
            Tensor::zeros("ln2_gain", &[d]),
            Tensor::zeros("ln2_bias", &[d]),
            Tensor::zeros("ffn_w1", &[f, d]),
            Tensor::zeros("ffn_b1", &[f]),
            Tensor::zeros("ffn_w2", &[d, f]),
            Tensor::zeros("ffn_b2", &[d]),
            Tensor::zeros("lnf_gain", &[d]),
            Tensor::zeros("lnf_bias", &[d]),
        ])
    }

    pub fn init(dims: AttnDims, rng: &mut Rng) -> Self {
        let AttnDims {
            n_items,
            dim: d,
            ffn_dim: f,
            max_len,
            ..
        } = dims;
        let sd = 1.0 / (d as f64).sqrt();
        let sf = 1.0 / (f as f64).sqrt();
        let params = ParamSet::new(vec![
            Tensor::gaussian("item_emb", &[n_items, d], sd, rng),
            Tensor::gaussian("pos_emb", &[max_len, d], sd, rng),
            Tensor::filled("ln1_gain", &[d], 1.0),
            Tensor::zeros("ln1_bias", &[d]),
            Tensor::gaussian("w_q", &[d, d], sd, rng),
            Tensor::gaussian("w_k", &[d, d], sd, rng),
            Tensor::gaussian("w_v", &[d, d], sd, rng),
            Tensor::gaussian("w_o", &[d, d], sd, rng),
            Tensor::filled("ln2_gain", &[d], 1.0),
            Tensor::zeros("ln2_bias", &[d]),
            Tensor::gaussian("ffn_w1", &[f, d], sd, rng),
            Tensor::zeros("ffn_b1", &[f]),
            Tensor::gaussian("ffn_w2", &[d, f], sf, rng),
            Tensor::zeros("ffn_b2", &[d]),
            Tensor::filled("lnf_gain", &[d], 1.0),
            Tensor::zeros("lnf_bias", &[d]),
        ]);
        AttnNet { dims, params }
    }

    pub fn from_params(dims: AttnDims, params: ParamSet) -> Result<Self> {
        let template = Self::template(dims);
        let shapes_match = template.tensors.len() == params.tensors.len()
            && template
                .tensors
                .iter()
                .zip(&params.tensors)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape);
        if !shapes_match || !dims.dim.is_multiple_of(dims.n_heads) {
            return Err(Error::Data(
                "attention parameters do not match the template".into(),
            ));
        }
        Ok(AttnNet { dims, params })
    }

    pub fn dims(&self) -> AttnDims {
        self.dims
    }

    fn t(&self, i: usize) -> &[f64] {
        &self.params.tensors[i].data
    }

    fn row(&self, tensor: usize, r: usize) -> &[f64] {
        let d = self.dims.dim;
        &self.t(tensor)[r * d..(r + 1) * d]
    }

    fn check_prefix(&self, prefix: &[usize]) -> Result<()> {
        if prefix.is_empty() {
            return Err(Error::Empty("prefix"));
        }
        if prefix.len() > self.dims.max_len {
            return Err(Error::PrefixTooLong {
                len: prefix.len(),
                max_len: self.dims.max_len,
            });
        }
        match prefix.iter().find(|&&i| i >= self.dims.n_items) {
            Some(&index) => Err(Error::ItemOutOfRange {
                index,
                catalog_size: self.dims.n_items,
            }),
            None => Ok(()),
        }
    }

    fn encode(&self, prefix: &[usize], mut dropout: Option<&mut Dropout>) -> Sequence {
        let d = self.dims.dim;
        let len = prefix.len();
        let mut seq = Sequence {
            x: Vec::with_capacity(len),
            emb_mask: Vec::with_capacity(len),
            a: Vec::with_capacity(len),
            ln1: Vec::with_capacity(len),
            k: Vec::with_capacity(len),
            v: Vec::with_capacity(len),
        };
        for (t, &item) in prefix.iter().enumerate() {
            let mut x = self.row(EMB, item).to_vec();
            axpy(1.0, self.row(POS, len - 1 - t), &mut x);
            let mask = dropout.as_mut().map(|dr| dr.mask(d));
            apply_mask(&mut x, mask.as_deref());
            let (a, ln) = layer_norm(&x, self.t(LN1_G), self.t(LN1_B));
            let mut k = vec![0.0; d];
            let mut v = vec![0.0; d];
            matvec(self.t(WK), &a, &mut k);
            matvec(self.t(WV), &a, &mut v);
            seq.x.push(x);
            seq.emb_mask.push(mask);
            seq.a.push(a);
            seq.ln1.push(ln);
            seq.k.push(k);
            seq.v.push(v);
        }
        seq
    }

    fn query(&self, seq: &Sequence, t: usize, mut dropout: Option<&mut Dropout>) -> Query {
        let AttnDims {
            dim: d,
            ffn_dim: f,
            n_heads,
            ..
        } = self.dims;
        let hd = d / n_heads;
        let scale = 1.0 / (hd as f64).sqrt();
        let mut q = vec![0.0; d];
        matvec(self.t(WQ), &seq.a[t], &mut q);
        let mut o = vec![0.0; d];
        let mut weights = Vec::with_capacity(n_heads);
        for h in 0..n_heads {
            let hs = h * hd..(h + 1) * hd;
            let logits: Vec<f64> = (0..=t)
                .map(|u| dot(&q[hs.clone()], &seq.k[u][hs.clone()]) * scale)
                .collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let sum: f64 = w.iter().sum();
            for x in &mut w {
                *x /= sum;
            }
            for (u, &wu) in w.iter().enumerate() {
                axpy(wu, &seq.v[u][hs.clone()], &mut o[hs.clone()]);
            }
            weights.push(w);
        }
        let mut m = vec![0.0; d];
        matvec(self.t(WO), &o, &mut m);
        let attn_mask = dropout.as_mut().map(|dr| dr.mask(d));
        apply_mask(&mut m, attn_mask.as_deref());
        let mut y = seq.x[t].clone();
        axpy(1.0, &m, &mut y);

        let (b, ln2) = layer_norm(&y, self.t(LN2_G), self.t(LN2_B));
        let mut pre = vec![0.0; f];
        matvec(self.t(W1), &b, &mut pre);
        axpy(1.0, self.t(B1), &mut pre);
        let hidden: Vec<f64> = pre.iter().map(|&p| p.max(0.0)).collect();
        let mut ffn = vec![0.0; d];
        matvec(self.t(W2), &hidden, &mut ffn);
        axpy(1.0, self.t(B2), &mut ffn);
        let ffn_mask = dropout.as_mut().map(|dr| dr.mask(d));
        apply_mask(&mut ffn, ffn_mask.as_deref());
        let mut z = y;
        axpy(1.0, &ffn, &mut z);
        let (out, lnf) = layer_norm(&z, self.t(LNF_G), self.t(LNF_B));
        Query {
            t,
            q,
            weights,
            o,
            attn_mask,
            ln2,
            b,
            pre,
            hidden,
            ffn_mask,
            lnf,
            out,
        }
    }

    /// Block output at every position of `prefix`, without dropout.
    pub fn representations(&self, prefix: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.check_prefix(prefix)?;
        let seq = self.encode(prefix, None);
        Ok((0..prefix.len())
            .map(|t| self.query(&seq, t, None).out)
            .collect())
    }

    /// Attention weights `[position][head][attended position]`.
    pub fn attention_weights(&self, prefix: &[usize]) -> Result<Vec<Vec<Vec<f64>>>> {
        self.check_prefix(prefix)?;
        let seq = self.encode(prefix, None);
        Ok((0..prefix.len())
            .map(|t| self.query(&seq, t, None).weights)
            .collect())
    }

    /// Concatenated head outputs (before the output projection) per position.
    pub fn attention_outputs(&self, prefix: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.check_prefix(prefix)?;
        let seq = self.encode(prefix, None);
        Ok((0..prefix.len())
            .map(|t| self.query(&seq, t, None).o)
            .collect())
    }

    /// Value projections `Wv LN1(x_t)` per position.
    pub fn values(&self, prefix: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.check_prefix(prefix)?;
        Ok(self.encode(prefix, None).v)
    }

    pub fn logits_for_hidden(&self, h: &[f64]) -> Vec<f64> {
        let mut logits = vec![0.0; self.dims.n_items];
        matvec(self.t(EMB), h, &mut logits);
        logits
    }

    pub fn logits(&self, prefix: &[usize]) -> Result<Vec<f64>> {
        self.check_prefix(prefix)?;
        let seq = self.encode(prefix, None);
        let last = self.query(&seq, prefix.len() - 1, None);
        Ok(self.logits_for_hidden(&last.out))
    }

    pub fn loss_and_grad(
        &self,
        prefix: &[usize],
        target: usize,
        mut dropout: Option<&mut Dropout>,
        grad: &mut ParamSet,
    ) -> Result<f64> {
        self.check_prefix(prefix)?;
        let AttnDims {
            dim: d,
            ffn_dim: f,
            n_heads,
            ..
        } = self.dims;
        let len = prefix.len();
        let hd = d / n_heads;
        let scale = 1.0 / (hd as f64).sqrt();
        let seq = self.encode(prefix, dropout.as_deref_mut());
        let qc = self.query(&seq, len - 1, dropout);
        let logits = self.logits_for_hidden(&qc.out);
        let mut dlogits = vec![0.0; self.dims.n_items];
        let loss = softmax_cross_entropy_into(&logits, target, &mut dlogits)?;

        let g = &mut grad.tensors;
        outer_acc(&mut g[EMB].data, &dlogits, &qc.out);
        let mut dout = vec![0.0; d];
        matvec_t_acc(self.t(EMB), &dlogits, &mut dout);

        // final layer norm
        let mut dz = vec![0.0; d];
        {
            let (dg, rest) = g.split_at_mut(LNF_B);
            layer_norm_backward(
                &dout,
                &qc.lnf,
                self.t(LNF_G),
                &mut dg[LNF_G].data,
                &mut rest[0].data,
                &mut dz,
            );
        }
        // feed-forward branch
        let mut dy = dz.clone();
        let mut dffn = dz;
        apply_mask(&mut dffn, qc.ffn_mask.as_deref());
        outer_acc(&mut g[W2].data, &dffn, &qc.hidden);
        axpy(1.0, &dffn, &mut g[B2].data);
        let mut dhidden = vec![0.0; f];
        matvec_t_acc(self.t(W2), &dffn, &mut dhidden);
        let dpre: Vec<f64> = dhidden
            .iter()
            .zip(&qc.pre)
            .map(|(&dh, &p)| if p > 0.0 { dh } else { 0.0 })
            .collect();
        outer_acc(&mut g[W1].data, &dpre, &qc.b);
        axpy(1.0, &dpre, &mut g[B1].data);
        let mut db = vec![0.0; d];
        matvec_t_acc(self.t(W1), &dpre, &mut db);
        {
            let (dg, rest) = g.split_at_mut(LN2_B);
            layer_norm_backward(
                &db,
                &qc.ln2,
                self.t(LN2_G),
                &mut dg[LN2_G].data,
                &mut rest[0].data,
                &mut dy,
            );
        }
        // attention branch
        let t = qc.t;
        let mut dx: Vec<Vec<f64>> = vec![vec![0.0; d]; len];
        axpy(1.0, &dy, &mut dx[t]);
        let mut dm = dy;
        apply_mask(&mut dm, qc.attn_mask.as_deref());
        outer_acc(&mut g[WO].data, &dm, &qc.o);
        let mut d_o = vec![0.0; d];
        matvec_t_acc(self.t(WO), &dm, &mut d_o);

        let mut dq = vec![0.0; d];
        let mut dk: Vec<Vec<f64>> = vec![vec![0.0; d]; t + 1];
        let mut dv: Vec<Vec<f64>> = vec![vec![0.0; d]; t + 1];
        for h in 0..n_heads {
            let hs = h * hd..(h + 1) * hd;
            let w = &qc.weights[h];
            let dw: Vec<f64> = (0..=t)
                .map(|u| dot(&d_o[hs.clone()], &seq.v[u][hs.clone()]))
                .collect();
            let inner: f64 = w.iter().zip(&dw).map(|(a, b)| a * b).sum();
            for u in 0..=t {
                axpy(w[u], &d_o[hs.clone()], &mut dv[u][hs.clone()]);
                let ds = w[u] * (dw[u] - inner) * scale;
                axpy(ds, &seq.k[u][hs.clone()], &mut dq[hs.clone()]);
                axpy(ds, &qc.q[hs.clone()], &mut dk[u][hs.clone()]);
            }
        }
        outer_acc(&mut g[WQ].data, &dq, &seq.a[t]);
        for u in 0..=t {
            outer_acc(&mut g[WK].data, &dk[u], &seq.a[u]);
            outer_acc(&mut g[WV].data, &dv[u], &seq.a[u]);
            let mut da = vec![0.0; d];
            matvec_t_acc(self.t(WK), &dk[u], &mut da);
            matvec_t_acc(self.t(WV), &dv[u], &mut da);
            if u == t {
                matvec_t_acc(self.t(WQ), &dq, &mut da);
            }
            let (dg, rest) = g.split_at_mut(LN1_B);
            layer_norm_backward(
                &da,
                &seq.ln1[u],
                self.t(LN1_G),
                &mut dg[LN1_G].data,
                &mut rest[0].data,
                &mut dx[u],
            );
        }
        // embeddings
        for (u, &item) in prefix.iter().enumerate() {
            let mut dxu = std::mem::take(&mut dx[u]);
            apply_mask(&mut dxu, seq.emb_mask[u].as_deref());
            axpy(1.0, &dxu, &mut g[EMB].data[item * d..(item + 1) * d]);
            let p = len - 1 - u;
            axpy(1.0, &dxu, &mut g[POS].data[p * d..(p + 1) * d]);
        }
        Ok(loss)
    }
}

impl Scorer for AttnNet {
    fn catalog_size(&self) -> usize {
        self.dims.n_items
    }

    fn score(&self, prefix: &[usize]) -> Result<ScoreVector> {
        let logits = self.logits(prefix)?;
        Ok(ScoreVector(logits.into_iter().map(|x| x as f32).collect()))
    }
}
