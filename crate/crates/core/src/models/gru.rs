//! Single-layer GRU over item embeddings with a tied output layer.
//!
//! Gate layout follows the common convention: rows `[0, d)` of the stacked
//! weight matrices belong to the reset gate, `[d, 2d)` to the update gate and
//! `[2d, 3d)` to the candidate state.
//!
//! ```text
//! r  = σ(W_r x + b_r + U_r h + c_r)
//! z  = σ(W_z x + b_z + U_z h + c_z)
//! n  = tanh(W_n x + b_n + r ⊙ (U_n h + c_n))
//! h' = (1 - z) ⊙ n + z ⊙ h
//! ```
//!
//! The final hidden state is scored against every item embedding.

use super::params::{
    apply_mask, axpy, matvec, matvec_t_acc, outer_acc, sigmoid, Dropout, ParamSet, Tensor,
};
use crate::eval::{ScoreVector, Scorer};
use crate::numerics::{softmax_cross_entropy_into, Rng};
use crate::{Error, Result};

const EMB: usize = 0;
const W_IH: usize = 1;
const W_HH: usize = 2;
const B_IH: usize = 3;
const B_HH: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GruNet {
    n_items: usize,
    dim: usize,
    pub params: ParamSet,
}

struct Step {
    item: usize,
    x: Vec<f64>,
    mask: Option<Vec<f64>>,
    h_prev: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    gh_n: Vec<f64>,
}

impl GruNet {
    pub fn template(n_items: usize, dim: usize) -> ParamSet {
        ParamSet::new(vec![
            Tensor::zeros("item_emb", &[n_items, dim]),
            Tensor::zeros("w_ih", &[3 * dim, dim]),
            Tensor::zeros("w_hh", &[3 * dim, dim]),
            Tensor::zeros("b_ih", &[3 * dim]),
            Tensor::zeros("b_hh", &[3 * dim]),
        ])
    }

    pub fn init(n_items: usize, dim: usize, rng: &mut Rng) -> Self {
        let std = 1.0 / (dim as f64).sqrt();
        let params = ParamSet::new(vec![
            Tensor::gaussian("item_emb", &[n_items, dim], std, rng),
            Tensor::gaussian("w_ih", &[3 * dim, dim], std, rng),
            Tensor::gaussian("w_hh", &[3 * dim, dim], std, rng),
            Tensor::zeros("b_ih", &[3 * dim]),
            Tensor::zeros("b_hh", &[3 * dim]),
        ]);
        GruNet {
            n_items,
            dim,
            params,
        }
    }

    pub fn from_params(n_items: usize, dim: usize, params: ParamSet) -> Result<Self> {
        let template = Self::template(n_items, dim);
        let shapes_match = template.tensors.len() == params.tensors.len()
            && template
                .tensors
                .iter()
                .zip(&params.tensors)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape);
        if !shapes_match {
            return Err(Error::Data("GRU parameters do not match the template".into()));
        }
        Ok(GruNet {
            n_items,
            dim,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn t(&self, i: usize) -> &[f64] {
        &self.params.tensors[i].data
    }

    fn embedding(&self, item: usize) -> &[f64] {
        &self.t(EMB)[item * self.dim..(item + 1) * self.dim]
    }

    fn check_prefix(&self, prefix: &[usize]) -> Result<()> {
        if prefix.is_empty() {
            return Err(Error::Empty("prefix"));
        }
        match prefix.iter().find(|&&i| i >= self.n_items) {
            Some(&index) => Err(Error::ItemOutOfRange {
                index,
                catalog_size: self.n_items,
            }),
            None => Ok(()),
        }
    }

    fn run(&self, prefix: &[usize], mut dropout: Option<&mut Dropout>) -> (Vec<Step>, Vec<f64>) {
        let d = self.dim;
        let mut h = vec![0.0; d];
        let mut steps = Vec::with_capacity(prefix.len());
        let mut gi = vec![0.0; 3 * d];
        let mut gh = vec![0.0; 3 * d];
        for &item in prefix {
            let mut x = self.embedding(item).to_vec();
            let mask = dropout.as_deref_mut().map(|dr| dr.mask(d));
            apply_mask(&mut x, mask.as_deref());
            matvec(self.t(W_IH), &x, &mut gi);
            axpy(1.0, self.t(B_IH), &mut gi);
            matvec(self.t(W_HH), &h, &mut gh);
            axpy(1.0, self.t(B_HH), &mut gh);
            let mut r = vec![0.0; d];
            let mut z = vec![0.0; d];
            let mut n = vec![0.0; d];
            let mut next = vec![0.0; d];
            for j in 0..d {
                r[j] = sigmoid(gi[j] + gh[j]);
                z[j] = sigmoid(gi[d + j] + gh[d + j]);
                n[j] = (gi[2 * d + j] + r[j] * gh[2 * d + j]).tanh();
                next[j] = (1.0 - z[j]) * n[j] + z[j] * h[j];
            }
            let h_prev = std::mem::replace(&mut h, next);
            steps.push(Step {
                item,
                x,
                mask,
                h_prev,
                r,
                z,
                n,
                gh_n: gh[2 * d..].to_vec(),
            });
        }
        (steps, h)
    }

    /// Final hidden state for `prefix`, without dropout.
    pub fn hidden(&self, prefix: &[usize]) -> Result<Vec<f64>> {
        self.check_prefix(prefix)?;
        Ok(self.run(prefix, None).1)
    }

    /// Scores of every item against a given hidden state.
    pub fn logits_for_hidden(&self, h: &[f64]) -> Vec<f64> {
        let mut logits = vec![0.0; self.n_items];
        matvec(self.t(EMB), h, &mut logits);
        logits
    }

    pub fn logits(&self, prefix: &[usize]) -> Result<Vec<f64>> {
        Ok(self.logits_for_hidden(&self.hidden(prefix)?))
    }

    /// Cross-entropy of `target` given `prefix`; gradients are added to `grad`.
    pub fn loss_and_grad(
        &self,
        prefix: &[usize],
        target: usize,
        dropout: Option<&mut Dropout>,
        grad: &mut ParamSet,
    ) -> Result<f64> {
        self.check_prefix(prefix)?;
        let d = self.dim;
        let (steps, h) = self.run(prefix, dropout);
        let logits = self.logits_for_hidden(&h);
        let mut dlogits = vec![0.0; self.n_items];
        let loss = softmax_cross_entropy_into(&logits, target, &mut dlogits)?;

        let g = &mut grad.tensors;
        outer_acc(&mut g[EMB].data, &dlogits, &h);
        let mut dh = vec![0.0; d];
        matvec_t_acc(self.t(EMB), &dlogits, &mut dh);

        let mut dgi = vec![0.0; 3 * d];
        let mut dgh = vec![0.0; 3 * d];
        for step in steps.iter().rev() {
            let mut dh_prev = vec![0.0; d];
            for j in 0..d {
                let (r, z, n) = (step.r[j], step.z[j], step.n[j]);
                let dn = dh[j] * (1.0 - z);
                let dz = dh[j] * (step.h_prev[j] - n);
                dh_prev[j] = dh[j] * z;
                let dn_pre = dn * (1.0 - n * n);
                let dr = dn_pre * step.gh_n[j];
                let dr_pre = dr * r * (1.0 - r);
                let dz_pre = dz * z * (1.0 - z);
                dgi[j] = dr_pre;
                dgh[j] = dr_pre;
                dgi[d + j] = dz_pre;
                dgh[d + j] = dz_pre;
                dgi[2 * d + j] = dn_pre;
                dgh[2 * d + j] = dn_pre * r;
            }
            outer_acc(&mut g[W_IH].data, &dgi, &step.x);
            axpy(1.0, &dgi, &mut g[B_IH].data);
            outer_acc(&mut g[W_HH].data, &dgh, &step.h_prev);
            axpy(1.0, &dgh, &mut g[B_HH].data);
            matvec_t_acc(self.t(W_HH), &dgh, &mut dh_prev);

            let mut dx = vec![0.0; d];
            matvec_t_acc(self.t(W_IH), &dgi, &mut dx);
            apply_mask(&mut dx, step.mask.as_deref());
            axpy(
                1.0,
                &dx,
                &mut g[EMB].data[step.item * d..(step.item + 1) * d],
            );
            dh = dh_prev;
        }
        Ok(loss)
    }
}

impl Scorer for GruNet {
    fn catalog_size(&self) -> usize {
        self.n_items
    }

    fn score(&self, prefix: &[usize]) -> Result<ScoreVector> {
        let logits = self.logits(prefix)?;
        Ok(ScoreVector(logits.into_iter().map(|x| x as f32).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_diff_check;

    fn loss_at(net: &GruNet, flat: &[f64], prefix: &[usize], target: usize) -> Result<f64> {
        let mut probe = net.clone();
        probe.params.load_flat(flat);
        let mut scratch = probe.params.zeros_like();
        probe.loss_and_grad(prefix, target, None, &mut scratch)
    }

    #[test]
    fn zero_parameters_give_flat_logits() {
        let net = GruNet::from_params(4, 3, GruNet::template(4, 3)).unwrap();
        assert_eq!(net.logits(&[1, 2]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn invalid_index_is_rejected() {
        let net = GruNet::init(4, 3, &mut Rng::seeded(1));
        assert!(matches!(
            net.logits(&[1, 9]),
            Err(Error::ItemOutOfRange { index: 9, .. })
        ));
        assert!(net.logits(&[]).is_err());
    }

    #[test]
    fn history_matters_in_general() {
        let net = GruNet::init(5, 4, &mut Rng::seeded(2));
        assert_ne!(net.logits(&[0]).unwrap(), net.logits(&[1, 0]).unwrap());
    }

    #[test]
    fn saturated_update_gate_forgets_history() {
        // z -> 0 and no recurrent path into the candidate: h' = tanh(W_n x + b_n)
        let mut net = GruNet::init(5, 4, &mut Rng::seeded(3));
        let d = net.dim;
        net.params.tensors[B_IH].data[d..2 * d].fill(-60.0);
        let w_hh = &mut net.params.tensors[W_HH].data;
        w_hh[2 * d * d..].fill(0.0);
        net.params.tensors[B_HH].data[2 * d..].fill(0.0);
        let a = net.logits(&[0]).unwrap();
        let b = net.logits(&[1, 0]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbing_one_embedding_moves_one_logit_for_fixed_state() {
        let mut net = GruNet::init(6, 4, &mut Rng::seeded(4));
        let h = net.hidden(&[1, 2]).unwrap();
        let before = net.logits_for_hidden(&h);
        net.params.tensors[EMB].data[3 * 4 + 1] += 0.5;
        let after = net.logits_for_hidden(&h);
        for j in 0..6 {
            assert_eq!(before[j] == after[j], j != 3, "item {j}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in [11, 12, 13] {
            let net = GruNet::init(5, 4, &mut Rng::seeded(seed));
            let prefix = [0, 3, 1, 3];
            let mut grad = net.params.zeros_like();
            net.loss_and_grad(&prefix, 2, None, &mut grad).unwrap();
            let report = finite_diff_check(
                |x| loss_at(&net, x, &prefix, 2),
                &net.params.flatten(),
                &grad.flatten(),
                1e-5,
                |i| net.params.name_of_flat(i),
            )
            .unwrap();
            assert!(report.max_relative_error < 1e-4, "seed {seed}: {report:?}");
        }
    }
}
