//! Named parameter tensors and the dense kernels the networks share.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::numerics::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: &str, shape: &[usize]) -> Self {
        Tensor {
            name: name.to_string(),
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(name: &str, shape: &[usize], value: f64) -> Self {
        let mut t = Tensor::zeros(name, shape);
        t.data.fill(value);
        t
    }

    pub fn gaussian(name: &str, shape: &[usize], std: f64, rng: &mut Rng) -> Self {
        let mut t = Tensor::zeros(name, shape);
        for x in &mut t.data {
            *x = rng.gaussian() * std;
        }
        t
    }
}

/// Row-major `f32` tensor as stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// Ordered collection of named tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    pub tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new(tensors: Vec<Tensor>) -> Self {
        ParamSet { tensors }
    }

    pub fn zeros_like(&self) -> Self {
        ParamSet {
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::zeros(&t.name, &t.shape))
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for t in &mut self.tensors {
            t.data.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            for x in &mut t.data {
                *x *= factor;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors
            .iter()
            .flat_map(|t| t.data.iter().copied())
            .collect()
    }

    pub fn load_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.len(), "flat parameter length");
        let mut offset = 0;
        for t in &mut self.tensors {
            let n = t.data.len();
            t.data.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }

    /// Readable name of a flat coordinate, e.g. `w_hh[17]`.
    pub fn name_of_flat(&self, mut index: usize) -> String {
        for t in &self.tensors {
            if index < t.data.len() {
                return format!("{}[{index}]", t.name);
            }
            index -= t.data.len();
        }
        format!("<out of range {index}>")
    }

    pub fn to_stored(&self) -> BTreeMap<String, StoredTensor> {
        self.tensors
            .iter()
            .map(|t| {
                (
                    t.name.clone(),
                    StoredTensor {
                        shape: t.shape.clone(),
                        data: t.data.iter().map(|&x| x as f32).collect(),
                    },
                )
            })
            .collect()
    }

    /// Rebuilds tensors following `template`'s names and shapes.
    pub fn from_stored(
        template: &ParamSet,
        stored: &BTreeMap<String, StoredTensor>,
    ) -> Result<ParamSet> {
        let mut out = template.clone();
        for t in &mut out.tensors {
            let s = stored
                .get(&t.name)
                .ok_or_else(|| Error::Data(format!("checkpoint lacks tensor {:?}", t.name)))?;
            if s.shape != t.shape || s.data.len() != t.data.len() {
                return Err(Error::Data(format!(
                    "tensor {:?} has shape {:?}, expected {:?}",
                    t.name, s.shape, t.shape
                )));
            }
            if let Some(j) = s.data.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("{}[{j}] in checkpoint", t.name)));
            }
            for (dst, &src) in t.data.iter_mut().zip(&s.data) {
                *dst = f64::from(src);
            }
        }
        if stored.len() != out.tensors.len() {
            return Err(Error::Data(format!(
                "checkpoint has {} tensors, expected {}",
                stored.len(),
                out.tensors.len()
            )));
        }
        Ok(out)
    }
}

/// `out = W x` for row-major `W` of shape `(out.len(), x.len())`.
pub(crate) fn matvec(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o = dot(row, x);
    }
}

/// `out += Wᵀ y`.
pub(crate) fn matvec_t_acc(w: &[f64], y: &[f64], out: &mut [f64]) {
    let cols = out.len();
    debug_assert_eq!(w.len(), y.len() * cols);
    for (&yi, row) in y.iter().zip(w.chunks_exact(cols)) {
        if yi != 0.0 {
            axpy(yi, row, out);
        }
    }
}

/// `dw += y ⊗ x`.
pub(crate) fn outer_acc(dw: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    debug_assert_eq!(dw.len(), y.len() * cols);
    for (&yi, row) in y.iter().zip(dw.chunks_exact_mut(cols)) {
        if yi != 0.0 {
            axpy(yi, x, row);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Inverted dropout: sampled masks hold 0 or `1 / (1 - rate)`.
#[derive(Debug)]
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut Rng,
}

impl Dropout<'_> {
    pub fn mask(&mut self, len: usize) -> Vec<f64> {
        let keep = 1.0 / (1.0 - self.rate);
        (0..len)
            .map(|_| if self.rng.uniform() < self.rate { 0.0 } else { keep })
            .collect()
    }
}

pub(crate) fn apply_mask(x: &mut [f64], mask: Option<&[f64]>) {
    if let Some(m) = mask {
        for (xi, &mi) in x.iter_mut().zip(m) {
            *xi *= mi;
        }
    }
}
