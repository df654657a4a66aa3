//! Count-based scorers: global popularity and first-order transitions.

use crate::eval::{EvalCase, ScoreVector, Scorer};
use crate::{Error, Result};

/// Scores every item by how often it is a training target, whatever the
/// prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct PopModel {
    pub counts: Vec<f64>,
}

impl PopModel {
    pub fn fit(train: &[EvalCase], catalog_size: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let mut counts = vec![0.0; catalog_size];
        for c in train {
            *counts.get_mut(c.gt).ok_or(Error::ItemOutOfRange {
                index: c.gt,
                catalog_size,
            })? += 1.0;
        }
        Ok(PopModel { counts })
    }
}

impl Scorer for PopModel {
    fn catalog_size(&self) -> usize {
        self.counts.len()
    }

    fn score(&self, prefix: &[usize]) -> Result<ScoreVector> {
        if prefix.is_empty() {
            return Err(Error::Empty("prefix"));
        }
        Ok(ScoreVector(self.counts.iter().map(|&c| c as f32).collect()))
    }
}

/// Additively smoothed transition probabilities out of the last item:
/// `(C[last][j] + α) / (Σ_k C[last][k] + α·|I|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    catalog_size: usize,
    alpha: f64,
    /// CSR rows: transitions out of item `i` live in
    /// `cols[row_ptr[i]..row_ptr[i+1]]`, sorted by column.
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub counts: Vec<f64>,
}

impl MarkovModel {
    /// Counts one transition per training case, from the final prefix item to
    /// the target. Since training cases enumerate every position, this visits
    /// each consecutive pair of the training portion once.
    pub fn fit(train: &[EvalCase], catalog_size: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("markov alpha must be > 0, got {alpha}")));
        }
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(train.len());
        for c in train {
            for i in [c.last, c.gt] {
                if i >= catalog_size {
                    return Err(Error::ItemOutOfRange {
                        index: i,
                        catalog_size,
                    });
                }
            }
            pairs.push((c.last, c.gt));
        }
        pairs.sort_unstable();
        let mut row_ptr = vec![0usize; catalog_size + 1];
        let mut cols = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        let mut prev: Option<(usize, usize)> = None;
        for &(from, to) in &pairs {
            if prev == Some((from, to)) {
                *counts.last_mut().expect("previous pair pushed") += 1.0;
            } else {
                cols.push(to);
                counts.push(1.0);
                row_ptr[from + 1] += 1;
                prev = Some((from, to));
            }
        }
        for i in 0..catalog_size {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(MarkovModel {
            catalog_size,
            alpha,
            row_ptr,
            cols,
            counts,
        })
    }

    pub fn from_parts(
        catalog_size: usize,
        alpha: f64,
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        counts: Vec<f64>,
    ) -> Result<Self> {
        let consistent = row_ptr.len() == catalog_size + 1
            && row_ptr.first() == Some(&0)
            && row_ptr.windows(2).all(|w| w[0] <= w[1])
            && row_ptr.last() == Some(&cols.len())
            && cols.len() == counts.len()
            && cols.iter().all(|&c| c < catalog_size);
        if !consistent || !(alpha > 0.0) {
            return Err(Error::Data("inconsistent markov transition table".into()));
        }
        Ok(MarkovModel {
            catalog_size,
            alpha,
            row_ptr,
            cols,
            counts,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn probabilities(&self, last: usize) -> Result<Vec<f64>> {
        if last >= self.catalog_size {
            return Err(Error::ItemOutOfRange {
                index: last,
                catalog_size: self.catalog_size,
            });
        }
        let row = self.row_ptr[last]..self.row_ptr[last + 1];
        let total: f64 = self.counts[row.clone()].iter().sum();
        let denom = total + self.alpha * self.catalog_size as f64;
        let mut p = vec![self.alpha / denom; self.catalog_size];
        for (&j, &c) in self.cols[row.clone()].iter().zip(&self.counts[row]) {
            p[j] = (c + self.alpha) / denom;
        }
        Ok(p)
    }
}

impl Scorer for MarkovModel {
    fn catalog_size(&self) -> usize {
        self.catalog_size
    }

    fn score(&self, prefix: &[usize]) -> Result<ScoreVector> {
        let last = *prefix.last().ok_or(Error::Empty("prefix"))?;
        let p = self.probabilities(last)?;
        Ok(ScoreVector(p.into_iter().map(|x| x as f32).collect()))
    }
}
