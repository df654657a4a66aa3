//! Synthetic interaction logs with a known amount of immediate repetition.
//!
//! Each session starts with a Zipf-distributed item. Every later step repeats
//! the previous item with probability `p_repeat` and otherwise draws a fresh
//! Zipf item different from the previous one. Recommending the last item is
//! therefore right with probability exactly `p_repeat`, which gives the
//! last-item hit rate a ground truth to be checked against.

use serde::{Deserialize, Serialize};

use crate::corpus::{Interaction, InteractionLog, MIN_SESSION_LEN};
use crate::numerics::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub session_len_min: usize,
    pub session_len_max: usize,
    pub p_repeat: f64,
    /// Popularity skew; 0 gives a uniform catalog.
    pub zipf_s: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 1000,
            n_items: 200,
            session_len_min: 5,
            session_len_max: 20,
            p_repeat: 0.3,
            zipf_s: 1.0,
            seed: crate::models::DEFAULT_SEED,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_users < 1 {
            return bad("n_users must be at least 1".into());
        }
        if self.n_items < 2 {
            return bad(format!("n_items must be at least 2, got {}", self.n_items));
        }
        if self.session_len_min < MIN_SESSION_LEN {
            return bad(format!(
                "session_len_min must be at least {MIN_SESSION_LEN}, got {}",
                self.session_len_min
            ));
        }
        if self.session_len_max < self.session_len_min {
            return bad("session_len_max is below session_len_min".into());
        }
        if !(0.0..=1.0).contains(&self.p_repeat) {
            return bad(format!("p_repeat {} outside [0, 1]", self.p_repeat));
        }
        if !(self.zipf_s >= 0.0) || !self.zipf_s.is_finite() {
            return bad(format!("zipf_s {} must be finite and >= 0", self.zipf_s));
        }
        Ok(())
    }
}

/// Inverse-CDF sampler over ranks `0..n` with weight `(rank + 1)^-s`.
#[derive(Debug, Clone)]
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(n: usize, s: f64) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (1..=n)
            .map(|r| {
                acc += (r as f64).powf(-s);
                acc
            })
            .collect();
        for c in &mut cdf {
            *c /= acc;
        }
        Zipf { cdf }
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        let u = rng.uniform();
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

/// Generates one session per user. Deterministic in the configuration; each
/// user draws from its own stream derived from the seed and the user index.
pub fn generate(config: &SynthConfig) -> Result<InteractionLog> {
    config.validate()?;
    let zipf = Zipf::new(config.n_items, config.zipf_s);
    let span = config.session_len_max - config.session_len_min + 1;
    let mut records = Vec::new();
    for u in 0..config.n_users {
        let mut rng = Rng::derived(config.seed, u as u64);
        let len = config.session_len_min + rng.below(span);
        let mut prev = zipf.sample(&mut rng);
        let mut t: i64 = 1_000_000_000;
        for step in 0..len {
            if step > 0 {
                if rng.uniform() >= config.p_repeat {
                    let mut next = zipf.sample(&mut rng);
                    while next == prev {
                        next = zipf.sample(&mut rng);
                    }
                    prev = next;
                }
                t += 1 + rng.below(3600) as i64;
            }
            records.push(Interaction {
                user: format!("u{u}"),
                item: format!("i{prev}"),
                timestamp: t,
            });
        }
    }
    Ok(InteractionLog { records })
}
