//! Deterministic numeric kernels shared by the scorers.
//!
//! Everything here is pure given explicit state. The generator is a fixed
//! algorithm (xorshift64\* seeded through splitmix64) so that a seed means the
//! same stream on every platform and in every port of this code.

use crate::{Error, Result};

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const XORSHIFT_STAR_MULT: u64 = 0x2545_F491_4F6C_DD1D;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded pseudo-random generator: xorshift64\* whose state is initialised by
/// one splitmix64 draw from the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
    spare_gaussian: Option<u64>,
}

impl Rng {
    pub fn seeded(seed: u64) -> Self {
        let mut s = seed;
        let mut state = splitmix64(&mut s);
        if state == 0 {
            // xorshift has an all-zero fixed point
            state = SPLITMIX_GAMMA;
        }
        Rng {
            state,
            spare_gaussian: None,
        }
    }

    /// Independent stream for a sub-task (for example one synthetic user),
    /// derived by mixing `stream` into `seed`.
    pub fn derived(seed: u64, stream: u64) -> Self {
        let mut s = seed ^ stream.wrapping_mul(SPLITMIX_GAMMA);
        let mixed = splitmix64(&mut s);
        Rng::seeded(mixed)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(XORSHIFT_STAR_MULT)
    }

    /// Uniform real in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. Rejection sampling removes modulo bias.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Standard normal draw via Box–Muller on the uniform stream.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(bits) = self.spare_gaussian.take() {
            return f64::from_bits(bits);
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_gaussian = Some((radius * angle.sin()).to_bits());
        radius * angle.cos()
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment accumulators for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            config,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    ///
    /// The gradient is validated before anything is touched; on a non-finite
    /// entry the error names the offending flat index and neither the
    /// parameters nor the state change.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::Config(format!(
                "adam shape mismatch: params {}, grads {}, state {}",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient {
                name: format!("[{i}]"),
            });
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let exp = i32::try_from(self.t).unwrap_or(i32::MAX);
        let correction1 = 1.0 - beta1.powi(exp);
        let correction2 = 1.0 - beta2.powi(exp);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Full softmax cross-entropy. Writes `softmax(logits) - onehot(target)` into
/// `dlogits` and returns the loss `logsumexp(logits) - logits[target]`.
pub fn softmax_cross_entropy_into(
    logits: &[f64],
    target: usize,
    dlogits: &mut [f64],
) -> Result<f64> {
    if logits.is_empty() {
        return Err(Error::Empty("logits"));
    }
    if target >= logits.len() {
        return Err(Error::ItemOutOfRange {
            index: target,
            catalog_size: logits.len(),
        });
    }
    debug_assert_eq!(logits.len(), dlogits.len());
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite("logits".into()));
    }
    let mut sum = 0.0;
    for (d, &l) in dlogits.iter_mut().zip(logits) {
        let e = (l - max).exp();
        *d = e;
        sum += e;
    }
    for d in dlogits.iter_mut() {
        *d /= sum;
    }
    dlogits[target] -= 1.0;
    let loss = max + sum.ln() - logits[target];
    if !loss.is_finite() {
        return Err(Error::NonFinite("cross-entropy loss".into()));
    }
    Ok(loss.max(0.0))
}

pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; logits.len()];
    let loss = softmax_cross_entropy_into(logits, target, &mut grad)?;
    Ok((loss, grad))
}

/// Outcome of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_parameter: String,
    pub eps: f64,
    pub n_checked: usize,
}

/// Central-difference gradient of `f` at `params`.
pub fn numeric_gradient<F>(mut f: F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut x = params.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let plus = f(&x)?;
        x[i] = orig - eps;
        let minus = f(&x)?;
        x[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("objective at coordinate {i}")));
        }
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(grad)
}

/// Relative error used by the checker: `|a - n| / max(1e-12, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-12)
}

/// Checks `analytic` against central differences of `f`, coordinate by
/// coordinate. `name_of` maps a flat index to a readable parameter name.
pub fn finite_diff_check<F, N>(
    f: F,
    params: &[f64],
    analytic: &[f64],
    eps: f64,
    name_of: N,
) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
    N: Fn(usize) -> String,
{
    if analytic.len() != params.len() {
        return Err(Error::Config(format!(
            "gradient has {} entries, parameters {}",
            analytic.len(),
            params.len()
        )));
    }
    let numeric = numeric_gradient(f, params, eps)?;
    let mut worst = (0.0, 0usize);
    for (i, (&a, &n)) in analytic.iter().zip(&numeric).enumerate() {
        let err = relative_error(a, n);
        if err > worst.0 {
            worst = (err, i);
        }
    }
    Ok(GradCheckReport {
        max_relative_error: worst.0,
        worst_parameter: if params.is_empty() {
            String::new()
        } else {
            name_of(worst.1)
        },
        eps,
        n_checked: params.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::seeded(2024);
        let mut b = Rng::seeded(2024);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_seeds_diverge_quickly() {
        let mut a = Rng::seeded(1);
        let mut b = Rng::seeded(2);
        let differs = (0..10).any(|_| a.uniform() != b.uniform());
        assert!(differs);
    }

    #[test]
    fn uniform_mean_is_half() {
        let mut rng = Rng::seeded(7);
        let n = 1_000_000;
        let mean = (0..n).map(|_| rng.uniform()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }

    #[test]
    fn uniform_stays_in_unit_interval() {
        let mut rng = Rng::seeded(0);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = Rng::seeded(11);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn adam_first_step_is_lr() {
        let mut state = AdamState::new(1, AdamConfig::with_lr(1e-3));
        let mut p = [0.0];
        state.step(&mut p, &[1.0]).unwrap();
        assert!((p[0] + 0.000_999_999_99).abs() < 1e-12, "{}", p[0]);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut state = AdamState::new(3, AdamConfig::with_lr(1e-2));
        let mut p = [1.0, -2.0, 3.5];
        state.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, [1.0, -2.0, 3.5]);
    }

    // Scalar Adam written out longhand, kept apart from `AdamState::step`.
    fn scalar_adam(p: f64, grads: &[f64], lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
        let (mut p, mut m, mut v) = (p, 0.0f64, 0.0f64);
        for (t, g) in grads.iter().enumerate() {
            let t = (t + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            p -= lr * mh / (vh.sqrt() + eps);
        }
        p
    }

    #[test]
    fn adam_matches_scalar_oracle_bitwise() {
        let grads = [0.3, -1.7];
        let mut state = AdamState::new(2, AdamConfig::with_lr(0.01));
        let mut p = [0.5, -0.25];
        for &g in &grads {
            state.step(&mut p, &[g, g * 2.0]).unwrap();
        }
        let doubled: Vec<f64> = grads.iter().map(|g| g * 2.0).collect();
        assert_eq!(p[0].to_bits(), scalar_adam(0.5, &grads, 0.01).to_bits());
        assert_eq!(p[1].to_bits(), scalar_adam(-0.25, &doubled, 0.01).to_bits());
    }

    #[test]
    fn adam_odd_symmetry_at_first_step() {
        let cfg = AdamConfig::with_lr(0.05);
        let mut a = [0.7, -0.1];
        let mut b = [-0.7, 0.1];
        AdamState::new(2, cfg).step(&mut a, &[0.4, -2.0]).unwrap();
        AdamState::new(2, cfg).step(&mut b, &[-0.4, 2.0]).unwrap();
        assert_eq!(a[0], -b[0]);
        assert_eq!(a[1], -b[1]);
    }

    #[test]
    fn adam_rejects_non_finite_gradient_without_mutation() {
        let mut state = AdamState::new(2, AdamConfig::with_lr(0.1));
        let mut p = [1.0, 2.0];
        let err = state.step(&mut p, &[0.5, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { ref name } if name == "[1]"));
        assert_eq!(p, [1.0, 2.0]);
        assert_eq!(state.t, 0);
    }

    #[test]
    fn uniform_logits_give_log_n() {
        let (loss, grad) = softmax_cross_entropy(&[0.3; 7], 2).unwrap();
        assert!((loss - 7f64.ln()).abs() < 1e-12);
        assert!(grad.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_is_stable_for_large_logits() {
        let (loss, grad) = softmax_cross_entropy(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn cross_entropy_near_zero_when_target_dominates() {
        let logits = [40.0, 0.0, -3.0, -1.0];
        let (loss, _) = softmax_cross_entropy(&logits, 0).unwrap();
        assert!(loss < 1e-6);
    }

    #[test]
    fn cross_entropy_errors() {
        assert!(matches!(
            softmax_cross_entropy(&[], 0),
            Err(Error::Empty(_))
        ));
        assert!(softmax_cross_entropy(&[0.0, 1.0], 2).is_err());
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let mut rng = Rng::seeded(3);
        let logits: Vec<f64> = (0..10).map(|_| rng.gaussian() * 2.0).collect();
        let target = 4;
        let (_, analytic) = softmax_cross_entropy(&logits, target).unwrap();
        let report = finite_diff_check(
            |x| softmax_cross_entropy(x, target).map(|(l, _)| l),
            &logits,
            &analytic,
            1e-5,
            |i| format!("logit[{i}]"),
        )
        .unwrap();
        assert!(report.max_relative_error < 1e-6, "{report:?}");
    }

    #[test]
    fn numeric_gradient_of_square() {
        let g = numeric_gradient(|x| Ok(x[0] * x[0]), &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn numeric_gradient_exact_on_affine() {
        let f = |x: &[f64]| Ok(2.5 * x[0] - 4.0 * x[1] + 1.0);
        let g = numeric_gradient(f, &[0.25, -1.5], 1e-5).unwrap();
        assert!((g[0] - 2.5).abs() < 1e-9);
        assert!((g[1] + 4.0).abs() < 1e-9);
    }

    #[test]
    fn finite_diff_flags_non_finite_objective() {
        let err = numeric_gradient(|x| Ok(x[0].ln()), &[0.0], 1e-5).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    proptest::proptest! {
        #[test]
        fn cross_entropy_nonnegative_and_gradient_sums_to_zero(
            logits in proptest::collection::vec(-50.0f64..50.0, 1..40),
            pick in 0usize..1000,
        ) {
            let target = pick % logits.len();
            let (loss, grad) = softmax_cross_entropy(&logits, target).unwrap();
            proptest::prop_assert!(loss >= 0.0);
            proptest::prop_assert!(grad.iter().sum::<f64>().abs() < 1e-9);
        }
    }
}
