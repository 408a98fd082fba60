//! A synthetic ground-truth oracle. The gap of `(f, c)` is
//! `max(0, 1 − σ(w·(f, c) + b) + ε)` with `ε ~ N(0, noise_std²)`, or `+∞`
//! with probability `inf_probability`. The random draws come from a stream
//! keyed by the seed and the exact bits of `f` and `c`, so the oracle is a
//! pure function of its arguments.

use confsearch_core::config_space::Configuration;
use confsearch_core::logreg::sigmoid;
use confsearch_core::seed::{mix64, rng};
use confsearch_core::Error as CoreError;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Length `t + s`: feature weights first, then configuration bits.
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: f64,
    pub noise_std: f64,
    pub inf_probability: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_weights.iter().any(|w| !w.is_finite()) || !self.hidden_bias.is_finite() {
            return Err(CoreError::Argument("hidden weights must be finite".into()).into());
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(CoreError::Argument("noise_std must be nonnegative".into()).into());
        }
        if !(0.0..1.0).contains(&self.inf_probability) {
            return Err(CoreError::Argument("inf_probability must lie in [0, 1)".into()).into());
        }
        Ok(())
    }

    /// Noise-free score `w·(f, c) + b`.
    pub fn score(&self, f: &[f64], c: &Configuration) -> Result<f64> {
        let m = f.len() + c.len();
        if m != self.hidden_weights.len() {
            return Err(CoreError::Dimension {
                expected: self.hidden_weights.len(),
                found: m,
            }
            .into());
        }
        let x = f.iter().copied().chain(c.to_f64());
        Ok(self.hidden_weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.hidden_bias)
    }

    /// Noise-free gap `1 − σ(score)`.
    pub fn expected_gap(&self, f: &[f64], c: &Configuration) -> Result<f64> {
        Ok(1.0 - sigmoid(self.score(f, c)?))
    }

    fn stream_key(&self, f: &[f64], c: &Configuration) -> u64 {
        let mut h = mix64(self.seed);
        for v in f {
            h = mix64(h ^ v.to_bits());
        }
        h = mix64(h ^ 0xC0FF_EE00_u64.wrapping_add(c.len() as u64));
        for &b in c.bits() {
            h = mix64(h ^ u64::from(b));
        }
        h
    }
}

pub fn synthetic_performance(spec: &SyntheticSpec, f: &[f64], c: &Configuration) -> Result<f64> {
    spec.validate()?;
    let mean = spec.expected_gap(f, c)?;
    let mut stream = rng(spec.stream_key(f, c));
    let u: f64 = stream.random();
    let eps: f64 = StandardNormal.sample(&mut stream);
    if u < spec.inf_probability {
        return Ok(f64::INFINITY);
    }
    Ok((mean + spec.noise_std * eps).max(0.0))
}
