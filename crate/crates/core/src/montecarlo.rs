//! Monte Carlo estimates of the truncated normalization constant and
//! importance-weight degeneracy across truncation dimensions.
//!
//! Draw `j` reads its own ChaCha8 stream (`stream = j`) from word 0, and
//! mode `i` consumes the `i`-th pair of `u64`s of that stream through one
//! Box-Muller transform. A coefficient therefore depends only on
//! `(seed, j, i)`, and batches extend in both directions without moving
//! existing draws.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::assimilate::AssimilationProblem;
use crate::error::{Error, Result};

const MAX_DIM: u64 = 1 << 24;

/// `n` draws of the first `dim` prior coefficients, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    values: Vec<f64>,
}

impl SampleBatch {
    pub fn draw(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    /// Coefficient of mode `i` (1-based) in draw `j` (0-based).
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.dim + i - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Standard normal variates of one draw.
struct NormalStream(ChaCha8Rng);

impl NormalStream {
    fn new(base: &ChaCha8Rng, draw: u64) -> Self {
        let mut rng = base.clone();
        rng.set_stream(draw);
        NormalStream(rng)
    }

    fn next(&mut self) -> f64 {
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((self.0.next_u64() >> 11) + 1) as f64 * f64::EPSILON * 0.5;
        let u2 = (self.0.next_u64() >> 11) as f64 * f64::EPSILON * 0.5;
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Per-mode data for modes `1..=dim`.
struct Modes {
    mean: Vec<f64>,
    sd: Vec<f64>,
    data: Vec<f64>,
    noise: Vec<f64>,
}

impl Modes {
    fn new(prob: &AssimilationProblem, dim: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".to_string()));
        }
        if dim > MAX_DIM {
            return Err(Error::InvalidArgument(format!("dimension {dim} exceeds {MAX_DIM}")));
        }
        let n = dim as usize;
        Ok(Modes {
            mean: prob.prior_mean.dense(n),
            sd: (1..=dim).map(|i| prob.prior_spectrum.eigenvalue(i).sqrt()).collect(),
            data: prob.data.dense(n),
            noise: (1..=dim).map(|i| prob.noise_spectrum.eigenvalue(i)).collect(),
        })
    }

    /// Cumulative log-likelihood of one draw, recorded after each `marks` dimension.
    fn log_weights(&self, stream: &mut NormalStream, marks: &[usize], out: &mut Vec<f64>) {
        let mut acc = 0.0;
        let mut next = marks.iter().peekable();
        for i in 0..self.mean.len() {
            let x = self.mean[i] + self.sd[i] * stream.next();
            let d = self.data[i] - x;
            acc -= d * d / (2.0 * self.noise[i]);
            while next.peek().is_some_and(|&&m| m == i + 1) {
                out.push(acc);
                next.next();
            }
        }
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".to_string()));
    }
    Ok(())
}

pub fn sample_prior(prob: &AssimilationProblem, dim: u64, n: usize, seed: u64) -> Result<SampleBatch> {
    check_samples(n)?;
    let modes = Modes::new(prob, dim)?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|j| {
            let mut s = NormalStream::new(&base, j);
            modes.mean.iter().zip(&modes.sd).map(|(m, sd)| m + sd * s.next()).collect()
        })
        .collect();
    Ok(SampleBatch { dim: dim as usize, samples: n, seed, values: rows.concat() })
}

/// Log of a sample mean of weights, from log-weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogMeanEstimate {
    pub estimate: f64,
    /// Delta-method standard error of `estimate`; `inf` for a single draw.
    pub stderr: f64,
    pub ess: f64,
    pub mean_log_weight: f64,
}

fn log_mean(log_w: &[f64]) -> LogMeanEstimate {
    let n = log_w.len() as f64;
    let shift = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut s1, mut s2, mut sl) = (0.0, 0.0, 0.0);
    for &lw in log_w {
        let w = (lw - shift).exp();
        s1 += w;
        s2 += w * w;
        sl += lw;
    }
    let mean = s1 / n;
    let stderr = if log_w.len() < 2 {
        f64::INFINITY
    } else {
        let var = ((s2 - s1 * mean) / (n - 1.0)).max(0.0);
        var.sqrt() / (n.sqrt() * mean)
    };
    LogMeanEstimate {
        estimate: shift + mean.ln(),
        stderr,
        ess: (s1 * s1 / s2).clamp(1.0, n),
        mean_log_weight: sl / n,
    }
}

/// Log-likelihoods of `n` prior draws at each dimension in `marks`,
/// as `n` consecutive blocks of `marks.len()`.
fn weight_table(prob: &AssimilationProblem, marks: &[usize], n: usize, seed: u64) -> Result<Vec<f64>> {
    check_samples(n)?;
    let dim = *marks.last().expect("nonempty marks") as u64;
    let modes = Modes::new(prob, dim)?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::with_capacity(marks.len());
            modes.log_weights(&mut NormalStream::new(&base, j), marks, &mut out);
            out
        })
        .collect();
    Ok(rows.concat())
}

/// `log c_N(y)` estimated as the log of the mean likelihood of `n` prior
/// draws truncated to `dim` modes.
pub fn mc_log_constant(prob: &AssimilationProblem, dim: u64, n: usize, seed: u64) -> Result<LogMeanEstimate> {
    let dim = usize::try_from(dim).map_err(|_| Error::InvalidArgument(format!("dimension {dim} is too large")))?;
    Ok(log_mean(&weight_table(prob, &[dim], n, seed)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EssPoint {
    pub dim: u64,
    pub ess: f64,
    pub mean_log_weight: f64,
    /// Standard error of the log-mean weight at this dimension.
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssCurve {
    pub seed: u64,
    pub samples: usize,
    pub points: Vec<EssPoint>,
}

/// Effective sample size of the likelihood weights at each truncation.
/// All dimensions share the same draws.
pub fn ess_sweep(prob: &AssimilationProblem, dims: &[u64], n: usize, seed: u64) -> Result<EssCurve> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("at least one dimension is required".to_string()));
    }
    if dims[0] == 0 || dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("dimensions must be positive and strictly increasing".to_string()));
    }
    if dims[dims.len() - 1] > MAX_DIM {
        return Err(Error::InvalidArgument(format!("dimension exceeds {MAX_DIM}")));
    }
    let marks: Vec<usize> = dims.iter().map(|&d| d as usize).collect();
    let table = weight_table(prob, &marks, n, seed)?;
    let m = marks.len();
    let points = dims
        .iter()
        .enumerate()
        .map(|(c, &dim)| {
            let column: Vec<f64> = (0..n).map(|j| table[j * m + c]).collect();
            let e = log_mean(&column);
            EssPoint { dim, ess: e.ess, mean_log_weight: e.mean_log_weight, stderr: e.stderr }
        })
        .collect();
    Ok(EssCurve { seed, samples: n, points })
}
