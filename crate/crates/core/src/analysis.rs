//! Finite-field rate regions and Monte Carlo evaluation of Gaussian rates.
//!
//! Monte Carlo work is split into fixed-size chunks. Chunk `i` always draws
//! from stream `MonteCarlo(i)` of the seed and chunk moments are combined in
//! chunk order, so estimates do not depend on the number of worker threads.
//! The same seed reuses the same fading draws at every SNR point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{sample_cn, FiniteFieldNoiseModel};
use crate::error::{Error, Result};
use crate::rng::{Rng, SeedSequence, Stream};
use crate::scheduler::{effective_snr, sample_matched_pair, Quantizer};

/// Samples per Monte Carlo chunk.
pub const CHUNK: usize = 8192;

/// Rate tuples with `R_k + R_l <= C` for every pair of distinct users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    k: usize,
    cap: f64,
}

impl RateRegion {
    pub fn new(k: usize, cap: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewUsers(k));
        }
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "capacity must be positive (got {cap})"
            )));
        }
        Ok(Self { k, cap })
    }

    /// `C = log2 q - H(Z)`.
    pub fn from_noise(noise: &FiniteFieldNoiseModel, k: usize) -> Result<Self> {
        Self::new(k, f64::from(noise.field().modulus()).log2() - noise.entropy())
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    fn tol(&self) -> f64 {
        1e-12 * self.cap
    }

    fn check(&self, rates: &[f64]) -> Result<()> {
        if rates.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: rates.len(),
            });
        }
        if rates.iter().any(|r| r.is_nan() || *r < 0.0) {
            return Err(Error::NegativeRate);
        }
        Ok(())
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.k).flat_map(move |a| (a + 1..self.k).map(move |b| (a, b)))
    }

    pub fn contains(&self, rates: &[f64]) -> Result<bool> {
        self.check(rates)?;
        Ok(self.pairs().all(|(a, b)| rates[a] + rates[b] <= self.cap + self.tol()))
    }

    /// Pairs whose constraint is broken (0-based).
    pub fn violated_pairs(&self, rates: &[f64]) -> Result<Vec<(usize, usize)>> {
        self.check(rates)?;
        Ok(self
            .pairs()
            .filter(|&(a, b)| rates[a] + rates[b] > self.cap + self.tol())
            .collect())
    }

    /// Pairs whose constraint holds with equality (0-based).
    pub fn tight_pairs(&self, rates: &[f64]) -> Result<Vec<(usize, usize)>> {
        self.check(rates)?;
        Ok(self
            .pairs()
            .filter(|&(a, b)| (rates[a] + rates[b] - self.cap).abs() <= self.tol())
            .collect())
    }

    /// `min(1 - R1 / C, 1/2)`.
    pub fn beta(&self, r1: f64) -> f64 {
        (1.0 - r1 / self.cap).min(0.5)
    }

    /// Membership test for rates sorted in descending order:
    /// `R1 <= C` and `R_k <= beta C` for the rest.
    pub fn equivalent_form(&self, sorted: &[f64]) -> Result<bool> {
        self.check(sorted)?;
        if sorted.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Unsorted);
        }
        let r1 = sorted[0];
        let others = (self.cap - r1).min(0.5 * self.cap);
        Ok(r1 <= self.cap + self.tol() && sorted[1..].iter().all(|&r| r <= others + self.tol()))
    }

    /// Fraction `alpha` of time spent in the symmetric scheme so that user 1
    /// gets `R1` and every other user gets `C - R1`; the remaining time
    /// serves user 1 alone at rate `C`.
    pub fn timeshare_split(&self, r1: f64) -> Result<f64> {
        let (low, high) = (0.5 * self.cap, self.cap);
        if !(low - self.tol()..=high + self.tol()).contains(&r1) {
            return Err(Error::RateOutOfRange { rate: r1, low, high });
        }
        Ok((2.0 * (1.0 - r1 / self.cap)).clamp(0.0, 1.0))
    }
}

pub fn region_contains(region: &RateRegion, rates: &[f64]) -> Result<bool> {
    region.contains(rates)
}

pub fn equivalent_form(region: &RateRegion, sorted: &[f64]) -> Result<bool> {
    region.equivalent_form(sorted)
}

pub fn timeshare_split(region: &RateRegion, r1: f64) -> Result<f64> {
    region.timeshare_split(r1)
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    sum: f64,
    sumsq: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sumsq += other.sumsq;
    }

    fn estimate(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let stderr = if self.n > 1 {
            let var = ((self.sumsq - self.sum * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr,
            samples: self.n,
        }
    }
}

/// Runs `body` over every chunk and folds the per-chunk moments in order.
fn monte_carlo<F>(samples: u64, seed: u64, width: usize, body: F) -> Result<Vec<Moments>>
where
    F: Fn(&mut Rng, &mut [Moments]) + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    let seeds = SeedSequence::new(seed);
    let chunks = samples.div_ceil(CHUNK as u64);
    let partials: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds.stream(Stream::MonteCarlo(i));
            let count = (samples - i * CHUNK as u64).min(CHUNK as u64);
            let mut acc = vec![Moments::default(); width];
            for _ in 0..count {
                body(&mut rng, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); width];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total)
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr.is_finite() && snr >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "SNR must be finite and nonnegative (got {snr})"
        )));
    }
    Ok(())
}

/// Converts dB to linear SNR.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `1/2 E[log2(1 + 2 |h|^2 snr)]` with `h ~ CN(0, 1)`.
pub fn gauss_achievable(snr: f64, samples: u64, seed: u64) -> Result<Estimate> {
    check_snr(snr)?;
    let m = monte_carlo(samples, seed, 1, |rng, acc| {
        let g = sample_cn(rng).norm_sqr();
        acc[0].push(0.5 * (2.0 * g * snr).ln_1p() * std::f64::consts::LOG2_E);
    })?;
    Ok(m[0].estimate())
}

/// Two-user sum-rate bound and its two expectation terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    pub pair: (usize, usize),
    pub total: Estimate,
    pub terms: [Estimate; 2],
}

#[inline]
fn bound_terms(snr_k: f64, snr_l: f64, hkk: f64, hkl: f64, hlk: f64, hll: f64) -> (f64, f64) {
    let a = (hkl * snr_l + hkk * snr_k / (1.0 + hlk * snr_k)).ln_1p();
    let b = (hlk * snr_k + hll * snr_l / (1.0 + hkl * snr_l)).ln_1p();
    (a * std::f64::consts::LOG2_E, b * std::f64::consts::LOG2_E)
}

/// Monte Carlo bound on `R_k + R_l` with i.i.d. CN(0, 1) fading.
pub fn gauss_outer_bound(snr: &[f64], pair: (usize, usize), samples: u64, seed: u64) -> Result<PairBound> {
    let (k, l) = pair;
    if k == l || k >= snr.len() || l >= snr.len() {
        return Err(Error::InvalidParameter(format!(
            "pair ({k}, {l}) is not two distinct users out of {}",
            snr.len()
        )));
    }
    snr.iter().try_for_each(|&s| check_snr(s))?;
    let (sk, sl) = (snr[k], snr[l]);
    let m = monte_carlo(samples, seed, 3, |rng, acc| {
        let hkk = sample_cn(rng).norm_sqr();
        let hkl = sample_cn(rng).norm_sqr();
        let hlk = sample_cn(rng).norm_sqr();
        let hll = sample_cn(rng).norm_sqr();
        let (a, b) = bound_terms(sk, sl, hkk, hkl, hlk, hll);
        acc[0].push(a + b);
        acc[1].push(a);
        acc[2].push(b);
    })?;
    Ok(PairBound {
        pair,
        total: m[0].estimate(),
        terms: [m[1].estimate(), m[2].estimate()],
    })
}

/// Per-user achievable rates and per-pair bounds from one joint run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussRateResult {
    pub snr: Vec<f64>,
    pub achievable: Vec<Estimate>,
    pub pair_bounds: Vec<PairBound>,
    pub samples: u64,
}

impl GaussRateResult {
    /// Smallest per-pair bound halved.
    pub fn bound_half(&self) -> f64 {
        self.pair_bounds
            .iter()
            .map(|b| 0.5 * b.total.mean)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn gauss_rates(snr: &[f64], samples: u64, seed: u64) -> Result<GaussRateResult> {
    let k = snr.len();
    if k < 2 {
        return Err(Error::TooFewUsers(k));
    }
    snr.iter().try_for_each(|&s| check_snr(s))?;
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let width = k + 3 * pairs.len();
    let m = monte_carlo(samples, seed, width, |rng, acc| {
        let g: Vec<f64> = (0..k * k).map(|_| sample_cn(rng).norm_sqr()).collect();
        for u in 0..k {
            acc[u].push(0.5 * (2.0 * g[u * k + u] * snr[u]).ln_1p() * std::f64::consts::LOG2_E);
        }
        for (p, &(a, b)) in pairs.iter().enumerate() {
            let (x, y) = bound_terms(snr[a], snr[b], g[a * k + a], g[a * k + b], g[b * k + a], g[b * k + b]);
            let base = k + 3 * p;
            acc[base].push(x + y);
            acc[base + 1].push(x);
            acc[base + 2].push(y);
        }
    })?;
    Ok(GaussRateResult {
        snr: snr.to_vec(),
        achievable: m[..k].iter().map(Moments::estimate).collect(),
        pair_bounds: pairs
            .iter()
            .enumerate()
            .map(|(p, &pair)| {
                let base = k + 3 * p;
                PairBound {
                    pair,
                    total: m[base].estimate(),
                    terms: [m[base + 1].estimate(), m[base + 2].estimate()],
                }
            })
            .collect(),
        samples,
    })
}

/// One row of the symmetric-SNR comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub achievable: f64,
    pub bound_half: f64,
    pub gap: f64,
    pub stderr_ach: f64,
    pub stderr_bound: f64,
}

pub const SWEEP_HEADER: &str = "snr_db,achievable,bound_half,gap,stderr_ach,stderr_bound";

/// Per-user achievable rate against half the two-user bound, both users at
/// the same SNR. Every grid point reuses the same fading draws.
pub fn sweep_figure(grid_db: &[f64], samples: u64, seed: u64) -> Result<Vec<SweepRow>> {
    if grid_db.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = grid_db.iter().find(|d| !d.is_finite()) {
        return Err(Error::InvalidParameter(format!("SNR grid point {bad} is not finite")));
    }
    let snrs: Vec<f64> = grid_db.iter().map(|&d| db_to_linear(d)).collect();
    let m = monte_carlo(samples, seed, 2 * snrs.len(), |rng, acc| {
        let hkk = sample_cn(rng).norm_sqr();
        let hkl = sample_cn(rng).norm_sqr();
        let hlk = sample_cn(rng).norm_sqr();
        let hll = sample_cn(rng).norm_sqr();
        for (i, &s) in snrs.iter().enumerate() {
            let ach = 0.5 * (2.0 * hkk * s).ln_1p() * std::f64::consts::LOG2_E;
            let (a, b) = bound_terms(s, s, hkk, hkl, hlk, hll);
            acc[2 * i].push(ach);
            acc[2 * i + 1].push(0.5 * (a + b));
        }
    })?;
    Ok(grid_db
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let ach = m[2 * i].estimate();
            let bound = m[2 * i + 1].estimate();
            SweepRow {
                snr_db,
                achievable: ach.mean,
                bound_half: bound.mean,
                gap: bound.mean - ach.mean,
                stderr_ach: ach.stderr,
                stderr_bound: bound.stderr,
            }
        })
        .collect())
}

/// Mean of `1/2 log2(1 + effective SNR)` for user 0 over matched pairs of
/// quantized states, with every user at `snr`.
pub fn gauss_paired_rate(quantizer: &Quantizer, k: usize, snr: f64, samples: u64, seed: u64) -> Result<Estimate> {
    if k < 2 {
        return Err(Error::TooFewUsers(k));
    }
    check_snr(snr)?;
    let snrs = vec![snr; k];
    let m = monte_carlo(samples, seed, 1, |rng, acc| {
        let (a, b) = sample_matched_pair(rng, quantizer, k);
        acc[0].push(0.5 * effective_snr((&a, &b), 0, &snrs).ln_1p() * std::f64::consts::LOG2_E);
    })?;
    Ok(m[0].estimate())
}
