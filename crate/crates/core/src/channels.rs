//! Channel states and noise for both channel models.
//!
//! Finite-field states have entries drawn uniformly from GF(q) without zero.
//! Gaussian states have i.i.d. circular complex Gaussian entries of unit
//! variance; each real axis is drawn with the ziggurat sampler of
//! `rand_distr::StandardNormal` and scaled by `1/sqrt(2)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_field::{FieldElement, FieldMatrix, PrimeField};
use crate::rng::{SeedSequence, Stream};

/// Noise of the finite-field model: zero with probability `1 - rho`,
/// otherwise uniform over the nonzero elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteFieldNoiseModel {
    field: PrimeField,
    rho: f64,
}

impl FiniteFieldNoiseModel {
    pub fn new(field: PrimeField, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidProbability(rho));
        }
        Ok(Self { field, rho })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Probability of a particular noise value.
    pub fn probability(&self, z: u32) -> f64 {
        if z == 0 {
            1.0 - self.rho
        } else {
            self.rho / f64::from(self.field.modulus() - 1)
        }
    }

    /// Entropy of the noise in bits.
    pub fn entropy(&self) -> f64 {
        noise_entropy(self)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        sample_ff_noise(rng, self)
    }
}

pub fn sample_ff_noise<R: Rng + ?Sized>(rng: &mut R, model: &FiniteFieldNoiseModel) -> FieldElement {
    let q = model.field.modulus();
    let value = if rng.random::<f64>() < model.rho {
        rng.random_range(1..q)
    } else {
        0
    };
    FieldElement::new(value, model.field).expect("sampled value is reduced")
}

/// `H(Z) = -(1-rho) log2(1-rho) - rho log2(rho/(q-1))`, with `0 log 0 = 0`.
pub fn noise_entropy(model: &FiniteFieldNoiseModel) -> f64 {
    let xlog = |p: f64, scale: f64| if p > 0.0 { -p * (p / scale).log2() } else { 0.0 };
    let rho = model.rho;
    xlog(1.0 - rho, 1.0) + xlog(rho, f64::from(model.field.modulus() - 1))
}

/// Dense K x K complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if dim < 2 {
            return Err(Error::TooFewUsers(dim));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|h| h.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(usize, usize, Complex64) -> Complex64) -> Self {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, &h)| f(i / self.dim, i % self.dim, h))
            .collect();
        Self { dim: self.dim, entries }
    }
}

/// The channel realization of one time index.
#[derive(Debug, Clone, PartialEq)]
pub enum StatePayload {
    Field(FieldMatrix),
    Gaussian(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub t: usize,
    pub payload: StatePayload,
}

impl ChannelState {
    pub fn field(&self) -> Option<&FieldMatrix> {
        match &self.payload {
            StatePayload::Field(m) => Some(m),
            StatePayload::Gaussian(_) => None,
        }
    }

    pub fn gaussian(&self) -> Option<&ComplexMatrix> {
        match &self.payload {
            StatePayload::Gaussian(m) => Some(m),
            StatePayload::Field(_) => None,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.payload {
            StatePayload::Field(m) => m.dim(),
            StatePayload::Gaussian(m) => m.dim(),
        }
    }
}

fn check_users(k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::TooFewUsers(k))
    } else {
        Ok(())
    }
}

pub fn sample_ff_matrix<R: Rng + ?Sized>(rng: &mut R, field: PrimeField, k: usize) -> FieldMatrix {
    let q = field.modulus();
    let entries = (0..k * k).map(|_| rng.random_range(1..q)).collect();
    FieldMatrix::from_entries(field, k, entries)
}

/// A finite-field state at time `t` with entries uniform on GF(q) without zero.
pub fn sample_ff_state<R: Rng + ?Sized>(rng: &mut R, field: PrimeField, k: usize, t: usize) -> Result<ChannelState> {
    check_users(k)?;
    if !field.is_odd() {
        return Err(Error::NotOddPrime(field.modulus()));
    }
    Ok(ChannelState {
        t,
        payload: StatePayload::Field(sample_ff_matrix(rng, field, k)),
    })
}

/// One CN(0, 1) draw.
#[inline]
pub fn sample_cn<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

pub fn sample_gauss_matrix<R: Rng + ?Sized>(rng: &mut R, k: usize) -> ComplexMatrix {
    let entries = (0..k * k).map(|_| sample_cn(rng)).collect();
    ComplexMatrix { dim: k, entries }
}

pub fn sample_gauss_state<R: Rng + ?Sized>(rng: &mut R, k: usize, t: usize) -> Result<ChannelState> {
    check_users(k)?;
    Ok(ChannelState {
        t,
        payload: StatePayload::Gaussian(sample_gauss_matrix(rng, k)),
    })
}

/// `n` finite-field states drawn from the `States` stream of `seeds`.
pub fn ff_states(seeds: SeedSequence, field: PrimeField, k: usize, n: usize) -> Result<Vec<ChannelState>> {
    let mut rng = seeds.stream(Stream::States);
    (0..n).map(|t| sample_ff_state(&mut rng, field, k, t)).collect()
}

/// `n` Gaussian states drawn from the `States` stream of `seeds`.
pub fn gauss_states(seeds: SeedSequence, k: usize, n: usize) -> Result<Vec<ChannelState>> {
    let mut rng = seeds.stream(Stream::States);
    (0..n).map(|t| sample_gauss_state(&mut rng, k, t)).collect()
}

/// Gaussian model parameters: user count and per-user linear SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianChannelConfig {
    k: usize,
    snr: Vec<f64>,
}

impl GaussianChannelConfig {
    pub fn new(k: usize, snr: Vec<f64>) -> Result<Self> {
        check_users(k)?;
        if snr.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: snr.len(),
            });
        }
        if snr.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidParameter("snr must be finite and nonnegative".into()));
        }
        Ok(Self { k, snr })
    }

    pub fn symmetric(k: usize, snr: f64) -> Result<Self> {
        Self::new(k, vec![snr; k])
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn snr(&self) -> &[f64] {
        &self.snr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ff,
    Gauss,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Ff => "ff",
            ModelKind::Gauss => "gauss",
        })
    }
}

/// Channel configuration document:
/// `{ "model": "ff"|"gauss", "q", "rho", "K", "snr": [...], "seed", "n" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<Vec<f64>>,
    pub seed: u64,
    pub n: usize,
}

impl ChannelConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_users(self.k)?;
        match self.model {
            ModelKind::Ff => {
                let q = self
                    .q
                    .ok_or_else(|| Error::InvalidParameter("ff model needs q".into()))?;
                let field = PrimeField::odd(q)?;
                FiniteFieldNoiseModel::new(field, self.rho.unwrap_or(0.0))?;
            }
            ModelKind::Gauss => {
                let snr = self.snr.clone().unwrap_or_else(|| vec![1.0; self.k]);
                GaussianChannelConfig::new(self.k, snr)?;
            }
        }
        Ok(())
    }

    pub fn states(&self) -> Result<Vec<ChannelState>> {
        self.validate()?;
        let seeds = SeedSequence::new(self.seed);
        match self.model {
            ModelKind::Ff => ff_states(seeds, PrimeField::odd(self.q.unwrap_or(0))?, self.k, self.n),
            ModelKind::Gauss => gauss_states(seeds, self.k, self.n),
        }
    }
}
