//! Type counting over channel-state sequences and delta-typicality.
//!
//! A sequence of `n` states is delta-typical under a law `P` when every state
//! `H` of the alphabet, observed or not, satisfies `|N(H)/n - P(H)| <= delta`.
//! Unobserved states only matter when `P(H) > delta`, so laws expose the
//! (few) states above a probability threshold instead of their whole
//! alphabet.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_field::{FieldMatrix, PrimeField};
use crate::scheduler::{GridPoint, QuantizedMatrix, Quantizer};

/// Canonical identity of a channel state: a finite-field matrix or a
/// gamma-quantized Gaussian matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateKey {
    Field(FieldMatrix),
    Grid(QuantizedMatrix),
}

impl StateKey {
    /// Key of the complementary state.
    ///
    /// # Panics
    /// For a finite-field key with a zero entry, which never comes out of a
    /// valid channel state.
    pub fn complement(&self) -> StateKey {
        match self {
            StateKey::Field(m) => StateKey::Field(m.complement().expect("channel-valid field key")),
            StateKey::Grid(m) => StateKey::Grid(m.gauss_complement()),
        }
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateKey::Field(m) => m.fmt(f),
            StateKey::Grid(m) => m.fmt(f),
        }
    }
}

/// Occurrence counts `N(H | H^n)` of a sequence of length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypeCount {
    counts: BTreeMap<StateKey, u64>,
    n: u64,
}

#[derive(Serialize)]
struct CountEntry {
    state: String,
    count: u64,
}

#[derive(Serialize)]
struct CountExport {
    n: u64,
    counts: Vec<CountEntry>,
}

impl TypeCount {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn count(&self, key: &StateKey) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateKey, u64)> {
        self.counts.iter().map(|(k, &c)| (k, c))
    }

    /// Adds the counts of another sequence.
    pub fn merge(&mut self, other: &TypeCount) {
        for (k, c) in &other.counts {
            *self.counts.entry(k.clone()).or_default() += c;
        }
        self.n += other.n;
    }

    pub fn to_json(&self) -> serde_json::Value {
        let export = CountExport {
            n: self.n,
            counts: self
                .counts
                .iter()
                .map(|(k, &count)| CountEntry {
                    state: k.to_string(),
                    count,
                })
                .collect(),
        };
        serde_json::to_value(export).expect("plain data serializes")
    }
}

pub fn count_types<'a, I>(states: I) -> Result<TypeCount>
where
    I: IntoIterator<Item = &'a StateKey>,
{
    let mut out = TypeCount::default();
    for key in states {
        *out.counts.entry(key.clone()).or_default() += 1;
        out.n += 1;
    }
    if out.n == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// A probability law over channel states.
pub trait StateLaw {
    /// `P(key)`; zero for keys of the right shape outside the support, an
    /// error for keys that do not belong to this alphabet at all.
    fn probability(&self, key: &StateKey) -> Result<f64>;

    /// Every state with probability strictly above `threshold`.
    fn states_above(&self, threshold: f64) -> Result<Vec<StateKey>>;

    /// Number of states in the alphabet.
    fn alphabet_size(&self) -> f64;
}

/// Enumeration cap for [`StateLaw::states_above`].
const MAX_ENUMERATED: f64 = 1e7;

/// An explicit table of probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitLaw {
    probs: BTreeMap<StateKey, f64>,
}

impl ExplicitLaw {
    pub fn new(probs: BTreeMap<StateKey, f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&p) = probs.values().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProbability(p));
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::AlphabetMismatch(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }
}

impl StateLaw for ExplicitLaw {
    fn probability(&self, key: &StateKey) -> Result<f64> {
        Ok(self.probs.get(key).copied().unwrap_or(0.0))
    }

    fn states_above(&self, threshold: f64) -> Result<Vec<StateKey>> {
        Ok(self
            .probs
            .iter()
            .filter(|(_, &p)| p > threshold)
            .map(|(k, _)| k.clone())
            .collect())
    }

    fn alphabet_size(&self) -> f64 {
        self.probs.len() as f64
    }
}

/// Uniform law over K x K matrices with entries in GF(q) without zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformFieldLaw {
    field: PrimeField,
    k: usize,
}

impl UniformFieldLaw {
    pub fn new(field: PrimeField, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewUsers(k));
        }
        Ok(Self { field, k })
    }

    fn state_probability(&self) -> f64 {
        self.alphabet_size().recip()
    }
}

impl StateLaw for UniformFieldLaw {
    fn probability(&self, key: &StateKey) -> Result<f64> {
        match key {
            StateKey::Field(m) if m.modulus() == self.field.modulus() && m.dim() == self.k => {
                Ok(if m.is_channel_valid() {
                    self.state_probability()
                } else {
                    0.0
                })
            }
            other => Err(Error::AlphabetMismatch(format!(
                "state {other} is not a {k}x{k} matrix over GF({q})",
                k = self.k,
                q = self.field.modulus()
            ))),
        }
    }

    fn states_above(&self, threshold: f64) -> Result<Vec<StateKey>> {
        if self.state_probability() <= threshold {
            return Ok(Vec::new());
        }
        let size = self.alphabet_size();
        if size > MAX_ENUMERATED {
            return Err(Error::InvalidParameter(format!(
                "alphabet of {size} states is too large to enumerate"
            )));
        }
        let cells = self.k * self.k;
        let base = self.field.modulus() - 1;
        let mut out = Vec::with_capacity(size as usize);
        let mut digits = vec![0u32; cells];
        loop {
            let entries = digits.iter().map(|d| d + 1).collect();
            out.push(StateKey::Field(FieldMatrix::from_entries(self.field, self.k, entries)));
            let mut i = cells;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < base {
                    break;
                }
                digits[i] = 0;
            }
        }
    }

    fn alphabet_size(&self) -> f64 {
        f64::from(self.field.modulus() - 1).powi((self.k * self.k) as i32)
    }
}

/// Law of gamma-quantized Rayleigh matrices, conditioned on every quantized
/// entry lying within the truncation radius.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedGaussianLaw {
    quantizer: Quantizer,
    k: usize,
    /// Normalized per-entry probabilities, sorted by decreasing probability.
    points: Vec<(GridPoint, f64)>,
    index: BTreeMap<GridPoint, f64>,
}

/// `P(X in [lo, hi])` for `X ~ N(0, 1/2)`.
fn axis_mass(lo: f64, hi: f64) -> f64 {
    use statrs::function::erf::{erf, erfc};
    if lo >= 0.0 {
        0.5 * (erfc(lo) - erfc(hi))
    } else if hi <= 0.0 {
        0.5 * (erfc(-hi) - erfc(-lo))
    } else {
        0.5 * (erf(hi) - erf(lo))
    }
}

impl QuantizedGaussianLaw {
    pub fn new(quantizer: Quantizer, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooFewUsers(k));
        }
        let gamma = quantizer.gamma();
        let reach = (quantizer.tau() / gamma).floor() as i64;
        let cell = |a: i64| axis_mass((a as f64 - 0.5) * gamma, (a as f64 + 0.5) * gamma);
        let mut points = Vec::new();
        for re in -reach..=reach {
            for im in -reach..=reach {
                let p = GridPoint::new(re, im);
                if quantizer.in_alphabet(p) {
                    points.push((p, cell(re) * cell(im)));
                }
            }
        }
        let total: f64 = points.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut points {
            *w /= total;
        }
        points.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let index = points.iter().copied().collect();
        Ok(Self {
            quantizer,
            k,
            points,
            index,
        })
    }

    /// True when every entry of `m` lies in the alphabet.
    pub fn contains(&self, m: &QuantizedMatrix) -> bool {
        m.dim() == self.k && m.entries().iter().all(|p| self.index.contains_key(p))
    }

    pub fn points(&self) -> usize {
        self.points.len()
    }
}

impl StateLaw for QuantizedGaussianLaw {
    fn probability(&self, key: &StateKey) -> Result<f64> {
        match key {
            StateKey::Grid(m) if m.dim() == self.k => Ok(m
                .entries()
                .iter()
                .map(|p| self.index.get(p).copied().unwrap_or(0.0))
                .product()),
            other => Err(Error::AlphabetMismatch(format!(
                "state {other} is not a quantized {0}x{0} matrix",
                self.k
            ))),
        }
    }

    fn states_above(&self, threshold: f64) -> Result<Vec<StateKey>> {
        let cells = self.k * self.k;
        let top = self.points[0].1;
        let mut out = Vec::new();
        let mut stack: Vec<usize> = Vec::with_capacity(cells);
        // Depth-first over entries; points are sorted so each level stops at
        // the first point whose best completion falls to the threshold.
        fn walk(
            law: &QuantizedGaussianLaw,
            cells: usize,
            top: f64,
            threshold: f64,
            prefix: f64,
            stack: &mut Vec<usize>,
            out: &mut Vec<StateKey>,
        ) -> Result<()> {
            if stack.len() == cells {
                let entries = stack.iter().map(|&i| law.points[i].0).collect();
                out.push(StateKey::Grid(QuantizedMatrix::from_entries(law.k, entries)));
                if out.len() as f64 > MAX_ENUMERATED {
                    return Err(Error::InvalidParameter("too many states above threshold".into()));
                }
                return Ok(());
            }
            let remaining = (cells - stack.len() - 1) as i32;
            for (i, &(_, w)) in law.points.iter().enumerate() {
                if prefix * w * top.powi(remaining) <= threshold {
                    break;
                }
                stack.push(i);
                walk(law, cells, top, threshold, prefix * w, stack, out)?;
                stack.pop();
            }
            Ok(())
        }
        walk(self, cells, top, threshold, 1.0, &mut stack, &mut out)?;
        Ok(out)
    }

    fn alphabet_size(&self) -> f64 {
        (self.points.len() as f64).powi((self.k * self.k) as i32)
    }
}

/// Checks `|N(H)/n - P(H)| <= delta` for every state of the alphabet.
pub fn is_delta_typical(counts: &TypeCount, law: &dyn StateLaw, delta: f64) -> Result<bool> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be nonnegative (got {delta})"
        )));
    }
    if counts.n == 0 {
        return Err(Error::EmptyInput);
    }
    let n = counts.n as f64;
    for (key, &c) in &counts.counts {
        let p = law.probability(key)?;
        if (c as f64 / n - p).abs() > delta {
            return Ok(false);
        }
    }
    for key in law.states_above(delta)? {
        if !counts.counts.contains_key(&key) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `max(0, 1 - |H| / (4 n delta^2))`.
pub fn lemma1_bound(n: u64, delta: f64, alphabet_size: f64) -> f64 {
    (1.0 - alphabet_size / (4.0 * n as f64 * delta * delta)).max(0.0)
}
