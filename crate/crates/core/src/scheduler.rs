//! Quantization of Gaussian states and the pairing of complementary states.
//!
//! A pairing plan assigns every time index a role. A matched pair is two
//! indices whose state keys are complements of each other: the earlier one
//! carries fresh symbols and the later one repeats them, so that summing the
//! two received signals cancels every cross-link.
//!
//! The default matcher is causal: it keeps a FIFO queue of unmatched indices
//! per state key and matches each arrival with the oldest waiting complement.
//! The offline matcher groups the whole sequence by state first and pairs the
//! first half of each group with the second half of its complement's group.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{sample_cn, ChannelState, ComplexMatrix, StatePayload};
use crate::error::{Error, Result};
use crate::typicality::StateKey;

/// A point of the grid `gamma (Z + jZ)`, in units of `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub re: i64,
    pub im: i64,
}

impl GridPoint {
    pub const ZERO: GridPoint = GridPoint { re: 0, im: 0 };

    pub fn new(re: i64, im: i64) -> Self {
        Self { re, im }
    }

    pub fn neg(self) -> Self {
        Self {
            re: -self.re,
            im: -self.im,
        }
    }

    pub fn value(self, gamma: f64) -> Complex64 {
        Complex64::new(self.re as f64 * gamma, self.im as f64 * gamma)
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}j", self.re, self.im)
    }
}

/// Nearest-point quantizer onto `gamma (Z + jZ)` with truncation radius `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    gamma: f64,
    tau: f64,
}

impl Quantizer {
    pub fn new(gamma: f64, tau: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive (got {gamma})")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive (got {tau})")));
        }
        Ok(Self { gamma, tau })
    }

    /// A quantizer whose truncation radius discards a K-user block with
    /// probability below `discard`. Uses `P(|h| > tau) = exp(-tau^2)` and a
    /// union bound over the `K^2` entries.
    pub fn with_discard_target(gamma: f64, k: usize, discard: f64) -> Result<Self> {
        if !(discard > 0.0 && discard < 1.0) {
            return Err(Error::InvalidProbability(discard));
        }
        let tau = ((k * k) as f64 / discard).ln().max(0.0).sqrt();
        Self::new(gamma, tau)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Nearest grid point; ties round half away from zero on each axis, so
    /// `quantize(-h) == -quantize(h)` for every `h`.
    #[inline]
    pub fn quantize(&self, h: Complex64) -> GridPoint {
        GridPoint {
            re: (h.re / self.gamma).round() as i64,
            im: (h.im / self.gamma).round() as i64,
        }
    }

    pub fn quantize_matrix(&self, h: &ComplexMatrix) -> QuantizedMatrix {
        QuantizedMatrix {
            dim: h.dim(),
            entries: h.entries().iter().map(|&v| self.quantize(v)).collect(),
        }
    }

    /// False when any coefficient exceeds the truncation radius.
    pub fn keeps(&self, h: &ComplexMatrix) -> bool {
        h.entries().iter().all(|v| v.norm() <= self.tau)
    }

    /// True when the grid point itself lies within the truncation radius.
    pub fn in_alphabet(&self, p: GridPoint) -> bool {
        p.value(self.gamma).norm() <= self.tau
    }
}

pub fn quantize(h: Complex64, quantizer: &Quantizer) -> GridPoint {
    quantizer.quantize(h)
}

/// A gamma-quantized channel matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuantizedMatrix {
    dim: usize,
    entries: Vec<GridPoint>,
}

impl QuantizedMatrix {
    pub fn from_rows(rows: Vec<Vec<GridPoint>>) -> Result<Self> {
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

    pub(crate) fn from_entries(dim: usize, entries: Vec<GridPoint>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> GridPoint {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[GridPoint] {
        &self.entries
    }

    /// Diagonal kept, off-diagonals negated.
    pub fn gauss_complement(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, &p)| if i / self.dim == i % self.dim { p } else { p.neg() })
            .collect();
        Self { dim: self.dim, entries }
    }

    /// True when the state is its own complement (all off-diagonals zero).
    pub fn is_self_paired(&self) -> bool {
        self.entries
            .iter()
            .enumerate()
            .all(|(i, &p)| i / self.dim == i % self.dim || p == GridPoint::ZERO)
    }
}

pub fn gauss_complement(hq: &QuantizedMatrix) -> QuantizedMatrix {
    hq.gauss_complement()
}

impl fmt::Display for QuantizedMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.entries.chunks(self.dim).enumerate() {
            if r > 0 {
                f.write_str(";")?;
            }
            for (c, p) in row.iter().enumerate() {
                if c > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{p}")?;
            }
        }
        Ok(())
    }
}

/// Draws a state from the Rayleigh law conditioned on quantizing to
/// `target`. Each real axis is an `N(0, 1/2)` variable restricted to its
/// grid cell, sampled by inverting the CDF.
pub fn sample_in_cells<R: Rng + ?Sized>(rng: &mut R, quantizer: &Quantizer, target: &QuantizedMatrix) -> ComplexMatrix {
    let gamma = quantizer.gamma();
    let axis = |rng: &mut R, a: i64| -> f64 {
        // CDF of N(0, 1/2) is (1 + erf(x)) / 2.
        let lo = (a as f64 - 0.5) * gamma;
        let hi = (a as f64 + 0.5) * gamma;
        let (elo, ehi) = (statrs::function::erf::erf(lo), statrs::function::erf::erf(hi));
        let u: f64 = rng.random();
        let x = statrs::function::erf::erf_inv(elo + u * (ehi - elo));
        // Rounding in the tails can push x marginally outside the cell.
        x.clamp(lo, hi)
    };
    let rows = target
        .entries
        .chunks(target.dim)
        .map(|row| {
            row.iter()
                .map(|p| Complex64::new(axis(rng, p.re), axis(rng, p.im)))
                .collect()
        })
        .collect();
    ComplexMatrix::from_rows(rows).expect("target is square")
}

/// Draws a kept state `H(t1)` and a state `H(t2)` whose quantized key is the
/// complement of `H(t1)`'s, as the matcher would pair them.
pub fn sample_matched_pair<R: Rng + ?Sized>(
    rng: &mut R,
    quantizer: &Quantizer,
    k: usize,
) -> (ComplexMatrix, ComplexMatrix) {
    let first = loop {
        let entries: Vec<Vec<Complex64>> = (0..k).map(|_| (0..k).map(|_| sample_cn(rng)).collect()).collect();
        let h = ComplexMatrix::from_rows(entries).expect("square");
        if quantizer.keeps(&h) {
            break h;
        }
    };
    let target = quantizer.quantize_matrix(&first).gauss_complement();
    let second = sample_in_cells(rng, quantizer, &target);
    (first, second)
}

/// Post-combining SNR of user `k` for a matched pair:
/// `|h_kk(t1)+h_kk(t2)|^2 SNR_k / (2 + sum_{l != k} |h_kl(t1)+h_kl(t2)|^2 SNR_l)`.
pub fn effective_snr(pair: (&ComplexMatrix, &ComplexMatrix), k: usize, snr: &[f64]) -> f64 {
    let (a, b) = pair;
    let dim = a.dim();
    debug_assert_eq!(dim, b.dim());
    let signal = (a.get(k, k) + b.get(k, k)).norm_sqr() * snr[k];
    let interference: f64 = (0..dim)
        .filter(|&l| l != k)
        .map(|l| (a.get(k, l) + b.get(k, l)).norm_sqr() * snr[l])
        .sum();
    signal / (2.0 + interference)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Fresh,
    Repeat,
    Unmatched,
    Discarded,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Fresh => "fresh",
            Role::Repeat => "repeat",
            Role::Unmatched => "unmatched",
            Role::Discarded => "discarded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingMode {
    /// Greedy FIFO matching using only past and present states.
    #[default]
    Causal,
    /// First half of each state group paired with the last half of its
    /// complement's group; needs the whole sequence in advance.
    Offline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotPlan {
    pub t: usize,
    /// `None` for discarded slots.
    pub key: Option<StateKey>,
    pub partner: Option<usize>,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingSummary {
    pub n: usize,
    pub matched_pairs: usize,
    pub matched_fraction: f64,
    pub unmatched: usize,
    pub discarded: usize,
    pub discarded_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingPlan {
    mode: PairingMode,
    slots: Vec<SlotPlan>,
}

impl PairingPlan {
    pub fn mode(&self) -> PairingMode {
        self.mode
    }

    pub fn slots(&self) -> &[SlotPlan] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Matched pairs as `(fresh, repeat)`, ordered by the fresh index.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.slots
            .iter()
            .filter(|s| s.role == Role::Fresh)
            .map(|s| (s.t, s.partner.expect("fresh slots have partners")))
            .collect()
    }

    fn count(&self, role: Role) -> usize {
        self.slots.iter().filter(|s| s.role == role).count()
    }

    pub fn matched_fraction(&self) -> f64 {
        (2 * self.count(Role::Fresh)) as f64 / self.slots.len() as f64
    }

    pub fn discarded_fraction(&self) -> f64 {
        self.count(Role::Discarded) as f64 / self.slots.len() as f64
    }

    pub fn summary(&self) -> PairingSummary {
        PairingSummary {
            n: self.slots.len(),
            matched_pairs: self.count(Role::Fresh),
            matched_fraction: self.matched_fraction(),
            unmatched: self.count(Role::Unmatched),
            discarded: self.count(Role::Discarded),
            discarded_fraction: self.discarded_fraction(),
        }
    }

    /// Writes `t,state_key,partner,role` rows. Keys never contain commas.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,state_key,partner,role")?;
        for s in &self.slots {
            let key = s.key.as_ref().map(ToString::to_string).unwrap_or_default();
            let partner = s.partner.map(|p| p.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", s.t, key, partner, s.role)?;
        }
        Ok(())
    }
}

/// State keys of a sequence; `None` marks Gaussian blocks beyond `tau`.
pub fn state_keys(states: &[ChannelState], quantizer: Option<&Quantizer>) -> Result<Vec<Option<StateKey>>> {
    states
        .iter()
        .map(|s| match &s.payload {
            StatePayload::Field(m) => {
                if !m.is_channel_valid() {
                    return Err(Error::ZeroEntry);
                }
                Ok(Some(StateKey::Field(m.clone())))
            }
            StatePayload::Gaussian(h) => {
                let q = quantizer.ok_or_else(|| Error::InvalidParameter("Gaussian states need a quantizer".into()))?;
                Ok(q.keeps(h).then(|| StateKey::Grid(q.quantize_matrix(h))))
            }
        })
        .collect()
}

/// Pairs every occurrence of a state with an occurrence of its complement.
pub fn build_pairing(states: &[ChannelState], quantizer: Option<&Quantizer>, mode: PairingMode) -> Result<PairingPlan> {
    if states.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = states[0].dim();
    if states.iter().any(|s| s.dim() != dim) {
        return Err(Error::InvalidParameter("states have mixed dimensions".into()));
    }
    let keys = state_keys(states, quantizer)?;
    Ok(pair_keys(keys, mode))
}

/// Pairing on precomputed keys. Slot `i` gets time index `i`.
pub fn pair_keys(keys: Vec<Option<StateKey>>, mode: PairingMode) -> PairingPlan {
    let mut slots: Vec<SlotPlan> = keys
        .into_iter()
        .enumerate()
        .map(|(t, key)| SlotPlan {
            t,
            role: if key.is_some() {
                Role::Unmatched
            } else {
                Role::Discarded
            },
            key,
            partner: None,
        })
        .collect();
    let link = |slots: &mut [SlotPlan], fresh: usize, repeat: usize| {
        slots[fresh].partner = Some(repeat);
        slots[fresh].role = Role::Fresh;
        slots[repeat].partner = Some(fresh);
        slots[repeat].role = Role::Repeat;
    };
    match mode {
        PairingMode::Causal => {
            let mut waiting: HashMap<StateKey, VecDeque<usize>> = HashMap::new();
            for t in 0..slots.len() {
                let Some(key) = slots[t].key.clone() else { continue };
                let complement = key.complement();
                match waiting.get_mut(&complement).and_then(VecDeque::pop_front) {
                    Some(fresh) => link(&mut slots, fresh, t),
                    None => waiting.entry(key).or_default().push_back(t),
                }
            }
        }
        PairingMode::Offline => {
            let mut groups: BTreeMap<StateKey, Vec<usize>> = BTreeMap::new();
            for s in &slots {
                if let Some(key) = &s.key {
                    groups.entry(key.clone()).or_default().push(s.t);
                }
            }
            let empty = Vec::new();
            for (key, own) in &groups {
                let complement = key.complement();
                if &complement < key {
                    continue;
                }
                let other = groups.get(&complement).unwrap_or(&empty);
                let mut common = own.len().min(other.len());
                common -= common % 2;
                let half = common / 2;
                for i in 0..half {
                    link(&mut slots, own[i], other[half + i]);
                    if &complement != key {
                        link(&mut slots, other[i], own[half + i]);
                    }
                }
            }
        }
    }
    PairingPlan { mode, slots }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::{FieldMatrix, PrimeField};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quantize_examples() {
        let q = Quantizer::new(0.5, 10.0).unwrap();
        assert_eq!(q.quantize(c(0.3, 0.7)).value(0.5), c(0.5, 0.5));
        assert_eq!(q.quantize(c(-0.3, -0.7)).value(0.5), c(-0.5, -0.5));
        let unit = Quantizer::new(1.0, 10.0).unwrap();
        assert_eq!(unit.quantize(c(0.5, 0.0)), GridPoint::new(1, 0));
        assert_eq!(unit.quantize(c(-0.5, 0.0)), GridPoint::new(-1, 0));
        assert_eq!(unit.quantize(c(0.0, -1.5)), GridPoint::new(0, -2));
    }

    #[test]
    fn quantizer_validation() {
        assert!(Quantizer::new(0.0, 1.0).is_err());
        assert!(Quantizer::new(1.0, -1.0).is_err());
        let q = Quantizer::with_discard_target(0.5, 2, 1e-3).unwrap();
        assert!(4.0 * (-q.tau() * q.tau()).exp() <= 1e-3 * (1.0 + 1e-12));
    }

    #[test]
    fn complement_examples() {
        let p = GridPoint::new;
        let h = QuantizedMatrix::from_rows(vec![vec![p(1, 1), p(0, 2)], vec![p(-1, 0), p(3, 0)]]).unwrap();
        let g = h.gauss_complement();
        assert_eq!(
            g,
            QuantizedMatrix::from_rows(vec![vec![p(1, 1), p(0, -2)], vec![p(1, 0), p(3, 0)]]).unwrap()
        );
        assert_eq!(g.gauss_complement(), h);
        let diag = QuantizedMatrix::from_rows(vec![vec![p(2, 1), p(0, 0)], vec![p(0, 0), p(-1, 0)]]).unwrap();
        assert!(diag.is_self_paired());
        assert_eq!(diag.gauss_complement(), diag);
        assert!(!h.is_self_paired());
    }

    fn ff_key(rows: Vec<Vec<u32>>) -> StateKey {
        StateKey::Field(FieldMatrix::from_rows(PrimeField::odd(5).unwrap(), rows).unwrap())
    }

    #[test]
    fn alternating_arrivals_pair_up() {
        let a = ff_key(vec![vec![2, 3], vec![4, 1]]);
        let ga = a.complement();
        let plan = pair_keys(
            vec![Some(a.clone()), Some(ga.clone()), Some(a), Some(ga)],
            PairingMode::Causal,
        );
        assert_eq!(plan.pairs(), vec![(0, 1), (2, 3)]);
        assert_eq!(plan.matched_fraction(), 1.0);
    }

    #[test]
    fn fifo_order() {
        let a = ff_key(vec![vec![2, 3], vec![4, 1]]);
        let ga = a.complement();
        let plan = pair_keys(vec![Some(a.clone()), Some(a), Some(ga)], PairingMode::Causal);
        assert_eq!(plan.pairs(), vec![(0, 2)]);
        assert_eq!(plan.slots()[1].role, Role::Unmatched);
        assert_eq!(plan.summary().unmatched, 1);
    }

    #[test]
    fn self_paired_keys_match_consecutively() {
        let p = GridPoint::new;
        let d =
            StateKey::Grid(QuantizedMatrix::from_rows(vec![vec![p(1, 0), p(0, 0)], vec![p(0, 0), p(1, 1)]]).unwrap());
        let plan = pair_keys(
            vec![Some(d.clone()), None, Some(d.clone()), Some(d)],
            PairingMode::Causal,
        );
        assert_eq!(plan.pairs(), vec![(0, 2)]);
        assert_eq!(plan.slots()[1].role, Role::Discarded);
        assert_eq!(plan.slots()[3].role, Role::Unmatched);
    }

    #[test]
    fn offline_pairs_first_half_with_last_half() {
        let a = ff_key(vec![vec![2, 3], vec![4, 1]]);
        let ga = a.complement();
        // a at 0,1,4 ; ga at 2,3 -> common 2, half 1
        let keys = vec![Some(a.clone()), Some(a.clone()), Some(ga.clone()), Some(ga), Some(a)];
        let plan = pair_keys(keys, PairingMode::Offline);
        let mut pairs = plan.pairs();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 3), (2, 1)]);
        assert_eq!(plan.slots()[4].role, Role::Unmatched);
    }

    #[test]
    fn empty_and_unquantized_inputs_fail() {
        assert_eq!(build_pairing(&[], None, PairingMode::Causal), Err(Error::EmptyInput));
        let mut rng = crate::rng::SeedSequence::new(0).stream(crate::rng::Stream::States);
        let s = crate::channels::sample_gauss_state(&mut rng, 2, 0).unwrap();
        assert!(build_pairing(&[s], None, PairingMode::Causal).is_err());
    }

    #[test]
    fn exact_complement_doubles_the_snr() {
        let a =
            ComplexMatrix::from_rows(vec![vec![c(0.3, -0.4), c(1.0, 0.2)], vec![c(-0.7, 0.1), c(0.9, 0.9)]]).unwrap();
        let b = a.map(|r, col, h| if r == col { h } else { -h });
        let snr = [3.0, 5.0];
        for k in 0..2 {
            let expected = 2.0 * a.get(k, k).norm_sqr() * snr[k];
            assert!((effective_snr((&a, &b), k, &snr) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_sampler_lands_in_the_target_cells() {
        let q = Quantizer::new(0.2, 3.0).unwrap();
        let mut rng = crate::rng::SeedSequence::new(3).stream(crate::rng::Stream::States);
        for _ in 0..2000 {
            let (a, b) = sample_matched_pair(&mut rng, &q, 3);
            assert!(q.keeps(&a));
            assert_eq!(q.quantize_matrix(&b), q.quantize_matrix(&a).gauss_complement());
        }
    }
}
