//! Linear computation codes over GF(q) and the end-to-end alignment protocol.
//!
//! Every transmitter encodes with the same generator `G`, so a receiver that
//! observes `sum_l h_l x_l + z` sees a noisy codeword of the message
//! combination `u = sum_l h_l w_l`. Decoding is exhaustive maximum
//! likelihood, which under the finite-field noise law is minimum Hamming
//! distance whenever `rho < (q - 1) / q`.
//!
//! The protocol runs on a pairing plan: during the fresh slot of each pair
//! every user sends a codeword symbol; during the repeat slot (channel
//! `g(H)`) they send the same symbol again. Receiver `k` decodes
//! `u = sum_l h_kl w_l` from the fresh slots and
//! `v = sigma(h_kk) w_k - sum_{l != k} h_kl w_l` from the repeat slots, then
//! recovers `w_k = (h_kk + sigma(h_kk))^{-1} (u + v)`.

use std::collections::HashMap;
use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{ff_states, FiniteFieldNoiseModel};
use crate::error::{Error, Result};
use crate::finite_field::{rank, FieldMatrix, PrimeField};
use crate::rng::{SeedSequence, Stream};
use crate::scheduler::{build_pairing, PairingMode, PairingPlan};
use crate::typicality::StateKey;

/// Largest candidate set the exhaustive decoder accepts.
pub const MAX_CANDIDATES: u128 = 1 << 22;

/// A linear code over GF(q) with an `m x n'` generator of full row rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    field: PrimeField,
    m: usize,
    len: usize,
    generator: Vec<Vec<u32>>,
}

impl LinearCode {
    pub fn new(field: PrimeField, generator: Vec<Vec<u32>>) -> Result<Self> {
        let m = generator.len();
        if m == 0 {
            return Err(Error::EmptyInput);
        }
        let len = generator[0].len();
        for row in &generator {
            if row.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    got: row.len(),
                });
            }
            if let Some(&v) = row.iter().find(|&&v| v >= field.modulus()) {
                return Err(Error::Unreduced {
                    value: v,
                    modulus: field.modulus(),
                });
            }
        }
        if rank(field, &generator) != m {
            return Err(Error::RankDeficient);
        }
        Ok(Self {
            field,
            m,
            len,
            generator,
        })
    }

    /// `G = [I | P]`.
    pub fn systematic(field: PrimeField, parity: Vec<Vec<u32>>) -> Result<Self> {
        let m = parity.len();
        let rows = parity
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut row = vec![0; m];
                row[i] = 1;
                row.extend(p);
                row
            })
            .collect();
        Self::new(field, rows)
    }

    /// The identity code: `m = n'` and codewords equal messages.
    pub fn uncoded(field: PrimeField, m: usize) -> Result<Self> {
        Self::systematic(field, vec![Vec::new(); m])
    }

    /// Uniformly random generator, redrawn until it has full row rank.
    pub fn random_full_rank<R: Rng + ?Sized>(rng: &mut R, field: PrimeField, m: usize, len: usize) -> Result<Self> {
        if m == 0 || len < m {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= m <= n' (got m={m}, n'={len})"
            )));
        }
        let q = field.modulus();
        loop {
            let rows: Vec<Vec<u32>> = (0..m)
                .map(|_| (0..len).map(|_| rng.random_range(0..q)).collect())
                .collect();
            if rank(field, &rows) == m {
                return Self::new(field, rows);
            }
        }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn message_len(&self) -> usize {
        self.m
    }

    pub fn block_len(&self) -> usize {
        self.len
    }

    pub fn generator(&self) -> &[Vec<u32>] {
        &self.generator
    }

    /// `(m / n') log2 q` bits per channel use.
    pub fn rate_bits(&self) -> f64 {
        self.m as f64 / self.len as f64 * f64::from(self.field.modulus()).log2()
    }

    /// `x = w G`.
    pub fn encode(&self, w: &[u32]) -> Result<Vec<u32>> {
        if w.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: w.len(),
            });
        }
        let f = self.field;
        let mut x = vec![0u32; self.len];
        for (&wi, row) in w.iter().zip(&self.generator) {
            if wi == 0 {
                continue;
            }
            for (xj, &g) in x.iter_mut().zip(row) {
                *xj = f.add(*xj, f.mul(wi, g));
            }
        }
        Ok(x)
    }

    pub fn decoder(&self) -> Result<Decoder> {
        Decoder::new(self)
    }
}

/// Exhaustive minimum-distance decoder with a precomputed codebook.
#[derive(Debug, Clone)]
pub struct Decoder {
    q: u32,
    m: usize,
    len: usize,
    /// Codeword of message index `i` at `[i * len .. (i + 1) * len]`; index
    /// order is lexicographic order of the message.
    codebook: Vec<u16>,
}

impl Decoder {
    pub fn new(code: &LinearCode) -> Result<Self> {
        let q = code.field.modulus();
        if q > u32::from(u16::MAX) {
            return Err(Error::InvalidParameter(format!(
                "q = {q} is too large for the exhaustive decoder"
            )));
        }
        let candidates = u128::from(q).checked_pow(code.m as u32).unwrap_or(u128::MAX);
        if candidates > MAX_CANDIDATES {
            return Err(Error::SearchTooLarge(candidates));
        }
        let f = code.field;
        let count = candidates as usize;
        let mut codebook = Vec::with_capacity(count * code.len);
        let mut digits = vec![0u32; code.m];
        let mut word = vec![0u32; code.len];
        for i in 0..count {
            codebook.extend(word.iter().map(|&v| v as u16));
            if i + 1 == count {
                break;
            }
            // odometer step: adding row j once more after q - 1 additions wraps to zero
            for j in (0..code.m).rev() {
                for (x, &g) in word.iter_mut().zip(&code.generator[j]) {
                    *x = f.add(*x, g);
                }
                digits[j] += 1;
                if digits[j] < q {
                    break;
                }
                digits[j] = 0;
            }
        }
        Ok(Self {
            q,
            m: code.m,
            len: code.len,
            codebook,
        })
    }

    /// Message whose codeword is nearest to `y` in Hamming distance; ties go
    /// to the lexicographically smallest message.
    pub fn decode(&self, y: &[u32]) -> Result<Vec<u32>> {
        if y.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: y.len(),
            });
        }
        let y: Vec<u16> = y.iter().map(|&v| v as u16).collect();
        let mut best = (usize::MAX, 0usize);
        for (i, word) in self.codebook.chunks_exact(self.len).enumerate() {
            let mut d = 0;
            for (a, b) in word.iter().zip(&y) {
                d += usize::from(a != b);
                if d >= best.0 {
                    break;
                }
            }
            if d < best.0 {
                best = (d, i);
                if d == 0 {
                    break;
                }
            }
        }
        Ok(self.message(best.1))
    }

    fn message(&self, mut index: usize) -> Vec<u32> {
        let q = self.q as usize;
        let mut w = vec![0u32; self.m];
        for slot in w.iter_mut().rev() {
            *slot = (index % q) as u32;
            index /= q;
        }
        w
    }
}

/// Maximum-likelihood estimate of the message combination behind `y`.
pub fn decode_function(code: &LinearCode, y: &[u32], rho: f64) -> Result<Vec<u32>> {
    check_noise_level(code.field, rho)?;
    code.decoder()?.decode(y)
}

fn check_noise_level(field: PrimeField, rho: f64) -> Result<()> {
    let q = f64::from(field.modulus());
    if !(0.0..(q - 1.0) / q).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "rho must lie in [0, (q-1)/q) for minimum-distance decoding to be ML (got {rho})"
        )));
    }
    Ok(())
}

/// `w_k = (h_kk + sigma(h_kk))^{-1} (u + v)`.
pub fn recover_message(h: &FieldMatrix, k: usize, u: &[u32], v: &[u32]) -> Result<Vec<u32>> {
    let f = h.field();
    let hkk = h.get(k, k);
    let scale = f.inv(f.add(hkk, f.diagonal_pair(hkk)?))?;
    Ok(u.iter().zip(v).map(|(&a, &b)| f.mul(scale, f.add(a, b))).collect())
}

/// `sum_l row_l w_l` over GF(q).
fn combine(f: PrimeField, row: &[u32], messages: &[Vec<u32>]) -> Vec<u32> {
    let len = messages[0].len();
    let mut out = vec![0u32; len];
    for (&h, w) in row.iter().zip(messages) {
        for (o, &x) in out.iter_mut().zip(w) {
            *o = f.add(*o, f.mul(h, x));
        }
    }
    out
}

/// Parameters of a finite-field protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub q: u32,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    pub rho: f64,
    pub n: usize,
    pub seed: u64,
    /// Message symbols per codeword (`m`).
    pub message_len: usize,
    /// Codeword symbols (`n'`), i.e. matched pairs per codeword.
    pub block_len: usize,
    #[serde(default)]
    pub pairing: PairingMode,
}

impl ProtocolConfig {
    /// Uncoded transmission: one message symbol per matched pair.
    pub fn uncoded(q: u32, k: usize, rho: f64, n: usize, seed: u64) -> Self {
        Self {
            q,
            k,
            rho,
            n,
            seed,
            message_len: 1,
            block_len: 1,
            pairing: PairingMode::Causal,
        }
    }

    pub fn coded(mut self, message_len: usize, block_len: usize) -> Self {
        self.message_len = message_len;
        self.block_len = block_len;
        self
    }

    pub fn alphabet_size(&self) -> u128 {
        u128::from(self.q.saturating_sub(1)).saturating_pow((self.k * self.k) as u32)
    }

    pub fn validate(&self) -> Result<()> {
        let field = PrimeField::odd(self.q)?;
        if self.k < 2 {
            return Err(Error::TooFewUsers(self.k));
        }
        FiniteFieldNoiseModel::new(field, self.rho)?;
        check_noise_level(field, self.rho)?;
        if self.message_len == 0 || self.block_len < self.message_len {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= m <= n' (got m={}, n'={})",
                self.message_len, self.block_len
            )));
        }
        let candidates = u128::from(self.q)
            .checked_pow(self.message_len as u32)
            .unwrap_or(u128::MAX);
        if candidates > MAX_CANDIDATES {
            return Err(Error::SearchTooLarge(candidates));
        }
        let min = min_channel_uses(self.alphabet_size(), self.block_len);
        if (self.n as u128) < min {
            return Err(Error::TooFewChannelUses { n: self.n, min });
        }
        Ok(())
    }
}

/// Smallest `n` accepted by [`run_protocol`]. Uncoded runs need one pair;
/// coded runs need `n >= 2 n' |H|`, so that each state expects enough
/// occurrences to fill one codeword.
pub fn min_channel_uses(alphabet_size: u128, block_len: usize) -> u128 {
    if block_len <= 1 {
        2
    } else {
        2 * block_len as u128 * alphabet_size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserReport {
    pub user: usize,
    /// Wrong estimates of `u` (fresh slots).
    pub function_errors_fresh: usize,
    /// Wrong estimates of `v` (repeat slots).
    pub function_errors_repeat: usize,
    pub message_errors: usize,
    pub error_rate: Option<f64>,
    /// Bits per channel use delivered to this user, over all `n` slots.
    pub achieved_rate: f64,
}

/// Rate lost relative to the symmetric rate, in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLosses {
    /// `R_sym - code_rate / 2`.
    pub coding_backoff: f64,
    /// Slots left unmatched or discarded.
    pub matching_loss: f64,
    /// Matched pairs that did not fill a whole codeword.
    pub block_fill_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub config: ProtocolConfig,
    pub alphabet_size: f64,
    pub noise_entropy: f64,
    pub symmetric_rate: f64,
    pub code_rate: f64,
    pub matched_pairs: usize,
    pub matched_fraction: f64,
    pub blocks: usize,
    pub used_fraction: f64,
    pub users: Vec<UserReport>,
    pub all_user_errors: usize,
    pub all_user_error_rate: Option<f64>,
    pub losses: RateLosses,
}

/// Per-block decoding outcome, for traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockOutcome {
    pub key: StateKey,
    pub fresh: Vec<usize>,
    pub repeat: Vec<usize>,
    /// Per user: (u correct, v correct, w correct).
    pub users: Vec<(bool, bool, bool)>,
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub report: ProtocolReport,
    pub plan: PairingPlan,
    pub blocks: Vec<BlockOutcome>,
}

impl ProtocolRun {
    /// `block,user,first_fresh,first_repeat,u_ok,v_ok,w_ok` rows.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "block,user,first_fresh,first_repeat,u_ok,v_ok,w_ok")?;
        for (b, block) in self.blocks.iter().enumerate() {
            for (k, (u, v, w)) in block.users.iter().enumerate() {
                writeln!(out, "{b},{k},{},{},{u},{v},{w}", block.fresh[0], block.repeat[0])?;
            }
        }
        Ok(())
    }
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolReport> {
    simulate_protocol(config).map(|run| run.report)
}

/// Runs the protocol and keeps the pairing plan and per-block outcomes.
pub fn simulate_protocol(config: &ProtocolConfig) -> Result<ProtocolRun> {
    config.validate()?;
    let field = PrimeField::odd(config.q)?;
    let k = config.k;
    let n = config.n;
    let noise = FiniteFieldNoiseModel::new(field, config.rho)?;
    let seeds = SeedSequence::new(config.seed);

    let states = ff_states(seeds, field, k, n)?;
    let plan = build_pairing(&states, None, config.pairing)?;
    let code = if config.message_len == config.block_len {
        LinearCode::uncoded(field, config.message_len)?
    } else {
        LinearCode::random_full_rank(
            &mut seeds.stream(Stream::Codebook),
            field,
            config.message_len,
            config.block_len,
        )?
    };
    let decoder = code.decoder()?;

    // Pairs grouped by the fresh state, each group in fresh-time order.
    let mut groups: HashMap<StateKey, Vec<(usize, usize)>> = HashMap::new();
    for (fresh, repeat) in plan.pairs() {
        let key = plan.slots()[fresh].key.clone().expect("matched slots have keys");
        groups.entry(key).or_default().push((fresh, repeat));
    }
    let mut layout: Vec<(StateKey, Vec<(usize, usize)>)> = Vec::new();
    for (key, pairs) in groups {
        for chunk in pairs.chunks_exact(config.block_len) {
            layout.push((key.clone(), chunk.to_vec()));
        }
    }
    layout.sort_by_key(|(_, chunk)| chunk[0].0);

    let noise_values: Vec<Vec<u32>> = (0..k)
        .map(|user| {
            let mut rng = seeds.stream(Stream::Noise(user));
            (0..n).map(|_| noise.sample(&mut rng).value()).collect()
        })
        .collect();
    let mut message_rngs: Vec<_> = (0..k).map(|user| seeds.stream(Stream::Messages(user))).collect();
    let q = field.modulus();
    let messages: Vec<Vec<Vec<u32>>> = layout
        .iter()
        .map(|_| {
            message_rngs
                .iter_mut()
                .map(|rng| (0..config.message_len).map(|_| rng.random_range(0..q)).collect())
                .collect()
        })
        .collect();

    let outcomes: Vec<Result<BlockOutcome>> = layout
        .par_iter()
        .zip(messages.par_iter())
        .map(|((key, chunk), w)| {
            let fresh_state = states[chunk[0].0].field().expect("finite-field state");
            let repeat_state = states[chunk[0].1].field().expect("finite-field state");
            let codewords: Vec<Vec<u32>> = w.iter().map(|wl| code.encode(wl)).collect::<Result<_>>()?;
            let receive = |h: &FieldMatrix, user: usize, slots: &mut dyn Iterator<Item = usize>| -> Vec<u32> {
                let row = h.row(user);
                slots
                    .enumerate()
                    .map(|(i, t)| {
                        let clean = row
                            .iter()
                            .zip(&codewords)
                            .fold(0, |acc, (&hl, x)| field.add(acc, field.mul(hl, x[i])));
                        field.add(clean, noise_values[user][t])
                    })
                    .collect()
            };
            let mut users = Vec::with_capacity(k);
            for user in 0..k {
                let y_fresh = receive(fresh_state, user, &mut chunk.iter().map(|p| p.0));
                let y_repeat = receive(repeat_state, user, &mut chunk.iter().map(|p| p.1));
                let u_hat = decoder.decode(&y_fresh)?;
                let v_hat = decoder.decode(&y_repeat)?;
                let u = combine(field, fresh_state.row(user), w);
                let v = combine(field, repeat_state.row(user), w);
                let w_hat = recover_message(fresh_state, user, &u_hat, &v_hat)?;
                users.push((u_hat == u, v_hat == v, w_hat == w[user]));
            }
            Ok(BlockOutcome {
                key: key.clone(),
                fresh: chunk.iter().map(|p| p.0).collect(),
                repeat: chunk.iter().map(|p| p.1).collect(),
                users,
            })
        })
        .collect();
    let blocks: Vec<BlockOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let log_q = f64::from(q).log2();
    let entropy = noise.entropy();
    let symmetric_rate = 0.5 * (log_q - entropy);
    let code_rate = code.rate_bits();
    let summary = plan.summary();
    let used_fraction = (2 * blocks.len() * config.block_len) as f64 / n as f64;
    let achieved_rate = (blocks.len() * config.message_len) as f64 * log_q / n as f64;
    let rate_of = |errors: usize| (!blocks.is_empty()).then(|| errors as f64 / blocks.len() as f64);

    let users = (0..k)
        .map(|user| {
            let count = |pick: fn(&(bool, bool, bool)) -> bool| blocks.iter().filter(|b| !pick(&b.users[user])).count();
            let message_errors = count(|o| o.2);
            UserReport {
                user,
                function_errors_fresh: count(|o| o.0),
                function_errors_repeat: count(|o| o.1),
                message_errors,
                error_rate: rate_of(message_errors),
                achieved_rate,
            }
        })
        .collect();
    let all_user_errors = blocks.iter().filter(|b| b.users.iter().any(|o| !o.2)).count();

    let report = ProtocolReport {
        config: config.clone(),
        alphabet_size: config.alphabet_size() as f64,
        noise_entropy: entropy,
        symmetric_rate,
        code_rate,
        matched_pairs: summary.matched_pairs,
        matched_fraction: summary.matched_fraction,
        blocks: blocks.len(),
        used_fraction,
        users,
        all_user_errors,
        all_user_error_rate: rate_of(all_user_errors),
        losses: RateLosses {
            coding_backoff: symmetric_rate - 0.5 * code_rate,
            matching_loss: 0.5 * code_rate * (1.0 - summary.matched_fraction),
            block_fill_loss: 0.5 * code_rate * (summary.matched_fraction - used_fraction),
        },
    };
    Ok(ProtocolRun { report, plan, blocks })
}
