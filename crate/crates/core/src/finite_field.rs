//! Arithmetic over the prime field GF(q) and square matrices over it.
//!
//! Elements are stored as reduced `u32` residues. [`PrimeField`] is the
//! arithmetic context used in hot loops; [`FieldElement`] carries its modulus
//! and checks it on every binary operation.
//!
//! The channel alphabet of the finite-field model is GF(q) without zero.
//! [`PrimeField::diagonal_pair`] and [`FieldMatrix::complement`] implement the
//! pairing map `g` that makes `H + g(H)` diagonal with a nonzero diagonal,
//! while keeping every entry of `g(H)` inside that alphabet.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let n = u64::from(n);
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PrimeField {
    q: u32,
}

impl TryFrom<u32> for PrimeField {
    type Error = Error;

    fn try_from(q: u32) -> Result<Self> {
        Self::new(q)
    }
}

impl From<PrimeField> for u32 {
    fn from(f: PrimeField) -> u32 {
        f.q
    }
}

impl PrimeField {
    /// Any prime modulus, including 2.
    pub fn new(q: u32) -> Result<Self> {
        if is_prime(q) {
            Ok(Self { q })
        } else {
            Err(Error::NotPrime(q))
        }
    }

    /// An odd prime modulus, as required by the channel alphabet.
    pub fn odd(q: u32) -> Result<Self> {
        if q >= 3 && is_prime(q) {
            Ok(Self { q })
        } else {
            Err(Error::NotOddPrime(q))
        }
    }

    #[inline]
    pub fn modulus(self) -> u32 {
        self.q
    }

    pub fn is_odd(self) -> bool {
        self.q != 2
    }

    pub fn element(self, value: u32) -> Result<FieldElement> {
        FieldElement::new(value, self)
    }

    #[inline]
    pub fn reduce(self, v: u64) -> u32 {
        (v % u64::from(self.q)) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        self.reduce(u64::from(a) + u64::from(b))
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        self.reduce(u64::from(a) + u64::from(self.q) - u64::from(b))
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        self.reduce(u64::from(a) * u64::from(b))
    }

    pub fn pow(self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.q;
        base %= self.q;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self, a: u32) -> Result<u32> {
        if a.is_multiple_of(self.q) {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, u64::from(self.q) - 2))
    }

    /// The diagonal half of the pairing map: `1 - a` for `a != 1`, and `1`
    /// for `a == 1`, so the result never leaves GF(q) without zero.
    ///
    /// `a + diagonal_pair(a)` is 1 for every `a != 1` and 2 for `a == 1`.
    pub fn diagonal_pair(self, a: u32) -> Result<u32> {
        if !self.is_odd() {
            return Err(Error::EvenCharacteristic);
        }
        match a % self.q {
            0 => Err(Error::ZeroEntry),
            1 => Ok(1),
            a => Ok(self.sub(1, a)),
        }
    }
}

/// A single element of GF(q) that remembers its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    value: u32,
    modulus: u32,
}

impl FieldElement {
    pub fn new(value: u32, field: PrimeField) -> Result<Self> {
        if value >= field.q {
            return Err(Error::Unreduced {
                value,
                modulus: field.q,
            });
        }
        Ok(Self {
            value,
            modulus: field.q,
        })
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> u32 {
        self.modulus
    }

    pub fn field(self) -> PrimeField {
        PrimeField { q: self.modulus }
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn check(self, other: Self) -> Result<PrimeField> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(self.field())
    }

    fn with(self, value: u32) -> Self {
        Self {
            value,
            modulus: self.modulus,
        }
    }

    pub fn add(self, other: Self) -> Result<Self> {
        let f = self.check(other)?;
        Ok(self.with(f.add(self.value, other.value)))
    }

    pub fn sub(self, other: Self) -> Result<Self> {
        let f = self.check(other)?;
        Ok(self.with(f.sub(self.value, other.value)))
    }

    pub fn mul(self, other: Self) -> Result<Self> {
        let f = self.check(other)?;
        Ok(self.with(f.mul(self.value, other.value)))
    }

    pub fn neg(self) -> Self {
        self.with(self.field().neg(self.value))
    }

    pub fn inv(self) -> Result<Self> {
        Ok(self.with(self.field().inv(self.value)?))
    }

    pub fn diagonal_pair(self) -> Result<Self> {
        Ok(self.with(self.field().diagonal_pair(self.value)?))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

/// Dense K x K matrix over GF(q), stored row-major.
///
/// Serializes as `{"modulus": q, "entries": [[..], ..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawFieldMatrix", into = "RawFieldMatrix")]
pub struct FieldMatrix {
    modulus: u32,
    dim: usize,
    entries: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct RawFieldMatrix {
    modulus: u32,
    entries: Vec<Vec<u32>>,
}

impl TryFrom<RawFieldMatrix> for FieldMatrix {
    type Error = Error;

    fn try_from(raw: RawFieldMatrix) -> Result<Self> {
        Self::from_rows(PrimeField::new(raw.modulus)?, raw.entries)
    }
}

impl From<FieldMatrix> for RawFieldMatrix {
    fn from(m: FieldMatrix) -> Self {
        RawFieldMatrix {
            modulus: m.modulus,
            entries: m.rows(),
        }
    }
}

impl FieldMatrix {
    pub fn from_rows(field: PrimeField, rows: Vec<Vec<u32>>) -> Result<Self> {
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
            for v in row {
                if v >= field.q {
                    return Err(Error::Unreduced {
                        value: v,
                        modulus: field.q,
                    });
                }
                entries.push(v);
            }
        }
        Ok(Self {
            modulus: field.q,
            dim,
            entries,
        })
    }

    /// Builds a matrix from row-major residues already reduced mod q.
    pub(crate) fn from_entries(field: PrimeField, dim: usize, entries: Vec<u32>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        debug_assert!(entries.iter().all(|&v| v < field.q));
        Self {
            modulus: field.q,
            dim,
            entries,
        }
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { q: self.modulus }
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn row(&self, row: usize) -> &[u32] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.entries.chunks(self.dim).map(<[u32]>::to_vec).collect()
    }

    /// True when every entry is nonzero, i.e. the matrix is a legal channel state.
    pub fn is_channel_valid(&self) -> bool {
        self.entries.iter().all(|&v| v != 0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let f = self.field();
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| f.add(a, b))
            .collect();
        Ok(Self::from_entries(f, self.dim, entries))
    }

    /// The complementary channel state `g(H)`.
    ///
    /// Off-diagonal entries are negated and diagonal entries go through
    /// [`PrimeField::diagonal_pair`]. `H + g(H)` has zero off-diagonals and a
    /// diagonal in `{1, 2}`; `g` is an involution on the channel alphabet.
    pub fn complement(&self) -> Result<Self> {
        let f = self.field();
        if !f.is_odd() {
            return Err(Error::EvenCharacteristic);
        }
        let mut entries = Vec::with_capacity(self.entries.len());
        for (i, &v) in self.entries.iter().enumerate() {
            if v == 0 {
                return Err(Error::ZeroEntry);
            }
            let (r, c) = (i / self.dim, i % self.dim);
            entries.push(if r == c { f.diagonal_pair(v)? } else { f.neg(v) });
        }
        Ok(Self::from_entries(f, self.dim, entries))
    }
}

/// Free-function form of [`FieldMatrix::complement`].
pub fn complement_matrix(h: &FieldMatrix) -> Result<FieldMatrix> {
    h.complement()
}

impl fmt::Display for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, row) in self.entries.chunks(self.dim).enumerate() {
            if r > 0 {
                f.write_str(";")?;
            }
            for (c, v) in row.iter().enumerate() {
                if c > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{v}")?;
            }
        }
        Ok(())
    }
}

/// Row rank of a matrix over GF(q) given as equal-length rows.
pub fn rank(field: PrimeField, rows: &[Vec<u32>]) -> usize {
    let mut m: Vec<Vec<u32>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = field.inv(m[rank][col]).expect("pivot is nonzero");
        for v in m[rank].iter_mut() {
            *v = field.mul(*v, inv);
        }
        for r in 0..m.len() {
            if r != rank && m[r][col] != 0 {
                let factor = m[r][col];
                for c in 0..cols {
                    let sub = field.mul(factor, m[rank][c]);
                    m[r][c] = field.sub(m[r][c], sub);
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u32) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn scalar_examples() {
        let f5 = f(5);
        let f7 = f(7);
        let a = f5.element(3).unwrap();
        assert_eq!(a.add(f5.element(4).unwrap()).unwrap().value(), 2);
        assert_eq!(f5.element(0).unwrap().add(f5.element(2).unwrap()).unwrap().value(), 2);
        assert_eq!(f7.element(6).unwrap().add(f7.element(1).unwrap()).unwrap().value(), 0);
        assert_eq!(a.neg().value(), 2);
        assert_eq!(a.inv().unwrap().value(), 2);
        assert_eq!(f7.mul(3, 5), 1);
    }

    #[test]
    fn mismatched_moduli_are_rejected() {
        let a = f(5).element(1).unwrap();
        let b = f(7).element(1).unwrap();
        assert_eq!(a.add(b), Err(Error::ModulusMismatch(5, 7)));
        assert!(a.mul(b).is_err());
    }

    #[test]
    fn inverse_of_zero_fails() {
        assert_eq!(f(5).element(0).unwrap().inv(), Err(Error::ZeroInverse));
    }

    #[test]
    fn unreduced_values_are_rejected() {
        assert!(f(5).element(5).is_err());
    }

    #[test]
    fn modulus_validation() {
        assert_eq!(PrimeField::odd(4), Err(Error::NotOddPrime(4)));
        assert_eq!(PrimeField::odd(2), Err(Error::NotOddPrime(2)));
        assert!(PrimeField::new(2).is_ok());
        assert!(PrimeField::new(9).is_err());
        assert!(PrimeField::odd(13).is_ok());
    }

    #[test]
    fn diagonal_pair_examples() {
        assert_eq!(f(5).diagonal_pair(3).unwrap(), 3);
        assert_eq!(f(5).diagonal_pair(1).unwrap(), 1);
        assert_eq!(f(7).diagonal_pair(4).unwrap(), 4);
        assert_eq!(f(5).diagonal_pair(0), Err(Error::ZeroEntry));
        assert_eq!(f(2).diagonal_pair(1), Err(Error::EvenCharacteristic));
    }

    #[test]
    fn diagonal_pair_is_a_permutation_of_nonzero_elements() {
        for q in [3u32, 5, 7, 11, 13, 101] {
            let field = f(q);
            let mut seen = vec![false; q as usize];
            for a in 1..q {
                let s = field.diagonal_pair(a).unwrap();
                assert_ne!(s, 0);
                assert!(!seen[s as usize]);
                seen[s as usize] = true;
                let sum = field.add(a, s);
                assert!(sum == 1 || sum == 2);
                assert_eq!(field.diagonal_pair(s).unwrap(), a);
            }
        }
    }

    #[test]
    fn field_axioms_hold_exhaustively() {
        for q in [2u32, 3, 5, 7, 11, 13] {
            let fl = f(q);
            for a in 0..q {
                assert_eq!(fl.add(a, fl.neg(a)), 0);
                if a != 0 {
                    assert_eq!(fl.mul(a, fl.inv(a).unwrap()), 1);
                }
                for b in 0..q {
                    assert_eq!(fl.add(a, b), fl.add(b, a));
                    assert_eq!(fl.mul(a, b), fl.mul(b, a));
                    assert_eq!(fl.sub(fl.add(a, b), b), a);
                    for c in 0..q {
                        assert_eq!(fl.add(fl.add(a, b), c), fl.add(a, fl.add(b, c)));
                        assert_eq!(fl.mul(fl.mul(a, b), c), fl.mul(a, fl.mul(b, c)));
                        assert_eq!(fl.mul(a, fl.add(b, c)), fl.add(fl.mul(a, b), fl.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn complement_example() {
        let h = FieldMatrix::from_rows(f(5), vec![vec![2, 3], vec![4, 1]]).unwrap();
        let g = h.complement().unwrap();
        assert_eq!(g.rows(), vec![vec![4, 2], vec![1, 1]]);
        assert_eq!(h.add(&g).unwrap().rows(), vec![vec![1, 0], vec![0, 2]]);
        assert_eq!(g.complement().unwrap(), h);
    }

    #[test]
    fn complement_rejects_zero_entries() {
        let h = FieldMatrix::from_rows(f(5), vec![vec![2, 0], vec![4, 1]]).unwrap();
        assert_eq!(h.complement(), Err(Error::ZeroEntry));
    }

    #[test]
    fn complement_is_a_fixed_point_free_bijection_for_q3_k2() {
        let field = f(3);
        let mut all = Vec::new();
        for code in 0..16u32 {
            let entries = (0..4).map(|i| 1 + ((code >> i) & 1)).collect();
            all.push(FieldMatrix::from_entries(field, 2, entries));
        }
        let images: std::collections::BTreeSet<_> = all.iter().map(|h| h.complement().unwrap()).collect();
        assert_eq!(images.len(), 16);
        for h in &all {
            let g = h.complement().unwrap();
            assert!(g.is_channel_valid());
            assert_ne!(&g, h);
        }
    }

    #[test]
    fn matrix_json_shape() {
        let h = FieldMatrix::from_rows(f(5), vec![vec![2, 3], vec![4, 1]]).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"modulus":5,"entries":[[2,3],[4,1]]}"#);
        let back: FieldMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<FieldMatrix>(r#"{"modulus":4,"entries":[[1,1],[1,1]]}"#).is_err());
        assert!(serde_json::from_str::<FieldMatrix>(r#"{"modulus":5,"entries":[[1,1],[1]]}"#).is_err());
        assert!(serde_json::from_str::<FieldMatrix>(r#"{"modulus":5,"entries":[[1,7],[1,1]]}"#).is_err());
    }

    #[test]
    fn rank_examples() {
        let fl = f(5);
        assert_eq!(rank(fl, &[vec![1, 0, 2], vec![0, 1, 3]]), 2);
        assert_eq!(rank(fl, &[vec![1, 2, 3], vec![2, 4, 1]]), 1);
        assert_eq!(rank(fl, &[vec![0, 0, 0]]), 0);
    }
}
