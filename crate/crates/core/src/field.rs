//! Prime-field arithmetic.
//!
//! Every [`Fe`] carries the modulus of the field it belongs to. Combining
//! elements of two different fields is a programming error and panics.

use std::cell::Cell;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 2^61 - 1, the default run modulus.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} exceeds 63 bits")]
    ModulusTooLarge(u64),
}

thread_local! {
    static MUL_OPS: Cell<u64> = const { Cell::new(0) };
}

/// Number of field multiplications and inversions performed on this thread.
///
/// Additions are free under the dominant-cost convention.
pub fn op_count() -> u64 {
    MUL_OPS.with(|c| c.get())
}

#[inline]
fn bump(n: u64) {
    MUL_OPS.with(|c| c.set(c.get() + n));
}

/// A prime field context.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Field {
    p: u64,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.p)
    }
}

impl Field {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p >= 1 << 63 {
            return Err(FieldError::ModulusTooLarge(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Field { p })
    }

    /// The default 61-bit Mersenne field.
    pub fn mersenne61() -> Self {
        Field { p: MERSENNE_61 }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Reduces an arbitrary integer into the field.
    pub fn elem(&self, v: u64) -> Fe {
        Fe { v: v % self.p, p: self.p }
    }

    /// Accepts `v` only if it is already a canonical residue.
    pub fn try_elem(&self, v: u64) -> Option<Fe> {
        (v < self.p).then_some(Fe { v, p: self.p })
    }

    pub fn from_i64(&self, v: i64) -> Fe {
        let r = v.rem_euclid(self.p as i64);
        Fe { v: r as u64, p: self.p }
    }

    pub fn zero(&self) -> Fe {
        Fe { v: 0, p: self.p }
    }

    pub fn one(&self) -> Fe {
        Fe { v: 1 % self.p, p: self.p }
    }

    /// Uniform sample from `[0, p)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe { v: rng.random_range(0..self.p), p: self.p }
    }

    /// Uniform sample from `[1, p)`.
    pub fn sample_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe { v: rng.random_range(1..self.p), p: self.p }
    }

    #[inline]
    fn mul_raw(&self, a: u64, b: u64) -> u64 {
        if self.p == MERSENNE_61 {
            let x = (a as u128) * (b as u128);
            let lo = (x as u64) & MERSENNE_61;
            let hi = (x >> 61) as u64;
            let s = lo + hi;
            if s >= MERSENNE_61 {
                s - MERSENNE_61
            } else {
                s
            }
        } else if self.p < 1 << 32 {
            (a * b) % self.p
        } else {
            ((a as u128 * b as u128) % self.p as u128) as u64
        }
    }
}

/// An element of a prime field.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fe {
    v: u64,
    p: u64,
}

impl fmt::Debug for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl Fe {
    #[inline]
    pub fn value(&self) -> u64 {
        self.v
    }

    #[inline]
    pub fn field(&self) -> Field {
        Field { p: self.p }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.v == 0
    }

    #[inline]
    fn check(&self, other: &Fe) {
        assert_eq!(self.p, other.p, "mixing elements of F_{} and F_{}", self.p, other.p);
    }

    pub fn pow(self, mut e: u64) -> Fe {
        let field = self.field();
        let mut base = self.v;
        let mut acc = 1 % self.p;
        let mut muls = 0;
        while e > 0 {
            if e & 1 == 1 {
                acc = field.mul_raw(acc, base);
                muls += 1;
            }
            base = field.mul_raw(base, base);
            muls += 1;
            e >>= 1;
        }
        bump(muls);
        Fe { v: acc, p: self.p }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inverse(self) -> Result<Fe, FieldError> {
        if self.v == 0 {
            return Err(FieldError::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.p as i128, self.v as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        bump(1);
        let v = s0.rem_euclid(self.p as i128) as u64;
        Ok(Fe { v, p: self.p })
    }

    pub fn checked_div(self, rhs: Fe) -> Result<Fe, FieldError> {
        self.check(&rhs);
        Ok(self * rhs.inverse()?)
    }
}

impl Add for Fe {
    type Output = Fe;
    #[inline]
    fn add(self, rhs: Fe) -> Fe {
        self.check(&rhs);
        let s = self.v + rhs.v;
        Fe { v: if s >= self.p { s - self.p } else { s }, p: self.p }
    }
}

impl Sub for Fe {
    type Output = Fe;
    #[inline]
    fn sub(self, rhs: Fe) -> Fe {
        self.check(&rhs);
        let v = if self.v >= rhs.v { self.v - rhs.v } else { self.v + self.p - rhs.v };
        Fe { v, p: self.p }
    }
}

impl Mul for Fe {
    type Output = Fe;
    #[inline]
    fn mul(self, rhs: Fe) -> Fe {
        self.check(&rhs);
        bump(1);
        Fe { v: self.field().mul_raw(self.v, rhs.v), p: self.p }
    }
}

impl Neg for Fe {
    type Output = Fe;
    #[inline]
    fn neg(self) -> Fe {
        Fe { v: if self.v == 0 { 0 } else { self.p - self.v }, p: self.p }
    }
}

impl AddAssign for Fe {
    fn add_assign(&mut self, rhs: Fe) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fe {
    fn sub_assign(&mut self, rhs: Fe) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fe {
    fn mul_assign(&mut self, rhs: Fe) {
        *self = *self * rhs;
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f7() -> Field {
        Field::new(7).unwrap()
    }

    #[test]
    fn small_prime_arithmetic() {
        let f = f7();
        assert_eq!(f.elem(3) + f.elem(4), f.zero());
        for x in 0..7 {
            assert_eq!(f.one() * f.elem(x), f.elem(x));
        }
        // 5 * 2 = 10 = 3 mod 7
        assert_eq!(f.elem(3).checked_div(f.elem(5)).unwrap(), f.elem(2));
        assert_eq!(f.elem(3).checked_div(f.zero()), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn inverses_match_brute_force() {
        let f = f7();
        assert_eq!(f.one().inverse().unwrap(), f.one());
        assert_eq!(f.elem(3).inverse().unwrap(), f.elem(5));
        let f11 = Field::new(11).unwrap();
        assert_eq!(f11.elem(10).inverse().unwrap(), f11.elem(10));
        assert_eq!(f.zero().inverse(), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn exhaustive_field_axioms_p101() {
        let f = Field::new(101).unwrap();
        for a in 0..101 {
            let a = f.elem(a);
            for b in 0..101 {
                let b = f.elem(b);
                assert_eq!(a + b, b + a);
                assert_eq!(a * b, b * a);
                assert_eq!(a - b + b, a);
            }
            if !a.is_zero() {
                // brute-force oracle for the inverse
                let inv = (1..101).map(|y| f.elem(y)).find(|y| (a * *y).value() == 1).unwrap();
                assert_eq!(a.inverse().unwrap(), inv);
                assert_eq!(a * a.inverse().unwrap(), f.one());
            }
        }
    }

    #[test]
    fn mersenne_reduction_agrees_with_generic() {
        let f = Field::mersenne61();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let a = f.sample(&mut rng);
            let b = f.sample(&mut rng);
            let expect = ((a.value() as u128 * b.value() as u128) % MERSENNE_61 as u128) as u64;
            assert_eq!((a * b).value(), expect);
        }
        assert_eq!(f.elem(MERSENNE_61 - 1) * f.elem(MERSENNE_61 - 1), f.one());
    }

    #[test]
    fn primality() {
        assert!(is_prime(MERSENNE_61));
        assert!(is_prime(257));
        assert!(!is_prime(1));
        assert!(!is_prime(561));
        assert!(Field::new(91).is_err());
    }

    #[test]
    #[should_panic(expected = "mixing elements")]
    fn mixing_fields_panics() {
        let _ = f7().one() + Field::new(11).unwrap().one();
    }

    #[test]
    fn sampling_is_reproducible() {
        let f = Field::mersenne61();
        let a = f.sample(&mut ChaCha8Rng::seed_from_u64(9));
        let b = f.sample(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_is_uniform_p7() {
        // chi-square, 6 degrees of freedom, critical value at 0.001 is 22.458
        let f = f7();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut counts = [0u64; 7];
        for _ in 0..10_000 {
            counts[f.sample(&mut rng).value() as usize] += 1;
        }
        let expected = 10_000.0 / 7.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 22.458, "chi2 = {chi2}");
        // each bin within 4 sigma
        let sigma = (10_000.0 * (1.0 / 7.0) * (6.0 / 7.0) as f64).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn distinct_seeds_are_uncorrelated() {
        let f = Field::new(257).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..1000).map(|_| f.sample(&mut r1).value() as f64).collect();
        let ys: Vec<f64> = (0..1000).map(|_| f.sample(&mut r2).value() as f64).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (mean(&xs), mean(&ys));
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let rho = cov / (vx * vy).sqrt();
        // |rho| < 4/sqrt(1000) under independence
        assert!(rho.abs() < 0.126, "rho = {rho}");
        // no fixed offset relation
        let offsets: std::collections::BTreeSet<u64> =
            xs.iter().zip(&ys).map(|(x, y)| ((*x as i64 - *y as i64).rem_euclid(257)) as u64).collect();
        assert!(offsets.len() > 100);
    }
}
