//! Exact scalars over 𝔽_p and over ℤ_(p), the rationals with denominator
//! coprime to p.
//!
//! ℤ_(p) is a local principal ideal domain with maximal ideal (p); every
//! nonzero element factors as unit · p^v with v ≥ 0 its valuation. 𝔽_p
//! elements are canonical residues in 0..p. The prime is required to be odd:
//! the sign conventions of the graded world need 1/2.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Coefficient ring tag: 𝔽_p or ℤ_(p).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ring {
    Fp(u32),
    Local(u32),
}

fn is_odd_prime(p: u32) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= p as u64 {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

impl Ring {
    pub fn fp(p: u32) -> Result<Ring> {
        if is_odd_prime(p) {
            Ok(Ring::Fp(p))
        } else {
            Err(Error::InvalidPrime(p))
        }
    }

    pub fn local(p: u32) -> Result<Ring> {
        if is_odd_prime(p) {
            Ok(Ring::Local(p))
        } else {
            Err(Error::InvalidPrime(p))
        }
    }

    pub fn prime(&self) -> u32 {
        match *self {
            Ring::Fp(p) | Ring::Local(p) => p,
        }
    }

    pub fn is_field(&self) -> bool {
        matches!(self, Ring::Fp(_))
    }

    /// The 𝔽_p ring with the same prime.
    pub fn residue_field(&self) -> Ring {
        Ring::Fp(self.prime())
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Fp(p) => write!(f, "F_{}", p),
            Ring::Local(p) => write!(f, "Z_({})", p),
        }
    }
}

fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = (acc as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

fn big_valuation(n: &BigInt, p: u32) -> u32 {
    let mut v = 0u32;
    let p = BigInt::from(p);
    let mut n = n.clone();
    while !n.is_zero() && (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    v
}

/// An exact coefficient, tagged with its ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    /// Residue in 0..p.
    Fp { p: u32, r: u64 },
    /// Reduced fraction with positive denominator coprime to p.
    Local { p: u32, v: BigRational },
}

impl Scalar {
    pub fn ring(&self) -> Ring {
        match self {
            Scalar::Fp { p, .. } => Ring::Fp(*p),
            Scalar::Local { p, .. } => Ring::Local(*p),
        }
    }

    pub fn zero(ring: Ring) -> Scalar {
        Scalar::from_i64(ring, 0)
    }

    pub fn one(ring: Ring) -> Scalar {
        Scalar::from_i64(ring, 1)
    }

    pub fn from_i64(ring: Ring, n: i64) -> Scalar {
        match ring {
            Ring::Fp(p) => {
                let r = n.rem_euclid(p as i64) as u64;
                Scalar::Fp { p, r }
            }
            Ring::Local(p) => Scalar::Local {
                p,
                v: BigRational::from_integer(BigInt::from(n)),
            },
        }
    }

    /// Build num/den, reducing; rejects denominators divisible by p
    /// (or zero in 𝔽_p).
    pub fn from_fraction(ring: Ring, num: i64, den: i64) -> Result<Scalar> {
        if den == 0 {
            return Err(Error::InvalidScalar("zero denominator".into()));
        }
        match ring {
            Ring::Fp(p) => {
                if den.rem_euclid(p as i64) == 0 {
                    return Err(Error::InvalidScalar(format!(
                        "denominator {} is zero mod {}",
                        den, p
                    )));
                }
                let d = Scalar::from_i64(ring, den);
                let n = Scalar::from_i64(ring, num);
                Ok(n.mul(&d.inv().expect("nonzero residue")))
            }
            Ring::Local(p) => {
                let v = BigRational::new(BigInt::from(num), BigInt::from(den));
                if (v.denom() % BigInt::from(p)).is_zero() {
                    return Err(Error::InvalidScalar(format!(
                        "denominator of {}/{} is divisible by {}",
                        num, den, p
                    )));
                }
                Ok(Scalar::Local { p, v })
            }
        }
    }

    pub fn from_ratio(ring: Ring, v: BigRational) -> Result<Scalar> {
        match ring {
            Ring::Fp(p) => {
                let pb = BigInt::from(p);
                if (v.denom() % &pb).is_zero() {
                    return Err(Error::InvalidScalar("denominator divisible by p".into()));
                }
                let num = v.numer().mod_floor(&pb);
                let den = v.denom().mod_floor(&pb);
                let num_u: u64 = num.try_into().expect("residue fits");
                let den_u: u64 = den.try_into().expect("residue fits");
                let den_inv = mod_pow(den_u, (p - 2) as u64, p as u64);
                Ok(Scalar::Fp {
                    p,
                    r: (num_u as u128 * den_inv as u128 % p as u128) as u64,
                })
            }
            Ring::Local(p) => {
                if (v.denom() % BigInt::from(p)).is_zero() {
                    return Err(Error::InvalidScalar("denominator divisible by p".into()));
                }
                Ok(Scalar::Local { p, v })
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Fp { r, .. } => *r == 0,
            Scalar::Local { v, .. } => v.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Fp { r, .. } => *r == 1,
            Scalar::Local { v, .. } => v.is_one(),
        }
    }

    fn assert_same_ring(&self, other: &Scalar) {
        assert_eq!(self.ring(), other.ring(), "scalar ring mismatch");
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        self.assert_same_ring(other);
        match (self, other) {
            (Scalar::Fp { p, r: a }, Scalar::Fp { r: b, .. }) => Scalar::Fp {
                p: *p,
                r: (a + b) % *p as u64,
            },
            (Scalar::Local { p, v: a }, Scalar::Local { v: b, .. }) => {
                Scalar::Local { p: *p, v: a + b }
            }
            _ => unreachable!(),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Fp { p, r } => Scalar::Fp {
                p: *p,
                r: if *r == 0 { 0 } else { *p as u64 - r },
            },
            Scalar::Local { p, v } => Scalar::Local { p: *p, v: -v },
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        self.assert_same_ring(other);
        match (self, other) {
            (Scalar::Fp { p, r: a }, Scalar::Fp { r: b, .. }) => Scalar::Fp {
                p: *p,
                r: (*a as u128 * *b as u128 % *p as u128) as u64,
            },
            (Scalar::Local { p, v: a }, Scalar::Local { v: b, .. }) => {
                Scalar::Local { p: *p, v: a * b }
            }
            _ => unreachable!(),
        }
    }

    pub fn mul_i64(&self, n: i64) -> Scalar {
        self.mul(&Scalar::from_i64(self.ring(), n))
    }

    /// p-adic valuation; `None` for zero. Always 0 on nonzero 𝔽_p elements.
    pub fn valuation(&self) -> Option<u32> {
        match self {
            Scalar::Fp { r, .. } => {
                if *r == 0 {
                    None
                } else {
                    Some(0)
                }
            }
            Scalar::Local { p, v } => {
                if v.is_zero() {
                    None
                } else {
                    Some(big_valuation(v.numer(), *p))
                }
            }
        }
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == Some(0)
    }

    pub fn inv(&self) -> Option<Scalar> {
        if !self.is_unit() {
            return None;
        }
        match self {
            Scalar::Fp { p, r } => Some(Scalar::Fp {
                p: *p,
                r: mod_pow(*r, (*p - 2) as u64, *p as u64),
            }),
            Scalar::Local { p, v } => Some(Scalar::Local {
                p: *p,
                v: v.recip(),
            }),
        }
    }

    /// Exact in-ring division: `Some(self / d)` when the quotient stays in
    /// the ring, `None` otherwise.
    pub fn div_exact(&self, d: &Scalar) -> Option<Scalar> {
        self.assert_same_ring(d);
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(self.clone());
        }
        match (self, d) {
            (Scalar::Fp { .. }, _) => Some(self.mul(&d.inv()?)),
            (Scalar::Local { p, v: a }, Scalar::Local { v: b, .. }) => {
                let q = a / b;
                if (q.denom() % BigInt::from(*p)).is_zero() {
                    None
                } else {
                    Some(Scalar::Local { p: *p, v: q })
                }
            }
            _ => unreachable!(),
        }
    }

    /// p^k as a scalar of this ring. In 𝔽_p this is 0 for k ≥ 1.
    pub fn p_power(ring: Ring, k: u32) -> Scalar {
        match ring {
            Ring::Fp(_) => {
                if k == 0 {
                    Scalar::one(ring)
                } else {
                    Scalar::zero(ring)
                }
            }
            Ring::Local(p) => {
                let mut v = BigInt::one();
                for _ in 0..k {
                    v *= BigInt::from(p);
                }
                Scalar::Local {
                    p,
                    v: BigRational::from_integer(v),
                }
            }
        }
    }

    /// Decompose a nonzero ℤ_(p) scalar as unit · p^v; 𝔽_p scalars are units.
    pub fn unit_part(&self) -> Option<Scalar> {
        let v = self.valuation()?;
        match self {
            Scalar::Fp { .. } => Some(self.clone()),
            Scalar::Local { .. } => self.div_exact(&Scalar::p_power(self.ring(), v)),
        }
    }

    /// Reduce a ℤ_(p) scalar mod p (identity on 𝔽_p scalars).
    pub fn reduce_mod_p(&self) -> Scalar {
        match self {
            Scalar::Fp { .. } => self.clone(),
            Scalar::Local { p, v } => {
                Scalar::from_ratio(Ring::Fp(*p), v.clone()).expect("denominator coprime to p")
            }
        }
    }

    /// Lift an 𝔽_p residue to the canonical integer representative in ℤ_(p).
    pub fn lift_to_local(&self) -> Scalar {
        match self {
            Scalar::Fp { p, r } => Scalar::from_i64(Ring::Local(*p), *r as i64),
            Scalar::Local { .. } => self.clone(),
        }
    }

    /// Canonical text rendering "a/b", the denominator omitted when 1.
    pub fn render(&self) -> String {
        match self {
            Scalar::Fp { r, .. } => format!("{}", r),
            Scalar::Local { v, .. } => {
                if v.denom().is_one() {
                    format!("{}", v.numer())
                } else {
                    format!("{}/{}", v.numer(), v.denom())
                }
            }
        }
    }

    /// True when the rendered form needs a leading minus.
    pub fn is_negative(&self) -> bool {
        match self {
            Scalar::Fp { .. } => false,
            Scalar::Local { v, .. } => v.is_negative(),
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Fp { .. } => self.clone(),
            Scalar::Local { p, v } => Scalar::Local { p: *p, v: v.abs() },
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_rejects_non_primes() {
        assert!(Ring::fp(2).is_err());
        assert!(Ring::fp(9).is_err());
        assert!(Ring::local(1).is_err());
        assert!(Ring::fp(3).is_ok());
        assert!(Ring::local(97).is_ok());
    }

    #[test]
    fn fp_arithmetic_canonical() {
        let r = Ring::fp(5).unwrap();
        let a = Scalar::from_i64(r, 7); // 2
        let b = Scalar::from_i64(r, -3); // 2
        assert_eq!(a, b);
        assert_eq!(a.mul(&b).render(), "4");
        assert_eq!(a.inv().unwrap().mul(&a), Scalar::one(r));
    }

    #[test]
    fn local_valuation_and_division() {
        let r = Ring::local(3).unwrap();
        let nine = Scalar::from_i64(r, 9);
        assert_eq!(nine.valuation(), Some(2));
        let half = Scalar::from_fraction(r, 1, 2).unwrap();
        assert_eq!(half.valuation(), Some(0));
        assert!(half.is_unit());
        // 1 not divisible by 3 inside Z_(3)
        let one = Scalar::one(r);
        let three = Scalar::from_i64(r, 3);
        assert!(one.div_exact(&three).is_none());
        assert_eq!(nine.div_exact(&three).unwrap(), three);
        // denominators with p rejected
        assert!(Scalar::from_fraction(r, 1, 3).is_err());
    }

    #[test]
    fn unit_part_recomposes() {
        let r = Ring::local(3).unwrap();
        let x = Scalar::from_fraction(r, 18, 5).unwrap();
        let v = x.valuation().unwrap();
        assert_eq!(v, 2);
        let u = x.unit_part().unwrap();
        assert!(u.is_unit());
        assert_eq!(u.mul(&Scalar::p_power(r, v)), x);
    }

    #[test]
    fn reduce_mod_p_respects_fractions() {
        let r = Ring::local(3).unwrap();
        let x = Scalar::from_fraction(r, 1, 2).unwrap();
        // 1/2 = 2 mod 3
        assert_eq!(x.reduce_mod_p().render(), "2");
    }

    #[test]
    fn render_fraction_form() {
        let r = Ring::local(5).unwrap();
        assert_eq!(Scalar::from_fraction(r, 3, 2).unwrap().render(), "3/2");
        assert_eq!(Scalar::from_i64(r, -4).render(), "-4");
        assert_eq!(Scalar::from_i64(r, 0).render(), "0");
    }
}
