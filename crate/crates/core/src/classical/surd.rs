use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectraError};

/// Exact quadratic surd `(p + q√d) / r` with `r > 0`.
///
/// All arithmetic is checked; overflow of the `i128` representation is
/// reported instead of wrapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadSurd {
    pub p: i128,
    pub q: i128,
    pub d: i128,
    pub r: i128,
}

const OVF: SpectraError = SpectraError::Overflow("quadratic surd arithmetic");

fn mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or(OVF)
}

fn add(a: i128, b: i128) -> Result<i128> {
    a.checked_add(b).ok_or(OVF)
}

fn sub(a: i128, b: i128) -> Result<i128> {
    a.checked_sub(b).ok_or(OVF)
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Moves square factors `k² | d` (for small `k`) into the coefficient.
fn extract_squares(mut d: i128, mut q: i128) -> Result<(i128, i128)> {
    let mut k: i128 = 2;
    while k <= 100_000 && k * k <= d {
        while d % (k * k) == 0 {
            d /= k * k;
            q = mul(q, k)?;
        }
        k += 1;
    }
    Ok((d, q))
}

impl QuadSurd {
    pub fn integer(n: i128) -> Self {
        QuadSurd { p: n, q: 0, d: 0, r: 1 }
    }

    pub fn rational(num: i128, den: i128) -> Result<Self> {
        Self::new(num, 0, 0, den)
    }

    /// Normalized `(p + q√d) / r`; `d` must be non-negative.
    pub fn new(p: i128, q: i128, d: i128, r: i128) -> Result<Self> {
        if r == 0 {
            return Err(SpectraError::Domain("zero denominator".into()));
        }
        if d < 0 {
            return Err(SpectraError::Domain("negative radicand".into()));
        }
        let (mut p, mut q, mut d, mut r) = (p, q, d, r);
        if d == 1 {
            p = add(p, q)?;
            q = 0;
        }
        if q == 0 || d == 0 {
            q = 0;
            d = 0;
        }
        if r < 0 {
            p = p.checked_neg().ok_or(OVF)?;
            q = q.checked_neg().ok_or(OVF)?;
            r = r.checked_neg().ok_or(OVF)?;
        }
        let g = gcd(gcd(p, q), r);
        if g > 1 {
            p /= g;
            q /= g;
            r /= g;
        }
        Ok(QuadSurd { p, q, d, r })
    }

    /// Same value with small square factors of the radicand pulled out.
    pub fn reduced(&self) -> Result<Self> {
        if self.q == 0 {
            return Ok(*self);
        }
        let (d, q) = extract_squares(self.d, self.q)?;
        Self::new(self.p, q, d, self.r)
    }

    pub fn is_rational(&self) -> bool {
        self.q == 0
    }

    /// Common radicand of two surds, if they live in the same field.
    fn common_d(&self, o: &QuadSurd) -> Result<i128> {
        match (self.q == 0, o.q == 0) {
            (true, true) => Ok(0),
            (true, false) => Ok(o.d),
            (false, true) => Ok(self.d),
            (false, false) if self.d == o.d => Ok(self.d),
            _ => Err(SpectraError::Unsupported(format!(
                "surds in different fields (sqrt {} vs sqrt {})",
                self.d, o.d
            ))),
        }
    }

    pub fn add(&self, o: &QuadSurd) -> Result<QuadSurd> {
        let d = self.common_d(o)?;
        let p = add(mul(self.p, o.r)?, mul(o.p, self.r)?)?;
        let q = add(mul(self.q, o.r)?, mul(o.q, self.r)?)?;
        Self::new(p, q, d, mul(self.r, o.r)?)
    }

    pub fn neg(&self) -> QuadSurd {
        QuadSurd {
            p: -self.p,
            q: -self.q,
            d: self.d,
            r: self.r,
        }
    }

    pub fn sub(&self, o: &QuadSurd) -> Result<QuadSurd> {
        self.add(&o.neg())
    }

    /// Norm numerator `p² − q² d` (the conjugate product times `r²`).
    fn norm_num(&self) -> Result<i128> {
        sub(mul(self.p, self.p)?, mul(mul(self.q, self.q)?, self.d)?)
    }

    pub fn recip(&self) -> Result<QuadSurd> {
        // r / (p + q√d) = r (p − q√d) / (p² − q² d)
        let n = self.norm_num()?;
        if n == 0 {
            return Err(SpectraError::Domain("reciprocal of zero".into()));
        }
        Self::new(mul(self.r, self.p)?, mul(-self.r, self.q)?, self.d, n)
    }

    /// `(a·x + b) / (c·x + e)` for integer coefficients.
    pub fn mobius(&self, a: i128, b: i128, c: i128, e: i128) -> Result<QuadSurd> {
        let n1 = add(mul(a, self.p)?, mul(b, self.r)?)?;
        let n2 = mul(a, self.q)?;
        let m1 = add(mul(c, self.p)?, mul(e, self.r)?)?;
        let m2 = mul(c, self.q)?;
        let den = sub(mul(m1, m1)?, mul(mul(m2, m2)?, self.d)?)?;
        if den == 0 {
            return Err(SpectraError::Domain("mobius pole".into()));
        }
        let p = sub(mul(n1, m1)?, mul(mul(n2, m2)?, self.d)?)?;
        let q = sub(mul(n2, m1)?, mul(n1, m2)?)?;
        Self::new(p, q, self.d, den)
    }

    /// Sign of the value, decided exactly.
    pub fn signum(&self) -> Result<i32> {
        let sp = self.p.signum() as i32;
        let sq = self.q.signum() as i32;
        if sq == 0 || sp == sq {
            return Ok(if sp != 0 { sp } else { sq });
        }
        if sp == 0 {
            return Ok(sq);
        }
        // opposite signs: compare p² with q² d
        let lhs = mul(self.p, self.p)?;
        let rhs = mul(mul(self.q, self.q)?, self.d)?;
        Ok(match lhs.cmp(&rhs) {
            Ordering::Greater => sp,
            Ordering::Less => sq,
            Ordering::Equal => 0,
        })
    }

    /// Exact comparison for surds in a common field.
    pub fn cmp_exact(&self, o: &QuadSurd) -> Result<Ordering> {
        Ok(self.sub(o)?.signum()?.cmp(&0))
    }

    /// Closest `f64`, avoiding cancellation between `p` and `q√d`.
    pub fn to_f64(&self) -> f64 {
        let (p, q, d, r) = (self.p as f64, self.q as f64, self.d as f64, self.r as f64);
        if self.q == 0 {
            return p / r;
        }
        let root = d.sqrt();
        if (self.p >= 0) == (self.q >= 0) || self.p == 0 {
            (p + q * root) / r
        } else {
            match self.norm_num() {
                Ok(n) => (n as f64) / (r * (p - q * root)),
                Err(_) => (p + q * root) / r,
            }
        }
    }
}

impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q == 0 {
            if self.r == 1 {
                write!(f, "{}", self.p)
            } else {
                write!(f, "{}/{}", self.p, self.r)
            }
        } else if self.r == 1 {
            write!(f, "{} + {}*sqrt({})", self.p, self.q, self.d)
        } else {
            write!(f, "({} + {}*sqrt({}))/{}", self.p, self.q, self.d, self.r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        let s = QuadSurd::new(2, 2, 8, 4).unwrap().reduced().unwrap();
        // (2 + 2√8)/4 = (1 + 2√2)/2
        assert_eq!(s, QuadSurd { p: 1, q: 2, d: 2, r: 2 });
        assert_eq!(QuadSurd::new(1, 3, 4, 1).unwrap().reduced().unwrap(), QuadSurd::integer(7));
    }

    #[test]
    fn arithmetic() {
        let phi = QuadSurd::new(1, 1, 5, 2).unwrap();
        let inv = phi.recip().unwrap();
        assert_eq!(inv, QuadSurd::new(-1, 1, 5, 2).unwrap());
        assert_eq!(phi.sub(&inv).unwrap(), QuadSurd::integer(1));
        assert!((phi.add(&inv).unwrap().to_f64() - 5f64.sqrt()).abs() < 1e-15);
        // x ↦ 1 + 1/x fixes φ
        assert_eq!(phi.mobius(1, 1, 1, 0).unwrap(), phi);
    }

    #[test]
    fn exact_sign_and_order() {
        let a = QuadSurd::new(-3, 2, 2, 1).unwrap(); // 2√2 − 3 < 0
        assert_eq!(a.signum().unwrap(), -1);
        let b = QuadSurd::new(3, -2, 2, 1).unwrap();
        assert_eq!(b.signum().unwrap(), 1);
        assert_eq!(a.cmp_exact(&b).unwrap(), Ordering::Less);
        assert!((b.to_f64() * (3.0 + 8f64.sqrt()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overflow_is_reported() {
        let big = QuadSurd::new(i128::MAX - 1, 1, 2, 1).unwrap();
        assert!(matches!(big.add(&QuadSurd::integer(5)), Err(SpectraError::Overflow(_))));
    }

    #[test]
    fn mixed_fields_rejected() {
        let a = QuadSurd::new(0, 1, 2, 1).unwrap();
        let b = QuadSurd::new(0, 1, 3, 1).unwrap();
        assert!(matches!(a.add(&b), Err(SpectraError::Unsupported(_))));
    }
}
