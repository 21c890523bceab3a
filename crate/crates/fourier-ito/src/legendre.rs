//! Exact Legendre polynomial algebra on [-1, 1] and the shifted orthonormal
//! system on [t, T].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Error;

/// Exact rational number (always reduced, positive denominator).
pub type Rational = BigRational;

/// Largest Legendre index accepted by default.
pub const DEFAULT_MAX_INDEX: usize = 12;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // fall back to scaled division for huge numerators/denominators
    let shift = r.denom().bits().max(r.numer().bits()).saturating_sub(900) as usize;
    let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Univariate polynomial with exact rational coefficients, index = power.
///
/// The zero polynomial has no coefficients; otherwise the last coefficient is
/// nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RationalPoly {
    coeffs: Vec<Rational>,
}

impl RationalPoly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// The identity polynomial `x`.
    pub fn x() -> Self {
        Self::new(vec![Rational::zero(), Rational::one()])
    }

    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, power: usize) -> Rational {
        self.coeffs.get(power).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Value at `x = 1`, i.e. the sum of the coefficients.
    pub fn eval_one(&self) -> Rational {
        self.coeffs.iter().fold(Rational::zero(), |a, c| a + c)
    }

    /// Value at `x = -1`.
    pub fn eval_minus_one(&self) -> Rational {
        let mut acc = Rational::zero();
        for (p, c) in self.coeffs.iter().enumerate() {
            if p % 2 == 0 {
                acc += c;
            } else {
                acc -= c;
            }
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + rat_to_f64(c);
        }
        acc
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(rat_to_f64).collect()
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(p, c)| c * rat_int(p as i64))
                .collect(),
        )
    }

    /// Antiderivative `F` with `F(-1) = 0`.
    pub fn integral_from_minus_one(&self) -> Self {
        integral_from_minus_one(self)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = poly_mul(&out, self);
        }
        out
    }
}

impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match p {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}*x")?,
                _ => write!(f, "{a}*x^{p}")?,
            }
        }
        Ok(())
    }
}

impl Add for &RationalPoly {
    type Output = RationalPoly;
    fn add(self, rhs: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RationalPoly::new((0..n).map(|p| self.coeff(p) + rhs.coeff(p)).collect())
    }
}

impl Sub for &RationalPoly {
    type Output = RationalPoly;
    fn sub(self, rhs: &RationalPoly) -> RationalPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RationalPoly::new((0..n).map(|p| self.coeff(p) - rhs.coeff(p)).collect())
    }
}

impl Neg for &RationalPoly {
    type Output = RationalPoly;
    fn neg(self) -> RationalPoly {
        RationalPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &RationalPoly {
    type Output = RationalPoly;
    fn mul(self, rhs: &RationalPoly) -> RationalPoly {
        poly_mul(self, rhs)
    }
}

/// Legendre polynomial `P_j` from the three-term recurrence.
pub fn legendre_poly(j: usize) -> RationalPoly {
    legendre_table(j).pop().expect("table has j + 1 entries")
}

/// `P_0 ..= P_max`.
pub fn legendre_table(max: usize) -> Vec<RationalPoly> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(RationalPoly::one());
    if max == 0 {
        return out;
    }
    out.push(RationalPoly::x());
    let x = RationalPoly::x();
    for n in 1..max {
        // (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}
        let a = poly_mul(&x, &out[n]).scale(&rat(2 * n as i64 + 1, n as i64 + 1));
        let b = out[n - 1].scale(&rat(n as i64, n as i64 + 1));
        out.push(&a - &b);
    }
    out
}

pub fn poly_mul(a: &RationalPoly, b: &RationalPoly) -> RationalPoly {
    if a.is_zero() || b.is_zero() {
        return RationalPoly::zero();
    }
    let mut out = vec![Rational::zero(); a.coeffs.len() + b.coeffs.len() - 1];
    for (i, x) in a.coeffs.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.coeffs.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            out[i + j] += x * y;
        }
    }
    RationalPoly::new(out)
}

/// `F(y) = ∫_{-1}^y a(x) dx`.
pub fn integral_from_minus_one(a: &RationalPoly) -> RationalPoly {
    if a.is_zero() {
        return RationalPoly::zero();
    }
    let mut coeffs = Vec::with_capacity(a.coeffs.len() + 1);
    coeffs.push(Rational::zero());
    for (p, c) in a.coeffs.iter().enumerate() {
        coeffs.push(c / rat_int(p as i64 + 1));
    }
    let mut f = RationalPoly::new(coeffs);
    let at = f.eval_minus_one();
    if !f.is_zero() {
        f.coeffs[0] = -at;
    }
    RationalPoly::new(f.coeffs)
}

/// `∫_{-1}^{1} a(x) b(x) dx`.
pub fn inner_product_11(a: &RationalPoly, b: &RationalPoly) -> Rational {
    let prod = poly_mul(a, b);
    let mut acc = Rational::zero();
    for (p, c) in prod.coeffs.iter().enumerate() {
        if p % 2 == 0 {
            acc += c * rat(2, p as i64 + 1);
        }
    }
    acc
}

/// Values `P_0(x) ..= P_max(x)` in floating point.
pub fn legendre_values(max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max + 1];
    out[0] = 1.0;
    if max >= 1 {
        out[1] = x;
    }
    for n in 1..max {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * x * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
    out
}

/// One member `φ_j` of the orthonormal Legendre system on `[t, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftedBasisSpec {
    interval_length: f64,
    j: usize,
}

impl ShiftedBasisSpec {
    pub fn new(interval_length: f64, j: usize) -> Result<Self, Error> {
        if !(interval_length > 0.0 && interval_length.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "interval length must be positive, got {interval_length}"
            )));
        }
        Ok(Self { interval_length, j })
    }

    pub fn interval_length(&self) -> f64 {
        self.interval_length
    }

    pub fn index(&self) -> usize {
        self.j
    }

    pub fn scale(&self) -> f64 {
        ((2 * self.j + 1) as f64 / self.interval_length).sqrt()
    }

    /// `φ_j` at offset `u = s - t`, `0 <= u <= T - t`.
    pub fn eval(&self, u: f64) -> f64 {
        let x = 2.0 * u / self.interval_length - 1.0;
        self.scale() * legendre_values(self.j, x)[self.j]
    }
}

/// All `φ_0 ..= φ_max` at offset `u` on an interval of the given length.
pub fn shifted_basis_values(max: usize, interval_length: f64, u: f64) -> Vec<f64> {
    let x = 2.0 * u / interval_length - 1.0;
    let mut v = legendre_values(max, x);
    for (j, p) in v.iter_mut().enumerate() {
        *p *= ((2 * j + 1) as f64 / interval_length).sqrt();
    }
    v
}
