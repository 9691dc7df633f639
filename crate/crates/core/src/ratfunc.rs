//! Univariate polynomials and rational functions in `x` over ℚ.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{format_rational, parse_rational, rat, Rational};

/// Dense polynomial, `coeffs[i]` multiplies `x^i`; no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct UPoly {
    coeffs: Vec<Rational>,
}

impl UPoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UPoly { coeffs }
    }

    pub fn zero() -> Self {
        UPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn x() -> Self {
        Self::new(vec![rat(0), rat(1)])
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Rational {
        self.coeffs.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = Rational::zero();
        Self::new((0..n).map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero)).collect())
    }

    pub fn neg(&self) -> Self {
        UPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(rat(1));
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * rat(i as i64)).collect())
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = d.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Rational::zero(); rem.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let shift = rem.len() - 1 - dd;
            let c = rem.last().unwrap() / &lead;
            for (i, dc) in d.coeffs.iter().enumerate() {
                rem[shift + i] -= &c * dc;
            }
            quot[shift] = c;
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&(Rational::one() / self.leading()))
    }

    pub fn gcd(a: &Self, b: &Self) -> Self {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }
}

/// Reduced fraction `num / den`; the denominator has constant term 1, or is monic if `den(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: UPoly,
    den: UPoly,
}

impl RatFunc {
    pub fn new(num: UPoly, den: UPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Pole("zero denominator".into()));
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = UPoly::gcd(&num, &den);
        let (n, _) = num.div_rem(&g);
        let (d, _) = den.div_rem(&g);
        // Constant term 1 when available, else monic.
        let c0 = d.coeffs[0].clone();
        let norm = if c0.is_zero() { d.leading() } else { c0 };
        let inv = Rational::one() / &norm;
        Ok(RatFunc { num: n.scale(&inv), den: d.scale(&inv) })
    }

    pub fn zero() -> Self {
        RatFunc { num: UPoly::zero(), den: UPoly::constant(rat(1)) }
    }

    pub fn constant(c: Rational) -> Self {
        RatFunc { num: UPoly::constant(c), den: UPoly::constant(rat(1)) }
    }

    pub fn from_poly(p: UPoly) -> Self {
        RatFunc { num: p, den: UPoly::constant(rat(1)) }
    }

    /// `c / (1 - x)^n`.
    pub fn inverse_power(c: Rational, n: u32) -> Self {
        let base = UPoly::new(vec![rat(1), rat(-1)]);
        Self::new(UPoly::constant(c), base.pow(n)).unwrap()
    }

    pub fn numerator(&self) -> &UPoly {
        &self.num
    }

    pub fn denominator(&self) -> &UPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self::new(self.num.add(&other.num), self.den.clone()).unwrap();
        }
        Self::new(self.num.mul(&other.den).add(&other.num.mul(&self.den)), self.den.mul(&other.den)).unwrap()
    }

    pub fn neg(&self) -> Self {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.num.scale(c), self.den.clone()).unwrap()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.num.mul(&other.num), self.den.mul(&other.den)).unwrap()
    }

    pub fn derivative(&self) -> Self {
        let n = self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative()));
        Self::new(n, self.den.mul(&self.den)).unwrap()
    }

    pub fn derivative_n(&self, m: u32) -> Self {
        let mut out = self.clone();
        for _ in 0..m {
            out = out.derivative();
        }
        out
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::Pole(format!("x = {}", format_rational(x))));
        }
        Ok(self.num.eval(x) / d)
    }

    /// Parses `p/q` with `p`, `q` polynomials written as `c0,c1,...` coefficient lists,
    /// or the shorthand `C/(1-x)^n`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((c, rest)) = s.split_once("/(1-x)^") {
            let c = parse_rational(c).ok_or_else(|| Error::Parse(format!("bad constant in {s}")))?;
            let n: u32 = rest.trim().parse().map_err(|_| Error::Parse(format!("bad exponent in {s}")))?;
            return Ok(Self::inverse_power(c, n));
        }
        let parse_list = |t: &str| -> Result<UPoly> {
            let cs = t
                .split(',')
                .map(|c| parse_rational(c.trim()).ok_or_else(|| Error::Parse(format!("bad coefficient {c}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(UPoly::new(cs))
        };
        match s.split_once('/') {
            Some((n, d)) if n.contains(',') || d.contains(',') || d.trim().starts_with('[') => {
                let strip = |t: &str| t.trim().trim_start_matches('[').trim_end_matches(']').to_string();
                Self::new(parse_list(&strip(n))?, parse_list(&strip(d))?)
            }
            _ => {
                let c = parse_rational(s).ok_or_else(|| Error::Parse(format!("bad rational function {s}")))?;
                Ok(Self::constant(c))
            }
        }
    }
}

fn render_upoly(p: &UPoly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut parts = Vec::new();
    for (i, c) in p.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let c = if i > 0 && c.is_one() {
            String::new()
        } else if i > 0 && (-c).is_one() {
            "-".to_string()
        } else if i > 0 {
            format!("{}*", format_rational(c))
        } else {
            format_rational(c)
        };
        parts.push(match i {
            0 => c,
            1 => format!("{c}x"),
            _ => format!("{c}x^{i}"),
        });
    }
    parts.join(" + ").replace("+ -", "- ")
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == Some(0) {
            write!(f, "{}", render_upoly(&self.num))
        } else {
            write!(f, "({})/({})", render_upoly(&self.num), render_upoly(&self.den))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ratio;

    #[test]
    fn gcd_cancels() {
        let x = UPoly::x();
        let one = UPoly::constant(rat(1));
        let a = x.sub(&one).mul(&x.add(&one));
        let r = RatFunc::new(a, x.sub(&one).scale(&rat(3))).unwrap();
        assert_eq!(r, RatFunc::from_poly(x.add(&one).scale(&ratio(1, 3))));
    }

    #[test]
    fn derivative_of_inverse_power() {
        // d/dx C (1-x)^{-2} = 2C (1-x)^{-3}
        let r = RatFunc::inverse_power(rat(5), 2);
        assert_eq!(r.derivative(), RatFunc::inverse_power(rat(10), 3));
    }

    #[test]
    fn pole_is_reported() {
        let r = RatFunc::inverse_power(rat(1), 1);
        assert!(matches!(r.eval(&rat(1)), Err(Error::Pole(_))));
        assert_eq!(r.eval(&rat(0)).unwrap(), rat(1));
    }

    #[test]
    fn parse_forms() {
        assert_eq!(RatFunc::parse("3/(1-x)^2").unwrap(), RatFunc::inverse_power(rat(3), 2));
        assert_eq!(RatFunc::parse("1/2").unwrap(), RatFunc::constant(ratio(1, 2)));
        assert_eq!(RatFunc::parse("[0,1]/[1]").unwrap(), RatFunc::from_poly(UPoly::x()));
    }
}
