//! Sparse multivariate polynomials over ℚ.
//!
//! Terms are kept sorted by monomial with nonzero coefficients, so structural
//! equality is polynomial equality.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use smallvec::SmallVec;

pub type Rational = BigRational;

/// Integer-valued rational.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n / d` in lowest terms. Panics on `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p"` or `"p/q"`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub trait Variable: Clone + Ord + Eq + Hash + Debug {}
impl<T: Clone + Ord + Eq + Hash + Debug> Variable for T {}

/// Product of variable powers, factors sorted by variable, exponents positive.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial<V> {
    factors: SmallVec<[(V, u32); 4]>,
}

impl<V: Variable> Ord for Monomial<V> {
    /// Lexicographic on exponent vectors, earliest variable most significant.
    /// Compatible with multiplication.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.factors, &other.factors);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl<V: Variable> PartialOrd for Monomial<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<V: Variable> Monomial<V> {
    pub fn one() -> Self {
        Monomial { factors: SmallVec::new() }
    }

    pub fn var(v: V) -> Self {
        let mut factors = SmallVec::new();
        factors.push((v, 1));
        Monomial { factors }
    }

    /// Builds a monomial from arbitrary factors, merging repeats and dropping zero exponents.
    pub fn from_factors(items: impl IntoIterator<Item = (V, u32)>) -> Self {
        let mut factors: SmallVec<[(V, u32); 4]> = items.into_iter().filter(|(_, e)| *e > 0).collect();
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: SmallVec<[(V, u32); 4]> = SmallVec::new();
        for (v, e) in factors {
            match merged.last_mut() {
                Some((w, f)) if *w == v => *f += e,
                _ => merged.push((v, e)),
            }
        }
        Monomial { factors: merged }
    }

    pub fn factors(&self) -> &[(V, u32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| *e).sum()
    }

    pub fn exponent(&self, v: &V) -> u32 {
        self.factors
            .binary_search_by(|(w, _)| w.cmp(v))
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.factors.is_empty() {
            return other.clone();
        }
        if other.factors.is_empty() {
            return self.clone();
        }
        let mut out: SmallVec<[(V, u32); 4]> = SmallVec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().cloned());
        Monomial { factors: out }
    }

    /// Multiplies by `v^e` (`e` may be zero).
    pub fn times_var(&self, v: &V, e: u32) -> Self {
        if e == 0 {
            return self.clone();
        }
        let mut factors = self.factors.clone();
        match factors.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) => factors[i].1 += e,
            Err(i) => factors.insert(i, (v.clone(), e)),
        }
        Monomial { factors }
    }

    /// Divides by `v` once; `None` if `v` does not divide.
    pub fn divide_var(&self, v: &V) -> Option<Self> {
        let i = self.factors.binary_search_by(|(w, _)| w.cmp(v)).ok()?;
        let mut factors = self.factors.clone();
        if factors[i].1 == 1 {
            factors.remove(i);
        } else {
            factors[i].1 -= 1;
        }
        Some(Monomial { factors })
    }

    pub fn map_vars<W: Variable>(&self, f: &impl Fn(&V) -> W) -> Monomial<W> {
        Monomial::from_factors(self.factors.iter().map(|(v, e)| (f(v), *e)))
    }
}

/// Polynomial with rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly<V: Variable> {
    terms: Vec<(Monomial<V>, Rational)>,
}

impl<V: Variable> Default for Poly<V> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<V: Variable> Poly<V> {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Poly { terms: vec![(Monomial::one(), c)] }
        }
    }

    pub fn int(n: i64) -> Self {
        Self::constant(rat(n))
    }

    pub fn var(v: V) -> Self {
        Poly { terms: vec![(Monomial::var(v), Rational::one())] }
    }

    pub fn monomial(m: Monomial<V>, c: Rational) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    /// Collects terms, combining equal monomials.
    pub fn from_terms(items: impl IntoIterator<Item = (Monomial<V>, Rational)>) -> Self {
        let mut acc: HashMap<Monomial<V>, Rational> = HashMap::new();
        for (m, c) in items {
            accumulate(&mut acc, m, c);
        }
        Self::from_map(acc)
    }

    fn from_map(acc: HashMap<Monomial<V>, Rational>) -> Self {
        let mut terms: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        Poly { terms }
    }

    pub fn terms(&self) -> &[(Monomial<V>, Rational)] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    /// Constant coefficient if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn constant_term(&self) -> Rational {
        match self.terms.first() {
            Some((m, c)) if m.is_one() => c.clone(),
            _ => Rational::zero(),
        }
    }

    pub fn coeff(&self, m: &Monomial<V>) -> Rational {
        self.terms
            .binary_search_by(|(n, _)| n.cmp(m))
            .map(|i| self.terms[i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Poly { terms: self.terms.iter().map(|(m, d)| (m.clone(), d * c)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial<V>, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        // Multiplying by a fixed monomial preserves the order.
        Poly { terms: self.terms.iter().map(|(n, d)| (n.mul(m), d * c)).collect() }
    }

    fn merge(&self, other: &Self, sign: bool) -> Self {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    let c = if sign { b[j].1.clone() } else { -&b[j].1 };
                    out.push((b[j].0.clone(), c));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if sign { &a[i].1 + &b[j].1 } else { &a[i].1 - &b[j].1 };
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        for t in &b[j..] {
            let c = if sign { t.1.clone() } else { -&t.1 };
            out.push((t.0.clone(), c));
        }
        Poly { terms: out }
    }

    pub fn add_ref(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        self.merge(other, true)
    }

    pub fn sub_ref(&self, other: &Self) -> Self {
        if other.is_zero() {
            return self.clone();
        }
        self.merge(other, false)
    }

    pub fn mul_ref(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if self.terms.len() == 1 {
            return other.mul_monomial(&self.terms[0].0, &self.terms[0].1);
        }
        if other.terms.len() == 1 {
            return self.mul_monomial(&other.terms[0].0, &other.terms[0].1);
        }
        let mut acc: HashMap<Monomial<V>, Rational> = HashMap::with_capacity(self.terms.len() * other.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                accumulate(&mut acc, ma.mul(mb), ca * cb);
            }
        }
        Self::from_map(acc)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        result
    }

    /// Partial derivative with respect to `v`.
    pub fn partial(&self, v: &V) -> Self {
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e > 0 {
                terms.push((m.divide_var(v).unwrap(), c * rat(e as i64)));
            }
        }
        Self::from_terms(terms)
    }

    /// Partial derivatives with respect to every variable that occurs, in one pass.
    pub fn gradient(&self) -> Vec<(V, Self)> {
        let mut acc: HashMap<V, Vec<(Monomial<V>, Rational)>> = HashMap::new();
        for (m, c) in &self.terms {
            for (v, e) in m.factors() {
                acc.entry(v.clone())
                    .or_default()
                    .push((m.divide_var(v).unwrap(), c * rat(*e as i64)));
            }
        }
        let mut out: Vec<(V, Self)> = acc.into_iter().map(|(v, t)| (v, Self::from_terms(t))).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Sorted list of variables that occur.
    pub fn variables(&self) -> Vec<V> {
        let mut vs: Vec<V> = self.terms.iter().flat_map(|(m, _)| m.factors().iter().map(|(v, _)| v.clone())).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.iter().map(|(m, _)| m.total_degree()).max()
    }

    pub fn map_vars<W: Variable>(&self, f: impl Fn(&V) -> W) -> Poly<W> {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (m.map_vars(&f), c.clone())))
    }

    /// Keeps the terms accepted by `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&Monomial<V>) -> bool) -> Self {
        Poly { terms: self.terms.iter().filter(|(m, _)| keep(m)).cloned().collect() }
    }

    /// Ring homomorphism sending each variable to `image(v)`.
    pub fn substitute<W: Variable>(&self, mut image: impl FnMut(&V) -> Poly<W>) -> Poly<W> {
        let mut powers: HashMap<(V, u32), Poly<W>> = HashMap::new();
        let mut images: HashMap<V, Poly<W>> = HashMap::new();
        let mut acc: HashMap<Monomial<W>, Rational> = HashMap::new();
        for (m, c) in &self.terms {
            let mut prod = Poly::<W>::constant(c.clone());
            for (v, e) in m.factors() {
                if !images.contains_key(v) {
                    images.insert(v.clone(), image(v));
                }
                let key = (v.clone(), *e);
                if !powers.contains_key(&key) {
                    let p = images[v].pow(*e);
                    powers.insert(key.clone(), p);
                }
                prod = prod.mul_ref(&powers[&key]);
                if prod.is_zero() {
                    break;
                }
            }
            for (mm, cc) in prod.terms {
                accumulate(&mut acc, mm, cc);
            }
        }
        Poly::from_map(acc)
    }

    /// Sum of `c_i * p_i` with a single normalization pass.
    pub fn linear_combination<'a>(items: impl IntoIterator<Item = (&'a Rational, &'a Self)>) -> Self
    where
        V: 'a,
    {
        let mut acc: HashMap<Monomial<V>, Rational> = HashMap::new();
        for (c, p) in items {
            if c.is_zero() {
                continue;
            }
            for (m, d) in &p.terms {
                accumulate(&mut acc, m.clone(), c * d);
            }
        }
        Self::from_map(acc)
    }

    /// Sum of polynomials with a single normalization pass.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Self>) -> Self
    where
        V: 'a,
    {
        let mut acc: HashMap<Monomial<V>, Rational> = HashMap::new();
        for p in items {
            for (m, d) in &p.terms {
                accumulate(&mut acc, m.clone(), d.clone());
            }
        }
        Self::from_map(acc)
    }

    /// Renders with a caller-supplied variable printer.
    pub fn render(&self, name: impl Fn(&V) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c < &Rational::zero();
            let a = if neg { -c.clone() } else { c.clone() };
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let vars: Vec<String> = m
                .factors()
                .iter()
                .map(|(v, e)| if *e == 1 { name(v) } else { format!("{}^{}", name(v), e) })
                .collect();
            if m.is_one() {
                out.push_str(&format_rational(&a));
            } else {
                if !a.is_one() {
                    out.push_str(&format_rational(&a));
                    out.push('*');
                }
                out.push_str(&vars.join("*"));
            }
        }
        out
    }
}

fn accumulate<V: Variable>(acc: &mut HashMap<Monomial<V>, Rational>, m: Monomial<V>, c: Rational) {
    if c.is_zero() {
        return;
    }
    match acc.get_mut(&m) {
        Some(d) => *d += c,
        None => {
            acc.insert(m, c);
        }
    }
}

impl<V: Variable> Add for Poly<V> {
    type Output = Poly<V>;
    fn add(self, rhs: Self) -> Self {
        self.add_ref(&rhs)
    }
}

impl<V: Variable> Add<&Poly<V>> for &Poly<V> {
    type Output = Poly<V>;
    fn add(self, rhs: &Poly<V>) -> Poly<V> {
        self.add_ref(rhs)
    }
}

impl<V: Variable> Sub for Poly<V> {
    type Output = Poly<V>;
    fn sub(self, rhs: Self) -> Self {
        self.sub_ref(&rhs)
    }
}

impl<V: Variable> Sub<&Poly<V>> for &Poly<V> {
    type Output = Poly<V>;
    fn sub(self, rhs: &Poly<V>) -> Poly<V> {
        self.sub_ref(rhs)
    }
}

impl<V: Variable> Mul for Poly<V> {
    type Output = Poly<V>;
    fn mul(self, rhs: Self) -> Self {
        self.mul_ref(&rhs)
    }
}

impl<V: Variable> Mul<&Poly<V>> for &Poly<V> {
    type Output = Poly<V>;
    fn mul(self, rhs: &Poly<V>) -> Poly<V> {
        self.mul_ref(rhs)
    }
}

impl<V: Variable> Neg for Poly<V> {
    type Output = Poly<V>;
    fn neg(self) -> Self {
        Poly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl<V: Variable> Neg for &Poly<V> {
    type Output = Poly<V>;
    fn neg(self) -> Poly<V> {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl<V: Variable> AddAssign<&Poly<V>> for Poly<V> {
    fn add_assign(&mut self, rhs: &Poly<V>) {
        *self = self.add_ref(rhs);
    }
}

impl<V: Variable> SubAssign<&Poly<V>> for Poly<V> {
    fn sub_assign(&mut self, rhs: &Poly<V>) {
        *self = self.sub_ref(rhs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Poly<u32>;

    fn x() -> P {
        P::var(0)
    }
    fn y() -> P {
        P::var(1)
    }

    #[test]
    fn binomial_square() {
        let s = &x() + &y();
        let sq = s.pow(2);
        let expected = &(&x().pow(2) + &(&x() * &y()).scale(&rat(2))) + &y().pow(2);
        assert_eq!(sq, expected);
        assert_eq!(sq.num_terms(), 3);
    }

    #[test]
    fn cancellation_gives_zero() {
        let p = &(&x() + &y()) - &(&y() + &x());
        assert!(p.is_zero());
        assert_eq!(p, P::zero());
    }

    #[test]
    fn partial_and_gradient_agree() {
        let p = &(&x().pow(3) * &y()) + &P::int(5);
        assert_eq!(p.partial(&0), (&x().pow(2) * &y()).scale(&rat(3)));
        let g = p.gradient();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1].1, x().pow(3));
    }

    #[test]
    fn substitution_is_a_homomorphism() {
        let p = &(&x() * &y()) + &x();
        let q = p.substitute(|v| if *v == 0 { &y() + &P::one() } else { y() });
        let expected = &(&(&y() + &P::one()) * &y()) + &(&y() + &P::one());
        assert_eq!(q, expected);
    }

    #[test]
    fn rational_parsing_roundtrip() {
        let r = parse_rational("-6/4").unwrap();
        assert_eq!(format_rational(&r), "-3/2");
        assert_eq!(parse_rational("7").unwrap(), rat(7));
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn rendering() {
        let p = &(&x().pow(2)).scale(&ratio(-1, 2)) + &P::int(3);
        assert_eq!(p.render(|v| format!("x{}", v)), "-1/2*x0^2 + 3");
    }
}
