//! Differential polynomials in jet variables `u_{α,m}`, ε-truncated series and
//! evolutionary derivations.
//!
//! Components are numbered from 1. The total derivative sends `u_{α,m}` to
//! `u_{α,m+1}` and `deg u_{α,m} = m`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::poly::{format_rational, parse_rational, rat, Monomial, Poly, Rational, Variable};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct JetVar {
    pub alpha: u32,
    pub order: u32,
}

impl JetVar {
    pub fn new(alpha: u32, order: u32) -> Self {
        JetVar { alpha, order }
    }
}

pub type DiffPoly = Poly<JetVar>;

/// `u_{α,m}` as a polynomial.
pub fn jet(alpha: u32, order: u32) -> DiffPoly {
    Poly::var(JetVar::new(alpha, order))
}

/// Total derivative `∂`.
pub fn total_derivative(p: &DiffPoly) -> DiffPoly {
    let mut out = Vec::new();
    for (m, c) in p.terms() {
        for (v, e) in m.factors() {
            let lowered = m.divide_var(v).unwrap();
            let next = JetVar::new(v.alpha, v.order + 1);
            out.push((lowered.times_var(&next, 1), c * rat(*e as i64)));
        }
    }
    Poly::from_terms(out)
}

pub fn total_derivative_n(p: &DiffPoly, n: u32) -> DiffPoly {
    let mut q = p.clone();
    for _ in 0..n {
        q = total_derivative(&q);
    }
    q
}

/// Degree of a monomial, the sum of jet orders with multiplicity.
pub fn monomial_degree(m: &Monomial<JetVar>) -> u32 {
    m.factors().iter().map(|(v, e)| v.order * e).sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Degree {
    Homogeneous(u32),
    Mixed(BTreeSet<u32>),
}

pub fn degree(p: &DiffPoly) -> Result<Degree> {
    if p.is_zero() {
        return Err(Error::ZeroDegree);
    }
    let ds: BTreeSet<u32> = p.terms().iter().map(|(m, _)| monomial_degree(m)).collect();
    if ds.len() == 1 {
        Ok(Degree::Homogeneous(*ds.iter().next().unwrap()))
    } else {
        Ok(Degree::Mixed(ds))
    }
}

/// Highest jet order occurring, `None` for constants.
pub fn jet_order(p: &DiffPoly) -> Option<u32> {
    p.terms().iter().flat_map(|(m, _)| m.factors().iter().map(|(v, _)| v.order)).max()
}

/// Largest component index occurring, 0 for constants.
pub fn max_component(p: &DiffPoly) -> u32 {
    p.terms().iter().flat_map(|(m, _)| m.factors().iter().map(|(v, _)| v.alpha)).max().unwrap_or(0)
}

/// Weighted homogeneity: returns the set of weights `Σ e·w(v)` over terms.
pub fn weights(p: &DiffPoly, w: impl Fn(&JetVar) -> i64) -> BTreeSet<i64> {
    p.terms()
        .iter()
        .map(|(m, _)| m.factors().iter().map(|(v, e)| w(v) * *e as i64).sum())
        .collect()
}

/// Differential ring homomorphism fixed by the images of `u_{α,0}`.
///
/// `u_{α,m}` is sent to `∂^m` of the image of `u_{α,0}`; components beyond the
/// given images are fixed. Derivative images are memoized.
#[derive(Clone, Debug)]
pub struct DiffHom {
    base: Vec<DiffPoly>,
    cache: HashMap<JetVar, DiffPoly>,
}

impl DiffHom {
    pub fn new(base: Vec<DiffPoly>) -> Self {
        DiffHom { base, cache: HashMap::new() }
    }

    pub fn image(&mut self, v: &JetVar) -> DiffPoly {
        if let Some(p) = self.cache.get(v) {
            return p.clone();
        }
        let p = if v.alpha as usize > self.base.len() || v.alpha == 0 {
            Poly::var(*v)
        } else if v.order == 0 {
            self.base[v.alpha as usize - 1].clone()
        } else {
            total_derivative(&self.image(&JetVar::new(v.alpha, v.order - 1)))
        };
        self.cache.insert(*v, p.clone());
        p
    }

    pub fn apply(&mut self, p: &DiffPoly) -> DiffPoly {
        for v in p.variables() {
            self.image(&v);
        }
        let cache = &self.cache;
        p.substitute(|v| cache[v].clone())
    }
}

/// Formal series `Σ_{q≤K} ε^q a_q`, truncated modulo `ε^{K+1}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Series<V: Variable> {
    components: Vec<Poly<V>>,
}

pub type EpsSeries = Series<JetVar>;

impl<V: Variable> Series<V> {
    pub fn zero(truncation: usize) -> Self {
        Series { components: vec![Poly::zero(); truncation + 1] }
    }

    /// `ε^q p`; zero if `q` exceeds the truncation.
    pub fn monomial(p: Poly<V>, q: usize, truncation: usize) -> Self {
        let mut s = Self::zero(truncation);
        if q <= truncation {
            s.components[q] = p;
        }
        s
    }

    pub fn constant_poly(p: Poly<V>, truncation: usize) -> Self {
        Self::monomial(p, 0, truncation)
    }

    pub fn from_components(mut components: Vec<Poly<V>>, truncation: usize) -> Self {
        components.resize(truncation + 1, Poly::zero());
        Series { components }
    }

    pub fn truncation(&self) -> usize {
        self.components.len() - 1
    }

    pub fn component(&self, q: usize) -> &Poly<V> {
        &self.components[q]
    }

    pub fn components(&self) -> &[Poly<V>] {
        &self.components
    }

    pub fn set_component(&mut self, q: usize, p: Poly<V>) {
        self.components[q] = p;
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    /// Reduces modulo `ε^{k+1}`.
    pub fn truncate(&self, k: usize) -> Self {
        let mut c = self.components.clone();
        c.resize(k + 1, Poly::zero());
        Series { components: c }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.truncation() != other.truncation() {
            return Err(Error::TruncationMismatch { left: self.truncation(), right: other.truncation() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Series { components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Series { components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect() })
    }

    pub fn neg(&self) -> Self {
        Series { components: self.components.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Series { components: self.components.iter().map(|a| a.scale(c)).collect() }
    }

    pub fn mul_poly(&self, p: &Poly<V>) -> Self {
        Series { components: self.components.iter().map(|a| a.mul_ref(p)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let k = self.truncation();
        let mut out = vec![Poly::zero(); k + 1];
        for i in 0..=k {
            if self.components[i].is_zero() {
                continue;
            }
            for j in 0..=(k - i) {
                if other.components[j].is_zero() {
                    continue;
                }
                out[i + j] += &self.components[i].mul_ref(&other.components[j]);
            }
        }
        Ok(Series { components: out })
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result = Self::constant_poly(Poly::one(), self.truncation());
        for _ in 0..e {
            result = result.mul(self).unwrap();
        }
        result
    }

    pub fn map(&self, f: impl Fn(&Poly<V>) -> Poly<V>) -> Self {
        Series { components: self.components.iter().map(f).collect() }
    }

    /// Lowest ε-power with a nonzero component.
    pub fn valuation(&self) -> Option<usize> {
        self.components.iter().position(|c| !c.is_zero())
    }

    /// Homomorphism applied to each component, with images given as series.
    pub fn substitute<W: Variable>(&self, mut image: impl FnMut(&V) -> Series<W>) -> Series<W> {
        let k = self.truncation();
        let mut images: HashMap<V, Series<W>> = HashMap::new();
        let mut powers: HashMap<(V, u32), Series<W>> = HashMap::new();
        let mut out = Series::<W>::zero(k);
        for (q, comp) in self.components.iter().enumerate() {
            for (m, c) in comp.terms() {
                let mut prod = Series::<W>::zero(k - q);
                prod.components[0] = Poly::constant(c.clone());
                for (v, e) in m.factors() {
                    if !images.contains_key(v) {
                        images.insert(v.clone(), image(v));
                    }
                    let key = (v.clone(), *e);
                    if !powers.contains_key(&key) {
                        powers.insert(key.clone(), images[v].pow(*e));
                    }
                    prod = prod.mul(&powers[&key].truncate(k - q)).unwrap();
                    if prod.is_zero() {
                        break;
                    }
                }
                for (j, pc) in prod.components.into_iter().enumerate() {
                    if !pc.is_zero() {
                        out.components[q + j] += &pc;
                    }
                }
            }
        }
        out
    }
}

impl EpsSeries {
    pub fn total_derivative(&self) -> Self {
        self.map(total_derivative)
    }

    /// Regrades an element of the ε-free ring: each degree-`d` part goes to `ε^d`.
    pub fn regrade_element(p: &DiffPoly, truncation: usize) -> Self {
        Self::regrade_shifted(p, 0, truncation)
    }

    /// Regrades a flow characteristic: each degree-`d` part goes to `ε^{d-1}`.
    pub fn regrade_flow(p: &DiffPoly, truncation: usize) -> Result<Self> {
        if p.terms().iter().any(|(m, _)| monomial_degree(m) == 0) {
            return Err(Error::DegreeZeroFlow { component: 0 });
        }
        Ok(Self::regrade_shifted(p, 1, truncation))
    }

    fn regrade_shifted(p: &DiffPoly, shift: u32, truncation: usize) -> Self {
        let mut parts: Vec<Vec<(Monomial<JetVar>, Rational)>> = vec![Vec::new(); truncation + 1];
        for (m, c) in p.terms() {
            let q = (monomial_degree(m) - shift) as usize;
            if q <= truncation {
                parts[q].push((m.clone(), c.clone()));
            }
        }
        Series { components: parts.into_iter().map(Poly::from_terms).collect() }
    }

    /// True if every `ε^q` component is homogeneous of degree `q + shift`.
    pub fn is_homogeneous(&self, shift: u32) -> bool {
        self.components
            .iter()
            .enumerate()
            .all(|(q, c)| c.terms().iter().all(|(m, _)| monomial_degree(m) == q as u32 + shift))
    }

    pub fn jet_order(&self) -> Option<u32> {
        self.components.iter().filter_map(jet_order).max()
    }

    pub fn max_component(&self) -> u32 {
        self.components.iter().map(max_component).max().unwrap_or(0)
    }

    /// Sum of the components with `ε = 1`.
    pub fn collapse(&self) -> DiffPoly {
        Poly::sum(self.components.iter())
    }
}

/// Admissible derivation `D_W` on ε-series, `D_W(u_{α,m}) = ∂^m W_α`.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivation {
    characteristic: Vec<EpsSeries>,
}

impl Derivation {
    pub fn new(characteristic: Vec<EpsSeries>) -> Result<Self> {
        if let Some(first) = characteristic.first() {
            for c in &characteristic {
                first.check(c)?;
            }
        }
        Ok(Derivation { characteristic })
    }

    /// Derivation of an ε-free flow, regraded with `ε^{deg-1}`.
    pub fn from_flow(field: &VectorField, truncation: usize) -> Result<Self> {
        let mut chars = Vec::new();
        for (i, w) in field.characteristic().iter().enumerate() {
            chars.push(EpsSeries::regrade_flow(w, truncation).map_err(|_| Error::DegreeZeroFlow { component: i + 1 })?);
        }
        Self::new(chars)
    }

    /// The total derivative `∂` on `arity` components.
    pub fn total(arity: usize, truncation: usize) -> Self {
        Derivation {
            characteristic: (1..=arity as u32).map(|a| EpsSeries::constant_poly(jet(a, 1), truncation)).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.characteristic.len()
    }

    pub fn truncation(&self) -> usize {
        self.characteristic.first().map(|c| c.truncation()).unwrap_or(0)
    }

    pub fn characteristic(&self) -> &[EpsSeries] {
        &self.characteristic
    }

    pub fn apply(&self, p: &EpsSeries) -> Result<EpsSeries> {
        let k = self.truncation();
        if p.truncation() != k {
            return Err(Error::TruncationMismatch { left: k, right: p.truncation() });
        }
        let found = p.max_component() as usize;
        if found > self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), found });
        }
        let mut derivs: HashMap<JetVar, EpsSeries> = HashMap::new();
        let mut out = EpsSeries::zero(k);
        for (q, comp) in p.components().iter().enumerate() {
            for (v, partial) in comp.gradient() {
                let w = self.jet_image(&v, &mut derivs);
                let term = EpsSeries::monomial(partial, q, k).mul(&w)?;
                out = out.add(&term)?;
            }
        }
        Ok(out)
    }

    pub fn apply_poly(&self, p: &DiffPoly) -> Result<EpsSeries> {
        self.apply(&EpsSeries::constant_poly(p.clone(), self.truncation()))
    }

    fn jet_image(&self, v: &JetVar, cache: &mut HashMap<JetVar, EpsSeries>) -> EpsSeries {
        if let Some(s) = cache.get(v) {
            return s.clone();
        }
        let s = if v.order == 0 {
            self.characteristic[v.alpha as usize - 1].clone()
        } else {
            self.jet_image(&JetVar::new(v.alpha, v.order - 1), cache).total_derivative()
        };
        cache.insert(*v, s.clone());
        s
    }

    /// `[D1, D2]`, characteristic `D1(W2) - D2(W1)`.
    pub fn commutator(&self, other: &Derivation) -> Result<Derivation> {
        if self.arity() != other.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), found: other.arity() });
        }
        let mut chars = Vec::new();
        for a in 0..self.arity() {
            chars.push(self.apply(&other.characteristic[a])?.sub(&other.apply(&self.characteristic[a])?)?);
        }
        Derivation::new(chars)
    }

    pub fn is_zero(&self) -> bool {
        self.characteristic.iter().all(|c| c.is_zero())
    }
}

/// ε-free evolutionary vector field with polynomial characteristic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    characteristic: Vec<DiffPoly>,
}

impl VectorField {
    pub fn new(characteristic: Vec<DiffPoly>) -> Self {
        VectorField { characteristic }
    }

    pub fn total(arity: usize) -> Self {
        VectorField { characteristic: (1..=arity as u32).map(|a| jet(a, 1)).collect() }
    }

    pub fn arity(&self) -> usize {
        self.characteristic.len()
    }

    pub fn characteristic(&self) -> &[DiffPoly] {
        &self.characteristic
    }

    pub fn into_characteristic(self) -> Vec<DiffPoly> {
        self.characteristic
    }

    pub fn apply(&self, p: &DiffPoly) -> Result<DiffPoly> {
        let found = max_component(p) as usize;
        if found > self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), found });
        }
        Ok(self.apply_extended(p))
    }

    /// Applies the field treating components beyond its arity as constants.
    pub fn apply_extended(&self, p: &DiffPoly) -> DiffPoly {
        let mut derivs: HashMap<JetVar, DiffPoly> = HashMap::new();
        let mut parts = Vec::new();
        for (v, partial) in p.gradient() {
            if v.alpha as usize > self.arity() || v.alpha == 0 {
                continue;
            }
            let w = self.jet_image(&v, &mut derivs);
            parts.push(partial.mul_ref(&w));
        }
        Poly::sum(parts.iter())
    }

    fn jet_image(&self, v: &JetVar, cache: &mut HashMap<JetVar, DiffPoly>) -> DiffPoly {
        if let Some(s) = cache.get(v) {
            return s.clone();
        }
        let s = if v.order == 0 {
            self.characteristic[v.alpha as usize - 1].clone()
        } else {
            total_derivative(&self.jet_image(&JetVar::new(v.alpha, v.order - 1), cache))
        };
        cache.insert(*v, s.clone());
        s
    }

    pub fn commutator(&self, other: &VectorField) -> Result<VectorField> {
        if self.arity() != other.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), found: other.arity() });
        }
        let mut chars = Vec::new();
        for a in 0..self.arity() {
            chars.push(&self.apply(&other.characteristic[a])? - &other.apply(&self.characteristic[a])?);
        }
        Ok(VectorField { characteristic: chars })
    }

    pub fn is_zero(&self) -> bool {
        self.characteristic.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, c: &Rational) -> VectorField {
        VectorField { characteristic: self.characteristic.iter().map(|w| w.scale(c)).collect() }
    }
}

/// Human-readable jet name: `u`, `u_x`, `u_xx` for one component, `u1_x` otherwise.
pub fn jet_name(v: &JetVar, components: usize, stem: &str) -> String {
    let base = if components <= 1 { stem.to_string() } else { format!("{}{}", stem, v.alpha) };
    if v.order == 0 {
        base
    } else {
        format!("{}_{}", base, "x".repeat(v.order as usize))
    }
}

pub fn render(p: &DiffPoly, components: usize, stem: &str) -> String {
    p.render(|v| jet_name(v, components, stem))
}

pub struct Display<'a> {
    pub poly: &'a DiffPoly,
    pub components: usize,
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self.poly, self.components, "u"))
    }
}

pub fn diffpoly_to_json(p: &DiffPoly) -> Value {
    let terms: Vec<Value> = p
        .terms()
        .iter()
        .map(|(m, c)| {
            let mono: Vec<Value> = m.factors().iter().map(|(v, e)| json!([v.alpha, v.order, e])).collect();
            json!({"coeff": format_rational(c), "monomial": mono})
        })
        .collect();
    json!({ "terms": terms })
}

pub fn diffpoly_from_json(v: &Value) -> Result<DiffPoly> {
    let terms = v
        .get("terms")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("missing \"terms\" array".into()))?;
    let mut out = Vec::new();
    for t in terms {
        let c = t
            .get("coeff")
            .and_then(Value::as_str)
            .and_then(parse_rational)
            .ok_or_else(|| Error::Parse("bad coefficient".into()))?;
        let mono = t
            .get("monomial")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("bad monomial".into()))?;
        let mut factors = Vec::new();
        for f in mono {
            let a = f.as_array().filter(|a| a.len() == 3).ok_or_else(|| Error::Parse("bad factor".into()))?;
            let n: Vec<u64> = a.iter().map(|x| x.as_u64()).collect::<Option<_>>().ok_or_else(|| Error::Parse("bad factor".into()))?;
            if n[0] == 0 {
                return Err(Error::Parse("component indices start at 1".into()));
            }
            factors.push((JetVar::new(n[0] as u32, n[1] as u32), n[2] as u32));
        }
        out.push((Monomial::from_factors(factors), c));
    }
    Ok(Poly::from_terms(out))
}

pub fn series_to_json(s: &EpsSeries) -> Value {
    let comps: Vec<Value> = s
        .components()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(q, c)| json!({"eps": q, "terms": diffpoly_to_json(c)["terms"].clone()}))
        .collect();
    json!({"truncation": s.truncation(), "components": comps})
}

pub fn series_from_json(v: &Value) -> Result<EpsSeries> {
    let k = v
        .get("truncation")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Parse("missing truncation".into()))? as usize;
    let mut s = EpsSeries::zero(k);
    for c in v.get("components").and_then(Value::as_array).ok_or_else(|| Error::Parse("missing components".into()))? {
        let q = c.get("eps").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing eps".into()))? as usize;
        if q > k {
            return Err(Error::Parse(format!("component ε^{} beyond truncation {}", q, k)));
        }
        let p = diffpoly_from_json(c)?;
        s.set_component(q, &s.component(q).clone() + &p);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ratio;
    use proptest::prelude::*;

    fn u(m: u32) -> DiffPoly {
        jet(1, m)
    }

    #[test]
    fn derivative_of_square() {
        let p = u(0).pow(2);
        assert_eq!(total_derivative(&p), (&u(0) * &u(1)).scale(&rat(2)));
    }

    #[test]
    fn degree_of_u_uxx() {
        let p = &u(0) * &u(2);
        assert_eq!(degree(&p).unwrap(), Degree::Homogeneous(2));
        assert_eq!(degree(&DiffPoly::zero()), Err(Error::ZeroDegree));
        let mixed = &u(1) + &u(2);
        assert!(matches!(degree(&mixed).unwrap(), Degree::Mixed(_)));
    }

    #[test]
    fn total_derivative_as_derivation_is_d() {
        let d = Derivation::total(1, 3);
        let p = EpsSeries::regrade_element(&(&u(0).pow(3) + &u(2)), 3);
        assert_eq!(d.apply(&p).unwrap(), p.total_derivative());
    }

    #[test]
    fn arity_is_checked() {
        let d = Derivation::total(1, 2);
        let p = EpsSeries::constant_poly(jet(2, 0), 2);
        assert!(matches!(d.apply(&p), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn flow_regrading_rejects_degree_zero() {
        let w = &u(0).pow(2) + &u(1);
        assert!(EpsSeries::regrade_flow(&w, 2).is_err());
        let ok = EpsSeries::regrade_flow(&(&(&u(0) * &u(1)) + &u(3)), 2).unwrap();
        assert_eq!(ok.component(0), &(&u(0) * &u(1)));
        assert_eq!(ok.component(2), &u(3));
    }

    #[test]
    fn kdv_commutes_with_translation() {
        let kdv = VectorField::new(vec![&(&u(0) * &u(1)).scale(&rat(6)) + &u(3)]);
        let tr = VectorField::total(1);
        assert!(kdv.commutator(&tr).unwrap().is_zero());
        let dk = Derivation::from_flow(&kdv, 4).unwrap();
        let dt = Derivation::from_flow(&tr, 4).unwrap();
        assert!(dk.commutator(&dt).unwrap().is_zero());
    }

    #[test]
    fn json_roundtrip() {
        let p = &(&u(0) * &jet(2, 3)).scale(&ratio(-3, 7)) + &DiffPoly::int(2);
        let v = diffpoly_to_json(&p);
        assert_eq!(diffpoly_from_json(&v).unwrap(), p);
        let s = EpsSeries::regrade_element(&p, 3);
        assert_eq!(series_from_json(&series_to_json(&s)).unwrap(), s);
        assert_eq!(v["terms"][0]["coeff"], "2");
    }

    #[test]
    fn rendering_names() {
        let p = (&u(0) * &u(1)).scale(&rat(-1));
        assert_eq!(render(&p, 1, "u"), "-u*u_x");
        assert_eq!(render(&jet(2, 2), 2, "u"), "u2_xx");
    }

    fn arb_poly(components: u32) -> impl Strategy<Value = DiffPoly> {
        let term = (
            -5i64..=5,
            1i64..=3,
            prop::collection::vec((1..=components, 0u32..=3, 1u32..=2), 0..=3),
        );
        prop::collection::vec(term, 0..=4).prop_map(|ts| {
            Poly::from_terms(ts.into_iter().map(|(n, d, fs)| {
                (Monomial::from_factors(fs.into_iter().map(|(a, m, e)| (JetVar::new(a, m), e))), ratio(n, d))
            }))
        })
    }

    proptest! {
        #[test]
        fn leibniz_rule(p in arb_poly(2), q in arb_poly(2)) {
            let lhs = total_derivative(&(&p * &q));
            let rhs = &(&total_derivative(&p) * &q) + &(&p * &total_derivative(&q));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn derivative_raises_degree(p in arb_poly(2)) {
            if let Ok(Degree::Homogeneous(d)) = degree(&p) {
                let dp = total_derivative(&p);
                if !dp.is_zero() {
                    prop_assert_eq!(degree(&dp).unwrap(), Degree::Homogeneous(d + 1));
                }
            }
        }

        #[test]
        fn vector_fields_commute_with_d(w1 in arb_poly(2), w2 in arb_poly(2), p in arb_poly(2)) {
            let f = VectorField::new(vec![w1, w2]);
            let lhs = f.apply(&total_derivative(&p)).unwrap();
            let rhs = total_derivative(&f.apply(&p).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn jacobi_for_vector_fields(a in arb_poly(1), b in arb_poly(1), c in arb_poly(1)) {
            let (x, y, z) = (VectorField::new(vec![a]), VectorField::new(vec![b]), VectorField::new(vec![c]));
            let t1 = x.commutator(&y.commutator(&z).unwrap()).unwrap();
            let t2 = y.commutator(&z.commutator(&x).unwrap()).unwrap();
            let t3 = z.commutator(&x.commutator(&y).unwrap()).unwrap();
            let s = &(&t1.characteristic()[0] + &t2.characteristic()[0]) + &t3.characteristic()[0];
            prop_assert!(s.is_zero());
        }

        #[test]
        fn regraded_elements_are_homogeneous(p in arb_poly(2)) {
            let s = EpsSeries::regrade_element(&p, 6);
            prop_assert!(s.is_homogeneous(0));
            prop_assert_eq!(s.collapse(), p.filter_terms(|m| monomial_degree(m) <= 6));
        }
    }
}
