//! Difference polynomials with the shift automorphism, admissible derivations,
//! discrete Miura-type maps, and the embedding `u_{α,m} ↦ e^{εm∂} u_α`.

use serde_json::{json, Value};

use crate::diffalg::{jet, total_derivative, total_derivative_n, DiffPoly, EpsSeries, JetVar};
use crate::error::{Error, Result};
use crate::miura::invert_leading;
use crate::poly::{format_rational, rat, Poly, Rational};

/// `u_{α,m}`: component `α ≥ 1` shifted `m` times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShiftVar {
    pub alpha: u32,
    pub shift: i64,
}

impl ShiftVar {
    pub fn new(alpha: u32, shift: i64) -> Self {
        ShiftVar { alpha, shift }
    }
}

pub type DiscPoly = Poly<ShiftVar>;

/// ε-series with difference-polynomial coefficients; no homogeneity is imposed.
pub type DiscSeries = crate::diffalg::Series<ShiftVar>;

pub fn shift_var(alpha: u32, shift: i64) -> DiscPoly {
    Poly::var(ShiftVar::new(alpha, shift))
}

/// Admissible shift indices `min ≤ m ≤ max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub min: i64,
    pub max: i64,
}

impl Window {
    pub fn new(min: i64, max: i64) -> Self {
        Window { min, max }
    }

    pub fn symmetric(r: i64) -> Self {
        Window { min: -r, max: r }
    }

    fn check(&self, m: i64) -> Result<()> {
        if m < self.min || m > self.max {
            return Err(Error::WindowOverflow { shift: m, min: self.min, max: self.max });
        }
        Ok(())
    }

    pub fn contains(&self, p: &DiscPoly) -> bool {
        p.variables().iter().all(|v| self.check(v.shift).is_ok())
    }
}

/// `S^steps p`.
pub fn shift(p: &DiscPoly, steps: i64, window: Window) -> Result<DiscPoly> {
    for v in p.variables() {
        window.check(v.shift)?;
        window.check(v.shift + steps)?;
    }
    Ok(p.map_vars(|v| ShiftVar::new(v.alpha, v.shift + steps)))
}

pub fn shift_series(s: &DiscSeries, steps: i64, window: Window) -> Result<DiscSeries> {
    let comps = s.components().iter().map(|c| shift(c, steps, window)).collect::<Result<Vec<_>>>()?;
    Ok(DiscSeries::from_components(comps, s.truncation()))
}

/// Admissible derivation `D_W(u_{α,m}) = S^m W_α`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDerivation {
    characteristic: Vec<DiscSeries>,
    window: Window,
}

impl DiscreteDerivation {
    pub fn new(characteristic: Vec<DiscSeries>, window: Window) -> Result<Self> {
        if let Some(k) = characteristic.first().map(|s| s.truncation()) {
            if let Some(bad) = characteristic.iter().find(|s| s.truncation() != k) {
                return Err(Error::TruncationMismatch { left: k, right: bad.truncation() });
            }
        }
        Ok(DiscreteDerivation { characteristic, window })
    }

    /// ε-free characteristic.
    pub fn from_polys(w: &[DiscPoly], truncation: usize, window: Window) -> Result<Self> {
        Self::new(w.iter().map(|p| DiscSeries::constant_poly(p.clone(), truncation)).collect(), window)
    }

    pub fn characteristic(&self) -> &[DiscSeries] {
        &self.characteristic
    }

    pub fn arity(&self) -> usize {
        self.characteristic.len()
    }

    pub fn truncation(&self) -> usize {
        self.characteristic.first().map(|s| s.truncation()).unwrap_or(0)
    }

    pub fn window(&self) -> Window {
        self.window
    }

    fn image(&self, v: &ShiftVar) -> Result<DiscSeries> {
        let w = self
            .characteristic
            .get(v.alpha as usize - 1)
            .ok_or(Error::ArityMismatch { expected: self.arity(), found: v.alpha as usize })?;
        shift_series(w, v.shift, self.window)
    }

    pub fn apply(&self, s: &DiscSeries) -> Result<DiscSeries> {
        let k = self.truncation();
        let s = s.truncate(k);
        let mut out = DiscSeries::zero(k);
        for (q, comp) in s.components().iter().enumerate() {
            for (v, partial) in comp.gradient() {
                let term = self.image(&v)?.mul_poly(&partial);
                let shifted = DiscSeries::from_components(
                    std::iter::repeat_n(Poly::zero(), q).chain(term.components().iter().cloned()).collect(),
                    k,
                );
                out = out.add(&shifted.truncate(k))?;
            }
        }
        Ok(out)
    }

    pub fn apply_poly(&self, p: &DiscPoly) -> Result<DiscSeries> {
        self.apply(&DiscSeries::constant_poly(p.clone(), self.truncation()))
    }

    /// `[D_1, D_2]` through its characteristic `D_1(W_2) - D_2(W_1)`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        if self.arity() != other.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), found: other.arity() });
        }
        let chars = self
            .characteristic
            .iter()
            .zip(&other.characteristic)
            .map(|(w1, w2)| self.apply(w2)?.sub(&other.apply(w1)?))
            .collect::<Result<Vec<_>>>()?;
        Self::new(chars, self.window)
    }

    pub fn is_zero(&self) -> bool {
        self.characteristic.iter().all(|s| s.is_zero())
    }
}

/// Discrete Miura pair: `φ_V(v_{α,m}) = S^m V_α`, `ψ_U(u_{α,m}) = S^m U_α`.
#[derive(Clone, Debug)]
pub struct DiscreteMiuraPair {
    pub forward: Vec<DiscSeries>,
    pub inverse: Vec<DiscSeries>,
    pub eps_order: usize,
    pub window: Window,
}

fn substitute_shifts(p: &DiscSeries, images: &[DiscSeries], window: Window) -> Result<DiscSeries> {
    let mut err = None;
    let out = p.substitute(|v| {
        match images.get(v.alpha as usize - 1).ok_or(Error::ArityMismatch { expected: images.len(), found: v.alpha as usize }) {
            Ok(s) => shift_series(s, v.shift, window).unwrap_or_else(|e| {
                err.get_or_insert(e);
                DiscSeries::zero(p.truncation())
            }),
            Err(e) => {
                err.get_or_insert(e);
                DiscSeries::zero(p.truncation())
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Inverts `V` order by order in ε.
///
/// The ε⁰ part must involve only unshifted variables and pass the Jacobian test;
/// each later stage is `U_q = -[φ_V(U_{<q})]_q` with `u_{α,m} ↦ S^m U^{[0]}_α`.
pub fn discrete_miura(v: &[DiscSeries], eps_order: usize, window: Window) -> Result<DiscreteMiuraPair> {
    let forward: Vec<DiscSeries> = v.iter().map(|s| s.truncate(eps_order)).collect();
    if let Some(bad) = v.iter().find(|s| s.truncation() < eps_order) {
        return Err(Error::TruncationMismatch { left: bad.truncation(), right: eps_order });
    }
    let to_jet = |p: &DiscPoly| -> Result<DiffPoly> {
        if p.variables().iter().any(|x| x.shift != 0) {
            return Err(Error::NotInvertible("ε⁰ part of V involves shifted variables".into()));
        }
        Ok(p.map_vars(|x| JetVar::new(x.alpha, 0)))
    };
    let lead: Vec<DiffPoly> = forward.iter().map(|s| to_jet(s.component(0))).collect::<Result<_>>()?;
    let check = crate::miura::check_miura(&crate::miura::tuple_from_polys(&lead, 0));
    if !check.miura {
        return Err(Error::NotInvertible("Jacobian determinant of V^[0] vanishes".into()));
    }
    let u0: Vec<DiscPoly> = invert_leading(&lead)?.iter().map(|p| p.map_vars(|x| ShiftVar::new(x.alpha, 0))).collect();
    let u0_series: Vec<DiscSeries> = u0.iter().map(|p| DiscSeries::constant_poly(p.clone(), eps_order)).collect();
    let mut inverse = u0_series.clone();
    for q in 1..=eps_order {
        let mut stage = Vec::new();
        for ua in &inverse {
            let composed = substitute_shifts(ua, &forward, window)?;
            let r = -composed.component(q);
            let r = substitute_shifts(&DiscSeries::constant_poly(r, eps_order), &u0_series, window)?;
            stage.push(r.component(0).clone());
        }
        for (ua, s) in inverse.iter_mut().zip(stage) {
            ua.set_component(q, s);
        }
    }
    Ok(DiscreteMiuraPair { forward, inverse, eps_order, window })
}

impl DiscreteMiuraPair {
    /// `φ_V` on v-side series.
    pub fn phi(&self, p: &DiscSeries) -> Result<DiscSeries> {
        substitute_shifts(&p.truncate(self.eps_order), &self.forward, self.window)
    }

    /// `ψ_U` on u-side series.
    pub fn psi(&self, p: &DiscSeries) -> Result<DiscSeries> {
        substitute_shifts(&p.truncate(self.eps_order), &self.inverse, self.window)
    }

    pub fn round_trip_residuals(&self) -> Result<(Vec<DiscSeries>, Vec<DiscSeries>)> {
        let k = self.eps_order;
        let mut uu = Vec::new();
        let mut vv = Vec::new();
        for a in 1..=self.forward.len() as u32 {
            let gen = DiscSeries::constant_poly(shift_var(a, 0), k);
            uu.push(self.phi(&self.psi(&gen)?)?.sub(&gen)?);
            vv.push(self.psi(&self.phi(&gen)?)?.sub(&gen)?);
        }
        Ok((uu, vv))
    }

    /// `D̃`: characteristic `ψ_U(D(V_α))`.
    pub fn induce(&self, d: &DiscreteDerivation) -> Result<DiscreteDerivation> {
        if d.truncation() != self.eps_order {
            return Err(Error::TruncationMismatch { left: self.eps_order, right: d.truncation() });
        }
        let chars = self.forward.iter().map(|v| self.psi(&d.apply(v)?)).collect::<Result<Vec<_>>>()?;
        DiscreteDerivation::new(chars, self.window)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "eps_order": self.eps_order,
            "window": [self.window.min, self.window.max],
            "forward": { "side": "u", "values": self.forward.iter().map(disc_series_to_json).collect::<Vec<_>>() },
            "inverse": { "side": "v", "values": self.inverse.iter().map(disc_series_to_json).collect::<Vec<_>>() },
        })
    }
}

fn factorial(n: u32) -> Rational {
    (1..=n as i64).fold(rat(1), |acc, i| acc * rat(i))
}

/// `u_{α,m} ↦ Σ_{j≤K} (εm)^j/j! u_{α,j}` as an element of `Â` modulo `ε^{K+1}`.
pub fn embed_differential(p: &DiscPoly, eps_order: usize) -> EpsSeries {
    let image = |v: &ShiftVar| {
        let comps = (0..=eps_order as u32)
            .map(|j| {
                let c = Rational::from_integer(v.shift.into()).pow(j as i32) / factorial(j);
                jet(v.alpha, j).scale(&c)
            })
            .collect();
        EpsSeries::from_components(comps, eps_order)
    };
    DiscSeries::constant_poly(p.clone(), eps_order).substitute(image)
}

/// `e^{ε∂}` on `Â` modulo `ε^{K+1}`.
pub fn exp_eps_derivative(s: &EpsSeries) -> EpsSeries {
    let k = s.truncation();
    let mut out = EpsSeries::zero(k);
    for q in 0..=k {
        let mut acc = DiffPoly::zero();
        for j in 0..=q {
            let d = total_derivative_n(s.component(q - j), j as u32).scale(&(rat(1) / factorial(j as u32)));
            acc = &acc + &d;
        }
        out.set_component(q, acc);
    }
    out
}

/// `embed(S p) - e^{ε∂} embed(p)`.
pub fn embedding_residual(p: &DiscPoly, eps_order: usize, window: Window) -> Result<EpsSeries> {
    let lhs = embed_differential(&shift(p, 1, window)?, eps_order);
    lhs.sub(&exp_eps_derivative(&embed_differential(p, eps_order)))
}

/// The admissible derivation of `Â` whose characteristic is `embed(W_α)`, applied to `s`.
pub fn embedded_derivation_apply(w: &[DiscPoly], s: &EpsSeries) -> Result<EpsSeries> {
    let k = s.truncation();
    let chars: Vec<EpsSeries> = w.iter().map(|p| embed_differential(p, k)).collect();
    let mut out = EpsSeries::zero(k);
    for (q, comp) in s.components().iter().enumerate() {
        for (v, partial) in comp.gradient() {
            let x = chars.get(v.alpha as usize - 1).ok_or(Error::ArityMismatch { expected: w.len(), found: v.alpha as usize })?;
            let image = x.map(|c| total_derivative_n(c, v.order)).mul_poly(&partial);
            let shifted = EpsSeries::from_components(
                std::iter::repeat_n(Poly::zero(), q).chain(image.components().iter().cloned()).collect(),
                k,
            );
            out = out.add(&shifted.truncate(k))?;
        }
    }
    Ok(out)
}

/// `∂` commutes with the embedded derivation on `s`: `D̂(∂s) - ∂D̂(s)`.
pub fn embedded_admissibility_residual(w: &[DiscPoly], s: &EpsSeries) -> Result<EpsSeries> {
    let lhs = embedded_derivation_apply(w, &s.map(total_derivative))?;
    let rhs = embedded_derivation_apply(w, s)?.map(total_derivative);
    lhs.sub(&rhs)
}

pub fn disc_var_name(v: &ShiftVar, components: usize) -> String {
    let base = if components <= 1 { "u".to_string() } else { format!("u{}", v.alpha) };
    if v.shift == 0 {
        base
    } else {
        format!("{base}[{:+}]", v.shift)
    }
}

pub fn render_disc(p: &DiscPoly, components: usize) -> String {
    p.render(|v| disc_var_name(v, components))
}

pub fn disc_poly_to_json(p: &DiscPoly) -> Value {
    let terms: Vec<Value> = p
        .terms()
        .iter()
        .map(|(m, c)| {
            let mono: Vec<Value> = m.factors().iter().map(|(v, e)| json!([v.alpha, v.shift, e])).collect();
            json!({ "coeff": format_rational(c), "monomial": mono })
        })
        .collect();
    json!({ "terms": terms })
}

pub fn disc_series_to_json(s: &DiscSeries) -> Value {
    json!({ "truncation": s.truncation(), "components": s.components().iter().map(disc_poly_to_json).collect::<Vec<_>>() })
}

/// Parses sums of products such as `u1[+1]*u1 - 2*u1[-1] + 1/2`.
pub fn parse_disc_poly(s: &str) -> Result<DiscPoly> {
    let cleaned = s.replace(' ', "");
    if cleaned.is_empty() {
        return Err(Error::Parse("empty difference polynomial".into()));
    }
    let mut out = DiscPoly::zero();
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes: Vec<char> = cleaned.chars().collect();
    let mut depth = 0;
    for (i, ch) in bytes.iter().enumerate() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            '+' | '-' if depth == 0 && i > start => {
                terms.push(bytes[start..i].iter().collect::<String>());
                start = i;
            }
            _ => {}
        }
    }
    terms.push(bytes[start..].iter().collect::<String>());
    for t in terms {
        let (sign, body) = match t.strip_prefix('-') {
            Some(b) => (rat(-1), b.to_string()),
            None => (rat(1), t.trim_start_matches('+').to_string()),
        };
        let mut term = DiscPoly::constant(sign);
        for f in body.split('*') {
            term = &term * &parse_factor(f)?;
        }
        out = &out + &term;
    }
    Ok(out)
}

fn parse_factor(f: &str) -> Result<DiscPoly> {
    let (base, power) = match f.rsplit_once('^') {
        Some((b, e)) if !b.ends_with(']') || f.ends_with(char::is_numeric) => {
            (b, e.parse::<u32>().map_err(|_| Error::Parse(format!("bad exponent in {f}")))?)
        }
        _ => (f, 1),
    };
    if let Some(rest) = base.strip_prefix('u') {
        let (alpha, shift) = match rest.split_once('[') {
            Some((a, s)) => {
                let s = s.strip_suffix(']').ok_or_else(|| Error::Parse(format!("bad shift in {f}")))?;
                (a, s.trim_start_matches('+').parse::<i64>().map_err(|_| Error::Parse(format!("bad shift in {f}")))?)
            }
            None => (rest, 0),
        };
        let alpha = if alpha.is_empty() { 1 } else { alpha.parse().map_err(|_| Error::Parse(format!("bad component in {f}")))? };
        if alpha == 0 {
            return Err(Error::Parse(format!("components start at 1: {f}")));
        }
        return Ok(shift_var(alpha, shift).pow(power));
    }
    let c = crate::poly::parse_rational(base).ok_or_else(|| Error::Parse(format!("bad factor {f}")))?;
    Ok(DiscPoly::constant(c).pow(power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ratio;
    use proptest::prelude::*;

    const W: Window = Window { min: -6, max: 6 };

    fn u(a: u32, m: i64) -> DiscPoly {
        shift_var(a, m)
    }

    fn eps_series(parts: &[DiscPoly], k: usize) -> DiscSeries {
        DiscSeries::from_components(parts.to_vec(), k)
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift(&u(1, 0), 1, W).unwrap(), u(1, 1));
        let p = &u(1, 0) * &u(1, 1);
        assert_eq!(shift(&p, 1, W).unwrap(), &u(1, 1) * &u(1, 2));
        assert_eq!(shift(&shift(&p, 1, W).unwrap(), -1, W).unwrap(), p);
        assert!(matches!(shift(&u(1, 6), 1, W), Err(Error::WindowOverflow { shift: 7, .. })));
    }

    #[test]
    fn derivation_example() {
        let d = DiscreteDerivation::from_polys(&[&u(1, 1) - &u(1, 0)], 0, W).unwrap();
        assert_eq!(d.apply_poly(&u(1, 1)).unwrap().component(0), &(&u(1, 2) - &u(1, 1)));
        assert!(d.commutator(&d).unwrap().is_zero());
    }

    #[test]
    fn embedding_examples() {
        let e = embed_differential(&u(1, 1), 2);
        assert_eq!(e.components(), &[jet(1, 0), jet(1, 1), jet(1, 2).scale(&ratio(1, 2))]);
        assert_eq!(embed_differential(&u(1, 0), 3), EpsSeries::constant_poly(jet(1, 0), 3));
        let a = &u(1, 1) * &u(1, -1);
        let lhs = embed_differential(&a, 3);
        let rhs = embed_differential(&u(1, 1), 3).mul(&embed_differential(&u(1, -1), 3)).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn identity_miura() {
        let v = vec![eps_series(&[u(1, 0)], 3), eps_series(&[u(2, 0)], 3)];
        let pair = discrete_miura(&v, 3, W).unwrap();
        assert_eq!(pair.inverse, v);
    }

    #[test]
    fn shift_miura_inverse_alternates() {
        let k = 4;
        let v = vec![eps_series(&[u(1, 0), u(1, 1)], k)];
        let pair = discrete_miura(&v, k, W).unwrap();
        for q in 0..=k {
            let sign = if q % 2 == 0 { rat(1) } else { rat(-1) };
            assert_eq!(pair.inverse[0].component(q), &u(1, q as i64).scale(&sign));
        }
        let (uu, vv) = pair.round_trip_residuals().unwrap();
        assert!(uu.iter().chain(&vv).all(|s| s.is_zero()));
    }

    #[test]
    fn nonlinear_miura_round_trip() {
        let k = 3;
        let v = vec![
            eps_series(&[&u(1, 0) + &(&u(2, 0) * &u(2, 0)), &u(1, 1) * &u(2, -1)], k),
            eps_series(&[u(2, 0).scale(&rat(2)), DiscPoly::zero(), u(1, 2)], k),
        ];
        let pair = discrete_miura(&v, k, Window::symmetric(20)).unwrap();
        let (uu, vv) = pair.round_trip_residuals().unwrap();
        assert!(uu.iter().chain(&vv).all(|s| s.is_zero()));
    }

    #[test]
    fn degenerate_and_shifted_leading_maps_are_refused() {
        let v = vec![eps_series(&[&u(1, 0) * &u(1, 0)], 2)];
        assert!(matches!(discrete_miura(&v, 2, W), Err(Error::NotInvertible(_))));
        let v = vec![eps_series(&[u(1, 1)], 2)];
        assert!(matches!(discrete_miura(&v, 2, W), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn induced_derivations_respect_commutators() {
        let k = 2;
        let win = Window::symmetric(16);
        let v = vec![eps_series(&[u(1, 0), u(1, 1)], k)];
        let pair = discrete_miura(&v, k, win).unwrap();
        let d1 = DiscreteDerivation::from_polys(&[&u(1, 1) - &u(1, 0)], k, win).unwrap();
        let d2 = DiscreteDerivation::from_polys(&[&u(1, 1) - &u(1, -1)], k, win).unwrap();
        let lhs = pair.induce(&d1.commutator(&d2).unwrap()).unwrap();
        let rhs = pair.induce(&d1).unwrap().commutator(&pair.induce(&d2).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        let rev = pair.induce(&d2).unwrap().commutator(&pair.induce(&d1).unwrap()).unwrap();
        assert_eq!(pair.induce(&d2.commutator(&d1).unwrap()).unwrap(), rev);
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_disc_poly("u[+1] - u").unwrap(), &u(1, 1) - &u(1, 0));
        assert_eq!(parse_disc_poly("1/2*u2[-1]^2").unwrap(), u(2, -1).pow(2).scale(&ratio(1, 2)));
        assert!(parse_disc_poly("v").is_err());
    }

    fn arb_disc_poly() -> impl Strategy<Value = DiscPoly> {
        let mono = prop::collection::vec((1u32..=2, -2i64..=2, 1u32..=2), 0..=3);
        prop::collection::vec((mono, -3i64..=3), 1..=4).prop_map(|terms| {
            let mut p = DiscPoly::zero();
            for (factors, c) in terms {
                let mut t = DiscPoly::int(c);
                for (a, m, e) in factors {
                    t = &t * &u(a, m).pow(e);
                }
                p = &p + &t;
            }
            p
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn embed_intertwines_shift(p in arb_disc_poly()) {
            prop_assert!(embedding_residual(&p, 3, W).unwrap().is_zero());
        }

        #[test]
        fn embed_is_multiplicative(p in arb_disc_poly(), q in arb_disc_poly()) {
            let lhs = embed_differential(&(&p * &q), 3);
            let rhs = embed_differential(&p, 3).mul(&embed_differential(&q, 3)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn derivation_commutes_with_shift(p in arb_disc_poly(), w in arb_disc_poly()) {
            let d = DiscreteDerivation::from_polys(&[w.clone(), &w * &u(2, 1)], 0, W).unwrap();
            let lhs = d.apply_poly(&shift(&p, 1, W).unwrap()).unwrap();
            let rhs = shift_series(&d.apply_poly(&p).unwrap(), 1, W).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn embedded_derivation_is_admissible(p in arb_disc_poly(), w in arb_disc_poly()) {
            let s = embed_differential(&p, 2);
            prop_assert!(embedded_admissibility_residual(&[w.clone(), w], &s).unwrap().is_zero());
        }

        #[test]
        fn embedding_intertwines_derivations(p in arb_disc_poly(), w in arb_disc_poly()) {
            let d = DiscreteDerivation::from_polys(&[w.clone(), &w + &u(1, -1)], 0, W).unwrap();
            let lhs = embed_differential(d.apply_poly(&p).unwrap().component(0), 2);
            let rhs = embedded_derivation_apply(&[w.clone(), &w + &u(1, -1)], &embed_differential(&p, 2)).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
