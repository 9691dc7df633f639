//! Lax operators `L = ∂ + Λ + q`, the dressing `e^{ad U} L = ∂ + Λ + H` and the
//! basic resolvents `R_a = e^{-ad U} Λ_{m_a}`.
//!
//! All series are graded by principal degree and solved one slice at a time.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::diffalg::{jet, DiffPoly};
use crate::error::{Error, Result};
use crate::kacmoody::{LoopElement, LoopRealization};
use crate::poly::Rational;

/// `L = ∂ + Λ + q` with `q` a 𝔟-valued vector of differential polynomials.
#[derive(Clone, Debug)]
pub struct LaxOperator {
    pub realization: Arc<LoopRealization>,
    pub q: LoopElement,
    /// Number of jet components the coefficients may use.
    pub components: usize,
}

impl LaxOperator {
    pub fn new(realization: Arc<LoopRealization>, q: LoopElement, components: usize) -> Result<Self> {
        for ((k, i), _) in q.terms() {
            if *k != 0 || realization.residues[*i] != 0 || realization.rho[*i] > 0 {
                return Err(Error::NotInSubspace(format!(
                    "𝔟: q has a {}·λ^{} component",
                    realization.basis_name(*i),
                    k
                )));
            }
        }
        Ok(LaxOperator { realization, q, components })
    }

    /// Generic operator: `q = Σ q_i b_i` over the basis of 𝔟, with `q_i = u_{i,0}`.
    pub fn generic(realization: Arc<LoopRealization>) -> Self {
        let borel = realization.borel_indices();
        let mut q = LoopElement::zero();
        for (pos, i) in borel.iter().enumerate() {
            q.add_term(0, *i, &jet(pos as u32 + 1, 0));
        }
        LaxOperator { components: borel.len(), realization, q }
    }

    /// `Λ + q`.
    pub fn potential(&self) -> LoopElement {
        self.realization.lambda.add(&self.q)
    }

    /// `[L, X] = ∂X + [Λ + q, X]`.
    pub fn commutator(&self, x: &LoopElement) -> LoopElement {
        x.total_derivative().add(&self.realization.bracket(&self.potential(), x))
    }

    /// Lowest principal degree occurring in `q`.
    pub fn q_floor(&self) -> i64 {
        self.q.terms().map(|((k, i), _)| self.realization.principal_degree(*k, *i)).min().unwrap_or(0)
    }
}

/// Dressing data, stored per principal degree.
#[derive(Clone, Debug)]
pub struct Dressing {
    /// `U^{(d)}` for `d = -1, …, -(depth+1)`.
    pub u: BTreeMap<i64, LoopElement>,
    /// `H^{(d)}` for `d = -1, …, -depth`.
    pub h: BTreeMap<i64, LoopElement>,
    pub depth: i64,
}

impl Dressing {
    pub fn u_total(&self) -> LoopElement {
        LoopElement::sum(&self.u.values().cloned().collect::<Vec<_>>())
    }

    pub fn h_total(&self) -> LoopElement {
        LoopElement::sum(&self.h.values().cloned().collect::<Vec<_>>())
    }

    /// Lowest degree of `U` available.
    pub fn u_floor(&self) -> i64 {
        -(self.depth + 1)
    }
}

fn factorial_inv(n: usize) -> Rational {
    let f = (2..=n as i64).fold(num_bigint::BigInt::from(1), |acc, i| acc * i);
    Rational::new(1.into(), f)
}

/// Solves `e^{ad U}(∂ + Λ + q) = ∂ + Λ + H` through principal degree `-depth`.
pub fn compute_dressing(lax: &LaxOperator, depth: i64) -> Result<Dressing> {
    let g = &lax.realization;
    let q_by = g.by_degree(&lax.q);
    let mut u: BTreeMap<i64, LoopElement> = BTreeMap::new();
    let mut h: BTreeMap<i64, LoopElement> = BTreeMap::new();
    // t[n-1][d] = T_n^{(d)}
    let mut t: Vec<BTreeMap<i64, LoopElement>> = Vec::new();
    for j in (-depth..=0).rev() {
        let mut t1 = LoopElement::zero();
        for (dq, qs) in &q_by {
            if let Some(ud) = u.get(&(j - dq)) {
                t1 = t1.add(&g.bracket(ud, qs));
            }
        }
        if let Some(uj) = u.get(&j) {
            t1 = t1.sub(&uj.total_derivative());
        }
        if t.is_empty() {
            t.push(BTreeMap::new());
        }
        t[0].insert(j, t1.clone());
        let mut y = q_by.get(&j).cloned().unwrap_or_default().add(&t1);
        // T_n has principal degree at most 1 - n.
        for n in 2..=(1 - j) as usize {
            let mut tn = LoopElement::zero();
            for (d, ud) in &u {
                if let Some(prev) = t[n - 2].get(&(j - d)) {
                    if !prev.is_zero() {
                        tn = tn.add(&g.bracket(ud, prev));
                    }
                }
            }
            if t.len() < n {
                t.push(BTreeMap::new());
            }
            y = y.add(&tn.scale(&factorial_inv(n)));
            t[n - 1].insert(j, tn);
        }
        let split = g.heisenberg_split(&y, j)?;
        if !split.h_part.is_zero() {
            h.insert(j, split.h_part.clone());
        }
        let next = split.preimage;
        let bl = g.bracket(&next, &g.lambda);
        let entry = t[0].get_mut(&j).unwrap();
        *entry = entry.add(&bl);
        u.insert(j - 1, next);
    }
    if let Some(h0) = h.get(&0) {
        if !h0.is_zero() {
            return Err(Error::IdentityFailed("dressing produced a degree-0 Heisenberg term".into()));
        }
    }
    g.check_window(&LoopElement::sum(&u.values().cloned().collect::<Vec<_>>()))
        .map_err(|_| Error::WindowExhausted { degree: -depth - 1 })?;
    Ok(Dressing { u, h, depth })
}

/// `e^{ad U} X` keeping principal degrees `≥ floor`, for `U` of negative degree.
pub fn conjugate(g: &LoopRealization, u: &LoopElement, x: &LoopElement, floor: i64, sign: i64) -> LoopElement {
    let u = if sign < 0 { u.neg() } else { u.clone() };
    let mut term = g.degree_filter(x, |d| d >= floor);
    let mut total = term.clone();
    let mut n = 1;
    while !term.is_zero() {
        term = bracket_above(g, &u, &term, floor).scale(&Rational::new(1.into(), (n as i64).into()));
        total = total.add(&term);
        n += 1;
    }
    total
}

/// Bracket keeping only results of principal degree `≥ floor`.
pub fn bracket_above(g: &LoopRealization, x: &LoopElement, y: &LoopElement, floor: i64) -> LoopElement {
    let xs = g.by_degree(x);
    let ys = g.by_degree(y);
    let mut parts = Vec::new();
    for (dx, xe) in &xs {
        for (dy, ye) in &ys {
            if dx + dy >= floor {
                parts.push(g.bracket(xe, ye));
            }
        }
    }
    LoopElement::sum(&parts)
}

/// Independent check: `e^{ad U} L - ∂ - Λ - H` through degree `-depth`.
pub fn dressing_residual(lax: &LaxOperator, dressing: &Dressing) -> LoopElement {
    let g = &lax.realization;
    let floor = -dressing.depth;
    let u = dressing.u_total();
    // e^{ad U}(∂ + Λ + q) - ∂ = Λ + q + Σ_{n≥1} (ad U)^{n-1}([U, Λ + q] - ∂U) / n!
    let first = bracket_above(g, &u, &lax.potential(), floor).sub(&g.degree_filter(&u.total_derivative(), |d| d >= floor));
    let mut term = first.clone();
    let mut total = lax.q.add(&first);
    let mut n = 1;
    while !term.is_zero() {
        n += 1;
        term = bracket_above(g, &u, &term, floor).scale(&Rational::new(1.into(), (n as i64).into()));
        total = total.add(&term);
    }
    g.degree_filter(&total.sub(&dressing.h_total()), |d| d >= floor)
}

/// Resolvent `R_a` known exactly for principal degrees `≥ floor`.
#[derive(Clone, Debug)]
pub struct Resolvent {
    /// Exponent index `a`, 1-based.
    pub index: usize,
    pub exponent: i64,
    pub floor: i64,
    pub element: LoopElement,
}

/// `R_a = e^{-ad U} Λ_{m_a}` down to `m_a - depth`.
pub fn compute_resolvent(lax: &LaxOperator, dressing: &Dressing, a: usize, depth: i64) -> Result<Resolvent> {
    let g = &lax.realization;
    if a == 0 || a > g.exponents().len() {
        return Err(Error::BadLabel(format!("exponent index {}", a)));
    }
    let m = g.exponents()[a - 1];
    let floor = m - depth;
    if dressing.u_floor() > floor - m {
        return Err(Error::DepthInsufficient(format!(
            "resolvent R_{} to degree {} needs U down to {}, dressing reaches {}",
            a,
            floor,
            floor - m,
            dressing.u_floor()
        )));
    }
    let u = g.degree_filter(&dressing.u_total(), |d| d >= floor - m);
    let element = conjugate(g, &u, &g.heisenberg[a - 1], floor, -1);
    Ok(Resolvent { index: a, exponent: m, floor, element })
}

impl Resolvent {
    /// `[L, R]`, reliable in degrees `≥ floor + 1`.
    pub fn lax_residual(&self, lax: &LaxOperator) -> LoopElement {
        let g = &lax.realization;
        g.degree_filter(&lax.commutator(&self.element), |d| d > self.floor)
    }

    /// λ-powers `p` where `(R_a|R_b)` is exact.
    pub fn reliable_pairing_powers(&self, other: &Resolvent, g: &LoopRealization) -> std::ops::RangeInclusive<i64> {
        let lo = (self.floor + other.exponent).max(other.floor + self.exponent);
        let s = g.spacing;
        let top = (self.exponent + other.exponent).div_euclid(s) + 1;
        let start = lo.div_euclid(s) + if lo.rem_euclid(s) == 0 { 0 } else { 1 };
        start..=top
    }

    /// Deviation of `(R_a|R_b)` from `h δ_{a+b,n+1} λ^N` over the reliable powers.
    pub fn pairing_residual(&self, other: &Resolvent, g: &LoopRealization) -> BTreeMap<i64, DiffPoly> {
        let powers = self.reliable_pairing_powers(other, g);
        let pairing = g.bilinear_from(&self.element, &other.element, *powers.start());
        let n = g.exponents().len();
        let mut out = BTreeMap::new();
        for p in powers {
            let mut v = pairing.get(&p).cloned().unwrap_or_default();
            if self.index + other.index == n + 1 && p == g.twist {
                v = &v - &DiffPoly::int(g.kind.coxeter_number);
            }
            if !v.is_zero() {
                out.insert(p, v);
            }
        }
        out
    }

    /// `(λ^{kN} R)_+`.
    pub fn shifted_plus(&self, g: &LoopRealization, k: usize) -> Result<LoopElement> {
        let shift = k as i64 * g.twist;
        let needed = g.rho_range().0 - g.rh() * k as i64;
        if self.floor > needed {
            return Err(Error::DepthInsufficient(format!(
                "(λ^{}R_{})_+ needs degree {}, resolvent known to {}",
                shift, self.index, needed, self.floor
            )));
        }
        Ok(self.element.shift(shift).plus())
    }
}

/// Lowest principal degree of resolvents needed for flows with `k ≤ max_k`.
pub fn floor_for_flows(g: &LoopRealization, max_k: usize) -> i64 {
    g.rho_range().0 - g.rh() * max_k as i64
}

/// Lowest principal degree needed for `Ω_{a,k1;b,k2}` with `k1 + k2 ≤ 2 max_k`.
pub fn floor_for_omega(g: &LoopRealization, max_k: usize) -> i64 {
    let m_max = *g.exponents().iter().max().unwrap();
    -g.rh() * 2 * max_k as i64 - m_max
}

/// All basic resolvents down to a common floor, with the dressing they use.
pub fn resolvents_to_floor(lax: &LaxOperator, floor: i64) -> Result<(Dressing, Vec<Resolvent>)> {
    let g = &lax.realization;
    let m_max = *g.exponents().iter().max().unwrap();
    let dressing = compute_dressing(lax, m_max - floor - 1)?;
    let rs = (1..=g.exponents().len())
        .map(|a| compute_resolvent(lax, &dressing, a, g.exponents()[a - 1] - floor))
        .collect::<Result<Vec<_>>>()?;
    Ok((dressing, rs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kacmoody::build_algebra;

    fn generic(name: &str) -> LaxOperator {
        LaxOperator::generic(Arc::new(build_algebra(name, 0).unwrap()))
    }

    #[test]
    fn dressing_satisfies_defining_identity() {
        for name in ["A1^(1)", "A2^(1)", "A2^(2)"] {
            let lax = generic(name);
            let d = compute_dressing(&lax, 6).unwrap();
            assert!(dressing_residual(&lax, &d).is_zero(), "{}", name);
            for (deg, x) in &d.h {
                let hx = lax.realization.heisenberg_at(*deg).unwrap();
                assert!(lax.realization.bracket(&hx, x).is_zero());
            }
        }
    }

    #[test]
    fn resolvents_commute_with_lax_and_pair_correctly() {
        for (name, floor) in [("A1^(1)", -8), ("A2^(1)", -6), ("A2^(2)", -8)] {
            let lax = generic(name);
            let g = lax.realization.clone();
            let (_, rs) = resolvents_to_floor(&lax, floor).unwrap();
            for r in &rs {
                assert!(r.lax_residual(&lax).is_zero(), "{} R_{}", name, r.index);
                for s in &rs {
                    assert!(r.pairing_residual(s, &g).is_empty(), "{} (R_{}|R_{})", name, r.index, s.index);
                }
            }
        }
    }

    #[test]
    fn vacuum_resolvent_is_lambda() {
        let g = Arc::new(build_algebra("A1^(1)", 0).unwrap());
        let lax = LaxOperator::new(g.clone(), LoopElement::zero(), 1).unwrap();
        let (_, rs) = resolvents_to_floor(&lax, -6).unwrap();
        assert_eq!(rs[0].element, g.lambda);
    }

    #[test]
    fn q_outside_borel_is_rejected() {
        let g = Arc::new(build_algebra("A1^(1)", 0).unwrap());
        let e = g.algebra.index_of("E12").unwrap();
        let q = LoopElement::term(0, e, jet(1, 0));
        assert!(matches!(LaxOperator::new(g, q, 1), Err(Error::NotInSubspace(_))));
    }

    #[test]
    fn depth_is_checked() {
        let lax = generic("A1^(1)");
        let (_, rs) = resolvents_to_floor(&lax, -3).unwrap();
        assert!(rs[0].shifted_plus(&lax.realization, 2).is_err());
        assert!(rs[0].shifted_plus(&lax.realization, 1).is_ok());
    }
}
