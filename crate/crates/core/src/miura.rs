//! Miura-type ℓ-ples `V`, the maps `φ_V` (v ↦ V(u)) and `ψ_U` (u ↦ U(v)), induced
//! derivations and the reconstruction of flows from a tau-structure.
//!
//! Both jet rings use [`JetVar`]; which side a series lives on is tracked by the caller.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::diffalg::{jet, jet_order, series_to_json, DiffPoly, Derivation, EpsSeries, JetVar};
use crate::error::{Error, Result};
use crate::linalg::{poly_determinant, Matrix};
use crate::poly::{Monomial, Rational};

/// ε-graded values `V_α(u, u_1, …; ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MiuraTuple {
    pub values: Vec<EpsSeries>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiuraCheck {
    pub miura: bool,
    pub determinant: DiffPoly,
}

impl MiuraTuple {
    pub fn new(values: Vec<EpsSeries>) -> Result<Self> {
        if let Some(first) = values.first() {
            for v in &values {
                if v.truncation() != first.truncation() {
                    return Err(Error::TruncationMismatch { left: first.truncation(), right: v.truncation() });
                }
            }
        }
        Ok(MiuraTuple { values })
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn truncation(&self) -> usize {
        self.values.first().map(|v| v.truncation()).unwrap_or(0)
    }

    /// `V^{[0]}`: the ε⁰ part with jets of positive order dropped.
    pub fn leading(&self) -> Vec<DiffPoly> {
        self.values
            .iter()
            .map(|v| v.component(0).filter_terms(|m| m.factors().iter().all(|(j, _)| j.order == 0)))
            .collect()
    }

    pub fn jacobian(&self) -> Vec<Vec<DiffPoly>> {
        let lead = self.leading();
        lead.iter()
            .map(|v| (1..=self.arity() as u32).map(|b| v.partial(&JetVar::new(b, 0))).collect())
            .collect()
    }
}

pub fn check_miura(v: &MiuraTuple) -> MiuraCheck {
    let determinant = poly_determinant(&v.jacobian());
    MiuraCheck { miura: !determinant.is_zero(), determinant }
}

fn jet_series(base: &EpsSeries, order: u32) -> EpsSeries {
    let mut s = base.clone();
    for _ in 0..order {
        s = s.total_derivative();
    }
    s
}

/// Substitutes `w_{α,m} ↦ ∂^m images[α]` into an ε-series.
fn substitute_jets(p: &EpsSeries, images: &[EpsSeries]) -> Result<EpsSeries> {
    let found = p.max_component() as usize;
    if found > images.len() {
        return Err(Error::ArityMismatch { expected: images.len(), found });
    }
    let k = p.truncation();
    Ok(p.substitute(|j: &JetVar| jet_series(&images[j.alpha as usize - 1].truncate(k), j.order)))
}

/// `φ_V`: the differential homomorphism `v_α ↦ V_α`.
pub fn forward_map(v: &MiuraTuple, p: &EpsSeries) -> Result<EpsSeries> {
    substitute_jets(p, &v.values)
}

/// A Miura-type map together with its inverse `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct MiuraPair {
    pub forward: MiuraTuple,
    pub inverse: Vec<EpsSeries>,
    pub eps_order: usize,
    pub jet_depth: u32,
    /// Highest jet order of `U` at each ε-order.
    pub stage_jet_orders: Vec<u32>,
}

const FIXED_POINT_ROUNDS: usize = 64;

/// Polynomial inverse of the leading map `u ↦ V^{[0]}(u)`.
pub(crate) fn invert_leading(lead: &[DiffPoly]) -> Result<Vec<DiffPoly>> {
    let l = lead.len();
    let one = Monomial::one();
    let mut a = Matrix::zeros(l, l);
    let mut c = Vec::new();
    let mut nonlinear = Vec::new();
    for (i, p) in lead.iter().enumerate() {
        c.push(p.coeff(&one));
        for b in 0..l {
            a[(i, b)] = p.coeff(&Monomial::var(JetVar::new(b as u32 + 1, 0)));
        }
        nonlinear.push(p.filter_terms(|m| m.total_degree() >= 2));
    }
    let a_inv = a.inverse().ok_or_else(|| Error::NotInvertible("linear part of V^[0] is singular".into()))?;
    let shifted: Vec<DiffPoly> = (0..l).map(|i| &jet(i as u32 + 1, 0) - &DiffPoly::constant(c[i].clone())).collect();
    let mut u = a_inv.mul_poly_vec(&shifted);
    for _ in 0..FIXED_POINT_ROUNDS {
        let n_of_u: Vec<DiffPoly> = nonlinear.iter().map(|n| n.substitute(|j| u[j.alpha as usize - 1].clone())).collect();
        let rhs: Vec<DiffPoly> = shifted.iter().zip(&n_of_u).map(|(s, n)| s - n).collect();
        let next = a_inv.mul_poly_vec(&rhs);
        if next == u {
            return Ok(u);
        }
        u = next;
    }
    Err(Error::NotInvertible(format!("fixed-point inversion of V^[0] did not stabilize in {FIXED_POINT_ROUNDS} rounds")))
}

/// Inverse of a matrix of polynomials with constant nonzero determinant.
fn unimodular_inverse(m: &[Vec<DiffPoly>]) -> Result<Vec<Vec<DiffPoly>>> {
    let n = m.len();
    let det = poly_determinant(m);
    let det = det
        .as_constant()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| Error::NotInvertible("Jacobian determinant of V^[0] is not a nonzero constant".into()))?;
    let inv_det = Rational::from_integer(1.into()) / det;
    let mut out = vec![vec![DiffPoly::zero(); n]; n];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            // adj(M)_{ij} = (-1)^{i+j} det(M without row j, column i)
            let minor: Vec<Vec<DiffPoly>> = (0..n)
                .filter(|r| *r != j)
                .map(|r| (0..n).filter(|c| *c != i).map(|c| m[r][c].clone()).collect())
                .collect();
            let cof = if n == 1 { DiffPoly::int(1) } else { poly_determinant(&minor) };
            let sign = if (i + j) % 2 == 0 { inv_det.clone() } else { -inv_det.clone() };
            *entry = cof.scale(&sign);
        }
    }
    Ok(out)
}

/// Order-by-order inverse `U` with `φ_V(U_α) = u_α` modulo `ε^{K+1}`.
pub fn invert_miura(v: &MiuraTuple, eps_order: usize, jet_depth: u32) -> Result<MiuraPair> {
    let check = check_miura(v);
    if !check.miura {
        return Err(Error::NotInvertible("Jacobian determinant of V^[0] vanishes".into()));
    }
    if v.truncation() < eps_order {
        return Err(Error::TruncationMismatch { left: v.truncation(), right: eps_order });
    }
    let forward = MiuraTuple::new(v.values.iter().map(|s| s.truncate(eps_order)).collect())?;
    let u0 = invert_leading(&forward.leading())?;
    let j_inv = unimodular_inverse(&forward.jacobian())?;
    let j_inv_at: Vec<Vec<DiffPoly>> = j_inv
        .iter()
        .map(|row| row.iter().map(|p| p.substitute(|j| u0[j.alpha as usize - 1].clone())).collect())
        .collect();
    let mut inverse: Vec<EpsSeries> = u0.iter().map(|p| EpsSeries::constant_poly(p.clone(), eps_order)).collect();
    let mut stage_jet_orders = vec![0];
    for q in 1..=eps_order {
        let composed: Vec<DiffPoly> = forward
            .values
            .iter()
            .map(|vb| substitute_jets(vb, &inverse).map(|s| s.component(q).clone()))
            .collect::<Result<_>>()?;
        let mut order = 0;
        for (alpha, row) in j_inv_at.iter().enumerate() {
            let mut uq = DiffPoly::zero();
            for (b, entry) in row.iter().enumerate() {
                uq = &uq - &(entry * &composed[b]);
            }
            order = order.max(jet_order(&uq).unwrap_or(0));
            inverse[alpha].set_component(q, uq);
        }
        if order > jet_depth {
            return Err(Error::JetDepthExceeded { order, depth: jet_depth });
        }
        stage_jet_orders.push(order);
    }
    Ok(MiuraPair { forward, inverse, eps_order, jet_depth, stage_jet_orders })
}

impl MiuraPair {
    /// `φ_V` on v-side series.
    pub fn phi(&self, p: &EpsSeries) -> Result<EpsSeries> {
        forward_map(&self.forward, &p.truncate(self.eps_order))
    }

    /// `ψ_U` on u-side series.
    pub fn psi(&self, p: &EpsSeries) -> Result<EpsSeries> {
        substitute_jets(&p.truncate(self.eps_order), &self.inverse)
    }

    /// `φ_V(ψ_U(u_α)) - u_α` and `ψ_U(φ_V(v_α)) - v_α` for every generator.
    pub fn round_trip_residuals(&self) -> Result<(Vec<EpsSeries>, Vec<EpsSeries>)> {
        let k = self.eps_order;
        let mut uu = Vec::new();
        let mut vv = Vec::new();
        for a in 1..=self.forward.arity() as u32 {
            let gen = EpsSeries::constant_poly(jet(a, 0), k);
            uu.push(self.phi(&self.psi(&gen)?)?.sub(&gen)?);
            vv.push(self.psi(&self.phi(&gen)?)?.sub(&gen)?);
        }
        Ok((uu, vv))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "eps_order": self.eps_order,
            "jet_depth": self.jet_depth,
            "stage_jet_orders": self.stage_jet_orders,
            "forward": { "side": "u", "values": self.forward.values.iter().map(series_to_json).collect::<Vec<_>>() },
            "inverse": { "side": "v", "values": self.inverse.iter().map(series_to_json).collect::<Vec<_>>() },
        })
    }
}

/// `D̃`: characteristic `ψ_U(D(V_α))` on the v-side.
pub fn induce_derivation(pair: &MiuraPair, d: &Derivation) -> Result<Derivation> {
    if d.truncation() != pair.eps_order {
        return Err(Error::TruncationMismatch { left: pair.eps_order, right: d.truncation() });
    }
    let chars = pair
        .forward
        .values
        .iter()
        .map(|v| pair.psi(&d.apply(v)?))
        .collect::<Result<Vec<_>>>()?;
    Derivation::new(chars)
}

/// Flows from a tau-structure in tau-coordinates:
/// `D_j(u_α) = Σ_{β,m} φ_V(∂U_α/∂v_{β,m}) ∂^m D_1(Ω_{j;i_β})`.
///
/// `rows[j]` holds `(Ω_{j;i_1}, …, Ω_{j;i_ℓ})` as u-side series.
pub fn reconstruct_flows<L: Ord + Clone>(
    pair: &MiuraPair,
    d_one: &Derivation,
    rows: &BTreeMap<L, Vec<EpsSeries>>,
) -> Result<BTreeMap<L, Vec<EpsSeries>>> {
    let k = pair.eps_order;
    if d_one.truncation() != k {
        return Err(Error::TruncationMismatch { left: k, right: d_one.truncation() });
    }
    let l = pair.forward.arity();
    // φ_V(∂U_α/∂v_{β,m}) for every jet variable that occurs in U_α.
    let mut coeffs: Vec<Vec<(JetVar, EpsSeries)>> = Vec::new();
    for ua in &pair.inverse {
        let mut vars: Vec<JetVar> = ua.components().iter().flat_map(|c| c.variables()).collect();
        vars.sort();
        vars.dedup();
        let mut list = Vec::new();
        for var in vars {
            let partial = ua.map(|p| p.partial(&var));
            list.push((var, pair.phi(&partial)?));
        }
        coeffs.push(list);
    }
    let mut out = BTreeMap::new();
    for (label, row) in rows {
        if row.len() != l {
            return Err(Error::ArityMismatch { expected: l, found: row.len() });
        }
        let d_rows: Vec<EpsSeries> = row.iter().map(|w| d_one.apply(&w.truncate(k))).collect::<Result<_>>()?;
        let mut flow = Vec::new();
        for list in &coeffs {
            let mut acc = EpsSeries::zero(k);
            for (var, c) in list {
                let d = jet_series(&d_rows[var.alpha as usize - 1], var.order);
                acc = acc.add(&c.mul(&d)?)?;
            }
            flow.push(acc);
        }
        out.insert(label.clone(), flow);
    }
    Ok(out)
}

/// `V` built from polynomials in `u`, regraded by degree.
pub fn tuple_from_polys(values: &[DiffPoly], eps_order: usize) -> MiuraTuple {
    MiuraTuple { values: values.iter().map(|p| EpsSeries::regrade_element(p, eps_order)).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, ratio};

    fn series(parts: &[DiffPoly], k: usize) -> EpsSeries {
        EpsSeries::from_components(parts.to_vec(), k)
    }

    #[test]
    fn check_miura_examples() {
        let id = MiuraTuple::new(vec![series(&[jet(1, 0)], 2), series(&[jet(2, 0)], 2)]).unwrap();
        assert_eq!(check_miura(&id), MiuraCheck { miura: true, determinant: DiffPoly::int(1) });
        let sq = MiuraTuple::new(vec![series(&[jet(1, 0).pow(2)], 2)]).unwrap();
        assert_eq!(check_miura(&sq).determinant, jet(1, 0).scale(&rat(2)));
        let eps = MiuraTuple::new(vec![series(&[DiffPoly::zero(), jet(1, 1)], 2)]).unwrap();
        assert!(!check_miura(&eps).miura);
    }

    #[test]
    fn forward_map_chain_rule() {
        let v = MiuraTuple::new(vec![series(&[jet(1, 0).pow(2)], 3)]).unwrap();
        let p = series(&[DiffPoly::zero(), jet(1, 1)], 3);
        let img = forward_map(&v, &p).unwrap();
        assert_eq!(img.component(1), &(&jet(1, 0) * &jet(1, 1)).scale(&rat(2)));
    }

    #[test]
    fn shift_series_inverse() {
        // V = u + ε u_1 inverts to v - ε v_1 + ε² v_2 - …
        let k = 5;
        let v = MiuraTuple::new(vec![series(&[jet(1, 0), jet(1, 1)], k)]).unwrap();
        let pair = invert_miura(&v, k, 8).unwrap();
        for q in 0..=k {
            let sign = if q % 2 == 0 { 1 } else { -1 };
            assert_eq!(pair.inverse[0].component(q), &jet(1, q as u32).scale(&rat(sign)));
        }
        let (uu, vv) = pair.round_trip_residuals().unwrap();
        assert!(uu.iter().chain(&vv).all(|s| s.is_zero()));
        assert_eq!(pair.stage_jet_orders, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn linear_rescale_inverse() {
        let v = MiuraTuple::new(vec![series(&[jet(1, 0).scale(&rat(2))], 2)]).unwrap();
        let pair = invert_miura(&v, 2, 4).unwrap();
        assert_eq!(pair.inverse[0].component(0), &jet(1, 0).scale(&ratio(1, 2)));
    }

    #[test]
    fn square_root_is_refused() {
        let v = MiuraTuple::new(vec![series(&[jet(1, 0).pow(2)], 2)]).unwrap();
        assert!(matches!(invert_miura(&v, 2, 4), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn triangular_leading_map() {
        // (u1 + u2², u2 + 1) inverts to (v1 - (v2 - 1)², v2 - 1)
        let v = MiuraTuple::new(vec![
            series(&[&jet(1, 0) + &jet(2, 0).pow(2)], 1),
            series(&[&jet(2, 0) + &DiffPoly::int(1)], 1),
        ])
        .unwrap();
        let pair = invert_miura(&v, 1, 2).unwrap();
        let w = &jet(2, 0) - &DiffPoly::int(1);
        assert_eq!(pair.inverse[0].component(0), &(&jet(1, 0) - &w.pow(2)));
        assert_eq!(pair.inverse[1].component(0), &w);
    }

    #[test]
    fn induced_total_derivative_is_total_derivative() {
        let k = 4;
        let v = MiuraTuple::new(vec![series(&[jet(1, 0), DiffPoly::zero(), jet(1, 2)], k)]).unwrap();
        let pair = invert_miura(&v, k, 8).unwrap();
        let d = induce_derivation(&pair, &Derivation::total(1, k)).unwrap();
        assert_eq!(d, Derivation::total(1, k));
    }
}
