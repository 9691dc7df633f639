//! Gauge action of `N = exp(𝔫)` on Lax operators, DS canonical forms and the
//! gauge-invariant coordinates `u_α(q)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::diffalg::{jet, DiffHom, DiffPoly};
use crate::error::{Error, Result};
use crate::kacmoody::{LoopElement, LoopRealization};
use crate::linalg::Matrix;
use crate::poly::{rat, Rational};
use crate::resolvent::LaxOperator;

#[derive(Clone, Debug)]
struct DegreeSplitter {
    /// Basis indices of `𝔟^{-k}`.
    borel: Vec<usize>,
    /// Positions in `v_basis` of the gauge vectors of degree `-k`.
    gauge: Vec<usize>,
    /// Basis indices of `𝔫^{-k-1}`.
    nil: Vec<usize>,
    inverse: Matrix,
}

/// A DS gauge `V ⊂ 𝔟` with `𝔟 = V ⊕ [e, 𝔫]`.
#[derive(Clone, Debug)]
pub struct GaugeFrame {
    pub realization: Arc<LoopRealization>,
    pub name: String,
    /// Basis indices spanning 𝔟, in the order of the generic `q` variables.
    pub borel: Vec<usize>,
    pub nilpotent: Vec<usize>,
    /// Coordinates of `v_1..v_ℓ` in the basis of 𝔤.
    pub v_basis: Vec<Vec<Rational>>,
    /// `deg v_α = -m'_α`.
    pub v_degrees: Vec<i64>,
    splitters: BTreeMap<i64, DegreeSplitter>,
}

impl GaugeFrame {
    pub fn new(realization: Arc<LoopRealization>, gauge: &str) -> Result<Self> {
        let g = &realization;
        let spec = g.gauge(gauge)?.clone();
        let borel = g.borel_indices();
        let nilpotent = g.nilpotent_indices();
        let mut v_degrees = Vec::new();
        for v in &spec.basis {
            let degs: Vec<i64> = v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, _)| g.rho[i]).collect();
            if degs.is_empty() || degs.iter().any(|d| *d != degs[0]) {
                return Err(Error::InvalidGauge("gauge vector is not homogeneous".into()));
            }
            if v.iter().enumerate().any(|(i, c)| !c.is_zero() && !borel.contains(&i)) {
                return Err(Error::InvalidGauge("gauge vector is not in 𝔟".into()));
            }
            if degs[0] >= 0 {
                return Err(Error::InvalidGauge("gauge vector has nonnegative degree".into()));
            }
            v_degrees.push(degs[0]);
        }
        if v_degrees.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidGauge("gauge basis must be ordered by descending degree".into()));
        }
        let rho_min = borel.iter().map(|i| g.rho[*i]).min().unwrap();
        let mut splitters = BTreeMap::new();
        for k in 0..=(-rho_min) {
            let b: Vec<usize> = borel.iter().copied().filter(|i| g.rho[*i] == -k).collect();
            let gv: Vec<usize> = (0..spec.basis.len()).filter(|a| v_degrees[*a] == -k).collect();
            let nil: Vec<usize> = nilpotent.iter().copied().filter(|i| g.rho[*i] == -k - 1).collect();
            let mut cols: Vec<Vec<Rational>> = gv.iter().map(|a| b.iter().map(|i| spec.basis[*a][*i].clone()).collect()).collect();
            for j in &nil {
                let mut unit = vec![Rational::zero(); g.dim()];
                unit[*j] = rat(1);
                let img = g.algebra.bracket_vec(&g.e, &unit);
                cols.push(b.iter().map(|i| img[*i].clone()).collect());
            }
            if cols.len() != b.len() {
                return Err(Error::InvalidGauge(format!("degree {}: V ⊕ [e, 𝔫] does not match 𝔟", -k)));
            }
            let inverse = if b.is_empty() {
                Matrix::zeros(0, 0)
            } else {
                Matrix::from_columns(b.len(), &cols)
                    .inverse()
                    .ok_or_else(|| Error::InvalidGauge(format!("degree {}: V is not complementary to [e, 𝔫]", -k)))?
            };
            splitters.insert(-k, DegreeSplitter { borel: b, gauge: gv, nil, inverse });
        }
        Ok(GaugeFrame { realization, name: spec.name, borel, nilpotent, v_basis: spec.basis, v_degrees, splitters })
    }

    /// Number of gauge-invariant components `ℓ`.
    pub fn components(&self) -> usize {
        self.v_basis.len()
    }

    /// `m'_α = -deg v_α`.
    pub fn gauge_exponents(&self) -> Vec<i64> {
        self.v_degrees.iter().map(|d| -d).collect()
    }

    /// `Σ_α c_α v_α` at `λ^0`.
    pub fn v_element(&self, coeffs: &[DiffPoly]) -> LoopElement {
        let mut x = LoopElement::zero();
        for (c, v) in coeffs.iter().zip(&self.v_basis) {
            for (i, vi) in v.iter().enumerate() {
                if !vi.is_zero() {
                    x.add_term(0, i, &c.scale(vi));
                }
            }
        }
        x
    }

    /// The Lax operator on the gauge slice: `q = Σ_α u_α v_α`.
    pub fn canonical_lax(&self) -> LaxOperator {
        let coeffs: Vec<DiffPoly> = (1..=self.components() as u32).map(|a| jet(a, 0)).collect();
        LaxOperator::new(self.realization.clone(), self.v_element(&coeffs), self.components()).unwrap()
    }

    /// Solves `X = Q + [e, S]` on degree `-k` with `Q ∈ V`, `S ∈ 𝔫^{-k-1}`.
    pub(crate) fn split_degree(&self, x: &LoopElement, k: i64) -> Result<(LoopElement, LoopElement)> {
        let sp = &self.splitters[&-k];
        let v: Vec<DiffPoly> = sp.borel.iter().map(|i| x.get(0, *i)).collect();
        let c = sp.inverse.mul_poly_vec(&v);
        let ng = sp.gauge.len();
        let mut q = LoopElement::zero();
        for (pos, a) in sp.gauge.iter().enumerate() {
            q = q.add(&LoopElement::from_constants(0, &self.v_basis[*a]).mul_poly(&c[pos]));
        }
        let mut s = LoopElement::zero();
        for (pos, j) in sp.nil.iter().enumerate() {
            s.add_term(0, *j, &c[ng + pos]);
        }
        Ok((q, s))
    }

    /// Coordinates `c_α` of an element of `V`; errors if it leaves `V`.
    pub fn v_coordinates(&self, x: &LoopElement) -> Result<Vec<DiffPoly>> {
        let g = &self.realization;
        let mut coords = vec![DiffPoly::zero(); self.components()];
        let mut rest = x.clone();
        for (deg, sp) in &self.splitters {
            let part = g.slice(&rest.lambda_part(0), *deg);
            if part.is_zero() {
                continue;
            }
            let (q, s) = self.split_degree(&part, -deg)?;
            if !s.is_zero() {
                return Err(Error::NotInSubspace("V".into()));
            }
            let v: Vec<DiffPoly> = sp.borel.iter().map(|i| part.get(0, *i)).collect();
            let c = sp.inverse.mul_poly_vec(&v);
            for (pos, a) in sp.gauge.iter().enumerate() {
                coords[*a] = c[pos].clone();
            }
            rest = rest.sub(&q);
        }
        if !rest.is_zero() {
            return Err(Error::NotInSubspace("V".into()));
        }
        Ok(coords)
    }

    /// Differential homomorphism `ρ` restricting generic `q` to the slice.
    pub fn slice_map(&self) -> DiffHom {
        let images = self
            .borel
            .iter()
            .map(|i| {
                let terms: Vec<(Rational, DiffPoly)> = self
                    .v_basis
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| !v[*i].is_zero())
                    .map(|(a, v)| (v[*i].clone(), jet(a as u32 + 1, 0)))
                    .collect();
                DiffPoly::linear_combination(terms.iter().map(|(c, p)| (c, p)))
            })
            .collect();
        DiffHom::new(images)
    }
}

/// `e^{ad S}(∂ + Λ + q) = ∂ + Λ + Q`, returning `Q`.
pub fn gauge_transform(lax: &LaxOperator, s: &LoopElement) -> Result<LaxOperator> {
    let g = &lax.realization;
    for ((k, i), _) in s.terms() {
        if *k != 0 || g.residues[*i] != 0 || g.rho[*i] >= 0 {
            return Err(Error::NotInSubspace("𝔫: gauge parameter".into()));
        }
    }
    let first = g.bracket(s, &lax.potential()).sub(&s.total_derivative());
    let mut term = first.clone();
    let mut total = lax.q.add(&first);
    let mut n = 1i64;
    while !term.is_zero() {
        n += 1;
        term = g.bracket(s, &term).scale(&Rational::new(1.into(), n.into()));
        total = total.add(&term);
    }
    LaxOperator::new(g.clone(), total, lax.components.max(max_alpha(s)))
}

fn max_alpha(x: &LoopElement) -> usize {
    x.terms().map(|(_, p)| crate::diffalg::max_component(p) as usize).max().unwrap_or(0)
}

/// Canonical form `e^{ad S_can} L = ∂ + Λ + Q_can` with `Q_can ∈ V`.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub s: LoopElement,
    pub q_can: LoopElement,
    /// `u_α` as differential polynomials in the coefficients of `L`.
    pub coordinates: Vec<DiffPoly>,
}

pub fn canonical_form(frame: &GaugeFrame, lax: &LaxOperator) -> Result<CanonicalForm> {
    let g = &lax.realization;
    let mut s = LoopElement::zero();
    let kmax = -frame.splitters.keys().min().copied().unwrap_or(0);
    for k in 0..=kmax {
        let current = gauge_transform(lax, &s)?;
        let x = g.slice(&current.q, -k);
        let (_, sk) = frame.split_degree(&x, k)?;
        s = s.add(&sk);
    }
    let q_can = gauge_transform(lax, &s)?.q;
    let coordinates = frame.v_coordinates(&q_can)?;
    Ok(CanonicalForm { s, q_can, coordinates })
}

/// Gauge action on generic `q`: `q_i ↦ Q_i(q, S)` with `S = Σ s_j n_j` generic.
///
/// The `S` coefficients use components `dim 𝔟 + 1 ..`.
#[derive(Clone, Debug)]
pub struct GaugeAction {
    pub images: Vec<DiffPoly>,
    hom: DiffHom,
}

impl GaugeAction {
    pub fn new(frame: &GaugeFrame) -> Result<Self> {
        let g = &frame.realization;
        let lax = LaxOperator::generic(g.clone());
        let nb = frame.borel.len() as u32;
        let mut s = LoopElement::zero();
        for (pos, j) in frame.nilpotent.iter().enumerate() {
            s.add_term(0, *j, &jet(nb + pos as u32 + 1, 0));
        }
        let q = gauge_transform(&lax, &s)?.q;
        let images: Vec<DiffPoly> = frame.borel.iter().map(|i| q.get(0, *i)).collect();
        Ok(GaugeAction { hom: DiffHom::new(images.clone()), images })
    }

    /// `f(w)` for `w` a differential polynomial in the generic `q`.
    pub fn apply(&mut self, w: &DiffPoly) -> DiffPoly {
        self.hom.apply(w)
    }

    /// `f(w) - w`.
    pub fn residual(&mut self, w: &DiffPoly) -> DiffPoly {
        &self.apply(w) - w
    }
}

/// Rewrites a gauge invariant `w(q)` in the coordinates `u`.
///
/// The candidate is the restriction of `w` to the slice; it is accepted only if
/// substituting `u_α = u_α(q)` recovers `w`.
pub struct InvariantRewriter {
    slice: DiffHom,
    back: DiffHom,
}

impl InvariantRewriter {
    pub fn new(frame: &GaugeFrame, cf: &CanonicalForm) -> Self {
        InvariantRewriter { slice: frame.slice_map(), back: DiffHom::new(cf.coordinates.clone()) }
    }

    pub fn rewrite(&mut self, w: &DiffPoly) -> Result<DiffPoly> {
        let candidate = self.slice.apply(w);
        let back = self.back.apply(&candidate);
        if &back != w {
            return Err(Error::NotGaugeInvariant(format!("{} terms differ after back-substitution", (&back - w).num_terms())));
        }
        Ok(candidate)
    }

    pub fn restrict(&mut self, w: &DiffPoly) -> DiffPoly {
        self.slice.apply(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kacmoody::build_algebra;
    use crate::poly::rat;

    fn frame(name: &str, gauge: &str) -> GaugeFrame {
        GaugeFrame::new(Arc::new(build_algebra(name, 0).unwrap()), gauge).unwrap()
    }

    #[test]
    fn sl2_canonical_coordinate() {
        // q = a·H + b·E21, S = a·E21: u = b + a² - a_x in the f-gauge.
        let fr = frame("A1^(1)", "lowest");
        let lax = LaxOperator::generic(fr.realization.clone());
        let cf = canonical_form(&fr, &lax).unwrap();
        let a = jet(1, 0);
        let b = jet(2, 0);
        let expected = &(&b + &a.pow(2)) - &jet(1, 1);
        assert_eq!(cf.coordinates, vec![expected]);
    }

    #[test]
    fn coordinates_are_gauge_invariant() {
        for (name, gauge) in [("A1^(1)", "lowest"), ("A2^(1)", "lowest"), ("A2^(1)", "e21"), ("A2^(2)", "lowest")] {
            let fr = frame(name, gauge);
            let lax = LaxOperator::generic(fr.realization.clone());
            let cf = canonical_form(&fr, &lax).unwrap();
            let mut act = GaugeAction::new(&fr).unwrap();
            for u in &cf.coordinates {
                assert!(act.residual(u).is_zero(), "{} {}", name, gauge);
            }
            let mut rw = InvariantRewriter::new(&fr, &cf);
            for (a, u) in cf.coordinates.iter().enumerate() {
                assert_eq!(rw.rewrite(u).unwrap(), jet(a as u32 + 1, 0));
            }
        }
    }

    #[test]
    fn slice_is_already_canonical() {
        let fr = frame("A2^(1)", "lowest");
        let lax = fr.canonical_lax();
        let cf = canonical_form(&fr, &lax).unwrap();
        assert!(cf.s.is_zero());
        assert_eq!(cf.coordinates, vec![jet(1, 0), jet(2, 0)]);
    }

    #[test]
    fn non_invariant_is_rejected() {
        let fr = frame("A1^(1)", "lowest");
        let lax = LaxOperator::generic(fr.realization.clone());
        let cf = canonical_form(&fr, &lax).unwrap();
        let mut rw = InvariantRewriter::new(&fr, &cf);
        assert!(matches!(rw.rewrite(&jet(1, 0)), Err(Error::NotGaugeInvariant(_))));
    }

    #[test]
    fn gauge_parameter_must_be_nilpotent() {
        let fr = frame("A1^(1)", "lowest");
        let lax = LaxOperator::generic(fr.realization.clone());
        let h = fr.realization.algebra.index_of("H").unwrap();
        let s = LoopElement::term(0, h, DiffPoly::constant(rat(1)));
        assert!(gauge_transform(&lax, &s).is_err());
    }
}
