//! Affine Kac–Moody algebras in the loop realization attached to a vertex of
//! the Dynkin diagram.
//!
//! A type is described by a matrix basis of 𝔤 together with per-vertex data
//! (residues of the twist, ρ^∨, the Jacobson–Morozov triple, Chevalley
//! generators and DS gauges). Structure constants and the invariant form are
//! derived from the matrices and validated when the realization is built.
//!
//! Elements of the loop algebra are finite sums `Σ p_{k,i} x_i λ^k` with
//! differential-polynomial coefficients. `x_i λ^k` has principal degree
//! `ρ_i + s·k` with `s = r·h/N`, and is admissible iff `k ≡ τ_i (mod N)`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::Deserialize;

use crate::diffalg::{total_derivative, DiffPoly};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::{parse_rational, rat, Rational};

const TYPE_FILES: &[&str] = &[
    include_str!("../data/a1_1.toml"),
    include_str!("../data/a2_1.toml"),
    include_str!("../data/a2_2.toml"),
];

#[derive(Deserialize)]
struct TypeFile {
    name: String,
    aliases: Vec<String>,
    twist_order: i64,
    rank: usize,
    coxeter_number: i64,
    dual_coxeter_number: i64,
    exponents: Vec<i64>,
    kac_labels: Vec<i64>,
    dual_kac_labels: Vec<i64>,
    matrix_size: usize,
    form_scale: String,
    #[serde(default)]
    equivalent_vertices: Vec<usize>,
    basis: Vec<BasisFile>,
    vertex: Vec<VertexFile>,
}

#[derive(Deserialize)]
struct BasisFile {
    name: String,
    entries: Vec<(usize, usize, String)>,
}

type Coords = BTreeMap<String, String>;

#[derive(Deserialize)]
struct VertexFile {
    index: usize,
    #[serde(default)]
    twist_residues: BTreeMap<String, i64>,
    rho: Coords,
    e: Coords,
    f: Coords,
    cyclic: Coords,
    chevalley: Vec<ChevalleyFile>,
    gauge: Vec<GaugeFile>,
}

#[derive(Deserialize)]
struct ChevalleyFile {
    index: usize,
    e: Coords,
    e_power: i64,
    f: Coords,
    f_power: i64,
}

#[derive(Deserialize)]
struct GaugeFile {
    name: String,
    basis: Vec<Coords>,
}

/// Names of the shipped affine types.
pub fn supported_types() -> Vec<String> {
    TYPE_FILES.iter().map(|s| parse_type_file(s).unwrap().name).collect()
}

fn parse_type_file(src: &str) -> Result<TypeFile> {
    toml::from_str(src).map_err(|e| Error::Parse(e.to_string()))
}

fn find_type(name: &str) -> Result<TypeFile> {
    let key = name.trim().to_ascii_lowercase();
    for src in TYPE_FILES {
        let t = parse_type_file(src)?;
        if t.name.to_ascii_lowercase() == key || t.aliases.iter().any(|a| a.to_ascii_lowercase() == key) {
            return Ok(t);
        }
    }
    Err(Error::UnknownType(name.to_string()))
}

/// Numerical invariants of an affine type.
#[derive(Clone, Debug, PartialEq)]
pub struct KmType {
    pub name: String,
    pub twist_order: i64,
    pub rank: usize,
    pub coxeter_number: i64,
    pub dual_coxeter_number: i64,
    /// Exponents `m_1 ≤ … ≤ m_n` of 𝔤̃, in `[1, r·h - 1]`.
    pub exponents: Vec<i64>,
    pub kac_labels: Vec<i64>,
    pub dual_kac_labels: Vec<i64>,
}

impl KmType {
    /// Number of Dynkin vertices minus one.
    pub fn affine_rank(&self) -> usize {
        self.kac_labels.len() - 1
    }

    pub fn rh(&self) -> i64 {
        self.twist_order * self.coxeter_number
    }
}

/// Finite-dimensional simple Lie algebra given by a basis of matrices.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    pub names: Vec<String>,
    pub matrix_size: usize,
    matrices: Vec<Vec<Rational>>,
    /// `[x_i, x_j] = Σ_l c_{ij}^l x_l`, stored sparsely.
    structure: Vec<Vec<Vec<(usize, Rational)>>>,
    /// Gram matrix of the invariant form.
    pub form: Matrix,
}

impl LieAlgebra {
    fn from_matrices(names: Vec<String>, n: usize, matrices: Vec<Vec<Rational>>, scale: &Rational) -> Result<Self> {
        let d = matrices.len();
        let b = Matrix::from_columns(n * n, &matrices);
        if b.rank() != d {
            return Err(Error::Validation("basis matrices are linearly dependent".into()));
        }
        let matmul = |a: &[Rational], c: &[Rational]| -> Vec<Rational> {
            let mut out = vec![Rational::zero(); n * n];
            for i in 0..n {
                for k in 0..n {
                    if a[i * n + k].is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        if !c[k * n + j].is_zero() {
                            out[i * n + j] += &a[i * n + k] * &c[k * n + j];
                        }
                    }
                }
            }
            out
        };
        let mut structure = vec![vec![Vec::new(); d]; d];
        let mut form = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let ab = matmul(&matrices[i], &matrices[j]);
                let ba = matmul(&matrices[j], &matrices[i]);
                let comm: Vec<Rational> = ab.iter().zip(&ba).map(|(x, y)| x - y).collect();
                let c = b
                    .solve(&comm)
                    .ok_or_else(|| Error::Validation(format!("[{}, {}] leaves the span of the basis", names[i], names[j])))?;
                structure[i][j] = c.into_iter().enumerate().filter(|(_, x)| !x.is_zero()).collect();
                let tr: Rational = (0..n).map(|k| ab[k * n + k].clone()).fold(Rational::zero(), |s, x| s + x);
                form[(i, j)] = tr * scale;
            }
        }
        Ok(LieAlgebra { names, matrix_size: n, matrices, structure, form })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn structure_constants(&self, i: usize, j: usize) -> &[(usize, Rational)] {
        &self.structure[i][j]
    }

    pub fn matrix(&self, i: usize) -> &[Rational] {
        &self.matrices[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Bracket of constant coordinate vectors.
    pub fn bracket_vec(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim()];
        for (i, a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                for (l, c) in &self.structure[i][j] {
                    out[*l] += a * b * c;
                }
            }
        }
        out
    }

    pub fn form_vec(&self, x: &[Rational], y: &[Rational]) -> Rational {
        let mut s = Rational::zero();
        for (i, a) in x.iter().enumerate() {
            for (j, b) in y.iter().enumerate() {
                if !a.is_zero() && !b.is_zero() {
                    s += a * b * &self.form[(i, j)];
                }
            }
        }
        s
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        let unit = |i: usize| {
            let mut v = vec![Rational::zero(); d];
            v[i] = Rational::one();
            v
        };
        for i in 0..d {
            for j in 0..d {
                let a = self.bracket_vec(&unit(i), &unit(j));
                let b = self.bracket_vec(&unit(j), &unit(i));
                if a.iter().zip(&b).any(|(x, y)| x != &-y.clone()) {
                    return Err(Error::Validation("bracket is not antisymmetric".into()));
                }
                for k in 0..d {
                    let jk = self.bracket_vec(&unit(j), &unit(k));
                    let ki = self.bracket_vec(&unit(k), &unit(i));
                    let ij = self.bracket_vec(&unit(i), &unit(j));
                    let t1 = self.bracket_vec(&unit(i), &jk);
                    let t2 = self.bracket_vec(&unit(j), &ki);
                    let t3 = self.bracket_vec(&unit(k), &ij);
                    if (0..d).any(|l| !(&t1[l] + &t2[l] + &t3[l]).is_zero()) {
                        return Err(Error::Validation(format!(
                            "Jacobi identity fails on ({}, {}, {})",
                            self.names[i], self.names[j], self.names[k]
                        )));
                    }
                    let lhs = self.form_vec(&ij, &unit(k));
                    let rhs = self.form_vec(&unit(i), &jk);
                    if lhs != rhs {
                        return Err(Error::Validation("invariant form is not ad-invariant".into()));
                    }
                }
            }
        }
        if self.form.determinant().is_zero() {
            return Err(Error::Validation("invariant form is degenerate".into()));
        }
        Ok(())
    }
}

/// Loop-algebra element `Σ p_{k,i} x_i λ^k`, keyed by `(k, i)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LoopElement {
    terms: BTreeMap<(i64, usize), DiffPoly>,
}

impl LoopElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(k: i64, i: usize, p: DiffPoly) -> Self {
        let mut x = Self::zero();
        x.add_term(k, i, &p);
        x
    }

    /// Constant vector placed at `λ^k`.
    pub fn from_constants(k: i64, coords: &[Rational]) -> Self {
        let mut x = Self::zero();
        for (i, c) in coords.iter().enumerate() {
            x.add_term(k, i, &DiffPoly::constant(c.clone()));
        }
        x
    }

    /// Polynomial vector placed at `λ^k`.
    pub fn from_vector(k: i64, coords: &[DiffPoly]) -> Self {
        let mut x = Self::zero();
        for (i, c) in coords.iter().enumerate() {
            x.add_term(k, i, c);
        }
        x
    }

    pub fn add_term(&mut self, k: i64, i: usize, p: &DiffPoly) {
        if p.is_zero() {
            return;
        }
        let key = (k, i);
        let sum = match self.terms.get(&key) {
            Some(q) => q + p,
            None => p.clone(),
        };
        if sum.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, sum);
        }
    }

    pub fn get(&self, k: i64, i: usize) -> DiffPoly {
        self.terms.get(&(k, i)).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, usize), &DiffPoly)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut x = self.clone();
        for ((k, i), p) in &other.terms {
            x.add_term(*k, *i, p);
        }
        x
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        LoopElement { terms: self.terms.iter().map(|(k, p)| (*k, -p)).collect() }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        LoopElement { terms: self.terms.iter().map(|(k, p)| (*k, p.scale(c))).collect() }
    }

    pub fn mul_poly(&self, q: &DiffPoly) -> Self {
        let mut x = Self::zero();
        for ((k, i), p) in &self.terms {
            x.add_term(*k, *i, &p.mul_ref(q));
        }
        x
    }

    /// Multiplies by `λ^n`.
    pub fn shift(&self, n: i64) -> Self {
        LoopElement { terms: self.terms.iter().map(|((k, i), p)| ((k + n, *i), p.clone())).collect() }
    }

    pub fn map(&self, f: impl Fn(&DiffPoly) -> DiffPoly) -> Self {
        let mut x = Self::zero();
        for ((k, i), p) in &self.terms {
            x.add_term(*k, *i, &f(p));
        }
        x
    }

    pub fn total_derivative(&self) -> Self {
        self.map(total_derivative)
    }

    pub fn filter(&self, keep: impl Fn(i64, usize) -> bool) -> Self {
        LoopElement { terms: self.terms.iter().filter(|((k, i), _)| keep(*k, *i)).map(|(k, p)| (*k, p.clone())).collect() }
    }

    /// Component at `λ^k` as an element.
    pub fn lambda_part(&self, k: i64) -> Self {
        self.filter(|j, _| j == k)
    }

    /// Nonnegative λ-powers.
    pub fn plus(&self) -> Self {
        self.filter(|k, _| k >= 0)
    }

    /// Negative λ-powers.
    pub fn minus(&self) -> Self {
        self.filter(|k, _| k < 0)
    }

    /// Coordinates at `λ^k` as a vector of length `dim`.
    pub fn vector(&self, k: i64, dim: usize) -> Vec<DiffPoly> {
        (0..dim).map(|i| self.get(k, i)).collect()
    }

    pub fn lambda_powers(&self) -> Vec<i64> {
        let mut ks: Vec<i64> = self.terms.keys().map(|(k, _)| *k).collect();
        ks.dedup();
        ks
    }

    /// Constant coefficients, if every coefficient is constant.
    pub fn constants(&self) -> Option<BTreeMap<(i64, usize), Rational>> {
        self.terms.iter().map(|(k, p)| p.as_constant().map(|c| (*k, c))).collect()
    }

    pub fn sum(items: &[LoopElement]) -> Self {
        let mut acc: HashMap<(i64, usize), Vec<&DiffPoly>> = HashMap::new();
        for x in items {
            for (k, p) in &x.terms {
                acc.entry(*k).or_default().push(p);
            }
        }
        let mut out = Self::zero();
        for (k, ps) in acc {
            let s = DiffPoly::sum(ps);
            if !s.is_zero() {
                out.terms.insert(k, s);
            }
        }
        out
    }
}

/// Basis of a principal-degree slice, as `(λ-power, basis index)` pairs.
pub type SliceBasis = Vec<(i64, usize)>;

/// Solver for `X = h + [Λ, y]` on one degree class.
#[derive(Clone, Debug)]
struct Splitter {
    degree: i64,
    basis: SliceBasis,
    lower: SliceBasis,
    heisenberg: Vec<Vec<Rational>>,
    image_basis: Vec<Vec<Rational>>,
    inverse: Matrix,
}

/// Result of splitting a degree-`j` element along `ℋ^j ⊕ ad Λ(im^{j-1})`.
#[derive(Clone, Debug)]
pub struct HeisenbergSplit {
    pub h_part: LoopElement,
    pub im_part: LoopElement,
    /// `y ∈ im^{j-1}` with `im_part = [Λ, y]`.
    pub preimage: LoopElement,
}

#[derive(Clone, Debug)]
pub struct GaugeSpec {
    pub name: String,
    pub basis: Vec<Vec<Rational>>,
}

/// A validated loop realization `𝔤̃ = L(𝔤, σ_m)` at a chosen vertex.
#[derive(Clone, Debug)]
pub struct LoopRealization {
    pub kind: KmType,
    pub vertex: usize,
    /// Vertex whose data realizes the requested one.
    pub data_vertex: usize,
    pub algebra: LieAlgebra,
    /// Order `N = r·a_m` of the twist.
    pub twist: i64,
    pub residues: Vec<i64>,
    /// Eigenvalues of `ad ρ^∨` on the basis.
    pub rho: Vec<i64>,
    /// `s = r·h/N`: `λ` has principal degree `s`.
    pub spacing: i64,
    pub rho_vector: Vec<Rational>,
    pub e: Vec<Rational>,
    pub f: Vec<Rational>,
    pub cyclic: Vec<Rational>,
    pub lambda: LoopElement,
    /// Normalized `Λ_{m_a}`, `a = 1..n`.
    pub heisenberg: Vec<LoopElement>,
    pub chevalley: Vec<(LoopElement, LoopElement)>,
    pub cartan: Vec<Vec<i64>>,
    pub gauges: Vec<GaugeSpec>,
    /// Admissible λ-powers `[min, max]`.
    pub window: (i64, i64),
    splitters: Vec<Splitter>,
}

fn coords(names: &[String], c: &Coords) -> Result<Vec<Rational>> {
    let mut v = vec![Rational::zero(); names.len()];
    for (k, s) in c {
        let i = names
            .iter()
            .position(|n| n == k)
            .ok_or_else(|| Error::Parse(format!("unknown basis element {}", k)))?;
        v[i] = parse_rational(s).ok_or_else(|| Error::Parse(format!("bad rational {}", s)))?;
    }
    Ok(v)
}

/// Builds and validates the loop realization of `kind` at vertex `c_vertex`.
pub fn build_algebra(kind: &str, vertex: usize) -> Result<LoopRealization> {
    let t = find_type(kind)?;
    let data_vertex = if t.vertex.iter().any(|v| v.index == vertex) {
        vertex
    } else if t.equivalent_vertices.contains(&vertex) {
        0
    } else {
        return Err(Error::UnsupportedVertex { kind: t.name.clone(), vertex });
    };
    if vertex >= t.kac_labels.len() {
        return Err(Error::UnsupportedVertex { kind: t.name.clone(), vertex });
    }
    let vf = t.vertex.iter().find(|v| v.index == data_vertex).unwrap();
    let n = t.matrix_size;
    let names: Vec<String> = t.basis.iter().map(|b| b.name.clone()).collect();
    let mut mats = Vec::new();
    for b in &t.basis {
        let mut m = vec![Rational::zero(); n * n];
        for (r, c, s) in &b.entries {
            if *r == 0 || *c == 0 || *r > n || *c > n {
                return Err(Error::Parse(format!("entry out of range in {}", b.name)));
            }
            m[(r - 1) * n + (c - 1)] = parse_rational(s).ok_or_else(|| Error::Parse(format!("bad rational {}", s)))?;
        }
        mats.push(m);
    }
    let scale = parse_rational(&t.form_scale).ok_or_else(|| Error::Parse("bad form scale".into()))?;
    let algebra = LieAlgebra::from_matrices(names.clone(), n, mats, &scale)?;
    algebra.validate()?;

    let kindinfo = KmType {
        name: t.name.clone(),
        twist_order: t.twist_order,
        rank: t.rank,
        coxeter_number: t.coxeter_number,
        dual_coxeter_number: t.dual_coxeter_number,
        exponents: t.exponents.clone(),
        kac_labels: t.kac_labels.clone(),
        dual_kac_labels: t.dual_kac_labels.clone(),
    };
    let twist = t.twist_order * t.kac_labels[data_vertex];
    let rh = kindinfo.rh();
    if rh % twist != 0 {
        return Err(Error::Validation(format!("r·h = {} is not divisible by N = {}", rh, twist)));
    }
    let spacing = rh / twist;

    let d = algebra.dim();
    let mut residues = vec![0i64; d];
    for (k, r) in &vf.twist_residues {
        let i = algebra.index_of(k).ok_or_else(|| Error::Parse(format!("unknown basis element {}", k)))?;
        residues[i] = r.rem_euclid(twist);
    }
    let rho_vector = coords(&names, &vf.rho)?;
    let e = coords(&names, &vf.e)?;
    let f = coords(&names, &vf.f)?;
    let cyclic = coords(&names, &vf.cyclic)?;

    let mut rho = vec![0i64; d];
    for i in 0..d {
        let mut unit = vec![Rational::zero(); d];
        unit[i] = Rational::one();
        let img = algebra.bracket_vec(&rho_vector, &unit);
        let ev = img[i].clone();
        if img.iter().enumerate().any(|(j, x)| j != i && !x.is_zero()) || !ev.is_integer() {
            return Err(Error::Validation(format!("basis element {} is not an integral ρ-eigenvector", names[i])));
        }
        rho[i] = ev.to_integer().try_into().map_err(|_| Error::Validation("ρ eigenvalue overflow".into()))?;
    }

    let mut lambda = LoopElement::from_constants(0, &e);
    lambda = lambda.add(&LoopElement::from_constants(1, &cyclic));

    let mut chevalley = Vec::new();
    let mut ch_sorted: Vec<&ChevalleyFile> = vf.chevalley.iter().collect();
    ch_sorted.sort_by_key(|c| c.index);
    for c in ch_sorted {
        chevalley.push((
            LoopElement::from_constants(c.e_power, &coords(&names, &c.e)?),
            LoopElement::from_constants(c.f_power, &coords(&names, &c.f)?),
        ));
    }
    let gauges = vf
        .gauge
        .iter()
        .map(|g| Ok(GaugeSpec { name: g.name.clone(), basis: g.basis.iter().map(|b| coords(&names, b)).collect::<Result<_>>()? }))
        .collect::<Result<Vec<_>>>()?;

    let mut real = LoopRealization {
        kind: kindinfo,
        vertex,
        data_vertex,
        algebra,
        twist,
        residues,
        rho,
        spacing,
        rho_vector,
        e,
        f,
        cyclic,
        lambda,
        heisenberg: Vec::new(),
        chevalley,
        cartan: Vec::new(),
        gauges,
        window: (-64, 64),
        splitters: Vec::new(),
    };
    real.validate_grading()?;
    real.cartan = real.validate_chevalley()?;
    real.heisenberg = real.build_heisenberg()?;
    real.splitters = (0..rh).map(|j| real.build_splitter(j)).collect::<Result<_>>()?;
    Ok(real)
}

impl LoopRealization {
    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn rh(&self) -> i64 {
        self.kind.rh()
    }

    /// Exponents `m_1..m_n` of 𝔤̃.
    pub fn exponents(&self) -> &[i64] {
        &self.kind.exponents
    }

    pub fn with_window(mut self, window: (i64, i64)) -> Self {
        self.window = window;
        self
    }

    pub fn principal_degree(&self, k: i64, i: usize) -> i64 {
        self.rho[i] + self.spacing * k
    }

    pub fn admissible(&self, k: i64, i: usize) -> bool {
        (k - self.residues[i]).rem_euclid(self.twist) == 0
    }

    /// Basis of the principal-degree-`d` slice.
    pub fn slice_basis(&self, d: i64) -> SliceBasis {
        let mut out = Vec::new();
        for i in 0..self.dim() {
            let t = d - self.rho[i];
            if t.rem_euclid(self.spacing) == 0 {
                let k = t / self.spacing;
                if self.admissible(k, i) {
                    out.push((k, i));
                }
            }
        }
        out.sort();
        out
    }

    /// Lowest and highest ρ-eigenvalues.
    pub fn rho_range(&self) -> (i64, i64) {
        (*self.rho.iter().min().unwrap(), *self.rho.iter().max().unwrap())
    }

    /// Part of `x` of principal degree `d`.
    pub fn slice(&self, x: &LoopElement, d: i64) -> LoopElement {
        x.filter(|k, i| self.principal_degree(k, i) == d)
    }

    pub fn degree_filter(&self, x: &LoopElement, keep: impl Fn(i64) -> bool) -> LoopElement {
        x.filter(|k, i| keep(self.principal_degree(k, i)))
    }

    /// Splits by principal degree.
    pub fn by_degree(&self, x: &LoopElement) -> BTreeMap<i64, LoopElement> {
        let mut out: BTreeMap<i64, LoopElement> = BTreeMap::new();
        for ((k, i), p) in x.terms() {
            out.entry(self.principal_degree(*k, *i)).or_default().add_term(*k, *i, p);
        }
        out
    }

    /// Verifies every term respects the twist.
    pub fn check_twist(&self, x: &LoopElement) -> Result<()> {
        for ((k, i), _) in x.terms() {
            if !self.admissible(*k, *i) {
                return Err(Error::Grading(format!(
                    "{}·λ^{} violates the twist (residue {} mod {})",
                    self.algebra.names[*i], k, self.residues[*i], self.twist
                )));
            }
        }
        Ok(())
    }

    pub fn check_window(&self, x: &LoopElement) -> Result<()> {
        for ((k, i), _) in x.terms() {
            if *k < self.window.0 || *k > self.window.1 {
                return Err(Error::WindowExhausted { degree: self.principal_degree(*k, *i) });
            }
        }
        Ok(())
    }

    /// Loop-algebra bracket with polynomial coefficients.
    pub fn bracket(&self, x: &LoopElement, y: &LoopElement) -> LoopElement {
        let mut acc: HashMap<(i64, usize), Vec<(Rational, usize)>> = HashMap::new();
        let mut prods: Vec<DiffPoly> = Vec::new();
        for ((k1, i), p) in x.terms() {
            for ((k2, j), q) in y.terms() {
                let sc = self.algebra.structure_constants(*i, *j);
                if sc.is_empty() {
                    continue;
                }
                let idx = prods.len();
                prods.push(p.mul_ref(q));
                for (l, c) in sc {
                    acc.entry((k1 + k2, *l)).or_default().push((c.clone(), idx));
                }
            }
        }
        let mut out = LoopElement::zero();
        for (key, items) in acc {
            let s = DiffPoly::linear_combination(items.iter().map(|(c, idx)| (c, &prods[*idx])));
            if !s.is_zero() {
                out.terms.insert(key, s);
            }
        }
        out
    }

    /// Invariant pairing `(x|y)` as a Laurent polynomial in λ.
    pub fn bilinear(&self, x: &LoopElement, y: &LoopElement) -> BTreeMap<i64, DiffPoly> {
        self.bilinear_from(x, y, i64::MIN)
    }

    /// Coefficients of `(x|y)` at powers `λ^k` with `k ≥ min_power`.
    pub fn bilinear_from(&self, x: &LoopElement, y: &LoopElement, min_power: i64) -> BTreeMap<i64, DiffPoly> {
        let mut acc: BTreeMap<i64, Vec<(Rational, DiffPoly)>> = BTreeMap::new();
        for ((k1, i), p) in x.terms() {
            for ((k2, j), q) in y.terms() {
                if k1 + k2 < min_power {
                    continue;
                }
                let g = &self.algebra.form[(*i, *j)];
                if g.is_zero() {
                    continue;
                }
                acc.entry(k1 + k2).or_default().push((g.clone(), p.mul_ref(q)));
            }
        }
        acc.into_iter()
            .map(|(k, items)| (k, DiffPoly::linear_combination(items.iter().map(|(c, p)| (c, p)))))
            .filter(|(_, p)| !p.is_zero())
            .collect()
    }

    /// Keeps powers `λ^k` with `k < 0` and `k ≡ -1 (mod N)`.
    pub fn pi_lambda(&self, series: &BTreeMap<i64, DiffPoly>) -> BTreeMap<i64, DiffPoly> {
        series
            .iter()
            .filter(|(k, _)| **k < 0 && (**k + 1).rem_euclid(self.twist) == 0)
            .map(|(k, p)| (*k, p.clone()))
            .collect()
    }

    fn ad_lambda_matrix(&self, from: &SliceBasis, to: &SliceBasis) -> Matrix {
        let mut m = Matrix::zeros(to.len(), from.len());
        for (c, (k, i)) in from.iter().enumerate() {
            let img = self.bracket(&self.lambda, &LoopElement::term(*k, *i, DiffPoly::one()));
            for ((k2, j), p) in img.terms() {
                let r = to.iter().position(|b| b == &(*k2, *j)).expect("ad Λ raises principal degree by one");
                m[(r, c)] = p.as_constant().unwrap();
            }
        }
        m
    }

    fn validate_grading(&self) -> Result<()> {
        let d = self.dim();
        let names = &self.algebra.names;
        for i in 0..d {
            for j in 0..d {
                for (l, _) in self.algebra.structure_constants(i, j) {
                    if (self.residues[i] + self.residues[j] - self.residues[*l]).rem_euclid(self.twist) != 0 {
                        return Err(Error::Validation(format!(
                            "twist residues incompatible with [{}, {}]",
                            names[i], names[j]
                        )));
                    }
                }
                if !self.algebra.form[(i, j)].is_zero() {
                    if (self.residues[i] + self.residues[j]).rem_euclid(self.twist) != 0 {
                        return Err(Error::Validation("twist does not preserve the invariant form".into()));
                    }
                    if self.rho[i] + self.rho[j] != 0 {
                        return Err(Error::Validation("ρ-grading does not pair opposite degrees".into()));
                    }
                }
            }
        }
        let in_zero = |v: &[Rational]| v.iter().enumerate().all(|(i, x)| x.is_zero() || self.residues[i] == 0);
        let of_degree = |v: &[Rational], deg: i64| v.iter().enumerate().all(|(i, x)| x.is_zero() || self.rho[i] == deg);
        if !in_zero(&self.e) || !in_zero(&self.f) || !in_zero(&self.rho_vector) {
            return Err(Error::Validation("Jacobson–Morozov triple is not in the fixed subalgebra".into()));
        }
        if !of_degree(&self.e, 1) || !of_degree(&self.f, -1) || !of_degree(&self.rho_vector, 0) {
            return Err(Error::Validation("Jacobson–Morozov triple has wrong ρ-degrees".into()));
        }
        if self.algebra.bracket_vec(&self.e, &self.f) != self.rho_vector {
            return Err(Error::Validation("[e, f] ≠ ρ^∨".into()));
        }
        let neg_f: Vec<Rational> = self.f.iter().map(|x| -x.clone()).collect();
        if self.algebra.bracket_vec(&self.rho_vector, &self.f) != neg_f || self.algebra.bracket_vec(&self.rho_vector, &self.e) != self.e {
            return Err(Error::Validation("ρ^∨ does not grade e, f".into()));
        }
        for (i, x) in self.cyclic.iter().enumerate() {
            if !x.is_zero() && (!self.admissible(1, i) || self.principal_degree(1, i) != 1) {
                return Err(Error::Validation("cyclic element is not of principal degree 1".into()));
            }
        }
        self.check_twist(&self.lambda)
    }

    fn validate_chevalley(&self) -> Result<Vec<Vec<i64>>> {
        let nodes = self.kind.kac_labels.len();
        if self.chevalley.len() != nodes {
            return Err(Error::Validation(format!("expected {} Chevalley pairs, found {}", nodes, self.chevalley.len())));
        }
        let constant_deg = |x: &LoopElement| -> Option<i64> {
            let ds: Vec<i64> = x.terms().map(|((k, i), _)| self.principal_degree(*k, *i)).collect();
            if ds.is_empty() || ds.iter().any(|d| *d != ds[0]) {
                None
            } else {
                Some(ds[0])
            }
        };
        let mut hs = Vec::new();
        for (idx, (e, f)) in self.chevalley.iter().enumerate() {
            self.check_twist(e)?;
            self.check_twist(f)?;
            if constant_deg(e) != Some(1) || constant_deg(f) != Some(-1) {
                return Err(Error::Validation(format!("Chevalley pair {} does not have principal degrees ±1", idx)));
            }
            hs.push(self.bracket(e, f));
        }
        let mut cartan = vec![vec![0i64; nodes]; nodes];
        for i in 0..nodes {
            for j in 0..nodes {
                let ef = self.bracket(&self.chevalley[i].0, &self.chevalley[j].1);
                if i != j && !ef.is_zero() {
                    return Err(Error::Validation(format!("[e_{}, f_{}] ≠ 0", i, j)));
                }
                let he = self.bracket(&hs[i], &self.chevalley[j].0);
                let ej = &self.chevalley[j].0;
                let ((k0, i0), p0) = ej.terms().next().unwrap();
                let ratio = he.get(*k0, *i0).as_constant().unwrap() / p0.as_constant().unwrap();
                if he != ej.scale(&ratio) || !ratio.is_integer() {
                    return Err(Error::Validation(format!("h_{} does not act diagonally on e_{}", i, j)));
                }
                cartan[i][j] = ratio.to_integer().try_into().unwrap();
            }
        }
        for i in 0..nodes {
            if cartan[i][i] != 2 {
                return Err(Error::Validation("Cartan matrix diagonal is not 2".into()));
            }
            let s: i64 = (0..nodes).map(|j| cartan[i][j] * self.kind.kac_labels[j]).sum();
            if s != 0 {
                return Err(Error::Validation("Kac labels are not a null vector of the Cartan matrix".into()));
            }
            let s: i64 = (0..nodes).map(|j| self.kind.dual_kac_labels[j] * cartan[j][i]).sum();
            if s != 0 {
                return Err(Error::Validation("dual Kac labels are not a left null vector".into()));
            }
        }
        let mut central = LoopElement::zero();
        for (i, h) in hs.iter().enumerate() {
            central = central.add(&h.scale(&rat(self.kind.dual_kac_labels[i])));
        }
        if !central.is_zero() {
            return Err(Error::Validation("canonical central element does not vanish".into()));
        }
        let sum_e = LoopElement::sum(&self.chevalley.iter().map(|(e, _)| e.clone()).collect::<Vec<_>>());
        if sum_e != self.lambda {
            return Err(Error::Validation("Λ is not the sum of the Chevalley e_i".into()));
        }
        if self.kind.kac_labels.iter().sum::<i64>() != self.kind.coxeter_number
            || self.kind.dual_kac_labels.iter().sum::<i64>() != self.kind.dual_coxeter_number
        {
            return Err(Error::Validation("Coxeter numbers disagree with the labels".into()));
        }
        Ok(cartan)
    }

    fn build_heisenberg(&self) -> Result<Vec<LoopElement>> {
        let rh = self.rh();
        let mut kernels: BTreeMap<i64, Vec<Vec<Rational>>> = BTreeMap::new();
        for j in 1..=rh {
            let b = self.slice_basis(j);
            let to = self.slice_basis(j + 1);
            let ker = self.ad_lambda_matrix(&b, &to).kernel();
            let mult = self.kind.exponents.iter().filter(|m| **m == j).count();
            if ker.len() != mult {
                return Err(Error::Validation(format!(
                    "ker ad Λ in degree {} has dimension {}, exponent multiplicity is {}",
                    j,
                    ker.len(),
                    mult
                )));
            }
            if mult > 1 {
                return Err(Error::Validation(format!("repeated exponent {} is not supported", j)));
            }
            kernels.insert(j, ker);
        }
        let n = self.kind.exponents.len();
        for a in 0..n {
            if self.kind.exponents[a] + self.kind.exponents[n - 1 - a] != rh {
                return Err(Error::Validation("exponents are not symmetric".into()));
            }
        }
        let to_elem = |j: i64, v: &[Rational]| {
            let b = self.slice_basis(j);
            let mut x = LoopElement::zero();
            for (c, (k, i)) in v.iter().zip(b.iter()) {
                x.add_term(*k, *i, &DiffPoly::constant(c.clone()));
            }
            x
        };
        let target = rat(self.kind.coxeter_number);
        let mut out: Vec<Option<LoopElement>> = vec![None; n];
        for a in 0..n {
            let b = n - 1 - a;
            if out[a].is_some() {
                continue;
            }
            let ma = self.kind.exponents[a];
            let mb = self.kind.exponents[b];
            let xa = if a == 0 { self.lambda.clone() } else { to_elem(ma, &kernels[&ma][0]) };
            if a == 0 && ma != 1 {
                return Err(Error::Validation("smallest exponent must be 1".into()));
            }
            let xb = if a == b { xa.clone() } else { to_elem(mb, &kernels[&mb][0]) };
            let pairing = self.bilinear(&xa, &xb);
            if pairing.len() != 1 || !pairing.contains_key(&self.twist) {
                return Err(Error::Validation("Heisenberg pairing is not proportional to λ^N".into()));
            }
            let c = pairing[&self.twist].as_constant().unwrap();
            if a == b {
                if c != target {
                    return Err(Error::Validation("(Λ|Λ) is not hλ^N for a self-paired exponent".into()));
                }
                out[a] = Some(xa);
            } else {
                out[a] = Some(xa);
                out[b] = Some(xb.scale(&(&target / &c)));
            }
        }
        let hs: Vec<LoopElement> = out.into_iter().map(|x| x.unwrap()).collect();
        for x in &hs {
            for y in &hs {
                if !self.bracket(x, y).is_zero() {
                    return Err(Error::Validation("Heisenberg generators do not commute".into()));
                }
            }
        }
        Ok(hs)
    }

    fn build_splitter(&self, j: i64) -> Result<Splitter> {
        let basis = self.slice_basis(j);
        let lower = self.slice_basis(j - 1);
        let lower2 = self.slice_basis(j - 2);
        let a1 = self.ad_lambda_matrix(&lower, &basis);
        let a0 = self.ad_lambda_matrix(&lower2, &lower);
        let cols = a0.independent_columns();
        let image_basis: Vec<Vec<Rational>> = cols.iter().map(|c| a0.column(*c)).collect();
        let heisenberg: Vec<Vec<Rational>> = match self.heisenberg_at(j) {
            Some(h) => vec![basis.iter().map(|(k, i)| h.get(*k, *i).as_constant().unwrap()).collect()],
            None => Vec::new(),
        };
        let mut columns = heisenberg.clone();
        for y in &image_basis {
            columns.push(a1.mul_vec(y));
        }
        if columns.len() != basis.len() {
            return Err(Error::Validation(format!("slice {} does not split as ℋ ⊕ im ad Λ", j)));
        }
        let inverse = Matrix::from_columns(basis.len(), &columns)
            .inverse()
            .ok_or_else(|| Error::Validation(format!("slice {} does not split as ℋ ⊕ im ad Λ", j)))?;
        Ok(Splitter { degree: j, basis, lower, heisenberg, image_basis, inverse })
    }

    /// `Λ_{m_a} λ^{N(j-m_a)/rh}` if `j ∈ E`, else `None`.
    pub fn heisenberg_at(&self, j: i64) -> Option<LoopElement> {
        let rh = self.rh();
        let a = self.kind.exponents.iter().position(|m| (j - m).rem_euclid(rh) == 0)?;
        let t = (j - self.kind.exponents[a]).div_euclid(rh);
        Some(self.heisenberg[a].shift(t * self.twist))
    }

    /// Index `a` (0-based) with `m_a ≡ j (mod rh)`.
    pub fn exponent_index(&self, j: i64) -> Option<usize> {
        self.kind.exponents.iter().position(|m| (j - m).rem_euclid(self.rh()) == 0)
    }

    /// Splits a homogeneous degree-`j` element as `h + [Λ, y]`.
    pub fn heisenberg_split(&self, x: &LoopElement, j: i64) -> Result<HeisenbergSplit> {
        let rh = self.rh();
        let sp = &self.splitters[j.rem_euclid(rh) as usize];
        let t = (j - sp.degree) / rh;
        let shift = t * self.twist;
        for (k, _) in sp.basis.iter().chain(sp.lower.iter()) {
            if k + shift < self.window.0 || k + shift > self.window.1 {
                return Err(Error::WindowExhausted { degree: j });
            }
        }
        let mut v: Vec<DiffPoly> = Vec::with_capacity(sp.basis.len());
        for (k, i) in &sp.basis {
            v.push(x.get(k + shift, *i));
        }
        let found: usize = x.len();
        let covered = v.iter().filter(|p| !p.is_zero()).count();
        if found != covered {
            return Err(Error::Grading(format!("element is not homogeneous of principal degree {}", j)));
        }
        let c = sp.inverse.mul_poly_vec(&v);
        let nh = sp.heisenberg.len();
        let mut h_part = LoopElement::zero();
        for (h, coef) in sp.heisenberg.iter().zip(&c[..nh]) {
            for ((k, i), hc) in sp.basis.iter().zip(h) {
                h_part.add_term(k + shift, *i, &coef.scale(hc));
            }
        }
        let mut preimage = LoopElement::zero();
        for (y, coef) in sp.image_basis.iter().zip(&c[nh..]) {
            for ((k, i), yc) in sp.lower.iter().zip(y) {
                preimage.add_term(k + shift, *i, &coef.scale(yc));
            }
        }
        let im_part = x.sub(&h_part);
        Ok(HeisenbergSplit { h_part, im_part, preimage })
    }

    /// Constant element `x_i` in named form, for display.
    pub fn basis_name(&self, i: usize) -> &str {
        &self.algebra.names[i]
    }

    pub fn gauge(&self, name: &str) -> Result<&GaugeSpec> {
        self.gauges
            .iter()
            .find(|g| g.name == name)
            .ok_or_else(|| Error::InvalidGauge(format!("no gauge named {} for {}", name, self.kind.name)))
    }

    /// Indices of the basis of `𝔟 = 𝔞_{≤0}` in basis order.
    pub fn borel_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.residues[i] == 0 && self.rho[i] <= 0).collect()
    }

    /// Indices of the basis of `𝔫 = 𝔞_{<0}`.
    pub fn nilpotent_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.residues[i] == 0 && self.rho[i] < 0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ratio;

    fn c(x: &LoopElement) -> BTreeMap<(i64, usize), Rational> {
        x.constants().unwrap()
    }

    #[test]
    fn sl2_realization() {
        let g = build_algebra("A1^(1)", 0).unwrap();
        assert_eq!(g.twist, 1);
        assert_eq!(g.spacing, 2);
        assert_eq!(g.rho, vec![1, 0, -1]);
        assert_eq!(g.cartan, vec![vec![2, -2], vec![-2, 2]]);
        // (Λ|Λ) = 2λ
        let p = g.bilinear(&g.lambda, &g.lambda);
        assert_eq!(p.len(), 1);
        assert_eq!(p[&1], DiffPoly::int(2));
        assert_eq!(g.heisenberg[0], g.lambda);
    }

    #[test]
    fn sl3_heisenberg_normalization() {
        let g = build_algebra("A2^(1)", 0).unwrap();
        assert_eq!(g.spacing, 3);
        let p = g.bilinear(&g.heisenberg[0], &g.heisenberg[1]);
        assert_eq!(p[&1], DiffPoly::int(3));
        // Λ_2 is proportional to Λ² = E13 + λ(E21 + E32).
        let l2 = c(&g.heisenberg[1]);
        let e13 = g.algebra.index_of("E13").unwrap();
        let e21 = g.algebra.index_of("E21").unwrap();
        let e32 = g.algebra.index_of("E32").unwrap();
        assert_eq!(l2[&(0, e13)], l2[&(1, e21)]);
        assert_eq!(l2[&(0, e13)], l2[&(1, e32)]);
        assert_eq!(l2[&(0, e13)], rat(1));
    }

    #[test]
    fn twisted_a2_invariants() {
        let g = build_algebra("A2^(2)", 0).unwrap();
        assert_eq!(g.twist, 2);
        assert_eq!(g.spacing, 3);
        assert_eq!(g.cartan, vec![vec![2, -1], vec![-4, 2]]);
        let p = g.bilinear(&g.heisenberg[0], &g.heisenberg[1]);
        assert_eq!(p.len(), 1);
        assert_eq!(p[&2], DiffPoly::int(3));
        // Λ_5 = λΛ² has coefficients E13·λ and (E21+E32)·λ².
        let l5 = c(&g.heisenberg[1]);
        assert_eq!(l5.len(), 2);
        assert!(l5.contains_key(&(1, g.algebra.index_of("E13").unwrap())));
        assert!(l5.contains_key(&(2, g.algebra.index_of("Fp").unwrap())));
        assert_eq!(g.borel_indices().len(), 2);
    }

    #[test]
    fn unsupported_vertices() {
        assert!(matches!(build_algebra("A2^(2)", 1), Err(Error::UnsupportedVertex { .. })));
        assert!(matches!(build_algebra("B7^(1)", 0), Err(Error::UnknownType(_))));
        let g = build_algebra("A2^(1)", 2).unwrap();
        assert_eq!(g.vertex, 2);
        assert_eq!(g.data_vertex, 0);
    }

    #[test]
    fn split_recovers_element() {
        let g = build_algebra("A2^(1)", 0).unwrap();
        for j in -7..7 {
            let b = g.slice_basis(j);
            let mut x = LoopElement::zero();
            for (n, (k, i)) in b.iter().enumerate() {
                x.add_term(*k, *i, &DiffPoly::constant(ratio(n as i64 + 1, 3)));
            }
            let s = g.heisenberg_split(&x, j).unwrap();
            assert_eq!(s.h_part.add(&s.im_part), x);
            assert_eq!(g.bracket(&g.lambda, &s.preimage), s.im_part);
            assert!(g.bracket(&g.lambda, &s.h_part).is_zero());
        }
    }

    #[test]
    fn pi_lambda_keeps_negative_residue_classes() {
        let g = build_algebra("A2^(2)", 0).unwrap();
        let series: BTreeMap<i64, DiffPoly> = (-5..3).map(|k| (k, DiffPoly::int(k))).collect();
        let kept: Vec<i64> = g.pi_lambda(&series).keys().copied().collect();
        assert_eq!(kept, vec![-5, -3, -1]);
    }

    #[test]
    fn window_exhaustion_names_degree() {
        let g = build_algebra("A1^(1)", 0).unwrap().with_window((-1, 1));
        let err = g.heisenberg_split(&LoopElement::zero(), -9).unwrap_err();
        assert_eq!(err, Error::WindowExhausted { degree: -9 });
    }
}
