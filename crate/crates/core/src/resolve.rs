//! Linear projective resolutions of cell modules.
//!
//! Two constructions are provided: the inductive cone construction, which
//! resolves `M(λ)` from the resolution of `M(λ')` in the block
//! `(m-1, n-1)` pushed through `G^{t_i}` and the resolution of `M(λ'')`,
//! and an independent construction by iterated minimal projective covers.
//!
//! Conventions. A morphism `P(a) → P(b)` is right multiplication by an
//! element of `e_a K e_b`, so morphisms compose left to right. A
//! [`HomMatrix`] has one row per source summand and one column per target
//! summand. The differential `d_p` maps component `p` to component `p-1`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arcalg::{AlgebraElement, BasisVec, Block};
use crate::diagrams::{OrientedCircleDiagram, Weight};
use crate::exact::{Echelon, SparseMatrix, SparseVec};
use crate::repmod::kl_poly_recursive;
use crate::Rational;

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error("normalization failed: {0}")]
    Normalization(String),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// A-terms and B-terms of the `n = 2` resolutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermTag {
    A,
    B,
}

/// `P(weight)⟨shift⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Summand {
    pub weight: usize,
    pub shift: i64,
    pub tag: Option<TermTag>,
}

impl Summand {
    pub fn new(weight: usize, shift: i64) -> Self {
        Summand { weight, shift, tag: None }
    }
}

/// Matrix of algebra elements; entry `(r, t)` lies in `e_{src_r} K e_{tgt_t}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HomMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), AlgebraElement>,
}

impl HomMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        HomMatrix { rows, cols, entries: BTreeMap::new() }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Option<&AlgebraElement> {
        self.entries.get(&(r, c))
    }

    pub fn entry(&self, r: usize, c: usize) -> AlgebraElement {
        self.entries.get(&(r, c)).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, r: usize, c: usize, x: AlgebraElement) {
        assert!(r < self.rows && c < self.cols, "hom matrix index out of range");
        if x.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), x);
        }
    }

    pub fn add_to(&mut self, r: usize, c: usize, x: &AlgebraElement, k: &Rational) {
        let mut e = self.entry(r, c);
        e.add_scaled(x, k);
        self.set(r, c, e);
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &AlgebraElement)> {
        self.entries.iter().map(|(&(r, c), x)| (r, c, x))
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, &AlgebraElement)> {
        self.entries.range((r, 0)..(r + 1, 0)).map(|(&(_, c), x)| (c, x))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &HomMatrix, block: &Block) -> HomMatrix {
        assert_eq!(self.cols, other.rows, "hom matrix shapes");
        let mut out = HomMatrix::zeros(self.rows, other.cols);
        for (&(r, s), x) in &self.entries {
            for (t, y) in other.row_entries(s) {
                let p = block.multiply(x, y);
                out.add_to(r, t, &p, &Rational::one());
            }
        }
        out
    }

    pub fn scaled(&self, k: &Rational) -> HomMatrix {
        let mut out = HomMatrix::zeros(self.rows, self.cols);
        for (&(r, c), x) in &self.entries {
            out.set(r, c, x.scaled(k));
        }
        out
    }

    pub fn plus(&self, other: &HomMatrix) -> HomMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "hom matrix shapes");
        let mut out = self.clone();
        for (&(r, c), x) in &other.entries {
            out.add_to(r, c, x, &Rational::one());
        }
        out
    }
}

/// A bounded complex of graded projectives `C_0 ← C_1 ← …` resolving a cell
/// module, with `C_0 = P(λ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveComplex {
    pub m: usize,
    pub n: usize,
    /// Index of the resolved weight.
    pub lambda: usize,
    terms: Vec<Vec<Summand>>,
    /// `diffs[p-1]` is `d_p: C_p → C_{p-1}`.
    diffs: Vec<HomMatrix>,
}

impl ProjectiveComplex {
    pub fn new(m: usize, n: usize, lambda: usize, terms: Vec<Vec<Summand>>, diffs: Vec<HomMatrix>) -> Self {
        assert_eq!(diffs.len() + 1, terms.len().max(1), "one differential per positive degree");
        ProjectiveComplex { m, n, lambda, terms, diffs }
    }

    pub fn block(&self) -> Arc<Block> {
        Block::get(self.m, self.n)
    }

    /// Number of components.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Vec<Summand>] {
        &self.terms
    }

    /// Component `p`, empty outside the support.
    pub fn term(&self, p: i64) -> &[Summand] {
        if p < 0 {
            return &[];
        }
        self.terms.get(p as usize).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// `d_p`, or `None` if either side is zero.
    pub fn d(&self, p: i64) -> Option<&HomMatrix> {
        if p < 1 {
            return None;
        }
        self.diffs.get(p as usize - 1)
    }

    pub fn diffs(&self) -> &[HomMatrix] {
        &self.diffs
    }

    /// Position of the summand with the given weight in component `p`.
    pub fn position(&self, p: i64, weight: usize) -> Option<usize> {
        self.term(p).iter().position(|s| s.weight == weight)
    }

    /// Sorted weight multiset of each component.
    pub fn term_multisets(&self) -> Vec<Vec<usize>> {
        self.terms
            .iter()
            .map(|t| {
                let mut w: Vec<usize> = t.iter().map(|s| s.weight).collect();
                w.sort_unstable();
                w
            })
            .collect()
    }

    /// Same complex with one differential entry negated; a negative control
    /// for [`verify_resolution`].
    pub fn with_flipped_entry(&self, p: usize, r: usize, c: usize) -> ProjectiveComplex {
        let mut out = self.clone();
        let x = out.diffs[p - 1].entry(r, c);
        out.diffs[p - 1].set(r, c, x.neg());
        out
    }

    /// Text dump: one line per summand and per nonzero differential entry.
    pub fn to_text(&self) -> String {
        let blk = self.block();
        let mut s = format!("resolution of M({}) in block ({},{})\n", blk.weight(self.lambda), self.m, self.n);
        for (p, t) in self.terms.iter().enumerate() {
            let names: Vec<String> = t
                .iter()
                .map(|x| {
                    let tag = match x.tag {
                        Some(TermTag::A) => "_A",
                        Some(TermTag::B) => "_B",
                        None => "",
                    };
                    format!("P({}){}<{}>", blk.weight(x.weight), tag, x.shift)
                })
                .collect();
            s.push_str(&format!("C_{p}: {}\n", names.join(" + ")));
        }
        for (i, d) in self.diffs.iter().enumerate() {
            for (r, c, x) in d.entries() {
                s.push_str(&format!("d_{} [{},{}] = {}\n", i + 1, r, c, x.to_text(&blk)));
            }
        }
        s
    }
}

/// Expected term multisets: `P_i = ⊕ p^{(i)}_{λ,μ} P(μ)⟨i⟩`.
pub fn expected_terms(block: &Block, lambda: usize) -> Vec<Vec<usize>> {
    let lw = block.weight(lambda);
    let mut by_deg: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for mu in 0..block.size() {
        let p = kl_poly_recursive(lw, block.weight(mu));
        for (e, c) in p.terms() {
            for _ in 0..c {
                by_deg.entry(e).or_default().push(mu);
            }
        }
    }
    let top = by_deg.keys().next_back().copied().unwrap_or(0);
    (0..=top).map(|e| by_deg.remove(&e).unwrap_or_default()).collect()
}

/// `λ = (a|b)` with ups at `b < a`: the summand `P(s|t)` in degree `i` is an
/// A-term if `s+t+i = a+b` and a B-term if `s+t+i+2 = a+b`.
pub fn n2_tag(lambda: &Weight, mu: &Weight, i: usize) -> Option<TermTag> {
    let (a, b) = lambda.kl_index()?;
    let (s, t) = mu.kl_index()?;
    if s + t + i == a + b {
        Some(TermTag::A)
    } else if s + t + i + 2 == a + b {
        Some(TermTag::B)
    } else {
        None
    }
}

fn sign(e: usize) -> i64 {
    if e.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Normalized sign of `d: P(k) → P(k+1)` in the resolution of `M(j)`.
pub fn n1_target_sign(j: usize, src: usize, tgt: usize) -> Option<i64> {
    (tgt == src + 1).then(|| sign(j + src + 1))
}

/// Normalized sign of the differential between two tagged summands of the
/// resolution of `M(a|b)`, or `None` if the entry must vanish.
pub fn n2_target_sign(ab: (usize, usize), src: ((usize, usize), TermTag), tgt: ((usize, usize), TermTag)) -> Option<i64> {
    let (a, b) = (ab.0 as i64, ab.1 as i64);
    let ((s, t), x) = src;
    let ((s2, t2), y) = tgt;
    let (s, t, s2, t2) = (s as i64, t as i64, s2 as i64, t2 as i64);
    let sg = |e: i64| sign(e.rem_euclid(2) as usize);
    use TermTag::{A, B};
    match (x, y) {
        (A, A) if (s2, t2) == (s + 1, t) => Some(sg(a + b + s + t + 1)),
        (A, A) if (s2, t2) == (s, t + 1) => Some(sg(b + t + 1)),
        (B, B) if (s2, t2) == (s + 1, t) => Some(sg(b + s + 1)),
        (B, B) if (s2, t2) == (s, t + 1) => Some(sg(a + b + s + t + 1)),
        (A, B) if (s2, t2) == (s - 1, t) => Some(sg((s + t + 1) * (a + s) + a + b + 1)),
        (A, B) if (s2, t2) == (s, t - 1) => Some(sg((s + t + 1) * (a + s) + b + s)),
        (B, A) if t == s - 2 && (s2, t2) == (s + 1, s) => Some(sg(a + b + 1)),
        _ => None,
    }
}

/// The unique basis vector of `e_a K e_b` in degree 1, if there is one.
pub fn degree_one_vector(block: &Block, a: usize, b: usize) -> Option<BasisVec> {
    let v = block.hom_basis_in_degree(a, b, 1);
    debug_assert!(v.len() <= 1, "degree one morphism spaces are at most one dimensional");
    v.first().copied()
}

/// Which construction produced a complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cone,
    Generic,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cone => "cone",
            Method::Generic => "generic",
        }
    }
}

/// The canonical resolution of `M(λ)` by the cone construction, normalized
/// to the fixed sign tables when `n ≤ 2`.
pub fn resolve_cone(block: &Block, lambda: usize, cache: &ResolutionCache) -> Result<Arc<ProjectiveComplex>, ResolveError> {
    let key = CacheKey::new(block, lambda, Method::Cone);
    if let Some(c) = cache.load(&key)? {
        return Ok(c);
    }
    let w = block.weight(lambda).clone();
    let out = match w.first_down_up() {
        None => base_case(block, lambda),
        Some(i) => {
            let small = Block::get(block.m - 1, block.n - 1);
            let del = small.index_of(&w.deleted(i)).expect("deleted weight lies in the smaller block");
            let swp = block.index_of(&w.swapped(i)).expect("swapped weight lies in the block");
            let c1 = resolve_cone(&small, del, cache)?;
            let c2 = resolve_cone(block, swp, cache)?;
            let mut c = cone(block, lambda, i, &c1, &c2)?;
            normalize_signs(&mut c)?;
            tag_terms(&mut c);
            c
        }
    };
    Ok(cache.store(key, out)?)
}

/// Cone resolutions of every weight of a block.
pub fn resolve_block(block: &Block, cache: &ResolutionCache) -> Result<Vec<Arc<ProjectiveComplex>>, ResolveError> {
    (0..block.size()).map(|l| resolve_cone(block, l, cache)).collect()
}

fn base_case(block: &Block, lambda: usize) -> ProjectiveComplex {
    let mut c = ProjectiveComplex::new(block.m, block.n, lambda, vec![vec![Summand::new(lambda, 0)]], vec![]);
    tag_terms(&mut c);
    c
}

fn tag_terms(c: &mut ProjectiveComplex) {
    if c.n != 2 {
        return;
    }
    let blk = c.block();
    let lw = blk.weight(c.lambda).clone();
    for (i, t) in c.terms.iter_mut().enumerate() {
        for s in t.iter_mut() {
            s.tag = n2_tag(&lw, blk.weight(s.weight), i);
        }
    }
}

/// Mapping cone of the lift of `M(λ'')⟨1⟩ → G^{t_i} M(λ')⟨1⟩`.
///
/// `c1` resolves the deleted weight `λ'` in the block `(m-1, n-1)`, `c2`
/// resolves the swapped weight `λ''`. Component `p` of the cone is
/// `G C1_p ⊕ C2_{p-1}⟨1⟩` with the `G` part first.
pub fn cone(
    block: &Block,
    lambda: usize,
    i: usize,
    c1: &ProjectiveComplex,
    c2: &ProjectiveComplex,
) -> Result<ProjectiveComplex, ResolveError> {
    let small = c1.block();
    let g_terms: Vec<Vec<Summand>> = c1
        .terms()
        .iter()
        .map(|t| t.iter().map(|s| Summand::new(small.inserted_index(i, s.weight), s.shift)).collect())
        .collect();
    let mut g_diffs = Vec::new();
    for d in c1.diffs() {
        let mut gd = HomMatrix::zeros(d.nrows(), d.ncols());
        for (r, c, x) in d.entries() {
            let y = small.functor_image(i, x).map_err(|e| ResolveError::Internal(e.to_string()))?;
            gd.set(r, c, y);
        }
        g_diffs.push(gd);
    }
    let gterm = |p: i64| -> &[Summand] {
        if p < 0 {
            &[]
        } else {
            g_terms.get(p as usize).map(|v| v.as_slice()).unwrap_or(&[])
        }
    };
    if gterm(0).len() != 1 || gterm(0)[0].weight != lambda {
        return Err(ResolveError::Internal("G applied to P(λ') is not P(λ)".into()));
    }

    // f_p: C2_p → G C1_p
    let mut f: Vec<HomMatrix> = Vec::new();
    let f0v = degree_one_vector(block, c2.term(0)[0].weight, lambda)
        .ok_or_else(|| ResolveError::Internal("no degree one map P(λ'') → P(λ)".into()))?;
    let mut f0 = HomMatrix::zeros(1, 1);
    f0.set(0, 0, AlgebraElement::basis(f0v));
    f.push(f0);
    for p in 1..c2.len() as i64 {
        let d2 = c2.d(p).expect("differential inside the support");
        let rhs = d2.then(&f[p as usize - 1], block);
        let gd = g_diffs.get(p as usize - 1);
        let fp = lift_rows(block, c2.term(p), gterm(p), gd, &rhs)?;
        f.push(fp);
    }

    let len = c1.len().max(c2.len() + 1);
    let mut terms = Vec::with_capacity(len);
    for p in 0..len as i64 {
        let mut t: Vec<Summand> = gterm(p).to_vec();
        t.extend(c2.term(p - 1).iter().map(|s| Summand::new(s.weight, s.shift + 1)));
        terms.push(t);
    }
    let mut diffs = Vec::new();
    for p in 1..len as i64 {
        let (ng, ng1) = (gterm(p).len(), gterm(p - 1).len());
        let mut d = HomMatrix::zeros(terms[p as usize].len(), terms[p as usize - 1].len());
        if let Some(gd) = g_diffs.get(p as usize - 1) {
            for (r, c, x) in gd.entries() {
                d.set(r, c, x.clone());
            }
        }
        if let Some(fp) = f.get(p as usize - 1) {
            for (r, c, x) in fp.entries() {
                d.set(ng + r, c, x.clone());
            }
        }
        if let Some(d2) = c2.d(p - 1) {
            for (r, c, x) in d2.entries() {
                d.set(ng + r, ng1 + c, x.neg());
            }
        }
        diffs.push(d);
    }
    Ok(ProjectiveComplex::new(block.m, block.n, lambda, terms, diffs))
}

/// Solves `X · gd = rhs` for `X` row by row, each entry of `X` a degree one
/// element. Free variables are set to zero.
fn lift_rows(
    block: &Block,
    src: &[Summand],
    tgt: &[Summand],
    gd: Option<&HomMatrix>,
    rhs: &HomMatrix,
) -> Result<HomMatrix, ResolveError> {
    let mut out = HomMatrix::zeros(src.len(), tgt.len());
    for (r, s) in src.iter().enumerate() {
        let vars: Vec<(usize, BasisVec)> = tgt
            .iter()
            .enumerate()
            .flat_map(|(t, ts)| block.hom_basis_in_degree(s.weight, ts.weight, 1).into_iter().map(move |v| (t, v)))
            .collect();
        let mut coord: HashMap<(usize, BasisVec), usize> = HashMap::new();
        let mut cols: Vec<SparseVec<Rational>> = Vec::new();
        for &(t, v) in &vars {
            let mut col = SparseVec::new();
            if let Some(gd) = gd {
                for (c, y) in gd.row_entries(t) {
                    let img = block.multiply(&AlgebraElement::basis(v), y);
                    for (b, k) in img.terms() {
                        let n = coord.len();
                        let idx = *coord.entry((c, *b)).or_insert(n);
                        crate::exact::axpy(&mut col, &Rational::one(), &SparseVec::from([(idx, k.clone())]));
                    }
                }
            }
            cols.push(col);
        }
        let mut b = SparseVec::new();
        for (c, x) in rhs.row_entries(r) {
            for (v, k) in x.terms() {
                let n = coord.len();
                let idx = *coord.entry((c, *v)).or_insert(n);
                b.insert(idx, k.clone());
            }
        }
        if b.is_empty() {
            continue;
        }
        let mut mat = SparseMatrix::zeros(coord.len(), vars.len());
        for (j, col) in cols.iter().enumerate() {
            for (&i, k) in col {
                mat.set(i, j, k.clone());
            }
        }
        let sol = crate::exact::Solver::new(&mat)
            .solve_sparse(&b)
            .ok_or_else(|| ResolveError::Internal(format!("chain map does not lift at source summand {r}")))?;
        for (j, k) in sol {
            let (t, v) = vars[j];
            out.add_to(r, t, &AlgebraElement::basis(v), &k);
        }
    }
    Ok(out)
}

/// Rescales summands so that every differential entry equals the fixed sign
/// times the degree one basis vector. Applies to `n ∈ {1, 2}`; other blocks
/// are left untouched.
pub fn normalize_signs(c: &mut ProjectiveComplex) -> Result<(), ResolveError> {
    let blk = c.block();
    let lw = blk.weight(c.lambda).clone();
    let target: Box<dyn Fn(usize, &Summand, &Summand) -> Option<i64>> = match c.n {
        1 => {
            let j = lw.j_index().unwrap();
            let b2 = blk.clone();
            Box::new(move |_p, s, t| {
                n1_target_sign(j, b2.weight(s.weight).j_index().unwrap(), b2.weight(t.weight).j_index().unwrap())
            })
        }
        2 => {
            let ab = lw.kl_index().unwrap();
            let b2 = blk.clone();
            let lw2 = lw.clone();
            Box::new(move |p, s, t| {
                let (ws, wt) = (b2.weight(s.weight), b2.weight(t.weight));
                let xs = n2_tag(&lw2, ws, p)?;
                let xt = n2_tag(&lw2, wt, p - 1)?;
                n2_target_sign(ab, (ws.kl_index()?, xs), (wt.kl_index()?, xt))
            })
        }
        _ => return Ok(()),
    };
    // Edge list: (p, r, t, coefficient on the degree one vector, wanted sign).
    let mut edges = Vec::new();
    for p in 1..c.len() {
        let d = &c.diffs[p - 1];
        for (r, s) in c.terms[p].iter().enumerate() {
            for (t, ts) in c.terms[p - 1].iter().enumerate() {
                let want = target(p, s, ts);
                let x = d.entry(r, t);
                match (want, x.is_zero()) {
                    (None, true) => {}
                    (None, false) => {
                        return Err(ResolveError::Normalization(format!("unexpected nonzero entry d_{p}[{r},{t}]")))
                    }
                    (Some(_), true) => {
                        return Err(ResolveError::Normalization(format!("missing entry d_{p}[{r},{t}]")))
                    }
                    (Some(w), false) => {
                        let v = degree_one_vector(&blk, s.weight, ts.weight).ok_or_else(|| {
                            ResolveError::Normalization(format!("no degree one map for d_{p}[{r},{t}]"))
                        })?;
                        if x.len() != 1 {
                            return Err(ResolveError::Normalization(format!("entry d_{p}[{r},{t}] not a multiple")));
                        }
                        edges.push((p, r, t, x.coeff(v), w));
                    }
                }
            }
        }
    }
    // Scalars c_{p,r}: generator e_r becomes c e_r, entry (r,t) becomes
    // c_r · x / c_t. Propagate along a spanning forest rooted in degree 0.
    let mut scale: HashMap<(usize, usize), Rational> = HashMap::new();
    let mut adj: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (k, &(p, r, t, _, _)) in edges.iter().enumerate() {
        adj.entry((p, r)).or_default().push(k);
        adj.entry((p - 1, t)).or_default().push(k);
    }
    for p in 0..c.len() {
        for r in 0..c.terms[p].len() {
            if scale.contains_key(&(p, r)) {
                continue;
            }
            scale.insert((p, r), Rational::one());
            let mut queue = VecDeque::from([(p, r)]);
            while let Some(node) = queue.pop_front() {
                for &k in adj.get(&node).map(|v| v.as_slice()).unwrap_or(&[]) {
                    let (ep, er, et, ref x, w) = edges[k];
                    let w = Rational::from_integer(w.into());
                    let (src, tgt) = ((ep, er), (ep - 1, et));
                    if node == src && !scale.contains_key(&tgt) {
                        let v = &scale[&src] * x / &w;
                        scale.insert(tgt, v);
                        queue.push_back(tgt);
                    } else if node == tgt && !scale.contains_key(&src) {
                        let v = &scale[&tgt] * &w / x;
                        scale.insert(src, v);
                        queue.push_back(src);
                    }
                }
            }
        }
    }
    for &(p, r, t, ref x, w) in &edges {
        let got = &scale[&(p, r)] * x / &scale[&(p - 1, t)];
        if got != Rational::from_integer(w.into()) {
            return Err(ResolveError::Normalization(format!(
                "sign table is not a gauge of the computed differential at d_{p}[{r},{t}]"
            )));
        }
    }
    for p in 1..c.len() {
        let mut d = HomMatrix::zeros(c.terms[p].len(), c.terms[p - 1].len());
        for (r, t, x) in c.diffs[p - 1].entries() {
            let k = &scale[&(p, r)] / &scale[&(p - 1, t)];
            d.set(r, t, x.scaled(&k));
        }
        c.diffs[p - 1] = d;
    }
    Ok(())
}

/// Graded vector space underlying `⊕ P(w_r)⟨s_r⟩`, split into pieces by
/// left cup index `α` and internal degree.
pub struct Layout {
    pub cells: BTreeMap<(usize, i64), Vec<(usize, BasisVec)>>,
    pos: HashMap<(usize, BasisVec), usize>,
}

impl Layout {
    pub fn new(block: &Block, summands: &[Summand]) -> Self {
        let mut cells: BTreeMap<(usize, i64), Vec<(usize, BasisVec)>> = BTreeMap::new();
        for (r, s) in summands.iter().enumerate() {
            for a in 0..block.size() {
                for &v in block.hom_mids(a, s.weight) {
                    let b = BasisVec::new(a, v, s.weight);
                    cells.entry((a, block.degree(b) as i64 + s.shift)).or_default().push((r, b));
                }
            }
        }
        let mut pos = HashMap::new();
        for list in cells.values() {
            for (i, x) in list.iter().enumerate() {
                pos.insert(*x, i);
            }
        }
        Layout { cells, pos }
    }

    pub fn cell(&self, key: (usize, i64)) -> &[(usize, BasisVec)] {
        self.cells.get(&key).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn index(&self, r: usize, b: BasisVec) -> Option<usize> {
        self.pos.get(&(r, b)).copied()
    }

    pub fn dim(&self) -> usize {
        self.pos.len()
    }
}

/// Matrix (rows: target coordinates, columns: source coordinates) of the map
/// given by right multiplication with `d` on one piece.
pub fn piece_matrix(
    block: &Block,
    src: &Layout,
    tgt: &Layout,
    d: &HomMatrix,
    key: (usize, i64),
) -> SparseMatrix<Rational> {
    let scell = src.cell(key);
    let mut mat = SparseMatrix::zeros(tgt.cell(key).len(), scell.len());
    for (j, &(r, v)) in scell.iter().enumerate() {
        for (t, y) in d.row_entries(r) {
            for (w, k) in y.terms() {
                for &(mid, c) in block.basis_product(v, *w).iter() {
                    let b = BasisVec::new(v.left, mid, w.right);
                    let i = tgt.index(t, b).expect("image stays in the graded piece");
                    mat.add_to(i, j, k * Rational::from_integer(c.into()));
                }
            }
        }
    }
    mat
}

/// Outcome of [`verify_resolution`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ResolutionReport {
    pub d_squared_zero: bool,
    pub exact: bool,
    pub linear: bool,
    pub degrees_ok: bool,
    pub terms_match: bool,
    pub term_bounds: bool,
    pub failures: Vec<String>,
}

impl ResolutionReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `d² = 0`, exactness with `H_0 = M(λ)`, linearity, homogeneity of
/// the entries, the expected terms and the length bounds on the terms.
pub fn verify_resolution(c: &ProjectiveComplex, lambda: usize) -> ResolutionReport {
    let blk = c.block();
    let mut rep = ResolutionReport::default();
    let fail = |rep: &mut ResolutionReport, s: String| rep.failures.push(s);

    // linearity and entry degrees
    let mut linear = c.lambda == lambda && c.term(0) == [Summand { weight: lambda, ..c.term(0)[0].clone() }];
    for (p, t) in c.terms().iter().enumerate() {
        if t.iter().any(|s| s.shift != p as i64) {
            linear = false;
        }
    }
    rep.linear = linear;
    if !linear {
        fail(&mut rep, "complex is not linear or does not start with P(λ)".into());
    }
    let mut degrees_ok = true;
    for p in 1..c.len() as i64 {
        let d = c.d(p).unwrap();
        for (r, t, x) in d.entries() {
            let (s, u) = (&c.term(p)[r], &c.term(p - 1)[t]);
            let want = s.shift - u.shift;
            let ok = x.terms().keys().all(|v| v.left == s.weight && v.right == u.weight && blk.degree(*v) as i64 == want);
            if !ok {
                degrees_ok = false;
                fail(&mut rep, format!("entry d_{p}[{r},{t}] has the wrong idempotents or degree"));
            }
        }
    }
    rep.degrees_ok = degrees_ok;

    // d² = 0
    let mut dd = true;
    for p in 2..c.len() as i64 {
        let prod = c.d(p).unwrap().then(c.d(p - 1).unwrap(), &blk);
        if !prod.is_zero() {
            dd = false;
            fail(&mut rep, format!("d_{} d_{} ≠ 0", p, p - 1));
        }
    }
    rep.d_squared_zero = dd;

    // terms
    let expect: Vec<Vec<usize>> = expected_terms(&blk, lambda);
    rep.terms_match = c.term_multisets() == expect;
    if !rep.terms_match {
        fail(&mut rep, "terms differ from the Kazhdan–Lusztig prediction".into());
    }
    let n = blk.n as i64;
    let ll = blk.length(lambda) as i64;
    let mut bounds = true;
    for (i, t) in c.terms().iter().enumerate() {
        for s in t {
            let cup = blk.cup(s.weight);
            let nes: i64 = (0..cup.num_cups()).map(|k| cup.nesting(k).unwrap() as i64).sum();
            let lv = blk.length(s.weight) as i64;
            let i = i as i64;
            if !(ll - i - (n * n - n - 2 * nes) <= lv && lv <= ll - i) {
                bounds = false;
                fail(&mut rep, format!("term P({}) in degree {i} violates the length bounds", blk.weight(s.weight)));
            }
        }
    }
    rep.term_bounds = bounds;

    // exactness, piece by piece
    if linear && degrees_ok {
        rep.exact = check_exact(&blk, c, lambda, &mut rep.failures);
    } else {
        rep.exact = false;
    }
    rep
}

fn check_exact(blk: &Block, c: &ProjectiveComplex, lambda: usize, failures: &mut Vec<String>) -> bool {
    let layouts: Vec<Layout> = c.terms().iter().map(|t| Layout::new(blk, t)).collect();
    let mut keys: Vec<(usize, i64)> = layouts.iter().flat_map(|l| l.cells.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut ok = true;
    for key in keys {
        let mut ranks = vec![0usize; c.len() + 1];
        for p in 1..c.len() {
            let mat = piece_matrix(blk, &layouts[p], &layouts[p - 1], c.d(p as i64).unwrap(), key);
            ranks[p] = mat.rank();
            if p == 1 {
                // the image must lie in the kernel of P(λ) → M(λ)
                for (i, &(_, b)) in layouts[0].cell(key).iter().enumerate() {
                    if b.mid == lambda && !mat.row(i).is_empty() {
                        ok = false;
                        failures.push(format!("image of d_1 meets the top of P(λ) in piece {key:?}"));
                    }
                }
            }
        }
        for p in 0..c.len() {
            let dim = layouts[p].cell(key).len() as i64;
            let h = dim - ranks[p] as i64 - ranks[p + 1] as i64;
            let want = if p == 0 {
                let (a, g) = key;
                let top = BasisVec::new(a, lambda, lambda);
                i64::from(blk.is_basis(top) && blk.degree(top) as i64 == g)
            } else {
                0
            };
            if h != want {
                ok = false;
                failures.push(format!("homology in degree {p}, piece {key:?} has dimension {h}, expected {want}"));
            }
        }
    }
    ok
}

/// Minimal resolution of `M(λ)` by iterated projective covers.
pub fn resolve_generic(block: &Block, lambda: usize) -> Result<ProjectiveComplex, ResolveError> {
    let mut terms: Vec<Vec<Summand>> = vec![vec![Summand::new(lambda, 0)]];
    let mut diffs: Vec<HomMatrix> = Vec::new();
    // kernel of the current last map, as vectors in piece coordinates
    let mut layout = Layout::new(block, &terms[0]);
    let mut kernel: BTreeMap<(usize, i64), Vec<SparseVec<Rational>>> = BTreeMap::new();
    for (key, cell) in &layout.cells {
        let vs: Vec<SparseVec<Rational>> = cell
            .iter()
            .enumerate()
            .filter(|(_, (_, b))| b.mid != lambda)
            .map(|(i, _)| SparseVec::from([(i, Rational::one())]))
            .collect();
        if !vs.is_empty() {
            kernel.insert(*key, vs);
        }
    }
    let mut guard = 0;
    while !kernel.is_empty() {
        guard += 1;
        if guard > 4 * (block.width() * block.width() + 2) {
            return Err(ResolveError::Internal("projective cover iteration does not terminate".into()));
        }
        let cur = terms.last().unwrap().clone();
        let gens = cover_generators(block, &layout, &kernel);
        let new_terms: Vec<Summand> = gens.iter().map(|(mu, g, _)| Summand::new(*mu, *g)).collect();
        let mut d = HomMatrix::zeros(new_terms.len(), cur.len());
        for (row, (_, _, x)) in gens.iter().enumerate() {
            for (r, y) in x {
                d.set(row, *r, y.clone());
            }
        }
        let new_layout = Layout::new(block, &new_terms);
        let mut next: BTreeMap<(usize, i64), Vec<SparseVec<Rational>>> = BTreeMap::new();
        for key in new_layout.cells.keys() {
            let mat = piece_matrix(block, &new_layout, &layout, &d, *key);
            let ker: Vec<SparseVec<Rational>> = mat
                .kernel_basis()
                .into_iter()
                .map(|v| crate::exact::sparsify(&v))
                .collect();
            if !ker.is_empty() {
                next.insert(*key, ker);
            }
        }
        terms.push(new_terms);
        diffs.push(d);
        layout = new_layout;
        kernel = next;
    }
    Ok(ProjectiveComplex::new(block.m, block.n, lambda, terms, diffs))
}

type Generator = (usize, i64, BTreeMap<usize, AlgebraElement>);

/// Minimal generators of a graded submodule given piecewise by a basis:
/// for each `(μ, g)` a complement of `K_{>0}·N` inside `e_μ N_g`.
fn cover_generators(
    block: &Block,
    layout: &Layout,
    kernel: &BTreeMap<(usize, i64), Vec<SparseVec<Rational>>>,
) -> Vec<Generator> {
    let mut keys: Vec<(usize, i64)> = kernel.keys().copied().collect();
    keys.sort_by_key(|&(a, g)| (g, a));
    let mut out = Vec::new();
    for (mu, g) in keys {
        let dim = layout.cell((mu, g)).len();
        let mut ech = Echelon::new(dim);
        for (&(a, h), vs) in kernel.range((0, i64::MIN)..) {
            if h >= g {
                continue;
            }
            let deg = (g - h) as usize;
            for &nu in block.hom_mids(mu, a) {
                let x = BasisVec::new(mu, nu, a);
                if block.degree(x) != deg {
                    continue;
                }
                for v in vs {
                    let mut img = SparseVec::new();
                    for (&j, k) in v {
                        let (r, b) = layout.cell((a, h))[j];
                        for &(mid, c) in block.basis_product(x, b).iter() {
                            let i = layout.index(r, BasisVec::new(mu, mid, b.right)).expect("piece index");
                            let add = k * Rational::from_integer(c.into());
                            let e = img.entry(i).or_insert_with(Rational::zero);
                            *e += add;
                        }
                    }
                    img.retain(|_, x: &mut Rational| !x.is_zero());
                    ech.insert(img);
                }
            }
        }
        for v in &kernel[&(mu, g)] {
            if ech.insert(v.clone()) {
                let mut comp: BTreeMap<usize, AlgebraElement> = BTreeMap::new();
                for (&j, k) in v {
                    let (r, b) = layout.cell((mu, g))[j];
                    comp.entry(r).or_default().add_term(b, k.clone());
                }
                comp.retain(|_, x| !x.is_zero());
                out.push((mu, g, comp));
            }
        }
    }
    out.sort_by_key(|(mu, g, _)| (*g, *mu));
    out
}

// ---------------------------------------------------------------------------
// cache

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache i/o error at {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("cache format version mismatch in {path}: found {found}, expected {expected}")]
    VersionMismatch { path: String, found: u32, expected: u32 },
    #[error("corrupt cache file {path}: {msg}")]
    Corrupt { path: String, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey {
    pub m: usize,
    pub n: usize,
    pub weight: String,
    pub method: Method,
}

impl CacheKey {
    pub fn new(block: &Block, lambda: usize, method: Method) -> Self {
        CacheKey { m: block.m, n: block.n, weight: block.weight(lambda).to_string(), method }
    }

    pub fn file_name(&self) -> String {
        let w: String = self.weight.chars().map(|c| if c == '^' { 'u' } else { 'd' }).collect();
        format!("res_{}_{}_{}_{}_v{}.json", self.m, self.n, w, self.method.name(), FORMAT_VERSION)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub memory_hits: usize,
    pub disk_loads: usize,
    pub misses: usize,
    pub stores: usize,
    /// Keys served from memory or disk, in order.
    pub touched: Vec<CacheKey>,
}

/// Resolution cache: an in-memory table backed by an optional directory of
/// JSON files.
pub struct ResolutionCache {
    dir: Option<PathBuf>,
    mem: RwLock<HashMap<CacheKey, Arc<ProjectiveComplex>>>,
    stats: Mutex<CacheStats>,
}

impl Default for ResolutionCache {
    fn default() -> Self {
        ResolutionCache::in_memory()
    }
}

impl ResolutionCache {
    pub fn in_memory() -> Self {
        ResolutionCache { dir: None, mem: RwLock::new(HashMap::new()), stats: Mutex::new(CacheStats::default()) }
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CacheError::Io { path: dir.display().to_string(), msg: e.to_string() })?;
        Ok(ResolutionCache { dir: Some(dir), ..ResolutionCache::in_memory() })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn stats(&self) -> CacheStats {
        self.stats.lock().clone()
    }

    pub fn reset_stats(&self) {
        *self.stats.lock() = CacheStats::default();
    }

    /// Drops the in-memory table (files are kept).
    pub fn clear_memory(&self) {
        self.mem.write().clear();
    }

    pub fn load(&self, key: &CacheKey) -> Result<Option<Arc<ProjectiveComplex>>, CacheError> {
        if let Some(c) = self.mem.read().get(key) {
            let mut st = self.stats.lock();
            st.memory_hits += 1;
            st.touched.push(key.clone());
            return Ok(Some(c.clone()));
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(key.file_name());
            if path.exists() {
                let c = Arc::new(read_complex(&path)?);
                self.mem.write().insert(key.clone(), c.clone());
                let mut st = self.stats.lock();
                st.disk_loads += 1;
                st.touched.push(key.clone());
                return Ok(Some(c));
            }
        }
        self.stats.lock().misses += 1;
        Ok(None)
    }

    pub fn store(&self, key: CacheKey, c: ProjectiveComplex) -> Result<Arc<ProjectiveComplex>, CacheError> {
        let c = Arc::new(c);
        if let Some(dir) = &self.dir {
            write_complex(&dir.join(key.file_name()), &c, key.method)?;
        }
        self.mem.write().insert(key, c.clone());
        self.stats.lock().stores += 1;
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct FileSummand {
    weight: String,
    shift: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tag: Option<TermTag>,
}

#[derive(Serialize, Deserialize)]
struct FileEntry {
    row: usize,
    col: usize,
    /// `[diagram, coefficient]` pairs.
    terms: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct FileDiff {
    degree: usize,
    entries: Vec<FileEntry>,
}

#[derive(Serialize, Deserialize)]
struct FileComplex {
    format_version: u32,
    m: usize,
    n: usize,
    weight: String,
    method: Method,
    tool_version: String,
    terms: Vec<Vec<FileSummand>>,
    differentials: Vec<FileDiff>,
}

/// Deterministic JSON text of a complex.
pub fn complex_to_json(c: &ProjectiveComplex, method: Method) -> String {
    let blk = c.block();
    let fc = FileComplex {
        format_version: FORMAT_VERSION,
        m: c.m,
        n: c.n,
        weight: blk.weight(c.lambda).to_string(),
        method,
        tool_version: TOOL_VERSION.to_string(),
        terms: c
            .terms()
            .iter()
            .map(|t| {
                t.iter()
                    .map(|s| FileSummand { weight: blk.weight(s.weight).to_string(), shift: s.shift, tag: s.tag })
                    .collect()
            })
            .collect(),
        differentials: c
            .diffs()
            .iter()
            .enumerate()
            .map(|(i, d)| FileDiff {
                degree: i + 1,
                entries: d
                    .entries()
                    .map(|(row, col, x)| FileEntry {
                        row,
                        col,
                        terms: x.terms().iter().map(|(v, k)| (blk.diagram(*v).to_text(), k.to_string())).collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&fc).expect("serializable")
}

/// Parses [`complex_to_json`] output.
pub fn complex_from_json(text: &str, path: &str) -> Result<ProjectiveComplex, CacheError> {
    let corrupt = |msg: String| CacheError::Corrupt { path: path.to_string(), msg };
    let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    let found = raw.get("format_version").and_then(|v| v.as_u64()).ok_or_else(|| corrupt("no format_version".into()))?;
    if found != FORMAT_VERSION as u64 {
        return Err(CacheError::VersionMismatch { path: path.to_string(), found: found as u32, expected: FORMAT_VERSION });
    }
    let fc: FileComplex = serde_json::from_value(raw).map_err(|e| corrupt(e.to_string()))?;
    let blk = Block::get(fc.m, fc.n);
    let widx = |s: &str| -> Result<usize, CacheError> {
        let w: Weight = s.parse().map_err(|e: crate::diagrams::DiagramError| corrupt(e.to_string()))?;
        blk.index_of(&w).ok_or_else(|| corrupt(format!("weight {s} not in block")))
    };
    let lambda = widx(&fc.weight)?;
    let mut terms = Vec::new();
    for t in &fc.terms {
        let mut v = Vec::new();
        for s in t {
            v.push(Summand { weight: widx(&s.weight)?, shift: s.shift, tag: s.tag });
        }
        terms.push(v);
    }
    if fc.differentials.len() + 1 != terms.len().max(1) {
        return Err(corrupt("differential count does not match terms".into()));
    }
    let mut diffs = Vec::new();
    for (i, fd) in fc.differentials.iter().enumerate() {
        if fd.degree != i + 1 {
            return Err(corrupt("differentials out of order".into()));
        }
        let mut d = HomMatrix::zeros(terms[i + 1].len(), terms[i].len());
        for e in &fd.entries {
            if e.row >= d.nrows() || e.col >= d.ncols() {
                return Err(corrupt("entry out of range".into()));
            }
            let mut x = AlgebraElement::zero();
            for (diag, k) in &e.terms {
                let od = OrientedCircleDiagram::parse(diag).map_err(|er| corrupt(er.to_string()))?;
                let v = blk.from_diagram(&od).map_err(|er| corrupt(er.to_string()))?;
                let k: Rational = k.parse().map_err(|_| corrupt(format!("bad coefficient {k}")))?;
                x.add_term(v, k);
            }
            d.set(e.row, e.col, x);
        }
        diffs.push(d);
    }
    Ok(ProjectiveComplex::new(fc.m, fc.n, lambda, terms, diffs))
}

fn write_complex(path: &Path, c: &ProjectiveComplex, method: Method) -> Result<(), CacheError> {
    let text = complex_to_json(c, method);
    let tmp = path.with_extension("tmp");
    let io = |e: std::io::Error| CacheError::Io { path: path.display().to_string(), msg: e.to_string() };
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn read_complex(path: &Path) -> Result<ProjectiveComplex, CacheError> {
    let text =
        fs::read_to_string(path).map_err(|e| CacheError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    complex_from_json(&text, &path.display().to_string())
}

/// `|x|` of the largest coefficient in any differential entry.
pub fn max_coefficient(c: &ProjectiveComplex) -> Rational {
    c.diffs().iter().flat_map(|d| d.entries().map(|(_, _, x)| x.max_abs())).max().unwrap_or_else(Rational::zero)
}

#[allow(dead_code)]
fn is_unit(x: &Rational) -> bool {
    x.abs().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blk(m: usize, n: usize) -> Arc<Block> {
        Block::get(m, n)
    }

    #[test]
    fn n1_terms_and_signs() {
        let cache = ResolutionCache::in_memory();
        for m in 1..=4 {
            let b = blk(m, 1);
            for l in 0..b.size() {
                let c = resolve_cone(&b, l, &cache).unwrap();
                let rep = verify_resolution(&c, l);
                assert!(rep.ok(), "{:?}\n{}", rep.failures, c.to_text());
                let j = b.weight(l).j_index().unwrap();
                for p in 0..c.len() {
                    assert_eq!(c.terms()[p].len(), 1);
                    assert_eq!(b.weight(c.terms()[p][0].weight).j_index(), Some(j - p));
                }
            }
        }
    }

    #[test]
    fn n2_small_blocks_verify() {
        let cache = ResolutionCache::in_memory();
        for (m, n) in [(2, 2), (3, 2), (2, 1), (1, 2)] {
            let b = blk(m, n);
            for l in 0..b.size() {
                let c = resolve_cone(&b, l, &cache).unwrap();
                let rep = verify_resolution(&c, l);
                assert!(rep.ok(), "{}: {:?}", b.weight(l), rep.failures);
            }
        }
    }

    #[test]
    fn generic_matches_terms() {
        for (m, n) in [(3, 1), (2, 2)] {
            let b = blk(m, n);
            for l in 0..b.size() {
                let c = resolve_generic(&b, l).unwrap();
                let rep = verify_resolution(&c, l);
                assert!(rep.ok(), "{}: {:?}", b.weight(l), rep.failures);
            }
        }
    }

    #[test]
    fn flipped_sign_fails() {
        // In a commuting square a single sign flip breaks d² = 0.
        let cache = ResolutionCache::in_memory();
        let b = blk(3, 2);
        let mut found = false;
        for l in 0..b.size() {
            let c = resolve_cone(&b, l, &cache).unwrap();
            for p in 2..c.len() {
                let d = c.d(p as i64).unwrap();
                let cells: Vec<(usize, usize)> = d.entries().map(|(r, t, _)| (r, t)).collect();
                for (r, t) in cells {
                    let bad = c.with_flipped_entry(p, r, t);
                    let rep = verify_resolution(&bad, l);
                    if !rep.d_squared_zero {
                        assert!(!rep.ok());
                        found = true;
                    }
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn json_round_trip() {
        let cache = ResolutionCache::in_memory();
        let b = blk(2, 2);
        for l in 0..b.size() {
            let c = resolve_cone(&b, l, &cache).unwrap();
            let text = complex_to_json(&c, Method::Cone);
            let back = complex_from_json(&text, "mem").unwrap();
            assert_eq!(&back, c.as_ref());
            assert_eq!(complex_to_json(&back, Method::Cone), text);
        }
    }

    #[test]
    fn cache_errors_are_distinct() {
        let e = complex_from_json("{not json", "x").unwrap_err();
        assert!(matches!(e, CacheError::Corrupt { .. }));
        let e = complex_from_json(r#"{"format_version": 999}"#, "x").unwrap_err();
        assert!(matches!(e, CacheError::VersionMismatch { found: 999, .. }));
    }
}
