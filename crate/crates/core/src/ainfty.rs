//! Minimal models on the Ext algebra: the splitting `A = B ⊕ H ⊕ L` of the
//! hom dg algebra, the projection `Π`, the homotopy `Q`, the recursion for
//! `λ_n` and the higher products `m_n = Π(λ_n)`.
//!
//! The differential is the Leibniz one, so `m_1 m_2 = m_2(m_1 ⊗ 1 + 1 ⊗ m_1)`
//! holds with the Koszul rule and the Stasheff signs `(-1)^{r+st}`. The
//! spaces `B`, `Z`, `H`, `L` do not depend on the sign convention of `d`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use parking_lot::RwLock;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{axpy, Echelon, Solver, SparseMatrix, SparseVec};
use crate::extalg::{ElementLabel, ExtError, HomAlgebra, HomElement, SpaceKey};
use crate::Rational;

#[derive(Debug, Error)]
pub enum AinftyError {
    #[error(transparent)]
    Ext(#[from] ExtError),
    #[error("split mode {mode} needs {need}, the block has n = {n}")]
    Mode { mode: SplitMode, need: &'static str, n: usize },
    #[error("splitting of {0} is not a direct sum")]
    NotDirect(String),
}

/// How the harmonic part `H` and the complement `L` are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitMode {
    /// Echelon-canonical cocycles for `H`, an echelon complement for `L`.
    Generic,
    /// The labelled representatives for `H` (`n ≤ 2`), echelon `L`.
    Labelled,
    /// Labelled `H` and an `L` containing the explicit homotopies (`n = 2`),
    /// so that `Q` of a product is one of them.
    Canonical,
}

impl SplitMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "generic" => Some(SplitMode::Generic),
            "labelled" | "labeled" => Some(SplitMode::Labelled),
            "canonical" => Some(SplitMode::Canonical),
            _ => None,
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Generic => "generic",
            SplitMode::Labelled => "labelled",
            SplitMode::Canonical => "canonical",
        })
    }
}

/// One basis vector of `H`, i.e. of the Ext algebra.
#[derive(Clone, Debug)]
pub struct HBasis {
    pub label: ElementLabel,
    pub rep: HomElement,
}

impl HBasis {
    pub fn source(&self) -> usize {
        self.rep.source
    }

    pub fn target(&self) -> usize {
        self.rep.target
    }

    pub fn k(&self) -> i64 {
        self.rep.k
    }
}

/// Coefficients on the `H` basis.
pub type HVec = BTreeMap<usize, Rational>;

/// The decomposition of one hom space.
struct SpacePart {
    /// Columns `b | h | l` of an invertible matrix.
    solver: Solver<Rational>,
    nb: usize,
    /// Indices into the global `H` basis, in column order.
    h: Vec<usize>,
    nl: usize,
}

/// Splitting `A^k = B^k ⊕ H^k ⊕ L^k` of every hom space, with `B^k` spanned
/// by `d(l)` for the basis `l` of `L^{k-1}`.
pub struct Splitting {
    alg: Arc<HomAlgebra>,
    mode: SplitMode,
    seed: Option<u64>,
    basis: Vec<HBasis>,
    by_space: HashMap<SpaceKey, Vec<usize>>,
    ls: RwLock<HashMap<SpaceKey, Arc<Vec<SparseVec<Rational>>>>>,
    parts: RwLock<HashMap<SpaceKey, Arc<SpacePart>>>,
}

impl Splitting {
    /// `seed` replaces the chosen `H` and `L` vectors by random elements of
    /// the same cosets, giving another valid splitting.
    pub fn new(alg: Arc<HomAlgebra>, mode: SplitMode, seed: Option<u64>) -> Result<Self, AinftyError> {
        let n = alg.block().n;
        match mode {
            SplitMode::Labelled if n > 2 => return Err(AinftyError::Mode { mode, need: "n <= 2", n }),
            SplitMode::Canonical if n != 2 => return Err(AinftyError::Mode { mode, need: "n = 2", n }),
            _ => {}
        }
        let size = alg.block().size();
        let mut basis = Vec::new();
        for s in 0..size {
            for t in 0..size {
                let classes = match mode {
                    SplitMode::Generic => alg.generic_basis(s, t),
                    _ => alg.ext_basis(s, t)?,
                };
                let mut classes: Vec<_> = classes.into_iter().map(|c| HBasis { label: c.label, rep: c.rep }).collect();
                classes.sort_by_key(|c| (c.rep.k, c.rep.j));
                basis.extend(classes);
            }
        }
        if let Some(seed) = seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for b in &mut basis {
                let key = b.rep.key();
                let d_in = alg.dmatrix(key.shifted_k(-1));
                let prev = alg.space(key.shifted_k(-1));
                let mut v = SparseVec::new();
                for c in 0..d_in.ncols() {
                    let x: i64 = rng.gen_range(-2..=2);
                    if x != 0 {
                        v.insert(c, Rational::from_integer(x.into()));
                    }
                }
                b.rep = b.rep.plus(&alg.leibniz_differential(&prev.from_vec(&v)));
            }
        }
        let mut by_space: HashMap<SpaceKey, Vec<usize>> = HashMap::new();
        for (i, b) in basis.iter().enumerate() {
            by_space.entry(b.rep.key()).or_default().push(i);
        }
        Ok(Splitting { alg, mode, seed, basis, by_space, ls: RwLock::new(HashMap::new()), parts: RwLock::new(HashMap::new()) })
    }

    pub fn algebra(&self) -> &Arc<HomAlgebra> {
        &self.alg
    }

    pub fn mode(&self) -> SplitMode {
        self.mode
    }

    pub fn basis(&self) -> &[HBasis] {
        &self.basis
    }

    /// Basis vectors of `L` in the hom space `key`.
    fn l_basis(&self, key: SpaceKey) -> Arc<Vec<SparseVec<Rational>>> {
        if let Some(l) = self.ls.read().get(&key) {
            return l.clone();
        }
        let space = self.alg.space(key);
        let dim = space.dim();
        let d_out = self.alg.dmatrix(key);
        let mut zech = Echelon::new(dim);
        for r in d_out.rows() {
            zech.insert(r.clone());
        }
        let z = zech.kernel_basis();
        let mut ech = Echelon::new(dim);
        for v in &z {
            ech.insert(v.clone());
        }
        let mut out = Vec::new();
        if self.mode == SplitMode::Canonical {
            for h in [ElementLabel::HF, ElementLabel::HJ, ElementLabel::HA, ElementLabel::HB] {
                if let Ok(Some(e)) = self.alg.canonical(h, key.source, key.target) {
                    if e.key() == key && !e.is_zero() {
                        let v = space.to_vec(&e).expect("homotopy lies in its hom space");
                        if ech.insert(v.clone()) {
                            out.push(v);
                        }
                    }
                }
            }
        }
        for i in 0..dim {
            if ech.rank() == dim {
                break;
            }
            let mut v = SparseVec::new();
            v.insert(i, Rational::one());
            if ech.insert(v.clone()) {
                out.push(v);
            }
        }
        if let Some(seed) = self.seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ key_hash(key));
            for v in &mut out {
                for zv in &z {
                    let x: i64 = rng.gen_range(-1..=1);
                    if x != 0 {
                        axpy(v, &Rational::from_integer(x.into()), zv);
                    }
                }
            }
        }
        let out = Arc::new(out);
        self.ls.write().insert(key, out.clone());
        out
    }

    fn part(&self, key: SpaceKey) -> Result<Arc<SpacePart>, AinftyError> {
        if let Some(p) = self.parts.read().get(&key) {
            return Ok(p.clone());
        }
        let space = self.alg.space(key);
        let dim = space.dim();
        let prev = self.alg.space(key.shifted_k(-1));
        let mut cols: Vec<SparseVec<Rational>> = Vec::new();
        for l in self.l_basis(key.shifted_k(-1)).iter() {
            let b = self.alg.leibniz_differential(&prev.from_vec(l));
            cols.push(space.to_vec(&b)?);
        }
        let nb = cols.len();
        let h = self.by_space.get(&key).cloned().unwrap_or_default();
        for &i in &h {
            cols.push(space.to_vec(&self.basis[i].rep)?);
        }
        let ls = self.l_basis(key);
        cols.extend(ls.iter().cloned());
        if cols.len() != dim {
            return Err(AinftyError::NotDirect(format!("{key}: {} + {} + {} != {dim}", nb, h.len(), ls.len())));
        }
        let mut m = SparseMatrix::zeros(dim, dim);
        for (c, v) in cols.iter().enumerate() {
            for (&r, x) in v {
                m.set(r, c, x.clone());
            }
        }
        let solver = Solver::new(&m);
        if solver.rank() != dim {
            return Err(AinftyError::NotDirect(key.to_string()));
        }
        let part = Arc::new(SpacePart { solver, nb, h, nl: ls.len() });
        self.parts.write().insert(key, part.clone());
        Ok(part)
    }

    fn coords(&self, x: &HomElement) -> Result<(Arc<SpacePart>, SparseVec<Rational>), AinftyError> {
        let key = x.key();
        let part = self.part(key)?;
        let v = self.alg.space(key).to_vec(x)?;
        let c = part.solver.solve_sparse(&v).ok_or_else(|| AinftyError::NotDirect(key.to_string()))?;
        Ok((part, c))
    }

    /// `Π(x)` on the `H` basis.
    pub fn pi(&self, x: &HomElement) -> Result<HVec, AinftyError> {
        if x.is_zero() {
            return Ok(HVec::new());
        }
        let (part, c) = self.coords(x)?;
        Ok(c.range(part.nb..part.nb + part.h.len()).map(|(&i, v)| (part.h[i - part.nb], v.clone())).collect())
    }

    /// `Q(x)`: the `L` preimage of the `B` component.
    pub fn q(&self, x: &HomElement) -> Result<HomElement, AinftyError> {
        let key = x.key().shifted_k(-1);
        if x.is_zero() {
            return Ok(HomElement::zero(key));
        }
        let (part, c) = self.coords(x)?;
        let ls = self.l_basis(key);
        let mut v = SparseVec::new();
        for (&i, x) in c.range(..part.nb) {
            axpy(&mut v, x, &ls[i]);
        }
        Ok(self.alg.space(key).from_vec(&v))
    }

    /// Dimensions of `B`, `H`, `L` in one hom space.
    pub fn dims(&self, key: SpaceKey) -> Result<(usize, usize, usize), AinftyError> {
        let p = self.part(key)?;
        Ok((p.nb, p.h.len(), p.nl))
    }

    /// The element `Σ c_i h_i` of `A`.
    pub fn embed(&self, v: &HVec) -> Option<HomElement> {
        let mut out: Option<HomElement> = None;
        for (&i, c) in v {
            let rep = &self.basis[i].rep;
            match &mut out {
                Some(o) => o.add_scaled(rep, c),
                None => out = Some(rep.scaled(c)),
            }
        }
        out
    }

    /// `1 - Π = dQ + Qd` on the standard basis of every hom space of the
    /// block; returns the spaces where it fails.
    pub fn check_homotopy_identity(&self) -> Result<Vec<SpaceKey>, AinftyError> {
        let mut bad = Vec::new();
        let size = self.alg.block().size();
        for s in 0..size {
            for t in 0..size {
                for space in self.alg.spaces(s, t) {
                    for i in 0..space.dim() {
                        let x = space.basis_element(i);
                        let mut lhs = x.clone();
                        if let Some(p) = self.embed(&self.pi(&x)?) {
                            lhs = lhs.minus(&p);
                        }
                        let dq = self.alg.leibniz_differential(&self.q(&x)?);
                        let qd = self.q(&self.alg.leibniz_differential(&x))?;
                        let rhs = dq.plus(&qd);
                        if lhs != rhs {
                            bad.push(space.key);
                            break;
                        }
                    }
                }
            }
        }
        Ok(bad)
    }
}

fn key_hash(k: SpaceKey) -> u64 {
    (k.source as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (k.target as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f)
        ^ ((k.k + 64) as u64).wrapping_mul(0x1656_67b1_9e37_79f9)
        ^ ((k.j + 64) as u64).wrapping_mul(0x27d4_eb2f_1656_67c5)
}

fn sign(e: i64) -> Rational {
    if e.rem_euclid(2) == 0 {
        Rational::one()
    } else {
        -Rational::one()
    }
}

/// A composable tuple of `H` basis indices.
pub type Chain = Vec<usize>;

/// Values of one arity.
#[derive(Default)]
pub struct Level {
    /// Nonzero `λ_n`.
    pub lambda: BTreeMap<Chain, HomElement>,
    /// Nonzero `Q(λ_n)`; for `n = 1` this is `-a`.
    pub q: BTreeMap<Chain, HomElement>,
    /// Nonzero `m_n`.
    pub m: BTreeMap<Chain, HVec>,
}

/// The higher products `m_n` up to an arity bound, evaluated on every
/// composable chain of `H` basis vectors where `λ_n` can be nonzero.
pub struct AInfinity {
    split: Arc<Splitting>,
    levels: Vec<Level>,
}

impl AInfinity {
    pub fn compute(split: Arc<Splitting>, max_arity: usize) -> Result<Self, AinftyError> {
        let mut out = AInfinity { split, levels: vec![Level::default()] };
        let mut one = Level::default();
        for (i, b) in out.split.basis().iter().enumerate() {
            one.q.insert(vec![i], b.rep.neg());
        }
        out.levels.push(one);
        for n in 2..=max_arity.max(2) {
            let level = out.next_level(n)?;
            out.levels.push(level);
        }
        Ok(out)
    }

    pub fn splitting(&self) -> &Arc<Splitting> {
        &self.split
    }

    pub fn max_arity(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &Level {
        &self.levels[n]
    }

    fn degree_sum(&self, chain: &[usize]) -> i64 {
        chain.iter().map(|&i| self.split.basis()[i].k()).sum()
    }

    fn next_level(&self, n: usize) -> Result<Level, AinftyError> {
        let basis = self.split.basis();
        let alg = self.split.algebra();
        let mut lambda: BTreeMap<Chain, HomElement> = BTreeMap::new();
        for k in 1..n {
            let l = n - k;
            let left = &self.levels[k].q;
            let right = &self.levels[l].q;
            let mut by_source: HashMap<usize, Vec<(&Chain, &HomElement)>> = HashMap::new();
            for (c, e) in right {
                by_source.entry(basis[c[0]].source()).or_default().push((c, e));
            }
            for (p, x) in left {
                let Some(rs) = by_source.get(&basis[*p.last().expect("nonempty chain")].target()) else { continue };
                let sg = -sign(k as i64 + (l as i64 - 1) * self.degree_sum(p));
                for (q, y) in rs {
                    let prod = alg.compose(x, y);
                    if prod.is_zero() {
                        continue;
                    }
                    let chain: Chain = p.iter().chain(q.iter()).copied().collect();
                    match lambda.get_mut(&chain) {
                        Some(acc) => acc.add_scaled(&prod, &sg),
                        None => {
                            lambda.insert(chain, prod.scaled(&sg));
                        }
                    }
                }
            }
        }
        lambda.retain(|_, v| !v.is_zero());
        let mut level = Level::default();
        for (chain, x) in lambda {
            let m = self.split.pi(&x)?;
            if !m.is_empty() {
                level.m.insert(chain.clone(), m);
            }
            let q = self.split.q(&x)?;
            if !q.is_zero() {
                level.q.insert(chain.clone(), q);
            }
            level.lambda.insert(chain, x);
        }
        Ok(level)
    }

    /// `m_n` on a chain, zero if never nonzero.
    pub fn m(&self, chain: &[usize]) -> HVec {
        let n = chain.len();
        if n < 2 || n >= self.levels.len() {
            return HVec::new();
        }
        self.levels[n].m.get(chain).cloned().unwrap_or_default()
    }

    /// `m_n` on arbitrary cocycles, through their classes in `H`.
    pub fn m_on(&self, elems: &[&HomElement]) -> Result<HVec, AinftyError> {
        let mut terms: Vec<(Chain, Rational)> = vec![(Vec::new(), Rational::one())];
        for e in elems {
            let v = self.split.pi(e)?;
            let mut next = Vec::new();
            for (c, x) in &terms {
                for (&i, y) in &v {
                    let mut d = c.clone();
                    d.push(i);
                    next.push((d, x.clone() * y.clone()));
                }
            }
            terms = next;
        }
        let mut out = HVec::new();
        for (c, x) in terms {
            for (i, y) in self.m(&c) {
                *out.entry(i).or_insert_with(Rational::zero) += x.clone() * y;
            }
        }
        out.retain(|_, x| !x.is_zero());
        Ok(out)
    }

    /// Evaluates the Stasheff identities of arity `3..=max` on every chain
    /// where some term is nonzero; `m_1 = 0` on `H`. Returns the chains
    /// whose identity fails.
    pub fn stasheff_violations(&self, max: usize) -> Vec<(Chain, HVec)> {
        let max = max.min(self.max_arity());
        let mut out = Vec::new();
        // preimages[s][e]: chains c of length s with e in the support of m_s(c)
        let mut pre: Vec<HashMap<usize, Vec<(&Chain, &Rational)>>> = vec![HashMap::new(); max + 1];
        for s in 2..=max {
            for (c, v) in &self.levels[s].m {
                for (e, x) in v {
                    pre[s].entry(*e).or_default().push((c, x));
                }
            }
        }
        for n in 3..=max {
            let mut acc: BTreeMap<Chain, HVec> = BTreeMap::new();
            for s in 2..n {
                let outer = n - s + 1;
                for (c, v) in &self.levels[outer].m {
                    for r in 0..outer {
                        let t = outer - 1 - r;
                        let Some(ps) = pre[s].get(&c[r]) else { continue };
                        for (inner, x) in ps {
                            let full: Chain = c[..r].iter().chain(inner.iter()).chain(c[r + 1..].iter()).copied().collect();
                            let e = (r + s * t) as i64 + s as i64 * self.degree_sum(&full[..r]);
                            let coeff = sign(e) * (*x).clone();
                            let entry = acc.entry(full).or_default();
                            for (i, y) in v {
                                let z = entry.entry(*i).or_insert_with(Rational::zero);
                                *z += coeff.clone() * y.clone();
                            }
                        }
                    }
                }
            }
            for (c, v) in acc {
                let v: HVec = v.into_iter().filter(|(_, x)| !x.is_zero()).collect();
                if !v.is_empty() {
                    out.push((c, v));
                }
            }
        }
        out
    }

    /// Per-arity counts and sizes.
    pub fn summary(&self) -> Vec<AritySummary> {
        (2..self.levels.len())
            .map(|n| {
                let l = &self.levels[n];
                let max_abs = l.m.values().flat_map(|v| v.values()).map(|x| x.abs()).max().unwrap_or_else(Rational::zero);
                AritySummary {
                    arity: n,
                    nonzero_lambda: l.lambda.len(),
                    nonzero_q_lambda: l.q.len(),
                    nonzero_m: l.m.len(),
                    max_abs_coefficient: max_abs.to_string(),
                }
            })
            .collect()
    }

    /// Chains where `Q(λ_2)·Q(λ_2)` is nonzero.
    pub fn q2_q2_nonzero(&self) -> Vec<Chain> {
        let basis = self.split.basis();
        let alg = self.split.algebra();
        let q2 = &self.levels[2].q;
        let mut out = Vec::new();
        for (p, x) in q2 {
            for (q, y) in q2 {
                if basis[p[1]].target() == basis[q[0]].source() && !alg.compose(x, y).is_zero() {
                    out.push(p.iter().chain(q.iter()).copied().collect());
                }
            }
        }
        out
    }

    /// Violations of `Σ d_i ≤ n² + 2 - l` for every chain with nonzero
    /// `λ_l`, where `k_i = l(μ_i) - l(μ_{i+1}) - d_i`. Also reports basis
    /// vectors with `d_i < 0`.
    pub fn length_bound_violations(&self) -> Vec<Chain> {
        let block = self.split.algebra().block();
        let basis = self.split.basis();
        let n = block.n as i64;
        let d = |i: usize| {
            let b = &basis[i];
            block.length(b.source()) as i64 - block.length(b.target()) as i64 - b.k()
        };
        let mut out: Vec<Chain> = (0..basis.len()).filter(|&i| d(i) < 0).map(|i| vec![i]).collect();
        for l in 2..self.levels.len() {
            for c in self.levels[l].lambda.keys() {
                let sum: i64 = c.iter().map(|&i| d(i)).sum();
                if sum > n * n + 2 - l as i64 {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    /// Human readable name of a chain.
    pub fn chain_name(&self, chain: &[usize]) -> String {
        let block = self.split.algebra().block();
        let basis = self.split.basis();
        chain
            .iter()
            .map(|&i| {
                let b = &basis[i];
                format!("{}[{}->{}]", b.label.name(), block.weight(b.source()), block.weight(b.target()))
            })
            .collect::<Vec<_>>()
            .join(" , ")
    }

    /// Human readable name of an `H` vector.
    pub fn hvec_name(&self, v: &HVec) -> String {
        let basis = self.split.basis();
        let block = self.split.algebra().block();
        v.iter()
            .map(|(&i, c)| format!("{c}*{}[{}->{}]", basis[i].label.name(), block.weight(basis[i].source()), block.weight(basis[i].target())))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct AritySummary {
    pub arity: usize,
    pub nonzero_lambda: usize,
    pub nonzero_q_lambda: usize,
    pub nonzero_m: usize,
    pub max_abs_coefficient: String,
}

/// Collected vanishing facts for one block and splitting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VanishingReport {
    pub block: (usize, usize),
    pub mode: SplitMode,
    pub max_arity: usize,
    pub arities: Vec<AritySummary>,
    /// `Q(a·b) = 0` for all basis pairs.
    pub q_products_zero: bool,
    pub q_lambda3_zero: bool,
    pub q2_q2_zero: bool,
    pub stasheff_violations: usize,
    pub length_bound_violations: usize,
    /// Nonzero `m_n` tuples, as names, for arities `≥ 3`.
    pub nonzero_tuples: Vec<(usize, String, String)>,
}

impl AInfinity {
    pub fn vanishing_report(&self, stasheff_arity: usize) -> VanishingReport {
        let block = self.split.algebra().block();
        let lvl = |n: usize| self.levels.get(n);
        let mut nonzero_tuples = Vec::new();
        for n in 3..self.levels.len() {
            for (c, v) in &self.levels[n].m {
                nonzero_tuples.push((n, self.chain_name(c), self.hvec_name(v)));
            }
        }
        VanishingReport {
            block: (block.m, block.n),
            mode: self.split.mode(),
            max_arity: self.max_arity(),
            arities: self.summary(),
            q_products_zero: lvl(2).is_none_or(|l| l.q.is_empty()),
            q_lambda3_zero: lvl(3).is_none_or(|l| l.q.is_empty()),
            q2_q2_zero: self.q2_q2_nonzero().is_empty(),
            stasheff_violations: self.stasheff_violations(stasheff_arity).len(),
            length_bound_violations: self.length_bound_violations().len(),
            nonzero_tuples,
        }
    }
}

impl fmt::Display for VanishingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "block m={} n={}, {} splitting, arity <= {}", self.block.0, self.block.1, self.mode, self.max_arity)?;
        for a in &self.arities {
            if a.nonzero_m == 0 {
                writeln!(f, "m{}: 0", a.arity)?;
            } else {
                writeln!(f, "m{}: nonzero ({} tuples, max |c| = {})", a.arity, a.nonzero_m, a.max_abs_coefficient)?;
            }
        }
        writeln!(f, "Q(a.b) = 0: {}", self.q_products_zero)?;
        writeln!(f, "Q(lambda3) = 0: {}", self.q_lambda3_zero)?;
        writeln!(f, "Q(lambda2).Q(lambda2) = 0: {}", self.q2_q2_zero)?;
        writeln!(f, "Stasheff violations: {}", self.stasheff_violations)?;
        write!(f, "length bound violations: {}", self.length_bound_violations)
    }
}

/// Chains of `H` basis vectors with composable sources and targets.
pub fn composable_chains(split: &Splitting, len: usize) -> Vec<Chain> {
    let basis = split.basis();
    let mut by_source: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, b) in basis.iter().enumerate() {
        by_source.entry(b.source()).or_default().push(i);
    }
    let mut chains: Vec<Chain> = (0..basis.len()).map(|i| vec![i]).collect();
    for _ in 1..len {
        let mut next = Vec::new();
        for c in &chains {
            if let Some(nx) = by_source.get(&basis[*c.last().expect("nonempty")].target()) {
                for &i in nx {
                    let mut d = c.clone();
                    d.push(i);
                    next.push(d);
                }
            }
        }
        chains = next;
    }
    chains
}

/// Labels of a chain, for matching against tables.
pub fn chain_labels(split: &Splitting, chain: &[usize]) -> Vec<ElementLabel> {
    chain.iter().map(|&i| split.basis()[i].label).collect()
}

/// Expected value of `m_3(a_1, a_2, a_3)` for labelled classes
/// `a_1: (n|m) → (k|l)`, `a_2: (k|l) → (a|b)`, `a_3: (a|b) → (c|d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mult3 {
    Zero,
    /// A nonzero multiple of the class `label` from `(n|m)` to `(c|d)`.
    Multiple(ElementLabel),
    /// `±(1 + (-1)^{n+m+k+d+b+a}) K`.
    TwoTerm,
}

/// One row of the `m_3` table: labels, condition and value.
pub struct Mult3Row {
    pub id: usize,
    pub labels: [ElementLabel; 3],
    pub value: Mult3,
    cond: fn([(i64, i64); 4]) -> bool,
}

impl Mult3Row {
    pub fn applies(&self, labels: [ElementLabel; 3], w: [(i64, i64); 4]) -> bool {
        self.labels == labels && (self.cond)(w)
    }
}

/// The rows of the `m_3` table; triples matching no row give zero.
pub fn mult3_rows() -> Vec<Mult3Row> {
    use ElementLabel::{FTilde as T, Id, F, G, J, K};
    use Mult3::{Multiple, TwoTerm, Zero};
    // w = [(n|m), (k|l), (a|b), (c|d)]
    fn am(w: [(i64, i64); 4]) -> bool {
        w[2].0 <= w[0].1
    }
    fn cl(w: [(i64, i64); 4]) -> bool {
        w[3].0 <= w[1].1
    }
    fn any(_: [(i64, i64); 4]) -> bool {
        true
    }
    let rows: Vec<([ElementLabel; 3], fn([(i64, i64); 4]) -> bool, Mult3)> = vec![
        ([Id, T, F], am, Zero),
        ([Id, T, F], am, Multiple(G)),
        ([Id, T, J], am, Multiple(K)),
        ([Id, J, F], am, Zero),
        ([Id, J, T], am, Multiple(K)),
        ([F, F, F], any, Zero),
        ([F, F, T], |w| !cl(w), Zero),
        ([F, F, T], cl, Multiple(K)),
        ([F, T, F], am, Zero),
        ([F, T, F], |w| am(w) && cl(w), Multiple(K)),
        ([F, T, T], any, Multiple(K)),
        ([T, Id, F], am, Zero),
        ([T, Id, F], |w| am(w) && !cl(w), Multiple(G)),
        ([T, Id, F], |w| am(w) && cl(w), Multiple(G)),
        ([T, Id, F], |w| !am(w) && !cl(w), Zero),
        ([T, Id, J], am, Multiple(K)),
        ([T, F, F], am, Zero),
        ([T, F, F], |w| !am(w), Zero),
        ([T, F, T], |w| am(w) && !cl(w), Multiple(K)),
        ([T, F, T], |w| am(w) && cl(w), Multiple(K)),
        ([T, F, T], |w| !am(w) && cl(w), Zero),
        ([J, Id, F], am, Zero),
        ([J, Id, T], |w| am(w) && !cl(w), Multiple(K)),
        ([J, Id, T], |w| am(w) && cl(w), TwoTerm),
        ([J, Id, T], |w| !am(w) && cl(w), Multiple(K)),
        ([F, Id, T], cl, Multiple(G)),
        ([F, Id, J], cl, Multiple(K)),
        ([F, T, Id], cl, Multiple(G)),
        ([T, T, Id], cl, Zero),
        ([J, T, Id], cl, Multiple(K)),
        ([T, T, F], cl, Zero),
        ([F, J, Id], cl, Multiple(K)),
        ([T, J, Id], cl, Zero),
    ];
    rows.into_iter().enumerate().map(|(id, (labels, cond, value))| Mult3Row { id: id + 1, labels, value, cond }).collect()
}

/// Computed `m_3` against one row of the table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mult3RowStat {
    pub id: usize,
    pub labels: [ElementLabel; 3],
    pub value: Mult3,
    /// Triples of nonzero classes satisfying the row condition.
    pub instances: usize,
    pub nonzero: usize,
}

/// Computed `m_3` on every triple of labelled classes against the table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mult3Comparison {
    pub rows: Vec<Mult3RowStat>,
    /// Triples matched by rows with different values.
    pub ambiguous: usize,
    /// Triples matched by no row, with nonzero `m_3`, per label family.
    pub unlisted_nonzero: BTreeMap<String, usize>,
    pub unlisted_instances: usize,
    /// `(n+m+k+d+b+a mod 2, m_3)` for triples of the two-term row.
    pub two_term: Vec<(i64, String)>,
}

impl Mult3Comparison {
    /// Rows whose value is nonzero, reachable in the block, never nonzero.
    pub fn missing_rows(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| r.value != Mult3::Zero && r.instances > 0 && r.nonzero == 0).map(|r| r.id).collect()
    }

    /// Zero rows with a nonzero `m_3` on a triple only matched by zero rows.
    pub fn zero_row_violations(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| r.value == Mult3::Zero && r.nonzero > 0).map(|r| r.id).collect()
    }

    pub fn agrees(&self) -> bool {
        self.missing_rows().is_empty() && self.zero_row_violations().is_empty() && self.unlisted_nonzero.is_empty()
    }
}

impl AInfinity {
    /// Evaluates `m_3` on every triple of labelled classes of an `n = 2`
    /// block and sorts the results by row of the `m_3` table. A zero row
    /// only counts a nonzero value when no nonzero row also matches.
    pub fn mult3_comparison(&self) -> Result<Mult3Comparison, AinftyError> {
        let alg = self.split.algebra();
        let block = alg.block();
        if block.n != 2 {
            return Err(AinftyError::Mode { mode: self.split.mode(), need: "n = 2", n: block.n });
        }
        let size = block.size();
        let kl: Vec<(i64, i64)> = (0..size)
            .map(|i| {
                let (k, l) = block.weight(i).kl_index().expect("n = 2 weight");
                (k as i64, l as i64)
            })
            .collect();
        let mut classes: HashMap<(usize, usize), Vec<(ElementLabel, HomElement)>> = HashMap::new();
        for s in 0..size {
            for t in 0..size {
                for l in ElementLabel::CLASSES {
                    if let Some(e) = alg.canonical(l, s, t)? {
                        if !e.is_zero() && !alg.is_coboundary(&e) {
                            classes.entry((s, t)).or_default().push((l, e));
                        }
                    }
                }
            }
        }
        let rows = mult3_rows();
        let mut stats: Vec<Mult3RowStat> = rows
            .iter()
            .map(|r| Mult3RowStat { id: r.id, labels: r.labels, value: r.value, instances: 0, nonzero: 0 })
            .collect();
        let mut out = Mult3Comparison { rows: Vec::new(), ambiguous: 0, unlisted_nonzero: BTreeMap::new(), unlisted_instances: 0, two_term: Vec::new() };
        let empty = Vec::new();
        for w0 in 0..size {
            for w1 in 0..size {
                let c1 = classes.get(&(w0, w1)).unwrap_or(&empty);
                if c1.is_empty() {
                    continue;
                }
                for w2 in 0..size {
                    let c2 = classes.get(&(w1, w2)).unwrap_or(&empty);
                    for w3 in 0..size {
                        let c3 = classes.get(&(w2, w3)).unwrap_or(&empty);
                        let w = [kl[w0], kl[w1], kl[w2], kl[w3]];
                        for (l1, x1) in c1 {
                            for (l2, x2) in c2 {
                                for (l3, x3) in c3 {
                                    let labels = [*l1, *l2, *l3];
                                    let v = self.m_on(&[x1, x2, x3])?;
                                    let hit: Vec<usize> = rows.iter().filter(|r| r.applies(labels, w)).map(|r| r.id - 1).collect();
                                    if hit.is_empty() {
                                        out.unlisted_instances += 1;
                                        if !v.is_empty() {
                                            let key = labels.iter().map(|l| l.name()).collect::<Vec<_>>().join(" ");
                                            *out.unlisted_nonzero.entry(key).or_default() += 1;
                                        }
                                        continue;
                                    }
                                    let all_zero = hit.iter().all(|&i| rows[i].value == Mult3::Zero);
                                    let any_zero = hit.iter().any(|&i| rows[i].value == Mult3::Zero);
                                    if any_zero && !all_zero {
                                        out.ambiguous += 1;
                                    }
                                    for &i in &hit {
                                        stats[i].instances += 1;
                                        if !v.is_empty() && (rows[i].value != Mult3::Zero || all_zero) {
                                            stats[i].nonzero += 1;
                                        }
                                        if rows[i].value == Mult3::TwoTerm {
                                            let (n, m) = w[0];
                                            let (k, _) = w[1];
                                            let (a, b) = w[2];
                                            let (_, d) = w[3];
                                            out.two_term.push(((n + m + k + d + b + a).rem_euclid(2), self.hvec_name(&v)));
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out.rows = stats;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcalg::Block;
    use crate::resolve::ResolutionCache;

    fn split(m: usize, n: usize, mode: SplitMode, seed: Option<u64>) -> Arc<Splitting> {
        let alg = Arc::new(HomAlgebra::new(Block::get(m, n), &ResolutionCache::in_memory()).unwrap());
        Arc::new(Splitting::new(alg, mode, seed).unwrap())
    }

    fn nonzero_arities(ai: &AInfinity) -> Vec<usize> {
        ai.summary().iter().filter(|a| a.nonzero_m > 0).map(|a| a.arity).collect()
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [SplitMode::Generic, SplitMode::Labelled, SplitMode::Canonical] {
            assert_eq!(SplitMode::parse(&m.to_string()), Some(m));
        }
        assert_eq!(SplitMode::parse("other"), None);
    }

    #[test]
    fn modes_check_the_block() {
        let alg = Arc::new(HomAlgebra::new(Block::get(2, 1), &ResolutionCache::in_memory()).unwrap());
        assert!(matches!(Splitting::new(alg, SplitMode::Canonical, None), Err(AinftyError::Mode { .. })));
    }

    #[test]
    fn homotopy_identity_holds() {
        for s in [split(3, 1, SplitMode::Labelled, None), split(2, 2, SplitMode::Canonical, None), split(2, 2, SplitMode::Generic, Some(7))] {
            assert!(s.check_homotopy_identity().unwrap().is_empty());
        }
    }

    #[test]
    fn q_vanishes_on_h_and_pi_on_l() {
        let s = split(2, 2, SplitMode::Canonical, Some(3));
        for (i, b) in s.basis().iter().enumerate() {
            assert!(s.q(&b.rep).unwrap().is_zero());
            let p = s.pi(&b.rep).unwrap();
            assert_eq!(p.len(), 1);
            assert_eq!(p[&i], Rational::one());
        }
        let alg = s.algebra().clone();
        for a in 0..alg.block().size() {
            for b in 0..alg.block().size() {
                for sp in alg.spaces(a, b) {
                    for l in s.l_basis(sp.key).iter() {
                        let x = sp.from_vec(l);
                        assert!(s.pi(&x).unwrap().is_empty());
                        assert_eq!(s.q(&alg.leibniz_differential(&x)).unwrap(), x);
                    }
                }
            }
        }
    }

    #[test]
    fn canonical_q_of_products_are_the_homotopies() {
        let s = split(3, 2, SplitMode::Canonical, None);
        let alg = s.algebra().clone();
        let size = alg.block().size();
        let mut seen = 0;
        for a in 0..size {
            for b in 0..size {
                for c in 0..size {
                    let (Some(x), Some(y)) = (alg.canonical(ElementLabel::F, a, b).unwrap(), alg.canonical(ElementLabel::F, b, c).unwrap()) else { continue };
                    let Some(h) = alg.canonical(ElementLabel::HA, a, c).unwrap() else { continue };
                    let q = s.q(&alg.compose(&x, &y)).unwrap();
                    if h.is_zero() {
                        continue;
                    }
                    assert!(q == h || q == h.neg(), "Q(F.F) is not H(A)");
                    seen += 1;
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn lambda_has_degree_two_minus_arity() {
        let s = split(2, 2, SplitMode::Generic, None);
        let ai = AInfinity::compute(s.clone(), 4).unwrap();
        for n in 2..=4 {
            for (c, x) in &ai.level(n).lambda {
                let sum: i64 = c.iter().map(|&i| s.basis()[i].k()).sum();
                assert_eq!(x.key().k, sum + 2 - n as i64);
            }
        }
    }

    #[test]
    fn non_composable_inputs_give_zero() {
        let s = split(2, 2, SplitMode::Canonical, None);
        let ai = AInfinity::compute(s.clone(), 3).unwrap();
        let b = s.basis();
        let pair = (0..b.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).find(|&(i, j)| b[i].target() != b[j].source()).unwrap();
        assert!(ai.m_on(&[&b[pair.0].rep, &b[pair.1].rep]).unwrap().is_empty());
        assert!(ai.m(&[pair.0, pair.1]).is_empty());
    }

    #[test]
    fn n1_minimal_model_is_formal() {
        let ai = AInfinity::compute(split(3, 1, SplitMode::Labelled, None), 6).unwrap();
        let r = ai.vanishing_report(5);
        assert!(r.q_products_zero);
        assert_eq!(nonzero_arities(&ai), vec![2]);
        assert_eq!(r.stasheff_violations, 0);
    }

    #[test]
    fn canonical_n2_has_m3_only() {
        let ai = AInfinity::compute(split(2, 2, SplitMode::Canonical, None), 5).unwrap();
        let r = ai.vanishing_report(5);
        assert_eq!(nonzero_arities(&ai), vec![2, 3]);
        assert!(r.q_lambda3_zero && r.q2_q2_zero);
        assert_eq!(r.stasheff_violations, 0);
        assert_eq!(r.length_bound_violations, 0);
        assert!(r.to_string().contains("m4: 0"));
    }

    #[test]
    fn stasheff_holds_for_other_complements() {
        for seed in [1, 2] {
            let ai = AInfinity::compute(split(2, 2, SplitMode::Generic, Some(seed)), 5).unwrap();
            assert!(ai.stasheff_violations(5).is_empty());
            assert!(ai.length_bound_violations().is_empty());
        }
    }

    #[test]
    fn m2_is_the_ext_product_for_every_complement() {
        let a = AInfinity::compute(split(2, 2, SplitMode::Canonical, None), 2).unwrap();
        let b = AInfinity::compute(split(2, 2, SplitMode::Canonical, Some(11)), 2).unwrap();
        let alg = a.splitting().algebra().clone();
        let size = alg.block().size();
        for s in 0..size {
            for t in 0..size {
                for u in 0..size {
                    for x in alg.ext_basis(s, t).unwrap() {
                        for y in alg.ext_basis(t, u).unwrap() {
                            assert_eq!(a.m_on(&[&x.rep, &y.rep]).unwrap(), b.m_on(&[&x.rep, &y.rep]).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mult3_table_rows_are_indexed() {
        let rows = mult3_rows();
        assert_eq!(rows.len(), 33);
        assert_eq!(rows.iter().filter(|r| r.value == Mult3::TwoTerm).count(), 1);
        let ai = AInfinity::compute(split(2, 2, SplitMode::Canonical, None), 3).unwrap();
        let cmp = ai.mult3_comparison().unwrap();
        let total: usize = cmp.rows.iter().map(|r| r.instances).sum();
        assert!(total > 0);
    }
}
