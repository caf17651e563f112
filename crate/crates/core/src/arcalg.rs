//! The arc algebra `K_m^n`: its diagram basis, the generalised surgery
//! product, and the functors attached to the matchings `t_i`.
//!
//! Every cup diagram on `m+n` vertices with at most `min(m, n)` cups is `λ̲`
//! for exactly one weight `λ`, so a basis vector `(λ̲_α ν λ̄_β)` is stored as
//! the index triple `(α, ν, β)` of a [`Block`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Signed, Zero};
use parking_lot::RwLock;
use thiserror::Error;

use crate::diagrams::{
    associated_cup_diagram, is_oriented_half, weights_in_block, CapDiagram, CircleType, CupDiagram, DiagramError,
    Label, OrientedCircleDiagram, Weight,
};
use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("block mismatch: {0}")]
    BlockMismatch(String),
}

/// Basis vector `(λ̲_left ν_mid λ̄_right)` by weight indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisVec {
    pub left: usize,
    pub mid: usize,
    pub right: usize,
}

impl BasisVec {
    pub fn new(left: usize, mid: usize, right: usize) -> Self {
        BasisVec { left, mid, right }
    }
}

/// Order in which symmetric middle cup/cap pairs are cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PickOrder {
    /// Leftmost admissible pair first (the canonical order).
    Leftmost,
    /// Rightmost admissible pair first.
    Rightmost,
    /// Pseudo-random admissible pair, driven by the given seed.
    Seeded(u64),
}

type ProductKey = (u32, u32, u32, u32, u32);

/// The weights of one block together with cached diagram data and surgery
/// structure constants.
pub struct Block {
    pub m: usize,
    pub n: usize,
    weights: Vec<Weight>,
    index: HashMap<Weight, usize>,
    cups: Vec<CupDiagram>,
    lengths: Vec<usize>,
    hom: Vec<Vec<Vec<usize>>>,
    products: RwLock<HashMap<ProductKey, Arc<Vec<(usize, i64)>>>>,
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Block(m={}, n={})", self.m, self.n)
    }
}

static BLOCKS: OnceLock<Mutex<HashMap<(usize, usize), Arc<Block>>>> = OnceLock::new();

impl Block {
    /// Shared block instance for `(m, n)`.
    pub fn get(m: usize, n: usize) -> Arc<Block> {
        let reg = BLOCKS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = reg.lock().unwrap();
        g.entry((m, n)).or_insert_with(|| Arc::new(Block::build(m, n))).clone()
    }

    fn build(m: usize, n: usize) -> Block {
        let weights = weights_in_block(m, n);
        let index = weights.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        let cups: Vec<CupDiagram> = weights.iter().map(associated_cup_diagram).collect();
        let lengths = weights.iter().map(|w| w.length()).collect();
        let k = weights.len();
        let mut hom = vec![vec![Vec::new(); k]; k];
        for (a, row) in hom.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                for (v, w) in weights.iter().enumerate() {
                    if is_oriented_half(&cups[a], w) && is_oriented_half(&cups[b], w) {
                        cell.push(v);
                    }
                }
            }
        }
        Block { m, n, weights, index, cups, lengths, hom, products: RwLock::new(HashMap::new()) }
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    /// Number of vertices `m + n`.
    pub fn width(&self) -> usize {
        self.m + self.n
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &Weight {
        &self.weights[i]
    }

    pub fn index_of(&self, w: &Weight) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn require(&self, w: &Weight) -> Result<usize, AlgebraError> {
        self.index_of(w).ok_or_else(|| {
            AlgebraError::Diagram(DiagramError::WrongBlock { weight: w.to_string(), m: self.m, n: self.n })
        })
    }

    pub fn cup(&self, i: usize) -> &CupDiagram {
        &self.cups[i]
    }

    pub fn length(&self, i: usize) -> usize {
        self.lengths[i]
    }

    pub fn zero_weight(&self) -> usize {
        0
    }

    /// Middle weights `ν` with `(λ̲_a ν λ̄_b)` oriented, in index order.
    pub fn hom_mids(&self, a: usize, b: usize) -> &[usize] {
        &self.hom[a][b]
    }

    pub fn is_basis(&self, v: BasisVec) -> bool {
        self.hom[v.left][v.right].binary_search(&v.mid).is_ok()
    }

    pub fn degree(&self, v: BasisVec) -> usize {
        let w = &self.weights[v.mid];
        let cw = |c: &CupDiagram| c.cups().iter().filter(|&&(i, _)| w.get(i) == Label::Up).count();
        cw(&self.cups[v.left]) + cw(&self.cups[v.right])
    }

    /// Degree of `(λ̲_a ν)` alone.
    pub fn half_degree(&self, a: usize, nu: usize) -> usize {
        let w = &self.weights[nu];
        self.cups[a].cups().iter().filter(|&&(i, _)| w.get(i) == Label::Up).count()
    }

    /// Basis of `e_a K e_b` in a given degree.
    pub fn hom_basis_in_degree(&self, a: usize, b: usize, deg: usize) -> Vec<BasisVec> {
        self.hom[a][b]
            .iter()
            .map(|&v| BasisVec::new(a, v, b))
            .filter(|&x| self.degree(x) == deg)
            .collect()
    }

    /// The full basis, ordered by `(left, right, mid)`.
    pub fn basis(&self) -> Vec<BasisVec> {
        let mut out = Vec::new();
        for a in 0..self.size() {
            for b in 0..self.size() {
                for &v in &self.hom[a][b] {
                    out.push(BasisVec::new(a, v, b));
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.hom.iter().flatten().map(|c| c.len()).sum()
    }

    pub fn diagram(&self, v: BasisVec) -> OrientedCircleDiagram {
        OrientedCircleDiagram {
            cup: self.cups[v.left].clone(),
            weight: self.weights[v.mid].clone(),
            cap: self.cups[v.right].clone(),
        }
    }

    pub fn from_diagram(&self, d: &OrientedCircleDiagram) -> Result<BasisVec, AlgebraError> {
        let mid = self.require(&d.weight)?;
        let find = |c: &CupDiagram| {
            self.cups.iter().position(|x| x == c).ok_or_else(|| {
                AlgebraError::BlockMismatch(format!("diagram {} is not in block ({},{})", c.to_text("cups"), self.m, self.n))
            })
        };
        Ok(BasisVec::new(find(&d.cup)?, mid, find(&d.cap)?))
    }

    pub fn idempotent(&self, lambda: usize) -> AlgebraElement {
        AlgebraElement::basis(BasisVec::new(lambda, lambda, lambda))
    }

    /// Structure constants of `(a λ b)·(b μ d)`.
    pub fn basis_product(&self, x: BasisVec, y: BasisVec) -> Arc<Vec<(usize, i64)>> {
        if x.right != y.left {
            return Arc::new(Vec::new());
        }
        let key = (x.left as u32, x.mid as u32, x.right as u32, y.mid as u32, y.right as u32);
        if let Some(r) = self.products.read().get(&key) {
            return r.clone();
        }
        let terms = self.surgery(x, y, PickOrder::Leftmost, None);
        let r = Arc::new(terms);
        self.products.write().insert(key, r.clone());
        r
    }

    /// Product of two algebra elements.
    pub fn multiply(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        let mut by_left: BTreeMap<usize, Vec<(BasisVec, &Rational)>> = BTreeMap::new();
        for (v, c) in &b.terms {
            by_left.entry(v.left).or_default().push((*v, c));
        }
        let mut out = AlgebraElement::zero();
        for (x, cx) in &a.terms {
            let Some(ys) = by_left.get(&x.right) else { continue };
            for (y, cy) in ys {
                let prod = self.basis_product(*x, *y);
                if prod.is_empty() {
                    continue;
                }
                let c = cx * *cy;
                for &(mid, k) in prod.iter() {
                    out.add_term(BasisVec::new(x.left, mid, y.right), &c * Rational::from_integer(k.into()));
                }
            }
        }
        out
    }

    /// Product computed with an explicit surgery order (no caching).
    pub fn multiply_with_order(&self, x: BasisVec, y: BasisVec, order: PickOrder) -> Vec<(usize, i64)> {
        if x.right != y.left {
            return Vec::new();
        }
        self.surgery(x, y, order, None)
    }

    /// Surgery trace of a basis product, one panel per step.
    pub fn surgery_trace(&self, x: BasisVec, y: BasisVec) -> Vec<TracePanel> {
        let mut trace = Vec::new();
        if x.right == y.left {
            self.surgery(x, y, PickOrder::Leftmost, Some(&mut trace));
        }
        trace
    }

    fn surgery(
        &self,
        x: BasisVec,
        y: BasisVec,
        order: PickOrder,
        mut trace: Option<&mut Vec<TracePanel>>,
    ) -> Vec<(usize, i64)> {
        let width = self.width();
        let mut st = Stack {
            bottom: &self.cups[x.left],
            top: &self.cups[y.right],
            middle: (0..width).map(|p| self.cups[x.right].partner(p)).collect(),
        };
        let mut terms: Vec<(Vec<Label>, Vec<Label>, i64)> =
            vec![(self.weights[x.mid].labels().to_vec(), self.weights[y.mid].labels().to_vec(), 1)];
        let mut rng = match order {
            PickOrder::Seeded(s) => s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407),
            _ => 0,
        };
        if let Some(t) = trace.as_deref_mut() {
            t.push(st.panel(&terms, None));
        }
        loop {
            let outer = st.outer_pairs();
            if outer.is_empty() {
                break;
            }
            let (i, j) = match order {
                PickOrder::Leftmost => outer[0],
                PickOrder::Rightmost => *outer.last().unwrap(),
                PickOrder::Seeded(_) => {
                    rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    outer[((rng >> 33) as usize) % outer.len()]
                }
            };
            let mut next = Vec::new();
            let mut rule = None;
            for (l0, l1, c) in &terms {
                let (r, outs) = st.cut(i, j, l0, l1);
                rule.get_or_insert(r);
                for (n0, n1) in outs {
                    next.push((n0, n1, *c));
                }
            }
            st.middle[i] = None;
            st.middle[j] = None;
            terms = next;
            if let Some(t) = trace.as_deref_mut() {
                t.push(st.panel(&terms, rule));
            }
            if terms.is_empty() {
                break;
            }
        }
        let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
        for (l0, l1, c) in terms {
            debug_assert_eq!(l0, l1, "middle section not identified");
            let w = Weight::new(l0);
            let mid = self.index[&w];
            debug_assert!(self.is_basis(BasisVec::new(x.left, mid, y.right)));
            *acc.entry(mid).or_insert(0) += c;
        }
        acc.into_iter().filter(|&(_, c)| c != 0).collect()
    }

    /// `G^{t_i}` on morphisms: inserts `v^` at `(i, i+1)` into every weight of
    /// the diagram, viewing `self` as the smaller block.
    pub fn functor_image(&self, i: usize, u: &AlgebraElement) -> Result<AlgebraElement, AlgebraError> {
        if i > self.width() {
            return Err(AlgebraError::BlockMismatch(format!("position {i} outside block of width {}", self.width())));
        }
        let big = Block::get(self.m + 1, self.n + 1);
        let mut out = AlgebraElement::zero();
        for (v, c) in &u.terms {
            let map = |w: usize| big.index[&self.weights[w].inserted(i)];
            out.add_term(BasisVec::new(map(v.left), map(v.mid), map(v.right)), c.clone());
        }
        Ok(out)
    }

    /// Index in the block `(m+1, n+1)` of weight `w` with `v^` inserted at `i`.
    pub fn inserted_index(&self, i: usize, w: usize) -> usize {
        Block::get(self.m + 1, self.n + 1).index[&self.weights[w].inserted(i)]
    }
}

/// One step of a rendered surgery: the middle arcs still present, the
/// labellings of every summand, and the rule applied to reach it.
#[derive(Clone, Debug)]
pub struct TracePanel {
    pub bottom: CupDiagram,
    pub top: CapDiagram,
    pub middle: Vec<Option<usize>>,
    pub terms: Vec<(Vec<Label>, Vec<Label>, i64)>,
    pub rule: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    level: u8,
    x: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Arc(Node),
    Vertical(Node),
    End,
}

struct Stack<'a> {
    bottom: &'a CupDiagram,
    top: &'a CupDiagram,
    middle: Vec<Option<usize>>,
}

struct Comp {
    nodes: Vec<Node>,
    closed: bool,
    ends: Vec<Node>,
}

impl Stack<'_> {
    fn below(&self, n: Node) -> Step {
        if n.level == 0 {
            match self.bottom.partner(n.x) {
                Some(y) => Step::Arc(Node { level: 0, x: y }),
                None => Step::End,
            }
        } else {
            match self.middle[n.x] {
                Some(y) => Step::Arc(Node { level: 1, x: y }),
                None => Step::Vertical(Node { level: 0, x: n.x }),
            }
        }
    }

    fn above(&self, n: Node) -> Step {
        if n.level == 0 {
            match self.middle[n.x] {
                Some(y) => Step::Arc(Node { level: 0, x: y }),
                None => Step::Vertical(Node { level: 1, x: n.x }),
            }
        } else {
            match self.top.partner(n.x) {
                Some(y) => Step::Arc(Node { level: 1, x: y }),
                None => Step::End,
            }
        }
    }

    /// The other half-edge leaving `n`, given that we arrived through `from_above`.
    fn step(&self, n: Node, go_up: bool) -> Step {
        if go_up {
            self.above(n)
        } else {
            self.below(n)
        }
    }

    /// Walks the component of `start`, returning nodes in traversal order
    /// (starting with `start`) together with the steps between consecutive
    /// nodes.
    fn component(&self, start: Node) -> Comp {
        let mut forward = vec![start];
        let mut closed = false;
        let mut ends = Vec::new();
        // Direction: leaving a node upwards or downwards. Arriving through an
        // arc at the same level means we leave on the other side of that
        // level; arriving vertically keeps the direction.
        let mut cur = start;
        let mut up = true;
        loop {
            match self.step(cur, up) {
                Step::End => {
                    ends.push(cur);
                    break;
                }
                Step::Arc(nx) | Step::Vertical(nx) => {
                    if nx == start {
                        closed = true;
                        break;
                    }
                    let via_arc = matches!(self.step(cur, up), Step::Arc(_));
                    forward.push(nx);
                    cur = nx;
                    if via_arc {
                        up = !up;
                    }
                }
            }
        }
        if closed {
            return Comp { nodes: forward, closed, ends };
        }
        let mut backward = Vec::new();
        cur = start;
        up = false;
        loop {
            match self.step(cur, up) {
                Step::End => {
                    ends.push(cur);
                    break;
                }
                Step::Arc(nx) | Step::Vertical(nx) => {
                    let via_arc = matches!(self.step(cur, up), Step::Arc(_));
                    backward.push(nx);
                    cur = nx;
                    if via_arc {
                        up = !up;
                    }
                }
            }
        }
        backward.reverse();
        backward.extend(forward);
        Comp { nodes: backward, closed: false, ends }
    }

    fn label(l0: &[Label], l1: &[Label], n: Node) -> Label {
        if n.level == 0 {
            l0[n.x]
        } else {
            l1[n.x]
        }
    }

    fn set(l0: &mut [Label], l1: &mut [Label], n: Node, v: Label) {
        if n.level == 0 {
            l0[n.x] = v;
        } else {
            l1[n.x] = v;
        }
    }

    fn kind(&self, c: &Comp, l0: &[Label], l1: &[Label]) -> CircleType {
        if !c.closed {
            return CircleType::Line;
        }
        let left = c.nodes.iter().min_by_key(|n| (n.x, n.level)).unwrap();
        match Self::label(l0, l1, *left) {
            Label::Down => CircleType::AntiClockwise,
            Label::Up => CircleType::Clockwise,
        }
    }

    /// Whether nodes `a` and `b` are joined by an arc (as opposed to a
    /// vertical segment).
    fn joined_by_arc(&self, a: Node, b: Node) -> bool {
        a.level == b.level
    }

    /// Labels a component starting from node `from` with label `v`.
    fn propagate(&self, c: &Comp, from: Node, v: Label, l0: &mut [Label], l1: &mut [Label]) -> bool {
        let pos = c.nodes.iter().position(|&n| n == from).unwrap();
        let len = c.nodes.len();
        Self::set(l0, l1, from, v);
        let mut cur = v;
        // forward
        let steps_fwd = if c.closed { len - 1 } else { len - 1 - pos };
        for s in 0..steps_fwd {
            let a = c.nodes[(pos + s) % len];
            let b = c.nodes[(pos + s + 1) % len];
            if self.joined_by_arc(a, b) {
                cur = cur.flip();
            }
            Self::set(l0, l1, b, cur);
        }
        if c.closed {
            // closing edge consistency
            let a = c.nodes[(pos + len - 1) % len];
            let mut expect = cur;
            if self.joined_by_arc(a, from) {
                expect = expect.flip();
            }
            return expect == v;
        }
        cur = v;
        for s in (0..pos).rev() {
            let a = c.nodes[s + 1];
            let b = c.nodes[s];
            if self.joined_by_arc(a, b) {
                cur = cur.flip();
            }
            Self::set(l0, l1, b, cur);
        }
        true
    }

    fn orient_circle(&self, c: &Comp, t: CircleType, l0: &mut [Label], l1: &mut [Label]) -> bool {
        let left = *c.nodes.iter().min_by_key(|n| (n.x, n.level)).unwrap();
        let v = if t == CircleType::AntiClockwise { Label::Down } else { Label::Up };
        self.propagate(c, left, v, l0, l1)
    }

    /// Re-orients a line keeping the label of its first end; reports whether
    /// the other end kept its label too.
    fn orient_line(&self, c: &Comp, old0: &[Label], old1: &[Label], l0: &mut [Label], l1: &mut [Label]) -> bool {
        let e = c.ends[0];
        let ok = self.propagate(c, e, Self::label(old0, old1, e), l0, l1);
        ok && c.ends.iter().all(|&x| Self::label(l0, l1, x) == Self::label(old0, old1, x))
    }

    fn outer_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut x = 0;
        while x < self.middle.len() {
            match self.middle[x] {
                Some(y) if y > x => {
                    out.push((x, y));
                    x = y + 1;
                }
                _ => x += 1,
            }
        }
        out
    }

    /// Applies one surgery at the middle pair `(i, j)` to a single labelling.
    fn cut(&mut self, i: usize, j: usize, l0: &[Label], l1: &[Label]) -> (String, Vec<(Vec<Label>, Vec<Label>)>) {
        let c1 = self.component(Node { level: 0, x: i });
        let c2 = self.component(Node { level: 1, x: i });
        let same = c1.nodes.contains(&Node { level: 1, x: i });
        let t1 = self.kind(&c1, l0, l1);
        let t2 = self.kind(&c2, l0, l1);
        let saved = (self.middle[i], self.middle[j]);
        self.middle[i] = None;
        self.middle[j] = None;
        let da = self.component(Node { level: 0, x: i });
        let db = self.component(Node { level: 0, x: j });
        let merged = da.nodes.contains(&Node { level: 0, x: j });
        let mut outs = Vec::new();
        let rule;
        use CircleType::*;
        if same {
            rule = format!("{} -> split", t1.symbol());
            debug_assert!(!merged, "cutting one component must split it");
            let push = |ta: CircleType, tb: CircleType, outs: &mut Vec<(Vec<Label>, Vec<Label>)>| {
                let (mut n0, mut n1) = (l0.to_vec(), l1.to_vec());
                let mut ok = true;
                for (c, t) in [(&da, ta), (&db, tb)] {
                    ok &= match t {
                        Line => self.orient_line(c, l0, l1, &mut n0, &mut n1),
                        _ => self.orient_circle(c, t, &mut n0, &mut n1),
                    };
                }
                debug_assert!(ok, "inconsistent orientation after split");
                if ok {
                    outs.push((n0, n1));
                }
            };
            match t1 {
                AntiClockwise => {
                    push(AntiClockwise, Clockwise, &mut outs);
                    push(Clockwise, AntiClockwise, &mut outs);
                }
                Clockwise => push(Clockwise, Clockwise, &mut outs),
                Line => {
                    let (ta, tb) = if da.closed { (Clockwise, Line) } else { (Line, Clockwise) };
                    debug_assert!(da.closed != db.closed, "line split into two lines");
                    push(ta, tb, &mut outs);
                }
            }
        } else {
            rule = format!("{} ⊗ {} -> merge", t1.symbol(), t2.symbol());
            let (mut n0, mut n1) = (l0.to_vec(), l1.to_vec());
            let result = match (t1, t2) {
                (AntiClockwise, AntiClockwise) => Some(AntiClockwise),
                (AntiClockwise, Clockwise) | (Clockwise, AntiClockwise) => Some(Clockwise),
                (Clockwise, Clockwise) => None,
                (AntiClockwise, Line) | (Line, AntiClockwise) => Some(Line),
                (Clockwise, Line) | (Line, Clockwise) => None,
                (Line, Line) => {
                    let dir = |c: &Comp| {
                        let ls: Vec<Label> = c.ends.iter().map(|&e| Self::label(l0, l1, e)).collect();
                        if ls.iter().all(|&l| l == Label::Up) {
                            Some(Label::Up)
                        } else if ls.iter().all(|&l| l == Label::Down) {
                            Some(Label::Down)
                        } else {
                            None
                        }
                    };
                    match (dir(&c1), dir(&c2)) {
                        (Some(a), Some(b)) if a != b => Some(Line),
                        _ => None,
                    }
                }
            };
            if let Some(t) = result {
                let ok = if t == Line {
                    let mut ok = true;
                    for c in [&da, &db] {
                        if !c.closed {
                            ok &= self.orient_line(c, l0, l1, &mut n0, &mut n1);
                        }
                    }
                    ok
                } else {
                    debug_assert!(merged);
                    self.orient_circle(&da, t, &mut n0, &mut n1)
                };
                debug_assert!(ok, "inconsistent orientation after merge");
                if ok {
                    outs.push((n0, n1));
                }
            }
        }
        self.middle[i] = saved.0;
        self.middle[j] = saved.1;
        (rule, outs)
    }

    fn panel(&self, terms: &[(Vec<Label>, Vec<Label>, i64)], rule: Option<String>) -> TracePanel {
        TracePanel {
            bottom: self.bottom.clone(),
            top: self.top.clone(),
            middle: self.middle.clone(),
            terms: terms.to_vec(),
            rule,
        }
    }
}

/// Finite rational linear combination of basis vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AlgebraElement {
    terms: BTreeMap<BasisVec, Rational>,
}

impl AlgebraElement {
    pub fn zero() -> Self {
        AlgebraElement::default()
    }

    pub fn basis(v: BasisVec) -> Self {
        let mut e = AlgebraElement::zero();
        e.terms.insert(v, Rational::one());
        e
    }

    pub fn from_terms<I: IntoIterator<Item = (BasisVec, Rational)>>(it: I) -> Self {
        let mut e = AlgebraElement::zero();
        for (v, c) in it {
            e.add_term(v, c);
        }
        e
    }

    pub fn add_term(&mut self, v: BasisVec, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&v) {
            Some(x) => {
                *x += c;
                if x.is_zero() {
                    self.terms.remove(&v);
                }
            }
            None => {
                self.terms.insert(v, c);
            }
        }
    }

    pub fn terms(&self) -> &BTreeMap<BasisVec, Rational> {
        &self.terms
    }

    pub fn coeff(&self, v: BasisVec) -> Rational {
        self.terms.get(&v).cloned().unwrap_or_else(Rational::zero)
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

    pub fn scaled(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return AlgebraElement::zero();
        }
        AlgebraElement { terms: self.terms.iter().map(|(v, x)| (*v, x * c)).collect() }
    }

    pub fn add_scaled(&mut self, other: &AlgebraElement, c: &Rational) {
        for (v, x) in &other.terms {
            self.add_term(*v, x * c);
        }
    }

    pub fn plus(&self, other: &AlgebraElement) -> Self {
        let mut r = self.clone();
        r.add_scaled(other, &Rational::one());
        r
    }

    pub fn minus(&self, other: &AlgebraElement) -> Self {
        let mut r = self.clone();
        r.add_scaled(other, &-Rational::one());
        r
    }

    pub fn neg(&self) -> Self {
        self.scaled(&-Rational::one())
    }

    /// Homogeneous components by degree.
    pub fn by_degree(&self, block: &Block) -> BTreeMap<usize, AlgebraElement> {
        let mut out: BTreeMap<usize, AlgebraElement> = BTreeMap::new();
        for (v, c) in &self.terms {
            out.entry(block.degree(*v)).or_default().add_term(*v, c.clone());
        }
        out
    }

    /// The degree if the element is nonzero and homogeneous.
    pub fn homogeneous_degree(&self, block: &Block) -> Option<usize> {
        let mut it = self.terms.keys().map(|v| block.degree(*v));
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    /// Largest absolute value of a coefficient.
    pub fn max_abs(&self) -> Rational {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(Rational::zero)
    }

    pub fn to_text(&self, block: &Block) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(v, c)| format!("{} * [{}]", c, block.diagram(*v).to_text())).collect();
        parts.join(" + ")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatchingKind {
    /// Cap at `(i, i+1)` on the lower line `Λ`, upper line `Γ`.
    T,
    /// Cup at `(i, i+1)` hanging from the upper line `Λ`, lower line `Γ`.
    TStar,
}

/// The matchings `t_i` and `t_i*` between `Λ = Λ_m^n` and `Γ = Λ_{m-1}^{n-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Matching {
    pub kind: MatchingKind,
    pub i: usize,
    /// Block of `Λ`.
    pub source: (usize, usize),
    /// Block of `Γ`.
    pub target: (usize, usize),
}

impl Matching {
    pub fn t(i: usize, m: usize, n: usize) -> Result<Self, AlgebraError> {
        Self::make(MatchingKind::T, i, m, n)
    }

    pub fn t_star(i: usize, m: usize, n: usize) -> Result<Self, AlgebraError> {
        Self::make(MatchingKind::TStar, i, m, n)
    }

    fn make(kind: MatchingKind, i: usize, m: usize, n: usize) -> Result<Self, AlgebraError> {
        if m == 0 || n == 0 || i + 1 >= m + n {
            return Err(AlgebraError::BlockMismatch(format!("no matching t_{i} on block ({m},{n})")));
        }
        Ok(Matching { kind, i, source: (m, n), target: (m - 1, n - 1) })
    }

    fn sizes(&self) -> (usize, usize) {
        let big = self.source.0 + self.source.1;
        match self.kind {
            MatchingKind::T => (big, big - 2),
            MatchingKind::TStar => (big - 2, big),
        }
    }

    /// Number of caps on the lower line.
    pub fn caps(&self) -> usize {
        (self.kind == MatchingKind::T) as usize
    }

    /// Number of cups on the upper line.
    pub fn cups(&self) -> usize {
        (self.kind == MatchingKind::TStar) as usize
    }
}

/// Removes the upper number line of `t` glued below `cap`: returns the cap
/// diagram induced on the lower line and the number of closed circles that
/// no longer meet it.
pub fn upper_reduction(t: &Matching, cap: &CapDiagram) -> Result<(CapDiagram, usize), AlgebraError> {
    let (lower, upper) = t.sizes();
    if cap.size() != upper {
        return Err(AlgebraError::BlockMismatch(format!(
            "cap diagram on {} vertices, matching needs {upper}",
            cap.size()
        )));
    }
    // Arcs hanging below the upper line, and straight strands.
    let mut up_cup = vec![None; upper];
    let mut strand_up = vec![None; lower];
    let mut strand_down = vec![None; upper];
    let mut low_cap = vec![None; lower];
    let i = t.i;
    match t.kind {
        MatchingKind::T => {
            low_cap[i] = Some(i + 1);
            low_cap[i + 1] = Some(i);
            let mut u = 0;
            for x in 0..lower {
                if x == i || x == i + 1 {
                    continue;
                }
                strand_up[x] = Some(u);
                strand_down[u] = Some(x);
                u += 1;
            }
        }
        MatchingKind::TStar => {
            up_cup[i] = Some(i + 1);
            up_cup[i + 1] = Some(i);
            let mut l = 0;
            for x in 0..upper {
                if x == i || x == i + 1 {
                    continue;
                }
                strand_down[x] = Some(l);
                strand_up[l] = Some(x);
                l += 1;
            }
        }
    }
    let mut result: Vec<Option<usize>> = vec![None; lower];
    for x in 0..lower {
        if let Some(y) = low_cap[x] {
            result[x] = Some(y);
            continue;
        }
        // Walk up from the strand at x until returning to the lower line or
        // escaping through a ray.
        let mut u = strand_up[x].unwrap();
        loop {
            match cap.partner(u) {
                None => break,
                Some(v) => match strand_down[v] {
                    Some(y) => {
                        result[x] = Some(y);
                        break;
                    }
                    None => u = up_cup[v].expect("upper vertex without strand or cup"),
                },
            }
        }
    }
    let mut visited = vec![false; upper];
    for x in 0..lower {
        if let Some(mut u) = strand_up[x] {
            visited[u] = true;
            while let Some(v) = cap.partner(u) {
                visited[v] = true;
                match up_cup[v] {
                    Some(w) => {
                        visited[w] = true;
                        u = w;
                    }
                    None => break,
                }
            }
        }
    }
    // Remaining upper vertices form components away from the lower line.
    let mut circles = 0;
    for s in 0..upper {
        if visited[s] {
            continue;
        }
        let mut closed = true;
        let mut u = s;
        let mut via_cap = true;
        let mut seen = vec![s];
        visited[s] = true;
        loop {
            let nx = if via_cap { cap.partner(u) } else { up_cup[u] };
            match nx {
                None => {
                    closed = false;
                    break;
                }
                Some(v) if v == s => break,
                Some(v) => {
                    visited[v] = true;
                    seen.push(v);
                    u = v;
                    via_cap = !via_cap;
                }
            }
        }
        if !closed {
            let mut u = s;
            loop {
                match up_cup[u] {
                    None => break,
                    Some(v) => {
                        visited[v] = true;
                        match cap.partner(v) {
                            None => break,
                            Some(w) => {
                                visited[w] = true;
                                u = w;
                            }
                        }
                    }
                }
            }
        }
        if closed {
            circles += 1;
        }
    }
    let cups: Vec<(usize, usize)> =
        (0..lower).filter_map(|x| result[x].filter(|&y| y > x).map(|y| (x, y))).collect();
    Ok((CupDiagram::new(lower, &cups)?, circles))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Weight {
        s.parse().unwrap()
    }

    #[test]
    fn figure_multiplication() {
        let blk = Block::get(3, 2);
        let a = CupDiagram::new(5, &[(0, 3), (1, 2)]).unwrap();
        let b = CupDiagram::new(5, &[(1, 2), (3, 4)]).unwrap();
        let d = CupDiagram::new(5, &[(0, 3), (1, 2)]).unwrap();
        let x = blk.from_diagram(&OrientedCircleDiagram::new(a.clone(), w("vv^^v"), b.clone()).unwrap()).unwrap();
        let y = blk.from_diagram(&OrientedCircleDiagram::new(b, w("vv^^v"), d.clone()).unwrap()).unwrap();
        let prod = blk.multiply(&AlgebraElement::basis(x), &AlgebraElement::basis(y));
        let expect = blk.from_diagram(&OrientedCircleDiagram::new(a, w("^v^vv"), d).unwrap()).unwrap();
        assert_eq!(prod, AlgebraElement::basis(expect));
        for order in [PickOrder::Leftmost, PickOrder::Rightmost, PickOrder::Seeded(3)] {
            assert_eq!(blk.multiply_with_order(x, y, order), vec![(expect.mid, 1)]);
        }
        assert_eq!(blk.surgery_trace(x, y).len(), 3);
    }

    #[test]
    fn idempotents() {
        let blk = Block::get(3, 1);
        for l in 0..blk.size() {
            let e = blk.idempotent(l);
            assert_eq!(blk.multiply(&e, &e), e);
            for k in 0..blk.size() {
                if k != l {
                    assert!(blk.multiply(&e, &blk.idempotent(k)).is_zero());
                }
            }
        }
        for v in blk.basis() {
            let x = AlgebraElement::basis(v);
            let mut one = AlgebraElement::zero();
            for l in 0..blk.size() {
                one = one.plus(&blk.idempotent(l));
            }
            assert_eq!(blk.multiply(&one, &x), x);
            assert_eq!(blk.multiply(&x, &one), x);
        }
    }

    #[test]
    fn n1_down_up_product() {
        let m = 4;
        let blk = Block::get(m, 1);
        for j in 1..m {
            let l = blk.index_of(&Weight::from_j(m, j).unwrap()).unwrap();
            let u = blk.index_of(&Weight::from_j(m, j + 1).unwrap()).unwrap();
            let lo = blk.index_of(&Weight::from_j(m, j - 1).unwrap()).unwrap();
            let x = BasisVec::new(l, l, u);
            let y = BasisVec::new(u, l, l);
            assert!(blk.is_basis(x) && blk.is_basis(y));
            let p = blk.multiply(&AlgebraElement::basis(x), &AlgebraElement::basis(y));
            assert_eq!(p, AlgebraElement::basis(BasisVec::new(l, lo, l)));
        }
    }

    #[test]
    fn n2_down_up_product() {
        let m = 4;
        let nn = 4;
        let blk = Block::get(m, 2);
        let idx = |k: usize, l: usize| blk.index_of(&Weight::from_kl(m, k, l).unwrap()).unwrap();
        let lam = idx(nn, nn - 2);
        let mu = idx(nn, nn - 1);
        let x = BasisVec::new(lam, lam, mu);
        let y = BasisVec::new(mu, lam, lam);
        let p = blk.multiply(&AlgebraElement::basis(x), &AlgebraElement::basis(y));
        let expect = AlgebraElement::basis(BasisVec::new(lam, idx(nn, nn - 3), lam))
            .plus(&AlgebraElement::basis(BasisVec::new(lam, idx(nn - 1, nn - 2), lam)));
        assert_eq!(p, expect);
    }

    #[test]
    fn small_dimensions() {
        let blk = Block::get(3, 1);
        let one = blk.index_of(&Weight::from_j(3, 1).unwrap()).unwrap();
        assert_eq!(blk.hom_mids(one, one).len(), 2);
        assert_eq!(Block::get(0, 3).dim(), 1);
        let blk = Block::get(3, 2);
        for a in 0..blk.size() {
            for b in 0..blk.size() {
                assert!(blk.hom_basis_in_degree(a, b, 1).len() <= 1);
            }
        }
    }

    #[test]
    fn functor_preserves_identity() {
        let g = Block::get(1, 1);
        let big = Block::get(2, 2);
        for i in 0..=g.width() {
            for l in 0..g.size() {
                let img = g.functor_image(i, &g.idempotent(l)).unwrap();
                let li = g.inserted_index(i, l);
                assert_eq!(img, big.idempotent(li));
            }
        }
    }

    #[test]
    fn upper_reduction_figure() {
        let t = Matching::t_star(1, 3, 2).unwrap();
        let cap = CupDiagram::new(5, &[(0, 3), (1, 2)]).unwrap();
        let (red, circles) = upper_reduction(&t, &cap).unwrap();
        assert_eq!(red, CupDiagram::new(3, &[(0, 1)]).unwrap());
        assert_eq!(circles, 1);
    }

    #[test]
    fn upper_reduction_t_i_keeps_circles() {
        for (m, n) in [(2, 1), (2, 2), (3, 2)] {
            let g = Block::get(m - 1, n - 1);
            for i in 0..m + n - 1 {
                let t = Matching::t(i, m, n).unwrap();
                for lp in g.weights() {
                    let (red, circles) = upper_reduction(&t, &associated_cup_diagram(lp)).unwrap();
                    assert_eq!(circles, 0);
                    assert_eq!(red, associated_cup_diagram(&lp.inserted(i)));
                }
            }
        }
    }
}
