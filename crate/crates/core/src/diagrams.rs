//! Weights, cup and cap diagrams, orientations and degrees.
//!
//! A weight is a string over `^` (up) and `v` (down) read left to right from
//! position 0. The block `(m, n)` holds the weights with `m` downs and `n`
//! ups; the weight `^..^v..v` is the maximum `λ₀` of the Bruhat order.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Up,
    Down,
}

impl Label {
    pub fn flip(self) -> Label {
        match self {
            Label::Up => Label::Down,
            Label::Down => Label::Up,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Label::Up => '^',
            Label::Down => 'v',
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("malformed weight {0:?}: expected a string over '^' and 'v'")]
    BadWeight(String),
    #[error("weight {weight} does not lie in block (m={m}, n={n})")]
    WrongBlock { weight: String, m: usize, n: usize },
    #[error("malformed diagram {0:?}")]
    BadDiagram(String),
    #[error("invalid diagram: {0}")]
    Invalid(String),
    #[error("diagram is not oriented: {0}")]
    NotOriented(String),
    #[error("index {index} out of range (size {size})")]
    OutOfRange { index: usize, size: usize },
}

/// A sequence of up and down labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Weight {
    labels: Vec<Label>,
}

impl Weight {
    pub fn new(labels: Vec<Label>) -> Self {
        Weight { labels }
    }

    /// The Bruhat maximum `^ⁿ v^m`.
    pub fn zero_weight(m: usize, n: usize) -> Self {
        let mut labels = vec![Label::Up; n];
        labels.extend(std::iter::repeat_n(Label::Down, m));
        Weight { labels }
    }

    /// The weight `(j)` of block `(m, 1)`: a single up at position `j`.
    pub fn from_j(m: usize, j: usize) -> Result<Self, DiagramError> {
        if j > m {
            return Err(DiagramError::OutOfRange { index: j, size: m + 1 });
        }
        let mut labels = vec![Label::Down; m + 1];
        labels[j] = Label::Up;
        Ok(Weight { labels })
    }

    /// The weight `(k|l)` of block `(m, 2)`: ups at positions `l < k`.
    pub fn from_kl(m: usize, k: usize, l: usize) -> Result<Self, DiagramError> {
        if k > m + 1 {
            return Err(DiagramError::OutOfRange { index: k, size: m + 2 });
        }
        if l >= k {
            return Err(DiagramError::Invalid(format!("({k}|{l}) needs l < k")));
        }
        let mut labels = vec![Label::Down; m + 2];
        labels[k] = Label::Up;
        labels[l] = Label::Up;
        Ok(Weight { labels })
    }

    pub fn parse_in_block(s: &str, m: usize, n: usize) -> Result<Self, DiagramError> {
        let w: Weight = s.parse()?;
        if w.m() != m || w.n() != n {
            return Err(DiagramError::WrongBlock { weight: s.to_string(), m, n });
        }
        Ok(w)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> Label {
        self.labels[i]
    }

    /// Number of downs.
    pub fn m(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::Down).count()
    }

    /// Number of ups.
    pub fn n(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::Up).count()
    }

    pub fn up_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == Label::Up).collect()
    }

    /// `Σ_k (p_k − (k−1))` over the up positions `p_1 < … < p_n`.
    pub fn length(&self) -> usize {
        self.up_positions().iter().enumerate().map(|(k, &p)| p - k).sum()
    }

    /// Index `j` of a weight with a single up.
    pub fn j_index(&self) -> Option<usize> {
        match self.up_positions().as_slice() {
            [j] => Some(*j),
            _ => None,
        }
    }

    /// Index `(k, l)` of a weight with two ups at `l < k`.
    pub fn kl_index(&self) -> Option<(usize, usize)> {
        match self.up_positions().as_slice() {
            [l, k] => Some((*k, *l)),
            _ => None,
        }
    }

    /// Whether positions `i, i+1` read `v^`.
    pub fn has_down_up_at(&self, i: usize) -> bool {
        i + 1 < self.len() && self.labels[i] == Label::Down && self.labels[i + 1] == Label::Up
    }

    /// Smallest `i` with `v^` at `(i, i+1)`.
    pub fn first_down_up(&self) -> Option<usize> {
        (0..self.len().saturating_sub(1)).find(|&i| self.has_down_up_at(i))
    }

    /// The weight with positions `i` and `i+1` exchanged.
    pub fn swapped(&self, i: usize) -> Weight {
        let mut w = self.clone();
        w.labels.swap(i, i + 1);
        w
    }

    /// The weight with positions `i, i+1` removed.
    pub fn deleted(&self, i: usize) -> Weight {
        let mut labels = self.labels.clone();
        labels.drain(i..i + 2);
        Weight { labels }
    }

    /// The weight with `v^` inserted at positions `i, i+1`.
    pub fn inserted(&self, i: usize) -> Weight {
        let mut labels = self.labels.clone();
        labels.splice(i..i, [Label::Down, Label::Up]);
        Weight { labels }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.labels {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for Weight {
    type Err = DiagramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let labels = s
            .trim()
            .chars()
            .map(|c| match c {
                '^' => Ok(Label::Up),
                'v' => Ok(Label::Down),
                _ => Err(DiagramError::BadWeight(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Weight { labels })
    }
}

/// All weights of block `(m, n)` sorted by length, then lexicographically
/// with `^` before `v`.
pub fn weights_in_block(m: usize, n: usize) -> Vec<Weight> {
    let total = m + n;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(total);
    fn rec(cur: &mut Vec<Label>, ups: usize, downs: usize, out: &mut Vec<Weight>) {
        if ups == 0 && downs == 0 {
            out.push(Weight::new(cur.clone()));
            return;
        }
        if ups > 0 {
            cur.push(Label::Up);
            rec(cur, ups - 1, downs, out);
            cur.pop();
        }
        if downs > 0 {
            cur.push(Label::Down);
            rec(cur, ups, downs - 1, out);
            cur.pop();
        }
    }
    rec(&mut cur, n, m, &mut out);
    out.sort_by(|a, b| a.length().cmp(&b.length()).then_with(|| a.cmp(b)));
    out
}

/// `ℓ_i(λ, μ)`: downs of `λ` at positions `≤ i` minus downs of `μ` there.
pub fn relative_length(i: usize, lambda: &Weight, mu: &Weight) -> i64 {
    let count = |w: &Weight| w.labels[..=i].iter().filter(|&&l| l == Label::Down).count() as i64;
    count(lambda) - count(mu)
}

/// `λ ≤ μ` in the Bruhat order: `ℓ_i(λ, μ) ≥ 0` for every `i`.
pub fn bruhat_leq(lambda: &Weight, mu: &Weight) -> bool {
    assert_eq!(lambda.len(), mu.len(), "weights from different blocks");
    let mut acc = 0i64;
    for i in 0..lambda.len() {
        if lambda.labels[i] == Label::Down {
            acc += 1;
        }
        if mu.labels[i] == Label::Down {
            acc -= 1;
        }
        if acc < 0 {
            return false;
        }
    }
    true
}

/// A cup diagram: each vertex is either joined to a partner or carries a
/// ray. Cap diagrams use the same representation read in the upper half
/// plane.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CupDiagram {
    partner: Vec<Option<usize>>,
}

/// The mirror image of a cup diagram.
pub type CapDiagram = CupDiagram;

impl CupDiagram {
    /// Builds and validates a diagram on `size` vertices.
    pub fn new(size: usize, cups: &[(usize, usize)]) -> Result<Self, DiagramError> {
        let mut partner = vec![None; size];
        for &(i, j) in cups {
            let (i, j) = (i.min(j), i.max(j));
            if j >= size {
                return Err(DiagramError::OutOfRange { index: j, size });
            }
            if i == j || partner[i].is_some() || partner[j].is_some() {
                return Err(DiagramError::Invalid(format!("vertex used twice in cup ({i},{j})")));
            }
            partner[i] = Some(j);
            partner[j] = Some(i);
        }
        let d = CupDiagram { partner };
        d.validate()?;
        Ok(d)
    }

    /// All rays.
    pub fn rays_only(size: usize) -> Self {
        CupDiagram { partner: vec![None; size] }
    }

    fn validate(&self) -> Result<(), DiagramError> {
        // Non-crossing and no ray inside a cup, checked with a stack.
        let mut stack: Vec<usize> = Vec::new();
        for x in 0..self.size() {
            match self.partner[x] {
                Some(y) if y > x => stack.push(x),
                Some(y) => {
                    if stack.pop() != Some(y) {
                        return Err(DiagramError::Invalid(format!("cups cross at ({y},{x})")));
                    }
                }
                None => {
                    if !stack.is_empty() {
                        return Err(DiagramError::Invalid(format!("ray {x} lies inside a cup")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.partner.len()
    }

    pub fn partner(&self, x: usize) -> Option<usize> {
        self.partner[x]
    }

    /// Cups ordered by their right end points.
    pub fn cups(&self) -> Vec<(usize, usize)> {
        (0..self.size())
            .filter_map(|j| match self.partner[j] {
                Some(i) if i < j => Some((i, j)),
                _ => None,
            })
            .collect()
    }

    pub fn rays(&self) -> Vec<usize> {
        (0..self.size()).filter(|&x| self.partner[x].is_none()).collect()
    }

    pub fn num_cups(&self) -> usize {
        self.cups().len()
    }

    /// Number of cups strictly inside cup `i` (cups numbered by right end
    /// point).
    pub fn nesting(&self, i: usize) -> Result<usize, DiagramError> {
        let cups = self.cups();
        let &(a, b) = cups.get(i).ok_or(DiagramError::OutOfRange { index: i, size: cups.len() })?;
        Ok(cups.iter().filter(|&&(c, d)| a < c && d < b).count())
    }

    /// The diagram with a cup inserted at `(i, i+1)`, shifting later
    /// vertices by two.
    pub fn with_inserted_cup(&self, i: usize) -> CupDiagram {
        let shift = |x: usize| if x >= i { x + 2 } else { x };
        let mut partner = vec![None; self.size() + 2];
        for x in 0..self.size() {
            partner[shift(x)] = self.partner[x].map(shift);
        }
        partner[i] = Some(i + 1);
        partner[i + 1] = Some(i);
        CupDiagram { partner }
    }

    /// Cup diagram text: `cups=(0,3);(1,2) rays=4`.
    pub fn to_text(&self, word: &str) -> String {
        let cups: Vec<String> = self.cups().iter().map(|(i, j)| format!("({i},{j})")).collect();
        let rays: Vec<String> = self.rays().iter().map(|r| r.to_string()).collect();
        format!("{word}={} rays={}", cups.join(";"), rays.join(","))
    }

    /// Parses `cups=(i,j);(k,l) rays=p,q` (or `caps=...`) on `size`
    /// vertices; with `size = None` the size is inferred.
    pub fn parse(s: &str, size: Option<usize>) -> Result<Self, DiagramError> {
        let bad = || DiagramError::BadDiagram(s.to_string());
        let mut cups = Vec::new();
        let mut rays = Vec::new();
        let mut seen_arcs = false;
        let mut seen_rays = false;
        for tok in s.split_whitespace() {
            let (key, val) = tok.split_once('=').ok_or_else(bad)?;
            match key {
                "cups" | "caps" if !seen_arcs => {
                    seen_arcs = true;
                    for part in val.split(';').filter(|p| !p.is_empty()) {
                        let inner = part.strip_prefix('(').and_then(|p| p.strip_suffix(')')).ok_or_else(bad)?;
                        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
                        let a: usize = a.trim().parse().map_err(|_| bad())?;
                        let b: usize = b.trim().parse().map_err(|_| bad())?;
                        cups.push((a, b));
                    }
                }
                "rays" if !seen_rays => {
                    seen_rays = true;
                    for part in val.split(',').filter(|p| !p.is_empty()) {
                        rays.push(part.trim().parse::<usize>().map_err(|_| bad())?);
                    }
                }
                _ => return Err(bad()),
            }
        }
        if !seen_arcs && !seen_rays {
            return Err(bad());
        }
        let inferred = cups.len() * 2 + rays.len();
        let n = size.unwrap_or(inferred);
        if inferred != n {
            return Err(DiagramError::Invalid(format!("diagram covers {inferred} vertices, expected {n}")));
        }
        let d = CupDiagram::new(n, &cups)?;
        let mut want = d.rays();
        want.sort_unstable();
        let mut got = rays.clone();
        got.sort_unstable();
        if want != got {
            return Err(DiagramError::Invalid("rays do not match the free vertices".into()));
        }
        Ok(d)
    }
}

/// `λ̲`: greedily join adjacent `v^` pairs, ignoring joined vertices.
pub fn associated_cup_diagram(lambda: &Weight) -> CupDiagram {
    let mut partner = vec![None; lambda.len()];
    let mut open: Vec<usize> = Vec::new();
    for (x, &l) in lambda.labels.iter().enumerate() {
        match l {
            Label::Down => open.push(x),
            Label::Up => {
                if let Some(i) = open.pop() {
                    partner[i] = Some(x);
                    partner[x] = Some(i);
                }
            }
        }
    }
    CupDiagram { partner }
}

/// `λ̄`, the mirror of `λ̲`.
pub fn associated_cap_diagram(lambda: &Weight) -> CapDiagram {
    associated_cup_diagram(lambda)
}

/// Whether `cλ` is an oriented cup diagram (equivalently `λc*` an oriented
/// cap diagram).
pub fn is_oriented_half(c: &CupDiagram, lambda: &Weight) -> bool {
    if c.size() != lambda.len() {
        return false;
    }
    for (i, j) in c.cups() {
        if lambda.get(i) == lambda.get(j) {
            return false;
        }
    }
    let mut seen_down_ray = false;
    for r in c.rays() {
        match lambda.get(r) {
            Label::Down => seen_down_ray = true,
            Label::Up if seen_down_ray => return false,
            Label::Up => {}
        }
    }
    true
}

/// Number of clockwise cups of `cλ` (left end point labelled up).
pub fn half_degree(c: &CupDiagram, lambda: &Weight) -> Result<usize, DiagramError> {
    if !is_oriented_half(c, lambda) {
        return Err(DiagramError::NotOriented(format!("{} with {}", c.to_text("cups"), lambda)));
    }
    Ok(c.cups().iter().filter(|&&(i, _)| lambda.get(i) == Label::Up).count())
}

/// An oriented circle diagram `aλb`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedCircleDiagram {
    pub cup: CupDiagram,
    pub weight: Weight,
    pub cap: CapDiagram,
}

impl OrientedCircleDiagram {
    pub fn new(cup: CupDiagram, weight: Weight, cap: CapDiagram) -> Result<Self, DiagramError> {
        if !is_oriented_half(&cup, &weight) || !is_oriented_half(&cap, &weight) {
            return Err(DiagramError::NotOriented(format!(
                "{} | {} | {}",
                cup.to_text("cups"),
                weight,
                cap.to_text("caps")
            )));
        }
        Ok(OrientedCircleDiagram { cup, weight, cap })
    }

    pub fn degree(&self) -> usize {
        half_degree(&self.cup, &self.weight).unwrap() + half_degree(&self.cap, &self.weight).unwrap()
    }

    pub fn components(&self) -> Vec<Component> {
        components(&self.cup, &self.cap)
    }

    /// Circle diagram text `<cups> | <weight> | <caps>`.
    pub fn to_text(&self) -> String {
        format!("{} | {} | {}", self.cup.to_text("cups"), self.weight, self.cap.to_text("caps"))
    }

    pub fn parse(s: &str) -> Result<Self, DiagramError> {
        let parts: Vec<&str> = s.split('|').map(str::trim).collect();
        let [cup, w, cap] = parts.as_slice() else {
            return Err(DiagramError::BadDiagram(s.to_string()));
        };
        let weight: Weight = w.parse()?;
        let cup = CupDiagram::parse(cup, Some(weight.len()))?;
        let cap = CupDiagram::parse(cap, Some(weight.len()))?;
        OrientedCircleDiagram::new(cup, weight, cap)
    }
}

impl fmt::Display for OrientedCircleDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Circle,
    Line,
}

/// A connected component of a circle diagram, with its vertices in
/// increasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub kind: ComponentKind,
    pub vertices: Vec<usize>,
}

/// Connected components of the diagram obtained by gluing `cup` below
/// `cap`, ordered by leftmost vertex.
pub fn components(cup: &CupDiagram, cap: &CapDiagram) -> Vec<Component> {
    assert_eq!(cup.size(), cap.size(), "cup and cap diagrams of different sizes");
    let n = cup.size();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // Walk in both directions from `start`, alternating cup and cap.
        let mut verts = vec![start];
        seen[start] = true;
        let mut closed = false;
        for first_cup in [true, false] {
            let mut x = start;
            let mut use_cup = first_cup;
            loop {
                let next = if use_cup { cup.partner(x) } else { cap.partner(x) };
                match next {
                    None => break,
                    Some(y) if y == start => {
                        closed = true;
                        break;
                    }
                    Some(y) => {
                        seen[y] = true;
                        verts.push(y);
                        x = y;
                        use_cup = !use_cup;
                    }
                }
            }
            if closed {
                break;
            }
        }
        verts.sort_unstable();
        verts.dedup();
        out.push(Component {
            kind: if closed { ComponentKind::Circle } else { ComponentKind::Line },
            vertices: verts,
        });
    }
    out
}

/// Surgery types: anticlockwise circle `1`, clockwise circle `x`, line `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CircleType {
    AntiClockwise,
    Clockwise,
    Line,
}

impl CircleType {
    pub fn symbol(self) -> &'static str {
        match self {
            CircleType::AntiClockwise => "1",
            CircleType::Clockwise => "x",
            CircleType::Line => "y",
        }
    }
}

/// Type of a component under an orientation: a circle is anticlockwise iff
/// its leftmost vertex is labelled down.
pub fn circle_type(c: &Component, weight: &Weight) -> CircleType {
    match c.kind {
        ComponentKind::Line => CircleType::Line,
        ComponentKind::Circle => match weight.get(c.vertices[0]) {
            Label::Down => CircleType::AntiClockwise,
            Label::Up => CircleType::Clockwise,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Weight {
        s.parse().unwrap()
    }

    #[test]
    fn block_enumeration() {
        let ws = weights_in_block(3, 2);
        assert_eq!(ws.len(), 10);
        assert_eq!(ws[0], w("^^vvv"));
        assert_eq!(weights_in_block(0, 1), vec![w("^")]);
        let ws = weights_in_block(3, 1);
        let js: Vec<usize> = ws.iter().map(|x| x.j_index().unwrap()).collect();
        assert_eq!(js, vec![0, 1, 2, 3]);
    }

    #[test]
    fn lengths() {
        assert_eq!(Weight::zero_weight(3, 2).length(), 0);
        for j in 0..5 {
            assert_eq!(Weight::from_j(4, j).unwrap().length(), j);
        }
        for k in 1..6 {
            for l in 0..k {
                assert_eq!(Weight::from_kl(4, k, l).unwrap().length(), k + l - 1);
            }
        }
    }

    #[test]
    fn relative_length_examples() {
        let a = Weight::from_j(3, 2).unwrap();
        let b = Weight::from_j(3, 0).unwrap();
        assert_eq!(relative_length(1, &a, &b), 1);
        for i in 0..4 {
            assert_eq!(relative_length(i, &a, &a), 0);
        }
        assert!(bruhat_leq(&a, &Weight::from_j(3, 1).unwrap()));
        assert!(!bruhat_leq(&Weight::from_j(3, 1).unwrap(), &a));
    }

    #[test]
    fn associated_cups() {
        let c = associated_cup_diagram(&w("^v^vv^v"));
        assert_eq!(c.cups(), vec![(1, 2), (4, 5)]);
        assert_eq!(c.rays(), vec![0, 3, 6]);
        assert!(associated_cup_diagram(&w("^^vvv")).cups().is_empty());
        for j in 1..4 {
            let c = associated_cup_diagram(&Weight::from_j(3, j).unwrap());
            assert_eq!(c.cups(), vec![(j - 1, j)]);
        }
    }

    #[test]
    fn degrees_and_orientation() {
        for m in 0..4 {
            for n in 0..4 {
                for l in weights_in_block(m, n) {
                    assert_eq!(half_degree(&associated_cup_diagram(&l), &l).unwrap(), 0);
                }
            }
        }
        let lam = Weight::from_j(3, 2).unwrap();
        let mu = Weight::from_j(3, 1).unwrap();
        assert_eq!(half_degree(&associated_cup_diagram(&lam), &mu).unwrap(), 1);
    }

    #[test]
    fn figure_circle_diagram_components() {
        let cup = CupDiagram::new(7, &[(2, 5), (3, 4)]).unwrap();
        let cap = CupDiagram::new(7, &[(0, 1), (2, 3), (4, 5)]).unwrap();
        let d = OrientedCircleDiagram::new(cup, w("^vv^v^v"), cap).unwrap();
        let comps = d.components();
        let circles = comps.iter().filter(|c| c.kind == ComponentKind::Circle).count();
        let lines = comps.iter().filter(|c| c.kind == ComponentKind::Line).count();
        assert_eq!((circles, lines), (1, 2));
    }

    #[test]
    fn small_circle_types() {
        let c = CupDiagram::new(2, &[(0, 1)]).unwrap();
        let comps = components(&c, &c);
        assert_eq!(comps.len(), 1);
        assert_eq!(circle_type(&comps[0], &w("v^")), CircleType::AntiClockwise);
        assert_eq!(circle_type(&comps[0], &w("^v")), CircleType::Clockwise);
        let rays = CupDiagram::rays_only(4);
        let comps = components(&rays, &rays);
        assert_eq!(comps.len(), 4);
        assert!(comps.iter().all(|c| c.kind == ComponentKind::Line));
    }

    #[test]
    fn nesting_counts() {
        let d = CupDiagram::new(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!((d.nesting(0).unwrap(), d.nesting(1).unwrap()), (0, 0));
        let d = CupDiagram::new(4, &[(0, 3), (1, 2)]).unwrap();
        assert_eq!((d.nesting(0).unwrap(), d.nesting(1).unwrap()), (0, 1));
        assert!(d.nesting(2).is_err());
    }

    #[test]
    fn grammar_round_trip() {
        let d = CupDiagram::new(5, &[(0, 3), (1, 2)]).unwrap();
        let s = d.to_text("cups");
        assert_eq!(s, "cups=(1,2);(0,3) rays=4");
        assert_eq!(CupDiagram::parse(&s, Some(5)).unwrap(), d);
        assert!(CupDiagram::parse("cups=(0,2);(1,3) rays=", Some(4)).is_err());
        assert!(CupDiagram::parse("cups=(0,2) rays=1", Some(3)).is_err());
        let ocd = OrientedCircleDiagram::parse("cups=(0,1) rays=2 | v^v | caps=(0,1) rays=2").unwrap();
        assert_eq!(OrientedCircleDiagram::parse(&ocd.to_text()).unwrap(), ocd);
        assert!(OrientedCircleDiagram::parse("cups=(0,1) rays=2 | vv^ | caps=(0,1) rays=2").is_err());
    }
}
