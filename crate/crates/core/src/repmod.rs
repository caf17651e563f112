//! Cell, projective and simple modules; q-decomposition numbers, the graded
//! Cartan matrix and the combinatorial Kazhdan–Lusztig polynomials.

use std::collections::HashMap;

use num_traits::One;

use crate::arcalg::{AlgebraElement, BasisVec, Block};
use crate::diagrams::{associated_cup_diagram, bruhat_leq, is_oriented_half, relative_length, Weight};
use crate::exact::{QPoly, SparseMatrix};
use crate::Rational;

/// `d_{λ,μ}(q)`: `q^{deg(λ̲μ)}` if `λ̲μ` is oriented, else 0.
pub fn decomposition_poly(lambda: &Weight, mu: &Weight) -> QPoly {
    let c = associated_cup_diagram(lambda);
    if !is_oriented_half(&c, mu) {
        return QPoly::zero();
    }
    let deg = c.cups().iter().filter(|&&(i, _)| mu.get(i) == crate::Label::Up).count();
    QPoly::q(deg as u32)
}

/// Decomposition matrix of a block, indexed by weight indices.
pub fn decomposition_matrix(block: &Block) -> Vec<Vec<QPoly>> {
    let ws = block.weights();
    ws.iter().map(|l| ws.iter().map(|m| decomposition_poly(l, m)).collect()).collect()
}

/// `c_{λ,μ}(q)`: graded dimension of `e_λ K e_μ`.
pub fn cartan_poly(block: &Block, lambda: usize, mu: usize) -> QPoly {
    let mut p = QPoly::zero();
    for &v in block.hom_mids(lambda, mu) {
        p.add_term(block.degree(BasisVec::new(lambda, v, mu)) as u32, 1);
    }
    p
}

pub fn cartan_matrix(block: &Block) -> Vec<Vec<QPoly>> {
    (0..block.size()).map(|a| (0..block.size()).map(|b| cartan_poly(block, a, b)).collect()).collect()
}

/// Kazhdan–Lusztig polynomials by the deletion/swap recursion, always
/// reducing at the smallest admissible index.
pub fn kl_poly_recursive(lambda: &Weight, mu: &Weight) -> QPoly {
    let mut memo = HashMap::new();
    kl_rec(lambda, mu, None, &mut memo)
}

/// As [`kl_poly_recursive`] but reducing at index `i` in the first step.
/// Returns `None` if `λ` has no `v^` at `(i, i+1)` while the recursion
/// would need one.
pub fn kl_poly_recursive_at(lambda: &Weight, mu: &Weight, i: usize) -> Option<QPoly> {
    if lambda == mu || !bruhat_leq(lambda, mu) {
        return Some(kl_poly_recursive(lambda, mu));
    }
    if !lambda.has_down_up_at(i) {
        return None;
    }
    let mut memo = HashMap::new();
    Some(kl_rec(lambda, mu, Some(i), &mut memo))
}

fn kl_rec(lambda: &Weight, mu: &Weight, first: Option<usize>, memo: &mut HashMap<(Weight, Weight), QPoly>) -> QPoly {
    if lambda == mu {
        return QPoly::one();
    }
    if !bruhat_leq(lambda, mu) {
        return QPoly::zero();
    }
    if first.is_none() {
        if let Some(p) = memo.get(&(lambda.clone(), mu.clone())) {
            return p.clone();
        }
    }
    let i = first.unwrap_or_else(|| lambda.first_down_up().expect("λ < μ forces a v^ pair"));
    let swapped = lambda.swapped(i);
    let mut p = kl_rec(&swapped, mu, None, memo).shift(1);
    if mu.has_down_up_at(i) {
        p = &p + &kl_rec(&lambda.deleted(i), &mu.deleted(i), None, memo);
    }
    if first.is_none() {
        memo.insert((lambda.clone(), mu.clone()), p.clone());
    }
    p
}

/// Kazhdan–Lusztig polynomials from labelled cap diagrams:
/// `q^{l(λ)−l(μ)} Σ_{C ∈ D(λ,μ)} q^{−2|C|}`.
pub fn kl_poly_closed(lambda: &Weight, mu: &Weight) -> QPoly {
    if !bruhat_leq(lambda, mu) {
        return QPoly::zero();
    }
    let cap = associated_cup_diagram(mu);
    let caps = cap.cups();
    // parent[c]: index of the smallest cap strictly containing cap c.
    let parent: Vec<Option<usize>> = caps
        .iter()
        .map(|&(a, b)| {
            caps.iter()
                .enumerate()
                .filter(|(_, &(c, d))| c < a && b < d)
                .min_by_key(|(_, &(c, d))| d - c)
                .map(|(k, _)| k)
        })
        .collect();
    let inner: Vec<bool> =
        caps.iter().map(|&(a, b)| !caps.iter().any(|&(c, d)| a < c && d < b)).collect();
    let bound: Vec<i64> = caps
        .iter()
        .enumerate()
        .map(|(k, &(a, _))| if inner[k] { relative_length(a, lambda, mu) } else { i64::MAX })
        .collect();
    // Caps ordered outermost first so parents are labelled before children.
    let mut order: Vec<usize> = (0..caps.len()).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(caps[k].1 - caps[k].0));
    let base = lambda.length() as i64 - mu.length() as i64;
    let mut labels = vec![0i64; caps.len()];
    let mut out = QPoly::zero();
    fn rec(
        pos: usize,
        order: &[usize],
        parent: &[Option<usize>],
        bound: &[i64],
        labels: &mut Vec<i64>,
        base: i64,
        out: &mut QPoly,
    ) {
        if pos == order.len() {
            let total: i64 = labels.iter().sum();
            let e = base - 2 * total;
            assert!(e >= 0, "negative exponent in Kazhdan–Lusztig polynomial");
            out.add_term(e as u32, 1);
            return;
        }
        let k = order[pos];
        let lo = parent[k].map_or(0, |p| labels[p]);
        // Children force an upper bound through the minimum of the inner
        // bounds below; labels above that bound admit no completion.
        let hi = subtree_bound(k, parent, bound).min(base / 2 + 1);
        let mut v = lo;
        while v <= hi {
            labels[k] = v;
            rec(pos + 1, order, parent, bound, labels, base, out);
            v += 1;
        }
        labels[k] = 0;
    }
    fn subtree_bound(k: usize, parent: &[Option<usize>], bound: &[i64]) -> i64 {
        let mut b = bound[k];
        for (c, p) in parent.iter().enumerate() {
            if *p == Some(k) {
                b = b.min(subtree_bound(c, parent, bound));
            }
        }
        b
    }
    rec(0, &order, &parent, &bound, &mut labels, base, &mut out);
    out
}

/// Kazhdan–Lusztig table of a block, `entries[λ][μ]`.
pub fn kl_table(block: &Block) -> Vec<Vec<QPoly>> {
    let ws = block.weights();
    ws.iter().map(|l| ws.iter().map(|m| kl_poly_recursive(l, m)).collect()).collect()
}

/// One basis vector of a module realised inside a projective: the diagram
/// `(λ̲_left ν_mid λ̄_right)`.
pub type ModuleBasis = BasisVec;

/// A finite dimensional graded left module given by an explicit basis of
/// diagrams and the surgery action.
#[derive(Clone, Debug)]
pub struct GradedModule {
    pub m: usize,
    pub n: usize,
    pub basis: Vec<ModuleBasis>,
    pub degrees: Vec<i64>,
    /// For cell modules: the fixed middle weight kept in the quotient.
    cell: Option<usize>,
}

impl GradedModule {
    /// `P(λ) = K e_λ` with basis `(α̲ ν λ̄)`.
    pub fn projective(block: &Block, lambda: usize) -> Self {
        let mut basis = Vec::new();
        for a in 0..block.size() {
            for &v in block.hom_mids(a, lambda) {
                basis.push(BasisVec::new(a, v, lambda));
            }
        }
        let degrees = basis.iter().map(|b| block.degree(*b) as i64).collect();
        GradedModule { m: block.m, n: block.n, basis, degrees, cell: None }
    }

    /// `M(μ)`: the quotient of `P(μ)` by the span of `(α̲ ν μ̄)` with `ν ≠ μ`,
    /// with basis `(α̲ μ μ̄)`.
    pub fn cell(block: &Block, mu: usize) -> Self {
        let basis: Vec<BasisVec> = (0..block.size())
            .filter(|&a| block.hom_mids(a, mu).contains(&mu))
            .map(|a| BasisVec::new(a, mu, mu))
            .collect();
        let degrees = basis.iter().map(|b| block.degree(*b) as i64).collect();
        GradedModule { m: block.m, n: block.n, basis, degrees, cell: Some(mu) }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn gdim(&self) -> QPoly {
        let mut p = QPoly::zero();
        for &d in &self.degrees {
            p.add_term(d as u32, 1);
        }
        p
    }

    /// Matrix of the left action of `u` (columns: input basis, rows: output).
    pub fn action(&self, block: &Block, u: &AlgebraElement) -> SparseMatrix<Rational> {
        let pos: HashMap<BasisVec, usize> = self.basis.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let mut mat = SparseMatrix::zeros(self.dim(), self.dim());
        for (c, b) in self.basis.iter().enumerate() {
            let prod = block.multiply(u, &AlgebraElement::basis(*b));
            for (v, x) in prod.terms() {
                if let Some(mu) = self.cell {
                    if v.mid != mu {
                        continue;
                    }
                }
                let r = *pos.get(v).expect("product leaves the module");
                mat.add_to(r, c, x.clone());
            }
        }
        mat
    }

    /// Whether `Σ e_λ` acts as the identity.
    pub fn unit_acts_trivially(&self, block: &Block) -> bool {
        let mut one = AlgebraElement::zero();
        for l in 0..block.size() {
            one.add_term(BasisVec::new(l, l, l), Rational::one());
        }
        self.action(block, &one) == SparseMatrix::identity(self.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Weight {
        s.parse().unwrap()
    }

    #[test]
    fn kl_example_both_ways() {
        let mu = w("v^vv^v");
        let lam = w("vvvv^^");
        let expect: QPoly = "q^4 + q^2".parse().unwrap();
        assert_eq!(kl_poly_recursive(&lam, &mu), expect);
        assert_eq!(kl_poly_closed(&lam, &mu), expect);
    }

    #[test]
    fn kl_base_cases() {
        let a = w("v^v^");
        assert_eq!(kl_poly_recursive(&a, &a), QPoly::one());
        assert_eq!(kl_poly_closed(&a, &a), QPoly::one());
        let top = w("^^vv");
        assert!(kl_poly_recursive(&top, &a).is_zero());
        assert!(kl_poly_closed(&top, &a).is_zero());
    }

    #[test]
    fn kl_n1_closed_form() {
        let m = 5;
        for j in 0..=m {
            for s in 0..=j {
                let l = Weight::from_j(m, j).unwrap();
                let u = Weight::from_j(m, s).unwrap();
                assert_eq!(kl_poly_closed(&l, &u), QPoly::q((j - s) as u32));
                assert_eq!(kl_poly_recursive(&l, &u), QPoly::q((j - s) as u32));
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        let m = 4;
        for j in 1..=m {
            let l = Weight::from_j(m, j).unwrap();
            for s in 0..=m {
                let u = Weight::from_j(m, s).unwrap();
                let d = decomposition_poly(&l, &u);
                if s == j {
                    assert_eq!(d, QPoly::one());
                } else if s + 1 == j {
                    assert_eq!(d, QPoly::q(1));
                } else {
                    assert!(d.is_zero());
                }
            }
        }
        let m = 5;
        let l = Weight::from_kl(m, 5, 3).unwrap();
        let u = Weight::from_kl(m, 4, 2).unwrap();
        assert_eq!(decomposition_poly(&l, &u), QPoly::q(2));
    }

    #[test]
    fn cartan_example() {
        let blk = Block::get(3, 1);
        let one = blk.index_of(&Weight::from_j(3, 1).unwrap()).unwrap();
        assert_eq!(cartan_poly(&blk, one, one), "1 + q^2".parse::<QPoly>().unwrap());
    }

    #[test]
    fn module_dimensions() {
        for (m, n) in [(3, 1), (2, 2)] {
            let blk = Block::get(m, n);
            let d = decomposition_matrix(&blk);
            for mu in 0..blk.size() {
                let cell = GradedModule::cell(&blk, mu);
                let mut expect = QPoly::zero();
                for row in &d {
                    expect = &expect + &row[mu];
                }
                assert_eq!(cell.gdim(), expect);
                let proj = GradedModule::projective(&blk, mu);
                let mut expect = QPoly::zero();
                for nu in 0..blk.size() {
                    expect = &expect + &(&d[mu][nu] * &GradedModule::cell(&blk, nu).gdim());
                }
                assert_eq!(proj.gdim(), expect);
                assert!(proj.unit_acts_trivially(&blk));
                assert!(cell.unit_acts_trivially(&blk));
            }
            let top = blk.zero_weight();
            assert_eq!(GradedModule::cell(&blk, top).gdim(), GradedModule::projective(&blk, top).gdim());
        }
    }
}
