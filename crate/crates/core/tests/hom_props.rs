use std::sync::{Arc, OnceLock};

use arcext::ainfty::{AInfinity, SplitMode, Splitting};
use arcext::arcalg::Block;
use arcext::diagrams::weights_in_block;
use arcext::extalg::{shelton_dims, HomAlgebra, HomElement, HomSpace};
use arcext::repmod::{kl_poly_closed, kl_poly_recursive};
use arcext::resolve::ResolutionCache;
use arcext::{Rational, Weight};
use proptest::prelude::*;

fn alg() -> &'static Arc<HomAlgebra> {
    static A: OnceLock<Arc<HomAlgebra>> = OnceLock::new();
    A.get_or_init(|| Arc::new(HomAlgebra::new(Block::get(2, 2), &ResolutionCache::in_memory()).unwrap()))
}

fn ainfty() -> &'static AInfinity {
    static M: OnceLock<AInfinity> = OnceLock::new();
    M.get_or_init(|| {
        let s = Arc::new(Splitting::new(alg().clone(), SplitMode::Canonical, None).unwrap());
        AInfinity::compute(s, 4).unwrap()
    })
}

fn nonempty_spaces(source: usize, target: usize) -> Vec<Arc<HomSpace>> {
    alg().spaces(source, target).into_iter().filter(|s| s.dim() > 0).collect()
}

/// Integer combination of basis elements of one space, driven by `coeffs`.
fn element(sp: &HomSpace, coeffs: &[i8]) -> HomElement {
    let mut f = HomElement::zero(sp.key);
    for (i, c) in coeffs.iter().enumerate().take(sp.dim()) {
        f.add_scaled(&sp.basis_element(i), &Rational::from_integer((*c).into()));
    }
    f
}

fn pick<T: Clone>(v: &[T], i: usize) -> Option<T> {
    (!v.is_empty()).then(|| v[i % v.len()].clone())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn weight_strings_round_trip(s in "[v^]{1,8}") {
        let w: Weight = s.parse().unwrap();
        prop_assert_eq!(w.to_string(), s);
    }

    #[test]
    fn kl_definitions_agree_on_random_pairs(m in 0usize..5, n in 0usize..4, i in 0usize..1000, j in 0usize..1000) {
        let ws = weights_in_block(m, n);
        let (l, u) = (&ws[i % ws.len()], &ws[j % ws.len()]);
        prop_assert_eq!(kl_poly_recursive(l, u), kl_poly_closed(l, u));
    }

    #[test]
    fn hom_differential_squares_to_zero(s in 0usize..6, t in 0usize..6, i in 0usize..100, c in prop::collection::vec(-3i8..4, 1..12)) {
        let Some(sp) = pick(&nonempty_spaces(s, t), i) else { return Ok(()) };
        let f = element(&sp, &c);
        let a = alg();
        prop_assert!(a.differential(&a.differential(&f)).is_zero());
        prop_assert!(a.leibniz_differential(&a.leibniz_differential(&f)).is_zero());
    }

    #[test]
    fn leibniz_differential_is_a_derivation(
        s in 0usize..6, u in 0usize..6, t in 0usize..6, i in 0usize..100, j in 0usize..100,
        c in prop::collection::vec(-3i8..4, 1..12), e in prop::collection::vec(-3i8..4, 1..12),
    ) {
        let (Some(x), Some(y)) = (pick(&nonempty_spaces(s, u), i), pick(&nonempty_spaces(u, t), j)) else { return Ok(()) };
        let (f, g) = (element(&x, &c), element(&y, &e));
        let a = alg();
        let lhs = a.leibniz_differential(&a.compose(&f, &g));
        let sign = Rational::from_integer(if f.k % 2 == 0 { 1.into() } else { (-1).into() });
        let rhs = a.compose(&a.leibniz_differential(&f), &g).plus(&a.compose(&f, &a.leibniz_differential(&g)).scaled(&sign));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn n2_ext_matches_shelton_on_random_pairs(i in 0usize..6, j in 0usize..6) {
        let a = alg();
        let blk = a.block();
        let got: std::collections::BTreeMap<i64, i64> =
            a.ext_dims(i, j).into_iter().filter(|&(_, v)| v > 0).map(|(k, v)| (k, v as i64)).collect();
        prop_assert_eq!(got, shelton_dims(blk.weight(i), blk.weight(j)));
    }

    #[test]
    fn higher_products_are_multilinear(seed in prop::collection::vec(0usize..1000, 3), c in -3i64..4) {
        let ai = ainfty();
        let sp = ai.splitting();
        let basis = sp.basis();
        let x = &basis[seed[0] % basis.len()];
        let ys: Vec<_> = basis.iter().filter(|b| b.rep.source == x.rep.target).collect();
        let Some(y) = pick(&ys, seed[1]) else { return Ok(()) };
        let zs: Vec<_> = basis.iter().filter(|b| b.rep.source == y.rep.target).collect();
        let Some(z) = pick(&zs, seed[2]) else { return Ok(()) };
        let k = Rational::from_integer(c.into());
        let one = ai.m_on(&[&x.rep, &y.rep, &z.rep]).unwrap();
        let scaled = ai.m_on(&[&x.rep, &y.rep.scaled(&k), &z.rep]).unwrap();
        let expect: arcext::ainfty::HVec = one.iter().map(|(i, v)| (*i, v * &k)).filter(|(_, v)| *v != Rational::from_integer(0.into())).collect();
        prop_assert_eq!(scaled, expect);
    }
}
