use arcext::arcalg::{AlgebraElement, BasisVec, Block, PickOrder};
use proptest::prelude::*;

fn assoc_exhaustive(m: usize, n: usize) {
    let blk = Block::get(m, n);
    let basis = blk.basis();
    for &x in &basis {
        for &y in basis.iter().filter(|y| y.left == x.right) {
            let xy = blk.multiply(&AlgebraElement::basis(x), &AlgebraElement::basis(y));
            for &z in basis.iter().filter(|z| z.left == y.right) {
                let yz = blk.multiply(&AlgebraElement::basis(y), &AlgebraElement::basis(z));
                let l = blk.multiply(&xy, &AlgebraElement::basis(z));
                let r = blk.multiply(&AlgebraElement::basis(x), &yz);
                assert_eq!(l, r, "associativity fails on {x:?} {y:?} {z:?}");
            }
        }
    }
}

#[test]
fn associativity_exhaustive_small_blocks() {
    assoc_exhaustive(2, 1);
    assoc_exhaustive(1, 2);
    assoc_exhaustive(2, 2);
}

#[test]
fn degree_additivity_and_order_independence_exhaustive() {
    for (m, n) in [(2, 1), (2, 2), (3, 1)] {
        let blk = Block::get(m, n);
        let basis = blk.basis();
        for &x in &basis {
            for &y in basis.iter().filter(|y| y.left == x.right) {
                let canon = blk.multiply_with_order(x, y, PickOrder::Leftmost);
                for (mid, c) in &canon {
                    assert!(*c > 0);
                    assert_eq!(blk.degree(BasisVec::new(x.left, *mid, y.right)), blk.degree(x) + blk.degree(y));
                }
                assert_eq!(canon, blk.multiply_with_order(x, y, PickOrder::Rightmost));
                for s in 0..3 {
                    assert_eq!(canon, blk.multiply_with_order(x, y, PickOrder::Seeded(s)));
                }
            }
        }
    }
}

#[test]
fn idempotent_decomposition_dimensions() {
    for (m, n) in [(2, 1), (3, 1), (2, 2), (3, 2)] {
        let blk = Block::get(m, n);
        let mut total = 0;
        for a in 0..blk.size() {
            for b in 0..blk.size() {
                let direct = blk
                    .weights()
                    .iter()
                    .filter(|nu| {
                        arcext::diagrams::OrientedCircleDiagram::new(blk.cup(a).clone(), (*nu).clone(), blk.cup(b).clone())
                            .is_ok()
                    })
                    .count();
                assert_eq!(direct, blk.hom_mids(a, b).len());
                total += direct;
            }
        }
        assert_eq!(total, blk.dim());
    }
}

fn composable_triple(blk: &Block, seed: [usize; 6]) -> Option<(BasisVec, BasisVec, BasisVec)> {
    let k = blk.size();
    let (a, b, c, d) = (seed[0] % k, seed[1] % k, seed[2] % k, seed[3] % k);
    let pick = |l: usize, r: usize, s: usize| {
        let mids = blk.hom_mids(l, r);
        (!mids.is_empty()).then(|| BasisVec::new(l, mids[s % mids.len()], r))
    };
    Some((pick(a, b, seed[4])?, pick(b, c, seed[5])?, pick(c, d, seed[4] + seed[5])?))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]
    #[test]
    fn associativity_sampled_3_2(seed in proptest::array::uniform6(0usize..1000)) {
        let blk = Block::get(3, 2);
        if let Some((x, y, z)) = composable_triple(&blk, seed) {
            let (x, y, z) = (AlgebraElement::basis(x), AlgebraElement::basis(y), AlgebraElement::basis(z));
            let l = blk.multiply(&blk.multiply(&x, &y), &z);
            let r = blk.multiply(&x, &blk.multiply(&y, &z));
            prop_assert_eq!(l, r);
        }
    }

    #[test]
    fn order_independence_sampled_3_2(seed in proptest::array::uniform6(0usize..1000), s in 0u64..1000) {
        let blk = Block::get(3, 2);
        if let Some((x, y, _)) = composable_triple(&blk, seed) {
            prop_assert_eq!(
                blk.multiply_with_order(x, y, PickOrder::Leftmost),
                blk.multiply_with_order(x, y, PickOrder::Seeded(s))
            );
        }
    }
}
