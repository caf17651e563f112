use arcext::arcalg::Block;
use arcext::diagrams::{associated_cup_diagram, bruhat_leq, weights_in_block};
use arcext::exact::QPoly;
use arcext::repmod::{
    cartan_matrix, decomposition_matrix, kl_poly_closed, kl_poly_recursive, kl_poly_recursive_at, GradedModule,
};

fn blocks_up_to(total: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for m in 0..=total {
        for n in 0..=total - m {
            out.push((m, n));
        }
    }
    out
}

#[test]
fn kl_definitions_agree_up_to_six_vertices() {
    for (m, n) in blocks_up_to(6) {
        let ws = weights_in_block(m, n);
        for l in &ws {
            for u in &ws {
                let r = kl_poly_recursive(l, u);
                assert_eq!(r, kl_poly_closed(l, u), "λ={l} μ={u}");
                if !r.is_zero() {
                    assert!(r.terms().all(|(_, c)| c > 0));
                }
            }
        }
    }
}

#[test]
fn kl_recursion_is_independent_of_index() {
    for (m, n) in blocks_up_to(6) {
        let ws = weights_in_block(m, n);
        for l in &ws {
            for u in &ws {
                let base = kl_poly_recursive(l, u);
                for i in 0..l.len().saturating_sub(1) {
                    if let Some(p) = kl_poly_recursive_at(l, u, i) {
                        assert_eq!(p, base, "λ={l} μ={u} i={i}");
                    }
                }
            }
        }
    }
}

#[test]
fn kl_support_bound() {
    for (m, n) in blocks_up_to(6) {
        let ws = weights_in_block(m, n);
        for l in &ws {
            for u in &ws {
                let p = kl_poly_recursive(l, u);
                let Some(top) = p.degree() else { continue };
                let diff = l.length() as i64 - u.length() as i64;
                let c = associated_cup_diagram(u);
                let nes: usize = (0..c.num_cups()).map(|i| c.nesting(i).unwrap()).sum();
                let low = diff - (n * n) as i64 + n as i64 + 2 * nes as i64;
                assert!(top as i64 <= diff);
                for (e, _) in p.terms() {
                    assert!(e as i64 >= low.min(diff), "λ={l} μ={u}");
                }
            }
        }
    }
}

#[test]
fn cartan_is_d_dt_and_bounded() {
    for (m, n) in [(3, 1), (4, 1), (2, 2), (3, 2), (2, 3)] {
        let blk = Block::get(m, n);
        let d = decomposition_matrix(&blk);
        let c = cartan_matrix(&blk);
        for a in 0..blk.size() {
            for b in 0..blk.size() {
                let mut s = QPoly::zero();
                for v in 0..blk.size() {
                    s = &s + &(&d[a][v] * &d[b][v]);
                }
                assert_eq!(c[a][b], s);
                assert!(c[a][b].degree().is_none_or(|e| e as usize <= 2 * n));
            }
        }
    }
}

#[test]
fn decomposition_numbers_are_monomials_and_triangular() {
    for (m, n) in blocks_up_to(6) {
        let blk = Block::get(m, n);
        let d = decomposition_matrix(&blk);
        for a in 0..blk.size() {
            assert_eq!(d[a][a], QPoly::one());
            for b in 0..blk.size() {
                assert!(d[a][b].is_monomial());
                if !d[a][b].is_zero() {
                    assert!(bruhat_leq(blk.weight(a), blk.weight(b)));
                    let diff = blk.length(a) as i64 - blk.length(b) as i64;
                    let c = blk.cup(a);
                    let nes: usize = (0..c.num_cups()).map(|i| c.nesting(i).unwrap()).sum();
                    assert!(diff >= 0 && diff <= (n + 2 * nes) as i64 && diff <= (n * n) as i64);
                }
            }
        }
    }
}

#[test]
fn projective_top_degree_at_most_2n() {
    for (m, n) in [(3, 1), (2, 2), (3, 2)] {
        let blk = Block::get(m, n);
        for l in 0..blk.size() {
            let p = GradedModule::projective(&blk, l);
            assert!(p.degrees.iter().all(|&d| d as usize <= 2 * n));
        }
    }
}

#[test]
fn module_actions_respect_grading_and_multiplication() {
    let blk = Block::get(2, 2);
    let basis = blk.basis();
    for l in 0..blk.size() {
        for module in [GradedModule::projective(&blk, l), GradedModule::cell(&blk, l)] {
            for (k, &u) in basis.iter().enumerate() {
                let ue = arcext::arcalg::AlgebraElement::basis(u);
                let a = module.action(&blk, &ue);
                for (r, c, _) in a.entries() {
                    assert_eq!(module.degrees[r], module.degrees[c] + blk.degree(u) as i64);
                }
                if k % 3 == 0 {
                    for &v in basis.iter().filter(|v| v.left == u.right).take(4) {
                        let ve = arcext::arcalg::AlgebraElement::basis(v);
                        let uv = module.action(&blk, &blk.multiply(&ue, &ve));
                        let composed = a.mul(&module.action(&blk, &ve)).unwrap();
                        assert_eq!(uv, composed);
                    }
                }
            }
        }
    }
}
