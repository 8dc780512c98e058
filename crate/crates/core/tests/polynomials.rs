use gtsec_core::poset::build_all_posets;
use gtsec_core::tutte::{
    alpha_beta, audit_distinctness, graft_residual, rooted_poly, unrooted_poly, verify_recursion,
};
use gtsec_core::{enumerate_trees, BiPoly, Tree};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// subtrees as connected edge subsets, leaf edges read off the degrees
fn edge_subset_oracle(t: &Tree) -> BiPoly {
    let m = t.edge_count();
    let mut out = BiPoly::one();
    for mask in 1u32..(1 << m) {
        let chosen: Vec<(usize, usize)> = (0..m)
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| t.edges()[k])
            .collect();
        let mut deg = vec![0; t.order()];
        for &(a, b) in &chosen {
            deg[a] += 1;
            deg[b] += 1;
        }
        if deg.iter().filter(|&&d| d > 0).count() != chosen.len() + 1 {
            continue;
        }
        let leafy = chosen
            .iter()
            .filter(|&&(a, b)| deg[a] == 1 || deg[b] == 1)
            .count();
        out = &out + &BiPoly::monomial(1, chosen.len() as u32, (chosen.len() - leafy) as u32);
    }
    out
}

fn root_oracle(t: &Tree, root: usize) -> BiPoly {
    let m = t.edge_count();
    let mut out = BiPoly::one();
    for mask in 1u32..(1 << m) {
        let chosen: Vec<(usize, usize)> = (0..m)
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| t.edges()[k])
            .collect();
        let mut deg = vec![0; t.order()];
        for &(a, b) in &chosen {
            deg[a] += 1;
            deg[b] += 1;
        }
        if deg[root] == 0 || deg.iter().filter(|&&d| d > 0).count() != chosen.len() + 1 {
            continue;
        }
        let leafy = (0..t.order()).filter(|&v| v != root && deg[v] == 1).count();
        out = &out + &BiPoly::monomial(1, chosen.len() as u32, (chosen.len() - leafy) as u32);
    }
    out
}

#[test]
fn enumerator_matches_edge_subsets() {
    for n in 2..=9 {
        for t in enumerate_trees(n).unwrap() {
            assert_eq!(unrooted_poly(&t), edge_subset_oracle(&t), "{t}");
            for r in 0..n {
                assert_eq!(
                    rooted_poly(&t, r).unwrap(),
                    root_oracle(&t, r),
                    "{t} at {r}"
                );
            }
        }
    }
}

#[test]
fn recursion_holds_on_every_move_and_chain() {
    for n in 4..=8 {
        let (posets, _) = build_all_posets(n).unwrap();
        for p in &posets {
            for node in &p.nodes {
                for e in node.tree.graftable_edges() {
                    assert!(graft_residual(&node.tree, e).unwrap().is_zero());
                }
            }
            for chain in p.maximal_chains() {
                let r = verify_recursion(p, &chain).unwrap();
                assert!(r.holds && r.residual.is_zero());
                assert_eq!(r.steps, chain.len() - 1);
            }
        }
    }
}

#[test]
fn no_equal_polynomials_under_the_conditions() {
    for n in 4..=8 {
        for p in build_all_posets(n).unwrap().0 {
            let report = audit_distinctness(&p);
            assert!(
                report.violations.is_empty(),
                "n={n}: {:?}",
                report.violations
            );
        }
    }
}

#[test]
fn alpha_matches_structure_from_four() {
    for n in 4..=10 {
        for t in enumerate_trees(n).unwrap() {
            let ab = alpha_beta(&t).unwrap();
            assert_eq!(ab.alpha as usize, t.graftable_edges().len(), "{t}");
            assert_eq!((ab.alpha + ab.beta) as usize, t.leaves().len(), "{t}");
            assert_eq!(ab.internal_edges, t.internal_edge_count());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sum_rule_and_top_term(n in 2usize..=14, seed in any::<u64>()) {
        let t = Tree::random(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let f = unrooted_poly(&t);
        let (one, zero) = (BigInt::from(1), BigInt::from(0));
        let subtrees = f.eval(&one, &one) - 1;
        // each subtree is fixed by its vertex set; count connected sets of size >= 2
        let mut connected = 0u64;
        if n <= 12 {
            for mask in 1u32..(1 << n) {
                if mask.count_ones() >= 2 {
                    let inside = |v: usize| mask >> v & 1 == 1;
                    let edges = t.edges().iter().filter(|&&(a, b)| inside(a) && inside(b)).count();
                    connected += u64::from(edges as u32 + 1 == mask.count_ones());
                }
            }
            prop_assert_eq!(subtrees, BigInt::from(connected));
        }
        prop_assert_eq!(f.eval(&zero, &BigInt::from(7)), one.clone());
        let top = f.t_row(t.edge_count() as u32);
        prop_assert_eq!(top.len(), 1);
        prop_assert_eq!(top.get(&(t.internal_edge_count() as u32)), Some(&one));
        prop_assert_eq!(f.to_z_form().from_z_form(), f);
    }
}
