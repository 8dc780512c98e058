//! Acceptance criteria 1-11. Prints one line per criterion and exits non-zero
//! if any fails.

use std::process::ExitCode;
use std::time::Instant;

use gtsec_core::gaussian::{covariance_from_tree, sample_weights_with, WeightedTree};
use gtsec_core::leaders::leaders_structural;
use gtsec_core::poset::{build_all_posets, build_poset, is_comparable, Relation};
use gtsec_core::security::{maximin_restricted, trial_rng};
use gtsec_core::tutte::{alpha_beta, unrooted_poly};
use gtsec_core::verify::{run_suite, Suite, SuiteParams};
use gtsec_core::{canonical_code, enumerate_trees, BiPoly, Tree};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const SEED: u64 = 20_240_501;

fn suite(s: Suite, n: usize, trials: u64) -> Check {
    let r = run_suite(
        s,
        SuiteParams {
            n,
            trials,
            k: 0.5,
            seed: SEED,
        },
    )
    .map_err(|e| e.to_string())?;
    let msg = format!("{} checks, {} failures", r.checked, r.failures);
    if r.passed {
        Ok(msg)
    } else {
        Err(format!("{msg}; details {}", r.details))
    }
}

// --- test-side oracles ---

fn path_covariance(wt: &WeightedTree) -> Vec<Vec<f64>> {
    let t = wt.tree();
    let n = t.order();
    let mut cov = vec![vec![0.0; n]; n];
    for s in 0..n {
        cov[s][s] = 1.0;
        let mut stack = vec![s];
        let mut seen = vec![false; n];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            for &w in t.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    cov[s][w] = cov[s][u] * wt.weight(u, w).unwrap();
                    stack.push(w);
                }
            }
        }
    }
    cov
}

fn maximin_oracle(wt: &WeightedTree) -> f64 {
    let c = path_covariance(wt);
    let n = c.len();
    let mut best = f64::NEG_INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let mut worst = f64::INFINITY;
            for z in (0..n).filter(|&z| z != a && z != b) {
                let num = c[a][b] - c[a][z] * c[b][z];
                let rho2 = num * num / ((1.0 - c[a][z] * c[a][z]) * (1.0 - c[b][z] * c[b][z]));
                worst = worst.min(rho2);
            }
            best = best.max(worst);
        }
    }
    best
}

fn det_oracle(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        let pivot_row = m[col].clone();
        for row in m.iter_mut().skip(col + 1) {
            let f = row[col] / pivot_row[col];
            for (x, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                *x -= f * p;
            }
        }
    }
    det
}

fn structural_alpha(t: &Tree) -> u64 {
    (0..t.order())
        .filter(|&v| t.degree(v) == 1 && t.degree(t.neighbors(v)[0]) == 2)
        .count() as u64
}

// --- criteria ---

fn c1_reference_polynomials() -> Check {
    let poset = build_poset(&Tree::spider(&[1, 2, 3]).unwrap()).map_err(|e| e.to_string())?;
    let reference = [
        ("top", "t^6*y^3 + t^5*y^3 + 2*t^5*y^2 + 3*t^4*y^2 + 2*t^4*y + 5*t^3*y + t^3 + 6*t^2 + 6*t + 1"),
        ("left", "t^6*y^2 + 3*t^5*y^2 + t^5*y + 3*t^4*y^2 + 3*t^4*y + t^4 + 4*t^3*y + 4*t^3 + 8*t^2 + 6*t + 1"),
        ("right", "t^6*y^2 + 3*t^5*y^2 + t^5*y + 2*t^4*y^2 + 5*t^4*y + 6*t^3*y + 2*t^3 + 7*t^2 + 6*t + 1"),
        ("bottom", "t^6*y + 5*t^5*y + 8*t^4*y + t^4 + 6*t^3*y + 5*t^3 + 9*t^2 + 6*t + 1"),
    ];
    let mut computed: Vec<BiPoly> = poset.nodes.iter().map(|n| unrooted_poly(&n.tree)).collect();
    let mut problems = Vec::new();
    for (name, text) in reference {
        let want: BiPoly = text.parse().unwrap();
        match computed.iter().position(|p| *p == want) {
            Some(i) => {
                computed.remove(i);
            }
            None => problems.push(name),
        }
    }
    if problems.is_empty() {
        return Ok("all four polynomials match exactly".into());
    }
    let diffs: Vec<String> = problems
        .iter()
        .map(|name| {
            let want: BiPoly = reference
                .iter()
                .find(|r| r.0 == *name)
                .unwrap()
                .1
                .parse()
                .unwrap();
            let closest = computed
                .iter()
                .min_by_key(|p| (*p - &want).len())
                .expect("a computed polynomial remains");
            format!("{name}: computed minus reference = {}", closest - &want)
        })
        .collect();
    Err(format!(
        "{} of 4 differ; {}",
        problems.len(),
        diffs.join("; ")
    ))
}

fn c2_posets_n7() -> Check {
    let (posets, cov) = build_all_posets(7).map_err(|e| e.to_string())?;
    let mut sizes = cov.sizes.clone();
    sizes.sort_unstable();
    let classes = enumerate_trees(7).unwrap().len();
    if posets.len() != 3 || sizes != [3, 4, 4] || cov.total_classes != 11 || classes != 11 {
        return Err(format!(
            "{} posets with sizes {sizes:?}, {} classes",
            posets.len(),
            cov.total_classes
        ));
    }
    if cov.uncovered != 0 || !cov.disjoint {
        return Err(format!(
            "uncovered {}, overlapping {}",
            cov.uncovered, cov.overlapping
        ));
    }
    let spider = canonical_code(&Tree::spider(&[1, 2, 3]).unwrap());
    let diamond = posets
        .iter()
        .find(|p| p.leader().code == spider)
        .ok_or("spider poset missing")?;
    let middles: Vec<usize> = (0..diamond.len())
        .filter(|&i| i != diamond.leader && i != diamond.lf)
        .collect();
    let diamond_shape = diamond.len() == 4
        && diamond.arcs.len() == 4
        && middles.iter().all(|&m| {
            diamond.parents(m).eq([diamond.leader]) && diamond.children(m).eq([diamond.lf])
        });
    if !diamond_shape {
        return Err("the 4-node poset led by the spider is not a diamond".into());
    }
    let rel = is_comparable(
        diamond,
        &diamond.nodes[middles[0]].code,
        &diamond.nodes[middles[1]].code,
    )
    .map_err(|e| e.to_string())?;
    if rel != Relation::Incomparable {
        return Err(format!("middle nodes related as {rel:?}"));
    }
    Ok("3 posets, sizes [3, 4, 4], 11 classes, disjoint; diamond middles incomparable".into())
}

fn c3_alpha() -> Check {
    let leader = Tree::spider(&[1, 2, 3]).unwrap();
    let poset = build_poset(&leader).map_err(|e| e.to_string())?;
    let (a_top, a_bottom) = (
        alpha_beta(&leader).unwrap().alpha,
        alpha_beta(&poset.lf().tree).unwrap().alpha,
    );
    if (a_top, a_bottom) != (2, 0) {
        return Err(format!("alpha(top) = {a_top}, alpha(bottom) = {a_bottom}"));
    }
    let mut checked = 0;
    let mut mismatches = Vec::new();
    let mut from_four = 0;
    for n in 3..=10 {
        for t in enumerate_trees(n).unwrap() {
            let ab = alpha_beta(&t).map_err(|e| e.to_string())?;
            let leaf_edges = t.leaves().len() as u64;
            if ab.alpha + ab.beta != leaf_edges {
                return Err(format!(
                    "{t}: alpha + beta = {} but {leaf_edges} leaf edges",
                    ab.alpha + ab.beta
                ));
            }
            if ab.alpha != structural_alpha(&t) {
                mismatches.push(format!(
                    "{t} (polynomial {}, structural {})",
                    ab.alpha,
                    structural_alpha(&t)
                ));
                from_four += usize::from(n >= 4);
            }
            checked += 1;
        }
    }
    if mismatches.is_empty() {
        Ok(format!(
            "alpha 2 and 0 on the diamond ends; {checked} trees n=3..10 agree"
        ))
    } else {
        Err(format!(
            "{} of {checked} trees n=3..10 disagree: {}; {from_four} of them have n >= 4",
            mismatches.len(),
            mismatches.join(", ")
        ))
    }
}

fn c6_restricted() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 3..=7 {
        for (ti, t) in enumerate_trees(n).unwrap().into_iter().enumerate() {
            for i in 0..1000u64 {
                let mut rng = trial_rng(SEED, ((n as u64) << 40) | ((ti as u64) << 20) | i);
                let wt = sample_weights_with(&t, 0.5, &mut rng).map_err(|e| e.to_string())?;
                let fast = maximin_restricted(&wt).map_err(|e| e.to_string())?.value;
                worst = worst.max((fast - maximin_oracle(&wt)).abs());
                count += 1;
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("{count} draws, max |difference| {worst:.2e}"))
    } else {
        Err(format!("max |difference| {worst:.2e}"))
    }
}

fn c7_determinant() -> Check {
    // library route: closed form against LU; here also against elimination
    suite(Suite::Determinant, 10, 1000)?;
    let mut worst: f64 = 0.0;
    for i in 0..1000u64 {
        let mut rng = trial_rng(SEED ^ 0x5eed, i);
        let n = rng.gen_range(2..=10);
        let t = Tree::random(n, &mut rng).unwrap();
        let w = (0..n - 1)
            .map(|_| rng.gen_range(0.05..0.95) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let wt = WeightedTree::new(t, w).unwrap();
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let closed = gtsec_core::gaussian::determinant_closed_form(&wt, Some(&d)).unwrap();
        let mut m = path_covariance(&wt);
        for a in 0..n {
            for b in 0..n {
                m[a][b] *= (d[a] * d[b]).sqrt();
            }
        }
        worst = worst.max(((closed - det_oracle(m)) / closed).abs());
    }
    if worst <= 1e-10 {
        Ok(format!("1000 draws, max relative error {worst:.2e}"))
    } else {
        Err(format!("max relative error {worst:.2e}"))
    }
}

fn c9_leaders() -> Check {
    let counts: Vec<usize> = (4..=7)
        .map(|n| leaders_structural(n).unwrap().len())
        .collect();
    if counts != [1, 1, 2, 3] {
        return Err(format!("counts n=4..7 are {counts:?}"));
    }
    suite(Suite::Leaders, 12, 1).map(|m| format!("{m}; counts n=4..7 {counts:?}"))
}

fn c11_entropy() -> Check {
    let k = 0.5;
    let mut worst: f64 = 0.0;
    for i in 0..10_000u64 {
        let mut rng = trial_rng(SEED ^ 0xe17, i);
        let n = rng.gen_range(2..=10);
        let t = Tree::random(n, &mut rng).unwrap();
        let wt = sample_weights_with(&t, k, &mut rng).map_err(|e| e.to_string())?;
        let det = det_oracle(covariance_from_tree(&wt).rows());
        let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
        let want = 0.5 * (two_pi_e.powi(n as i32) * k).ln();
        let got = gtsec_core::gaussian::entropy(n, det).map_err(|e| e.to_string())?;
        worst = worst.max(((got - want) / want).abs());
    }
    if worst <= 1e-9 {
        Ok(format!("10000 draws, max relative error {worst:.2e}"))
    } else {
        Err(format!("max relative error {worst:.2e}"))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (
            "1 reference polynomials of the n=7 diamond poset",
            c1_reference_polynomials,
        ),
        ("2 posets of order 7", c2_posets_n7),
        ("3 alpha extraction", c3_alpha),
        ("4 grafting recursion, n <= 8", || {
            suite(Suite::Recursion, 8, 1)
        }),
        ("5 grafting monotonicity, n <= 7, 1e4 draws", || {
            suite(Suite::Grafting, 7, 10_000)
        }),
        ("6 restricted = exhaustive maximin, n <= 7", c6_restricted),
        ("7 determinant identity, n <= 10", c7_determinant),
        ("8 cut-paste incomparability on P6", || {
            suite(Suite::Cutpaste, 6, 10_000)
        }),
        ("9 leader enumeration, n = 4..12", c9_leaders),
        ("10 sink confluence, n <= 9", || {
            suite(Suite::Confluence, 9, 100)
        }),
        ("11 entropy constraint, 1e4 draws", c11_entropy),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("[PASS] {name}: {msg} ({secs:.2}s)"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name}: {msg} ({secs:.2}s)");
            }
        }
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
