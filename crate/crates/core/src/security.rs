//! The maximin partial-correlation metric and the Monte-Carlo experiments
//! built on it.
//!
//! Alice and Bob pick a pair `{a, b}`, Eve then picks a single vertex `z`;
//! the score of a weighted tree is `max_{a,b} min_z ρ²_{ab|z}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    covariance_from_tree, sample_weights_with, transfer_weights_cut_paste, CovarianceMatrix,
    WeightedTree,
};
use crate::poset::graft_labeled;
use crate::tree::{EdgeRef, Tree};

/// Tolerance used when comparing sampled maximin values.
pub const MC_TOLERANCE: f64 = 1e-9;

/// One evaluated `(a, b | z)` triplet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletScore {
    pub a: usize,
    pub b: usize,
    pub z: usize,
    pub rho2: f64,
    pub cmi: f64,
}

impl TripletScore {
    fn new(a: usize, b: usize, z: usize, rho2: f64) -> Self {
        Self {
            a,
            b,
            z,
            rho2,
            cmi: conditional_mi(rho2).unwrap_or(f64::INFINITY),
        }
    }
}

/// Eve's best response for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairMin {
    pub pair: (usize, usize),
    pub z: usize,
    pub rho2: f64,
}

/// Result of a maximin evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub value: f64,
    pub argmax_pair: (usize, usize),
    pub worst_z: usize,
    pub per_pair_min: Vec<PairMin>,
    pub table: Vec<TripletScore>,
}

impl SecurityReport {
    /// Vertices of the triplet achieving the maximin value.
    pub fn argmax_triplet(&self) -> [usize; 3] {
        [self.argmax_pair.0, self.argmax_pair.1, self.worst_z]
    }

    fn from_table(table: Vec<TripletScore>) -> Self {
        // table is grouped by pair in lexicographic order, z ascending
        let mut per_pair_min: Vec<PairMin> = Vec::new();
        for s in &table {
            match per_pair_min.last_mut() {
                Some(last) if last.pair == (s.a, s.b) => {
                    if s.rho2 < last.rho2 {
                        last.z = s.z;
                        last.rho2 = s.rho2;
                    }
                }
                _ => per_pair_min.push(PairMin {
                    pair: (s.a, s.b),
                    z: s.z,
                    rho2: s.rho2,
                }),
            }
        }
        let best = per_pair_min
            .iter()
            .fold(None::<&PairMin>, |best, p| match best {
                Some(b) if b.rho2 >= p.rho2 => Some(b),
                _ => Some(p),
            })
            .copied()
            .expect("at least one pair");
        Self {
            value: best.rho2,
            argmax_pair: best.pair,
            worst_z: best.z,
            per_pair_min,
            table,
        }
    }
}

/// Squared partial correlation of `a` and `b` given `z` for a unit-diagonal
/// covariance.
pub fn partial_correlation(cov: &CovarianceMatrix, a: usize, b: usize, z: usize) -> Result<f64> {
    let n = cov.dim();
    if a >= n || b >= n || z >= n || a == b || a == z || b == z {
        return Err(Error::Domain(format!(
            "triplet ({a}, {b} | {z}) needs three distinct vertices below {n}"
        )));
    }
    let (s_ab, s_az, s_bz) = (cov.get(a, b), cov.get(a, z), cov.get(b, z));
    if s_az.abs() >= 1.0 || s_bz.abs() >= 1.0 {
        return Err(Error::Singularity(format!(
            "|σ_az| = {}, |σ_bz| = {}",
            s_az.abs(),
            s_bz.abs()
        )));
    }
    Ok(partial_correlation_unchecked(s_ab, s_az, s_bz))
}

#[inline]
fn partial_correlation_unchecked(s_ab: f64, s_az: f64, s_bz: f64) -> f64 {
    let num = s_ab - s_az * s_bz;
    num * num / ((1.0 - s_az * s_az) * (1.0 - s_bz * s_bz))
}

/// Partial correlation for adjacent `a`, `b` with `z` adjacent to `b`,
/// written in edge weights: `w_ab² (1 − w_bz²) / (1 − w_ab² w_bz²)`.
#[inline]
pub fn adjacent_partial_correlation(w_ab: f64, w_bz: f64) -> f64 {
    let (ab2, bz2) = (w_ab * w_ab, w_bz * w_bz);
    ab2 * (1.0 - bz2) / (1.0 - ab2 * bz2)
}

/// Conditional mutual information (nats) matching a squared partial correlation.
pub fn conditional_mi(rho2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho2) {
        return Err(Error::Domain(format!("ρ² = {rho2} must lie in [0, 1)")));
    }
    Ok(-0.5 * (-rho2).ln_1p())
}

/// Inverse of [`conditional_mi`].
pub fn rho2_from_cmi(cmi: f64) -> f64 {
    -(-2.0 * cmi).exp_m1()
}

fn check_size(wt: &WeightedTree) -> Result<()> {
    let n = wt.tree().order();
    if n < 3 {
        return Err(Error::Domain(format!(
            "the maximin game needs at least 3 vertices, got {n}"
        )));
    }
    Ok(())
}

/// Scores every pair against every eavesdropper position.
///
/// Ties resolve to the lexicographically smallest pair and the smallest `z`.
pub fn maximin_exhaustive(wt: &WeightedTree) -> Result<SecurityReport> {
    check_size(wt)?;
    let cov = covariance_from_tree(wt);
    let n = cov.dim();
    let mut table = Vec::with_capacity(n * (n - 1) * (n - 2) / 2);
    for a in 0..n {
        for b in a + 1..n {
            for z in (0..n).filter(|&z| z != a && z != b) {
                let rho2 =
                    partial_correlation_unchecked(cov.get(a, b), cov.get(a, z), cov.get(b, z));
                table.push(TripletScore::new(a, b, z, rho2));
            }
        }
    }
    Ok(SecurityReport::from_table(table))
}

/// Searches only adjacent pairs and eavesdroppers adjacent to one of them.
pub fn maximin_restricted(wt: &WeightedTree) -> Result<SecurityReport> {
    check_size(wt)?;
    let tree = wt.tree();
    let n = tree.order();
    let mut w = vec![Vec::new(); n];
    for (&(u, v), &weight) in tree.edges().iter().zip(wt.weights()) {
        w[u].push((v, weight));
        w[v].push((u, weight));
    }
    let mut pairs: Vec<(usize, usize, f64)> = tree
        .edges()
        .iter()
        .zip(wt.weights())
        .map(|(&(u, v), &weight)| (u.min(v), u.max(v), weight))
        .collect();
    pairs.sort_by_key(|&(a, b, _)| (a, b));
    let mut table = Vec::new();
    for (a, b, w_ab) in pairs {
        let mut eves: Vec<(usize, f64, bool)> = w[a]
            .iter()
            .filter(|&&(z, _)| z != b)
            .map(|&(z, wz)| (z, wz, false))
            .chain(
                w[b].iter()
                    .filter(|&&(z, _)| z != a)
                    .map(|&(z, wz)| (z, wz, true)),
            )
            .collect();
        eves.sort_by_key(|e| e.0);
        for (z, w_z, at_b) in eves {
            debug_assert!(at_b || w[a].iter().any(|&(x, _)| x == z));
            let rho2 = adjacent_partial_correlation(w_ab, w_z);
            table.push(TripletScore::new(a, b, z, rho2));
        }
    }
    Ok(SecurityReport::from_table(table))
}

/// Generator for trial `index` of an experiment seeded with `seed`: one
/// ChaCha stream per trial, so results do not depend on scheduling.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Summary of `S(T_1) − S(T_2)` over sampled trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl MarginStats {
    fn of(margins: &[f64]) -> Self {
        let min = margins.iter().copied().fold(f64::INFINITY, f64::min);
        let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = margins.iter().sum::<f64>() / margins.len().max(1) as f64;
        Self { min, max, mean }
    }
}

/// Outcome of the grafting-monotonicity experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraftingReport {
    pub tree: String,
    pub edge: (usize, usize),
    pub trials: u64,
    pub seed: u64,
    pub k: f64,
    /// Trials with `S(T_1) < S(T_2) − 1e-9`.
    pub violations: u64,
    /// Trials with `|S(T_1) − S(T_2)| ≤ 1e-9`.
    pub ties: u64,
    pub margin: MarginStats,
}

/// Samples weights on `t1` with determinant `k`, grafts `edge` carrying its
/// weight along, and counts trials where the grafted tree scores higher.
pub fn verify_grafting_monotonicity(
    t1: &Tree,
    edge: EdgeRef,
    trials: u64,
    k: f64,
    seed: u64,
) -> Result<GraftingReport> {
    let (t2, target) = graft_labeled(t1, edge)?;
    debug_assert_eq!(t2.order(), t1.order());
    let margins = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let wt1 = sample_weights_with(t1, k, &mut trial_rng(seed, i))?;
            let wt2 = transfer_weights_cut_paste(&wt1, edge, target)?;
            Ok(maximin_exhaustive(&wt1)?.value - maximin_exhaustive(&wt2)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(GraftingReport {
        tree: t1.to_string(),
        edge: edge.endpoints(),
        trials,
        seed,
        k,
        violations: margins.iter().filter(|&&m| m < -MC_TOLERANCE).count() as u64,
        ties: margins.iter().filter(|&&m| m.abs() <= MC_TOLERANCE).count() as u64,
        margin: MarginStats::of(&margins),
    })
}

/// Which configuration realises `S(T_1)` in a cut-and-paste trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutPasteCase {
    /// The maximin triplet is the cut leaf, its support and a neighbour of
    /// the support.
    LocalToCut,
    /// The maximin pair contains the paste vertex.
    AtPasteVertex,
    Other,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderingTally {
    pub trials: u64,
    pub t1_greater: u64,
    pub t2_greater: u64,
    pub equal: u64,
}

impl OrderingTally {
    fn add(&mut self, margin: f64) {
        self.trials += 1;
        if margin > MC_TOLERANCE {
            self.t1_greater += 1;
        } else if margin < -MC_TOLERANCE {
            self.t2_greater += 1;
        } else {
            self.equal += 1;
        }
    }
}

/// Outcome of the general cut-and-paste experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPasteReport {
    pub tree: String,
    pub cut: (usize, usize),
    pub paste_at: usize,
    /// Whether the move coincides with grafting.
    pub is_graft: bool,
    pub trials: u64,
    pub seed: u64,
    pub k: f64,
    pub overall: OrderingTally,
    pub local_to_cut: OrderingTally,
    pub at_paste_vertex: OrderingTally,
    pub other: OrderingTally,
}

impl CutPasteReport {
    /// Both strict orderings were observed.
    pub fn incomparable(&self) -> bool {
        self.overall.t1_greater > 0 && self.overall.t2_greater > 0
    }
}

/// Moves the leaf edge `cut` to `paste_at` under sampled weights and tallies
/// the direction of the maximin change, split by where `S(T_1)` is attained.
pub fn explore_cut_paste(
    t1: &Tree,
    cut: EdgeRef,
    paste_at: usize,
    trials: u64,
    k: f64,
    seed: u64,
) -> Result<CutPasteReport> {
    let (support, leaf) = cut.endpoints();
    if cut.support().is_none() || !t1.has_edge(support, leaf) || !t1.is_leaf(leaf) {
        return Err(Error::Structural(format!(
            "({support}, {leaf}) is not a leaf edge of the tree"
        )));
    }
    let is_graft = t1.degree(support) == 2 && t1.neighbors(support).contains(&paste_at);
    let results = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(CutPasteCase, f64)> {
            let wt1 = sample_weights_with(t1, k, &mut trial_rng(seed, i))?;
            let wt2 = transfer_weights_cut_paste(&wt1, cut, paste_at)?;
            let r1 = maximin_exhaustive(&wt1)?;
            let r2 = maximin_exhaustive(&wt2)?;
            Ok((
                classify_case(t1, &r1, support, leaf, paste_at),
                r1.value - r2.value,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = CutPasteReport {
        tree: t1.to_string(),
        cut: (support, leaf),
        paste_at,
        is_graft,
        trials,
        seed,
        k,
        overall: OrderingTally::default(),
        local_to_cut: OrderingTally::default(),
        at_paste_vertex: OrderingTally::default(),
        other: OrderingTally::default(),
    };
    for (case, margin) in results {
        report.overall.add(margin);
        match case {
            CutPasteCase::LocalToCut => report.local_to_cut.add(margin),
            CutPasteCase::AtPasteVertex => report.at_paste_vertex.add(margin),
            CutPasteCase::Other => report.other.add(margin),
        }
    }
    Ok(report)
}

fn classify_case(
    t1: &Tree,
    r1: &SecurityReport,
    support: usize,
    leaf: usize,
    paste_at: usize,
) -> CutPasteCase {
    let trip = r1.argmax_triplet();
    let has = |v: usize| trip.contains(&v);
    if has(support) && has(leaf) {
        let third = trip.iter().find(|&&x| x != support && x != leaf).copied();
        if third.is_some_and(|x| t1.neighbors(support).contains(&x)) {
            return CutPasteCase::LocalToCut;
        }
    }
    if r1.argmax_pair.0 == paste_at || r1.argmax_pair.1 == paste_at {
        return CutPasteCase::AtPasteVertex;
    }
    CutPasteCase::Other
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::WeightedTree;

    fn cov3(s_ab: f64, s_az: f64, s_bz: f64) -> CovarianceMatrix {
        vec![
            vec![1.0, s_ab, s_az],
            vec![s_ab, 1.0, s_bz],
            vec![s_az, s_bz, 1.0],
        ]
        .into()
    }

    #[test]
    fn independent_eavesdropper() {
        let rho2 = partial_correlation(&cov3(0.5, 0.0, 0.0), 0, 1, 2).unwrap();
        assert!((rho2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn eavesdropper_beyond_alice() {
        // path z - a - b, w_az = 0.3, w_ab = 0.6
        let rho2 = partial_correlation(&cov3(0.6, 0.3, 0.18), 0, 1, 2).unwrap();
        let general = 0.546f64.powi(2) / (0.91 * 0.9676);
        let adjacent = 0.36 * 0.91 / (1.0 - 0.36 * 0.09);
        assert!((general - adjacent).abs() < 1e-14);
        assert!((rho2 - general).abs() < 1e-14);
        assert!((rho2 - 0.338570).abs() < 1e-6);
        assert!((adjacent_partial_correlation(0.6, 0.3) - rho2).abs() < 1e-14);
    }

    #[test]
    fn eavesdropper_beyond_bob() {
        let rho2 = partial_correlation(&cov3(0.5, 0.25, 0.5), 0, 1, 2).unwrap();
        assert!((rho2 - 0.25 * 0.75 / 0.9375).abs() < 1e-15);
        assert!((rho2 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn partial_correlation_errors() {
        let c = cov3(0.5, 0.0, 0.0);
        assert!(partial_correlation(&c, 0, 0, 2).is_err());
        assert!(partial_correlation(&c, 0, 1, 3).is_err());
        let singular = cov3(0.5, 1.0, 0.5);
        assert!(matches!(
            partial_correlation(&singular, 0, 1, 2),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn cmi_values() {
        assert_eq!(conditional_mi(0.0).unwrap(), 0.0);
        assert!((conditional_mi(0.2).unwrap() - (-0.5 * 0.8f64.ln())).abs() < 1e-15);
        assert!((conditional_mi(0.2).unwrap() - 0.111572).abs() < 1e-6);
        assert!(conditional_mi(1.0).is_err());
        assert!(conditional_mi(-0.1).is_err());
        for &r in &[0.0, 1e-6, 0.2, 0.5, 0.99] {
            assert!((rho2_from_cmi(conditional_mi(r).unwrap()) - r).abs() < 1e-14);
        }
    }

    #[test]
    fn equal_weights_score_w2_over_1_plus_w2() {
        for t in [
            Tree::path(5).unwrap(),
            Tree::spider(&[1, 2, 3]).unwrap(),
            Tree::star(4).unwrap(),
        ] {
            let wt = WeightedTree::uniform(t, 0.5).unwrap();
            let ex = maximin_exhaustive(&wt).unwrap();
            let re = maximin_restricted(&wt).unwrap();
            assert!((ex.value - 0.2).abs() < 1e-12);
            assert!((re.value - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn p3_hand_oracle() {
        let wt = WeightedTree::new(Tree::path(3).unwrap(), vec![0.9, 0.1]).unwrap();
        let (s01, s12, s02): (f64, f64, f64) = (0.9, 0.1, 0.09);
        let pair01 = (s01 - s02 * s12).powi(2) / ((1.0 - s02 * s02) * (1.0 - s12 * s12));
        let pair02 = (s02 - s01 * s12).powi(2) / ((1.0 - s01 * s01) * (1.0 - s12 * s12));
        let pair12 = (s12 - s01 * s02).powi(2) / ((1.0 - s01 * s01) * (1.0 - s02 * s02));
        let want = pair01.max(pair02).max(pair12);
        let ex = maximin_exhaustive(&wt).unwrap();
        assert!((ex.value - want).abs() < 1e-14);
        assert_eq!(ex.argmax_pair, (0, 1));
        assert_eq!(ex.worst_z, 2);
        assert_eq!(ex.table.len(), 3);
        let re = maximin_restricted(&wt).unwrap();
        assert!((re.value - ex.value).abs() < 1e-12);
    }

    #[test]
    fn three_vertex_star_single_z_per_pair() {
        let wt = WeightedTree::new(Tree::star(2).unwrap(), vec![0.3, -0.8]).unwrap();
        let ex = maximin_exhaustive(&wt).unwrap();
        let best = ex.table.iter().map(|s| s.rho2).fold(f64::MIN, f64::max);
        assert_eq!(ex.value, best);
        assert_eq!(ex.per_pair_min.len(), 3);
    }

    #[test]
    fn size_error() {
        let wt = WeightedTree::new(Tree::path(2).unwrap(), vec![0.5]).unwrap();
        assert!(maximin_exhaustive(&wt).is_err());
        assert!(maximin_restricted(&wt).is_err());
    }

    #[test]
    fn ties_pick_smallest_pair_and_z() {
        let wt = WeightedTree::uniform(Tree::star(3).unwrap(), 0.5).unwrap();
        let ex = maximin_exhaustive(&wt).unwrap();
        assert_eq!(ex.argmax_pair, (0, 1));
        assert_eq!(ex.worst_z, 2);
    }

    #[test]
    fn triplet_scores_consistent() {
        let wt =
            crate::gaussian::sample_weights(&Tree::spider(&[2, 2, 2]).unwrap(), 0.3, 5).unwrap();
        let ex = maximin_exhaustive(&wt).unwrap();
        for s in &ex.table {
            assert!((0.0..1.0).contains(&s.rho2));
            assert!(s.cmi >= 0.0);
            assert!((s.rho2 - rho2_from_cmi(s.cmi)).abs() < 1e-12);
        }
        let cov = covariance_from_tree(&wt);
        for s in ex.table.iter().take(20) {
            let swapped = partial_correlation(&cov, s.b, s.a, s.z).unwrap();
            assert_eq!(swapped, partial_correlation(&cov, s.a, s.b, s.z).unwrap());
        }
    }

    #[test]
    fn monotonicity_small_runs() {
        let p4 = Tree::path(4).unwrap();
        let e = p4.graftable_edges()[0];
        let r = verify_grafting_monotonicity(&p4, e, 500, 0.5, 1).unwrap();
        assert_eq!(r.violations, 0);
        let again = verify_grafting_monotonicity(&p4, e, 500, 0.5, 1).unwrap();
        assert_eq!(r, again);
        let internal = EdgeRef::new(&p4, 1, 2).unwrap();
        assert!(verify_grafting_monotonicity(&p4, internal, 10, 0.5, 1).is_err());
    }

    #[test]
    fn equal_weight_graft_may_tie() {
        let p4 = Tree::path(4).unwrap();
        let e = EdgeRef::leaf(&p4, 1, 0).unwrap();
        let (_, target) = graft_labeled(&p4, e).unwrap();
        let wt1 = WeightedTree::uniform(p4, 0.5).unwrap();
        let wt2 = transfer_weights_cut_paste(&wt1, e, target).unwrap();
        let s1 = maximin_exhaustive(&wt1).unwrap().value;
        let s2 = maximin_exhaustive(&wt2).unwrap().value;
        assert!(s1 >= s2 - MC_TOLERANCE);
        assert!((s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn identity_paste_is_all_ties() {
        let p6 = Tree::path(6).unwrap();
        let cut = EdgeRef::leaf(&p6, 1, 0).unwrap();
        let r = explore_cut_paste(&p6, cut, 1, 200, 0.5, 9).unwrap();
        assert_eq!(r.overall.equal, 200);
        let graft = explore_cut_paste(&p6, cut, 2, 500, 0.5, 9).unwrap();
        assert!(graft.is_graft);
        assert_eq!(graft.overall.t2_greater, 0);
    }
}
