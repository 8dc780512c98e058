//! Subtree polynomials of trees and the grafting recursion between them.
//!
//! A subtree `S` contributes `t^|E(S)| · y^(|E(S)| − |L_E(S)|)` where
//! `L_E(S)` are the leaf edges of `S`. The empty subtree contributes 1 and
//! single vertices are not counted separately.

use serde::Serialize;

use crate::canon::CanonicalCode;
use crate::error::{check_bounds, Error, Result};
use crate::poly::BiPoly;
use crate::poset::Poset;
use crate::tree::{EdgeRef, Tree};

/// Counts subtrees by `(edges, edges − leaf edges)`.
///
/// With `rooted = false` every connected vertex set of size ≥ 2 is visited
/// once, anchored at its lowest vertex. With `rooted = true` only sets
/// containing `root` are visited (including `{root}`) and `root` is never
/// treated as a leaf.
fn subtree_counts(tree: &Tree, root: Option<usize>) -> Vec<Vec<u64>> {
    struct Walk<'a> {
        tree: &'a Tree,
        in_sub: Vec<bool>,
        deg: Vec<usize>,
        counts: Vec<Vec<u64>>,
        anchor: usize,
        rooted: bool,
    }

    impl Walk<'_> {
        fn leaf_edges(&self, size: usize, leaves: usize) -> usize {
            // in an unrooted 2-vertex set both ends are leaves of one edge
            if !self.rooted && size == 2 {
                1
            } else {
                leaves
            }
        }

        fn record(&mut self, size: usize, leaves: usize) {
            if !self.rooted && size < 2 {
                return;
            }
            let edges = size - 1;
            let internal = edges - self.leaf_edges(size, leaves);
            self.counts[edges][internal] += 1;
        }

        fn is_counted_leaf(&self, v: usize) -> bool {
            self.deg[v] == 1 && !(self.rooted && v == self.anchor)
        }

        fn extend(&mut self, size: usize, leaves: usize, ext: &[(usize, usize)]) {
            self.record(size, leaves);
            for i in 0..ext.len() {
                let (w, p) = ext[i];
                let mut next: Vec<(usize, usize)> = ext[i + 1..].to_vec();
                next.extend(
                    self.tree
                        .neighbors(w)
                        .iter()
                        .filter(|&&x| !self.in_sub[x] && (self.rooted || x > self.anchor))
                        .map(|&x| (x, w)),
                );
                let p_was_leaf = self.is_counted_leaf(p);
                self.in_sub[w] = true;
                self.deg[p] += 1;
                self.deg[w] = 1;
                let p_is_leaf = self.is_counted_leaf(p);
                let leaves_now = leaves + usize::from(p_is_leaf) - usize::from(p_was_leaf) + 1;
                self.extend(size + 1, leaves_now, &next);
                self.deg[w] = 0;
                self.deg[p] -= 1;
                self.in_sub[w] = false;
            }
        }
    }

    let n = tree.order();
    let mut walk = Walk {
        tree,
        in_sub: vec![false; n],
        deg: vec![0; n],
        counts: vec![vec![0; n]; n],
        anchor: 0,
        rooted: root.is_some(),
    };
    let anchors: Vec<usize> = match root {
        Some(r) => vec![r],
        None => (0..n).collect(),
    };
    for a in anchors {
        walk.anchor = a;
        walk.in_sub[a] = true;
        let ext: Vec<(usize, usize)> = tree
            .neighbors(a)
            .iter()
            .filter(|&&x| root.is_some() || x > a)
            .map(|&x| (x, a))
            .collect();
        walk.extend(1, 0, &ext);
        walk.in_sub[a] = false;
    }
    walk.counts
}

fn counts_to_poly(counts: &[Vec<u64>]) -> BiPoly {
    BiPoly::from_terms(counts.iter().enumerate().flat_map(|(e, row)| {
        row.iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(j, &c)| (e as u32, j as u32, c))
    }))
}

/// Subtree polynomial of `tree` in `(t, y)`.
pub fn unrooted_poly(tree: &Tree) -> BiPoly {
    &counts_to_poly(&subtree_counts(tree, None)) + &BiPoly::one()
}

/// Polynomial of the subtrees containing `root`, with `root` never counted
/// as a leaf. The bare root contributes 1.
pub fn rooted_poly(tree: &Tree, root: usize) -> Result<BiPoly> {
    if root >= tree.order() {
        return Err(Error::Bounds {
            what: "root",
            value: root,
            min: 0,
            max: tree.order() - 1,
        });
    }
    Ok(counts_to_poly(&subtree_counts(tree, Some(root))))
}

/// `t(1 − tz)` written in `y`: `t + t² − t²y`.
fn recursion_factor() -> BiPoly {
    BiPoly::from_terms([(1, 0, 1), (2, 0, 1), (2, 1, -1)])
}

/// Removes the leaf `n2` and its degree-2 support `n1` and returns the
/// remaining tree rooted at the other neighbour of `n1`.
fn strip_graft_pair(tree: &Tree, edge: EdgeRef) -> Result<(Tree, usize)> {
    if !tree.graftable_edges().contains(&edge) {
        let (a, b) = edge.endpoints();
        return Err(Error::Structural(format!(
            "({a}, {b}) is not a graftable edge of {tree}"
        )));
    }
    let (n1, n2) = edge.endpoints();
    let v = *tree
        .neighbors(n1)
        .iter()
        .find(|&&w| w != n2)
        .expect("degree-2 support");
    let mut label = vec![usize::MAX; tree.order()];
    let mut next = 0;
    for (u, slot) in label.iter_mut().enumerate() {
        if u != n1 && u != n2 {
            *slot = next;
            next += 1;
        }
    }
    let edges = tree
        .edges()
        .iter()
        .filter(|&&(a, b)| ![a, b].contains(&n1) && ![a, b].contains(&n2))
        .map(|&(a, b)| (label[a], label[b]))
        .collect();
    Ok((Tree::new(next, edges)?, label[v]))
}

/// The rooted polynomial that enters the recursion when `edge` of `tree` is
/// grafted.
pub fn recursion_g(tree: &Tree, edge: EdgeRef) -> Result<BiPoly> {
    let (rest, v) = strip_graft_pair(tree, edge)?;
    rooted_poly(&rest, v)
}

/// `f(T) − f(T') − t(1 − tz)(1 − g)` for the graft of `edge`; zero when the
/// recursion holds.
pub fn graft_residual(tree: &Tree, edge: EdgeRef) -> Result<BiPoly> {
    let (grafted, _) = crate::poset::graft_labeled(tree, edge)?;
    let g = recursion_g(tree, edge)?;
    let step = &recursion_factor() * &(&BiPoly::one() - &g);
    Ok(&(&unrooted_poly(tree) - &unrooted_poly(&grafted)) - &step)
}

/// Outcome of checking the recursion along a chain of grafts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecursionCheck {
    pub holds: bool,
    pub steps: usize,
    pub residual: BiPoly,
}

/// Checks `f(T_n) = f(T_{n−m}) + t(1 − tz)[m − Σ g]` along `chain`, a list of
/// poset node indices joined by arcs.
pub fn verify_recursion(poset: &Poset, chain: &[usize]) -> Result<RecursionCheck> {
    if chain.is_empty() {
        return Err(Error::Structural("empty chain".into()));
    }
    for &i in chain {
        check_bounds("node", i, 0, poset.len() - 1)?;
    }
    let mut g_sum = BiPoly::zero();
    for pair in chain.windows(2) {
        let arc = poset
            .arcs
            .iter()
            .find(|a| a.from == pair[0] && a.to == pair[1])
            .ok_or_else(|| {
                Error::Structural(format!(
                    "no graft arc from node {} to node {}",
                    pair[0], pair[1]
                ))
            })?;
        g_sum = &g_sum + &recursion_g(&poset.nodes[arc.from].tree, arc.edge)?;
    }
    let m = chain.len() - 1;
    let bracket = &BiPoly::monomial(m as u64, 0, 0) - &g_sum;
    let first = unrooted_poly(&poset.nodes[chain[0]].tree);
    let last = unrooted_poly(&poset.nodes[chain[m]].tree);
    let residual = &(&first - &last) - &(&recursion_factor() * &bracket);
    Ok(RecursionCheck {
        holds: residual.is_zero(),
        steps: m,
        residual,
    })
}

/// Coefficients of the `t^(|E|−1)` row of the subtree polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AlphaBeta {
    pub alpha: u64,
    pub beta: u64,
    pub internal_edges: usize,
}

/// Reads `α` (at `y^(|I|−1)`) and `β` (at `y^|I|`) from the `t^(|E|−1)` row.
pub fn alpha_beta(tree: &Tree) -> Result<AlphaBeta> {
    if tree.order() < 3 {
        return Err(Error::Precondition(
            "alpha/beta need at least 3 vertices".into(),
        ));
    }
    let poly = unrooted_poly(tree);
    let internal = tree.internal_edge_count() as u32;
    let row = poly.t_row(tree.edge_count() as u32 - 1);
    let mut alpha = 0u64;
    let mut beta = 0u64;
    for (j, c) in row {
        let c: u64 = c.try_into().map_err(|_| {
            Error::Structural(format!(
                "negative coefficient in the subtree polynomial of {tree}"
            ))
        })?;
        match j {
            j if j == internal => beta = c,
            j if j + 1 == internal => alpha = c,
            _ => {
                return Err(Error::Structural(format!(
                    "unexpected y^{j} term next to the top degree of {tree}"
                )))
            }
        }
    }
    Ok(AlphaBeta {
        alpha,
        beta,
        internal_edges: internal as usize,
    })
}

/// Equality audit of one node pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairAudit {
    pub x: usize,
    pub y: usize,
    pub directed_path: bool,
    pub same_parent: bool,
    pub different_levels: bool,
    pub equal: bool,
}

impl PairAudit {
    pub fn covered(&self) -> bool {
        self.directed_path || self.same_parent || self.different_levels
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistinctnessReport {
    pub leader: CanonicalCode,
    pub pairs: Vec<PairAudit>,
    /// Pairs meeting at least one condition whose polynomials coincide.
    pub violations: Vec<PairAudit>,
    /// Pairs meeting no condition whose polynomials coincide.
    pub uncovered_equal: usize,
}

/// Compares the polynomials of all node pairs of `poset`.
pub fn audit_distinctness(poset: &Poset) -> DistinctnessReport {
    let polys: Vec<BiPoly> = poset.nodes.iter().map(|n| unrooted_poly(&n.tree)).collect();
    let parents: Vec<Vec<usize>> = (0..poset.len())
        .map(|i| poset.parents(i).collect())
        .collect();
    let mut pairs = Vec::new();
    for x in 0..poset.len() {
        for y in x + 1..poset.len() {
            pairs.push(PairAudit {
                x,
                y,
                directed_path: poset.reaches(x, y) || poset.reaches(y, x),
                same_parent: parents[x].iter().any(|p| parents[y].contains(p)),
                different_levels: poset.nodes[x].level != poset.nodes[y].level,
                equal: polys[x] == polys[y],
            });
        }
    }
    let violations = pairs
        .iter()
        .filter(|p| p.equal && p.covered())
        .cloned()
        .collect();
    let uncovered_equal = pairs.iter().filter(|p| p.equal && !p.covered()).count();
    DistinctnessReport {
        leader: poset.leader().code.clone(),
        pairs,
        violations,
        uncovered_equal,
    }
}

/// `α` of one poset node next to its grafting distances to the sink.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlphaDistance {
    pub code: CanonicalCode,
    pub alpha: u64,
    pub shortest_to_lf: usize,
    pub longest_to_lf: usize,
}

impl AlphaDistance {
    pub fn matches_longest(&self) -> bool {
        self.alpha == self.longest_to_lf as u64
    }

    pub fn matches_shortest(&self) -> bool {
        self.alpha == self.shortest_to_lf as u64
    }
}

pub fn alpha_distances(poset: &Poset) -> Result<Vec<AlphaDistance>> {
    (0..poset.len())
        .map(|i| {
            let (shortest_to_lf, longest_to_lf) = poset.distances_to_lf(i);
            Ok(AlphaDistance {
                code: poset.nodes[i].code.clone(),
                alpha: alpha_beta(&poset.nodes[i].tree)?.alpha,
                shortest_to_lf,
                longest_to_lf,
            })
        })
        .collect()
}
