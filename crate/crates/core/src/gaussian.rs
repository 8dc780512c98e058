//! Jointly Gaussian models whose dependence graph is a tree.
//!
//! With unit variances the covariance of two vertices is the product of the
//! edge weights on the path between them, and the determinant factorises as
//! `∏ (1 - w_e²)` over edges.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{parse_rows, EdgeRef, Tree};

/// Largest admissible edge-weight magnitude.
pub const MAX_ABS_WEIGHT: f64 = 1.0 - 1e-9;

/// A tree with one correlation weight per edge, stored in `tree.edges()` order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    tree: Tree,
    weights: Vec<f64>,
}

impl WeightedTree {
    pub fn new(tree: Tree, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != tree.edge_count() {
            return Err(Error::Domain(format!(
                "{} weights for {} edges",
                weights.len(),
                tree.edge_count()
            )));
        }
        for (&(u, v), &w) in tree.edges().iter().zip(&weights) {
            if !(w.abs() > 0.0 && w.abs() <= MAX_ABS_WEIGHT) {
                return Err(Error::Domain(format!(
                    "weight {w} on edge ({u}, {v}) must satisfy 0 < |w| < 1"
                )));
            }
        }
        Ok(Self { tree, weights })
    }

    /// Every edge gets the same weight.
    pub fn uniform(tree: Tree, w: f64) -> Result<Self> {
        let m = tree.edge_count();
        Self::new(tree, vec![w; m])
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.tree
            .edges()
            .iter()
            .position(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))
            .map(|i| self.weights[i])
    }

    /// Reads `n`, then `n-1` lines `u v w`.
    pub fn parse(text: &str) -> Result<Self> {
        let (n, rows) = parse_rows(text, 3)?;
        let edges = rows.iter().map(|&(_, u, v, _)| (u, v)).collect();
        let weights = rows.iter().map(|r| r.3.expect("three columns")).collect();
        let tree = Tree::new(n, edges).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        Self::new(tree, weights)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.tree.order());
        for (&(u, v), w) in self.tree.edges().iter().zip(&self.weights) {
            s.push_str(&format!("{u} {v} {w:?}\n"));
        }
        s
    }

    fn weighted_adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.tree.order()];
        for (&(u, v), &w) in self.tree.edges().iter().zip(&self.weights) {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        adj
    }
}

/// Dense symmetric covariance matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CovarianceMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.dim.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Determinant by LU factorisation of the dense matrix.
    pub fn determinant(&self) -> f64 {
        self.to_nalgebra().lu().determinant()
    }

    /// Whether a Cholesky factorisation exists.
    pub fn is_positive_definite(&self) -> bool {
        self.to_nalgebra().cholesky().is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.rows()).expect("finite floats serialise")
    }
}

impl From<Vec<Vec<f64>>> for CovarianceMatrix {
    fn from(rows: Vec<Vec<f64>>) -> Self {
        let dim = rows.len();
        Self {
            dim,
            data: rows.into_iter().flatten().collect(),
        }
    }
}

impl From<CovarianceMatrix> for Vec<Vec<f64>> {
    fn from(m: CovarianceMatrix) -> Self {
        m.rows()
    }
}

/// Determinant target and the joint entropy it pins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySpec {
    pub k: f64,
    pub entropy: f64,
}

impl EntropySpec {
    pub fn new(n: usize, k: f64) -> Result<Self> {
        Ok(Self {
            k,
            entropy: entropy(n, k)?,
        })
    }
}

/// Unit-diagonal covariance: `σ_ij` is the product of weights on the `i–j` path.
pub fn covariance_from_tree(wt: &WeightedTree) -> CovarianceMatrix {
    let n = wt.tree.order();
    let adj = wt.weighted_adjacency();
    let mut data = vec![0.0; n * n];
    let mut stack = Vec::with_capacity(n);
    for s in 0..n {
        let row = &mut data[s * n..(s + 1) * n];
        row[s] = 1.0;
        stack.clear();
        stack.push((s, usize::MAX));
        while let Some((u, from)) = stack.pop() {
            for &(w, weight) in &adj[u] {
                if w != from {
                    row[w] = row[u] * weight;
                    stack.push((w, u));
                }
            }
        }
    }
    CovarianceMatrix { dim: n, data }
}

/// Tree covariance with arbitrary positive variances: the unit-diagonal
/// correlation matrix rescaled as `D^{1/2} R D^{1/2}`.
pub fn covariance_with_diagonals(wt: &WeightedTree, diagonals: &[f64]) -> Result<CovarianceMatrix> {
    check_diagonals(wt, diagonals)?;
    let mut cov = covariance_from_tree(wt);
    let n = cov.dim;
    let scale: Vec<f64> = diagonals.iter().map(|d| d.sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            cov.data[i * n + j] *= scale[i] * scale[j];
        }
    }
    Ok(cov)
}

fn check_diagonals(wt: &WeightedTree, diagonals: &[f64]) -> Result<()> {
    if diagonals.len() != wt.tree.order() {
        return Err(Error::Domain(format!(
            "{} diagonal entries for {} vertices",
            diagonals.len(),
            wt.tree.order()
        )));
    }
    if let Some((i, d)) = diagonals
        .iter()
        .enumerate()
        .find(|(_, &d)| d.is_nan() || d <= 0.0)
    {
        return Err(Error::Domain(format!(
            "variance {d} at vertex {i} is not positive"
        )));
    }
    Ok(())
}

/// Determinant of the tree covariance from edge and vertex terms only:
/// `∏_{(i,j)∈E} (σ_ii σ_jj − σ_ij²) / ∏_i σ_ii^{d_i − 1}`.
///
/// Without `diagonals` every variance is 1 and this is `∏ (1 − w_e²)`.
pub fn determinant_closed_form(wt: &WeightedTree, diagonals: Option<&[f64]>) -> Result<f64> {
    let Some(diag) = diagonals else {
        return Ok(wt.weights.iter().map(|w| 1.0 - w * w).product());
    };
    check_diagonals(wt, diag)?;
    let tree = &wt.tree;
    let mut det = 1.0;
    for (&(i, j), &w) in tree.edges().iter().zip(&wt.weights) {
        let cov_ij = w * (diag[i] * diag[j]).sqrt();
        det *= diag[i] * diag[j] - cov_ij * cov_ij;
    }
    for (v, &d) in diag.iter().enumerate() {
        det /= d.powi(tree.degree(v) as i32 - 1);
    }
    Ok(det)
}

/// Differential entropy `½ ln((2πe)^n det)` in nats.
pub fn entropy(n: usize, det: f64) -> Result<f64> {
    if det.is_nan() || det <= 0.0 {
        return Err(Error::Domain(format!("determinant {det} must be positive")));
    }
    let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
    Ok(0.5 * (n as f64 * two_pi_e.ln() + det.ln()))
}

/// Random weights with `∏ (1 − w_e²) = k`, seeded.
pub fn sample_weights(tree: &Tree, k: f64, seed: u64) -> Result<WeightedTree> {
    sample_weights_with(tree, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Same as [`sample_weights`] but drawing from a caller-supplied generator.
///
/// The budget `−ln k` is split uniformly over the simplex (normalised
/// exponentials) and each edge gets `w = ±√(1 − e^{−u})` with an independent
/// fair sign, so the determinant constraint holds by construction.
pub fn sample_weights_with<R: Rng + ?Sized>(
    tree: &Tree,
    k: f64,
    rng: &mut R,
) -> Result<WeightedTree> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!(
            "determinant target {k} must lie in (0, 1)"
        )));
    }
    let m = tree.edge_count();
    if m == 0 {
        return Err(Error::Domain(
            "a single vertex has no edges to weight".into(),
        ));
    }
    let budget = -k.ln();
    // Rejection only triggers for degenerate draws (an exactly-zero share, or
    // a magnitude within 1e-9 of 1 when k is astronomically small).
    for _ in 0..64 {
        let shares: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = shares.iter().sum();
        let weights: Vec<f64> = shares
            .iter()
            .map(|s| {
                let u = budget * s / total;
                let magnitude = (-(-u).exp_m1()).sqrt();
                if rng.gen::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect();
        if let Ok(wt) = WeightedTree::new(tree.clone(), weights) {
            return Ok(wt);
        }
    }
    Err(Error::Domain(format!(
        "could not place weights strictly inside (0, 1) for k = {k}"
    )))
}

/// Moves the leaf edge `cut` so the leaf hangs from `paste_at`, carrying its
/// weight along. Every other edge keeps its weight, so `∏ (1 − w_e²)` and
/// the determinant are unchanged.
pub fn transfer_weights_cut_paste(
    wt: &WeightedTree,
    cut: EdgeRef,
    paste_at: usize,
) -> Result<WeightedTree> {
    let tree = &wt.tree;
    let (support, leaf) = cut.endpoints();
    let leaf_ok = cut.support().is_some() && tree.has_edge(support, leaf) && tree.is_leaf(leaf);
    if !leaf_ok {
        return Err(Error::Structural(format!(
            "({support}, {leaf}) is not a leaf edge with leaf {leaf}"
        )));
    }
    if paste_at >= tree.order() || paste_at == leaf {
        return Err(Error::Structural(format!(
            "cannot paste leaf {leaf} at vertex {paste_at}"
        )));
    }
    if paste_at == support {
        return Ok(wt.clone());
    }
    let mut edges = tree.edges().to_vec();
    let idx = edges
        .iter()
        .position(|&(a, b)| (a, b) == (support, leaf) || (a, b) == (leaf, support))
        .expect("edge present");
    edges[idx] = (paste_at, leaf);
    WeightedTree::new(Tree::new(tree.order(), edges)?, wt.weights.clone())
}
