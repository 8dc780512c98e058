//! Unrooted trees and the structural queries used throughout the crate.
//!
//! Vertices are dense `0..n` indices. Two trees describe the same topology
//! when their [`CanonicalCode`](crate::canon::CanonicalCode)s agree; label
//! equality is never used as an identity test.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// An unrooted tree on `order` vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    order: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

/// A reference to one edge of a tree, tagged with its leaf-edge role.
///
/// For a leaf edge with exactly one leaf endpoint, `support` is the
/// non-leaf endpoint (`n_1` in the grafting move) and the other endpoint is
/// the leaf (`n_2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeRef {
    u: usize,
    v: usize,
    leaf_edge: bool,
    support: Option<usize>,
}

impl EdgeRef {
    /// Tags the edge `{u, v}` of `tree`.
    pub fn new(tree: &Tree, u: usize, v: usize) -> Result<Self> {
        if !tree.has_edge(u, v) {
            return Err(Error::Structural(format!("({u}, {v}) is not an edge")));
        }
        let (lu, lv) = (tree.is_leaf(u), tree.is_leaf(v));
        let support = match (lu, lv) {
            (false, true) => Some(u),
            (true, false) => Some(v),
            _ => None,
        };
        let (u, v) = match support {
            Some(s) => (s, if s == u { v } else { u }),
            None => (u.min(v), u.max(v)),
        };
        Ok(Self {
            u,
            v,
            leaf_edge: lu || lv,
            support,
        })
    }

    /// Tags the leaf edge whose leaf endpoint is `leaf`, so `support` is set
    /// even when both endpoints are leaves (the single-edge tree).
    pub fn leaf(tree: &Tree, support: usize, leaf: usize) -> Result<Self> {
        if !tree.has_edge(support, leaf) {
            return Err(Error::Structural(format!(
                "({support}, {leaf}) is not an edge"
            )));
        }
        if !tree.is_leaf(leaf) {
            return Err(Error::Structural(format!("vertex {leaf} is not a leaf")));
        }
        Ok(Self {
            u: support,
            v: leaf,
            leaf_edge: true,
            support: Some(support),
        })
    }

    /// Endpoints, support vertex first when there is one.
    pub fn endpoints(&self) -> (usize, usize) {
        (self.u, self.v)
    }

    pub fn is_leaf_edge(&self) -> bool {
        self.leaf_edge
    }

    pub fn support(&self) -> Option<usize> {
        self.support
    }

    /// The leaf endpoint, when the edge has a designated support vertex.
    pub fn leaf_vertex(&self) -> Option<usize> {
        self.support.map(|_| self.v)
    }
}

impl Tree {
    /// Builds a tree, checking that `edges` spans `order` vertices without
    /// cycles, loops or repeats.
    pub fn new(order: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidTree(
                "a tree needs at least one vertex".into(),
            ));
        }
        if edges.len() != order - 1 {
            return Err(Error::InvalidTree(format!(
                "{} edges given, a tree on {order} vertices has {}",
                edges.len(),
                order - 1
            )));
        }
        let mut adj = vec![Vec::new(); order];
        for &(u, v) in &edges {
            if u >= order || v >= order {
                return Err(Error::InvalidTree(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{order}"
                )));
            }
            if u == v {
                return Err(Error::InvalidTree(format!("self-loop at {u}")));
            }
            if adj[u].contains(&v) {
                return Err(Error::InvalidTree(format!("duplicate edge ({u}, {v})")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        let tree = Self { order, edges, adj };
        let reached = tree.bfs_order(0).len();
        if reached != order {
            return Err(Error::InvalidTree(format!(
                "graph is disconnected ({reached} of {order} vertices reachable from 0)"
            )));
        }
        Ok(tree)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.adj[v].len() == 1
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.order && v < self.order && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.order).filter(|&v| self.is_leaf(v)).collect()
    }

    /// Edges with at least one degree-1 endpoint.
    pub fn leaf_edges(&self) -> Vec<EdgeRef> {
        self.edges
            .iter()
            .filter(|&&(u, v)| self.is_leaf(u) || self.is_leaf(v))
            .map(|&(u, v)| EdgeRef::new(self, u, v).expect("edge of self"))
            .collect()
    }

    /// Number of edges with no degree-1 endpoint.
    pub fn internal_edge_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|&&(u, v)| !self.is_leaf(u) && !self.is_leaf(v))
            .count()
    }

    /// Vertices in breadth-first order from `root`.
    pub fn bfs_order(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        let mut order = Vec::with_capacity(self.order);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &w in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        order
    }

    /// Parent of every vertex when the tree hangs from `root` (`root` maps to itself).
    pub fn parents(&self, root: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.order];
        parent[root] = root;
        for u in self.bfs_order(root) {
            for &w in &self.adj[u] {
                if parent[w] == usize::MAX {
                    parent[w] = u;
                }
            }
        }
        parent
    }

    /// Hop distances from `source`.
    pub fn distances(&self, source: usize) -> Vec<usize> {
        let parent = self.parents(source);
        let mut dist = vec![0; self.order];
        for u in self.bfs_order(source).into_iter().skip(1) {
            dist[u] = dist[parent[u]] + 1;
        }
        dist
    }

    /// Leaf edges `(n_1, n_2)` with `n_2` a leaf and `deg(n_1) = 2`; these are
    /// the edges the grafting move may act on.
    pub fn graftable_edges(&self) -> Vec<EdgeRef> {
        let mut out = Vec::new();
        for leaf in self.leaves() {
            let support = self.adj[leaf][0];
            if self.degree(support) == 2 {
                out.push(EdgeRef::leaf(self, support, leaf).expect("leaf edge"));
            }
        }
        out
    }

    /// True when no vertex carries two or more leaf neighbours, i.e. no
    /// grafting move produces this tree.
    pub fn is_poset_leader(&self) -> bool {
        (0..self.order).all(|v| self.adj[v].iter().filter(|&&w| self.is_leaf(w)).count() < 2)
    }

    /// True when the tree admits no grafting move.
    pub fn is_lf(&self) -> bool {
        self.graftable_edges().is_empty()
    }

    /// Path on `n` vertices, `0-1-…-(n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|v| (v - 1, v)).collect())
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Result<Self> {
        Self::new(leaves + 1, (1..=leaves).map(|v| (0, v)).collect())
    }

    /// Spider: a centre (vertex 0) with one pendant path per entry of `legs`.
    pub fn spider(legs: &[usize]) -> Result<Self> {
        if legs.contains(&0) {
            return Err(Error::InvalidTree("spider legs must be positive".into()));
        }
        let mut edges = Vec::new();
        let mut next = 1;
        for &len in legs {
            let mut prev = 0;
            for _ in 0..len {
                edges.push((prev, next));
                prev = next;
                next += 1;
            }
        }
        Self::new(next, edges)
    }

    /// Decodes a Prüfer sequence into the labeled tree on `seq.len() + 2` vertices.
    pub fn from_prufer(seq: &[usize]) -> Result<Self> {
        let n = seq.len() + 2;
        if let Some(&bad) = seq.iter().find(|&&x| x >= n) {
            return Err(Error::InvalidTree(format!(
                "Prüfer entry {bad} out of range for {n} vertices"
            )));
        }
        let mut degree = vec![1usize; n];
        for &x in seq {
            degree[x] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        let mut ptr = 0;
        while degree[ptr] != 1 {
            ptr += 1;
        }
        let mut leaf = ptr;
        for &x in seq {
            edges.push((leaf, x));
            degree[x] -= 1;
            if x < ptr && degree[x] == 1 {
                leaf = x;
            } else {
                ptr += 1;
                while degree[ptr] != 1 {
                    ptr += 1;
                }
                leaf = ptr;
            }
        }
        edges.push((leaf, n - 1));
        Self::new(n, edges)
    }

    /// Uniformly random labeled tree on `n ≥ 2` vertices.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n < 2 {
            return Self::new(n, Vec::new());
        }
        let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
        Self::from_prufer(&seq)
    }

    /// Parses the text format: first line `n`, then `n-1` lines `u v`.
    /// Blank lines and `#` comments are ignored; a trailing third column is
    /// rejected here (see [`crate::gaussian::WeightedTree::parse`]).
    pub fn parse(text: &str) -> Result<Self> {
        let (n, rows) = parse_rows(text, 2)?;
        let edges = rows.into_iter().map(|(_, u, v, _)| (u, v)).collect();
        Self::new(n, edges).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.order);
        for &(u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Resolves built-in names: `path-N`, `star-N` (N leaves) and
    /// `spider-a-b-…` (leg lengths).
    pub fn builtin(name: &str) -> Result<Self> {
        let mut parts = name.split('-');
        let kind = parts.next().unwrap_or_default();
        let nums: Vec<usize> = parts
            .map(|p| p.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: 0,
                message: format!("malformed built-in name {name:?}"),
            })?;
        match (kind, nums.as_slice()) {
            ("path", [n]) if *n >= 1 => Self::path(*n),
            ("star", [k]) if *k >= 1 => Self::star(*k),
            ("spider", legs) if !legs.is_empty() => Self::spider(legs),
            _ => Err(Error::Parse {
                line: 0,
                message: format!(
                    "unknown built-in {name:?} (expected path-N, star-N or spider-a-b-…)"
                ),
            }),
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.edges.iter().map(|(u, v)| format!("{u}-{v}")).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// `(line, u, v, weight)` of one parsed edge row.
pub(crate) type EdgeRow = (usize, usize, usize, Option<f64>);

/// Shared reader for the `n` + edge-list formats. `columns` is 2 or 3; with 3
/// the weight column is required.
pub(crate) fn parse_rows(text: &str, columns: usize) -> Result<(usize, Vec<EdgeRow>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (first_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Parse {
        line: first_line,
        message: format!("expected vertex count, found {header:?}"),
    })?;
    let mut rows = Vec::new();
    for (line, l) in lines {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != columns {
            return Err(Error::Parse {
                line,
                message: format!("expected {columns} fields, found {}", fields.len()),
            });
        }
        let idx = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("bad vertex index {s:?}"),
            })
        };
        let (u, v) = (idx(fields[0])?, idx(fields[1])?);
        let w = if columns == 3 {
            Some(fields[2].parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("bad weight {:?}", fields[2]),
            })?)
        } else {
            None
        };
        rows.push((line, u, v, w));
    }
    if rows.len() + 1 != n {
        return Err(Error::Parse {
            line: first_line,
            message: format!("header says {n} vertices but {} edges follow", rows.len()),
        });
    }
    Ok((n, rows))
}
