//! Direct enumeration of poset leaders.
//!
//! A leader is described by a [`BranchString`]: an anchor vertex with plain
//! pendant paths (its parts) and further anchors hanging off it through
//! connector paths. Strings are generated from restricted integer
//! partitions, materialized, filtered by the leader predicate and deduplicated
//! by canonical code. [`leaders_structural`] is the brute-force reference.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::canon::{canonical_code, canonical_form, enumerate_trees, CanonicalCode};
use crate::error::{check_bounds, Error, Result};
use crate::poset::build_poset;
use crate::tree::Tree;

/// Anchor with pendant path lengths and child anchors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BranchString {
    /// Pendant path lengths, non-increasing. The anchor itself is not counted.
    pub parts: Vec<usize>,
    /// `(connector, child)`: the child anchor sits `connector + 1` edges away.
    pub children: Vec<(usize, BranchString)>,
}

impl BranchString {
    pub fn spider(parts: Vec<usize>) -> Self {
        Self {
            parts,
            children: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        1 + self.parts.iter().sum::<usize>()
            + self
                .children
                .iter()
                .map(|(c, ch)| c + ch.vertex_count())
                .sum::<usize>()
    }

    pub fn anchors(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|(_, ch)| ch.anchors())
            .sum::<usize>()
    }

    /// Builds the tree; the root anchor is vertex 0.
    pub fn materialize(&self) -> Tree {
        let mut edges = Vec::new();
        let mut next = 1;
        self.build(0, &mut next, &mut edges);
        Tree::new(next, edges).expect("branch strings describe trees")
    }

    fn build(&self, at: usize, next: &mut usize, edges: &mut Vec<(usize, usize)>) {
        let chain = |from: usize, len: usize, next: &mut usize, edges: &mut Vec<(usize, usize)>| {
            let mut prev = from;
            for _ in 0..len {
                edges.push((prev, *next));
                prev = *next;
                *next += 1;
            }
            prev
        };
        for &len in &self.parts {
            chain(at, len, next, edges);
        }
        for (connector, child) in &self.children {
            let end = chain(at, *connector, next, edges);
            let anchor = *next;
            *next += 1;
            edges.push((end, anchor));
            child.build(anchor, next, edges);
        }
    }
}

impl fmt::Display for BranchString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join("+"))?;
        match self.children.as_slice() {
            [] => Ok(()),
            [(c, child)] => write!(f, "-{c}-{child}"),
            many => {
                f.write_str("-[")?;
                for (k, (c, child)) in many.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}-{child}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Partitions of `total` into non-increasing parts with at most one part 1.
fn restricted_partitions(total: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rest.min(max)).rev() {
            // a second 1 would give the anchor two leaf neighbours
            if part == 1 && cur.last() == Some(&1) {
                continue;
            }
            cur.push(part);
            go(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(total, total, &mut Vec::new(), &mut out);
    out
}

/// Generates non-root anchors (one edge towards the parent) of exact size.
struct Generator {
    memo: HashMap<usize, Vec<BranchString>>,
}

impl Generator {
    fn new() -> Self {
        Self {
            memo: HashMap::new(),
        }
    }

    /// Child lists of total size `budget`, as non-increasing key sequences
    /// `(connector, size, index)` so permutations are not repeated.
    fn child_lists(
        &mut self,
        budget: usize,
        cap: (usize, usize, usize),
    ) -> Vec<Vec<(usize, BranchString)>> {
        if budget == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for connector in 0..budget {
            // a child anchor needs itself plus two parts, at least 4 vertices
            for size in 4..=budget - connector {
                let kids = self.sub(size);
                for (idx, kid) in kids.iter().enumerate() {
                    let key = (connector, size, idx);
                    if key > cap {
                        continue;
                    }
                    for mut tail in self.child_lists(budget - connector - size, key) {
                        tail.insert(0, (connector, kid.clone()));
                        out.push(tail);
                    }
                }
            }
        }
        out
    }

    fn sub(&mut self, size: usize) -> Vec<BranchString> {
        if let Some(v) = self.memo.get(&size) {
            return v.clone();
        }
        let mut out = Vec::new();
        for plain in 0..size {
            for parts in restricted_partitions(plain) {
                for children in
                    self.child_lists(size - 1 - plain, (usize::MAX, usize::MAX, usize::MAX))
                {
                    // degree counts the edge to the parent
                    if parts.len() + children.len() + 1 >= 3 {
                        out.push(BranchString {
                            parts: parts.clone(),
                            children,
                        });
                    }
                }
            }
        }
        self.memo.insert(size, out.clone());
        out
    }
}

/// Candidate strings for order `n`, before deduplication.
///
/// One anchor gives spiders and, with two parts, paths. With more anchors
/// the root is an end of the anchor skeleton: exactly one child and at least
/// two plain parts, so its pendant total is at least 3.
pub fn candidate_strings(n: usize) -> Vec<BranchString> {
    let mut out = Vec::new();
    // two parts give the path strings
    for parts in restricted_partitions(n - 1) {
        if parts.len() >= 2 {
            out.push(BranchString::spider(parts));
        }
    }
    let mut gen = Generator::new();
    for plain in 3..n {
        for parts in restricted_partitions(plain)
            .into_iter()
            .filter(|p| p.len() >= 2)
        {
            let rest = n - 1 - plain;
            for connector in 0..rest {
                for child in gen.sub(rest - connector) {
                    out.push(BranchString {
                        parts: parts.clone(),
                        children: vec![(connector, child)],
                    });
                }
            }
        }
    }
    out
}

/// Leaders of order `n` with the first string that produced each, sorted by
/// canonical code.
pub fn leader_strings(n: usize) -> Result<Vec<(BranchString, CanonicalCode)>> {
    check_bounds("n", n, 4, 12)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in candidate_strings(n) {
        debug_assert_eq!(s.vertex_count(), n);
        let tree = s.materialize();
        if !tree.is_poset_leader() {
            continue;
        }
        let code = canonical_code(&tree);
        if seen.insert(code.clone()) {
            out.push((s, code));
        }
    }
    out.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(out)
}

/// Leaders of order `n` from branch strings, as canonical representatives.
pub fn leaders_partition(n: usize) -> Result<Vec<Tree>> {
    Ok(leader_strings(n)?
        .into_iter()
        .map(|(s, _)| canonical_form(&s.materialize()).1)
        .collect())
}

/// Leaders of order `n` by filtering every isomorphism class.
pub fn leaders_structural(n: usize) -> Result<Vec<Tree>> {
    check_bounds("n", n, 4, 12)?;
    Ok(enumerate_trees(n)?
        .into_iter()
        .filter(Tree::is_poset_leader)
        .collect())
}

/// One census row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusRow {
    pub n: usize,
    pub leader_count: usize,
    pub codes: Vec<CanonicalCode>,
    pub poset_sizes: Vec<usize>,
    pub agreement: bool,
}

/// Leader counts, poset sizes and enumerator agreement for each order.
pub fn leader_census(n_min: usize, n_max: usize) -> Result<Vec<CensusRow>> {
    check_bounds("n_min", n_min, 4, 12)?;
    check_bounds("n_max", n_max, n_min, 12)?;
    (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let structural = leaders_structural(n)?;
            let codes: Vec<CanonicalCode> = structural.iter().map(canonical_code).collect();
            let partition: Vec<CanonicalCode> =
                leader_strings(n)?.into_iter().map(|(_, c)| c).collect();
            let poset_sizes = structural
                .iter()
                .map(|t| build_poset(t).map(|p| p.len()))
                .collect::<Result<Vec<_>>>()?;
            Ok(CensusRow {
                n,
                leader_count: codes.len(),
                agreement: partition == codes,
                codes,
                poset_sizes,
            })
        })
        .collect()
}

/// CSV with columns `n,leader_count,codes,poset_sizes,agreement`; list
/// columns are `;`-separated.
pub fn census_csv(rows: &[CensusRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Domain(e.to_string());
    w.write_record(["n", "leader_count", "codes", "poset_sizes", "agreement"])
        .map_err(io)?;
    for r in rows {
        let join = |v: Vec<String>| v.join(";");
        w.write_record([
            r.n.to_string(),
            r.leader_count.to_string(),
            join(r.codes.iter().map(ToString::to_string).collect()),
            join(r.poset_sizes.iter().map(ToString::to_string).collect()),
            r.agreement.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
