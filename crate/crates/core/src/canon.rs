//! Centre-rooted AHU encoding of unrooted trees.
//!
//! The rooted encoding of a vertex is `(` followed by the sorted encodings of
//! its children and `)`. The unrooted code is the rooted encoding at the
//! centre, or the smaller of the two encodings for a bicentral tree.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_bounds, Error, Result};
use crate::tree::Tree;

const OPEN: u8 = b'(';
const CLOSE: u8 = b')';

/// Isomorphism-class identifier of an unrooted tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCode(Vec<u8>);

impl CanonicalCode {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Lowercase hex rendering used by every text and JSON export.
    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(hex: &str) -> Result<Self> {
        let bad = || Error::Lookup(hex.to_owned());
        if !hex.len().is_multiple_of(2) || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad()))
            .collect::<Result<Vec<u8>>>()?;
        let code = Self(bytes);
        code.to_tree().map_err(|_| bad())?;
        Ok(code)
    }

    /// Rebuilds the canonical representative: vertices labeled in preorder
    /// of the encoding, root = 0.
    pub fn to_tree(&self) -> Result<Tree> {
        let bytes = &self.0;
        let malformed = || Error::InvalidTree("malformed canonical code".into());
        if bytes.len() < 2 || bytes[0] != OPEN {
            return Err(malformed());
        }
        let mut stack: Vec<usize> = Vec::new();
        let mut edges = Vec::new();
        let mut next = 0usize;
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                OPEN => {
                    if stack.is_empty() && i != 0 {
                        return Err(malformed());
                    }
                    if let Some(&parent) = stack.last() {
                        edges.push((parent, next));
                    }
                    stack.push(next);
                    next += 1;
                }
                CLOSE => {
                    stack.pop().ok_or_else(malformed)?;
                }
                _ => return Err(malformed()),
            }
        }
        if !stack.is_empty() {
            return Err(malformed());
        }
        Tree::new(next, edges)
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for CanonicalCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_hex(s)
    }
}

impl Serialize for CanonicalCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CanonicalCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// One or two centre vertices, found by repeatedly stripping leaves.
pub fn centers(tree: &Tree) -> Vec<usize> {
    let n = tree.order();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut degree: Vec<usize> = (0..n).map(|v| tree.degree(v)).collect();
    let mut layer: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &leaf in &layer {
            for &w in tree.neighbors(leaf) {
                degree[w] -= 1;
                if degree[w] == 1 {
                    next.push(w);
                }
            }
        }
        layer = next;
    }
    layer.sort_unstable();
    layer
}

/// AHU encoding of `tree` hung from `root`.
pub fn rooted_encoding(tree: &Tree, root: usize) -> Vec<u8> {
    let parent = tree.parents(root);
    let order = tree.bfs_order(root);
    let mut codes: Vec<Vec<u8>> = vec![Vec::new(); tree.order()];
    for &v in order.iter().rev() {
        let mut children: Vec<Vec<u8>> = tree
            .neighbors(v)
            .iter()
            .filter(|&&w| w != root && parent[w] == v)
            .map(|&w| std::mem::take(&mut codes[w]))
            .collect();
        children.sort_unstable();
        let mut code = Vec::with_capacity(2 + children.iter().map(Vec::len).sum::<usize>());
        code.push(OPEN);
        for c in children {
            code.extend_from_slice(&c);
        }
        code.push(CLOSE);
        codes[v] = code;
    }
    std::mem::take(&mut codes[root])
}

/// Isomorphism-invariant code of an unrooted tree.
pub fn canonical_code(tree: &Tree) -> CanonicalCode {
    let code = centers(tree)
        .into_iter()
        .map(|c| rooted_encoding(tree, c))
        .min()
        .expect("a tree has at least one centre");
    CanonicalCode(code)
}

/// Relabels `tree` onto its canonical representative.
pub fn canonical_form(tree: &Tree) -> (CanonicalCode, Tree) {
    let code = canonical_code(tree);
    let rep = code.to_tree().expect("canonical codes decode");
    (code, rep)
}

/// One representative per isomorphism class of trees on `n` vertices,
/// sorted by canonical code. Each representative is the decoded canonical
/// tree, so the output is independent of how it was generated.
pub fn enumerate_trees(n: usize) -> Result<Vec<Tree>> {
    check_bounds("n", n, 2, 16)?;
    let mut classes: BTreeMap<CanonicalCode, ()> = BTreeMap::new();
    classes.insert(canonical_code(&Tree::path(2)?), ());
    for order in 3..=n {
        let mut next = BTreeMap::new();
        for code in classes.keys() {
            let base = code.to_tree()?;
            for v in 0..base.order() {
                let mut edges = base.edges().to_vec();
                edges.push((v, order - 1));
                let grown = Tree::new(order, edges)?;
                next.insert(canonical_code(&grown), ());
            }
        }
        classes = next;
    }
    classes.into_keys().map(|c| c.to_tree()).collect()
}
