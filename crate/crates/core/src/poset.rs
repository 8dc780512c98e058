//! Grafting and the posets it induces on tree topologies.
//!
//! Grafting takes a leaf edge `(n_1, n_2)` whose support `n_1` has degree 2
//! and re-hangs the leaf `n_2` from `v`, the far end of the sibling edge
//! `(n_1, v)`. A poset is the closure of a leader under grafting, stored as
//! a directed super-graph over isomorphism classes.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canon::{canonical_code, canonical_form, enumerate_trees, CanonicalCode};
use crate::error::{check_bounds, Error, Result};
use crate::tree::{EdgeRef, Tree};

/// Grafts `edge` keeping vertex labels; also returns the paste vertex `v`.
pub fn graft_labeled(tree: &Tree, edge: EdgeRef) -> Result<(Tree, usize)> {
    let (n1, n2) = edge.endpoints();
    let valid = edge.support().is_some()
        && tree.has_edge(n1, n2)
        && tree.is_leaf(n2)
        && tree.degree(n1) == 2;
    if !valid {
        return Err(Error::Structural(format!(
            "({n1}, {n2}) is not a graftable edge (needs leaf {n2} on a degree-2 support)"
        )));
    }
    let v = tree
        .neighbors(n1)
        .iter()
        .copied()
        .find(|&w| w != n2)
        .expect("degree-2 support has a sibling edge");
    let edges = tree
        .edges()
        .iter()
        .map(|&(a, b)| {
            if (a, b) == (n1, n2) || (a, b) == (n2, n1) {
                (v, n2)
            } else {
                (a, b)
            }
        })
        .collect();
    Ok((Tree::new(tree.order(), edges)?, v))
}

/// Grafts `edge` and returns the canonical representative of the result.
pub fn graft(tree: &Tree, edge: EdgeRef) -> Result<Tree> {
    let (grafted, _) = graft_labeled(tree, edge)?;
    Ok(canonical_form(&grafted).1)
}

/// One isomorphism class in a poset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetNode {
    pub code: CanonicalCode,
    pub tree: Tree,
    /// Shortest grafting distance from the leader.
    pub level: usize,
    /// Longest grafting distance from the leader.
    pub max_level: usize,
    /// Number of graftable edges.
    pub alpha: usize,
}

/// A grafting arc between classes. `edge` is one grafted edge in the
/// parent's labeling; `multiplicity` counts the graftable edges of the
/// parent that land in the same child class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetArc {
    pub from: usize,
    pub to: usize,
    pub multiplicity: usize,
    pub edge: EdgeRef,
}

/// Directed super-graph of the classes reachable from a leader.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poset {
    pub n: usize,
    pub nodes: Vec<PosetNode>,
    pub arcs: Vec<PosetArc>,
    pub leader: usize,
    pub lf: usize,
}

/// Outcome of a comparability query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Equal,
    /// The first tree reaches the second by grafting (`x ⪰ y`).
    Above,
    /// The second tree reaches the first (`y ⪰ x`).
    Below,
    Incomparable,
}

impl Relation {
    pub fn is_comparable(self) -> bool {
        self != Relation::Incomparable
    }
}

impl Poset {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, code: &CanonicalCode) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| &n.code == code)
            .ok_or_else(|| Error::Lookup(code.to_hex()))
    }

    pub fn leader(&self) -> &PosetNode {
        &self.nodes[self.leader]
    }

    pub fn lf(&self) -> &PosetNode {
        &self.nodes[self.lf]
    }

    pub fn children(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs.iter().filter(move |a| a.from == i).map(|a| a.to)
    }

    pub fn parents(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs.iter().filter(move |a| a.to == i).map(|a| a.from)
    }

    /// Whether a directed grafting path leads from `from` to `to` (reflexive).
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            if !std::mem::replace(&mut seen[u], true) {
                stack.extend(self.children(u));
            }
        }
        false
    }

    /// Shortest and longest number of grafts from node `i` down to the sink.
    pub fn distances_to_lf(&self, i: usize) -> (usize, usize) {
        let order = self.topological_order();
        let mut shortest = vec![usize::MAX; self.nodes.len()];
        let mut longest = vec![0usize; self.nodes.len()];
        shortest[self.lf] = 0;
        for &u in order.iter().rev() {
            for c in self.children(u) {
                if shortest[c] != usize::MAX {
                    shortest[u] = shortest[u].min(shortest[c] + 1);
                    longest[u] = longest[u].max(longest[c] + 1);
                }
            }
        }
        (shortest[i], longest[i])
    }

    /// Every directed path from the leader to the sink, as node indices.
    pub fn maximal_chains(&self) -> Vec<Vec<usize>> {
        fn walk(p: &Poset, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            let u = *path.last().expect("nonempty path");
            if u == p.lf {
                out.push(path.clone());
                return;
            }
            for c in p.children(u) {
                path.push(c);
                walk(p, path, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        walk(self, &mut vec![self.leader], &mut out);
        out
    }

    /// Node indices ordered so every arc points forward.
    fn topological_order(&self) -> Vec<usize> {
        // grafting turns a degree-2 support into a leaf, so leaf counts
        // strictly increase along arcs (n ≥ 4)
        let mut idx: Vec<usize> = (0..self.nodes.len()).collect();
        idx.sort_by_key(|&i| (self.nodes[i].tree.leaves().len(), i));
        idx
    }
}

/// Closes `leader` under grafting, breadth first, merging isomorphic results.
pub fn build_poset(leader: &Tree) -> Result<Poset> {
    if !leader.is_poset_leader() {
        return Err(Error::Precondition(format!(
            "{leader} has a vertex with two leaf neighbours, so it is not a poset leader"
        )));
    }
    if leader.order() < 4 {
        return Err(Error::Precondition(
            "posets are defined for trees on at least 4 vertices".into(),
        ));
    }
    let (leader_code, leader_tree) = canonical_form(leader);
    let mut index: HashMap<CanonicalCode, usize> = HashMap::new();
    let mut nodes: Vec<(CanonicalCode, Tree, usize)> = vec![(leader_code.clone(), leader_tree, 0)];
    index.insert(leader_code, 0);
    // (from, to) -> (multiplicity, first edge)
    let mut arcs: BTreeMap<(usize, usize), (usize, EdgeRef)> = BTreeMap::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let tree = nodes[u].1.clone();
        let level = nodes[u].2;
        for edge in tree.graftable_edges() {
            let (code, rep) = canonical_form(&graft_labeled(&tree, edge)?.0);
            let to = match index.get(&code) {
                Some(&i) => i,
                None => {
                    let i = nodes.len();
                    index.insert(code.clone(), i);
                    nodes.push((code, rep, level + 1));
                    queue.push_back(i);
                    i
                }
            };
            arcs.entry((u, to))
                .and_modify(|e| e.0 += 1)
                .or_insert((1, edge));
        }
    }

    // relabel nodes by (level, code) so the layout is labeling-independent
    let mut perm: Vec<usize> = (0..nodes.len()).collect();
    perm.sort_by(|&a, &b| (nodes[a].2, &nodes[a].0).cmp(&(nodes[b].2, &nodes[b].0)));
    let mut new_index = vec![0; nodes.len()];
    for (new, &old) in perm.iter().enumerate() {
        new_index[old] = new;
    }
    let mut poset = Poset {
        n: leader.order(),
        nodes: perm
            .iter()
            .map(|&old| {
                let (code, tree, level) = nodes[old].clone();
                let alpha = tree.graftable_edges().len();
                PosetNode {
                    code,
                    tree,
                    level,
                    max_level: 0,
                    alpha,
                }
            })
            .collect(),
        arcs: arcs
            .into_iter()
            .map(|((f, t), (multiplicity, edge))| PosetArc {
                from: new_index[f],
                to: new_index[t],
                multiplicity,
                edge,
            })
            .collect(),
        leader: 0,
        lf: 0,
    };
    poset.arcs.sort_by_key(|a| (a.from, a.to));

    let sinks: Vec<usize> = (0..poset.nodes.len())
        .filter(|&i| poset.children(i).next().is_none())
        .collect();
    match sinks.as_slice() {
        [lf] => poset.lf = *lf,
        _ => {
            return Err(Error::Structural(format!(
                "grafting closure of {leader} has {} sinks, expected exactly one",
                sinks.len()
            )))
        }
    }
    for &u in &poset.topological_order() {
        let children: Vec<usize> = poset.children(u).collect();
        for c in children {
            poset.nodes[c].max_level = poset.nodes[c].max_level.max(poset.nodes[u].max_level + 1);
        }
    }
    Ok(poset)
}

/// Relation between two classes of a poset, by directed reachability.
pub fn is_comparable(poset: &Poset, x: &CanonicalCode, y: &CanonicalCode) -> Result<Relation> {
    let (i, j) = (poset.index_of(x)?, poset.index_of(y)?);
    Ok(if i == j {
        Relation::Equal
    } else if poset.reaches(i, j) {
        Relation::Above
    } else if poset.reaches(j, i) {
        Relation::Below
    } else {
        Relation::Incomparable
    })
}

/// Membership of each class of order `n` across the posets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub n: usize,
    pub total_classes: usize,
    pub sizes: Vec<usize>,
    /// For every class (sorted by code), the indices of the posets containing it.
    pub membership: Vec<(CanonicalCode, Vec<usize>)>,
    pub uncovered: usize,
    pub overlapping: usize,
    pub disjoint: bool,
}

/// Posets for every leader of order `n` plus a coverage report.
pub fn build_all_posets(n: usize) -> Result<(Vec<Poset>, Coverage)> {
    check_bounds("n", n, 4, 12)?;
    let trees = enumerate_trees(n)?;
    let leaders: Vec<&Tree> = trees.iter().filter(|t| t.is_poset_leader()).collect();
    let posets = leaders
        .par_iter()
        .map(|t| build_poset(t))
        .collect::<Result<Vec<_>>>()?;
    let membership: Vec<(CanonicalCode, Vec<usize>)> = trees
        .iter()
        .map(|t| {
            let code = canonical_code(t);
            let inside = posets
                .iter()
                .enumerate()
                .filter(|(_, p)| p.nodes.iter().any(|node| node.code == code))
                .map(|(i, _)| i)
                .collect();
            (code, inside)
        })
        .collect();
    let uncovered = membership.iter().filter(|(_, m)| m.is_empty()).count();
    let overlapping = membership.iter().filter(|(_, m)| m.len() > 1).count();
    let coverage = Coverage {
        n,
        total_classes: trees.len(),
        sizes: posets.iter().map(Poset::len).collect(),
        membership,
        uncovered,
        overlapping,
        disjoint: overlapping == 0,
    };
    Ok((posets, coverage))
}

/// Grafts random graftable edges until none remain; returns the final class.
pub fn random_maximal_grafting<R: Rng + ?Sized>(
    start: &Tree,
    rng: &mut R,
) -> Result<(CanonicalCode, usize)> {
    let mut tree = start.clone();
    let mut steps = 0;
    loop {
        let edges = tree.graftable_edges();
        let Some(&edge) = edges.choose(rng) else {
            return Ok((canonical_code(&tree), steps));
        };
        tree = graft_labeled(&tree, edge)?.0;
        steps += 1;
        if steps > start.order() * start.order() {
            return Err(Error::Structural(format!(
                "grafting from {start} did not terminate"
            )));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Dot,
    Json,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    code: CanonicalCode,
    level: usize,
    max_level: usize,
    alpha: usize,
}

#[derive(Serialize, Deserialize)]
struct ArcJson {
    from: CanonicalCode,
    to: CanonicalCode,
    multiplicity: usize,
    edge: (usize, usize),
}

#[derive(Serialize, Deserialize)]
struct PosetJson {
    n: usize,
    leader: CanonicalCode,
    lf: CanonicalCode,
    nodes: Vec<NodeJson>,
    arcs: Vec<ArcJson>,
}

/// Renders a poset as a DOT digraph or as JSON.
pub fn export_poset(poset: &Poset, format: ExportFormat) -> String {
    match format {
        ExportFormat::Dot => to_dot(poset),
        ExportFormat::Json => to_json(poset),
    }
}

fn to_dot(poset: &Poset) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph poset {{");
    let _ = writeln!(s, "  rankdir=TB;");
    let _ = writeln!(s, "  node [shape=box, fontname=\"monospace\"];");
    for (i, node) in poset.nodes.iter().enumerate() {
        let role = if i == poset.leader && i == poset.lf {
            "\\nMF, LF"
        } else if i == poset.leader {
            "\\nMF"
        } else if i == poset.lf {
            "\\nLF"
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "  t{i} [label=\"{}\\nalpha={} level={}{role}\"];",
            node.code, node.alpha, node.level
        );
    }
    for arc in &poset.arcs {
        if arc.multiplicity > 1 {
            let _ = writeln!(
                s,
                "  t{} -> t{} [label=\"x{}\"];",
                arc.from, arc.to, arc.multiplicity
            );
        } else {
            let _ = writeln!(s, "  t{} -> t{};", arc.from, arc.to);
        }
    }
    s.push_str("}\n");
    s
}

fn to_json(poset: &Poset) -> String {
    let doc = PosetJson {
        n: poset.n,
        leader: poset.leader().code.clone(),
        lf: poset.lf().code.clone(),
        nodes: poset
            .nodes
            .iter()
            .map(|n| NodeJson {
                code: n.code.clone(),
                level: n.level,
                max_level: n.max_level,
                alpha: n.alpha,
            })
            .collect(),
        arcs: poset
            .arcs
            .iter()
            .map(|a| ArcJson {
                from: poset.nodes[a.from].code.clone(),
                to: poset.nodes[a.to].code.clone(),
                multiplicity: a.multiplicity,
                edge: a.edge.endpoints(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("poset serialises")
}

/// Reads a poset back from its JSON export.
pub fn import_poset(json: &str) -> Result<Poset> {
    let doc: PosetJson = serde_json::from_str(json).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| {
            Ok(PosetNode {
                tree: n.code.to_tree()?,
                code: n.code,
                level: n.level,
                max_level: n.max_level,
                alpha: n.alpha,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let find = |c: &CanonicalCode| {
        nodes
            .iter()
            .position(|n| &n.code == c)
            .ok_or_else(|| Error::Lookup(c.to_hex()))
    };
    let arcs = doc
        .arcs
        .iter()
        .map(|a| {
            let from = find(&a.from)?;
            let edge = EdgeRef::leaf(&nodes[from].tree, a.edge.0, a.edge.1)?;
            Ok(PosetArc {
                from,
                to: find(&a.to)?,
                multiplicity: a.multiplicity,
                edge,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Poset {
        n: doc.n,
        leader: find(&doc.leader)?,
        lf: find(&doc.lf)?,
        nodes,
        arcs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn code(t: &Tree) -> CanonicalCode {
        canonical_code(t)
    }

    #[test]
    fn p4_grafts_to_star() {
        let p4 = Tree::path(4).unwrap();
        for e in p4.graftable_edges() {
            assert_eq!(code(&graft(&p4, e).unwrap()), code(&Tree::star(3).unwrap()));
        }
    }

    #[test]
    fn spider_123_short_tip() {
        let s = Tree::spider(&[1, 2, 3]).unwrap();
        // leg of length 2 is 0-2-3
        let e = EdgeRef::leaf(&s, 2, 3).unwrap();
        let got = graft(&s, e).unwrap();
        // centre with three leaves and a pendant path of length 3
        let want = Tree::new(7, vec![(0, 1), (0, 2), (0, 3), (0, 4), (4, 5), (5, 6)]).unwrap();
        assert_eq!(code(&got), code(&want));
    }

    #[test]
    fn spider_222_tips_agree() {
        let s = Tree::spider(&[2, 2, 2]).unwrap();
        let codes: Vec<_> = s
            .graftable_edges()
            .iter()
            .map(|&e| code(&graft(&s, e).unwrap()))
            .collect();
        assert_eq!(codes.len(), 3);
        assert!(codes.windows(2).all(|w| w[0] == w[1]));
        let want = Tree::new(7, vec![(0, 1), (0, 2), (0, 3), (3, 4), (0, 5), (5, 6)]).unwrap();
        assert_eq!(codes[0], code(&want));
    }

    #[test]
    fn non_graftable_edges_rejected() {
        let s = Tree::spider(&[1, 2, 3]).unwrap();
        let short = EdgeRef::leaf(&s, 0, 1).unwrap();
        assert!(matches!(graft(&s, short), Err(Error::Structural(_))));
        let inner = EdgeRef::new(&s, 0, 2).unwrap();
        assert!(graft(&s, inner).is_err());
    }

    #[test]
    fn posets_of_seven() {
        let p7 = build_poset(&Tree::path(7).unwrap()).unwrap();
        assert_eq!(p7.len(), 3);
        assert_eq!(p7.arcs.len(), 2);
        let s123 = build_poset(&Tree::spider(&[1, 2, 3]).unwrap()).unwrap();
        assert_eq!(s123.len(), 4);
        assert_eq!(s123.arcs.len(), 4);
        let (l, r) = (&s123.nodes[1].code, &s123.nodes[2].code);
        assert_eq!(is_comparable(&s123, l, r).unwrap(), Relation::Incomparable);
        let s222 = build_poset(&Tree::spider(&[2, 2, 2]).unwrap()).unwrap();
        assert_eq!(s222.len(), 4);
        assert_eq!(s222.arcs.len(), 3);
        assert_eq!(s222.lf().level, 3);
    }

    #[test]
    fn comparability() {
        let p = build_poset(&Tree::spider(&[1, 2, 3]).unwrap()).unwrap();
        let (m, l) = (p.leader().code.clone(), p.lf().code.clone());
        assert_eq!(is_comparable(&p, &m, &l).unwrap(), Relation::Above);
        assert_eq!(is_comparable(&p, &l, &m).unwrap(), Relation::Below);
        assert_eq!(is_comparable(&p, &m, &m).unwrap(), Relation::Equal);
        for node in &p.nodes {
            assert!(is_comparable(&p, &m, &node.code).unwrap().is_comparable());
            assert!(is_comparable(&p, &node.code, &l).unwrap().is_comparable());
        }
        let stranger = code(&Tree::path(7).unwrap());
        assert!(matches!(
            is_comparable(&p, &stranger, &m),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn non_leader_rejected() {
        assert!(matches!(
            build_poset(&Tree::star(4).unwrap()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn small_orders() {
        let (p4, c4) = build_all_posets(4).unwrap();
        assert_eq!(p4.len(), 1);
        assert_eq!(p4[0].len(), 2);
        assert!(c4.disjoint && c4.uncovered == 0);
        let (p5, _) = build_all_posets(5).unwrap();
        assert_eq!(p5.len(), 1);
        assert_eq!(p5[0].len(), 3);
        assert!(build_all_posets(3).is_err());
        assert!(build_all_posets(13).is_err());
    }

    #[test]
    fn distances_to_lf() {
        let p = build_poset(&Tree::spider(&[1, 2, 3]).unwrap()).unwrap();
        assert_eq!(p.distances_to_lf(p.leader), (2, 2));
        assert_eq!(p.distances_to_lf(p.lf), (0, 0));
        let p4 = build_poset(&Tree::path(4).unwrap()).unwrap();
        assert_eq!(p4.distances_to_lf(p4.leader), (1, 1));
    }

    #[test]
    fn dot_and_json_exports() {
        let p = build_poset(&Tree::spider(&[1, 2, 3]).unwrap()).unwrap();
        let dot = export_poset(&p, ExportFormat::Dot);
        assert_eq!(dot.matches("\\nalpha=").count(), 4);
        assert_eq!(dot.matches(" -> ").count(), 4);
        let json = export_poset(&p, ExportFormat::Json);
        assert_eq!(import_poset(&json).unwrap(), p);
        assert_eq!(
            export_poset(&import_poset(&json).unwrap(), ExportFormat::Json),
            json
        );
        assert!(import_poset("{").is_err());
    }

    #[test]
    fn singleton_export() {
        let star = Tree::star(4).unwrap();
        let (code, tree) = canonical_form(&star);
        let p = Poset {
            n: 5,
            nodes: vec![PosetNode {
                code,
                tree,
                level: 0,
                max_level: 0,
                alpha: 0,
            }],
            arcs: vec![],
            leader: 0,
            lf: 0,
        };
        let dot = export_poset(&p, ExportFormat::Dot);
        assert_eq!(dot.matches("[label=").count(), 1);
        assert_eq!(dot.matches(" -> ").count(), 0);
        assert!(dot.contains("MF, LF"));
    }

    #[test]
    fn random_orders_reach_sink() {
        let leader = Tree::spider(&[2, 2, 3]).unwrap();
        let p = build_poset(&leader).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (end, _) = random_maximal_grafting(&leader, &mut rng).unwrap();
            assert_eq!(end, p.lf().code);
        }
    }
}
