//! Finite rooted trees with planar child order and optional edge lengths.
//!
//! Nodes live in a flat arena and are referenced by `NodeId`. The empty tree
//! (no nodes at all) is a first-class value so that pruning to extinction
//! needs no sentinel errors. Trees are immutable after construction as far as
//! the algorithms in this crate are concerned; every operation returns a
//! fresh tree.

use crate::error::{HortonError, Result};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Index into the tree's node arena.
pub type NodeId = usize;

/// A single node. `len` is the length of the parental edge (None on the root
/// and on combinatorial trees).
#[derive(Debug, Clone)]
pub struct Node {
    pub parent: Option<NodeId>,
    /// Children in planar (left-to-right) order.
    pub children: SmallVec<[NodeId; 2]>,
    /// Length of the edge to the parent.
    pub len: Option<f64>,
}

/// Finite rooted tree stored as an arena. `root == None` encodes the empty
/// tree phi.
#[derive(Debug, Clone, Default)]
pub struct Tree {
    nodes: Vec<Node>,
    root: Option<NodeId>,
}

impl Tree {
    /// The empty tree phi.
    pub fn empty() -> Self {
        Tree::default()
    }

    /// Tree with a single root vertex and no edges.
    pub fn singleton() -> Self {
        let mut t = Tree::empty();
        t.nodes.push(Node {
            parent: None,
            children: SmallVec::new(),
            len: None,
        });
        t.root = Some(0);
        t
    }

    /// Planted tree with one edge of optional length.
    pub fn single_edge(len: Option<f64>) -> Self {
        let mut t = Tree::singleton();
        t.add_child(0, len);
        t
    }

    /// Append a child to `parent`, returning the new id.
    pub fn add_child(&mut self, parent: NodeId, len: Option<f64>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            parent: Some(parent),
            children: SmallVec::new(),
            len,
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of edges, `#T`. Zero for the empty tree and the singleton.
    pub fn edge_count(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].children.is_empty()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    /// Length of the parental edge of `id`.
    pub fn edge_len(&self, id: NodeId) -> Option<f64> {
        self.nodes[id].len
    }

    /// True if every non-root node carries an edge length.
    pub fn is_metric(&self) -> bool {
        self.preorder()
            .filter(|&v| Some(v) != self.root)
            .all(|v| self.nodes[v].len.is_some())
    }

    /// True if the root has exactly one child (and the tree is nonempty).
    pub fn is_planted(&self) -> bool {
        self.root
            .map(|r| self.nodes[r].children.len() == 1)
            .unwrap_or(false)
    }

    /// True if every internal vertex has exactly two children (root may have
    /// one in a planted tree).
    pub fn is_binary(&self) -> bool {
        self.preorder().all(|v| {
            let d = self.nodes[v].children.len();
            if Some(v) == self.root {
                d <= 2
            } else {
                d == 0 || d == 2
            }
        })
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.preorder().filter(|&v| self.is_leaf(v)).count()
    }

    /// Depth-first preorder traversal (left-to-right children order).
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder {
            tree: self,
            stack: self.root.into_iter().collect(),
        }
    }

    /// Postorder sequence (children before parents).
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<NodeId> = self.root.into_iter().collect();
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend_from_slice(&self.nodes[v].children);
        }
        out.reverse();
        out
    }

    /// Check arena invariants: one root, consistent parent/child links, no
    /// cycles, everything reachable.
    pub fn validate(&self) -> Result<()> {
        let Some(root) = self.root else {
            if self.nodes.is_empty() {
                return Ok(());
            }
            return Err(HortonError::Structure(
                "nodes present but no root".into(),
            ));
        };
        if root >= self.nodes.len() {
            return Err(HortonError::Structure(format!("root id {root} out of range")));
        }
        if self.nodes[root].parent.is_some() {
            return Err(HortonError::Structure("root has a parent".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(HortonError::Structure(format!("node {v} visited twice")));
            }
            seen[v] = true;
            for &c in self.nodes[v].children.iter() {
                if c >= self.nodes.len() {
                    return Err(HortonError::Structure(format!(
                        "child id {c} of node {v} out of range"
                    )));
                }
                if self.nodes[c].parent != Some(v) {
                    return Err(HortonError::Structure(format!(
                        "child {c} does not point back to parent {v}"
                    )));
                }
                stack.push(c);
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(HortonError::Structure(format!(
                "node {orphan} unreachable from root"
            )));
        }
        Ok(())
    }

    /// Reverse the planar order of `id`'s children.
    pub fn swap_children(&mut self, id: NodeId) {
        self.nodes[id].children.reverse();
    }

    /// Depth of `id` in edges from the root.
    pub fn depth(&self, id: NodeId) -> usize {
        let mut d = 0;
        let mut v = id;
        while let Some(p) = self.nodes[v].parent {
            d += 1;
            v = p;
        }
        d
    }
}

pub struct Preorder<'a> {
    tree: &'a Tree,
    stack: Vec<NodeId>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = NodeId;
    fn next(&mut self) -> Option<NodeId> {
        let v = self.stack.pop()?;
        for &c in self.tree.nodes[v].children.iter().rev() {
            self.stack.push(c);
        }
        Some(v)
    }
}

/// Combinatorial and metric summary of a tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeMetrics {
    /// Sum of all edge lengths.
    pub length: f64,
    /// Maximal distance from the root to a vertex.
    pub height: f64,
    pub leaves: usize,
    /// Number of edges.
    pub size: usize,
}

/// Total length, height, leaf and edge counts.
///
/// Errors on a nonempty non-metric tree; the empty tree reports zeros.
pub fn tree_metrics(t: &Tree) -> Result<TreeMetrics> {
    if t.is_empty() {
        return Ok(TreeMetrics {
            length: 0.0,
            height: 0.0,
            leaves: 0,
            size: 0,
        });
    }
    if t.edge_count() > 0 && !t.is_metric() {
        return Err(HortonError::MissingLengths("tree_metrics".into()));
    }
    let mut length = 0.0;
    let mut height: f64 = 0.0;
    let mut leaves = 0;
    // depth accumulated along the preorder walk
    let mut dist = vec![0.0; t.node_count()];
    for v in t.preorder() {
        if let Some(p) = t.parent(v) {
            let l = t.edge_len(v).unwrap_or(0.0);
            length += l;
            dist[v] = dist[p] + l;
            height = height.max(dist[v]);
        }
        if t.is_leaf(v) {
            leaves += 1;
        }
    }
    Ok(TreeMetrics {
        length,
        height,
        leaves,
        size: t.edge_count(),
    })
}

/// Remove every degree-two non-root vertex, merging its two edges (summing
/// lengths on metric trees). Planar order is preserved.
pub fn series_reduction(t: &Tree) -> Tree {
    let Some(root) = t.root() else {
        return Tree::empty();
    };
    let mut out = Tree::singleton();
    // stack of (old node, new parent, accumulated length through elided
    // degree-2 vertices)
    let mut stack: Vec<(NodeId, NodeId, Option<f64>)> = t
        .children(root)
        .iter()
        .rev()
        .map(|&c| (c, 0, None))
        .collect();
    while let Some((old, new_parent, acc)) = stack.pop() {
        let len = match (acc, t.edge_len(old)) {
            (Some(a), Some(l)) => Some(a + l),
            (None, l) => l,
            (Some(a), None) => Some(a),
        };
        let kids = t.children(old);
        if kids.len() == 1 {
            // degree-2 vertex: skip it, extending the edge
            stack.push((kids[0], new_parent, len));
        } else {
            let id = out.add_child(new_parent, len);
            for &c in kids.iter().rev() {
                stack.push((c, id, None));
            }
        }
    }
    out
}

/// Horton pruning: remove the leaves and their parental edges, then apply
/// series reduction. Returns the pruned tree and a map from old ids to new
/// ids (None for removed or elided vertices).
pub fn horton_prune(t: &Tree) -> (Tree, Vec<Option<NodeId>>) {
    let Some(root) = t.root() else {
        return (Tree::empty(), Vec::new());
    };
    let mut map = vec![None; t.node_count()];
    // A bare root (0 edges) is identified with phi, and a tree whose every
    // root child is a leaf strips down to a bare root: both prune to phi.
    if t.children(root).iter().all(|&c| t.is_leaf(c)) {
        return (Tree::empty(), map);
    }
    // Build the leaf-stripped tree, series-reducing on the fly while
    // tracking surviving ids.
    let mut out = Tree::singleton();
    map[root] = Some(0);
    let mut stack: Vec<(NodeId, NodeId, Option<f64>)> = t
        .children(root)
        .iter()
        .rev()
        .filter(|&&c| !t.is_leaf(c))
        .map(|&c| (c, 0, None))
        .collect();
    while let Some((old, new_parent, acc)) = stack.pop() {
        let len = match (acc, t.edge_len(old)) {
            (Some(a), Some(l)) => Some(a + l),
            (None, l) => l,
            (Some(a), None) => Some(a),
        };
        let kids: Vec<NodeId> = t
            .children(old)
            .iter()
            .copied()
            .filter(|&c| !t.is_leaf(c))
            .collect();
        if kids.len() == 1 {
            stack.push((kids[0], new_parent, len));
        } else {
            let id = out.add_child(new_parent, len);
            map[old] = Some(id);
            for &c in kids.iter().rev() {
                stack.push((c, id, None));
            }
        }
    }
    (out, map)
}

// ---------------------------------------------------------------------------
// Serialization: JSON arena format and Newick export.
// ---------------------------------------------------------------------------

/// On-disk JSON representation:
/// `{"root": id|null, "nodes": [{"id", "parent", "children", "len"}]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct TreeFile {
    pub root: Option<usize>,
    pub nodes: Vec<NodeFile>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NodeFile {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub len: Option<f64>,
}

impl From<&Tree> for TreeFile {
    fn from(t: &Tree) -> Self {
        TreeFile {
            root: t.root(),
            nodes: (0..t.node_count())
                .map(|id| NodeFile {
                    id,
                    parent: t.nodes[id].parent,
                    children: t.nodes[id].children.to_vec(),
                    len: t.nodes[id].len,
                })
                .collect(),
        }
    }
}

impl TreeFile {
    /// Rebuild the arena, validating ids and link consistency.
    pub fn into_tree(self) -> Result<Tree> {
        let n = self.nodes.len();
        let mut nodes: Vec<Option<Node>> = (0..n).map(|_| None).collect();
        for nf in self.nodes {
            if nf.id >= n {
                return Err(HortonError::Structure(format!(
                    "node id {} out of range (have {} nodes)",
                    nf.id, n
                )));
            }
            if nodes[nf.id].is_some() {
                return Err(HortonError::Structure(format!("duplicate node id {}", nf.id)));
            }
            nodes[nf.id] = Some(Node {
                parent: nf.parent,
                children: nf.children.into_iter().collect(),
                len: nf.len,
            });
        }
        let nodes: Vec<Node> = nodes
            .into_iter()
            .enumerate()
            .map(|(id, n)| n.ok_or(HortonError::Structure(format!("missing node id {id}"))))
            .collect::<Result<_>>()?;
        let t = Tree {
            nodes,
            root: self.root,
        };
        t.validate()?;
        Ok(t)
    }
}

impl Tree {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&TreeFile::from(self)).expect("tree serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Tree> {
        let tf: TreeFile = serde_json::from_str(s)
            .map_err(|e| HortonError::Structure(format!("tree JSON parse error: {e}")))?;
        tf.into_tree()
    }

    /// Newick string with branch lengths, planar order preserved.
    pub fn to_newick(&self) -> String {
        fn rec(t: &Tree, v: NodeId, out: &mut String) {
            if !t.is_leaf(v) {
                out.push('(');
                for (i, &c) in t.children(v).iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    rec(t, c, out);
                }
                out.push(')');
            }
            if let Some(l) = t.edge_len(v) {
                out.push_str(&format!(":{l}"));
            }
        }
        let mut s = String::new();
        match self.root() {
            None => s.push(';'),
            Some(r) => {
                rec(self, r, &mut s);
                s.push(';');
            }
        }
        s
    }
}
