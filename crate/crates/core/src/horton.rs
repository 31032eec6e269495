//! Horton-Strahler orders, branch decomposition, and Tokunaga indices.
//!
//! Leaves get order 1; a parent whose children have orders `i_1..i_m` gets
//! `max` if the maximum is unique, `max + 1` otherwise. A branch is a maximal
//! connected set of vertices/edges of one order. In binary trees each branch
//! below the top order carries a Tokunaga index {i, j}: its own order i and
//! the order j of the sibling of its initial vertex.

use crate::error::{HortonError, Result};
use crate::tree::{NodeId, Tree};

/// One branch of the decomposition.
#[derive(Debug, Clone)]
pub struct Branch {
    pub order: u32,
    /// Vertices of the branch from the initial vertex (closest to root) down
    /// to the terminal vertex.
    pub path: Vec<NodeId>,
    /// Tokunaga index (i, j), `i <= j`; None for the top-order branch of the
    /// tree and on non-binary trees.
    pub tokunaga: Option<(u32, u32)>,
    /// Total length of the branch edges (0 on combinatorial trees).
    pub length: f64,
}

/// Per-node orders plus branch statistics of one tree.
#[derive(Debug, Clone)]
pub struct HortonAnnotation {
    /// Horton-Strahler order of every node.
    pub node_order: Vec<u32>,
    pub branches: Vec<Branch>,
    /// ord(T): the order of the whole tree.
    pub tree_order: u32,
    /// `branch_counts[k-1]` = N_k, number of branches of order k.
    pub branch_counts: Vec<u64>,
    /// Side-branch counts N_{i,j} for i < j, in a triangular table; present
    /// only for binary trees.
    side_counts: Option<Vec<Vec<u64>>>,
}

impl HortonAnnotation {
    /// N_k for 1 <= k <= ord(T).
    pub fn n_k(&self, k: u32) -> u64 {
        self.branch_counts
            .get((k as usize).wrapping_sub(1))
            .copied()
            .unwrap_or(0)
    }

    /// N_{i,j} side-branch counts; errors on non-binary trees.
    pub fn n_ij(&self, i: u32, j: u32) -> Result<u64> {
        let t = self.side_counts.as_ref().ok_or_else(|| {
            HortonError::UnsupportedShape("Tokunaga indexing requires a binary tree".into())
        })?;
        if i == 0 || j <= i || j > self.tree_order {
            return Ok(0);
        }
        Ok(t[(i - 1) as usize][(j - i - 1) as usize])
    }

    pub fn has_tokunaga(&self) -> bool {
        self.side_counts.is_some()
    }

    /// Check the counting identity N_k = 2 N_{k+1} + sum_{j>k} N_{k,j}
    /// for every 1 <= k < ord(T).
    pub fn counting_identity_holds(&self) -> Result<bool> {
        let k_max = self.tree_order;
        for k in 1..k_max {
            let mut side = 0u64;
            for j in (k + 1)..=k_max {
                side += self.n_ij(k, j)?;
            }
            if self.n_k(k) != 2 * self.n_k(k + 1) + side {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Verify that a table of branch counts and side-branch counts satisfies the
/// counting identity N_k = 2 N_{k+1} + sum_{j>k} N_{k,j}. `n[k-1]` holds N_k;
/// `nij` maps (i, j) -> N_{i,j}.
pub fn counting_identity(n: &[u64], nij: &dyn Fn(u32, u32) -> u64) -> bool {
    let k_max = n.len() as u32;
    (1..k_max).all(|k| {
        let side: u64 = ((k + 1)..=k_max).map(|j| nij(k, j)).sum();
        n[(k - 1) as usize] == 2 * n[k as usize] + side
    })
}

/// Assign Horton-Strahler orders and decompose into branches.
///
/// The tree must be nonempty; it need not be binary (Tokunaga indices are
/// then unavailable).
pub fn assign_orders(t: &Tree) -> Result<HortonAnnotation> {
    let root = t
        .root()
        .ok_or_else(|| HortonError::InvalidSample("cannot order the empty tree".into()))?;
    let n = t.node_count();
    let mut order = vec![0u32; n];
    for v in t.postorder() {
        let kids = t.children(v);
        if kids.is_empty() {
            order[v] = 1;
        } else {
            let mut best = 0u32;
            let mut ties = 0;
            for &c in kids {
                match order[c].cmp(&best) {
                    std::cmp::Ordering::Greater => {
                        best = order[c];
                        ties = 1;
                    }
                    std::cmp::Ordering::Equal => ties += 1,
                    std::cmp::Ordering::Less => {}
                }
            }
            order[v] = if ties >= 2 && kids.len() > 1 { best + 1 } else { best };
        }
    }
    // A planted tree's root inherits the stem order (it has one child of the
    // same subtree), which the rule above already produces.
    let tree_order = order[root];

    // Branch decomposition: walk preorder; a vertex starts a new branch when
    // its order differs from its parent's (or it is the root).
    let mut branch_of = vec![usize::MAX; n];
    let mut branches: Vec<Branch> = Vec::new();
    for v in t.preorder() {
        let parent_branch = t
            .parent(v)
            .filter(|&p| order[p] == order[v])
            .map(|p| branch_of[p]);
        match parent_branch {
            Some(b) => {
                branch_of[v] = b;
                branches[b].path.push(v);
                branches[b].length += t.edge_len(v).unwrap_or(0.0);
            }
            None => {
                branch_of[v] = branches.len();
                let mut length = 0.0;
                if t.parent(v).is_some() {
                    length = t.edge_len(v).unwrap_or(0.0);
                }
                branches.push(Branch {
                    order: order[v],
                    path: vec![v],
                    tokunaga: None,
                    length,
                });
            }
        }
    }

    let binary = t.is_binary();
    let mut side_counts = if binary {
        Some(
            (0..tree_order as usize)
                .map(|i| vec![0u64; tree_order as usize - i])
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };

    // Tokunaga index of each branch: (own order, order of the sibling of the
    // initial vertex). The top-order branch has no sibling.
    if binary {
        for b in branches.iter_mut() {
            let init = b.path[0];
            let Some(p) = t.parent(init) else { continue };
            if order[p] == order[init] {
                continue; // initial vertex of the whole-tree branch via root
            }
            let sib = t
                .children(p)
                .iter()
                .copied()
                .find(|&c| c != init);
            let Some(sib) = sib else { continue }; // stem below a degree-1 root
            let i = b.order;
            let j = order[sib];
            debug_assert!(j >= i);
            b.tokunaga = Some((i, j.max(i)));
            if j > i {
                if let Some(sc) = side_counts.as_mut() {
                    sc[(i - 1) as usize][(j - i - 1) as usize] += 1;
                }
            }
        }
    }

    let mut branch_counts = vec![0u64; tree_order as usize];
    for b in &branches {
        branch_counts[(b.order - 1) as usize] += 1;
    }

    Ok(HortonAnnotation {
        node_order: order,
        branches,
        tree_order,
        branch_counts,
        side_counts,
    })
}

/// ord(T); 0 for the empty tree.
pub fn tree_order(t: &Tree) -> u32 {
    match t.root() {
        None => 0,
        Some(_) => assign_orders(t).map(|a| a.tree_order).unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::horton_prune;

    fn perfect_binary(depth: usize) -> Tree {
        let mut t = Tree::singleton();
        let mut frontier = vec![0];
        for _ in 0..depth {
            let mut next = Vec::new();
            for v in frontier {
                next.push(t.add_child(v, None));
                next.push(t.add_child(v, None));
            }
            frontier = next;
        }
        t
    }

    #[test]
    fn merge_rules() {
        // binary merge of orders (2,2) -> 3
        let mut t = Tree::singleton();
        let v = t.add_child(0, None);
        for _ in 0..2 {
            let c = t.add_child(v, None);
            t.add_child(c, None);
            t.add_child(c, None);
        }
        let a = assign_orders(&t).unwrap();
        assert_eq!(a.node_order[v], 3);

        // merge of orders (1,3) -> 3
        let mut t = Tree::singleton();
        let v = t.add_child(0, None);
        t.add_child(v, None); // order-1 child
        let c = t.add_child(v, None); // order-3 subtree below
        let d1 = t.add_child(c, None);
        let d2 = t.add_child(c, None);
        for d in [d1, d2] {
            t.add_child(d, None);
            t.add_child(d, None);
        }
        let a = assign_orders(&t).unwrap();
        assert_eq!(a.node_order[c], 3);
        assert_eq!(a.node_order[v], 3);
    }

    #[test]
    fn perfect_binary_counts() {
        let t = perfect_binary(4);
        let a = assign_orders(&t).unwrap();
        assert_eq!(a.tree_order, 4);
        assert_eq!(a.branch_counts, vec![8, 4, 2, 1]);
        assert!(a.counting_identity_holds().unwrap());
        // no side branching at all
        for i in 1..4 {
            for j in (i + 1)..=4 {
                assert_eq!(a.n_ij(i, j).unwrap(), 0);
            }
        }
    }

    #[test]
    fn three_leaf_tree_counts() {
        // two leaves merge to order 2; a third leaf joins that branch
        let mut t = Tree::singleton();
        let v = t.add_child(0, None);
        t.add_child(v, None); // side leaf {1,2}
        let w = t.add_child(v, None);
        t.add_child(w, None);
        t.add_child(w, None);
        let a = assign_orders(&t).unwrap();
        assert_eq!(a.tree_order, 2);
        assert_eq!(a.n_k(1), 3);
        assert_eq!(a.n_k(2), 1);
        assert_eq!(a.n_ij(1, 2).unwrap(), 1);
        assert!(a.counting_identity_holds().unwrap());
    }

    #[test]
    fn order_equals_prunings_to_extinction() {
        // check ord(T) == minimal k with R^k(T) = phi on a handful of trees
        let trees = vec![
            Tree::single_edge(None),
            perfect_binary(3),
            {
                let mut t = Tree::singleton();
                let v = t.add_child(0, None);
                t.add_child(v, None);
                let w = t.add_child(v, None);
                t.add_child(w, None);
                t.add_child(w, None);
                t
            },
        ];
        for t in trees {
            let ord = assign_orders(&t).unwrap().tree_order;
            let mut k = 0;
            let mut cur = t;
            while !cur.is_empty() {
                cur = horton_prune(&cur).0;
                k += 1;
            }
            assert_eq!(ord, k);
        }
    }

    #[test]
    fn prune_shifts_orders() {
        // N_k[T] = N_{k-1}[R(T)] for k >= 2
        let t = perfect_binary(4);
        let (p, _) = horton_prune(&t);
        let a = assign_orders(&t).unwrap();
        let b = assign_orders(&p).unwrap();
        for k in 2..=4u32 {
            assert_eq!(a.n_k(k), b.n_k(k - 1));
        }
    }

    #[test]
    fn tokunaga_on_nonbinary_errors() {
        let mut t = Tree::singleton();
        let v = t.add_child(0, None);
        t.add_child(v, None);
        t.add_child(v, None);
        t.add_child(v, None);
        let a = assign_orders(&t).unwrap();
        assert!(a.n_ij(1, 2).is_err());
    }

    #[test]
    fn figure_table_consistency() {
        // the paper's worked example of a (N_k, N_ij) table
        let n = [56, 22, 8, 3, 1];
        let nij = |i: u32, j: u32| -> u64 {
            match (i, j) {
                (1, 2) => 5,
                (1, 3) => 4,
                (1, 4) => 2,
                (1, 5) => 1,
                (2, 3) => 4,
                (2, 4) => 1,
                (2, 5) => 1,
                (3, 4) => 2,
                (3, 5) => 0,
                (4, 5) => 1,
                _ => 0,
            }
        };
        assert!(counting_identity(&n, &nij));
    }

    #[test]
    fn stemless_root_order() {
        // root with two order-1 children is order 2
        let mut t = Tree::singleton();
        t.add_child(0, None);
        t.add_child(0, None);
        let a = assign_orders(&t).unwrap();
        assert_eq!(a.tree_order, 2);
        assert_eq!(a.n_k(1), 2);
        assert_eq!(a.n_k(2), 1);
    }
}
