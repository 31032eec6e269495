//! Brute-force enumeration and canonical shape codes for exact small-case
//! validation: plane binary tree enumeration, Galton-Watson shape
//! probabilities, and canonical encodings of (non-)planar combinatorial
//! shapes.

use crate::tree::{NodeId, Tree};

/// Canonical code of the planar combinatorial shape (planar order kept).
pub fn plane_shape_code(t: &Tree) -> String {
    fn rec(t: &Tree, v: NodeId, out: &mut String) {
        if t.is_leaf(v) {
            out.push('o');
            return;
        }
        out.push('(');
        for &c in t.children(v) {
            rec(t, c, out);
        }
        out.push(')');
    }
    let mut s = String::new();
    match t.root() {
        None => s.push('_'),
        Some(r) => rec(t, r, &mut s),
    }
    s
}

/// Canonical code of the combinatorial shape with planar order forgotten
/// (children codes sorted recursively).
pub fn shape_code(t: &Tree) -> String {
    fn rec(t: &Tree, v: NodeId) -> String {
        if t.is_leaf(v) {
            return "o".into();
        }
        let mut kids: Vec<String> = t.children(v).iter().map(|&c| rec(t, c)).collect();
        kids.sort();
        format!("({})", kids.concat())
    }
    match t.root() {
        None => "_".into(),
        Some(r) => rec(t, r),
    }
}

/// All planted plane binary trees with exactly `n` leaves (C_{n-1} shapes).
pub fn enumerate_plane_binary(n: usize) -> Vec<Tree> {
    fn build(n: usize) -> Vec<String> {
        if n == 1 {
            return vec!["o".into()];
        }
        let mut out = Vec::new();
        for k in 1..n {
            for l in build(k) {
                for r in build(n - k) {
                    out.push(format!("({l}{r})"));
                }
            }
        }
        out
    }
    build(n)
        .into_iter()
        .map(|code| {
            let mut t = Tree::singleton();
            let stem = t.add_child(0, None);
            build_from_code(&mut t, stem, &code);
            t
        })
        .collect()
}

fn build_from_code(t: &mut Tree, at: NodeId, code: &str) {
    // code is "o" or "(LR)" with L, R codes
    if code == "o" {
        return;
    }
    let inner = &code[1..code.len() - 1];
    // split inner into two balanced codes
    let mut depth = 0usize;
    let mut split = 0usize;
    for (i, ch) in inner.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if depth == 0 {
            split = i + 1;
            break;
        }
    }
    let (l, r) = inner.split_at(split);
    let cl = t.add_child(at, None);
    build_from_code(t, cl, l);
    let cr = t.add_child(at, None);
    build_from_code(t, cr, r);
}

/// GW_plane(1/2, 1/2) probability of one plane shape: every non-root vertex
/// flips a fair coin, so a planted plane tree with n leaves has probability
/// 2^{-(2n-1)}.
pub fn gw_plane_probability(t: &Tree) -> f64 {
    0.5f64.powi(t.edge_count() as i32)
}

/// GW(1/2, 1/2) probability of the non-planar shape of `t`: the plane
/// probability times the number of distinct planar embeddings.
pub fn gw_shape_probability(t: &Tree) -> f64 {
    fn embeddings(t: &Tree, v: NodeId) -> (String, f64) {
        if t.is_leaf(v) {
            return ("o".into(), 1.0);
        }
        let kids: Vec<(String, f64)> = t.children(v).iter().map(|&c| embeddings(t, c)).collect();
        let mult: f64 = kids.iter().map(|k| k.1).product();
        let distinct = kids.len() == 2 && kids[0].0 != kids[1].0;
        let mut codes: Vec<&str> = kids.iter().map(|k| k.0.as_str()).collect();
        codes.sort();
        (
            format!("({})", codes.concat()),
            mult * if distinct { 2.0 } else { 1.0 },
        )
    }
    let Some(root) = t.root() else { return 0.0 };
    let (_, emb) = embeddings(t, root);
    emb * gw_plane_probability(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalan_counts() {
        for (n, catalan) in [(1usize, 1usize), (2, 1), (3, 2), (4, 5), (5, 14), (6, 42)] {
            let trees = enumerate_plane_binary(n);
            assert_eq!(trees.len(), catalan, "n = {n}");
            for t in &trees {
                assert_eq!(t.leaf_count(), n);
                assert!(t.is_binary());
                assert!(t.is_planted());
            }
            // all plane codes distinct
            let mut codes: Vec<String> = trees.iter().map(plane_shape_code).collect();
            codes.sort();
            codes.dedup();
            assert_eq!(codes.len(), catalan);
        }
    }

    #[test]
    fn plane_probabilities_sum_to_size_mass() {
        // sum over all 4-leaf plane trees of 2^{-7} = 5/128 = P(#T = 7)
        let total: f64 = enumerate_plane_binary(4)
            .iter()
            .map(gw_plane_probability)
            .sum();
        assert!((total - 5.0 / 128.0).abs() < 1e-15);
    }

    #[test]
    fn shape_probabilities_group_planes() {
        // non-plane shape probabilities over n = 4 sum to the same mass
        let trees = enumerate_plane_binary(4);
        let mut by_shape: std::collections::HashMap<String, Vec<f64>> = Default::default();
        for t in &trees {
            by_shape
                .entry(shape_code(t))
                .or_default()
                .push(gw_shape_probability(t));
        }
        // every plane representative of one shape reports the same value
        let mut total = 0.0;
        for (_, ps) in by_shape {
            for p in &ps {
                assert!((p - ps[0]).abs() < 1e-15);
            }
            total += ps[0];
        }
        assert!((total - 5.0 / 128.0).abs() < 1e-15);
    }
}
