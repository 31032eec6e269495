//! Random generators for the tree and process families studied here:
//! critical binary Galton-Watson trees (combinatorial and exponential),
//! hierarchical branching process trees, the Markov tree process, random
//! walks, and uniform plane binary trees.
//!
//! Everything takes an explicit `Rng`; use `streams::rng_for` for
//! reproducible substreams. Exponential variates use the inverse CDF so that
//! a sampler's draw sequence is fully determined by the documented
//! construction.

use crate::analytics::{ExponentialWalk, GeometricWalk, TokunagaSequence};
use crate::error::{HortonError, Result};
use crate::levelset::Series;
use crate::tree::{NodeId, Tree};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

/// Exponential variate by inverse CDF.
pub fn exp_inv_cdf<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

/// Geom_0(p) variate: number of failures before the first success.
fn geom0<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = rng.gen();
    ((1.0 - u).ln() / (1.0 - p).ln()).floor() as u64
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

// ---------------------------------------------------------------------------
// Galton-Watson trees
// ---------------------------------------------------------------------------

/// Sample the combinatorial binary Galton-Watson tree GW(q0, 1-q0): starting
/// from a stem, each vertex is a leaf with probability q0 and branches into
/// two otherwise. Requires q0 >= 1/2 (a.s. finite).
pub fn sample_gw_shape<R: Rng + ?Sized>(q0: f64, rng: &mut R) -> Result<Tree> {
    Ok(sample_gw_exp_impl(q0, None, usize::MAX, rng)?.expect("uncapped"))
}

/// Capped variant: gives up and returns None once the tree exceeds
/// `max_edges` edges. The critical case q0 = 1/2 has infinite expected size,
/// so Monte Carlo over many trees must bound the work per tree.
pub fn sample_gw_shape_bounded<R: Rng + ?Sized>(
    q0: f64,
    max_edges: usize,
    rng: &mut R,
) -> Result<Option<Tree>> {
    sample_gw_exp_impl(q0, None, max_edges, rng)
}

/// Exponential critical binary Galton-Watson tree GW(lambda): critical
/// binary shape with i.i.d. Exp(lambda) edge lengths and uniform planar
/// orientation.
pub fn sample_gw_exp<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<Tree> {
    Ok(sample_gw_exp_impl(0.5, Some(lambda), usize::MAX, rng)?.expect("uncapped"))
}

/// Capped variant of `sample_gw_exp`.
pub fn sample_gw_exp_bounded<R: Rng + ?Sized>(
    lambda: f64,
    max_edges: usize,
    rng: &mut R,
) -> Result<Option<Tree>> {
    sample_gw_exp_impl(0.5, Some(lambda), max_edges, rng)
}

fn sample_gw_exp_impl<R: Rng + ?Sized>(
    q0: f64,
    lambda: Option<f64>,
    max_edges: usize,
    rng: &mut R,
) -> Result<Option<Tree>> {
    if !(0.5..=1.0).contains(&q0) {
        return Err(HortonError::Domain(
            "sample_gw_shape: q0 must lie in [1/2, 1] (supercritical rejected)".into(),
        ));
    }
    if let Some(l) = lambda {
        if l <= 0.0 {
            return Err(HortonError::Domain("sample_gw_exp: lambda must be > 0".into()));
        }
    }
    let draw_len = |rng: &mut R| lambda.map(|l| exp_inv_cdf(rng, l));
    let mut t = Tree::singleton();
    let stem_len = draw_len(rng);
    let stem = t.add_child(0, stem_len);
    let mut frontier = vec![stem];
    while let Some(v) = frontier.pop() {
        if rng.gen::<f64>() < q0 {
            continue; // leaf
        }
        if t.edge_count() + 2 > max_edges {
            return Ok(None);
        }
        let l1 = draw_len(rng);
        let a = t.add_child(v, l1);
        let l2 = draw_len(rng);
        let b = t.add_child(v, l2);
        frontier.push(a);
        frontier.push(b);
    }
    Ok(Some(t))
}

/// Total length of a GW(lambda) tree, sampled without materializing the
/// tree; censored at `cap` (returns `cap` plus a final partial edge if the
/// running total exceeds it).
pub fn sample_gw_length_capped<R: Rng + ?Sized>(lambda: f64, cap: f64, rng: &mut R) -> f64 {
    let mut pending = 1u64;
    let mut total = 0.0;
    while pending > 0 {
        pending -= 1;
        total += exp_inv_cdf(rng, lambda);
        if total > cap {
            return total;
        }
        if rng.gen::<f64>() < 0.5 {
            pending += 2;
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Hierarchical branching process
// ---------------------------------------------------------------------------

/// Parameters of a hierarchical branching process, truncated at
/// `rates.len()` orders.
#[derive(Debug, Clone)]
pub struct HbpParams {
    pub tokunaga: TokunagaSequence,
    /// Termination rates lambda_j, j = 1..=K_max.
    pub rates: Vec<f64>,
    /// Order distribution p_K on 1..=K_max (renormalized on truncation).
    pub order_probs: Vec<f64>,
    /// S_K = 1 + T_1 + ... + T_K for K = 0..=K_max-1, precomputed.
    s_partial: Vec<f64>,
}

impl HbpParams {
    pub fn new(tokunaga: TokunagaSequence, rates: Vec<f64>, order_probs: Vec<f64>) -> Result<Self> {
        if rates.is_empty() || rates.len() != order_probs.len() {
            return Err(HortonError::Domain(
                "HbpParams: rates and order_probs must have equal positive length".into(),
            ));
        }
        if rates.iter().any(|&l| l <= 0.0) {
            return Err(HortonError::Domain("HbpParams: rates must be > 0".into()));
        }
        let total: f64 = order_probs.iter().sum();
        if !(total > 0.0) || order_probs.iter().any(|&p| p < 0.0) {
            return Err(HortonError::Domain("HbpParams: bad order distribution".into()));
        }
        let order_probs = order_probs.iter().map(|p| p / total).collect();
        let mut s_partial = Vec::with_capacity(rates.len());
        let mut s = 1.0;
        s_partial.push(s); // S_0
        for k in 1..rates.len() {
            s += tokunaga.coeff(k);
            s_partial.push(s);
        }
        Ok(HbpParams {
            tokunaga,
            rates,
            order_probs,
            s_partial,
        })
    }

    /// Critical Tokunaga process: T_k = (c-1) c^{k-1}, lambda_j = gamma
    /// c^{1-j}, p_K = 2^{-K}, truncated at `k_max` (default 64 in the CLI).
    pub fn critical_tokunaga(c: f64, gamma: f64, k_max: usize) -> Result<Self> {
        if c < 1.0 || gamma <= 0.0 || k_max == 0 {
            return Err(HortonError::Domain(
                "critical Tokunaga needs c >= 1, gamma > 0".into(),
            ));
        }
        let tokunaga = TokunagaSequence::critical_tokunaga(c, k_max);
        let rates = (1..=k_max).map(|j| gamma * c.powi(1 - j as i32)).collect();
        let order_probs = (1..=k_max).map(|k| 0.5f64.powi(k as i32)).collect();
        HbpParams::new(tokunaga, rates, order_probs)
    }

    /// S_{K-1} for a branch of order K.
    fn s_below(&self, order: usize) -> f64 {
        self.s_partial[order - 1]
    }
}

/// Sample the tree of a hierarchical branching process by the recursive
/// (non-temporal) construction: a perfect skeleton of the requested order
/// whose order-kappa branch carries Geom_0(1/S_{kappa-1}) side branches,
/// i.i.d. Exp(lambda_kappa S_{kappa-1}) edge lengths, side-branch orders
/// drawn proportional to T_{kappa - i}, and uniform orientations.
pub fn sample_hbp<R: Rng + ?Sized>(
    params: &HbpParams,
    fixed_order: Option<u32>,
    rng: &mut R,
) -> Result<Tree> {
    let k_max = params.rates.len() as u32;
    let order = match fixed_order {
        Some(k) => {
            if k == 0 || k > k_max {
                return Err(HortonError::Domain(format!(
                    "sample_hbp: order {k} outside truncation 1..={k_max}"
                )));
            }
            k
        }
        None => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = k_max;
            for (i, &p) in params.order_probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = i as u32 + 1;
                    break;
                }
            }
            chosen
        }
    };
    let mut t = Tree::singleton();
    build_branch(params, order as usize, 0, &mut t, rng);
    Ok(t)
}

fn build_branch<R: Rng + ?Sized>(
    params: &HbpParams,
    order: usize,
    attach: NodeId,
    t: &mut Tree,
    rng: &mut R,
) {
    let s = params.s_below(order);
    let rate = params.rates[order - 1] * s;
    let m = if s <= 1.0 { 0 } else { geom0(rng, 1.0 / s) } as usize;
    // chain of m+1 edges from the initial vertex down to the terminal vertex
    let mut chain = Vec::with_capacity(m + 1);
    let mut cur = attach;
    for _ in 0..=m {
        cur = t.add_child(cur, Some(exp_inv_cdf(rng, rate)));
        chain.push(cur);
    }
    // side branch at each of the m internal chain vertices
    for &v in chain.iter().take(m) {
        // side branch order: P(i) proportional to T_{order - i}
        let u: f64 = rng.gen::<f64>() * (s - 1.0);
        let mut acc = 0.0;
        let mut side_order = 1;
        for i in (1..order).rev() {
            acc += params.tokunaga.coeff(order - i);
            if u < acc {
                side_order = i;
                break;
            }
        }
        // appended after the chain continuation: side sits on the right;
        // a fair coin flips it to the left
        build_branch(params, side_order, v, t, rng);
        if rng.gen::<bool>() {
            t.swap_children(v);
        }
    }
    let terminal = chain[m];
    if order >= 2 {
        build_branch(params, order - 1, terminal, t, rng);
        build_branch(params, order - 1, terminal, t, rng);
    }
}

// ---------------------------------------------------------------------------
// Markov tree process
// ---------------------------------------------------------------------------

/// One step of the critical-Tokunaga Markov tree process: scale all edge
/// lengths by c, attach new side leaves by a Poisson process with intensity
/// gamma (c-1)/c per unit (scaled) length, and attach a pair of new leaf
/// edges at every old leaf. New edges are i.i.d. Exp(gamma); orientations
/// uniform. The result has order ord(t) + 1 and prunes back to `t`.
pub fn markov_tree_step<R: Rng + ?Sized>(
    t: &Tree,
    c: f64,
    gamma: f64,
    rng: &mut R,
) -> Result<Tree> {
    if c < 1.0 || gamma <= 0.0 {
        return Err(HortonError::Domain("markov_tree_step: c >= 1, gamma > 0".into()));
    }
    let root = t
        .root()
        .ok_or_else(|| HortonError::InvalidSample("markov_tree_step on empty tree".into()))?;
    if !t.is_metric() {
        return Err(HortonError::MissingLengths("markov_tree_step".into()));
    }
    let intensity = gamma * (c - 1.0) / c;
    let mut out = Tree::singleton();
    // rebuild depth-first; each old edge becomes a chain with Poisson side
    // leaves at uniform positions
    let mut stack: Vec<(NodeId, NodeId)> = t
        .children(root)
        .iter()
        .rev()
        .map(|&ch| (ch, 0))
        .collect();
    while let Some((old, new_parent)) = stack.pop() {
        let scaled = t.edge_len(old).unwrap() * c;
        let k = poisson(rng, intensity * scaled);
        let mut offsets: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * scaled).collect();
        offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut cur = new_parent;
        let mut consumed = 0.0;
        let mut attach_points = Vec::with_capacity(offsets.len());
        for off in offsets {
            cur = out.add_child(cur, Some(off - consumed));
            consumed = off;
            attach_points.push(cur);
        }
        let new_v = out.add_child(cur, Some(scaled - consumed));
        for a in attach_points {
            // appended after the continuation: leaf on the right; flip to
            // the left with a fair coin
            out.add_child(a, Some(exp_inv_cdf(rng, gamma)));
            if rng.gen::<bool>() {
                out.swap_children(a);
            }
        }
        if t.is_leaf(old) {
            // old leaf: attach a pair of fresh leaf edges
            out.add_child(new_v, Some(exp_inv_cdf(rng, gamma)));
            out.add_child(new_v, Some(exp_inv_cdf(rng, gamma)));
        } else {
            for &ch in t.children(old).iter().rev() {
                stack.push((ch, new_v));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Random walks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum WalkKind {
    Exponential(ExponentialWalk),
    Geometric(GeometricWalk),
}

/// Sample `n` steps of a walk started at 0, linearly interpolated.
pub fn sample_walk<R: Rng + ?Sized>(kind: &WalkKind, n: usize, rng: &mut R) -> Result<Series> {
    if n == 0 {
        return Err(HortonError::Domain("sample_walk: n >= 1".into()));
    }
    let mut vals = Vec::with_capacity(n + 1);
    let mut x = 0.0;
    vals.push(x);
    match kind {
        WalkKind::Exponential(w) => {
            w.validate()?;
            for _ in 0..n {
                if rng.gen::<f64>() < w.rho {
                    x += exp_inv_cdf(rng, w.lambda_up);
                } else {
                    x -= exp_inv_cdf(rng, w.lambda_down);
                }
                vals.push(x);
            }
        }
        WalkKind::Geometric(w) => {
            w.validate()?;
            for _ in 0..n {
                let u: f64 = rng.gen();
                if u < w.p_up {
                    x += (1 + geom0(rng, w.r_up)) as f64;
                } else if u < w.p_up + w.p_down {
                    x -= (1 + geom0(rng, w.r_down)) as f64;
                }
                vals.push(x);
            }
        }
    }
    Series::from_values(&vals)
}

// ---------------------------------------------------------------------------
// Uniform plane binary trees
// ---------------------------------------------------------------------------

/// Uniform random planted plane binary tree with `n` leaves (one of the
/// C_{n-1} shapes), via a uniform Dyck path (cycle lemma on a balanced
/// sequence with one extra down-step) and the preorder path -> tree
/// bijection.
pub fn sample_uniform_plane_binary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Tree> {
    if n == 0 {
        return Err(HortonError::Domain(
            "sample_uniform_plane_binary: n >= 1".into(),
        ));
    }
    let m = n - 1; // Dyck semilength
    // m up-steps, m+1 down-steps; the unique rotation starting right after
    // the first prefix-sum minimum is a ballot sequence; dropping its final
    // down-step leaves a uniform Dyck path.
    let mut steps: Vec<i8> = Vec::with_capacity(2 * m + 1);
    steps.extend(std::iter::repeat(1i8).take(m));
    steps.extend(std::iter::repeat(-1i8).take(m + 1));
    // Fisher-Yates
    for i in (1..steps.len()).rev() {
        let j = rng.gen_range(0..=i);
        steps.swap(i, j);
    }
    let mut min = i32::MAX;
    let mut min_pos = 0;
    let mut acc = 0;
    for (i, &s) in steps.iter().enumerate() {
        acc += s as i32;
        if acc < min {
            min = acc;
            min_pos = i;
        }
    }
    let n_steps = steps.len();
    steps.rotate_left((min_pos + 1) % n_steps);
    debug_assert_eq!(steps.pop(), Some(-1));

    // preorder build: up-step = internal vertex, down-step = leaf, plus the
    // trailing leaf
    let mut t = Tree::singleton();
    let mut stack: Vec<(NodeId, u8)> = vec![(0, 1)];
    for sym in steps.into_iter().chain(std::iter::once(-1)) {
        let top = stack.last_mut().expect("preorder stack never empties early");
        let id_parent = top.0;
        top.1 -= 1;
        let exhausted = top.1 == 0;
        let id = t.add_child(id_parent, None);
        if exhausted {
            stack.pop();
        }
        if sym == 1 {
            stack.push((id, 2));
        }
    }
    debug_assert!(stack.is_empty());
    debug_assert_eq!(t.leaf_count(), n);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::horton::assign_orders;
    use crate::streams::rng_for;
    use crate::tree::tree_metrics;

    #[test]
    fn gw_q0_one_is_single_edge() {
        let mut rng = rng_for(0, 1, 0);
        for _ in 0..10 {
            let t = sample_gw_shape(1.0, &mut rng).unwrap();
            assert_eq!(t.edge_count(), 1);
        }
    }

    #[test]
    fn gw_supercritical_rejected() {
        let mut rng = rng_for(0, 1, 0);
        assert!(sample_gw_shape(0.3, &mut rng).is_err());
    }

    #[test]
    fn gw_order_distribution_geometric() {
        // P(ord = K) = 2^{-K} for the critical case
        let mut rng = rng_for(7, 1, 0);
        let n = 40_000;
        let mut counts = [0u64; 4];
        let mut kept = 0usize;
        for _ in 0..n {
            let Some(t) = sample_gw_shape_bounded(0.5, 1 << 16, &mut rng).unwrap() else {
                continue;
            };
            kept += 1;
            let k = assign_orders(&t).unwrap().tree_order.min(4);
            counts[(k - 1) as usize] += 1;
        }
        for (i, &c) in counts.iter().enumerate().take(3) {
            let p = 0.5f64.powi(i as i32 + 1);
            let freq = c as f64 / kept as f64;
            assert!(
                (freq - p).abs() < 4.0 * (p * (1.0 - p) / kept as f64).sqrt() + 0.003,
                "ord {} freq {} vs {}",
                i + 1,
                freq,
                p
            );
        }
    }

    #[test]
    fn gw_exp_lengths_mean() {
        let mut rng = rng_for(8, 2, 0);
        let lambda = 2.0;
        let mut total = 0.0;
        let mut edges = 0usize;
        for _ in 0..4000 {
            if let Some(t) = sample_gw_exp_bounded(lambda, 1 << 14, &mut rng).unwrap() {
                let m = tree_metrics(&t).unwrap();
                total += m.length;
                edges += m.size;
            }
        }
        let mean = total / edges as f64;
        assert!((mean - 1.0 / lambda).abs() < 0.01, "mean edge len {mean}");
    }

    #[test]
    fn hbp_perfect_binary_when_t_zero() {
        // T = 0 (c = 1): no side branching, perfect binary shape
        let params = HbpParams::critical_tokunaga(1.0, 1.0, 8).unwrap();
        let mut rng = rng_for(9, 3, 0);
        let t = sample_hbp(&params, Some(4), &mut rng).unwrap();
        let a = assign_orders(&t).unwrap();
        assert_eq!(a.tree_order, 4);
        assert_eq!(a.branch_counts, vec![8, 4, 2, 1]);
        for i in 1..4 {
            for j in (i + 1)..=4 {
                assert_eq!(a.n_ij(i, j).unwrap(), 0);
            }
        }
    }

    #[test]
    fn hbp_fixed_order_is_respected() {
        let params = HbpParams::critical_tokunaga(2.0, 1.0, 12).unwrap();
        let mut rng = rng_for(9, 4, 0);
        for k in 1..=6u32 {
            let t = sample_hbp(&params, Some(k), &mut rng).unwrap();
            assert_eq!(assign_orders(&t).unwrap().tree_order, k);
        }
    }

    #[test]
    fn hbp_edge_lengths_iid_exp_gamma() {
        // critical Tokunaga: pooled edge lengths are Exp(gamma) regardless
        // of shape
        let gamma = 1.5;
        let params = HbpParams::critical_tokunaga(3.0, gamma, 12).unwrap();
        let mut rng = rng_for(9, 5, 0);
        let mut lens = Vec::new();
        for _ in 0..400 {
            let t = sample_hbp(&params, Some(4), &mut rng).unwrap();
            for v in t.preorder() {
                if let Some(l) = t.edge_len(v) {
                    lens.push(l);
                }
            }
        }
        let (_, p) = crate::stattest::ks_test(&mut lens, |x| 1.0 - (-gamma * x).exp()).unwrap();
        assert!(p > 0.001, "KS p = {p}");
    }

    #[test]
    fn markov_step_prunes_back() {
        let mut rng = rng_for(10, 6, 0);
        let c = 1.5;
        let gamma = 1.0;
        let mut t = Tree::single_edge(Some(exp_inv_cdf(&mut rng, gamma)));
        for _ in 0..4 {
            let next = markov_tree_step(&t, c, gamma, &mut rng).unwrap();
            let a = assign_orders(&next).unwrap();
            let b = assign_orders(&t).unwrap();
            assert_eq!(a.tree_order, b.tree_order + 1);
            // prune-back identity: R(Y_{K+1}) = Y_K combinatorially, and the
            // lengths match up to the scaling by c
            let (pruned, _) = crate::tree::horton_prune(&next);
            assert_eq!(
                pruned.to_newick(),
                {
                    // scale t by c for comparison
                    let mut scaled = t.clone();
                    scale_lengths(&mut scaled, c);
                    scaled.to_newick()
                },
                "prune-back failed"
            );
            t = next;
        }
    }

    fn scale_lengths(t: &mut Tree, c: f64) {
        for id in 0..t.node_count() {
            if let Some(l) = t.node(id).len {
                set_len(t, id, l * c);
            }
        }
    }

    fn set_len(t: &mut Tree, id: NodeId, v: f64) {
        // test helper: rebuild via JSON round-trip would be clumsy; poke the
        // arena through the public JSON format instead
        let mut tf = crate::tree::TreeFile::from(&*t);
        tf.nodes[id].len = Some(v);
        *t = tf.into_tree().unwrap();
    }

    #[test]
    fn walk_increment_moments() {
        let w = ExponentialWalk {
            rho: 0.5,
            lambda_up: 2.0,
            lambda_down: 2.0,
        };
        let mut rng = rng_for(11, 7, 0);
        let s = sample_walk(&WalkKind::Exponential(w), 60_000, &mut rng).unwrap();
        let incs: Vec<f64> = s
            .points
            .windows(2)
            .map(|p| p[1].1 - p[0].1)
            .collect();
        let m = crate::stattest::mean(&incs);
        let v = crate::stattest::variance(&incs);
        assert!(m.abs() < 0.02, "mean {m}");
        // variance = 2 / lambda^2
        assert!((v - 0.5).abs() < 0.02, "var {v}");
    }

    #[test]
    fn simple_random_walk_steps() {
        let g = GeometricWalk {
            p_up: 0.5,
            p_down: 0.5,
            r_up: 1.0,
            r_down: 1.0,
        };
        let mut rng = rng_for(11, 8, 0);
        let s = sample_walk(&WalkKind::Geometric(g), 1000, &mut rng).unwrap();
        for p in s.points.windows(2) {
            let d = p[1].1 - p[0].1;
            assert!(d == 1.0 || d == -1.0);
        }
    }

    #[test]
    fn uniform_plane_binary_shapes() {
        // n = 3: both shapes equally likely
        let mut rng = rng_for(12, 9, 0);
        let mut left = 0u64;
        let n = 20_000;
        for _ in 0..n {
            let t = sample_uniform_plane_binary(3, &mut rng).unwrap();
            assert_eq!(t.leaf_count(), 3);
            let stem = t.children(t.root().unwrap())[0];
            let kids = t.children(stem);
            if !t.is_leaf(kids[0]) {
                left += 1;
            }
        }
        let freq = left as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.02, "left-heavy frequency {freq}");
    }

    #[test]
    fn uniform_plane_binary_tiny() {
        let mut rng = rng_for(12, 10, 0);
        let t = sample_uniform_plane_binary(1, &mut rng).unwrap();
        assert_eq!(t.edge_count(), 1);
        let t = sample_uniform_plane_binary(2, &mut rng).unwrap();
        assert_eq!(t.leaf_count(), 2);
        assert_eq!(t.edge_count(), 3);
    }
}
