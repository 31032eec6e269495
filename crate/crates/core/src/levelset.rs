//! Level set trees of piecewise linear series, Harris paths, and the
//! local-minima coarsening that realizes Horton pruning on the series side.
//!
//! The tree of a series depends only on the sequence of its local extreme
//! values; timing is discarded. Ties among minima produce non-binary
//! vertices; equal-value plateaus are treated as a single extremum.

use crate::error::{HortonError, Result};
use crate::tree::{NodeId, Tree};

/// Piecewise linear path given by breakpoints with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(HortonError::InvalidSeries(
                "need at least two breakpoints".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(HortonError::InvalidSeries(
                "breakpoint times must strictly increase".into(),
            ));
        }
        Ok(Series { points })
    }

    /// Series through `values` at unit-spaced times 0, 1, 2, ...
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Series::new(
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as f64, v))
                .collect(),
        )
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    /// True if every segment has slope +1 or -1 (within `tol`) with
    /// alternating signs.
    pub fn is_alternating_unit_slope(&self, tol: f64) -> bool {
        let mut prev: Option<f64> = None;
        for w in self.points.windows(2) {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            if (slope.abs() - 1.0).abs() > tol {
                return false;
            }
            if let Some(p) = prev {
                if (p > 0.0) == (slope > 0.0) {
                    return false;
                }
            }
            prev = Some(slope);
        }
        true
    }

    /// The alternating sequence of local extreme values, with boundary values
    /// included and equal-value plateaus collapsed.
    pub fn extrema(&self) -> Vec<f64> {
        self.extrema_points().into_iter().map(|p| p.1).collect()
    }

    /// Extrema together with their positions (the first point of a plateau).
    pub fn extrema_points(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(self.points.len());
        for &(x, v) in &self.points {
            if pts.last().map(|p| p.1) == Some(v) {
                continue; // plateau
            }
            // drop the middle of any monotone run
            while pts.len() >= 2 {
                let a = pts[pts.len() - 2].1;
                let b = pts[pts.len() - 1].1;
                if (b > a && v > b) || (b < a && v < b) {
                    pts.pop();
                } else {
                    break;
                }
            }
            pts.push((x, v));
        }
        pts
    }
}

/// Level set tree of a piecewise-linear series.
///
/// Leaves correspond to local maxima in time order, internal vertices to
/// internal local minima, and edge lengths to differences of extreme values.
/// The tree is planted iff the global minimum is attained on the boundary
/// (and nowhere inside).
pub fn level_set_tree(s: &Series) -> Result<Tree> {
    let ext = s.extrema();
    build_level_tree(&ext)
}

/// Level set tree of an alternating extreme-value sequence.
pub fn build_level_tree(ext: &[f64]) -> Result<Tree> {
    Ok(build_level_tree_indexed(ext)?.0)
}

/// As `build_level_tree`, also reporting for each tree node the index into
/// `ext` of its defining extremum (None for a planted root, which sits at
/// the boundary rather than at an extremum; collapsed tie vertices report
/// their first minimum).
pub fn build_level_tree_indexed(ext: &[f64]) -> Result<(Tree, Vec<Option<usize>>)> {
    if ext.len() < 2 {
        // constant series: no maxima
        return Ok((Tree::singleton(), vec![None]));
    }
    // classify extrema; maxima at odd or even slots depending on the first step
    let mut maxima: Vec<(usize, f64)> = Vec::new(); // (slot, value)
    let mut minima: Vec<(usize, f64)> = Vec::new(); // internal minima only
    for (i, &v) in ext.iter().enumerate() {
        let rising_into = i > 0 && ext[i] > ext[i - 1];
        let falling_out = i + 1 < ext.len() && ext[i + 1] < ext[i];
        let is_max = (i == 0 && falling_out)
            || (i + 1 == ext.len() && rising_into)
            || (rising_into && falling_out);
        if is_max {
            maxima.push((i, v));
        } else if i > 0 && i + 1 < ext.len() {
            minima.push((i, v));
        }
    }
    debug_assert_eq!(maxima.len(), minima.len() + 1);

    // Scratch node store: (value, slot, children ids in scratch space)
    struct Scratch {
        value: f64,
        slot: usize,
        children: Vec<usize>,
    }
    let mut arena: Vec<Scratch> = Vec::with_capacity(maxima.len() + minima.len());
    let make = |value: f64, slot: usize, arena: &mut Vec<Scratch>| -> usize {
        arena.push(Scratch {
            value,
            slot,
            children: Vec::new(),
        });
        arena.len() - 1
    };
    let leaf_ids: Vec<usize> = maxima
        .iter()
        .map(|&(slot, v)| make(v, slot, &mut arena))
        .collect();

    // Min-rooted Cartesian tree over the internal minima (classic rightmost
    // spine stack). Equal values chain parent->child and are collapsed below.
    // The maximum between minima k-1 and k is adopted by the higher of the
    // two: by the first-popped spine node, or by the new node if nothing
    // pops.
    let mut spine: Vec<usize> = Vec::new(); // scratch ids, values increase along the stack
    for (k, &(slot, v)) in minima.iter().enumerate() {
        let id = make(v, slot, &mut arena);
        let mut last_popped: Option<usize> = None;
        while let Some(&top) = spine.last() {
            if arena[top].value > v {
                if last_popped.is_none() {
                    arena[top].children.push(leaf_ids[k]);
                }
                last_popped = Some(top);
                spine.pop();
            } else {
                break;
            }
        }
        match last_popped {
            Some(sub) => arena[id].children.push(sub),
            // no popped subtree: left flank is the bare maximum k
            None => arena[id].children.push(leaf_ids[k]),
        }
        if let Some(&top) = spine.last() {
            arena[top].children.push(id);
        }
        spine.push(id);
    }
    // the last spine entry adopts the final maximum; the first spine entry is
    // the structural root
    let comp_root = if minima.is_empty() {
        leaf_ids[0]
    } else {
        let deepest = *spine.last().unwrap();
        arena[deepest].children.push(*leaf_ids.last().unwrap());
        spine[0]
    };

    // Collapse equal-value parent/child minima into non-binary vertices.
    fn flatten(arena: &[Scratch], id: usize, out: &mut Vec<usize>) {
        for &c in &arena[id].children {
            if !arena[c].children.is_empty() && arena[c].value == arena[id].value {
                flatten(arena, c, out);
            } else {
                out.push(c);
            }
        }
    }

    // Root and optional stem.
    let boundary_min = ext[0].min(*ext.last().unwrap());
    let root_val = if minima.is_empty() {
        boundary_min
    } else {
        boundary_min.min(arena[comp_root].value)
    };
    let planted = boundary_min < arena[comp_root].value || minima.is_empty();

    let mut tree = Tree::singleton();
    let mut slots: Vec<Option<usize>> = vec![if planted {
        None
    } else {
        Some(arena[comp_root].slot)
    }];
    // (scratch id, parent in tree, parent value)
    let mut stack: Vec<(usize, NodeId, f64)> = Vec::new();
    if planted {
        stack.push((comp_root, 0, root_val));
    } else {
        // root vertex IS the component root
        let mut kids = Vec::new();
        flatten(&arena, comp_root, &mut kids);
        kids.sort_by_key(|&c| arena[c].slot);
        for c in kids.into_iter().rev() {
            stack.push((c, 0, arena[comp_root].value));
        }
    }
    while let Some((sid, parent, pval)) = stack.pop() {
        let v = arena[sid].value;
        let id = tree.add_child(parent, Some(v - pval));
        slots.push(Some(arena[sid].slot));
        debug_assert_eq!(slots.len(), id + 1);
        if !arena[sid].children.is_empty() {
            let mut kids = Vec::new();
            flatten(&arena, sid, &mut kids);
            kids.sort_by_key(|&c| arena[c].slot);
            for c in kids.into_iter().rev() {
                stack.push((c, id, v));
            }
        }
    }
    Ok((tree, slots))
}

/// Harris path (depth-first contour) of a planted metric tree: a positive
/// excursion on [0, 2 length(T)] with 2n alternating unit-slope segments for
/// n leaves.
pub fn harris_path(t: &Tree) -> Result<Series> {
    let root = t
        .root()
        .ok_or_else(|| HortonError::InvalidSeries("harris path of the empty tree".into()))?;
    if !t.is_planted() {
        return Err(HortonError::UnsupportedShape(
            "harris path needs a planted tree".into(),
        ));
    }
    if !t.is_metric() {
        return Err(HortonError::MissingLengths("harris path".into()));
    }
    let mut pts: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    // walk: (node, next child index to visit) with explicit stack
    let mut time = 0.0;
    let mut depth = 0.0;
    let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
    while let Some((v, ci)) = stack.pop() {
        if ci < t.children(v).len() {
            stack.push((v, ci + 1));
            let c = t.children(v)[ci];
            let l = t.edge_len(c).unwrap();
            time += l;
            depth += l;
            if t.is_leaf(c) {
                pts.push((time, depth)); // local maximum
            }
            stack.push((c, 0));
        } else if let Some(&(_p, _)) = stack.last() {
            // finished v, descend its parental edge
            let l = t.edge_len(v).unwrap();
            time += l;
            depth -= l;
            if !t.is_leaf(v) {
                // leaving an internal vertex upward was already recorded as a
                // minimum when we will turn again; record turn at v's parent
            }
            // record a breakpoint only on direction change: if the next action
            // goes up again we have a minimum at depth
            pts.push((time, depth));
        }
    }
    // The loop above records a breakpoint after every downward edge, which
    // includes collinear points when two downward edges chain; the Series
    // canonicalization makes that harmless, but trim them for cleanliness.
    let mut clean: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while clean.len() >= 2 {
            let a = clean[clean.len() - 2];
            let b = clean[clean.len() - 1];
            let collinear = (b.1 - a.1) * (p.0 - b.0) == (p.1 - b.1) * (b.0 - a.0);
            if collinear {
                clean.pop();
            } else {
                break;
            }
        }
        clean.push(p);
    }
    Series::new(clean)
}

/// Replace a series by the linear interpolation of its boundary values and
/// internal local minima. On the tree side this is exactly one Horton
/// pruning: `level(local_minima(s)) = R(level(s))`.
pub fn local_minima(s: &Series) -> Result<Series> {
    let ext = s.extrema();
    if ext.len() < 2 {
        return Series::from_values(&[ext[0], ext[0]]);
    }
    let mut vals = Vec::new();
    for (i, &v) in ext.iter().enumerate() {
        let rising_into = i > 0 && ext[i] > ext[i - 1];
        let falling_out = i + 1 < ext.len() && ext[i + 1] < ext[i];
        let is_max = (i == 0 && falling_out)
            || (i + 1 == ext.len() && rising_into)
            || (rising_into && falling_out);
        if !is_max {
            vals.push(v);
        }
    }
    if vals.len() == 1 {
        vals.push(vals[0]);
    }
    Series::from_values(&vals)
}

/// A maximal positive excursion above an anchor value, and the excess of the
/// extended excursion below the anchor (Lambda).
#[derive(Debug, Clone)]
pub struct Excursion {
    /// Sub-series from the anchor crossing to the return crossing, shifted so
    /// the anchor sits at level 0.
    pub series: Series,
    /// Excess value of the extended excursion: how far the first sub-anchor
    /// local minimum falls below the anchor. None if the path ended first.
    pub excess: Option<f64>,
}

/// Decompose a path into its chain of consecutive positive excursions.
///
/// Scanning left to right: the first anchor is the initial value; each
/// excursion runs while the path stays strictly above its anchor; the next
/// anchor is the first local minimum below the current one (the extended
/// excursion endpoint). Incomplete trailing excursions are dropped.
pub fn positive_excursions(s: &Series) -> Vec<Excursion> {
    let ext = s.extrema();
    let mut out = Vec::new();
    if ext.len() < 2 {
        return out;
    }
    let mut i = 0; // index into ext; ext[i] is the current anchor
    while i + 1 < ext.len() {
        let anchor = ext[i];
        if ext[i + 1] <= anchor {
            i += 1;
            continue;
        }
        // walk forward until a value <= anchor
        let mut j = i + 1;
        while j < ext.len() && ext[j] > anchor {
            j += 1;
        }
        if j == ext.len() {
            break; // incomplete excursion
        }
        // excursion values: anchor, ext[i+1..j] - anchor, back to anchor
        let mut vals = vec![0.0];
        vals.extend(ext[i + 1..j].iter().map(|v| v - anchor));
        vals.push(0.0);
        let series = Series::from_values(&vals).expect("excursion has >= 3 points");
        // extended part: ext[j] is below (or at) the anchor; the first local
        // minimum below the anchor is the bottom of this descent
        let mut k = j;
        while k + 1 < ext.len() && ext[k + 1] < ext[k] {
            k += 1;
        }
        let excess = if k < ext.len() && ext[k] < anchor {
            Some(anchor - ext[k])
        } else {
            None
        };
        out.push(Excursion { series, excess });
        if excess.is_none() {
            break;
        }
        i = k;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::horton::assign_orders;
    use crate::tree::{horton_prune, tree_metrics};

    #[test]
    fn lambda_excursion_single_edge() {
        let s = Series::from_values(&[0.0, 3.0, 0.0]).unwrap();
        let t = level_set_tree(&s).unwrap();
        assert_eq!(t.edge_count(), 1);
        assert_eq!(t.edge_len(1), Some(3.0));
    }

    #[test]
    fn hand_built_m_excursion() {
        // values (0,3,1,2,0): stem 1, leaves 2 and 1 in planar order
        let s = Series::from_values(&[0.0, 3.0, 1.0, 2.0, 0.0]).unwrap();
        let t = level_set_tree(&s).unwrap();
        assert!(t.is_planted());
        let stem = t.children(t.root().unwrap())[0];
        assert_eq!(t.edge_len(stem), Some(1.0));
        let kids = t.children(stem);
        assert_eq!(kids.len(), 2);
        assert_eq!(t.edge_len(kids[0]), Some(2.0));
        assert_eq!(t.edge_len(kids[1]), Some(1.0));
    }

    #[test]
    fn harris_round_trip() {
        // level(H_T) = T for a small planted tree
        let mut t = Tree::singleton();
        let s = t.add_child(0, Some(1.5));
        let v = t.add_child(s, Some(0.5));
        t.add_child(v, Some(2.0));
        t.add_child(v, Some(1.0));
        t.add_child(s, Some(0.75));
        let t = crate::tree::series_reduction(&t);
        let h = harris_path(&t).unwrap();
        let m = tree_metrics(&t).unwrap();
        assert!((h.points.last().unwrap().0 - 2.0 * m.length).abs() < 1e-12);
        let u = level_set_tree(&h).unwrap();
        assert_eq!(t.to_newick(), u.to_newick());
    }

    #[test]
    fn harris_of_y_tree() {
        let mut t = Tree::singleton();
        let v = t.add_child(0, Some(3.0));
        t.add_child(v, Some(1.0));
        t.add_child(v, Some(2.0));
        let h = harris_path(&t).unwrap();
        let vals: Vec<f64> = h.values().collect();
        assert_eq!(vals, vec![0.0, 4.0, 3.0, 5.0, 0.0]);
    }

    #[test]
    fn minima_transition_is_pruning() {
        let s = Series::from_values(&[0.0, 5.0, 1.0, 4.0, 2.0, 6.0, 0.5, 3.0, 0.0]).unwrap();
        let lhs = level_set_tree(&local_minima(&s).unwrap()).unwrap();
        let rhs = horton_prune(&level_set_tree(&s).unwrap()).0;
        assert_eq!(lhs.to_newick(), rhs.to_newick());
    }

    #[test]
    fn monotone_series_minima() {
        let s = Series::from_values(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let m = local_minima(&s).unwrap();
        let vals: Vec<f64> = m.values().collect();
        assert_eq!(vals, vec![0.0, 3.0]);
    }

    #[test]
    fn time_reparameterization_invariance() {
        let vals = [0.0, 5.0, 1.0, 4.0, 2.0, 6.0, 0.0];
        let s1 = Series::from_values(&vals).unwrap();
        let s2 = Series::new(
            vals.iter()
                .enumerate()
                .map(|(i, &v)| ((i as f64).powi(2) + i as f64 * 0.3, v))
                .collect(),
        )
        .unwrap();
        assert_eq!(
            level_set_tree(&s1).unwrap().to_newick(),
            level_set_tree(&s2).unwrap().to_newick()
        );
    }

    #[test]
    fn ties_give_nonbinary_vertex() {
        let s = Series::from_values(&[0.0, 3.0, 1.0, 2.0, 1.0, 4.0, 0.0]).unwrap();
        let t = level_set_tree(&s).unwrap();
        let a = assign_orders(&t).unwrap();
        // two equal minima merge three maxima at one vertex
        assert_eq!(a.tree_order, 2);
        let stem = t.children(t.root().unwrap())[0];
        assert_eq!(t.children(stem).len(), 3);
    }

    #[test]
    fn plateaus_collapse() {
        let s = Series::new(vec![
            (0.0, 0.0),
            (1.0, 3.0),
            (1.5, 3.0),
            (2.0, 0.0),
        ])
        .unwrap();
        let t = level_set_tree(&s).unwrap();
        assert_eq!(t.edge_count(), 1);
    }

    #[test]
    fn excursion_extraction() {
        // path: 0, 2, -1, 3, 1, 4, -2 ...
        let s = Series::from_values(&[0.0, 2.0, -1.0, 3.0, 1.0, 4.0, -2.0, 0.0]).unwrap();
        let ex = positive_excursions(&s);
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].excess, Some(1.0));
        let v0: Vec<f64> = ex[0].series.values().collect();
        assert_eq!(v0, vec![0.0, 2.0, 0.0]);
        // second anchor is -1: excursion 3-(-1)=4 up, 1-(-1)=2, 4-(-1)=5
        let v1: Vec<f64> = ex[1].series.values().collect();
        assert_eq!(v1, vec![0.0, 4.0, 2.0, 5.0, 0.0]);
        assert_eq!(ex[1].excess, Some(1.0));
    }

    #[test]
    fn stemless_when_interior_minimum_is_global() {
        let s = Series::from_values(&[0.5, 3.0, 0.0, 2.0, 0.5]).unwrap();
        let t = level_set_tree(&s).unwrap();
        assert!(!t.is_planted());
        assert_eq!(t.children(t.root().unwrap()).len(), 2);
    }
}
