//! Continuum 1-D ballistic annihilation with unit density and +-1 initial
//! velocities, driven entirely by the level set tree of the initial
//! potential.
//!
//! The initial potential Psi_0 is a negative unit-slope excursion on [a, b].
//! Sinks are born at its local minima, accumulate mass 2 per unit time while
//! at rest, travel at unit speed between coalescences, and the whole shock
//! history is the tree V(Psi_0) = level(-Psi_0). The time-advanced potential
//! psi(., t) is reconstructed from the mass-equipped length pruning of
//! V(Psi_0): the pruned tree's negative Harris path with a plateau of width
//! 2(m_L + m_R - t) at double-mass minima, 2m at interior masses, 2t at
//! surviving internal maxima, and t at each domain boundary.

use crate::analytics::gw::{sink_growth_probability, SinkMassLaw};
use crate::dynprune::{prune_dynamic_mass, CutLocation, Side};
use crate::error::{HortonError, Result};
use crate::levelset::{build_level_tree_indexed, harris_path, Series};
use crate::samplers::{exp_inv_cdf, sample_gw_exp_bounded, sample_gw_length_capped};
use crate::tree::{NodeId, Tree};
use rand::Rng;

/// Initial condition: a unit-slope negative excursion with zero boundary
/// values.
#[derive(Debug, Clone)]
pub struct Potential {
    pub series: Series,
}

impl Potential {
    pub fn new(series: Series) -> Result<Self> {
        let first = series.points.first().unwrap();
        let last = series.points.last().unwrap();
        if first.1 != 0.0 || last.1 != 0.0 {
            return Err(HortonError::InvalidSeries(
                "potential must vanish at the boundary".into(),
            ));
        }
        if !series.is_alternating_unit_slope(1e-9) {
            return Err(HortonError::InvalidSeries(
                "potential must have alternating unit slopes".into(),
            ));
        }
        if series
            .points
            .iter()
            .skip(1)
            .take(series.points.len().saturating_sub(2))
            .any(|p| p.1 >= 0.0)
        {
            return Err(HortonError::InvalidSeries(
                "potential must be strictly negative inside the domain".into(),
            ));
        }
        Ok(Potential { series })
    }

    /// The negative Harris path of a planted metric tree, starting at x = 0.
    pub fn from_tree(t: &Tree) -> Result<Self> {
        let h = harris_path(t)?;
        Potential::new(Series::new(
            h.points.into_iter().map(|(x, v)| (x, -v)).collect(),
        )?)
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.series.points.first().unwrap().0,
            self.series.points.last().unwrap().0,
        )
    }

    /// Full coalescence time (b - a) / 2.
    pub fn t_max(&self) -> f64 {
        let (a, b) = self.domain();
        (b - a) / 2.0
    }
}

/// Geometry of one vertex of the shock tree V(Psi_0).
#[derive(Debug, Clone, Copy)]
pub struct ShockVertex {
    /// Position of the corresponding extremum of Psi_0 (basin center for the
    /// root).
    pub x: f64,
    /// Potential level of the vertex.
    pub psi: f64,
    /// v_j: length of the parental edge in V (0 for the root).
    pub v_seg: f64,
    /// h_j: travel time after accumulation, equal to the sibling subtree
    /// length including its parental edge (0 for the stem).
    pub h_seg: f64,
    /// Birth time of this sink (v-length of the subtree strictly below).
    pub t_start: f64,
    /// Basin of the vertex at its own level.
    pub basin: (f64, f64),
    /// Rest position: the basin center.
    pub center: f64,
}

/// The shock tree with its graphical embedding data. Edge lengths of `tree`
/// are the vertical drops v_j; the full graphical lengths are l_j = v_j +
/// h_j.
#[derive(Debug, Clone)]
pub struct ShockTree {
    pub tree: Tree,
    pub vertices: Vec<ShockVertex>,
    pub t_max: f64,
}

/// One sink at a fixed time.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Sink {
    pub position: f64,
    pub mass: f64,
    pub at_rest: bool,
}

/// All sinks at a fixed time.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SinkState {
    pub time: f64,
    pub sinks: Vec<Sink>,
}

/// Build V(Psi_0) = level(-Psi_0) together with the embedding geometry.
pub fn shock_tree(p: &Potential) -> Result<ShockTree> {
    let pts = p.series.extrema_points();
    if pts.len() < 3 {
        return Err(HortonError::InvalidSeries(
            "potential needs at least one local minimum".into(),
        ));
    }
    let neg: Vec<f64> = pts.iter().map(|&(_, v)| -v).collect();
    let (tree, slots) = build_level_tree_indexed(&neg)?;
    let root = tree.root().expect("nonempty");
    debug_assert!(tree.is_planted(), "negative excursion gives a planted tree");

    let n = tree.node_count();
    let mut vx = vec![
        ShockVertex {
            x: 0.0,
            psi: 0.0,
            v_seg: 0.0,
            h_seg: 0.0,
            t_start: 0.0,
            basin: (0.0, 0.0),
            center: 0.0,
        };
        n
    ];
    let post = tree.postorder();
    // positions and levels
    for &v in &post {
        if let Some(slot) = slots[v] {
            vx[v].x = pts[slot].0;
            vx[v].psi = pts[slot].1;
        }
        vx[v].v_seg = tree.edge_len(v).unwrap_or(0.0);
    }
    // subtree lengths -> birth times; basins bottom-up
    for &v in &post {
        let kids = tree.children(v);
        if kids.is_empty() {
            vx[v].t_start = 0.0;
            vx[v].basin = (vx[v].x, vx[v].x);
        } else {
            vx[v].t_start = kids
                .iter()
                .map(|&c| vx[c].t_start + vx[c].v_seg)
                .sum();
            let first = kids[0];
            let last = *kids.last().unwrap();
            vx[v].basin = (
                vx[first].basin.0 - (vx[v].psi - vx[first].psi),
                vx[last].basin.1 + (vx[v].psi - vx[last].psi),
            );
        }
        vx[v].center = (vx[v].basin.0 + vx[v].basin.1) / 2.0;
    }
    // root sits at the boundary level 0: its basin is the whole domain
    let (a, b) = p.domain();
    vx[root].basin = (a, b);
    vx[root].center = (a + b) / 2.0;
    vx[root].x = vx[root].center;
    let t_max = vx[root].t_start;
    debug_assert!((t_max - p.t_max()).abs() < 1e-9 * (1.0 + t_max));
    // travel segments: everything between own terminal time and parent birth
    for v in 0..n {
        if let Some(pr) = tree.parent(v) {
            vx[v].h_seg = vx[pr].t_start - vx[v].t_start - vx[v].v_seg;
            debug_assert!(vx[v].h_seg > -1e-9);
            vx[v].h_seg = vx[v].h_seg.max(0.0);
        }
    }
    Ok(ShockTree {
        tree,
        vertices: vx,
        t_max,
    })
}

impl ShockTree {
    /// The sink carried by vertex `v` at time `t`, if `t` falls in its
    /// lifetime [t_start, t_start + v + h).
    fn sink_of(&self, v: NodeId, t: f64) -> Option<Sink> {
        if Some(v) == self.tree.root() {
            return None;
        }
        let s = &self.vertices[v];
        let end = s.t_start + s.v_seg + s.h_seg;
        if t < s.t_start || t >= end {
            return None;
        }
        let accumulated = (t - s.t_start).min(s.v_seg);
        let at_rest = t < s.t_start + s.v_seg;
        let position = if at_rest {
            s.center
        } else {
            let parent = self.tree.parent(v).expect("non-root");
            let dir = (self.vertices[parent].center - s.center).signum();
            s.center + dir * (t - s.t_start - s.v_seg)
        };
        Some(Sink {
            position,
            mass: 2.0 * (s.t_start + accumulated),
            at_rest,
        })
    }

    /// All sinks at time `t`, ordered by position.
    pub fn sinks_at(&self, t: f64) -> Result<SinkState> {
        if t < 0.0 || t > self.t_max + 1e-12 {
            return Err(HortonError::Domain(format!(
                "time {t} outside [0, {}]",
                self.t_max
            )));
        }
        let root = self.tree.root().expect("nonempty");
        let mut sinks: Vec<Sink> = if t >= self.t_max {
            vec![Sink {
                position: self.vertices[root].center,
                mass: 2.0 * self.t_max,
                at_rest: true,
            }]
        } else {
            (0..self.tree.node_count())
                .filter_map(|v| self.sink_of(v, t))
                .collect()
        };
        sinks.sort_by(|p, q| p.position.partial_cmp(&q.position).unwrap());
        Ok(SinkState { time: t, sinks })
    }

    /// Follow the sink born at a given leaf: the active ancestor at time t.
    pub fn tracked_sink(&self, leaf: NodeId, t: f64) -> Option<Sink> {
        let mut v = leaf;
        loop {
            if let Some(s) = self.sink_of(v, t) {
                return Some(s);
            }
            v = self.tree.parent(v)?;
            if Some(v) == self.tree.root() {
                return if t >= self.t_max {
                    Some(Sink {
                        position: self.vertices[v].center,
                        mass: 2.0 * self.t_max,
                        at_rest: true,
                    })
                } else {
                    None
                };
            }
        }
    }
}

/// Sink trajectories sampled on a time grid.
pub fn sink_trajectories(p: &Potential, grid: &[f64]) -> Result<Vec<SinkState>> {
    let st = shock_tree(p)?;
    grid.iter().map(|&t| st.sinks_at(t)).collect()
}

/// Reconstruct the time-advanced potential psi(., t) and the sinks at t.
pub fn annihilate(p: &Potential, t: f64) -> Result<(Series, SinkState)> {
    let (a, b) = p.domain();
    let t_max = p.t_max();
    if t < 0.0 || t > t_max + 1e-12 {
        return Err(HortonError::Domain(format!(
            "time {t} outside [0, {t_max}]"
        )));
    }
    if t >= t_max {
        let series = Series::new(vec![(a, 0.0), (b, 0.0)])?;
        return Ok((
            series,
            SinkState {
                time: t,
                sinks: vec![Sink {
                    position: (a + b) / 2.0,
                    mass: b - a,
                    at_rest: true,
                }],
            },
        ));
    }
    let st = shock_tree(p)?;
    let mp = prune_dynamic_mass(&st.tree, t)?;
    let base = &mp.base;

    // Interior cuts per edge (offsets above the lower node), vertex cuts per
    // node.
    let nb = base.node_count();
    let mut edge_cuts: Vec<Vec<(f64, f64, Side)>> = vec![Vec::new(); nb];
    let mut vertex_masses: Vec<Vec<(f64, Side)>> = vec![Vec::new(); nb];
    for cut in &mp.cuts {
        match cut.location {
            CutLocation::Edge { node, offset } => {
                for m in &cut.masses {
                    edge_cuts[node].push((offset, m.value, m.side));
                }
            }
            CutLocation::Vertex(v) => {
                for m in &cut.masses {
                    vertex_masses[v].push((m.value, m.side));
                }
            }
        }
    }
    for list in edge_cuts.iter_mut() {
        list.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    }

    // Contour walk emitting breakpoints.
    let mut pts: Vec<(f64, f64)> = vec![(a, 0.0)];
    let mut x = a;
    let mut val = 0.0;
    let slope = |pts: &mut Vec<(f64, f64)>, x: &mut f64, val: &mut f64, dv: f64| {
        if dv != 0.0 {
            *x += dv.abs();
            *val += dv;
            pts.push((*x, *val));
        }
    };
    let plateau = |pts: &mut Vec<(f64, f64)>, x: &mut f64, val: &f64, w: f64| {
        if w > 0.0 {
            *x += w;
            pts.push((*x, *val));
        }
    };

    plateau(&mut pts, &mut x, &val, t); // boundary vacuum

    let root = base.root().expect("base nonempty for t < t_max");
    // walk states: descend edge to node, visit children with 2t gaps, ascend
    enum Step {
        Down(NodeId),
        Up(NodeId),
        Gap,
    }
    let mut stack: Vec<Step> = base
        .children(root)
        .iter()
        .rev()
        .map(|&c| Step::Down(c))
        .collect();
    while let Some(step) = stack.pop() {
        match step {
            Step::Down(v) => {
                let len = base.edge_len(v).unwrap_or(0.0);
                // descending pass: left-oriented interior masses
                let mut level = 0.0; // descended so far
                for &(off, m, side) in edge_cuts[v].iter().rev() {
                    let drop = (len - off) - level;
                    if side == Side::Left {
                        slope(&mut pts, &mut x, &mut val, -drop);
                        plateau(&mut pts, &mut x, &val, 2.0 * m);
                        level = len - off;
                    }
                }
                slope(&mut pts, &mut x, &mut val, -(len - level));

                if base.is_leaf(v) {
                    // sink kink or double-mass plateau
                    let ms = &vertex_masses[v];
                    if ms.len() >= 2 {
                        let total: f64 = ms.iter().map(|m| m.0).sum();
                        let w = 2.0 * (total - (ms.len() - 1) as f64 * t);
                        plateau(&mut pts, &mut x, &val, w.max(0.0));
                    }
                    stack.push(Step::Up(v));
                } else {
                    // left vertex masses, then children interleaved with 2t
                    for &(m, side) in &vertex_masses[v] {
                        if side == Side::Left {
                            plateau(&mut pts, &mut x, &val, 2.0 * m);
                        }
                    }
                    stack.push(Step::Up(v));
                    for (i, &c) in base.children(v).iter().enumerate().rev() {
                        stack.push(Step::Down(c));
                        if i > 0 {
                            stack.push(Step::Gap);
                        }
                    }
                }
            }
            Step::Gap => {
                plateau(&mut pts, &mut x, &val, 2.0 * t);
            }
            Step::Up(v) => {
                if !base.is_leaf(v) {
                    for &(m, side) in &vertex_masses[v] {
                        if side == Side::Right {
                            plateau(&mut pts, &mut x, &val, 2.0 * m);
                        }
                    }
                }
                let len = base.edge_len(v).unwrap_or(0.0);
                let mut level = 0.0; // ascended so far
                for &(off, m, side) in edge_cuts[v].iter() {
                    if side == Side::Right {
                        slope(&mut pts, &mut x, &mut val, off - level);
                        plateau(&mut pts, &mut x, &val, 2.0 * m);
                        level = off;
                    }
                }
                slope(&mut pts, &mut x, &mut val, len - level);
            }
        }
    }
    // masses parked at the root would mean the stem was erased, which only
    // happens at t >= t_max (handled above)
    debug_assert!(vertex_masses[root].is_empty());

    plateau(&mut pts, &mut x, &val, t); // boundary vacuum
    debug_assert!(
        (x - b).abs() < 1e-6 * (1.0 + (b - a).abs()),
        "profile span mismatch: {x} vs {b}"
    );
    // snap the final point onto the boundary to absorb rounding
    if let Some(last) = pts.last_mut() {
        last.0 = b;
    }
    let series = Series::new(pts)?;
    let sinks = st.sinks_at(t)?;
    Ok((series, sinks))
}

/// The closed-form laws of a random sink in an infinite exponential
/// potential: growth probability xi(t) and the mass law mu_t.
pub fn random_sink_theory(lambda: f64, t: f64) -> Result<(f64, SinkMassLaw)> {
    Ok((
        sink_growth_probability(lambda, t)?,
        SinkMassLaw::new(lambda, t)?,
    ))
}

/// Sample the state (at rest?, mass) of a random sink at time `t` by its
/// renewal description: accumulation intervals ~ Exp(lambda) alternate with
/// travel intervals distributed as the total length of an independent
/// GW(lambda) tree. The mass is twice the total accumulation time, i.e.
/// 2(t - elapsed travel of the current excursion) when moving and 2t when
/// at rest.
pub fn sample_random_sink_renewal<R: Rng + ?Sized>(lambda: f64, t: f64, rng: &mut R) -> Sink {
    let mut tau = 0.0; // accumulated lifetime at phase starts
    loop {
        let v = exp_inv_cdf(rng, lambda);
        if tau + v >= t {
            return Sink {
                position: 0.0,
                mass: 2.0 * t,
                at_rest: true,
            };
        }
        tau += v;
        let h = sample_gw_length_capped(lambda, t - tau + 1.0, rng);
        if tau + h > t {
            return Sink {
                position: 0.0,
                mass: 2.0 * tau,
                at_rest: false,
            };
        }
        tau += h;
    }
}

/// Window construction for a tracked sink: the spine above one leaf with
/// i.i.d. Exp(lambda) parental edges and independent GW(lambda) sibling
/// subtrees, grown until the surrounding excursion spans at least
/// `min_span`. Returns the potential and the planar leaf index of the
/// tracked sink.
pub fn sample_tracked_sink_window<R: Rng + ?Sized>(
    lambda: f64,
    min_span: f64,
    max_edges: usize,
    rng: &mut R,
) -> Result<(Potential, usize)> {
    // grow the spine as nested Newick-style fragments is clumsy; build by
    // re-rooting: keep the current subtree as a Tree and wrap it
    let mut core = Tree::single_edge(Some(exp_inv_cdf(rng, lambda)));
    let mut leaf_index = 0usize;
    let mut total_len = core.edge_len(1).unwrap();
    while 2.0 * total_len < min_span {
        let sibling = loop {
            if let Some(s) = sample_gw_exp_bounded(lambda, max_edges, rng)? {
                break s;
            }
        };
        let sib_len = crate::tree::tree_metrics(&sibling)?.length;
        let stem_len = exp_inv_cdf(rng, lambda);
        let tracked_left = rng.gen::<bool>();
        core = wrap_with_sibling(&core, &sibling, stem_len, tracked_left);
        if !tracked_left {
            leaf_index += sibling.leaf_count();
        }
        total_len += sib_len + stem_len;
    }
    Ok((Potential::from_tree(&core)?, leaf_index))
}

/// New planted tree: root -> junction with children (core's subtree,
/// sibling's subtree) in the requested order; the new stem gets `stem_len`.
fn wrap_with_sibling(core: &Tree, sibling: &Tree, stem_len: f64, core_left: bool) -> Tree {
    let mut t = Tree::singleton();
    let junction = t.add_child(0, Some(stem_len));
    let mut order = [core, sibling];
    if !core_left {
        order.swap(0, 1);
    }
    for src in order {
        // copy src below the junction, dropping its root (its stem becomes
        // the child edge)
        let sroot = src.root().expect("nonempty");
        let mut stack: Vec<(NodeId, NodeId)> = src
            .children(sroot)
            .iter()
            .rev()
            .map(|&c| (c, junction))
            .collect();
        while let Some((old, parent)) = stack.pop() {
            let id = t.add_child(parent, src.edge_len(old));
            for &c in src.children(old).iter().rev() {
                stack.push((c, id));
            }
        }
    }
    t
}

/// Event-driven discrete-particle simulation, used as an independent oracle
/// for the pruning-based reconstruction.
pub mod oracle {
    use super::Potential;
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    /// Simulate `n` equal-mass particles to time `t` and return the
    /// piecewise-linear potential profile of the survivors (breakpoints).
    /// Discretization error of the profile is O((b-a)/n).
    pub fn particle_profile(p: &Potential, n: usize, t: f64) -> Vec<(f64, f64)> {
        let (a, b) = p.domain();
        let dx = (b - a) / n as f64;
        // velocity of the particle at each cell center: v = -psi'
        let mut vel = vec![0i8; n];
        {
            let bp = &p.series.points;
            let mut seg = 0usize;
            for (i, v) in vel.iter_mut().enumerate() {
                let xc = a + (i as f64 + 0.5) * dx;
                while seg + 2 < bp.len() && bp[seg + 1].0 < xc {
                    seg += 1;
                }
                *v = if bp[seg + 1].1 > bp[seg].1 { -1 } else { 1 };
            }
        }
        let pos = |i: usize| a + (i as f64 + 0.5) * dx;
        // adjacency and the collision event queue; f64 times >= 0 compare
        // correctly through their bit patterns
        let mut next: Vec<usize> = (1..=n).collect();
        let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
        let mut alive = vec![true; n];
        let mut heap: BinaryHeap<Reverse<(u64, usize, usize)>> = BinaryHeap::new();
        let push_event = |heap: &mut BinaryHeap<Reverse<(u64, usize, usize)>>, i: usize, j: usize| {
            let tcol = (pos(j) - pos(i)) / 2.0;
            heap.push(Reverse((tcol.to_bits(), i, j)));
        };
        for i in 0..n - 1 {
            if vel[i] == 1 && vel[i + 1] == -1 {
                push_event(&mut heap, i, i + 1);
            }
        }
        while let Some(Reverse((bits, i, j))) = heap.pop() {
            let tcol = f64::from_bits(bits);
            if tcol > t {
                break;
            }
            if !alive[i] || !alive[j] || next[i] != j {
                continue;
            }
            alive[i] = false;
            alive[j] = false;
            let (pi, nj) = (prev[i], next[j]);
            if pi != usize::MAX && nj < n {
                next[pi] = nj;
                prev[nj] = pi;
                if vel[pi] == 1 && vel[nj] == -1 {
                    // collision time measured from 0: positions still linear
                    let tc = (pos(nj) - pos(pi)) / 2.0;
                    if tc >= tcol {
                        heap.push(Reverse((tc.to_bits(), pi, nj)));
                    }
                }
            } else {
                if pi != usize::MAX {
                    next[pi] = n;
                }
                if nj < n {
                    prev[nj] = usize::MAX;
                }
            }
        }
        // profile of the survivors
        let mut pts = vec![(a, 0.0)];
        let mut val = 0.0;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let x0 = pos(i) + t * vel[i] as f64 - dx / 2.0;
            let x1 = x0 + dx;
            let last = *pts.last().unwrap();
            if x0 > last.0 + 1e-12 {
                pts.push((x0, val)); // vacuum plateau
            }
            val -= vel[i] as f64 * dx;
            pts.push((x1, val));
        }
        let last = *pts.last().unwrap();
        if b > last.0 + 1e-12 {
            pts.push((b, val));
        }
        pts
    }

    /// Evaluate a piecewise-linear breakpoint list at `x`.
    pub fn eval_piecewise(pts: &[(f64, f64)], x: f64) -> f64 {
        match pts.binary_search_by(|p| p.0.partial_cmp(&x).unwrap()) {
            Ok(i) => pts[i].1,
            Err(0) => pts[0].1,
            Err(i) if i >= pts.len() => pts.last().unwrap().1,
            Err(i) => {
                let (x0, y0) = pts[i - 1];
                let (x1, y1) = pts[i];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

/// Sample a single-excursion exponential potential spanning at least
/// `min_span`: the negative Harris path of a GW(lambda) tree conditioned on
/// total length >= min_span / 2 (by rejection).
pub fn sample_exponential_potential<R: Rng + ?Sized>(
    lambda: f64,
    min_span: f64,
    max_edges: usize,
    rng: &mut R,
) -> Result<Potential> {
    loop {
        let Some(t) = sample_gw_exp_bounded(lambda, max_edges, rng)? else {
            continue;
        };
        let len = crate::tree::tree_metrics(&t)?.length;
        if 2.0 * len >= min_span {
            return Potential::from_tree(&t);
        }
    }
}
