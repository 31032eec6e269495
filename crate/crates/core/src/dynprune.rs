//! Generalized dynamical pruning S_t(phi, T): erase every point whose
//! descendant subtree has phi-value below t, keeping the root.
//!
//! Built-in functionals: total length, height, Horton-Strahler order minus
//! one, and leaf count. Length and height admit mid-edge cuts (the cut
//! offset solves phi(c) + u = t inside an edge); order and leaf count are
//! step functionals, so cuts land on vertices. The mass-equipped variant
//! (length only) records the size of every pruned subtree at its cut,
//! oriented by the planar side it hung on.

use crate::error::{HortonError, Result};
use crate::horton::assign_orders;
use crate::tree::{NodeId, Tree};

/// Built-in monotone functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneFunctional {
    Length,
    Height,
    /// ord(T) - 1 (the register number); with unit edge lengths
    /// S_t = R^{floor(t)}.
    Order,
    Leaves,
}

impl PruneFunctional {
    fn needs_lengths(self) -> bool {
        matches!(self, PruneFunctional::Length | PruneFunctional::Height)
    }

    /// True if the functional grows linearly along an edge (mid-edge cuts).
    fn continuous(self) -> bool {
        matches!(self, PruneFunctional::Length | PruneFunctional::Height)
    }
}

/// Orientation of a recorded mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    None,
}

/// A point mass left behind by the mass-equipped pruning.
#[derive(Debug, Clone, Copy)]
pub struct Mass {
    pub value: f64,
    pub side: Side,
}

/// Where a cut sits in the pruned tree.
#[derive(Debug, Clone, Copy)]
pub enum CutLocation {
    /// At a vertex of the pruned tree: a leaf (fully-pruned sibling pairs,
    /// mid-edge cuts) or an inner vertex/root.
    Vertex(NodeId),
    /// In the interior of the parental edge of `node`, `offset` above it.
    Edge { node: NodeId, offset: f64 },
}

#[derive(Debug, Clone)]
pub struct Cut {
    pub location: CutLocation,
    pub masses: Vec<Mass>,
}

/// Pruned tree carrying the masses of erased subtrees.
#[derive(Debug, Clone)]
pub struct MassEquippedTree {
    pub base: Tree,
    pub cuts: Vec<Cut>,
}

impl MassEquippedTree {
    pub fn total_mass(&self) -> f64 {
        self.cuts
            .iter()
            .flat_map(|c| c.masses.iter())
            .map(|m| m.value)
            .sum()
    }

    /// Cuts sitting at a given vertex.
    pub fn cuts_at(&self, v: NodeId) -> impl Iterator<Item = &Cut> {
        self.cuts
            .iter()
            .filter(move |c| matches!(c.location, CutLocation::Vertex(u) if u == v))
    }

    /// Interior cuts on the parental edge of `v`, sorted by offset.
    pub fn cuts_on_edge(&self, v: NodeId) -> Vec<&Cut> {
        let mut out: Vec<&Cut> = self
            .cuts
            .iter()
            .filter(|c| matches!(c.location, CutLocation::Edge { node, .. } if node == v))
            .collect();
        out.sort_by(|a, b| {
            let oa = match a.location {
                CutLocation::Edge { offset, .. } => offset,
                _ => 0.0,
            };
            let ob = match b.location {
                CutLocation::Edge { offset, .. } => offset,
                _ => 0.0,
            };
            oa.partial_cmp(&ob).unwrap()
        });
        out
    }
}

/// phi(Delta_v) for every vertex, computed bottom-up in one pass.
pub fn functional_values(t: &Tree, phi: PruneFunctional) -> Result<Vec<f64>> {
    if t.is_empty() {
        return Ok(Vec::new());
    }
    if phi.needs_lengths() && !t.is_metric() {
        return Err(HortonError::MissingLengths(format!("{phi:?} pruning")));
    }
    let n = t.node_count();
    let mut val = vec![0.0f64; n];
    match phi {
        PruneFunctional::Length => {
            for v in t.postorder() {
                val[v] = t
                    .children(v)
                    .iter()
                    .map(|&c| val[c] + t.edge_len(c).unwrap())
                    .sum();
            }
        }
        PruneFunctional::Height => {
            for v in t.postorder() {
                val[v] = t
                    .children(v)
                    .iter()
                    .map(|&c| val[c] + t.edge_len(c).unwrap())
                    .fold(0.0, f64::max);
            }
        }
        PruneFunctional::Order => {
            let a = assign_orders(t)?;
            for v in 0..n {
                val[v] = a.node_order[v] as f64 - 1.0;
            }
        }
        PruneFunctional::Leaves => {
            for v in t.postorder() {
                let kids = t.children(v);
                val[v] = if kids.is_empty() {
                    1.0
                } else {
                    kids.iter().map(|&c| val[c]).sum()
                };
            }
        }
    }
    Ok(val)
}

/// S_t(phi, T) for a built-in functional.
pub fn prune_dynamic(t: &Tree, phi: PruneFunctional, threshold: f64) -> Result<Tree> {
    let phi_vals = functional_values(t, phi)?;
    Ok(prune_impl(t, &phi_vals, phi.continuous(), threshold, false)?.base)
}

/// S_t with a user-supplied per-vertex functional (cuts at vertex
/// granularity). The functional must be monotone along root paths; a
/// violation is reported as a contract error.
pub fn prune_dynamic_with<F>(t: &Tree, phi: F, threshold: f64) -> Result<Tree>
where
    F: Fn(&Tree, NodeId) -> f64,
{
    if t.is_empty() {
        return Ok(Tree::empty());
    }
    let vals: Vec<f64> = (0..t.node_count()).map(|v| phi(t, v)).collect();
    for v in t.preorder() {
        if let Some(p) = t.parent(v) {
            if vals[p] < vals[v] {
                return Err(HortonError::NonMonotone(format!(
                    "phi({p}) = {} < phi({v}) = {}",
                    vals[p], vals[v]
                )));
            }
        }
    }
    Ok(prune_impl(t, &vals, false, threshold, false)?.base)
}

/// Mass-equipped pruning with phi = length: each erased subtree leaves a
/// point mass equal to its total length at its cut.
pub fn prune_dynamic_mass(t: &Tree, threshold: f64) -> Result<MassEquippedTree> {
    let phi_vals = functional_values(t, PruneFunctional::Length)?;
    prune_impl(t, &phi_vals, true, threshold, true)
}

/// One child slot of a surviving vertex after thresholding.
enum Slot {
    Surviving(NodeId),
    /// Mid-edge cut: surviving upper piece of the edge; the pruned part has
    /// phi exactly equal to the threshold.
    Partial { stub: f64, mass: f64 },
    /// Fully pruned subtree (parental edge included) of the given mass.
    Pruned { mass: f64 },
}

fn prune_impl(
    t: &Tree,
    phi: &[f64],
    continuous: bool,
    threshold: f64,
    with_mass: bool,
) -> Result<MassEquippedTree> {
    let Some(root) = t.root() else {
        return Ok(MassEquippedTree {
            base: Tree::empty(),
            cuts: Vec::new(),
        });
    };
    if threshold < 0.0 {
        return Err(HortonError::Domain("prune threshold must be >= 0".into()));
    }
    let metric = t.is_metric();
    let survives = |v: NodeId| phi[v] >= threshold;
    let classify = |c: NodeId| -> Slot {
        if survives(c) {
            return Slot::Surviving(c);
        }
        let len = t.edge_len(c).unwrap_or(0.0);
        if continuous {
            let missing = threshold - phi[c];
            if missing < len {
                return Slot::Partial {
                    stub: len - missing,
                    mass: threshold,
                };
            }
        }
        Slot::Pruned {
            mass: phi[c] + len,
        }
    };
    let side_of = |idx: usize, total: usize| -> Side {
        if total <= 1 {
            Side::None
        } else if idx == 0 {
            Side::Left
        } else {
            Side::Right
        }
    };

    let mut base = Tree::singleton();
    let mut cuts: Vec<Cut> = Vec::new();

    // Pending subtree walks: the parental edge accumulated so far (`acc`
    // includes everything from `new_parent` down to `old` inclusive) plus
    // interior masses recorded at their distance from the edge top.
    struct Frame {
        old: NodeId,
        new_parent: NodeId,
        acc: f64,
        interior: Vec<(f64, Mass)>,
    }
    let mut stack: Vec<Frame> = Vec::new();

    // Root: always a real node.
    {
        let kids = t.children(root);
        let slots: Vec<Slot> = kids.iter().map(|&c| classify(c)).collect();
        let masses: Vec<Mass> = slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Slot::Pruned { mass } => Some(Mass {
                    value: *mass,
                    side: side_of(i, kids.len()),
                }),
                _ => None,
            })
            .collect();
        if with_mass && !masses.is_empty() {
            cuts.push(Cut {
                location: CutLocation::Vertex(0),
                masses,
            });
        }
        for slot in slots.into_iter().rev() {
            match slot {
                Slot::Surviving(c) => stack.push(Frame {
                    old: c,
                    new_parent: 0,
                    acc: t.edge_len(c).unwrap_or(0.0),
                    interior: Vec::new(),
                }),
                Slot::Partial { stub, mass } => {
                    let leaf = base.add_child(0, metric.then_some(stub));
                    if with_mass {
                        cuts.push(Cut {
                            location: CutLocation::Vertex(leaf),
                            masses: vec![Mass {
                                value: mass,
                                side: Side::None,
                            }],
                        });
                    }
                }
                Slot::Pruned { .. } => {}
            }
        }
    }

    while let Some(mut f) = stack.pop() {
        loop {
            let kids = t.children(f.old);
            let slots: Vec<Slot> = kids.iter().map(|&c| classify(c)).collect();
            let out_degree = slots
                .iter()
                .filter(|s| !matches!(s, Slot::Pruned { .. }))
                .count();
            let vertex_masses: Vec<Mass> = slots
                .iter()
                .enumerate()
                .filter_map(|(i, s)| match s {
                    Slot::Pruned { mass } => Some(Mass {
                        value: *mass,
                        side: side_of(i, kids.len()),
                    }),
                    _ => None,
                })
                .collect();

            if out_degree == 1 {
                // degree-2 vertex in the output: elide it, keeping any cut
                // masses as interior marks on the merged edge
                for m in vertex_masses {
                    f.interior.push((f.acc, m));
                }
                let slot = slots
                    .into_iter()
                    .find(|s| !matches!(s, Slot::Pruned { .. }))
                    .expect("out_degree == 1");
                match slot {
                    Slot::Surviving(c) => {
                        f.old = c;
                        f.acc += t.edge_len(c).unwrap_or(0.0);
                        continue;
                    }
                    Slot::Partial { stub, mass } => {
                        let total = f.acc + stub;
                        let leaf = base.add_child(f.new_parent, metric.then_some(total));
                        if with_mass {
                            for (from_top, m) in f.interior.drain(..) {
                                cuts.push(Cut {
                                    location: CutLocation::Edge {
                                        node: leaf,
                                        offset: total - from_top,
                                    },
                                    masses: vec![m],
                                });
                            }
                            cuts.push(Cut {
                                location: CutLocation::Vertex(leaf),
                                masses: vec![Mass {
                                    value: mass,
                                    side: Side::None,
                                }],
                            });
                        }
                        break;
                    }
                    Slot::Pruned { .. } => unreachable!(),
                }
            }

            // `old` materializes: leaf (out_degree 0) or branch point
            let id = base.add_child(f.new_parent, metric.then_some(f.acc));
            if with_mass {
                for (from_top, m) in f.interior.drain(..) {
                    cuts.push(Cut {
                        location: CutLocation::Edge {
                            node: id,
                            offset: f.acc - from_top,
                        },
                        masses: vec![m],
                    });
                }
                if !vertex_masses.is_empty() {
                    cuts.push(Cut {
                        location: CutLocation::Vertex(id),
                        masses: vertex_masses,
                    });
                }
            }
            for slot in slots.into_iter().rev() {
                match slot {
                    Slot::Surviving(c) => stack.push(Frame {
                        old: c,
                        new_parent: id,
                        acc: t.edge_len(c).unwrap_or(0.0),
                        interior: Vec::new(),
                    }),
                    Slot::Partial { stub, mass } => {
                        let leaf = base.add_child(id, metric.then_some(stub));
                        if with_mass {
                            cuts.push(Cut {
                                location: CutLocation::Vertex(leaf),
                                masses: vec![Mass {
                                    value: mass,
                                    side: Side::None,
                                }],
                            });
                        }
                    }
                    Slot::Pruned { .. } => {}
                }
            }
            break;
        }
    }

    Ok(MassEquippedTree { base, cuts })
}
