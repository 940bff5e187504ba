//! Trees of spheres, nodal configurations, and stability of decorated trees.
//!
//! A bubble-tree limit organizes its components as a finite set with a
//! strict partial order in which (RS1) there is a unique minimal element
//! preceding everything, and (RS2) the predecessors of any element form a
//! chain. Every non-minimal element then has a well-defined immediate
//! predecessor, and attaching each sphere to its predecessor at a marked
//! point produces a nodal configuration of arithmetic genus 0. Stability of
//! the decorated tree (every constant component carries at least 3 special
//! points) is what makes the limit object unique.

use crate::error::{Error, Result};
use crate::poly::P1Point;
use crate::{Complex, TAU_POINT};

/// A named axiom violation with the elements witnessing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub axiom: String,
    pub witnesses: Vec<usize>,
    pub detail: String,
}

impl Violation {
    fn new(axiom: &str, witnesses: Vec<usize>, detail: String) -> Self {
        Violation { axiom: axiom.into(), witnesses, detail }
    }
}

/// A finite set `{0, .., n-1}` with immediate-predecessor edges, intended to
/// generate a rooted strict partial order. Arbitrary edge sets are accepted
/// at construction so that invalid configurations can be diagnosed by
/// [`RootedOrder::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct RootedOrder {
    preds: Vec<Vec<usize>>,
}

impl RootedOrder {
    /// Builds from `(child, parent)` edges over `n` elements.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("order needs at least one element".into()));
        }
        let mut preds = vec![Vec::new(); n];
        for &(child, parent) in edges {
            if child >= n || parent >= n {
                return Err(Error::Invalid(format!(
                    "edge ({child}, {parent}) out of range for {n} elements"
                )));
            }
            if child == parent {
                return Err(Error::Invalid(format!("self-edge at {child}")));
            }
            if !preds[child].contains(&parent) {
                preds[child].push(parent);
            }
        }
        Ok(RootedOrder { preds })
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All strict ancestors of `i` (elements reachable along predecessor
    /// edges), cycle-safe.
    pub fn ancestors(&self, i: usize) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack = self.preds[i].clone();
        let mut out = Vec::new();
        while let Some(h) = stack.pop() {
            if seen[h] {
                continue;
            }
            seen[h] = true;
            out.push(h);
            stack.extend(self.preds[h].iter().copied());
        }
        out.sort_unstable();
        out
    }

    fn comparable(&self, h1: usize, h2: usize) -> bool {
        h1 == h2 || self.ancestors(h1).contains(&h2) || self.ancestors(h2).contains(&h1)
    }

    /// Checks the rooted-order axioms; empty result means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            if self.ancestors(i).contains(&i) {
                out.push(Violation::new(
                    "order",
                    vec![i],
                    format!("element {i} precedes itself (cycle)"),
                ));
            }
        }
        if !out.is_empty() {
            return out;
        }
        let minimal: Vec<usize> = (0..n).filter(|&i| self.preds[i].is_empty()).collect();
        match minimal.as_slice() {
            [] => out.push(Violation::new(
                "RS1",
                vec![],
                "no minimal element".into(),
            )),
            [r] => {
                for i in 0..n {
                    if i != *r && !self.ancestors(i).contains(r) {
                        out.push(Violation::new(
                            "RS1",
                            vec![*r, i],
                            format!("minimal element {r} does not precede {i}"),
                        ));
                    }
                }
            }
            more => out.push(Violation::new(
                "RS1",
                more.to_vec(),
                format!("{} minimal elements", more.len()),
            )),
        }
        for i in 0..n {
            let ps = &self.preds[i];
            for a in 0..ps.len() {
                for b in (a + 1)..ps.len() {
                    if !self.comparable(ps[a], ps[b]) {
                        out.push(Violation::new(
                            "RS2",
                            vec![i, ps[a], ps[b]],
                            format!(
                                "predecessors {} and {} of {i} are incomparable",
                                ps[a], ps[b]
                            ),
                        ));
                    }
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// The unique minimal element of a valid order.
    pub fn root(&self) -> Result<usize> {
        let minimal: Vec<usize> = (0..self.len()).filter(|&i| self.preds[i].is_empty()).collect();
        match minimal.as_slice() {
            [r] => Ok(*r),
            _ => Err(Error::RootHasNoPredecessor),
        }
    }

    /// Immediate predecessor: the maximum of the predecessor chain of `i`.
    /// Errors with [`Error::RootHasNoPredecessor`] at the root.
    pub fn predecessor(&self, i: usize) -> Result<usize> {
        let ps = &self.preds[i];
        if ps.is_empty() {
            return Err(Error::RootHasNoPredecessor);
        }
        // on a valid order the given predecessors are pairwise comparable,
        // so the one with the most ancestors is the immediate one
        let mut best = ps[0];
        let mut depth = self.ancestors(best).len();
        for &p in &ps[1..] {
            let d = self.ancestors(p).len();
            if d > depth {
                best = p;
                depth = d;
            }
        }
        Ok(best)
    }

    /// Elements whose immediate predecessor is `i`, ascending.
    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.predecessor(j).map_or(false, |p| p == i))
            .collect()
    }
}

/// A tree of spheres: a rooted order together with, for each non-root
/// element, the point on its predecessor sphere where it attaches.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereTree {
    pub order: RootedOrder,
    attach: Vec<Option<Complex>>,
}

impl SphereTree {
    pub fn new(order: RootedOrder, attach: Vec<Option<Complex>>) -> Result<Self> {
        if attach.len() != order.len() {
            return Err(Error::Invalid("one attachment slot per element required".into()));
        }
        Ok(SphereTree { order, attach })
    }

    /// Attachment point of non-root element `i` on its predecessor sphere.
    pub fn attach(&self, i: usize) -> Option<Complex> {
        self.attach[i]
    }

    /// Rooted-order axioms plus attachment axioms: every non-root needs an
    /// attachment point, and two distinct elements may not attach to the same
    /// predecessor at the same point.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.order.validate();
        let root = self.order.root().ok();
        for i in 0..self.order.len() {
            let is_root = root == Some(i);
            match (is_root, self.attach[i]) {
                (false, None) => out.push(Violation::new(
                    "attach",
                    vec![i],
                    format!("non-root element {i} has no attachment point"),
                )),
                (true, Some(_)) => out.push(Violation::new(
                    "attach",
                    vec![i],
                    format!("root {i} carries an attachment point"),
                )),
                _ => {}
            }
        }
        if !out.is_empty() {
            return out;
        }
        let n = self.order.len();
        for i1 in 0..n {
            for i2 in (i1 + 1)..n {
                let (p1, p2) = (self.order.predecessor(i1), self.order.predecessor(i2));
                if let (Ok(p1), Ok(p2)) = (p1, p2) {
                    if p1 == p2 {
                        let (z1, z2) = (self.attach[i1].unwrap(), self.attach[i2].unwrap());
                        let scale = z1.norm().max(z2.norm()).max(1.0);
                        if (z1 - z2).norm() <= TAU_POINT * scale {
                            out.push(Violation::new(
                                "zcond",
                                vec![i1, i2],
                                format!("elements {i1} and {i2} attach to {p1} at the same point"),
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// The nodal configuration: each non-root sphere is glued at its own
    /// infinity to the attachment point on the predecessor.
    pub fn nodal_config(&self) -> Result<NodalConfig> {
        let mut pairs = Vec::new();
        for i in 0..self.order.len() {
            if let Ok(p) = self.order.predecessor(i) {
                let z = self.attach[i].ok_or(Error::Invalid(format!(
                    "non-root element {i} has no attachment point"
                )))?;
                pairs.push(((i, P1Point::infinity()), (p, P1Point::from_affine(z))));
            }
        }
        Ok(NodalConfig { components: self.order.len(), pairs })
    }
}

/// A disjoint union of spheres with identified point pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalConfig {
    pub components: usize,
    pub pairs: Vec<((usize, P1Point), (usize, P1Point))>,
}

impl NodalConfig {
    /// Checks that every glued point is used by exactly one pair.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut used: Vec<(usize, P1Point, usize)> = Vec::new();
        for (k, &((c1, p1), (c2, p2))) in self.pairs.iter().enumerate() {
            for &(c, p) in &[(c1, p1), (c2, p2)] {
                if c >= self.components {
                    out.push(Violation::new(
                        "nodal",
                        vec![c],
                        format!("pair {k} references component {c} out of range"),
                    ));
                    continue;
                }
                for &(uc, up, uk) in &used {
                    if uc == c && up.close_to(&p, TAU_POINT) {
                        out.push(Violation::new(
                            "nodal",
                            vec![c, uk, k],
                            format!("point on component {c} used by pairs {uk} and {k}"),
                        ));
                    }
                }
                used.push((c, p, k));
            }
        }
        out
    }

    /// Arithmetic genus `1 - (#components) + (#pairs)`; equivalently
    /// `(2 - chi + #glued points)/2` for a normalization by spheres. Trees
    /// of spheres always give 0.
    pub fn arithmetic_genus(&self) -> i64 {
        1 - self.components as i64 + self.pairs.len() as i64
    }
}

/// A tree of spheres decorated with a map degree and a count of extra marked
/// points per component.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoratedTree {
    pub tree: SphereTree,
    pub degrees: Vec<usize>,
    pub marked: Vec<usize>,
}

impl DecoratedTree {
    pub fn new(tree: SphereTree, degrees: Vec<usize>, marked: Vec<usize>) -> Result<Self> {
        if degrees.len() != tree.order.len() || marked.len() != tree.order.len() {
            return Err(Error::Invalid("one degree and mark count per component".into()));
        }
        Ok(DecoratedTree { tree, degrees, marked })
    }

    pub fn total_degree(&self) -> usize {
        self.degrees.iter().sum()
    }

    /// Number of special points on component `i`: marked points, attachment
    /// points of children, and the node toward the predecessor.
    pub fn special_points(&self, i: usize) -> usize {
        let children = self.tree.order.children(i).len();
        let toward_root = usize::from(self.tree.order.predecessor(i).is_ok());
        self.marked[i] + children + toward_root
    }

    /// Stability: every degree-0 component must carry at least 3 special
    /// points. Returns the flag and the offending components, ascending.
    pub fn stability(&self) -> (bool, Vec<usize>) {
        let offenders: Vec<usize> = (0..self.tree.order.len())
            .filter(|&i| self.degrees[i] == 0 && self.special_points(i) < 3)
            .collect();
        (offenders.is_empty(), offenders)
    }
}

/// Convenience check used by reports: stability flag plus offenders.
pub fn stability_check(t: &DecoratedTree) -> (bool, Vec<usize>) {
    t.stability()
}
