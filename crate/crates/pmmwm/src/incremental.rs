//! Penalized working copy of an instance graph plus the incremental
//! rematching step.
//!
//! The solver never edits the original graph: it raises weights on a
//! [`WorkingGraph`] to push edges out of the optimal matching. Because a
//! weight increase can only loosen a dual inequality, the labels from
//! the previous solve stay feasible and every matched edge except the
//! penalized one stays tight — so rematching the single freed vertex
//! with [`kmm_step`] lands on the same matching a full solve from
//! scratch would produce, at a fraction of the work.
//!
//! Every arc also carries a fixed pseudo-random tie-break value derived
//! from its endpoints. The matcher orders costs (weight, tie), so among
//! equal-weight matchings exactly one is optimal — which is what makes
//! the incremental and from-scratch paths agree edge-for-edge instead
//! of merely weight-for-weight. Penalizing changes an arc's weight but
//! never its tie.

use std::collections::BTreeSet;

use crate::hungarian::{init_duals, match_vertex, Cost, CostView, DualState, SearchScratch};
use crate::instances::splitmix64;
use crate::problem::{Adjacency, BipartiteGraph, Matching, Weight};
use crate::{Error, Result};

/// Tie values use 44 bits: dual adjustments accumulate at most one tie
/// per vertex, so sums stay below 2^55 even on the largest instances.
const TIE_BITS: u32 = 44;

fn arc_tie(u: usize, v: usize) -> i64 {
    (splitmix64(((u as u64) << 32) ^ v as u64) & ((1 << TIE_BITS) - 1)) as i64
}

/// A copy-on-write view of a base graph where selected edges carry a
/// large penalty weight instead of their real one. The penalty is fixed
/// at construction as `penalty_factor` times the heaviest base weight,
/// which dominates any real matching without risking overflow in the
/// weight sums.
#[derive(Clone, Debug)]
pub struct WorkingGraph<'a> {
    base: &'a BipartiteGraph,
    arcs: Vec<Vec<(usize, Cost)>>,
    penalized: BTreeSet<(usize, usize)>,
    penalty: Weight,
}

impl<'a> WorkingGraph<'a> {
    pub fn new(base: &'a BipartiteGraph, penalty_factor: i64) -> Result<Self> {
        let penalty = base
            .c_max()
            .checked_mul(penalty_factor)
            .ok_or_else(|| Error::Precondition("penalty weight overflows".into()))?;
        let arcs = (0..base.n1)
            .map(|u| {
                base.neighbors(u)
                    .iter()
                    .map(|&(v, w)| (v, Cost::new(w.milli(), arc_tie(u, v))))
                    .collect()
            })
            .collect();
        Ok(Self {
            base,
            arcs,
            penalized: BTreeSet::new(),
            penalty,
        })
    }

    pub fn base(&self) -> &'a BipartiteGraph {
        self.base
    }

    pub fn penalty(&self) -> Weight {
        self.penalty
    }

    /// Current working weight of (u, v): the penalty if penalized, the
    /// base weight otherwise.
    pub fn weight(&self, u: usize, v: usize) -> Option<Weight> {
        self.cost(u, v).map(|c| Weight::from_milli(c.milli))
    }

    /// Total working weight over the matched edges.
    pub fn matching_weight(&self, pi: &Matching) -> Result<Weight> {
        let mut total = Weight::ZERO;
        for u in 0..pi.match_of_u.len() {
            let v = pi.match_of_u[u].ok_or(Error::InfeasibleMatching(u))?;
            total += self.weight(u, v).ok_or(Error::EdgeNotFound { u, v })?;
        }
        Ok(total)
    }

    /// Replace the weight of (u, v) with the penalty, keeping the arc's
    /// tie value. Idempotent; errors with [`Error::EdgeNotFound`] if the
    /// edge does not exist.
    pub fn penalize_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let row = self.arcs.get_mut(u).ok_or(Error::EdgeNotFound { u, v })?;
        let pos = row
            .binary_search_by_key(&v, |&(vv, _)| vv)
            .map_err(|_| Error::EdgeNotFound { u, v })?;
        row[pos].1.milli = self.penalty.milli();
        self.penalized.insert((u, v));
        Ok(())
    }

    pub fn is_penalized(&self, u: usize, v: usize) -> bool {
        self.penalized.contains(&(u, v))
    }

    pub fn penalized_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.penalized.iter().copied()
    }
}

impl CostView for WorkingGraph<'_> {
    fn left_count(&self) -> usize {
        self.base.n1
    }

    fn right_count(&self) -> usize {
        self.base.n2
    }

    fn arcs(&self, u: usize) -> &[(usize, Cost)] {
        &self.arcs[u]
    }
}

/// Rematch a single vertex whose matched edge was just penalized: drop
/// the assignment and run the augmenting search with the existing
/// labels. Errors with [`Error::Precondition`] if `u` is unmatched.
pub fn kmm_step(
    u: usize,
    g: &impl CostView,
    duals: &mut DualState,
    pi: &mut Matching,
    scratch: &mut SearchScratch,
) -> Result<()> {
    if pi.unassign_u(u).is_none() {
        return Err(Error::Precondition(format!(
            "u{u} is not matched; nothing to rematch"
        )));
    }
    match_vertex(u, g, duals, pi, scratch)
}

/// One stage-one solve in the incremental scheme. With an empty matching
/// this is a full solve (fresh labels, every vertex matched); afterwards
/// it reuses the live state and rematches only `last_penalized`. The
/// final sweep picks up any vertex still unmatched, so the postcondition
/// is always a perfect-on-U matching or an infeasibility error.
pub fn kmm_entry(
    last_penalized: Option<usize>,
    g: &impl CostView,
    duals: &mut DualState,
    pi: &mut Matching,
    scratch: &mut SearchScratch,
) -> Result<()> {
    if pi.is_empty() {
        *duals = init_duals(g)?;
    } else {
        let u = last_penalized.ok_or_else(|| {
            Error::Precondition("rematch requested but no vertex was penalized".into())
        })?;
        kmm_step(u, g, duals, pi, scratch)?;
    }
    for u in 0..g.left_count() {
        if pi.match_of_u[u].is_none() {
            match_vertex(u, g, duals, pi, scratch)?;
        }
    }
    Ok(())
}
