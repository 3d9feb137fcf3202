//! Min-weight perfect matching of U into V, solved as max-weight
//! matching on negated costs with vertex labels (duals) and slack
//! bookkeeping.
//!
//! The dual state is a first-class value: the solver keeps it alive
//! across penalize/rematch rounds instead of restarting from scratch,
//! which is what makes the incremental variant fast. Everything here is
//! deterministic — neighbors are scanned in ascending v order, vertices
//! are matched in ascending u order, and ties fall to the lowest index.
//!
//! Costs are (weight, tie) pairs ordered lexicographically. The tie
//! component lets a caller make the optimal matching unique: with
//! pairwise-distinct tie sums, every equal-weight choice is broken the
//! same way no matter how the search arrives at it, so a from-scratch
//! solve and an incrementally maintained one land on the identical
//! edge set. Plain views set every tie to zero and behave exactly like
//! weight-only matching.

use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use crate::problem::{Adjacency, Matching};
use crate::{Error, Result};

/// Edge cost as the matcher sees it: the weight in milli-units plus a
/// tie-breaking component. Ordering is lexicographic (weight first), so
/// the weight-optimal matchings are exactly the [`Cost`]-optimal ones
/// whenever ties are zero, and the unique tie-minimal one among them
/// otherwise.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost {
    pub milli: i64,
    pub tie: i64,
}

impl Cost {
    pub const ZERO: Cost = Cost { milli: 0, tie: 0 };
    /// Sentinel for "no edge seen yet"; never participates in sums.
    pub const MAX: Cost = Cost {
        milli: i64::MAX,
        tie: i64::MAX,
    };

    pub const fn new(milli: i64, tie: i64) -> Self {
        Cost { milli, tie }
    }

    /// A cost with no tie component.
    pub const fn plain(milli: i64) -> Self {
        Cost { milli, tie: 0 }
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost::new(self.milli + rhs.milli, self.tie + rhs.tie)
    }
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(self, rhs: Cost) -> Cost {
        Cost::new(self.milli - rhs.milli, self.tie - rhs.tie)
    }
}

impl Neg for Cost {
    type Output = Cost;
    fn neg(self) -> Cost {
        Cost::new(-self.milli, -self.tie)
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        *self = *self + rhs;
    }
}

impl SubAssign for Cost {
    fn sub_assign(&mut self, rhs: Cost) {
        *self = *self - rhs;
    }
}

/// Read access to the cost structure the matcher runs on. Implemented
/// by [`PlainCosts`] (tie-free wrapper over any graph) and by the
/// solver's penalized working copies.
pub trait CostView {
    fn left_count(&self) -> usize;
    fn right_count(&self) -> usize;
    /// Arcs of `u` with their costs, sorted by v ascending.
    fn arcs(&self, u: usize) -> &[(usize, Cost)];

    /// Cost of arc (u, v), if present.
    fn cost(&self, u: usize, v: usize) -> Option<Cost> {
        let arcs = self.arcs(u);
        arcs.binary_search_by_key(&v, |&(x, _)| x)
            .ok()
            .map(|i| arcs[i].1)
    }
}

/// Owned tie-free cost view over a graph: every tie is zero, so the
/// matcher behaves as plain weight-only matching.
#[derive(Clone, Debug)]
pub struct PlainCosts {
    arcs: Vec<Vec<(usize, Cost)>>,
    n2: usize,
}

impl PlainCosts {
    pub fn new(g: &impl Adjacency) -> Self {
        let arcs = (0..g.left_count())
            .map(|u| {
                g.neighbors(u)
                    .iter()
                    .map(|&(v, w)| (v, Cost::plain(w.milli())))
                    .collect()
            })
            .collect();
        PlainCosts {
            arcs,
            n2: g.right_count(),
        }
    }
}

impl CostView for PlainCosts {
    fn left_count(&self) -> usize {
        self.arcs.len()
    }
    fn right_count(&self) -> usize {
        self.n2
    }
    fn arcs(&self, u: usize) -> &[(usize, Cost)] {
        &self.arcs[u]
    }
}

/// Vertex labels in the negated-cost convention: internally the solve
/// maximizes `-c`, so feasibility means `ex_u[u] + ex_v[v] >= -c(u, v)`
/// for every arc, with equality ("tight") on matched arcs.
#[derive(Clone, Debug, Default)]
pub struct DualState {
    pub ex_u: Vec<Cost>,
    pub ex_v: Vec<Cost>,
}

impl DualState {
    /// Slack of (u, v) in the internal max form; zero means tight.
    #[inline]
    fn reduced(&self, u: usize, v: usize, c: Cost) -> Cost {
        self.ex_u[u] + self.ex_v[v] + c
    }

    /// Full scan of the dual inequality over every arc. O(E); meant for
    /// tests and debugging, not for hot paths.
    pub fn is_feasible(&self, g: &impl CostView) -> bool {
        (0..g.left_count()).all(|u| {
            g.arcs(u)
                .iter()
                .all(|&(v, c)| self.reduced(u, v, c) >= Cost::ZERO)
        })
    }

    /// Complementary slackness: every matched arc is tight.
    pub fn is_tight_on(&self, g: &impl CostView, pi: &Matching) -> bool {
        pi.match_of_u.iter().enumerate().all(|(u, &mv)| {
            mv.is_none_or(|v| {
                g.cost(u, v)
                    .is_some_and(|c| self.reduced(u, v, c) == Cost::ZERO)
            })
        })
    }
}

/// Reusable workspace for the augmenting search. `slack_v` holds the
/// minimum slack from the visited tree to each unvisited v and `arg_v`
/// the u-vertex achieving it — once the arc goes tight that same vertex
/// is v's tree parent, so augmenting paths are reconstructed from
/// `arg_v` without recursion.
#[derive(Clone, Debug, Default)]
pub struct SearchScratch {
    vis_u: Vec<bool>,
    vis_v: Vec<bool>,
    slack_v: Vec<Cost>,
    arg_v: Vec<usize>,
    /// Explicit DFS stack of (u, next adjacency position).
    stack: Vec<(usize, usize)>,
}

impl SearchScratch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Start of a phase (one vertex to match): slack resets to infinity.
    fn prepare_phase(&mut self, n1: usize, n2: usize) {
        self.vis_u.resize(n1, false);
        self.vis_v.resize(n2, false);
        self.slack_v.clear();
        self.slack_v.resize(n2, Cost::MAX);
        self.arg_v.clear();
        self.arg_v.resize(n2, 0);
    }

    /// Start of a search pass within a phase: only the visit marks reset.
    fn prepare_pass(&mut self) {
        self.vis_u.fill(false);
        self.vis_v.fill(false);
    }
}

/// Initial labels: `ex_v = 0` and `ex_u` the best negated cost over u's
/// arcs, so every arc starts feasible and each u has at least one tight
/// arc. Errors with [`Error::IsolatedVertex`] if some u has no arcs at
/// all.
pub fn init_duals(g: &impl CostView) -> Result<DualState> {
    let mut ex_u = Vec::with_capacity(g.left_count());
    for u in 0..g.left_count() {
        let best = g
            .arcs(u)
            .iter()
            .map(|&(_, c)| -c)
            .max()
            .ok_or(Error::IsolatedVertex(u))?;
        ex_u.push(best);
    }
    Ok(DualState {
        ex_u,
        ex_v: vec![Cost::ZERO; g.right_count()],
    })
}

/// Flip the matching along the tree path ending at the free vertex
/// `v_free`, read off `arg_v` back to the root `u0`.
fn augment(v_free: usize, u0: usize, pi: &mut Matching, arg_v: &[usize]) {
    let mut v = v_free;
    loop {
        let u = arg_v[v];
        let entered_via = pi.match_of_u[u];
        pi.assign(u, v);
        match entered_via {
            Some(prev_v) if u != u0 => v = prev_v,
            _ => break,
        }
    }
}

/// One search pass over the current equality subgraph, rooted at `u0`:
/// an iterative depth-first walk across tight arcs. Returns true once
/// an unmatched v is reached and the matching has been augmented along
/// the path. Returns false when the tree is exhausted; `slack_v` then
/// holds the minimum slack to every unvisited v, ready for a label
/// adjustment.
pub fn find_path(
    u0: usize,
    g: &impl CostView,
    duals: &DualState,
    pi: &mut Matching,
    scratch: &mut SearchScratch,
) -> bool {
    scratch.prepare_pass();
    scratch.vis_u[u0] = true;
    scratch.stack.clear();
    scratch.stack.push((u0, 0));

    while let Some(&(u, saved)) = scratch.stack.last() {
        let arcs = g.arcs(u);
        let mut cursor = saved;
        let mut descended = false;
        while cursor < arcs.len() {
            let (v, c) = arcs[cursor];
            cursor += 1;
            if scratch.vis_v[v] {
                continue;
            }
            let slack = duals.reduced(u, v, c);
            if slack == Cost::ZERO {
                scratch.vis_v[v] = true;
                scratch.arg_v[v] = u;
                match pi.match_of_v[v] {
                    None => {
                        augment(v, u0, pi, &scratch.arg_v);
                        return true;
                    }
                    Some(partner) if !scratch.vis_u[partner] => {
                        scratch.vis_u[partner] = true;
                        let top = scratch.stack.len() - 1;
                        scratch.stack[top].1 = cursor;
                        scratch.stack.push((partner, 0));
                        descended = true;
                        break;
                    }
                    Some(_) => {} // partner already in the tree
                }
            } else if slack < scratch.slack_v[v] {
                scratch.slack_v[v] = slack;
                scratch.arg_v[v] = u;
            }
        }
        if !descended {
            scratch.stack.pop();
        }
    }
    false
}

/// Match `u`, alternating search passes with label adjustments until an
/// augmenting path appears. Already-matched vertices are a no-op. The
/// adjustment takes Δ as the minimum slack over unvisited v (infinite
/// entries excluded), lowers visited `ex_u`, raises visited `ex_v`, and
/// discounts the remaining slacks — so feasibility and the tightness of
/// matched arcs survive every step. Errors with [`Error::Infeasible`]
/// when every unvisited slack is infinite (no perfect matching covers
/// `u` here).
pub fn match_vertex(
    u: usize,
    g: &impl CostView,
    duals: &mut DualState,
    pi: &mut Matching,
    scratch: &mut SearchScratch,
) -> Result<()> {
    let (n1, n2) = (g.left_count(), g.right_count());
    if pi.match_of_u[u].is_some() {
        return Ok(());
    }
    scratch.prepare_phase(n1, n2);
    loop {
        if find_path(u, g, duals, pi, scratch) {
            return Ok(());
        }
        let mut delta = Cost::MAX;
        for v in 0..n2 {
            if !scratch.vis_v[v] && scratch.slack_v[v] < delta {
                delta = scratch.slack_v[v];
            }
        }
        if delta == Cost::MAX {
            return Err(Error::Infeasible(format!("no augmenting path from u{u}")));
        }
        debug_assert!(delta > Cost::ZERO, "a tight arc escaped the search pass");
        for uu in 0..n1 {
            if scratch.vis_u[uu] {
                duals.ex_u[uu] -= delta;
            }
        }
        for v in 0..n2 {
            if scratch.vis_v[v] {
                duals.ex_v[v] += delta;
            } else if scratch.slack_v[v] != Cost::MAX {
                scratch.slack_v[v] -= delta;
            }
        }
    }
}

/// Fresh full solve: initialize labels, then match every u in ascending
/// order. Returns the matching together with the final dual state.
pub fn km_full(g: &impl CostView) -> Result<(Matching, DualState)> {
    let mut duals = init_duals(g)?;
    let mut pi = Matching::empty(g.left_count(), g.right_count());
    let mut scratch = SearchScratch::new();
    for u in 0..g.left_count() {
        match_vertex(u, g, &mut duals, &mut pi, &mut scratch)?;
    }
    Ok((pi, duals))
}
