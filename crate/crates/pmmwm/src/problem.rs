//! Problem model: exact milli-unit weights, bipartite instances,
//! matchings, capacity-bounded partitions, and the min-max objective.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use crate::{Error, Result};

/// An edge weight in exact milli-units: `12.345` is stored as `12345`.
///
/// Instance files carry decimals with at most three fraction digits, so
/// the scaling is lossless. All arithmetic stays in `i64`, which leaves
/// ample headroom for the `100 × c_max` penalty the solver applies
/// (at most 10^8 milli-units) and for sums over thousands of edges.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Weight(i64);

impl Weight {
    pub const ZERO: Weight = Weight(0);

    pub const fn from_milli(milli: i64) -> Self {
        Weight(milli)
    }

    /// Whole units: `from_units(7)` is `7.000`.
    pub const fn from_units(units: i64) -> Self {
        Weight(units * 1000)
    }

    pub const fn milli(self) -> i64 {
        self.0
    }

    pub fn checked_mul(self, factor: i64) -> Option<Weight> {
        self.0.checked_mul(factor).map(Weight)
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

impl AddAssign for Weight {
    fn add_assign(&mut self, rhs: Weight) {
        self.0 += rhs.0;
    }
}

impl Sub for Weight {
    type Output = Weight;
    fn sub(self, rhs: Weight) -> Weight {
        Weight(self.0 - rhs.0)
    }
}

impl SubAssign for Weight {
    fn sub_assign(&mut self, rhs: Weight) {
        self.0 -= rhs.0;
    }
}

impl Neg for Weight {
    type Output = Weight;
    fn neg(self) -> Weight {
        Weight(-self.0)
    }
}

impl Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        Weight(iter.map(|w| w.0).sum())
    }
}

/// Renders with exactly three fraction digits (`7` prints as `7.000`),
/// so formatting and parsing round-trip bit-exactly.
impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:03}", abs / 1000, abs % 1000)
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({self})")
    }
}

/// Accepts an optional sign, an integer part, and at most three fraction
/// digits (`12`, `12.3`, `12.345`).
impl FromStr for Weight {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, fr)) => (i, fr),
            None => (body, ""),
        };
        let all_digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || (body.contains('.') && !all_digits(frac_part)) {
            return Err(format!("malformed weight {s:?}"));
        }
        if frac_part.len() > 3 {
            return Err(format!("weight {s:?} has more than 3 fraction digits"));
        }
        let units: i64 = int_part
            .parse()
            .map_err(|_| format!("weight {s:?} out of range"))?;
        let mut frac = 0i64;
        for (i, b) in frac_part.bytes().enumerate() {
            frac += i64::from(b - b'0') * [100, 10, 1][i];
        }
        let milli = units
            .checked_mul(1000)
            .and_then(|m| m.checked_add(frac))
            .ok_or_else(|| format!("weight {s:?} out of range"))?;
        Ok(Weight(if neg { -milli } else { milli }))
    }
}

/// Read access to a weighted bipartite adjacency structure, implemented
/// by [`BipartiteGraph`] and by the solver's penalized working copies so
/// the matching stage can run on either.
pub trait Adjacency {
    fn left_count(&self) -> usize;
    fn right_count(&self) -> usize;
    /// Neighbors of `u` with their weights, sorted by v ascending.
    fn neighbors(&self, u: usize) -> &[(usize, Weight)];

    /// Weight of edge (u, v), if present.
    fn weight(&self, u: usize, v: usize) -> Option<Weight> {
        let adj = self.neighbors(u);
        adj.binary_search_by_key(&v, |&(x, _)| x)
            .ok()
            .map(|i| adj[i].1)
    }
}

/// Edge-weighted bipartite graph over `U = {0..n1}` and `V = {0..n2}`
/// with `n1 <= n2`. Adjacency is stored per u-vertex; a pair absent from
/// the list is a non-edge (sparse instances are mostly non-edges, so
/// there is no dense matrix anywhere).
///
/// Vertices are 0-indexed in memory; the file formats are 1-indexed.
#[derive(Clone, Debug)]
pub struct BipartiteGraph {
    pub n1: usize,
    pub n2: usize,
    adj: Vec<Vec<(usize, Weight)>>,
    c_max: Weight,
}

impl BipartiteGraph {
    /// Builds from an edge list, sorting each adjacency by v. Rejects
    /// `n1 > n2`, endpoints out of range, and duplicate (u, v) pairs.
    pub fn new(n1: usize, n2: usize, edges: &[(usize, usize, Weight)]) -> Result<Self> {
        if n1 > n2 {
            return Err(Error::Infeasible(format!("n1 = {n1} exceeds n2 = {n2}")));
        }
        let mut adj = vec![Vec::new(); n1];
        let mut c_max = Weight::ZERO;
        for &(u, v, w) in edges {
            if u >= n1 || v >= n2 {
                return Err(Error::Precondition(format!(
                    "edge endpoint (u{u}, v{v}) out of range for {n1}x{n2}"
                )));
            }
            adj[u].push((v, w));
            c_max = c_max.max(w);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable_by_key(|&(v, _)| v);
            if list.windows(2).any(|pair| pair[0].0 == pair[1].0) {
                return Err(Error::Precondition(format!("duplicate edge at u{u}")));
            }
        }
        Ok(BipartiteGraph { n1, n2, adj, c_max })
    }

    /// Heaviest edge weight in the graph (zero for an edgeless graph).
    pub fn c_max(&self) -> Weight {
        self.c_max
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// All edges in (u, then v) order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Weight)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().map(move |&(v, w)| (u, v, w)))
    }
}

impl Adjacency for BipartiteGraph {
    fn left_count(&self) -> usize {
        self.n1
    }
    fn right_count(&self) -> usize {
        self.n2
    }
    fn neighbors(&self, u: usize) -> &[(usize, Weight)] {
        &self.adj[u]
    }
}

/// Partial one-to-one assignment between U and V. Both directions are
/// stored so augmenting walks can cross matched edges from either side;
/// [`Matching::assign`] keeps the two arrays mutually consistent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub match_of_u: Vec<Option<usize>>,
    pub match_of_v: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(n1: usize, n2: usize) -> Self {
        Matching {
            match_of_u: vec![None; n1],
            match_of_v: vec![None; n2],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.match_of_u.iter().all(Option::is_none)
    }

    pub fn cardinality(&self) -> usize {
        self.match_of_u.iter().flatten().count()
    }

    pub fn is_perfect_on_u(&self) -> bool {
        self.match_of_u.iter().all(Option::is_some)
    }

    /// Links u and v, unlinking whatever either was matched to before.
    pub fn assign(&mut self, u: usize, v: usize) {
        if let Some(old_v) = self.match_of_u[u].replace(v) {
            if old_v != v && self.match_of_v[old_v] == Some(u) {
                self.match_of_v[old_v] = None;
            }
        }
        if let Some(old_u) = self.match_of_v[v].replace(u) {
            if old_u != u && self.match_of_u[old_u] == Some(v) {
                self.match_of_u[old_u] = None;
            }
        }
    }

    /// Removes u's matched edge, returning its v endpoint.
    pub fn unassign_u(&mut self, u: usize) -> Option<usize> {
        let v = self.match_of_u[u].take()?;
        self.match_of_v[v] = None;
        Some(v)
    }

    /// Sum of matched edge weights under `g`; requires every u matched
    /// along an existing edge.
    pub fn total_weight(&self, g: &impl Adjacency) -> Result<Weight> {
        let mut total = Weight::ZERO;
        for u in 0..self.match_of_u.len() {
            let v = self.match_of_u[u].ok_or(Error::InfeasibleMatching(u))?;
            total += g.weight(u, v).ok_or(Error::EdgeNotFound { u, v })?;
        }
        Ok(total)
    }

    /// True when the two direction arrays agree pointwise.
    pub fn is_consistent(&self) -> bool {
        let forward = self
            .match_of_u
            .iter()
            .enumerate()
            .all(|(u, &mv)| mv.is_none_or(|v| self.match_of_v[v] == Some(u)));
        let backward = self
            .match_of_v
            .iter()
            .enumerate()
            .all(|(v, &mu)| mu.is_none_or(|u| self.match_of_u[u] == Some(v)));
        forward && backward
    }
}

/// Assignment of every u-vertex to one of `m` parts, each meant to hold
/// at most `ubar` vertices. The bound is enforced by the constructors in
/// the partitioning module and checked by [`validate_solution`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub part_of_u: Vec<usize>,
    pub m: usize,
    pub ubar: usize,
}

impl Partition {
    pub fn new(part_of_u: Vec<usize>, m: usize, ubar: usize) -> Self {
        Partition { part_of_u, m, ubar }
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.m];
        for &k in &self.part_of_u {
            sizes[k] += 1;
        }
        sizes
    }
}

/// A matching, a partition of U, and the objective value they achieve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub matching: Matching,
    pub partition: Partition,
    pub objective: Weight,
}

/// Per-part sums of matched edge weights under `g`.
///
/// Errors with [`Error::InfeasibleMatching`] on an unmatched u and
/// [`Error::EdgeNotFound`] when a matched pair is not an edge of `g`.
pub fn partition_weights(g: &impl Adjacency, pi: &Matching, p: &Partition) -> Result<Vec<Weight>> {
    let mut loads = vec![Weight::ZERO; p.m];
    for u in 0..pi.match_of_u.len() {
        let v = pi.match_of_u[u].ok_or(Error::InfeasibleMatching(u))?;
        let w = g.weight(u, v).ok_or(Error::EdgeNotFound { u, v })?;
        loads[p.part_of_u[u]] += w;
    }
    Ok(loads)
}

/// The min-max objective: the heaviest part's total matched weight.
pub fn evaluate_objective(g: &impl Adjacency, pi: &Matching, p: &Partition) -> Result<Weight> {
    partition_weights(g, pi, p)?
        .into_iter()
        .max()
        .ok_or_else(|| Error::Precondition("partition has m = 0 parts".into()))
}

/// First violated constraint found by [`validate_solution`], in check
/// order. Indices in the rendered text are 1-based to match the file
/// formats.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// constraint-1: every u-vertex is matched exactly once.
    Constraint1 { u: usize },
    /// constraint-2: every v-vertex is matched at most once.
    Constraint2 { v: usize },
    /// A matched pair that is not an edge of the instance.
    EdgeNotFound { u: usize, v: usize },
    /// constraint-3: every u-vertex sits in exactly one valid part.
    Constraint3 { u: usize },
    /// constraint-4: no part exceeds the capacity ubar.
    Constraint4 { part: usize, size: usize },
    /// The stored objective does not match recomputation.
    ObjectiveMismatch { stored: Weight, computed: Weight },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Constraint1 { u } => {
                write!(f, "constraint-1: vertex u{} is not matched", u + 1)
            }
            Violation::Constraint2 { v } => {
                write!(
                    f,
                    "constraint-2: vertex v{} is matched more than once",
                    v + 1
                )
            }
            Violation::EdgeNotFound { u, v } => {
                write!(f, "edge-not-found: (u{}, v{}) is not an edge", u + 1, v + 1)
            }
            Violation::Constraint3 { u } => {
                write!(f, "constraint-3: vertex u{} has no valid part", u + 1)
            }
            Violation::Constraint4 { part, size } => {
                write!(f, "constraint-4: part {} holds {size} vertices", part + 1)
            }
            Violation::ObjectiveMismatch { stored, computed } => {
                write!(
                    f,
                    "objective-mismatch: stored {stored}, recomputed {computed}"
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationReport {
    Pass,
    Fail(Violation),
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        matches!(self, ValidationReport::Pass)
    }
}

/// Checks a solution against its instance: perfect matching on U, no
/// v-side clashes, edge existence, part validity, capacity, and finally
/// that the stored objective matches recomputation. Reports the first
/// violation instead of erroring so callers can print it.
pub fn validate_solution(g: &BipartiteGraph, s: &Solution) -> ValidationReport {
    use ValidationReport::Fail;

    for u in 0..g.n1 {
        if s.matching.match_of_u.get(u).copied().flatten().is_none() {
            return Fail(Violation::Constraint1 { u });
        }
    }
    let mut v_seen = vec![false; g.n2];
    for u in 0..g.n1 {
        let v = s.matching.match_of_u[u].unwrap();
        if v >= g.n2 || v_seen[v] {
            return Fail(Violation::Constraint2 { v: v.min(g.n2) });
        }
        v_seen[v] = true;
    }
    for u in 0..g.n1 {
        let v = s.matching.match_of_u[u].unwrap();
        if g.weight(u, v).is_none() {
            return Fail(Violation::EdgeNotFound { u, v });
        }
    }
    for u in 0..g.n1 {
        if s.partition
            .part_of_u
            .get(u)
            .is_none_or(|&k| k >= s.partition.m)
        {
            return Fail(Violation::Constraint3 { u });
        }
    }
    for (part, size) in s.partition.part_sizes().into_iter().enumerate() {
        if size > s.partition.ubar {
            return Fail(Violation::Constraint4 { part, size });
        }
    }
    let computed = evaluate_objective(g, &s.matching, &s.partition)
        .expect("matching and edges were just checked");
    if computed != s.objective {
        return Fail(Violation::ObjectiveMismatch {
            stored: s.objective,
            computed,
        });
    }
    ValidationReport::Pass
}
