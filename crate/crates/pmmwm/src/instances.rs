//! Instance generation, the benchmark grid, and file formats.
//!
//! Three generator families produce square bipartite graphs with
//! three-decimal weights in (1.000, 1000.000]:
//!
//! * **bps10/bps50/bps80** — complete graphs over a pool of all-distinct
//!   weights, partially pre-sorted: each v-vertex first takes the
//!   smallest weights left in the pool for a fixed fraction of its edges
//!   (10%, 50%, 80%), then draws the rest uniformly from what remains.
//!   The sorted prefix concentrates cheap edges on low u-indices, which
//!   makes matchings contested.
//! * **rand** — complete graphs with independent integer weights.
//! * **sparse30/sparse60/sparse90** — only a fraction of all pairs
//!   (30%, 60%, 90%) carries an edge, weights all distinct. A planted
//!   permutation guarantees a perfect matching and a final relabeling of
//!   V hides it.
//!
//! Everything is reproducible: a master seed is mixed with the family,
//! size, and replicate number into a per-instance stream seed, and all
//! draws come from one deterministic generator in a pinned order.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::problem::{BipartiteGraph, Solution, Weight};
use crate::{Error, Result};

/// Smallest and largest generated weight, in thousandths.
const WEIGHT_MIN_MILLI: i64 = 1_000;
const WEIGHT_MAX_MILLI: i64 = 1_000_000;
/// Number of representable weights on that grid.
const WEIGHT_GRID: usize = (WEIGHT_MAX_MILLI - WEIGHT_MIN_MILLI + 1) as usize;

/// The seven generator families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Bps10,
    Bps50,
    Bps80,
    Rand,
    Sparse30,
    Sparse60,
    Sparse90,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Bps10,
        Family::Bps50,
        Family::Bps80,
        Family::Rand,
        Family::Sparse30,
        Family::Sparse60,
        Family::Sparse90,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Bps10 => "bps10",
            Family::Bps50 => "bps50",
            Family::Bps80 => "bps80",
            Family::Rand => "rand",
            Family::Sparse30 => "sparse30",
            Family::Sparse60 => "sparse60",
            Family::Sparse90 => "sparse90",
        }
    }

    /// Stable per-family constant folded into seed derivation.
    fn index(self) -> u64 {
        match self {
            Family::Bps10 => 0,
            Family::Bps50 => 1,
            Family::Bps80 => 2,
            Family::Rand => 3,
            Family::Sparse30 => 4,
            Family::Sparse60 => 5,
            Family::Sparse90 => 6,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.tag() == s)
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unknown family '{s}'"),
            })
    }
}

/// What to generate: family, left size, and the reproducibility inputs.
#[derive(Clone, Copy, Debug)]
pub struct GenSpec {
    pub family: Family,
    pub n: usize,
    pub master_seed: u64,
    pub replicate: u32,
}

/// One step of the splitmix64 sequence: a cheap, well-mixed 64-bit
/// permutation used to derive stream seeds and per-arc tie values.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

impl GenSpec {
    /// Fold family, size, and replicate into the master seed so every
    /// instance draws from an independent, reproducible stream.
    pub fn derived_seed(&self) -> u64 {
        mix(
            mix(mix(self.master_seed, self.family.index()), self.n as u64),
            self.replicate as u64,
        )
    }
}

/// Draw `count` distinct weights from the grid, in random order. Errors
/// with [`Error::GridExhausted`] when the grid is too small.
fn sample_distinct_weights(rng: &mut Xoshiro256StarStar, count: usize) -> Result<Vec<Weight>> {
    if count > WEIGHT_GRID {
        return Err(Error::GridExhausted {
            needed: count,
            available: WEIGHT_GRID,
        });
    }
    Ok(rand::seq::index::sample(rng, WEIGHT_GRID, count)
        .into_iter()
        .map(|i| Weight::from_milli(WEIGHT_MIN_MILLI + i as i64))
        .collect())
}

/// Sorted weight pool supporting two removals: the current minimum and
/// a uniformly random survivor. A Fenwick tree over alive-counts answers
/// "k-th smallest remaining" in O(log n).
struct RankPool {
    items: Vec<Weight>,
    tree: Vec<usize>,
    alive: usize,
}

impl RankPool {
    fn new(mut items: Vec<Weight>) -> Self {
        items.sort_unstable();
        let n = items.len();
        let mut tree = vec![0usize; n + 1];
        for i in 1..=n {
            tree[i] += 1;
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Self {
            items,
            tree,
            alive: n,
        }
    }

    fn len(&self) -> usize {
        self.alive
    }

    /// Remove and return the item of the given rank among survivors
    /// (rank 0 = smallest).
    fn take_rank(&mut self, rank: usize) -> Weight {
        debug_assert!(rank < self.alive);
        let mut pos = 0;
        let mut skip = rank;
        let mut bit = self.items.len().next_power_of_two();
        while bit > 0 {
            let next = pos + bit;
            if next < self.tree.len() && self.tree[next] <= skip {
                skip -= self.tree[next];
                pos = next;
            }
            bit >>= 1;
        }
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
        self.alive -= 1;
        self.items[pos]
    }

    fn take_min(&mut self) -> Weight {
        self.take_rank(0)
    }
}

/// Complete n-by-n graph over `n*n` distinct weights; per v-vertex, the
/// first `n * tenths / 10` u-slots take the smallest weights remaining
/// in the pool (ascending), the rest draw uniformly at random.
fn gen_bps(n: usize, tenths: usize, rng: &mut Xoshiro256StarStar) -> Result<BipartiteGraph> {
    let mut pool = RankPool::new(sample_distinct_weights(rng, n * n)?);
    let prefix = n * tenths / 10;
    let mut edges = Vec::with_capacity(n * n);
    for v in 0..n {
        for u in 0..prefix {
            edges.push((u, v, pool.take_min()));
        }
        for u in prefix..n {
            let r = rng.gen_range(0..pool.len());
            edges.push((u, v, pool.take_rank(r)));
        }
    }
    BipartiteGraph::new(n, n, &edges)
}

/// Complete n-by-n graph with independent integer weights in [1, 1000].
fn gen_rand(n: usize, rng: &mut Xoshiro256StarStar) -> Result<BipartiteGraph> {
    let mut edges = Vec::with_capacity(n * n);
    for u in 0..n {
        for v in 0..n {
            edges.push((u, v, Weight::from_units(rng.gen_range(1..=1000))));
        }
    }
    BipartiteGraph::new(n, n, &edges)
}

/// Sparse n-by-n graph hitting `ceil(tenths/10 * n^2)` edges with
/// distinct weights. A planted diagonal guarantees a perfect matching;
/// the remaining edges are rejection-sampled over absent pairs, and a
/// random relabeling of V disguises the construction.
fn gen_sparse(n: usize, tenths: usize, rng: &mut Xoshiro256StarStar) -> Result<BipartiteGraph> {
    let target = (tenths * n * n).div_ceil(10);
    let target = target.max(n); // never below the planted matching
    let weights = sample_distinct_weights(rng, target)?;

    let mut present = vec![false; n * n];
    let mut pairs = Vec::with_capacity(target);
    for u in 0..n {
        present[u * n + u] = true;
        pairs.push((u, u));
    }
    while pairs.len() < target {
        let cell = rng.gen_range(0..n * n);
        if !present[cell] {
            present[cell] = true;
            pairs.push((cell / n, cell % n));
        }
    }

    let mut relabel: Vec<usize> = (0..n).collect();
    relabel.shuffle(rng);

    let edges: Vec<_> = pairs
        .into_iter()
        .zip(weights)
        .map(|((u, v), w)| (u, relabel[v], w))
        .collect();
    BipartiteGraph::new(n, n, &edges)
}

/// Generate the graph described by `spec`. Same spec, same graph —
/// bit for bit.
pub fn generate(spec: &GenSpec) -> Result<BipartiteGraph> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(spec.derived_seed());
    match spec.family {
        Family::Bps10 => gen_bps(spec.n, 1, &mut rng),
        Family::Bps50 => gen_bps(spec.n, 5, &mut rng),
        Family::Bps80 => gen_bps(spec.n, 8, &mut rng),
        Family::Rand => gen_rand(spec.n, &mut rng),
        Family::Sparse30 => gen_sparse(spec.n, 3, &mut rng),
        Family::Sparse60 => gen_sparse(spec.n, 6, &mut rng),
        Family::Sparse90 => gen_sparse(spec.n, 9, &mut rng),
    }
}

/// The (m, ubar) combinations benchmarked for a given n: part counts at
/// 2 and roughly 4%, 8%, and 12.5% of n, each with a tight, a relaxed,
/// and an unbounded capacity. Degenerate or duplicate combinations
/// collapse.
pub fn expand_grid(n: usize) -> Vec<(usize, usize)> {
    let mut ms: Vec<usize> = vec![2, n * 4 / 100, n * 8 / 100, n * 125 / 1000];
    ms.retain(|&m| m >= 1);
    ms.sort_unstable();
    ms.dedup();

    let mut combos = Vec::new();
    for m in ms {
        let tight = n.div_ceil(m);
        let mut ubars = vec![tight, tight + (n - tight) / 3, n];
        ubars.dedup();
        for ubar in ubars {
            if m * ubar >= n {
                combos.push((m, ubar));
            }
        }
    }
    combos
}

/// An instance as stored on disk: the graph plus its partition budget.
#[derive(Clone, Debug)]
pub struct Instance {
    pub graph: BipartiteGraph,
    pub m: usize,
    pub ubar: usize,
}

/// Canonical file name for a generated instance.
pub fn instance_filename(spec: &GenSpec, m: usize, ubar: usize) -> String {
    format!(
        "{}_n{}_m{}_u{}_s{}.pmm",
        spec.family.tag(),
        spec.n,
        m,
        ubar,
        spec.derived_seed()
    )
}

/// Write an instance: a header line `n1 n2 m ubar edge_count`, then one
/// `u v w` line per edge with 1-based endpoints.
pub fn write_instance(path: &Path, inst: &Instance) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let g = &inst.graph;
    writeln!(
        out,
        "{} {} {} {} {}",
        g.n1,
        g.n2,
        inst.m,
        inst.ubar,
        g.edge_count()
    )?;
    for (u, v, w) in g.edges() {
        writeln!(out, "{} {} {}", u + 1, v + 1, w)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_token<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} '{tok}'"),
    })
}

fn split_fields(text: &str, line: usize, expected: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != expected {
        return Err(Error::Parse {
            line,
            msg: format!("expected {expected} fields, found {}", fields.len()),
        });
    }
    Ok(fields)
}

/// Read an instance file written by [`write_instance`]. Syntax and
/// range problems come back as [`Error::Parse`] with the offending line;
/// a header with more u- than v-vertices is [`Error::Infeasible`].
pub fn read_instance(path: &Path) -> Result<Instance> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header?;
    let fields = split_fields(&header, 1, 5)?;
    let n1: usize = parse_token(fields[0], 1, "vertex count")?;
    let n2: usize = parse_token(fields[1], 1, "vertex count")?;
    let m: usize = parse_token(fields[2], 1, "part count")?;
    let ubar: usize = parse_token(fields[3], 1, "part capacity")?;
    let edge_count: usize = parse_token(fields[4], 1, "edge count")?;
    if n1 > n2 {
        return Err(Error::Infeasible(format!(
            "{n1} u-vertices cannot all be matched into {n2} v-vertices"
        )));
    }

    let mut edges = Vec::with_capacity(edge_count);
    let mut seen = HashSet::with_capacity(edge_count);
    for (idx, text) in lines {
        let lineno = idx + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let fields = split_fields(&text, lineno, 3)?;
        let u: usize = parse_token(fields[0], lineno, "u index")?;
        let v: usize = parse_token(fields[1], lineno, "v index")?;
        let w: Weight = parse_token(fields[2], lineno, "weight")?;
        if u == 0 || u > n1 || v == 0 || v > n2 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("edge ({u}, {v}) out of range for {n1}x{n2}"),
            });
        }
        if !(0..=WEIGHT_MAX_MILLI).contains(&w.milli()) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("weight {w} outside [0.000, 1000.000]"),
            });
        }
        if !seen.insert((u, v)) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("duplicate edge ({u}, {v})"),
            });
        }
        edges.push((u - 1, v - 1, w));
    }
    if edges.len() != edge_count {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "header declares {edge_count} edges, file has {}",
                edges.len()
            ),
        });
    }
    let graph = BipartiteGraph::new(n1, n2, &edges)?;
    Ok(Instance { graph, m, ubar })
}

/// Write a solution: objective on the first line, then the matched
/// v-index of every u (1-based, ascending u), then each u's part index
/// (1-based).
pub fn write_solution(path: &Path, s: &Solution) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", s.objective)?;
    let vs: Vec<String> = s
        .matching
        .match_of_u
        .iter()
        .map(|mv| match mv {
            Some(v) => (v + 1).to_string(),
            None => "0".to_string(), // never produced by the solver
        })
        .collect();
    writeln!(out, "{}", vs.join(" "))?;
    let parts: Vec<String> = s
        .partition
        .part_of_u
        .iter()
        .map(|k| (k + 1).to_string())
        .collect();
    writeln!(out, "{}", parts.join(" "))?;
    out.flush()?;
    Ok(())
}

/// Raw contents of a solution file, 0-based. Indices are only checked
/// for being positive; semantic validation against an instance is the
/// caller's job.
pub struct SolutionFile {
    pub objective: Weight,
    pub match_of_u: Vec<usize>,
    pub part_of_u: Vec<usize>,
}

pub fn read_solution(path: &Path, n1: usize) -> Result<SolutionFile> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let mut next_line = |line: usize| -> Result<String> {
        match lines.next() {
            Some(text) => Ok(text?),
            None => Err(Error::Parse {
                line,
                msg: "missing line".into(),
            }),
        }
    };

    let objective: Weight = parse_token(next_line(1)?.trim(), 1, "objective")?;

    let read_indices = |text: &str, line: usize, what: &str| -> Result<Vec<usize>> {
        let fields = split_fields(text, line, n1)?;
        fields
            .iter()
            .map(|tok| {
                let k: usize = parse_token(tok, line, what)?;
                if k == 0 {
                    return Err(Error::Parse {
                        line,
                        msg: format!("{what} must be positive"),
                    });
                }
                Ok(k - 1)
            })
            .collect()
    };
    let match_of_u = read_indices(&next_line(2)?, 2, "v index")?;
    let part_of_u = read_indices(&next_line(3)?, 3, "part index")?;

    Ok(SolutionFile {
        objective,
        match_of_u,
        part_of_u,
    })
}

/// Does a perfect matching of U into V exist? Plain augmenting-path
/// search on the unweighted graph; used by tests and diagnostics.
pub fn has_perfect_matching(g: &BipartiteGraph) -> bool {
    fn try_kuhn(
        u: usize,
        g: &BipartiteGraph,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        use crate::problem::Adjacency;
        for &(v, _) in g.neighbors(u) {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|prev| try_kuhn(prev, g, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; g.n2];
    (0..g.n1).all(|u| {
        let mut seen = vec![false; g.n2];
        try_kuhn(u, g, &mut seen, &mut owner)
    })
}
