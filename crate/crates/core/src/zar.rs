//! Zarankiewicz numbers for partite hypergraphs.
//!
//! `z_n(m, d)` is the least `z` such that every `n`-partite `n`-uniform
//! hypergraph with `m` vertices per part and at least `z` edges contains the
//! complete `K^{(n)}(d)`. It is computed here as one more than the largest
//! `K^{(n)}(d)`-free edge count, found by branch and bound.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmodel::{FiniteStructure, Relation};
use crate::scalar::{real, Real};
use crate::setsys::{ProductUniverse, SetSystem};

/// A finite ordered `n`-partite `n`-uniform hypergraph.
///
/// Edges are tuples `(v_0, …, v_{n-1})` with `v_i` an index into part `i`.
/// The order is implicit: `P_0 < … < P_{n-1}` and integer order inside each
/// part. Global vertex ids follow that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartiteHypergraph {
    universe: ProductUniverse,
    cells: FixedBitSet,
}

impl PartiteHypergraph {
    pub fn empty(universe: ProductUniverse) -> Self {
        let cells = FixedBitSet::with_capacity(universe.total());
        PartiteHypergraph { universe, cells }
    }

    pub fn complete(universe: ProductUniverse) -> Self {
        let mut h = Self::empty(universe);
        h.cells.insert_range(..);
        h
    }

    pub fn new(part_sizes: Vec<usize>, edges: &[Vec<usize>]) -> Result<Self> {
        let mut h = Self::empty(ProductUniverse::new(part_sizes)?);
        for e in edges {
            let i = h.universe.checked_index(e)?;
            h.cells.insert(i);
        }
        Ok(h)
    }

    pub(crate) fn from_cells(universe: ProductUniverse, cells: FixedBitSet) -> Self {
        debug_assert_eq!(cells.len(), universe.total());
        PartiteHypergraph { universe, cells }
    }

    /// Number of parts, which is also the edge arity.
    pub fn n(&self) -> usize {
        self.universe.arity()
    }

    pub fn part_sizes(&self) -> &[usize] {
        self.universe.part_sizes()
    }

    pub fn universe(&self) -> &ProductUniverse {
        &self.universe
    }

    /// Edge set as a bit vector over the row-major tuple index.
    pub fn cells(&self) -> &FixedBitSet {
        &self.cells
    }

    pub fn has_edge(&self, tuple: &[usize]) -> bool {
        self.cells.contains(self.universe.index(tuple))
    }

    pub fn set_edge(&mut self, tuple: &[usize], present: bool) {
        let i = self.universe.index(tuple);
        self.cells.set(i, present);
    }

    pub fn toggle_edge(&mut self, tuple: &[usize]) {
        let i = self.universe.index(tuple);
        self.cells.toggle(i);
    }

    pub fn edge_count(&self) -> usize {
        self.cells.count_ones(..)
    }

    pub fn edges(&self) -> Vec<Vec<usize>> {
        self.cells.ones().map(|i| self.universe.tuple(i)).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.part_sizes().iter().sum()
    }

    /// Global id of the first vertex of `part`.
    pub fn offset(&self, part: usize) -> usize {
        self.part_sizes()[..part].iter().sum()
    }

    /// Global id of vertex `index` of `part`.
    pub fn vertex(&self, part: usize, index: usize) -> usize {
        self.offset(part) + index
    }

    /// `(part, index)` of a global vertex id.
    pub fn locate(&self, mut v: usize) -> Option<(usize, usize)> {
        for (p, &s) in self.part_sizes().iter().enumerate() {
            if v < s {
                return Some((p, v));
            }
            v -= s;
        }
        None
    }

    /// Edge test on global vertex ids given in any order.
    ///
    /// The relation is symmetric: a set of `n` vertices is an edge iff it has
    /// one vertex per part and the part-ordered tuple is an edge.
    pub fn has_edge_global(&self, vertices: &[usize]) -> bool {
        if vertices.len() != self.n() {
            return false;
        }
        let mut tuple = vec![usize::MAX; self.n()];
        for &v in vertices {
            match self.locate(v) {
                Some((p, i)) if tuple[p] == usize::MAX => tuple[p] = i,
                _ => return false,
            }
        }
        self.has_edge(&tuple)
    }

    /// The sub-hypergraph induced on the given index lists, one per part.
    pub fn induced(&self, parts: &[Vec<usize>]) -> Result<PartiteHypergraph> {
        if parts.len() != self.n() {
            return Err(Error::input("one index list per part required"));
        }
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        let mut out = PartiteHypergraph::empty(ProductUniverse::new(sizes)?);
        for i in 0..out.universe.total() {
            let local = out.universe.tuple(i);
            let global: Vec<usize> = local.iter().zip(parts).map(|(&j, p)| p[j]).collect();
            if self.universe.checked_index(&global).is_ok() && self.has_edge(&global) {
                out.cells.insert(i);
            }
        }
        Ok(out)
    }

    pub fn to_file(&self) -> HypergraphFile {
        HypergraphFile { n: self.n(), part_sizes: self.part_sizes().to_vec(), edges: self.edges(), t: None, seed: None }
    }
}

/// JSON form `{"n":…, "part_sizes":[…], "edges":[[…],…]}` with optional generator fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypergraphFile {
    pub n: usize,
    pub part_sizes: Vec<usize>,
    pub edges: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl HypergraphFile {
    pub fn to_hypergraph(&self) -> Result<PartiteHypergraph> {
        if self.n != self.part_sizes.len() {
            return Err(Error::input(format!("n = {} but {} part sizes given", self.n, self.part_sizes.len())));
        }
        PartiteHypergraph::new(self.part_sizes.clone(), &self.edges)
    }
}

/// Finds `d`-subsets `S_0, …, S_{n-1}` with `S_0 × … × S_{n-1}` inside the edge set.
pub fn find_complete_partite(h: &PartiteHypergraph, d: usize) -> Option<Vec<Vec<usize>>> {
    if d == 0 {
        return Some(vec![Vec::new(); h.n()]);
    }
    if h.part_sizes().iter().any(|&s| s < d) {
        return None;
    }
    let mut chosen = Vec::with_capacity(h.n());
    find_level(h.cells(), h.part_sizes(), d, &mut chosen).then_some(chosen)
}

/// True iff `h` contains `K^{(n)}(d)`. A `d` larger than some part is never contained.
pub fn contains_complete_partite(h: &PartiteHypergraph, d: usize) -> bool {
    find_complete_partite(h, d).is_some()
}

/// `common` is a set over the product of `sizes`; find a `d`-box inside it.
fn find_level(common: &FixedBitSet, sizes: &[usize], d: usize, chosen: &mut Vec<Vec<usize>>) -> bool {
    let Some((&size, rest_sizes)) = sizes.split_first() else {
        return common.contains(0);
    };
    let rest: usize = rest_sizes.iter().product();
    let need = d.pow(rest_sizes.len() as u32);
    let slices: Vec<(usize, FixedBitSet)> = (0..size)
        .filter_map(|v| {
            let mut s = FixedBitSet::with_capacity(rest);
            s.extend(common.ones().filter(|&i| i / rest == v).map(|i| i % rest));
            (s.count_ones(..) >= need).then_some((v, s))
        })
        .collect();
    if slices.len() < d {
        return false;
    }
    let mut picked = Vec::with_capacity(d);
    choose_slices(&slices, 0, None, d, need, rest_sizes, &mut picked, chosen)
}

#[allow(clippy::too_many_arguments)]
fn choose_slices(
    slices: &[(usize, FixedBitSet)],
    start: usize,
    acc: Option<&FixedBitSet>,
    d: usize,
    need: usize,
    rest_sizes: &[usize],
    picked: &mut Vec<usize>,
    chosen: &mut Vec<Vec<usize>>,
) -> bool {
    if picked.len() == d {
        let acc = acc.expect("d ≥ 1");
        chosen.push(picked.clone());
        if find_level(acc, rest_sizes, d, chosen) {
            return true;
        }
        chosen.pop();
        return false;
    }
    for i in start..slices.len() {
        if slices.len() - i < d - picked.len() {
            break;
        }
        let (v, s) = &slices[i];
        let next = match acc {
            Some(a) => {
                let mut n = a.clone();
                n.intersect_with(s);
                n
            }
            None => s.clone(),
        };
        if next.count_ones(..) < need {
            continue;
        }
        picked.push(*v);
        if choose_slices(slices, i + 1, Some(&next), d, need, rest_sizes, picked, chosen) {
            return true;
        }
        picked.pop();
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZarStatus {
    Exact,
    /// The node budget ran out; `z` is only a lower bound.
    LowerBoundOnly,
}

impl std::fmt::Display for ZarStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ZarStatus::Exact => "exact",
            ZarStatus::LowerBoundOnly => "lower_bound_only",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZarResult {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub z: usize,
    /// Largest `K^{(n)}(d)`-free edge count found, `z - 1`.
    pub extremal_edge_count: usize,
    pub extremal_witness: PartiteHypergraph,
    pub status: ZarStatus,
    pub nodes: u64,
}

impl ZarResult {
    pub fn is_exact(&self) -> bool {
        self.status == ZarStatus::Exact
    }
}

/// Default node budget for [`zarankiewicz`].
pub const DEFAULT_NODE_BUDGET: u64 = 200_000_000;

/// Computes `z_n(m, d)` by maximizing the `K^{(n)}(d)`-free edge count.
///
/// Part-0 slices are kept sorted by (degree, lexicographic) non-increasing,
/// and for `n = 2` the first row is fixed to a prefix of columns. Both are
/// sound because relabeling vertices within a part preserves edge count and
/// `K`-freeness. When the budget runs out the best graph found is returned
/// with [`ZarStatus::LowerBoundOnly`].
pub fn zarankiewicz(n: usize, m: usize, d: usize, node_budget: u64) -> Result<ZarResult> {
    if n == 0 || m == 0 || d == 0 {
        return Err(Error::input("n, m and d must be at least 1"));
    }
    let slice_len = m
        .checked_pow(n as u32 - 1)
        .filter(|&l| l <= 64)
        .ok_or_else(|| Error::input(format!("exact search needs m^(n-1) ≤ 64 (n={n}, m={m})")))?;
    let mut search = Search {
        n,
        m,
        d,
        slice_len,
        rows: vec![0u64; m],
        count: 0,
        best: None,
        best_rows: vec![0u64; m],
        nodes: 0,
        budget: node_budget,
        exhausted: false,
    };
    search.dfs(0);
    let best = search.best.unwrap_or(0);
    let universe = ProductUniverse::uniform(n, m)?;
    let mut cells = FixedBitSet::with_capacity(universe.total());
    for (r, &row) in search.best_rows.iter().enumerate() {
        for pos in 0..slice_len {
            if row >> pos & 1 == 1 {
                cells.insert(r * slice_len + pos);
            }
        }
    }
    let witness = PartiteHypergraph::from_cells(universe, cells);
    if witness.edge_count() != best || contains_complete_partite(&witness, d) {
        return Err(Error::Internal(format!("Zarankiewicz witness for ({n},{m},{d}) is invalid")));
    }
    Ok(ZarResult {
        n,
        m,
        d,
        z: best + 1,
        extremal_edge_count: best,
        extremal_witness: witness,
        status: if search.exhausted { ZarStatus::LowerBoundOnly } else { ZarStatus::Exact },
        nodes: search.nodes,
    })
}

struct Search {
    n: usize,
    m: usize,
    d: usize,
    slice_len: usize,
    rows: Vec<u64>,
    count: usize,
    best: Option<usize>,
    best_rows: Vec<u64>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

fn row_key(row: u64) -> (u32, u64) {
    (row.count_ones(), row.reverse_bits())
}

impl Search {
    fn dfs(&mut self, cell: usize) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let l = self.slice_len;
        let (r, pos) = (cell / l, cell % l);
        // A row just completed: it must not exceed its predecessor.
        if pos == 0 && r >= 2 && row_key(self.rows[r - 1]) > row_key(self.rows[r - 2]) {
            return;
        }
        if r == self.m {
            if self.m >= 2 && row_key(self.rows[self.m - 1]) > row_key(self.rows[self.m - 2]) {
                return;
            }
            if self.best.is_none_or(|b| self.count > b) {
                self.best = Some(self.count);
                self.best_rows.clone_from(&self.rows);
            }
            return;
        }
        let cap = if r == 0 { l } else { self.rows[r - 1].count_ones() as usize };
        let deg = self.rows[r].count_ones() as usize;
        if deg > cap {
            return;
        }
        let bound = self.count + (l - pos).min(cap - deg) + (self.m - r - 1) * cap;
        if self.best.is_some_and(|b| bound <= b) {
            return;
        }
        let prefix_only = self.n == 2 && r == 0 && pos > 0 && self.rows[0] >> (pos - 1) & 1 == 0;
        if !prefix_only && deg < cap {
            self.rows[r] |= 1 << pos;
            if !self.completes_k(r, pos) {
                self.count += 1;
                self.dfs(cell + 1);
                self.count -= 1;
            }
            self.rows[r] &= !(1 << pos);
        }
        self.dfs(cell + 1);
    }

    /// Does the edge at `(r, pos)` lie in a `K^{(n)}(d)` of the current rows?
    fn completes_k(&self, r: usize, pos: usize) -> bool {
        let d = self.d;
        if d > self.m {
            return false;
        }
        let need = d.pow(self.n as u32 - 1);
        let candidates: Vec<u64> =
            (0..self.m).filter(|&v| v != r && self.rows[v] >> pos & 1 == 1).map(|v| self.rows[v]).collect();
        if candidates.len() + 1 < d {
            return false;
        }
        let target = digits(pos, self.m, self.n - 1);
        pick_rows(&candidates, 0, self.rows[r], d - 1, need, &|common| through(common, self.n - 1, self.m, d, &target))
    }
}

/// Base-`m` digits of `index`, most significant first.
fn digits(mut index: usize, m: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = index % m;
        index /= m;
    }
    out
}

/// Choose `left` more rows from `cands[start..]`, intersecting into `acc`.
fn pick_rows(cands: &[u64], start: usize, acc: u64, left: usize, need: usize, leaf: &dyn Fn(u64) -> bool) -> bool {
    if (acc.count_ones() as usize) < need {
        return false;
    }
    if left == 0 {
        return leaf(acc);
    }
    (start..cands.len())
        .any(|i| cands.len() - i >= left && pick_rows(cands, i + 1, acc & cands[i], left - 1, need, leaf))
}

/// Does the arity-`k` set `common` (over `m^k` cells) contain a `d`-box through `target`?
fn through(common: u64, k: usize, m: usize, d: usize, target: &[usize]) -> bool {
    if k == 0 {
        return common & 1 == 1;
    }
    let sub = m.pow(k as u32 - 1);
    let mask = if sub == 64 { u64::MAX } else { (1u64 << sub) - 1 };
    let slice = |v: usize| (common >> (v * sub)) & mask;
    let rest = target[1..].iter().fold(0, |acc, &t| acc * m + t);
    let own = slice(target[0]);
    if own >> rest & 1 == 0 {
        return false;
    }
    let cands: Vec<u64> = (0..m).filter(|&v| v != target[0]).map(slice).filter(|s| s >> rest & 1 == 1).collect();
    let need = d.pow(k as u32 - 1);
    pick_rows(&cands, 0, own, d - 1, need, &|c| through(c, k - 1, m, d, &target[1..]))
}

/// Memoizes exact Zarankiewicz values by `(n, m, d)`.
#[derive(Debug, Default)]
pub struct ZarCache {
    budget: u64,
    table: HashMap<(usize, usize, usize), ZarResult>,
}

impl ZarCache {
    pub fn new(budget: u64) -> Self {
        ZarCache { budget, table: HashMap::new() }
    }

    pub fn get(&mut self, n: usize, m: usize, d: usize) -> Result<&ZarResult> {
        if !self.table.contains_key(&(n, m, d)) {
            let r = zarankiewicz(n, m, d, self.budget)?;
            self.table.insert((n, m, d), r);
        }
        Ok(&self.table[&(n, m, d)])
    }

    /// Exact `z_n(m, d)`, or a budget error.
    pub fn exact(&mut self, n: usize, m: usize, d: usize) -> Result<usize> {
        let r = self.get(n, m, d)?;
        if r.is_exact() {
            Ok(r.z)
        } else {
            Err(Error::Budget(format!("z_{n}({m},{d}) not settled within the node budget")))
        }
    }
}

/// Asymptotic upper bounds on `ex_n` and `z_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErdosBound<F> {
    pub epsilon: F,
    /// `m^{n-ε}`
    pub ex_bound: F,
    /// `(nm)^{n-ε}`
    pub z_bound: F,
    /// The `n = 1` instance, where `ε = 1` and the formula carries no content.
    pub degenerate: bool,
}

/// `ε = 1/d^{n-1}`, `ex ≤ m^{n-ε}`, `z ≤ (nm)^{n-ε}`. Advisory: valid only beyond an unknown threshold.
pub fn erdos_bound<F: Real>(n: usize, m: usize, d: usize) -> ErdosBound<F> {
    let epsilon = F::one() / real::<F>(d as f64).powi(n as i32 - 1);
    let exponent = real::<F>(n as f64) - epsilon;
    ErdosBound {
        epsilon,
        ex_bound: real::<F>(m as f64).powf(exponent),
        z_bound: real::<F>((n * m) as f64).powf(exponent),
        degenerate: n == 1,
    }
}

/// `m^{3/2}(1 - m^{-1/6})`, the asymptotic lower bound for `z_2(m, 2)`.
pub fn z22_lower_bound<F: Real>(m: usize) -> F {
    let mf = real::<F>(m as f64);
    let three_halves = real::<F>(1.5);
    let sixth = real::<F>(1.0 / 6.0);
    mf.powf(three_halves) * (F::one() - mf.powf(-sixth))
}

/// One block `E^m` of an extremal family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremalBlock {
    pub m: usize,
    /// First index of the block in every part.
    pub offset: usize,
    pub z: usize,
    /// Edges in block-local coordinates.
    pub edges: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremalFamily {
    pub n: usize,
    pub d: usize,
    pub system: SetSystem,
    pub blocks: Vec<ExtremalBlock>,
}

/// Largest witness edge count whose power set we are willing to materialize.
pub const MAX_EXTREMAL_EDGES: usize = 20;

/// The union of the power sets of extremal `K^{(n)}(d+1)`-free hypergraphs `E^m`,
/// one per requested `m`, on disjoint blocks of every part.
///
/// The resulting system has `VC_n = d` and `π(m) ≥ 2^{z_n(m,d+1)-1}`.
pub fn build_extremal_family(n: usize, d: usize, m_range: &[usize], node_budget: u64) -> Result<ExtremalFamily> {
    if m_range.is_empty() {
        return Err(Error::input("empty m range"));
    }
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    let mut blocks = Vec::with_capacity(m_range.len());
    let mut offset = 0;
    for &m in m_range {
        if m < d || m == 0 {
            return Err(Error::input(format!("block size {m} is below d = {d}")));
        }
        let r = zarankiewicz(n, m, d + 1, node_budget)?;
        if !r.is_exact() {
            return Err(Error::Budget(format!(
                "z_{n}({m},{}) is not exact; the construction needs a true extremal witness",
                d + 1
            )));
        }
        if r.extremal_edge_count > MAX_EXTREMAL_EDGES {
            return Err(Error::Budget(format!(
                "block m = {m} has {} edges; 2^{} members is too many",
                r.extremal_edge_count, r.extremal_edge_count
            )));
        }
        blocks.push(ExtremalBlock { m, offset, z: r.z, edges: r.extremal_witness.edges() });
        offset += m;
    }
    let universe = ProductUniverse::uniform(n, offset)?;
    let total = universe.total();
    let mut members = Vec::new();
    for b in &blocks {
        let cells: Vec<usize> =
            b.edges.iter().map(|e| universe.index(&e.iter().map(|&v| v + b.offset).collect::<Vec<_>>())).collect();
        for mask in 0u64..1 << cells.len() {
            let mut s = FixedBitSet::with_capacity(total);
            s.extend(cells.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, &c)| c));
            members.push(s);
        }
    }
    let system = SetSystem::new(universe, members)?;
    Ok(ExtremalFamily { n, d, system, blocks })
}

/// The ternary structure realizing an extremal family with `n = 2`, `d = 1`.
#[derive(Debug, Clone)]
pub struct CounterexampleStructure {
    pub structure: FiniteStructure,
    pub family: ExtremalFamily,
    /// Domain element `b_C` for each member of the family, in member order.
    pub member_elements: Vec<usize>,
    /// Domain index of the first element of `X_0`.
    pub x_offset: usize,
}

/// Domain `Y ∪ X_0` with `R(b_C, a_0, a_1) ⟺ (a_0, a_1) ∈ C`.
///
/// `Y` has one element per member of the family and comes first; both
/// parameter coordinates range over the same copy of `X_0`.
pub fn build_counterexample_structure(m_range: &[usize], node_budget: u64) -> Result<CounterexampleStructure> {
    let family = build_extremal_family(2, 1, m_range, node_budget)?;
    let system = &family.system;
    let y = system.len();
    let x = system.universe().part_sizes()[0];
    let mut tuples = Vec::new();
    for (b, member) in system.members().iter().enumerate() {
        for cell in member.ones() {
            let t = system.universe().tuple(cell);
            tuples.push(vec![b, y + t[0], y + t[1]]);
        }
    }
    let mut structure = FiniteStructure::new(y + x)?;
    structure.add_relation("R", Relation::new(3, tuples)?)?;
    Ok(CounterexampleStructure { structure, member_elements: (0..y).collect(), x_offset: y, family })
}
