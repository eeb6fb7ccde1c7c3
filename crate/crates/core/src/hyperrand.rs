//! Finite approximations of random ordered partite hypergraphs.
//!
//! Vertices are global ids of a [`PartiteHypergraph`]: parts are ordered
//! `P_0 < … < P_{n-1}` and vertices by index inside each part. A vertex list
//! `W` is compared with another list `W′` position by position.

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmodel::IndexStructure;
use crate::setsys::ProductUniverse;
use crate::zar::{HypergraphFile, PartiteHypergraph};

/// A sampled hypergraph together with its verified extension level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionHypergraph {
    pub graph: PartiteHypergraph,
    pub t: usize,
    pub seed: u64,
    /// Index of the retry that produced the graph.
    pub attempt: u64,
}

impl ExtensionHypergraph {
    pub fn to_file(&self) -> HypergraphFile {
        HypergraphFile { t: Some(self.t), seed: Some(self.seed), ..self.graph.to_file() }
    }
}

/// Tuples of the product of all parts except `j`, with a placeholder at coordinate `j`.
fn co_tuples(h: &PartiteHypergraph, j: usize) -> Vec<Vec<usize>> {
    let ranges: Vec<Vec<usize>> =
        h.part_sizes().iter().enumerate().map(|(i, &s)| if i == j { vec![0] } else { (0..s).collect() }).collect();
    ranges.into_iter().multi_cartesian_product().collect()
}

/// Whether, for every part `j`, the neighborhoods `{ā : R(b, ā)}` of `b ∈ P_j` realize every
/// pattern on every set of at most `t` tuples from `∏_{i≠j} P_i`.
pub fn has_extension_level(h: &PartiteHypergraph, t: usize) -> bool {
    (0..h.n()).all(|j| {
        let others = co_tuples(h, j);
        let size = t.min(others.len());
        if size == 0 {
            return true;
        }
        // Neighborhood of each b as a bit vector over `others`.
        let hoods: Vec<Vec<bool>> = (0..h.part_sizes()[j])
            .map(|b| {
                others
                    .iter()
                    .map(|a| {
                        let mut e = a.clone();
                        e[j] = b;
                        h.has_edge(&e)
                    })
                    .collect()
            })
            .collect();
        (0..others.len()).combinations(size).all(|set| {
            let mut seen = vec![false; 1 << size];
            for hood in &hoods {
                let p = set.iter().enumerate().fold(0, |acc, (k, &a)| acc | usize::from(hood[a]) << k);
                seen[p] = true;
            }
            seen.iter().all(|&s| s)
        })
    })
}

/// Largest `t ≤ cap` with [`has_extension_level`].
pub fn extension_level(h: &PartiteHypergraph, cap: usize) -> usize {
    (1..=cap).take_while(|&t| has_extension_level(h, t)).last().unwrap_or(0)
}

/// Samples each cell independently with probability 1/2 until the `t`-extension check passes.
///
/// Attempt `r` uses stream `r` of a ChaCha8 generator seeded from `seed`, so results depend only on
/// `(n, part_size, seed)` and the attempt index.
pub fn gen_extension_hypergraph(
    n: usize,
    part_size: usize,
    t: usize,
    seed: u64,
    retries: u64,
) -> Result<ExtensionHypergraph> {
    let universe = ProductUniverse::uniform(n, part_size)?;
    let mut best = 0;
    for attempt in 0..retries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let mut graph = PartiteHypergraph::empty(universe.clone());
        for cell in 0..universe.total() {
            if rng.gen_bool(0.5) {
                let tuple = universe.tuple(cell);
                graph.set_edge(&tuple, true);
            }
        }
        let level = extension_level(&graph, t);
        if level >= t {
            return Ok(ExtensionHypergraph { graph, t, seed, attempt });
        }
        best = best.max(level);
    }
    Err(Error::Construction(format!(
        "no {t}-extension hypergraph after {retries} attempts; best extension level {best}"
    )))
}

fn part_of(h: &PartiteHypergraph, v: usize) -> Result<usize> {
    h.locate(v).map(|(p, _)| p).ok_or_else(|| Error::input(format!("vertex {v} not in the hypergraph")))
}

fn same_order_type(w: &[usize], w2: &[usize]) -> bool {
    w.len() == w2.len() && (0..w.len()).all(|p| (0..w.len()).all(|q| w[p].cmp(&w[q]) == w2[p].cmp(&w2[q])))
}

/// Choices that turn `g` into a cross tuple by replacing a nonempty set of coordinates with vertices of `v` in the same part.
fn mixed_tuples(h: &PartiteHypergraph, v: &[usize]) -> Vec<Vec<Option<usize>>> {
    let options: Vec<Vec<Option<usize>>> = (0..h.n())
        .map(|i| {
            std::iter::once(None)
                .chain(v.iter().copied().filter(|&x| h.locate(x).map(|(p, _)| p) == Some(i)).map(Some))
                .collect()
        })
        .collect();
    options.into_iter().multi_cartesian_product().filter(|choice| choice.iter().any(Option::is_some)).collect()
}

fn fill(g: &[usize], choice: &[Option<usize>]) -> Vec<usize> {
    g.iter().zip(choice).map(|(&gi, c)| c.unwrap_or(gi)).collect()
}

fn validate_tail(h: &PartiteHypergraph, w: &[usize], v: &[usize]) -> Result<Vec<usize>> {
    let n = h.n();
    if w.len() != n + v.len() || w[n..] != *v {
        return Err(Error::input(format!("{w:?} is not an edge tuple followed by {v:?}")));
    }
    for (i, &g) in w[..n].iter().enumerate() {
        if part_of(h, g)? != i {
            return Err(Error::input(format!("vertex {g} is not in part {i}")));
        }
    }
    for &x in v {
        part_of(h, x)?;
    }
    Ok(w[..n].to_vec())
}

/// `W = g ++ V` is V-adjacent to `W′ = g′ ++ V`: same order type, every mixed edge with `V`
/// agrees, and exactly the full edge differs.
pub fn is_v_adjacent(h: &PartiteHypergraph, w: &[usize], w_prime: &[usize], v: &[usize]) -> Result<bool> {
    let g = validate_tail(h, w, v)?;
    let g2 = validate_tail(h, w_prime, v)?;
    if !same_order_type(w, w_prime) {
        return Ok(false);
    }
    if h.has_edge_global(&g) == h.has_edge_global(&g2) {
        return Ok(false);
    }
    Ok(mixed_tuples(h, v).iter().all(|c| h.has_edge_global(&fill(&g, c)) == h.has_edge_global(&fill(&g2, c))))
}

/// Relation between `g ++ V` and `h ++ V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dichotomy {
    /// Isomorphic in order, parts and edges.
    Isomorphic,
    VAdjacent,
    Neither,
}

pub fn dichotomy(h: &PartiteHypergraph, g: &[usize], g2: &[usize], v: &[usize]) -> Result<Dichotomy> {
    let w: Vec<usize> = g.iter().chain(v).copied().collect();
    let w2: Vec<usize> = g2.iter().chain(v).copied().collect();
    validate_tail(h, &w, v)?;
    validate_tail(h, &w2, v)?;
    if !same_order_type(&w, &w2)
        || !mixed_tuples(h, v).iter().all(|c| h.has_edge_global(&fill(g, c)) == h.has_edge_global(&fill(g2, c)))
    {
        return Ok(Dichotomy::Neither);
    }
    Ok(if h.has_edge_global(g) == h.has_edge_global(g2) { Dichotomy::Isomorphic } else { Dichotomy::VAdjacent })
}

/// One move of an adjacency walk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WalkStep {
    /// The whole vertex list after the move, in the positions of the starting list.
    pub w: Vec<usize>,
    /// Shared tail: the vertices of the previous list outside the flipped edge.
    pub v: Vec<usize>,
    /// The edge tuple before the move.
    pub flipped_edge: Vec<usize>,
    /// The same tuple after the move.
    pub new_edge: Vec<usize>,
}

impl WalkStep {
    /// `(flipped_edge ++ v, new_edge ++ v)`, the pair checked by [`is_v_adjacent`].
    pub fn adjacency_pair(&self) -> (Vec<usize>, Vec<usize>) {
        (
            self.flipped_edge.iter().chain(&self.v).copied().collect(),
            self.new_edge.iter().chain(&self.v).copied().collect(),
        )
    }
}

/// Position tuples of `w` with one position per part, in lexicographic order.
fn position_tuples(parts: &[usize], n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| (0..parts.len()).filter(|&p| parts[p] == i).collect::<Vec<_>>()).multi_cartesian_product().collect()
}

fn pick(w: &[usize], pos: &[usize]) -> Vec<usize> {
    pos.iter().map(|&p| w[p]).collect()
}

/// Edge-tuples of positions on which `w` and `w′` disagree.
pub fn discrepancies(h: &PartiteHypergraph, w: &[usize], w_prime: &[usize]) -> Result<Vec<Vec<usize>>> {
    let parts: Vec<usize> = w.iter().map(|&x| part_of(h, x)).collect::<Result<_>>()?;
    let parts2: Vec<usize> = w_prime.iter().map(|&x| part_of(h, x)).collect::<Result<_>>()?;
    if parts != parts2 || !same_order_type(w, w_prime) {
        return Err(Error::input("vertex lists differ in order or parts"));
    }
    Ok(position_tuples(&parts, h.n())
        .into_iter()
        .filter(|p| h.has_edge_global(&pick(w, p)) != h.has_edge_global(&pick(w_prime, p)))
        .collect())
}

/// Walk from `w` to a list isomorphic to `w′` including edges, fixing one discrepancy per step by
/// moving a single vertex inside its order gap.
pub fn adjacency_walk(h: &PartiteHypergraph, w: &[usize], w_prime: &[usize]) -> Result<Vec<WalkStep>> {
    if w.iter().collect::<BTreeSet<_>>().len() != w.len() {
        return Err(Error::input("vertex list has repeated vertices"));
    }
    let parts: Vec<usize> = w.iter().map(|&x| part_of(h, x)).collect::<Result<_>>()?;
    let all_tuples = position_tuples(&parts, h.n());
    let mut cur = w.to_vec();
    let mut steps = Vec::new();
    loop {
        let todo = discrepancies(h, &cur, w_prime)?;
        let Some(p) = todo.first() else { break };
        let mut moved = None;
        for i in 0..h.n() {
            let q = p[i];
            let u = cur[q];
            let lo = (0..cur.len()).filter(|&r| r != q && parts[r] == i && cur[r] < u).map(|r| cur[r]).max();
            let hi = (0..cur.len()).filter(|&r| r != q && parts[r] == i && cur[r] > u).map(|r| cur[r]).min();
            let start = lo.map_or(h.offset(i), |l| l + 1);
            let end = hi.unwrap_or(h.offset(i) + h.part_sizes()[i]);
            let others: Vec<&Vec<usize>> = all_tuples.iter().filter(|r| r[i] == q && *r != p).collect();
            let target = !h.has_edge_global(&pick(&cur, p));
            let found = (start..end).filter(|&c| c != u).find(|&c| {
                let mut next = cur.clone();
                next[q] = c;
                h.has_edge_global(&pick(&next, p)) == target
                    && others.iter().all(|r| h.has_edge_global(&pick(&next, r)) == h.has_edge_global(&pick(&cur, r)))
            });
            if let Some(c) = found {
                moved = Some((q, c));
                break;
            }
        }
        let (q, c) = moved
            .ok_or_else(|| Error::Construction(format!("no vertex move flips edge at positions {p:?} of {cur:?}")))?;
        let v: Vec<usize> = (0..cur.len()).filter(|r| !p.contains(r)).map(|r| cur[r]).collect();
        let flipped_edge = pick(&cur, p);
        cur[q] = c;
        steps.push(WalkStep { w: cur.clone(), v, flipped_edge, new_edge: pick(&cur, p) });
    }
    Ok(steps)
}

/// Selected parts `X_0, …, X_{n-1}` around an edge `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSubgraph {
    /// Global vertex ids per part, increasing, each containing `g_i`.
    pub parts: Vec<Vec<usize>>,
    pub t: usize,
}

/// Chooses `s` vertices per part, including `g`, such that every cross tuple `h` makes `h ++ V`
/// either isomorphic or V-adjacent to `g ++ V`, and the induced subgraph has extension level `t`.
pub fn random_subgraph(
    h: &PartiteHypergraph,
    v: &[usize],
    g: &[usize],
    s: usize,
    t: usize,
    node_budget: u64,
) -> Result<RandomSubgraph> {
    let w: Vec<usize> = g.iter().chain(v).copied().collect();
    validate_tail(h, &w, v)?;
    if !h.has_edge_global(g) {
        return Err(Error::input(format!("{g:?} is not an edge")));
    }
    if g.iter().any(|x| v.contains(x)) {
        return Err(Error::input("edge tuple must be disjoint from V"));
    }
    if s == 0 {
        return Err(Error::input("part size must be positive"));
    }
    // Candidates for part i share g_i's order gap relative to V.
    let candidates: Vec<Vec<usize>> = (0..h.n())
        .map(|i| {
            let in_part: Vec<usize> = v.iter().copied().filter(|&x| h.locate(x).unwrap().0 == i).collect();
            let lo = in_part.iter().copied().filter(|&x| x < g[i]).max().map_or(h.offset(i), |l| l + 1);
            let hi = in_part.iter().copied().filter(|&x| x > g[i]).min().unwrap_or(h.offset(i) + h.part_sizes()[i]);
            (lo..hi).filter(|&c| c != g[i]).collect()
        })
        .collect();
    let mut search = SubgraphSearch {
        h,
        v,
        g,
        s,
        t,
        candidates,
        chosen: g.iter().map(|&x| vec![x]).collect(),
        nodes: 0,
        budget: node_budget,
        last_failure: None,
    };
    if search.extend(0, 0)? {
        let mut parts = search.chosen;
        parts.iter_mut().for_each(|p| p.sort_unstable());
        return Ok(RandomSubgraph { parts, t });
    }
    Err(Error::Construction(match search.last_failure {
        Some(c) => format!("selection stuck; last rejected candidate {} conflicts on tuple {:?}", c.0, c.1),
        None => "selection stuck: not enough candidates in the order gaps".to_string(),
    }))
}

struct SubgraphSearch<'a> {
    h: &'a PartiteHypergraph,
    v: &'a [usize],
    g: &'a [usize],
    s: usize,
    t: usize,
    candidates: Vec<Vec<usize>>,
    chosen: Vec<Vec<usize>>,
    nodes: u64,
    budget: u64,
    last_failure: Option<(usize, Vec<usize>)>,
}

impl SubgraphSearch<'_> {
    /// Whether candidate `c` for part `i` agrees with `g` on every mixed tuple through it whose
    /// other coordinates are already chosen or in `V`, using at least one `V` vertex.
    fn conflict(&self, i: usize, c: usize) -> Option<Vec<usize>> {
        let n = self.h.n();
        let options: Vec<Vec<(usize, bool)>> = (0..n)
            .map(|j| {
                if j == i {
                    return vec![(c, false)];
                }
                let vs = self.v.iter().copied().filter(|&x| self.h.locate(x).unwrap().0 == j).map(|x| (x, true));
                let xs = if j < i { self.chosen[j].clone() } else { vec![self.g[j]] };
                xs.into_iter().map(|x| (x, false)).chain(vs).collect()
            })
            .collect();
        options.into_iter().multi_cartesian_product().find_map(|tuple| {
            if !tuple.iter().any(|&(_, from_v)| from_v) {
                return None;
            }
            let actual: Vec<usize> = tuple.iter().map(|&(x, _)| x).collect();
            let reference: Vec<usize> =
                tuple.iter().enumerate().map(|(j, &(x, from_v))| if from_v { x } else { self.g[j] }).collect();
            (self.h.has_edge_global(&actual) != self.h.has_edge_global(&reference)).then_some(actual)
        })
    }

    fn extend(&mut self, part: usize, from: usize) -> Result<bool> {
        if part == self.h.n() {
            return Ok(self.t == 0 || {
                let local: Vec<Vec<usize>> = self
                    .chosen
                    .iter()
                    .enumerate()
                    .map(|(j, xs)| {
                        let mut l: Vec<usize> = xs.iter().map(|&x| x - self.h.offset(j)).collect();
                        l.sort_unstable();
                        l
                    })
                    .collect();
                has_extension_level(&self.h.induced(&local)?, self.t)
            });
        }
        if self.chosen[part].len() == self.s {
            return self.extend(part + 1, 0);
        }
        for k in from..self.candidates[part].len() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::Budget(format!("subgraph selection exceeded {} nodes", self.budget)));
            }
            let c = self.candidates[part][k];
            if let Some(t) = self.conflict(part, c) {
                self.last_failure = Some((c, t));
                continue;
            }
            self.chosen[part].push(c);
            if self.extend(part, k + 1)? {
                return Ok(true);
            }
            self.chosen[part].pop();
        }
        Ok(false)
    }
}

/// Exhaustively checks the dichotomy for every cross tuple of `parts`; returns the first violating tuple.
pub fn check_dichotomy(
    h: &PartiteHypergraph,
    v: &[usize],
    g: &[usize],
    parts: &[Vec<usize>],
) -> Result<Option<Vec<usize>>> {
    for tuple in parts.iter().map(|p| p.iter().copied()).multi_cartesian_product() {
        if dichotomy(h, g, &tuple, v)? == Dichotomy::Neither {
            return Ok(Some(tuple));
        }
    }
    Ok(None)
}

/// An ordered uniform hypergraph on `0..size`; edges are increasing vertex lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderedHypergraph {
    pub size: usize,
    pub arity: usize,
    pub edges: BTreeSet<Vec<usize>>,
}

impl OrderedHypergraph {
    pub fn has_edge(&self, vertices: &[usize]) -> bool {
        let mut v = vertices.to_vec();
        v.sort_unstable();
        self.edges.contains(&v)
    }
}

impl IndexStructure for OrderedHypergraph {
    fn size(&self) -> usize {
        self.size
    }

    fn part_of(&self, _v: usize) -> usize {
        0
    }

    fn edge_arity(&self) -> usize {
        self.arity
    }

    fn has_edge(&self, vertices: &[usize]) -> bool {
        OrderedHypergraph::has_edge(self, vertices)
    }
}

/// `G*`: `{q_0 < … < q_{k-1}}` is an edge iff `R(g^0_{q_0}, …, g^{k-1}_{q_{k-1}})`, for parts of equal size.
pub fn diagonal_hypergraph(h: &PartiteHypergraph) -> Result<OrderedHypergraph> {
    let s = h.part_sizes()[0];
    if h.part_sizes().iter().any(|&p| p != s) {
        return Err(Error::input(format!("parts must have equal sizes, got {:?}", h.part_sizes())));
    }
    let edges = (0..s).combinations(h.n()).filter(|q| h.has_edge(q)).collect();
    Ok(OrderedHypergraph { size: s, arity: h.n(), edges })
}
