//! Finite structural Ramsey checks on ordered structures.
//!
//! Every structure carries the linear order of its element indices, so
//! structures are rigid: an isomorphism type is a structure relabeled to
//! `0..size`, and copies of `A` in `B` are exactly the increasing embeddings.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmodel::RelationFile;

/// Name of the edge relation in structure files.
pub const EDGE: &str = "E";

/// A finite ordered structure with optional part predicates and an optional symmetric edge relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelStructure {
    size: usize,
    parts: Option<(Vec<usize>, usize)>,
    edges: Option<(usize, BTreeSet<Vec<usize>>)>,
}

impl RelStructure {
    /// `size` points in their natural order.
    pub fn ordered_set(size: usize) -> Self {
        RelStructure { size, parts: None, edges: None }
    }

    /// Attaches part labels; labels must be nondecreasing and below `part_count`.
    pub fn with_parts(mut self, labels: Vec<usize>, part_count: usize) -> Result<Self> {
        if labels.len() != self.size {
            return Err(Error::input(format!("{} part labels for {} elements", labels.len(), self.size)));
        }
        if labels.iter().any(|&l| l >= part_count) || labels.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::input("parts must be labelled 0..count and ordered P_0 < P_1 < …"));
        }
        self.parts = Some((labels, part_count));
        Ok(self)
    }

    /// Parts of the given sizes laid out consecutively.
    pub fn with_part_sizes(self, sizes: &[usize]) -> Result<Self> {
        let labels = sizes.iter().enumerate().flat_map(|(p, &s)| std::iter::repeat_n(p, s)).collect();
        self.with_parts(labels, sizes.len())
    }

    /// Attaches a symmetric edge relation of the given arity; edges are stored as sorted vertex sets.
    pub fn with_edges(mut self, arity: usize, edges: &[Vec<usize>]) -> Result<Self> {
        if arity == 0 {
            return Err(Error::input("edge arity must be positive"));
        }
        let mut set = BTreeSet::new();
        for e in edges {
            let mut e = e.clone();
            e.sort_unstable();
            if e.len() != arity || e.windows(2).any(|w| w[0] == w[1]) || e.iter().any(|&v| v >= self.size) {
                return Err(Error::input(format!("{e:?} is not an edge of {arity} distinct elements")));
            }
            set.insert(e);
        }
        self.edges = Some((arity, set));
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn part_count(&self) -> Option<usize> {
        self.parts.as_ref().map(|(_, c)| *c)
    }

    pub fn part_of(&self, v: usize) -> Option<usize> {
        self.parts.as_ref().map(|(l, _)| l[v])
    }

    /// Elements of part `p` in increasing order (all elements when there are no parts).
    pub fn part(&self, p: usize) -> Vec<usize> {
        (0..self.size).filter(|&v| self.part_of(v).map_or(p == 0, |q| q == p)).collect()
    }

    pub fn edge_arity(&self) -> Option<usize> {
        self.edges.as_ref().map(|(a, _)| *a)
    }

    pub fn edges(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.edges.iter().flat_map(|(_, e)| e.iter())
    }

    pub fn edge_count(&self) -> usize {
        self.edges.as_ref().map_or(0, |(_, e)| e.len())
    }

    /// Whether the listed vertices form an edge, in any order.
    pub fn has_edge(&self, vertices: &[usize]) -> bool {
        match &self.edges {
            Some((a, e)) if *a == vertices.len() => {
                let mut v = vertices.to_vec();
                v.sort_unstable();
                e.contains(&v)
            }
            _ => false,
        }
    }

    fn same_signature(&self, other: &RelStructure) -> bool {
        self.part_count() == other.part_count() && self.edge_arity() == other.edge_arity()
    }

    /// The substructure on `elements` (increasing), relabeled to `0..elements.len()`.
    pub fn induce(&self, elements: &[usize]) -> RelStructure {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        let pos: HashMap<usize, usize> = elements.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        RelStructure {
            size: elements.len(),
            parts: self.parts.as_ref().map(|(l, c)| (elements.iter().map(|&v| l[v]).collect(), *c)),
            edges: self.edges.as_ref().map(|(a, es)| {
                let kept = es
                    .iter()
                    .filter_map(|e| e.iter().map(|v| pos.get(v).copied()).collect::<Option<Vec<usize>>>())
                    .collect();
                (*a, kept)
            }),
        }
    }

    /// Forgets the part predicates, keeping order and edges.
    pub fn without_parts(&self) -> RelStructure {
        RelStructure { parts: None, ..self.clone() }
    }

    pub fn to_file(&self) -> RelStructureFile {
        let mut relations = BTreeMap::new();
        if let Some((arity, es)) = &self.edges {
            relations.insert(EDGE.to_string(), RelationFile { arity: *arity, tuples: es.iter().cloned().collect() });
        }
        RelStructureFile {
            domain: self.size,
            relations,
            order: None,
            parts: self.parts.as_ref().map(|(l, _)| l.clone()),
            part_count: self.parts.as_ref().map(|(_, c)| *c),
        }
    }
}

/// JSON form: the structure schema plus `"order"` (least to greatest) and `"parts"` (label per element).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelStructureFile {
    pub domain: usize,
    #[serde(default)]
    pub relations: BTreeMap<String, RelationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<usize>>,
    /// Defaults to one more than the largest label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part_count: Option<usize>,
}

impl RelStructureFile {
    /// Relabels elements along `order` and validates parts and the edge relation.
    pub fn to_structure(&self) -> Result<RelStructure> {
        let n = self.domain;
        let rank: Vec<usize> = match &self.order {
            None => (0..n).collect(),
            Some(o) => {
                let mut rank = vec![usize::MAX; n];
                for (i, &v) in o.iter().enumerate() {
                    if v >= n || rank[v] != usize::MAX {
                        return Err(Error::input("order must list every element exactly once"));
                    }
                    rank[v] = i;
                }
                if o.len() != n {
                    return Err(Error::input("order must list every element exactly once"));
                }
                rank
            }
        };
        let mut s = RelStructure::ordered_set(n);
        if let Some(labels) = &self.parts {
            if labels.len() != n {
                return Err(Error::input(format!("{} part labels for {n} elements", labels.len())));
            }
            let mut relabeled = vec![0; n];
            for (v, &l) in labels.iter().enumerate() {
                relabeled[rank[v]] = l;
            }
            let count = self.part_count.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
            s = s.with_parts(relabeled, count)?;
        }
        for (name, r) in &self.relations {
            if name != EDGE {
                return Err(Error::input(format!("unsupported relation `{name}`; only `{EDGE}` is allowed")));
            }
            if r.tuples.iter().flatten().any(|&v| v >= n) {
                return Err(Error::input("edge outside the domain"));
            }
            let edges: Vec<Vec<usize>> = r.tuples.iter().map(|t| t.iter().map(|&v| rank[v]).collect()).collect();
            s = s.with_edges(r.arity, &edges)?;
        }
        Ok(s)
    }
}

/// Embeddings of `source` into `target`, one per copy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingSet {
    pub source: RelStructure,
    pub target: RelStructure,
    /// Each embedding lists the image of `0..source.size()`, increasing.
    pub embeddings: Vec<Vec<usize>>,
}

impl EmbeddingSet {
    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }
}

/// Whether element `i` of `a` may go to `v` given the images of `0..i`: same part, and every
/// edge tuple ending at `i` agrees.
fn extends(b: &RelStructure, a: &RelStructure, image: &[usize], i: usize, v: usize) -> bool {
    if let (Some((la, _)), Some((lb, _))) = (&a.parts, &b.parts) {
        if la[i] != lb[v] {
            return false;
        }
    }
    match &a.edges {
        Some((arity, ea)) if *arity <= i + 1 => (0..i).combinations(arity - 1).all(|mut t| {
            let mapped: Vec<usize> = t.iter().map(|&j| image[j]).chain([v]).collect();
            t.push(i);
            ea.contains(&t) == b.has_edge(&mapped)
        }),
        _ => true,
    }
}

fn collect_copies(b: &RelStructure, a: &RelStructure, image: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let i = image.len();
    if i == a.size {
        out.push(image.clone());
        return;
    }
    let start = image.last().map_or(0, |&v| v + 1);
    for v in start..=b.size - (a.size - i) {
        if extends(b, a, image, i, v) {
            image.push(v);
            collect_copies(b, a, image, out);
            image.pop();
        }
    }
}

/// All copies of `a` inside `b`, in lexicographic order of their element sets.
pub fn copies(b: &RelStructure, a: &RelStructure) -> EmbeddingSet {
    let mut embeddings = Vec::new();
    if a.same_signature(b) && a.size <= b.size {
        collect_copies(b, a, &mut Vec::with_capacity(a.size), &mut embeddings);
    }
    EmbeddingSet { source: a.clone(), target: b.clone(), embeddings }
}

/// `C → (B)^A_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringProblem {
    pub a: RelStructure,
    pub b: RelStructure,
    pub c: RelStructure,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrowOutcome {
    pub holds: bool,
    /// Colorings examined in enumeration order: all of them when the arrow holds, up to the first bad one otherwise.
    pub colorings_checked: u128,
    pub a_copies: usize,
    pub b_copies: usize,
}

impl ArrowOutcome {
    /// CSV row `(|A|,|B|,|C|,k,result,colorings_checked)`.
    pub fn csv_row(&self, p: &ColoringProblem) -> [String; 6] {
        [
            p.a.size().to_string(),
            p.b.size().to_string(),
            p.c.size().to_string(),
            p.k.to_string(),
            self.holds.to_string(),
            self.colorings_checked.to_string(),
        ]
    }
}

/// Default work budget for [`arrow_check`]: colorings for the flat scan, counter steps for the pruned scan.
pub const DEFAULT_COLORING_BUDGET: u64 = 1 << 24;

/// Colorings are mixed-radix counters over the `A`-copies of `C`, copy 0 being the most significant digit.
struct ArrowSearch {
    n: usize,
    k: usize,
    /// `B`-copies grouped by the position of their last `A`-copy, as lists of `A`-copy positions.
    complete_at: Vec<Vec<Vec<usize>>>,
}

impl ArrowSearch {
    fn mono_at(&self, pos: usize, colors: &[usize]) -> bool {
        let c = colors[pos];
        self.complete_at[pos].iter().any(|b| b.iter().all(|&a| colors[a] == c))
    }

    fn block(&self, pos: usize) -> u128 {
        (self.k as u128).saturating_pow((self.n - pos - 1) as u32)
    }

    fn bad(&self, code: u64) -> bool {
        let k = self.k as u64;
        let mut colors = vec![0; self.n];
        let mut c = code;
        for i in (0..self.n).rev() {
            colors[i] = (c % k) as usize;
            c /= k;
        }
        !(0..self.n).any(|pos| self.mono_at(pos, &colors))
    }

    /// Depth-first walk of the counter below `pos`; a prefix that already completes a monochromatic
    /// `B`-copy settles its whole block. Returns whether a bad coloring was reached, with `covered`
    /// counting the colorings settled before it.
    fn explore(&self, pos: usize, colors: &mut [usize], covered: &mut u128, steps: &Steps) -> Result<bool> {
        if pos == self.n {
            return Ok(true);
        }
        for c in 0..self.k {
            steps.tick()?;
            colors[pos] = c;
            if self.mono_at(pos, colors) {
                *covered = covered.saturating_add(self.block(pos));
            } else if self.explore(pos + 1, colors, covered, steps)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

struct Steps {
    used: std::sync::atomic::AtomicU64,
    budget: u64,
}

impl Steps {
    fn tick(&self) -> Result<()> {
        let used = self.used.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        if used > self.budget {
            return Err(Error::Budget(format!("arrow search exceeded {} counter steps", self.budget)));
        }
        Ok(())
    }
}

/// Exhaustively checks that every `k`-coloring of the `A`-copies in `C` has a monochromatic `B`-copy.
///
/// With at most `budget` colorings they are scanned one by one. Otherwise the counter is walked
/// digit by digit, skipping every block whose leading digits already force a monochromatic
/// `B`-copy, and the check refuses with a budget error once `budget` steps are spent. Both scans
/// report the same outcome.
pub fn arrow_check(p: &ColoringProblem, budget: u64) -> Result<ArrowOutcome> {
    scan(p, budget, false)
}

fn scan(p: &ColoringProblem, budget: u64, force_pruned: bool) -> Result<ArrowOutcome> {
    if p.k == 0 {
        return Err(Error::input("color count must be at least 1"));
    }
    let a_in_c = copies(&p.c, &p.a);
    let b_in_c = copies(&p.c, &p.b);
    let a_in_b = copies(&p.b, &p.a);
    let n = a_in_c.len();
    let outcome =
        |holds, checked| ArrowOutcome { holds, colorings_checked: checked, a_copies: n, b_copies: b_in_c.len() };
    if b_in_c.is_empty() {
        return Ok(outcome(false, 0));
    }
    if p.k == 1 || n == 0 || a_in_b.is_empty() {
        return Ok(outcome(true, 1));
    }
    let index: HashMap<&[usize], usize> =
        a_in_c.embeddings.iter().enumerate().map(|(i, e)| (e.as_slice(), i)).collect();
    let mut complete_at = vec![Vec::new(); n];
    for eb in &b_in_c.embeddings {
        let mut members: Vec<usize> = a_in_b
            .embeddings
            .iter()
            .map(|ea| index[ea.iter().map(|&i| eb[i]).collect::<Vec<_>>().as_slice()])
            .collect();
        members.sort_unstable();
        complete_at[*members.last().expect("A embeds in B")].push(members);
    }
    let search = ArrowSearch { n, k: p.k, complete_at };
    let flat =
        u32::try_from(n).ok().and_then(|e| (p.k as u64).checked_pow(e)).filter(|&t| t <= budget && !force_pruned);
    if let Some(total) = flat {
        const CHUNK: u64 = 1 << 12;
        let first_bad = (0..total.div_ceil(CHUNK))
            .into_par_iter()
            .filter_map(|chunk| (chunk * CHUNK..((chunk + 1) * CHUNK).min(total)).find(|&c| search.bad(c)))
            .min();
        return Ok(match first_bad {
            Some(c) => outcome(false, c as u128 + 1),
            None => outcome(true, total as u128),
        });
    }
    // Leading digits fan out across threads; every prefix is walked so the step count is deterministic.
    let lead = (1..=n).take_while(|&l| p.k.pow(l as u32) <= 256).last().unwrap_or(1);
    let steps = Steps { used: Default::default(), budget };
    let prefixes: Vec<Vec<usize>> = (0..lead).map(|_| 0..p.k).multi_cartesian_product().collect();
    let results = prefixes
        .par_iter()
        .map(|prefix| -> Result<(u128, bool)> {
            let mut colors = vec![0; n];
            colors[..lead].copy_from_slice(prefix);
            steps.tick()?;
            if (0..lead).any(|pos| search.mono_at(pos, &colors)) {
                return Ok((search.block(lead - 1), false));
            }
            let mut covered = 0;
            let bad = search.explore(lead, &mut colors, &mut covered, &steps)?;
            Ok((covered, bad))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut covered = 0u128;
    for (c, bad) in results {
        covered = covered.saturating_add(c);
        if bad {
            return Ok(outcome(false, covered + 1));
        }
    }
    Ok(outcome(true, covered))
}

/// Closure of `class` under substructures, one representative per isomorphism type, sorted.
///
/// The empty structure is included whenever the class is nonempty.
pub fn hereditary_closure(class: &[RelStructure]) -> Result<Vec<RelStructure>> {
    let mut out = BTreeSet::new();
    for s in class {
        if s.size > 24 {
            return Err(Error::Budget(format!("structure of size {} has too many substructures", s.size)));
        }
        for mask in 0u32..1 << s.size {
            let elems: Vec<usize> = (0..s.size).filter(|&i| mask >> i & 1 == 1).collect();
            out.insert(s.induce(&elems));
        }
    }
    let mut v: Vec<RelStructure> = out.into_iter().collect();
    v.sort_by(|x, y| x.size.cmp(&y.size).then_with(|| x.cmp(y)));
    Ok(v)
}

/// `A_0 ⊕ A_1`: `A_0` below `A_1`, parts concatenated (a structure without parts counts as one part).
pub fn direct_sum(a0: &RelStructure, a1: &RelStructure) -> Result<RelStructure> {
    if a0.edge_arity().is_some() && a1.edge_arity().is_some() && a0.edge_arity() != a1.edge_arity() {
        return Err(Error::input("direct sum of structures with different edge arities"));
    }
    let labels = |s: &RelStructure| s.parts.clone().unwrap_or_else(|| (vec![0; s.size], 1));
    let ((l0, c0), (l1, c1)) = (labels(a0), labels(a1));
    let all: Vec<usize> = l0.into_iter().chain(l1.into_iter().map(|l| l + c0)).collect();
    let s = RelStructure::ordered_set(a0.size + a1.size).with_parts(all, c0 + c1)?;
    match a0.edge_arity().or(a1.edge_arity()) {
        None => Ok(s),
        Some(arity) => {
            let edges: Vec<Vec<usize>> =
                a0.edges().cloned().chain(a1.edges().map(|e| e.iter().map(|v| v + a0.size).collect())).collect();
            s.with_edges(arity, &edges)
        }
    }
}

/// Produces some `C` with `C → (B)^A_k` for a fixed class.
pub trait ArrowWitnessOracle {
    fn witness(&self, a: &RelStructure, b: &RelStructure, k: usize) -> Result<RelStructure>;
}

/// Witnesses for finite linear orders: pigeonhole, small known Ramsey numbers, then search.
#[derive(Debug, Clone, Copy)]
pub struct OrderedSetOracle {
    /// Coloring budget for each fallback search step.
    pub budget: u64,
    /// Largest `|C|` the fallback search tries.
    pub max_size: usize,
}

impl Default for OrderedSetOracle {
    fn default() -> Self {
        OrderedSetOracle { budget: DEFAULT_COLORING_BUDGET, max_size: 12 }
    }
}

/// Known `R_k(b; a)` for subsets of size `a`, monochromatic `b`-sets, `k` colors.
fn known_ramsey(a: usize, b: usize, k: usize) -> Option<usize> {
    match (a, b, k) {
        (2, 3, 2) => Some(6),
        (2, 4, 2) => Some(18),
        (2, 3, 3) => Some(17),
        _ => None,
    }
}

impl ArrowWitnessOracle for OrderedSetOracle {
    fn witness(&self, a: &RelStructure, b: &RelStructure, k: usize) -> Result<RelStructure> {
        if a.parts.is_some() || a.edges.is_some() || b.parts.is_some() || b.edges.is_some() {
            return Err(Error::input("ordered-set oracle only handles plain linear orders"));
        }
        if k == 0 {
            return Err(Error::input("color count must be at least 1"));
        }
        let (sa, sb) = (a.size, b.size);
        let size = if sa >= sb || sa == 0 || k == 1 {
            sb
        } else if sa == 1 {
            k * (sb - 1) + 1
        } else if let Some(r) = known_ramsey(sa, sb, k) {
            r
        } else {
            let mut found = None;
            for c in sb..=self.max_size {
                let p = ColoringProblem { a: a.clone(), b: b.clone(), c: RelStructure::ordered_set(c), k };
                if arrow_check(&p, self.budget)?.holds {
                    found = Some(c);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Construction(format!("no witness up to size {} for ({sb})^{sa}_{k}", self.max_size))
            })?
        };
        Ok(RelStructure::ordered_set(size))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectSumWitness {
    /// `C_0^m ⊕ C_1`.
    pub structure: RelStructure,
    pub c1: RelStructure,
    /// `C_0^0, …, C_0^m`.
    pub chain: Vec<RelStructure>,
    /// Number of copies of `A_1` in `C_1`.
    pub m: usize,
}

/// Builds `C_0^m ⊕ C_1` with `C_1 → (B_1)^{A_1}_k`, `C_0^0 → (B_0)^{A_0}_k` and `C_0^{i+1} → (C_0^i)^{A_0}_k`.
#[allow(clippy::too_many_arguments)]
pub fn build_direct_sum_witness(
    a0: &RelStructure,
    b0: &RelStructure,
    a1: &RelStructure,
    b1: &RelStructure,
    k: usize,
    oracle0: &dyn ArrowWitnessOracle,
    oracle1: &dyn ArrowWitnessOracle,
    max_chain: usize,
) -> Result<DirectSumWitness> {
    let c1 = oracle1.witness(a1, b1, k)?;
    let m = copies(&c1, a1).len();
    if m > max_chain {
        return Err(Error::Budget(format!("chain of length {m} exceeds {max_chain}")));
    }
    let mut chain = vec![oracle0.witness(a0, b0, k)?];
    for _ in 0..m {
        let next = oracle0.witness(a0, chain.last().unwrap(), k)?;
        chain.push(next);
    }
    let structure = direct_sum(chain.last().unwrap(), &c1)?;
    Ok(DirectSumWitness { structure, c1, chain, m })
}

/// `X̃_0`: parts `w^0, …, w^{n-1}` of `m` vertices each, with
/// `(w^0_{i_0}, …, w^{n-1}_{i_{n-1}})` an edge iff `i_0 < … < i_{n-1}` and `v_{i_0} … v_{i_{n-1}}` is an edge of `x0`.
pub fn encode_tilde(x0: &RelStructure) -> Result<RelStructure> {
    let n = x0.edge_arity().ok_or_else(|| Error::input("encoding needs an edge relation"))?;
    if !(2..=3).contains(&n) {
        return Err(Error::input(format!("encoding implemented for edge arity 2 and 3, got {n}")));
    }
    let m = x0.size;
    let edges: Vec<Vec<usize>> = x0.edges().map(|e| e.iter().enumerate().map(|(j, &i)| j * m + i).collect()).collect();
    RelStructure::ordered_set(n * m).with_part_sizes(&vec![m; n])?.with_edges(n, &edges)
}

/// `X̄_0 ⊆ X̃_0`: the vertices `w^j_i` with `v_i` in part `j` of `x`, where `X_0` is `x` without parts.
///
/// Fails with an internal error if `X̄_0` is not isomorphic to `x`.
pub fn bar_restrict(x: &RelStructure) -> Result<RelStructure> {
    let n = x.part_count().ok_or_else(|| Error::input("bar restriction needs a partite structure"))?;
    if x.edge_arity() != Some(n) {
        return Err(Error::input(format!("expected an edge relation of arity {n}")));
    }
    if let Some(e) = x.edges().find(|e| e.iter().enumerate().any(|(j, &v)| x.part_of(v) != Some(j))) {
        return Err(Error::input(format!("edge {e:?} does not take one vertex per part")));
    }
    let tilde = encode_tilde(&x.without_parts())?;
    let m = x.size;
    let elems: Vec<usize> = (0..m).map(|v| x.part_of(v).unwrap() * m + v).collect();
    let bar = tilde.induce(&elems);
    if bar != *x {
        return Err(Error::Internal("restricted encoding is not isomorphic to the input".into()));
    }
    Ok(bar)
}
