//! Finite structures, quantifier-free formulas and φ-type counting.
//!
//! A formula `φ(x; y_0, …, y_{n-1})` over a structure `M` induces the set
//! system `𝒞_φ = {φ(b, M^n) : b ∈ M^{|x|}}` over the product of the parameter
//! tuple spaces. Parameter tuples of length `l` are indexed row-major in
//! `domain^l`, so a box of parameter tuples maps directly onto a [`BoxSpec`].

pub(crate) mod formula;
pub(crate) mod structure;

use std::collections::{HashMap, HashSet};

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::setsys::{vc_n_dim, BoxSpec, ProductUniverse, SetSystem};
use crate::zar::PartiteHypergraph;

pub use formula::{parse_expr, Expr, QfFormula, Var};
pub use structure::{FiniteStructure, Relation, RelationFile, StructureFile};

/// Largest number of formula evaluations a single exhaustive call will attempt.
pub const EVAL_LIMIT: u64 = 1 << 32;

fn tuple_space(domain: usize, len: usize) -> Result<usize> {
    domain
        .checked_pow(len as u32)
        .filter(|&s| s <= 1 << 30)
        .ok_or_else(|| Error::Budget(format!("tuple space {domain}^{len} is too large")))
}

fn decode_into(mut index: usize, domain: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = index % domain;
        index /= domain;
    }
}

fn check_assignment(m: &FiniteStructure, lens: &[usize], blocks: &[Vec<usize>]) -> Result<()> {
    if blocks.len() != lens.len() {
        return Err(Error::input(format!("expected {} variable blocks, got {}", lens.len(), blocks.len())));
    }
    for (k, (b, &l)) in blocks.iter().zip(lens).enumerate() {
        if b.len() != l {
            return Err(Error::input(format!("block {k} has length {}, expected {l}", b.len())));
        }
        if let Some(&v) = b.iter().find(|&&v| v >= m.domain_size()) {
            return Err(Error::input(format!("element {v} outside domain of size {}", m.domain_size())));
        }
    }
    Ok(())
}

fn check_shapes(delta: &[QfFormula]) -> Result<&[usize]> {
    let first = delta.first().ok_or_else(|| Error::input("formula list is empty"))?;
    if delta.iter().any(|f| f.block_lens() != first.block_lens()) {
        return Err(Error::input("formulas in a list must share their variable blocks"));
    }
    Ok(first.block_lens())
}

/// Evaluates `φ` on one tuple per block (`x` first).
pub fn eval_formula(m: &FiniteStructure, phi: &QfFormula, assignment: &[Vec<usize>]) -> Result<bool> {
    check_assignment(m, phi.block_lens(), assignment)?;
    let c = phi.compile(m)?;
    Ok(c.eval(&assignment.concat()))
}

/// `𝒞_φ` as a set system whose part `k` is the tuple space `domain^{|y_k|}`.
pub fn phi_class(m: &FiniteStructure, phi: &QfFormula) -> Result<SetSystem> {
    let d = m.domain_size();
    let parts: Vec<usize> = phi.y_lens().iter().map(|&l| tuple_space(d, l)).collect::<Result<_>>()?;
    let universe = ProductUniverse::new(parts)?;
    let xs = tuple_space(d, phi.x_len())?;
    if (xs as u64).saturating_mul(universe.total() as u64) > EVAL_LIMIT {
        return Err(Error::Budget(format!("{xs} × {} evaluations exceed the limit", universe.total())));
    }
    let c = phi.compile(m)?;
    let (xl, lens) = (phi.x_len(), phi.y_lens());
    let members: Vec<FixedBitSet> = (0..xs)
        .into_par_iter()
        .map(|b| {
            let mut flat = vec![0; c.width()];
            decode_into(b, d, &mut flat[..xl]);
            let mut set = FixedBitSet::with_capacity(universe.total());
            for (cell, tuple) in universe.tuples().enumerate() {
                let mut at = xl;
                for (&t, &l) in tuple.iter().zip(lens) {
                    decode_into(t, d, &mut flat[at..at + l]);
                    at += l;
                }
                set.set(cell, c.eval(&flat));
            }
            set
        })
        .collect();
    SetSystem::new(universe, members)
}

/// Converts parameter sets (tuples per block) to a box of `phi_class` with the same size per block.
pub fn param_box(m: &FiniteStructure, boxes: &[Vec<Vec<usize>>]) -> Result<BoxSpec> {
    BoxSpec::new(boxes.iter().map(|b| b.iter().map(|t| m.tuple_index(t)).collect()).collect())
}

/// Number of realized Δ-types over parameter sets `B_0, …, B_{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeCount {
    pub boxes: Vec<Vec<Vec<usize>>>,
    pub count: usize,
}

/// Groups every `x`-tuple by its truth pattern over `Δ × B_0 × … × B_{n-1}` and counts the groups.
pub fn count_types(m: &FiniteStructure, delta: &[QfFormula], boxes: &[Vec<Vec<usize>>]) -> Result<TypeCount> {
    let lens = check_shapes(delta)?;
    if boxes.len() != lens.len() - 1 {
        return Err(Error::input(format!("expected {} parameter sets, got {}", lens.len() - 1, boxes.len())));
    }
    for (k, b) in boxes.iter().enumerate() {
        for t in b {
            let mut probe = vec![vec![0; lens[0]]];
            probe.extend((0..boxes.len()).map(|j| if j == k { t.clone() } else { vec![0; lens[j + 1]] }));
            check_assignment(m, lens, &probe)?;
        }
    }
    let compiled: Vec<_> = delta.iter().map(|f| f.compile(m)).collect::<Result<_>>()?;
    let count = count_patterns(m, &compiled, lens, boxes)?;
    Ok(TypeCount { boxes: boxes.to_vec(), count })
}

fn count_patterns(
    m: &FiniteStructure,
    compiled: &[formula::Compiled<'_>],
    lens: &[usize],
    boxes: &[Vec<Vec<usize>>],
) -> Result<usize> {
    let d = m.domain_size();
    let xs = tuple_space(d, lens[0])?;
    let grid: Vec<Vec<&Vec<usize>>> = boxes.iter().map(|b| b.iter()).multi_cartesian_product().collect();
    let width = compiled.first().map_or(0, |c| c.width());
    let mut seen = HashSet::new();
    let mut flat = vec![0; width];
    for b in 0..xs {
        decode_into(b, d, &mut flat[..lens[0]]);
        let mut pattern = FixedBitSet::with_capacity(compiled.len() * grid.len());
        for (g, params) in grid.iter().enumerate() {
            let mut at = lens[0];
            for t in params {
                flat[at..at + t.len()].copy_from_slice(t);
                at += t.len();
            }
            for (f, c) in compiled.iter().enumerate() {
                pattern.set(f * grid.len() + g, c.eval(&flat));
            }
        }
        seen.insert(pattern);
    }
    Ok(seen.len())
}

fn param_boxes(d: usize, lens: &[usize], size: usize) -> Result<(Vec<usize>, impl Iterator<Item = Vec<Vec<usize>>>)> {
    let spaces: Vec<usize> = lens.iter().map(|&l| tuple_space(d, l)).collect::<Result<_>>()?;
    if let Some(s) = spaces.iter().find(|&&s| size > s) {
        return Err(Error::input(format!("box size {size} exceeds parameter space of size {s}")));
    }
    let iter = spaces.clone().into_iter().map(move |s| (0..s).combinations(size)).multi_cartesian_product();
    Ok((spaces, iter))
}

fn to_tuples(d: usize, lens: &[usize], codes: &[Vec<usize>]) -> Vec<Vec<Vec<usize>>> {
    codes
        .iter()
        .zip(lens)
        .map(|(b, &l)| {
            b.iter()
                .map(|&c| {
                    let mut t = vec![0; l];
                    decode_into(c, d, &mut t);
                    t
                })
                .collect()
        })
        .collect()
}

/// `π_Δ(m)`: the largest realized type count over all boxes of size `size` (exhaustive).
pub fn pi_phi(m: &FiniteStructure, delta: &[QfFormula], size: usize) -> Result<usize> {
    let lens = check_shapes(delta)?.to_vec();
    let d = m.domain_size();
    let (spaces, iter) = param_boxes(d, &lens[1..], size)?;
    let boxes: u128 = spaces.iter().map(|&s| binomial(s, size)).product();
    let per_box = (tuple_space(d, lens[0])? as u128) * (size as u128).pow(spaces.len() as u32) * delta.len() as u128;
    if boxes.saturating_mul(per_box) > EVAL_LIMIT as u128 {
        return Err(Error::Budget(format!("{boxes} boxes of size {size} exceed the evaluation limit")));
    }
    let compiled: Vec<_> = delta.iter().map(|f| f.compile(m)).collect::<Result<_>>()?;
    let all: Vec<Vec<Vec<usize>>> = iter.collect();
    all.par_iter()
        .map(|codes| count_patterns(m, &compiled, &lens, &to_tuples(d, &lens[1..], codes)))
        .try_reduce(|| 0, |a, b| Ok(a.max(b)))
}

/// Lower estimate of `π_Δ(m)` from `samples` random boxes. Not exhaustive; never a substitute for [`pi_phi`].
pub fn pi_phi_sampled(
    m: &FiniteStructure,
    delta: &[QfFormula],
    size: usize,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    let lens = check_shapes(delta)?.to_vec();
    let d = m.domain_size();
    let (spaces, _) = param_boxes(d, &lens[1..], size)?;
    let compiled: Vec<_> = delta.iter().map(|f| f.compile(m)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0;
    for _ in 0..samples {
        let codes: Vec<Vec<usize>> = spaces
            .iter()
            .map(|&s| {
                let mut v = sample(&mut rng, s, size).into_vec();
                v.sort_unstable();
                v
            })
            .collect();
        best = best.max(count_patterns(m, &compiled, &lens, &to_tuples(d, &lens[1..], &codes))?);
    }
    Ok(best)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Dimension of `φ`: the VC_n dimension of `𝒞_φ`, searching boxes up to `cap`.
pub fn dim_phi(m: &FiniteStructure, phi: &QfFormula, cap: usize) -> Result<usize> {
    vc_n_dim(&phi_class(m, phi)?, cap)
}

/// Checks that every pattern `s` over the parameter grid is realized by some `x`-tuple.
///
/// Refuses with a budget error when `2^{∏|params_k|}` exceeds `budget`.
pub fn verify_ipn_witness(
    m: &FiniteStructure,
    phi: &QfFormula,
    params: &[Vec<Vec<usize>>],
    budget: u64,
) -> Result<bool> {
    if params.len() != phi.n() {
        return Err(Error::input(format!("expected {} parameter lists, got {}", phi.n(), params.len())));
    }
    if params.iter().any(Vec::is_empty) {
        return Err(Error::input("parameter lists must be nonempty"));
    }
    let cells: usize = params.iter().map(Vec::len).product();
    if cells >= 64 || 1u64 << cells > budget {
        return Err(Error::Budget(format!("2^{cells} patterns exceed budget {budget}")));
    }
    let tc = count_types(m, std::slice::from_ref(phi), params)?;
    Ok(tc.count == 1 << cells)
}

/// Tuples `a_g` of a structure, indexed by the global vertex ids of an index structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedFamily {
    tuples: Vec<Vec<usize>>,
}

impl IndexedFamily {
    pub fn new(tuples: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(first) = tuples.first() {
            if first.is_empty() || tuples.iter().any(|t| t.len() != first.len()) {
                return Err(Error::input("family tuples must be nonempty and of equal length"));
            }
        }
        Ok(IndexedFamily { tuples })
    }

    /// Family of single elements.
    pub fn of_elements(elements: &[usize]) -> Self {
        IndexedFamily { tuples: elements.iter().map(|&e| vec![e]).collect() }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuple_len(&self) -> usize {
        self.tuples.first().map_or(0, Vec::len)
    }

    pub fn get(&self, g: usize) -> &[usize] {
        &self.tuples[g]
    }
}

/// `⊨ φ(a_{g_0}, …, a_{g_{n-1}}) ⟺ R(g_0, …, g_{n-1})` for every cross-part tuple of `g`.
///
/// Part 0 of `g` feeds the `x` block, part `k+1` feeds `y_k`.
pub fn check_encodes(m: &FiniteStructure, phi: &QfFormula, fam: &IndexedFamily, g: &PartiteHypergraph) -> Result<bool> {
    if phi.block_lens().len() != g.n() {
        return Err(Error::input(format!("formula has {} blocks, hypergraph {} parts", phi.block_lens().len(), g.n())));
    }
    if fam.len() != g.vertex_count() {
        return Err(Error::input(format!("family has {} tuples for {} vertices", fam.len(), g.vertex_count())));
    }
    for part in 0..g.n() {
        for i in 0..g.part_sizes()[part] {
            let t = fam.get(g.vertex(part, i));
            if t.len() != phi.block_lens()[part] || t.iter().any(|&v| v >= m.domain_size()) {
                return Err(Error::input(format!("tuple of vertex {i} in part {part} does not fit block {part}")));
            }
        }
    }
    let c = phi.compile(m)?;
    let mut flat = Vec::with_capacity(c.width());
    for tuple in g.universe().tuples() {
        flat.clear();
        for (part, &i) in tuple.iter().enumerate() {
            flat.extend_from_slice(fam.get(g.vertex(part, i)));
        }
        if c.eval(&flat) != g.has_edge(&tuple) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// An index structure on vertices `0..size`, ordered by id.
pub trait IndexStructure {
    fn size(&self) -> usize;
    fn part_of(&self, v: usize) -> usize;
    fn edge_arity(&self) -> usize;
    /// Whether the listed vertices form an edge; order of the list does not matter.
    fn has_edge(&self, vertices: &[usize]) -> bool;
}

impl IndexStructure for PartiteHypergraph {
    fn size(&self) -> usize {
        self.vertex_count()
    }

    fn part_of(&self, v: usize) -> usize {
        self.locate(v).map_or(0, |(p, _)| p)
    }

    fn edge_arity(&self) -> usize {
        self.n()
    }

    fn has_edge(&self, vertices: &[usize]) -> bool {
        self.has_edge_global(vertices)
    }
}

/// Which symbols of the index language a quantifier-free type may use. Equality is always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IndexLanguage {
    pub order: bool,
    pub parts: bool,
    pub edge: bool,
}

impl IndexLanguage {
    pub const ORDER_PARTS: IndexLanguage = IndexLanguage { order: true, parts: true, edge: false };
    pub const FULL: IndexLanguage = IndexLanguage { order: true, parts: true, edge: true };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Indiscernibility {
    Holds,
    /// `w` and `w_prime` have the same index type but disagree on `Δ[formula]`.
    Violated {
        w: Vec<usize>,
        w_prime: Vec<usize>,
        formula: usize,
    },
}

impl Indiscernibility {
    pub fn holds(&self) -> bool {
        matches!(self, Indiscernibility::Holds)
    }
}

fn qf_key(idx: &dyn IndexStructure, lang: IndexLanguage, w: &[usize]) -> Vec<u8> {
    let mut key = Vec::new();
    for (j, &a) in w.iter().enumerate() {
        for &b in &w[j + 1..] {
            key.push(if lang.order { a.cmp(&b) as i8 as u8 } else { u8::from(a == b) });
        }
        if lang.parts {
            key.push(idx.part_of(a) as u8);
        }
    }
    if lang.edge && idx.edge_arity() <= w.len() {
        for pos in (0..w.len()).combinations(idx.edge_arity()) {
            let vs: Vec<usize> = pos.iter().map(|&p| w[p]).collect();
            key.push(u8::from(idx.has_edge(&vs)));
        }
    }
    key
}

/// Searches index tuples of length up to `arity_cap` for two with the same quantifier-free
/// type in `lang` whose family tuples disagree on some formula of `Δ`.
///
/// A formula with `k` blocks, all of the family's tuple length, is compared on index tuples of length `k`.
pub fn check_indiscernible(
    fam: &IndexedFamily,
    idx: &dyn IndexStructure,
    lang: IndexLanguage,
    m: &FiniteStructure,
    delta: &[QfFormula],
    arity_cap: usize,
) -> Result<Indiscernibility> {
    if fam.len() != idx.size() {
        return Err(Error::input(format!("family has {} tuples for {} index vertices", fam.len(), idx.size())));
    }
    let tl = fam.tuple_len();
    if let Some(f) = delta.iter().find(|f| f.block_lens().iter().any(|&l| l != tl)) {
        return Err(Error::input(format!("formula {f} has blocks not of length {tl}")));
    }
    if fam.tuples.iter().flatten().any(|&v| v >= m.domain_size()) {
        return Err(Error::input("family tuple outside the structure's domain"));
    }
    let compiled: Vec<_> = delta.iter().map(|f| f.compile(m)).collect::<Result<_>>()?;
    for len in 1..=arity_cap {
        let relevant: Vec<usize> = (0..delta.len()).filter(|&f| delta[f].block_lens().len() == len).collect();
        if relevant.is_empty() || fam.is_empty() {
            continue;
        }
        let count = fam.len().checked_pow(len as u32).filter(|&c| c as u64 <= EVAL_LIMIT);
        let count = count.ok_or_else(|| Error::Budget(format!("{} index tuples of length {len}", fam.len())))?;
        let mut seen: HashMap<Vec<u8>, (Vec<usize>, FixedBitSet)> = HashMap::new();
        let mut w = vec![0; len];
        let mut flat = vec![0; len * tl];
        for code in 0..count {
            decode_into(code, fam.len(), &mut w);
            for (j, &g) in w.iter().enumerate() {
                flat[j * tl..(j + 1) * tl].copy_from_slice(fam.get(g));
            }
            let mut truth = FixedBitSet::with_capacity(relevant.len());
            for (r, &f) in relevant.iter().enumerate() {
                truth.set(r, compiled[f].eval(&flat));
            }
            match seen.entry(qf_key(idx, lang, &w)) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert((w.clone(), truth));
                }
                std::collections::hash_map::Entry::Occupied(e) => {
                    let (w0, t0) = e.get();
                    if let Some(r) = (0..relevant.len()).find(|&r| t0[r] != truth[r]) {
                        return Ok(Indiscernibility::Violated { w: w0.clone(), w_prime: w, formula: relevant[r] });
                    }
                }
            }
        }
    }
    Ok(Indiscernibility::Holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setsys::{shatter_fn, trace};

    fn edge_structure(domain: usize, edges: &[[usize; 2]]) -> FiniteStructure {
        let mut m = FiniteStructure::new(domain).unwrap();
        m.add_relation("R", Relation::new(2, edges.iter().map(|e| e.to_vec()).collect()).unwrap()).unwrap();
        m
    }

    #[test]
    fn evaluation() {
        let m = edge_structure(2, &[[0, 1]]);
        let phi = QfFormula::parse("(R x y0)").unwrap();
        assert!(eval_formula(&m, &phi, &[vec![0], vec![1]]).unwrap());
        assert!(!eval_formula(&m, &phi.negate(), &[vec![0], vec![1]]).unwrap());
        assert!(eval_formula(&m, &phi, &[vec![0], vec![2]]).is_err());
        assert!(eval_formula(&m, &phi, &[vec![0]]).is_err());
        assert!(eval_formula(&m, &QfFormula::parse("(S x y0)").unwrap(), &[vec![0], vec![1]]).is_err());
    }

    #[test]
    fn classes_of_simple_formulas() {
        let tri = edge_structure(3, &[[0, 1], [1, 0], [1, 2], [2, 1], [0, 2], [2, 0]]);
        let phi = QfFormula::parse("(R x y0)").unwrap();
        assert_eq!(phi_class(&tri, &phi).unwrap().len(), 3);
        let top = QfFormula::parse("(= x x)").unwrap();
        let c = phi_class(&tri, &top).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.members()[0].count_ones(..), 3);
        assert_eq!(dim_phi(&tri, &top, 3).unwrap(), 0);
        let tc = count_types(&tri, &[top], &[vec![vec![0], vec![1]]]).unwrap();
        assert_eq!(tc.count, 1);
    }

    #[test]
    fn types_match_traces() {
        let m = edge_structure(4, &[[0, 1], [0, 2], [1, 2], [3, 3], [2, 0]]);
        let phi = QfFormula::parse("(or (R x y0) (R y0 x))").unwrap();
        let c = phi_class(&m, &phi).unwrap();
        let boxes = vec![vec![vec![0], vec![2], vec![3]]];
        let t = trace(&c, &param_box(&m, &boxes).unwrap()).unwrap();
        assert_eq!(count_types(&m, std::slice::from_ref(&phi), &boxes).unwrap().count, t.len());
        for s in 0..=4 {
            assert_eq!(pi_phi(&m, std::slice::from_ref(&phi), s).unwrap(), shatter_fn(&c, s).unwrap());
        }
        assert!(pi_phi(&m, std::slice::from_ref(&phi), 5).is_err());
        assert!(pi_phi_sampled(&m, std::slice::from_ref(&phi), 2, 20, 7).unwrap() <= pi_phi(&m, &[phi], 2).unwrap());
    }

    #[test]
    fn ipn_witness_on_single_cell() {
        let m = edge_structure(2, &[[0, 1]]);
        let phi = QfFormula::parse("(R x y0)").unwrap();
        assert!(verify_ipn_witness(&m, &phi, &[vec![vec![1]]], 16).unwrap());
        assert!(!verify_ipn_witness(&m, &phi, &[vec![vec![0]]], 16).unwrap());
        assert!(matches!(verify_ipn_witness(&m, &phi, &[vec![vec![0], vec![1]]], 2), Err(Error::Budget(_))));
    }

    #[test]
    fn encoding_and_indiscernibility() {
        let g = PartiteHypergraph::new(vec![2, 2], &[vec![0, 1], vec![1, 0]]).unwrap();
        let m = edge_structure(4, &[[0, 3], [1, 2]]);
        let fam = IndexedFamily::of_elements(&[0, 1, 2, 3]);
        let phi = QfFormula::parse("(R x y0)").unwrap();
        assert!(check_encodes(&m, &phi, &fam, &g).unwrap());
        let empty = PartiteHypergraph::new(vec![2, 2], &[]).unwrap();
        assert!(!check_encodes(&m, &phi, &fam, &empty).unwrap());

        let r = check_indiscernible(&fam, &g, IndexLanguage::ORDER_PARTS, &m, std::slice::from_ref(&phi), 2).unwrap();
        match r {
            Indiscernibility::Violated { w, w_prime, .. } => {
                assert_ne!(g.has_edge_global(&w), g.has_edge_global(&w_prime));
            }
            Indiscernibility::Holds => panic!("edge and non-edge share an order type"),
        }
        assert!(check_indiscernible(&fam, &g, IndexLanguage::FULL, &m, std::slice::from_ref(&phi), 2).unwrap().holds());
        let constant = IndexedFamily::new(vec![vec![0]; 4]).unwrap();
        let none = IndexLanguage::default();
        assert!(check_indiscernible(&constant, &g, none, &m, &[phi], 3).unwrap().holds());
    }
}
