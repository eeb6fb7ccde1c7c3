//! Set systems over finite product universes.
//!
//! A [`SetSystem`] is a family of subsets of `X = X_0 × … × X_{n-1}`; every
//! member is a bit vector over the tuples of `X` in row-major order (part 0
//! most significant). Boxes are products of equal-size index sets, one per
//! part, and are re-indexed row-major in the same way.

use std::collections::{BTreeSet, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Count;

/// The finite product `X_0 × … × X_{n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductUniverse {
    part_sizes: Vec<usize>,
}

impl ProductUniverse {
    pub fn new(part_sizes: Vec<usize>) -> Result<Self> {
        if part_sizes.is_empty() {
            return Err(Error::input("a product universe needs at least one part"));
        }
        if part_sizes.contains(&0) {
            return Err(Error::input("part sizes must be positive"));
        }
        part_sizes
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .ok_or_else(|| Error::input("product universe too large"))?;
        Ok(ProductUniverse { part_sizes })
    }

    /// `n` equal parts of size `m`.
    pub fn uniform(n: usize, m: usize) -> Result<Self> {
        Self::new(vec![m; n])
    }

    pub fn arity(&self) -> usize {
        self.part_sizes.len()
    }

    pub fn part_sizes(&self) -> &[usize] {
        &self.part_sizes
    }

    pub fn min_part_size(&self) -> usize {
        *self.part_sizes.iter().min().unwrap()
    }

    /// Number of tuples, `∏ |X_i|`.
    pub fn total(&self) -> usize {
        self.part_sizes.iter().product()
    }

    /// Row-major index of a tuple. Panics on out-of-range coordinates.
    pub fn index(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.arity());
        tuple.iter().zip(&self.part_sizes).fold(0, |acc, (&v, &s)| {
            assert!(v < s, "coordinate {v} out of range {s}");
            acc * s + v
        })
    }

    pub fn checked_index(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.arity() {
            return Err(Error::input(format!(
                "tuple of length {} in a universe of arity {}",
                tuple.len(),
                self.arity()
            )));
        }
        if let Some((i, (&v, &s))) = tuple.iter().zip(&self.part_sizes).enumerate().find(|(_, (&v, &s))| v >= s) {
            return Err(Error::input(format!("coordinate {i} = {v} out of range {s}")));
        }
        Ok(self.index(tuple))
    }

    /// Inverse of [`ProductUniverse::index`].
    pub fn tuple(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.arity()];
        for (slot, &s) in out.iter_mut().zip(&self.part_sizes).rev() {
            *slot = index % s;
            index /= s;
        }
        out
    }

    /// All tuples in row-major order.
    pub fn tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.total()).map(|i| self.tuple(i))
    }
}

/// `n` sorted lists of distinct part indices of common length `m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoxSpec {
    selections: Vec<Vec<usize>>,
}

impl BoxSpec {
    pub fn new(mut selections: Vec<Vec<usize>>) -> Result<Self> {
        if selections.is_empty() {
            return Err(Error::input("a box needs at least one coordinate list"));
        }
        let m = selections[0].len();
        for sel in &mut selections {
            if sel.len() != m {
                return Err(Error::input("box coordinate lists must have equal length"));
            }
            sel.sort_unstable();
            if sel.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input("box coordinate lists must not repeat indices"));
            }
        }
        Ok(BoxSpec { selections })
    }

    pub fn size(&self) -> usize {
        self.selections[0].len()
    }

    pub fn arity(&self) -> usize {
        self.selections.len()
    }

    pub fn selections(&self) -> &[Vec<usize>] {
        &self.selections
    }

    /// Number of tuples in the box, `m^n`.
    pub fn cell_count(&self) -> usize {
        self.size().pow(self.arity() as u32)
    }

    pub fn validate(&self, universe: &ProductUniverse) -> Result<()> {
        if self.arity() != universe.arity() {
            return Err(Error::input(format!(
                "box of arity {} in a universe of arity {}",
                self.arity(),
                universe.arity()
            )));
        }
        for (i, (sel, &s)) in self.selections.iter().zip(universe.part_sizes()).enumerate() {
            if let Some(&v) = sel.iter().find(|&&v| v >= s) {
                return Err(Error::input(format!("box index {v} out of range {s} in part {i}")));
            }
        }
        Ok(())
    }

    /// Universe indices of the box tuples, row-major within the box.
    pub fn universe_indices(&self, universe: &ProductUniverse) -> Vec<usize> {
        if self.size() == 0 {
            return Vec::new();
        }
        self.selections
            .iter()
            .map(|s| s.iter().copied())
            .multi_cartesian_product()
            .map(|t| universe.index(&t))
            .collect()
    }
}

/// Every box of size `m` in a fixed lexicographic order.
pub fn boxes(universe: &ProductUniverse, m: usize) -> impl Iterator<Item = BoxSpec> + '_ {
    universe
        .part_sizes()
        .iter()
        .map(move |&s| (0..s).combinations(m))
        .multi_cartesian_product()
        .map(|selections| BoxSpec { selections })
}

/// A family of subsets of `X` with distinct members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetSystem {
    universe: ProductUniverse,
    members: Vec<FixedBitSet>,
}

impl SetSystem {
    /// Builds a system, collapsing duplicate members.
    pub fn new(universe: ProductUniverse, members: impl IntoIterator<Item = FixedBitSet>) -> Result<Self> {
        let total = universe.total();
        let mut set = BTreeSet::new();
        for mut m in members {
            if m.ones().any(|i| i >= total) {
                return Err(Error::input(format!("member bit out of range (universe has {total} tuples)")));
            }
            m.grow(total);
            if m.len() > total {
                let mut trimmed = FixedBitSet::with_capacity(total);
                trimmed.extend(m.ones());
                m = trimmed;
            }
            set.insert(m);
        }
        Ok(SetSystem { universe, members: set.into_iter().collect() })
    }

    /// Builds a system from members given as lists of tuples.
    pub fn from_tuple_sets(universe: ProductUniverse, members: &[Vec<Vec<usize>>]) -> Result<Self> {
        let total = universe.total();
        let bits = members
            .iter()
            .map(|tuples| {
                let mut b = FixedBitSet::with_capacity(total);
                for t in tuples {
                    b.insert(universe.checked_index(t)?);
                }
                Ok(b)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(universe, bits)
    }

    /// The full power set of `X`. Only sensible for tiny universes.
    pub fn power_set(universe: ProductUniverse) -> Result<Self> {
        let total = universe.total();
        if total > 20 {
            return Err(Error::input("power set of more than 20 tuples"));
        }
        let members = (0u64..1 << total).map(|mask| bits_from_mask(mask, total));
        Self::new(universe, members)
    }

    pub fn universe(&self) -> &ProductUniverse {
        &self.universe
    }

    pub fn members(&self) -> &[FixedBitSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, member: &FixedBitSet) -> bool {
        self.members.binary_search(member).is_ok()
    }
}

pub(crate) fn bits_from_mask(mask: u64, len: usize) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(len);
    for i in 0..len.min(64) {
        if mask >> i & 1 == 1 {
            b.insert(i);
        }
    }
    b
}

/// A family of distinct subsets of `{0, …, ground_size-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundFamily {
    ground_size: usize,
    members: Vec<FixedBitSet>,
}

impl GroundFamily {
    pub fn new(ground_size: usize, members: impl IntoIterator<Item = FixedBitSet>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for mut m in members {
            if m.ones().any(|i| i >= ground_size) {
                return Err(Error::input(format!("member element out of range {ground_size}")));
            }
            if m.len() != ground_size {
                let mut fixed = FixedBitSet::with_capacity(ground_size);
                fixed.extend(m.ones());
                m = fixed;
            }
            set.insert(m);
        }
        Ok(GroundFamily { ground_size, members: set.into_iter().collect() })
    }

    /// Members given as element lists.
    pub fn from_sets(ground_size: usize, members: &[Vec<usize>]) -> Result<Self> {
        Self::new(
            ground_size,
            members.iter().map(|s| {
                let mut b = FixedBitSet::with_capacity(ground_size.max(s.iter().max().map_or(0, |&x| x + 1)));
                b.extend(s.iter().copied());
                b
            }),
        )
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn members(&self) -> &[FixedBitSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, member: &FixedBitSet) -> bool {
        self.members.binary_search(member).is_ok()
    }

    /// Members as sorted element lists.
    pub fn as_sets(&self) -> Vec<Vec<usize>> {
        self.members.iter().map(|m| m.ones().collect()).collect()
    }

    /// True iff every subset of `subset` is the intersection of some member with it.
    pub fn shatters(&self, subset: &FixedBitSet) -> bool {
        let k = subset.count_ones(..);
        if k >= usize::BITS as usize - 1 || self.members.len() < 1 << k {
            return false;
        }
        let traces: HashSet<FixedBitSet> = self
            .members
            .iter()
            .map(|m| {
                let mut t = m.clone();
                t.intersect_with(subset);
                t
            })
            .collect();
        traces.len() == 1 << k
    }

    /// True iff `B ⊆ C ∈ family` implies `B ∈ family`.
    pub fn is_downward_closed(&self) -> bool {
        self.members.iter().all(|c| {
            c.ones().all(|e| {
                let mut b = c.clone();
                b.set(e, false);
                self.contains(&b)
            })
        })
    }
}

/// `{C ∩ A : C ∈ 𝒞}` re-indexed over the `m^n` tuples of the box.
pub fn trace(system: &SetSystem, bx: &BoxSpec) -> Result<GroundFamily> {
    bx.validate(system.universe())?;
    let cells = bx.universe_indices(system.universe());
    let members = system.members().iter().map(|c| {
        let mut t = FixedBitSet::with_capacity(cells.len());
        for (j, &cell) in cells.iter().enumerate() {
            if c.contains(cell) {
                t.insert(j);
            }
        }
        t
    });
    GroundFamily::new(cells.len(), members)
}

/// Number of distinct traces on the given universe cells.
fn trace_count(system: &SetSystem, cells: &[usize]) -> usize {
    if cells.len() <= 128 {
        let keys: HashSet<u128> = system
            .members()
            .iter()
            .map(|c| {
                cells.iter().enumerate().fold(0u128, |k, (j, &cell)| if c.contains(cell) { k | 1 << j } else { k })
            })
            .collect();
        keys.len()
    } else {
        let keys: HashSet<FixedBitSet> = system
            .members()
            .iter()
            .map(|c| {
                let mut t = FixedBitSet::with_capacity(cells.len());
                t.extend(cells.iter().enumerate().filter(|(_, &cell)| c.contains(cell)).map(|(j, _)| j));
                t
            })
            .collect();
        keys.len()
    }
}

/// `2^cells` if it fits in a `usize`.
fn full_trace_count(cells: usize) -> Option<usize> {
    (cells < usize::BITS as usize).then(|| 1usize << cells)
}

/// True iff the box is shattered, i.e. the trace is the full power set of the box.
pub fn is_shattered(system: &SetSystem, bx: &BoxSpec) -> Result<bool> {
    bx.validate(system.universe())?;
    Ok(shattered_unchecked(system, bx))
}

fn shattered_unchecked(system: &SetSystem, bx: &BoxSpec) -> bool {
    let Some(full) = full_trace_count(bx.cell_count()) else {
        return false;
    };
    if system.len() < full {
        return false;
    }
    trace_count(system, &bx.universe_indices(system.universe())) == full
}

/// Largest `m ≤ size_cap` such that some box of size `m` is shattered.
///
/// Shattering is hereditary to sub-boxes, so the search stops at the first
/// size with no shattered box.
pub fn vc_n_dim(system: &SetSystem, size_cap: usize) -> Result<usize> {
    if system.is_empty() {
        return Err(Error::Undefined("VC_n dimension of an empty set system".into()));
    }
    let universe = system.universe();
    let limit = size_cap.min(universe.min_part_size());
    let mut dim = 0;
    for m in 1..=limit {
        let cells = m.pow(universe.arity() as u32);
        match full_trace_count(cells) {
            Some(full) if full <= system.len() => {}
            _ => break,
        }
        let all: Vec<BoxSpec> = boxes(universe, m).collect();
        if !all.par_iter().any(|b| shattered_unchecked(system, b)) {
            break;
        }
        dim = m;
    }
    Ok(dim)
}

/// `π_{𝒞,n}(m)`: the largest trace over all boxes of size `m`.
pub fn shatter_fn(system: &SetSystem, m: usize) -> Result<usize> {
    let universe = system.universe();
    if m > universe.min_part_size() {
        return Err(Error::input(format!("box size {m} exceeds the smallest part size {}", universe.min_part_size())));
    }
    if system.is_empty() {
        return Ok(0);
    }
    let cells = m.pow(universe.arity() as u32);
    let cap = full_trace_count(cells).map_or(system.len(), |f| f.min(system.len()));
    let all: Vec<BoxSpec> = boxes(universe, m).collect();
    let done = AtomicBool::new(false);
    let best = all
        .par_iter()
        .map(|b| {
            if done.load(Ordering::Relaxed) {
                return 0;
            }
            let c = trace_count(system, &b.universe_indices(universe));
            if c == cap {
                done.store(true, Ordering::Relaxed);
            }
            c
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

/// Compresses a family by element-wise down-shifts until a full pass is stable.
///
/// The result has the same size, is downward closed, and shatters only sets
/// the input shatters.
pub fn shift(family: &GroundFamily) -> GroundFamily {
    let mut current: BTreeSet<FixedBitSet> = family.members().iter().cloned().collect();
    loop {
        let mut changed = false;
        for e in 0..family.ground_size() {
            let holders: Vec<FixedBitSet> = current.iter().filter(|c| c.contains(e)).cloned().collect();
            for c in holders {
                let mut lowered = c.clone();
                lowered.set(e, false);
                if !current.contains(&lowered) {
                    current.remove(&c);
                    current.insert(lowered);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    GroundFamily { ground_size: family.ground_size(), members: current.into_iter().collect() }
}

/// `Σ_{i<z} C(m^n, i)` computed exactly in `T`.
pub fn sauer_binomial_bound<T: Count>(n: usize, m: usize, z: usize) -> T {
    let big_n = m.pow(n as u32);
    let from = |x: usize| T::from_usize(x).expect("count type too narrow");
    let mut sum = T::zero();
    let mut term = T::one();
    for i in 0..z.min(big_n + 1) {
        sum = sum + term.clone();
        term = term * from(big_n - i) / from(i + 1);
    }
    sum
}

/// The classical Sauer–Shelah sum `Σ_{i≤d} C(m, i)`.
pub fn classical_sauer_bound<T: Count>(m: usize, d: usize) -> T {
    sauer_binomial_bound(1, m, d + 1)
}
