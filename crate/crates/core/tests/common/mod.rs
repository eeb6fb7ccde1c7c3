//! Brute-force oracles and seeded generators shared by the integration tests.
//!
//! Oracles work on plain tuples, masks and expression trees so they share no
//! code path with the library routines they check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcn::fmodel::{Expr, FiniteStructure, QfFormula, Relation, Var};
use vcn::ramsey::RelStructure;
use vcn::setsys::{BoxSpec, GroundFamily, ProductUniverse, SetSystem};
use vcn::zar::PartiteHypergraph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn row_major(sizes: &[usize], tuple: &[usize]) -> usize {
    tuple.iter().zip(sizes).fold(0, |acc, (&t, &s)| acc * s + t)
}

fn all_tuples(sizes: &[usize]) -> Vec<Vec<usize>> {
    sizes.iter().map(|&s| 0..s).multi_cartesian_product().collect()
}

/// Whether a cell set over `m^n` (bit `row_major`) contains a `d × … × d` box.
fn has_box(n: usize, m: usize, d: usize, cells: u64) -> bool {
    if d > m {
        return false;
    }
    let sizes = vec![m; n];
    let choices: Vec<Vec<usize>> = (0..m).combinations(d).collect();
    (0..n).map(|_| choices.iter()).multi_cartesian_product().any(|sel| {
        sel.iter().map(|s| s.iter().copied()).multi_cartesian_product().all(|t| cells >> row_major(&sizes, &t) & 1 == 1)
    })
}

/// `z_n(m, d)` by enumerating every edge set of `G^{(n)}(m)`.
pub fn brute_zarankiewicz(n: usize, m: usize, d: usize) -> usize {
    let cells = m.pow(n as u32);
    assert!(cells <= 20, "oracle limited to 2^20 edge sets");
    let best = (0u64..1 << cells).filter(|&c| !has_box(n, m, d, c)).map(|c| c.count_ones() as usize).max().unwrap();
    best + 1
}

/// Whether every edge set of exactly `size` cells contains the box.
pub fn every_edge_set_of_size_has_box(n: usize, m: usize, d: usize, size: usize) -> bool {
    let cells = m.pow(n as u32);
    (0u64..1 << cells).filter(|c| c.count_ones() as usize == size).all(|c| has_box(n, m, d, c))
}

pub fn members_as_tuples(sys: &SetSystem) -> Vec<BTreeSet<Vec<usize>>> {
    let sizes = sys.universe().part_sizes().to_vec();
    sys.members()
        .iter()
        .map(|mem| all_tuples(&sizes).into_iter().filter(|t| mem.contains(row_major(&sizes, t))).collect())
        .collect()
}

/// `{C ∩ A}` as sets of universe tuples.
pub fn brute_trace(sys: &SetSystem, selections: &[Vec<usize>]) -> BTreeSet<BTreeSet<Vec<usize>>> {
    members_as_tuples(sys)
        .into_iter()
        .map(|c| c.into_iter().filter(|t| t.iter().zip(selections).all(|(x, s)| s.contains(x))).collect())
        .collect()
}

pub fn all_selections(sizes: &[usize], m: usize) -> Vec<Vec<Vec<usize>>> {
    sizes.iter().map(|&s| (0..s).combinations(m).collect::<Vec<_>>()).multi_cartesian_product().collect()
}

pub fn brute_shatter_fn(sys: &SetSystem, m: usize) -> usize {
    all_selections(sys.universe().part_sizes(), m).iter().map(|sel| brute_trace(sys, sel).len()).max().unwrap_or(0)
}

pub fn brute_vc_dim(sys: &SetSystem) -> usize {
    let n = sys.universe().arity() as u32;
    let cap = sys.universe().min_part_size();
    (0..=cap).take_while(|&m| brute_shatter_fn(sys, m) == 1usize << m.pow(n)).last().unwrap_or(0)
}

pub fn family_masks(f: &GroundFamily) -> Vec<u64> {
    f.members().iter().map(|b| b.ones().fold(0u64, |acc, i| acc | 1 << i)).collect()
}

pub fn mask_shattered(members: &[u64], s: u64) -> bool {
    let traces: BTreeSet<u64> = members.iter().map(|&c| c & s).collect();
    traces.len() == 1usize << s.count_ones()
}

pub fn shattered_sets(members: &[u64], ground: usize) -> BTreeSet<u64> {
    (0u64..1 << ground).filter(|&s| mask_shattered(members, s)).collect()
}

pub fn random_ground_family(r: &mut ChaCha8Rng, ground: usize, count: usize) -> GroundFamily {
    let members: BTreeSet<u64> = (0..count).map(|_| r.gen_range(0u64..1 << ground)).collect();
    let sets: Vec<Vec<usize>> = members.iter().map(|&c| (0..ground).filter(|&i| c >> i & 1 == 1).collect()).collect();
    GroundFamily::from_sets(ground, &sets).unwrap()
}

/// A random system on `part_sizes`: random members at a random density, sometimes plus the
/// power set of a random small box so higher dimensions occur.
pub fn random_system(r: &mut ChaCha8Rng, part_sizes: Vec<usize>) -> SetSystem {
    let universe = ProductUniverse::new(part_sizes.clone()).unwrap();
    let total = universe.total();
    let density = r.gen_range(0.1..0.9);
    let mut members: BTreeSet<Vec<usize>> = BTreeSet::new();
    for _ in 0..r.gen_range(1..40) {
        members.insert((0..total).filter(|_| r.gen_bool(density)).collect());
    }
    let min = *part_sizes.iter().min().unwrap();
    if r.gen_bool(0.4) {
        let side = r.gen_range(1..=min.min(2));
        let sel: Vec<Vec<usize>> = part_sizes
            .iter()
            .map(|&s| {
                let mut v = sample(r, s, side).into_vec();
                v.sort_unstable();
                v
            })
            .collect();
        let cells: Vec<usize> = sel
            .iter()
            .map(|s| s.iter().copied())
            .multi_cartesian_product()
            .map(|t| row_major(&part_sizes, &t))
            .collect();
        let base: Vec<usize> = (0..total).filter(|_| r.gen_bool(density)).filter(|c| !cells.contains(c)).collect();
        for mask in 0u64..1 << cells.len() {
            let mut m = base.clone();
            m.extend(cells.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, &c)| c));
            m.sort_unstable();
            members.insert(m);
        }
    }
    let bits = members.into_iter().map(|m| {
        let mut b = FixedBitSet::with_capacity(total);
        b.extend(m);
        b
    });
    SetSystem::new(universe, bits).unwrap()
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Structure with unary `P`, binary `R` and ternary `S`, each tuple present with probability about 1/2.
pub fn random_structure(r: &mut ChaCha8Rng, domain: usize) -> FiniteStructure {
    let mut s = FiniteStructure::new(domain).unwrap();
    for (name, arity) in [("P", 1), ("R", 2), ("S", 3)] {
        let tuples: Vec<Vec<usize>> =
            all_tuples(&vec![domain; arity]).into_iter().filter(|_| r.gen_bool(0.5)).collect();
        s.add_relation(name, Relation::new(arity, tuples).unwrap()).unwrap();
    }
    s
}

fn random_var(r: &mut ChaCha8Rng, blocks: &[usize]) -> Var {
    let block = r.gen_range(0..blocks.len());
    Var { block, pos: r.gen_range(0..blocks[block]) }
}

pub fn random_expr(r: &mut ChaCha8Rng, blocks: &[usize], depth: usize) -> Expr {
    if depth == 0 || r.gen_bool(0.3) {
        return match r.gen_range(0..10) {
            0 => Expr::Eq(random_var(r, blocks), random_var(r, blocks)),
            1 => Expr::Atom { relation: "P".into(), args: vec![random_var(r, blocks)] },
            2..=5 => Expr::Atom { relation: "R".into(), args: (0..2).map(|_| random_var(r, blocks)).collect() },
            _ => Expr::Atom { relation: "S".into(), args: (0..3).map(|_| random_var(r, blocks)).collect() },
        };
    }
    match r.gen_range(0..3) {
        0 => Expr::Not(Box::new(random_expr(r, blocks, depth - 1))),
        1 => Expr::And((0..r.gen_range(2..=3)).map(|_| random_expr(r, blocks, depth - 1)).collect()),
        _ => Expr::Or((0..r.gen_range(2..=3)).map(|_| random_expr(r, blocks, depth - 1)).collect()),
    }
}

/// A formula that mentions `x` and every parameter block, so no block is vacuous.
pub fn random_formula(r: &mut ChaCha8Rng, blocks: &[usize]) -> QfFormula {
    let anchor = Expr::Atom {
        relation: "S".into(),
        args: (0..3).map(|k| Var { block: k.min(blocks.len() - 1), pos: 0 }).collect(),
    };
    let body = random_expr(r, blocks, 3);
    let body = match r.gen_range(0..3) {
        0 => Expr::And(vec![anchor, body]),
        1 => Expr::Or(vec![anchor, body]),
        _ => Expr::Or(vec![Expr::And(vec![anchor.clone(), body.clone()]), Expr::Not(Box::new(body))]),
    };
    QfFormula::new(blocks.to_vec(), body).unwrap()
}

pub fn eval_expr(m: &FiniteStructure, e: &Expr, blocks: &[Vec<usize>]) -> bool {
    let val = |v: &Var| blocks[v.block][v.pos];
    match e {
        Expr::Const(b) => *b,
        Expr::Atom { relation, args } => {
            let t: Vec<usize> = args.iter().map(val).collect();
            m.relation(relation).unwrap().tuples().contains(&t)
        }
        Expr::Eq(a, b) => val(a) == val(b),
        Expr::Not(e) => !eval_expr(m, e, blocks),
        Expr::And(es) => es.iter().all(|e| eval_expr(m, e, blocks)),
        Expr::Or(es) => es.iter().any(|e| eval_expr(m, e, blocks)),
    }
}

/// Distinct truth patterns of `x`-tuples over `Δ × B_0 × … × B_{n-1}`.
pub fn brute_type_count(m: &FiniteStructure, delta: &[QfFormula], params: &[Vec<Vec<usize>>]) -> usize {
    let xl = delta[0].x_len();
    let xs = all_tuples(&vec![m.domain_size(); xl]);
    let grid: Vec<Vec<&Vec<usize>>> = params.iter().map(|p| p.iter()).multi_cartesian_product().collect();
    let patterns: BTreeSet<Vec<bool>> = xs
        .iter()
        .map(|x| {
            delta
                .iter()
                .flat_map(|f| {
                    grid.iter().map(move |ys| {
                        let mut blocks = vec![x.clone()];
                        blocks.extend(ys.iter().map(|y| (*y).clone()));
                        eval_expr(m, f.body(), &blocks)
                    })
                })
                .collect()
        })
        .collect();
    patterns.len()
}

/// Random parameter sets of `size` distinct tuples per block.
pub fn random_params(r: &mut ChaCha8Rng, domain: usize, lens: &[usize], size: usize) -> Vec<Vec<Vec<usize>>> {
    lens.iter()
        .map(|&l| {
            let space = domain.pow(l as u32);
            let mut codes = sample(r, space, size).into_vec();
            codes.sort_unstable();
            codes
                .into_iter()
                .map(|mut c| {
                    let mut t = vec![0; l];
                    for slot in t.iter_mut().rev() {
                        *slot = c % domain;
                        c /= domain;
                    }
                    t
                })
                .collect()
        })
        .collect()
}

pub fn selections_of(bx: &BoxSpec) -> Vec<Vec<usize>> {
    bx.selections().to_vec()
}

/// Ordered-set arrow by direct enumeration of colorings of `a`-subsets of `0..c`.
pub fn brute_ordered_arrow(a: usize, b: usize, c: usize, k: usize) -> bool {
    let a_sets: Vec<Vec<usize>> = (0..c).combinations(a).collect();
    let b_sets: Vec<Vec<usize>> = (0..c).combinations(b).collect();
    let inner: Vec<Vec<usize>> = b_sets
        .iter()
        .map(|bs| bs.iter().copied().combinations(a).map(|s| a_sets.binary_search(&s).unwrap()).collect())
        .collect();
    let total = (k as u64).pow(a_sets.len() as u32);
    (0..total).all(|code| {
        let mut colors = vec![0; a_sets.len()];
        let mut c = code;
        for slot in colors.iter_mut() {
            *slot = (c % k as u64) as usize;
            c /= k as u64;
        }
        inner.iter().any(|ids| ids.iter().all(|&i| colors[i] == colors[ids[0]]))
    })
}

/// Injective maps `a → b` that preserve order, parts and edges, counted by trying every injection.
pub fn brute_embedding_count(b: &RelStructure, a: &RelStructure) -> usize {
    (0..b.size())
        .permutations(a.size())
        .filter(|f| {
            let order = (0..a.size()).tuple_combinations().all(|(i, j)| f[i] < f[j]);
            let parts = (0..a.size()).all(|i| a.part_of(i) == b.part_of(f[i]));
            let edges = match (a.edge_arity(), b.edge_arity()) {
                (Some(k), Some(l)) if k == l => (0..a.size())
                    .combinations(k)
                    .all(|t| a.has_edge(&t) == b.has_edge(&t.iter().map(|&i| f[i]).collect::<Vec<_>>())),
                (None, None) => true,
                _ => false,
            };
            order && parts && edges && a.part_count() == b.part_count()
        })
        .count()
}

/// Bipartite ordered structure with parts `0..l`, `l..l+r` and the given edge mask over `l × r`.
pub fn bipartite(l: usize, r: usize, mask: u64) -> RelStructure {
    let edges: Vec<Vec<usize>> = (0..l * r).filter(|&c| mask >> c & 1 == 1).map(|c| vec![c / r, l + c % r]).collect();
    RelStructure::ordered_set(l + r).with_part_sizes(&[l, r]).unwrap().with_edges(2, &edges).unwrap()
}

/// Every pattern on every set of at most `t` co-tuples is realized by a vertex of the remaining part.
pub fn brute_has_extension(h: &PartiteHypergraph, t: usize) -> bool {
    let n = h.n();
    (0..n).all(|j| {
        let others: Vec<Vec<usize>> =
            (0..n).filter(|&i| i != j).map(|i| 0..h.part_sizes()[i]).multi_cartesian_product().collect();
        let edge = |b: usize, a: &[usize]| {
            let mut e = a.to_vec();
            e.insert(j, b);
            h.has_edge(&e)
        };
        (0..=t.min(others.len())).all(|k| {
            others.iter().combinations(k).all(|set| {
                (0u64..1 << k).all(|pattern| {
                    (0..h.part_sizes()[j])
                        .any(|b| set.iter().enumerate().all(|(q, a)| edge(b, a) == (pattern >> q & 1 == 1)))
                })
            })
        })
    })
}

/// Two vertex lists with the same parts and order type: one vertex of part 0 and one or two of part 1,
/// or two of each.
pub fn random_walk_pair(r: &mut ChaCha8Rng, h: &PartiteHypergraph) -> (Vec<usize>, Vec<usize>) {
    let counts = match r.gen_range(0..3) {
        0 => [1, 1],
        1 => [1, 2],
        _ => [2, 2],
    };
    let pick = |r: &mut ChaCha8Rng| -> Vec<usize> {
        (0..2)
            .flat_map(|p| {
                let mut idx = sample(r, h.part_sizes()[p], counts[p]).into_vec();
                idx.sort_unstable();
                idx.into_iter().map(move |i| h.vertex(p, i)).collect::<Vec<_>>()
            })
            .collect()
    };
    let w = pick(r);
    let w2 = pick(r);
    (w, w2)
}

/// A random edge `g` (global ids, one per part) and a tail `V` of one vertex per part, disjoint from `g`.
pub fn random_edge_and_tail(r: &mut ChaCha8Rng, h: &PartiteHypergraph) -> Option<(Vec<usize>, Vec<usize>)> {
    for _ in 0..200 {
        let g: Vec<usize> = (0..h.n()).map(|p| r.gen_range(0..h.part_sizes()[p])).collect();
        let v: Vec<usize> = (0..h.n()).map(|p| r.gen_range(0..h.part_sizes()[p])).collect();
        if h.has_edge(&g) && g.iter().zip(&v).all(|(a, b)| a != b) {
            let global = |t: &[usize]| t.iter().enumerate().map(|(p, &i)| h.vertex(p, i)).collect::<Vec<_>>();
            return Some((global(&g), global(&v)));
        }
    }
    None
}

/// For every cross tuple `g′` of `parts`: `g′ ++ V` has the order type of `g ++ V` and agrees with it on
/// every edge that uses a vertex of `V`.
pub fn brute_dichotomy(h: &PartiteHypergraph, v: &[usize], g: &[usize], parts: &[Vec<usize>]) -> bool {
    let w: Vec<usize> = g.iter().chain(v).copied().collect();
    let part = |x: usize| h.locate(x).unwrap().0;
    parts.iter().map(|p| p.iter().copied()).multi_cartesian_product().all(|g2| {
        let w2: Vec<usize> = g2.iter().chain(v).copied().collect();
        let same_order = (0..w.len())
            .tuple_combinations()
            .all(|(a, b)| (w[a] < w[b]) == (w2[a] < w2[b]) && (w[a] == w[b]) == (w2[a] == w2[b]));
        let mixed = (0..h.n())
            .map(|i| {
                std::iter::once(None)
                    .chain(v.iter().copied().filter(move |&x| part(x) == i).map(Some))
                    .collect::<Vec<_>>()
            })
            .multi_cartesian_product()
            .filter(|c| c.iter().any(Option::is_some))
            .all(|c| {
                let a: Vec<usize> = c.iter().zip(g).map(|(o, &x)| o.unwrap_or(x)).collect();
                let b: Vec<usize> = c.iter().zip(&g2).map(|(o, &x)| o.unwrap_or(x)).collect();
                h.has_edge_global(&a) == h.has_edge_global(&b)
            });
        same_order && mixed
    })
}
