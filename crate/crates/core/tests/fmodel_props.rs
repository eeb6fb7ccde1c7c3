mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use vcn::fmodel::{
    check_encodes, check_indiscernible, count_types, dim_phi, eval_formula, param_box, phi_class, pi_phi,
    pi_phi_sampled, verify_ipn_witness, FiniteStructure, IndexLanguage, IndexedFamily, QfFormula, Relation,
};
use vcn::hyperrand::diagonal_hypergraph;
use vcn::setsys::{is_shattered, shatter_fn, trace, vc_n_dim};
use vcn::zar::PartiteHypergraph;

struct Instance {
    m: FiniteStructure,
    phi: QfFormula,
    blocks: Vec<usize>,
    domain: usize,
}

fn instance(seed: u64, n: usize, x_len: usize) -> Instance {
    let mut r = rng(seed);
    let domain = r.gen_range(2..=4);
    let mut blocks = vec![x_len];
    blocks.extend(std::iter::repeat_n(1, n));
    let m = random_structure(&mut r, domain);
    let phi = random_formula(&mut r, &blocks);
    Instance { m, phi, blocks, domain }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evaluation_matches_tree_oracle(seed: u64, n in 1usize..=3, x_len in 1usize..=2, picks: [u64; 4]) {
        let inst = instance(seed, n, x_len);
        let assignment: Vec<Vec<usize>> = inst
            .blocks
            .iter()
            .zip(picks.iter().cycle())
            .map(|(&l, &p)| (0..l).map(|i| (p as usize >> (3 * i)) % inst.domain).collect())
            .collect();
        prop_assert_eq!(
            eval_formula(&inst.m, &inst.phi, &assignment).unwrap(),
            eval_expr(&inst.m, inst.phi.body(), &assignment)
        );
    }

    #[test]
    fn printed_formula_parses_back(seed: u64, n in 1usize..=3, x_len in 1usize..=2) {
        let inst = instance(seed, n, x_len);
        let back = QfFormula::parse_with_blocks(&inst.phi.to_string(), inst.blocks.clone()).unwrap();
        prop_assert_eq!(back, inst.phi);
    }

    #[test]
    fn types_coincide_with_traces(seed: u64, n in 1usize..=2, x_len in 1usize..=2, size_pick: usize) {
        let inst = instance(seed, n, x_len);
        let class = phi_class(&inst.m, &inst.phi).unwrap();
        let size = size_pick % (inst.domain + 1);
        let params = random_params(&mut rng(seed ^ 0x5eed), inst.domain, &inst.blocks[1..], size);
        let delta = std::slice::from_ref(&inst.phi);
        let types = count_types(&inst.m, delta, &params).unwrap().count;
        let traced = trace(&class, &param_box(&inst.m, &params).unwrap()).unwrap().len();
        prop_assert_eq!(types, traced);
        prop_assert_eq!(types, brute_type_count(&inst.m, delta, &params));
        for s in 0..=inst.domain {
            let p = pi_phi(&inst.m, delta, s).unwrap();
            prop_assert_eq!(p, shatter_fn(&class, s).unwrap());
            prop_assert!(p as u128 <= 1u128 << s.pow(n as u32));
            prop_assert!(pi_phi_sampled(&inst.m, delta, s, 8, seed).unwrap() <= p);
        }
    }

    #[test]
    fn dimension_matches_class_and_survives_parameter_permutation(seed: u64, x_len in 1usize..=2) {
        let inst = instance(seed, 2, x_len);
        let d = dim_phi(&inst.m, &inst.phi, inst.domain).unwrap();
        prop_assert_eq!(d, vc_n_dim(&phi_class(&inst.m, &inst.phi).unwrap(), inst.domain).unwrap());
        let swapped = inst.phi.permute_parameters(&[1, 0]).unwrap();
        prop_assert_eq!(dim_phi(&inst.m, &swapped, inst.domain).unwrap(), d);
        for s in 0..=inst.domain {
            prop_assert_eq!(
                pi_phi(&inst.m, std::slice::from_ref(&swapped), s).unwrap(),
                pi_phi(&inst.m, std::slice::from_ref(&inst.phi), s).unwrap()
            );
        }
    }

    #[test]
    fn type_count_algebra(seed: u64, n in 1usize..=2) {
        let inst = instance(seed, n, 1);
        let psi = random_formula(&mut rng(seed.wrapping_add(1)), &inst.blocks);
        let both = inst.phi.and(&psi).unwrap();
        let either = inst.phi.or(&psi).unwrap();
        for s in 0..=inst.domain {
            let pi = |d: &[QfFormula]| pi_phi(&inst.m, d, s).unwrap();
            let (p, q) = (pi(std::slice::from_ref(&inst.phi)), pi(std::slice::from_ref(&psi)));
            let pair = pi(&[inst.phi.clone(), psi.clone()]);
            prop_assert_eq!(pi(&[inst.phi.negate()]), p);
            prop_assert!(pi(std::slice::from_ref(&both)) <= pair);
            prop_assert!(pi(std::slice::from_ref(&either)) <= pair);
            prop_assert!(pair <= p * q);
        }
    }

    #[test]
    fn ipn_witness_agrees_with_shattering(seed: u64, size in 1usize..=2) {
        let inst = instance(seed, 2, 1);
        let class = phi_class(&inst.m, &inst.phi).unwrap();
        let params = random_params(&mut rng(seed ^ 0xabc), inst.domain, &inst.blocks[1..], size);
        let bx = param_box(&inst.m, &params).unwrap();
        prop_assert_eq!(verify_ipn_witness(&inst.m, &inst.phi, &params, 1 << 20).unwrap(), is_shattered(&class, &bx).unwrap());
    }
}

#[test]
fn witness_budget_is_explicit() {
    let inst = instance(1, 2, 1);
    let params = random_params(&mut rng(2), inst.domain, &inst.blocks[1..], 2);
    assert!(matches!(verify_ipn_witness(&inst.m, &inst.phi, &params, 15), Err(vcn::Error::Budget(_))));
}

/// A graph used as its own model: `E(x, y0)` encodes it and its vertices are an indexed family.
fn graph_model(h: &PartiteHypergraph) -> (FiniteStructure, IndexedFamily) {
    let size = h.vertex_count();
    let mut m = FiniteStructure::new(size).unwrap();
    let mut tuples = Vec::new();
    for e in h.edges() {
        let (a, b) = (h.vertex(0, e[0]), h.vertex(1, e[1]));
        tuples.push(vec![a, b]);
        tuples.push(vec![b, a]);
    }
    m.add_relation("E", Relation::new(2, tuples).unwrap()).unwrap();
    (m, IndexedFamily::of_elements(&(0..size).collect::<Vec<_>>()))
}

#[test]
fn encoding_and_indiscernibility_on_a_graph_model() {
    let h = PartiteHypergraph::new(vec![3, 3], &[vec![0, 0], vec![0, 2], vec![1, 1], vec![2, 2]]).unwrap();
    let (m, fam) = graph_model(&h);
    let phi = QfFormula::parse("(E x y0)").unwrap();
    assert!(check_encodes(&m, &phi, &fam, &h).unwrap());
    assert!(!check_encodes(&m, &phi.negate(), &fam, &h).unwrap());
    let delta = [phi.clone()];
    assert!(check_indiscernible(&fam, &h, IndexLanguage::FULL, &m, &delta, 2).unwrap().holds());
    assert!(!check_indiscernible(&fam, &h, IndexLanguage::ORDER_PARTS, &m, &delta, 2).unwrap().holds());
}

#[test]
fn diagonal_family_is_not_order_indiscernible() {
    let h = PartiteHypergraph::new(vec![4, 4], &[vec![0, 1], vec![0, 3], vec![1, 2], vec![2, 3]]).unwrap();
    let g = diagonal_hypergraph(&h).unwrap();
    let mut m = FiniteStructure::new(4).unwrap();
    let tuples: Vec<Vec<usize>> = g.edges.iter().flat_map(|e| [e.clone(), vec![e[1], e[0]]]).collect();
    m.add_relation("E", Relation::new(2, tuples).unwrap()).unwrap();
    let fam = IndexedFamily::of_elements(&[0, 1, 2, 3]);
    let delta = [QfFormula::parse("(E x y0)").unwrap()];
    assert!(check_indiscernible(&fam, &g, IndexLanguage::FULL, &m, &delta, 2).unwrap().holds());
    let order_only = IndexLanguage { order: true, ..Default::default() };
    assert!(!check_indiscernible(&fam, &g, order_only, &m, &delta, 2).unwrap().holds());
}
