mod common;

use common::*;
use itertools::Itertools;
use proptest::prelude::*;
use vcn::setsys::{shatter_fn, vc_n_dim};
use vcn::zar::{
    build_extremal_family, contains_complete_partite, erdos_bound, find_complete_partite, z22_lower_bound,
    zarankiewicz, PartiteHypergraph, ZarCache, DEFAULT_NODE_BUDGET,
};
use vcn::{ErdosBound32, ErdosBound64};

#[test]
fn bipartite_values_match_exhaustive_oracle() {
    for m in 1..=4 {
        for d in 1..=3 {
            let r = zarankiewicz(2, m, d, DEFAULT_NODE_BUDGET).unwrap();
            assert!(r.is_exact());
            assert_eq!(r.z, brute_zarankiewicz(2, m, d), "z_2({m},{d})");
        }
    }
}

#[test]
fn tripartite_values_match_exhaustive_oracle() {
    for d in 1..=3 {
        let r = zarankiewicz(3, 2, d, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.z, brute_zarankiewicz(3, 2, d), "z_3(2,{d})");
    }
}

#[test]
fn every_edge_set_of_size_z_contains_the_box() {
    for m in 1..=3 {
        for d in 1..=m {
            let z = zarankiewicz(2, m, d, DEFAULT_NODE_BUDGET).unwrap().z;
            assert!(every_edge_set_of_size_has_box(2, m, d, z), "z_2({m},{d}) = {z}");
            assert!(!every_edge_set_of_size_has_box(2, m, d, z - 1));
        }
    }
}

#[test]
fn table_is_monotone_and_witnesses_are_extremal() {
    let mut zs = ZarCache::new(DEFAULT_NODE_BUDGET);
    for n in 1..=2 {
        for m in 1..=4 {
            for d in 1..=4 {
                let z = zs.exact(n, m, d).unwrap();
                if n == 1 && d <= m {
                    assert_eq!(z, d);
                }
                if m > 1 {
                    assert!(zs.exact(n, m - 1, d).unwrap() <= z);
                }
                if d > 1 {
                    assert!(zs.exact(n, m, d - 1).unwrap() <= z);
                }
                let r = zs.get(n, m, d).unwrap();
                assert_eq!(r.extremal_witness.edge_count(), z - 1);
                assert!(!contains_complete_partite(&r.extremal_witness, d));
            }
        }
    }
}

#[test]
fn extremal_family_conclusions() {
    for (d, ms) in [(1, vec![1, 2, 3]), (2, vec![2, 3])] {
        let fam = build_extremal_family(2, d, &ms, DEFAULT_NODE_BUDGET).unwrap();
        let cap = fam.system.universe().min_part_size();
        assert_eq!(vc_n_dim(&fam.system, cap).unwrap(), d);
        for b in &fam.blocks {
            assert!(shatter_fn(&fam.system, b.m).unwrap() >= 1 << (b.z - 1));
        }
    }
}

#[test]
fn bound_evaluators_agree_across_float_widths() {
    let wide: ErdosBound64 = erdos_bound(2, 100, 2);
    let narrow: ErdosBound32 = erdos_bound(2, 100, 2);
    assert!(((wide.z_bound - narrow.z_bound as f64) / wide.z_bound).abs() < 1e-5);
    let low64: f64 = z22_lower_bound(4);
    let low32: f32 = z22_lower_bound(4);
    assert!((low64 - low32 as f64).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn complete_partite_search_matches_oracle(mask in 0u64..1 << 16, d in 1usize..=3) {
        let edges: Vec<Vec<usize>> = (0..16).filter(|c| mask >> c & 1 == 1).map(|c| vec![c / 4, c % 4]).collect();
        let h = PartiteHypergraph::new(vec![4, 4], &edges).unwrap();
        let oracle = (0..4)
            .combinations(d)
            .cartesian_product((0..4).combinations(d).collect::<Vec<_>>())
            .any(|(a, b)| a.iter().all(|&i| b.iter().all(|&j| mask >> (i * 4 + j) & 1 == 1)));
        prop_assert_eq!(contains_complete_partite(&h, d), oracle);
        if let Some(w) = find_complete_partite(&h, d) {
            for &i in &w[0] {
                for &j in &w[1] {
                    prop_assert!(h.has_edge(&[i, j]));
                }
            }
        }
    }
}
