mod common;

use bwopt::graph::{unit_multigraph, UnitMultigraph};
use bwopt::packing::{min_s_cut_multigraph, pack_steiner_trees, verify_packing, Strategy as Packer};
use common::{connected_edges, gen};
use proptest::prelude::*;

fn small_multigraph() -> impl Strategy<Value = (UnitMultigraph, Vec<usize>)> {
    connected_edges(7, 3).prop_flat_map(|(n, edges)| {
        let mg = UnitMultigraph::from_multiplicities(n, &edges.iter().map(|&(u, v, w)| (u, v, w as u64)).collect::<Vec<_>>())
            .unwrap();
        (Just(mg), prop::collection::vec(any::<bool>(), n)).prop_map(|(mg, pick)| {
            let mut s: Vec<usize> = (0..mg.n()).filter(|&i| pick[i]).collect();
            if s.len() < 2 {
                s = vec![0, mg.n() - 1];
            }
            (mg, s)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn packings_verify_and_respect_the_cut((mg, s) in small_multigraph()) {
        for strategy in [Packer::Auto, Packer::Greedy] {
            let packing = pack_steiner_trees(&mg, &s, strategy).unwrap();
            let report = verify_packing(&packing, &mg, &s);
            prop_assert!(report.valid, "{:?}", report.failures);
            prop_assert!(packing.p() as u64 <= min_s_cut_multigraph(&mg, &s).unwrap());
            prop_assert!(packing.p() >= 1);
        }
    }

    #[test]
    fn dropping_a_tree_keeps_validity((mg, s) in small_multigraph(), pick in any::<usize>()) {
        let packing = pack_steiner_trees(&mg, &s, Packer::Auto).unwrap();
        prop_assume!(packing.p() >= 2);
        let drop = pick % packing.p();
        let keep: Vec<usize> = (0..packing.p()).filter(|&i| i != drop).collect();
        let report = verify_packing(&packing.subset(&keep), &mg, &s);
        prop_assert!(report.valid, "{:?}", report.failures);
    }
}

#[test]
fn complete_graphs_pack_half_the_nodes() {
    for n in 3..=10 {
        let g = gen(&format!("complete:{n}"));
        let mg = unit_multigraph(&g.undirected(), 1_000_000).unwrap().reduced();
        let all: Vec<usize> = (0..n).collect();
        let greedy = pack_steiner_trees(&mg, &all, Packer::Greedy).unwrap();
        assert!(greedy.p() >= n / 2, "K_{n}: {} trees", greedy.p());
        assert!(verify_packing(&greedy, &mg, &all).valid);
    }
}

#[test]
fn star_packing_reaches_the_cut() {
    for (leaves, b) in [(3, 1.0), (10, 1.0), (6, 2.5)] {
        let g = gen(&format!("star:{leaves}:b={b}"));
        let mg = unit_multigraph(&g.undirected(), 1_000_000).unwrap().reduced();
        let s = g.workers();
        let packing = pack_steiner_trees(&mg, &s, Packer::Auto).unwrap();
        assert_eq!(packing.p() as u64, min_s_cut_multigraph(&mg, &s).unwrap());
    }
}
