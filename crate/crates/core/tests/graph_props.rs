mod common;

use bwopt::graph::{gomory_hu_tree, leaf_branch_peeling, min_s_cut, unit_multigraph, MetaTree, UndirectedView};
use bwopt::packing::min_s_cut_multigraph;
use common::{brute_cut, connected_edges, view};
use proptest::prelude::*;

fn brute_st(g: &UndirectedView, s: usize, t: usize) -> f64 {
    brute_cut(g, |side| side[s] != side[t])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cut_tree_edges_are_min_cuts(input in connected_edges(7, 9)) {
        let g = view(&input);
        for e in gomory_hu_tree(&g).edges {
            prop_assert_eq!(e.weight, brute_st(&g, e.u, e.v));
        }
    }

    #[test]
    fn path_minimum_is_pairwise_min_cut(input in connected_edges(7, 9)) {
        let g = view(&input);
        let tree = gomory_hu_tree(&g);
        for s in 0..g.n() {
            for t in s + 1..g.n() {
                prop_assert_eq!(tree.path_min(s, t), brute_st(&g, s, t));
            }
        }
    }

    #[test]
    fn s_cut_matches_enumeration(input in connected_edges(7, 9), mask in 0u32..128) {
        let g = view(&input);
        let s: Vec<usize> = (0..g.n()).filter(|&i| mask & (1 << i) != 0).collect();
        prop_assume!(s.len() >= 2);
        let brute = brute_cut(&g, |side| s.iter().any(|&a| side[a]) && s.iter().any(|&a| !side[a]));
        prop_assert_eq!(min_s_cut(&g, &s).unwrap(), brute);
    }

    #[test]
    fn multigraph_scales_cut_values(
        input in connected_edges(6, 9),
        tenths in prop::collection::vec(1u32..40, 21),
    ) {
        let (n, edges) = input;
        let edges: Vec<_> = edges.iter().zip(&tenths).map(|(&(u, v, _), &t)| (u, v, t as f64 / 10.0)).collect();
        let g = UndirectedView::new(n, edges).unwrap();
        let mg = unit_multigraph(&g, 1_000_000).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let scaled = min_s_cut_multigraph(&mg, &all).unwrap() as f64;
        let original = min_s_cut(&g, &all).unwrap();
        prop_assert!((scaled - mg.cut_factor() * original).abs() <= 1e-9 * scaled.max(1.0));
        let reduced = mg.reduced();
        let r = min_s_cut_multigraph(&reduced, &all).unwrap() as f64;
        prop_assert!((r - reduced.cut_factor() * original).abs() <= 1e-9 * r.max(1.0));
    }

    #[test]
    fn peeling_depth_is_logarithmic(n in 1usize..=512, picks in prop::collection::vec(any::<u32>(), 511)) {
        let edges: Vec<(usize, usize)> = (1..n).map(|v| (picks[v - 1] as usize % v, v)).collect();
        let depth = leaf_branch_peeling(&MetaTree::singletons(n, edges)).unwrap().depth();
        prop_assert!(depth <= ((n + 2) as f64).log2().floor() as usize);
    }
}
