use proptest::prelude::*;

use cartolab::clustering::ward_tree;
use cartolab::composition::{composition_features, quadrant_ratios};
use cartolab::image_ops::SemanticMode;
use cartolab::model::{MapRecord, SemanticMask, N_CLASSES};
use cartolab::net_stats::build_social_graph;
use cartolab::semiotics::{detect_complexes, ComplexParams, Sign, SignCorpus};
use cartolab::vectors::Vectors;

fn mask_strategy() -> impl Strategy<Value = SemanticMask> {
    (3u32..40, 3u32..40).prop_flat_map(|(w, h)| {
        prop::collection::vec(0u8..N_CLASSES as u8, (w * h) as usize)
            .prop_map(move |labels| SemanticMask::new(w, h, labels).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ward_heights_grow_towards_the_root(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 2..25)
    ) {
        let tree = ward_tree(&Vectors::from_rows(&pts)).unwrap();
        let n = tree.n_leaves;
        prop_assert_eq!(tree.merges.len(), n - 1);
        for m in &tree.merges {
            for child in [m.a, m.b] {
                if child >= n {
                    prop_assert!(tree.merges[child - n].height <= m.height + 1e-12);
                }
            }
        }
        prop_assert_eq!(tree.merges.last().unwrap().size, n);
    }

    #[test]
    fn quadrant_shares_are_simplices_and_features_finite(mask in mask_strategy()) {
        if let Ok(p) = quadrant_ratios(&mask) {
            for q in &p.ratios {
                prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(q.iter().all(|&v| v >= 0.0));
            }
            prop_assert!(composition_features(&p, 1e-4).iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn social_graph_has_no_self_loops(
        maps in prop::collection::vec(prop::collection::vec(0usize..8, 0..4), 1..30)
    ) {
        let records: Vec<MapRecord> = maps
            .iter()
            .enumerate()
            .map(|(i, cs)| MapRecord {
                creators: cs.iter().map(|c| format!("c{c}")).collect(),
                ..MapRecord::new(format!("m{i}"), "x.png", 1800 + i as i32)
            })
            .collect();
        let g = build_social_graph(&records);
        for (a, b, w) in g.graph.edges() {
            prop_assert!(a != b);
            prop_assert!(w >= 1.0);
        }
    }

    #[test]
    fn complexes_partition_their_clusters(
        raw in prop::collection::vec((0usize..20, 0usize..6), 0..400),
        seed in any::<u64>(),
    ) {
        let signs: Vec<Sign> = raw
            .iter()
            .map(|&(map, cluster)| Sign { map, cluster, mode: Some(SemanticMode::Built) })
            .collect();
        let corpus = SignCorpus { n_clusters: 6, map_ids: (0..20).map(|m| m.to_string()).collect(), signs };
        let params = ComplexParams { presence_min: 1, alpha: 0.2, bh: false, seed };
        let rep = detect_complexes(&corpus, &params);
        let mut seen = std::collections::BTreeSet::new();
        for c in &rep.complexes {
            for &m in &c.member_clusters {
                prop_assert!(seen.insert(m), "cluster {} in two complexes", m);
            }
        }
        for m in &rep.isolated {
            prop_assert!(!seen.contains(m));
        }
    }
}
