// SPDX-License-Identifier: Apache-2.0

mod common;

use pipeforge::graph::{SerializedGraph, SerializedNode};
use pipeforge::metric::{
    apply_script, interactions, interactions_with, oracle_interactions, verify_report, EditOp, MetricOptions,
};
use pipeforge::Registry;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair(seed: u64, reg: &Registry) -> (SerializedGraph, SerializedGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=6);
    let m = rng.random_range(0..=6);
    let g = common::random_dag(&mut rng, reg, n, &common::SMALL_PALETTE, 0.7);
    let t = common::random_dag(&mut rng, reg, m, &common::SMALL_PALETTE, 0.7);
    (g, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn search_matches_oracle(seed in any::<u64>(), cascade in any::<bool>()) {
        let reg = Registry::canonical();
        let (g, t) = pair(seed, &reg);
        let options = MetricOptions { cascade, ..MetricOptions::default() };
        let report = interactions_with(&g, &t, &reg, options).unwrap();
        prop_assert_eq!(report.count, oracle_interactions(&g, &t, cascade).unwrap());
        prop_assert_eq!(report.count, report.script.len());
        prop_assert_eq!(report.from_scratch, t.nodes.len() + t.edge_count());
        prop_assert!(verify_report(&g, &t, &report).is_ok(), "{:?}", verify_report(&g, &t, &report));
    }

    #[test]
    fn identity_and_from_scratch(seed in any::<u64>()) {
        let reg = Registry::canonical();
        let (g, _) = pair(seed, &reg);
        prop_assert_eq!(interactions(&g, &g.clone(), &reg).unwrap().count, 0);
        let empty = SerializedGraph::default();
        prop_assert_eq!(interactions(&empty, &g, &reg).unwrap().count, g.nodes.len() + g.edge_count());
    }
}

#[test]
fn whole_registry_pairs_match_oracle() {
    let reg = Registry::canonical();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, m) = (rng.random_range(0..=7), rng.random_range(0..=7));
        let g = common::random_dag(&mut rng, &reg, n, &[], 0.8);
        let t = common::random_dag(&mut rng, &reg, m, &[], 0.8);
        let report = interactions(&g, &t, &reg).unwrap();
        assert_eq!(report.count, oracle_interactions(&g, &t, true).unwrap(), "seed {seed}");
        verify_report(&g, &t, &report).unwrap();
    }
}

#[test]
fn news_pipeline_missing_two_processors() {
    let reg = Registry::canonical();
    let target = common::golden("news_summary");
    let mut generated = target.clone();
    for gone in ["url_to_html_1", "palm_textgen_1"] {
        generated.nodes.retain(|n| n.id != gone);
        for node in &mut generated.nodes {
            node.incoming_edges
                .retain(|_, edges| edges.iter().all(|e| e.source_node_id != gone));
        }
    }
    let report = interactions(&generated, &target, &reg).unwrap();
    assert_eq!(report.count, oracle_interactions(&generated, &target, true).unwrap());
    // Two nodes and their four edges come back.
    assert_eq!(report.count, 6);
    verify_report(&generated, &target, &report).unwrap();
}

#[test]
fn fixtures_against_each_other() {
    let reg = Registry::canonical();
    let small: Vec<_> = common::FIXTURE_NAMES
        .iter()
        .map(|n| common::golden(n))
        .filter(|g| g.nodes.len() <= 8)
        .collect();
    for g in &small {
        for t in &small {
            let report = interactions(g, t, &reg).unwrap();
            assert_eq!(report.count, oracle_interactions(g, t, true).unwrap());
            verify_report(g, t, &report).unwrap();
        }
    }
}

#[test]
fn empty_script_is_identity() {
    let g = common::golden("sunglasses_tryon");
    assert_eq!(apply_script(&g, &[]).unwrap(), g);
}

#[test]
fn deleting_a_node_takes_its_edges() {
    // face_landmark_1 has one incoming and one outgoing edge.
    let g = common::golden("sunglasses_tryon");
    let after = apply_script(
        &g,
        &[EditOp::DeleteNode {
            node_id: "face_landmark_1".into(),
        }],
    )
    .unwrap();
    assert_eq!(after.nodes.len(), 5);
    assert_eq!(after.edge_count(), 4);

    let reg = Registry::canonical();
    let report = interactions(&g, &after, &reg).unwrap();
    assert_eq!(report.count, 1);
    assert_eq!(
        report.script,
        [EditOp::DeleteNode {
            node_id: "face_landmark_1".into()
        }]
    );
}

#[test]
fn inapplicable_ops_name_their_index() {
    let g = common::golden("image_question");
    let script = [
        EditOp::DeleteNode {
            node_id: "pali_1".into(),
        },
        EditOp::DeleteNode {
            node_id: "pali_1".into(),
        },
    ];
    let err = apply_script(&g, &script).unwrap_err();
    assert_eq!(err.index, 1);

    let mut clash = g.clone();
    clash.nodes.push(SerializedNode::new("x_1", "pali"));
    let add = [EditOp::AddNode {
        node_id: "x_1".into(),
        node_spec_id: "pali".into(),
    }];
    assert_eq!(apply_script(&clash, &add).unwrap_err().index, 0);
}

#[test]
fn oracle_refuses_large_graphs() {
    let reg = Registry::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let big = common::random_dag(&mut rng, &reg, 9, &common::SMALL_PALETTE, 0.5);
    assert!(oracle_interactions(&big, &SerializedGraph::default(), true).is_err());
}
