// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::HashSet;

use pipeforge::graph::SerializedGraph;
use pipeforge::layout::{columns, optimize_layout, COLUMN_PITCH, ROW_PITCH};
use pipeforge::Registry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check(graph: &SerializedGraph) -> Result<(), String> {
    let laid = optimize_layout(graph).map_err(|e| e.to_string())?;
    let col = |id: &str| {
        let n = laid.node(id).unwrap();
        (n.position.x / COLUMN_PITCH).round() as i64
    };
    for e in laid.edges() {
        if col(&e.source) >= col(&e.target) {
            return Err(format!("edge {} -> {} does not move right", e.source, e.target));
        }
    }
    let mut seen = HashSet::new();
    for n in &laid.nodes {
        let key = (n.position.x.to_bits(), n.position.y.to_bits());
        if !seen.insert(key) {
            return Err(format!("{} collides with another node", n.id));
        }
        if n.position.x % COLUMN_PITCH != 0.0 || n.position.y % ROW_PITCH != 0.0 {
            return Err(format!("{} is off the grid", n.id));
        }
    }
    let again = optimize_layout(&laid).map_err(|e| e.to_string())?;
    if again != laid {
        return Err("layout is not idempotent".into());
    }
    // Everything except positions is untouched.
    let strip = |g: &SerializedGraph| {
        let mut g = g.clone();
        for n in &mut g.nodes {
            n.position = Default::default();
        }
        g
    };
    if strip(&laid) != strip(graph) {
        return Err("layout changed more than positions".into());
    }
    let cols = columns(graph).map_err(|e| e.to_string())?;
    for (i, n) in laid.nodes.iter().enumerate() {
        if col(&n.id) != cols[i] as i64 {
            return Err(format!("{} is not in its longest-path column", n.id));
        }
    }
    Ok(())
}

#[test]
fn random_dags() {
    let reg = Registry::canonical();
    let mut failures = Vec::new();
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(0..=20);
        let g = common::random_dag(&mut rng, &reg, n, &[], 0.7);
        if let Err(e) = check(&g) {
            failures.push(format!("seed {seed}: {e}"));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn fixtures() {
    for name in common::FIXTURE_NAMES {
        let g = common::golden(name);
        check(&g).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(optimize_layout(&g).unwrap(), g, "{name} golden is already laid out");
    }
}

#[test]
fn scrambled_positions_are_restored() {
    let g = common::golden("news_summary");
    let mut scrambled = g.clone();
    for (i, n) in scrambled.nodes.iter_mut().enumerate() {
        n.position.x = -(i as f64) * 37.0;
        n.position.y = 1000.0 / (i as f64 + 1.0);
    }
    assert_eq!(optimize_layout(&scrambled).unwrap(), g);
}
