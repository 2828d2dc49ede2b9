//! Property tests for depth computation against a brute-force oracle.

use proptest::prelude::*;
use skein_core::{topological_depths, validate_dag, SubTask, TaskDag, VertexId};
use std::collections::BTreeMap;

/// Brute-force longest-path depth: recursively take 1 + max over parents.
/// Written independently of the Kahn-based implementation.
fn brute_force_depths(dag: &TaskDag) -> BTreeMap<VertexId, usize> {
    fn depth_of(
        dag: &TaskDag,
        v: &VertexId,
        memo: &mut BTreeMap<VertexId, usize>,
    ) -> usize {
        if let Some(&d) = memo.get(v) {
            return d;
        }
        let parents = dag.parents(v);
        let d = if parents.is_empty() {
            0
        } else {
            1 + parents
                .into_iter()
                .map(|p| depth_of(dag, &p.clone(), memo))
                .max()
                .unwrap()
        };
        memo.insert(v.clone(), d);
        d
    }

    let mut memo = BTreeMap::new();
    for v in dag.vertices.keys() {
        depth_of(dag, &v.clone(), &mut memo);
    }
    memo
}

/// Random dags stay acyclic by only drawing edges from lower to higher
/// vertex index.
fn arb_dag(max_vertices: usize) -> impl Strategy<Value = TaskDag> {
    (2..=max_vertices)
        .prop_flat_map(|n| {
            let edges = proptest::collection::vec((0..n, 0..n), 0..(n * 2));
            (Just(n), edges)
        })
        .prop_map(|(n, raw_edges)| {
            let vertices: Vec<SubTask> = (0..n)
                .map(|i| SubTask::new(format!("v{i:03}"), format!("task {i}")))
                .collect();
            let edges: Vec<(VertexId, VertexId)> = raw_edges
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    (
                        VertexId::new(format!("v{lo:03}")),
                        VertexId::new(format!("v{hi:03}")),
                    )
                })
                .collect();
            TaskDag::new(vertices, edges).unwrap()
        })
}

proptest! {
    #[test]
    fn depths_match_brute_force_longest_path(dag in arb_dag(50)) {
        let fast = topological_depths(&dag).unwrap();
        let slow = brute_force_depths(&dag);
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn edges_strictly_increase_depth(dag in arb_dag(50)) {
        let depths = topological_depths(&dag).unwrap();
        for (from, to) in &dag.edges {
            prop_assert!(depths[from] < depths[to]);
        }
    }

    #[test]
    fn wire_round_trip_is_identity(dag in arb_dag(20)) {
        let wire = skein_core::dag_to_wire(&dag);
        let text = wire.to_json();
        let parsed = skein_core::DagWire::from_json(&text).unwrap();
        let back = skein_core::dag_from_wire(&parsed).unwrap();
        // Fresh dags carry no runtime state, so the round trip is exact.
        prop_assert_eq!(dag, back);
    }

    #[test]
    fn random_dags_validate_clean(dag in arb_dag(30)) {
        prop_assert!(validate_dag(&dag).is_ok());
    }
}
