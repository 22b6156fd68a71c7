//! Small ready-made problems used across tests, documentation, and the
//! shipped data files.

use crate::coord::{CoordinationSpec, LocalConcern, SharedConcern, StrategySet};
use crate::cost::Cost;
use crate::dcop::{CostFunction, DcopInstance, TableEntry, Variable};

fn entry(values: &[&str], cost: Cost) -> TableEntry {
    TableEntry {
        values: values.iter().map(|s| s.to_string()).collect(),
        cost,
    }
}

fn finite(value: f64) -> Cost {
    Cost::new(value).expect("fixture costs are well-formed")
}

/// Two video-streaming services picking a delivery configuration each.
///
/// `x1` chooses between `A-1` (cost 10) and `A-2` (cost 0); `x2` between
/// `B-1` (cost 15) and `B-2` (cost 0). A shared compatibility constraint
/// forbids `B-2` outright, so the optimum is `(A-2, B-1)` at cost 15 even
/// though each service would locally prefer otherwise.
pub fn video_service_instance() -> DcopInstance {
    DcopInstance {
        agents: vec!["a1".into(), "a2".into()],
        variables: vec![
            Variable {
                id: "x1".into(),
                domain: vec!["A-1".into(), "A-2".into()],
                owner: "a1".into(),
            },
            Variable {
                id: "x2".into(),
                domain: vec!["B-1".into(), "B-2".into()],
                owner: "a2".into(),
            },
        ],
        constraints: vec![
            CostFunction {
                id: "f1".into(),
                scope: vec!["x1".into()],
                entries: vec![entry(&["A-1"], finite(10.0)), entry(&["A-2"], finite(0.0))],
                default: None,
            },
            CostFunction {
                id: "f2".into(),
                scope: vec!["x2".into()],
                entries: vec![entry(&["B-1"], finite(15.0)), entry(&["B-2"], finite(0.0))],
                default: None,
            },
            CostFunction {
                id: "f3".into(),
                scope: vec!["x1".into(), "x2".into()],
                entries: vec![
                    entry(&["A-1", "B-2"], Cost::INFINITY),
                    entry(&["A-2", "B-2"], Cost::INFINITY),
                ],
                default: Some(Cost::ZERO),
            },
        ],
    }
}

/// The same problem phrased as a coordination spec: two self-adaptive
/// services (`SV1`, `SV2`), one private preference concern each, and one
/// shared consistency concern. Compiling it yields a two-variable instance
/// shaped exactly like [`video_service_instance`].
pub fn video_service_spec() -> CoordinationSpec {
    CoordinationSpec {
        sas: vec![
            StrategySet {
                id: "SV1".into(),
                strategies: vec!["A-1".into(), "A-2".into()],
            },
            StrategySet {
                id: "SV2".into(),
                strategies: vec!["B-1".into(), "B-2".into()],
            },
        ],
        local_concerns: vec![
            LocalConcern {
                sas: "SV1".into(),
                costs: [("A-1".to_string(), finite(10.0)), ("A-2".to_string(), finite(0.0))]
                    .into_iter()
                    .collect(),
            },
            LocalConcern {
                sas: "SV2".into(),
                costs: [("B-1".to_string(), finite(15.0)), ("B-2".to_string(), finite(0.0))]
                    .into_iter()
                    .collect(),
            },
        ],
        shared_concerns: vec![SharedConcern {
            scope: vec!["SV1".into(), "SV2".into()],
            entries: vec![
                entry(&["A-1", "B-2"], Cost::INFINITY),
                entry(&["A-2", "B-2"], Cost::INFINITY),
            ],
            default: Some(Cost::ZERO),
        }],
    }
}
