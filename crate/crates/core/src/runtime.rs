//! A deterministic in-process simulation of the message-passing protocol:
//! each agent sees only its own variable and the constraints it
//! participates in, exchanges UTIL and VALUE messages along the
//! pseudo-tree, and leaves behind a transcript that can be audited for
//! privacy leaks after the fact.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiled::compile_constraint;
use crate::cost::Cost;
use crate::dcop::{evaluate_assignment, Assignment, CostFunction, DcopInstance, Variable};
use crate::dpop::{PseudoTree, SolveStats};
use crate::exact::Solution;
use crate::util::UtilTable;

// ---------------------------------------------------------------------------
// Agent views
// ---------------------------------------------------------------------------

/// What a single agent is allowed to see: its own variable and every
/// constraint whose scope touches that variable. Shared constraints appear
/// in the views of all participants.
#[derive(Clone, Debug)]
pub struct AgentView {
    pub agent_id: String,
    pub variable: Variable,
    pub constraints: Vec<CostFunction>,
}

/// Splits a validated instance into per-agent views, ordered like the
/// instance's variables.
pub fn partition_views(instance: &DcopInstance) -> Vec<AgentView> {
    instance
        .variables
        .iter()
        .map(|v| AgentView {
            agent_id: v.owner.clone(),
            variable: v.clone(),
            constraints: instance
                .constraints
                .iter()
                .filter(|f| f.scope.iter().any(|s| *s == v.id))
                .cloned()
                .collect(),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Transcript
// ---------------------------------------------------------------------------

/// One message as it appeared on the wire.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    /// Sending agent.
    pub from: String,
    /// Receiving agent.
    pub to: String,
    #[serde(flatten)]
    pub payload: Payload,
}

/// Message body. UTIL tables flow from children to parents during the
/// bottom-up pass; VALUE bindings flow back down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Payload {
    #[serde(rename = "UTIL")]
    Util {
        /// Variables the table ranges over, in the sender's dimension order.
        dims: Vec<String>,
        /// Row-major table contents.
        cells: Vec<Cost>,
    },
    #[serde(rename = "VALUE")]
    Value {
        /// Decided values for the variables the receiver conditions on.
        bindings: BTreeMap<String, String>,
    },
}

/// Every message of one protocol run, in send order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transcript {
    pub records: Vec<TranscriptRecord>,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
}

impl Transcript {
    /// One JSON object per line, in send order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize cleanly"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Transcript, TranscriptError> {
        let mut records = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(raw)
                .map_err(|source| TranscriptError::Malformed { line: i + 1, source })?;
            records.push(record);
        }
        Ok(Transcript { records })
    }
}

// ---------------------------------------------------------------------------
// Protocol execution
// ---------------------------------------------------------------------------

enum Msg {
    /// UTIL table from a child, tagged with the child's index.
    Util(usize, UtilTable),
    /// Variable-index/value-index bindings for the receiver's conditioning set.
    Value(Vec<(usize, usize)>),
}

struct AgentState {
    inbox: VecDeque<Msg>,
    child_tables: Vec<Option<UtilTable>>,
    missing_children: usize,
    hint: Option<UtilTable>,
    known: Vec<usize>,
    decided: Option<usize>,
    evaluations: u64,
}

/// Runs the protocol over per-agent views and a pseudo-tree built from the
/// same instance. Agents are scheduled round-robin in declaration order
/// with first-in-first-out mailboxes, so two runs over the same inputs
/// produce byte-identical transcripts.
///
/// The solution and statistics match [`solve_dpop`](crate::dpop::solve_dpop)
/// on the originating instance; the transcript additionally records every
/// message for later inspection.
pub fn run_protocol(views: &[AgentView], tree: &PseudoTree) -> (Solution, SolveStats, Transcript) {
    let started = Instant::now();
    let n = views.len();
    assert_eq!(n, tree.ids_idx().len(), "views and tree must come from the same instance");
    for (view, id) in views.iter().zip(tree.ids_idx()) {
        assert_eq!(&view.variable.id, id, "views and tree must come from the same instance");
    }

    let ids: Vec<String> = views.iter().map(|v| v.variable.id.clone()).collect();
    let domains: Vec<Vec<String>> = views.iter().map(|v| v.variable.domain.clone()).collect();
    let sizes: Vec<usize> = domains.iter().map(|d| d.len()).collect();
    let var_index: HashMap<String, usize> =
        ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();

    // Constraints are computed at their deepest scope variable; ties cannot
    // happen because scope members always lie on one root path.
    let depth = |id: &str| tree.depth_of(id).expect("tree covers every variable");
    let placed: Vec<Vec<&CostFunction>> = views
        .iter()
        .map(|view| {
            view.constraints
                .iter()
                .filter(|f| {
                    let deepest = f
                        .scope
                        .iter()
                        .max_by_key(|s| depth(s))
                        .expect("scopes are non-empty");
                    *deepest == view.variable.id
                })
                .collect()
        })
        .collect();

    let parent = tree.parent_idx();
    let children = tree.children_idx();
    let separator = tree.separator_idx();

    let mut agents: Vec<AgentState> = (0..n)
        .map(|u| AgentState {
            inbox: VecDeque::new(),
            child_tables: vec![None; children[u].len()],
            missing_children: children[u].len(),
            hint: None,
            known: vec![0usize; n],
            decided: None,
            evaluations: 0,
        })
        .collect();

    let mut stats = SolveStats::default();
    let mut transcript = Transcript::default();
    let mut scratch = vec![0usize; n];

    // Deferred sends, applied after each agent's turn.
    let mut outbox: Vec<(usize, Msg)> = Vec::new();

    let compute_cube = |u: usize, state: &mut AgentState, scratch: &mut Vec<usize>| {
        let mut dims: Vec<usize> = separator[u].clone();
        dims.push(u);
        dims.sort_unstable();
        let dim_sizes: Vec<usize> = dims.iter().map(|&v| sizes[v]).collect();
        let mut cube = UtilTable::zeros(dims, dim_sizes);
        for f in &placed[u] {
            let compiled = compile_constraint(f, &var_index, &domains);
            cube.add_constraint(&compiled, scratch, &mut state.evaluations);
        }
        for slot in &mut state.child_tables {
            let table = slot.take().expect("all child tables arrived");
            cube.add_table(&table, scratch);
        }
        cube.project_min(u, scratch)
    };

    let record_util = |transcript: &mut Transcript, stats: &mut SolveStats, u: usize, p: usize, table: &UtilTable| {
        stats.message_count += 1;
        stats.util_cells += table.cell_count() as u64;
        transcript.records.push(TranscriptRecord {
            from: views[u].agent_id.clone(),
            to: views[p].agent_id.clone(),
            payload: Payload::Util {
                dims: table.dims().iter().map(|&d| ids[d].clone()).collect(),
                cells: table.cells().to_vec(),
            },
        });
    };

    let record_value = |transcript: &mut Transcript, stats: &mut SolveStats, u: usize, c: usize, bindings: &[(usize, usize)]| {
        stats.message_count += 1;
        stats.value_bindings += bindings.len() as u64;
        transcript.records.push(TranscriptRecord {
            from: views[u].agent_id.clone(),
            to: views[c].agent_id.clone(),
            payload: Payload::Value {
                bindings: bindings
                    .iter()
                    .map(|&(v, k)| (ids[v].clone(), domains[v][k].clone()))
                    .collect(),
            },
        });
    };

    // A decided agent pushes bindings down to each child in order.
    let fan_out = |u: usize,
                   state: &AgentState,
                   outbox: &mut Vec<(usize, Msg)>,
                   transcript: &mut Transcript,
                   stats: &mut SolveStats| {
        for &c in &children[u] {
            let bindings: Vec<(usize, usize)> = separator[c]
                .iter()
                .map(|&v| {
                    let value = if v == u {
                        state.decided.expect("sender has decided")
                    } else {
                        state.known[v]
                    };
                    (v, value)
                })
                .collect();
            record_value(transcript, stats, u, c, &bindings);
            outbox.push((c, Msg::Value(bindings)));
        }
    };

    let mut started_flags = vec![false; n];
    loop {
        let mut progressed = false;
        for u in 0..n {
            let state = &mut agents[u];

            if !started_flags[u] {
                started_flags[u] = true;
                progressed = true;
                if state.missing_children == 0 {
                    let hint = compute_cube(u, state, &mut scratch);
                    match parent[u] {
                        Some(p) => {
                            record_util(&mut transcript, &mut stats, u, p, &hint);
                            outbox.push((p, Msg::Util(u, hint.clone())));
                        }
                        None => {
                            let cell = hint.hint_index(&state.known);
                            state.decided = Some(hint.argmin_hint()[cell]);
                            fan_out(u, state, &mut outbox, &mut transcript, &mut stats);
                        }
                    }
                    state.hint = Some(hint);
                }
            }

            while let Some(msg) = state.inbox.pop_front() {
                progressed = true;
                match msg {
                    Msg::Util(child, table) => {
                        let slot = children[u]
                            .iter()
                            .position(|&c| c == child)
                            .expect("UTIL messages come from children");
                        state.child_tables[slot] = Some(table);
                        state.missing_children -= 1;
                        if state.missing_children == 0 {
                            let hint = compute_cube(u, state, &mut scratch);
                            match parent[u] {
                                Some(p) => {
                                    record_util(&mut transcript, &mut stats, u, p, &hint);
                                    outbox.push((p, Msg::Util(u, hint.clone())));
                                }
                                None => {
                                    let cell = hint.hint_index(&state.known);
                                    state.decided = Some(hint.argmin_hint()[cell]);
                                    fan_out(u, state, &mut outbox, &mut transcript, &mut stats);
                                }
                            }
                            state.hint = Some(hint);
                        }
                    }
                    Msg::Value(bindings) => {
                        for &(v, k) in &bindings {
                            state.known[v] = k;
                        }
                        let hint = state.hint.as_ref().expect("UTIL phase preceded VALUE phase");
                        let cell = hint.hint_index(&state.known);
                        state.decided = Some(hint.argmin_hint()[cell]);
                        fan_out(u, state, &mut outbox, &mut transcript, &mut stats);
                    }
                }
            }

            for (to, msg) in outbox.drain(..) {
                agents[to].inbox.push_back(msg);
            }
        }
        if !progressed {
            break;
        }
    }

    let assignment: Assignment = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let k = agents[i].decided.expect("protocol ran to completion");
            (id.clone(), domains[i][k].clone())
        })
        .collect();

    for state in &agents {
        stats.constraint_evaluations += state.evaluations;
    }
    stats.total_payload_cells = stats.util_cells + stats.value_bindings;

    // Re-assemble the instance the views came from to price the outcome.
    let mut constraints: Vec<CostFunction> = Vec::new();
    for view in views {
        for f in &view.constraints {
            if !constraints.iter().any(|g| g.id == f.id) {
                constraints.push(f.clone());
            }
        }
    }
    let eval_instance = DcopInstance {
        agents: views.iter().map(|v| v.agent_id.clone()).collect(),
        variables: views.iter().map(|v| v.variable.clone()).collect(),
        constraints,
    };
    let cost = evaluate_assignment(&eval_instance, &assignment).expect("assignment is complete");

    stats.wall_time = started.elapsed();
    (Solution { assignment, cost }, stats, transcript)
}

// ---------------------------------------------------------------------------
// Privacy audit
// ---------------------------------------------------------------------------

/// A privacy defect found in a transcript.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum PrivacyViolation {
    /// A UTIL table ranged over variables outside the sender's separator.
    /// In particular a sender must always project out its own variable
    /// before transmitting.
    #[error("message {message_index} from {sender}: UTIL table ranges over {leaked:?}, outside the sender's separator")]
    SeparatorViolation {
        message_index: usize,
        sender: String,
        leaked: Vec<String>,
    },
    /// A UTIL table reproduced one of the sender's private cost tables
    /// verbatim instead of an aggregate.
    #[error("message {message_index} from {sender}: UTIL table discloses private table {constraint}")]
    RawTableDisclosure {
        message_index: usize,
        sender: String,
        constraint: String,
    },
}

/// What the audit found. Clean means no violations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditReport {
    pub violations: Vec<PrivacyViolation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every UTIL message in a transcript against the declared views
/// and tree: tables may only range over the sender's separator, and may
/// never reproduce one of the sender's own cost tables cell for cell.
/// VALUE messages are exempt; they carry decisions already made public by
/// ancestors.
pub fn audit_privacy(transcript: &Transcript, views: &[AgentView], tree: &PseudoTree) -> AuditReport {
    let mut report = AuditReport::default();

    for (i, record) in transcript.records.iter().enumerate() {
        let Payload::Util { dims, cells } = &record.payload else {
            continue;
        };
        let Some(view) = views.iter().find(|v| v.agent_id == record.from) else {
            continue;
        };
        let own = view.variable.id.as_str();
        let separator = tree.separator_of(own);

        let leaked: Vec<String> = dims
            .iter()
            .filter(|d| !separator.contains(&d.as_str()))
            .cloned()
            .collect();
        if !leaked.is_empty() {
            report.violations.push(PrivacyViolation::SeparatorViolation {
                message_index: i,
                sender: record.from.clone(),
                leaked,
            });
        }

        if dims.len() == 1 && dims[0] == own {
            for f in &view.constraints {
                if f.scope.len() != 1 || f.scope[0] != own {
                    continue;
                }
                let private: Vec<Option<Cost>> = view
                    .variable
                    .domain
                    .iter()
                    .map(|value| f.cost_of(&[value]))
                    .collect();
                let matches = private.len() == cells.len()
                    && private
                        .iter()
                        .zip(cells)
                        .all(|(p, c)| p.as_ref() == Some(c));
                if matches {
                    report.violations.push(PrivacyViolation::RawTableDisclosure {
                        message_index: i,
                        sender: record.from.clone(),
                        constraint: f.id.clone(),
                    });
                }
            }
        }
    }

    report
}
