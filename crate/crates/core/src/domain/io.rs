//! JSON domain and error-model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Action, ActionId, DetDomain, Domain, DomainError, DomainState, ErrorModel, NeighborRule, NondetDomain,
    StateId, Transition, DO_NOTHING,
};
use crate::ltlf::{Interpretation, PropSet};

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Det,
    Nondet,
}

#[derive(Debug, Serialize, Deserialize)]
struct StateRec {
    id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    label: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ActionRec {
    id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error_free: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransRec {
    from: u64,
    action: u64,
    to: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DomainFile {
    kind: Kind,
    #[serde(default)]
    props: Vec<String>,
    states: Vec<StateRec>,
    actions: Vec<ActionRec>,
    initial: u64,
    transitions: Vec<TransRec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DistEntry {
    action: u64,
    p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RowRec {
    state: u64,
    intended: u64,
    dist: Vec<DistEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NeighborsRec {
    All,
    SharedCoordinate(Vec<Option<(u32, u32)>>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ErrorsFile {
    Explicit {
        rows: Vec<RowRec>,
    },
    UniformSlip {
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        neighbors: Option<NeighborsRec>,
    },
}

fn schema_error(e: serde_json::Error) -> DomainError {
    DomainError::Schema {
        field: e.to_string(),
        location: format!("line {} column {}", e.line(), e.column()),
    }
}

fn narrow(v: u64, field: &str) -> Result<u32, DomainError> {
    u32::try_from(v).map_err(|_| DomainError::Schema {
        field: field.to_string(),
        location: format!("id {v} out of range"),
    })
}

fn read(path: &Path) -> Result<String, DomainError> {
    std::fs::read_to_string(path).map_err(|e| DomainError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, text: &str) -> Result<(), DomainError> {
    std::fs::write(path, text).map_err(|e| DomainError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Decodes and validates a domain from JSON text.
pub fn parse_domain(text: &str) -> Result<Domain, DomainError> {
    let file: DomainFile = serde_json::from_str(text).map_err(schema_error)?;
    let props = PropSet::new(&file.props).map_err(|e| DomainError::Schema {
        field: "props".into(),
        location: e.to_string(),
    })?;
    let mut states = Vec::with_capacity(file.states.len());
    for s in file.states {
        let label = Interpretation::from_names(&props, &s.label).map_err(|e| DomainError::Schema {
            field: "states.label".into(),
            location: format!("state {}: {e}", s.id),
        })?;
        states.push(DomainState {
            id: narrow(s.id, "states.id")?,
            label,
            name: s.name,
        });
    }
    let mut actions = Vec::with_capacity(file.actions.len());
    for a in file.actions {
        let error_free = a
            .error_free
            .unwrap_or_else(|| a.name.as_deref() == Some(DO_NOTHING));
        actions.push(Action {
            id: narrow(a.id, "actions.id")?,
            name: a.name,
            error_free,
        });
    }
    let n_states = states.len();
    let n_actions = actions.len();
    let mut transitions = Vec::with_capacity(file.transitions.len());
    for t in file.transitions {
        let from = state_id(t.from, n_states, "transition.from")?;
        if t.action >= n_actions as u64 {
            return Err(DomainError::DanglingActionRef {
                action: t.action,
                count: n_actions,
                context: format!("transition from state {from}"),
            });
        }
        let to = t
            .to
            .iter()
            .map(|s| state_id(*s, n_states, &format!("transition ({from}, {})", t.action)))
            .collect::<Result<Vec<_>, _>>()?;
        transitions.push(Transition {
            from,
            action: t.action as ActionId,
            to,
        });
    }
    let initial = state_id(file.initial, n_states, "initial")?;
    let dom = NondetDomain::new(props, states, actions, initial, transitions)?;
    match file.kind {
        Kind::Det => Ok(Domain::Det(DetDomain::try_from(dom)?)),
        Kind::Nondet => Ok(Domain::Nondet(dom)),
    }
}

fn state_id(v: u64, count: usize, context: &str) -> Result<StateId, DomainError> {
    if v >= count as u64 {
        return Err(DomainError::DanglingStateRef {
            state: v,
            count,
            context: context.to_string(),
        });
    }
    Ok(v as StateId)
}

pub fn load_domain(path: impl AsRef<Path>) -> Result<Domain, DomainError> {
    parse_domain(&read(path.as_ref())?)
}

pub fn domain_to_json(dom: &Domain) -> String {
    let n = dom.as_nondet();
    let file = DomainFile {
        kind: if dom.is_det() { Kind::Det } else { Kind::Nondet },
        props: n.props().iter().map(|p| p.to_string()).collect(),
        states: n
            .states()
            .iter()
            .map(|s| StateRec {
                id: s.id as u64,
                name: s.name.clone(),
                label: s.label.iter().map(|p| p.to_string()).collect(),
            })
            .collect(),
        actions: n
            .actions()
            .iter()
            .map(|a| ActionRec {
                id: a.id as u64,
                name: a.name.clone(),
                error_free: Some(a.error_free),
            })
            .collect(),
        initial: n.initial() as u64,
        transitions: n
            .transitions()
            .map(|t| TransRec {
                from: t.from as u64,
                action: t.action as u64,
                to: t.to.iter().map(|s| *s as u64).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("domain serializes")
}

pub fn save_domain(dom: &Domain, path: impl AsRef<Path>) -> Result<(), DomainError> {
    write(path.as_ref(), &domain_to_json(dom))
}

/// Decodes an error-model file. Validation against a domain is separate.
pub fn parse_errors(text: &str) -> Result<ErrorModel, DomainError> {
    let file: ErrorsFile = serde_json::from_str(text).map_err(schema_error)?;
    Ok(match file {
        ErrorsFile::Explicit { rows } => {
            let mut out = Vec::with_capacity(rows.len());
            for r in rows {
                let dist = r
                    .dist
                    .iter()
                    .map(|e| Ok((narrow(e.action, "rows.dist.action")?, e.p)))
                    .collect::<Result<Vec<_>, DomainError>>()?;
                out.push((narrow(r.state, "rows.state")?, narrow(r.intended, "rows.intended")?, dist));
            }
            ErrorModel::explicit(out)
        }
        ErrorsFile::UniformSlip { p, neighbors } => ErrorModel::UniformSlip {
            p,
            neighbors: match neighbors {
                None | Some(NeighborsRec::All) => NeighborRule::AllOthers,
                Some(NeighborsRec::SharedCoordinate(c)) => NeighborRule::SharedCoordinate(c),
            },
        },
    })
}

pub fn load_errors(path: impl AsRef<Path>) -> Result<ErrorModel, DomainError> {
    parse_errors(&read(path.as_ref())?)
}

pub fn errors_to_json(e: &ErrorModel) -> String {
    let file = match e {
        ErrorModel::Explicit(rows) => {
            let mut keys: Vec<_> = rows.keys().copied().collect();
            keys.sort();
            ErrorsFile::Explicit {
                rows: keys
                    .into_iter()
                    .map(|(s, a)| RowRec {
                        state: s as u64,
                        intended: a as u64,
                        dist: rows[&(s, a)]
                            .iter()
                            .map(|(b, p)| DistEntry { action: *b as u64, p: *p })
                            .collect(),
                    })
                    .collect(),
            }
        }
        ErrorModel::UniformSlip { p, neighbors } => ErrorsFile::UniformSlip {
            p: *p,
            neighbors: Some(match neighbors {
                NeighborRule::AllOthers => NeighborsRec::All,
                NeighborRule::SharedCoordinate(c) => NeighborsRec::SharedCoordinate(c.clone()),
            }),
        },
    };
    serde_json::to_string_pretty(&file).expect("error model serializes")
}

pub fn save_errors(e: &ErrorModel, path: impl AsRef<Path>) -> Result<(), DomainError> {
    write(path.as_ref(), &errors_to_json(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_STATE: &str = r#"{
        "kind": "det",
        "props": ["goal"],
        "states": [{"id": 0, "label": []}, {"id": 1, "name": "done", "label": ["goal"]}],
        "actions": [{"id": 0, "name": "go"}],
        "initial": 0,
        "transitions": [{"from": 0, "action": 0, "to": [1]}, {"from": 1, "action": 0, "to": [1]}]
    }"#;

    #[test]
    fn loads_det_domain() {
        let d = parse_domain(TWO_STATE).unwrap();
        let Domain::Det(d) = d else { panic!("expected det") };
        assert_eq!(d.num_states(), 2);
        assert_eq!(d.successor(0, 0), Some(1));
        assert_eq!(d.states()[1].name.as_deref(), Some("done"));
    }

    #[test]
    fn empty_successor_list() {
        let text = TWO_STATE.replace(r#""to": [1]}, {"from": 1"#, r#""to": []}, {"from": 1"#);
        assert_eq!(
            parse_domain(&text).unwrap_err(),
            DomainError::EmptySuccessorSet { state: 0, action: 0 }
        );
    }

    #[test]
    fn dangling_reference() {
        let text = TWO_STATE.replace(r#""to": [1]}, {"from": 1"#, r#""to": [7]}, {"from": 1"#);
        assert!(matches!(
            parse_domain(&text).unwrap_err(),
            DomainError::DanglingStateRef { state: 7, count: 2, .. }
        ));
    }

    #[test]
    fn det_kind_rejects_branching() {
        let text = TWO_STATE.replace(r#""to": [1]}, {"from": 1"#, r#""to": [0, 1]}, {"from": 1"#);
        assert!(matches!(parse_domain(&text).unwrap_err(), DomainError::Schema { .. }));
        let text = text.replace(r#""kind": "det""#, r#""kind": "nondet""#);
        assert!(matches!(parse_domain(&text).unwrap(), Domain::Nondet(_)));
    }

    #[test]
    fn schema_errors_have_locations() {
        match parse_domain(r#"{"kind": "det", "states": 3}"#).unwrap_err() {
            DomainError::Schema { location, .. } => assert!(location.contains("line 1")),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn domain_round_trip() {
        let d = parse_domain(TWO_STATE).unwrap();
        assert_eq!(parse_domain(&domain_to_json(&d)).unwrap(), d);
    }

    #[test]
    fn error_files() {
        let e = parse_errors(r#"{"kind": "uniform_slip", "p": 0.05}"#).unwrap();
        assert_eq!(e, ErrorModel::uniform(0.05));
        let e = parse_errors(
            r#"{"kind": "explicit", "rows": [{"state": 0, "intended": 0, "dist": [{"action": 0, "p": 1.0}]}]}"#,
        )
        .unwrap();
        assert_eq!(parse_errors(&errors_to_json(&e)).unwrap(), e);
        let e = parse_errors(r#"{"kind": "uniform_slip", "p": 0.1, "neighbors": {"shared_coordinate": [[0, 1], null]}}"#)
            .unwrap();
        assert_eq!(
            e,
            ErrorModel::UniformSlip {
                p: 0.1,
                neighbors: NeighborRule::SharedCoordinate(vec![Some((0, 1)), None])
            }
        );
        assert!(parse_errors(r#"{"kind": "gaussian"}"#).is_err());
    }
}
