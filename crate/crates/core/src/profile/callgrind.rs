//! Reader for the Callgrind profile format.
//!
//! Only self cost is collected. Cost lines that directly follow a `calls=`
//! line describe the inclusive cost of that call and are skipped; the
//! callee's own cost lines carry its self cost. Name compression (`(id)`
//! definitions and references) is resolved for objects, files and
//! functions.

use std::collections::HashMap;
use std::io::BufRead;

use serde::Serialize;

use super::ProfileError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FunctionCost {
    pub name: String,
    pub self_cost: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CallgrindProfile {
    pub events: Vec<String>,
    /// Event used as the cost basis.
    pub event: String,
    /// Per-function self cost, in order of first appearance.
    pub functions: Vec<FunctionCost>,
}

impl CallgrindProfile {
    pub fn total(&self) -> u64 {
        self.functions.iter().map(|f| f.self_cost).sum()
    }
}

#[derive(Default)]
struct NameTable {
    names: HashMap<u64, String>,
}

impl NameTable {
    /// Resolves `(id) name`, `(id)` or a plain name.
    fn resolve(&mut self, spec: &str, line: usize) -> Result<String, ProfileError> {
        let spec = spec.trim();
        let Some(rest) = spec.strip_prefix('(') else {
            return Ok(spec.to_string());
        };
        let (id, name) = rest.split_once(')').ok_or_else(|| ProfileError::Format {
            line,
            message: format!("unterminated compressed name `{spec}`"),
        })?;
        let id: u64 = id.trim().parse().map_err(|_| ProfileError::Format {
            line,
            message: format!("invalid name id in `{spec}`"),
        })?;
        let name = name.trim();
        if name.is_empty() {
            self.names.get(&id).cloned().ok_or_else(|| ProfileError::Format {
                line,
                message: format!("reference to undefined name id ({id})"),
            })
        } else {
            self.names.insert(id, name.to_string());
            Ok(name.to_string())
        }
    }
}

fn is_position(token: &str) -> bool {
    if token == "*" {
        return true;
    }
    let body = token
        .strip_prefix('+')
        .or_else(|| token.strip_prefix('-'))
        .unwrap_or(token);
    if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        return !hex.is_empty() && hex.chars().all(|c| c.is_ascii_hexdigit());
    }
    !body.is_empty() && body.chars().all(|c| c.is_ascii_digit())
}

fn is_cost_line(line: &str) -> bool {
    matches!(line.as_bytes().first(), Some(b'0'..=b'9' | b'+' | b'-' | b'*'))
}

/// Parses one Callgrind output. `event` selects the cost column by name;
/// the first declared event is used when it is `None`.
pub fn parse_callgrind<R: BufRead>(
    reader: R,
    event: Option<&str>,
) -> Result<CallgrindProfile, ProfileError> {
    let mut events: Option<Vec<String>> = None;
    let mut event_index = 0usize;
    let mut positions = 1usize;
    let mut objects = NameTable::default();
    let mut files = NameTable::default();
    let mut functions = NameTable::default();
    let mut current: Option<String> = None;
    let mut pending_call = false;
    let mut order: Vec<FunctionCost> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for (n, raw) in reader.lines().enumerate() {
        let line_no = n + 1;
        let raw = raw?;
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let format_err = |message: String| ProfileError::Format {
            line: line_no,
            message,
        };

        if is_cost_line(line) {
            let Some(declared) = &events else {
                return Err(ProfileError::MissingEvents);
            };
            let mut tokens = line.split_whitespace();
            for _ in 0..positions {
                match tokens.next() {
                    Some(t) if is_position(t) => {}
                    Some(t) => return Err(format_err(format!("invalid position `{t}`"))),
                    None => return Err(format_err("missing position".into())),
                }
            }
            let mut values = Vec::with_capacity(declared.len());
            for t in tokens {
                let v: u64 = t
                    .parse()
                    .map_err(|_| format_err(format!("non-numeric cost `{t}`")))?;
                values.push(v);
            }
            if values.len() > declared.len() {
                return Err(format_err(format!(
                    "{} cost values for {} events",
                    values.len(),
                    declared.len()
                )));
            }
            if pending_call {
                pending_call = false;
                continue;
            }
            let Some(function) = &current else {
                return Err(format_err("cost line before any fn= line".into()));
            };
            let cost = values.get(event_index).copied().unwrap_or(0);
            let slot = match index.get(function) {
                Some(&i) => i,
                None => {
                    index.insert(function.clone(), order.len());
                    order.push(FunctionCost {
                        name: function.clone(),
                        self_cost: 0,
                    });
                    order.len() - 1
                }
            };
            let entry = &mut order[slot];
            entry.self_cost = entry
                .self_cost
                .checked_add(cost)
                .ok_or_else(|| format_err("cost overflow".into()))?;
            continue;
        }

        if pending_call {
            return Err(format_err("expected a cost line after calls=".into()));
        }

        if let Some((key, value)) = line.split_once('=') {
            if key.chars().all(|c| c.is_ascii_lowercase()) && !key.is_empty() {
                match key {
                    "ob" | "cob" => {
                        objects.resolve(value, line_no)?;
                    }
                    "fl" | "fi" | "fe" | "cfi" | "cfl" => {
                        files.resolve(value, line_no)?;
                    }
                    "fn" => current = Some(functions.resolve(value, line_no)?),
                    "cfn" => {
                        functions.resolve(value, line_no)?;
                    }
                    "calls" => {
                        let mut parts = value.split_whitespace();
                        match parts.next().map(str::parse::<u64>) {
                            Some(Ok(_)) => {}
                            _ => return Err(format_err(format!("invalid call count in `{line}`"))),
                        }
                        if parts.any(|t| !is_position(t)) {
                            return Err(format_err(format!("invalid call target in `{line}`")));
                        }
                        pending_call = true;
                    }
                    "jump" | "jcnd" => {}
                    other => return Err(format_err(format!("unknown key `{other}=`"))),
                }
                continue;
            }
        }

        if let Some((key, value)) = line.split_once(':') {
            let key = key.trim();
            if !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                match key {
                    "events" => {
                        let names: Vec<String> =
                            value.split_whitespace().map(str::to_string).collect();
                        if names.is_empty() {
                            return Err(format_err("empty events: header".into()));
                        }
                        event_index = match event {
                            Some(wanted) => names
                                .iter()
                                .position(|e| e == wanted)
                                .ok_or_else(|| ProfileError::UnknownEvent {
                                    event: wanted.to_string(),
                                    available: names.clone(),
                                })?,
                            None => 0,
                        };
                        events = Some(names);
                    }
                    "positions" => {
                        positions = value.split_whitespace().count();
                        if positions == 0 {
                            return Err(format_err("empty positions: header".into()));
                        }
                    }
                    _ => {}
                }
                continue;
            }
        }

        return Err(format_err(format!("unrecognised line `{line}`")));
    }

    if pending_call {
        return Err(ProfileError::Format {
            line: 0,
            message: "file ends after calls= without a cost line".into(),
        });
    }
    let events = events.ok_or(ProfileError::MissingEvents)?;
    Ok(CallgrindProfile {
        event: events[event_index].clone(),
        events,
        functions: order,
    })
}

/// Sums self costs of identically named functions across profiles,
/// keeping first-appearance order.
pub fn merge_costs<'a>(lists: impl IntoIterator<Item = &'a [FunctionCost]>) -> Vec<FunctionCost> {
    let mut order: Vec<FunctionCost> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for list in lists {
        for f in list {
            match index.get(&f.name) {
                Some(&i) => order[i].self_cost += f.self_cost,
                None => {
                    index.insert(f.name.clone(), order.len());
                    order.push(f.clone());
                }
            }
        }
    }
    order
}
