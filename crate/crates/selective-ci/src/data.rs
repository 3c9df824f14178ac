//! Group-level input data: a CSV file with header `group,value,scale,selected`.
//!
//! `selected` is optional per row; `1`, `true`, `yes` or `x` mark the group
//! of interest and an empty cell, `0`, `false` or `no` leave it unmarked.

use std::io::Read;

use serde::Deserialize;

use selective_ci_core::SelectedDatum;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("need at least two groups, found {0}")]
    TooFewGroups(usize),
    #[error("no group is marked as selected (use --select-max to pick the largest value)")]
    NoSelection,
    #[error("more than one group is marked as selected (lines {0:?})")]
    MultipleSelected(Vec<u64>),
    #[error("selection event not satisfied: selected group {group} has value {y}, but {other} has {x}")]
    SelectionNotSatisfied {
        group: String,
        y: f64,
        other: String,
        x: f64,
    },
    #[error("the largest value {value} is shared by groups {a} and {b}")]
    Tie { value: f64, a: String, b: String },
}

#[derive(Debug, Deserialize)]
struct Row {
    group: String,
    value: f64,
    scale: f64,
    #[serde(default)]
    selected: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub name: String,
    pub value: f64,
    pub scale: f64,
    pub marked: bool,
    pub line: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupData {
    pub groups: Vec<Group>,
}

/// The selected group and the data handed to the procedures.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub name: String,
    pub datum: SelectedDatum,
    pub tau: Vec<f64>,
    pub sigma: f64,
    /// Names of the unselected groups, in the order of `datum.x`.
    pub others: Vec<String>,
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" | "n" => Some(false),
        "1" | "true" | "yes" | "y" | "x" => Some(true),
        _ => None,
    }
}

pub fn read_groups<R: Read>(input: R) -> Result<GroupData, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| DataError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut groups = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: Row = rec.deserialize(Some(&headers)).map_err(|e| DataError::Parse {
            line,
            message: match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            },
        })?;
        let bad = |message: String| DataError::Parse { line, message };
        if !row.value.is_finite() {
            return Err(bad(format!("value must be finite, got {}", row.value)));
        }
        if !(row.scale > 0.0 && row.scale.is_finite()) {
            return Err(bad(format!("scale must be positive and finite, got {}", row.scale)));
        }
        let marked = match row.selected.as_deref() {
            None => false,
            Some(s) => parse_flag(s).ok_or_else(|| bad(format!("cannot read selected flag {s:?}")))?,
        };
        groups.push(Group {
            name: row.group,
            value: row.value,
            scale: row.scale,
            marked,
            line,
        });
    }
    if groups.len() < 2 {
        return Err(DataError::TooFewGroups(groups.len()));
    }
    Ok(GroupData { groups })
}

impl GroupData {
    /// The marked group, checked to hold the strictly largest value, or the
    /// argmax when `select_max` is set and no group is marked.
    pub fn selection(&self, select_max: bool) -> Result<Selection, DataError> {
        let marked: Vec<usize> = (0..self.groups.len()).filter(|&i| self.groups[i].marked).collect();
        let s = match marked.as_slice() {
            [i] => *i,
            [] if select_max => {
                let best = (0..self.groups.len()).fold(0, |b, i| {
                    if self.groups[i].value > self.groups[b].value {
                        i
                    } else {
                        b
                    }
                });
                if let Some(t) =
                    (0..self.groups.len()).find(|&i| i != best && self.groups[i].value == self.groups[best].value)
                {
                    return Err(DataError::Tie {
                        value: self.groups[best].value,
                        a: self.groups[best].name.clone(),
                        b: self.groups[t].name.clone(),
                    });
                }
                best
            }
            [] => return Err(DataError::NoSelection),
            many => {
                return Err(DataError::MultipleSelected(
                    many.iter().map(|&i| self.groups[i].line).collect(),
                ))
            }
        };
        let sel = &self.groups[s];
        let others: Vec<&Group> = self
            .groups
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != s)
            .map(|(_, g)| g)
            .collect();
        if let Some(g) = others.iter().find(|g| !(g.value < sel.value)) {
            return Err(DataError::SelectionNotSatisfied {
                group: sel.name.clone(),
                y: sel.value,
                other: g.name.clone(),
                x: g.value,
            });
        }
        Ok(Selection {
            name: sel.name.clone(),
            datum: SelectedDatum {
                x: others.iter().map(|g| g.value).collect(),
                y: sel.value,
            },
            tau: others.iter().map(|g| g.scale).collect(),
            sigma: sel.scale,
            others: others.iter().map(|g| g.name.clone()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_and_selects() {
        let text = "group,value,scale,selected\na,0.0,1,\nb,1.0,1,1\n";
        let s = read_groups(text.as_bytes()).unwrap().selection(false).unwrap();
        assert_eq!(s.name, "b");
        assert_eq!(s.datum.x, vec![0.0]);
        assert_eq!((s.datum.y, s.sigma), (1.0, 1.0));
    }

    #[test]
    fn underdog_is_rejected() {
        let text = "group,value,scale,selected\na,2.0,1,\nb,1.0,1,yes\n";
        let err = read_groups(text.as_bytes()).unwrap().selection(false).unwrap_err();
        assert!(err.to_string().contains("selection event not satisfied"));
    }

    #[test]
    fn argmax_when_asked() {
        let text = "group,value,scale,selected\na,2.0,1,\nb,1.0,1,\n";
        let d = read_groups(text.as_bytes()).unwrap();
        assert!(matches!(d.selection(false), Err(DataError::NoSelection)));
        assert_eq!(d.selection(true).unwrap().name, "a");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "group,value,scale,selected\na,2.0,1,\nb,oops,1,\n";
        match read_groups(text.as_bytes()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "group,value,scale,selected\na,2.0,1,\nb,1.0,-1,\n";
        match read_groups(text.as_bytes()) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
