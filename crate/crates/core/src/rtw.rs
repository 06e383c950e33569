//! Requirements traceability worksheet: the centralized table of variability
//! requirements and constraints, their formulas, and where they came from.
//!
//! On disk a worksheet is comma-separated text with a header row and ten
//! columns:
//!
//! ```text
//! id,kind,source_doc,source_loc,text,formula,abstract_feature,concrete_features,parent,status
//! ```
//!
//! `concrete_features` is `;`-separated, an empty `parent` means the model
//! root, and `status` is `ACTIVE` or `FLAGGED(reason)`. The root feature name
//! comes from a `# model: <name>` comment line; without it the root is
//! inferred as the only parent name no entry introduces.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::error::RtwError;
use crate::logic::{is_identifier, parse_formula, Formula};

pub const COLUMNS: [&str; 10] = [
    "id",
    "kind",
    "source_doc",
    "source_loc",
    "text",
    "formula",
    "abstract_feature",
    "concrete_features",
    "parent",
    "status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntryKind {
    Requirement,
    Constraint,
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryKind::Requirement => "REQUIREMENT",
            EntryKind::Constraint => "CONSTRAINT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "state", content = "reason", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Active,
    Flagged(String),
}

impl Status {
    pub fn is_active(&self) -> bool {
        matches!(self, Status::Active)
    }

    fn parse(s: &str) -> Option<Status> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("ACTIVE") || s.is_empty() {
            return Some(Status::Active);
        }
        let upper = s.to_ascii_uppercase();
        if !upper.starts_with("FLAGGED") {
            return None;
        }
        let rest = s["FLAGGED".len()..].trim();
        let reason = if let Some(inner) = rest.strip_prefix('(') {
            inner.strip_suffix(')')?.trim()
        } else if let Some(r) = rest.strip_prefix(':') {
            r.trim()
        } else if rest.is_empty() {
            ""
        } else {
            return None;
        };
        Some(Status::Flagged(reason.to_string()))
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Active => f.write_str("ACTIVE"),
            Status::Flagged(reason) if reason.is_empty() => f.write_str("FLAGGED"),
            Status::Flagged(reason) => write!(f, "FLAGGED({reason})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequirementEntry {
    pub id: String,
    pub kind: EntryKind,
    pub source_doc: String,
    pub source_loc: String,
    pub text: String,
    /// Formula as written in the worksheet.
    pub formula_text: String,
    #[serde(skip)]
    pub formula: Formula,
    pub abstract_feature: Option<String>,
    pub concrete_features: Vec<String>,
    /// `None` attaches under the model root.
    pub parent: Option<String>,
    pub status: Status,
}

impl RequirementEntry {
    /// Every feature this entry introduces, abstract first.
    pub fn introduced(&self) -> Vec<&str> {
        self.abstract_feature
            .iter()
            .chain(&self.concrete_features)
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Worksheet {
    pub model_name: String,
    pub entries: Vec<RequirementEntry>,
}

impl Worksheet {
    pub fn entry(&self, id: &str) -> Option<&RequirementEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Features introduced by active requirement entries, plus the root.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .entries
            .iter()
            .filter(|e| e.kind == EntryKind::Requirement && e.status.is_active())
            .flat_map(|e| e.introduced().into_iter().map(str::to_string))
            .collect();
        out.insert(self.model_name.clone());
        out
    }

    /// Serializes back to the on-disk format.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# model: {}\n", self.model_name);
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(COLUMNS).expect("in-memory write");
        for e in &self.entries {
            let kind = e.kind.to_string();
            let features = e.concrete_features.join(";");
            let status = e.status.to_string();
            w.write_record([
                e.id.as_str(),
                kind.as_str(),
                e.source_doc.as_str(),
                e.source_loc.as_str(),
                e.text.as_str(),
                e.formula_text.as_str(),
                e.abstract_feature.as_deref().unwrap_or(""),
                features.as_str(),
                e.parent.as_deref().unwrap_or(""),
                status.as_str(),
            ])
            .expect("in-memory write");
        }
        let bytes = w.into_inner().expect("in-memory flush");
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        out
    }
}

fn model_directive(content: &str) -> Option<String> {
    content.lines().find_map(|line| {
        let rest = line.trim().strip_prefix('#')?.trim();
        let name = rest.strip_prefix("model:")?.trim();
        (!name.is_empty()).then(|| name.to_string())
    })
}

fn features_list(cell: &str) -> Vec<String> {
    cell.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn optional(cell: &str) -> Option<String> {
    let cell = cell.trim();
    (!cell.is_empty()).then(|| cell.to_string())
}

/// Parses worksheet text. Formulas are parsed eagerly.
pub fn parse_rtw(content: &str) -> Result<Worksheet, RtwError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());

    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    for col in COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(RtwError::MissingColumn(col.to_string()));
        }
    }
    for (i, (found, expected)) in headers.iter().zip(COLUMNS).enumerate() {
        if found != expected {
            return Err(RtwError::ColumnOrder {
                position: i + 1,
                found: found.clone(),
                expected: expected.to_string(),
            });
        }
    }

    let mut entries: Vec<RequirementEntry> = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let cell = |i: usize| record.get(i).unwrap_or("").to_string();
        let id = cell(0);
        let invalid = |message: String| RtwError::Invalid {
            row,
            id: id.clone(),
            message,
        };
        if id.is_empty() {
            return Err(invalid("empty id".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(RtwError::DuplicateId { row, id });
        }
        let kind = match cell(1).to_ascii_uppercase().as_str() {
            "REQUIREMENT" => EntryKind::Requirement,
            "CONSTRAINT" => EntryKind::Constraint,
            _ => {
                return Err(RtwError::UnknownKind {
                    row,
                    id,
                    value: cell(1),
                })
            }
        };
        let formula_text = cell(5);
        let formula = parse_formula(&formula_text).map_err(|source| RtwError::Formula {
            row,
            id: id.clone(),
            source,
        })?;
        let abstract_feature = optional(&cell(6));
        let concrete_features = features_list(&cell(7));
        let parent = optional(&cell(8));
        let status = Status::parse(&cell(9)).ok_or_else(|| RtwError::UnknownStatus {
            row,
            id: id.clone(),
            value: cell(9),
        })?;

        for name in abstract_feature.iter().chain(&concrete_features).chain(&parent) {
            if !is_identifier(name) {
                return Err(invalid(format!("`{name}` is not a valid feature name")));
            }
        }
        let introduces = abstract_feature.is_some() || !concrete_features.is_empty();
        match kind {
            EntryKind::Constraint if introduces => {
                return Err(invalid("constraint entries must not introduce features".into()))
            }
            EntryKind::Requirement if !introduces => {
                return Err(invalid(
                    "requirement entries must introduce at least one feature".into(),
                ))
            }
            _ => {}
        }

        entries.push(RequirementEntry {
            id,
            kind,
            source_doc: cell(2),
            source_loc: cell(3),
            text: cell(4),
            formula_text,
            formula,
            abstract_feature,
            concrete_features,
            parent,
            status,
        });
    }

    let model_name = match model_directive(content) {
        Some(name) => name,
        None => infer_root(&entries).ok_or(RtwError::MissingModelName)?,
    };
    if !is_identifier(&model_name) {
        return Err(RtwError::MissingModelName);
    }
    Ok(Worksheet { model_name, entries })
}

fn infer_root(entries: &[RequirementEntry]) -> Option<String> {
    let introduced: HashSet<&str> = entries.iter().flat_map(|e| e.introduced()).collect();
    let candidates: BTreeSet<&str> = entries
        .iter()
        .filter_map(|e| e.parent.as_deref())
        .filter(|p| !introduced.contains(p))
        .collect();
    match candidates.len() {
        1 => candidates.into_iter().next().map(str::to_string),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    /// `None` only for worksheet-level findings such as an empty worksheet.
    pub entry: Option<String>,
    pub severity: Severity,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

pub const VALIDATION_FORMAT: &str = "varcore.validation/v1";

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn push(&mut self, entry: Option<&str>, severity: Severity, message: impl Into<String>) {
        self.findings.push(Finding {
            entry: entry.map(str::to_string),
            severity,
            message: message.into(),
        });
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            out.push_str(&format!(
                "{:<7} {:<10} {}\n",
                f.severity,
                f.entry.as_deref().unwrap_or("-"),
                f.message
            ));
        }
        let errors = self.errors().count();
        out.push_str(&format!("{} finding(s), {} error(s)\n", self.findings.len(), errors));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format": VALIDATION_FORMAT,
            "findings": self.findings,
        })
    }
}

/// `name_id` convention for abstract features: at least two
/// underscore-separated parts, the last carrying traceability metadata
/// (it must contain a digit), e.g. `Time_Function_T1001`.
pub fn follows_naming_convention(name: &str) -> bool {
    let parts: Vec<&str> = name.split('_').collect();
    parts.len() >= 2
        && parts.iter().all(|p| !p.is_empty())
        && parts.last().is_some_and(|p| p.chars().any(|c| c.is_ascii_digit()))
}

/// Identifiers in `entry`'s formula that no active requirement introduces.
pub fn undefined_references(w: &Worksheet, entry: &RequirementEntry) -> Vec<String> {
    let vocabulary = w.vocabulary();
    entry
        .formula
        .variables()
        .into_iter()
        .filter(|v| !vocabulary.contains(v))
        .collect()
}

pub fn validate_rtw(w: &Worksheet) -> ValidationReport {
    let mut report = ValidationReport::default();
    if w.entries.is_empty() {
        report.push(None, Severity::Error, "no entries");
        return report;
    }
    let vocabulary = w.vocabulary();
    let mut introduced_by: HashMap<&str, &str> = HashMap::new();
    for e in &w.entries {
        let id = Some(e.id.as_str());
        if let Status::Flagged(reason) = &e.status {
            let reason = if reason.is_empty() { "no reason given" } else { reason };
            report.push(
                id,
                Severity::Info,
                format!("flagged, excluded from synthesis: {reason}"),
            );
            continue;
        }
        if let Some(name) = &e.abstract_feature {
            if !follows_naming_convention(name) {
                report.push(
                    id,
                    Severity::Warning,
                    format!("abstract feature `{name}` does not follow the name_id convention"),
                );
            }
        }
        for name in e.introduced() {
            if name == w.model_name {
                report.push(
                    id,
                    Severity::Error,
                    format!("feature `{name}` redefines the model root"),
                );
            } else if let Some(first) = introduced_by.insert(name, &e.id) {
                report.push(
                    id,
                    Severity::Error,
                    format!("feature `{name}` already introduced by {first}"),
                );
            }
        }
        if let Some(parent) = &e.parent {
            if !vocabulary.contains(parent) {
                report.push(id, Severity::Error, format!("undefined parent: {parent}"));
            }
        }
        for missing in e.formula.variables().into_iter().filter(|v| !vocabulary.contains(v)) {
            report.push(id, Severity::Error, format!("undefined feature reference: {missing}"));
        }
    }
    report
}
