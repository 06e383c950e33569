//! Anomaly detection over a feature model, with explanations and
//! traceability back to worksheet entries.
//!
//! With `Φ` the model formula:
//!
//! * void model: `Φ` is unsatisfiable;
//! * dead feature `f`: `Φ ∧ f` is unsatisfiable;
//! * false-optional `f` under parent `p` (not mandatory, not dead):
//!   `Φ ∧ p ∧ ¬f` is unsatisfiable;
//! * redundant constraint `c`: `Φ` without `c`, conjoined with `¬c`, is
//!   unsatisfiable.
//!
//! Every check runs on one incremental solver. Each cross constraint `c_i`
//! is encoded as an equivalence literal `r_i` guarded by a selector `s_i`
//! (`s_i ⇒ r_i`), so any subset of constraints can be enabled by assumption.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::AnalysisError;
use crate::logic::{all_sat_with_limit, Encoder, Lit, DEFAULT_VARIABLE_LIMIT};
use crate::model::FeatureModel;
use crate::rtw::{EntryKind, Severity, Worksheet};

pub const ANALYSIS_FORMAT: &str = "varcore.analysis/v1";
pub const TRACE_FORMAT: &str = "varcore.trace/v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AnomalyKind {
    VoidModel,
    DeadFeature {
        feature: String,
    },
    FalseOptional {
        feature: String,
        parent: String,
    },
    RedundantConstraint {
        constraint: String,
    },
    /// Constraints jointly causing another anomaly. `constraints` is a
    /// minimal subset that still produces it; `correction` is a minimal set
    /// whose removal eliminates it.
    ConstraintConflict {
        anomaly: String,
        constraints: Vec<String>,
        correction: Vec<String>,
    },
}

impl fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnomalyKind::VoidModel => write!(f, "VOID_MODEL"),
            AnomalyKind::DeadFeature { feature } => write!(f, "DEAD_FEATURE({feature})"),
            AnomalyKind::FalseOptional { feature, parent } => write!(f, "FALSE_OPTIONAL({feature}, {parent})"),
            AnomalyKind::RedundantConstraint { constraint } => write!(f, "REDUNDANT_CONSTRAINT({constraint})"),
            AnomalyKind::ConstraintConflict {
                anomaly, constraints, ..
            } => {
                write!(f, "CONSTRAINT_CONFLICT({anomaly}: {})", constraints.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Anomaly {
    #[serde(flatten)]
    pub kind: AnomalyKind,
    pub severity: Severity,
    /// Minimal subset of cross constraints that, with the tree, still
    /// produces the anomaly. Empty when the tree alone causes it.
    pub explanation: Vec<String>,
    /// Requirement entry ids involved: the explanation constraints, then the
    /// origins of the features concerned.
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Statistics {
    pub features: usize,
    pub abstract_features: usize,
    pub concrete_features: usize,
    pub constraints: usize,
    /// Full configurations; absent when the model is too large to enumerate.
    pub configurations: Option<usize>,
    /// Distinct projections onto concrete features.
    pub variants: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub model: String,
    pub anomalies: Vec<Anomaly>,
    pub statistics: Statistics,
}

impl AnalysisReport {
    pub fn is_valid(&self) -> bool {
        self.anomalies.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.anomalies.iter().any(|a| a.severity == Severity::Error)
    }

    pub fn is_void(&self) -> bool {
        self.anomalies.iter().any(|a| a.kind == AnomalyKind::VoidModel)
    }

    pub fn dead_features(&self) -> Vec<&str> {
        self.anomalies
            .iter()
            .filter_map(|a| match &a.kind {
                AnomalyKind::DeadFeature { feature } => Some(feature.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn false_optional_features(&self) -> Vec<(&str, &str)> {
        self.anomalies
            .iter()
            .filter_map(|a| match &a.kind {
                AnomalyKind::FalseOptional { feature, parent } => Some((feature.as_str(), parent.as_str())),
                _ => None,
            })
            .collect()
    }

    pub fn redundant_constraints(&self) -> Vec<&str> {
        self.anomalies
            .iter()
            .filter_map(|a| match &a.kind {
                AnomalyKind::RedundantConstraint { constraint } => Some(constraint.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let s = &self.statistics;
        let opt = |v: Option<usize>| v.map_or_else(|| "not computed".to_string(), |n| n.to_string());
        let mut out = format!(
            "model: {}\nfeatures: {} ({} abstract, {} concrete)\nconstraints: {}\nconfigurations: {}\nvariants: {}\n",
            self.model,
            s.features,
            s.abstract_features,
            s.concrete_features,
            s.constraints,
            opt(s.configurations),
            opt(s.variants),
        );
        if self.anomalies.is_empty() {
            out.push_str("anomalies: none (model is valid)\n");
            return out;
        }
        out.push_str(&format!("anomalies: {}\n", self.anomalies.len()));
        for a in &self.anomalies {
            out.push_str(&format!("{:<7} {}\n", a.severity, a.kind));
            if !a.explanation.is_empty() {
                out.push_str(&format!("        explanation: {}\n", a.explanation.join(", ")));
            }
            if let AnomalyKind::ConstraintConflict { correction, .. } = &a.kind {
                if !correction.is_empty() {
                    out.push_str(&format!("        removing fixes it: {}\n", correction.join(", ")));
                }
            }
            if !a.trace.is_empty() {
                out.push_str(&format!("        trace: {}\n", a.trace.join(", ")));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format": ANALYSIS_FORMAT,
            "model": self.model,
            "valid": self.is_valid(),
            "statistics": self.statistics,
            "anomalies": self.anomalies,
        })
    }
}

struct Checker {
    enc: Encoder,
    /// `s_i` per constraint, declaration order.
    selectors: Vec<Lit>,
    /// `r_i ⇔ c_i` per constraint.
    roots: Vec<Lit>,
}

impl Checker {
    fn new(m: &FeatureModel) -> Self {
        let mut enc = Encoder::new();
        for name in m.feature_names() {
            enc.named(&name);
        }
        for f in m.structure_formulas() {
            enc.assert(&f);
        }
        let mut selectors = Vec::new();
        let mut roots = Vec::new();
        for c in &m.constraints {
            let r = enc.encode(&c.formula);
            let s = Lit::pos(enc.fresh());
            enc.solver.add_clause(&[!s, r]);
            selectors.push(s);
            roots.push(r);
        }
        Checker { enc, selectors, roots }
    }

    fn feature(&self, name: &str) -> Lit {
        Lit::pos(self.enc.lookup(name).expect("feature registered"))
    }

    fn unsat(&mut self, enabled: &[bool], extra: &[Lit]) -> bool {
        let mut assumptions: Vec<Lit> = self
            .selectors
            .iter()
            .zip(enabled)
            .filter(|(_, &on)| on)
            .map(|(&s, _)| s)
            .collect();
        assumptions.extend_from_slice(extra);
        self.enc.solver.solve(&assumptions).is_none()
    }

    /// Whether `q` holds with the given constraints enabled. Monotone in
    /// `enabled` for every query below.
    fn holds(&mut self, q: &Query, enabled: &[bool]) -> bool {
        match q {
            Query::Void => self.unsat(enabled, &[]),
            Query::Dead(f) => {
                let f = self.feature(f);
                self.unsat(enabled, &[f])
            }
            Query::FalseOptional(f, p) => {
                let (fl, pl) = (self.feature(f), self.feature(p));
                self.unsat(enabled, &[pl, !fl]) && !self.unsat(enabled, &[fl])
            }
            Query::Redundant(i) => {
                let mut others = enabled.to_vec();
                others[*i] = false;
                let r = self.roots[*i];
                self.unsat(&others, &[!r])
            }
        }
    }

    /// Deletion-based shrinking to a minimal enabled subset for which `q`
    /// still holds. Later constraints are dropped first.
    fn explain(&mut self, q: &Query, ids: &[String]) -> Vec<String> {
        let mut enabled = vec![true; self.selectors.len()];
        if let Query::Redundant(i) = q {
            enabled[*i] = false;
        }
        for i in (0..enabled.len()).rev() {
            if !enabled[i] {
                continue;
            }
            enabled[i] = false;
            if !self.holds(q, &enabled) {
                enabled[i] = true;
            }
        }
        pick(ids, &enabled, true)
    }

    /// Minimal set of constraints whose removal makes `q` fail. Constraints
    /// are re-enabled in reverse declaration order, so among alternatives
    /// the earliest constraints stay in the set.
    fn correct(&mut self, q: &Query, ids: &[String]) -> Vec<String> {
        let n = self.selectors.len();
        let mut enabled = vec![false; n];
        if self.holds(q, &enabled) {
            return Vec::new();
        }
        for i in (0..n).rev() {
            enabled[i] = true;
            if self.holds(q, &enabled) {
                enabled[i] = false;
            }
        }
        pick(ids, &enabled, false)
    }
}

fn pick(ids: &[String], enabled: &[bool], want: bool) -> Vec<String> {
    ids.iter()
        .zip(enabled)
        .filter(|(_, &on)| on == want)
        .map(|(id, _)| id.clone())
        .collect()
}

enum Query {
    Void,
    Dead(String),
    FalseOptional(String, String),
    Redundant(usize),
}

impl Query {
    fn of(kind: &AnomalyKind, m: &FeatureModel) -> Result<Query, AnalysisError> {
        Ok(match kind {
            AnomalyKind::VoidModel => Query::Void,
            AnomalyKind::DeadFeature { feature } => Query::Dead(feature.clone()),
            AnomalyKind::FalseOptional { feature, parent } => Query::FalseOptional(feature.clone(), parent.clone()),
            AnomalyKind::RedundantConstraint { constraint } => {
                let i = m
                    .constraints
                    .iter()
                    .position(|c| &c.id == constraint)
                    .ok_or_else(|| AnalysisError::NotPresent(kind.to_string()))?;
                Query::Redundant(i)
            }
            AnomalyKind::ConstraintConflict { .. } => return Err(AnalysisError::Unsupported(kind.to_string())),
        })
    }
}

fn origin_of(m: &FeatureModel, name: &str) -> Option<String> {
    m.find_feature(name).and_then(|f| f.origin.clone())
}

fn trace_for(m: &FeatureModel, explanation: &[String], features: &[&str]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    explanation
        .iter()
        .cloned()
        .chain(features.iter().filter_map(|f| origin_of(m, f)))
        .filter(|id| seen.insert(id.clone()))
        .collect()
}

fn statistics(m: &FeatureModel) -> Statistics {
    let names = m.feature_names();
    let concrete = m.concrete_features();
    let f = m.to_formula();
    let count = |project: &[String]| {
        all_sat_with_limit(&f, project, DEFAULT_VARIABLE_LIMIT)
            .ok()
            .map(|v| v.len())
    };
    Statistics {
        features: names.len(),
        abstract_features: names.len() - concrete.len(),
        concrete_features: concrete.len(),
        constraints: m.constraints.len(),
        configurations: count(&names),
        variants: count(&concrete),
    }
}

/// Runs every anomaly check. Anomalies are ordered: void model, dead
/// features (pre-order), false-optional features (pre-order), redundant
/// constraints (declaration order), then one conflict entry per void, dead
/// or false-optional anomaly that involves cross constraints.
pub fn analyze(m: &FeatureModel) -> AnalysisReport {
    let ids: Vec<String> = m.constraints.iter().map(|c| c.id.clone()).collect();
    let mut checker = Checker::new(m);
    let all = vec![true; ids.len()];
    let mut anomalies = Vec::new();

    let mut record = |checker: &mut Checker, kind: AnomalyKind, q: &Query, features: &[&str], severity| {
        let explanation = checker.explain(q, &ids);
        let trace = match q {
            Query::Redundant(i) => trace_for(m, &[vec![ids[*i].clone()], explanation.clone()].concat(), &[]),
            _ => trace_for(m, &explanation, features),
        };
        anomalies.push(Anomaly {
            kind,
            severity,
            explanation,
            trace,
        });
    };

    if checker.holds(&Query::Void, &all) {
        record(
            &mut checker,
            AnomalyKind::VoidModel,
            &Query::Void,
            &[m.root.name.as_str()],
            Severity::Error,
        );
    }
    let features = m.features();
    let mut dead = BTreeSet::new();
    for (f, _) in &features {
        let q = Query::Dead(f.name.clone());
        if checker.holds(&q, &all) {
            dead.insert(f.name.clone());
            let kind = AnomalyKind::DeadFeature {
                feature: f.name.clone(),
            };
            record(&mut checker, kind, &q, &[f.name.as_str()], Severity::Error);
        }
    }
    for (f, parent) in &features {
        let Some(p) = parent else { continue };
        if p.child_is_mandatory(f) || dead.contains(&f.name) {
            continue;
        }
        let q = Query::FalseOptional(f.name.clone(), p.name.clone());
        if checker.holds(&q, &all) {
            let kind = AnomalyKind::FalseOptional {
                feature: f.name.clone(),
                parent: p.name.clone(),
            };
            record(
                &mut checker,
                kind,
                &q,
                &[f.name.as_str(), p.name.as_str()],
                Severity::Error,
            );
        }
    }
    for (i, id) in ids.iter().enumerate() {
        let q = Query::Redundant(i);
        if checker.holds(&q, &all) {
            let kind = AnomalyKind::RedundantConstraint { constraint: id.clone() };
            record(&mut checker, kind, &q, &[], Severity::Warning);
        }
    }

    let mut conflicts = Vec::new();
    for a in &anomalies {
        if a.explanation.is_empty() || matches!(a.kind, AnomalyKind::RedundantConstraint { .. }) {
            continue;
        }
        let q = Query::of(&a.kind, m).expect("query for detected anomaly");
        let correction = checker.correct(&q, &ids);
        conflicts.push(Anomaly {
            kind: AnomalyKind::ConstraintConflict {
                anomaly: a.kind.to_string(),
                constraints: a.explanation.clone(),
                correction,
            },
            severity: Severity::Error,
            explanation: a.explanation.clone(),
            trace: a.trace.clone(),
        });
    }
    anomalies.extend(conflicts);

    AnalysisReport {
        model: m.root.name.clone(),
        anomalies,
        statistics: statistics(m),
    }
}

/// A minimal correction set for `a`: constraints whose removal makes the
/// anomaly disappear, minimal under deletion. Empty when the tree alone
/// causes the anomaly.
pub fn attribute_conflict(m: &FeatureModel, a: &Anomaly) -> Result<Vec<String>, AnalysisError> {
    attribute_kind(m, &a.kind)
}

pub fn attribute_kind(m: &FeatureModel, kind: &AnomalyKind) -> Result<Vec<String>, AnalysisError> {
    let q = match kind {
        AnomalyKind::RedundantConstraint { .. } | AnomalyKind::ConstraintConflict { .. } => {
            return Err(AnalysisError::Unsupported(kind.to_string()))
        }
        _ => Query::of(kind, m)?,
    };
    if let Query::Dead(f) | Query::FalseOptional(f, _) = &q {
        if m.find_feature(f).is_none() {
            return Err(AnalysisError::NotPresent(kind.to_string()));
        }
    }
    if let Query::FalseOptional(f, p) = &q {
        if m.parent_of(f).map(|x| x.name.as_str()) != Some(p.as_str()) {
            return Err(AnalysisError::NotPresent(kind.to_string()));
        }
    }
    let ids: Vec<String> = m.constraints.iter().map(|c| c.id.clone()).collect();
    let mut checker = Checker::new(m);
    if !checker.holds(&q, &vec![true; ids.len()]) {
        return Err(AnalysisError::NotPresent(kind.to_string()));
    }
    Ok(checker.correct(&q, &ids))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub id: String,
    pub kind: EntryKind,
    pub source_doc: String,
    pub source_loc: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TracedAnomaly {
    pub anomaly: String,
    pub severity: Severity,
    pub rows: Vec<Provenance>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TraceReport {
    pub anomalies: Vec<TracedAnomaly>,
}

impl TraceReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.anomalies {
            out.push_str(&format!("{}\n", a.anomaly));
            for r in &a.rows {
                out.push_str(&format!(
                    "  {:<10} {} {}: {}\n",
                    r.id, r.source_doc, r.source_loc, r.text
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "format": TRACE_FORMAT, "anomalies": self.anomalies })
    }
}

/// Resolves every anomaly's trace ids against the worksheet.
pub fn trace_report(r: &AnalysisReport, w: &Worksheet) -> Result<TraceReport, AnalysisError> {
    let mut anomalies = Vec::new();
    for a in &r.anomalies {
        let rows = a
            .trace
            .iter()
            .map(|id| {
                let e = w.entry(id).ok_or_else(|| AnalysisError::UnknownTraceId(id.clone()))?;
                Ok(Provenance {
                    id: e.id.clone(),
                    kind: e.kind,
                    source_doc: e.source_doc.clone(),
                    source_loc: e.source_loc.clone(),
                    text: e.text.clone(),
                })
            })
            .collect::<Result<Vec<_>, AnalysisError>>()?;
        anomalies.push(TracedAnomaly {
            anomaly: a.kind.to_string(),
            severity: a.severity,
            rows,
        });
    }
    Ok(TraceReport { anomalies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;
    use crate::model::{CrossConstraint, Feature, GroupKind};

    fn c(id: &str, f: &str) -> CrossConstraint {
        CrossConstraint::new(id, parse_formula(f).unwrap())
    }

    fn alt_ab(constraints: Vec<CrossConstraint>) -> FeatureModel {
        let root = Feature::abstract_("r").with_group(
            GroupKind::Alternative,
            vec![Feature::concrete("a"), Feature::concrete("b")],
        );
        FeatureModel::new(root, constraints).unwrap()
    }

    fn optional_c(constraints: Vec<CrossConstraint>) -> FeatureModel {
        let root = Feature::abstract_("r").with_group(GroupKind::And, vec![Feature::concrete("c")]);
        FeatureModel::new(root, constraints).unwrap()
    }

    #[test]
    fn dead_feature_from_alternative() {
        let m = alt_ab(vec![c("C1", "a => b")]);
        let r = analyze(&m);
        assert_eq!(r.dead_features(), vec!["a"]);
        assert!(!r.is_void());
        let dead = &r.anomalies[0];
        assert_eq!(dead.explanation, vec!["C1"]);
        assert_eq!(attribute_conflict(&m, dead).unwrap(), vec!["C1"]);
        // b became false-optional as a side effect
        assert_eq!(r.false_optional_features(), vec![("b", "r")]);
    }

    #[test]
    fn false_optional_from_root_constraint() {
        let m = optional_c(vec![c("C1", "r => c")]);
        let r = analyze(&m);
        assert_eq!(r.false_optional_features(), vec![("c", "r")]);
        assert!(r.dead_features().is_empty());
        assert!(r.has_errors());
    }

    #[test]
    fn duplicate_constraints_are_redundant() {
        let m = optional_c(vec![c("C1", "r => c"), c("C2", "r => c")]);
        let r = analyze(&m);
        assert_eq!(r.redundant_constraints(), vec!["C1", "C2"]);
        let fo = r
            .anomalies
            .iter()
            .find(|a| matches!(a.kind, AnomalyKind::FalseOptional { .. }))
            .unwrap();
        // the first copy suffices to explain it, but both must go to fix it
        assert_eq!(fo.explanation, vec!["C1"]);
        assert_eq!(attribute_conflict(&m, fo).unwrap(), vec!["C1", "C2"]);
    }

    #[test]
    fn correction_prefers_earlier_constraint() {
        let root =
            Feature::abstract_("r").with_group(GroupKind::And, vec![Feature::concrete("g"), Feature::concrete("f")]);
        let m = FeatureModel::new(root, vec![c("C1", "r => g"), c("C2", "g => f")]).unwrap();
        let kind = AnomalyKind::FalseOptional {
            feature: "f".into(),
            parent: "r".into(),
        };
        assert_eq!(attribute_kind(&m, &kind).unwrap(), vec!["C1"]);
    }

    #[test]
    fn void_model() {
        let m = optional_c(vec![c("C1", "r => !r")]);
        let r = analyze(&m);
        assert!(r.is_void());
        assert_eq!(r.dead_features(), vec!["r", "c"]);
        assert_eq!(r.statistics.configurations, Some(0));
        let void = &r.anomalies[0];
        assert_eq!(attribute_conflict(&m, void).unwrap(), vec!["C1"]);
    }

    #[test]
    fn valid_model_and_not_present() {
        let m = alt_ab(vec![]);
        let r = analyze(&m);
        assert!(r.is_valid());
        assert_eq!(r.statistics.variants, Some(2));
        let kind = AnomalyKind::DeadFeature { feature: "a".into() };
        assert!(matches!(attribute_kind(&m, &kind), Err(AnalysisError::NotPresent(_))));
        let redundant = AnomalyKind::RedundantConstraint {
            constraint: "C9".into(),
        };
        assert!(matches!(
            attribute_kind(&m, &redundant),
            Err(AnalysisError::Unsupported(_))
        ));
    }

    #[test]
    fn conflict_entry_carries_trace() {
        let m = alt_ab(vec![c("C1", "a")]);
        let r = analyze(&m);
        assert_eq!(r.dead_features(), vec!["b"]);
        let conflict = r
            .anomalies
            .iter()
            .find(|a| matches!(a.kind, AnomalyKind::ConstraintConflict { .. }))
            .unwrap();
        assert_eq!(conflict.trace, vec!["C1"]);
    }

    #[test]
    fn report_is_deterministic() {
        let m = alt_ab(vec![c("C1", "a => b"), c("C2", "b | a")]);
        assert_eq!(analyze(&m), analyze(&m));
        assert_eq!(analyze(&m).to_json()["format"], ANALYSIS_FORMAT);
    }
}
