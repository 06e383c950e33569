//! Maps worksheet entries to feature-model fragments and assembles the model.
//!
//! Requirement formulas are matched against the canonical shapes below
//! (`P` is the entry's abstract feature, or its attachment parent; operand
//! order is irrelevant):
//!
//! | rule | shape | result |
//! |------|-------|--------|
//! | R1 | `P <=> C`, `P <=> C1 & .. & Cn`, `(P <=> C1) & ..` | mandatory children |
//! | R2 | `C => P`, `(C1 => P) & ..`, `C1 \| .. \| Cn => P` | optional children |
//! | R3 | `P <=> C1 \| .. \| Cn` | or-group |
//! | R4 | `P <=> OR_i (Ci & AND_j!=i !Cj)` or `P <=> (C1 \| ..) & AND_i<j !(Ci & Cj)` | alternative group |
//!
//! Constraint formulas become cross-tree constraints, classified as R5
//! (`A => B`), R6 (`A => !B`, `!(A & B)`) or generic.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::error::SynthesisError;
use crate::logic::Formula;
use crate::model::{CrossConstraint, Feature, FeatureModel, GroupKind};
use crate::rtw::{undefined_references, validate_rtw, EntryKind, RequirementEntry, ValidationReport, Worksheet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    #[serde(rename = "R1_MANDATORY")]
    Mandatory,
    #[serde(rename = "R2_OPTIONAL")]
    Optional,
    #[serde(rename = "R3_OR")]
    Or,
    #[serde(rename = "R4_ALTERNATIVE")]
    Alternative,
    #[serde(rename = "R5_REQUIRES")]
    Requires,
    #[serde(rename = "R6_EXCLUDES")]
    Excludes,
    #[serde(rename = "GENERIC_CONSTRAINT")]
    GenericConstraint,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::Mandatory => "R1_MANDATORY",
            Rule::Optional => "R2_OPTIONAL",
            Rule::Or => "R3_OR",
            Rule::Alternative => "R4_ALTERNATIVE",
            Rule::Requires => "R5_REQUIRES",
            Rule::Excludes => "R6_EXCLUDES",
            Rule::GenericConstraint => "GENERIC_CONSTRAINT",
        }
    }

    fn group(self) -> GroupKind {
        match self {
            Rule::Or => GroupKind::Or,
            Rule::Alternative => GroupKind::Alternative,
            _ => GroupKind::And,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Result of matching an entry against the rule table.
///
/// For R1-R4 `parent` is the group parent and `children` the grouped
/// features; for R5/R6 `parent` is the antecedent and `children` holds the
/// single consequent (required or excluded) feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleMatch {
    pub rule: Rule,
    pub parent: Option<String>,
    pub children: Vec<String>,
}

fn vars_of(parts: &[Formula]) -> Option<Vec<&str>> {
    parts.iter().map(Formula::as_var).collect()
}

fn negated_var(f: &Formula) -> Option<&str> {
    match f {
        Formula::Not(inner) => inner.as_var(),
        _ => None,
    }
}

/// `OR_i (Ci & AND_{j!=i} !Cj)` with n >= 2.
fn exactly_one_dnf(f: &Formula) -> Option<Vec<&str>> {
    let Formula::Or(terms) = f else { return None };
    let mut positives = Vec::new();
    let mut term_vars: Vec<BTreeSet<&str>> = Vec::new();
    for term in terms {
        let Formula::And(lits) = term else { return None };
        let mut pos = None;
        let mut all = BTreeSet::new();
        for lit in lits {
            if let Some(v) = lit.as_var() {
                if pos.replace(v).is_some() {
                    return None;
                }
                all.insert(v);
            } else {
                all.insert(negated_var(lit)?);
            }
        }
        if all.len() != lits.len() {
            return None;
        }
        positives.push(pos?);
        term_vars.push(all);
    }
    let set: BTreeSet<&str> = positives.iter().copied().collect();
    (set.len() == positives.len() && term_vars.iter().all(|t| *t == set)).then_some(positives)
}

/// `(C1 | .. | Cn) & AND_{i<j} !(Ci & Cj)` with n >= 2, conjuncts in any order.
fn exactly_one_pairwise(f: &Formula) -> Option<Vec<&str>> {
    let Formula::And(parts) = f else { return None };
    let mut any: Option<Vec<&str>> = None;
    let mut pairs = HashSet::new();
    for part in parts {
        match part {
            Formula::Or(ops) if ops.iter().all(|o| o.as_var().is_some()) && any.is_none() => {
                any = vars_of(ops);
            }
            Formula::Not(inner) => match inner.as_ref() {
                Formula::And(ops) if ops.len() == 2 => {
                    let v = vars_of(ops)?;
                    pairs.insert(BTreeSet::from([v[0], v[1]]));
                }
                _ => return None,
            },
            Formula::Or(ops) if ops.len() == 2 => {
                let a = negated_var(&ops[0])?;
                let b = negated_var(&ops[1])?;
                pairs.insert(BTreeSet::from([a, b]));
            }
            _ => return None,
        }
    }
    let any = any?;
    let n = any.len();
    let distinct: BTreeSet<&str> = any.iter().copied().collect();
    if distinct.len() != n || pairs.len() != n * (n - 1) / 2 {
        return None;
    }
    for (i, a) in any.iter().enumerate() {
        for b in &any[i + 1..] {
            if !pairs.contains(&BTreeSet::from([*a, *b])) {
                return None;
            }
        }
    }
    Some(any)
}

/// Classifies the right-hand side of `P <=> X`.
fn classify_iff_body(body: &Formula) -> Option<(Rule, Vec<&str>)> {
    match body {
        Formula::Var(c) => Some((Rule::Mandatory, vec![c.as_str()])),
        Formula::And(parts) if parts.iter().all(|p| p.as_var().is_some()) => Some((Rule::Mandatory, vars_of(parts)?)),
        Formula::Or(parts) if parts.iter().all(|p| p.as_var().is_some()) => Some((Rule::Or, vars_of(parts)?)),
        Formula::Or(_) => exactly_one_dnf(body).map(|c| (Rule::Alternative, c)),
        Formula::And(_) => exactly_one_pairwise(body).map(|c| (Rule::Alternative, c)),
        _ => None,
    }
}

/// Matches a requirement formula; `is_parent` says which names may act as P.
fn match_requirement<'f>(f: &'f Formula, is_parent: &dyn Fn(&str) -> bool) -> Option<(&'f str, Rule, Vec<&'f str>)> {
    match f {
        Formula::Iff(l, r) => {
            for (p, body) in [(l, r), (r, l)] {
                if let Some(p) = p.as_var().filter(|p| is_parent(p)) {
                    if let Some((rule, children)) = classify_iff_body(body) {
                        return Some((p, rule, children));
                    }
                }
            }
            None
        }
        Formula::Implies(l, r) => {
            let p = r.as_var().filter(|p| is_parent(p))?;
            let children = match l.as_ref() {
                Formula::Var(c) => vec![c.as_str()],
                Formula::Or(parts) => vars_of(parts)?,
                _ => return None,
            };
            Some((p, Rule::Optional, children))
        }
        Formula::And(parts) => {
            // conjunction of per-child R1 or R2 forms sharing one parent
            let mut found: Option<(&str, Rule)> = None;
            let mut children = Vec::new();
            for part in parts {
                let (p, rule, mut c) = match part {
                    Formula::Iff(..) | Formula::Implies(..) => match_requirement(part, is_parent)?,
                    _ => return None,
                };
                if !matches!(rule, Rule::Mandatory | Rule::Optional) {
                    return None;
                }
                match found {
                    None => found = Some((p, rule)),
                    Some(prev) if prev == (p, rule) => {}
                    Some(_) => return None,
                }
                children.append(&mut c);
            }
            let (p, rule) = found?;
            Some((p, rule, children))
        }
        _ => None,
    }
}

/// Matches an entry's formula against the rule table. `root` is the model
/// root, used when the entry names no parent.
pub fn classify_entry(e: &RequirementEntry, root: &str) -> Result<RuleMatch, SynthesisError> {
    if e.kind == EntryKind::Constraint {
        let rule = match &e.formula {
            Formula::Implies(a, b) => match (a.as_var(), b.as_var(), negated_var(b)) {
                (Some(a), Some(b), _) => Some((Rule::Requires, a, b)),
                (Some(a), None, Some(b)) => Some((Rule::Excludes, a, b)),
                _ => None,
            },
            Formula::Not(inner) => match inner.as_ref() {
                Formula::And(ops) if ops.len() == 2 => match (ops[0].as_var(), ops[1].as_var()) {
                    (Some(a), Some(b)) => Some((Rule::Excludes, a, b)),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        };
        return Ok(match rule {
            Some((rule, a, b)) => RuleMatch {
                rule,
                parent: Some(a.to_string()),
                children: vec![b.to_string()],
            },
            None => RuleMatch {
                rule: Rule::GenericConstraint,
                parent: None,
                children: Vec::new(),
            },
        });
    }

    let attach = e.parent.as_deref().unwrap_or(root);
    let abstract_name = e.abstract_feature.as_deref();
    let is_parent = |p: &str| Some(p) == abstract_name || p == attach;
    let Some((parent, rule, bound)) = match_requirement(&e.formula, &is_parent) else {
        let expected = abstract_name.unwrap_or(attach);
        // a well-shaped formula over the wrong parent gets the more useful error
        if let Some((found, _, _)) = match_requirement(&e.formula, &|_| true) {
            return Err(SynthesisError::WrongParent {
                entry: e.id.clone(),
                found: found.to_string(),
                expected: expected.to_string(),
            });
        }
        return Err(SynthesisError::Unmatchable {
            entry: e.id.clone(),
            formula: e.formula_text.clone(),
        });
    };

    let introduced: Vec<&str> = if Some(parent) == abstract_name {
        e.concrete_features.iter().map(String::as_str).collect()
    } else {
        e.introduced()
    };
    let bound_set: BTreeSet<&str> = bound.iter().copied().collect();
    let introduced_set: BTreeSet<&str> = introduced.iter().copied().collect();
    if bound_set != introduced_set || bound_set.len() != bound.len() {
        return Err(SynthesisError::ChildMismatch {
            entry: e.id.clone(),
            bound: bound.iter().map(|s| s.to_string()).collect(),
            introduced: introduced.iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(RuleMatch {
        rule,
        parent: Some(parent.to_string()),
        // declaration order, not formula order
        children: introduced.iter().map(|s| s.to_string()).collect(),
    })
}

/// A piece of the model contributed by one entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fragment {
    /// `children` join `attach_to`'s child list under `group`.
    SubTree {
        attach_to: String,
        group: GroupKind,
        children: Vec<Feature>,
    },
    Constraint(CrossConstraint),
}

/// Builds the fragment for a classified entry. An entry's abstract feature
/// becomes a mandatory child of its attachment parent.
pub fn entry_to_subtree(e: &RequirementEntry, m: &RuleMatch, root: &str) -> Fragment {
    if matches!(m.rule, Rule::Requires | Rule::Excludes | Rule::GenericConstraint) {
        return Fragment::Constraint(CrossConstraint::new(&e.id, e.formula.clone()));
    }
    let attach = e.parent.clone().unwrap_or_else(|| root.to_string());
    let children: Vec<Feature> = m
        .children
        .iter()
        .map(|name| {
            let is_abstract = e.abstract_feature.as_deref() == Some(name.as_str());
            Feature::new(name, is_abstract)
                .mandatory(m.rule == Rule::Mandatory)
                .with_origin(&e.id)
        })
        .collect();
    match (&e.abstract_feature, &m.parent) {
        (Some(a), Some(p)) if a == p => Fragment::SubTree {
            attach_to: attach,
            group: GroupKind::And,
            children: vec![Feature::abstract_(a)
                .mandatory(true)
                .with_origin(&e.id)
                .with_group(m.rule.group(), children)],
        },
        _ => Fragment::SubTree {
            attach_to: attach,
            group: m.rule.group(),
            children,
        },
    }
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub model: FeatureModel,
    pub report: ValidationReport,
    /// Constraint entries excluded because they reference undefined features.
    pub flagged: Vec<String>,
}

struct Edge {
    child: String,
    entry: String,
    group: GroupKind,
}

/// Builds the global model from a worksheet: requirement fragments attach
/// under their parents (forward references allowed), constraints follow in
/// worksheet order, and flagged entries are skipped.
pub fn assemble_model(w: &Worksheet) -> Result<Assembly, SynthesisError> {
    let root = w.model_name.as_str();
    let mut report = validate_rtw(w);

    let mut introduced_by: HashMap<String, String> = HashMap::new();
    for e in w
        .entries
        .iter()
        .filter(|e| e.status.is_active() && e.kind == EntryKind::Requirement)
    {
        for name in e.introduced() {
            if name == root {
                return Err(SynthesisError::DuplicateFeature {
                    feature: name.to_string(),
                    first: "model root".into(),
                    second: e.id.clone(),
                });
            }
            if let Some(first) = introduced_by.insert(name.to_string(), e.id.clone()) {
                return Err(SynthesisError::DuplicateFeature {
                    feature: name.to_string(),
                    first,
                    second: e.id.clone(),
                });
            }
        }
    }

    let mut nodes: HashMap<String, Feature> = HashMap::new();
    let mut edges: HashMap<String, Vec<Edge>> = HashMap::new();
    let mut constraints = Vec::new();
    let mut flagged = Vec::new();

    for e in w.entries.iter().filter(|e| e.status.is_active()) {
        if e.kind == EntryKind::Constraint {
            let undefined = undefined_references(w, e);
            if !undefined.is_empty() {
                for f in report.findings.iter_mut() {
                    if f.entry.as_deref() == Some(&e.id) && f.message.starts_with("undefined feature reference") {
                        f.message = format!("FLAGGED (excluded from synthesis): {}", f.message);
                    }
                }
                flagged.push(e.id.clone());
                continue;
            }
        }
        let m = classify_entry(e, root)?;
        match entry_to_subtree(e, &m, root) {
            Fragment::Constraint(c) => constraints.push(c),
            Fragment::SubTree {
                attach_to,
                group,
                children,
            } => {
                if attach_to != root && !introduced_by.contains_key(&attach_to) {
                    return Err(SynthesisError::UnknownParent {
                        entry: e.id.clone(),
                        parent: attach_to,
                    });
                }
                let mut pending = vec![(attach_to, group, children)];
                while let Some((parent, group, children)) = pending.pop() {
                    for mut child in children {
                        let grand = std::mem::take(&mut child.children);
                        edges.entry(parent.clone()).or_default().push(Edge {
                            child: child.name.clone(),
                            entry: e.id.clone(),
                            group,
                        });
                        if !grand.is_empty() {
                            pending.push((child.name.clone(), child.group, grand));
                        }
                        nodes.insert(child.name.clone(), child);
                    }
                }
            }
        }
    }

    fn build(
        name: &str,
        node: Feature,
        nodes: &mut HashMap<String, Feature>,
        edges: &HashMap<String, Vec<Edge>>,
    ) -> Result<Feature, SynthesisError> {
        let mut node = node;
        let list = edges.get(name).map(Vec::as_slice).unwrap_or(&[]);
        let grouped: Vec<&Edge> = list.iter().filter(|e| e.group != GroupKind::And).collect();
        node.group = GroupKind::And;
        if let Some(first) = grouped.first() {
            if let Some(other) = list.iter().find(|e| e.entry != first.entry) {
                let culprit = if other.group == GroupKind::And {
                    &first.entry
                } else {
                    &other.entry
                };
                return Err(SynthesisError::GroupConflict {
                    entry: culprit.clone(),
                    parent: name.to_string(),
                    kind: first.group.label(),
                });
            }
            node.group = first.group;
        }
        node.children.clear();
        for edge in list {
            // each name has exactly one incoming edge, so it is still present
            let child = nodes.remove(&edge.child).expect("node for edge");
            node.children.push(build(&edge.child, child, nodes, edges)?);
        }
        Ok(node)
    }

    let root_feature = build(root, Feature::abstract_(root), &mut nodes, &edges)?;
    if !nodes.is_empty() {
        let mut entries: Vec<String> = nodes.values().filter_map(|f| f.origin.clone()).collect();
        entries.sort();
        entries.dedup();
        return Err(SynthesisError::Unreachable(entries));
    }
    let model = FeatureModel::new(root_feature, constraints)?;
    Ok(Assembly { model, report, flagged })
}
