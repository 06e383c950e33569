//! Feature models and their propositional semantics.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::logic::{is_identifier, Formula};

/// Relationship between a feature and its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GroupKind {
    /// Each child is individually mandatory or optional.
    #[default]
    And,
    /// At least one child when the parent is selected.
    Or,
    /// Exactly one child when the parent is selected.
    Alternative,
}

impl GroupKind {
    pub fn label(self) -> &'static str {
        match self {
            GroupKind::And => "and",
            GroupKind::Or => "or",
            GroupKind::Alternative => "alt",
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    #[serde(rename = "abstract")]
    pub is_abstract: bool,
    /// Only meaningful when the parent has an AND group; the root is always mandatory.
    pub mandatory: bool,
    pub group: GroupKind,
    pub children: Vec<Feature>,
    /// Requirement entry that introduced the feature.
    pub origin: Option<String>,
}

impl Feature {
    pub fn new(name: impl Into<String>, is_abstract: bool) -> Self {
        Feature {
            name: name.into(),
            is_abstract,
            mandatory: false,
            group: GroupKind::And,
            children: Vec::new(),
            origin: None,
        }
    }

    pub fn concrete(name: impl Into<String>) -> Self {
        Self::new(name, false)
    }

    pub fn abstract_(name: impl Into<String>) -> Self {
        Self::new(name, true)
    }

    pub fn mandatory(mut self, yes: bool) -> Self {
        self.mandatory = yes;
        self
    }

    pub fn with_origin(mut self, origin: impl Into<String>) -> Self {
        self.origin = Some(origin.into());
        self
    }

    pub fn with_group(mut self, group: GroupKind, children: Vec<Feature>) -> Self {
        self.group = group;
        self.children = children;
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Whether `child` must be selected with this feature by the tree alone.
    pub fn child_is_mandatory(&self, child: &Feature) -> bool {
        self.group == GroupKind::And && child.mandatory
    }

    /// Pre-order walk yielding each feature with its parent.
    pub fn walk(&self) -> Vec<(&Feature, Option<&Feature>)> {
        let mut out = Vec::new();
        let mut stack = vec![(self, None)];
        while let Some((f, parent)) = stack.pop() {
            out.push((f, parent));
            for c in f.children.iter().rev() {
                stack.push((c, Some(f)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossConstraint {
    /// Requirement entry id.
    pub id: String,
    pub formula: Formula,
}

impl CrossConstraint {
    pub fn new(id: impl Into<String>, formula: Formula) -> Self {
        CrossConstraint { id: id.into(), formula }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureModel {
    pub root: Feature,
    pub constraints: Vec<CrossConstraint>,
}

impl FeatureModel {
    /// Builds a model, checking the structural invariants.
    pub fn new(mut root: Feature, constraints: Vec<CrossConstraint>) -> Result<Self, ModelError> {
        root.mandatory = true;
        let model = FeatureModel { root, constraints };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = HashSet::new();
        for (f, _) in self.root.walk() {
            if !is_identifier(&f.name) {
                return Err(ModelError::InvalidName(f.name.clone()));
            }
            if !names.insert(f.name.as_str()) {
                return Err(ModelError::DuplicateFeature(f.name.clone()));
            }
            if f.group != GroupKind::And && f.children.len() < 2 {
                return Err(ModelError::GroupTooSmall {
                    parent: f.name.clone(),
                    kind: f.group.label(),
                    count: f.children.len(),
                });
            }
        }
        let mut ids = HashSet::new();
        for c in &self.constraints {
            if !ids.insert(c.id.as_str()) {
                return Err(ModelError::DuplicateConstraint(c.id.clone()));
            }
            if let Some(missing) = c.formula.variables().into_iter().find(|v| !names.contains(v.as_str())) {
                return Err(ModelError::UnknownReference {
                    constraint: c.id.clone(),
                    feature: missing,
                });
            }
        }
        Ok(())
    }

    pub fn features(&self) -> Vec<(&Feature, Option<&Feature>)> {
        self.root.walk()
    }

    /// Feature names in pre-order.
    pub fn feature_names(&self) -> Vec<String> {
        self.root.walk().into_iter().map(|(f, _)| f.name.clone()).collect()
    }

    /// Concrete feature names in pre-order.
    pub fn concrete_features(&self) -> Vec<String> {
        self.root
            .walk()
            .into_iter()
            .filter(|(f, _)| !f.is_abstract)
            .map(|(f, _)| f.name.clone())
            .collect()
    }

    pub fn find_feature(&self, name: &str) -> Option<&Feature> {
        self.root.walk().into_iter().map(|(f, _)| f).find(|f| f.name == name)
    }

    pub fn parent_of(&self, name: &str) -> Option<&Feature> {
        self.root
            .walk()
            .into_iter()
            .find(|(f, _)| f.name == name)
            .and_then(|(_, p)| p)
    }

    pub fn constraint(&self, id: &str) -> Option<&CrossConstraint> {
        self.constraints.iter().find(|c| c.id == id)
    }

    /// Same model with the given constraints dropped.
    pub fn without_constraints(&self, ids: &BTreeSet<String>) -> FeatureModel {
        FeatureModel {
            root: self.root.clone(),
            constraints: self
                .constraints
                .iter()
                .filter(|c| !ids.contains(&c.id))
                .cloned()
                .collect(),
        }
    }

    /// Tree semantics as a list of conjuncts: the root, then for every
    /// parent/child pair `child => parent`, `parent => child` for mandatory
    /// children, and the group clause.
    pub fn structure_formulas(&self) -> Vec<Formula> {
        let mut parts = vec![Formula::var(&self.root.name)];
        for (p, _) in self.root.walk() {
            if p.children.is_empty() {
                continue;
            }
            let pv = || Formula::var(&p.name);
            for c in &p.children {
                parts.push(Formula::implies(Formula::var(&c.name), pv()));
                if p.child_is_mandatory(c) {
                    parts.push(Formula::implies(pv(), Formula::var(&c.name)));
                }
            }
            let any = || Formula::or(p.children.iter().map(|c| Formula::var(&c.name)).collect());
            match p.group {
                GroupKind::And => {}
                GroupKind::Or => parts.push(Formula::implies(pv(), any())),
                GroupKind::Alternative => {
                    let mut exclusive = vec![any()];
                    for (i, a) in p.children.iter().enumerate() {
                        for b in &p.children[i + 1..] {
                            exclusive.push(Formula::not(Formula::and(vec![
                                Formula::var(&a.name),
                                Formula::var(&b.name),
                            ])));
                        }
                    }
                    parts.push(Formula::implies(pv(), Formula::and(exclusive)));
                }
            }
        }
        parts
    }

    pub fn to_formula(&self) -> Formula {
        let mut parts = self.structure_formulas();
        parts.extend(self.constraints.iter().map(|c| c.formula.clone()));
        Formula::and(parts)
    }

    pub fn abstract_count(&self) -> usize {
        self.root.walk().iter().filter(|(f, _)| f.is_abstract).count()
    }
}

/// Propositional semantics of a feature model.
pub fn model_to_formula(m: &FeatureModel) -> Result<Formula, ModelError> {
    m.validate()?;
    Ok(m.to_formula())
}

pub fn find_feature<'a>(m: &'a FeatureModel, name: &str) -> Option<&'a Feature> {
    m.find_feature(name)
}
