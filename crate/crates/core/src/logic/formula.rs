use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::LogicError;

/// Propositional formula over feature names.
///
/// `And`/`Or` always hold at least two operands when built through
/// [`Formula::and`] and [`Formula::or`]; the parser only produces such nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Var(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

pub const KEYWORD_TRUE: &str = "true";
pub const KEYWORD_FALSE: &str = "false";

/// Returns true when `name` is a legal variable identifier.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && name != KEYWORD_TRUE && name != KEYWORD_FALSE
}

impl Formula {
    pub fn var(name: impl Into<String>) -> Self {
        Formula::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    /// Conjunction; zero operands give `True`, one operand is returned as is.
    pub fn and(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction; zero operands give `False`, one operand is returned as is.
    pub fn or(mut parts: Vec<Formula>) -> Self {
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Self {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn iff(lhs: Formula, rhs: Formula) -> Self {
        Formula::Iff(Box::new(lhs), Box::new(rhs))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Formula::Var(name) => Some(name),
            _ => None,
        }
    }

    /// Sorted set of variable names occurring in the formula.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Var(name) => {
                out.insert(name.clone());
            }
            Formula::Not(child) => child.collect_variables(out),
            Formula::And(children) | Formula::Or(children) => {
                for c in children {
                    c.collect_variables(out);
                }
            }
            Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.collect_variables(out);
                r.collect_variables(out);
            }
        }
    }

    /// Checks the structural invariants: identifier syntax and operand counts.
    pub fn check_well_formed(&self) -> Result<(), LogicError> {
        match self {
            Formula::True | Formula::False => Ok(()),
            Formula::Var(name) if is_identifier(name) => Ok(()),
            Formula::Var(name) => Err(LogicError::InvalidIdentifier(name.clone())),
            Formula::Not(child) => child.check_well_formed(),
            Formula::And(children) | Formula::Or(children) => {
                if children.len() < 2 {
                    return Err(LogicError::Arity(children.len()));
                }
                children.iter().try_for_each(Formula::check_well_formed)
            }
            Formula::Implies(l, r) | Formula::Iff(l, r) => {
                l.check_well_formed()?;
                r.check_well_formed()
            }
        }
    }

    pub fn eval(&self, assignment: &Assignment) -> Result<bool, LogicError> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Var(name) => assignment
                .get(name)
                .ok_or_else(|| LogicError::UndefinedVariable(name.clone()))?,
            Formula::Not(child) => !child.eval(assignment)?,
            Formula::And(children) => {
                // evaluate every operand so undefined variables are always reported
                let mut value = true;
                for c in children {
                    value &= c.eval(assignment)?;
                }
                value
            }
            Formula::Or(children) => {
                let mut value = false;
                for c in children {
                    value |= c.eval(assignment)?;
                }
                value
            }
            Formula::Implies(l, r) => {
                let (l, r) = (l.eval(assignment)?, r.eval(assignment)?);
                !l || r
            }
            Formula::Iff(l, r) => l.eval(assignment)? == r.eval(assignment)?,
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::True | Formula::False | Formula::Var(_) => 6,
            Formula::Not(_) => 5,
            Formula::And(_) => 4,
            Formula::Or(_) => 3,
            Formula::Implies(..) => 2,
            Formula::Iff(..) => 1,
        }
    }
}

impl fmt::Display for Formula {
    /// Prints in the constraint DSL, inserting the parentheses needed for
    /// `parse(print(f)) == f`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(out: &mut fmt::Formatter<'_>, c: &Formula, wrap: bool) -> fmt::Result {
            if wrap {
                write!(out, "({c})")
            } else {
                write!(out, "{c}")
            }
        }
        let prec = self.precedence();
        match self {
            Formula::True => f.write_str(KEYWORD_TRUE),
            Formula::False => f.write_str(KEYWORD_FALSE),
            Formula::Var(name) => f.write_str(name),
            Formula::Not(c) => {
                f.write_str("!")?;
                child(f, c, c.precedence() < prec)
            }
            Formula::And(children) | Formula::Or(children) => {
                let op = if matches!(self, Formula::And(_)) { " & " } else { " | " };
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    child(f, c, c.precedence() <= prec)?;
                }
                Ok(())
            }
            Formula::Implies(l, r) => {
                // right-associative
                child(f, l, l.precedence() <= prec)?;
                f.write_str(" => ")?;
                child(f, r, r.precedence() < prec)
            }
            Formula::Iff(l, r) => {
                // left-associative
                child(f, l, l.precedence() < prec)?;
                f.write_str(" <=> ")?;
                child(f, r, r.precedence() <= prec)
            }
        }
    }
}

/// Total map from a declared variable set to truth values.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<String, bool>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: bool) {
        self.0.insert(name.into(), value);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Names assigned `true`, in name order.
    pub fn selected(&self) -> impl Iterator<Item = &str> {
        self.iter().filter(|(_, v)| *v).map(|(k, _)| k)
    }

    pub fn restrict<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Assignment {
        names
            .into_iter()
            .filter_map(|n| self.get(n).map(|v| (n.to_string(), v)))
            .collect()
    }

    pub fn as_map(&self) -> &BTreeMap<String, bool> {
        &self.0
    }
}

impl FromIterator<(String, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (String, bool)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<(&'a str, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (&'a str, bool)>>(iter: I) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

impl From<BTreeMap<String, bool>> for Assignment {
    fn from(map: BTreeMap<String, bool>) -> Self {
        Assignment(map)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn witness(&self) -> Option<&Assignment> {
        match self {
            SatResult::Sat(a) => Some(a),
            SatResult::Unsat => None,
        }
    }
}
