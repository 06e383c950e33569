//! Structural (Tseitin) clausification into a [`Solver`].
//!
//! Named variables get solver variables in registration order; every
//! compound subformula gets an auxiliary variable constrained to be
//! equivalent to it. Auxiliary variables never appear in projections.

use std::collections::HashMap;

use super::formula::{Assignment, Formula};
use super::solver::{Lit, Solver, Var};

#[derive(Debug, Clone, Default)]
pub struct Encoder {
    pub solver: Solver,
    names: Vec<String>,
    index: HashMap<String, Var>,
    constant: Option<Var>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the solver variable for `name`, allocating it on first use.
    pub fn named(&mut self, name: &str) -> Var {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = self.solver.new_var();
        self.index.insert(name.to_string(), v);
        self.names.push(name.to_string());
        v
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.index.get(name).copied()
    }

    /// Named variables in registration order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn fresh(&mut self) -> Var {
        self.solver.new_var()
    }

    fn true_lit(&mut self) -> Lit {
        let v = match self.constant {
            Some(v) => v,
            None => {
                let v = self.solver.new_var();
                self.solver.add_clause(&[Lit::pos(v)]);
                self.constant = Some(v);
                v
            }
        };
        Lit::pos(v)
    }

    /// Returns a literal equivalent to `f`.
    pub fn encode(&mut self, f: &Formula) -> Lit {
        match f {
            Formula::True => self.true_lit(),
            Formula::False => !self.true_lit(),
            Formula::Var(name) => Lit::pos(self.named(name)),
            Formula::Not(child) => !self.encode(child),
            Formula::And(children) => {
                let lits: Vec<Lit> = children.iter().map(|c| self.encode(c)).collect();
                let out = Lit::pos(self.fresh());
                for &l in &lits {
                    self.solver.add_clause(&[!out, l]);
                }
                let mut big: Vec<Lit> = lits.iter().map(|&l| !l).collect();
                big.push(out);
                self.solver.add_clause(&big);
                out
            }
            Formula::Or(children) => {
                let lits: Vec<Lit> = children.iter().map(|c| self.encode(c)).collect();
                let out = Lit::pos(self.fresh());
                for &l in &lits {
                    self.solver.add_clause(&[out, !l]);
                }
                let mut big = lits;
                big.push(!out);
                self.solver.add_clause(&big);
                out
            }
            Formula::Implies(l, r) => {
                let a = self.encode(l);
                let b = self.encode(r);
                let out = Lit::pos(self.fresh());
                self.solver.add_clause(&[!out, !a, b]);
                self.solver.add_clause(&[out, a]);
                self.solver.add_clause(&[out, !b]);
                out
            }
            Formula::Iff(l, r) => {
                let a = self.encode(l);
                let b = self.encode(r);
                let out = Lit::pos(self.fresh());
                self.solver.add_clause(&[!out, !a, b]);
                self.solver.add_clause(&[!out, a, !b]);
                self.solver.add_clause(&[out, a, b]);
                self.solver.add_clause(&[out, !a, !b]);
                out
            }
        }
    }

    /// Adds `f` as a hard constraint. Top-level conjunctions, clauses and
    /// literals are asserted directly without auxiliary variables.
    pub fn assert(&mut self, f: &Formula) {
        match f {
            Formula::True => {}
            Formula::And(children) => {
                for c in children {
                    self.assert(c);
                }
            }
            Formula::Or(children) => {
                let lits: Vec<Lit> = children.iter().map(|c| self.encode(c)).collect();
                self.solver.add_clause(&lits);
            }
            Formula::Implies(l, r) => {
                let a = self.encode(l);
                let b = self.encode(r);
                self.solver.add_clause(&[!a, b]);
            }
            _ => {
                let lit = self.encode(f);
                self.solver.add_clause(&[lit]);
            }
        }
    }

    /// Projects a solver model onto the given named variables.
    pub fn project<'a>(&self, model: &[bool], names: impl IntoIterator<Item = &'a String>) -> Assignment {
        names
            .into_iter()
            .map(|n| {
                let v = self.index[n.as_str()];
                (n.clone(), model[v.0 as usize])
            })
            .collect()
    }
}
