//! Propositional formulas, the constraint DSL, and satisfiability.

mod cnf;
mod formula;
mod parser;
mod solver;

use std::collections::BTreeSet;

pub use cnf::Encoder;
pub use formula::{is_identifier, Assignment, Formula, SatResult, KEYWORD_FALSE, KEYWORD_TRUE};
pub use parser::parse_formula;
pub use solver::{Lit, Solver, Var};

use crate::error::LogicError;

/// Default bound on the number of distinct variables accepted by [`all_sat`].
pub const DEFAULT_VARIABLE_LIMIT: usize = 64;

pub fn sat(f: &Formula) -> SatResult {
    let mut enc = Encoder::new();
    let vars: Vec<String> = f.variables().into_iter().collect();
    for v in &vars {
        enc.named(v);
    }
    enc.assert(f);
    match enc.solver.solve(&[]) {
        Some(model) => SatResult::Sat(enc.project(&model, &vars)),
        None => SatResult::Unsat,
    }
}

/// All distinct projections of satisfying assignments of `f` onto `project`,
/// ordered lexicographically over `project` order with `false < true`.
///
/// Variables in `project` that do not occur in `f` are unconstrained.
pub fn all_sat(f: &Formula, project: &[String]) -> Result<Vec<Assignment>, LogicError> {
    all_sat_with_limit(f, project, DEFAULT_VARIABLE_LIMIT)
}

pub fn all_sat_with_limit(f: &Formula, project: &[String], limit: usize) -> Result<Vec<Assignment>, LogicError> {
    let mut vars = f.variables();
    vars.extend(project.iter().cloned());
    if vars.len() > limit {
        return Err(LogicError::Capacity {
            variables: vars.len(),
            limit,
        });
    }
    let project: Vec<String> = {
        let mut seen = BTreeSet::new();
        project.iter().filter(|p| seen.insert(p.as_str())).cloned().collect()
    };

    let mut enc = Encoder::new();
    let proj_vars: Vec<Var> = project.iter().map(|p| enc.named(p)).collect();
    for v in &vars {
        enc.named(v);
    }
    enc.assert(f);

    let mut out = Vec::new();
    while let Some(model) = enc.solver.solve(&[]) {
        out.push(enc.project(&model, &project));
        let block: Vec<Lit> = proj_vars.iter().map(|&v| Lit::new(v, !model[v.0 as usize])).collect();
        // an empty blocking clause makes the solver unsat: one projection only
        enc.solver.add_clause(&block);
    }
    out.sort_by_key(|a| project.iter().map(|p| a.get(p).unwrap_or(false)).collect::<Vec<_>>());
    Ok(out)
}
