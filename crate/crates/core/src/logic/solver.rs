//! Small CDCL solver: two watched literals, first-UIP clause learning,
//! non-chronological backjumping and activity-based branching.
//!
//! Each [`Solver::solve`] call starts from an empty trail, so the solver can
//! be queried repeatedly under different assumptions and extended with new
//! clauses between calls (blocking clauses for enumeration). Assumptions are
//! decided one per level, which keeps every learned clause a consequence of
//! the clause database alone, so learned clauses survive between calls.

use std::ops::Not;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

/// A literal packed as `var << 1 | negated`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Self {
        Lit(var.0 << 1 | u32::from(!positive))
    }

    pub fn pos(var: Var) -> Self {
        Lit::new(var, true)
    }

    pub fn neg(var: Var) -> Self {
        Lit::new(var, false)
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Debug, Clone)]
pub struct Solver {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    /// Number of clauses added by the caller; the rest are learned.
    original: usize,
    units: Vec<Lit>,
    watches: Vec<Vec<usize>>,
    trivially_unsat: bool,
    activity: Vec<f64>,
    bump: f64,
    phase: Vec<bool>,
}

struct Search<'a> {
    solver: &'a mut Solver,
    values: Vec<Option<bool>>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    /// Trail length at the start of each decision level.
    limits: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

const ACTIVITY_DECAY: f64 = 0.95;
const ACTIVITY_CEILING: f64 = 1e100;

impl Solver {
    pub fn new() -> Self {
        Self {
            num_vars: 0,
            clauses: Vec::new(),
            original: 0,
            units: Vec::new(),
            watches: Vec::new(),
            trivially_unsat: false,
            activity: Vec::new(),
            bump: 1.0,
            phase: Vec::new(),
        }
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.activity.push(0.0);
        self.phase.push(false);
        v
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Clauses added through [`Solver::add_clause`], learned ones excluded.
    pub fn num_clauses(&self) -> usize {
        self.original + self.units.len()
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        let mut clause: Vec<Lit> = lits.to_vec();
        clause.sort();
        clause.dedup();
        if clause.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        for lit in &clause {
            assert!(lit.var().0 < self.num_vars, "literal refers to unknown variable");
        }
        match clause.len() {
            0 => self.trivially_unsat = true,
            1 => self.units.push(clause[0]),
            _ => {
                self.original += 1;
                self.attach(clause);
            }
        }
    }

    fn attach(&mut self, clause: Vec<Lit>) -> usize {
        let idx = self.clauses.len();
        self.watches[clause[0].index()].push(idx);
        self.watches[clause[1].index()].push(idx);
        self.clauses.push(clause);
        idx
    }

    /// Returns a model (indexed by variable) or `None` when the clauses and
    /// assumptions are jointly unsatisfiable.
    pub fn solve(&mut self, assumptions: &[Lit]) -> Option<Vec<bool>> {
        if self.trivially_unsat {
            return None;
        }
        let n = self.num_vars as usize;
        let mut search = Search {
            solver: self,
            values: vec![None; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::with_capacity(n),
            limits: Vec::new(),
            qhead: 0,
            seen: vec![false; n],
        };
        let units = search.solver.units.clone();
        for lit in units {
            if !search.enqueue(lit, None) {
                search.solver.trivially_unsat = true;
                return None;
            }
        }
        search.run(assumptions)
    }
}

impl Search<'_> {
    fn value(&self, lit: Lit) -> Option<bool> {
        self.values[lit.var().0 as usize].map(|v| v == lit.is_positive())
    }

    fn decision_level(&self) -> usize {
        self.limits.len()
    }

    fn enqueue(&mut self, lit: Lit, reason: Option<usize>) -> bool {
        match self.value(lit) {
            Some(v) => v,
            None => {
                let v = lit.var().0 as usize;
                self.values[v] = Some(lit.is_positive());
                self.level[v] = self.decision_level();
                self.reason[v] = reason;
                self.trail.push(lit);
                true
            }
        }
    }

    /// Unit propagation; returns the conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let falsified = !self.trail[self.qhead];
            self.qhead += 1;
            let watchers = std::mem::take(&mut self.solver.watches[falsified.index()]);
            let mut kept = Vec::with_capacity(watchers.len());
            let mut conflict = None;
            let mut iter = watchers.into_iter();
            for ci in iter.by_ref() {
                let clause = &mut self.solver.clauses[ci];
                if clause[0] == falsified {
                    clause.swap(0, 1);
                }
                let other = clause[0];
                if self.values[other.var().0 as usize].map(|v| v == other.is_positive()) == Some(true) {
                    kept.push(ci);
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let cand = clause[k];
                    let val = self.values[cand.var().0 as usize].map(|v| v == cand.is_positive());
                    if val != Some(false) {
                        clause.swap(1, k);
                        self.solver.watches[cand.index()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                kept.push(ci);
                if !self.enqueue(other, Some(ci)) {
                    conflict = Some(ci);
                    break;
                }
            }
            kept.extend(iter);
            self.solver.watches[falsified.index()].extend(kept);
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn backtrack(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let len = self.limits[level];
        for lit in self.trail.drain(len..) {
            let v = lit.var().0 as usize;
            self.values[v] = None;
            self.reason[v] = None;
            self.solver.phase[v] = lit.is_positive();
        }
        self.limits.truncate(level);
        self.qhead = len;
    }

    fn bump(&mut self, v: usize) {
        let s = &mut *self.solver;
        s.activity[v] += s.bump;
        if s.activity[v] > ACTIVITY_CEILING {
            for a in &mut s.activity {
                *a /= ACTIVITY_CEILING;
            }
            s.bump /= ACTIVITY_CEILING;
        }
    }

    /// First-UIP conflict analysis. Returns the learned clause with the
    /// asserting literal first and the level to jump back to.
    fn analyze(&mut self, mut conflict: usize) -> (Vec<Lit>, usize) {
        let current = self.decision_level();
        let mut learned = vec![Lit(0)];
        let mut pending = 0usize;
        let mut idx = self.trail.len();
        let mut resolved: Option<Var> = None;
        loop {
            let clause = self.solver.clauses[conflict].clone();
            for q in clause {
                let v = q.var().0 as usize;
                if Some(q.var()) == resolved || self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                self.seen[v] = true;
                self.bump(v);
                if self.level[v] == current {
                    pending += 1;
                } else {
                    learned.push(q);
                }
            }
            let p = loop {
                idx -= 1;
                let p = self.trail[idx];
                if self.seen[p.var().0 as usize] {
                    break p;
                }
            };
            let v = p.var().0 as usize;
            self.seen[v] = false;
            pending -= 1;
            if pending == 0 {
                learned[0] = !p;
                break;
            }
            resolved = Some(p.var());
            conflict = self.reason[v].expect("implied literal has a reason");
        }
        for q in &learned[1..] {
            self.seen[q.var().0 as usize] = false;
        }
        let mut jump = 0;
        if learned.len() > 1 {
            let (best, lvl) = learned[1..]
                .iter()
                .enumerate()
                .map(|(i, q)| (i + 1, self.level[q.var().0 as usize]))
                .max_by_key(|&(i, l)| (l, std::cmp::Reverse(i)))
                .expect("non-empty tail");
            learned.swap(1, best);
            jump = lvl;
        }
        self.solver.bump /= ACTIVITY_DECAY;
        (learned, jump)
    }

    fn pick_branch(&self) -> Option<Var> {
        let mut best: Option<usize> = None;
        for v in 0..self.values.len() {
            if self.values[v].is_none() && best.is_none_or(|b| self.solver.activity[v] > self.solver.activity[b]) {
                best = Some(v);
            }
        }
        best.map(|v| Var(v as u32))
    }

    fn run(&mut self, assumptions: &[Lit]) -> Option<Vec<bool>> {
        loop {
            if let Some(conflict) = self.propagate() {
                if self.decision_level() == 0 {
                    self.solver.trivially_unsat = true;
                    return None;
                }
                let (learned, jump) = self.analyze(conflict);
                self.backtrack(jump);
                let asserting = learned[0];
                if learned.len() == 1 {
                    self.solver.units.push(asserting);
                    self.enqueue(asserting, None);
                } else {
                    let ci = self.solver.attach(learned);
                    self.enqueue(asserting, Some(ci));
                }
                continue;
            }
            let level = self.decision_level();
            let decision = if level < assumptions.len() {
                let a = assumptions[level];
                match self.value(a) {
                    Some(true) => {
                        self.limits.push(self.trail.len());
                        continue;
                    }
                    Some(false) => return None,
                    None => a,
                }
            } else {
                match self.pick_branch() {
                    Some(v) => Lit::new(v, self.solver.phase[v.0 as usize]),
                    None => return Some(self.values.iter().map(|v| v.unwrap_or(false)).collect()),
                }
            };
            self.limits.push(self.trail.len());
            self.enqueue(decision, None);
        }
    }
}
