//! Exhaustive reference semantics. Nothing here calls the solver, the
//! encoder or `Formula::eval`; models are interpreted straight from the tree.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use varcore::{EntryKind, Feature, FeatureModel, Formula, GroupKind, Worksheet};

pub type Config = HashMap<String, bool>;

pub fn eval(f: &Formula, c: &Config) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Var(v) => *c.get(v).unwrap_or_else(|| panic!("oracle: unbound variable {v}")),
        Formula::Not(x) => !eval(x, c),
        Formula::And(xs) => xs.iter().all(|x| eval(x, c)),
        Formula::Or(xs) => xs.iter().any(|x| eval(x, c)),
        Formula::Implies(a, b) => !eval(a, c) || eval(b, c),
        Formula::Iff(a, b) => eval(a, c) == eval(b, c),
    }
}

fn all_features(f: &Feature, out: &mut Vec<String>) {
    out.push(f.name.clone());
    for c in &f.children {
        all_features(c, out);
    }
}

pub fn feature_names(m: &FeatureModel) -> Vec<String> {
    let mut out = Vec::new();
    all_features(&m.root, &mut out);
    out
}

pub fn concrete_names(m: &FeatureModel) -> Vec<String> {
    fn walk(f: &Feature, out: &mut Vec<String>) {
        if !f.is_abstract {
            out.push(f.name.clone());
        }
        for c in &f.children {
            walk(c, out);
        }
    }
    let mut out = Vec::new();
    walk(&m.root, &mut out);
    out
}

fn tree_ok(f: &Feature, c: &Config) -> bool {
    let on = c[&f.name];
    let selected = f.children.iter().filter(|x| c[&x.name]).count();
    if !on && selected > 0 {
        return false;
    }
    if on {
        let ok = match f.group {
            GroupKind::And => f.children.iter().all(|x| !x.mandatory || c[&x.name]),
            GroupKind::Or => f.children.is_empty() || selected >= 1,
            GroupKind::Alternative => f.children.is_empty() || selected == 1,
        };
        if !ok {
            return false;
        }
    }
    f.children.iter().all(|x| tree_ok(x, c))
}

/// Whether `c` is a valid configuration, with only the constraints whose
/// index is in `enabled` applied.
pub fn valid_with(m: &FeatureModel, c: &Config, enabled: &[bool]) -> bool {
    c[&m.root.name]
        && tree_ok(&m.root, c)
        && m.constraints
            .iter()
            .zip(enabled)
            .all(|(k, &on)| !on || eval(&k.formula, c))
}

pub fn valid(m: &FeatureModel, c: &Config) -> bool {
    valid_with(m, c, &vec![true; m.constraints.len()])
}

/// Every assignment over `names`, in binary counting order.
pub fn cube(names: &[String]) -> impl Iterator<Item = Config> + '_ {
    assert!(names.len() <= 24, "oracle cube too large");
    (0u64..1 << names.len()).map(move |bits| {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), bits >> i & 1 == 1))
            .collect()
    })
}

pub fn configurations(m: &FeatureModel) -> Vec<Config> {
    let names = feature_names(m);
    cube(&names).filter(|c| valid(m, c)).collect()
}

/// Distinct projections onto concrete features.
pub fn variants(m: &FeatureModel) -> BTreeSet<BTreeMap<String, bool>> {
    let concrete = concrete_names(m);
    configurations(m)
        .into_iter()
        .map(|c| concrete.iter().map(|n| (n.clone(), c[n])).collect())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verdicts {
    pub void: bool,
    pub dead: BTreeSet<String>,
    pub false_optional: BTreeSet<(String, String)>,
    pub redundant: BTreeSet<String>,
}

fn parents(f: &Feature, out: &mut Vec<(String, String, bool)>) {
    for c in &f.children {
        let mandatory = f.group == GroupKind::And && c.mandatory;
        out.push((c.name.clone(), f.name.clone(), mandatory));
        parents(c, out);
    }
}

/// Anomaly verdicts by enumeration of the full cube.
pub fn verdicts(m: &FeatureModel) -> Verdicts {
    let names = feature_names(m);
    let all: Vec<Config> = cube(&names).collect();
    let n = m.constraints.len();
    let valid_all: Vec<&Config> = all.iter().filter(|c| valid(m, c)).collect();

    let mut v = Verdicts {
        void: valid_all.is_empty(),
        ..Verdicts::default()
    };
    for f in &names {
        if !valid_all.iter().any(|c| c[f]) {
            v.dead.insert(f.clone());
        }
    }
    let mut edges = Vec::new();
    parents(&m.root, &mut edges);
    for (f, p, mandatory) in edges {
        if mandatory || v.dead.contains(&f) {
            continue;
        }
        if !valid_all.iter().any(|c| c[&p] && !c[&f]) {
            v.false_optional.insert((f, p));
        }
    }
    for i in 0..n {
        let mut enabled = vec![true; n];
        enabled[i] = false;
        let implied = all
            .iter()
            .filter(|c| valid_with(m, c, &enabled))
            .all(|c| eval(&m.constraints[i].formula, c));
        if implied {
            v.redundant.insert(m.constraints[i].id.clone());
        }
    }
    v
}

/// Whether the anomaly disappears after dropping the constraints in `removed`.
pub fn verdicts_without(m: &FeatureModel, removed: &BTreeSet<String>) -> Verdicts {
    verdicts(&m.without_constraints(removed))
}

/// Reads the worksheet as plain propositional statements, without building a
/// tree: every active formula holds, the root holds, each entry's abstract
/// feature is equivalent to its attachment parent, and each introduced
/// concrete feature implies the parent it is grouped under.
pub fn worksheet_formula(w: &Worksheet) -> Formula {
    let mut parts = vec![Formula::var(&w.model_name)];
    for e in w.entries.iter().filter(|e| e.status.is_active()) {
        parts.push(e.formula.clone());
        if e.kind != EntryKind::Requirement {
            continue;
        }
        let attach = e.parent.clone().unwrap_or_else(|| w.model_name.clone());
        let group_parent = match &e.abstract_feature {
            Some(a) => {
                parts.push(Formula::iff(Formula::var(a), Formula::var(&attach)));
                a.clone()
            }
            None => attach,
        };
        for c in &e.concrete_features {
            parts.push(Formula::implies(Formula::var(c), Formula::var(&group_parent)));
        }
    }
    Formula::and(parts)
}

/// Concrete projections of the worksheet reading above.
pub fn worksheet_variants(w: &Worksheet) -> BTreeSet<BTreeMap<String, bool>> {
    let f = worksheet_formula(w);
    let mut names: Vec<String> = f.variables().into_iter().collect();
    names.sort();
    let concrete: BTreeSet<String> = w
        .entries
        .iter()
        .filter(|e| e.status.is_active() && e.kind == EntryKind::Requirement)
        .flat_map(|e| e.concrete_features.iter().cloned())
        .collect();
    cube(&names)
        .filter(|c| eval(&f, c))
        .map(|c| concrete.iter().map(|n| (n.clone(), c[n])).collect())
        .collect()
}
