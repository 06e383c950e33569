//! Seeded random models, formulas and worksheets.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use varcore::{
    CrossConstraint, EntryKind, Feature, FeatureModel, Formula, GroupKind, RequirementEntry, Status, Worksheet,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pick<'a, R: Rng>(rng: &mut R, names: &'a [String]) -> &'a String {
    names.choose(rng).expect("non-empty name list")
}

/// A random formula over `vars` with nesting depth at most `depth`.
pub fn formula<R: Rng>(rng: &mut R, vars: &[String], depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..20) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::var(pick(rng, vars)),
        };
    }
    let sub = |rng: &mut R| formula(rng, vars, depth - 1);
    match rng.gen_range(0..5) {
        0 => Formula::Not(Box::new(sub(rng))),
        1 => Formula::And((0..rng.gen_range(2..=3)).map(|_| sub(rng)).collect()),
        2 => Formula::Or((0..rng.gen_range(2..=3)).map(|_| sub(rng)).collect()),
        3 => Formula::implies(sub(rng), sub(rng)),
        _ => Formula::iff(sub(rng), sub(rng)),
    }
}

/// A cross-tree constraint in one of the common shapes, or a small
/// arbitrary formula.
pub fn constraint_formula<R: Rng>(rng: &mut R, vars: &[String]) -> Formula {
    let x = Formula::var(pick(rng, vars));
    let y = Formula::var(pick(rng, vars));
    match rng.gen_range(0..5) {
        0 => Formula::implies(x, y),
        1 => Formula::implies(x, Formula::not(y)),
        2 => Formula::not(Formula::and(vec![x, y])),
        3 => Formula::or(vec![x, y]),
        _ => formula(rng, vars, 2),
    }
}

/// A random model with `1..=max_features` features (root included), mixed
/// group kinds and up to `max_constraints` constraints `C1`, `C2`, ...
pub fn model<R: Rng>(rng: &mut R, max_features: usize, max_constraints: usize) -> FeatureModel {
    let n = rng.gen_range(1..=max_features);
    let names: Vec<String> = std::iter::once("r".to_string())
        .chain((1..n).map(|i| format!("f{i}")))
        .collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        children[rng.gen_range(0..i)].push(i);
    }
    fn build<R: Rng>(rng: &mut R, i: usize, names: &[String], children: &[Vec<usize>]) -> Feature {
        let mut kids = Vec::new();
        for &c in &children[i] {
            let f = build(rng, c, names, children);
            kids.push(f.mandatory(rng.gen_bool(0.35)));
        }
        let group = if kids.len() >= 2 {
            *[GroupKind::And, GroupKind::Or, GroupKind::Alternative]
                .choose(rng)
                .unwrap()
        } else {
            GroupKind::And
        };
        let is_abstract = if i == 0 { rng.gen_bool(0.5) } else { rng.gen_bool(0.25) };
        Feature::new(&names[i], is_abstract).with_group(group, kids)
    }
    let root = build(rng, 0, &names, &children);
    let k = rng.gen_range(0..=max_constraints);
    let constraints = (1..=k)
        .map(|i| CrossConstraint::new(format!("C{i}"), constraint_formula(rng, &names)))
        .collect();
    FeatureModel::new(root, constraints).expect("generated model is well formed")
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    Empty,
    And,
    Grouped,
}

fn entry(id: usize, kind: EntryKind, formula: Formula) -> RequirementEntry {
    RequirementEntry {
        id: format!("GEN-{id}"),
        kind,
        source_doc: "generated".into(),
        source_loc: format!("row {id}"),
        text: "generated entry".into(),
        formula_text: formula.to_string(),
        formula,
        abstract_feature: None,
        concrete_features: Vec::new(),
        parent: None,
        status: Status::Active,
    }
}

fn exactly_one<R: Rng>(rng: &mut R, vars: &[Formula]) -> Formula {
    if rng.gen_bool(0.5) {
        let terms = (0..vars.len())
            .map(|i| {
                Formula::and(
                    vars.iter()
                        .enumerate()
                        .map(|(j, v)| if i == j { v.clone() } else { Formula::not(v.clone()) })
                        .collect(),
                )
            })
            .collect();
        Formula::or(terms)
    } else {
        let mut parts = vec![Formula::or(vars.to_vec())];
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                parts.push(Formula::not(Formula::and(vec![vars[i].clone(), vars[j].clone()])));
            }
        }
        Formula::and(parts)
    }
}

fn iff<R: Rng>(rng: &mut R, p: Formula, body: Formula) -> Formula {
    if rng.gen_bool(0.5) {
        Formula::iff(p, body)
    } else {
        Formula::iff(body, p)
    }
}

/// A random worksheet for model `Root` whose requirement entries use every
/// rule shape the synthesizer accepts. At most `max_concrete` concrete
/// features and `max_constraints` constraint entries are generated.
pub fn worksheet<R: Rng>(rng: &mut R, max_concrete: usize, max_constraints: usize) -> Worksheet {
    let root = "Root".to_string();
    let mut slots: HashMap<String, Slot> = HashMap::from([(root.clone(), Slot::Empty)]);
    let mut attach_points = vec![root.clone()];
    let mut concrete: Vec<String> = Vec::new();
    let mut entries = Vec::new();
    let mut next_abstract = 1;
    let target = rng.gen_range(1..=max_concrete);

    while concrete.len() < target {
        let attach = pick(rng, &attach_points).clone();
        let rule = rng.gen_range(1..=4);
        let grouped = rule >= 3;
        let slot = slots[&attach];
        let mut use_abstract = rng.gen_bool(0.5);
        if (grouped && slot != Slot::Empty) || (!grouped && slot == Slot::Grouped) {
            use_abstract = true;
        }
        if use_abstract && slot == Slot::Grouped {
            continue;
        }
        let room = target - concrete.len();
        let count = if grouped {
            2 + usize::from(rng.gen_bool(0.4))
        } else {
            1 + usize::from(rng.gen_bool(0.4))
        };
        if grouped && room < 2 {
            continue;
        }
        let count = count.min(room.max(1));
        let kids: Vec<String> = (0..count).map(|i| format!("x{}", concrete.len() + i + 1)).collect();
        let vars: Vec<Formula> = kids.iter().map(Formula::var).collect();

        let abstract_name = use_abstract.then(|| {
            let name = format!("Grp_G{next_abstract}");
            next_abstract += 1;
            name
        });
        let p_name = abstract_name.clone().unwrap_or_else(|| attach.clone());
        let p = Formula::var(&p_name);
        let formula = match rule {
            1 if vars.len() == 1 || rng.gen_bool(0.5) => iff(rng, p, Formula::and(vars.clone())),
            1 => Formula::and(vars.iter().map(|v| iff(rng, p.clone(), v.clone())).collect()),
            2 if vars.len() == 1 => Formula::implies(vars[0].clone(), p),
            2 if rng.gen_bool(0.5) => Formula::implies(Formula::or(vars.clone()), p),
            2 => Formula::and(vars.iter().map(|v| Formula::implies(v.clone(), p.clone())).collect()),
            3 => iff(rng, p, Formula::or(vars.clone())),
            _ => {
                let body = exactly_one(rng, &vars);
                iff(rng, p, body)
            }
        };

        let mut e = entry(entries.len() + 1, EntryKind::Requirement, formula);
        e.abstract_feature = abstract_name.clone();
        e.concrete_features = kids.clone();
        e.parent = (attach != root || rng.gen_bool(0.3)).then(|| attach.clone());
        entries.push(e);

        let own = if grouped { Slot::Grouped } else { Slot::And };
        match &abstract_name {
            Some(a) => {
                slots.insert(attach.clone(), Slot::And);
                slots.insert(a.clone(), own);
                attach_points.push(a.clone());
            }
            None => {
                slots.insert(attach.clone(), own);
            }
        }
        for k in &kids {
            slots.insert(k.clone(), Slot::Empty);
            attach_points.push(k.clone());
        }
        concrete.extend(kids);
    }

    for _ in 0..rng.gen_range(0..=max_constraints) {
        let f = constraint_formula(rng, &concrete);
        entries.push(entry(entries.len() + 1, EntryKind::Constraint, f));
    }
    Worksheet {
        model_name: root,
        entries,
    }
}

/// Same worksheet with entries in a random order.
pub fn shuffled<R: Rng>(rng: &mut R, w: &Worksheet) -> Worksheet {
    let mut out = w.clone();
    out.entries.shuffle(rng);
    out
}
