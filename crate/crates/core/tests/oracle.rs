use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use varcore::analysis::{analyze, attribute_kind, AnomalyKind};
use varcore::variants::enumerate_variants;
use varcore::{FeatureModel, VariantError};
use varcore_testkit::{gen, oracle};

fn random_model(seed: u64) -> FeatureModel {
    gen::model(&mut gen::rng(seed), 12, 4)
}

fn enumerated(m: &FeatureModel) -> BTreeSet<BTreeMap<String, bool>> {
    match enumerate_variants(m) {
        Ok(vs) => vs.variants.into_iter().map(|v| v.values).collect(),
        Err(VariantError::VoidModel) => BTreeSet::new(),
        Err(e) => panic!("enumeration failed: {e}"),
    }
}

fn verdicts_of(m: &FeatureModel) -> oracle::Verdicts {
    let r = analyze(m);
    oracle::Verdicts {
        void: r.is_void(),
        dead: r.dead_features().into_iter().map(str::to_string).collect(),
        false_optional: r
            .false_optional_features()
            .into_iter()
            .map(|(f, p)| (f.to_string(), p.to_string()))
            .collect(),
        redundant: r.redundant_constraints().into_iter().map(str::to_string).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn variants_match_truth_table(seed in any::<u64>()) {
        let m = random_model(seed);
        prop_assert_eq!(enumerated(&m), oracle::variants(&m));
    }

    #[test]
    fn verdicts_match_definitions(seed in any::<u64>()) {
        let m = random_model(seed);
        prop_assert_eq!(verdicts_of(&m), oracle::verdicts(&m));
    }

    #[test]
    fn dead_and_false_optional_are_disjoint(seed in any::<u64>()) {
        let r = analyze(&random_model(seed));
        let dead: BTreeSet<&str> = r.dead_features().into_iter().collect();
        prop_assert!(r.false_optional_features().iter().all(|(f, _)| !dead.contains(f)));
    }

    #[test]
    fn dropping_a_redundant_constraint_keeps_configurations(seed in any::<u64>()) {
        let m = random_model(seed);
        let before: BTreeSet<Vec<(String, bool)>> = oracle::configurations(&m)
            .into_iter()
            .map(|c| c.into_iter().collect::<BTreeMap<_, _>>().into_iter().collect())
            .collect();
        for id in analyze(&m).redundant_constraints() {
            let smaller = m.without_constraints(&BTreeSet::from([id.to_string()]));
            let after: BTreeSet<Vec<(String, bool)>> = oracle::configurations(&smaller)
                .into_iter()
                .map(|c| c.into_iter().collect::<BTreeMap<_, _>>().into_iter().collect())
                .collect();
            prop_assert_eq!(&before, &after);
        }
    }

    #[test]
    fn corrections_are_minimal(seed in any::<u64>()) {
        let m = random_model(seed);
        let r = analyze(&m);
        let present = |v: &oracle::Verdicts, k: &AnomalyKind| match k {
            AnomalyKind::VoidModel => v.void,
            AnomalyKind::DeadFeature { feature } => v.dead.contains(feature),
            AnomalyKind::FalseOptional { feature, parent } => v.false_optional.contains(&(feature.clone(), parent.clone())),
            _ => unreachable!(),
        };
        for a in &r.anomalies {
            if !matches!(a.kind, AnomalyKind::VoidModel | AnomalyKind::DeadFeature { .. } | AnomalyKind::FalseOptional { .. }) {
                continue;
            }
            let set = attribute_kind(&m, &a.kind).unwrap();
            let removed: BTreeSet<String> = set.iter().cloned().collect();
            if set.is_empty() {
                let none: BTreeSet<String> = m.constraints.iter().map(|c| c.id.clone()).collect();
                prop_assert!(present(&oracle::verdicts_without(&m, &none), &a.kind));
                continue;
            }
            prop_assert!(!present(&oracle::verdicts_without(&m, &removed), &a.kind));
            for id in &set {
                let mut smaller = removed.clone();
                smaller.remove(id);
                prop_assert!(present(&oracle::verdicts_without(&m, &smaller), &a.kind));
            }
        }
    }

    #[test]
    fn explanations_still_produce_the_anomaly(seed in any::<u64>()) {
        let m = random_model(seed);
        for a in analyze(&m).anomalies {
            if !matches!(a.kind, AnomalyKind::DeadFeature { .. } | AnomalyKind::VoidModel) {
                continue;
            }
            let keep: BTreeSet<&String> = a.explanation.iter().collect();
            let others: BTreeSet<String> = m.constraints.iter().map(|c| c.id.clone()).filter(|id| !keep.contains(id)).collect();
            let v = oracle::verdicts_without(&m, &others);
            match &a.kind {
                AnomalyKind::VoidModel => prop_assert!(v.void),
                AnomalyKind::DeadFeature { feature } => prop_assert!(v.dead.contains(feature)),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn analysis_is_deterministic(seed in any::<u64>()) {
        let m = random_model(seed);
        prop_assert_eq!(analyze(&m).to_json().to_string(), analyze(&m).to_json().to_string());
    }
}
