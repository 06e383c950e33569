use std::path::PathBuf;

use varcore::analysis::analyze;
use varcore::rtw::parse_rtw;
use varcore::synthesis::assemble_model;
use varcore::variants::{
    enumerate_variants, load_feature_map, parse_feature_map, read_variants, run_harness, select, write_variants,
    HarnessOptions, Outcome, Sampling, VariantSet,
};
use varcore::{Feature, FeatureModel, GroupKind, VariantError};

fn data(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/time")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn four_variants() -> FeatureModel {
    let root = Feature::new("app", true).with_group(
        GroupKind::And,
        vec![Feature::new("signal", false), Feature::new("trace", false)],
    );
    FeatureModel::new(root, Vec::new()).unwrap()
}

const SMALL_MAP: &str = "signal,APP_SIGNAL\ntrace,APP_TRACE\n";

fn fails_on(symbol_value: &str) -> String {
    format!("if grep -q '{symbol_value}' {{config}}; then exit 1; fi")
}

#[test]
fn signal_stub_splits_four_variants() {
    let m = four_variants();
    let vs = enumerate_variants(&m).unwrap();
    assert_eq!(vs.len(), 4);
    let map = load_feature_map(SMALL_MAP, &m).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut opts = HarnessOptions::new(dir.path());
    opts.jobs = 3;
    let report = run_harness(&vs, &map, &fails_on("APP_SIGNAL true"), &Sampling::All, &opts).unwrap();

    let with_signal = vs.variants.iter().filter(|v| v.get("signal") == Some(true)).count();
    assert_eq!(
        (report.passed, report.failed, report.skipped),
        (4 - with_signal, with_signal, 0)
    );
    for r in &report.results {
        let expected = if r.values["signal"] {
            Outcome::Fail(Some(1))
        } else {
            Outcome::Pass
        };
        assert_eq!(r.outcome, expected, "{}", r.id);
    }
    let ids: Vec<&str> = report.results.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["001", "002", "003", "004"]);
    assert!(dir.path().join("001/config.h").exists());
    assert!(dir.path().join("001/stdout.log").exists());
}

#[test]
fn random_sampling_is_seeded() {
    let m = four_variants();
    let vs = enumerate_variants(&m).unwrap();
    let sampling: Sampling = "random:2:7".parse().unwrap();
    let first = select(&vs, &sampling).unwrap();
    assert_eq!(first.len(), 2);
    assert_eq!(first, select(&vs, &sampling).unwrap());

    let map = load_feature_map(SMALL_MAP, &m).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = HarnessOptions::new(dir.path());
    let a = run_harness(&vs, &map, "test -f {config}", &sampling, &opts).unwrap();
    let b = run_harness(&vs, &map, "test -f {config}", &sampling, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!((a.passed, a.skipped, a.total), (2, 2, 4));
}

#[test]
fn template_errors() {
    let m = four_variants();
    let vs = enumerate_variants(&m).unwrap();
    let map = load_feature_map(SMALL_MAP, &m).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = HarnessOptions::new(dir.path());
    let err = run_harness(&vs, &map, "true", &Sampling::All, &opts).unwrap_err();
    assert!(matches!(err, VariantError::MissingPlaceholder));
    let err = run_harness(&vs, &map, "./no-such-build-script {config}", &Sampling::All, &opts).unwrap_err();
    assert!(matches!(err, VariantError::Command(_)));
    let err = run_harness(&vs, &map, "true {config}", &"ids:999".parse().unwrap(), &opts).unwrap_err();
    assert!(matches!(err, VariantError::UnknownVariant(_)));
}

#[test]
fn incomplete_map_is_rejected() {
    let m = four_variants();
    let vs = enumerate_variants(&m).unwrap();
    let map = parse_feature_map("signal,APP_SIGNAL\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_harness(
        &vs,
        &map,
        "true {config}",
        &Sampling::All,
        &HarnessOptions::new(dir.path()),
    )
    .unwrap_err();
    assert!(matches!(err, VariantError::MissingFeature(f) if f == "trace"));
}

fn time_variants() -> (FeatureModel, VariantSet) {
    let m = assemble_model(&parse_rtw(&data("time_final.rtw")).unwrap())
        .unwrap()
        .model;
    assert!(analyze(&m).is_valid());
    let vs = enumerate_variants(&m).unwrap();
    (m, vs)
}

#[test]
fn time_stub_reproduces_build_and_unit_totals() {
    let (m, vs) = time_variants();
    let map = load_feature_map(&data("time_map.csv"), &m).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut opts = HarnessOptions::new(dir.path());
    opts.jobs = 8;

    let build = "if grep -q 'CFG_SIGNAL true' {config} || grep -q 'CFG_VIRTUAL false' {config}; then exit 1; fi";
    let report = run_harness(&vs, &map, build, &Sampling::All, &opts).unwrap();
    let broken = |signal: bool, virtual_met: bool| signal || !virtual_met;
    let expected_fail = vs
        .variants
        .iter()
        .filter(|v| broken(v.get("signal").unwrap(), v.get("virtual_met").unwrap()))
        .count();
    assert_eq!(report.failed, expected_fail);
    assert_eq!((report.passed, report.failed, report.total), (48, 64, 112));

    let unit = format!("{build}; if grep -q 'CFG_CLIENT true' {{config}}; then exit 2; fi");
    let report = run_harness(&vs, &map, &unit, &Sampling::All, &opts).unwrap();
    let expected_fail = vs
        .variants
        .iter()
        .filter(|v| broken(v.get("signal").unwrap(), v.get("virtual_met").unwrap()) || v.get("client").unwrap())
        .count();
    assert_eq!(report.failed, expected_fail);
    assert_eq!((report.passed, report.failed, report.total), (36, 76, 112));

    let origins = report.failure_origins(&m);
    assert_eq!(origins.len(), 76);
    assert!(origins.values().all(|ids| !ids.is_empty()));
}

#[test]
fn time_configs_never_mention_abstract_features() {
    let (m, vs) = time_variants();
    let map = load_feature_map(&data("time_map.csv"), &m).unwrap();
    let concrete = m.concrete_features();
    for (feature, symbol) in &map.entries {
        assert!(concrete.contains(feature));
        assert!(!symbol.contains("_T10"));
    }
    let text = varcore::emit_config(&vs.variants[0], &map, Default::default());
    assert_eq!(text.lines().count(), 15);
    for name in m.feature_names() {
        if !concrete.contains(&name) {
            assert!(!text.contains(&name), "{name}");
        }
    }
}

#[test]
fn variant_directory_round_trip() {
    let (_, vs) = time_variants();
    let dir = tempfile::tempdir().unwrap();
    write_variants(dir.path(), &vs).unwrap();
    let index = std::fs::read_to_string(dir.path().join("index.txt")).unwrap();
    assert_eq!(index.lines().filter(|l| !l.starts_with('#')).count(), 112);
    let back = read_variants(dir.path()).unwrap();
    assert_eq!(back, vs);
}
