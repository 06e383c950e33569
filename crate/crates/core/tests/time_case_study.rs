use std::collections::BTreeSet;
use std::path::PathBuf;

use varcore::analysis::{analyze, attribute_conflict, trace_report, AnomalyKind};
use varcore::rtw::{parse_rtw, validate_rtw, Status};
use varcore::synthesis::{assemble_model, classify_entry, Rule};
use varcore::variants::{enumerate_variants, load_feature_map};
use varcore::Worksheet;

fn data(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/time")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn sheet(name: &str) -> Worksheet {
    parse_rtw(&data(name)).unwrap()
}

#[test]
fn worksheet_shape() {
    let w = sheet("time_initial.rtw");
    assert_eq!(w.model_name, "Time");
    assert_eq!(w.entries.len(), 17);
    let kinds = w
        .entries
        .iter()
        .filter(|e| e.kind == varcore::EntryKind::Requirement)
        .count();
    assert_eq!((kinds, w.entries.len() - kinds), (10, 7));
    let r = classify_entry(w.entry("TIME-6").unwrap(), &w.model_name).unwrap();
    assert_eq!(r.rule, Rule::Alternative);
}

#[test]
fn undefined_processor_count_is_flagged() {
    let w = sheet("time_initial.rtw");
    let report = validate_rtw(&w);
    let finding = report.errors().find(|f| f.entry.as_deref() == Some("TIME-7")).unwrap();
    assert!(finding.message.contains("processor_count"));
    let a = assemble_model(&w).unwrap();
    assert_eq!(a.flagged, vec!["TIME-7"]);
    assert!(a.model.constraint("TIME-7").is_none());
}

#[test]
fn initial_model_has_false_optional_virtual_met() {
    let a = assemble_model(&sheet("time_initial.rtw")).unwrap();
    let m = &a.model;
    assert_eq!(m.feature_names().len(), 24);
    assert_eq!(m.abstract_count(), 9);
    assert_eq!(m.concrete_features().len(), 15);
    let r = analyze(m);
    assert_eq!(r.false_optional_features(), vec![("virtual_met", "met")]);
    assert!(r.dead_features().is_empty());
    let fo = r
        .anomalies
        .iter()
        .find(|a| matches!(a.kind, AnomalyKind::FalseOptional { .. }))
        .unwrap();
    assert_eq!(fo.explanation, vec!["TIME-10", "TIME-11", "TIME-16"]);
    let conflict = r
        .anomalies
        .iter()
        .find(|a| matches!(a.kind, AnomalyKind::ConstraintConflict { .. }))
        .unwrap();
    assert!(conflict.explanation.contains(&"TIME-11".to_string()));

    // any single one of the three constraints is a minimal correction
    let mcs = attribute_conflict(m, fo).unwrap();
    assert_eq!(mcs, vec!["TIME-10"]);
    let without_11 = m.without_constraints(&BTreeSet::from(["TIME-11".to_string()]));
    assert!(analyze(&without_11).false_optional_features().is_empty());

    let trace = trace_report(&r, &sheet("time_initial.rtw")).unwrap();
    let rows: Vec<&str> = trace.anomalies[0].rows.iter().map(|p| p.id.as_str()).collect();
    for id in ["TIME-10", "TIME-11", "TIME-16"] {
        assert!(rows.contains(&id));
    }
    assert!(trace.anomalies[0]
        .rows
        .iter()
        .all(|p| p.source_doc == "cFE User's Guide"));
}

#[test]
fn final_model_is_valid_with_112_variants() {
    let w = sheet("time_final.rtw");
    assert!(matches!(w.entry("TIME-11").unwrap().status, Status::Flagged(_)));
    let m = assemble_model(&w).unwrap().model;
    let r = analyze(&m);
    assert!(r.is_valid(), "{}", r.to_text());
    assert_eq!(r.statistics.variants, Some(112));
    let vs = enumerate_variants(&m).unwrap();
    assert_eq!(vs.len(), 112);
    let map = load_feature_map(&data("time_map.csv"), &m).unwrap();
    assert_eq!(map.entries.len(), 15);
}

#[test]
fn unknown_trace_id_is_an_error() {
    let m = assemble_model(&sheet("time_initial.rtw")).unwrap().model;
    let r = analyze(&m);
    let mut w = sheet("time_initial.rtw");
    w.entries.retain(|e| e.id != "TIME-10");
    assert!(trace_report(&r, &w).is_err());
    let empty = analyze(&assemble_model(&sheet("time_final.rtw")).unwrap().model);
    assert!(trace_report(&empty, &w).unwrap().anomalies.is_empty());
}
