//! Acceptance checks, one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use varcore::analysis::{analyze, AnalysisReport, AnomalyKind};
use varcore::interop::{export_xml, import_xml};
use varcore::logic::{all_sat, parse_formula, Formula};
use varcore::rtw::{parse_rtw, validate_rtw};
use varcore::synthesis::{assemble_model, classify_entry, Rule};
use varcore::variants::{enumerate_variants, load_feature_map, run_harness, HarnessOptions, Sampling};
use varcore::{FeatureModel, GroupKind, VariantError, Worksheet};
use varcore_testkit::{gen, oracle};

/// Corpus size and shape for criteria 1, 2 and 7.
const CORPUS_MODELS: u64 = 200;
const CORPUS_MAX_FEATURES: usize = 12;
const CORPUS_MAX_CONSTRAINTS: usize = 4;
/// Wall-clock budget for criterion 1 (enumeration plus oracle).
const ENUMERATION_BUDGET: Duration = Duration::from_secs(60);
const ORDER_WORKSHEETS: u64 = 100;
const DETERMINISM_RUNS: usize = 2;

type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

type VariantValues = BTreeSet<BTreeMap<String, bool>>;

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: false,
        detail: detail.into(),
    }
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/time")
}

fn data(name: &str) -> String {
    std::fs::read_to_string(data_dir().join(name)).expect("TIME data file")
}

fn sheet(name: &str) -> Worksheet {
    parse_rtw(&data(name)).expect("TIME worksheet parses")
}

fn corpus() -> Vec<FeatureModel> {
    (0..CORPUS_MODELS)
        .map(|seed| gen::model(&mut gen::rng(seed), CORPUS_MAX_FEATURES, CORPUS_MAX_CONSTRAINTS))
        .collect()
}

fn variant_values(m: &FeatureModel) -> VariantValues {
    match enumerate_variants(m) {
        Ok(vs) => vs.variants.into_iter().map(|v| v.values).collect(),
        Err(VariantError::VoidModel) => BTreeSet::new(),
        Err(e) => panic!("enumeration failed: {e}"),
    }
}

fn verdicts_of(r: &AnalysisReport) -> oracle::Verdicts {
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

fn enumeration_matches_oracle(models: &[FeatureModel]) -> Outcome {
    let start = Instant::now();
    let mismatches: Vec<usize> = models
        .iter()
        .enumerate()
        .filter(|(_, m)| variant_values(m) != oracle::variants(m))
        .map(|(i, _)| i)
        .collect();
    let elapsed = start.elapsed();
    let detail = format!(
        "{} models, {} mismatches, {:.1}s (budget {}s)",
        models.len(),
        mismatches.len(),
        elapsed.as_secs_f64(),
        ENUMERATION_BUDGET.as_secs()
    );
    if mismatches.is_empty() && elapsed < ENUMERATION_BUDGET {
        pass(detail)
    } else {
        fail(format!(
            "{detail}; first seeds {:?}",
            &mismatches[..mismatches.len().min(5)]
        ))
    }
}

fn anomalies_match_oracle(models: &[FeatureModel]) -> Outcome {
    let mut disagreements = Vec::new();
    let mut counts = [0usize; 4];
    for (i, m) in models.iter().enumerate() {
        let expected = oracle::verdicts(m);
        counts[0] += usize::from(expected.void);
        counts[1] += expected.dead.len();
        counts[2] += expected.false_optional.len();
        counts[3] += expected.redundant.len();
        if verdicts_of(&analyze(m)) != expected {
            disagreements.push(i);
        }
    }
    let detail = format!(
        "{} disagreements (corpus has {} void, {} dead, {} false-optional, {} redundant)",
        disagreements.len(),
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );
    if disagreements.is_empty() {
        pass(detail)
    } else {
        fail(format!(
            "{detail}; first seeds {:?}",
            &disagreements[..disagreements.len().min(5)]
        ))
    }
}

fn xor_example() -> Outcome {
    let w = sheet("time_initial.rtw");
    let Some(entry) = w.entry("TIME-6") else {
        return fail("TIME-6 missing");
    };
    let rule = match classify_entry(entry, &w.model_name) {
        Ok(r) => r.rule,
        Err(e) => return fail(format!("classification failed: {e}")),
    };
    let solo = Worksheet {
        model_name: w.model_name.clone(),
        entries: vec![entry.clone()],
    };
    let m = match assemble_model(&solo) {
        Ok(a) => a.model,
        Err(e) => return fail(format!("synthesis failed: {e}")),
    };
    let group = m.find_feature("Time_Function_T1001").map(|f| f.group);
    let variants = variant_values(&m);
    let selected: BTreeSet<Vec<String>> = variants
        .iter()
        .map(|v| v.iter().filter(|(_, &on)| on).map(|(f, _)| f.clone()).collect())
        .collect();
    let expected: BTreeSet<Vec<String>> = [vec!["server".to_string()], vec!["client".to_string()]].into();
    let detail = format!("rule {rule}, group {group:?}, variants {selected:?}");
    if rule == Rule::Alternative && group == Some(GroupKind::Alternative) && selected == expected {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn time_case_study() -> Outcome {
    let initial = sheet("time_initial.rtw");
    let report = validate_rtw(&initial);
    let flagged_7 = report
        .errors()
        .any(|f| f.entry.as_deref() == Some("TIME-7") && f.message.contains("processor_count"));
    let assembly = match assemble_model(&initial) {
        Ok(a) => a,
        Err(e) => return fail(format!("initial synthesis failed: {e}")),
    };
    let a_ok = flagged_7 && assembly.flagged == ["TIME-7"];

    let m = &assembly.model;
    let shape = (m.feature_names().len(), m.abstract_count(), m.concrete_features().len());
    let r = analyze(m);
    let expected: Vec<String> = ["TIME-10", "TIME-11", "TIME-16"].map(String::from).to_vec();
    let fo = r
        .anomalies
        .iter()
        .find(|a| matches!(&a.kind, AnomalyKind::FalseOptional { feature, .. } if feature == "virtual_met"));
    let b_ok = fo.is_some_and(|a| a.explanation == expected) && shape == (24, 9, 15);

    let final_sheet = sheet("time_final.rtw");
    let (c_ok, count) = match assemble_model(&final_sheet) {
        Ok(a) => {
            let r = analyze(&a.model);
            let n = variant_values(&a.model).len();
            (r.is_valid() && n == 112, n)
        }
        Err(_) => (false, 0),
    };
    let detail = format!(
        "(a) TIME-7 flagged: {a_ok}; (b) false-optional explanation {:?}: {b_ok}; (c) valid with {count} variants: {c_ok}",
        fo.map(|a| a.explanation.clone()).unwrap_or_default()
    );
    if a_ok && b_ok && c_ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn harness_shape() -> Outcome {
    let m = match assemble_model(&sheet("time_final.rtw")) {
        Ok(a) => a.model,
        Err(e) => return fail(format!("synthesis failed: {e}")),
    };
    let vs = match enumerate_variants(&m) {
        Ok(vs) => vs,
        Err(e) => return fail(format!("enumeration failed: {e}")),
    };
    let map = load_feature_map(&data("time_map.csv"), &m).expect("TIME feature map loads");
    let dir = tempfile::tempdir().expect("temp dir");
    let mut opts = HarnessOptions::new(dir.path());
    opts.jobs = 8;
    let build = "if grep -q 'CFG_SIGNAL true' {config} || grep -q 'CFG_VIRTUAL false' {config}; then exit 1; fi";
    let unit = format!("{build}; if grep -q 'CFG_CLIENT true' {{config}}; then exit 2; fi");
    let totals = |cmd: &str| run_harness(&vs, &map, cmd, &Sampling::All, &opts).map(|r| (r.passed, r.failed, r.total));
    match (totals(build), totals(&unit)) {
        (Ok(b), Ok(u)) => {
            let detail = format!("build {}/{}/{}, unit {}/{}/{}", b.0, b.1, b.2, u.0, u.1, u.2);
            if b == (48, 64, 112) && u == (36, 76, 112) {
                pass(detail)
            } else {
                fail(detail)
            }
        }
        (b, u) => fail(format!("harness error: {:?} {:?}", b.err(), u.err())),
    }
}

fn order_insensitivity() -> Outcome {
    let mut bad = Vec::new();
    for seed in 0..ORDER_WORKSHEETS {
        let mut rng = gen::rng(10_000 + seed);
        let w = gen::worksheet(&mut rng, 8, 3);
        let p = gen::shuffled(&mut rng, &w);
        let (Ok(a), Ok(b)) = (assemble_model(&w), assemble_model(&p)) else {
            bad.push(seed);
            continue;
        };
        let same_variants = variant_values(&a.model) == variant_values(&b.model);
        let same_verdicts = verdicts_of(&analyze(&a.model)) == verdicts_of(&analyze(&b.model));
        if !(same_variants && same_verdicts) {
            bad.push(seed);
        }
    }
    let detail = format!("{ORDER_WORKSHEETS} worksheets, {} differ", bad.len());
    if bad.is_empty() {
        pass(detail)
    } else {
        fail(format!("{detail}; first seeds {:?}", &bad[..bad.len().min(5)]))
    }
}

fn equivalent(x: &Formula, y: &Formula) -> bool {
    let iff = Formula::iff(x.clone(), y.clone());
    let names: Vec<String> = iff.variables().into_iter().collect();
    all_sat(&iff, &names)
        .map(|v| v.len() == 1 << names.len())
        .unwrap_or(false)
}

fn round_trips(models: &[FeatureModel]) -> Outcome {
    let mut formula_failures = 0;
    let mut xml_failures = 0;
    let mut formulas = 0;
    for (i, m) in models.iter().enumerate() {
        let names = oracle::feature_names(m);
        let extra = gen::formula(&mut gen::rng(i as u64), &names, 4);
        for f in m.constraints.iter().map(|c| &c.formula).chain([&extra]) {
            formulas += 1;
            let text = f.to_string();
            if parse_formula(&text).ok().as_ref() != Some(f) {
                formula_failures += 1;
            }
        }
        let xml = export_xml(m);
        let ok = import_xml(&xml).is_ok_and(|back| {
            back.root == m.root
                && back.constraints.len() == m.constraints.len()
                && back
                    .constraints
                    .iter()
                    .zip(&m.constraints)
                    .all(|(a, b)| a.id == b.id && equivalent(&a.formula, &b.formula))
                && export_xml(&back) == xml
        });
        if !ok {
            xml_failures += 1;
        }
    }
    let detail = format!(
        "{formulas} formulas ({formula_failures} failures), {} models ({xml_failures} XML failures)",
        models.len()
    );
    if formula_failures == 0 && xml_failures == 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// Stdout, exit code and every file written under `dir`, for one run.
#[derive(PartialEq, Eq)]
struct Run {
    stdout: Vec<u8>,
    code: Option<i32>,
    files: BTreeMap<String, Vec<u8>>,
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let Ok(entries) = std::fs::read_dir(dir) else { return };
        for e in entries.flatten() {
            let path = e.path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap_or_default());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn varcore(args: &[&str], cwd: &Path) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_varcore"))
        .args(args)
        .current_dir(cwd)
        .env_remove("VARCORE_WORKDIR")
        .output()
        .expect("varcore binary runs");
    Run {
        stdout: out.stdout,
        code: out.status.code(),
        files: snapshot(cwd),
    }
}

fn cli_determinism() -> Outcome {
    let data = data_dir();
    let initial = data.join("time_initial.rtw").display().to_string();
    let fin = data.join("time_final.rtw").display().to_string();
    let map = data.join("time_map.csv").display().to_string();
    let build = "if grep -q 'CFG_SIGNAL true' {config}; then exit 1; fi";
    let prepare: &[&[&str]] = &[
        &["model", &fin, "--xml", "time.xml"],
        &["enumerate", "--rtw", &fin, "--out", "vars"],
    ];
    let commands: Vec<Vec<&str>> = vec![
        vec!["validate", &initial, "--format", "json"],
        vec![
            "model", &fin, "--xml", "out.xml", "--dot", "out.dot", "--format", "json",
        ],
        vec![
            "analyze",
            "--rtw",
            &initial,
            "--format",
            "json",
            "--dot",
            "anomalies.dot",
        ],
        vec!["analyze", "--model", "time.xml", "--format", "json"],
        vec!["enumerate", "--model", "time.xml", "--out", "vars2", "--format", "json"],
        vec![
            "genconfig",
            "--variants",
            "vars",
            "--map",
            &map,
            "--out",
            "configs",
            "--format",
            "json",
        ],
        vec![
            "test",
            "--variants",
            "vars",
            "--map",
            &map,
            "--cmd",
            build,
            "--sample",
            "random:10:42",
            "--jobs",
            "4",
            "--format",
            "json",
            "--workdir",
            "work",
        ],
    ];
    let mut runs: Vec<Vec<Run>> = Vec::new();
    for _ in 0..DETERMINISM_RUNS {
        let dir = tempfile::tempdir().expect("temp dir");
        for args in prepare {
            varcore(args, dir.path());
        }
        runs.push(commands.iter().map(|args| varcore(args, dir.path())).collect());
    }
    let differing: Vec<&str> = commands
        .iter()
        .enumerate()
        .filter(|(i, _)| runs.iter().any(|r| r[*i] != runs[0][*i]))
        .map(|(_, args)| args[0])
        .collect();
    let usable = runs[0]
        .iter()
        .all(|r| matches!(r.code, Some(0 | 1)) && !r.stdout.is_empty());
    let detail = format!(
        "{} subcommand runs x{DETERMINISM_RUNS}, differing: {differing:?}",
        commands.len()
    );
    if differing.is_empty() && usable {
        pass(detail)
    } else {
        fail(format!("{detail}; all produced output: {usable}"))
    }
}

fn main() {
    let models = corpus();
    let checks: Vec<Check> = vec![
        (
            "enumeration equals truth-table oracle",
            Box::new(|| enumeration_matches_oracle(&models)),
        ),
        (
            "anomaly verdicts equal definitions",
            Box::new(|| anomalies_match_oracle(&models)),
        ),
        (
            "XOR entry is an alternative group with 2 variants",
            Box::new(xor_example),
        ),
        (
            "TIME worksheet: flag, false-optional, 112 variants",
            Box::new(time_case_study),
        ),
        ("harness totals 48/64/112 and 36/76/112", Box::new(harness_shape)),
        (
            "entry order does not change variants or verdicts",
            Box::new(order_insensitivity),
        ),
        ("formula and XML round trips", Box::new(|| round_trips(&models))),
        ("subcommands are deterministic", Box::new(cli_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome = check();
        let verdict = if outcome.ok { "PASS" } else { "FAIL" };
        println!("{verdict} {} {name}: {}", i + 1, outcome.detail);
        failed += usize::from(!outcome.ok);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
