use criterion::{black_box, criterion_group, criterion_main, Criterion};

use varcore::{all_sat, analyze, assemble_model, enumerate_variants, export_xml, import_xml, parse_formula};
use varcore_bench::{worksheet, TIME_FINAL, TIME_INITIAL};
use varcore_testkit::gen;

fn parsing(c: &mut Criterion) {
    let vars: Vec<String> = (0..8).map(|i| format!("f{i}")).collect();
    let texts: Vec<String> = (0..64)
        .map(|seed| gen::formula(&mut gen::rng(seed), &vars, 5).to_string())
        .collect();
    c.bench_function("parse 64 formulas", |b| {
        b.iter(|| {
            for t in &texts {
                black_box(parse_formula(t).unwrap());
            }
        })
    });
    c.bench_function("parse TIME worksheet", |b| {
        b.iter(|| worksheet(black_box(TIME_INITIAL)))
    });
}

fn time_pipeline(c: &mut Criterion) {
    let initial = assemble_model(&worksheet(TIME_INITIAL)).unwrap().model;
    let fin = assemble_model(&worksheet(TIME_FINAL)).unwrap().model;
    let w = worksheet(TIME_FINAL);
    c.bench_function("assemble TIME model", |b| {
        b.iter(|| assemble_model(black_box(&w)).unwrap())
    });
    c.bench_function("analyze TIME initial", |b| b.iter(|| analyze(black_box(&initial))));
    c.bench_function("analyze TIME final", |b| b.iter(|| analyze(black_box(&fin))));
    let f = fin.to_formula();
    let concrete = fin.concrete_features();
    c.bench_function("all_sat TIME variants", |b| {
        b.iter(|| all_sat(black_box(&f), &concrete).unwrap())
    });
    c.bench_function("enumerate TIME variants", |b| {
        b.iter(|| enumerate_variants(black_box(&fin)).unwrap())
    });
    let xml = export_xml(&fin);
    c.bench_function("XML round trip TIME", |b| {
        b.iter(|| export_xml(&import_xml(black_box(&xml)).unwrap()))
    });
}

fn random_models(c: &mut Criterion) {
    let models: Vec<_> = (0..20).map(|seed| gen::model(&mut gen::rng(seed), 12, 4)).collect();
    c.bench_function("analyze 20 random models", |b| {
        b.iter(|| {
            for m in &models {
                black_box(analyze(m));
            }
        })
    });
}

criterion_group!(benches, parsing, time_pipeline, random_models);
criterion_main!(benches);
