//! Variability requirements analysis: worksheet ingestion, feature-model
//! synthesis, SAT-based anomaly detection with requirement traceability, and
//! enumeration of product variants for build and test harnesses.

pub mod analysis;
pub mod error;
pub mod interop;
pub mod logic;
pub mod model;
pub mod rtw;
pub mod synthesis;
pub mod variants;

pub use analysis::{analyze, attribute_conflict, trace_report, AnalysisReport, Anomaly, AnomalyKind, TraceReport};
pub use error::*;
pub use interop::{export_dot, export_xml, import_xml};
pub use logic::{all_sat, parse_formula, sat, Assignment, Formula, SatResult};
pub use model::{model_to_formula, CrossConstraint, Feature, FeatureModel, GroupKind};
pub use rtw::{parse_rtw, validate_rtw, EntryKind, RequirementEntry, Status, ValidationReport, Worksheet};
pub use synthesis::{assemble_model, classify_entry, entry_to_subtree, Assembly, Fragment, Rule, RuleMatch};
pub use variants::{
    emit_config, enumerate_variants, load_feature_map, run_harness, ConfigFormat, FeatureCodeMap, HarnessOptions,
    HarnessReport, Outcome, Sampling, Variant, VariantSet,
};
