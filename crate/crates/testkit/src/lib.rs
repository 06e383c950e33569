//! Test support: truth-table oracles that apply the definitions directly,
//! and seeded generators for random models and worksheets.

pub mod gen;
pub mod oracle;
