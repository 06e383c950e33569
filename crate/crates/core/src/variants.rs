//! Product variants: enumeration, feature-to-symbol maps, configuration
//! files, and an external build/test harness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::VariantError;
use crate::logic::{all_sat_with_limit, is_identifier, DEFAULT_VARIABLE_LIMIT};
use crate::model::FeatureModel;

pub const VARIANTS_FORMAT: &str = "varcore.variants/v1";
pub const HARNESS_FORMAT: &str = "varcore.harness/v1";
pub const INDEX_FILE: &str = "index.txt";
pub const VARIANT_EXT: &str = "variant";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Variant {
    pub id: String,
    /// Concrete feature name to selection.
    pub values: BTreeMap<String, bool>,
}

impl Variant {
    pub fn selected(&self) -> impl Iterator<Item = &str> {
        self.values.iter().filter(|(_, &v)| v).map(|(k, _)| k.as_str())
    }

    pub fn get(&self, feature: &str) -> Option<bool> {
        self.values.get(feature).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariantSet {
    /// Concrete features in model pre-order.
    pub features: Vec<String>,
    pub variants: Vec<Variant>,
}

impl VariantSet {
    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Variant> {
        self.variants.iter().find(|v| v.id == id)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format": VARIANTS_FORMAT,
            "count": self.len(),
            "features": self.features,
            "variants": self.variants,
        })
    }
}

/// Zero-padded ids, at least three digits wide.
pub fn variant_ids(count: usize) -> Vec<String> {
    let width = count.to_string().len().max(3);
    (1..=count).map(|i| format!("{i:0width$}")).collect()
}

pub fn enumerate_variants(m: &FeatureModel) -> Result<VariantSet, VariantError> {
    enumerate_variants_with_limit(m, DEFAULT_VARIABLE_LIMIT)
}

/// All valid configurations projected onto concrete features, ordered
/// lexicographically over the pre-order feature list (`false < true`).
pub fn enumerate_variants_with_limit(m: &FeatureModel, limit: usize) -> Result<VariantSet, VariantError> {
    let features = m.concrete_features();
    let solutions = all_sat_with_limit(&m.to_formula(), &features, limit)?;
    if solutions.is_empty() {
        return Err(VariantError::VoidModel);
    }
    let ids = variant_ids(solutions.len());
    let variants = ids
        .into_iter()
        .zip(solutions)
        .map(|(id, a)| Variant {
            id,
            values: a.as_map().clone(),
        })
        .collect();
    Ok(VariantSet { features, variants })
}

/// Concrete feature to code symbol, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FeatureCodeMap {
    pub entries: Vec<(String, String)>,
}

impl FeatureCodeMap {
    pub fn symbol(&self, feature: &str) -> Option<&str> {
        self.entries.iter().find(|(f, _)| f == feature).map(|(_, s)| s.as_str())
    }

    /// Checks that the map is total over, and limited to, `features`.
    pub fn check_features(&self, features: &[String]) -> Result<(), VariantError> {
        let known: BTreeSet<&str> = features.iter().map(String::as_str).collect();
        if let Some((f, _)) = self.entries.iter().find(|(f, _)| !known.contains(f.as_str())) {
            return Err(VariantError::UnknownFeature(f.clone()));
        }
        if let Some(f) = features.iter().find(|f| self.symbol(f).is_none()) {
            return Err(VariantError::MissingFeature(f.clone()));
        }
        Ok(())
    }
}

/// Parses a two-column `feature,symbol` file. Blank lines and `#` comments
/// are ignored; a first row reading `feature,symbol` is treated as a header.
pub fn parse_feature_map(text: &str) -> Result<FeatureCodeMap, VariantError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut map = FeatureCodeMap::default();
    let mut symbols: HashMap<String, String> = HashMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| VariantError::MapSyntax {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(i + 1, |p| p.line() as usize);
        if row.iter().all(str::is_empty) {
            continue;
        }
        if row.len() != 2 {
            return Err(VariantError::MapSyntax {
                line,
                message: format!("expected 2 columns, found {}", row.len()),
            });
        }
        let (feature, symbol) = (&row[0], &row[1]);
        if i == 0 && feature.eq_ignore_ascii_case("feature") {
            continue;
        }
        if !is_identifier(feature) {
            return Err(VariantError::MapSyntax {
                line,
                message: format!("invalid feature name `{feature}`"),
            });
        }
        if !is_identifier(symbol) {
            return Err(VariantError::MapSyntax {
                line,
                message: format!("invalid code symbol `{symbol}`"),
            });
        }
        if map.symbol(feature).is_some() {
            return Err(VariantError::DuplicateFeature(feature.to_string()));
        }
        if let Some(first) = symbols.insert(symbol.to_string(), feature.to_string()) {
            return Err(VariantError::DuplicateSymbol {
                symbol: symbol.to_string(),
                first,
                second: feature.to_string(),
            });
        }
        map.entries.push((feature.to_string(), symbol.to_string()));
    }
    Ok(map)
}

/// Parses a feature map and validates it against the model's concrete features.
pub fn load_feature_map(text: &str, m: &FeatureModel) -> Result<FeatureCodeMap, VariantError> {
    let map = parse_feature_map(text)?;
    map.check_features(&m.concrete_features())?;
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigFormat {
    /// `#define SYMBOL true|false`
    #[default]
    CHeader,
    /// `SYMBOL=true|false`
    KeyValue,
}

impl ConfigFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            ConfigFormat::CHeader => "config.h",
            ConfigFormat::KeyValue => "config.cfg",
        }
    }
}

impl FromStr for ConfigFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "c-header" | "header" | "h" => Ok(ConfigFormat::CHeader),
            "key-value" | "kv" => Ok(ConfigFormat::KeyValue),
            other => Err(format!(
                "unknown config format `{other}` (expected c-header or key-value)"
            )),
        }
    }
}

/// One line per map entry, in map order. Features the variant does not
/// mention are emitted as `false`.
pub fn emit_config(v: &Variant, map: &FeatureCodeMap, format: ConfigFormat) -> String {
    let mut out = String::new();
    for (feature, symbol) in &map.entries {
        let value = v.get(feature).unwrap_or(false);
        match format {
            ConfigFormat::CHeader => out.push_str(&format!("#define {symbol} {value}\n")),
            ConfigFormat::KeyValue => out.push_str(&format!("{symbol}={value}\n")),
        }
    }
    out
}

/// Writes `index.txt` plus one `<id>.variant` file of `feature=value`
/// lines per variant.
pub fn write_variants(dir: &Path, vs: &VariantSet) -> Result<(), VariantError> {
    fs::create_dir_all(dir)?;
    let mut index = format!("# {VARIANTS_FORMAT}\n");
    for v in &vs.variants {
        index.push_str(&v.id);
        index.push('\n');
        let mut body = String::new();
        for f in &vs.features {
            body.push_str(&format!("{f}={}\n", v.get(f).unwrap_or(false)));
        }
        fs::write(dir.join(format!("{}.{VARIANT_EXT}", v.id)), body)?;
    }
    fs::write(dir.join(INDEX_FILE), index)?;
    Ok(())
}

pub fn read_variants(dir: &Path) -> Result<VariantSet, VariantError> {
    let index_path = dir.join(INDEX_FILE);
    let syntax = |path: &Path, message: String| VariantError::VariantSyntax {
        path: path.display().to_string(),
        message,
    };
    let index = fs::read_to_string(&index_path)?;
    let mut lines = index.lines();
    match lines.next().map(str::trim) {
        Some(tag) if tag == format!("# {VARIANTS_FORMAT}") => {}
        other => {
            return Err(syntax(
                &index_path,
                format!("expected format tag `# {VARIANTS_FORMAT}`, found {other:?}"),
            ))
        }
    }
    let mut features: Option<Vec<String>> = None;
    let mut variants = Vec::new();
    for id in lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let path = dir.join(format!("{id}.{VARIANT_EXT}"));
        let body = fs::read_to_string(&path)?;
        let mut order = Vec::new();
        let mut values = BTreeMap::new();
        for (n, line) in body.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| syntax(&path, format!("line {}: expected feature=true|false", n + 1)))?;
            let value = match v.trim() {
                "true" => true,
                "false" => false,
                other => return Err(syntax(&path, format!("line {}: invalid value `{other}`", n + 1))),
            };
            let k = k.trim().to_string();
            if values.insert(k.clone(), value).is_some() {
                return Err(syntax(&path, format!("feature `{k}` listed twice")));
            }
            order.push(k);
        }
        match &features {
            None => features = Some(order),
            Some(f) if f.iter().collect::<BTreeSet<_>>() == order.iter().collect() => {}
            Some(_) => return Err(syntax(&path, "feature set differs from the first variant".into())),
        }
        variants.push(Variant {
            id: id.to_string(),
            values,
        });
    }
    Ok(VariantSet {
        features: features.unwrap_or_default(),
        variants,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sampling {
    All,
    Random { n: usize, seed: u64 },
    Ids(Vec<String>),
}

impl FromStr for Sampling {
    type Err = String;

    /// `all`, `random:N:SEED`, or `ids:ID,ID,...`.
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("invalid sampling `{s}` (expected all, random:N:SEED or ids:ID,...)");
        if s == "all" {
            return Ok(Sampling::All);
        }
        if let Some(rest) = s.strip_prefix("random:") {
            let (n, seed) = rest.split_once(':').ok_or_else(bad)?;
            return Ok(Sampling::Random {
                n: n.parse().map_err(|_| bad())?,
                seed: seed.parse().map_err(|_| bad())?,
            });
        }
        if let Some(rest) = s.strip_prefix("ids:") {
            let ids: Vec<String> = rest
                .split(',')
                .map(|x| x.trim().to_string())
                .filter(|x| !x.is_empty())
                .collect();
            return if ids.is_empty() {
                Err(bad())
            } else {
                Ok(Sampling::Ids(ids))
            };
        }
        Err(bad())
    }
}

/// Indices (ascending) of the variants selected by `sampling`.
pub fn select(vs: &VariantSet, sampling: &Sampling) -> Result<Vec<usize>, VariantError> {
    match sampling {
        Sampling::All => Ok((0..vs.len()).collect()),
        Sampling::Random { n, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut picked = rand::seq::index::sample(&mut rng, vs.len(), (*n).min(vs.len())).into_vec();
            picked.sort_unstable();
            Ok(picked)
        }
        Sampling::Ids(ids) => {
            let mut picked = ids
                .iter()
                .map(|id| {
                    vs.variants
                        .iter()
                        .position(|v| &v.id == id)
                        .ok_or_else(|| VariantError::UnknownVariant(id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            picked.sort_unstable();
            picked.dedup();
            Ok(picked)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", content = "exit_code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Pass,
    /// Exit code, absent when the process was killed by a signal.
    Fail(Option<i32>),
    Skipped,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Pass => f.write_str("PASS"),
            Outcome::Fail(Some(code)) => write!(f, "FAIL({code})"),
            Outcome::Fail(None) => f.write_str("FAIL(signal)"),
            Outcome::Skipped => f.write_str("SKIPPED"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariantResult {
    pub id: String,
    #[serde(flatten)]
    pub outcome: Outcome,
    pub values: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HarnessReport {
    pub results: Vec<VariantResult>,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub total: usize,
}

impl HarnessReport {
    fn from_results(results: Vec<VariantResult>) -> Self {
        let count = |want: fn(&Outcome) -> bool| results.iter().filter(|r| want(&r.outcome)).count();
        HarnessReport {
            passed: count(|o| *o == Outcome::Pass),
            failed: count(|o| matches!(o, Outcome::Fail(_))),
            skipped: count(|o| *o == Outcome::Skipped),
            total: results.len(),
            results,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &VariantResult> {
        self.results.iter().filter(|r| matches!(r.outcome, Outcome::Fail(_)))
    }

    /// Requirement ids behind each failing variant's selected features.
    pub fn failure_origins(&self, m: &FeatureModel) -> BTreeMap<String, Vec<String>> {
        self.failures()
            .map(|r| {
                let ids: BTreeSet<String> = r
                    .values
                    .iter()
                    .filter(|(_, &v)| v)
                    .filter_map(|(f, _)| m.find_feature(f).and_then(|f| f.origin.clone()))
                    .collect();
                (r.id.clone(), ids.into_iter().collect())
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&format!("{:<8} {}\n", r.id, r.outcome));
        }
        out.push_str(&format!(
            "pass {}  fail {}  skipped {}  total {}\n",
            self.passed, self.failed, self.skipped, self.total
        ));
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format": HARNESS_FORMAT,
            "totals": {
                "pass": self.passed,
                "fail": self.failed,
                "skipped": self.skipped,
                "total": self.total,
            },
            "results": self.results,
        })
    }
}

#[derive(Debug, Clone)]
pub struct HarnessOptions {
    /// Each variant gets `<workdir>/<id>/` holding its config file and logs.
    pub workdir: PathBuf,
    /// Maximum concurrent commands; 1 runs sequentially.
    pub jobs: usize,
    pub format: ConfigFormat,
}

impl HarnessOptions {
    pub fn new(workdir: impl Into<PathBuf>) -> Self {
        HarnessOptions {
            workdir: workdir.into(),
            jobs: 1,
            format: ConfigFormat::CHeader,
        }
    }
}

pub const CONFIG_PLACEHOLDER: &str = "{config}";
pub const ID_PLACEHOLDER: &str = "{id}";

fn run_one(v: &Variant, map: &FeatureCodeMap, template: &str, opts: &HarnessOptions) -> Result<Outcome, VariantError> {
    let dir = opts.workdir.join(&v.id);
    let workdir_err = |source: io::Error| VariantError::WorkDir {
        path: dir.display().to_string(),
        source,
    };
    fs::create_dir_all(&dir).map_err(workdir_err)?;
    let config = dir.join(opts.format.file_name());
    fs::write(&config, emit_config(v, map, opts.format)).map_err(workdir_err)?;
    let stdout = fs::File::create(dir.join("stdout.log")).map_err(workdir_err)?;
    let stderr = fs::File::create(dir.join("stderr.log")).map_err(workdir_err)?;
    let command = template
        .replace(CONFIG_PLACEHOLDER, &config.display().to_string())
        .replace(ID_PLACEHOLDER, &v.id);
    let status = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .env("VARCORE_VARIANT_ID", &v.id)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr)
        .status()
        .map_err(VariantError::Command)?;
    match status.code() {
        Some(0) => Ok(Outcome::Pass),
        Some(code @ (126 | 127)) => Err(VariantError::Command(io::Error::new(
            io::ErrorKind::NotFound,
            format!("`{command}` exited with {code} (command not found or not executable)"),
        ))),
        code => Ok(Outcome::Fail(code)),
    }
}

/// Runs `template` once per selected variant through `sh -c`, after
/// substituting `{config}` (path of the emitted config file) and `{id}`.
/// Exit status 0 is PASS; anything else is FAIL, except 126/127, which abort
/// the run as a non-executable command.
pub fn run_harness(
    vs: &VariantSet,
    map: &FeatureCodeMap,
    template: &str,
    sampling: &Sampling,
    opts: &HarnessOptions,
) -> Result<HarnessReport, VariantError> {
    if !template.contains(CONFIG_PLACEHOLDER) {
        return Err(VariantError::MissingPlaceholder);
    }
    map.check_features(&vs.features)?;
    let selected = select(vs, sampling)?;
    fs::create_dir_all(&opts.workdir).map_err(|source| VariantError::WorkDir {
        path: opts.workdir.display().to_string(),
        source,
    })?;

    let outcomes: Mutex<Vec<Outcome>> = Mutex::new(vec![Outcome::Skipped; vs.len()]);
    let failure: Mutex<Option<VariantError>> = Mutex::new(None);
    let next = AtomicUsize::new(0);
    let jobs = opts.jobs.clamp(1, selected.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                if failure.lock().unwrap().is_some() {
                    return;
                }
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = selected.get(k) else { return };
                match run_one(&vs.variants[i], map, template, opts) {
                    Ok(o) => outcomes.lock().unwrap()[i] = o,
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        return;
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let results = vs
        .variants
        .iter()
        .zip(outcomes.into_inner().unwrap())
        .map(|(v, outcome)| VariantResult {
            id: v.id.clone(),
            outcome,
            values: v.values.clone(),
        })
        .collect();
    Ok(HarnessReport::from_results(results))
}
