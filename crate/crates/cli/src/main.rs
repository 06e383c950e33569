//! `varcore` command-line front end.
//!
//! Exit status: 0 clean run, 1 anomalies or error-severity findings (or a
//! failing variant under `test`), 2 usage, input or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use varcore::analysis::{analyze, trace_report, TraceReport};
use varcore::interop::{export_dot, export_xml, import_xml_with_warnings};
use varcore::rtw::{parse_rtw, validate_rtw, ValidationReport};
use varcore::synthesis::assemble_model;
use varcore::variants::{
    emit_config, enumerate_variants, parse_feature_map, read_variants, run_harness, write_variants, ConfigFormat,
    FeatureCodeMap, HarnessOptions, Sampling, VariantSet, INDEX_FILE,
};
use varcore::{FeatureModel, VariantError, Worksheet};

const ANALYZE_FORMAT: &str = "varcore.analyze/v1";
const MODEL_FORMAT: &str = "varcore.model/v1";
const GENCONFIG_FORMAT: &str = "varcore.genconfig/v1";

#[derive(Parser)]
#[command(
    name = "varcore",
    version,
    about = "Variability requirements to feature models, anomalies and variants"
)]
struct Cli {
    /// Suppress notes and warnings on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ModelInput {
    /// Requirements traceability worksheet (CSV).
    #[arg(long)]
    rtw: Option<PathBuf>,
    /// Feature model in the XML dialect.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a worksheet for structural problems.
    Validate {
        rtw: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Synthesize a feature model from a worksheet and export it.
    Model {
        rtw: PathBuf,
        /// Write the XML model here (stdout when neither --xml nor --dot is given).
        #[arg(long)]
        xml: Option<PathBuf>,
        /// Write a DOT rendering here.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Report anomalies with explanations, corrections and worksheet trace.
    Analyze {
        #[command(flatten)]
        input: ModelInput,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Also write a DOT rendering with anomalous features marked.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Enumerate every product variant.
    Enumerate {
        #[command(flatten)]
        input: ModelInput,
        /// Export directory: an index file plus one file per variant.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Emit configuration files for exported variants.
    Genconfig {
        #[arg(long)]
        variants: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Variant ids to emit (all when omitted).
        #[arg(long = "id")]
        ids: Vec<String>,
        /// Output directory, one subdirectory per variant. Without it a
        /// single selected variant is printed to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "c-header")]
        config_format: ConfigFormat,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run a build or test command once per selected variant.
    Test {
        #[arg(long)]
        variants: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Command template; `{config}` is replaced by the config file path
        /// and `{id}` by the variant id.
        #[arg(long)]
        cmd: String,
        /// all, random:N:SEED or ids:ID,ID,...
        #[arg(long, default_value = "all")]
        sample: Sampling,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "c-header")]
        config_format: ConfigFormat,
        /// Scratch directory for per-variant configs and logs.
        #[arg(long, env = "VARCORE_WORKDIR", default_value = ".varcore-work")]
        workdir: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    fn content(message: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn at(path: &Path, message: impl std::fmt::Display) -> Self {
        Failure::input(format!("{}: {message}", path.display()))
    }
}

impl From<VariantError> for Failure {
    fn from(e: VariantError) -> Self {
        match e {
            VariantError::VoidModel => Failure::content(e),
            _ => Failure::input(e),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn status(clean: bool) -> ExitCode {
    if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::at(path, e))
}

fn write(path: &Path, content: &str) -> Result<(), Failure> {
    fs::write(path, content).map_err(|e| Failure::at(path, e))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON values serialize"));
}

struct Ctx {
    quiet: bool,
}

impl Ctx {
    fn note(&self, message: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("varcore: {message}");
        }
    }
}

fn load_worksheet(path: &Path) -> Result<Worksheet, Failure> {
    parse_rtw(&read(path)?).map_err(|e| Failure::at(path, e))
}

struct Loaded {
    model: FeatureModel,
    worksheet: Option<Worksheet>,
    validation: Option<ValidationReport>,
}

fn load_model(ctx: &Ctx, input: &ModelInput) -> Result<Loaded, Failure> {
    if let Some(path) = &input.rtw {
        let w = load_worksheet(path)?;
        let assembly = assemble_model(&w).map_err(|e| Failure::content(format!("{}: {e}", path.display())))?;
        return Ok(Loaded {
            model: assembly.model,
            worksheet: Some(w),
            validation: Some(assembly.report),
        });
    }
    let path = input.model.as_ref().expect("clap enforces one input");
    let imported = import_xml_with_warnings(&read(path)?).map_err(|e| Failure::at(path, e))?;
    for w in &imported.warnings {
        ctx.note(format!("{}: {w}", path.display()));
    }
    Ok(Loaded {
        model: imported.model,
        worksheet: None,
        validation: None,
    })
}

fn load_map(path: &Path, vs: &VariantSet) -> Result<FeatureCodeMap, Failure> {
    let map = parse_feature_map(&read(path)?).map_err(|e| Failure::at(path, e))?;
    map.check_features(&vs.features).map_err(|e| Failure::at(path, e))?;
    Ok(map)
}

fn load_variants(dir: &Path) -> Result<VariantSet, Failure> {
    read_variants(dir).map_err(|e| Failure::at(dir, e))
}

fn validate(rtw: &Path, format: Format) -> Outcome {
    let report = validate_rtw(&load_worksheet(rtw)?);
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => print_json(&report.to_json()),
    }
    Ok(status(!report.has_errors()))
}

fn model(rtw: &Path, xml: Option<&Path>, dot: Option<&Path>, format: Format) -> Outcome {
    let w = load_worksheet(rtw)?;
    let assembly = assemble_model(&w).map_err(|e| Failure::content(format!("{}: {e}", rtw.display())))?;
    let m = &assembly.model;
    let doc = export_xml(m);
    if let Some(path) = xml {
        write(path, &doc)?;
    }
    if let Some(path) = dot {
        write(path, &export_dot(m, None))?;
    }
    let to_stdout = xml.is_none() && dot.is_none();
    match format {
        Format::Text if to_stdout => print!("{doc}"),
        Format::Text => {
            print!("{}", assembly.report.to_text());
            println!(
                "model {}: {} features ({} abstract), {} constraints",
                m.root.name,
                m.feature_names().len(),
                m.abstract_count(),
                m.constraints.len()
            );
        }
        Format::Json => print_json(&json!({
            "format": MODEL_FORMAT,
            "model": m.root.name,
            "features": m.feature_names().len(),
            "abstract_features": m.abstract_count(),
            "constraints": m.constraints.iter().map(|c| c.id.as_str()).collect::<Vec<_>>(),
            "excluded": assembly.flagged,
            "validation": assembly.report.to_json(),
            "xml": to_stdout.then_some(doc.as_str()),
        })),
    }
    Ok(status(!assembly.report.has_errors()))
}

fn analyze_cmd(ctx: &Ctx, input: &ModelInput, format: Format, dot: Option<&Path>) -> Outcome {
    let loaded = load_model(ctx, input)?;
    let report = analyze(&loaded.model);
    let trace: Option<TraceReport> = match &loaded.worksheet {
        Some(w) => Some(trace_report(&report, w).map_err(Failure::content)?),
        None => None,
    };
    if let Some(path) = dot {
        write(path, &export_dot(&loaded.model, Some(&report)))?;
    }
    match format {
        Format::Text => {
            if let Some(v) = &loaded.validation {
                println!("== validation ==");
                print!("{}", v.to_text());
            }
            println!("== analysis ==");
            print!("{}", report.to_text());
            match &trace {
                Some(t) if !t.anomalies.is_empty() => {
                    println!("== trace ==");
                    print!("{}", t.to_text());
                }
                Some(_) => {}
                None if !report.is_valid() => println!("(no worksheet given: trace limited to feature origins)"),
                None => {}
            }
        }
        Format::Json => print_json(&json!({
            "format": ANALYZE_FORMAT,
            "validation": loaded.validation.as_ref().map(ValidationReport::to_json),
            "analysis": report.to_json(),
            "trace": trace.as_ref().map(TraceReport::to_json),
        })),
    }
    let findings_ok = loaded.validation.as_ref().is_none_or(|v| !v.has_errors());
    Ok(status(findings_ok && report.is_valid()))
}

fn enumerate(ctx: &Ctx, input: &ModelInput, out: Option<&Path>, format: Format) -> Outcome {
    let loaded = load_model(ctx, input)?;
    let vs = enumerate_variants(&loaded.model)?;
    if let Some(dir) = out {
        write_variants(dir, &vs).map_err(|e| Failure::at(dir, e))?;
        ctx.note(format!(
            "wrote {} variants to {}",
            vs.len(),
            dir.join(INDEX_FILE).display()
        ));
    }
    match format {
        Format::Text => {
            println!("variants: {}", vs.len());
            for v in &vs.variants {
                println!("{}  {}", v.id, v.selected().collect::<Vec<_>>().join(" "));
            }
        }
        Format::Json => print_json(&vs.to_json()),
    }
    Ok(ExitCode::SUCCESS)
}

fn genconfig(
    variants: &Path,
    map: &Path,
    ids: &[String],
    out: Option<&Path>,
    config_format: ConfigFormat,
    format: Format,
) -> Outcome {
    let vs = load_variants(variants)?;
    let map = load_map(map, &vs)?;
    let chosen = if ids.is_empty() {
        vs.variants.iter().collect::<Vec<_>>()
    } else {
        ids.iter()
            .map(|id| {
                vs.get(id)
                    .ok_or_else(|| Failure::from(VariantError::UnknownVariant(id.clone())))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let Some(out) = out else {
        let [v] = chosen.as_slice() else {
            return Err(Failure::input("without --out exactly one --id must be given"));
        };
        print!("{}", emit_config(v, &map, config_format));
        return Ok(ExitCode::SUCCESS);
    };
    let mut written = Vec::new();
    for v in chosen {
        let dir = out.join(&v.id);
        fs::create_dir_all(&dir).map_err(|e| Failure::at(&dir, e))?;
        let path = dir.join(config_format.file_name());
        write(&path, &emit_config(v, &map, config_format))?;
        written.push((v.id.clone(), path));
    }
    match format {
        Format::Text => {
            for (id, path) in &written {
                println!("{id}  {}", path.display());
            }
        }
        Format::Json => print_json(&json!({
            "format": GENCONFIG_FORMAT,
            "files": written
                .iter()
                .map(|(id, path)| json!({ "id": id, "path": path.display().to_string() }))
                .collect::<Vec<_>>(),
        })),
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn test(
    variants: &Path,
    map: &Path,
    cmd: &str,
    sample: &Sampling,
    jobs: usize,
    config_format: ConfigFormat,
    workdir: &Path,
    format: Format,
) -> Outcome {
    let vs = load_variants(variants)?;
    let map = load_map(map, &vs)?;
    let opts = HarnessOptions {
        workdir: workdir.to_path_buf(),
        jobs,
        format: config_format,
    };
    let report = run_harness(&vs, &map, cmd, sample, &opts)?;
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => print_json(&report.to_json()),
    }
    Ok(status(report.failed == 0))
}

fn run(cli: Cli) -> Outcome {
    let ctx = Ctx { quiet: cli.quiet };
    match cli.command {
        Command::Validate { rtw, format } => validate(&rtw, format),
        Command::Model { rtw, xml, dot, format } => model(&rtw, xml.as_deref(), dot.as_deref(), format),
        Command::Analyze { input, format, dot } => analyze_cmd(&ctx, &input, format, dot.as_deref()),
        Command::Enumerate { input, out, format } => enumerate(&ctx, &input, out.as_deref(), format),
        Command::Genconfig {
            variants,
            map,
            ids,
            out,
            config_format,
            format,
        } => genconfig(&variants, &map, &ids, out.as_deref(), config_format, format),
        Command::Test {
            variants,
            map,
            cmd,
            sample,
            jobs,
            config_format,
            workdir,
            format,
        } => test(&variants, &map, &cmd, &sample, jobs, config_format, &workdir, format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("varcore: error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
