use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use blockea_core::block::{parse_xml, validate, BlockProgram, Diagnostic};
use blockea_core::codegen::emit_standalone;
use blockea_core::datalog::{export_csv, export_ioh, ExperimentMeta, RunLog};
use blockea_core::examples::{self, EXAMPLES};
use blockea_core::interp::{Emitted, Event, EventSink, Interpreter, InterpreterConfig};
use blockea_core::runner::ThreadMode;

use crate::CliError;

pub const CSV_FILE: &str = "runs.csv";
pub const DEFAULT_ALGORITHM: &str = "blockea";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Ioh,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "ioh" => Ok(Format::Ioh),
            other => Err(format!("unknown export format {other:?} (expected csv or ioh)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub path: PathBuf,
    pub seed: u64,
    pub mode: ThreadMode,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    /// IOH `funcName`; defaults to the file name up to its first dot.
    pub function_name: Option<String>,
    /// IOH `DIM`; defaults to the length of the longest best individual.
    pub dimension: Option<usize>,
    pub algorithm: String,
    pub max_iterations: u64,
}

impl RunOptions {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            seed: 0,
            mode: ThreadMode::Sequential,
            out_dir: PathBuf::from("."),
            formats: Vec::new(),
            function_name: None,
            dimension: None,
            algorithm: DEFAULT_ALGORITHM.to_owned(),
            max_iterations: blockea_core::interp::DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Reads and parses a program file. Validation is left to the caller.
pub fn load(path: &Path) -> Result<BlockProgram, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    parse_xml(&text).map_err(|source| CliError::Parse { path: path.to_owned(), source: Box::new(source) })
}

/// Loads a program and rejects it if validation reports errors. Warnings are
/// returned for the caller to show.
pub fn load_valid(path: &Path) -> Result<(BlockProgram, Vec<Diagnostic>), CliError> {
    let program = load(path)?;
    let diagnostics = validate(&program);
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(CliError::Invalid { path: path.to_owned(), diagnostics });
    }
    Ok((program, diagnostics))
}

/// Forwards printed text to a writer as it is produced; the first write error
/// is kept and reported once the run is over.
struct PrintSink<W> {
    out: Mutex<(W, Option<std::io::Error>)>,
}

impl<W: Write + Send> EventSink for PrintSink<W> {
    fn emit(&self, event: Emitted) {
        if let Event::Print { text } = &event.event {
            let mut guard = self.out.lock().unwrap_or_else(|e| e.into_inner());
            let (out, err) = &mut *guard;
            if err.is_none() {
                if let Err(e) = writeln!(out, "{text}").and_then(|_| out.flush()) {
                    *err = Some(e);
                }
            }
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

pub fn ioh_meta(logs: &[RunLog], path: &Path, function_name: Option<&str>, dimension: Option<usize>, algorithm: &str) -> ExperimentMeta {
    let stem = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.split('.').next()).unwrap_or("");
    ExperimentMeta {
        function_name: function_name.map(str::to_owned).unwrap_or_else(|| if stem.is_empty() { "program".to_owned() } else { stem.to_owned() }),
        dimension: dimension.unwrap_or_else(|| {
            logs.iter().filter_map(|l| l.best_individual.as_ref().map(|x| x.len())).max().unwrap_or(0)
        }),
        algorithm: algorithm.to_owned(),
    }
}

/// Runs a program file, streaming printed lines to `out`, and writes the
/// requested exports. Returns the files written.
pub fn run<W: Write + Send>(opts: &RunOptions, out: W) -> Result<Vec<PathBuf>, CliError> {
    let (program, warnings) = load_valid(&opts.path)?;
    for w in &warnings {
        eprintln!("{w}");
    }
    // Fail on an unusable output directory before spending time on the run.
    if !opts.formats.is_empty() {
        std::fs::create_dir_all(&opts.out_dir).map_err(|source| CliError::Io { path: opts.out_dir.clone(), source })?;
    }
    let config = InterpreterConfig { mode: opts.mode, max_iterations: opts.max_iterations, ..InterpreterConfig::default() };
    let sink = PrintSink { out: Mutex::new((out, None)) };
    let outcome = Interpreter::new(config).run(&program, opts.seed, &sink);
    if let (_, Some(source)) = sink.out.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(CliError::Io { path: PathBuf::from("<stdout>"), source });
    }
    let result = outcome.map_err(CliError::Runtime)?;

    let mut written = Vec::new();
    for format in &opts.formats {
        match format {
            Format::Csv => {
                let path = opts.out_dir.join(CSV_FILE);
                write_file(&path, &export_csv(&result.logs))?;
                written.push(path);
            }
            Format::Ioh => {
                let meta = ioh_meta(&result.logs, &opts.path, opts.function_name.as_deref(), opts.dimension, &opts.algorithm);
                let ioh = export_ioh(&result.logs, &meta).map_err(CliError::Export)?;
                ioh.write_to(&opts.out_dir).map_err(CliError::Export)?;
                written.push(opts.out_dir.join(&ioh.info_path));
                written.push(opts.out_dir.join(&ioh.dat_path));
            }
        }
    }
    Ok(written)
}

/// Prints every diagnostic; `Ok(true)` when none of them is an error.
pub fn validate_file<W: Write>(path: &Path, mut out: W) -> Result<bool, CliError> {
    let program = load(path)?;
    let diagnostics = validate(&program);
    let io = |source| CliError::Io { path: PathBuf::from("<stdout>"), source };
    for d in &diagnostics {
        writeln!(out, "{d}").map_err(io)?;
    }
    let errors = diagnostics.iter().filter(|d| d.is_error()).count();
    writeln!(out, "{}: {errors} error(s), {} warning(s)", path.display(), diagnostics.len() - errors).map_err(io)?;
    Ok(errors == 0)
}

pub fn export_code(path: &Path, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let program = load(path)?;
    let bundle = emit_standalone(&program, seed).map_err(|e| match CliError::from(e) {
        CliError::Invalid { diagnostics, .. } => CliError::Invalid { path: path.to_owned(), diagnostics },
        other => other,
    })?;
    Ok(bundle.write_to(out_dir)?)
}

pub fn list_examples<W: Write>(mut out: W) -> std::io::Result<()> {
    for e in EXAMPLES {
        writeln!(out, "{}\t{}\t{}", e.slug, e.name, e.description)?;
    }
    Ok(())
}

pub fn get_example<W: Write>(name: &str, mut out: W) -> Result<(), CliError> {
    let example = examples::find(name).ok_or_else(|| {
        let known: Vec<&str> = EXAMPLES.iter().map(|e| e.slug).collect();
        CliError::Usage(format!("no example named {name:?} (known: {})", known.join(", ")))
    })?;
    out.write_all(example.xml.as_bytes()).map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
}
