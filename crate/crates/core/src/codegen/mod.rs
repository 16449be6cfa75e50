//! Export of block programs as standalone JavaScript (Node.js) bundles.
//!
//! A bundle is `main.js` plus the fixed `runtime.js`. Each block becomes one
//! snippet in `main.js`; statement bodies become closures handed to runtime
//! helpers. Running `node main.js` prints exactly the lines of
//! [`render_lines`](crate::interp::render_lines) for the interpreter's event
//! stream under the same seed. A runtime halt writes `halt: <reason>` to
//! standard error and exits with status 3.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::block::{validate, Block, BlockProgram, Diagnostic};
use crate::interp::DEFAULT_MAX_ITERATIONS;
use crate::numfmt::format_number;

pub const MAIN_FILE: &str = "main.js";
pub const RUNTIME_FILE: &str = "runtime.js";
pub const RUNTIME_JS: &str = include_str!("runtime.js");
/// Exit status of a bundle that halted.
pub const HALT_EXIT_CODE: i32 = 3;

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("program has validation errors")]
    Invalid(Vec<Diagnostic>),
    #[error("no emitter for block kind `{0}`")]
    UnsupportedBlock(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub main_js: String,
    pub runtime_js: &'static str,
}

impl Bundle {
    /// Writes both files into `dir` (created if missing) and returns their paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CodegenError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CodegenError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        for (name, content) in [(MAIN_FILE, self.main_js.as_str()), (RUNTIME_FILE, self.runtime_js)] {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn emit_standalone(program: &BlockProgram, master_seed: u64) -> Result<Bundle, CodegenError> {
    emit_standalone_with(program, master_seed, DEFAULT_MAX_ITERATIONS)
}

/// As [`emit_standalone`], with the per-run loop budget baked into the bundle.
pub fn emit_standalone_with(
    program: &BlockProgram,
    master_seed: u64,
    max_iterations: u64,
) -> Result<Bundle, CodegenError> {
    let diagnostics = validate(program);
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(CodegenError::Invalid(diagnostics));
    }
    let mut main = String::from("\"use strict\";\n// Generated by blockea export-code.\n");
    main.push_str("const rt = require(\"./runtime.js\");\n\n");
    main.push_str(&format!(
        "rt.main({{ seed: {master_seed}n, maxIterations: {max_iterations} }}, (f) => {{\n"
    ));
    for root in &program.roots {
        if root.kind.is_statement() {
            main.push_str(&chain(root, 1)?);
        } else {
            main.push_str(&format!(
                "  // {} ({}) is not connected and does not run\n",
                root.uid, root.kind.id
            ));
        }
    }
    main.push_str("});\n");
    Ok(Bundle { main_js: main, runtime_js: RUNTIME_JS })
}

fn js_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn js_number(x: f64) -> String {
    if x == 0.0 && x.is_sign_negative() {
        "(-0)".to_owned()
    } else if x < 0.0 {
        format!("({})", format_number(x))
    } else {
        format_number(x)
    }
}

/// Comment text on one line; JS also ends comments at U+2028 and U+2029.
fn one_line(s: &str) -> String {
    s.chars()
        .map(|c| if matches!(c, '\n' | '\r' | '\u{2028}' | '\u{2029}') { ' ' } else { c })
        .collect()
}

fn pad(depth: usize) -> String {
    "  ".repeat(depth)
}

fn chain(head: &Block, depth: usize) -> Result<String, CodegenError> {
    let mut out = String::new();
    for b in head.chain() {
        out.push_str(&statement(b, depth)?);
    }
    Ok(out)
}

/// Closure over a statement slot: `(f) => {...}` when the body gets its own
/// frame, `() => {...}` otherwise.
fn closure(b: &Block, slot: &str, own_frame: bool, depth: usize) -> Result<String, CodegenError> {
    let params = if own_frame { "(f)" } else { "()" };
    match b.child(slot) {
        None => Ok(format!("{params} => {{}}")),
        Some(head) => Ok(format!("{params} => {{\n{}{}}}", chain(head, depth + 1)?, pad(depth))),
    }
}

fn input<'b>(b: &'b Block, port: &str) -> Result<&'b Block, CodegenError> {
    b.child(port)
        .ok_or_else(|| CodegenError::UnsupportedBlock(format!("{} without input {port}", b.kind.id)))
}

fn value(b: &Block, port: &str) -> Result<String, CodegenError> {
    expression(input(b, port)?)
}

fn objective(b: &Block) -> String {
    format!("rt.objective({}, {})", js_string(b.text_field("objective")), js_number(b.number_field("gap")))
}

fn statement(b: &Block, depth: usize) -> Result<String, CodegenError> {
    let p = pad(depth);
    let v = |port: &str| value(b, port);
    let field = |name: &str| js_string(b.text_field(name));
    Ok(match b.kind.id {
        "comment" => format!("{p}// {}\n", one_line(b.text_field("text"))),
        "print" => format!("{p}rt.print(f, {});\n", v("text")?),
        "plot" => format!("{p}rt.plot(f, {}, {}, {}, {});\n", v("series")?, v("x")?, v("y")?, field("style")),
        "variable_set" => format!("{p}rt.assign(f, {}, {});\n", field("name"), v("value")?),
        "population_add" => format!("{p}rt.populationAdd(f, {}, {});\n", field("variable"), v("individual")?),
        "if" => {
            let then = b.child("then").map(|h| chain(h, depth + 1)).transpose()?.unwrap_or_default();
            let otherwise = b.child("else").map(|h| chain(h, depth + 1)).transpose()?.unwrap_or_default();
            format!("{p}if ({}) {{\n{then}{p}}} else {{\n{otherwise}{p}}}\n", v("condition")?)
        }
        "repeat" => format!("{p}rt.repeat(f, {}, {});\n", v("times")?, closure(b, "body", false, depth)?),
        "for_range" => format!(
            "{p}rt.forRange(f, {}, {}, {}, {});\n",
            field("variable"),
            v("from")?,
            v("to")?,
            closure(b, "body", false, depth)?
        ),
        "evolutionary_loop" | "ioh_loop" => format!(
            "{p}rt.loop(f, {}, {}, () => {}, {});\n",
            js_number(b.number_field("max_generations")),
            b.kind.id == "ioh_loop",
            v("until")?,
            closure(b, "body", false, depth)?
        ),
        "repeat_runs" => format!(
            "{p}rt.repeatRuns(f, {}, {});\n",
            js_number(b.number_field("runs")),
            closure(b, "body", true, depth)?
        ),
        "parallel_tasks" => format!(
            "{p}// parallel_tasks ({}): tasks run one after another in this bundle\n\
             {p}rt.parallelTasks(f, {}, {}, {}, {});\n",
            one_line(b.text_field("mode")),
            v("tasks")?,
            v("workers")?,
            field("result"),
            closure(b, "body", true, depth)?
        ),
        "task_return" => format!("{p}rt.taskReturn(f, {});\n", v("value")?),
        "sleep" => format!("{p}rt.sleep(f, {});\n", v("seconds")?),
        other => return Err(CodegenError::UnsupportedBlock(other.to_owned())),
    })
}

fn expression(b: &Block) -> Result<String, CodegenError> {
    let v = |port: &str| value(b, port);
    let field = |name: &str| js_string(b.text_field(name));
    let call = |name: &str, args: &[&str]| -> Result<String, CodegenError> {
        let mut parts = Vec::with_capacity(args.len());
        for a in args {
            parts.push(match *a {
                "f" => "f".to_owned(),
                "objective" => objective(b),
                port => value(b, port)?,
            });
        }
        Ok(format!("rt.{name}({})", parts.join(", ")))
    };
    Ok(match b.kind.id {
        "number" => js_number(b.number_field("value")),
        "text" => field("value"),
        "boolean" => (b.text_field("value") == "true").to_string(),
        "variable_get" => format!("rt.lookup(f, {})", field("name")),
        "arithmetic" => {
            let op = match b.text_field("op") {
                "add" => "+",
                "subtract" => "-",
                "multiply" => "*",
                "divide" => "/",
                _ => "%",
            };
            format!("({} {op} {})", v("left")?, v("right")?)
        }
        "compare" => {
            let op = match b.text_field("op") {
                "eq" => "===",
                "neq" => "!==",
                "lt" => "<",
                "le" => "<=",
                "gt" => ">",
                _ => ">=",
            };
            format!("({} {op} {})", v("left")?, v("right")?)
        }
        "logic_operation" => {
            let op = if b.text_field("op") == "and" { "&&" } else { "||" };
            format!("({} {op} {})", v("left")?, v("right")?)
        }
        "logic_not" => format!("(!{})", v("value")?),
        "text_join" => format!("({} + {})", v("first")?, v("second")?),
        "to_text" => format!("rt.toText({}, {})", field("type"), v("value")?),
        "random_integer" => call("randomInteger", &["f", "low", "high"])?,
        "list_length" => format!("{}.length", v("list")?),
        "list_get" => call("listGet", &["list", "index"])?,
        "list_sum" => call("listSum", &["list"])?,
        "generation" => "f.generation".to_owned(),
        "run_id" => "rt.runId(f)".to_owned(),
        "task_index" => "rt.taskIndex(f)".to_owned(),
        "hardware_concurrency" => "rt.hardwareConcurrency()".to_owned(),
        "fibonacci" => call("fibonacci", &["n"])?,
        "timer" => "rt.timer(f)".to_owned(),
        "evaluation_count" => "f.count".to_owned(),

        "population_random" => call("populationRandom", &["f", "size", "length"])?,
        "population_empty" => "[]".to_owned(),
        "population_explicit" => format!("rt.parsePopulation({})", field("members")),
        "population_size" => format!("{}.length", v("population")?),
        "population_get" => call("populationGet", &["population", "index"])?,
        "population_best" => call("populationBest", &["f", "objective", "population"])?,
        "select_uniform" => call("selectUniform", &["f", "population"])?,
        "select_proportionate" => call("selectProportionate", &["f", "objective", "population"])?,
        "population_merge" => call("merge", &["first", "second"])?,
        "population_sort" => call("sortPopulation", &["f", "objective", "population"])?,
        "population_take" => call("take", &["population", "count"])?,

        "individual_random" => call("individualRandom", &["f", "length"])?,
        "individual_explicit" => format!("rt.parseIndividual({})", field("bits")),
        "crossover_one_point" => call("crossoverOnePoint", &["f", "first", "second"])?,
        "crossover_two_point" => call("crossoverTwoPoint", &["f", "first", "second"])?,
        "crossover_uniform" => call("crossoverUniform", &["f", "first", "second"])?,
        "mutate_per_bit" => call("mutatePerBit", &["f", "individual", "probability"])?,
        "mutate_k_bits" => call("mutateKBits", &["f", "individual", "count"])?,
        "individual_length" => format!("{}.length", v("individual")?),

        "fitness_onemax" => call("onemax", &["f", "individual"])?,
        "fitness_leading_ones" => call("leadingOnes", &["f", "individual"])?,
        "fitness_jump" => call("jump", &["f", "individual", "gap"])?,
        "diversity_hamming" => call("diversity", &["population"])?,
        other => return Err(CodegenError::UnsupportedBlock(other.to_owned())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{registry::REGISTRY, PortKind};

    fn b(id: &str) -> Block {
        Block::new(id).unwrap()
    }

    /// One instance of `kind` with every port filled by a type-correct child.
    fn saturated(kind: &'static crate::block::BlockKind) -> Block {
        let mut block = Block::of_kind(kind);
        for (i, port) in kind.ports.iter().enumerate() {
            let child = match port.kind {
                PortKind::Statement => b("comment"),
                PortKind::Value(_) => {
                    let t = block.port_type(i).unwrap();
                    b("variable_get").field("name", "v").field("type", t.name())
                }
            };
            block = block.input(port.name, child);
        }
        block
    }

    #[test]
    fn every_registered_kind_has_an_emitter() {
        let mut missing = Vec::new();
        for kind in REGISTRY {
            let block = saturated(kind);
            let emitted = if kind.is_statement() { statement(&block, 0) } else { expression(&block) };
            if let Err(CodegenError::UnsupportedBlock(k)) = emitted {
                missing.push(k);
            }
        }
        assert_eq!(missing, Vec::<String>::new());
    }

    #[test]
    fn literals() {
        assert_eq!(js_number(0.5), "0.5");
        assert_eq!(js_number(-3.0), "(-3)");
        assert_eq!(js_number(-0.0), "(-0)");
        assert_eq!(js_number(1e21), "1e+21");
        assert_eq!(js_string("a\"b\n"), "\"a\\\"b\\n\"");
        assert_eq!(one_line("x\ny\u{2028}z"), "x y z");
    }

    #[test]
    fn invalid_programs_are_refused() {
        let p = BlockProgram::from_roots(vec![b("print")]);
        assert!(matches!(emit_standalone(&p, 1), Err(CodegenError::Invalid(_))));
    }

    #[test]
    fn disconnected_roots_become_comments() {
        let p = BlockProgram::from_roots(vec![b("number").field("value", 2.0)]);
        let bundle = emit_standalone(&p, 9).unwrap();
        assert!(bundle.main_js.contains("// b1 (number) is not connected"));
        assert!(bundle.main_js.contains("seed: 9n"));
    }

    #[test]
    fn parallel_tasks_carry_a_marker() {
        let p = BlockProgram::from_roots(vec![b("parallel_tasks")
            .field("mode", "all")
            .field("result", "r")
            .input("tasks", b("number").field("value", 2.0))
            .input("workers", b("number").field("value", 2.0))]);
        let main = emit_standalone(&p, 1).unwrap().main_js;
        assert!(main.contains("// parallel_tasks (all): tasks run one after another"));
    }

    #[test]
    fn bundle_writes_two_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = BlockProgram::from_roots(vec![b("print").input("text", b("text").field("value", "hi"))]);
        let written = emit_standalone(&p, 1).unwrap().write_to(&dir.path().join("out")).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(std::fs::read_to_string(&written[1]).unwrap(), RUNTIME_JS);
    }
}
