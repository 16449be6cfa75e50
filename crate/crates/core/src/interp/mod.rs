//! Tree-walking interpreter for validated block programs.
//!
//! Every repetition of a `repeat_runs` block is one run with its own random
//! stream (`derive_seed(master_seed, run_id)`), evaluation counter, scope and
//! loop budget. Runs and `parallel_tasks` bodies go through the
//! [`runner`](crate::runner), which buffers their events per task and flushes
//! them in task order, so the event stream is the same in every thread mode.

mod event;
mod value;

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

pub use event::{render_lines, CollectingSink, Emitted, Event, EventSink, NullSink, PlotStyle};
pub use value::Value;

use crate::block::{validate, Block, BlockProgram, Diagnostic};
use crate::datalog::{self, RunLog};
use crate::ea::{self, EaError, Individual, Population};
use crate::fitness::{self, EvalCounter, FitnessError, Objective};
use crate::numfmt::format_number;
use crate::rng::{derive_seed, RandomSource, SESSION_STREAM};
use crate::runner::{self, Runner, RunnerError, ThreadMode};

/// Loop iterations allowed per run (and per task) before halting.
pub const DEFAULT_MAX_ITERATIONS: u64 = 1_000_000;
/// Upper bound on population sizes and bit-string lengths.
pub const MAX_LENGTH: usize = 1_000_000;
/// Upper bound on the `fibonacci` block's argument.
pub const MAX_FIBONACCI: usize = 50;
/// Largest integer magnitude that converts exactly.
const MAX_SAFE_INTEGER: f64 = 9_007_199_254_740_991.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Halt {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("loop budget of {0} iterations exhausted")]
    BudgetExhausted(u64),
    #[error("empty random range: {low} > {high}")]
    BadRange { low: String, high: String },
    #[error("bad sleep duration {0}")]
    BadDuration(String),
    #[error("{what} must be an integer, got {value}")]
    NotInteger { what: &'static str, value: String },
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },
    #[error(transparent)]
    Operator(#[from] EaError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Worker(#[from] RunnerError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error("program has {} validation error(s)", .0.iter().filter(|d| d.is_error()).count())]
    Invalid(Vec<Diagnostic>),
    #[error("{}halted: {reason}", run.map_or(String::new(), |r| format!("run {r} ")))]
    Halt { run: Option<u32>, reason: Halt },
    #[error("cancelled")]
    Cancelled,
}

#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// `Frozen` reads the timer as 0 and makes `sleep` return at once; it is for
/// comparing event streams of programs that print times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clock {
    #[default]
    Monotonic,
    Frozen,
}

#[derive(Debug, Clone)]
pub struct InterpreterConfig {
    /// How repetitions of `repeat_runs` are scheduled.
    pub mode: ThreadMode,
    pub max_iterations: u64,
    pub max_workers: usize,
    pub clock: Clock,
    pub cancel: CancelToken,
}

impl Default for InterpreterConfig {
    fn default() -> Self {
        Self {
            mode: ThreadMode::Sequential,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            max_workers: runner::max_workers_from_env(),
            clock: Clock::Monotonic,
            cancel: CancelToken::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub events: Vec<Emitted>,
    pub logs: Vec<RunLog>,
    /// Printed lines in order.
    pub output: Vec<String>,
}

/// Runs `program` with default settings (sequential runs, real clock).
pub fn interpret(program: &BlockProgram, master_seed: u64, sink: &dyn EventSink) -> Result<ExperimentResult, RuntimeError> {
    Interpreter::new(InterpreterConfig::default()).run(program, master_seed, sink)
}

pub struct Interpreter {
    config: InterpreterConfig,
}

impl Interpreter {
    pub fn new(config: InterpreterConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &InterpreterConfig {
        &self.config
    }

    pub fn run(&self, program: &BlockProgram, master_seed: u64, sink: &dyn EventSink) -> Result<ExperimentResult, RuntimeError> {
        let diagnostics = validate(program);
        if diagnostics.iter().any(Diagnostic::is_error) {
            return Err(RuntimeError::Invalid(diagnostics));
        }

        let recorded = CollectingSink::new();
        let tee = |e: Emitted| {
            recorded.emit(e.clone());
            sink.emit(e);
        };
        let engine = Engine { config: &self.config, master_seed, next_run_id: AtomicU32::new(0) };
        let started = Instant::now();
        let mut top = Frame::new(None, RandomSource::new(derive_seed(master_seed, SESSION_STREAM)), started, Out::Sink(&tee));

        for root in &program.roots {
            if root.kind.is_statement() {
                engine.exec_chain(root, &mut top).map_err(|stop| match stop {
                    Stop::Halt(run, reason) => RuntimeError::Halt { run, reason },
                    Stop::Cancelled | Stop::Aborted => RuntimeError::Cancelled,
                })?;
            }
        }

        let events = recorded.into_events();
        let logs = datalog::collect(&events).expect("interpreter emits well-formed streams");
        let output = events
            .iter()
            .filter_map(|e| match &e.event {
                Event::Print { text } => Some(text.clone()),
                _ => None,
            })
            .collect();
        Ok(ExperimentResult { events, logs, output })
    }
}

/// Why execution stopped early.
#[derive(Debug)]
enum Stop {
    Halt(Option<u32>, Halt),
    Cancelled,
    /// An earlier task in the same batch halted; this one's output is dropped.
    Aborted,
}

type Flow<T> = Result<T, Stop>;

enum Out<'o> {
    Sink(&'o dyn EventSink),
    Buffer(&'o mut Vec<Emitted>),
}

impl Out<'_> {
    fn emit(&mut self, e: Emitted) {
        match self {
            Out::Sink(s) => s.emit(e),
            Out::Buffer(b) => b.push(e),
        }
    }

    fn emit_all(&mut self, events: &[Emitted]) {
        match self {
            Out::Sink(s) => s.emit_all(events),
            Out::Buffer(b) => b.extend_from_slice(events),
        }
    }
}

/// Set to the lowest halted task index of a batch; tasks above it stop.
#[derive(Clone)]
struct BatchGuard {
    first_halt: Arc<AtomicUsize>,
    index: usize,
}

struct Frame<'o> {
    run_id: Option<u32>,
    rng: RandomSource,
    counter: EvalCounter,
    generation: u64,
    iterations: u64,
    last_recorded: u64,
    scope: HashMap<String, Value>,
    task: Option<(usize, f64)>,
    started: Instant,
    guards: Vec<BatchGuard>,
    out: Out<'o>,
}

impl<'o> Frame<'o> {
    fn new(run_id: Option<u32>, rng: RandomSource, started: Instant, out: Out<'o>) -> Self {
        Self {
            run_id,
            rng,
            counter: EvalCounter::new(),
            generation: 0,
            iterations: 0,
            last_recorded: 0,
            scope: HashMap::new(),
            task: None,
            started,
            guards: Vec::new(),
            out,
        }
    }

    fn emit(&mut self, event: Event) {
        let run = self.run_id;
        self.out.emit(Emitted { run, event });
    }

    fn halt(&self, reason: impl Into<Halt>) -> Stop {
        Stop::Halt(self.run_id, reason.into())
    }
}

/// Input that validation guarantees is connected.
fn input<'b>(b: &'b Block, port: &str) -> &'b Block {
    b.child(port)
        .unwrap_or_else(|| panic!("validated block {} ({}) lacks input {port}", b.uid, b.kind.id))
}

fn objective_of(b: &Block) -> Objective {
    match b.text_field("objective") {
        "leading_ones" => Objective::LeadingOnes,
        "jump" => Objective::Jump { gap: b.number_field("gap") as usize },
        _ => Objective::OneMax,
    }
}

struct Engine<'a> {
    config: &'a InterpreterConfig,
    master_seed: u64,
    next_run_id: AtomicU32,
}

impl Engine<'_> {
    fn checkpoint(&self, f: &Frame) -> Flow<()> {
        if self.config.cancel.is_cancelled() {
            return Err(Stop::Cancelled);
        }
        if f.guards.iter().any(|g| g.first_halt.load(Ordering::SeqCst) < g.index) {
            return Err(Stop::Aborted);
        }
        Ok(())
    }

    fn tick(&self, f: &mut Frame) -> Flow<()> {
        self.checkpoint(f)?;
        f.iterations += 1;
        if f.iterations > self.config.max_iterations {
            return Err(f.halt(Halt::BudgetExhausted(self.config.max_iterations)));
        }
        Ok(())
    }

    fn exec_chain(&self, head: &Block, f: &mut Frame) -> Flow<()> {
        for b in head.chain() {
            self.exec(b, f)?;
        }
        Ok(())
    }

    fn exec_slot(&self, b: &Block, slot: &str, f: &mut Frame) -> Flow<()> {
        match b.child(slot) {
            Some(head) => self.exec_chain(head, f),
            None => Ok(()),
        }
    }

    // Typed evaluation helpers. Validation guarantees the variant.

    fn number(&self, b: &Block, port: &str, f: &mut Frame) -> Flow<f64> {
        match self.eval(input(b, port), f)? {
            Value::Number(x) => Ok(x),
            other => unreachable!("{port} produced {:?}", other.value_type()),
        }
    }

    fn boolean(&self, b: &Block, port: &str, f: &mut Frame) -> Flow<bool> {
        match self.eval(input(b, port), f)? {
            Value::Boolean(x) => Ok(x),
            other => unreachable!("{port} produced {:?}", other.value_type()),
        }
    }

    fn text(&self, b: &Block, port: &str, f: &mut Frame) -> Flow<String> {
        match self.eval(input(b, port), f)? {
            Value::Text(x) => Ok(x),
            other => unreachable!("{port} produced {:?}", other.value_type()),
        }
    }

    fn individual(&self, b: &Block, port: &str, f: &mut Frame) -> Flow<Individual> {
        match self.eval(input(b, port), f)? {
            Value::Individual(x) => Ok(x),
            other => unreachable!("{port} produced {:?}", other.value_type()),
        }
    }

    fn population(&self, b: &Block, port: &str, f: &mut Frame) -> Flow<Population> {
        match self.eval(input(b, port), f)? {
            Value::Population(x) => Ok(x),
            other => unreachable!("{port} produced {:?}", other.value_type()),
        }
    }

    fn list(&self, b: &Block, port: &str, f: &mut Frame) -> Flow<Vec<f64>> {
        match self.eval(input(b, port), f)? {
            Value::List(x) => Ok(x),
            other => unreachable!("{port} produced {:?}", other.value_type()),
        }
    }

    /// Integer in `[min, max]`.
    fn integer(&self, x: f64, what: &'static str, min: f64, max: f64, f: &Frame) -> Flow<f64> {
        if !x.is_finite() || x.fract() != 0.0 {
            return Err(f.halt(Halt::NotInteger { what, value: format_number(x) }));
        }
        if x < min || x > max {
            return Err(f.halt(Halt::OutOfRange { what, value: format_number(x) }));
        }
        Ok(x)
    }

    fn count(&self, b: &Block, port: &'static str, max: usize, f: &mut Frame) -> Flow<usize> {
        let x = self.number(b, port, f)?;
        Ok(self.integer(x, port, 0.0, max as f64, f)? as usize)
    }

    fn index(&self, x: f64, len: usize, f: &Frame) -> Flow<usize> {
        Ok(self.integer(x, "index", 0.0, len as f64 - 1.0, f)? as usize)
    }

    fn evaluate_all(&self, obj: Objective, pop: &Population, f: &mut Frame) -> Flow<Vec<f64>> {
        let mut values = Vec::with_capacity(pop.len());
        for m in pop.members() {
            values.push(obj.evaluate(m, &mut f.counter).map_err(|e| f.halt(e))?);
        }
        Ok(values)
    }

    fn lookup(&self, name: &str, f: &Frame) -> Flow<Value> {
        f.scope
            .get(name)
            .cloned()
            .ok_or_else(|| f.halt(Halt::UnboundVariable(name.to_owned())))
    }

    fn eval(&self, b: &Block, f: &mut Frame) -> Flow<Value> {
        use Value as V;
        Ok(match b.kind.id {
            "number" => V::Number(b.number_field("value")),
            "text" => V::Text(b.text_field("value").to_owned()),
            "boolean" => V::Boolean(b.text_field("value") == "true"),
            "variable_get" => self.lookup(b.text_field("name"), f)?,
            "arithmetic" => {
                let l = self.number(b, "left", f)?;
                let r = self.number(b, "right", f)?;
                V::Number(match b.text_field("op") {
                    "add" => l + r,
                    "subtract" => l - r,
                    "multiply" => l * r,
                    "divide" => l / r,
                    _ => l % r,
                })
            }
            "random_integer" => {
                let low = self.number(b, "low", f)?;
                let high = self.number(b, "high", f)?;
                let low = self.integer(low, "low", -MAX_SAFE_INTEGER, MAX_SAFE_INTEGER, f)?;
                let high = self.integer(high, "high", -MAX_SAFE_INTEGER, MAX_SAFE_INTEGER, f)?;
                if low > high {
                    return Err(f.halt(Halt::BadRange { low: format_number(low), high: format_number(high) }));
                }
                let span = (high as i64 - low as i64) as u64 + 1;
                V::Number(low + f.rng.below(span) as f64)
            }
            "text_join" => {
                let mut a = self.text(b, "first", f)?;
                a.push_str(&self.text(b, "second", f)?);
                V::Text(a)
            }
            "to_text" => V::Text(self.eval(input(b, "value"), f)?.to_text()),
            "list_length" => V::Number(self.list(b, "list", f)?.len() as f64),
            "list_get" => {
                let list = self.list(b, "list", f)?;
                let i = self.number(b, "index", f)?;
                V::Number(list[self.index(i, list.len(), f)?])
            }
            "list_sum" => V::Number(self.list(b, "list", f)?.iter().fold(0.0, |acc, x| acc + x)),
            "compare" => {
                let l = self.number(b, "left", f)?;
                let r = self.number(b, "right", f)?;
                V::Boolean(match b.text_field("op") {
                    "eq" => l == r,
                    "neq" => l != r,
                    "lt" => l < r,
                    "le" => l <= r,
                    "gt" => l > r,
                    _ => l >= r,
                })
            }
            "logic_operation" => {
                let l = self.boolean(b, "left", f)?;
                // Short-circuit: the right operand is not evaluated when the
                // left one decides.
                V::Boolean(match (b.text_field("op"), l) {
                    ("and", false) => false,
                    ("or", true) => true,
                    _ => self.boolean(b, "right", f)?,
                })
            }
            "logic_not" => V::Boolean(!self.boolean(b, "value", f)?),
            "generation" => V::Number(f.generation as f64),
            "run_id" => V::Number(f.run_id.unwrap_or(0) as f64),
            "task_index" => V::Number(f.task.map_or(0, |(i, _)| i) as f64),
            "hardware_concurrency" => V::Number(runner::hardware_concurrency() as f64),
            "fibonacci" => {
                let n = self.count(b, "n", MAX_FIBONACCI, f)?;
                V::Number(runner::dummy_task(n as u32) as f64)
            }
            "timer" => V::Number(match self.config.clock {
                Clock::Monotonic => f.started.elapsed().as_secs_f64() * 1000.0,
                Clock::Frozen => 0.0,
            }),
            "evaluation_count" => V::Number(f.counter.count() as f64),

            "population_random" => {
                let size = self.count(b, "size", MAX_LENGTH, f)?;
                let length = self.count(b, "length", MAX_LENGTH, f)?;
                V::Population(Population::random(size, length, &mut f.rng).map_err(|e| f.halt(e))?)
            }
            "population_empty" => V::Population(Population::default()),
            "population_explicit" => {
                V::Population(Population::parse(b.text_field("members")).map_err(|e| f.halt(e))?)
            }
            "population_size" => V::Number(self.population(b, "population", f)?.len() as f64),
            "population_get" => {
                let pop = self.population(b, "population", f)?;
                let i = self.number(b, "index", f)?;
                if pop.is_empty() {
                    return Err(f.halt(EaError::EmptyPopulation));
                }
                V::Individual(pop.members()[self.index(i, pop.len(), f)?].clone())
            }
            "population_best" => {
                let pop = self.population(b, "population", f)?;
                let values = self.evaluate_all(objective_of(b), &pop, f)?;
                let i = ea::best_index(&values).ok_or_else(|| f.halt(EaError::EmptyPopulation))?;
                V::Individual(pop.members()[i].clone())
            }
            "select_uniform" => {
                let pop = self.population(b, "population", f)?;
                V::Individual(ea::select_uniform(&pop, &mut f.rng).map_err(|e| f.halt(e))?.clone())
            }
            "select_proportionate" => {
                let pop = self.population(b, "population", f)?;
                let values = self.evaluate_all(objective_of(b), &pop, f)?;
                let chosen = ea::select_proportionate_by(&pop, &values, &mut f.rng).map_err(|e| f.halt(e))?;
                V::Individual(chosen.clone())
            }
            "population_merge" => {
                let a = self.population(b, "first", f)?;
                let c = self.population(b, "second", f)?;
                V::Population(ea::merge(&a, &c))
            }
            "population_sort" => {
                let pop = self.population(b, "population", f)?;
                let values = self.evaluate_all(objective_of(b), &pop, f)?;
                V::Population(ea::sort_by_values(&pop, &values))
            }
            "population_take" => {
                let pop = self.population(b, "population", f)?;
                let k = self.count(b, "count", MAX_LENGTH, f)?;
                V::Population(ea::take_first(&pop, k).map_err(|e| f.halt(e))?)
            }

            "individual_random" => {
                let n = self.count(b, "length", MAX_LENGTH, f)?;
                V::Individual(Individual::random(n, &mut f.rng).map_err(|e| f.halt(e))?)
            }
            "individual_explicit" => {
                V::Individual(Individual::parse(b.text_field("bits")).map_err(|e| f.halt(e))?)
            }
            "crossover_one_point" | "crossover_two_point" | "crossover_uniform" => {
                let x = self.individual(b, "first", f)?;
                let y = self.individual(b, "second", f)?;
                let child = match b.kind.id {
                    "crossover_one_point" => ea::one_point_crossover(&x, &y, &mut f.rng),
                    "crossover_two_point" => ea::two_point_crossover(&x, &y, &mut f.rng),
                    _ => ea::uniform_crossover(&x, &y, &mut f.rng),
                };
                V::Individual(child.map_err(|e| f.halt(e))?)
            }
            "mutate_per_bit" => {
                let x = self.individual(b, "individual", f)?;
                let p = self.number(b, "probability", f)?;
                V::Individual(ea::mutate_per_bit(&x, p, &mut f.rng).map_err(|e| f.halt(e))?)
            }
            "mutate_k_bits" => {
                let x = self.individual(b, "individual", f)?;
                let k = self.count(b, "count", MAX_LENGTH, f)?;
                V::Individual(ea::mutate_k_bits(&x, k, &mut f.rng).map_err(|e| f.halt(e))?)
            }
            "individual_length" => V::Number(self.individual(b, "individual", f)?.len() as f64),

            "fitness_onemax" => {
                let x = self.individual(b, "individual", f)?;
                V::Number(fitness::onemax(&x, &mut f.counter))
            }
            "fitness_leading_ones" => {
                let x = self.individual(b, "individual", f)?;
                V::Number(fitness::leading_ones(&x, &mut f.counter))
            }
            "fitness_jump" => {
                let x = self.individual(b, "individual", f)?;
                let gap = self.count(b, "gap", MAX_LENGTH, f)?;
                V::Number(fitness::jump(&x, gap, &mut f.counter).map_err(|e| f.halt(e))?)
            }
            "diversity_hamming" => {
                let pop = self.population(b, "population", f)?;
                V::Number(fitness::diversity_mean_hamming(&pop).map_err(|e| f.halt(e))?)
            }
            other => unreachable!("{other} is not a value block"),
        })
    }

    fn exec(&self, b: &Block, f: &mut Frame) -> Flow<()> {
        self.checkpoint(f)?;
        match b.kind.id {
            "comment" => {}
            "print" => {
                let text = self.text(b, "text", f)?;
                f.emit(Event::Print { text });
            }
            "plot" => {
                let series = self.text(b, "series", f)?;
                let x = self.number(b, "x", f)?;
                let y = self.number(b, "y", f)?;
                let style = PlotStyle::from_name(b.text_field("style")).unwrap_or(PlotStyle::Line);
                f.emit(Event::PlotPoint { series, x, y, style });
            }
            "variable_set" => {
                let v = self.eval(input(b, "value"), f)?;
                f.scope.insert(b.text_field("name").to_owned(), v);
            }
            "population_add" => {
                let x = self.individual(b, "individual", f)?;
                let name = b.text_field("variable");
                match f.scope.get_mut(name) {
                    Some(Value::Population(p)) => p.push(x),
                    _ => return Err(f.halt(Halt::UnboundVariable(name.to_owned()))),
                }
            }
            "if" => {
                let slot = if self.boolean(b, "condition", f)? { "then" } else { "else" };
                self.exec_slot(b, slot, f)?;
            }
            "repeat" => {
                let times = self.count(b, "times", usize::MAX, f)?;
                for _ in 0..times {
                    self.tick(f)?;
                    self.exec_slot(b, "body", f)?;
                }
            }
            "for_range" => {
                let from = self.number(b, "from", f)?;
                let to = self.number(b, "to", f)?;
                let from = self.integer(from, "from", -MAX_SAFE_INTEGER, MAX_SAFE_INTEGER, f)?;
                let to = self.integer(to, "to", -MAX_SAFE_INTEGER, MAX_SAFE_INTEGER, f)?;
                let name = b.text_field("variable").to_owned();
                let mut i = from;
                while i <= to {
                    self.tick(f)?;
                    f.scope.insert(name.clone(), Value::Number(i));
                    self.exec_slot(b, "body", f)?;
                    i += 1.0;
                }
            }
            "evolutionary_loop" | "ioh_loop" => {
                let max = b.number_field("max_generations") as u64;
                let records = b.kind.id == "ioh_loop";
                for _ in 0..max {
                    if self.boolean(b, "until", f)? {
                        break;
                    }
                    self.tick(f)?;
                    self.exec_slot(b, "body", f)?;
                    if records {
                        self.record(f);
                    }
                    f.generation += 1;
                }
            }
            "repeat_runs" => self.repeat_runs(b, f)?,
            "parallel_tasks" => self.parallel_tasks(b, f)?,
            "task_return" => {
                let v = self.number(b, "value", f)?;
                if let Some((_, slot)) = &mut f.task {
                    *slot = v;
                }
            }
            "sleep" => {
                let secs = self.number(b, "seconds", f)?;
                if !secs.is_finite() || secs < 0.0 {
                    return Err(f.halt(Halt::BadDuration(format_number(secs))));
                }
                if self.config.clock == Clock::Monotonic {
                    let deadline = Instant::now() + Duration::from_secs_f64(secs);
                    loop {
                        self.checkpoint(f)?;
                        let now = Instant::now();
                        if now >= deadline {
                            break;
                        }
                        std::thread::sleep((deadline - now).min(Duration::from_millis(10)));
                    }
                }
            }
            other => unreachable!("{other} is not a statement block"),
        }
        Ok(())
    }

    /// One record per aggregating-loop iteration that made new evaluations.
    /// Worker tasks count into a private counter and never record.
    fn record(&self, f: &mut Frame) {
        let evaluations = f.counter.count();
        if f.task.is_some() || evaluations <= f.last_recorded {
            return;
        }
        if let Some(best_fitness) = f.counter.best_fitness() {
            f.last_recorded = evaluations;
            let generation = f.generation;
            f.emit(Event::Record { generation, evaluations, best_fitness });
        }
    }

    /// Runs a batch through the runner, forwarding each task's buffered
    /// events to `parent` in task order and dropping everything after the
    /// first halted task.
    fn batch<T: Send>(
        &self,
        parent: &mut Frame,
        mode: ThreadMode,
        tasks: Vec<T>,
        work: impl Fn(usize, T, &mut Vec<Emitted>, BatchGuard) -> Flow<f64> + Sync,
    ) -> Flow<Vec<f64>> {
        let first_halt = Arc::new(AtomicUsize::new(usize::MAX));
        let halted = AtomicBool::new(false);
        let run_id = parent.run_id;
        let out = Mutex::new(&mut parent.out);
        let runner = Runner { mode, max_workers: self.config.max_workers };
        let results = runner.run(
            tasks,
            |_, value: &Flow<f64>, events: &[Emitted]| {
                if halted.load(Ordering::SeqCst) {
                    return;
                }
                out.lock().unwrap_or_else(|e| e.into_inner()).emit_all(events);
                if value.is_err() {
                    halted.store(true, Ordering::SeqCst);
                }
            },
            |i, task, events| {
                let guard = BatchGuard { first_halt: first_halt.clone(), index: i };
                let result = work(i, task, events, guard);
                if matches!(result, Err(Stop::Halt(..))) {
                    first_halt.fetch_min(i, Ordering::SeqCst);
                }
                result
            },
        );
        let results = results.map_err(|e| Stop::Halt(run_id, Halt::Worker(e)))?;
        let mut values = Vec::with_capacity(results.len());
        for r in results {
            values.push(r.value?);
        }
        Ok(values)
    }

    fn repeat_runs(&self, b: &Block, f: &mut Frame) -> Flow<()> {
        let runs = b.number_field("runs") as u32;
        let first = self.next_run_id.fetch_add(runs, Ordering::SeqCst);
        let ids: Vec<u32> = (first..first + runs).collect();
        let body = b.child("body");
        let started = f.started;
        self.batch(f, self.config.mode, ids, |_, run_id, events, guard| {
            let rng = RandomSource::new(derive_seed(self.master_seed, run_id as u64));
            let mut run = Frame::new(Some(run_id), rng, started, Out::Buffer(events));
            run.guards.push(guard);
            run.emit(Event::RunStarted { run_id });
            if let Some(head) = body {
                self.exec_chain(head, &mut run)?;
            }
            let best_individual = run.counter.best_individual().cloned();
            let best_fitness = run.counter.best_fitness();
            run.emit(Event::RunFinished { run_id, best_individual, best_fitness });
            Ok(0.0)
        })?;
        Ok(())
    }

    fn parallel_tasks(&self, b: &Block, f: &mut Frame) -> Flow<()> {
        let tasks = self.count(b, "tasks", MAX_LENGTH, f)?;
        let workers = self.number(b, "workers", f)?;
        let workers = self.integer(workers, "workers", 1.0, MAX_LENGTH as f64, f)? as usize;
        let mode = match b.text_field("mode") {
            "sequential" => ThreadMode::Sequential,
            "all" => ThreadMode::Unlimited,
            _ => ThreadMode::Pool(workers),
        };
        let batch_seed = f.rng.next_u64();
        let body = b.child("body");
        let inputs: Vec<HashMap<String, Value>> = vec![f.scope.clone(); tasks];
        let (run_id, generation, started, guards) = (f.run_id, f.generation, f.started, f.guards.clone());

        let children = Mutex::new(vec![EvalCounter::new(); tasks]);
        let values = self.batch(f, mode, inputs, |i, scope, events, guard| {
            let rng = RandomSource::new(derive_seed(batch_seed, i as u64));
            let mut task = Frame::new(run_id, rng, started, Out::Buffer(events));
            task.scope = scope;
            task.generation = generation;
            task.task = Some((i, 0.0));
            task.guards = guards.clone();
            task.guards.push(guard);
            if let Some(head) = body {
                self.exec_chain(head, &mut task)?;
            }
            children.lock().unwrap_or_else(|e| e.into_inner())[i] = task.counter.clone();
            Ok(task.task.map_or(0.0, |(_, v)| v))
        })?;
        for child in children.into_inner().unwrap_or_else(|e| e.into_inner()) {
            f.counter.absorb(&child);
        }
        f.scope.insert(b.text_field("result").to_owned(), Value::List(values));
        Ok(())
    }
}

#[cfg(test)]
mod tests;
