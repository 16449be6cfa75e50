//! Batch execution of independent tasks in one of three thread modes.
//!
//! Tasks are moved into workers by value and results come back by value; a
//! task never sees another task's state. Each task writes its events into a
//! private buffer, and buffers are handed to the caller's `flush` callback in
//! task order as soon as every earlier task has finished, so the flushed
//! stream is the same in every mode.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::format_number;

pub const DEFAULT_MAX_WORKERS: usize = 256;
pub const MAX_WORKERS_ENV: &str = "BLOCKEA_MAX_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThreadMode {
    /// In order, on the calling thread.
    Sequential,
    /// One worker per task.
    Unlimited,
    /// At most this many tasks at once, dispatched first-in first-out.
    Pool(usize),
}

impl fmt::Display for ThreadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThreadMode::Sequential => f.write_str("seq"),
            ThreadMode::Unlimited => f.write_str("all"),
            ThreadMode::Pool(x) => write!(f, "pool:{x}"),
        }
    }
}

/// `seq`, `all`, `pool` (one worker per core) or `pool:X`.
impl FromStr for ThreadMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "seq" | "sequential" => Ok(ThreadMode::Sequential),
            "all" | "unlimited" => Ok(ThreadMode::Unlimited),
            "pool" => Ok(ThreadMode::Pool(hardware_concurrency())),
            _ => {
                let x = s
                    .strip_prefix("pool:")
                    .and_then(|x| x.parse::<usize>().ok())
                    .ok_or_else(|| format!("unknown thread mode {s:?} (expected seq, all, pool or pool:X)"))?;
                if x == 0 {
                    return Err("pool size must be at least 1".to_owned());
                }
                Ok(ThreadMode::Pool(x))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunnerError {
    #[error("task {task_index} panicked: {message}")]
    WorkerPanicked { task_index: usize, message: String },
    #[error("could not start a worker thread: {0}")]
    SpawnFailure(String),
    #[error("{requested} workers requested, the limit is {limit}")]
    TooManyWorkers { requested: usize, limit: usize },
    #[error("a pool needs at least one worker")]
    BadPoolSize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult<V, E> {
    pub task_index: usize,
    pub value: V,
    pub events: Vec<E>,
}

/// Logical cores available to this process, at least 1.
pub fn hardware_concurrency() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// The Unlimited-mode cap: `BLOCKEA_MAX_WORKERS` if set and valid, else 256.
pub fn max_workers_from_env() -> usize {
    std::env::var(MAX_WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(DEFAULT_MAX_WORKERS)
}

#[derive(Debug, Clone, Copy)]
pub struct Runner {
    pub mode: ThreadMode,
    pub max_workers: usize,
}

type Outcome<V, E> = Result<(V, Vec<E>), String>;

struct Completion<V, E> {
    next_to_flush: usize,
    done: Vec<Option<Outcome<V, E>>>,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic payload".to_owned()
    }
}

impl Runner {
    pub fn new(mode: ThreadMode) -> Self {
        Self { mode, max_workers: max_workers_from_env() }
    }

    /// Runs `work(index, task, events)` for every task and returns the results
    /// in task order. `flush(index, value, events)` is called in task order,
    /// each call as soon as the task and all earlier ones have finished.
    ///
    /// A panicking task does not stop the others; after all finish, the
    /// lowest panicked index is reported.
    pub fn run<T, V, E, W, F>(&self, tasks: Vec<T>, flush: F, work: W) -> Result<Vec<TaskResult<V, E>>, RunnerError>
    where
        T: Send,
        V: Send,
        E: Send,
        W: Fn(usize, T, &mut Vec<E>) -> V + Sync,
        F: Fn(usize, &V, &[E]) + Sync,
    {
        let n = tasks.len();
        let workers = match self.mode {
            ThreadMode::Sequential => 0,
            ThreadMode::Unlimited => {
                if n > self.max_workers {
                    return Err(RunnerError::TooManyWorkers { requested: n, limit: self.max_workers });
                }
                n
            }
            ThreadMode::Pool(0) => return Err(RunnerError::BadPoolSize),
            ThreadMode::Pool(x) => x.min(n),
        };

        let completion = Mutex::new(Completion { next_to_flush: 0, done: (0..n).map(|_| None).collect() });
        let finish = |index: usize, outcome: Outcome<V, E>| {
            let mut c = completion.lock().unwrap_or_else(|e| e.into_inner());
            c.done[index] = Some(outcome);
            while c.next_to_flush < n {
                let i = c.next_to_flush;
                match &c.done[i] {
                    Some(Ok((value, events))) => flush(i, value, events),
                    Some(Err(_)) => {}
                    None => break,
                }
                c.next_to_flush += 1;
            }
        };
        let execute = |index: usize, task: T| {
            let mut events = Vec::new();
            let outcome = catch_unwind(AssertUnwindSafe(|| work(index, task, &mut events)))
                .map(|v| (v, events))
                .map_err(panic_message);
            finish(index, outcome);
        };

        if workers == 0 {
            for (i, task) in tasks.into_iter().enumerate() {
                execute(i, task);
            }
        } else {
            let queue: Vec<Mutex<Option<T>>> = tasks.into_iter().map(|t| Mutex::new(Some(t))).collect();
            let cursor = AtomicUsize::new(0);
            let worker = || loop {
                let i = cursor.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let task = queue[i].lock().unwrap_or_else(|e| e.into_inner()).take();
                if let Some(task) = task {
                    execute(i, task);
                }
            };
            let spawned = std::thread::scope(|scope| {
                let mut spawned = 0usize;
                let mut last_error = None;
                for w in 0..workers {
                    match std::thread::Builder::new()
                        .name(format!("blockea-worker-{w}"))
                        .spawn_scoped(scope, worker)
                    {
                        Ok(_) => spawned += 1,
                        Err(e) => last_error = Some(e.to_string()),
                    }
                }
                if spawned == 0 {
                    Err(RunnerError::SpawnFailure(last_error.unwrap_or_default()))
                } else {
                    Ok(spawned)
                }
            });
            spawned?;
        }

        let done = completion.into_inner().unwrap_or_else(|e| e.into_inner()).done;
        let mut results = Vec::with_capacity(n);
        let mut first_panic = None;
        for (task_index, outcome) in done.into_iter().enumerate() {
            match outcome.expect("every task ran") {
                Ok((value, events)) => results.push(TaskResult { task_index, value, events }),
                Err(message) => {
                    first_panic.get_or_insert(RunnerError::WorkerPanicked { task_index, message });
                }
            }
        }
        match first_panic {
            Some(e) => Err(e),
            None => Ok(results),
        }
    }
}

/// [`Runner::run`] with the Unlimited cap taken from the environment.
pub fn run_tasks<T, V, E, W, F>(
    tasks: Vec<T>,
    mode: ThreadMode,
    flush: F,
    work: W,
) -> Result<Vec<TaskResult<V, E>>, RunnerError>
where
    T: Send,
    V: Send,
    E: Send,
    W: Fn(usize, T, &mut Vec<E>) -> V + Sync,
    F: Fn(usize, &V, &[E]) + Sync,
{
    Runner::new(mode).run(tasks, flush, work)
}

/// Naive exponential-time Fibonacci, used as CPU load.
pub fn dummy_task(m: u32) -> u64 {
    fn fib(m: u32) -> u64 {
        if m < 2 {
            m as u64
        } else {
            fib(m - 1) + fib(m - 2)
        }
    }
    fib(std::hint::black_box(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerfSetup {
    OneThread,
    AllThreads,
    LimitedThreads,
}

impl PerfSetup {
    pub fn label(self) -> &'static str {
        match self {
            PerfSetup::OneThread => "one thread",
            PerfSetup::AllThreads => "all threads",
            PerfSetup::LimitedThreads => "limited threads",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfRow {
    pub setup: PerfSetup,
    pub num_iterations: usize,
    pub num_threads: usize,
    pub time_ms: f64,
}

pub const PERF_HEADER: &str = "threads,num_iterations,num_threads,time";
pub const PERF_SEPARATOR: &str = "------------------------------------------------";

fn timed_batch(i: usize, m: u32, mode: ThreadMode, max_workers: usize) -> Result<f64, RunnerError> {
    let runner = Runner { mode, max_workers };
    let start = Instant::now();
    runner.run(vec![m; i], |_, _: &_, _: &[()]| {}, |_, m, _| dummy_task(m))?;
    Ok(start.elapsed().as_secs_f64() * 1000.0)
}

/// For each `i` in `1..=i_max`, times `i` copies of `dummy_task(m)` run
/// sequentially, one worker per task, and in a pool of `cores` workers.
pub fn perf_rows(i_max: usize, m: u32, cores: usize) -> Result<Vec<PerfRow>, RunnerError> {
    let max_workers = max_workers_from_env().max(i_max);
    let mut rows = Vec::with_capacity(3 * i_max);
    for i in 1..=i_max {
        for (setup, mode, threads) in [
            (PerfSetup::OneThread, ThreadMode::Sequential, 1),
            (PerfSetup::AllThreads, ThreadMode::Unlimited, i),
            (PerfSetup::LimitedThreads, ThreadMode::Pool(cores), cores),
        ] {
            let time_ms = timed_batch(i, m, mode, max_workers)?;
            rows.push(PerfRow { setup, num_iterations: i, num_threads: threads, time_ms });
        }
    }
    Ok(rows)
}

/// Header, one line per row, and a dashed line between `i` groups.
pub fn render_perf_csv(rows: &[PerfRow]) -> String {
    let mut out = String::new();
    out.push_str(PERF_HEADER);
    out.push('\n');
    let mut last_i = None;
    for row in rows {
        if last_i.is_some_and(|i| i != row.num_iterations) {
            out.push_str(PERF_SEPARATOR);
            out.push('\n');
        }
        last_i = Some(row.num_iterations);
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.setup.label(),
            row.num_iterations,
            row.num_threads,
            format_number(row.time_ms)
        ));
    }
    out
}

pub fn perf_experiment(i_max: usize, m: u32) -> Result<String, RunnerError> {
    Ok(render_perf_csv(&perf_rows(i_max, m, hardware_concurrency())?))
}
