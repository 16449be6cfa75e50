use super::*;
use crate::block::BlockProgram;

fn b(id: &str) -> Block {
    Block::new(id).unwrap()
}

fn num(x: f64) -> Block {
    b("number").field("value", x)
}

fn txt(s: &str) -> Block {
    b("text").field("value", s)
}

fn print(text: Block) -> Block {
    b("print").input("text", text)
}

fn show(value: Block, t: &str) -> Block {
    print(b("to_text").field("type", t).input("value", value))
}

fn get(name: &str, t: &str) -> Block {
    b("variable_get").field("name", name).field("type", t)
}

fn set(name: &str, t: &str, value: Block) -> Block {
    b("variable_set").field("name", name).field("type", t).input("value", value)
}

fn program(roots: Vec<Block>) -> BlockProgram {
    BlockProgram::from_roots(roots)
}

fn frozen(mode: ThreadMode) -> Interpreter {
    Interpreter::new(InterpreterConfig { mode, clock: Clock::Frozen, ..InterpreterConfig::default() })
}

fn run(p: &BlockProgram, seed: u64) -> Result<ExperimentResult, RuntimeError> {
    frozen(ThreadMode::Sequential).run(p, seed, &NullSink)
}

fn halt_reason(r: Result<ExperimentResult, RuntimeError>) -> Halt {
    match r {
        Err(RuntimeError::Halt { reason, .. }) => reason,
        other => panic!("expected a halt, got {other:?}"),
    }
}

/// A (1+1)-style loop on OneMax: `x = mutate(x)` keeping improvements.
fn onemax_runs(runs: f64, n: f64, ioh: bool) -> Block {
    let fit = |blk: Block| b("fitness_onemax").input("individual", blk);
    let step = set(
        "y",
        "Individual",
        b("mutate_per_bit").input("individual", get("x", "Individual")).input("probability", num(1.0 / n)),
    )
    .then(
        b("if")
            .input(
                "condition",
                b("compare").field("op", "ge").input("left", fit(get("y", "Individual"))).input("right", fit(get("x", "Individual"))),
            )
            .input("then", set("x", "Individual", get("y", "Individual"))),
    );
    let until = b("compare").field("op", "eq").input("left", fit(get("x", "Individual"))).input("right", num(n));
    let loop_kind = if ioh { "ioh_loop" } else { "evolutionary_loop" };
    let body = set("x", "Individual", b("individual_random").input("length", num(n)))
        .then(b(loop_kind).field("max_generations", 5000.0).input("until", until).input("body", step))
        .then(show(b("generation"), "Number"));
    b("repeat_runs").field("runs", runs).input("body", body)
}

#[test]
fn prints_constant_text() {
    let r = run(&program(vec![print(txt("hello"))]), 1).unwrap();
    assert_eq!(r.output, vec!["hello"]);
    assert_eq!(r.events, vec![Emitted { run: None, event: Event::Print { text: "hello".into() } }]);
    assert!(r.logs.is_empty());
}

#[test]
fn chains_run_in_order_and_value_roots_are_skipped() {
    let p = program(vec![num(3.0), print(txt("a")).then(print(txt("b"))), print(txt("c"))]);
    assert_eq!(run(&p, 1).unwrap().output, vec!["a", "b", "c"]);
}

#[test]
fn repeat_counts() {
    for times in [0.0, 1.0, 4.0] {
        let p = program(vec![b("repeat").input("times", num(times)).input("body", print(txt("x")))]);
        assert_eq!(run(&p, 1).unwrap().output.len(), times as usize);
    }
    let p = program(vec![b("repeat").input("times", num(1.5)).input("body", print(txt("x")))]);
    assert!(matches!(halt_reason(run(&p, 1)), Halt::NotInteger { .. }));
}

#[test]
fn if_picks_branch() {
    for (cond, expect) in [("true", "yes"), ("false", "no")] {
        let p = program(vec![b("if")
            .input("condition", b("boolean").field("value", cond))
            .input("then", print(txt("yes")))
            .input("else", print(txt("no")))]);
        assert_eq!(run(&p, 1).unwrap().output, vec![expect]);
    }
}

#[test]
fn arithmetic_and_text() {
    let sum = b("arithmetic").field("op", "divide").input("left", num(1.0)).input("right", num(4.0));
    let joined = b("text_join").input("first", txt("q=")).input("second", b("to_text").field("type", "Number").input("value", sum));
    let p = program(vec![print(joined), show(b("arithmetic").field("op", "modulo").input("left", num(-7.0)).input("right", num(3.0)), "Number")]);
    assert_eq!(run(&p, 1).unwrap().output, vec!["q=0.25", "-1"]);
}

#[test]
fn logic_short_circuits() {
    // The right operand would halt on an unbound variable if evaluated.
    let unbound = get("nope", "Boolean");
    let and = b("logic_operation").field("op", "and").input("left", b("boolean").field("value", "false")).input("right", unbound.clone());
    let or = b("logic_operation").field("op", "or").input("left", b("boolean").field("value", "true")).input("right", unbound);
    let p = program(vec![show(and, "Boolean"), show(or, "Boolean")]);
    assert_eq!(run(&p, 1).unwrap().output, vec!["false", "true"]);
}

#[test]
fn unbound_variable_halts() {
    let p = program(vec![show(get("ghost", "Number"), "Number")]);
    assert_eq!(halt_reason(run(&p, 1)), Halt::UnboundVariable("ghost".into()));
}

#[test]
fn for_range_is_inclusive() {
    let p = program(vec![b("for_range")
        .field("variable", "i")
        .input("from", num(2.0))
        .input("to", num(4.0))
        .input("body", show(get("i", "Number"), "Number"))]);
    assert_eq!(run(&p, 1).unwrap().output, vec!["2", "3", "4"]);
}

#[test]
fn random_integer_covers_range() {
    let die = b("random_integer").input("low", num(1.0)).input("high", num(6.0));
    let p = program(vec![b("repeat").input("times", num(600.0)).input("body", show(die, "Number"))]);
    let out = run(&p, 7).unwrap().output;
    let mut seen = [0usize; 6];
    for line in &out {
        let face: usize = line.parse().unwrap();
        assert!((1..=6).contains(&face));
        seen[face - 1] += 1;
    }
    assert!(seen.iter().all(|&c| c > 50), "{seen:?}");

    let bad = program(vec![show(b("random_integer").input("low", num(3.0)).input("high", num(2.0)), "Number")]);
    assert!(matches!(halt_reason(run(&bad, 1)), Halt::BadRange { .. }));
}

#[test]
fn sleep_and_timer() {
    let p = program(vec![b("sleep").input("seconds", num(-1.0))]);
    assert_eq!(halt_reason(run(&p, 1)), Halt::BadDuration("-1".into()));

    let p = program(vec![b("sleep").input("seconds", num(3600.0)), show(b("timer"), "Number")]);
    assert_eq!(run(&p, 1).unwrap().output, vec!["0"]);

    let real = Interpreter::new(InterpreterConfig::default());
    let p = program(vec![b("sleep").input("seconds", num(0.03)), show(b("timer"), "Number")]);
    let ms: f64 = real.run(&p, 1, &NullSink).unwrap().output[0].parse().unwrap();
    assert!(ms >= 30.0, "timer read {ms}");
}

#[test]
fn loop_budget_halts() {
    let p = program(vec![b("repeat").input("times", num(50.0)).input("body", b("comment"))]);
    let interp = Interpreter::new(InterpreterConfig { max_iterations: 10, ..InterpreterConfig::default() });
    assert_eq!(halt_reason(interp.run(&p, 1, &NullSink)), Halt::BudgetExhausted(10));
}

#[test]
fn runs_have_ids_and_logs() {
    let p = program(vec![onemax_runs(3.0, 12.0, true)]);
    let r = run(&p, 42).unwrap();
    assert_eq!(r.logs.len(), 3);
    for (i, log) in r.logs.iter().enumerate() {
        assert_eq!(log.run_id, i as u32);
        assert_eq!(log.best_fitness, Some(12.0));
        assert!(!log.records.is_empty());
        assert!(log.records.windows(2).all(|w| w[0].evaluations < w[1].evaluations));
        assert_eq!(log.records.last().unwrap().best_fitness, 12.0);
    }
    let starts: Vec<_> = r.events.iter().filter(|e| matches!(e.event, Event::RunStarted { .. })).collect();
    assert_eq!(starts.len(), 3);
}

#[test]
fn evolutionary_loop_emits_no_records() {
    let r = run(&program(vec![onemax_runs(1.0, 8.0, false)]), 3).unwrap();
    assert!(r.logs[0].records.is_empty());
    assert_eq!(r.logs[0].best_fitness, Some(8.0));
}

#[test]
fn loop_respects_max_generations() {
    let until = b("boolean").field("value", "false");
    let p = program(vec![b("evolutionary_loop")
        .field("max_generations", 5.0)
        .input("until", until)
        .input("body", b("comment"))
        .then(show(b("generation"), "Number"))]);
    assert_eq!(run(&p, 1).unwrap().output, vec!["5"]);
}

#[test]
fn same_seed_same_stream() {
    let p = program(vec![onemax_runs(4.0, 10.0, true)]);
    let a = run(&p, 99).unwrap();
    assert_eq!(a, run(&p, 99).unwrap());
    assert_ne!(a.events, run(&p, 100).unwrap().events);
}

#[test]
fn thread_modes_agree() {
    let p = program(vec![onemax_runs(5.0, 10.0, true)]);
    let seq = frozen(ThreadMode::Sequential).run(&p, 5, &NullSink).unwrap();
    for mode in [ThreadMode::Unlimited, ThreadMode::Pool(2), ThreadMode::Pool(3)] {
        assert_eq!(frozen(mode).run(&p, 5, &NullSink).unwrap(), seq, "{mode}");
    }
}

#[test]
fn sink_sees_every_event_in_order() {
    let p = program(vec![print(txt("start")), onemax_runs(2.0, 6.0, true)]);
    let sink = CollectingSink::new();
    let r = frozen(ThreadMode::Unlimited).run(&p, 8, &sink).unwrap();
    assert_eq!(sink.into_events(), r.events);
}

#[test]
fn invalid_programs_do_not_run() {
    let p = program(vec![b("print")]);
    assert!(matches!(run(&p, 1), Err(RuntimeError::Invalid(d)) if !d.is_empty()));
}

fn task_program(mode: &str, tasks: f64) -> BlockProgram {
    let body = show(b("task_index"), "Number").then(
        b("task_return").input("value", b("arithmetic").field("op", "multiply").input("left", b("task_index")).input("right", num(10.0))),
    );
    program(vec![b("parallel_tasks")
        .field("mode", mode)
        .field("result", "r")
        .input("tasks", num(tasks))
        .input("workers", num(2.0))
        .input("body", body)
        .then(show(get("r", "ListOfNumber"), "ListOfNumber"))
        .then(show(b("list_sum").input("list", get("r", "ListOfNumber")), "Number"))])
}

#[test]
fn parallel_tasks_collects_results_in_order() {
    for mode in ["sequential", "all", "limited"] {
        let out = run(&task_program(mode, 4.0), 1).unwrap().output;
        assert_eq!(out, vec!["0", "1", "2", "3", "0,10,20,30", "60"], "{mode}");
    }
    assert_eq!(run(&task_program("all", 0.0), 1).unwrap().output, vec!["", "0"]);
}

#[test]
fn halting_task_keeps_only_earlier_output() {
    // Task 1 reads past the end of a list; only tasks 0 and 1 print.
    let bad_get = b("list_get").input("list", get("empty", "ListOfNumber")).input("index", b("task_index"));
    let body = show(b("task_index"), "Number").then(b("if").input(
        "condition",
        b("compare").field("op", "eq").input("left", b("task_index")).input("right", num(1.0)),
    ).input("then", show(bad_get, "Number")));
    let setup = b("parallel_tasks")
        .field("mode", "sequential")
        .field("result", "empty")
        .input("tasks", num(0.0))
        .input("workers", num(1.0));
    for mode in ["sequential", "all", "limited"] {
        let p = program(vec![setup.clone().then(
            b("parallel_tasks")
                .field("mode", mode)
                .field("result", "r")
                .input("tasks", num(4.0))
                .input("workers", num(2.0))
                .input("body", body.clone()),
        )]);
        let sink = CollectingSink::new();
        let r = frozen(ThreadMode::Sequential).run(&p, 1, &sink);
        assert!(matches!(halt_reason(r), Halt::OutOfRange { what: "index", .. }));
        assert_eq!(render_lines(&sink.into_events()), "0\n1\n", "{mode}");
    }
}

#[test]
fn tasks_count_evaluations_into_parent() {
    let body = b("print").input(
        "text",
        b("to_text").field("type", "Number").input("value", b("fitness_onemax").input("individual", b("individual_explicit").field("bits", "0111"))),
    );
    let p = program(vec![b("parallel_tasks")
        .field("mode", "all")
        .field("result", "r")
        .input("tasks", num(3.0))
        .input("workers", num(1.0))
        .input("body", body)
        .then(show(b("evaluation_count"), "Number"))]);
    assert_eq!(run(&p, 1).unwrap().output, vec!["3", "3", "3", "3"]);
}

#[test]
fn cancellation_stops_a_long_sleep() {
    let config = InterpreterConfig::default();
    let token = config.cancel.clone();
    let interp = Interpreter::new(config);
    let p = program(vec![b("sleep").input("seconds", num(60.0))]);
    let started = Instant::now();
    std::thread::scope(|s| {
        s.spawn(|| {
            std::thread::sleep(Duration::from_millis(50));
            token.cancel();
        });
        assert_eq!(interp.run(&p, 1, &NullSink), Err(RuntimeError::Cancelled));
    });
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn population_blocks() {
    let pop = b("population_explicit").field("members", "0001,1111,0011");
    let best = b("population_best").field("objective", "onemax").input("population", pop.clone());
    let sorted = b("population_sort").field("objective", "leading_ones").input("population", pop.clone());
    let take = b("population_take").input("population", sorted).input("count", num(2.0));
    let p = program(vec![
        show(best, "Individual"),
        show(take, "Population"),
        show(b("evaluation_count"), "Number"),
        set("p", "Population", b("population_empty")),
        b("population_add").field("variable", "p").input("individual", b("individual_explicit").field("bits", "10")),
        show(b("population_size").input("population", get("p", "Population")), "Number"),
    ]);
    assert_eq!(run(&p, 1).unwrap().output, vec!["1111", "1111,0001", "6", "1"]);
}

#[test]
fn operator_errors_halt() {
    let p = program(vec![show(
        b("mutate_per_bit").input("individual", b("individual_explicit").field("bits", "01")).input("probability", num(2.0)),
        "Individual",
    )]);
    assert!(matches!(halt_reason(run(&p, 1)), Halt::Operator(EaError::BadProbability(_))));

    let p = program(vec![show(b("select_uniform").input("population", b("population_empty")), "Individual")]);
    assert_eq!(halt_reason(run(&p, 1)), Halt::Operator(EaError::EmptyPopulation));
}
