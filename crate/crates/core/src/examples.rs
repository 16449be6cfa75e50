//! The example programs shipped with the binary.
//!
//! Each example is stored as canonical XML under `programs/`. The builders in
//! [`build`] construct the same programs in code; a test keeps the two in
//! sync (`BLOCKEA_BLESS=1` rewrites the files).

use crate::block::{parse_xml, BlockProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Example {
    pub name: &'static str,
    pub slug: &'static str,
    pub description: &'static str,
    pub xml: &'static str,
}

impl Example {
    pub fn program(&self) -> BlockProgram {
        parse_xml(self.xml).expect("shipped examples parse")
    }

    pub fn file_name(&self) -> String {
        format!("{}.blockea.xml", self.slug.replace('-', "_"))
    }
}

pub const EXAMPLES: &[Example] = &[
    Example {
        name: "Simple Plotting",
        slug: "simple-plotting",
        description: "15 runs of a (10+10) EA with one-point crossover and per-bit mutation on OneMax, n = 20",
        xml: include_str!("../programs/simple_plotting.blockea.xml"),
    },
    Example {
        name: "Multi-Threading Performance Test",
        slug: "multi-threading-performance-test",
        description: "Times Fibonacci dummy tasks run sequentially, all in parallel and on a bounded pool",
        xml: include_str!("../programs/multi_threading_performance_test.blockea.xml"),
    },
];

/// Looks an example up by slug or by display name (case-insensitive).
pub fn find(name: &str) -> Option<&'static Example> {
    EXAMPLES
        .iter()
        .find(|e| e.slug.eq_ignore_ascii_case(name) || e.name.eq_ignore_ascii_case(name))
}

pub mod build {
    use crate::block::{Block, BlockProgram};

    pub const PLOT_RUNS: f64 = 15.0;
    pub const PLOT_MU: f64 = 10.0;
    pub const PLOT_LAMBDA: f64 = 10.0;
    pub const PLOT_N: f64 = 20.0;
    pub const PLOT_MAX_GENERATIONS: f64 = 2000.0;

    pub const PERF_MAX_TASKS: f64 = 3.0;
    pub const PERF_FIBONACCI: f64 = 27.0;

    fn b(id: &str) -> Block {
        Block::new(id).expect("registered kind")
    }

    fn num(x: f64) -> Block {
        b("number").field("value", x)
    }

    fn txt(s: &str) -> Block {
        b("text").field("value", s)
    }

    fn get(name: &str, t: &str) -> Block {
        b("variable_get").field("name", name).field("type", t)
    }

    fn set(name: &str, t: &str, value: Block) -> Block {
        b("variable_set").field("name", name).field("type", t).input("value", value)
    }

    fn to_text(t: &str, value: Block) -> Block {
        b("to_text").field("type", t).input("value", value)
    }

    /// Right-nested `text_join` over `parts` (at least one).
    fn join(mut parts: Vec<Block>) -> Block {
        let mut acc = parts.pop().expect("non-empty");
        while let Some(p) = parts.pop() {
            acc = b("text_join").input("first", p).input("second", acc);
        }
        acc
    }

    fn chain(mut blocks: Vec<Block>) -> Block {
        let mut acc = blocks.pop().expect("non-empty");
        while let Some(p) = blocks.pop() {
            acc = attach(p, acc);
        }
        acc
    }

    /// Appends `tail` after the last block of `head`'s chain.
    fn attach(mut head: Block, tail: Block) -> Block {
        head.next = Some(Box::new(match head.next.take() {
            Some(rest) => attach(*rest, tail),
            None => tail,
        }));
        head
    }

    fn best(population: Block) -> Block {
        b("population_best").field("objective", "onemax").input("population", population)
    }

    pub fn simple_plotting() -> BlockProgram {
        let pop = || get("population", "Population");
        let offspring = || get("offspring", "Population");

        let child = b("mutate_per_bit")
            .input(
                "individual",
                b("crossover_one_point")
                    .input("first", b("select_uniform").input("population", pop()))
                    .input("second", b("select_uniform").input("population", pop())),
            )
            .input("probability", num(1.0 / PLOT_N));
        let breed = b("repeat")
            .input("times", num(PLOT_LAMBDA))
            .input("body", b("population_add").field("variable", "offspring").input("individual", child));
        let survive = set(
            "population",
            "Population",
            b("population_take")
                .input(
                    "population",
                    b("population_sort")
                        .field("objective", "onemax")
                        .input("population", b("population_merge").input("first", pop()).input("second", offspring())),
                )
                .input("count", num(PLOT_MU)),
        );
        let plot = b("plot")
            .field("style", "line")
            .input("series", join(vec![txt("run "), to_text("Number", b("run_id"))]))
            .input("x", b("generation"))
            .input("y", b("fitness_onemax").input("individual", best(pop())));
        let generation = chain(vec![set("offspring", "Population", b("population_empty")), breed, survive, plot]);

        let until = b("compare")
            .field("op", "ge")
            .input("left", b("fitness_onemax").input("individual", best(pop())))
            .input("right", num(PLOT_N));
        let ea = b("ioh_loop")
            .field("max_generations", PLOT_MAX_GENERATIONS)
            .input("until", until)
            .input("body", generation);
        let report = b("print").input(
            "text",
            join(vec![
                txt("run "),
                to_text("Number", b("run_id")),
                txt(": best "),
                to_text("Individual", best(pop())),
                txt(" after "),
                to_text("Number", b("generation")),
                txt(" generations"),
            ]),
        );
        let body = chain(vec![
            set(
                "population",
                "Population",
                b("population_random").input("size", num(PLOT_MU)).input("length", num(PLOT_N)),
            ),
            ea,
            report,
        ]);
        BlockProgram::from_roots(vec![b("repeat_runs").field("runs", PLOT_RUNS).input("body", body)])
    }

    pub fn multi_threading_performance_test() -> BlockProgram {
        let i = || get("i", "Number");
        let elapsed = || {
            to_text(
                "Number",
                b("arithmetic").field("op", "subtract").input("left", b("timer")).input("right", get("start", "Number")),
            )
        };
        let setup = |label: &str, mode: &str, workers: Block, threads: Block| {
            let task = b("task_return").input("value", b("fibonacci").input("n", get("m", "Number")));
            chain(vec![
                set("start", "Number", b("timer")),
                b("parallel_tasks")
                    .field("mode", mode)
                    .field("result", "results")
                    .input("tasks", i())
                    .input("workers", workers)
                    .input("body", task),
                b("print").input(
                    "text",
                    join(vec![
                        txt(&format!("{label},")),
                        to_text("Number", i()),
                        txt(","),
                        to_text("Number", threads),
                        txt(","),
                        elapsed(),
                    ]),
                ),
            ])
        };
        let body = chain(vec![
            setup("one thread", "sequential", num(1.0), num(1.0)),
            setup("all threads", "all", i(), i()),
            setup("limited threads", "limited", get("cores", "Number"), get("cores", "Number")),
            b("print").input("text", txt(crate::runner::PERF_SEPARATOR)),
        ]);
        let program = chain(vec![
            b("comment").field("text", "Fibonacci argument sets the cost of one task"),
            set("m", "Number", num(PERF_FIBONACCI)),
            set("cores", "Number", b("hardware_concurrency")),
            b("print").input("text", txt(crate::runner::PERF_HEADER)),
            b("for_range")
                .field("variable", "i")
                .input("from", num(1.0))
                .input("to", num(PERF_MAX_TASKS))
                .input("body", body),
        ]);
        BlockProgram::from_roots(vec![program])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::{serialize_xml, validate};
    use std::path::Path;

    fn built(e: &Example) -> BlockProgram {
        match e.slug {
            "simple-plotting" => build::simple_plotting(),
            "multi-threading-performance-test" => build::multi_threading_performance_test(),
            other => panic!("no builder for {other}"),
        }
    }

    #[test]
    fn golden_files_match_builders() {
        for e in EXAMPLES {
            let canonical = serialize_xml(&built(e));
            if std::env::var_os("BLOCKEA_BLESS").is_some() {
                let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("programs").join(e.file_name());
                std::fs::write(path, &canonical).unwrap();
                continue;
            }
            assert_eq!(e.xml, canonical, "{} is stale; rerun with BLOCKEA_BLESS=1", e.file_name());
        }
    }

    #[test]
    fn examples_round_trip_and_validate_cleanly() {
        for e in EXAMPLES {
            let p = e.program();
            assert_eq!(serialize_xml(&p), e.xml);
            assert_eq!(validate(&p), vec![], "{}", e.name);
        }
    }

    #[test]
    fn simple_plotting_root_is_fifteen_runs() {
        let p = find("Simple Plotting").unwrap().program();
        assert_eq!(p.roots.len(), 1);
        assert_eq!(p.roots[0].kind.id, "repeat_runs");
        assert_eq!(p.roots[0].number_field("runs"), 15.0);
    }

    #[test]
    fn lookup_by_slug_or_name() {
        assert_eq!(find("simple-plotting").unwrap().name, "Simple Plotting");
        assert_eq!(find("multi-threading performance test").unwrap().slug, "multi-threading-performance-test");
        assert!(find("nope").is_none());
    }
}
