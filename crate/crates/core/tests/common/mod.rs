//! Seeded generator of random valid block programs, shared by the
//! integration tests.
#![allow(dead_code)]

use blockea_core::block::{Block, BlockProgram, ValueType};
use blockea_core::rng::RandomSource;

#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    /// Allow `timer`, `sleep` and `hardware_concurrency`, whose values depend
    /// on the machine and the clock.
    pub nondeterministic: bool,
    pub max_depth: u32,
    pub max_chain: u32,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self { nondeterministic: true, max_depth: 4, max_chain: 3 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Ctx {
    top_level: bool,
    in_run: bool,
    in_task: bool,
}

const VARS: &[(&str, ValueType)] = &[
    ("n0", ValueType::Number),
    ("n1", ValueType::Number),
    ("t0", ValueType::Text),
    ("b0", ValueType::Boolean),
    ("x0", ValueType::Individual),
    ("p0", ValueType::Population),
    ("l0", ValueType::ListOfNumber),
];

const TEXTS: &[&str] = &["", "a", "best: ", "x,y", "tab\there", "line\nbreak", "quote \"'<&>", "ünï 😀", "  spaced  "];

struct Gen {
    rng: RandomSource,
    opts: GenOptions,
    /// Bit-string length shared by most individuals of one program.
    len: usize,
}

fn b(id: &str) -> Block {
    Block::new(id).expect("registered kind")
}

fn num(x: f64) -> Block {
    b("number").field("value", x)
}

fn var_of(t: ValueType) -> Vec<&'static str> {
    VARS.iter().filter(|(_, vt)| *vt == t).map(|(n, _)| *n).collect()
}

impl Gen {
    fn below(&mut self, n: usize) -> usize {
        self.rng.below(n as u64) as usize
    }

    fn coin(&mut self, p: f64) -> bool {
        self.rng.chance(p)
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len())]
    }

    fn bits(&mut self, n: usize) -> String {
        (0..n).map(|_| if self.rng.next_bit() { '1' } else { '0' }).collect()
    }

    fn small(&mut self, lo: usize, hi: usize) -> Block {
        num((lo + self.below(hi - lo + 1)) as f64)
    }

    fn get(&mut self, t: ValueType) -> Block {
        let names = var_of(t);
        let name = *self.pick(&names);
        b("variable_get").field("name", name).field("type", t.name())
    }

    fn objective(&mut self, blk: Block) -> Block {
        let obj = *self.pick(&["onemax", "leading_ones", "jump"]);
        let gap = 1 + self.below(self.len);
        blk.field("objective", obj).field("gap", gap as f64)
    }

    fn value(&mut self, t: ValueType, depth: u32, ctx: Ctx) -> Block {
        let leaf = depth >= self.opts.max_depth;
        match t {
            ValueType::Number => self.number(leaf, depth, ctx),
            ValueType::Boolean => self.boolean(leaf, depth, ctx),
            ValueType::Text => self.text(leaf, depth, ctx),
            ValueType::Individual => self.individual(leaf, depth, ctx),
            ValueType::Population => self.population(leaf, depth, ctx),
            ValueType::ListOfNumber => self.get(ValueType::ListOfNumber),
        }
    }

    fn number(&mut self, leaf: bool, depth: u32, ctx: Ctx) -> Block {
        let d = depth + 1;
        let choice = if leaf { self.below(4) } else { self.below(22) };
        match choice {
            0 => {
                let x = *self.pick(&[0.0, 1.0, 2.0, 3.0, -1.0, 0.5, 0.1, 1e21, -2.5, 1.0 / 3.0]);
                num(x)
            }
            1 => self.get(ValueType::Number),
            2 => b("generation"),
            3 => b("evaluation_count"),
            4 | 5 => b("arithmetic")
                .field("op", *self.pick(&["add", "subtract", "multiply", "divide", "modulo"]))
                .input("left", self.value(ValueType::Number, d, ctx))
                .input("right", self.value(ValueType::Number, d, ctx)),
            6 => {
                let lo = self.below(5) as f64 - 2.0;
                b("random_integer").input("low", num(lo)).input("high", num(lo + self.below(4) as f64))
            }
            7 => b("list_length").input("list", self.get(ValueType::ListOfNumber)),
            8 => b("list_get").input("list", self.get(ValueType::ListOfNumber)).input("index", self.small(0, 2)),
            9 => b("list_sum").input("list", self.get(ValueType::ListOfNumber)),
            10 => b("population_size").input("population", self.value(ValueType::Population, d, ctx)),
            11 => b("individual_length").input("individual", self.value(ValueType::Individual, d, ctx)),
            12 | 13 => b(self.pick(&["fitness_onemax", "fitness_leading_ones"]))
                .input("individual", self.value(ValueType::Individual, d, ctx)),
            14 => {
                let gap = 1 + self.below(self.len);
                b("fitness_jump").input("individual", self.value(ValueType::Individual, d, ctx)).input("gap", num(gap as f64))
            }
            15 => b("diversity_hamming").input("population", self.value(ValueType::Population, d, ctx)),
            16 => b("fibonacci").input("n", self.small(0, 12)),
            17 if ctx.in_run => b("run_id"),
            18 if ctx.in_task => b("task_index"),
            19 if self.opts.nondeterministic => {
                if self.coin(0.5) {
                    b("timer")
                } else {
                    b("hardware_concurrency")
                }
            }
            _ => self.get(ValueType::Number),
        }
    }

    fn boolean(&mut self, leaf: bool, depth: u32, ctx: Ctx) -> Block {
        let d = depth + 1;
        match if leaf { self.below(2) } else { self.below(6) } {
            0 => b("boolean").field("value", *self.pick(&["true", "false"])),
            1 => self.get(ValueType::Boolean),
            2 | 3 => b("compare")
                .field("op", *self.pick(&["eq", "neq", "lt", "le", "gt", "ge"]))
                .input("left", self.value(ValueType::Number, d, ctx))
                .input("right", self.value(ValueType::Number, d, ctx)),
            4 => b("logic_operation")
                .field("op", *self.pick(&["and", "or"]))
                .input("left", self.value(ValueType::Boolean, d, ctx))
                .input("right", self.value(ValueType::Boolean, d, ctx)),
            _ => b("logic_not").input("value", self.value(ValueType::Boolean, d, ctx)),
        }
    }

    fn text(&mut self, leaf: bool, depth: u32, ctx: Ctx) -> Block {
        let d = depth + 1;
        match if leaf { self.below(2) } else { self.below(5) } {
            0 => b("text").field("value", *self.pick(TEXTS)),
            1 => self.get(ValueType::Text),
            2 => b("text_join")
                .input("first", self.value(ValueType::Text, d, ctx))
                .input("second", self.value(ValueType::Text, d, ctx)),
            _ => {
                let t = *self.pick(&ValueType::ALL);
                b("to_text").field("type", t.name()).input("value", self.value(t, d, ctx))
            }
        }
    }

    fn individual(&mut self, leaf: bool, depth: u32, ctx: Ctx) -> Block {
        let d = depth + 1;
        let n = self.len;
        match if leaf { self.below(3) } else { self.below(13) } {
            0 => b("individual_explicit").field("bits", self.bits(n)),
            1 => self.get(ValueType::Individual),
            2 => b("individual_random").input("length", num(n as f64)),
            3..=5 => b(self.pick(&["crossover_one_point", "crossover_two_point", "crossover_uniform"]))
                .input("first", self.value(ValueType::Individual, d, ctx))
                .input("second", self.value(ValueType::Individual, d, ctx)),
            6 => {
                let p = *self.pick(&[0.0, 0.1, 0.5, 1.0]);
                b("mutate_per_bit").input("individual", self.value(ValueType::Individual, d, ctx)).input("probability", num(p))
            }
            7 => b("mutate_k_bits").input("individual", self.value(ValueType::Individual, d, ctx)).input("count", self.small(0, 2)),
            8 => b("population_get").input("population", self.value(ValueType::Population, d, ctx)).input("index", self.small(0, 1)),
            9 => {
                let blk = b("population_best").input("population", self.value(ValueType::Population, d, ctx));
                self.objective(blk)
            }
            10 => b("select_uniform").input("population", self.value(ValueType::Population, d, ctx)),
            11 => {
                let blk = b("select_proportionate").input("population", self.value(ValueType::Population, d, ctx));
                self.objective(blk)
            }
            _ => self.get(ValueType::Individual),
        }
    }

    fn population(&mut self, leaf: bool, depth: u32, ctx: Ctx) -> Block {
        let d = depth + 1;
        let n = self.len;
        match if leaf { self.below(4) } else { self.below(8) } {
            0 => {
                let k = self.below(4);
                let members: Vec<String> = (0..k).map(|_| self.bits(n)).collect();
                b("population_explicit").field("members", members.join(","))
            }
            1 => self.get(ValueType::Population),
            2 => b("population_random").input("size", self.small(1, 4)).input("length", num(n as f64)),
            3 => b("population_empty"),
            4 => b("population_merge")
                .input("first", self.value(ValueType::Population, d, ctx))
                .input("second", self.value(ValueType::Population, d, ctx)),
            5 => {
                let blk = b("population_sort").input("population", self.value(ValueType::Population, d, ctx));
                self.objective(blk)
            }
            6 => b("population_take").input("population", self.value(ValueType::Population, d, ctx)).input("count", self.small(0, 2)),
            _ => self.get(ValueType::Population),
        }
    }

    fn chain(&mut self, depth: u32, ctx: Ctx) -> Block {
        let len = 1 + self.below(self.opts.max_chain as usize);
        let mut blocks: Vec<Block> = (0..len).map(|_| self.statement(depth, ctx)).collect();
        let mut acc = blocks.pop().unwrap();
        while let Some(prev) = blocks.pop() {
            acc = attach(prev, acc);
        }
        acc
    }

    fn statement(&mut self, depth: u32, ctx: Ctx) -> Block {
        let d = depth + 1;
        let inner = Ctx { top_level: false, ..ctx };
        let leaf = depth >= self.opts.max_depth;
        let choice = if leaf { self.below(5) } else { self.below(17) };
        match choice {
            0 | 1 | 15 | 16 => b("print").input("text", self.value(ValueType::Text, d, ctx)),
            2 => {
                let t = *self.pick(&ValueType::ALL);
                let names = var_of(t);
                let name = *self.pick(&names);
                b("variable_set").field("name", name).field("type", t.name()).input("value", self.value(t, d, ctx))
            }
            3 => b("population_add").field("variable", "p0").input("individual", self.value(ValueType::Individual, d, ctx)),
            4 => b("plot")
                .field("style", *self.pick(&["line", "scatter", "bar"]))
                .input("series", self.value(ValueType::Text, d, ctx))
                .input("x", self.value(ValueType::Number, d, ctx))
                .input("y", self.value(ValueType::Number, d, ctx)),
            5 => {
                let mut blk = b("if").input("condition", self.value(ValueType::Boolean, d, ctx));
                blk = blk.input("then", self.chain(d, inner));
                if self.coin(0.5) {
                    blk = blk.input("else", self.chain(d, inner));
                }
                blk
            }
            6 => b("repeat").input("times", self.small(0, 3)).input("body", self.chain(d, inner)),
            7 => {
                let from = self.below(3) as f64 - 1.0;
                b("for_range")
                    .field("variable", "n1")
                    .input("from", num(from))
                    .input("to", num(from + self.below(4) as f64 - 1.0))
                    .input("body", self.chain(d, inner))
            }
            8 | 9 => b(self.pick(&["evolutionary_loop", "ioh_loop"]))
                .field("max_generations", (1 + self.below(5)) as f64)
                .input("until", self.value(ValueType::Boolean, d, ctx))
                .input("body", self.chain(d, inner)),
            10 => {
                let task_ctx = Ctx { in_task: true, ..inner };
                b("parallel_tasks")
                    .field("mode", *self.pick(&["sequential", "all", "limited"]))
                    .field("result", "l0")
                    .input("tasks", self.small(0, 3))
                    .input("workers", self.small(1, 3))
                    .input("body", self.chain(d, task_ctx))
            }
            11 if ctx.in_task => b("task_return").input("value", self.value(ValueType::Number, d, ctx)),
            12 if ctx.top_level => {
                let run_ctx = Ctx { in_run: true, ..inner };
                // Runs start with an empty scope.
                let body = attach(self.prelude(), self.chain(d, run_ctx));
                b("repeat_runs").field("runs", (1 + self.below(3)) as f64).input("body", body)
            }
            13 if self.opts.nondeterministic => b("sleep").input("seconds", num(0.0)),
            _ => b("comment").field("text", *self.pick(TEXTS)),
        }
    }

    /// Sets every variable so that most reads succeed.
    fn prelude(&mut self) -> Block {
        let mut blocks = Vec::new();
        for (name, t) in VARS {
            let value = match t {
                ValueType::ListOfNumber => {
                    blocks.push(
                        b("parallel_tasks")
                            .field("mode", "sequential")
                            .field("result", *name)
                            .input("tasks", self.small(0, 3))
                            .input("workers", num(1.0))
                            .input("body", b("task_return").input("value", b("task_index"))),
                    );
                    continue;
                }
                ValueType::Number => num(self.below(4) as f64),
                ValueType::Boolean => b("boolean").field("value", "true"),
                ValueType::Text => b("text").field("value", *self.pick(TEXTS)),
                ValueType::Individual => b("individual_explicit").field("bits", self.bits(self.len)),
                ValueType::Population => {
                    b("population_random").input("size", self.small(2, 4)).input("length", num(self.len as f64))
                }
            };
            blocks.push(b("variable_set").field("name", *name).field("type", t.name()).input("value", value));
        }
        let mut acc = blocks.pop().unwrap();
        while let Some(prev) = blocks.pop() {
            acc = attach(prev, acc);
        }
        acc
    }
}

fn attach(mut head: Block, tail: Block) -> Block {
    head.next = Some(Box::new(match head.next.take() {
        Some(rest) => attach(*rest, tail),
        None => tail,
    }));
    head
}

/// A random program that passes validation without errors.
pub fn random_program(seed: u64, opts: GenOptions) -> BlockProgram {
    let mut g = Gen { rng: RandomSource::new(seed), opts, len: 0 };
    g.len = 3 + g.below(6);
    let top = Ctx { top_level: true, ..Ctx::default() };
    let mut roots = vec![g.prelude()];
    for _ in 0..1 + g.below(3) {
        if g.coin(0.15) {
            let t = *g.pick(&ValueType::ALL);
            roots.push(g.value(t, 2, Ctx::default()));
        } else {
            let chain = g.chain(0, top);
            roots.push(chain);
        }
    }
    BlockProgram::from_roots(roots)
}
