//! The fixed registry of block kinds.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ValueType {
    Number,
    Boolean,
    Text,
    Individual,
    Population,
    ListOfNumber,
}

impl ValueType {
    pub const ALL: [ValueType; 6] = [
        ValueType::Number,
        ValueType::Boolean,
        ValueType::Text,
        ValueType::Individual,
        ValueType::Population,
        ValueType::ListOfNumber,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ValueType::Number => "Number",
            ValueType::Boolean => "Boolean",
            ValueType::Text => "Text",
            ValueType::Individual => "Individual",
            ValueType::Population => "Population",
            ValueType::ListOfNumber => "ListOfNumber",
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ValueType {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        ValueType::ALL.into_iter().find(|t| t.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Population,
    Individuals,
    Fitness,
    Primitives,
    Logic,
    Loops,
    Functions,
    Logging,
    Multithreading,
    Time,
}

impl Group {
    pub const ALL: [Group; 10] = [
        Group::Population,
        Group::Individuals,
        Group::Fitness,
        Group::Primitives,
        Group::Logic,
        Group::Loops,
        Group::Functions,
        Group::Logging,
        Group::Multithreading,
        Group::Time,
    ];
}

/// A value type, either fixed or chosen by one of the block's fields
/// (variables and text conversion are typed this way).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TypeRef {
    Fixed(ValueType),
    FromField(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PortKind {
    Value(TypeRef),
    Statement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PortSpec {
    pub name: &'static str,
    pub kind: PortKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FieldKind {
    Number { default: f64, integer: bool, min: Option<f64> },
    Text { default: &'static str },
    /// Variable name: `[A-Za-z_][A-Za-z0-9_]*`.
    Identifier { default: &'static str },
    Choice { options: &'static [&'static str], default: &'static str },
    /// A bit string, or a comma-separated list of them when `list` is set.
    Bits { default: &'static str, list: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSpec {
    pub name: &'static str,
    pub kind: FieldKind,
}

#[derive(Debug, Serialize)]
pub struct BlockKind {
    pub id: &'static str,
    pub group: Group,
    /// Value blocks have an output; all others are statements that chain.
    pub output: Option<TypeRef>,
    pub ports: &'static [PortSpec],
    pub fields: &'static [FieldSpec],
}

impl BlockKind {
    pub fn is_statement(&self) -> bool {
        self.output.is_none()
    }

    pub fn port_index(&self, name: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.name == name)
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn statement_slots(&self) -> impl Iterator<Item = &'static PortSpec> {
        self.ports.iter().filter(|p| p.kind == PortKind::Statement)
    }
}

impl PartialEq for BlockKind {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

const fn value(name: &'static str, t: ValueType) -> PortSpec {
    PortSpec { name, kind: PortKind::Value(TypeRef::Fixed(t)) }
}

const fn body(name: &'static str) -> PortSpec {
    PortSpec { name, kind: PortKind::Statement }
}

const fn int_field(name: &'static str, default: f64, min: f64) -> FieldSpec {
    FieldSpec { name, kind: FieldKind::Number { default, integer: true, min: Some(min) } }
}

const fn choice(name: &'static str, options: &'static [&'static str]) -> FieldSpec {
    FieldSpec { name, kind: FieldKind::Choice { options, default: options[0] } }
}

const fn ident(name: &'static str, default: &'static str) -> FieldSpec {
    FieldSpec { name, kind: FieldKind::Identifier { default } }
}

const fn out(t: ValueType) -> Option<TypeRef> {
    Some(TypeRef::Fixed(t))
}

const TYPE_NAMES: &[&str] = &["Number", "Boolean", "Text", "Individual", "Population", "ListOfNumber"];
pub const OBJECTIVES: &[&str] = &["onemax", "leading_ones", "jump"];
const OBJECTIVE_FIELDS: &[FieldSpec] = &[choice("objective", OBJECTIVES), int_field("gap", 2.0, 1.0)];

use ValueType::{Boolean, Individual, ListOfNumber, Number, Population, Text};

pub static REGISTRY: &[BlockKind] = &[
    // Population
    BlockKind {
        id: "population_random",
        group: Group::Population,
        output: out(Population),
        ports: &[value("size", Number), value("length", Number)],
        fields: &[],
    },
    BlockKind { id: "population_empty", group: Group::Population, output: out(Population), ports: &[], fields: &[] },
    BlockKind {
        id: "population_explicit",
        group: Group::Population,
        output: out(Population),
        ports: &[],
        fields: &[FieldSpec { name: "members", kind: FieldKind::Bits { default: "", list: true } }],
    },
    BlockKind {
        id: "population_size",
        group: Group::Population,
        output: out(Number),
        ports: &[value("population", Population)],
        fields: &[],
    },
    BlockKind {
        id: "population_get",
        group: Group::Population,
        output: out(Individual),
        ports: &[value("population", Population), value("index", Number)],
        fields: &[],
    },
    BlockKind {
        id: "population_best",
        group: Group::Population,
        output: out(Individual),
        ports: &[value("population", Population)],
        fields: OBJECTIVE_FIELDS,
    },
    BlockKind {
        id: "select_uniform",
        group: Group::Population,
        output: out(Individual),
        ports: &[value("population", Population)],
        fields: &[],
    },
    BlockKind {
        id: "select_proportionate",
        group: Group::Population,
        output: out(Individual),
        ports: &[value("population", Population)],
        fields: OBJECTIVE_FIELDS,
    },
    BlockKind {
        id: "population_add",
        group: Group::Population,
        output: None,
        ports: &[value("individual", Individual)],
        fields: &[ident("variable", "population")],
    },
    BlockKind {
        id: "population_merge",
        group: Group::Population,
        output: out(Population),
        ports: &[value("first", Population), value("second", Population)],
        fields: &[],
    },
    BlockKind {
        id: "population_sort",
        group: Group::Population,
        output: out(Population),
        ports: &[value("population", Population)],
        fields: OBJECTIVE_FIELDS,
    },
    BlockKind {
        id: "population_take",
        group: Group::Population,
        output: out(Population),
        ports: &[value("population", Population), value("count", Number)],
        fields: &[],
    },
    // Individuals
    BlockKind {
        id: "individual_random",
        group: Group::Individuals,
        output: out(Individual),
        ports: &[value("length", Number)],
        fields: &[],
    },
    BlockKind {
        id: "individual_explicit",
        group: Group::Individuals,
        output: out(Individual),
        ports: &[],
        fields: &[FieldSpec { name: "bits", kind: FieldKind::Bits { default: "0", list: false } }],
    },
    BlockKind {
        id: "crossover_one_point",
        group: Group::Individuals,
        output: out(Individual),
        ports: &[value("first", Individual), value("second", Individual)],
        fields: &[],
    },
    BlockKind {
        id: "crossover_two_point",
        group: Group::Individuals,
        output: out(Individual),
        ports: &[value("first", Individual), value("second", Individual)],
        fields: &[],
    },
    BlockKind {
        id: "crossover_uniform",
        group: Group::Individuals,
        output: out(Individual),
        ports: &[value("first", Individual), value("second", Individual)],
        fields: &[],
    },
    BlockKind {
        id: "mutate_per_bit",
        group: Group::Individuals,
        output: out(Individual),
        ports: &[value("individual", Individual), value("probability", Number)],
        fields: &[],
    },
    BlockKind {
        id: "mutate_k_bits",
        group: Group::Individuals,
        output: out(Individual),
        ports: &[value("individual", Individual), value("count", Number)],
        fields: &[],
    },
    BlockKind {
        id: "individual_length",
        group: Group::Individuals,
        output: out(Number),
        ports: &[value("individual", Individual)],
        fields: &[],
    },
    // Fitness
    BlockKind {
        id: "fitness_onemax",
        group: Group::Fitness,
        output: out(Number),
        ports: &[value("individual", Individual)],
        fields: &[],
    },
    BlockKind {
        id: "fitness_leading_ones",
        group: Group::Fitness,
        output: out(Number),
        ports: &[value("individual", Individual)],
        fields: &[],
    },
    BlockKind {
        id: "fitness_jump",
        group: Group::Fitness,
        output: out(Number),
        ports: &[value("individual", Individual), value("gap", Number)],
        fields: &[],
    },
    BlockKind {
        id: "diversity_hamming",
        group: Group::Fitness,
        output: out(Number),
        ports: &[value("population", Population)],
        fields: &[],
    },
    BlockKind { id: "evaluation_count", group: Group::Fitness, output: out(Number), ports: &[], fields: &[] },
    // Primitive datatypes
    BlockKind {
        id: "number",
        group: Group::Primitives,
        output: out(Number),
        ports: &[],
        fields: &[FieldSpec { name: "value", kind: FieldKind::Number { default: 0.0, integer: false, min: None } }],
    },
    BlockKind {
        id: "text",
        group: Group::Primitives,
        output: out(Text),
        ports: &[],
        fields: &[FieldSpec { name: "value", kind: FieldKind::Text { default: "" } }],
    },
    BlockKind {
        id: "variable_get",
        group: Group::Primitives,
        output: Some(TypeRef::FromField("type")),
        ports: &[],
        fields: &[ident("name", "x"), choice("type", TYPE_NAMES)],
    },
    BlockKind {
        id: "variable_set",
        group: Group::Primitives,
        output: None,
        ports: &[PortSpec { name: "value", kind: PortKind::Value(TypeRef::FromField("type")) }],
        fields: &[ident("name", "x"), choice("type", TYPE_NAMES)],
    },
    BlockKind {
        id: "arithmetic",
        group: Group::Primitives,
        output: out(Number),
        ports: &[value("left", Number), value("right", Number)],
        fields: &[choice("op", &["add", "subtract", "multiply", "divide", "modulo"])],
    },
    BlockKind {
        id: "random_integer",
        group: Group::Primitives,
        output: out(Number),
        ports: &[value("low", Number), value("high", Number)],
        fields: &[],
    },
    BlockKind {
        id: "text_join",
        group: Group::Primitives,
        output: out(Text),
        ports: &[value("first", Text), value("second", Text)],
        fields: &[],
    },
    BlockKind {
        id: "to_text",
        group: Group::Primitives,
        output: out(Text),
        ports: &[PortSpec { name: "value", kind: PortKind::Value(TypeRef::FromField("type")) }],
        fields: &[choice("type", TYPE_NAMES)],
    },
    BlockKind {
        id: "list_length",
        group: Group::Primitives,
        output: out(Number),
        ports: &[value("list", ListOfNumber)],
        fields: &[],
    },
    BlockKind {
        id: "list_get",
        group: Group::Primitives,
        output: out(Number),
        ports: &[value("list", ListOfNumber), value("index", Number)],
        fields: &[],
    },
    BlockKind {
        id: "list_sum",
        group: Group::Primitives,
        output: out(Number),
        ports: &[value("list", ListOfNumber)],
        fields: &[],
    },
    // Logic
    BlockKind {
        id: "boolean",
        group: Group::Logic,
        output: out(Boolean),
        ports: &[],
        fields: &[choice("value", &["true", "false"])],
    },
    BlockKind {
        id: "compare",
        group: Group::Logic,
        output: out(Boolean),
        ports: &[value("left", Number), value("right", Number)],
        fields: &[choice("op", &["eq", "neq", "lt", "le", "gt", "ge"])],
    },
    BlockKind {
        id: "logic_operation",
        group: Group::Logic,
        output: out(Boolean),
        ports: &[value("left", Boolean), value("right", Boolean)],
        fields: &[choice("op", &["and", "or"])],
    },
    BlockKind {
        id: "logic_not",
        group: Group::Logic,
        output: out(Boolean),
        ports: &[value("value", Boolean)],
        fields: &[],
    },
    BlockKind {
        id: "if",
        group: Group::Logic,
        output: None,
        ports: &[value("condition", Boolean), body("then"), body("else")],
        fields: &[],
    },
    // Loops
    BlockKind {
        id: "repeat",
        group: Group::Loops,
        output: None,
        ports: &[value("times", Number), body("body")],
        fields: &[],
    },
    BlockKind {
        id: "for_range",
        group: Group::Loops,
        output: None,
        ports: &[value("from", Number), value("to", Number), body("body")],
        fields: &[ident("variable", "i")],
    },
    BlockKind {
        id: "evolutionary_loop",
        group: Group::Loops,
        output: None,
        ports: &[value("until", Boolean), body("body")],
        fields: &[int_field("max_generations", 1000.0, 1.0)],
    },
    BlockKind {
        id: "ioh_loop",
        group: Group::Loops,
        output: None,
        ports: &[value("until", Boolean), body("body")],
        fields: &[int_field("max_generations", 1000.0, 1.0)],
    },
    BlockKind { id: "generation", group: Group::Loops, output: out(Number), ports: &[], fields: &[] },
    // Functions
    BlockKind {
        id: "repeat_runs",
        group: Group::Functions,
        output: None,
        ports: &[body("body")],
        fields: &[int_field("runs", 10.0, 1.0)],
    },
    BlockKind { id: "run_id", group: Group::Functions, output: out(Number), ports: &[], fields: &[] },
    // Logging
    BlockKind {
        id: "print",
        group: Group::Logging,
        output: None,
        ports: &[value("text", Text)],
        fields: &[],
    },
    BlockKind {
        id: "plot",
        group: Group::Logging,
        output: None,
        ports: &[value("series", Text), value("x", Number), value("y", Number)],
        fields: &[choice("style", &["line", "scatter", "bar"])],
    },
    BlockKind {
        id: "comment",
        group: Group::Logging,
        output: None,
        ports: &[],
        fields: &[FieldSpec { name: "text", kind: FieldKind::Text { default: "" } }],
    },
    // Multi-threading
    BlockKind {
        id: "parallel_tasks",
        group: Group::Multithreading,
        output: None,
        ports: &[value("tasks", Number), value("workers", Number), body("body")],
        fields: &[choice("mode", &["sequential", "all", "limited"]), ident("result", "results")],
    },
    BlockKind {
        id: "task_return",
        group: Group::Multithreading,
        output: None,
        ports: &[value("value", Number)],
        fields: &[],
    },
    BlockKind { id: "task_index", group: Group::Multithreading, output: out(Number), ports: &[], fields: &[] },
    BlockKind {
        id: "hardware_concurrency",
        group: Group::Multithreading,
        output: out(Number),
        ports: &[],
        fields: &[],
    },
    BlockKind {
        id: "fibonacci",
        group: Group::Multithreading,
        output: out(Number),
        ports: &[value("n", Number)],
        fields: &[],
    },
    // Time management
    BlockKind {
        id: "sleep",
        group: Group::Time,
        output: None,
        ports: &[value("seconds", Number)],
        fields: &[],
    },
    BlockKind { id: "timer", group: Group::Time, output: out(Number), ports: &[], fields: &[] },
];

pub fn kind(id: &str) -> Option<&'static BlockKind> {
    REGISTRY.iter().find(|k| k.id == id)
}
