use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::ea::Individual;
use crate::numfmt::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotStyle {
    Scatter,
    Line,
    Bar,
}

impl PlotStyle {
    pub fn name(self) -> &'static str {
        match self {
            PlotStyle::Scatter => "scatter",
            PlotStyle::Line => "line",
            PlotStyle::Bar => "bar",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "scatter" => Some(PlotStyle::Scatter),
            "line" => Some(PlotStyle::Line),
            "bar" => Some(PlotStyle::Bar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Print { text: String },
    PlotPoint { series: String, x: f64, y: f64, style: PlotStyle },
    Record { generation: u64, evaluations: u64, best_fitness: f64 },
    RunStarted { run_id: u32 },
    RunFinished { run_id: u32, best_individual: Option<Individual>, best_fitness: Option<f64> },
}

/// An event tagged with the run that produced it (`None` outside any
/// repetition).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emitted {
    pub run: Option<u32>,
    #[serde(flatten)]
    pub event: Event,
}

impl Emitted {
    /// One line of the plain-text event protocol. Prints are the text itself;
    /// everything else starts with `#` and uses tab-separated fields.
    pub fn render_line(&self) -> String {
        match &self.event {
            Event::Print { text } => text.clone(),
            Event::PlotPoint { series, x, y, style } => format!(
                "#plot\t{series}\t{}\t{}\t{}",
                format_number(*x),
                format_number(*y),
                style.name()
            ),
            Event::Record { generation, evaluations, best_fitness } => {
                format!("#record\t{generation}\t{evaluations}\t{}", format_number(*best_fitness))
            }
            Event::RunStarted { run_id } => format!("#run-start\t{run_id}"),
            Event::RunFinished { run_id, best_individual, best_fitness } => format!(
                "#run-end\t{run_id}\t{}\t{}",
                best_individual.as_ref().map_or("-".to_owned(), |x| x.to_string()),
                best_fitness.map_or("-".to_owned(), format_number)
            ),
        }
    }
}

/// Renders a stream, one line per event, each terminated by `\n`.
pub fn render_lines(events: &[Emitted]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.render_line());
        out.push('\n');
    }
    out
}

/// Destination for events. Implementations must accept calls from several
/// threads; each call delivers a whole task buffer or a single event.
pub trait EventSink: Sync {
    fn emit(&self, event: Emitted);

    fn emit_all(&self, events: &[Emitted]) {
        for e in events {
            self.emit(e.clone());
        }
    }
}

impl<F: Fn(Emitted) + Sync> EventSink for F {
    fn emit(&self, event: Emitted) {
        self(event)
    }
}

pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&self, _: Emitted) {}
}

#[derive(Default)]
pub struct CollectingSink {
    events: Mutex<Vec<Emitted>>,
}

impl CollectingSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<Emitted> {
        self.events.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn into_events(self) -> Vec<Emitted> {
        self.events.into_inner().unwrap_or_else(|e| e.into_inner())
    }
}

impl EventSink for CollectingSink {
    fn emit(&self, event: Emitted) {
        self.events.lock().unwrap_or_else(|e| e.into_inner()).push(event);
    }

    fn emit_all(&self, events: &[Emitted]) {
        self.events
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .extend_from_slice(events);
    }
}
