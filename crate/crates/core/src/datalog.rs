//! Per-run performance logs and their CSV and IOHprofiler exports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ea::Individual;
use crate::interp::{Emitted, Event};
use crate::numfmt::format_number;

pub const CSV_HEADER: &str = "run,generation,evaluations,best_fitness";
pub const IOH_SUITE: &str = "BLOCKEA";
const IOH_DAT_HEADER: &str = "\"function evaluation\" \"best-so-far f(x)\"";

#[derive(Debug, Error)]
pub enum DatalogError {
    #[error("malformed event stream for run {run}: {reason}")]
    MalformedStream { run: u32, reason: String },
    #[error("no run produced any records")]
    EmptyLog,
    #[error("csv line {line}: {reason}")]
    BadCsv { line: usize, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub generation: u64,
    pub evaluations: u64,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub run_id: u32,
    /// Evaluations strictly increase and best fitness never decreases.
    pub records: Vec<Record>,
    pub best_individual: Option<Individual>,
    pub best_fitness: Option<f64>,
}

/// Groups tagged events into per-run logs, sorted by run id. Events without
/// a run are ignored; the relative order of different runs does not matter.
pub fn collect(events: &[Emitted]) -> Result<Vec<RunLog>, DatalogError> {
    struct Partial {
        log: RunLog,
        finished: bool,
    }
    let malformed = |run, reason: &str| DatalogError::MalformedStream { run, reason: reason.to_owned() };
    let mut runs: BTreeMap<u32, Partial> = BTreeMap::new();

    for e in events {
        let Some(run) = e.run else { continue };
        if let Event::RunStarted { run_id } = e.event {
            if run_id != run {
                return Err(malformed(run, "run-start tagged with another run"));
            }
            if runs.contains_key(&run) {
                return Err(malformed(run, "run started twice"));
            }
            let log = RunLog { run_id, records: Vec::new(), best_individual: None, best_fitness: None };
            runs.insert(run, Partial { log, finished: false });
            continue;
        }
        let p = runs.get_mut(&run).ok_or_else(|| malformed(run, "event before run-start"))?;
        if p.finished {
            return Err(malformed(run, "event after run-end"));
        }
        match &e.event {
            Event::Record { generation, evaluations, best_fitness } => {
                if let Some(last) = p.log.records.last() {
                    if *evaluations <= last.evaluations {
                        return Err(malformed(run, "evaluations did not increase"));
                    }
                    if *best_fitness < last.best_fitness {
                        return Err(malformed(run, "best fitness decreased"));
                    }
                }
                p.log.records.push(Record {
                    generation: *generation,
                    evaluations: *evaluations,
                    best_fitness: *best_fitness,
                });
            }
            Event::RunFinished { run_id, best_individual, best_fitness } => {
                if *run_id != run {
                    return Err(malformed(run, "run-end tagged with another run"));
                }
                p.log.best_individual = best_individual.clone();
                p.log.best_fitness = *best_fitness;
                p.finished = true;
            }
            _ => {}
        }
    }

    runs.into_values()
        .map(|p| if p.finished { Ok(p.log) } else { Err(malformed(p.log.run_id, "missing run-end")) })
        .collect()
}

/// One row per record, LF line endings, numbers in shortest round-trip form.
pub fn export_csv(logs: &[RunLog]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for log in logs {
        for r in &log.records {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                log.run_id,
                r.generation,
                r.evaluations,
                format_number(r.best_fitness)
            );
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub run: u32,
    pub record: Record,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, DatalogError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(DatalogError::BadCsv { line: 1, reason: "missing header".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let bad = |reason: String| DatalogError::BadCsv { line: i + 1, reason };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(bad(format!("expected 4 cells, got {}", cells.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let run = u32::try_from(int(cells[0])?).map_err(|e| bad(e.to_string()))?;
        let generation = int(cells[1])?;
        let evaluations = int(cells[2])?;
        let best_fitness = cells[3].parse::<f64>().map_err(|e| bad(format!("`{}`: {e}", cells[3])))?;
        rows.push(CsvRow { run, record: Record { generation, evaluations, best_fitness } });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub function_name: String,
    pub dimension: usize,
    pub algorithm: String,
}

/// The two files of an IOHprofiler-style export. Paths are relative to the
/// export directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IohExport {
    pub info_path: String,
    pub info: String,
    pub dat_path: String,
    pub dat: String,
}

impl IohExport {
    pub fn write_to(&self, dir: &Path) -> Result<(), DatalogError> {
        for (rel, content) in [(&self.info_path, &self.info), (&self.dat_path, &self.dat)] {
            let path = dir.join(rel);
            let io = |source| DatalogError::Io { path: path.clone(), source };
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
            std::fs::write(&path, content).map_err(io)?;
        }
        Ok(())
    }
}

/// Info file: a header line, a `%` comment line, then the data file name and
/// one `evaluations:best` summary per run. The data file holds one block
/// per run with a row for each strict improvement and the final record.
pub fn export_ioh(logs: &[RunLog], meta: &ExperimentMeta) -> Result<IohExport, DatalogError> {
    if logs.is_empty() || logs.iter().any(|l| l.records.is_empty()) {
        return Err(DatalogError::EmptyLog);
    }
    let func = &meta.function_name;
    let dat_name = format!("IOHprofiler_{func}_DIM{}.dat", meta.dimension);
    let dat_path = format!("data_{func}/{dat_name}");

    let mut dat = String::new();
    let mut summaries = Vec::with_capacity(logs.len());
    for log in logs {
        dat.push_str(IOH_DAT_HEADER);
        dat.push('\n');
        let mut best: Option<f64> = None;
        let last = log.records.len() - 1;
        for (i, r) in log.records.iter().enumerate() {
            if best.is_none_or(|b| r.best_fitness > b) || i == last {
                let _ = writeln!(dat, "{} {}", r.evaluations, format_number(r.best_fitness));
                best = Some(r.best_fitness);
            }
        }
        let fin = log.records[last];
        summaries.push(format!("{}:{}", fin.evaluations, format_number(fin.best_fitness)));
    }

    let info = format!(
        "suite = '{IOH_SUITE}', funcName = '{func}', DIM = {}, algId = '{}'\n%\n{dat_path}, {}\n",
        meta.dimension,
        meta.algorithm,
        summaries.join(", ")
    );
    Ok(IohExport { info_path: format!("IOHprofiler_{func}.info"), info, dat_path, dat })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(run: u32, event: Event) -> Emitted {
        Emitted { run: Some(run), event }
    }

    fn rec(g: u64, e: u64, b: f64) -> Event {
        Event::Record { generation: g, evaluations: e, best_fitness: b }
    }

    fn finish(run: u32) -> Event {
        Event::RunFinished { run_id: run, best_individual: None, best_fitness: None }
    }

    fn sample() -> Vec<Emitted> {
        vec![
            Emitted { run: None, event: Event::Print { text: "top".into() } },
            ev(1, Event::RunStarted { run_id: 1 }),
            ev(0, Event::RunStarted { run_id: 0 }),
            ev(1, rec(0, 10, 3.0)),
            ev(0, rec(0, 10, 4.0)),
            ev(0, rec(1, 20, 4.0)),
            ev(0, rec(2, 30, 6.5)),
            ev(1, finish(1)),
            ev(0, finish(0)),
        ]
    }

    #[test]
    fn collect_groups_and_sorts_runs() {
        let logs = collect(&sample()).unwrap();
        assert_eq!(logs.len(), 2);
        assert_eq!(logs[0].run_id, 0);
        assert_eq!(logs[0].records.len(), 3);
        assert_eq!(logs[1].records, vec![Record { generation: 0, evaluations: 10, best_fitness: 3.0 }]);
    }

    #[test]
    fn collect_rejects_broken_streams() {
        let missing_end = vec![ev(0, Event::RunStarted { run_id: 0 })];
        assert!(matches!(collect(&missing_end), Err(DatalogError::MalformedStream { run: 0, .. })));

        let no_start = vec![ev(0, rec(0, 1, 1.0))];
        assert!(collect(&no_start).is_err());

        let stalled = vec![ev(0, Event::RunStarted { run_id: 0 }), ev(0, rec(0, 5, 1.0)), ev(0, rec(1, 5, 1.0))];
        assert!(collect(&stalled).is_err());

        let worse = vec![ev(0, Event::RunStarted { run_id: 0 }), ev(0, rec(0, 5, 2.0)), ev(0, rec(1, 6, 1.0))];
        assert!(collect(&worse).is_err());

        let after_end = vec![ev(0, Event::RunStarted { run_id: 0 }), ev(0, finish(0)), ev(0, rec(0, 5, 2.0))];
        assert!(collect(&after_end).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let logs = collect(&sample()).unwrap();
        let csv = export_csv(&logs);
        assert_eq!(csv, "run,generation,evaluations,best_fitness\n0,0,10,4\n0,1,20,4\n0,2,30,6.5\n1,0,10,3\n");
        let rows = parse_csv(&csv).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[2], CsvRow { run: 0, record: Record { generation: 2, evaluations: 30, best_fitness: 6.5 } });
        assert!(parse_csv("nope\n").is_err());
        assert!(parse_csv("run,generation,evaluations,best_fitness\n1,2,x,4\n").is_err());
    }

    #[test]
    fn ioh_layout() {
        let logs = collect(&sample()).unwrap();
        let meta = ExperimentMeta { function_name: "OneMax".into(), dimension: 20, algorithm: "ga".into() };
        let out = export_ioh(&logs, &meta).unwrap();
        assert_eq!(out.info_path, "IOHprofiler_OneMax.info");
        assert_eq!(out.dat_path, "data_OneMax/IOHprofiler_OneMax_DIM20.dat");
        assert_eq!(
            out.info,
            "suite = 'BLOCKEA', funcName = 'OneMax', DIM = 20, algId = 'ga'\n%\n\
             data_OneMax/IOHprofiler_OneMax_DIM20.dat, 30:6.5, 10:3\n"
        );
        let h = IOH_DAT_HEADER;
        assert_eq!(out.dat, format!("{h}\n10 4\n30 6.5\n{h}\n10 3\n"));
    }

    #[test]
    fn ioh_keeps_final_record_without_improvement() {
        let events =
            vec![ev(0, Event::RunStarted { run_id: 0 }), ev(0, rec(0, 5, 2.0)), ev(0, rec(1, 9, 2.0)), ev(0, finish(0))];
        let meta = ExperimentMeta { function_name: "f".into(), dimension: 3, algorithm: "a".into() };
        let out = export_ioh(&collect(&events).unwrap(), &meta).unwrap();
        assert!(out.dat.ends_with("\n5 2\n9 2\n"));
    }

    #[test]
    fn ioh_rejects_empty_runs() {
        let meta = ExperimentMeta { function_name: "f".into(), dimension: 3, algorithm: "a".into() };
        assert!(matches!(export_ioh(&[], &meta), Err(DatalogError::EmptyLog)));
        let logs = collect(&[ev(0, Event::RunStarted { run_id: 0 }), ev(0, finish(0))]).unwrap();
        assert!(matches!(export_ioh(&logs, &meta), Err(DatalogError::EmptyLog)));
    }

    #[test]
    fn ioh_write_to_creates_data_dir() {
        let dir = tempfile::tempdir().unwrap();
        let meta = ExperimentMeta { function_name: "OneMax".into(), dimension: 20, algorithm: "ga".into() };
        let out = export_ioh(&collect(&sample()).unwrap(), &meta).unwrap();
        out.write_to(dir.path()).unwrap();
        let dat = std::fs::read_to_string(dir.path().join(&out.dat_path)).unwrap();
        assert_eq!(dat, out.dat);
        assert!(dir.path().join("IOHprofiler_OneMax.info").is_file());
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Interleaving runs differently yields the same logs.
            #[test]
            fn collect_ignores_run_interleaving(keys in proptest::collection::vec(any::<u32>(), 9)) {
                let base = sample();
                let mut runs: Vec<Vec<Emitted>> = vec![Vec::new(), Vec::new()];
                for e in &base {
                    if let Some(r) = e.run { runs[r as usize].push(e.clone()); }
                }
                // Merge the two per-run streams in an order chosen by `keys`.
                let mut merged = Vec::new();
                let (mut a, mut b) = (runs[0].iter(), runs[1].iter());
                let (mut na, mut nb) = (a.next(), b.next());
                let mut k = keys.iter().cycle();
                while na.is_some() || nb.is_some() {
                    let take_a = match (na, nb) {
                        (Some(_), None) => true,
                        (None, Some(_)) => false,
                        _ => k.next().unwrap() % 2 == 0,
                    };
                    if take_a { merged.push(na.unwrap().clone()); na = a.next(); }
                    else { merged.push(nb.unwrap().clone()); nb = b.next(); }
                }
                prop_assert_eq!(collect(&merged).unwrap(), collect(&base).unwrap());
            }
        }
    }
}
