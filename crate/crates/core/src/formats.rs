//! CSV files for fronts and run histories.
//!
//! Floats are written in their shortest round-trip form, so reading a file
//! back reproduces every value bit for bit.

use std::io::{Read, Write};

use thiserror::Error;

use crate::exact::FrontPoint;
use crate::metaheuristics::{EpochRecord, RunHistory};
use crate::model::{Objectives, RouteSolution};

pub const FRONT_HEADER: [&str; 4] = ["time_h", "cost", "path", "charge"];
pub const HISTORY_HEADER: [&str; 6] = [
    "epoch",
    "best_fitness",
    "best_time_h",
    "best_cost",
    "diversity",
    "exploration_pct",
];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

fn parse_err(line: u64, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

fn from_csv(e: csv::Error) -> FormatError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FormatError::Io(io),
        kind => parse_err(line, format!("{kind:?}")),
    }
}

fn into_io(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        kind => std::io::Error::other(format!("{kind:?}")),
    }
}

pub fn format_path(path: &[usize]) -> String {
    path.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

pub fn format_charge(sol: &RouteSolution) -> String {
    sol.charge.iter().map(|(i, y)| format!("{i}:{y}")).collect::<Vec<_>>().join(";")
}

fn parse_f64(field: &str, name: &str, line: u64) -> Result<f64, FormatError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("{name}: `{field}` is not a number")))
}

fn parse_solution(path: &str, charge: &str, line: u64) -> Result<RouteSolution, FormatError> {
    let nodes = path
        .split('-')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| parse_err(line, format!("path: `{path}` is not a dash-separated node list")))?;
    let mut sol = RouteSolution::transit(nodes);
    for item in charge.split(';').filter(|s| !s.trim().is_empty()) {
        let bad = || parse_err(line, format!("charge: `{item}` is not node:amount"));
        let (node, y) = item.split_once(':').ok_or_else(bad)?;
        let node = node.trim().parse::<usize>().map_err(|_| bad())?;
        let y = parse_f64(y, "charge", line)?;
        if sol.charge.insert(node, y).is_some() {
            return Err(parse_err(line, format!("charge: node {node} listed twice")));
        }
    }
    Ok(sol)
}

fn check_header(found: &csv::StringRecord, want: &[&str]) -> Result<(), FormatError> {
    if found.iter().map(str::trim).eq(want.iter().copied()) {
        Ok(())
    } else {
        Err(parse_err(1, format!("expected header `{}`, found `{}`", want.join(","), found.iter().collect::<Vec<_>>().join(","))))
    }
}

pub fn write_front<W: Write>(out: W, points: &[FrontPoint]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRONT_HEADER).map_err(into_io)?;
    for p in points {
        w.write_record([
            p.objectives.time_h.to_string(),
            p.objectives.cost.to_string(),
            format_path(&p.solution.path),
            format_charge(&p.solution),
        ])
        .map_err(into_io)?;
    }
    w.flush()
}

pub fn front_to_string(points: &[FrontPoint]) -> String {
    let mut buf = Vec::new();
    write_front(&mut buf, points).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_front<R: Read>(input: R) -> Result<Vec<FrontPoint>, FormatError> {
    let mut r = csv::ReaderBuilder::new().flexible(false).from_reader(input);
    check_header(&r.headers().map_err(from_csv)?.clone(), &FRONT_HEADER)?;
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(from_csv)?;
        let line = rec.position().map_or(0, |p| p.line());
        points.push(FrontPoint {
            objectives: Objectives::new(parse_f64(&rec[0], "time_h", line)?, parse_f64(&rec[1], "cost", line)?),
            solution: parse_solution(&rec[2], &rec[3], line)?,
        });
    }
    Ok(points)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_history<W: Write>(out: W, history: &RunHistory) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTORY_HEADER).map_err(into_io)?;
    for e in &history.epochs {
        w.write_record([
            e.epoch.to_string(),
            e.best_fitness.to_string(),
            opt(e.best_time_h),
            opt(e.best_cost),
            e.diversity.to_string(),
            e.exploration_pct.to_string(),
        ])
        .map_err(into_io)?;
    }
    w.flush()
}

pub fn history_to_string(history: &RunHistory) -> String {
    let mut buf = Vec::new();
    write_history(&mut buf, history).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_history<R: Read>(input: R) -> Result<RunHistory, FormatError> {
    let mut r = csv::ReaderBuilder::new().flexible(false).from_reader(input);
    check_header(&r.headers().map_err(from_csv)?.clone(), &HISTORY_HEADER)?;
    let mut epochs = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(from_csv)?;
        let line = rec.position().map_or(0, |p| p.line());
        let optional = |k: usize, name: &str| -> Result<Option<f64>, FormatError> {
            if rec[k].trim().is_empty() {
                Ok(None)
            } else {
                parse_f64(&rec[k], name, line).map(Some)
            }
        };
        let exploration_pct = parse_f64(&rec[5], "exploration_pct", line)?;
        epochs.push(EpochRecord {
            epoch: rec[0]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("epoch: `{}` is not a count", &rec[0])))?,
            best_fitness: parse_f64(&rec[1], "best_fitness", line)?,
            best_time_h: optional(2, "best_time_h")?,
            best_cost: optional(3, "best_cost")?,
            diversity: parse_f64(&rec[4], "diversity", line)?,
            exploration_pct,
            exploitation_pct: 100.0 - exploration_pct,
        });
    }
    Ok(RunHistory { epochs })
}
