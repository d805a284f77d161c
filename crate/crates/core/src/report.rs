//! Metrics recomputed from trace files.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::{EpisodeMetrics, EpisodeRecord, MetricReport};
use crate::navigator::{EpisodeTrace, TraceError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{0}: no trace files found")]
    Empty(PathBuf),
    #[error("{path}: {source}")]
    Trace {
        path: PathBuf,
        #[source]
        source: TraceError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub fn read_trace(path: &Path) -> Result<EpisodeTrace, ReportError> {
    let f = File::open(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    EpisodeTrace::read_jsonl(BufReader::new(f)).map_err(|source| ReportError::Trace {
        path: path.to_path_buf(),
        source,
    })
}

/// Scores a trace from its header and executed motions.
pub fn score_trace(trace: &EpisodeTrace) -> EpisodeMetrics {
    let h = &trace.header;
    EpisodeMetrics::compute(&EpisodeRecord {
        episode: &h.episode,
        path: &trace.path(),
        goal: h.goal,
        reference: &h.reference_path,
        success_radius: h.success_radius,
        shortest: h.shortest_path.unwrap_or(0.0),
    })
}

/// `.jsonl` files in `dir`, or in `dir/traces` when that exists, sorted.
pub fn trace_files(dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let nested = dir.join("traces");
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let entries = fs::read_dir(&dir).map_err(|source| ReportError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(ReportError::Empty(dir));
    }
    Ok(files)
}

/// Per-episode and aggregate metrics over every trace in `dir`.
pub fn report_dir(dir: &Path) -> Result<MetricReport, ReportError> {
    let rows = trace_files(dir)?
        .iter()
        .map(|p| read_trace(p).map(|t| score_trace(&t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricReport::new(rows))
}
