//! Grouped means of a results file.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{fmt_float, NoiseMode, ResultRow, RESULT_HEADER};
use crate::error::{Error, Result};
use crate::optimizer::SolverKind;

/// Mean evaluation count of one `(n, kind, k_d)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub kind: SolverKind,
    pub k_d: usize,
    pub runs: usize,
    pub mean_evaluations: f64,
    pub success_rate: f64,
    /// Percentage change of the mean against Bobyqa at the same `n`, when
    /// the file has Bobyqa runs for that dimension.
    pub delta_vs_bobyqa: Option<f64>,
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        Error::MalformedInput(format!("line {line}: bad {} `{raw}`", RESULT_HEADER[i]))
    })
}

fn parse_mask(raw: &str, line: usize) -> Result<Vec<usize>> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(';')
        .map(|s| match s.trim().parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i),
            _ => Err(Error::MalformedInput(format!("line {line}: bad mask `{raw}`"))),
        })
        .collect()
}

/// Parses a results file written by [`super::write_results_csv`].
pub fn read_results<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader
        .headers()
        .map_err(|e| Error::MalformedInput(e.to_string()))?
        .clone();
    if header.iter().ne(RESULT_HEADER.iter().copied()) {
        return Err(Error::MalformedInput(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::MalformedInput(e.to_string()))?;
        let row = ResultRow {
            problem: rec[0].to_string(),
            n: field(&rec, 1, line)?,
            kind: field(&rec, 2, line)?,
            k_d: field(&rec, 3, line)?,
            mask: parse_mask(&rec[4], line)?,
            seed: field(&rec, 5, line)?,
            noise: field::<NoiseMode>(&rec, 6, line)?,
            evaluations: field(&rec, 7, line)?,
            f_final: field(&rec, 8, line)?,
            x_error: field(&rec, 9, line)?,
            success: field(&rec, 10, line)?,
        };
        if row.mask.len() != row.k_d {
            return Err(Error::MalformedInput(format!("line {line}: mask does not match k_d")));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Means by `(n, kind, k_d)`, sorted by that key.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    #[derive(Default)]
    struct Acc {
        runs: usize,
        evals: f64,
        ok: usize,
    }
    let mut groups: BTreeMap<(usize, SolverKind, usize), Acc> = BTreeMap::new();
    let mut baseline: BTreeMap<usize, Acc> = BTreeMap::new();
    for r in rows {
        for acc in [
            Some(groups.entry((r.n, r.kind, r.k_d)).or_default()),
            (r.kind == SolverKind::Bobyqa).then(|| baseline.entry(r.n).or_default()),
        ]
        .into_iter()
        .flatten()
        {
            acc.runs += 1;
            acc.evals += r.evaluations as f64;
            acc.ok += usize::from(r.success);
        }
    }
    groups
        .into_iter()
        .map(|((n, kind, k_d), acc)| {
            let mean = acc.evals / acc.runs as f64;
            let delta = baseline
                .get(&n)
                .map(|b| 100.0 * (mean / (b.evals / b.runs as f64) - 1.0));
            SummaryRow {
                n,
                kind,
                k_d,
                runs: acc.runs,
                mean_evaluations: mean,
                success_rate: acc.ok as f64 / acc.runs as f64,
                delta_vs_bobyqa: delta,
            }
        })
        .collect()
}

/// Writes the summary CSV; a missing baseline leaves the delta empty.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "kind", "k_d", "runs", "mean_evaluations", "success_rate", "delta_vs_bobyqa_pct"])?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.kind.to_string(),
            r.k_d.to_string(),
            r.runs.to_string(),
            fmt_float(r.mean_evaluations),
            fmt_float(r.success_rate),
            r.delta_vs_bobyqa.map(fmt_float).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
