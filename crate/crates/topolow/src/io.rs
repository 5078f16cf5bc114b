//! File formats: CSV ingestion of dissimilarity and similarity matrices in
//! long or wide shape, and the writers for every artifact the command-line
//! tools produce. All writers are byte-deterministic for equal inputs.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;

use crate::bench::{MethodSummary, ResultRow, RunStatus};
use crate::matrix::{DissimilarityMatrix, ObservationCell, SimilarityMatrix};
use crate::metrics::{EvaluationReport, ShepardPairs};
use crate::search::SearchSample;
use crate::{Result, TopolowError};

/// Parses one cell token: empty or `NA` is missing, `<x` is left-censored,
/// `>x` is right-censored, anything else must be a finite decimal.
pub fn parse_cell(token: &str) -> std::result::Result<ObservationCell, String> {
    let t = token.trim();
    if t.is_empty() || t == "NA" {
        return Ok(ObservationCell::Missing);
    }
    if let Some(rest) = t.strip_prefix('<') {
        let v = parse_number(rest)?;
        return Ok(ObservationCell::LeftCensored(v));
    }
    if let Some(rest) = t.strip_prefix('>') {
        let v = parse_number(rest)?;
        return Ok(ObservationCell::RightCensored(v));
    }
    Ok(ObservationCell::Exact(parse_number(t)?))
}

fn parse_number(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("'{t}' is not a finite decimal")),
    }
}

/// Renders a cell in the grammar [`parse_cell`] accepts, with exact
/// round-trip precision.
pub fn cell_token(cell: &ObservationCell) -> String {
    match cell {
        ObservationCell::Missing => "NA".into(),
        ObservationCell::Exact(v) => format!("{v}"),
        ObservationCell::LeftCensored(v) => format!("<{v}"),
        ObservationCell::RightCensored(v) => format!(">{v}"),
    }
}

/// Full-precision coordinate format: 17 significant digits.
pub fn format_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Six-significant-digit format in the style of printf `%g`: plain decimal
/// within a moderate magnitude window, exponential outside it, trailing
/// zeros trimmed. NaN renders as `NA`.
pub fn format_g6(x: f64) -> String {
    if x.is_nan() {
        return "NA".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        trim_trailing_zeros(&format!("{x:.decimals$}"))
    } else {
        let formatted = format!("{x:.5e}");
        match formatted.split_once('e') {
            Some((mantissa, exp)) => {
                format!("{}e{exp}", trim_trailing_zeros(mantissa))
            }
            None => formatted,
        }
    }
}

fn trim_trailing_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> TopolowError {
    TopolowError::Parse {
        location: format!("{}:{line}", path.display()),
        message: message.into(),
    }
}

fn read_records(path: &Path) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows.push((line, record.iter().map(|s| s.to_string()).collect()));
    }
    Ok(rows)
}

fn is_long_header(row: &[String]) -> bool {
    row.len() >= 3 && row[0].trim() == "object_i" && row[1].trim() == "object_j"
}

type ParsedCells = (Vec<String>, Vec<(usize, usize, ObservationCell, u64)>);

/// Reads either CSV shape into labels plus directed parsed cells. Long form
/// is recognized by its `object_i,object_j,value` header; anything else is
/// treated as wide.
fn read_cells(path: &Path) -> Result<ParsedCells> {
    let rows = read_records(path)?;
    if rows.is_empty() {
        return Err(parse_error(path, 1, "file is empty"));
    }
    if is_long_header(&rows[0].1) {
        read_long_cells(path, &rows)
    } else {
        read_wide_cells(path, &rows)
    }
}

fn read_long_cells(path: &Path, rows: &[(u64, Vec<String>)]) -> Result<ParsedCells> {
    let mut labels: Vec<String> = Vec::new();
    let index_of = |label: &str, labels: &mut Vec<String>| -> usize {
        match labels.iter().position(|l| l == label) {
            Some(i) => i,
            None => {
                labels.push(label.to_string());
                labels.len() - 1
            }
        }
    };
    let mut cells = Vec::new();
    let mut seen: Vec<(usize, usize)> = Vec::new();
    for (line, row) in rows.iter().skip(1) {
        if row.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if row.len() != 3 {
            return Err(parse_error(
                path,
                *line,
                format!("expected 3 columns (object_i,object_j,value), got {}", row.len()),
            ));
        }
        let a = row[0].trim();
        let b = row[1].trim();
        if a.is_empty() || b.is_empty() {
            return Err(parse_error(path, *line, "empty object label"));
        }
        let i = index_of(a, &mut labels);
        let j = index_of(b, &mut labels);
        if seen.contains(&(i, j)) {
            return Err(parse_error(
                path,
                *line,
                format!("duplicate entry for pair ({a}, {b})"),
            ));
        }
        seen.push((i, j));
        let cell = parse_cell(&row[2]).map_err(|m| parse_error(path, *line, m))?;
        cells.push((i, j, cell, *line));
    }
    Ok((labels, cells))
}

fn read_wide_cells(path: &Path, rows: &[(u64, Vec<String>)]) -> Result<ParsedCells> {
    let (header_line, header) = &rows[0];
    if header.len() < 3 {
        return Err(parse_error(
            path,
            *header_line,
            "wide matrix needs at least 2 labeled columns",
        ));
    }
    let labels: Vec<String> = header[1..].iter().map(|s| s.trim().to_string()).collect();
    let m = labels.len();
    if rows.len() - 1 != m {
        return Err(parse_error(
            path,
            *header_line,
            format!("header names {m} objects but the file has {} data rows", rows.len() - 1),
        ));
    }
    let mut cells = Vec::new();
    for (r, (line, row)) in rows.iter().skip(1).enumerate() {
        if row.len() != m + 1 {
            return Err(parse_error(
                path,
                *line,
                format!("expected {} columns, got {}", m + 1, row.len()),
            ));
        }
        let row_label = row[0].trim();
        if row_label != labels[r] {
            return Err(parse_error(
                path,
                *line,
                format!(
                    "row label '{row_label}' does not match column label '{}' \
                     (rows must mirror the header order)",
                    labels[r]
                ),
            ));
        }
        for (c, token) in row[1..].iter().enumerate() {
            let cell = parse_cell(token).map_err(|msg| parse_error(path, *line, msg))?;
            cells.push((r, c, cell, *line));
        }
    }
    Ok((labels, cells))
}

/// Reads a dissimilarity matrix from long or wide CSV.
pub fn read_dissimilarity(path: &Path) -> Result<DissimilarityMatrix> {
    let (labels, cells) = read_cells(path)?;
    let m = labels.len();
    if m < 2 {
        return Err(parse_error(path, 1, "need at least 2 objects"));
    }
    let mut grid = Array2::from_elem((m, m), ObservationCell::Missing);
    for (i, j, cell, _) in cells {
        grid[(i, j)] = cell;
    }
    DissimilarityMatrix::new(labels, grid)
}

/// Reads a similarity matrix from long or wide CSV. Censored tokens are not
/// meaningful for similarities and are rejected.
pub fn read_similarity(path: &Path) -> Result<SimilarityMatrix> {
    let (labels, cells) = read_cells(path)?;
    let m = labels.len();
    if m < 2 {
        return Err(parse_error(path, 1, "need at least 2 objects"));
    }
    let mut grid: Array2<Option<f64>> = Array2::from_elem((m, m), None);
    for (i, j, cell, line) in cells {
        grid[(i, j)] = match cell {
            ObservationCell::Missing => None,
            ObservationCell::Exact(v) => Some(v),
            ObservationCell::LeftCensored(_) | ObservationCell::RightCensored(_) => {
                return Err(parse_error(
                    path,
                    line,
                    "censored tokens are not supported in similarity input",
                ));
            }
        };
    }
    SimilarityMatrix::new(labels, grid)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path)?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Writes a matrix in wide CSV with the shared cell token grammar.
pub fn write_wide_csv(path: &Path, d: &DissimilarityMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![String::new()];
    header.extend(d.labels().iter().cloned());
    w.write_record(&header)?;
    for (i, label) in d.labels().iter().enumerate() {
        let mut row = vec![label.clone()];
        for j in 0..d.len() {
            row.push(cell_token(&d.cells()[(i, j)]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a complete real matrix in wide CSV (round-trip precision).
pub fn write_wide_dense(path: &Path, labels: &[String], values: &Array2<f64>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        for j in 0..labels.len() {
            row.push(format!("{}", values[(i, j)]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes embedding coordinates: `label,dim_1,…,dim_N` at 17 significant
/// digits.
pub fn write_coordinates(path: &Path, labels: &[String], coords: &Array2<f64>) -> Result<()> {
    let mut w = csv_writer(path)?;
    let n = coords.ncols();
    let mut header = vec!["label".to_string()];
    header.extend((1..=n).map(|k| format!("dim_{k}")));
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        for k in 0..n {
            row.push(format_full(coords[(i, k)]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a coordinates CSV back into labels and an m×N array.
pub fn read_coordinates(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let rows = read_records(path)?;
    if rows.len() < 2 {
        return Err(parse_error(path, 1, "coordinates file needs a header and data rows"));
    }
    let (header_line, header) = &rows[0];
    if header.len() < 2 || header[0].trim() != "label" {
        return Err(parse_error(
            path,
            *header_line,
            "expected header label,dim_1,…",
        ));
    }
    let n = header.len() - 1;
    let m = rows.len() - 1;
    let mut labels = Vec::with_capacity(m);
    let mut coords = Array2::zeros((m, n));
    for (r, (line, row)) in rows.iter().skip(1).enumerate() {
        if row.len() != n + 1 {
            return Err(parse_error(
                path,
                *line,
                format!("expected {} columns, got {}", n + 1, row.len()),
            ));
        }
        labels.push(row[0].trim().to_string());
        for k in 0..n {
            coords[(r, k)] =
                parse_number(&row[k + 1]).map_err(|msg| parse_error(path, *line, msg))?;
        }
    }
    Ok((labels, coords))
}

/// Writes the search history: one row per scored candidate with per-fold
/// validation MAEs (`NA` for skipped folds).
pub fn write_history_csv(path: &Path, samples: &[SearchSample]) -> Result<()> {
    let folds = samples.iter().map(|s| s.fold_maes.len()).max().unwrap_or(0);
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = ["N", "k0", "c0", "alpha", "cv_log_likelihood"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=folds).map(|k| format!("fold_mae_{k}")));
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![
            s.params.dimension.to_string(),
            format!("{}", s.params.spring_constant),
            format!("{}", s.params.repulsion_constant),
            format!("{}", s.params.cooling_rate),
            format!("{}", s.cv_log_likelihood),
        ];
        for k in 0..folds {
            let mae = s.fold_maes.get(k).copied().unwrap_or(f64::NAN);
            row.push(if mae.is_nan() {
                "NA".to_string()
            } else {
                format!("{mae}")
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes Shepard pairs: `true_dissimilarity,embedded_distance,method`.
pub fn write_shepard_csv(path: &Path, pairs: &ShepardPairs, method: &str) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["true_dissimilarity", "embedded_distance", "method"])?;
    for p in &pairs.0 {
        w.write_record([
            format!("{}", p.true_dissimilarity),
            format!("{}", p.embedded_distance),
            method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one evaluation row keyed by method, dataset, and replicate.
pub fn write_report_csv(
    path: &Path,
    report: &EvaluationReport,
    method: &str,
    dataset: &str,
    replicate: usize,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "method",
        "dataset",
        "replicate",
        "normalized_stress",
        "pearson_r",
        "r_squared",
        "deviation_score",
        "n_pairs",
    ])?;
    w.write_record([
        method.to_string(),
        dataset.to_string(),
        replicate.to_string(),
        format_g6(report.normalized_stress),
        format_g6(report.pearson_r),
        format_g6(report.r_squared),
        format_g6(report.deviation_score),
        report.n_pairs.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Writes benchmark rows; failed runs carry `NA` metrics plus their error.
pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "method",
        "m",
        "fraction",
        "replicate",
        "seed",
        "normalized_stress",
        "pearson_r",
        "r_squared",
        "runtime_seconds",
        "status",
        "error",
    ])?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.m.to_string(),
            format!("{}", r.fraction),
            r.replicate.to_string(),
            r.seed.to_string(),
            format_g6(r.normalized_stress),
            format_g6(r.pearson_r),
            format_g6(r.r_squared),
            format_g6(r.runtime_seconds),
            match r.status {
                RunStatus::Ok => "ok".to_string(),
                RunStatus::Failed => "failed".to_string(),
            },
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes per-(method, size, fraction) aggregates.
pub fn write_summary_csv(path: &Path, summaries: &[MethodSummary]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "method",
        "m",
        "fraction",
        "mean_stress",
        "stress_sd",
        "mean_r_squared",
        "runs",
        "failures",
    ])?;
    for s in summaries {
        w.write_record([
            s.method.name().to_string(),
            s.m.to_string(),
            format!("{}", s.fraction),
            format_g6(s.mean_stress),
            format_g6(s.stress_sd),
            format_g6(s.mean_r_squared),
            s.runs.to_string(),
            s.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes any value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let text = serde_json::to_string_pretty(value)?;
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Renders a deliberately minimal Shepard scatter: points, the identity
/// line, and axis labels. Styling belongs to downstream tools.
pub fn write_shepard_svg(path: &Path, pairs: &ShepardPairs) -> Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 60.0;
    const BOTTOM: f64 = 430.0;
    const TOP: f64 = 20.0;
    const RIGHT: f64 = 620.0;

    let max = pairs
        .0
        .iter()
        .flat_map(|p| [p.true_dissimilarity, p.embedded_distance])
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let sx = |v: f64| LEFT + (v / max) * (RIGHT - LEFT);
    let sy = |v: f64| BOTTOM - (v / max) * (BOTTOM - TOP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"640\" height=\"480\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{LEFT}\" y2=\"{TOP}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
         stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
        sx(0.0),
        sy(0.0),
        sx(max),
        sy(max)
    ));
    for p in &pairs.0 {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"black\"/>\n",
            sx(p.true_dissimilarity),
            sy(p.embedded_distance)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"465\" text-anchor=\"middle\" font-size=\"13\" \
         font-family=\"sans-serif\">true dissimilarity</text>\n",
        (LEFT + RIGHT) / 2.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" \
         font-family=\"sans-serif\" transform=\"rotate(-90 18 {:.2})\">embedded distance</text>\n",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    ));
    svg.push_str(&format!(
        "<text x=\"{LEFT}\" y=\"448\" text-anchor=\"middle\" font-size=\"11\" \
         font-family=\"sans-serif\">0</text>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{RIGHT}\" y=\"448\" text-anchor=\"middle\" font-size=\"11\" \
         font-family=\"sans-serif\">{}</text>\n",
        format_g6(max)
    ));
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(svg.as_bytes())?;
    out.write_all(b"</svg>\n")?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::auto_labels;
    use crate::metrics::ShepardPair;
    use tempfile::tempdir;

    fn sample_matrix() -> DissimilarityMatrix {
        let labels = vec!["alpha".into(), "beta".into(), "gamma".into()];
        let mut cells = Array2::from_elem((3, 3), ObservationCell::Missing);
        cells[(0, 1)] = ObservationCell::Exact(1.25);
        cells[(1, 0)] = ObservationCell::Exact(1.75);
        cells[(0, 2)] = ObservationCell::RightCensored(4.0);
        cells[(2, 0)] = ObservationCell::Exact(3.5);
        cells[(1, 2)] = ObservationCell::LeftCensored(0.5);
        DissimilarityMatrix::new(labels, cells).unwrap()
    }

    #[test]
    fn wide_csv_round_trips_every_cell_kind() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("wide.csv");
        let d = sample_matrix();
        write_wide_csv(&path, &d).unwrap();
        let back = read_dissimilarity(&path).unwrap();
        assert_eq!(back.labels(), d.labels());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(back.cells()[(i, j)], d.cells()[(i, j)], "cell ({i},{j})");
            }
        }
    }

    #[test]
    fn long_csv_reads_labels_by_first_appearance() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("long.csv");
        std::fs::write(
            &path,
            "object_i,object_j,value\nb,a, 2.5 \na,c,<1.5\nc,b,NA\nb,c, >4 \n",
        )
        .unwrap();
        let d = read_dissimilarity(&path).unwrap();
        assert_eq!(d.labels(), ["b", "a", "c"]);
        assert_eq!(d.cells()[(0, 1)], ObservationCell::Exact(2.5));
        assert_eq!(d.cells()[(1, 2)], ObservationCell::LeftCensored(1.5));
        assert_eq!(d.cells()[(2, 0)], ObservationCell::Missing);
        assert_eq!(d.cells()[(0, 2)], ObservationCell::RightCensored(4.0));
        assert_eq!(d.cells()[(1, 0)], ObservationCell::Missing);
    }

    #[test]
    fn duplicate_long_rows_are_parse_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("dup.csv");
        std::fs::write(&path, "object_i,object_j,value\na,b,1\na,b,2\n").unwrap();
        let err = read_dissimilarity(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("duplicate"), "{err}");
        assert!(err.to_string().contains(":3"), "{err}");
    }

    #[test]
    fn token_grammar_accepts_and_rejects() {
        assert_eq!(parse_cell("  "), Ok(ObservationCell::Missing));
        assert_eq!(parse_cell("NA"), Ok(ObservationCell::Missing));
        assert_eq!(parse_cell(" 12.5"), Ok(ObservationCell::Exact(12.5)));
        assert_eq!(parse_cell("< 10"), Ok(ObservationCell::LeftCensored(10.0)));
        assert_eq!(parse_cell(" >40 "), Ok(ObservationCell::RightCensored(40.0)));
        assert!(parse_cell("ten").is_err());
        assert!(parse_cell("<").is_err());
        assert!(parse_cell("inf").is_err());
        assert!(parse_cell("nan").is_err());
    }

    #[test]
    fn similarity_input_rejects_censored_tokens() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("sim.csv");
        std::fs::write(&path, "object_i,object_j,value\na,b,<5\n").unwrap();
        let err = read_similarity(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("censored"), "{err}");
    }

    #[test]
    fn wide_rows_must_mirror_header_order() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, ",a,b\nb,0,1\na,1,0\n").unwrap();
        let err = read_dissimilarity(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("row label"), "{err}");
    }

    #[test]
    fn coordinates_round_trip_at_full_precision() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("coords.csv");
        let labels = auto_labels(3);
        let coords = Array2::from_shape_vec(
            (3, 2),
            vec![
                0.1,
                -1.0 / 3.0,
                std::f64::consts::PI,
                1e-17,
                -2.5e8,
                0.0,
            ],
        )
        .unwrap();
        write_coordinates(&path, &labels, &coords).unwrap();
        let (back_labels, back) = read_coordinates(&path).unwrap();
        assert_eq!(back_labels, labels);
        for i in 0..3 {
            for k in 0..2 {
                assert_eq!(back[(i, k)].to_bits(), coords[(i, k)].to_bits());
            }
        }
    }

    #[test]
    fn g6_formatting_matches_printf_style() {
        assert_eq!(format_g6(0.0), "0");
        assert_eq!(format_g6(1.5), "1.5");
        assert_eq!(format_g6(100.0), "100");
        assert_eq!(format_g6(123456.0), "123456");
        assert_eq!(format_g6(1234567.0), "1.23457e6");
        assert_eq!(format_g6(0.000123456), "0.000123456");
        assert_eq!(format_g6(0.0000123), "1.23e-5");
        assert_eq!(format_g6(-2.5), "-2.5");
        assert_eq!(format_g6(f64::NAN), "NA");
        assert_eq!(format_g6(0.190379), "0.190379");
    }

    #[test]
    fn shepard_svg_contains_points_and_identity_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("shepard.svg");
        let pairs = ShepardPairs(vec![
            ShepardPair {
                true_dissimilarity: 1.0,
                embedded_distance: 1.1,
            },
            ShepardPair {
                true_dissimilarity: 2.0,
                embedded_distance: 1.9,
            },
        ]);
        write_shepard_svg(&path, &pairs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.ends_with("</svg>\n"));
        assert_eq!(text.matches("<circle").count(), 2);
        assert!(text.contains("stroke-dasharray"));
        assert!(text.contains("true dissimilarity"));
        assert!(text.contains("embedded distance"));
    }

    #[test]
    fn history_csv_marks_skipped_folds() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("history.csv");
        let sample = SearchSample {
            params: crate::engine::Hyperparameters {
                dimension: 3,
                spring_constant: 1.5,
                repulsion_constant: 0.01,
                cooling_rate: 0.05,
            },
            cv_log_likelihood: -12.5,
            fold_maes: vec![0.5, f64::NAN],
            fold_counts: vec![10, 0],
        };
        write_history_csv(&path, &[sample]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "N,k0,c0,alpha,cv_log_likelihood,fold_mae_1,fold_mae_2"
        );
        assert_eq!(lines.next().unwrap(), "3,1.5,0.01,0.05,-12.5,0.5,NA");
    }
}
