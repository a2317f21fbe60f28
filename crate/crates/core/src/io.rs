//! Delimited-text ingestion, artifact writers and readers, and DOT graphs.
//!
//! Every numeric field is written with 12 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::loss_gap::LossGapResult;
use crate::model::{Dataset, JointParams, PosteriorDraw};
use crate::moments::{MomentSet, PredictorMode};
use crate::path::SummaryPath;

pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn ingest_err(file: &Path, message: String) -> Error {
    Error::Ingest {
        file: file.display().to_string(),
        message,
    }
}

/// Reads a header row plus numeric rows. Row numbers in errors are
/// 1-based file lines.
pub fn read_table(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ingest_err(path, e.to_string()))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| ingest_err(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(ingest_err(path, "missing header row".into()));
    }
    let width = names.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| ingest_err(path, format!("row {line}: {e}")))?;
        if record.len() != width {
            return Err(ingest_err(
                path,
                format!("row {line} has {} fields, header has {width}", record.len()),
            ));
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                ingest_err(
                    path,
                    format!("row {line}, column {} (`{}`): non-numeric value `{cell}`", col + 1, names[col]),
                )
            })?;
            values.push(v);
        }
        rows += 1;
    }
    Ok((names, DMatrix::from_row_slice(rows, width, &values)))
}

pub fn ingest(responses_path: &Path, predictors_path: &Path) -> Result<Dataset> {
    let (y_names, y) = read_table(responses_path)?;
    let (x_names, x) = read_table(predictors_path)?;
    if y.nrows() != x.nrows() {
        return Err(ingest_err(
            predictors_path,
            format!(
                "row count mismatch: {} has {} data rows, {} has {}",
                responses_path.display(),
                y.nrows(),
                predictors_path.display(),
                x.nrows()
            ),
        ));
    }
    Dataset::new(y, x, y_names, x_names)
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn open_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| ingest_err(path, e.to_string()))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| ingest_err(path, format!("row {line}: cannot parse `{field}`")))
}

/// Writes a plain numeric matrix with the given column names.
pub fn write_matrix(path: &Path, names: &[String], m: &DMatrix<f64>) -> Result<()> {
    write_rows(
        path,
        names,
        m.row_iter().map(|r| r.iter().map(|v| fmt_num(*v)).collect()),
    )
}

// ---------------------------------------------------------------- tradeoff

pub const TRADEOFF_HEADER: [&str; 6] = ["lambda", "delta_mean", "band_lower", "band_upper", "pi", "support_size"];

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub lambda: f64,
    pub delta_mean: f64,
    pub band_lower: f64,
    pub band_upper: f64,
    pub pi: f64,
    pub support_size: usize,
}

pub fn tradeoff_rows(result: &LossGapResult) -> Vec<TradeoffRow> {
    (0..result.lambdas.len())
        .map(|k| TradeoffRow {
            lambda: result.lambdas[k],
            delta_mean: result.delta_mean[k],
            band_lower: result.delta_quantiles[k].0,
            band_upper: result.delta_quantiles[k].1,
            pi: result.pi[k],
            support_size: result.support_sizes[k],
        })
        .collect()
}

pub fn emit_tradeoff_table(result: &LossGapResult, out_path: &Path) -> Result<()> {
    let header: Vec<String> = TRADEOFF_HEADER.iter().map(|s| s.to_string()).collect();
    write_rows(
        out_path,
        &header,
        tradeoff_rows(result).into_iter().map(|r| {
            vec![
                fmt_num(r.lambda),
                fmt_num(r.delta_mean),
                fmt_num(r.band_lower),
                fmt_num(r.band_upper),
                fmt_num(r.pi),
                r.support_size.to_string(),
            ]
        }),
    )
}

pub fn read_tradeoff_table(path: &Path) -> Result<Vec<TradeoffRow>> {
    let mut reader = open_reader(path)?;
    let mut out = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| ingest_err(path, e.to_string()))?;
        if rec.len() != TRADEOFF_HEADER.len() {
            return Err(ingest_err(path, format!("row {line}: expected 6 fields")));
        }
        out.push(TradeoffRow {
            lambda: parse_field(path, line, &rec[0])?,
            delta_mean: parse_field(path, line, &rec[1])?,
            band_lower: parse_field(path, line, &rec[2])?,
            band_upper: parse_field(path, line, &rec[3])?,
            pi: parse_field(path, line, &rec[4])?,
            support_size: parse_field(path, line, &rec[5])?,
        });
    }
    Ok(out)
}

// -------------------------------------------------------------------- path

pub fn write_path(path: &SummaryPath, out_path: &Path) -> Result<()> {
    let header: Vec<String> = ["grid_index", "lambda", "response", "predictor", "gamma"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, gamma) in path.gammas.iter().enumerate() {
        for i in 0..gamma.ncols() {
            for j in 0..gamma.nrows() {
                rows.push(vec![
                    k.to_string(),
                    fmt_num(path.lambdas[k]),
                    j.to_string(),
                    i.to_string(),
                    fmt_num(gamma[(j, i)]),
                ]);
            }
        }
    }
    write_rows(out_path, &header, rows)
}

pub fn read_path(in_path: &Path) -> Result<SummaryPath> {
    let mut reader = open_reader(in_path)?;
    let mut entries: Vec<(usize, f64, usize, usize, f64)> = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| ingest_err(in_path, e.to_string()))?;
        entries.push((
            parse_field(in_path, line, &rec[0])?,
            parse_field(in_path, line, &rec[1])?,
            parse_field(in_path, line, &rec[2])?,
            parse_field(in_path, line, &rec[3])?,
            parse_field(in_path, line, &rec[4])?,
        ));
    }
    if entries.is_empty() {
        return Err(ingest_err(in_path, "empty path file".into()));
    }
    let g = entries.iter().map(|e| e.0).max().unwrap() + 1;
    let q = entries.iter().map(|e| e.2).max().unwrap() + 1;
    let p = entries.iter().map(|e| e.3).max().unwrap() + 1;
    let mut lambdas = vec![f64::NAN; g];
    let mut gammas = vec![DMatrix::zeros(q, p); g];
    for (k, lambda, j, i, v) in entries {
        lambdas[k] = lambda;
        gammas[k][(j, i)] = v;
    }
    let support_sets = gammas
        .iter()
        .map(|gm| {
            (0..p)
                .flat_map(|i| (0..q).map(move |j| (j, i)))
                .filter(|&(j, i)| gm[(j, i)] != 0.0)
                .collect()
        })
        .collect();
    Ok(SummaryPath {
        lambdas,
        gamma_star: gammas[g - 1].clone(),
        gammas,
        support_sets,
    })
}

// ----------------------------------------------------------------- moments

pub fn write_moments(moments: &MomentSet, out_path: &Path) -> Result<()> {
    let header: Vec<String> = ["matrix", "row", "col", "value"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (name, m) in [("A", &moments.a), ("S", &moments.s), ("M", &moments.m)] {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                rows.push(vec![name.to_string(), r.to_string(), c.to_string(), fmt_num(m[(r, c)])]);
            }
        }
    }
    write_rows(out_path, &header, rows)
}

pub fn read_moments(in_path: &Path, mode: PredictorMode) -> Result<MomentSet> {
    let mut reader = open_reader(in_path)?;
    let mut cells: BTreeMap<String, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for (idx, rec) in reader.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| ingest_err(in_path, e.to_string()))?;
        cells.entry(rec[0].to_string()).or_default().push((
            parse_field(in_path, line, &rec[1])?,
            parse_field(in_path, line, &rec[2])?,
            parse_field(in_path, line, &rec[3])?,
        ));
    }
    let mut take = |name: &str| -> Result<DMatrix<f64>> {
        let v = cells
            .remove(name)
            .ok_or_else(|| ingest_err(in_path, format!("matrix {name} missing")))?;
        let rows = v.iter().map(|c| c.0).max().unwrap() + 1;
        let cols = v.iter().map(|c| c.1).max().unwrap() + 1;
        let mut m = DMatrix::zeros(rows, cols);
        for (r, c, x) in v {
            m[(r, c)] = x;
        }
        Ok(m)
    };
    let (a, s, m) = (take("A")?, take("S")?, take("M")?);
    MomentSet::from_parts(a, s, m, mode)
}

// ------------------------------------------------------------------- draws

fn draw_header(p: usize, q: usize, k: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_string()];
    for i in 0..p {
        for j in 0..q {
            h.push(format!("beta[{i};{j}]"));
        }
    }
    h.extend((0..q).map(|j| format!("b[{j}]")));
    h.extend((0..q).map(|j| format!("psi_tilde[{j}]")));
    for i in 0..p {
        for f in 0..k {
            h.push(format!("b_load[{i};{f}]"));
        }
    }
    h.extend((0..p).map(|i| format!("lambda[{i}]")));
    h.extend((0..p).map(|i| format!("mu_x[{i}]")));
    h.extend((0..q).map(|j| format!("mu_y[{j}]")));
    h.extend((0..p).map(|i| format!("alpha[{i}]")));
    h
}

pub fn write_draws(draws: &[PosteriorDraw], out_path: &Path) -> Result<()> {
    let first = draws
        .first()
        .ok_or_else(|| Error::EmptyDraws("nothing to write".into()))?;
    let (p, q, k) = (first.params.p(), first.params.q(), first.params.b_load.ncols());
    let rows = draws.iter().map(|d| {
        let t = &d.params;
        let mut row = vec![d.iteration.to_string()];
        for i in 0..p {
            for j in 0..q {
                row.push(fmt_num(t.beta[(i, j)]));
            }
        }
        row.extend(t.b.iter().map(|v| fmt_num(*v)));
        row.extend(t.psi_tilde.iter().map(|v| fmt_num(*v)));
        for i in 0..p {
            for f in 0..k {
                row.push(fmt_num(t.b_load[(i, f)]));
            }
        }
        row.extend(t.lambda.iter().map(|v| fmt_num(*v)));
        row.extend(t.mu_x.iter().map(|v| fmt_num(*v)));
        row.extend(t.mu_y.iter().map(|v| fmt_num(*v)));
        row.extend(t.alpha.iter().map(|a| u8::from(*a).to_string()));
        row
    });
    write_rows(out_path, &draw_header(p, q, k), rows)
}

pub fn read_draws(in_path: &Path) -> Result<Vec<PosteriorDraw>> {
    let mut reader = open_reader(in_path)?;
    let header = reader.headers().map_err(|e| ingest_err(in_path, e.to_string()))?.clone();
    let count = |prefix: &str| header.iter().filter(|h| h.starts_with(prefix)).count();
    let (p, q) = (count("alpha["), count("mu_y["));
    if p == 0 || q == 0 {
        return Err(ingest_err(in_path, "header does not describe a draws file".into()));
    }
    let k = count("b_load[") / p;
    if header.iter().collect::<Vec<_>>() != draw_header(p, q, k).iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(ingest_err(in_path, "unexpected draws header layout".into()));
    }
    let mut out = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| ingest_err(in_path, e.to_string()))?;
        let mut fields = rec.iter();
        let mut next = || fields.next().unwrap_or("");
        let iteration = parse_field(in_path, line, next())?;
        let mut num = |n: usize| -> Result<Vec<f64>> {
            (0..n).map(|_| parse_field(in_path, line, next())).collect()
        };
        let beta = DMatrix::from_row_slice(p, q, &num(p * q)?);
        let b = DVector::from_vec(num(q)?);
        let psi_tilde = DVector::from_vec(num(q)?);
        let b_load = DMatrix::from_row_slice(p, k, &num(p * k)?);
        let lambda = DVector::from_vec(num(p)?);
        let mu_x = DVector::from_vec(num(p)?);
        let mu_y = DVector::from_vec(num(q)?);
        let alpha = num(p)?.into_iter().map(|a| a != 0.0).collect();
        out.push(PosteriorDraw {
            iteration,
            params: JointParams {
                beta,
                b,
                psi_tilde,
                b_load,
                lambda,
                mu_x,
                mu_y,
                alpha,
            },
        });
    }
    Ok(out)
}

// ------------------------------------------------------------------ config

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// ignored; a repeated key is an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", idx + 1)))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", idx + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{key}`", idx + 1)));
        }
    }
    Ok(out)
}

// ------------------------------------------------------------------- graph

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT text for a selected support. Response nodes are `y<j>` filled gray,
/// predictor nodes `x<i>` filled white; predictors without an edge are
/// left out.
pub fn graph_dot(support: &[(usize, usize)], response_names: &[String], predictor_names: &[String]) -> String {
    let mut active: Vec<usize> = support.iter().map(|&(_, i)| i).collect();
    active.sort_unstable();
    active.dedup();
    let mut edges = support.to_vec();
    edges.sort_unstable_by_key(|&(j, i)| (i, j));
    edges.dedup();

    let mut s = String::from("graph summary {\n  node [style=filled, fontname=\"Helvetica\"];\n");
    for (j, name) in response_names.iter().enumerate() {
        let _ = writeln!(s, "  y{j} [label=\"{}\", shape=ellipse, fillcolor=gray];", dot_escape(name));
    }
    for &i in &active {
        let _ = writeln!(s, "  x{i} [label=\"{}\", shape=box, fillcolor=white];", dot_escape(&predictor_names[i]));
    }
    for (j, i) in edges {
        let _ = writeln!(s, "  x{i} -- y{j};");
    }
    s.push_str("}\n");
    s
}

pub fn emit_graph(
    support: &[(usize, usize)],
    response_names: &[String],
    predictor_names: &[String],
    out_path: &Path,
) -> Result<()> {
    if let Some(&(j, i)) = support
        .iter()
        .find(|&&(j, i)| j >= response_names.len() || i >= predictor_names.len())
    {
        return Err(Error::InvalidParameter(format!(
            "support entry (response {j}, predictor {i}) is outside the name lists"
        )));
    }
    fs::write(out_path, graph_dot(support, response_names, predictor_names))?;
    Ok(())
}
