//! Text-format ingestion and persistence.
//!
//! Three line-oriented formats: CPU score tables ("model | score"), runtime
//! matrices (CSV with machine-name and score header rows), and comparison
//! tables (CSV with header `instance,t1,a[,t_hat2,b_hat]`), plus the
//! calibration file ("key = value" lines with gamma_point entries).
//!
//! Parsers reject rather than repair malformed input, and every error
//! carries a 1-based line number. Numbers are written with Rust's shortest
//! round-trip decimal formatting so write-then-parse is the identity.

use crate::runtime_model::{
    CalibrationModel, GammaCurve, GammaPoint, MachineScore, ModelError, RuntimeMatrix,
};
use crate::signtest::{Decision, Direction, SignTestResult};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing required column '{0}' in header")]
    MissingColumn(String),
    #[error("table has a header but no data rows")]
    EmptyTable,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(field: &str, line: usize, what: &str) -> Result<f64, IoError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("{what}: cannot parse '{}' as a number", field.trim())))
}

/// CPU model -> single-thread score lookup. Model names are normalized
/// (case-insensitive, collapsed whitespace) and matched exactly; fuzzy
/// matching risks silently selecting the wrong CPU.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CpuScoreTable {
    entries: BTreeMap<String, f64>,
}

impl CpuScoreTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, cpu_model: &str) -> Option<f64> {
        self.entries.get(&normalize_model(cpu_model)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

fn normalize_model(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Accepts two-column rows "model<TAB or |>score". The first row whose score
/// field is not numeric is treated as a header and skipped; markdown-style
/// separator rows and blank lines are skipped too.
pub fn parse_cpu_scores(text: &str) -> Result<CpuScoreTable, IoError> {
    let mut table = CpuScoreTable::default();
    let mut header_allowed = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (model, score_field) = match line.split_once(['|', '\t']) {
            Some((m, s)) => (m.trim(), s.trim()),
            None => return Err(parse_err(line_no, "expected 'model | score' or tab-separated row")),
        };
        // Markdown table separators like ---|---.
        if !score_field.is_empty() && score_field.chars().all(|c| matches!(c, '-' | ':' | ' ')) {
            continue;
        }
        match score_field.parse::<f64>() {
            Ok(score) => {
                header_allowed = false;
                if !(score > 0.0) {
                    return Err(parse_err(line_no, format!("score must be positive, got {score}")));
                }
                let key = normalize_model(model);
                if table.entries.insert(key, score).is_some() {
                    return Err(parse_err(line_no, format!("duplicate CPU model '{model}'")));
                }
            }
            Err(_) if header_allowed => {
                header_allowed = false; // a single header row is tolerated
            }
            Err(_) => {
                return Err(parse_err(
                    line_no,
                    format!("cannot parse score '{score_field}' as a number"),
                ));
            }
        }
    }
    Ok(table)
}

fn split_csv(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

/// Comma-separated runtime matrix. First header row: a label cell followed
/// by machine model names; second header row: a label cell followed by
/// scores; data rows: process id followed by one runtime per machine.
pub fn parse_runtime_matrix(text: &str) -> Result<RuntimeMatrix, IoError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if lines.len() < 2 {
        return Err(IoError::EmptyTable);
    }
    let names = split_csv(lines[0].1);
    let scores = split_csv(lines[1].1);
    if names.len() < 2 {
        return Err(parse_err(lines[0].0, "header must list at least one machine"));
    }
    if scores.len() != names.len() {
        return Err(parse_err(
            lines[1].0,
            format!(
                "score row has {} cells, machine row has {}",
                scores.len(),
                names.len()
            ),
        ));
    }
    let mut machines = Vec::with_capacity(names.len() - 1);
    for (name, score_field) in names[1..].iter().zip(scores[1..].iter()) {
        let score = parse_f64(score_field, lines[1].0, "machine score")?;
        machines.push(MachineScore::new(*name, score)?);
    }
    let mut processes = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); machines.len()];
    for &(line_no, line) in &lines[2..] {
        let cells = split_csv(line);
        if cells.len() != machines.len() + 1 {
            return Err(parse_err(
                line_no,
                format!("expected {} cells, got {}", machines.len() + 1, cells.len()),
            ));
        }
        processes.push(cells[0].to_string());
        for (mi, cell) in cells[1..].iter().enumerate() {
            let value = parse_f64(cell, line_no, "runtime")?;
            if !(value > 0.0) {
                return Err(parse_err(line_no, format!("runtime must be positive, got {value}")));
            }
            columns[mi].push(value);
        }
    }
    if processes.is_empty() {
        return Err(IoError::EmptyTable);
    }
    Ok(RuntimeMatrix::new(machines, processes, columns)?)
}

pub fn write_runtime_matrix(matrix: &RuntimeMatrix) -> String {
    let mut out = String::new();
    out.push_str("machine");
    for m in &matrix.machines {
        let _ = write!(out, ",{}", m.cpu_model);
    }
    out.push('\n');
    out.push_str("score");
    for m in &matrix.machines {
        let _ = write!(out, ",{}", m.score);
    }
    out.push('\n');
    for (pi, process) in matrix.processes.iter().enumerate() {
        out.push_str(process);
        for mi in 0..matrix.n_machines() {
            let _ = write!(out, ",{}", matrix.runtime(mi, pi));
        }
        out.push('\n');
    }
    out
}

/// One comparison row: published runtime and objective of A, plus the
/// estimated runtime and measured objective of B when available.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub instance_id: String,
    pub t1: f64,
    pub a: f64,
    pub t_hat2: Option<f64>,
    pub b_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub direction: Direction,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
}

/// CSV with header `instance,t1,a` or `instance,t1,a,t_hat2,b_hat`; the
/// optional columns may be left empty per row. Direction and machine scores
/// are not part of the file; they default to minimization and unset.
pub fn parse_comparison(text: &str) -> Result<ComparisonTable, IoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (header_no, header) = lines.next().ok_or(IoError::EmptyTable)?;
    let cols: Vec<String> = split_csv(header).iter().map(|c| c.to_lowercase()).collect();
    for required in ["instance", "t1", "a"] {
        if !cols.contains(&required.to_string()) {
            return Err(IoError::MissingColumn(required.to_string()));
        }
    }
    let expected_short = ["instance", "t1", "a"];
    let expected_long = ["instance", "t1", "a", "t_hat2", "b_hat"];
    let has_estimates = if cols == expected_short {
        false
    } else if cols == expected_long {
        true
    } else {
        return Err(parse_err(
            header_no,
            format!("unexpected header '{header}'; expected 'instance,t1,a[,t_hat2,b_hat]'"),
        ));
    };

    let mut rows = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (line_no, line) in lines {
        let cells = split_csv(line);
        if cells.len() != cols.len() {
            return Err(parse_err(
                line_no,
                format!("expected {} cells, got {}", cols.len(), cells.len()),
            ));
        }
        let instance_id = cells[0].to_string();
        if !seen.insert(instance_id.clone()) {
            return Err(parse_err(line_no, format!("duplicate instance '{instance_id}'")));
        }
        let t1 = parse_f64(cells[1], line_no, "t1")?;
        if !(t1 > 0.0) {
            return Err(parse_err(line_no, format!("t1 must be positive, got {t1}")));
        }
        let a = parse_f64(cells[2], line_no, "a")?;
        let (t_hat2, b_hat) = if has_estimates {
            let t_hat2 = if cells[3].is_empty() {
                None
            } else {
                let v = parse_f64(cells[3], line_no, "t_hat2")?;
                if !(v > 0.0) {
                    return Err(parse_err(line_no, format!("t_hat2 must be positive, got {v}")));
                }
                Some(v)
            };
            let b_hat = if cells[4].is_empty() {
                None
            } else {
                Some(parse_f64(cells[4], line_no, "b_hat")?)
            };
            (t_hat2, b_hat)
        } else {
            (None, None)
        };
        rows.push(ComparisonRow {
            instance_id,
            t1,
            a,
            t_hat2,
            b_hat,
        });
    }
    if rows.is_empty() {
        return Err(IoError::EmptyTable);
    }
    Ok(ComparisonTable {
        rows,
        direction: Direction::Minimize,
        s1: None,
        s2: None,
    })
}

pub fn write_comparison(table: &ComparisonTable) -> String {
    let mut out = String::from("instance,t1,a,t_hat2,b_hat\n");
    for row in &table.rows {
        let _ = write!(out, "{},{},{}", row.instance_id, row.t1, row.a);
        match row.t_hat2 {
            Some(v) => {
                let _ = write!(out, ",{v}");
            }
            None => out.push(','),
        }
        match row.b_hat {
            Some(v) => {
                let _ = writeln!(out, ",{v}");
            }
            None => out.push_str(",\n"),
        }
    }
    out
}

/// Human-readable report: per-instance echo of the inputs and estimates,
/// then the test summary and any applicability warnings. Probabilities use
/// 9 fractional digits, runtimes 6.
pub fn write_report(
    result: &SignTestResult,
    table: &ComparisonTable,
    warnings: &[String],
) -> String {
    let mut out = String::new();
    out.push_str("instance,t1,a,t_hat2,b_hat\n");
    for row in &table.rows {
        let _ = write!(out, "{},{},{}", row.instance_id, row.t1, row.a);
        match row.t_hat2 {
            Some(v) => {
                let _ = write!(out, ",{v:.6}");
            }
            None => out.push(','),
        }
        match row.b_hat {
            Some(v) => {
                let _ = writeln!(out, ",{v}");
            }
            None => out.push_str(",\n"),
        }
    }
    out.push('\n');
    let _ = writeln!(out, "instances_total = {}", result.n_total);
    let _ = writeln!(out, "effective_n = {}", result.n);
    let _ = writeln!(out, "statistic_k = {}", result.k);
    let _ = writeln!(out, "p_value = {:.9}", result.p_value);
    let _ = writeln!(out, "corrected_p_value = {:.9}", result.corrected_p_value);
    let _ = writeln!(out, "p_gamma = {}", result.p_gamma);
    let _ = writeln!(out, "alpha = {}", result.alpha);
    match result.decision {
        Decision::RejectH0 => {
            let _ = writeln!(
                out,
                "decision = reject H0: B performs statistically significantly better than A"
            );
        }
        Decision::FailToReject => {
            let _ = writeln!(
                out,
                "decision = fail to reject H0: not enough evidence that B performs better than A"
            );
        }
    }
    for w in warnings {
        let _ = writeln!(out, "warning = {w}");
    }
    out
}

/// Calibration file: "key = value" lines for the fitted line, one
/// "gamma_point = gamma,p_gamma" line per curve point, then provenance
/// lines.
pub fn write_calibration(model: &CalibrationModel, curve: &GammaCurve) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "slope = {}", model.slope);
    let _ = writeln!(out, "intercept = {}", model.intercept);
    let _ = writeln!(out, "alpha = {}", model.alpha);
    let _ = writeln!(out, "score_min = {}", model.score_min);
    let _ = writeln!(out, "score_max = {}", model.score_max);
    let _ = writeln!(out, "fit_rmse = {}", model.fit_rmse);
    for p in curve.points() {
        let _ = writeln!(out, "gamma_point = {},{}", p.gamma, p.p_gamma);
    }
    for line in &curve.provenance {
        let _ = writeln!(out, "provenance = {line}");
    }
    out
}

pub fn parse_calibration(text: &str) -> Result<(CalibrationModel, GammaCurve), IoError> {
    let mut fields: BTreeMap<&str, f64> = BTreeMap::new();
    let mut points = Vec::new();
    let mut provenance = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "provenance" => provenance.push(value.to_string()),
            "gamma_point" => {
                let (g, p) = value
                    .split_once(',')
                    .ok_or_else(|| parse_err(line_no, "gamma_point needs '<gamma>,<p_gamma>'"))?;
                points.push(GammaPoint {
                    gamma: parse_f64(g, line_no, "gamma")?,
                    p_gamma: parse_f64(p, line_no, "p_gamma")?,
                });
            }
            "slope" | "intercept" | "alpha" | "score_min" | "score_max" | "fit_rmse" => {
                let parsed = parse_f64(value, line_no, key)?;
                if fields.insert(key, parsed).is_some() {
                    return Err(parse_err(line_no, format!("duplicate key '{key}'")));
                }
            }
            other => return Err(parse_err(line_no, format!("unknown key '{other}'"))),
        }
    }
    let get = |key: &str| {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| IoError::MissingColumn(key.to_string()))
    };
    let model = CalibrationModel::from_parts(
        get("slope")?,
        get("intercept")?,
        get("score_min")?,
        get("score_max")?,
        get("fit_rmse")?,
    )?;
    let declared_alpha = get("alpha")?;
    if (declared_alpha - model.alpha).abs() > 1e-9 * declared_alpha.abs().max(1.0) {
        return Err(parse_err(
            0,
            format!(
                "alpha {} is inconsistent with -intercept/slope = {}",
                declared_alpha, model.alpha
            ),
        ));
    }
    let curve = GammaCurve::new(points, provenance)?;
    Ok((model, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime_model::MachineScore;
    use proptest::prelude::*;

    #[test]
    fn cpu_scores_pipe_and_tab() {
        let table = parse_cpu_scores(
            "CPU model name | PassMark score\nIntel Celeron N4100 | 1012\nAMD Ryzen7 1800X\t2185\n",
        )
        .unwrap();
        assert_eq!(table.lookup("Intel Celeron N4100"), Some(1012.0));
        assert_eq!(table.lookup("amd  ryzen7   1800x"), Some(2185.0));
        assert_eq!(table.lookup("missing"), None);
    }

    #[test]
    fn cpu_scores_empty_input() {
        assert!(parse_cpu_scores("").unwrap().is_empty());
    }

    #[test]
    fn cpu_scores_bad_rows() {
        let err = parse_cpu_scores("a | 100\nb | oops\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }), "{err}");
        let err = parse_cpu_scores("a | 100\nA  | 200\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }), "{err}");
        let err = parse_cpu_scores("a | -5\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn runtime_matrix_minimal() {
        let text = "machine,m1,m2\nscore,500,900\nproc_a,10.5,6.25\n";
        let matrix = parse_runtime_matrix(text).unwrap();
        assert_eq!(matrix.n_machines(), 2);
        assert_eq!(matrix.n_processes(), 1);
        assert_eq!(matrix.runtime(1, 0), 6.25);
    }

    #[test]
    fn runtime_matrix_rejects_bad_rows() {
        let err = parse_runtime_matrix("machine,m1,m2\nscore,500,900\np,1.0\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 3, .. }), "{err}");
        let err = parse_runtime_matrix("machine,m1,m2\nscore,500,900\np,1.0,0.0\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn runtime_matrix_round_trip() {
        let machines = vec![
            MachineScore::new("m1", 500.0).unwrap(),
            MachineScore::new("m2", 900.25).unwrap(),
        ];
        let matrix = RuntimeMatrix::new(
            machines,
            vec!["p1".into(), "p2".into()],
            vec![vec![1.5, 2.25], vec![0.875, 1.125]],
        )
        .unwrap();
        let text = write_runtime_matrix(&matrix);
        let back = parse_runtime_matrix(&text).unwrap();
        assert_eq!(back, matrix);
        assert_eq!(write_runtime_matrix(&back), text);
    }

    #[test]
    fn comparison_parse_and_errors() {
        let table = parse_comparison("instance,t1,a\nx,1.5,100\ny,2,200\n").unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[0].t_hat2, None);
        assert!(matches!(
            parse_comparison("instance,t1,a\n"),
            Err(IoError::EmptyTable)
        ));
        assert!(matches!(
            parse_comparison("instance,t1\nx,1\n"),
            Err(IoError::MissingColumn(_))
        ));
        let err = parse_comparison("instance,t1,a\nx,0,5\n").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }));
    }

    #[test]
    fn comparison_optional_columns() {
        let table =
            parse_comparison("instance,t1,a,t_hat2,b_hat\nx,1.5,100,0.9,99\ny,2,200,,\n").unwrap();
        assert_eq!(table.rows[0].b_hat, Some(99.0));
        assert_eq!(table.rows[1].b_hat, None);
    }

    #[test]
    fn comparison_round_trip() {
        let text = "instance,t1,a,t_hat2,b_hat\nx,1.5,100,0.9,99\ny,2,200,,\n";
        let table = parse_comparison(text).unwrap();
        let written = write_comparison(&table);
        assert_eq!(parse_comparison(&written).unwrap(), table);
        assert_eq!(write_comparison(&parse_comparison(&written).unwrap()), written);
    }

    #[test]
    fn calibration_round_trip() {
        let model = CalibrationModel::from_parts(-0.0525, 180.125, 411.0, 2185.0, 1.25).unwrap();
        let curve = GammaCurve::new(
            vec![
                GammaPoint { gamma: 0.58502, p_gamma: 0.01 },
                GammaPoint { gamma: 1.0, p_gamma: 0.5 },
            ],
            vec!["test".into()],
        )
        .unwrap();
        let text = write_calibration(&model, &curve);
        let (m2, c2) = parse_calibration(&text).unwrap();
        assert_eq!(m2, model);
        assert_eq!(c2, curve);
        assert_eq!(write_calibration(&m2, &c2), text);
    }

    #[test]
    fn calibration_rejects_inconsistent_alpha() {
        let text = "slope = -1\nintercept = 3223\nalpha = 999\nscore_min = 411\nscore_max = 2185\nfit_rmse = 0\n";
        assert!(parse_calibration(text).is_err());
    }

    proptest! {
        #[test]
        fn comparison_write_parse_identity(
            t1s in proptest::collection::vec(1e-3f64..1e5, 1..8),
            objectives in proptest::collection::vec(-1e9f64..1e9, 8),
        ) {
            let rows: Vec<ComparisonRow> = t1s
                .iter()
                .enumerate()
                .map(|(i, &t1)| ComparisonRow {
                    instance_id: format!("inst{i}"),
                    t1,
                    a: objectives[i],
                    t_hat2: Some(t1 * 0.75),
                    b_hat: Some(objectives[i] + 1.0),
                })
                .collect();
            let table = ComparisonTable {
                rows,
                direction: Direction::Minimize,
                s1: None,
                s2: None,
            };
            let parsed = parse_comparison(&write_comparison(&table)).unwrap();
            prop_assert_eq!(parsed.rows, table.rows);
        }
    }
}
