//! File formats: observed-data and validation CSV, scenario and analysis
//! configs (TOML or JSON), and CSV exports.
//!
//! Data CSV columns: `y` (optional for the fourth-moment estimator), either
//! a single `xstar` column or replicates `x1..xk`, and optional `z1..zp`.
//! Validation CSV columns: `x_true`, `x_star`.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use simex_core::data::{ObservedData, ValidationFlavor, ValidationPairs};
use simex_core::linalg::Matrix;
use simex_core::simex::SimexResult;
use simex_core::special::normal_quantile;
use simex_core::ErrorSet;

use crate::error::{CliError, CliResult};

fn data_err(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{path}: {msg}"))
}

/// Columns of `header` named `{prefix}1..{prefix}k`, in order.
fn numbered(header: &csv::StringRecord, prefix: &str) -> Result<Vec<usize>, String> {
    let mut found: Vec<(usize, usize)> = Vec::new();
    for (col, name) in header.iter().enumerate() {
        if let Some(rest) = name.strip_prefix(prefix) {
            if let Ok(j) = rest.parse::<usize>() {
                found.push((j, col));
            }
        }
    }
    found.sort();
    for (expect, (j, _)) in found.iter().enumerate() {
        if *j != expect + 1 {
            return Err(format!("columns {prefix}1..{prefix}{} must be contiguous", found.len()));
        }
    }
    Ok(found.into_iter().map(|(_, c)| c).collect())
}

struct Table {
    header: csv::StringRecord,
    rows: Vec<Vec<f64>>,
}

fn read_table(reader: impl Read, path: &str) -> CliResult<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| data_err(path, e))?.clone();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = Vec::with_capacity(rec.len());
        for (value, name) in rec.iter().zip(header.iter()) {
            let v: f64 = value
                .parse()
                .map_err(|_| data_err(path, format!("line {line}: column '{name}': cannot parse '{value}'")))?;
            if !v.is_finite() {
                return Err(data_err(path, format!("line {line}: column '{name}': non-finite value")));
            }
            row.push(v);
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub fn parse_observed(reader: impl Read, path: &str) -> CliResult<ObservedData> {
    let t = read_table(reader, path)?;
    let col = |name: &str| t.header.iter().position(|h| h == name);
    let y_col = col("y");
    let x_cols = match col("xstar").or_else(|| col("x_star")) {
        Some(c) => vec![c],
        None => numbered(&t.header, "x").map_err(|e| data_err(path, e))?,
    };
    if x_cols.is_empty() {
        return Err(data_err(path, "expected an 'xstar' column or replicate columns x1..xk"));
    }
    let z_cols = numbered(&t.header, "z").map_err(|e| data_err(path, e))?;
    let known = 1 + x_cols.len() + z_cols.len() - usize::from(y_col.is_none());
    if known != t.header.len() {
        let extra: Vec<&str> = t
            .header
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != y_col && !x_cols.contains(i) && !z_cols.contains(i))
            .map(|(_, h)| h)
            .collect();
        return Err(data_err(path, format!("unknown columns {extra:?}")));
    }
    let n = t.rows.len();
    let y = t.rows.iter().map(|r| y_col.map_or(0.0, |c| r[c])).collect();
    let pick = |cols: &[usize]| {
        let data = t.rows.iter().flat_map(|r| cols.iter().map(|&c| r[c])).collect();
        Matrix::from_row_major(n, cols.len(), data)
    };
    let x = pick(&x_cols).map_err(|e| data_err(path, e))?;
    let z = pick(&z_cols).map_err(|e| data_err(path, e))?;
    ObservedData::new(y, x, z).map_err(|e| data_err(path, e))
}

pub fn parse_validation(reader: impl Read, path: &str, flavor: ValidationFlavor) -> CliResult<ValidationPairs> {
    let t = read_table(reader, path)?;
    let col = |name: &str| {
        t.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(path, format!("missing column '{name}'")))
    };
    let (xt, xs) = (col("x_true")?, col("x_star")?);
    if t.header.len() != 2 {
        return Err(data_err(path, "validation file takes exactly the columns x_true, x_star"));
    }
    ValidationPairs::new(
        t.rows.iter().map(|r| r[xt]).collect(),
        t.rows.iter().map(|r| r[xs]).collect(),
        flavor,
    )
    .map_err(|e| data_err(path, e))
}

fn open(path: &Path) -> CliResult<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_observed(path: &Path) -> CliResult<ObservedData> {
    parse_observed(open(path)?, &path.display().to_string())
}

pub fn read_validation(path: &Path, flavor: ValidationFlavor) -> CliResult<ValidationPairs> {
    parse_validation(open(path)?, &path.display().to_string(), flavor)
}

/// Parse a TOML document, or JSON when the path ends in `.json`.
pub fn parse_config<T: DeserializeOwned>(text: &str, path: &Path) -> CliResult<T> {
    let json = path.extension().is_some_and(|e| e == "json");
    if json {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text, path)
}

/// Rows `method, coordinate, lambda, estimate, b_count`.
pub fn write_trace(out: impl Write, results: &[(&str, &SimexResult)], names: &[String]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "coordinate", "lambda", "estimate", "b_count"])
        .map_err(csv_io)?;
    for (method, res) in results {
        for (j, name) in names.iter().enumerate() {
            for p in &res.trace.points {
                w.write_record([
                    method.to_string(),
                    name.clone(),
                    p.lambda.to_string(),
                    p.mean[j].to_string(),
                    p.retained().to_string(),
                ])
                .map_err(csv_io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Normal Q-Q coordinates of the error set: rows `rank, probability,
/// normal_quantile, error`, with plotting positions `(i - 0.5) / m`.
pub fn write_qq(out: impl Write, errors: &ErrorSet) -> CliResult<()> {
    let mut sorted = errors.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "probability", "normal_quantile", "error"])
        .map_err(csv_io)?;
    for (i, e) in sorted.iter().enumerate() {
        let p = (i as f64 + 0.5) / m;
        w.write_record([
            (i + 1).to_string(),
            p.to_string(),
            normal_quantile(p).to_string(),
            e.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_columns() {
        let csv = "y,x1,x2,z1\n1,0.5,0.7,2\n0,1.5,1.1,3\n";
        let d = parse_observed(csv.as_bytes(), "t.csv").unwrap();
        assert_eq!((d.n(), d.k(), d.p()), (2, 2, 1));
        assert_eq!(d.x_star()[(1, 1)], 1.1);
        assert_eq!(d.z()[(0, 0)], 2.0);
    }

    #[test]
    fn single_proxy_without_outcome() {
        let d = parse_observed("xstar\n1\n2\n".as_bytes(), "t.csv").unwrap();
        assert_eq!((d.n(), d.k(), d.p()), (2, 1, 0));
        assert_eq!(d.y(), &[0.0, 0.0]);
    }

    #[test]
    fn bad_cell_reports_line() {
        let err = parse_observed("y,xstar\n1,2\n0,abc\n".as_bytes(), "t.csv").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("xstar"), "{msg}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn unknown_and_gapped_columns() {
        assert!(parse_observed("y,xstar,w\n1,2,3\n".as_bytes(), "t").is_err());
        assert!(parse_observed("y,x1,x3\n1,2,3\n".as_bytes(), "t").is_err());
        assert!(parse_observed("y\n1\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn validation_columns() {
        let v = parse_validation("x_true,x_star\n1,1.5\n2,1.8\n".as_bytes(), "v", ValidationFlavor::Internal)
            .unwrap();
        assert_eq!(v.x_star(), &[1.5, 1.8]);
        assert!(parse_validation("x_true\n1\n2\n".as_bytes(), "v", ValidationFlavor::Internal).is_err());
    }
}
