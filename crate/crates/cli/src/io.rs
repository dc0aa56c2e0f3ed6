//! CSV files for boundary curves, point clouds and trajectories.
//!
//! Curve files carry the fixed header
//! `s,i,converged,a0,a1,b0,b1,c00,c01,c10,c11`, optionally preceded by one
//! `# config: {...}` line holding the scan configuration as JSON. Floats
//! are written with 17 significant digits, which round-trips `f64` exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use nonsig::scan::{BoundaryCurve, CurvePoint, Mode, ScanConfig, SetKind};
use nonsig::Correlators;
use thiserror::Error;

pub const CURVE_HEADER: [&str; 11] = ["s", "i", "converged", "a0", "a1", "b0", "b1", "c00", "c01", "c10", "c11"];
const CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: s = {s} does not increase (previous {prev})")]
    Ordering { line: usize, s: f64, prev: f64 },
}

/// `v` with `digits` significant digits in plain decimal notation.
pub fn format_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        let d = digits.saturating_sub(1);
        return format!("{:.d$}", 0.0);
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let mut text = format!("{v:.decimals$}");
    // Rounding can carry into a new leading digit (9.99.. -> 10.0..).
    let sig = text.chars().filter(|c| c.is_ascii_digit()).skip_while(|&c| c == '0').count();
    if sig > digits && decimals > 0 {
        let d = decimals - 1;
        text = format!("{v:.d$}");
    }
    text
}

pub fn f17(v: f64) -> String {
    format_sig(v, 17)
}

pub fn f12(v: f64) -> String {
    format_sig(v, 12)
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let wrap = |source| IoError::File { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(wrap)?;
    }
    fs::File::create(path).and_then(|mut f| f.write_all(contents)).map_err(wrap)
}

/// Rows of already formatted cells under `header`.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn curve_csv(curve: &BoundaryCurve) -> Vec<u8> {
    let config = serde_json::to_string(&curve.config).expect("config serializes");
    let rows = curve.points.iter().map(|p| {
        let mut row = vec![f17(p.s), f17(p.i), p.converged.to_string()];
        row.extend(p.argopt.to_array().iter().map(|&v| f17(v)));
        row
    });
    let mut out = format!("{CONFIG_PREFIX}{config}\n").into_bytes();
    out.extend(csv_bytes(&CURVE_HEADER, rows));
    out
}

pub fn write_curve_csv(path: &Path, curve: &BoundaryCurve) -> Result<(), IoError> {
    write_file(path, &curve_csv(curve))
}

pub fn read_curve_csv(path: &Path) -> Result<BoundaryCurve, IoError> {
    parse_curve_csv(&read_text(path)?)
}

fn parse_f64(cell: &str, line: usize, column: &str) -> Result<f64, IoError> {
    cell.trim()
        .parse::<f64>()
        .map_err(|e| IoError::Parse { line, message: format!("column '{column}': cannot parse '{cell}' ({e})") })
}

fn parse_bool(cell: &str, line: usize) -> Result<bool, IoError> {
    match cell.trim() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => {
            Err(IoError::Parse { line, message: format!("column 'converged': expected true/false, got '{other}'") })
        }
    }
}

pub fn parse_curve_csv(text: &str) -> Result<BoundaryCurve, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let mut config: Option<ScanConfig> = None;
    if let Some((line, l)) = lines.peek().copied() {
        if let Some(json) = l.strip_prefix(CONFIG_PREFIX) {
            config = Some(
                serde_json::from_str(json)
                    .map_err(|e| IoError::Parse { line, message: format!("invalid config comment: {e}") })?,
            );
            lines.next();
        }
    }
    let (line, header) = lines.next().ok_or(IoError::Parse { line: 1, message: "empty file".into() })?;
    let cells: Vec<&str> = header.split(',').map(str::trim).collect();
    if cells != CURVE_HEADER {
        return Err(IoError::Parse { line, message: format!("expected header '{}'", CURVE_HEADER.join(",")) });
    }
    let mut points: Vec<CurvePoint> = Vec::new();
    for (line, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != CURVE_HEADER.len() {
            return Err(IoError::Parse {
                line,
                message: format!("expected {} fields, found {}", CURVE_HEADER.len(), cells.len()),
            });
        }
        let s = parse_f64(cells[0], line, "s")?;
        let i = parse_f64(cells[1], line, "i")?;
        let converged = parse_bool(cells[2], line)?;
        let mut v = [0.0; 8];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = parse_f64(cells[3 + k], line, CURVE_HEADER[3 + k])?;
        }
        if let Some(prev) = points.last() {
            if s.is_nan() || s <= prev.s {
                return Err(IoError::Ordering { line, s, prev: prev.s });
            }
        }
        points.push(CurvePoint { s, i, argopt: Correlators::from_array(v), converged });
    }
    if points.is_empty() {
        return Err(IoError::Parse { line: line + 1, message: "no data rows".into() });
    }
    let config = config.unwrap_or_else(|| inferred_config(&points));
    Ok(BoundaryCurve { points, config })
}

/// Configuration for files without a config comment: grid from the data,
/// set from the structure of the optimizers, mode unknown (reported as min).
fn inferred_config(points: &[CurvePoint]) -> ScanConfig {
    let set = if points.iter().all(|p| p.argopt.has_zero_marginals(1e-9)) {
        SetKind::C
    } else if points.iter().all(|p| p.argopt.is_symmetric(1e-8)) {
        SetKind::Sym
    } else {
        SetKind::Ns
    };
    let n = points.len();
    ScanConfig::new(set, Mode::Min, points[0].s, points[n - 1].s, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> BoundaryCurve {
        let pts = (0..5)
            .map(|k| {
                let s = 2.0 + 0.5 * k as f64;
                CurvePoint {
                    s,
                    i: 0.1 * k as f64 + 1.0 / 3.0,
                    argopt: Correlators::new([0.1, -1e-17], [0.1, -1e-17], [[s / 4.0, 0.3], [0.3, -s / 7.0]]),
                    converged: k % 2 == 0,
                }
            })
            .collect();
        BoundaryCurve { points: pts, config: ScanConfig::new(SetKind::Sym, Mode::Max, 2.0, 4.0, 5).with_seed(3) }
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(f12(0.122556248918), "0.122556248918");
        assert_eq!(f12(4.0), "4.00000000000");
        assert_eq!(f12(0.0), "0.00000000000");
        assert_eq!(format_sig(9.9999999, 3), "10.0");
        assert_eq!(format_sig(-0.000123456, 2), "-0.00012");
        for v in [1.0 / 3.0, std::f64::consts::PI, 1e-17, -2.5e-9, 0.1 + 0.2, 123456.789] {
            assert_eq!(f17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn curve_round_trip() {
        let c = curve();
        assert_eq!(parse_curve_csv(std::str::from_utf8(&curve_csv(&c)).unwrap()).unwrap(), c);
    }

    #[test]
    fn header_only_config_is_inferred() {
        let text = String::from_utf8(curve_csv(&curve())).unwrap();
        let body = text.lines().skip(1).collect::<Vec<_>>().join("\n");
        let parsed = parse_curve_csv(&body).unwrap();
        assert_eq!(parsed.points, curve().points);
        assert_eq!(parsed.config.set, SetKind::Sym);
        assert_eq!(parsed.config.grid_points, 5);
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(parse_curve_csv(""), Err(IoError::Parse { line: 1, .. })));
        assert!(matches!(parse_curve_csv("x,y\n"), Err(IoError::Parse { line: 1, .. })));
        let head = CURVE_HEADER.join(",");
        assert!(matches!(parse_curve_csv(&head), Err(IoError::Parse { line: 2, .. })));
        let bad = format!("{head}\n2,0.1,true,0,0,0,0,0,0,0,0\n2.5,zz,true,0,0,0,0,0,0,0,0\n");
        match parse_curve_csv(&bad) {
            Err(IoError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("'i'"));
            }
            other => panic!("{other:?}"),
        }
        let short = format!("{head}\n2,0.1,true,0,0\n");
        assert!(matches!(parse_curve_csv(&short), Err(IoError::Parse { line: 2, .. })));
        let unordered = format!("{head}\n2.5,0.1,true,0,0,0,0,0,0,0,0\n2.0,0.1,true,0,0,0,0,0,0,0,0\n");
        assert!(matches!(parse_curve_csv(&unordered), Err(IoError::Ordering { line: 3, .. })));
        assert!(matches!(parse_curve_csv("# config: {\n"), Err(IoError::Parse { line: 1, .. })));
    }
}
