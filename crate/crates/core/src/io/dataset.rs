//! CSV point sets in hyperboloid or Poincaré coordinates.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{from_poincare, to_poincare, HyperPoint, PoincarePoint};

/// Sheet tolerance for hyperboloid input; rows within it are snapped onto the sheet.
pub const INPUT_SHEET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// `d+1` columns, time coordinate last.
    Hyperboloid,
    /// `d` columns inside the unit ball.
    Poincare,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hyperboloid" => Ok(Format::Hyperboloid),
            "poincare" => Ok(Format::Poincare),
            _ => Err(Error::Domain(format!("unknown coordinate format '{s}' (expected hyperboloid or poincare)"))),
        }
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Hyperboloid => "hyperboloid",
            Format::Poincare => "poincare",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<HyperPoint>,
    pub labels: Option<Vec<usize>>,
    pub source_format: Format,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }
}

/// Reads a dataset file; see [`parse_dataset`].
pub fn load_dataset(path: &Path, format: Format, label_column: Option<usize>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path, format, label_column)
}

/// Parses comma-separated rows. Blank lines and `#` lines are skipped, as is a
/// first row with no numeric field. `label_column` is the 0-based index of a
/// column holding nonnegative integer labels; the rest are coordinates.
pub fn parse_dataset(text: &str, path: &Path, format: Format, label_column: Option<usize>) -> Result<Dataset> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let mut seen_row = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if !seen_row && fields.iter().all(|f| f.parse::<f64>().is_err()) {
            seen_row = true;
            continue;
        }
        seen_row = true;
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(err(line, format!("expected {} fields, found {}", width.unwrap(), fields.len())));
        }
        let mut coords = Vec::with_capacity(fields.len());
        for (j, f) in fields.iter().enumerate() {
            if Some(j) == label_column {
                let l = f.parse::<usize>().map_err(|_| err(line, format!("label '{f}' is not a nonnegative integer")))?;
                labels.push(l);
                continue;
            }
            let v = f.parse::<f64>().map_err(|_| err(line, format!("field {} ('{f}') is not a number", j + 1)))?;
            if !v.is_finite() {
                return Err(err(line, format!("field {} is not finite", j + 1)));
            }
            coords.push(v);
        }
        if let Some(c) = label_column {
            if c >= fields.len() {
                return Err(err(line, format!("label column {} out of range for {} fields", c + 1, fields.len())));
            }
        }
        let point = match format {
            Format::Hyperboloid => HyperPoint::with_tolerance(coords, INPUT_SHEET_TOL),
            Format::Poincare => PoincarePoint::new(coords).and_then(|y| from_poincare(&y)),
        }
        .map_err(|e| err(line, e.to_string()))?;
        points.push(point);
    }
    if points.is_empty() {
        return Err(err(text.lines().count().max(1), "no data rows".into()));
    }
    Ok(Dataset {
        points,
        labels: label_column.map(|_| labels),
        source_format: format,
    })
}

/// CSV with `# format` and `# dim` metadata, a header, and an optional trailing `label` column.
pub fn points_csv(points: &[HyperPoint], labels: Option<&[usize]>, format: Format) -> Result<String> {
    let first = points.first().ok_or_else(|| Error::Domain("no points to write".into()))?;
    let d = first.dim();
    if let Some(l) = labels {
        if l.len() != points.len() {
            return Err(Error::Contract("labels and points differ in length".into()));
        }
    }
    let mut out = format!("# format {format}\n# dim {d}\n");
    let mut header: Vec<String> = match format {
        Format::Hyperboloid => (1..=d).map(|j| format!("x{j}")).chain(std::iter::once("t".into())).collect(),
        Format::Poincare => (1..=d).map(|j| format!("y{j}")).collect(),
    };
    if labels.is_some() {
        header.push("label".into());
    }
    let _ = writeln!(out, "{}", header.join(","));
    for (i, p) in points.iter().enumerate() {
        if p.dim() != d {
            return Err(Error::Contract("points have mixed dimensions".into()));
        }
        let coords: Vec<f64> = match format {
            Format::Hyperboloid => p.coords().to_vec(),
            Format::Poincare => to_poincare(p).coords().to_vec(),
        };
        let mut fields: Vec<String> = coords.iter().map(|c| c.to_string()).collect();
        if let Some(l) = labels {
            fields.push(l[i].to_string());
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    Ok(out)
}
