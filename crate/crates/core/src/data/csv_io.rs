//! CSV ingestion and export.
//!
//! One row per curve: channel values first, then a target column (its position
//! is configurable). An optional header row may carry the channel abscissae
//! (e.g. wavelengths); without numeric abscissae the channels are taken as
//! equispaced. Abscissae are affinely rescaled to `[0, 1]` unless disabled.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::{FunctionalDataset, Task};
use crate::error::{Error, Result};
use crate::grid::SamplingGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum TargetColumn {
    Last,
    Index(usize),
    /// Requires a header row.
    Name(String),
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub target: TargetColumn,
    pub task: Task,
    pub rescale: bool,
    /// Abscissae read from a grid file, overriding the header.
    pub grid_file: Option<PathBuf>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { target: TargetColumn::Last, task: Task::Regression, rescale: true, grid_file: None }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<FunctionalDataset> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);

    let mut header: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();

    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
        if record.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    line: line as usize,
                    msg: format!("expected {w} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        if header.is_none() && values.is_empty() && parsed.iter().any(|v| v.is_none()) {
            header = Some(record.iter().map(str::to_owned).collect());
            continue;
        }
        for (c, (field, v)) in record.iter().zip(parsed).enumerate() {
            match v {
                Some(v) if v.is_finite() => values.push(v),
                Some(v) => {
                    return Err(Error::Data(format!("line {line}, column {}: non-finite value {v}", c + 1)))
                }
                None if field.is_empty() => {
                    return Err(Error::Data(format!("line {line}, column {}: missing value", c + 1)))
                }
                None => {
                    return Err(Error::Parse {
                        line: line as usize,
                        msg: format!("column {}: cannot parse {field:?} as a number", c + 1),
                    })
                }
            }
        }
        lines.push(line);
    }

    let width = width.ok_or_else(|| Error::Data(format!("{}: no data rows", path.display())))?;
    if width < 3 {
        return Err(Error::Data(format!("need at least 2 channels and a target column, found {width} columns")));
    }
    let n = lines.len();
    let target_col = match &opts.target {
        TargetColumn::Last => width - 1,
        TargetColumn::Index(c) if *c < width => *c,
        TargetColumn::Index(c) => {
            return Err(Error::InvalidArgument(format!("target column {c} out of range (0..{width})")))
        }
        TargetColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|f| f == name))
            .ok_or_else(|| Error::InvalidArgument(format!("target column {name:?} not found in header")))?,
    };
    let channels: Vec<usize> = (0..width).filter(|&c| c != target_col).collect();
    let p = channels.len();

    let rows = DMatrix::from_fn(n, p, |i, l| values[i * width + channels[l]]);
    let targets: Vec<f64> = (0..n).map(|i| values[i * width + target_col]).collect();

    let abscissae: Option<Vec<f64>> = match &opts.grid_file {
        Some(g) => Some(read_abscissae(g)?),
        None => header.as_ref().and_then(|h| {
            channels.iter().map(|&c| h[c].parse::<f64>().ok()).collect::<Option<Vec<f64>>>()
        }),
    };
    let grid = match abscissae {
        Some(a) if a.len() != p => {
            return Err(Error::Grid(format!("{} abscissae for {p} channels", a.len())));
        }
        Some(a) if opts.rescale => SamplingGrid::rescaled(&a)?,
        Some(a) => SamplingGrid::new(a)?,
        None => SamplingGrid::uniform(p)?,
    };
    FunctionalDataset::new(grid, rows, targets, opts.task)
}

/// Writes the grid as a header row (abscissae then `target`) followed by one
/// row per curve. Values use the shortest round-trip decimal representation.
pub fn save_dataset(path: impl AsRef<Path>, ds: &FunctionalDataset) -> Result<()> {
    write_dataset(File::create(path)?, ds)
}

pub fn write_dataset<W: Write>(out: W, ds: &FunctionalDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    write_rows(&mut w, ds.grid().points(), ds.rows(), ds.targets())?;
    w.flush()?;
    Ok(())
}

fn write_rows<W: Write>(
    w: &mut csv::Writer<W>,
    abscissae: &[f64],
    rows: &DMatrix<f64>,
    targets: &[f64],
) -> Result<()> {
    let mut head: Vec<String> = abscissae.iter().map(|t| t.to_string()).collect();
    head.push("target".into());
    w.write_record(&head)?;
    for (row, y) in rows.row_iter().zip(targets) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec)?;
    }
    Ok(())
}

/// One abscissa per line; blank lines and `#` comments are skipped.
pub fn load_grid(path: impl AsRef<Path>, rescale: bool) -> Result<SamplingGrid> {
    let a = read_abscissae(path.as_ref())?;
    if rescale {
        SamplingGrid::rescaled(&a)
    } else {
        SamplingGrid::new(a)
    }
}

pub fn save_grid(path: impl AsRef<Path>, grid: &SamplingGrid) -> Result<()> {
    let mut f = File::create(path)?;
    for t in grid.points() {
        writeln!(f, "{t}")?;
    }
    Ok(())
}

fn read_abscissae(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Parse { line: k + 1, msg: format!("cannot parse {s:?} as an abscissa") })?;
        out.push(v);
    }
    Ok(out)
}
