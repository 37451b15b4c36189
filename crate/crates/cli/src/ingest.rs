//! CSV input and the general-position pre-check.

use std::io::Read;
use std::path::Path;

use dirquant_core::regression::RegressionProblem;
use dirquant_core::rng::SeededRng;
use dirquant_core::{Direction, PointCloud};

use crate::error::{CliError, Result};

/// Collinearity is scanned exactly up to this many rows and on a sample above it.
pub const EXACT_SCAN_ROWS: usize = 5000;

/// Regressors and responses, row-major, no intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub x: Vec<f64>,
    pub q: usize,
    pub y: Vec<f64>,
    pub k: usize,
}

impl RegressionData {
    pub fn n(&self) -> usize {
        self.y.len() / self.k
    }

    pub fn problem(&self, tau: f64, u: Direction) -> Result<RegressionProblem> {
        Ok(RegressionProblem::new(self.x.clone(), self.q, self.y.clone(), self.k, tau, u)?)
    }

    fn combined(&self) -> PointCloud {
        let d = self.q + self.k;
        let mut rows = Vec::with_capacity(self.n() * d);
        for i in 0..self.n() {
            rows.extend_from_slice(&self.x[i * self.q..(i + 1) * self.q]);
            rows.extend_from_slice(&self.y[i * self.k..(i + 1) * self.k]);
        }
        PointCloud::new(d, rows).expect("finite rows of consistent width")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Location(PointCloud),
    Regression(RegressionData),
}

impl Dataset {
    pub fn n(&self) -> usize {
        match self {
            Dataset::Location(c) => c.n(),
            Dataset::Regression(r) => r.n(),
        }
    }

    pub fn location(&self) -> Result<&PointCloud> {
        match self {
            Dataset::Location(c) => Ok(c),
            Dataset::Regression(_) => {
                Err(CliError::Usage("this command needs a location file, not x/y-tagged columns".into()))
            }
        }
    }

    pub fn regression(&self) -> Result<&RegressionData> {
        match self {
            Dataset::Regression(r) => Ok(r),
            Dataset::Location(_) => Err(CliError::Usage("regress needs columns tagged x1.. and y1..".into())),
        }
    }
}

/// Parsed input with diagnostics gathered on the way.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
    /// Observations violating general position, if any.
    pub degenerate: Option<Vec<usize>>,
}

pub fn ingest_csv(path: &Path, seed: u64) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    ingest_reader(file, seed)
}

enum Layout {
    Location,
    Regression { x_cols: Vec<usize>, y_cols: Vec<usize> },
}

fn tag(h: &str) -> Option<(char, usize)> {
    let mut chars = h.chars();
    let c = chars.next()?;
    if c != 'x' && c != 'y' {
        return None;
    }
    let rest = chars.as_str();
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| (c, i))
}

fn layout(headers: &[String]) -> Result<Layout> {
    let tags: Vec<Option<(char, usize)>> = headers.iter().map(|h| tag(h)).collect();
    let tagged = tags.iter().filter(|t| t.is_some()).count();
    let has_y = tags.iter().any(|t| matches!(t, Some(('y', _))));
    if tagged == 0 || !has_y && tagged < headers.len() {
        return Ok(Layout::Location);
    }
    if tagged < headers.len() {
        return Err(CliError::HeaderMismatch("mixes x/y-tagged and untagged columns".into()));
    }
    if !has_y {
        return Err(CliError::HeaderMismatch("no response columns y1..yk".into()));
    }
    let cols = |which: char| -> Result<Vec<usize>> {
        let mut found: Vec<(usize, usize)> =
            tags.iter().enumerate().filter_map(|(col, t)| t.filter(|t| t.0 == which).map(|t| (t.1, col))).collect();
        found.sort_unstable();
        for (expect, (i, _)) in found.iter().enumerate() {
            if *i != expect + 1 {
                return Err(CliError::HeaderMismatch(format!("{which} columns must be numbered 1..{}", found.len())));
            }
        }
        Ok(found.into_iter().map(|(_, col)| col).collect())
    };
    Ok(Layout::Regression { x_cols: cols('x')?, y_cols: cols('y')? })
}

pub fn ingest_reader<R: Read>(reader: R, seed: u64) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = match rdr.headers() {
        Ok(h) => h.iter().map(str::to_owned).collect(),
        Err(e) => return Err(csv_error(e)),
    };
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::EmptyInput);
    }
    let layout = layout(&headers)?;
    let width = headers.len();
    let mut rows: Vec<f64> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        for cell in rec.iter() {
            let v: f64 =
                cell.parse().map_err(|_| CliError::Parse { line, message: format!("not a number: {cell:?}") })?;
            if !v.is_finite() {
                return Err(CliError::Parse { line, message: format!("non-finite value: {cell:?}") });
            }
            rows.push(v);
        }
    }
    if rows.is_empty() {
        return Err(CliError::EmptyInput);
    }
    let n = rows.len() / width;
    let dataset = match layout {
        Layout::Location => Dataset::Location(PointCloud::new(width, rows)?),
        Layout::Regression { x_cols, y_cols } => {
            let pick = |cols: &[usize]| -> Vec<f64> {
                (0..n).flat_map(|i| cols.iter().map(move |&c| (i, c))).map(|(i, c)| rows[i * width + c]).collect()
            };
            Dataset::Regression(RegressionData { x: pick(&x_cols), q: x_cols.len(), y: pick(&y_cols), k: y_cols.len() })
        }
    };
    let warnings = duplicate_warnings(&dataset);
    let degenerate = general_position_check(&dataset, seed);
    Ok(Ingested { dataset, warnings, degenerate })
}

fn csv_error(e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            CliError::HeaderMismatch(format!("line {line}: {len} fields, header has {expected_len}"))
        }
        _ => CliError::Parse { line, message: e.to_string() },
    }
}

fn duplicates(ds: &Dataset) -> Vec<(usize, usize)> {
    match ds {
        Dataset::Location(c) => c.duplicates(),
        Dataset::Regression(r) => r.combined().duplicates(),
    }
}

fn duplicate_warnings(ds: &Dataset) -> Vec<String> {
    duplicates(ds)
        .into_iter()
        .map(|(i, j)| format!("DegenerateData: multiple identical observations {i} and {j}"))
        .collect()
}

/// Rows scanned for collinear triples: all of them, or a seeded sample of
/// [`EXACT_SCAN_ROWS`].
fn scan_rows(n: usize, seed: u64) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..n).collect();
    if n <= EXACT_SCAN_ROWS {
        return rows;
    }
    let mut rng = SeededRng::new(seed);
    for i in 0..EXACT_SCAN_ROWS {
        let j = i + (rng.next_u64() % (n - i) as u64) as usize;
        rows.swap(i, j);
    }
    rows.truncate(EXACT_SCAN_ROWS);
    rows.sort_unstable();
    rows
}

/// Duplicates anywhere, and for planar location data a collinear triple.
pub fn general_position_check(ds: &Dataset, seed: u64) -> Option<Vec<usize>> {
    if let Some((i, j)) = duplicates(ds).into_iter().next() {
        return Some(vec![i, j]);
    }
    match ds {
        Dataset::Location(c) if c.dim() == 2 => c.general_position_violation_in(&scan_rows(c.n(), seed)),
        _ => None,
    }
}

/// Adds iid uniform noise on `[-amplitude, amplitude]` to every coordinate.
pub fn apply_jitter(ds: &Dataset, amplitude: f64, seed: u64) -> Result<Dataset> {
    if !amplitude.is_finite() || amplitude < 0.0 {
        return Err(CliError::Usage(format!("jitter amplitude must be a finite value >= 0, got {amplitude}")));
    }
    if amplitude == 0.0 {
        return Ok(ds.clone());
    }
    let mut rng = SeededRng::new(seed);
    let out = match ds {
        Dataset::Location(c) => {
            let data = c.as_flat().iter().map(|v| v + rng.uniform_in(-amplitude, amplitude)).collect();
            Dataset::Location(PointCloud::new(c.dim(), data)?)
        }
        Dataset::Regression(r) => {
            let mut r = r.clone();
            for v in r.x.iter_mut().chain(r.y.iter_mut()) {
                *v += rng.uniform_in(-amplitude, amplitude);
            }
            Dataset::Regression(r)
        }
    };
    match general_position_check(&out, seed) {
        Some(indices) => Err(CliError::StillDegenerate { indices }),
        None => Ok(out),
    }
}
