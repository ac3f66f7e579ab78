use std::fs;
use std::path::{Path, PathBuf};

use spectral_descent::grid::GridDomain;
use spectral_descent::{Matrix, SpdMatrix, SymMatrix};

use crate::error::{CliError, CliResult};

/// Relative asymmetry accepted (and symmetrized away) on load.
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// Shortest round-trip decimal; exponent notation outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::file(path, e))
}

/// Dense matrix from a headerless CSV, one row per line. Blank lines and
/// lines starting with `#` are skipped.
pub fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let text = read_text(path)?;
    parse_matrix(&text).map_err(|message| CliError::file(path, message))
}

fn parse_matrix(text: &str) -> Result<Matrix, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("line {line}: bad number `{cell}`"))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(format!(
                    "line {line}: expected {} values, found {}",
                    first.len(),
                    row.len()
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no matrix rows".into());
    }
    Matrix::from_rows(&rows).map_err(|e| e.to_string())
}

pub fn read_symmetric(path: &Path) -> CliResult<SymMatrix> {
    let m = read_matrix(path)?;
    if !m.is_square() {
        return Err(CliError::file(
            path,
            format!("matrix is {}x{}, not square", m.rows(), m.cols()),
        ));
    }
    SymMatrix::new_checked(m, SYMMETRY_RTOL).map_err(|e| CliError::file(path, e))
}

pub fn read_spd(path: &Path) -> CliResult<SpdMatrix> {
    let s = read_symmetric(path)?;
    SpdMatrix::new(s).map_err(|e| CliError::file(path, e))
}

/// A mask file: `.csv` is read as the CSV mask format, anything else as
/// the ascii-grid format.
pub fn read_mask(path: &Path) -> CliResult<GridDomain> {
    let text = read_text(path)?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        GridDomain::parse_csv(&text)
    } else {
        GridDomain::parse_ascii(&text)
    };
    parsed.map_err(|e| CliError::file(path, e))
}

/// Output directory with typed writers for the files a command produces.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::file(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::file(&path, e))
    }

    pub fn write_csv<R, I>(&self, name: &str, header: &[&str], rows: R) -> CliResult<()>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let path = self.path(name);
        let fail = |e: csv::Error| CliError::file(&path, e);
        let mut w = csv::Writer::from_path(&path).map_err(fail)?;
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(fail)?;
        }
        w.flush().map_err(|e| CliError::file(&path, e))
    }
}
