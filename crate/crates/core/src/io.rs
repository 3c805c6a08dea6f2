//! Delimited-text input and the number formats used in output files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{BeamError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Tab,
    Comma,
    /// `.csv` → comma, `.tsv`/`.tab` → tab, otherwise tab if the first line has one.
    Auto,
}

impl FromStr for Delimiter {
    type Err = BeamError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tab" | "tsv" | "\\t" => Ok(Delimiter::Tab),
            "comma" | "csv" | "," => Ok(Delimiter::Comma),
            "auto" => Ok(Delimiter::Auto),
            _ => Err(BeamError::config(format!("unknown delimiter '{s}' (expected tab, comma or auto)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderMode {
    Yes,
    No,
    /// A header is present when the first row has a non-numeric field.
    Auto,
}

impl FromStr for HeaderMode {
    type Err = BeamError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "yes" | "true" => Ok(HeaderMode::Yes),
            "no" | "false" => Ok(HeaderMode::No),
            "auto" => Ok(HeaderMode::Auto),
            _ => Err(BeamError::config(format!("unknown header mode '{s}' (expected yes, no or auto)"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReadOptions {
    pub delimiter: Delimiter,
    pub header: HeaderMode,
    /// Rows are variables and columns are observations. A non-numeric first
    /// field on every row is taken as the variable name.
    pub transpose: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            delimiter: Delimiter::Auto,
            header: HeaderMode::Auto,
            transpose: false,
        }
    }
}

/// An observations × variables matrix with optional variable names.
#[derive(Debug, Clone)]
pub struct Table {
    pub values: DMatrix<f64>,
    pub names: Option<Vec<String>>,
}

const MISSING_TOKENS: [&str; 6] = ["", "na", "nan", "null", "?", "."];
const MAX_LISTED_CELLS: usize = 20;

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    MISSING_TOKENS.iter().any(|t| f.eq_ignore_ascii_case(t))
}

fn parse_number(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn sniff_delimiter(path: &Path) -> Result<u8> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(e) if e == "csv" => return Ok(b','),
        Some(e) if e == "tsv" || e == "tab" => return Ok(b'\t'),
        _ => {}
    }
    let file = File::open(path).map_err(|e| BeamError::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|e| BeamError::io(path, e))?;
    Ok(if first.contains('\t') || !first.contains(',') { b'\t' } else { b',' })
}

fn input_error(path: &Path, line: usize, msg: impl Into<String>) -> BeamError {
    BeamError::Input {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a numeric matrix. Missing cells are rejected with a list of their
/// positions (1-based line and column).
pub fn read_table(path: &Path, opts: ReadOptions) -> Result<Table> {
    let delim = match opts.delimiter {
        Delimiter::Tab => b'\t',
        Delimiter::Comma => b',',
        Delimiter::Auto => sniff_delimiter(path)?,
    };
    let file = File::open(path).map_err(|e| BeamError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(BufReader::new(file));

    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            input_error(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        rows.push((line, rec.iter().map(str::to_owned).collect()));
    }
    if rows.is_empty() {
        return Err(input_error(path, 1, "no data rows"));
    }

    let header = match opts.header {
        HeaderMode::Yes => true,
        HeaderMode::No => false,
        HeaderMode::Auto => {
            let first = &rows[0].1;
            let skip = usize::from(opts.transpose);
            first.iter().skip(skip).any(|f| !is_missing(f) && parse_number(f).is_none())
        }
    };
    let header_row = if header { Some(rows.remove(0).1) } else { None };
    if rows.is_empty() {
        return Err(input_error(path, 1, "header row but no data rows"));
    }

    // With `transpose`, a leading label column holds the variable names.
    let label_col = opts.transpose && rows.iter().all(|(_, r)| parse_number(&r[0]).is_none() && !is_missing(&r[0]));
    let offset = usize::from(label_col);

    let width = rows[0].1.len() - offset;
    let mut values = Vec::with_capacity(rows.len() * width);
    let mut missing = Vec::new();
    for (line, row) in &rows {
        for (c, field) in row.iter().enumerate().skip(offset) {
            if is_missing(field) {
                missing.push(format!("line {line} column {}", c + 1));
                values.push(f64::NAN);
                continue;
            }
            match parse_number(field) {
                Some(v) => values.push(v),
                None => {
                    return Err(input_error(
                        path,
                        *line,
                        format!("column {}: '{field}' is not a finite number", c + 1),
                    ))
                }
            }
        }
    }
    if !missing.is_empty() {
        let total = missing.len();
        let mut listed = missing[..total.min(MAX_LISTED_CELLS)].join(", ");
        if total > MAX_LISTED_CELLS {
            listed.push_str(&format!(" and {} more", total - MAX_LISTED_CELLS));
        }
        let first_line = rows.iter().find(|(_, r)| r.iter().skip(offset).any(|f| is_missing(f))).unwrap().0;
        return Err(input_error(path, first_line, format!("{total} missing value(s): {listed}")));
    }

    let by_rows = DMatrix::from_row_slice(rows.len(), width, &values);
    let (values, names) = if opts.transpose {
        let names = if label_col {
            Some(rows.iter().map(|(_, r)| r[0].clone()).collect())
        } else {
            None
        };
        (by_rows.transpose(), names)
    } else {
        let names = header_row.map(|h| h.into_iter().skip(offset).collect::<Vec<_>>());
        if let Some(n) = &names {
            if n.len() != width {
                return Err(input_error(path, 1, format!("{} names for {width} columns", n.len())));
            }
        }
        (by_rows, names)
    };
    Ok(Table { values, names })
}

/// `%.17g`: 17 significant digits, trailing zeros removed. Round-trips exactly.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_owned()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_sci17(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        fmt_g17(x)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

/// Buffered writer that reports failures against the output path.
pub struct OutFile {
    path: PathBuf,
    w: BufWriter<File>,
}

impl OutFile {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| BeamError::io(path, e))?;
        Ok(OutFile {
            path: path.to_path_buf(),
            w: BufWriter::with_capacity(1 << 20, f),
        })
    }

    pub fn line(&mut self, fields: &[&str]) -> Result<()> {
        let joined = fields.join("\t");
        writeln!(self.w, "{joined}").map_err(|e| BeamError::io(&self.path, e))
    }

    pub fn raw(&mut self, text: &str) -> Result<()> {
        self.w.write_all(text.as_bytes()).map_err(|e| BeamError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(|e| BeamError::io(&self.path, e))
    }
}
