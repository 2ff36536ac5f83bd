//! File formats and the command line.
//!
//! Response and covariate files are CSV: a header row, then one row per
//! subject whose first field is the subject id. Item banks and reports are
//! JSON documents carrying `schema_version` and `kind`.

pub mod cli;
pub mod report;

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::ResponseMatrix;
use crate::error::{IrtError, Result};
use crate::model::{AbilitySpace, ItemParameters};

pub use report::SCHEMA_VERSION;

/// Three-category answers: 0 never, 1 sometimes, 2 frequently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSurvey {
    pub subjects: Vec<String>,
    pub items: Vec<String>,
    /// Row-major, each in `{0, 1, 2}`.
    pub cells: Vec<u8>,
}

impl RawSurvey {
    pub fn new(subjects: Vec<String>, items: Vec<String>, cells: Vec<u8>) -> Result<Self> {
        let m = items.len();
        if cells.len() != subjects.len() * m {
            return Err(IrtError::invalid("survey cells do not match its ids"));
        }
        if let Some(pos) = cells.iter().position(|&v| v > 2) {
            return Err(IrtError::Parse {
                row: pos / m + 1,
                column: pos % m + 1,
                message: format!(
                    "answer {} for subject {} on item {} is not 0, 1 or 2",
                    cells[pos],
                    subjects[pos / m],
                    items[pos % m]
                ),
            });
        }
        Ok(RawSurvey {
            subjects,
            items,
            cells,
        })
    }
}

/// Answers at or above `threshold` become 1, the rest 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dichotomization {
    pub threshold: u8,
}

impl Default for Dichotomization {
    /// Only "frequently" counts as a positive response.
    fn default() -> Self {
        Dichotomization { threshold: 2 }
    }
}

pub fn dichotomize(raw: &RawSurvey, rule: &Dichotomization) -> Result<ResponseMatrix> {
    if !(1..=2).contains(&rule.threshold) {
        return Err(IrtError::config(format!(
            "dichotomization threshold {} must be 1 or 2",
            rule.threshold
        )));
    }
    let cells = raw
        .cells
        .iter()
        .map(|&v| u8::from(v >= rule.threshold))
        .collect();
    ResponseMatrix::new(raw.subjects.clone(), raw.items.clone(), cells)
}

struct Grid<T> {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    cells: Vec<T>,
}

fn read_grid<T, R: std::io::Read>(
    reader: R,
    parse: impl Fn(&str) -> Option<T>,
    expected: &str,
) -> Result<Grid<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(IrtError::Parse {
            row: 0,
            column: 0,
            message: "the header needs an id column and at least one data column".into(),
        });
    }
    let col_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut row_ids = Vec::new();
    let mut cells = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| IrtError::Parse {
            row: r + 1,
            column: 0,
            message: e.to_string(),
        })?;
        row_ids.push(record[0].to_string());
        for (c, field) in record.iter().skip(1).enumerate() {
            let value = parse(field).ok_or_else(|| IrtError::Parse {
                row: r + 1,
                column: c + 1,
                message: format!(
                    "subject {}, item {}: {field:?} is not {expected}",
                    &record[0], col_ids[c]
                ),
            })?;
            cells.push(value);
        }
    }
    Ok(Grid {
        row_ids,
        col_ids,
        cells,
    })
}

/// Reads a 0/1 response file, or a 0/1/2 survey when `rule` is given.
pub fn read_responses(path: &Path, rule: Option<Dichotomization>) -> Result<ResponseMatrix> {
    let file = File::open(path)?;
    match rule {
        None => {
            let g = read_grid(file, |s| match s {
                "0" => Some(0u8),
                "1" => Some(1u8),
                _ => None,
            }, "a binary response 0 or 1")?;
            ResponseMatrix::new(g.row_ids, g.col_ids, g.cells)
        }
        Some(rule) => dichotomize(&read_survey(path)?, &rule),
    }
}

pub fn read_survey(path: &Path) -> Result<RawSurvey> {
    let g = read_grid(
        File::open(path)?,
        |s| s.parse::<u8>().ok().filter(|&v| v <= 2),
        "an answer 0, 1 or 2",
    )?;
    RawSurvey::new(g.row_ids, g.col_ids, g.cells)
}

pub fn write_responses(path: &Path, u: &ResponseMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["subject".to_string()];
    header.extend(u.item_ids().iter().cloned());
    w.write_record(&header)?;
    for (j, id) in u.subject_ids().iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(u.row(j).iter().map(u8::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Covariate table aligned with a response matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    pub names: Vec<String>,
    /// One row per subject, in the response matrix's order.
    pub rows: Vec<Vec<f64>>,
}

impl Covariates {
    /// Prepends a column of ones named `intercept`.
    pub fn with_intercept(mut self) -> Self {
        self.names.insert(0, "intercept".into());
        for row in &mut self.rows {
            row.insert(0, 1.0);
        }
        self
    }
}

/// Reads covariates and orders them by the subjects of `u`.
pub fn read_covariates(path: &Path, u: &ResponseMatrix) -> Result<Covariates> {
    let g = read_grid(
        File::open(path)?,
        |s| s.parse::<f64>().ok().filter(|x| x.is_finite()),
        "a finite number",
    )?;
    let r = g.col_ids.len();
    let mut rows = Vec::with_capacity(u.n_subjects());
    for id in u.subject_ids() {
        let k = g.row_ids.iter().position(|x| x == id).ok_or_else(|| {
            IrtError::invalid(format!("subject {id} has no covariate row"))
        })?;
        rows.push(g.cells[k * r..(k + 1) * r].to_vec());
    }
    Ok(Covariates {
        names: g.col_ids,
        rows,
    })
}

pub fn write_covariates(path: &Path, subjects: &[String], cov: &Covariates) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["subject".to_string()];
    header.extend(cov.names.iter().cloned());
    w.write_record(&header)?;
    for (id, row) in subjects.iter().zip(&cov.rows) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemRecord {
    pub id: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl ItemRecord {
    pub fn new(id: impl Into<String>, p: &ItemParameters) -> Self {
        ItemRecord {
            id: id.into(),
            a: p.a,
            b: p.b,
            c: p.c,
            d: p.d,
        }
    }

    pub fn parameters(&self) -> ItemParameters {
        ItemParameters {
            a: self.a,
            b: self.b,
            c: self.c,
            d: self.d,
        }
    }
}

/// Item curves in the ordinary form, as consumed by anchoring and
/// regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemBank {
    pub schema_version: u32,
    pub kind: String,
    pub space: AbilitySpace,
    pub items: Vec<ItemRecord>,
}

impl ItemBank {
    pub const KIND: &'static str = "item_bank";

    pub fn new(space: AbilitySpace, ids: &[String], items: &[ItemParameters]) -> Self {
        ItemBank {
            schema_version: SCHEMA_VERSION,
            kind: Self::KIND.into(),
            space,
            items: ids
                .iter()
                .zip(items)
                .map(|(id, p)| ItemRecord::new(id.clone(), p))
                .collect(),
        }
    }

    pub fn ids(&self) -> Vec<String> {
        self.items.iter().map(|r| r.id.clone()).collect()
    }

    pub fn parameters(&self) -> Vec<ItemParameters> {
        self.items.iter().map(ItemRecord::parameters).collect()
    }

    pub fn validate(&self) -> Result<()> {
        report::check_header(self.schema_version, &self.kind, Self::KIND)?;
        self.space.validate()?;
        for r in &self.items {
            r.parameters().validate(&self.space)?;
        }
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_item_bank(path: &Path) -> Result<ItemBank> {
    let bank: ItemBank = read_json(path)?;
    bank.validate()?;
    Ok(bank)
}
