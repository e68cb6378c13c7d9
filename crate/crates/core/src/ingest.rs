//! Study tables: CSV loading, Fisher transformation of correlations and
//! construction of [`StudyPair`] values.
//!
//! Two column layouts are recognized from the header:
//!
//! * correlation mode: `label, r_o, r_r, n_o, n_r`
//! * z-statistic mode: `label, z_o, z_r` plus either `c` or `n_o, n_r`
//!
//! In z-statistic mode without `c`, the variance ratio is taken as
//! `(n_r − 3)/(n_o − 3)`, the ratio of Fisher standard errors.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes_factors::StudyPair;
use crate::error::{Error, Result};

/// The bundled twelve-study summary table.
pub const SSRP_CSV: &str = include_str!("../data/ssrp.csv");

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty input")]
    Empty,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("header has no {0}")]
    MissingColumns(String),
    #[error("line {line}: missing value for column `{column}`")]
    MissingField { line: u64, column: String },
    #[error("line {line}, column `{column}`: cannot parse {value:?}")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: invalid {}: {reason}", fields.join(", "))]
    Invalid {
        line: u64,
        fields: Vec<String>,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyMode {
    Correlation,
    Zstat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    #[default]
    Csv,
}

/// One data row as read from a study table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawStudyRecord {
    /// Line number in the source file (header is line 1).
    pub line: u64,
    pub label: String,
    pub mode: StudyMode,
    pub r_o: Option<f64>,
    pub r_r: Option<f64>,
    pub n_o: Option<u64>,
    pub n_r: Option<u64>,
    pub z_o: Option<f64>,
    pub z_r: Option<f64>,
    pub c: Option<f64>,
}

impl RawStudyRecord {
    /// A z-statistic record with an explicit variance ratio.
    pub fn zstat(label: impl Into<String>, z_o: f64, z_r: f64, c: f64) -> Self {
        Self {
            line: 0,
            label: label.into(),
            mode: StudyMode::Zstat,
            r_o: None,
            r_r: None,
            n_o: None,
            n_r: None,
            z_o: Some(z_o),
            z_r: Some(z_r),
            c: Some(c),
        }
    }

    pub fn correlation(label: impl Into<String>, r_o: f64, r_r: f64, n_o: u64, n_r: u64) -> Self {
        Self {
            line: 0,
            label: label.into(),
            mode: StudyMode::Correlation,
            r_o: Some(r_o),
            r_r: Some(r_r),
            n_o: Some(n_o),
            n_r: Some(n_r),
            z_o: None,
            z_r: None,
            c: None,
        }
    }

    fn invalid(&self, fields: &[&str], reason: impl Into<String>) -> IngestError {
        IngestError::Invalid {
            line: self.line,
            fields: fields.iter().map(|f| f.to_string()).collect(),
            reason: reason.into(),
        }
    }

    /// Checks that the populated fields match the mode and lie in range.
    pub fn validate(&self) -> Result<(), IngestError> {
        let need = |name: &str, present: bool| -> Result<(), IngestError> {
            if present {
                Ok(())
            } else {
                Err(self.invalid(&[name], "required in this mode"))
            }
        };
        match self.mode {
            StudyMode::Correlation => {
                need("r_o", self.r_o.is_some())?;
                need("r_r", self.r_r.is_some())?;
                need("n_o", self.n_o.is_some())?;
                need("n_r", self.n_r.is_some())?;
                let stray: Vec<&str> = [("z_o", self.z_o.is_some()), ("z_r", self.z_r.is_some()), ("c", self.c.is_some())]
                    .into_iter()
                    .filter_map(|(n, set)| set.then_some(n))
                    .collect();
                if !stray.is_empty() {
                    return Err(self.invalid(&stray, "not allowed in correlation mode"));
                }
                let bad_r: Vec<&str> = [("r_o", self.r_o), ("r_r", self.r_r)]
                    .into_iter()
                    .filter_map(|(n, r)| r.filter(|r| !(r.abs() < 1.0)).map(|_| n))
                    .collect();
                if !bad_r.is_empty() {
                    return Err(self.invalid(&bad_r, "correlation must satisfy |r| < 1"));
                }
                let bad_n: Vec<&str> = [("n_o", self.n_o), ("n_r", self.n_r)]
                    .into_iter()
                    .filter_map(|(n, v)| v.filter(|&v| v < 4).map(|_| n))
                    .collect();
                if !bad_n.is_empty() {
                    return Err(self.invalid(&bad_n, "sample size must be at least 4"));
                }
                if self.r_o == Some(0.0) {
                    return Err(self.invalid(&["r_o"], "zero original effect leaves d undefined"));
                }
            }
            StudyMode::Zstat => {
                need("z_o", self.z_o.is_some())?;
                need("z_r", self.z_r.is_some())?;
                let stray: Vec<&str> = [("r_o", self.r_o.is_some()), ("r_r", self.r_r.is_some())]
                    .into_iter()
                    .filter_map(|(n, set)| set.then_some(n))
                    .collect();
                if !stray.is_empty() {
                    return Err(self.invalid(&stray, "not allowed in z-statistic mode"));
                }
                match (self.c, self.n_o, self.n_r) {
                    (Some(c), _, _) => {
                        if !(c > 0.0) || !c.is_finite() {
                            return Err(self.invalid(&["c"], "variance ratio must be positive"));
                        }
                    }
                    (None, Some(n_o), Some(n_r)) => {
                        if n_o < 4 || n_r < 4 {
                            return Err(self.invalid(&["n_o", "n_r"], "sample size must be at least 4"));
                        }
                    }
                    _ => return Err(self.invalid(&["c", "n_o", "n_r"], "need c or both sample sizes")),
                }
                if self.z_o == Some(0.0) {
                    return Err(self.invalid(&["z_o"], "z_o = 0 leaves d undefined"));
                }
                if self.z_o.is_some_and(|z| !z.is_finite()) || self.z_r.is_some_and(|z| !z.is_finite()) {
                    return Err(self.invalid(&["z_o", "z_r"], "z-values must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Fisher transformation `θ̂ = atanh(r)` with standard error `1/√(n − 3)`.
pub fn fisher_transform(r: f64, n: u64) -> Result<(f64, f64)> {
    if !(r.abs() < 1.0) {
        return Err(Error::domain(format!("correlation must satisfy |r| < 1, got {r}")));
    }
    if n < 4 {
        return Err(Error::domain(format!("sample size must be at least 4, got {n}")));
    }
    Ok((r.atanh(), 1.0 / ((n - 3) as f64).sqrt()))
}

pub fn build_study(record: &RawStudyRecord) -> Result<StudyPair> {
    record.validate()?;
    let pair = match record.mode {
        StudyMode::Correlation => {
            // validate() guarantees every field below is present.
            let (theta_o, sigma_o) = fisher_transform(record.r_o.unwrap_or_default(), record.n_o.unwrap_or_default())?;
            let (theta_r, sigma_r) = fisher_transform(record.r_r.unwrap_or_default(), record.n_r.unwrap_or_default())?;
            StudyPair::from_estimates(&record.label, theta_o, sigma_o, theta_r, sigma_r)
        }
        StudyMode::Zstat => {
            let c = match (record.c, record.n_o, record.n_r) {
                (Some(c), _, _) => c,
                (None, Some(n_o), Some(n_r)) => (n_r - 3) as f64 / (n_o - 3) as f64,
                _ => f64::NAN,
            };
            StudyPair::from_z(&record.label, record.z_o.unwrap_or_default(), record.z_r.unwrap_or_default(), c)
        }
    };
    pair.map_err(|e| match e {
        Error::Domain(reason) => Error::Ingest(record.invalid(&["z_o", "z_r"], reason)),
        other => other,
    })
}

pub fn load_studies(path: &Path, format: InputFormat) -> Result<Vec<RawStudyRecord>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        InputFormat::Csv => read_studies(file),
    }
}

pub fn load_studies_from_str(text: &str) -> Result<Vec<RawStudyRecord>, IngestError> {
    read_studies(text.as_bytes())
}

/// The bundled table, parsed.
pub fn bundled_ssrp() -> Vec<RawStudyRecord> {
    load_studies_from_str(SSRP_CSV).expect("bundled table is valid")
}

fn read_studies(input: impl Read) -> Result<Vec<RawStudyRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(IngestError::Empty);
    }
    let columns: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mode = if columns.contains_key("r_o") || columns.contains_key("r_r") {
        StudyMode::Correlation
    } else if columns.contains_key("z_o") || columns.contains_key("z_r") {
        StudyMode::Zstat
    } else {
        return Err(IngestError::MissingColumns(
            "r_o/r_r or z_o/z_r columns".to_string(),
        ));
    };
    let required: &[&str] = match mode {
        StudyMode::Correlation => &["label", "r_o", "r_r", "n_o", "n_r"],
        StudyMode::Zstat => &["label", "z_o", "z_r"],
    };
    let missing: Vec<&str> = required.iter().copied().filter(|c| !columns.contains_key(c)).collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingColumns(format!("column(s) {}", missing.join(", "))));
    }
    if mode == StudyMode::Zstat && !columns.contains_key("c") && !(columns.contains_key("n_o") && columns.contains_key("n_r")) {
        return Err(IngestError::MissingColumns("column c or columns n_o, n_r".to_string()));
    }

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |name: &str| -> Option<&str> {
            columns
                .get(name)
                .and_then(|&i| row.get(i))
                .filter(|s| !s.is_empty())
        };
        let real = |name: &str| -> Result<Option<f64>, IngestError> {
            cell(name)
                .map(|v| {
                    v.parse::<f64>().map_err(|_| IngestError::Parse {
                        line,
                        column: name.to_string(),
                        value: v.to_string(),
                    })
                })
                .transpose()
        };
        let count = |name: &str| -> Result<Option<u64>, IngestError> {
            cell(name)
                .map(|v| {
                    v.parse::<u64>().map_err(|_| IngestError::Parse {
                        line,
                        column: name.to_string(),
                        value: v.to_string(),
                    })
                })
                .transpose()
        };
        let label = cell("label").ok_or_else(|| IngestError::MissingField {
            line,
            column: "label".to_string(),
        })?;
        for &name in required {
            if cell(name).is_none() {
                return Err(IngestError::MissingField {
                    line,
                    column: name.to_string(),
                });
            }
        }
        let record = match mode {
            StudyMode::Correlation => RawStudyRecord {
                line,
                label: label.to_string(),
                mode,
                r_o: real("r_o")?,
                r_r: real("r_r")?,
                n_o: count("n_o")?,
                n_r: count("n_r")?,
                z_o: None,
                z_r: None,
                c: None,
            },
            StudyMode::Zstat => RawStudyRecord {
                line,
                label: label.to_string(),
                mode,
                r_o: None,
                r_r: None,
                n_o: count("n_o")?,
                n_r: count("n_r")?,
                z_o: real("z_o")?,
                z_r: real("z_r")?,
                c: real("c")?,
            },
        };
        record.validate()?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(out)
}
