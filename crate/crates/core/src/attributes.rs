//! Node outcomes, missingness and covariates.

use std::path::{Path, PathBuf};

use crate::error::{AlaamError, Result};
use crate::graph::IndexBase;

/// Token marking an unobserved outcome in attribute tables.
pub const MISSING_TOKEN: &str = "NA";

/// Named real-valued node covariates, kept in column order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Covariates {
    columns: Vec<(String, Vec<f64>)>,
}

impl Covariates {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a column. Values must be finite.
    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(AlaamError::Dimension(format!(
                "covariate {name:?} has a non-finite value at node {pos}"
            )));
        }
        match self.columns.iter_mut().find(|(k, _)| *k == name) {
            Some(slot) => slot.1 = values,
            None => self.columns.push((name, values)),
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(k, _)| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Centers and scales a column to unit sample standard deviation.
    pub fn standardize(&mut self, name: &str) -> Result<()> {
        let col = self
            .columns
            .iter_mut()
            .find(|(k, _)| k == name)
            .ok_or_else(|| AlaamError::Config(format!("no covariate named {name:?}")))?;
        let v = &mut col.1;
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let sd = var.sqrt();
        if sd.is_nan() || sd <= 0.0 {
            return Err(AlaamError::Numerical(format!(
                "covariate {name:?} is constant and cannot be standardised"
            )));
        }
        v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
        Ok(())
    }
}

/// Binary outcome vector with its missing-data indicator.
///
/// Unobserved entries carry the placeholder `y_i = 0` and `missing[i] = true`;
/// samplers overwrite the placeholder with imputations in their own copies.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeData {
    pub y: Vec<u8>,
    pub missing: Vec<bool>,
    pub covariates: Covariates,
}

impl AttributeData {
    /// Fully observed outcomes without covariates.
    pub fn observed(y: Vec<u8>) -> Self {
        let n = y.len();
        Self::new(y, vec![false; n], Covariates::new()).expect("consistent lengths")
    }

    pub fn new(y: Vec<u8>, missing: Vec<bool>, covariates: Covariates) -> Result<Self> {
        if y.len() != missing.len() {
            return Err(AlaamError::Dimension(format!(
                "outcome length {} differs from missing-mask length {}",
                y.len(),
                missing.len()
            )));
        }
        if let Some(i) = y.iter().position(|&v| v > 1) {
            return Err(AlaamError::Dimension(format!(
                "outcome at node {i} is not binary"
            )));
        }
        for (name, col) in &covariates.columns {
            if col.len() != y.len() {
                return Err(AlaamError::Dimension(format!(
                    "covariate {name:?} has {} values, expected {}",
                    col.len(),
                    y.len()
                )));
            }
        }
        let mut y = y;
        for (v, &m) in y.iter_mut().zip(&missing) {
            if m {
                *v = 0;
            }
        }
        Ok(Self {
            y,
            missing,
            covariates,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn observed_count(&self) -> usize {
        self.len() - self.missing_count()
    }

    pub fn missing_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.missing[i]).collect()
    }

    /// Checks that the table matches a graph with `n` nodes.
    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(AlaamError::Dimension(format!(
                "attribute table has {} rows but the graph has {n} nodes",
                self.len()
            )));
        }
        Ok(())
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.len();
        let mut y = vec![0; n];
        let mut missing = vec![false; n];
        let mut covariates = Covariates::new();
        for i in 0..n {
            y[perm[i]] = self.y[i];
            missing[perm[i]] = self.missing[i];
        }
        for (name, col) in &self.covariates.columns {
            let mut c = vec![0.0; n];
            for i in 0..n {
                c[perm[i]] = col[i];
            }
            covariates.columns.push((name.clone(), c));
        }
        Self {
            y,
            missing,
            covariates,
        }
    }
}

/// Reads a comma-delimited attribute table with a header row, one row per
/// node in index order.
///
/// The outcome column is `outcome` when given, otherwise the first column.
/// Outcome cells are `0`, `1` or `NA`; every other column is a numeric
/// covariate stored under its header name.
pub fn load_attributes(
    path: impl AsRef<Path>,
    n: usize,
    outcome: Option<&str>,
) -> Result<AttributeData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_attributes(&text, n, outcome, path)
}

/// Same as [`load_attributes`] but from an in-memory string.
pub fn parse_attribute_table(text: &str, n: usize, outcome: Option<&str>) -> Result<AttributeData> {
    parse_attributes(text, n, outcome, Path::new("<input>"))
}

fn parse_attributes(
    text: &str,
    n: usize,
    outcome: Option<&str>,
    path: &Path,
) -> Result<AttributeData> {
    let parse_err = |line: usize, message: String| AlaamError::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(parse_err(1, "missing header row".into()));
    }
    let outcome_col = match outcome {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("no outcome column named {name:?}")))?,
        None => 0,
    };

    let mut y = Vec::new();
    let mut missing = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (r, record) in reader.records().enumerate() {
        let lineno = r + 2;
        let record = record.map_err(|e| parse_err(lineno, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (c, cell) in record.iter().enumerate() {
            if c == outcome_col {
                match cell {
                    "0" => {
                        y.push(0);
                        missing.push(false);
                    }
                    "1" => {
                        y.push(1);
                        missing.push(false);
                    }
                    MISSING_TOKEN => {
                        y.push(0);
                        missing.push(true);
                    }
                    other => {
                        return Err(parse_err(
                            lineno,
                            format!("outcome must be 0, 1 or NA, got {other:?}"),
                        ));
                    }
                }
            } else {
                let v = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_err(
                            lineno,
                            format!("non-numeric value {cell:?} in column {:?}", headers[c]),
                        )
                    })?;
                cols[c].push(v);
            }
        }
    }
    if y.len() != n {
        return Err(AlaamError::Dimension(format!(
            "{}: attribute table has {} rows but the graph has {n} nodes",
            path.display(),
            y.len()
        )));
    }
    let mut covariates = Covariates::new();
    for (c, col) in cols.into_iter().enumerate() {
        if c != outcome_col {
            covariates.insert(headers[c].clone(), col)?;
        }
    }
    AttributeData::new(y, missing, covariates)
}

/// Nodes whose outcomes are held at their observed values during sampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClampMask {
    clamped: Vec<bool>,
}

impl ClampMask {
    pub fn none(n: usize) -> Self {
        Self {
            clamped: vec![false; n],
        }
    }

    pub fn from_nodes(n: usize, nodes: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut clamped = vec![false; n];
        for i in nodes {
            if i >= n {
                return Err(AlaamError::Dimension(format!(
                    "clamped node {i} out of range for n = {n}"
                )));
            }
            clamped[i] = true;
        }
        Ok(Self { clamped })
    }

    pub fn from_mask(clamped: Vec<bool>) -> Self {
        Self { clamped }
    }

    pub fn len(&self) -> usize {
        self.clamped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clamped.is_empty()
    }

    pub fn is_clamped(&self, i: usize) -> bool {
        self.clamped[i]
    }

    pub fn clamped_count(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }

    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.clamped[i]).collect()
    }

    /// Clamped nodes must be observed, and at least one node must be free.
    pub fn check(&self, data: &AttributeData) -> Result<()> {
        data.check_len(self.len())?;
        if let Some(i) = (0..self.len()).find(|&i| self.clamped[i] && data.missing[i]) {
            return Err(AlaamError::Config(format!(
                "clamped node {i} has a missing outcome"
            )));
        }
        if self.clamped_count() == self.len() {
            return Err(AlaamError::Config(
                "every node is clamped; nothing to sample".into(),
            ));
        }
        Ok(())
    }
}

/// Reads a clamp list: one node label per line, `#` comments allowed.
pub fn load_clamp(path: impl AsRef<Path>, n: usize, base: IndexBase) -> Result<ClampMask> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut nodes = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: usize = line.parse().map_err(|_| AlaamError::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            message: format!("invalid node label {line:?}"),
        })?;
        let idx = match base {
            IndexBase::Zero => v,
            IndexBase::One => v.checked_sub(1).ok_or_else(|| AlaamError::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                message: "label 0 in a 1-based list".into(),
            })?,
        };
        if idx >= n {
            return Err(AlaamError::Bounds {
                line: k + 1,
                index: idx,
                n,
            });
        }
        nodes.push(idx);
    }
    ClampMask::from_nodes(n, nodes)
}
