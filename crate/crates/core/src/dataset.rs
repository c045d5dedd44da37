//! Tabular binary-classification data: loading, encoding, imbalance
//! statistics and class-aware resampling.
//!
//! Labels are always stored with the minority class as `1`. Categorical
//! predictors are ordinal-encoded by their index in a lexicographically
//! sorted lexicon, so trees treat them as ordered thresholds.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Tokens treated as missing values.
pub const MISSING_TOKENS: [&str; 3] = ["?", "", "NA"];

/// Category that missing categorical cells are mapped to.
pub const MISSING_CATEGORY: &str = "<missing>";

/// Default imbalance-ratio gate for [`is_double_imbalanced`].
pub const DEFAULT_IR_MIN: f64 = 1.3;
/// Default dimensional-asymmetry gate for [`is_double_imbalanced`].
pub const DEFAULT_DA_MIN: f64 = 100.0;

fn is_missing(token: &str) -> bool {
    MISSING_TOKENS.contains(&token)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Sorted distinct tokens; empty for numeric columns.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lexicon: Vec<String>,
}

impl Column {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            lexicon: Vec::new(),
        }
    }
}

/// Column metadata plus the target column and its two label tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<Column>,
    pub target: String,
    /// Token encoded as label 1.
    pub minority_label: String,
    /// Token encoded as label 0.
    pub majority_label: String,
}

impl FeatureSchema {
    /// Schema with all-numeric predictors.
    pub fn numeric<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        target: impl Into<String>,
        majority_label: impl Into<String>,
        minority_label: impl Into<String>,
    ) -> Self {
        Self {
            columns: names.into_iter().map(Column::numeric).collect(),
            target: target.into(),
            minority_label: minority_label.into(),
            majority_label: majority_label.into(),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Decode an encoded cell back into its original token.
    pub fn decode(&self, column: usize, value: f64) -> Option<String> {
        let col = self.columns.get(column)?;
        match col.kind {
            ColumnKind::Numeric => Some(value.to_string()),
            ColumnKind::Categorical => {
                if value < 0.0 || value.fract() != 0.0 {
                    return None;
                }
                col.lexicon.get(value as usize).cloned()
            }
        }
    }

    pub fn label_token(&self, label: u8) -> &str {
        if label == 1 {
            &self.minority_label
        } else {
            &self.majority_label
        }
    }

    fn validate(&self) -> Result<()> {
        if self.minority_label == self.majority_label {
            return Err(Error::Schema("target labels must be distinct".into()));
        }
        let mut seen = HashSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column {:?}", col.name)));
            }
            if col.name == self.target {
                return Err(Error::Schema(format!(
                    "target {:?} listed as a predictor",
                    self.target
                )));
            }
            let distinct: HashSet<&String> = col.lexicon.iter().collect();
            if distinct.len() != col.lexicon.len() {
                return Err(Error::Schema(format!(
                    "duplicate tokens in lexicon of {:?}",
                    col.name
                )));
            }
        }
        Ok(())
    }
}

/// Class counts and the two imbalance measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceStats {
    pub n: usize,
    pub p: usize,
    /// Majority (label 0) count.
    pub c0: usize,
    /// Minority (label 1) count.
    pub c1: usize,
    /// Imbalance ratio `c0 / c1`.
    pub ir: f64,
    /// Dimensional asymmetry `n / p`.
    pub da: f64,
    /// Minority prevalence `c1 / n`.
    pub prevalence: f64,
}

impl ImbalanceStats {
    pub fn from_counts(c0: usize, c1: usize, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::DivisionByZero("dimensional asymmetry with p = 0"));
        }
        let n = c0 + c1;
        Ok(Self {
            n,
            p,
            c0,
            c1,
            ir: imbalance_ratio(c0, c1)?,
            da: n as f64 / p as f64,
            prevalence: c1 as f64 / n as f64,
        })
    }

    /// Number of minority rows, `N_min`.
    pub fn n_min(&self) -> usize {
        self.c1.min(self.c0)
    }
}

/// `c0 / c1`.
pub fn imbalance_ratio(c0: usize, c1: usize) -> Result<f64> {
    if c1 == 0 {
        return Err(Error::DivisionByZero("imbalance ratio with empty minority class"));
    }
    Ok(c0 as f64 / c1 as f64)
}

/// True iff both the class imbalance and the rows-per-predictor ratio meet
/// their gates.
pub fn is_double_imbalanced(stats: &ImbalanceStats, ir_min: f64, da_min: f64) -> bool {
    stats.ir >= ir_min && stats.da >= da_min
}

/// How the minority label is chosen when loading.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum MinorityLabel {
    /// The rarer label; ties go to the lexicographically larger token.
    #[default]
    Auto,
    Token(String),
}

/// Encoded feature matrix with labels in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    columns: Vec<f64>,
    y: Vec<u8>,
    n: usize,
    p: usize,
    schema: FeatureSchema,
    stats: ImbalanceStats,
}

impl Dataset {
    /// Build from a row-major matrix with `schema.columns.len()` columns.
    pub fn new(x: Vec<f64>, y: Vec<u8>, schema: FeatureSchema) -> Result<Self> {
        schema.validate()?;
        let p = schema.columns.len();
        if p == 0 {
            return Err(Error::Schema("at least one predictor is required".into()));
        }
        let n = y.len();
        if n < 2 {
            return Err(Error::Schema(format!("need at least 2 rows, got {n}")));
        }
        if x.len() != n * p {
            return Err(Error::Dimension {
                expected: n * p,
                got: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / p,
                column: schema.columns[pos % p].name.clone(),
                reason: "non-finite value".into(),
            });
        }
        if let Some(bad) = y.iter().find(|&&l| l > 1) {
            return Err(Error::DegenerateLabels(format!("label {bad} is not 0 or 1")));
        }
        let c1 = y.iter().filter(|&&l| l == 1).count();
        let c0 = n - c1;
        if c0 == 0 || c1 == 0 {
            return Err(Error::DegenerateLabels(format!(
                "both classes are required (c0 = {c0}, c1 = {c1})"
            )));
        }
        let stats = ImbalanceStats::from_counts(c0, c1, p)?;
        let mut columns = vec![0.0; n * p];
        for (i, row) in x.chunks_exact(p).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                columns[j * n + i] = v;
            }
        }
        Ok(Self {
            x,
            columns,
            y,
            n,
            p,
            schema,
            stats,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<u8>, schema: FeatureSchema) -> Result<Self> {
        let p = schema.columns.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::Dimension {
                expected: p,
                got: bad.len(),
            });
        }
        Self::new(rows.concat(), y, schema)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.p)
    }

    /// Column `j` as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn stats(&self) -> &ImbalanceStats {
        &self.stats
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.schema.names().map(str::to_owned).collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut x = Vec::with_capacity(indices.len() * self.p);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Dataset::new(x, y, self.schema.clone())
    }

    fn class_indices(&self, label: u8) -> Vec<usize> {
        (0..self.n).filter(|&i| self.y[i] == label).collect()
    }

    /// Subsample one class uniformly without replacement so that
    /// `c0 / c1` lands on `target_ir` (up to flooring).
    ///
    /// The minority is shrunk to `floor(c0 / target_ir)` when that does not
    /// exceed its current size; otherwise the majority is shrunk to
    /// `floor(c1 * target_ir)`. Row order is preserved.
    pub fn downsample_to_ir(&self, target_ir: f64, seed: u64) -> Result<Dataset> {
        if target_ir.is_nan() || target_ir < 1.0 || target_ir.is_infinite() {
            return Err(Error::Config(format!("target_ir must be >= 1, got {target_ir}")));
        }
        let (c0, c1) = (self.stats.c0, self.stats.c1);
        let wanted_minority = (c0 as f64 / target_ir).floor() as usize;
        let (shrink_label, keep) = if wanted_minority <= c1 {
            if wanted_minority == 0 {
                return Err(Error::InfeasibleRatio(format!(
                    "floor({c0} / {target_ir}) = 0 minority rows"
                )));
            }
            (1u8, wanted_minority)
        } else {
            (0u8, (c1 as f64 * target_ir).floor() as usize)
        };
        let pool = self.class_indices(shrink_label);
        let mut rng = seed::rng(seed);
        let mut kept: Vec<usize> = rand::seq::index::sample(&mut rng, pool.len(), keep)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        kept.extend(self.class_indices(1 - shrink_label));
        kept.sort_unstable();
        self.subset(&kept)
    }

    /// Per-class split with `floor(count * train_fraction)` rows of each
    /// class going to the training part.
    pub fn stratified_split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        let mut rng = seed::rng(seed);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for label in [0u8, 1] {
            let mut idx = self.class_indices(label);
            let n_train = (idx.len() as f64 * train_fraction).floor() as usize;
            if n_train == 0 || n_train == idx.len() {
                return Err(Error::InfeasibleRatio(format!(
                    "class {label} with {} rows cannot be split at fraction {train_fraction}",
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            train.extend_from_slice(&idx[..n_train]);
            test.extend_from_slice(&idx[n_train..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.subset(&train)?, self.subset(&test)?))
    }

    /// Write as CSV with decoded categorical tokens and the target last.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| Error::File {
            path: path.to_owned(),
            source,
        })?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.schema.names().collect();
        header.push(&self.schema.target);
        w.write_record(&header)?;
        for (i, row) in self.rows().enumerate() {
            let mut record: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, &v)| self.schema.decode(j, v).unwrap_or_default())
                .collect();
            record.push(self.schema.label_token(self.y[i]).to_owned());
            w.write_record(&record)?;
        }
        w.flush().map_err(|source| Error::File {
            path: Default::default(),
            source,
        })?;
        Ok(())
    }
}

/// Load a CSV file with a header row.
pub fn load_csv(path: impl AsRef<Path>, target: &str, minority: &MinorityLabel) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })?;
    read_csv(file, target, minority)
}

/// Parse CSV from any reader; see [`load_csv`].
pub fn read_csv<R: Read>(reader: R, target: &str, minority: &MinorityLabel) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    let target_hits = header.iter().filter(|h| *h == target).count();
    match target_hits {
        0 => return Err(Error::Schema(format!("target column {target:?} not found"))),
        1 => {}
        _ => return Err(Error::Schema(format!("target column {target:?} appears twice"))),
    }
    let target_col = header.iter().position(|h| h == target).expect("checked above");

    let mut cells: Vec<Vec<String>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        cells.push(record.iter().map(|t| t.trim().to_owned()).collect());
    }
    if cells.len() < 2 {
        return Err(Error::Schema(format!(
            "need at least 2 data rows, got {}",
            cells.len()
        )));
    }

    let labels: Vec<&str> = cells.iter().map(|r| r[target_col].as_str()).collect();
    if let Some(row) = labels.iter().position(|l| is_missing(l)) {
        return Err(Error::Parse {
            row: row + 1,
            column: target.to_owned(),
            reason: "missing target value".into(),
        });
    }
    let mut label_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &labels {
        *label_counts.entry(l).or_default() += 1;
    }
    if label_counts.len() != 2 {
        return Err(Error::Schema(format!(
            "target {target:?} must have exactly 2 classes, found {}",
            label_counts.len()
        )));
    }
    let mut by_count: Vec<(&str, usize)> = label_counts.into_iter().collect();
    let minority_token = match minority {
        MinorityLabel::Auto => {
            // Ascending by count, ties broken towards the larger token.
            by_count.sort_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)));
            by_count[0].0.to_owned()
        }
        MinorityLabel::Token(tok) => {
            let own = by_count.iter().find(|(l, _)| l == tok).ok_or_else(|| {
                Error::Schema(format!("minority label {tok:?} not present in {target:?}"))
            })?;
            let other = by_count.iter().find(|(l, _)| l != tok).expect("two classes");
            if own.1 > other.1 {
                return Err(Error::Schema(format!(
                    "label {tok:?} ({}) outnumbers {:?} ({})",
                    own.1, other.0, other.1
                )));
            }
            tok.clone()
        }
    };
    let majority_token = by_count
        .iter()
        .find(|(l, _)| *l != minority_token)
        .map(|(l, _)| (*l).to_owned())
        .expect("two classes");
    let y: Vec<u8> = labels.iter().map(|l| u8::from(*l == minority_token)).collect();

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != target_col).collect();
    let mut columns = Vec::with_capacity(feature_cols.len());
    let mut encoded: Vec<Vec<f64>> = Vec::with_capacity(feature_cols.len());
    for &j in &feature_cols {
        let tokens: Vec<&str> = cells.iter().map(|r| r[j].as_str()).collect();
        let (column, values) = encode_column(&header[j], &tokens)?;
        columns.push(column);
        encoded.push(values);
    }

    let n = cells.len();
    let p = feature_cols.len();
    let mut x = Vec::with_capacity(n * p);
    for i in 0..n {
        x.extend(encoded.iter().map(|col| col[i]));
    }
    let schema = FeatureSchema {
        columns,
        target: target.to_owned(),
        minority_label: minority_token,
        majority_label: majority_token,
    };
    Dataset::new(x, y, schema)
}

fn parse_real(token: &str) -> Option<f64> {
    token.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn encode_column(name: &str, tokens: &[&str]) -> Result<(Column, Vec<f64>)> {
    let present: Vec<&str> = tokens.iter().copied().filter(|t| !is_missing(t)).collect();
    let numeric = !present.is_empty() && present.iter().all(|t| parse_real(t).is_some());
    if numeric {
        let values = tokens
            .iter()
            .enumerate()
            .map(|(row, t)| {
                parse_real(t).ok_or_else(|| Error::Parse {
                    row: row + 1,
                    column: name.to_owned(),
                    reason: format!("missing value {t:?} in numeric column"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        return Ok((Column::numeric(name), values));
    }
    let normalized: Vec<&str> = tokens
        .iter()
        .map(|t| if is_missing(t) { MISSING_CATEGORY } else { t })
        .collect();
    let lexicon: Vec<String> = normalized
        .iter()
        .copied()
        .collect::<BTreeSet<&str>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let values = normalized
        .iter()
        .map(|t| lexicon.binary_search_by(|l| l.as_str().cmp(t)).expect("in lexicon") as f64)
        .collect();
    Ok((
        Column {
            name: name.to_owned(),
            kind: ColumnKind::Categorical,
            lexicon,
        },
        values,
    ))
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn categorical_round_trip(tokens in proptest::collection::vec("[a-d?]{0,2}", 2..40)) {
            let mut text = String::from("c,y\n");
            for (i, t) in tokens.iter().enumerate() {
                text.push_str(&format!("{t},{}\n", if i % 2 == 0 { "u" } else { "v" }));
            }
            let d = read_csv(text.as_bytes(), "y", &MinorityLabel::Auto).unwrap();
            let schema = d.schema();
            for (i, t) in tokens.iter().enumerate() {
                let decoded = schema.decode(0, d.row(i)[0]).unwrap();
                if is_missing(t) {
                    prop_assert_eq!(decoded, MISSING_CATEGORY);
                } else if schema.columns[0].kind == ColumnKind::Categorical {
                    prop_assert_eq!(&decoded, t);
                }
            }
        }

        #[test]
        fn stats_are_consistent(c0 in 1usize..500, c1 in 1usize..500, p in 1usize..50) {
            let s = ImbalanceStats::from_counts(c0, c1, p).unwrap();
            prop_assert_eq!(s.c0 + s.c1, s.n);
            let back = s.ir * s.c1 as f64;
            prop_assert!((back - c0 as f64).abs() < 1e-9);
            prop_assert!((s.prevalence - c1 as f64 / (c0 + c1) as f64).abs() < 1e-15);
        }
    }
}
