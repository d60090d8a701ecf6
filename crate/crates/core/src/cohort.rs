//! Trial data model: cohort ingestion, outcome deltas, and Z-score
//! standardization.
//!
//! A cohort is tabular: one row per patient with an opaque id, a binary
//! arm label, pre/post peak-eosinophil counts, and a pre/post value for
//! every schema feature. The clinical outcome of a feature is the delta
//! `end - start`; outcomes are standardized per feature column with the
//! population (n-denominator) standard deviation so that a two-point
//! column standardizes to exactly ±1.
//!
//! Missing-value semantics run through the whole crate: a delta is
//! missing iff either operand is missing, and means/stds are computed
//! over non-missing entries only — imputation is a learner-level concern.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::CohortError;
use crate::stats;

/// Patients with a peak eosinophil count below this are in remission.
pub const REMISSION_PEC_THRESHOLD: f64 = 15.0;

/// Binary treatment label. Arm 0 is the less restrictive regimen; ties in
/// downstream assignment resolve to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Arm {
    Arm0,
    Arm1,
}

impl Arm {
    pub fn index(self) -> usize {
        match self {
            Arm::Arm0 => 0,
            Arm::Arm1 => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Arm> {
        match index {
            0 => Some(Arm::Arm0),
            1 => Some(Arm::Arm1),
            _ => None,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Arm0 => Arm::Arm1,
            Arm::Arm1 => Arm::Arm0,
        }
    }
}

impl From<Arm> for u8 {
    fn from(arm: Arm) -> u8 {
        arm.index() as u8
    }
}

impl TryFrom<u8> for Arm {
    type Error = String;
    fn try_from(value: u8) -> Result<Arm, String> {
        Arm::from_index(value as usize).ok_or_else(|| format!("arm must be 0 or 1, got {value}"))
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Instrument family a feature came from. Metadata only; no operation
/// branches on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureGroup {
    ManualHistology,
    AiHistology,
    Endoscopy,
    Symptoms,
    #[default]
    Other,
}

/// Ordered feature identifiers plus their instrument group. The order is
/// fixed for the cohort's lifetime; every per-feature vector aligns to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub names: Vec<String>,
    pub groups: Vec<FeatureGroup>,
}

impl FeatureSchema {
    /// Schema with every feature tagged [`FeatureGroup::Other`].
    pub fn from_names(names: Vec<String>) -> Result<Self, CohortError> {
        let groups = vec![FeatureGroup::Other; names.len()];
        let schema = FeatureSchema { names, groups };
        schema.validate()?;
        Ok(schema)
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn validate(&self) -> Result<(), CohortError> {
        if self.names.len() != self.groups.len() {
            return Err(CohortError::Schema(
                "names and groups have different lengths".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &self.names {
            if name.is_empty() {
                return Err(CohortError::Schema("empty feature name".into()));
            }
            if !seen.insert(name) {
                return Err(CohortError::Schema(format!("duplicate feature {name:?}")));
            }
        }
        Ok(())
    }
}

/// One trial participant. Feature vectors align to the cohort schema and
/// use NaN for missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub id: String,
    pub arm: Arm,
    pub x_start: Vec<f64>,
    pub x_end: Vec<f64>,
    pub pec_start: Option<f64>,
    pub pec_end: Option<f64>,
}

/// A validated trial cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub schema: FeatureSchema,
    pub patients: Vec<PatientRecord>,
}

impl Cohort {
    pub fn new(schema: FeatureSchema, patients: Vec<PatientRecord>) -> Result<Self, CohortError> {
        schema.validate()?;
        let mut ids = std::collections::BTreeSet::new();
        for (row, p) in patients.iter().enumerate() {
            if p.x_start.len() != schema.width() || p.x_end.len() != schema.width() {
                return Err(CohortError::Schema(format!(
                    "patient {:?} has {} start / {} end entries, schema width is {}",
                    p.id,
                    p.x_start.len(),
                    p.x_end.len(),
                    schema.width()
                )));
            }
            for (label, pec) in [("pec_start", p.pec_start), ("pec_end", p.pec_end)] {
                if let Some(v) = pec {
                    if !v.is_finite() || v < 0.0 {
                        return Err(CohortError::InvalidValue {
                            row: row + 1,
                            column: label.into(),
                            message: format!("eosinophil count must be >= 0, got {v}"),
                        });
                    }
                }
            }
            if !ids.insert(p.id.clone()) {
                return Err(CohortError::DuplicateId {
                    id: p.id.clone(),
                    row: row + 1,
                });
            }
        }
        Ok(Cohort { schema, patients })
    }

    pub fn n_patients(&self) -> usize {
        self.patients.len()
    }

    pub fn arms(&self) -> Vec<Arm> {
        self.patients.iter().map(|p| p.arm).collect()
    }

    pub fn arm_count(&self, arm: Arm) -> usize {
        self.patients.iter().filter(|p| p.arm == arm).count()
    }

    /// Patient indices sorted by id. This is the canonical order every
    /// seeded draw and fold deal runs in, which makes results invariant
    /// under permutations of the input rows.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.patients.len()).collect();
        idx.sort_by(|&a, &b| self.patients[a].id.cmp(&self.patients[b].id));
        idx
    }

    /// Pre-treatment feature matrix (patients x features, NaN = missing).
    pub fn start_matrix(&self) -> Matrix {
        let rows: Vec<Vec<f64>> = self.patients.iter().map(|p| p.x_start.clone()).collect();
        Matrix::from_rows(&rows)
    }

    /// Binary remission label per patient from the post-treatment count;
    /// missing counts propagate as `None`.
    pub fn remission_labels(&self) -> Vec<Option<u8>> {
        self.patients
            .iter()
            .map(|p| p.pec_end.map(remission_label))
            .collect()
    }

    pub fn pec_start_column(&self) -> Vec<f64> {
        self.patients
            .iter()
            .map(|p| p.pec_start.unwrap_or(f64::NAN))
            .collect()
    }
}

/// 1 if the count is below the remission threshold, else 0. The boundary
/// itself (count == 15) counts as active disease.
pub fn remission_label(pec_end: f64) -> u8 {
    u8::from(pec_end < REMISSION_PEC_THRESHOLD)
}

/// Raw outcome deltas `x_end - x_start`, one column per schema feature.
/// An entry is missing iff either operand is missing.
pub fn outcome_deltas(cohort: &Cohort) -> Result<Matrix, CohortError> {
    if cohort.patients.is_empty() {
        return Err(CohortError::EmptyCohort);
    }
    let width = cohort.schema.width();
    let mut out = Matrix::zeros(cohort.n_patients(), width);
    for (i, p) in cohort.patients.iter().enumerate() {
        for f in 0..width {
            out.set(i, f, p.x_end[f] - p.x_start[f]); // NaN propagates
        }
    }
    Ok(out)
}

/// Why a column was excluded from the standardized outcome matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    ZeroVariance,
    TooFewObservations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub name: String,
    pub reason: DropReason,
}

/// Standardized outcome deltas for the retained feature columns, plus the
/// per-column parameters needed to invert the transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMatrix {
    pub values: Matrix,
    /// Names of the retained columns, aligned to `values`.
    pub feature_names: Vec<String>,
    /// Index of each retained column in the original schema.
    pub retained: Vec<usize>,
    /// Per-retained-column mean of the raw deltas.
    pub feature_means: Vec<f64>,
    /// Per-retained-column population std of the raw deltas (> 0).
    pub feature_stds: Vec<f64>,
    pub dropped: Vec<DroppedColumn>,
}

impl OutcomeMatrix {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|j| self.values.column(j))
    }

    /// Invert the standardization: `z * std + mean` per column.
    pub fn unstandardize(&self) -> Matrix {
        let mut out = Matrix::zeros(self.values.n_rows(), self.values.n_cols());
        for j in 0..self.values.n_cols() {
            for i in 0..self.values.n_rows() {
                out.set(
                    i,
                    j,
                    self.values.get(i, j) * self.feature_stds[j] + self.feature_means[j],
                );
            }
        }
        out
    }
}

/// Mean and population std of a column's non-missing entries, or `None`
/// when fewer than `min_obs` entries are present.
pub fn column_stats(column: &[f64], min_obs: usize) -> Option<(f64, f64)> {
    let present = stats::present(column);
    if present.len() < min_obs {
        return None;
    }
    stats::stable_mean_pop_std(&present)
}

/// Z-score standardization of a raw delta matrix.
///
/// Each column is centered and scaled by its own mean and population std
/// over non-missing entries. Columns with fewer than 2 observations or
/// zero variance are dropped and reported, not errors.
pub fn standardize(deltas: &Matrix, names: &[String]) -> Result<OutcomeMatrix, CohortError> {
    assert_eq!(deltas.n_cols(), names.len(), "name/width mismatch");
    let mut retained = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..deltas.n_cols() {
        let col = deltas.column(j);
        match column_stats(&col, 2) {
            None => dropped.push(DroppedColumn {
                name: names[j].clone(),
                reason: DropReason::TooFewObservations,
            }),
            Some((_, std)) if std == 0.0 => dropped.push(DroppedColumn {
                name: names[j].clone(),
                reason: DropReason::ZeroVariance,
            }),
            Some((mean, std)) => {
                retained.push(j);
                means.push(mean);
                stds.push(std);
            }
        }
    }
    if retained.is_empty() {
        return Err(CohortError::AllColumnsDegenerate);
    }
    let mut values = Matrix::zeros(deltas.n_rows(), retained.len());
    for (k, &j) in retained.iter().enumerate() {
        for i in 0..deltas.n_rows() {
            values.set(i, k, (deltas.get(i, j) - means[k]) / stds[k]);
        }
    }
    Ok(OutcomeMatrix {
        values,
        feature_names: retained.iter().map(|&j| names[j].clone()).collect(),
        retained,
        feature_means: means,
        feature_stds: stds,
        dropped,
    })
}

/// Whether standardization parameters come from the whole cohort or from
/// the training folds only.
///
/// `Global` matches the source analysis (outcomes standardized over all
/// patients before cross-validation); `TrainOnly` avoids leaking held-out
/// outcome statistics into training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeMode {
    #[default]
    Global,
    TrainOnly,
}

// ── File format ─────────────────────────────────────────────────────────

/// Shape of the delimiter-separated cohort file: mandatory `id`, `arm`,
/// `pec_start`, `pec_end` columns, then one `<feature><start_suffix>` and
/// one `<feature><end_suffix>` column per feature. Empty cells are
/// missing values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FormatSpec {
    pub delimiter: char,
    pub start_suffix: String,
    pub end_suffix: String,
    /// Extra spellings accepted for each arm label, e.g. "1fed" -> 0.
    pub arm_zero_aliases: Vec<String>,
    pub arm_one_aliases: Vec<String>,
    /// Optional instrument-group tags by feature name.
    pub groups: BTreeMap<String, FeatureGroup>,
}

impl Default for FormatSpec {
    fn default() -> Self {
        FormatSpec {
            delimiter: ',',
            start_suffix: "__start".into(),
            end_suffix: "__end".into(),
            arm_zero_aliases: Vec::new(),
            arm_one_aliases: Vec::new(),
            groups: BTreeMap::new(),
        }
    }
}

impl FormatSpec {
    fn parse_arm(&self, raw: &str, row: usize) -> Result<Arm, CohortError> {
        let t = raw.trim();
        if t == "0" || self.arm_zero_aliases.iter().any(|a| a == t) {
            return Ok(Arm::Arm0);
        }
        if t == "1" || self.arm_one_aliases.iter().any(|a| a == t) {
            return Ok(Arm::Arm1);
        }
        Err(CohortError::InvalidArm {
            row,
            value: t.to_string(),
        })
    }
}

const MANDATORY: [&str; 4] = ["id", "arm", "pec_start", "pec_end"];

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64, CohortError> {
    let t = raw.trim();
    if t.is_empty() {
        return Ok(f64::NAN);
    }
    let v: f64 = t.parse().map_err(|_| CohortError::Parse {
        row,
        column: column.to_string(),
        message: format!("not a number: {t:?}"),
    })?;
    if !v.is_finite() {
        return Err(CohortError::Parse {
            row,
            column: column.to_string(),
            message: format!("non-finite value {t:?}"),
        });
    }
    Ok(v)
}

/// Load a cohort from a delimiter-separated file.
pub fn load_cohort(path: &Path, format: &FormatSpec) -> Result<Cohort, CohortError> {
    let io_err = |source| CohortError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter as u8)
        .flexible(false)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CohortError::Parse {
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    for m in MANDATORY {
        if !headers.iter().any(|h| h == m) {
            return Err(CohortError::MissingColumn(m.into()));
        }
    }

    // Feature columns: header order of the start columns fixes the schema.
    let mut feature_names = Vec::new();
    let mut start_col: BTreeMap<String, usize> = BTreeMap::new();
    let mut end_col: BTreeMap<String, usize> = BTreeMap::new();
    let mut mandatory_col: BTreeMap<&str, usize> = BTreeMap::new();
    for (idx, h) in headers.iter().enumerate() {
        if let Some(m) = MANDATORY.iter().find(|m| *m == h) {
            mandatory_col.insert(m, idx);
        } else if let Some(name) = h.strip_suffix(&format.start_suffix) {
            feature_names.push(name.to_string());
            start_col.insert(name.to_string(), idx);
        } else if let Some(name) = h.strip_suffix(&format.end_suffix) {
            end_col.insert(name.to_string(), idx);
        } else {
            return Err(CohortError::UnknownColumn(h.clone()));
        }
    }
    for name in &feature_names {
        if !end_col.contains_key(name) {
            return Err(CohortError::UnpairedFeature(name.clone()));
        }
    }
    for name in end_col.keys() {
        if !start_col.contains_key(name) {
            return Err(CohortError::UnpairedFeature(name.clone()));
        }
    }

    let groups = feature_names
        .iter()
        .map(|n| format.groups.get(n).copied().unwrap_or_default())
        .collect();
    let schema = FeatureSchema {
        names: feature_names.clone(),
        groups,
    };
    schema.validate()?;

    let mut patients = Vec::new();
    for (rec_idx, record) in reader.records().enumerate() {
        let row = rec_idx + 1; // 1-based data row for diagnostics
        let record = record.map_err(|e| CohortError::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        let cell = |idx: usize| record.get(idx).unwrap_or("");

        let id = cell(mandatory_col["id"]).trim().to_string();
        if id.is_empty() {
            return Err(CohortError::InvalidValue {
                row,
                column: "id".into(),
                message: "empty id".into(),
            });
        }
        let arm = format.parse_arm(cell(mandatory_col["arm"]), row)?;
        let pec = |key: &'static str| -> Result<Option<f64>, CohortError> {
            let v = parse_cell(cell(mandatory_col[key]), row, key)?;
            if v.is_nan() {
                Ok(None)
            } else if v < 0.0 {
                Err(CohortError::InvalidValue {
                    row,
                    column: key.into(),
                    message: format!("eosinophil count must be >= 0, got {v}"),
                })
            } else {
                Ok(Some(v))
            }
        };
        let pec_start = pec("pec_start")?;
        let pec_end = pec("pec_end")?;

        let mut x_start = Vec::with_capacity(feature_names.len());
        let mut x_end = Vec::with_capacity(feature_names.len());
        for name in &feature_names {
            x_start.push(parse_cell(
                cell(start_col[name]),
                row,
                &format!("{name}{}", format.start_suffix),
            )?);
            x_end.push(parse_cell(
                cell(end_col[name]),
                row,
                &format!("{name}{}", format.end_suffix),
            )?);
        }
        patients.push(PatientRecord {
            id,
            arm,
            x_start,
            x_end,
            pec_start,
            pec_end,
        });
    }

    Cohort::new(schema, patients)
}

fn fmt_cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Write a cohort in the same format `load_cohort` reads; loading the
/// result reproduces the cohort exactly.
pub fn save_cohort(path: &Path, cohort: &Cohort, format: &FormatSpec) -> Result<(), CohortError> {
    let io_err = |source| CohortError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut writer = csv::WriterBuilder::new()
        .delimiter(format.delimiter as u8)
        .from_writer(file);

    let mut header: Vec<String> = MANDATORY.iter().map(|s| s.to_string()).collect();
    for name in &cohort.schema.names {
        header.push(format!("{name}{}", format.start_suffix));
    }
    for name in &cohort.schema.names {
        header.push(format!("{name}{}", format.end_suffix));
    }
    let write_err = |e: csv::Error| CohortError::Parse {
        row: 0,
        column: String::new(),
        message: e.to_string(),
    };
    writer.write_record(&header).map_err(write_err)?;
    for p in &cohort.patients {
        let mut rec: Vec<String> = vec![
            p.id.clone(),
            p.arm.to_string(),
            p.pec_start.map_or(String::new(), |v| format!("{v}")),
            p.pec_end.map_or(String::new(), |v| format!("{v}")),
        ];
        rec.extend(p.x_start.iter().map(|&v| fmt_cell(v)));
        rec.extend(p.x_end.iter().map(|&v| fmt_cell(v)));
        writer.write_record(&rec).map_err(write_err)?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

/// Sidecar manifest recording the schema, dropped columns, and
/// standardization parameters of a derived outcome matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortManifest {
    pub schema: FeatureSchema,
    pub n_patients: usize,
    pub arm0_count: usize,
    pub arm1_count: usize,
    pub dropped_columns: Vec<DroppedColumn>,
    pub feature_names: Vec<String>,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
}

impl CohortManifest {
    pub fn new(cohort: &Cohort, outcomes: &OutcomeMatrix) -> Self {
        CohortManifest {
            schema: cohort.schema.clone(),
            n_patients: cohort.n_patients(),
            arm0_count: cohort.arm_count(Arm::Arm0),
            arm1_count: cohort.arm_count(Arm::Arm1),
            dropped_columns: outcomes.dropped.clone(),
            feature_names: outcomes.feature_names.clone(),
            feature_means: outcomes.feature_means.clone(),
            feature_stds: outcomes.feature_stds.clone(),
        }
    }
}
