//! Tabular data model: attribute schema, weighted instances with a nominal
//! class column, CSV ingestion and export, and stratified fold assignment.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::ClassDistribution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Nominal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nominal_values: Vec<String>,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric,
            nominal_values: Vec::new(),
        }
    }

    pub fn nominal<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Nominal,
            nominal_values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == AttributeKind::Numeric
    }

    pub fn is_nominal(&self) -> bool {
        self.kind == AttributeKind::Nominal
    }

    /// Number of distinct nominal values (0 for numeric attributes).
    pub fn arity(&self) -> usize {
        self.nominal_values.len()
    }

    pub fn value_index(&self, token: &str) -> Option<usize> {
        self.nominal_values.iter().position(|v| v == token)
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            AttributeKind::Numeric if !self.nominal_values.is_empty() => Err(Error::invalid(
                format!("numeric attribute '{}' lists nominal values", self.name),
            )),
            AttributeKind::Nominal if self.nominal_values.is_empty() => Err(Error::invalid(
                format!("nominal attribute '{}' has no values", self.name),
            )),
            AttributeKind::Nominal => {
                let mut seen = std::collections::HashSet::new();
                for v in &self.nominal_values {
                    if !seen.insert(v.as_str()) {
                        return Err(Error::invalid(format!(
                            "nominal attribute '{}' repeats value '{}'",
                            self.name, v
                        )));
                    }
                }
                Ok(())
            }
            AttributeKind::Numeric => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Numeric(f64),
    Nominal(usize),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_numeric(&self) -> Option<f64> {
        match *self {
            Cell::Numeric(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_nominal(&self) -> Option<usize> {
        match *self {
            Cell::Nominal(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub cells: Vec<Cell>,
    pub weight: f64,
}

impl Instance {
    pub fn new(cells: Vec<Cell>) -> Self {
        Instance { cells, weight: 1.0 }
    }

    pub fn with_weight(cells: Vec<Cell>, weight: f64) -> Self {
        Instance { cells, weight }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Vec<AttributeSpec>,
    class_index: usize,
    instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(
        schema: Vec<AttributeSpec>,
        class_index: usize,
        instances: Vec<Instance>,
    ) -> Result<Self> {
        let d = Dataset {
            schema,
            class_index,
            instances: Vec::new(),
        };
        d.validate_schema()?;
        for (i, inst) in instances.iter().enumerate() {
            d.check_instance(inst)
                .map_err(|e| Error::invalid(format!("instance {i}: {e}")))?;
        }
        Ok(Dataset { instances, ..d })
    }

    fn validate_schema(&self) -> Result<()> {
        if self.class_index >= self.schema.len() {
            return Err(Error::invalid("class index outside schema"));
        }
        if !self.schema[self.class_index].is_nominal() {
            return Err(Error::invalid("class attribute must be nominal"));
        }
        let mut names = std::collections::HashSet::new();
        for spec in &self.schema {
            spec.validate()?;
            if !names.insert(spec.name.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate attribute name '{}'",
                    spec.name
                )));
            }
        }
        Ok(())
    }

    /// Checks that an instance matches this schema positionally.
    pub fn check_instance(&self, inst: &Instance) -> Result<()> {
        check_cells(&self.schema, &inst.cells)?;
        if !(inst.weight >= 0.0) || !inst.weight.is_finite() {
            return Err(Error::invalid(format!(
                "instance weight {} is not a finite nonnegative number",
                inst.weight
            )));
        }
        Ok(())
    }

    pub fn schema(&self) -> &[AttributeSpec] {
        &self.schema
    }

    pub fn attribute(&self, index: usize) -> &AttributeSpec {
        &self.schema[index]
    }

    pub fn num_attributes(&self) -> usize {
        self.schema.len()
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn class_attribute(&self) -> &AttributeSpec {
        &self.schema[self.class_index]
    }

    pub fn num_classes(&self) -> usize {
        self.schema[self.class_index].arity()
    }

    /// Attribute indices other than the class column, in schema order.
    pub fn feature_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.schema.len()).filter(move |&i| i != self.class_index)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn instance(&self, i: usize) -> &Instance {
        &self.instances[i]
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn class_of(&self, i: usize) -> Option<usize> {
        self.instances[i].cells[self.class_index].as_nominal()
    }

    pub fn total_weight(&self) -> f64 {
        self.instances.iter().map(|i| i.weight).sum()
    }

    /// Weighted class distribution over all labelled instances.
    pub fn class_distribution(&self) -> ClassDistribution {
        let mut w = vec![0.0; self.num_classes()];
        for inst in &self.instances {
            if let Cell::Nominal(c) = inst.cells[self.class_index] {
                w[c] += inst.weight;
            }
        }
        ClassDistribution::new(w)
    }

    /// Unweighted per-class instance counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for i in 0..self.len() {
            if let Some(c) = self.class_of(i) {
                counts[c] += 1;
            }
        }
        counts
    }

    pub fn weights(&self) -> Vec<f64> {
        self.instances.iter().map(|i| i.weight).collect()
    }

    /// Copy of this dataset with instance weights replaced.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Dataset> {
        if weights.len() != self.len() {
            return Err(Error::invalid(format!(
                "{} weights supplied for {} instances",
                weights.len(),
                self.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        let instances = self
            .instances
            .iter()
            .zip(weights)
            .map(|(inst, &w)| Instance::with_weight(inst.cells.clone(), w))
            .collect();
        Ok(Dataset {
            schema: self.schema.clone(),
            class_index: self.class_index,
            instances,
        })
    }

    /// Copy holding only the listed instances, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            class_index: self.class_index,
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }

    /// Builds a dataset from parts already known to be consistent.
    pub(crate) fn from_parts_unchecked(
        schema: Vec<AttributeSpec>,
        class_index: usize,
        instances: Vec<Instance>,
    ) -> Dataset {
        Dataset {
            schema,
            class_index,
            instances,
        }
    }

    pub fn numeric_value(&self, row: usize, attribute: usize) -> Option<f64> {
        self.instances[row].cells[attribute].as_numeric()
    }
}

pub(crate) fn check_cells(schema: &[AttributeSpec], cells: &[Cell]) -> Result<()> {
    if cells.len() != schema.len() {
        return Err(Error::Schema(format!(
            "instance has {} cells, schema has {} attributes",
            cells.len(),
            schema.len()
        )));
    }
    for (spec, cell) in schema.iter().zip(cells) {
        match (spec.kind, cell) {
            (_, Cell::Missing) => {}
            (AttributeKind::Numeric, Cell::Numeric(v)) if v.is_finite() => {}
            (AttributeKind::Nominal, Cell::Nominal(v)) if *v < spec.arity() => {}
            _ => {
                return Err(Error::Schema(format!(
                    "cell {:?} does not fit attribute '{}'",
                    cell, spec.name
                )))
            }
        }
    }
    Ok(())
}

/// Rows of a dataset together with the weight each row carries at the
/// current tree node (fractional for instances split across branches).
#[derive(Clone, Debug)]
pub struct View<'a> {
    data: &'a Dataset,
    rows: Vec<(usize, f64)>,
}

impl<'a> View<'a> {
    pub fn full(data: &'a Dataset) -> Self {
        let rows = data
            .instances
            .iter()
            .enumerate()
            .filter(|(i, inst)| inst.weight > 0.0 && data.class_of(*i).is_some())
            .map(|(i, inst)| (i, inst.weight))
            .collect();
        View { data, rows }
    }

    pub fn from_rows(data: &'a Dataset, rows: Vec<(usize, f64)>) -> Self {
        View { data, rows }
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn rows(&self) -> &[(usize, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.rows.iter().map(|r| r.1).sum()
    }

    pub fn class_of(&self, row: usize) -> usize {
        self.data
            .class_of(row)
            .expect("views only hold labelled rows")
    }

    pub fn cell(&self, row: usize, attribute: usize) -> Cell {
        self.data.instances[row].cells[attribute]
    }

    pub fn class_distribution(&self) -> ClassDistribution {
        let mut w = vec![0.0; self.data.num_classes()];
        for &(r, wt) in &self.rows {
            w[self.class_of(r)] += wt;
        }
        ClassDistribution::new(w)
    }

    /// Same rows restricted to the given positions within this view.
    pub fn select(&self, positions: &[usize]) -> View<'a> {
        View {
            data: self.data,
            rows: positions.iter().map(|&p| self.rows[p]).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// CSV

/// Identifies the class column of a CSV file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassColumn {
    Name(String),
    Index(usize),
    Last,
}

impl std::str::FromStr for ClassColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ClassColumn::Index(i),
            Err(_) => ClassColumn::Name(s.to_string()),
        })
    }
}

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub header: bool,
    pub missing_token: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            header: true,
            missing_token: "?".to_string(),
        }
    }
}

/// Result of loading a CSV file. Rows whose class cell is missing are
/// dropped and their line numbers reported here.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub dataset: Dataset,
    pub rejected_lines: Vec<u64>,
}

pub fn load_csv(
    path: impl AsRef<Path>,
    class_column: &ClassColumn,
    options: &CsvOptions,
) -> Result<Loaded> {
    let file = File::open(path.as_ref())?;
    read_csv(file, class_column, options)
}

struct RawRow {
    line: u64,
    fields: Vec<String>,
}

fn read_raw<R: Read>(reader: R, header: bool) -> Result<(Option<Vec<String>>, Vec<RawRow>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut names = None;
    let mut rows = Vec::new();
    let mut width: Option<usize> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        let fields: Vec<String> = rec.iter().map(str::to_string).collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Parse {
                    line: line as usize,
                    message: format!("expected {} fields, found {}", w, fields.len()),
                })
            }
            _ => {}
        }
        if header && names.is_none() {
            names = Some(fields);
        } else {
            rows.push(RawRow { line, fields });
        }
    }
    Ok((names, rows))
}

fn resolve_class(class_column: &ClassColumn, names: &[String]) -> Result<usize> {
    match class_column {
        ClassColumn::Last => names
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::invalid("file has no columns")),
        ClassColumn::Index(i) if *i < names.len() => Ok(*i),
        ClassColumn::Index(i) => Err(Error::invalid(format!(
            "class column {} out of range ({} columns)",
            i,
            names.len()
        ))),
        ClassColumn::Name(n) => names
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| Error::invalid(format!("class column '{n}' not found"))),
    }
}

/// Reads a CSV stream. Column kinds are inferred: the class column is
/// nominal; any other column is numeric when its first non-missing token
/// parses as a number, nominal otherwise. Nominal values are ordered by
/// first appearance.
pub fn read_csv<R: Read>(
    reader: R,
    class_column: &ClassColumn,
    options: &CsvOptions,
) -> Result<Loaded> {
    let (names, rows) = read_raw(reader, options.header)?;
    let width = names
        .as_ref()
        .map(Vec::len)
        .or_else(|| rows.first().map(|r| r.fields.len()))
        .ok_or_else(|| Error::invalid("CSV input is empty"))?;
    let names = names.unwrap_or_else(|| (0..width).map(|i| format!("attr{i}")).collect());
    let class_index = resolve_class(class_column, &names)?;
    let missing = options.missing_token.as_str();

    let kinds: Vec<AttributeKind> = (0..width)
        .map(|c| {
            if c == class_index {
                return AttributeKind::Nominal;
            }
            let first = rows
                .iter()
                .map(|r| r.fields[c].as_str())
                .find(|t| *t != missing);
            match first {
                Some(t) if t.parse::<f64>().is_err() => AttributeKind::Nominal,
                _ => AttributeKind::Numeric,
            }
        })
        .collect();

    let mut values: Vec<Vec<String>> = vec![Vec::new(); width];
    let mut lookup: Vec<HashMap<String, usize>> = vec![HashMap::new(); width];
    let mut instances = Vec::with_capacity(rows.len());
    let mut rejected_lines = Vec::new();

    for row in &rows {
        if row.fields[class_index] == missing || row.fields[class_index].is_empty() {
            rejected_lines.push(row.line);
            continue;
        }
        let mut cells = Vec::with_capacity(width);
        for (c, token) in row.fields.iter().enumerate() {
            if token == missing {
                cells.push(Cell::Missing);
                continue;
            }
            match kinds[c] {
                AttributeKind::Numeric => {
                    let v: f64 = token.parse().map_err(|_| Error::Parse {
                        line: row.line as usize,
                        message: format!("non-numeric token '{}' in column '{}'", token, names[c]),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            line: row.line as usize,
                            message: format!("non-finite value in column '{}'", names[c]),
                        });
                    }
                    cells.push(Cell::Numeric(v));
                }
                AttributeKind::Nominal => {
                    let next = values[c].len();
                    let idx = *lookup[c].entry(token.clone()).or_insert_with(|| {
                        values[c].push(token.clone());
                        next
                    });
                    cells.push(Cell::Nominal(idx));
                }
            }
        }
        instances.push(Instance::new(cells));
    }

    if values[class_index].is_empty() {
        return Err(Error::invalid("no labelled rows in CSV input"));
    }

    let schema = names
        .into_iter()
        .zip(kinds)
        .zip(values)
        .map(|((name, kind), vals)| match kind {
            AttributeKind::Numeric => AttributeSpec::numeric(name),
            // A nominal column whose every cell is missing still needs a value list.
            AttributeKind::Nominal if vals.is_empty() => AttributeSpec::nominal(name, ["?"]),
            AttributeKind::Nominal => AttributeSpec::nominal(name, vals),
        })
        .collect();

    Ok(Loaded {
        dataset: Dataset::new(schema, class_index, instances)?,
        rejected_lines,
    })
}

/// Reads rows against a known schema (for prediction). The header row is
/// required and columns are matched by name; the class column may be absent.
/// Any column that does not fit the schema is reported by name.
pub fn read_instances_with_schema<R: Read>(
    reader: R,
    schema: &[AttributeSpec],
    class_index: usize,
    options: &CsvOptions,
) -> Result<Vec<Instance>> {
    let (names, rows) = read_raw(reader, true)?;
    let names = names.ok_or_else(|| Error::invalid("input has no header row"))?;
    let mut column_of = vec![None; schema.len()];
    for (c, name) in names.iter().enumerate() {
        let a = schema
            .iter()
            .position(|s| &s.name == name)
            .ok_or_else(|| Error::Schema(format!("column '{name}' is not in the model schema")))?;
        column_of[a] = Some(c);
    }
    for (a, spec) in schema.iter().enumerate() {
        if column_of[a].is_none() && a != class_index {
            return Err(Error::Schema(format!("column '{}' is missing from input", spec.name)));
        }
    }
    let missing = options.missing_token.as_str();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let mut cells = Vec::with_capacity(schema.len());
        for (a, spec) in schema.iter().enumerate() {
            let Some(c) = column_of[a] else {
                cells.push(Cell::Missing);
                continue;
            };
            let token = row.fields[c].as_str();
            if token == missing || (a == class_index && token.is_empty()) {
                cells.push(Cell::Missing);
                continue;
            }
            let cell = match spec.kind {
                AttributeKind::Numeric => match token.parse::<f64>() {
                    Ok(v) if v.is_finite() => Cell::Numeric(v),
                    _ => {
                        return Err(Error::Schema(format!(
                            "line {}: column '{}' expects a number, found '{}'",
                            row.line, spec.name, token
                        )))
                    }
                },
                AttributeKind::Nominal => match spec.value_index(token) {
                    Some(v) => Cell::Nominal(v),
                    None => {
                        return Err(Error::Schema(format!(
                            "line {}: column '{}' has unknown value '{}'",
                            row.line, spec.name, token
                        )))
                    }
                },
            };
            cells.push(cell);
        }
        out.push(Instance::new(cells));
    }
    Ok(out)
}

/// Writes a dataset as CSV with a header row. Numbers use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(d: &Dataset, writer: W, missing_token: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(d.schema.iter().map(|s| s.name.as_str()))?;
    let mut record = Vec::with_capacity(d.schema.len());
    for inst in &d.instances {
        record.clear();
        for (spec, cell) in d.schema.iter().zip(&inst.cells) {
            record.push(match *cell {
                Cell::Missing => missing_token.to_string(),
                Cell::Numeric(v) => format!("{v}"),
                Cell::Nominal(v) => spec.nominal_values[v].clone(),
            });
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_csv(d, std::io::BufWriter::new(file), "?")
}

// ---------------------------------------------------------------------------
// Folds

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified fold ids for a list of group labels: each group is shuffled
/// with the seed, then all groups are dealt round-robin with one running
/// counter so that overall fold sizes also differ by at most one.
pub fn stratified_fold_ids(labels: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let groups = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_group: Vec<Vec<usize>> = vec![Vec::new(); groups];
    for (i, &l) in labels.iter().enumerate() {
        by_group[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for members in &mut by_group {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    fold_of
}

pub fn stratified_k_folds(d: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if k > d.len() {
        return Err(Error::invalid(format!(
            "k = {} exceeds the {} available instances",
            k,
            d.len()
        )));
    }
    // Unlabelled rows form their own stratum.
    let unlabelled = d.num_classes();
    let labels: Vec<usize> = (0..d.len())
        .map(|i| d.class_of(i).unwrap_or(unlabelled))
        .collect();
    Ok(FoldAssignment {
        k,
        fold_of: stratified_fold_ids(&labels, k, seed),
    })
}
