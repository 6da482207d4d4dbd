//! Column tables and design-matrix encoding.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{Result, StatsError};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Text(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn level(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => format!("{}", v[row]),
            Column::Text(v) => v[row].clone(),
        }
    }
}

/// Named columns of equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    names: Vec<String>,
    columns: Vec<Column>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn push(&mut self, name: impl Into<String>, column: Column) -> Result<()> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(StatsError::DuplicateColumn(name));
        }
        if !self.columns.is_empty() && column.len() != self.n_rows() {
            return Err(StatsError::RaggedColumn {
                column: name,
                expected: self.n_rows(),
                actual: column.len(),
            });
        }
        self.names.push(name);
        self.columns.push(column);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, column: Column) -> Result<Self> {
        self.push(name, column)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Result<&Column> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| StatsError::UnknownColumn(name.to_string()))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64]> {
        match self.get(name)? {
            Column::Numeric(v) => Ok(v),
            Column::Text(_) => Err(StatsError::NotNumeric(name.to_string())),
        }
    }

    /// Reads a headed CSV. A column is numeric when every cell parses as f64.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        for record in rdr.records() {
            let record = record?;
            for (col, value) in cells.iter_mut().zip(record.iter()) {
                col.push(value.to_string());
            }
        }
        let mut table = Table::new();
        for (name, values) in names.into_iter().zip(cells) {
            let parsed: Option<Vec<f64>> = values.iter().map(|v| v.trim().parse().ok()).collect();
            let column = match parsed {
                Some(nums) if !values.is_empty() => Column::Numeric(nums),
                _ => Column::Text(values),
            };
            table.push(name, column)?;
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    Continuous {
        column: String,
    },
    /// One indicator per level other than `reference`; the lowest level is
    /// the reference when none is given.
    Categorical {
        column: String,
        reference: Option<String>,
    },
    /// 0/1 columns passed through as they are.
    DummyBlock {
        columns: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub response: String,
    pub terms: Vec<Term>,
    pub intercept: bool,
}

impl DesignSpec {
    pub fn new(response: impl Into<String>) -> Self {
        Self {
            response: response.into(),
            terms: Vec::new(),
            intercept: true,
        }
    }

    pub fn continuous(mut self, column: impl Into<String>) -> Self {
        self.terms.push(Term::Continuous {
            column: column.into(),
        });
        self
    }

    pub fn categorical(mut self, column: impl Into<String>, reference: Option<&str>) -> Self {
        self.terms.push(Term::Categorical {
            column: column.into(),
            reference: reference.map(str::to_string),
        });
        self
    }

    pub fn dummies<S: Into<String>>(mut self, columns: impl IntoIterator<Item = S>) -> Self {
        self.terms.push(Term::DummyBlock {
            columns: columns.into_iter().map(Into::into).collect(),
        });
        self
    }

    pub fn without_intercept(mut self) -> Self {
        self.intercept = false;
        self
    }
}

/// Dense row-major matrix with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    names: Vec<String>,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_rows(names: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let cols = names.len();
        if cols == 0 || data.is_empty() {
            return Err(StatsError::Empty);
        }
        if data.len() % cols != 0 {
            return Err(StatsError::RaggedColumn {
                column: "<matrix>".into(),
                expected: cols,
                actual: data.len() % cols,
            });
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(StatsError::DuplicateColumn(n.clone()));
            }
        }
        Ok(Self {
            rows: data.len() / cols,
            names,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.cols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDesign {
    pub matrix: DesignMatrix,
    pub response: Vec<f64>,
}

fn sorted_levels(column: &Column) -> Vec<String> {
    match column {
        Column::Numeric(v) => {
            let mut vals = v.clone();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            vals.into_iter().map(|x| format!("{x}")).collect()
        }
        Column::Text(v) => {
            let set: std::collections::BTreeSet<&String> = v.iter().collect();
            set.into_iter().cloned().collect()
        }
    }
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(StatsError::NonFinite {
            column: name.to_string(),
            row,
        }),
        None => Ok(()),
    }
}

/// Expands `spec` over `table`: intercept first, then terms in order,
/// categorical levels in sorted order.
pub fn encode_design(table: &Table, spec: &DesignSpec) -> Result<EncodedDesign> {
    let n = table.n_rows();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let response = table.numeric(&spec.response)?.to_vec();
    check_finite(&spec.response, &response)?;

    let mut names: Vec<String> = Vec::new();
    // column-major while building
    let mut cols: Vec<Vec<f64>> = Vec::new();
    if spec.intercept {
        names.push("Intercept".into());
        cols.push(vec![1.0; n]);
    }
    for term in &spec.terms {
        match term {
            Term::Continuous { column } => {
                let v = table.numeric(column)?;
                check_finite(column, v)?;
                names.push(column.clone());
                cols.push(v.to_vec());
            }
            Term::Categorical { column, reference } => {
                let col = table.get(column)?;
                let levels = sorted_levels(col);
                let reference = match reference {
                    Some(r) if levels.contains(r) => r.clone(),
                    Some(r) => {
                        return Err(StatsError::MissingReference {
                            column: column.clone(),
                            level: r.clone(),
                        })
                    }
                    None => levels[0].clone(),
                };
                let index: BTreeMap<&str, usize> = levels
                    .iter()
                    .filter(|l| **l != reference)
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i))
                    .collect();
                let base = cols.len();
                for level in levels.iter().filter(|l| **l != reference) {
                    names.push(format!("{column}={level}"));
                    cols.push(vec![0.0; n]);
                }
                #[allow(clippy::needless_range_loop)]
                for row in 0..n {
                    if let Some(&i) = index.get(col.level(row).as_str()) {
                        cols[base + i][row] = 1.0;
                    }
                }
            }
            Term::DummyBlock { columns } => {
                for column in columns {
                    let v = table.numeric(column)?;
                    if let Some(row) = v.iter().position(|&x| x != 0.0 && x != 1.0) {
                        return Err(StatsError::NotDummy {
                            column: column.clone(),
                            row,
                            value: v[row],
                        });
                    }
                    names.push(column.clone());
                    cols.push(v.to_vec());
                }
            }
        }
    }
    let p = cols.len();
    let mut data = vec![0.0; n * p];
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            data[i * p + j] = x;
        }
    }
    Ok(EncodedDesign {
        matrix: DesignMatrix::from_rows(names, data)?,
        response,
    })
}
