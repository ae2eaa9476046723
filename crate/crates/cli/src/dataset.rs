//! CSV datasets: a header naming each column with its unit, numeric rows, and
//! trailing `# key = value` metadata lines.

use crate::error::{CliError, CliResult};

/// Shortest round-tripping decimal, switching to exponent notation outside
/// `[1e-3, 1e7)`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-3..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvDataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
}

impl CsvDataset {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    /// Builds a dataset from equally long columns.
    pub fn from_columns(columns: Vec<(&str, Vec<f64>)>) -> Self {
        let n = columns.first().map_or(0, |c| c.1.len());
        assert!(columns.iter().all(|c| c.1.len() == n), "ragged columns");
        let mut ds = Self::new(columns.iter().map(|c| c.0.to_string()).collect());
        ds.rows = (0..n).map(|i| columns.iter().map(|c| c.1[i]).collect()).collect();
        ds
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn meta_values<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.metadata.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[index]).collect()
    }

    pub fn column_index(&self, name_prefix: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.split(" (").next() == Some(name_prefix))
    }

    /// Checks the schema invariants before writing.
    pub fn validate(&self) -> CliResult<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(CliError::invalid("dataset", format!("row {} has {} columns", i + 1, row.len())));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(CliError::invalid("dataset", format!("row {} holds non-finite value {v}", i + 1)));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        let mut metadata = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let at = |col: usize| format!("{}:{}", i + 1, col + 1);
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(" = ") {
                    metadata.push((k.trim().to_string(), v.to_string()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let Some(header) = &columns else {
                columns = Some(line.split(',').map(|c| c.trim().to_string()).collect());
                continue;
            };
            let mut row = Vec::with_capacity(header.len());
            let mut col = 0;
            for cell in line.split(',') {
                let v: f64 = cell.trim().parse().map_err(|_| CliError::Parse {
                    location: at(col),
                    message: format!("`{}` is not a number", cell.trim()),
                })?;
                if !v.is_finite() {
                    return Err(CliError::Parse {
                        location: at(col),
                        message: format!("non-finite value `{}`", cell.trim()),
                    });
                }
                row.push(v);
                col += cell.len() + 1;
            }
            if row.len() != header.len() {
                return Err(CliError::Parse {
                    location: at(0),
                    message: format!("expected {} columns, found {}", header.len(), row.len()),
                });
            }
            rows.push(row);
        }
        let columns = columns.ok_or_else(|| CliError::Usage("dataset is empty".into()))?;
        if rows.is_empty() {
            return Err(CliError::Usage("dataset has no data rows".into()));
        }
        Ok(Self {
            columns,
            rows,
            metadata,
        })
    }
}
