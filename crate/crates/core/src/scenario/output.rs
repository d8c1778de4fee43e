//! Result tables and their CSV / plot-data files.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::ScenarioError;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            // shortest round-trip decimal form, never exponent notation
            Value::Float(x) => write!(f, "{x}"),
            Value::Text(s) => f.write_str(s),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<u32> for Value {
    fn from(x: u32) -> Self {
        Value::Int(x as i64)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x as i64)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

/// Rows in sweep order under a fixed column schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Column whose value separates plot series.
    pub series: Option<String>,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        ResultTable {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            series: None,
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        ResultTable { name: name.to_string(), columns, rows: Vec::new(), series: None }
    }

    pub fn series_by(mut self, column: &str) -> Self {
        self.series = Some(column.to_string());
        self
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric value at `(row, column)`, if the cell holds a number.
    pub fn number(&self, row: usize, column: &str) -> Option<f64> {
        match self.rows.get(row)?.get(self.column(column)?)? {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn text(&self, row: usize, column: &str) -> Option<String> {
        self.rows.get(row)?.get(self.column(column)?).map(|v| v.to_string())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> ScenarioError {
    ScenarioError::Io { path: path.display().to_string(), message: e.to_string() }
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<(), ScenarioError> {
    if table.is_empty() {
        return Err(ScenarioError::EmptyTable(table.name.clone()));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(&table.columns).map_err(|e| io_err(path, e))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Whitespace-separated blocks, one per series value, separated by two
/// blank lines so gnuplot can address them with `index`.
pub fn emit_plotdata(table: &ResultTable, path: &Path) -> Result<(), ScenarioError> {
    if table.is_empty() {
        return Err(ScenarioError::EmptyTable(table.name.clone()));
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let cell = |v: &Value| {
        let s = v.to_string();
        if s.contains(char::is_whitespace) || s.is_empty() {
            format!("\"{s}\"")
        } else {
            s
        }
    };
    let mut out = String::new();
    out.push_str(&format!("# {}\n# {}\n", table.name, table.columns.join(" ")));
    let key = table.series.as_ref().and_then(|s| table.column(s));
    let mut groups: Vec<(String, Vec<&Vec<Value>>)> = Vec::new();
    for row in &table.rows {
        let label = key.map(|k| row[k].to_string()).unwrap_or_default();
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, rows)) => rows.push(row),
            None => groups.push((label, vec![row])),
        }
    }
    for (i, (label, rows)) in groups.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        if let Some(s) = &table.series {
            out.push_str(&format!("# {s} = {label}\n"));
        }
        for row in rows {
            out.push_str(&row.iter().map(cell).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
    }
    w.write_all(out.as_bytes()).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ResultTable {
        let mut t = ResultTable::new("demo", &["p", "name", "value"]).series_by("p");
        t.push(vec![0.5.into(), "a".into(), 1.25.into()]);
        t.push(vec![1.0.into(), "b c".into(), 1e-7.into()]);
        t.push(vec![0.5.into(), "d".into(), Value::Int(3)]);
        t
    }

    #[test]
    fn one_row_gives_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = ResultTable::new("one", &["x", "y"]);
        t.push(vec![1.5.into(), true.into()]);
        let path = dir.path().join("one.csv");
        emit_csv(&t, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x,y\n1.5,true\n");
    }

    #[test]
    fn floats_are_plain_decimals() {
        assert_eq!(Value::Float(1e-7).to_string(), "0.0000001");
        assert_eq!(Value::Float(2.0).to_string(), "2");
    }

    #[test]
    fn empty_table_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let t = ResultTable::new("none", &["x"]);
        assert!(matches!(emit_csv(&t, &dir.path().join("x.csv")), Err(ScenarioError::EmptyTable(_))));
    }

    #[test]
    fn plotdata_groups_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demo.dat");
        emit_plotdata(&table(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "# demo\n# p name value\n# p = 0.5\n0.5 a 1.25\n0.5 d 3\n\n\n# p = 1\n1 \"b c\" 0.0000001\n"
        );
    }

    #[test]
    fn rewriting_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        emit_csv(&table(), &a).unwrap();
        emit_csv(&table(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
