use std::fs;
use std::path::Path;

use super::{Dataset, Unit};
use crate::error::{Error, Result};

/// Row count of the UCI airfoil self-noise file.
pub const AIRFOIL_ROWS: usize = 1503;

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub x: Vec<String>,
    pub y: Option<String>,
    pub t: Option<String>,
    pub delimiter: u8,
}

impl CsvSchema {
    pub fn new<S: Into<String>>(x: impl IntoIterator<Item = S>) -> Self {
        Self {
            x: x.into_iter().map(Into::into).collect(),
            y: None,
            t: None,
            delimiter: b',',
        }
    }

    pub fn with_y(mut self, col: impl Into<String>) -> Self {
        self.y = Some(col.into());
        self
    }

    pub fn with_t(mut self, col: impl Into<String>) -> Self {
        self.t = Some(col.into());
        self
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }
}

fn parse_num(field: &str, row: usize, col: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        row,
        message: format!("column `{col}`: cannot parse `{field}` as a number"),
    })
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f == "NA"
}

/// Read a headed CSV into a [`Dataset`].
///
/// Missing outcomes are empty fields or `NA`. With a `t` column, rows with
/// `t = 1` lose their outcome and rows with `t = 0` must have one. Without a
/// `t` column a row is a target unit exactly when its outcome is missing.
/// Row numbers in errors count data rows from 1.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    if schema.x.is_empty() {
        return Err(Error::Schema("at least one covariate column is required".into()));
    }
    let x_idx = schema.x.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let y_idx = schema.y.as_deref().map(find).transpose()?;
    let t_idx = schema.t.as_deref().map(find).transpose()?;

    let mut units = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        let field = |i: usize| {
            record.get(i).ok_or_else(|| Error::Parse {
                row,
                message: format!("expected at least {} fields", i + 1),
            })
        };
        let x = x_idx
            .iter()
            .zip(&schema.x)
            .map(|(&i, name)| parse_num(field(i)?, row, name))
            .collect::<Result<Vec<_>>>()?;
        let y = match y_idx {
            Some(i) if !is_missing(field(i)?) => {
                Some(parse_num(field(i)?, row, schema.y.as_deref().unwrap_or("y"))?)
            }
            _ => None,
        };
        let target = match t_idx {
            Some(i) => {
                let name = schema.t.as_deref().unwrap_or("t");
                match parse_num(field(i)?, row, name)? {
                    0.0 => false,
                    1.0 => true,
                    v => {
                        return Err(Error::Parse {
                            row,
                            message: format!("column `{name}` must be 0 or 1, got {v}"),
                        })
                    }
                }
            }
            None => y.is_none(),
        };
        let unit = match (target, y) {
            (true, _) => Unit::target(x),
            (false, Some(y)) => Unit::labeled(x, y),
            (false, None) => {
                return Err(Error::Parse {
                    row,
                    message: "labeled row (t = 0) has no outcome".into(),
                })
            }
        };
        units.push(unit);
    }
    if units.is_empty() {
        return Err(Error::Schema("file has no data rows".into()));
    }
    Dataset::new(units)
}

/// Read the UCI airfoil self-noise file.
///
/// Expects six whitespace- or tab-separated numeric columns (frequency,
/// angle of attack, chord length, free-stream velocity, suction side
/// displacement thickness, sound pressure level); a leading header line is
/// skipped. Frequency and displacement thickness are log-transformed. All
/// units come back labeled.
pub fn load_airfoil(path: impl AsRef<Path>) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut units = Vec::with_capacity(AIRFOIL_ROWS);
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(['\t', ',', ' ']).filter(|f| !f.is_empty()).collect();
        if fields.len() != 6 {
            return Err(Error::Schema(format!(
                "airfoil line {} has {} columns, expected 5 features and a response",
                k + 1,
                fields.len()
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let vals = match parsed {
            Ok(v) => v,
            Err(_) if k == 0 && units.is_empty() => continue,
            Err(_) => {
                return Err(Error::Parse {
                    row: k + 1,
                    message: format!("cannot parse airfoil line `{line}`"),
                })
            }
        };
        if vals[0] <= 0.0 || vals[4] <= 0.0 {
            return Err(Error::Parse {
                row: k + 1,
                message: "frequency and displacement thickness must be positive".into(),
            });
        }
        let x = vec![vals[0].ln(), vals[1], vals[2], vals[3], vals[4].ln()];
        units.push(Unit::labeled(x, vals[5]));
    }
    if units.len() != AIRFOIL_ROWS {
        log::warn!("airfoil file has {} rows, expected {AIRFOIL_ROWS}", units.len());
    }
    Dataset::new(units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_mixed_rows() {
        let f = write("x1,x2,y,t\n0,0,1,0\n1,1,2,0\n2,2,,1\n");
        let schema = CsvSchema::new(["x1", "x2"]).with_y("y").with_t("t");
        let ds = load_csv(f.path(), &schema).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.n_target(), 1);
        assert_eq!(ds.units()[1].y(), Some(2.0));
    }

    #[test]
    fn target_rows_drop_their_outcome() {
        let f = write("x,y,t\n0,5,1\n1,NA,1\n2,3,0\n");
        let ds = load_csv(f.path(), &CsvSchema::new(["x"]).with_y("y").with_t("t")).unwrap();
        assert_eq!(ds.units()[0].y(), None);
        assert_eq!(ds.n_target(), 2);
    }

    #[test]
    fn missing_outcome_on_labeled_row() {
        let f = write("x,y,t\n0,1,0\n1,,0\n");
        let err = load_csv(f.path(), &CsvSchema::new(["x"]).with_y("y").with_t("t")).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
    }

    #[test]
    fn malformed_number_names_the_row() {
        let f = write("x,y\n0,1\n1,2\nabc,3\n");
        let err = load_csv(f.path(), &CsvSchema::new(["x"]).with_y("y")).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let f = write("a,b\n0,1\n");
        let err = load_csv(f.path(), &CsvSchema::new(["x"])).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn without_t_column_missing_y_means_target() {
        let f = write("x\ty\n0\t1\n1\tNA\n");
        let schema = CsvSchema::new(["x"]).with_y("y").with_delimiter(b'\t');
        let ds = load_csv(f.path(), &schema).unwrap();
        assert_eq!(ds.n_target(), 1);
    }

    #[test]
    fn airfoil_log_transform() {
        let f = write("800\t0\t0.3048\t71.3\t0.00266337\t126.201\n1000\t0\t0.3048\t71.3\t0.00266337\t125.201\n");
        let ds = load_airfoil(f.path()).unwrap();
        assert_eq!(ds.dim(), 5);
        assert_eq!(ds.len(), 2);
        let u = &ds.units()[0];
        assert_eq!(u.x()[0], 800f64.ln());
        assert_eq!(u.x()[4], 0.00266337f64.ln());
        assert_eq!(u.x()[3], 71.3);
        assert_eq!(u.y(), Some(126.201));
        assert_eq!(ds.n_target(), 0);
    }

    #[test]
    fn airfoil_with_extra_feature_column() {
        let f = write("800\t0\t0.3\t71.3\t0.002\t1.0\t126.2\n");
        assert!(matches!(load_airfoil(f.path()), Err(Error::Schema(_))));
    }

    #[test]
    fn airfoil_header_is_skipped() {
        let f = write("freq angle chord vel thick spl\n800 0 0.3 71.3 0.002 126.2\n");
        assert_eq!(load_airfoil(f.path()).unwrap().len(), 1);
    }
}
