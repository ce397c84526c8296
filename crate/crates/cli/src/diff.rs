use crate::report::Table;
use serde::Serialize;
use std::path::Path;

#[derive(Clone, Debug, Serialize)]
pub struct ColumnDrift {
    pub name: String,
    pub max_abs_drift: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftSummary {
    pub rows: usize,
    pub columns: Vec<ColumnDrift>,
    pub max_drift: f64,
}

/// Per-column max |a − b| over matching rows. NaN in both files counts as equal.
pub fn diff_tables(a: &Table, b: &Table, only: Option<&[String]>) -> Result<DriftSummary, String> {
    if a.header != b.header {
        return Err(format!("schema mismatch: {:?} vs {:?}", a.header, b.header));
    }
    if a.rows.len() != b.rows.len() {
        return Err(format!(
            "row count mismatch: {} vs {}",
            a.rows.len(),
            b.rows.len()
        ));
    }
    let picked: Vec<usize> = match only {
        None => (0..a.header.len()).collect(),
        Some(names) => names
            .iter()
            .map(|n| {
                a.header
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| format!("no column named {n:?}"))
            })
            .collect::<Result<_, _>>()?,
    };
    let columns: Vec<ColumnDrift> = picked
        .iter()
        .map(|&c| {
            let drift = a.rows.iter().zip(&b.rows).fold(0.0f64, |acc, (ra, rb)| {
                let (x, y) = (ra[c], rb[c]);
                let d = if x.is_nan() && y.is_nan() {
                    0.0
                } else if x.is_nan() || y.is_nan() {
                    f64::INFINITY
                } else {
                    (x - y).abs()
                };
                acc.max(d)
            });
            ColumnDrift {
                name: a.header[c].clone(),
                max_abs_drift: drift,
            }
        })
        .collect();
    let max_drift = columns.iter().map(|c| c.max_abs_drift).fold(0.0, f64::max);
    Ok(DriftSummary {
        rows: a.rows.len(),
        columns,
        max_drift,
    })
}

/// Experiment kind from the metadata file next to a CSV, when there is one.
fn kind_of(csv: &Path) -> Option<String> {
    let text = std::fs::read_to_string(csv.with_extension("json")).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("kind")?.as_str().map(str::to_string)
}

pub fn diff_reports(a: &Path, b: &Path, only: Option<&[String]>) -> Result<DriftSummary, String> {
    if let (Some(ka), Some(kb)) = (kind_of(a), kind_of(b)) {
        if ka != kb {
            return Err(format!("experiment kinds differ: {ka} vs {kb}"));
        }
    }
    diff_tables(&Table::read_csv(a)?, &Table::read_csv(b)?, only)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[[f64; 2]]) -> Table {
        let mut t = Table::new(&["s", "F"]);
        for r in rows {
            t.push(r.to_vec());
        }
        t
    }

    #[test]
    fn identical_is_zero() {
        let t = table(&[[0.0, 0.5], [1.0, f64::NAN]]);
        let d = diff_tables(&t, &t, None).unwrap();
        assert_eq!(d.max_drift, 0.0);
    }

    #[test]
    fn drift_and_column_selection() {
        let a = table(&[[0.0, 0.5], [1.0, 0.7]]);
        let b = table(&[[0.0, 0.5], [2.0, 0.6]]);
        let d = diff_tables(&a, &b, None).unwrap();
        assert_eq!(d.columns[0].max_abs_drift, 1.0);
        assert!((d.columns[1].max_abs_drift - 0.1).abs() < 1e-15);
        let only = ["F".to_string()];
        let d = diff_tables(&a, &b, Some(&only)).unwrap();
        assert_eq!(d.columns.len(), 1);
        assert!(diff_tables(&a, &b, Some(&["G".to_string()])).is_err());
    }

    #[test]
    fn schema_mismatch() {
        let a = table(&[[0.0, 0.5]]);
        let mut b = Table::new(&["s", "G"]);
        b.push(vec![0.0, 0.5]);
        assert!(diff_tables(&a, &b, None).is_err());
        assert!(diff_tables(&a, &table(&[[0.0, 0.5], [1.0, 1.0]]), None).is_err());
    }
}
