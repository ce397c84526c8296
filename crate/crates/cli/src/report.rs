use serde::Serialize;
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

/// A numeric table; one CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> csv::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            // Display for f64 is shortest round-trip, so re-reading is exact
            w.write_record(r.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, String> {
        let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| format!("{}: {e}", path.display()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| format!("{}: {e}", path.display()))?;
            let row = rec
                .iter()
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| {
                        format!(
                            "{}: row {} has non-numeric field {f:?}",
                            path.display(),
                            i + 1
                        )
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when value ≤ tolerance.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            tolerance: 1.0,
            passed: ok,
        }
    }
}

/// Experiment output before it touches disk.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    pub checks: Vec<Check>,
    pub extra: Map<String, Value>,
    pub stages: Vec<(String, f64)>,
}

impl Outcome {
    pub fn new(table: Table) -> Self {
        Self {
            table,
            checks: Vec::new(),
            extra: Map::new(),
            stages: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Serialize)]
struct Metadata<'a, C: Serialize> {
    kind: &'a str,
    version: &'a str,
    core_version: &'a str,
    data: String,
    config: &'a C,
    checks: &'a [Check],
    all_passed: bool,
    extra: &'a Map<String, Value>,
    timings: Map<String, Value>,
}

/// Writes `<kind>.csv` and `<kind>.json` under `dir`; returns both paths.
pub fn write_outcome<C: Serialize>(
    dir: &Path,
    kind: &str,
    config: &C,
    outcome: &Outcome,
    total_seconds: f64,
) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{kind}.csv"));
    let json_path = dir.join(format!("{kind}.json"));
    outcome
        .table
        .write_csv(&csv_path)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let mut timings = Map::new();
    for (name, secs) in &outcome.stages {
        timings.insert(name.clone(), Value::from(*secs));
    }
    timings.insert("total".into(), Value::from(total_seconds));
    let meta = Metadata {
        kind,
        version: env!("CARGO_PKG_VERSION"),
        core_version: rmt_edge::VERSION,
        data: format!("{kind}.csv"),
        config,
        checks: &outcome.checks,
        all_passed: outcome.passed(),
        extra: &outcome.extra,
        timings,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?;
    std::fs::write(&json_path, text + "\n")?;
    Ok((csv_path, json_path))
}
