//! Run reports: a JSON document with every check, and a CSV summary with one row
//! per check. Floats in the CSV use the same text as in the JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certify::CdParams;
use crate::error::Result;
use crate::extended;
use crate::inequalities::InequalityReport;
use crate::run::RunConfig;

pub const CSV_HEADER: &str = "name,max_violation,tolerance,pass";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// The configuration that produced the report; re-running it reproduces it.
    pub config: RunConfig,
    pub params: CdParams,
    pub certified_rho1: f64,
    /// The first row is always the certification of `params`.
    pub reports: Vec<InequalityReport>,
    /// Checks left out of a default selection, with the reason.
    pub skipped: Vec<String>,
    pub pass: bool,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn csv(&self) -> String {
        summary_csv(&self.reports)
    }

    /// Write `<path>` (JSON) and `<path>.csv` with the extension replaced.
    pub fn write(&self, path: &Path) -> Result<(PathBuf, PathBuf)> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let csv_path = path.with_extension("csv");
        std::fs::write(path, self.to_json()?)?;
        std::fs::write(&csv_path, self.csv())?;
        Ok((path.to_path_buf(), csv_path))
    }
}

pub fn summary_csv(reports: &[InequalityReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.name,
            extended::format(r.max_violation),
            extended::format(r.tolerance),
            r.pass
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequalities::WorstCase;

    fn sample() -> RunReport {
        let params = CdParams::new(0.0, 0.5, 1.0, 2.0).unwrap();
        let row = InequalityReport {
            name: "li-yau-zero".into(),
            params,
            seed: Some(3),
            witnesses: 2,
            max_violation: 3.1954462410489165e-14,
            worst_case: Some(WorstCase { function: Some(1), t: Some(0.5), norm: None, point: None, lhs: 1.0, rhs: f64::INFINITY }),
            tolerance: 0.02,
            pass: true,
            details: vec![],
            notes: vec![],
        };
        let mut inf = row.clone();
        inf.name = "x".into();
        inf.max_violation = f64::INFINITY;
        inf.pass = false;
        RunReport {
            config: RunConfig::new("heisenberg-1", 3),
            params,
            certified_rho1: 0.0,
            reports: vec![row, inf],
            skipped: vec![],
            pass: false,
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let back = RunReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn csv_numbers_appear_in_json() {
        let r = sample();
        let json = r.to_json().unwrap();
        let csv = r.csv();
        assert!(csv.starts_with("name,max_violation,tolerance,pass\n"));
        for line in csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 4);
            for c in &cols[1..3] {
                let needle = if c.parse::<f64>().is_ok() { c.to_string() } else { format!("\"{c}\"") };
                assert!(json.contains(&needle), "{c} missing");
            }
        }
    }
}
