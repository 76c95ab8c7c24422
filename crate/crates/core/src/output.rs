//! Atomic result files and CSV formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::assembly::FieldSolution;
use crate::error::{Error, Result};
use crate::linsolve::KrylovReport;
use crate::pointcloud::PointCloud;

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Field CSV `x,y,u,v,p`.
pub fn field_csv(cloud: &PointCloud, solution: &FieldSolution) -> String {
    let mut s = String::from("x,y,u,v,p\n");
    for (i, x) in cloud.positions.iter().enumerate() {
        let u = solution.velocity[i];
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt17(x[0]),
            fmt17(x[1]),
            fmt17(u[0]),
            fmt17(u[1]),
            fmt17(solution.pressure[i])
        );
    }
    s
}

pub fn krylov_csv<'a>(reports: impl IntoIterator<Item = &'a KrylovReport>) -> String {
    let mut s = format!("{}\n", KrylovReport::CSV_HEADER);
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn krylov_json(r: &KrylovReport) -> Value {
    serde_json::json!({
        "dofs": r.dofs,
        "iterations": r.iterations,
        "residual": r.relative_residual,
        "setup_s": r.setup_s,
        "solve_s": r.solve_s,
        "amg_fallback": r.fallback,
    })
}

/// Output directory collecting named files and JSON-lines summary records.
pub struct OutputDir {
    root: PathBuf,
    summary: Vec<Value>,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputDir {
            root: root.into(),
            summary: Vec::new(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<()> {
        write_atomic(&self.path(name), contents.as_bytes())
    }

    pub fn record(&mut self, line: Value) {
        self.summary.push(line);
    }

    /// Writes `summary.jsonl`, one JSON object per line.
    pub fn finish(&self) -> Result<()> {
        let mut s = String::new();
        for v in &self.summary {
            s.push_str(&v.to_string());
            s.push('\n');
        }
        self.write("summary.jsonl", &s)
    }
}
