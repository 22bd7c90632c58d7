use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physical::{EdgeKind, ProcessClass, ProcessGraph, ProcessSpec};

pub const MANIFEST_VERSION: u32 = 1;

/// JSON description of a dataset: files, units, span, model structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    /// Seed that produced the data, when synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub span: Span,
    pub processes: Vec<ProcessEntry>,
    pub edges: Vec<EdgeEntry>,
    pub planned: PlannedEntry,
    pub capacity: PathBuf,
    pub curves: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_volumes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holidays: Option<PathBuf>,
    /// Historical clearing prices `date,hour,price`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PathBuf>,
    #[serde(default = "default_group_target")]
    pub group_target_mwh: f64,
}

fn default_group_target() -> f64 {
    1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub start: NaiveDate,
    pub days: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessEntry {
    pub name: String,
    pub class: ProcessClass,
    pub file: PathBuf,
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_source: Option<String>,
    #[serde(default)]
    pub nonnegative: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub target: String,
    pub source: String,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannedEntry {
    pub file: PathBuf,
    pub series: Vec<PlannedSeries>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannedSeries {
    pub name: String,
    /// Physical process this series plans.
    pub truth: String,
    pub unit: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Schema {
            file: path.display().to_string(),
            detail: e.to_string(),
        })?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Schema {
                file: path.display().to_string(),
                detail: format!("manifest version {} is not supported (expected {MANIFEST_VERSION})", m.version),
            });
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn graph(&self) -> Result<ProcessGraph> {
        let specs = self
            .processes
            .iter()
            .map(|p| {
                let mut s = ProcessSpec::new(&p.name, p.class);
                if let Some(src) = &p.capacity_source {
                    s = s.capacity_adjusted(src);
                }
                if p.nonnegative {
                    s = s.nonnegative();
                }
                s
            })
            .collect();
        let mut g = ProcessGraph::without_edges(specs)?;
        for e in &self.edges {
            g = g.with_edge(&e.target, &e.source, e.kind)?;
        }
        Ok(g)
    }

    /// Checks units: capacity-adjusted feed-in must be in MWh and every
    /// planned series must share its counterpart's unit.
    pub fn check_units(&self) -> Result<()> {
        for p in &self.processes {
            if p.capacity_source.is_some() && p.unit != "MWh" {
                return Err(Error::UnitMismatch {
                    series: p.name.clone(),
                    expected: "MWh".into(),
                    found: p.unit.clone(),
                });
            }
        }
        for s in &self.planned.series {
            let truth = self
                .processes
                .iter()
                .find(|p| p.name == s.truth)
                .ok_or_else(|| Error::InvalidInput(format!("planned series {} refers to unknown process {}", s.name, s.truth)))?;
            if truth.unit != s.unit {
                return Err(Error::UnitMismatch {
                    series: s.name.clone(),
                    expected: truth.unit.clone(),
                    found: s.unit.clone(),
                });
            }
        }
        Ok(())
    }
}
