//! JSON documents for runs: metadata, page snapshots and tower profiles.

pub mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError};
use crate::engine::{PageCell, PageData, TowerLength, TowerProfile, V1Variant};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad representative: {0}")]
    Algebra(#[from] AlgebraError),
    #[error("inconsistent document: {0}")]
    Inconsistent(String),
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub case: String,
    pub p: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(rename = "D")]
    pub max_degree: i64,
    pub localized: bool,
    pub variant: Option<V1Variant>,
    #[serde(default)]
    pub conjectural: bool,
    pub version: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bidegree {
    pub t: i64,
    pub s: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub t: i64,
    pub s: i64,
    pub dim: usize,
    pub reps: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub indeterminate: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialEntry {
    pub from: Bidegree,
    pub to: Bidegree,
    pub rank: usize,
    /// Rows are source representatives, columns target representatives.
    #[serde(default)]
    pub matrix: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageEntry {
    pub r: u32,
    pub classes: Vec<ClassEntry>,
    pub differentials: Vec<DifferentialEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerEntry {
    pub t: i64,
    pub lengths: Vec<TowerLength>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub meta: Meta,
    pub pages: Vec<PageEntry>,
    pub towers: Vec<TowerEntry>,
}

/// Serializes a page with representatives written over `e1`.
pub fn page_entry(page: &PageData, e1: &Algebra, ascii: bool) -> PageEntry {
    let f = e1.field();
    let mut classes = Vec::new();
    let mut differentials = Vec::new();
    for cell in page.cells.values() {
        classes.push(ClassEntry {
            t: cell.t,
            s: cell.s,
            dim: cell.dim(),
            reps: cell.reps.iter().map(|x| e1.format_element(x, ascii)).collect(),
            indeterminate: cell.indeterminate,
        });
        if let Some(((tt, ts), m)) = &cell.differential {
            differentials.push(DifferentialEntry {
                from: Bidegree { t: cell.t, s: cell.s },
                to: Bidegree { t: *tt, s: *ts },
                rank: cell.rank(f),
                matrix: m.clone(),
            });
        }
    }
    PageEntry { r: page.r, classes, differentials }
}

/// Inverse of [`page_entry`].
pub fn page_from_entry(entry: &PageEntry, e1: &Algebra) -> Result<PageData, IoError> {
    let mut cells = BTreeMap::new();
    for c in &entry.classes {
        let reps = c.reps.iter().map(|r| e1.parse_element(r)).collect::<Result<Vec<_>, _>>()?;
        if reps.len() != c.dim {
            return Err(IoError::Inconsistent(format!("dim {} but {} reps at ({}, {})", c.dim, reps.len(), c.t, c.s)));
        }
        cells.insert((c.t, c.s), PageCell { t: c.t, s: c.s, reps, differential: None, indeterminate: c.indeterminate });
    }
    for d in &entry.differentials {
        let cell = cells
            .get_mut(&(d.from.t, d.from.s))
            .ok_or_else(|| IoError::Inconsistent(format!("differential from missing class ({}, {})", d.from.t, d.from.s)))?;
        cell.differential = Some(((d.to.t, d.to.s), d.matrix.clone()));
    }
    Ok(PageData { r: entry.r, cells })
}

pub fn tower_entries(profile: &TowerProfile) -> Vec<TowerEntry> {
    profile.columns().map(|(t, col)| TowerEntry { t, lengths: col.to_vec() }).collect()
}

pub fn profile_from_entries(entries: &[TowerEntry]) -> TowerProfile {
    let mut p = TowerProfile::new();
    for e in entries {
        for &l in &e.lengths {
            p.add(e.t, l);
        }
    }
    p
}

pub fn document(meta: Meta, pages: &[PageData], profile: &TowerProfile, e1: &Algebra, ascii: bool) -> Document {
    Document {
        meta,
        pages: pages.iter().map(|p| page_entry(p, e1, ascii)).collect(),
        towers: tower_entries(profile),
    }
}

pub fn emit_json(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> Result<Document, IoError> {
    Ok(serde_json::from_str(text)?)
}
