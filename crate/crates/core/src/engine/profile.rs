//! Tower profiles and their comparison.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Length of a v-tower. Ordered `Finite < Infinite < Unknown`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TowerLength {
    Finite(u64),
    Infinite,
    /// The engine could not decide this entry inside its window.
    Unknown,
}

impl fmt::Display for TowerLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TowerLength::Finite(k) => write!(f, "{k}"),
            TowerLength::Infinite => write!(f, "inf"),
            TowerLength::Unknown => write!(f, "unknown"),
        }
    }
}

impl Serialize for TowerLength {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TowerLength::Finite(k) => s.serialize_u64(*k),
            TowerLength::Infinite => s.serialize_str("inf"),
            TowerLength::Unknown => s.serialize_str("unknown"),
        }
    }
}

impl<'de> Deserialize<'de> for TowerLength {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = TowerLength;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer, \"inf\" or \"unknown\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<TowerLength, E> {
                Ok(TowerLength::Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<TowerLength, E> {
                u64::try_from(v).map(TowerLength::Finite).map_err(|_| E::custom("negative tower length"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<TowerLength, E> {
                match v {
                    "inf" => Ok(TowerLength::Infinite),
                    "unknown" => Ok(TowerLength::Unknown),
                    other => Err(E::custom(format!("bad tower length {other:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Per-degree multisets of tower lengths, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerProfile {
    columns: BTreeMap<i64, Vec<TowerLength>>,
}

impl TowerProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, t: i64, len: TowerLength) {
        let col = self.columns.entry(t).or_default();
        let at = col.partition_point(|x| *x <= len);
        col.insert(at, len);
    }

    pub fn add_many(&mut self, t: i64, len: TowerLength, count: usize) {
        for _ in 0..count {
            self.add(t, len);
        }
    }

    /// Profile with `dim` infinite towers in each listed degree.
    pub fn from_dims(dims: &BTreeMap<i64, usize>) -> Self {
        let mut out = TowerProfile::new();
        for (&t, &d) in dims {
            out.add_many(t, TowerLength::Infinite, d);
        }
        out
    }

    pub fn column(&self, t: i64) -> &[TowerLength] {
        self.columns.get(&t).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn columns(&self) -> impl Iterator<Item = (i64, &[TowerLength])> {
        self.columns.iter().map(|(&t, v)| (t, v.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn len(&self) -> usize {
        self.columns.values().map(Vec::len).sum()
    }

    /// Entries in degrees `0..=max_degree` only.
    pub fn restricted(&self, max_degree: i64) -> TowerProfile {
        TowerProfile { columns: self.columns.range(..=max_degree).map(|(&t, v)| (t, v.clone())).collect() }
    }

    pub fn count(&self, len: TowerLength) -> usize {
        self.columns.values().flatten().filter(|&&x| x == len).count()
    }

    /// Degrees carrying at least one tower of the given length.
    pub fn degrees_with(&self, len: TowerLength) -> Vec<i64> {
        self.columns.iter().filter(|(_, v)| v.contains(&len)).map(|(&t, _)| t).collect()
    }
}

impl fmt::Display for TowerProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, col) in &self.columns {
            let items: Vec<String> = col.iter().map(ToString::to_string).collect();
            writeln!(f, "{t:>6}  {}", items.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDiff {
    pub t: i64,
    pub engine: Vec<TowerLength>,
    pub oracle: Vec<TowerLength>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub mismatches: Vec<ColumnDiff>,
    /// Columns that agree only because of `unknown` engine entries.
    pub unverified: Vec<ColumnDiff>,
}

impl DiffReport {
    pub fn is_match(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// No mismatches and nothing left unverified.
    pub fn is_exact(&self) -> bool {
        self.mismatches.is_empty() && self.unverified.is_empty()
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &[TowerLength]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        for d in &self.mismatches {
            writeln!(f, "mismatch   t={:<6} engine=[{}] oracle=[{}]", d.t, show(&d.engine), show(&d.oracle))?;
        }
        for d in &self.unverified {
            writeln!(f, "unverified t={:<6} engine=[{}] oracle=[{}]", d.t, show(&d.engine), show(&d.oracle))?;
        }
        write!(f, "{} mismatches, {} unverified", self.mismatches.len(), self.unverified.len())
    }
}

/// Column-by-column multiset comparison over degrees `0..=max_degree`.
///
/// An engine column holding `unknown` entries matches when its other entries form a
/// sub-multiset of the oracle column and the sizes agree; it is then listed as unverified.
pub fn compare(engine: &TowerProfile, oracle: &TowerProfile, max_degree: i64) -> DiffReport {
    let mut degrees: Vec<i64> = engine.columns.keys().chain(oracle.columns.keys()).copied().collect();
    degrees.sort_unstable();
    degrees.dedup();
    let mut report = DiffReport::default();
    for t in degrees.into_iter().filter(|&t| t <= max_degree) {
        let e = engine.column(t);
        let o = oracle.column(t);
        if e == o {
            continue;
        }
        let diff = ColumnDiff { t, engine: e.to_vec(), oracle: o.to_vec() };
        let known: Vec<TowerLength> = e.iter().copied().filter(|&x| x != TowerLength::Unknown).collect();
        if known.len() < e.len() && e.len() == o.len() && is_submultiset(&known, o) {
            report.unverified.push(diff);
        } else {
            report.mismatches.push(diff);
        }
    }
    report
}

fn is_submultiset(small: &[TowerLength], big: &[TowerLength]) -> bool {
    let mut rest = big.to_vec();
    for x in small {
        match rest.iter().position(|y| y == x) {
            Some(i) => {
                rest.swap_remove(i);
            }
            None => return false,
        }
    }
    true
}
