//! Windowed multiplicative Bockstein spectral-sequence engine.
//!
//! E_1 = A[v] (or A[v^±]) is stored per bidegree as a subquotient `Z_r / B_r` of the
//! coordinate space of `A_c`, where `c = t − s|v|` is the v-free degree. Differentials
//! `d_r: (t, s) → (t − 1, s + r)` come from injected rules extended multiplicatively.
//! Near the window boundary the page can depend on data that was never computed; such
//! bidegrees are flagged, flags are propagated along differentials, and the tower profile
//! reports `unknown` instead of guessing.

mod profile;
mod schedule;

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use profile::{compare, ColumnDiff, DiffReport, TowerLength, TowerProfile};
pub use schedule::{
    schedule_conj, schedule_v0, schedule_v1, schedule_v2, DifferentialSchedule, Rule, V1Variant,
};

use crate::algebra::{Algebra, AlgebraError, Element, GeneratorSpec, Monomial};
use crate::field::Fp;
use crate::formulas::FormulaError;
use crate::linalg::{self, is_zero, Subquotient, Subspace, Vector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("ambiguous pattern: {0}")]
    Ambiguous(String),
    #[error("malformed rule on page {page}: {detail}")]
    MalformedRule { page: u32, detail: String },
    #[error("inconsistent rule on page {page}: {detail}")]
    InconsistentRule { page: u32, detail: String },
    #[error("dead source on page {page}: {source_class} does not survive to this page")]
    DeadSource { page: u32, source_class: String },
    #[error("dead target on page {page}: {target} is zero on this page")]
    DeadTarget { page: u32, target: String },
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

impl EngineError {
    /// Errors that indicate a broken invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, EngineError::Internal(_))
    }
}

/// Degrees `0..=max_degree` are reported; computation extends `buffer` further.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub max_degree: i64,
    pub buffer: i64,
    /// Bound on |s|; required when |v| = 0 or in localized mode, derived when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration_cap: Option<i64>,
}

impl Window {
    pub fn new(max_degree: i64) -> Self {
        Window { max_degree, buffer: 1, filtration_cap: None }
    }

    pub fn with_buffer(max_degree: i64, buffer: i64) -> Self {
        Window { max_degree, buffer: buffer.max(1), filtration_cap: None }
    }

    pub fn horizon(&self) -> i64 {
        self.max_degree + self.buffer
    }

    /// The window `run` actually computes on: large enough that every tower in degrees
    /// `0..=max_degree` is either resolved or visibly flagged.
    pub fn effective(&self, sched: &DifferentialSchedule, localized: bool) -> Window {
        let vdeg = sched.v.degree;
        let r_max = sched.max_page() as i64;
        let r_sum = sched.page_sum() as i64;
        let n_pages = sched.pages.len() as i64;
        if localized {
            let spread: i64 = sched.pages.keys().map(|&r| 1 + r as i64 * vdeg).sum();
            let buffer = self.buffer.max(spread + 2 + r_max * vdeg);
            let horizon = self.max_degree + buffer;
            let cap = (horizon / vdeg.max(1)).max(r_sum + r_max + 1);
            Window { max_degree: self.max_degree, buffer, filtration_cap: Some(self.filtration_cap.unwrap_or(0).max(cap)) }
        } else if vdeg == 0 {
            let buffer = self.buffer.max(n_pages + 2);
            let cap = 3 * r_sum + 2 * r_max + 4;
            Window { max_degree: self.max_degree, buffer, filtration_cap: Some(self.filtration_cap.unwrap_or(0).max(cap)) }
        } else {
            let buffer = self.buffer.max((r_sum + r_max + 2) * vdeg + n_pages + 2);
            Window { max_degree: self.max_degree, buffer, filtration_cap: None }
        }
    }
}

/// Which bidegrees are computed, in `(c, s)` coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Geometry {
    /// `t = c + s|v| ≤ t_max`, `0 ≤ s (≤ s_cap when |v| = 0)`.
    Triangle { t_max: i64, s_cap: i64 },
    /// `0 ≤ c ≤ c_max`, `|s| ≤ s_cap`.
    Rectangle { c_max: i64, s_cap: i64 },
}

impl Geometry {
    fn s_range(&self, c: i64, vdeg: i64) -> Option<(i64, i64)> {
        if c < 0 {
            return None;
        }
        let (lo, hi) = match *self {
            Geometry::Triangle { t_max, s_cap } => {
                if vdeg == 0 {
                    (0, if c <= t_max { s_cap } else { -1 })
                } else {
                    (0, (t_max - c).div_euclid(vdeg))
                }
            }
            Geometry::Rectangle { c_max, s_cap } => {
                if c > c_max {
                    return None;
                }
                (-s_cap, s_cap)
            }
        };
        (lo <= hi).then_some((lo, hi))
    }

    fn contains(&self, c: i64, s: i64, vdeg: i64) -> bool {
        self.s_range(c, vdeg).is_some_and(|(lo, hi)| lo <= s && s <= hi)
    }

    fn c_max(&self) -> i64 {
        match *self {
            Geometry::Triangle { t_max, .. } => t_max,
            Geometry::Rectangle { c_max, .. } => c_max,
        }
    }
}

/// Monomial bases of A by degree.
#[derive(Clone, Debug, Default)]
struct Basis {
    by_degree: BTreeMap<i64, Vec<Monomial>>,
    index: HashMap<Monomial, usize>,
    computed_to: i64,
}

impl Basis {
    fn extend(&mut self, a: &Algebra, up_to: i64) -> Result<(), EngineError> {
        if up_to < self.computed_to {
            return Ok(());
        }
        for d in self.computed_to.max(0)..=up_to {
            let b = a.basis_in_degree(d, None)?;
            for (i, m) in b.iter().enumerate() {
                self.index.insert(m.clone(), i);
            }
            if !b.is_empty() {
                self.by_degree.insert(d, b);
            }
        }
        self.computed_to = up_to + 1;
        Ok(())
    }

    fn dim(&self, c: i64) -> usize {
        self.by_degree.get(&c).map_or(0, Vec::len)
    }

    fn get(&self, c: i64) -> &[Monomial] {
        self.by_degree.get(&c).map_or(&[], Vec::as_slice)
    }

    fn vector(&self, f: Fp, c: i64, x: &Element) -> Vector {
        let mut v = vec![0; self.dim(c)];
        for (m, coeff) in x.terms() {
            debug_assert_eq!(m.degree(), c);
            let i = self.index[m];
            v[i] = f.add(v[i], coeff);
        }
        v
    }

    fn element(&self, f: Fp, c: i64, v: &[u32]) -> Element {
        let mut x = Element::zero();
        for (m, &coeff) in self.get(c).iter().zip(v) {
            x.add_term(f, m.clone(), coeff);
        }
        x
    }
}

/// State of one bidegree on the current page.
#[derive(Clone, Debug)]
pub struct Cell {
    pub quotient: Subquotient,
    /// The cycle space may be wrong because of data outside the window.
    pub z_unc: bool,
    /// The boundary space may be wrong because of data outside the window.
    pub b_unc: bool,
}

impl Cell {
    pub fn dim(&self) -> usize {
        self.quotient.dim()
    }

    pub fn flagged(&self) -> bool {
        self.z_unc || self.b_unc
    }
}

/// One bidegree of a page snapshot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageCell {
    pub t: i64,
    pub s: i64,
    /// Representatives over the E_1 algebra `A ⊗ P(v)` (or Laurent v).
    pub reps: Vec<Element>,
    /// Matrix of d_r in representative coordinates, with its target bidegree.
    pub differential: Option<((i64, i64), Vec<Vector>)>,
    pub indeterminate: bool,
}

impl PageCell {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn rank(&self, f: Fp) -> usize {
        self.differential.as_ref().map_or(0, |(_, m)| linalg::rank(f, m))
    }
}

/// Snapshot of the E_r page: representatives and d_r per bidegree `(t, s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageData {
    pub r: u32,
    pub cells: BTreeMap<(i64, i64), PageCell>,
}

impl PageData {
    pub fn dim(&self, t: i64, s: i64) -> usize {
        self.cells.get(&(t, s)).map_or(0, PageCell::dim)
    }
}

/// Rules of one page with v stripped: `d_r(source) = v^r · target`, target over A.
#[derive(Clone, Debug)]
struct PageRules {
    r: u32,
    generating: Vec<(Monomial, Element)>,
    all: Vec<(Monomial, Element)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageStats {
    pub r: u32,
    pub rank: usize,
    pub flagged: usize,
}

/// d_r per source cell `(c, s)`: target cell and matrix in representative coordinates.
pub type DifferentialMap = BTreeMap<(i64, i64), ((i64, i64), Vec<Vector>)>;

/// The spectral sequence on a window, advanced page by page.
#[derive(Clone, Debug)]
pub struct Sseq {
    base: Algebra,
    e1: Algebra,
    v: GeneratorSpec,
    localized: bool,
    window: Window,
    geometry: Geometry,
    basis: Basis,
    cells: BTreeMap<(i64, i64), Cell>,
    page: u32,
    /// Generating rules of the pages already fired.
    fired: Vec<Vec<(Monomial, Element)>>,
    pub warnings: Vec<String>,
    pub history: Vec<PageStats>,
}

impl Sseq {
    /// E_1 page of `A[v]` (Laurent in v when `localized`) on the given window, used as is.
    pub fn new(base: &Algebra, v: &GeneratorSpec, window: Window, localized: bool) -> Result<Self, EngineError> {
        if base.generator_index(&v.name).is_ok() {
            return Err(EngineError::InvalidInput(format!("{} is already a generator", v.name)));
        }
        if window.max_degree < 0 {
            return Err(EngineError::InvalidInput("negative window".into()));
        }
        let vdeg = v.degree;
        if localized && vdeg <= 0 {
            return Err(EngineError::InvalidInput("localized mode needs |v| > 0".into()));
        }
        let horizon = window.horizon();
        let geometry = if localized {
            Geometry::Rectangle { c_max: horizon, s_cap: window.filtration_cap.unwrap_or(horizon / vdeg) }
        } else {
            Geometry::Triangle { t_max: horizon, s_cap: window.filtration_cap.unwrap_or(window.buffer) }
        };
        let kind = if localized { crate::algebra::GeneratorKind::Laurent } else { crate::algebra::GeneratorKind::Polynomial };
        let e1 = base.with_generator(GeneratorSpec::new(v.name.clone(), vdeg, kind))?;
        let mut basis = Basis::default();
        basis.extend(base, geometry.c_max() + 1)?;
        let f = base.field();
        let mut cells = BTreeMap::new();
        for (&c, mons) in basis.by_degree.range(..=geometry.c_max()) {
            let Some((lo, hi)) = geometry.s_range(c, vdeg) else { continue };
            let n = mons.len();
            for s in lo..=hi {
                let quotient = Subquotient::new(f, Subspace::full(n), Subspace::zero(n));
                cells.insert((c, s), Cell { quotient, z_unc: false, b_unc: false });
            }
        }
        Ok(Sseq {
            base: base.clone(),
            e1,
            v: v.clone(),
            localized,
            window,
            geometry,
            basis,
            cells,
            page: 1,
            fired: Vec::new(),
            warnings: Vec::new(),
            history: Vec::new(),
        })
    }

    pub fn field(&self) -> Fp {
        self.base.field()
    }

    pub fn vdeg(&self) -> i64 {
        self.v.degree
    }

    /// Index of the page currently held (E_page).
    pub fn page(&self) -> u32 {
        self.page
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn e1_algebra(&self) -> &Algebra {
        &self.e1
    }

    pub fn base_algebra(&self) -> &Algebra {
        &self.base
    }

    pub fn is_localized(&self) -> bool {
        self.localized
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Cell at v-free degree `c` and filtration `s`.
    pub fn cell(&self, c: i64, s: i64) -> Option<&Cell> {
        self.cells.get(&(c, s))
    }

    pub fn cells(&self) -> impl Iterator<Item = ((i64, i64), &Cell)> {
        self.cells.iter().map(|(&k, v)| (k, v))
    }

    pub fn basis(&self, c: i64) -> &[Monomial] {
        self.basis.get(c)
    }

    /// Coordinates of a base-algebra element of degree `c` as a vector over `basis(c)`.
    pub fn to_vector(&self, c: i64, x: &Element) -> Vector {
        self.basis.vector(self.field(), c, x)
    }

    pub fn to_element(&self, c: i64, v: &[u32]) -> Element {
        self.basis.element(self.field(), c, v)
    }

    /// `x · v^s` as an element of the E_1 algebra.
    pub fn with_v_power(&self, x: &Element, s: i64) -> Element {
        let f = self.field();
        let mut out = Element::zero();
        for (m, c) in x.terms() {
            let mut exps = m.exponents().to_vec();
            exps.push(s as i32);
            let lifted = self.e1.monomial_from_exponents(exps).expect("admissible lift");
            out.add_term(f, lifted, c);
        }
        out
    }

    /// Advances to page `r` (pass-through if later than the current page) and applies d_r.
    pub fn apply_page(&mut self, r: u32, rules: &[Rule]) -> Result<(), EngineError> {
        if r < self.page {
            return Err(EngineError::InvalidInput(format!("page {r} is already past (now on E_{})", self.page)));
        }
        self.page = r;
        if rules.is_empty() {
            self.page = r + 1;
            self.history.push(PageStats { r, rank: 0, flagged: self.flagged_count() });
            return Ok(());
        }
        let vdeg = self.vdeg();
        self.basis.extend(&self.base, self.geometry.c_max() + 2 + r as i64 * vdeg)?;
        let rules = self.strip_rules(r, rules)?;
        self.validate_rules(&rules)?;
        let f = self.field();

        // D on every needed degree, as a matrix over monomial bases.
        let mut dmat: HashMap<i64, Vec<Vector>> = HashMap::new();
        let degrees: Vec<i64> = self.basis.by_degree.range(..=self.geometry.c_max()).map(|(&c, _)| c).collect();
        for c in degrees {
            let target = c - 1 - r as i64 * vdeg;
            if self.basis.dim(target) == 0 {
                continue;
            }
            let rows: Vec<Vector> = self
                .basis
                .get(c)
                .iter()
                .map(|m| self.basis.vector(f, target, &self.page_derivative(&rules, m)))
                .collect();
            if rows.iter().any(|row| !is_zero(row)) {
                dmat.insert(c, rows);
            }
        }

        // Images and matrices.
        struct Edge {
            to: (i64, i64),
            images: Vec<Vector>,
            matrix: Option<Vec<Vector>>,
        }
        let mut edges: BTreeMap<(i64, i64), Edge> = BTreeMap::new();
        let mut z_new: Vec<(i64, i64)> = Vec::new();
        let mut b_new: Vec<(i64, i64)> = Vec::new();
        for (&(c, s), cell) in &self.cells {
            if cell.dim() == 0 {
                continue;
            }
            let Some(rows) = dmat.get(&c) else { continue };
            let images: Vec<Vector> =
                cell.quotient.reps().iter().map(|rep| linalg::mat_mul(f, std::slice::from_ref(rep), rows, rows[0].len()).remove(0)).collect();
            if images.iter().all(|v| is_zero(v)) {
                continue;
            }
            let to = (c - 1 - r as i64 * vdeg, s + r as i64);
            let Some(target) = self.cells.get(&to) else {
                // nonzero image leaving the window
                z_new.push((c, s));
                edges.insert((c, s), Edge { to, images, matrix: None });
                continue;
            };
            let mut matrix = Vec::with_capacity(images.len());
            let mut lost = false;
            for img in &images {
                match target.quotient.coordinates(f, img) {
                    Some(coords) => matrix.push(coords),
                    None if target.flagged() || cell.flagged() => {
                        lost = true;
                        matrix.push(vec![0; target.dim()]);
                    }
                    None => {
                        return Err(EngineError::Internal(format!(
                            "d_{r} of a class at (t={}, s={s}) is not a cycle at (t={}, s={})",
                            c + s * vdeg,
                            to.0 + to.1 * vdeg,
                            to.1
                        )))
                    }
                }
            }
            if lost {
                z_new.push((c, s));
                b_new.push(to);
            }
            edges.insert((c, s), Edge { to, images, matrix: Some(matrix) });
        }

        // Incoming differentials from outside the window.
        for &(c, s) in self.cells.keys() {
            let src = (c + 1 + r as i64 * vdeg, s - r as i64);
            if self.cells.contains_key(&src) || self.geometry.contains(src.0, src.1, vdeg) {
                continue;
            }
            if self.basis.dim(src.0) > 0 && (self.localized || src.1 >= 0) {
                b_new.push((c, s));
            }
        }
        for k in z_new {
            self.cells.get_mut(&k).unwrap().z_unc = true;
        }
        for k in b_new {
            self.cells.get_mut(&k).unwrap().b_unc = true;
        }

        // Propagate flags along nonzero differentials until stable.
        let mut incoming: HashMap<(i64, i64), Vec<(i64, i64)>> = HashMap::new();
        for (&from, e) in &edges {
            let nonzero = e.matrix.as_ref().is_none_or(|m| m.iter().any(|row| !is_zero(row)));
            if nonzero && self.cells.contains_key(&e.to) {
                incoming.entry(e.to).or_default().push(from);
            }
        }
        let mut queue: VecDeque<(i64, i64)> = self.cells.iter().filter(|(_, c)| c.flagged()).map(|(&k, _)| k).collect();
        while let Some(k) = queue.pop_front() {
            let cell = &self.cells[&k];
            // a flagged source makes its target's boundaries uncertain
            if cell.flagged() {
                if let Some(e) = edges.get(&k) {
                    let nonzero = e.matrix.as_ref().is_none_or(|m| m.iter().any(|row| !is_zero(row)));
                    if nonzero {
                        if let Some(t) = self.cells.get_mut(&e.to) {
                            if !t.b_unc {
                                t.b_unc = true;
                                queue.push_back(e.to);
                            }
                        }
                    }
                }
            }
            // uncertain boundaries make the sources' kernels uncertain
            if self.cells[&k].b_unc {
                for &src in incoming.get(&k).into_iter().flatten() {
                    let s = self.cells.get_mut(&src).unwrap();
                    if !s.z_unc {
                        s.z_unc = true;
                        queue.push_back(src);
                    }
                }
            }
        }

        // d_r ∘ d_r = 0 on unflagged chains.
        for (&from, e) in &edges {
            let (Some(m1), Some(e2)) = (&e.matrix, edges.get(&e.to)) else { continue };
            let Some(m2) = &e2.matrix else { continue };
            let flagged = [from, e.to, e2.to].iter().any(|k| self.cells.get(k).is_some_and(Cell::flagged));
            if flagged {
                continue;
            }
            let prod = linalg::mat_mul(f, m1, m2, m2.first().map_or(0, Vec::len));
            if prod.iter().any(|row| !is_zero(row)) {
                return Err(EngineError::Internal(format!(
                    "d_{r} ∘ d_{r} ≠ 0 starting at (t={}, s={})",
                    from.0 + from.1 * vdeg,
                    from.1
                )));
            }
        }

        // New cycles and boundaries.
        let mut ranks_in: HashMap<(i64, i64), usize> = HashMap::new();
        let mut kernel_dims: HashMap<(i64, i64), usize> = HashMap::new();
        let mut new_cycles: HashMap<(i64, i64), Subspace> = HashMap::new();
        let mut total_rank = 0;
        for (&from, e) in &edges {
            let cell = &self.cells[&from];
            let Some(m) = &e.matrix else { continue };
            let width = self.cells[&e.to].dim();
            let ker = linalg::left_kernel(f, m, width);
            let rank = m.len() - ker.len();
            total_rank += rank;
            kernel_dims.insert(from, ker.len());
            *ranks_in.entry(e.to).or_default() += rank;
            let mut z = cell.quotient.boundaries.clone();
            for k in &ker {
                let mut v = vec![0; z.ambient()];
                for (coef, rep) in k.iter().zip(cell.quotient.reps()) {
                    linalg::axpy(f, &mut v, *coef, rep);
                }
                z.insert(f, v);
            }
            new_cycles.insert(from, z);
        }
        let mut new_boundaries: HashMap<(i64, i64), Subspace> = HashMap::new();
        for e in edges.values() {
            if e.matrix.is_none() {
                continue;
            }
            let b = new_boundaries.entry(e.to).or_insert_with(|| self.cells[&e.to].quotient.boundaries.clone());
            for img in &e.images {
                b.insert(f, img.clone());
            }
        }
        let mut touched: Vec<(i64, i64)> = new_cycles.keys().chain(new_boundaries.keys()).copied().collect();
        touched.sort_unstable();
        touched.dedup();
        for k in touched {
            let cell = self.cells.get_mut(&k).unwrap();
            let old_dim = cell.dim();
            let mut z = new_cycles.remove(&k).unwrap_or_else(|| cell.quotient.cycles.clone());
            let b = new_boundaries.remove(&k).unwrap_or_else(|| cell.quotient.boundaries.clone());
            if !b.is_subspace_of(f, &z) {
                if !cell.flagged() {
                    return Err(EngineError::Internal(format!(
                        "boundaries escape the cycles at (t={}, s={}) on page {r}",
                        k.0 + k.1 * vdeg,
                        k.1
                    )));
                }
                for row in b.rows() {
                    z.insert(f, row.clone());
                }
            }
            cell.quotient = Subquotient::new(f, z, b);
            if !cell.flagged() {
                let ker = kernel_dims.get(&k).copied().unwrap_or(old_dim);
                let rank_in = ranks_in.get(&k).copied().unwrap_or(0);
                if cell.dim() + rank_in != ker {
                    return Err(EngineError::Internal(format!(
                        "dimension bookkeeping fails at (t={}, s={}) on page {r}: {} + {rank_in} ≠ {ker}",
                        k.0 + k.1 * vdeg,
                        k.1,
                        cell.dim()
                    )));
                }
            }
        }
        self.history.push(PageStats { r, rank: total_rank, flagged: self.flagged_count() });
        self.fired.push(rules.generating);
        self.page = r + 1;
        Ok(())
    }

    fn flagged_count(&self) -> usize {
        self.cells.values().filter(|c| c.flagged()).count()
    }

    fn strip_rules(&self, r: u32, rules: &[Rule]) -> Result<PageRules, EngineError> {
        let f = self.field();
        let nb = self.base.generators().len();
        let malformed = |detail: String| EngineError::MalformedRule { page: r, detail };
        let mut all = Vec::new();
        for rule in rules {
            let src = &rule.source;
            if src.exponents().len() != nb + 1 {
                return Err(malformed("rule is not over A ⊗ P(v)".into()));
            }
            if src.exponents()[nb] != 0 {
                return Err(malformed(format!("source {} contains v", self.e1.format_monomial(src, false))));
            }
            if rule.target.is_zero() {
                return Err(malformed(format!("zero target for {}", self.e1.format_monomial(src, false))));
            }
            let src_base = self.base.monomial_from_exponents(src.exponents()[..nb].to_vec())?;
            let mut tgt = Element::zero();
            for (m, c) in rule.target.terms() {
                if m.exponents().len() != nb + 1 || m.exponents()[nb] != r as i32 {
                    return Err(malformed(format!(
                        "target term {} does not carry v^{r}",
                        self.e1.format_monomial(m, false)
                    )));
                }
                if m.degree() != src.degree() - 1 {
                    return Err(malformed(format!(
                        "target degree {} ≠ source degree {} − 1",
                        m.degree(),
                        src.degree()
                    )));
                }
                tgt.add_term(f, self.base.monomial_from_exponents(m.exponents()[..nb].to_vec())?, c);
            }
            all.push((src_base, tgt));
        }
        all.sort_by(|a, b| a.0.cmp(&b.0));
        // A rule is redundant when an earlier source divides it; it must then agree with the
        // derivation generated by the earlier rules.
        let mut generating: Vec<(Monomial, Element)> = Vec::new();
        for (src, tgt) in &all {
            if generating.iter().any(|(g, _)| power_split(src, g).0 > 0) {
                let derived = self.derive_with(&generating, src);
                if !proportional(f, &derived, tgt) {
                    return Err(EngineError::InconsistentRule {
                        page: r,
                        detail: format!(
                            "d({}) is forced to be {} but the rule says {}",
                            self.base.format_monomial(src, false),
                            self.base.format_element(&derived, false),
                            self.base.format_element(tgt, false)
                        ),
                    });
                }
            } else {
                generating.push((src.clone(), tgt.clone()));
            }
        }
        Ok(PageRules { r, generating, all })
    }

    fn validate_rules(&self, rules: &PageRules) -> Result<(), EngineError> {
        let f = self.field();
        let r = rules.r;
        let vdeg = self.vdeg();
        for (src, tgt) in &rules.all {
            let c = src.degree();
            if let Some(cell) = self.cells.get(&(c, 0)) {
                if !cell.flagged() {
                    let v = self.basis.vector(f, c, &Element::from_monomial(src.clone()));
                    match cell.quotient.coordinates(f, &v) {
                        Some(x) if !is_zero(&x) => {}
                        _ => {
                            return Err(EngineError::DeadSource {
                                page: r,
                                source_class: self.base.format_monomial(src, false),
                            })
                        }
                    }
                }
            }
            let tc = c - 1 - r as i64 * vdeg;
            if let Some(cell) = self.cells.get(&(tc, r as i64)) {
                if !cell.flagged() {
                    let v = self.basis.vector(f, tc, tgt);
                    match cell.quotient.coordinates(f, &v) {
                        Some(x) if !is_zero(&x) => {}
                        _ => {
                            return Err(EngineError::DeadTarget {
                                page: r,
                                target: self.e1.format_element(&self.with_v_power(tgt, r as i64), false),
                            })
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn page_derivative(&self, rules: &PageRules, m: &Monomial) -> Element {
        self.derive_filtered(&rules.generating, m, true)
    }

    fn derive_with(&self, generating: &[(Monomial, Element)], m: &Monomial) -> Element {
        self.derive_filtered(generating, m, false)
    }

    /// `D(m) = Σ_g ± a · S_g^{a−1} T_g R` where `m = ± S_g^a R` with `a` maximal.
    ///
    /// With `cofactor_cycles`, a term is kept only when R is a cycle for every page fired so
    /// far: otherwise R is not a class on this page and the product rule says nothing.
    fn derive_filtered(&self, generating: &[(Monomial, Element)], m: &Monomial, cofactor_cycles: bool) -> Element {
        let f = self.field();
        let a_alg = &self.base;
        let mut out = Element::zero();
        for (src, tgt) in generating {
            let (a, rest) = power_split(m, src);
            if a == 0 {
                continue;
            }
            let coeff = if src.degree() % 2 == 0 { f.reduce(a as i64) } else { (a % 2) as u32 % f.p() };
            if coeff == 0 {
                continue;
            }
            if cofactor_cycles && self.fired.iter().any(|g| !self.derive_with(g, &rest).is_zero()) {
                continue;
            }
            let src_a = scale_exps(src, a);
            let Some((check, neg)) = a_alg.multiply_monomials(&src_a, &rest) else { continue };
            debug_assert_eq!(&check, m);
            let lower = scale_exps(src, a - 1);
            let term = a_alg.multiply_unchecked(
                &a_alg.multiply_monomial_element(&lower, tgt),
                &Element::from_monomial(rest),
            );
            let sign = f.sign(neg);
            out.add_scaled(f, &term, f.mul(sign, coeff));
        }
        out
    }

    /// Snapshot of the current page with representatives in the E_1 algebra.
    pub fn snapshot(&self, differentials: Option<&DifferentialMap>) -> PageData {
        let vdeg = self.vdeg();
        let f = self.field();
        let mut cells = BTreeMap::new();
        for (&(c, s), cell) in &self.cells {
            if c + s * vdeg > self.window.max_degree && !self.localized {
                continue;
            }
            if self.localized && c > self.window.max_degree {
                continue;
            }
            let reps: Vec<Element> = cell
                .quotient
                .reps()
                .iter()
                .map(|v| self.with_v_power(&self.basis.element(f, c, v), s))
                .collect();
            if reps.is_empty() && !cell.flagged() {
                continue;
            }
            let differential = differentials.and_then(|d| d.get(&(c, s))).map(|((tc, ts), m)| ((tc + ts * vdeg, *ts), m.clone()));
            cells.insert(
                (c + s * vdeg, s),
                PageCell { t: c + s * vdeg, s, reps, differential, indeterminate: cell.flagged() },
            );
        }
        PageData { r: self.page, cells }
    }

    /// Matrix of d_r out of every bidegree of the current page, for snapshots.
    pub fn differentials(&self, r: u32, rules: &[Rule]) -> Result<DifferentialMap, EngineError> {
        let mut out = BTreeMap::new();
        if rules.is_empty() {
            return Ok(out);
        }
        let rules = self.strip_rules(r, rules)?;
        let f = self.field();
        let vdeg = self.vdeg();
        for (&(c, s), cell) in &self.cells {
            if cell.dim() == 0 {
                continue;
            }
            let to = (c - 1 - r as i64 * vdeg, s + r as i64);
            let Some(target) = self.cells.get(&to) else { continue };
            let mut m = Vec::new();
            for rep in cell.quotient.reps() {
                let x = self.basis.element(f, c, rep);
                let mut img = Element::zero();
                for (mono, coef) in x.terms() {
                    img.add_scaled(f, &self.page_derivative(&rules, mono), coef);
                }
                let v = self.basis.vector(f, to.0, &img);
                m.push(target.quotient.coordinates(f, &v).unwrap_or_else(|| vec![0; target.dim()]));
            }
            if m.iter().any(|row| !is_zero(row)) {
                out.insert((c, s), (to, m));
            }
        }
        Ok(out)
    }

    /// `d_r` of a base-algebra monomial, with the factor `v^r` stripped.
    pub fn derivative(&self, r: u32, rules: &[Rule], m: &Monomial) -> Result<Element, EngineError> {
        let rules = self.strip_rules(r, rules)?;
        Ok(self.page_derivative(&rules, m))
    }

    /// Class of `D_r(x)` for an E_1 vector `x` at `(c, s)`, in target coordinates.
    pub fn differential_of(&self, r: u32, rules: &[Rule], c: i64, s: i64, x: &[u32]) -> Result<Option<Vec<u32>>, EngineError> {
        let rules = self.strip_rules(r, rules)?;
        let f = self.field();
        let to = (c - 1 - r as i64 * self.vdeg(), s + r as i64);
        let mut img = Element::zero();
        for (mono, coef) in self.basis.element(f, c, x).terms() {
            img.add_scaled(f, &self.page_derivative(&rules, mono), coef);
        }
        let Some(target) = self.cells.get(&to) else { return Ok(None) };
        let v = self.basis.vector(f, to.0, &img);
        Ok(target.quotient.coordinates(f, &v))
    }

    /// E_∞ tower profile in degrees `0..=max_degree`.
    ///
    /// `r_max` is the largest page fired and `r_sum` the sum of all fired pages: open bars
    /// longer than `r_max` are free, and no class can be born above filtration `r_sum`.
    pub fn tower_profile(&self, r_max: u32, r_sum: u64) -> Result<TowerProfile, EngineError> {
        if self.localized {
            return Ok(self.localized_profile());
        }
        let f = self.field();
        let vdeg = self.vdeg();
        let d = self.window.max_degree;
        let mut profile = TowerProfile::new();
        let lines: Vec<i64> = self.cells.keys().filter(|&&(c, s)| s == 0 && c <= d).map(|&(c, _)| c).collect();
        for c in lines {
            // unflagged prefix of the line
            let mut len = 0i64;
            while let Some(cell) = self.cells.get(&(c, len)) {
                if cell.flagged() {
                    break;
                }
                len += 1;
            }
            let dims: Vec<usize> = (0..len).map(|s| self.cells[&(c, s)].dim()).collect();
            // rank of v^{b−a}: E(c, a) → E(c, b)
            let rank = |a: i64, b: i64| -> Result<usize, EngineError> {
                let src = &self.cells[&(c, a)];
                let dst = &self.cells[&(c, b)];
                let mut rows = Vec::new();
                for rep in src.quotient.reps() {
                    let coords = dst.quotient.coordinates(f, rep).ok_or_else(|| {
                        EngineError::Internal(format!("v-multiplication leaves the cycles on line c={c}"))
                    })?;
                    rows.push(coords);
                }
                Ok(if rows.is_empty() || dst.dim() == 0 { 0 } else { linalg::rank(f, &rows) })
            };
            for a in 0..len {
                if dims[a as usize] == 0 {
                    continue;
                }
                let t = c + a * vdeg;
                if t > d {
                    break;
                }
                // alive(b): bars born exactly at a still alive at b
                let mut prev_alive = None;
                for b in a..len {
                    let here = rank(a, b)?;
                    let before = if a == 0 { 0 } else { rank(a - 1, b)? };
                    let alive = here - before.min(here);
                    if let Some(p) = prev_alive {
                        let died: usize = p - alive.min(p);
                        profile.add_many(t, TowerLength::Finite((b - a) as u64), died);
                    }
                    prev_alive = Some(alive);
                    if alive == 0 {
                        break;
                    }
                }
                if let Some(open) = prev_alive.filter(|&x| x > 0) {
                    let len_so_far = len - a;
                    let kind = if len_so_far > r_max as i64 { TowerLength::Infinite } else { TowerLength::Unknown };
                    profile.add_many(t, kind, open);
                }
            }
            if (len as u64) <= r_sum && c + len * vdeg <= d {
                profile.add(c + len * vdeg, TowerLength::Unknown);
            }
        }
        Ok(profile.restricted(d))
    }

    fn localized_profile(&self) -> TowerProfile {
        let mut profile = TowerProfile::new();
        for (&(c, s), cell) in &self.cells {
            if s != 0 || c > self.window.max_degree {
                continue;
            }
            if cell.flagged() {
                profile.add(c, TowerLength::Unknown);
            } else {
                profile.add_many(c, TowerLength::Infinite, cell.dim());
            }
        }
        profile
    }
}

/// Largest `a` with `g^a | m`, and the cofactor `m / g^a`.
fn power_split(m: &Monomial, g: &Monomial) -> (i32, Monomial) {
    let mut a = i32::MAX;
    for (&me, &ge) in m.exponents().iter().zip(g.exponents()) {
        if ge > 0 {
            a = a.min(if me >= 0 { me / ge } else { 0 });
        }
    }
    if a == i32::MAX {
        a = 0;
    }
    let exps: Vec<i32> = m.exponents().iter().zip(g.exponents()).map(|(&me, &ge)| me - a * ge).collect();
    let degree = m.degree() - a as i64 * g.degree();
    (a, Monomial::from_parts(exps, degree))
}

fn scale_exps(g: &Monomial, a: i32) -> Monomial {
    let exps: Vec<i32> = g.exponents().iter().map(|&e| e * a).collect();
    Monomial::from_parts(exps, g.degree() * a as i64)
}

fn proportional(f: Fp, x: &Element, y: &Element) -> bool {
    if x.is_zero() || y.is_zero() {
        return x.is_zero() && y.is_zero();
    }
    let (m0, c0) = y.terms().next().unwrap();
    let cx = x.coefficient(m0);
    if cx == 0 || x.len() != y.len() {
        return false;
    }
    let ratio = f.mul(cx, f.inv(c0));
    y.scaled(f, ratio) == *x
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Each page E_r that carries a differential, with its d_r (only when requested).
    pub pages: Vec<PageData>,
    /// The E_∞ page (only when requested).
    pub final_page: Option<PageData>,
    pub profile: TowerProfile,
    pub window: Window,
    pub history: Vec<PageStats>,
    pub warnings: Vec<String>,
    pub cells: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub keep_pages: bool,
    /// Keep only pages `E_r` with `r ≤ page_cap`.
    pub page_cap: Option<u32>,
    pub record_final: bool,
}

/// E_1 page of `A[v]` on the window `w` as given.
pub fn build_e1(a: &Algebra, v: &GeneratorSpec, w: Window, localized: bool) -> Result<Sseq, EngineError> {
    Sseq::new(a, v, w, localized)
}

/// Runs every scheduled page on the effective window and extracts the tower profile.
pub fn run(sched: &DifferentialSchedule, w: Window, localized: bool, opts: RunOptions) -> Result<RunOutput, EngineError> {
    let eff = w.effective(sched, localized);
    let mut ss = Sseq::new(&sched.base, &sched.v, eff, localized)?;
    let mut warnings = Vec::new();
    if sched.pages.is_empty() {
        warnings.push("no rule lies in the window; E_1 = E_∞".to_string());
    }
    let mut pages = Vec::new();
    for (&r, rules) in &sched.pages {
        if opts.keep_pages && opts.page_cap.is_none_or(|cap| r <= cap) {
            let d = ss.differentials(r, rules)?;
            ss.page = r;
            pages.push(ss.snapshot(Some(&d)));
        }
        ss.apply_page(r, rules)?;
    }
    let final_page = opts.record_final.then(|| ss.snapshot(None));
    let profile = ss.tower_profile(sched.max_page(), sched.page_sum())?;
    warnings.extend(ss.warnings.iter().cloned());
    Ok(RunOutput { pages, final_page, profile, window: eff, history: ss.history.clone(), warnings, cells: ss.cell_count() })
}

/// Outcome of comparing a run with its localization.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InjectivityReport {
    /// `(page, number of bidegrees checked)` for each page examined.
    pub checked: Vec<(u32, usize)>,
    /// `(page, t, s)` where the map to the localized page fails to be injective.
    pub failures: Vec<(u32, i64, i64)>,
}

/// Checks that `E_r → v^{-1}E_r` is injective in filtrations `s ≥ r − 1` on every page.
///
/// Pages between two fired differentials coincide, so each is examined once, at the
/// smallest index it carries.
pub fn localization_injectivity(sched: &DifferentialSchedule, w: Window) -> Result<InjectivityReport, EngineError> {
    let mut plain = Sseq::new(&sched.base, &sched.v, w.effective(sched, false), false)?;
    let mut local = Sseq::new(&sched.base, &sched.v, w.effective(sched, true), true)?;
    let f = plain.field();
    let mut report = InjectivityReport::default();
    let check = |plain: &Sseq, local: &Sseq, r: u32, report: &mut InjectivityReport| {
        let mut count = 0;
        for (&(c, s), cell) in &plain.cells {
            if c > w.max_degree || s < r as i64 - 1 || cell.flagged() || cell.dim() == 0 {
                continue;
            }
            let Some(target) = local.cells.get(&(c, s)).filter(|t| !t.flagged()) else { continue };
            count += 1;
            let rows: Option<Vec<Vector>> = cell.quotient.reps().iter().map(|v| target.quotient.coordinates(f, v)).collect();
            let injective = rows.is_some_and(|rows| target.dim() > 0 && linalg::rank(f, &rows) == cell.dim());
            if !injective {
                report.failures.push((r, c + s * plain.vdeg(), s));
            }
        }
        report.checked.push((r, count));
    };
    let mut next = 1;
    for (&r, rules) in &sched.pages {
        check(&plain, &local, next, &mut report);
        plain.apply_page(r, rules)?;
        local.apply_page(r, rules)?;
        next = r + 1;
    }
    check(&plain, &local, next, &mut report);
    Ok(report)
}
