//! Free graded-commutative algebras over F_p.
//!
//! An [`Algebra`] is an ordered list of generators, each exterior, polynomial, truncated
//! polynomial or Laurent. Divided-power generators are accepted at construction time and
//! expanded into their characteristic-p form `⊗_i P_p(γ_{p^i})`, which needs a degree bound.
//!
//! Monomials are dense exponent vectors over the generator list and carry their degree.
//! They are ordered graded-lexicographically: first by degree, then by exponent vector.
//! [`Element`]s store nonzero coefficients only, in that order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::Fp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("duplicate generator name {0:?}")]
    DuplicateGenerator(String),
    #[error("generator {name:?}: {reason}")]
    InvalidGenerator { name: String, reason: String },
    #[error("foreign generator: {0}")]
    ForeignGenerator(String),
    #[error("infinite basis: generator {0:?} is unbounded and no filtration cap was given")]
    InfiniteBasis(String),
    #[error("rule on a non-generator: {0}")]
    NotAGenerator(String),
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("divided-power generator {0:?} needs a degree bound for its expansion")]
    UnboundedDividedPower(String),
    #[error("cannot parse {0:?}")]
    Parse(String),
}

pub type Result<T, E = AlgebraError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Exterior,
    Polynomial,
    Truncated { height: u32 },
    DividedPower,
    Laurent,
}

impl GeneratorKind {
    /// Whether `e` is an admissible exponent.
    pub fn admits(self, e: i32) -> bool {
        match self {
            GeneratorKind::Exterior => e == 0 || e == 1,
            GeneratorKind::Truncated { height } => e >= 0 && (e as u32) < height,
            GeneratorKind::Laurent => true,
            GeneratorKind::Polynomial | GeneratorKind::DividedPower => e >= 0,
        }
    }

    fn max_exponent(self) -> Option<i32> {
        match self {
            GeneratorKind::Exterior => Some(1),
            GeneratorKind::Truncated { height } => Some(height as i32 - 1),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: i64,
    pub kind: GeneratorKind,
}

impl GeneratorSpec {
    pub fn new(name: impl Into<String>, degree: i64, kind: GeneratorKind) -> Self {
        GeneratorSpec { name: name.into(), degree, kind }
    }

    pub fn exterior(name: impl Into<String>, degree: i64) -> Self {
        Self::new(name, degree, GeneratorKind::Exterior)
    }

    pub fn polynomial(name: impl Into<String>, degree: i64) -> Self {
        Self::new(name, degree, GeneratorKind::Polynomial)
    }

    pub fn laurent(name: impl Into<String>, degree: i64) -> Self {
        Self::new(name, degree, GeneratorKind::Laurent)
    }

    /// Generators with infinitely many admissible exponents in a fixed degree.
    fn unbounded_in_degree(&self) -> bool {
        match self.kind {
            GeneratorKind::Laurent => true,
            GeneratorKind::Polynomial | GeneratorKind::DividedPower => self.degree == 0,
            _ => false,
        }
    }
}

/// ASCII spelling of a display name: Greek letters become their English names.
pub fn ascii_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len() + 8);
    for ch in name.chars() {
        match ch {
            'λ' => out.push_str("lambda"),
            'μ' => out.push_str("mu"),
            'σ' => out.push_str("sigma"),
            'γ' => out.push_str("gamma"),
            'ε' => out.push_str("epsilon"),
            c => out.push(c),
        }
    }
    out
}

/// A monomial: one exponent per generator of its algebra, plus the cached degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    degree: i64,
    exps: Vec<i32>,
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree.cmp(&other.degree).then_with(|| self.exps.cmp(&other.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Monomial {
    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn exponents(&self) -> &[i32] {
        &self.exps
    }

    pub fn exponent(&self, gen: usize) -> i32 {
        self.exps[gen]
    }

    pub fn is_unit(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// Caller guarantees `degree` matches `exps` for the intended algebra.
    pub(crate) fn from_parts(exps: Vec<i32>, degree: i64) -> Self {
        Monomial { degree, exps }
    }
}

/// An F_p-linear combination of monomials with no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Element {
    terms: BTreeMap<Monomial, u32>,
}

impl Element {
    pub fn zero() -> Self {
        Element::default()
    }

    pub fn from_monomial(m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(m, 1);
        Element { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, u32)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, m: &Monomial) -> u32 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    /// Degree if homogeneous (zero counts as homogeneous of every degree: returns `None`).
    pub fn degree(&self) -> Option<i64> {
        let mut it = self.terms.keys().map(Monomial::degree);
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.is_zero() || self.degree().is_some()
    }

    pub fn add_term(&mut self, f: Fp, m: Monomial, c: u32) {
        if c == 0 {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = f.add(*o.get(), c);
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, f: Fp, other: &Element, c: u32) {
        if c == 0 {
            return;
        }
        for (m, &x) in &other.terms {
            self.add_term(f, m.clone(), f.mul(c, x));
        }
    }

    pub fn scaled(&self, f: Fp, c: u32) -> Element {
        let mut out = Element::zero();
        out.add_scaled(f, self, c);
        out
    }

    pub fn sum(f: Fp, a: &Element, b: &Element) -> Element {
        let mut out = a.clone();
        out.add_scaled(f, b, 1);
        out
    }
}

/// A group of truncated generators that together model one divided-power generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DividedPowerFamily {
    pub base: String,
    pub degree: i64,
    /// Generator indices of `γ_{p^i}` for `i = 0, 1, …`.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Algebra {
    fp: Fp,
    generators: Vec<GeneratorSpec>,
    index: HashMap<String, usize>,
    divided_powers: Vec<DividedPowerFamily>,
}

impl Algebra {
    /// Builds an algebra with no divided-power generators.
    pub fn new(p: u32, generators: Vec<GeneratorSpec>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.kind == GeneratorKind::DividedPower) {
            return Err(AlgebraError::UnboundedDividedPower(g.name.clone()));
        }
        Self::new_bounded(p, generators, 0)
    }

    /// Builds an algebra, expanding each divided-power generator `x` into truncated height-p
    /// generators `γ{p^i}(x)` of degree `p^i |x|` for every `p^i |x| <= degree_bound`.
    pub fn new_bounded(p: u32, specs: Vec<GeneratorSpec>, degree_bound: i64) -> Result<Self> {
        let fp = Fp::new(p).ok_or(AlgebraError::NotPrime(p))?;
        let mut generators = Vec::new();
        let mut divided_powers = Vec::new();
        for g in specs {
            if g.kind != GeneratorKind::DividedPower {
                generators.push(g);
                continue;
            }
            if g.degree <= 0 {
                return Err(AlgebraError::InvalidGenerator {
                    name: g.name,
                    reason: "divided-power generators need positive degree".into(),
                });
            }
            let mut fam = DividedPowerFamily { base: g.name.clone(), degree: g.degree, members: vec![] };
            let mut k: i64 = 1;
            while k * g.degree <= degree_bound {
                fam.members.push(generators.len());
                generators.push(GeneratorSpec::new(
                    format!("γ{}({})", k, g.name),
                    k * g.degree,
                    GeneratorKind::Truncated { height: p },
                ));
                k *= p as i64;
            }
            divided_powers.push(fam);
        }
        let mut index = HashMap::new();
        for (i, g) in generators.iter().enumerate() {
            if index.insert(g.name.clone(), i).is_some() {
                return Err(AlgebraError::DuplicateGenerator(g.name.clone()));
            }
            if g.degree < 0 {
                return Err(AlgebraError::InvalidGenerator { name: g.name.clone(), reason: "negative degree".into() });
            }
            if let GeneratorKind::Truncated { height } = g.kind {
                if height < 2 {
                    return Err(AlgebraError::InvalidGenerator {
                        name: g.name.clone(),
                        reason: "truncation height must be at least 2".into(),
                    });
                }
            }
            if p != 2 && g.kind == GeneratorKind::Exterior && g.degree % 2 == 0 {
                return Err(AlgebraError::InvalidGenerator {
                    name: g.name.clone(),
                    reason: format!("exterior generators need odd degree at p = {p}"),
                });
            }
            // Over odd p an odd-degree class squares to zero, so only exterior (or height-2) kinds fit.
            if p != 2 && g.degree % 2 != 0 {
                let ok = matches!(g.kind, GeneratorKind::Exterior | GeneratorKind::Truncated { height: 2 });
                if !ok {
                    return Err(AlgebraError::InvalidGenerator {
                        name: g.name.clone(),
                        reason: format!("odd degree {} requires an exterior generator at p = {p}", g.degree),
                    });
                }
            }
        }
        Ok(Algebra { fp, generators, index, divided_powers })
    }

    pub fn p(&self) -> u32 {
        self.fp.p()
    }

    pub fn field(&self) -> Fp {
        self.fp
    }

    pub fn generators(&self) -> &[GeneratorSpec] {
        &self.generators
    }

    pub fn divided_power_families(&self) -> &[DividedPowerFamily] {
        &self.divided_powers
    }

    pub fn generator_index(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| AlgebraError::UnknownGenerator(name.to_string()))
    }

    /// The same algebra with one more generator appended at the end of the order.
    pub fn with_generator(&self, g: GeneratorSpec) -> Result<Algebra> {
        let mut gens = self.generators.clone();
        gens.push(g);
        let mut a = Algebra::new_bounded(self.p(), gens, 0)?;
        a.divided_powers = self.divided_powers.clone();
        Ok(a)
    }

    pub fn unit(&self) -> Monomial {
        Monomial { degree: 0, exps: vec![0; self.generators.len()] }
    }

    pub fn generator(&self, name: &str) -> Result<Monomial> {
        self.monomial(&[(name, 1)])
    }

    /// Monomial from `(name, exponent)` pairs.
    pub fn monomial(&self, factors: &[(&str, i32)]) -> Result<Monomial> {
        let mut exps = vec![0; self.generators.len()];
        for &(name, e) in factors {
            exps[self.generator_index(name)?] += e;
        }
        self.monomial_from_exponents(exps)
    }

    pub fn monomial_from_exponents(&self, exps: Vec<i32>) -> Result<Monomial> {
        if exps.len() != self.generators.len() {
            return Err(AlgebraError::ForeignGenerator(format!(
                "exponent vector of length {} for an algebra with {} generators",
                exps.len(),
                self.generators.len()
            )));
        }
        for (g, &e) in self.generators.iter().zip(&exps) {
            if !g.kind.admits(e) {
                return Err(AlgebraError::InvalidGenerator {
                    name: g.name.clone(),
                    reason: format!("exponent {e} not admissible for {:?}", g.kind),
                });
            }
        }
        let degree = self.degree_of(&exps);
        Ok(Monomial { degree, exps })
    }

    fn degree_of(&self, exps: &[i32]) -> i64 {
        self.generators.iter().zip(exps).map(|(g, &e)| g.degree * e as i64).sum()
    }

    /// Checks that `m` belongs to this algebra.
    pub fn check_monomial(&self, m: &Monomial) -> Result<()> {
        if m.exps.len() != self.generators.len() {
            return Err(AlgebraError::ForeignGenerator(format!(
                "monomial with {} exponents in an algebra with {} generators",
                m.exps.len(),
                self.generators.len()
            )));
        }
        for (g, &e) in self.generators.iter().zip(&m.exps) {
            if !g.kind.admits(e) {
                return Err(AlgebraError::ForeignGenerator(format!("exponent {e} on {}", g.name)));
            }
        }
        if self.degree_of(&m.exps) != m.degree {
            return Err(AlgebraError::ForeignGenerator("monomial degree does not match this algebra".into()));
        }
        Ok(())
    }

    pub fn check_element(&self, x: &Element) -> Result<()> {
        for (m, c) in x.terms() {
            self.check_monomial(m)?;
            if c == 0 || c >= self.p() {
                return Err(AlgebraError::ForeignGenerator(format!("coefficient {c} is not a nonzero residue")));
            }
        }
        Ok(())
    }

    /// Product of two monomials as `Some((monomial, negate))`, or `None` if it vanishes.
    pub fn multiply_monomials(&self, a: &Monomial, b: &Monomial) -> Option<(Monomial, bool)> {
        let mut exps = Vec::with_capacity(a.exps.len());
        for ((g, &x), &y) in self.generators.iter().zip(&a.exps).zip(&b.exps) {
            let e = x + y;
            if let Some(max) = g.kind.max_exponent() {
                if e > max {
                    return None;
                }
            }
            exps.push(e);
        }
        // Koszul sign: moving each factor of `b` past the later factors of `a`.
        let mut negate = false;
        if self.p() != 2 {
            let mut odd_after = false;
            for i in (0..a.exps.len()).rev() {
                let deg = self.generators[i].degree;
                if deg % 2 != 0 && b.exps[i] % 2 != 0 && odd_after {
                    negate = !negate;
                }
                if deg % 2 != 0 && a.exps[i] % 2 != 0 {
                    odd_after = !odd_after;
                }
            }
        }
        Some((Monomial { degree: a.degree + b.degree, exps }, negate))
    }

    /// Bilinear graded-commutative product.
    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check_element(a)?;
        self.check_element(b)?;
        Ok(self.multiply_unchecked(a, b))
    }

    pub(crate) fn multiply_unchecked(&self, a: &Element, b: &Element) -> Element {
        let f = self.fp;
        let mut out = Element::zero();
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                if let Some((m, neg)) = self.multiply_monomials(ma, mb) {
                    let c = f.mul(ca, cb);
                    out.add_term(f, m, if neg { f.neg(c) } else { c });
                }
            }
        }
        out
    }

    pub fn multiply_monomial_element(&self, m: &Monomial, x: &Element) -> Element {
        self.multiply_unchecked(&Element::from_monomial(m.clone()), x)
    }

    /// All admissible monomials of degree exactly `d`, in canonical order.
    ///
    /// Laurent and degree-zero polynomial generators make each degree infinite-dimensional;
    /// `filtration_cap` bounds the absolute value of their exponents.
    pub fn basis_in_degree(&self, d: i64, filtration_cap: Option<i64>) -> Result<Vec<Monomial>> {
        let mut bounded_first: Vec<usize> = Vec::new();
        let mut positive: Vec<usize> = Vec::new();
        let mut zero_degree: Vec<usize> = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            if g.unbounded_in_degree() {
                if filtration_cap.is_none() {
                    return Err(AlgebraError::InfiniteBasis(g.name.clone()));
                }
                bounded_first.push(i);
            } else if g.degree == 0 {
                zero_degree.push(i);
            } else {
                positive.push(i);
            }
        }
        let cap = filtration_cap.unwrap_or(0);
        let mut out = Vec::new();
        let mut exps = vec![0i32; self.generators.len()];
        self.enumerate_capped(&bounded_first, &zero_degree, &positive, cap, d, &mut exps, &mut out);
        out.sort();
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_capped(
        &self,
        capped: &[usize],
        zero_degree: &[usize],
        positive: &[usize],
        cap: i64,
        remaining: i64,
        exps: &mut Vec<i32>,
        out: &mut Vec<Monomial>,
    ) {
        if let Some((&g, rest)) = capped.split_first() {
            let spec = &self.generators[g];
            let lo = if spec.kind == GeneratorKind::Laurent { -cap } else { 0 };
            for e in lo..=cap {
                exps[g] = e as i32;
                self.enumerate_capped(rest, zero_degree, positive, cap, remaining - e * spec.degree, exps, out);
            }
            exps[g] = 0;
            return;
        }
        if let Some((&g, rest)) = zero_degree.split_first() {
            let max = self.generators[g].kind.max_exponent().unwrap_or(0);
            for e in 0..=max {
                exps[g] = e;
                self.enumerate_capped(capped, rest, positive, cap, remaining, exps, out);
            }
            exps[g] = 0;
            return;
        }
        self.enumerate_positive(positive, remaining, exps, out);
    }

    fn enumerate_positive(&self, gens: &[usize], remaining: i64, exps: &mut Vec<i32>, out: &mut Vec<Monomial>) {
        let Some((&g, rest)) = gens.split_first() else {
            if remaining == 0 {
                out.push(Monomial { degree: self.degree_of(exps), exps: exps.clone() });
            }
            return;
        };
        if remaining < 0 {
            return;
        }
        let spec = &self.generators[g];
        let mut max = remaining / spec.degree;
        if let Some(m) = spec.kind.max_exponent() {
            max = max.min(m as i64);
        }
        for e in 0..=max {
            exps[g] = e as i32;
            self.enumerate_positive(rest, remaining - e * spec.degree, exps, out);
        }
        exps[g] = 0;
    }

    /// All monomials of degree `0..=max_degree`, grouped by degree. Requires every generator to
    /// have positive degree (or bounded exponents in degree zero).
    pub fn monomials_up_to(&self, max_degree: i64) -> Result<BTreeMap<i64, Vec<Monomial>>> {
        let mut by_degree: BTreeMap<i64, Vec<Monomial>> = BTreeMap::new();
        if max_degree < 0 {
            return Ok(by_degree);
        }
        for g in &self.generators {
            if g.unbounded_in_degree() {
                return Err(AlgebraError::InfiniteBasis(g.name.clone()));
            }
        }
        let mut exps = vec![0i32; self.generators.len()];
        self.enumerate_bounded(0, max_degree, &mut exps, &mut by_degree);
        for v in by_degree.values_mut() {
            v.sort();
        }
        Ok(by_degree)
    }

    fn enumerate_bounded(&self, g: usize, budget: i64, exps: &mut Vec<i32>, out: &mut BTreeMap<i64, Vec<Monomial>>) {
        if g == self.generators.len() {
            let m = Monomial { degree: self.degree_of(exps), exps: exps.clone() };
            out.entry(m.degree).or_default().push(m);
            return;
        }
        let spec = &self.generators[g];
        let mut max = if spec.degree == 0 { i64::MAX } else { budget / spec.degree };
        if let Some(m) = spec.kind.max_exponent() {
            max = max.min(m as i64);
        }
        for e in 0..=max {
            exps[g] = e as i32;
            self.enumerate_bounded(g + 1, budget - e * spec.degree, exps, out);
        }
        exps[g] = 0;
    }

    /// Extends `rules` (generator ↦ value) to the unique derivation with
    /// `d(xy) = d(x) y + (-1)^{|x|} x d(y)`.
    pub fn derivation_extend(&self, rules: &[(Monomial, Element)], x: &Element) -> Result<Element> {
        self.check_element(x)?;
        let mut table: Vec<Option<Element>> = vec![None; self.generators.len()];
        for (src, target) in rules {
            self.check_monomial(src)?;
            self.check_element(target)?;
            let nonzero: Vec<(usize, i32)> =
                src.exps.iter().copied().enumerate().filter(|&(_, e)| e != 0).collect();
            match nonzero.as_slice() {
                [(g, 1)] => table[*g] = Some(target.clone()),
                _ => return Err(AlgebraError::NotAGenerator(self.format_monomial(src, false))),
            }
        }
        let f = self.fp;
        let mut out = Element::zero();
        for (m, c) in x.terms() {
            out.add_scaled(f, &self.derive_monomial(&table, m), c);
        }
        Ok(out)
    }

    /// Leibniz expansion of a single monomial, given the derivation on generators.
    pub(crate) fn derive_monomial(&self, table: &[Option<Element>], m: &Monomial) -> Element {
        let f = self.fp;
        let mut out = Element::zero();
        let mut prefix = self.unit();
        for (i, g) in self.generators.iter().enumerate() {
            let a = m.exps[i];
            if a != 0 {
                if let Some(dg) = &table[i] {
                    let coeff = if g.degree % 2 == 0 { f.reduce(a as i64) } else { (a.rem_euclid(2)) as u32 % f.p() };
                    if coeff != 0 {
                        // (-1)^{|prefix|} prefix · (a g^{a-1} dg) · suffix
                        let mut rest = prefix.clone();
                        rest.exps[i] = a - 1;
                        rest.degree += (a as i64 - 1) * g.degree;
                        let mut suffix = self.unit();
                        for j in (i + 1)..self.generators.len() {
                            suffix.exps[j] = m.exps[j];
                            suffix.degree += m.exps[j] as i64 * self.generators[j].degree;
                        }
                        let term = self.multiply_unchecked(
                            &self.multiply_monomial_element(&rest, dg),
                            &Element::from_monomial(suffix),
                        );
                        let sign = f.sign(prefix.degree % 2 != 0);
                        out.add_scaled(f, &term, f.mul(sign, coeff));
                    }
                }
            }
            prefix.exps[i] = a;
            prefix.degree += a as i64 * g.degree;
        }
        out
    }

    /// The divided power `γ_k(x)` of a divided-power generator, expressed through its
    /// expansion: `∏_i γ_{p^i}^{k_i} / k_i!` where `k = Σ k_i p^i`.
    pub fn gamma(&self, base: &str, k: u64) -> Result<Element> {
        let fam = self
            .divided_powers
            .iter()
            .find(|fam| fam.base == base)
            .ok_or_else(|| AlgebraError::UnknownGenerator(base.to_string()))?;
        let f = self.fp;
        let p = f.p() as u64;
        let mut exps = vec![0i32; self.generators.len()];
        let mut coeff = 1u32;
        let mut rest = k;
        for &member in &fam.members {
            let digit = (rest % p) as u32;
            exps[member] = digit as i32;
            for j in 1..=digit {
                coeff = f.mul(coeff, f.inv(j));
            }
            rest /= p;
        }
        if rest != 0 {
            return Err(AlgebraError::InvalidGenerator {
                name: base.to_string(),
                reason: format!("γ_{k} lies beyond the expansion bound"),
            });
        }
        let m = self.monomial_from_exponents(exps)?;
        Ok(Element::from_monomial(m).scaled(f, coeff))
    }

    pub fn format_monomial(&self, m: &Monomial, ascii: bool) -> String {
        let mut parts = Vec::new();
        for (g, &e) in self.generators.iter().zip(&m.exps) {
            if e == 0 {
                continue;
            }
            let name = if ascii { ascii_name(&g.name) } else { g.name.clone() };
            if e == 1 {
                parts.push(name);
            } else {
                parts.push(format!("{name}^{e}"));
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join(if ascii { "*" } else { "·" })
        }
    }

    pub fn format_element(&self, x: &Element, ascii: bool) -> String {
        if x.is_zero() {
            return "0".to_string();
        }
        x.terms()
            .map(|(m, c)| {
                let body = self.format_monomial(m, ascii);
                if c == 1 {
                    body
                } else {
                    format!("{c}{}{body}", if ascii { "*" } else { "·" })
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Inverse of [`Algebra::format_monomial`] (either spelling).
    pub fn parse_monomial(&self, s: &str) -> Result<Monomial> {
        let s = s.trim();
        if s == "1" {
            return Ok(self.unit());
        }
        let mut exps = vec![0i32; self.generators.len()];
        for factor in s.split(['·', '*']) {
            let (name, e) = match factor.split_once('^') {
                Some((n, e)) => (n, e.parse::<i32>().map_err(|_| AlgebraError::Parse(s.to_string()))?),
                None => (factor, 1),
            };
            let idx = match self.index.get(name) {
                Some(&i) => i,
                None => self
                    .generators
                    .iter()
                    .position(|g| ascii_name(&g.name) == name)
                    .ok_or_else(|| AlgebraError::UnknownGenerator(name.to_string()))?,
            };
            exps[idx] += e;
        }
        self.monomial_from_exponents(exps)
    }

    pub fn parse_element(&self, s: &str) -> Result<Element> {
        let f = self.fp;
        let mut out = Element::zero();
        if s.trim() == "0" {
            return Ok(out);
        }
        for term in s.split(" + ") {
            let term = term.trim();
            // An optional leading coefficient is separated by the first product sign.
            let (c, body) = match term.split_once(['·', '*']) {
                Some((head, tail)) if head.chars().all(|ch| ch.is_ascii_digit()) && !head.is_empty() => {
                    (head.parse::<u32>().map_err(|_| AlgebraError::Parse(term.to_string()))?, tail)
                }
                _ => (1, term),
            };
            out.add_term(f, self.parse_monomial(body)?, c % f.p());
        }
        Ok(out)
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .generators
            .iter()
            .map(|g| {
                let kind = match g.kind {
                    GeneratorKind::Exterior => "E".to_string(),
                    GeneratorKind::Polynomial => "P".to_string(),
                    GeneratorKind::Truncated { height } => format!("P_{height}"),
                    GeneratorKind::DividedPower => "Γ".to_string(),
                    GeneratorKind::Laurent => "P±".to_string(),
                };
                format!("{kind}({}|{})", g.name, g.degree)
            })
            .collect();
        write!(out, "F_{}[{}]", self.p(), parts.join(" ⊗ "))
    }
}
