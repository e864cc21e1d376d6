//! Closed-form answers: the mod-p algebra, rational dimensions and the torsion modules
//! T_0^n, T_1^2, T_2^2 and the conjectural T_m^n, as tower profiles.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, GeneratorSpec, Monomial};
use crate::engine::{TowerLength, TowerProfile};
use crate::formulas::{self, FamilyCase, FormulaError, LambdaFamily};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClosedFormError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("projection {0} vanishes in the mod-p algebra")]
    VanishingProjection(String),
}

pub type Result<T> = std::result::Result<T, ClosedFormError>;

/// `E(λ_1, …, λ_{n+1}) ⊗ P(μ_{n+1})` with `|λ_i| = 2p^i − 1`, `|μ_{n+1}| = 2p^{n+1}`.
pub fn thh_mod_p_algebra(p: u32, n: u32) -> std::result::Result<Algebra, FormulaError> {
    let mut gens = Vec::with_capacity(n as usize + 2);
    for i in 1..=n + 1 {
        let d = formulas::to_i64(&formulas::deg_lambda(p, i)?)?;
        gens.push(GeneratorSpec::exterior(format!("λ{i}"), d));
    }
    let d = formulas::to_i64(&formulas::deg_mu(p, n)?)?;
    gens.push(GeneratorSpec::polynomial(format!("μ{}", n + 1), d));
    Ok(Algebra::new(p, gens)?)
}

/// Dimensions of `E_Q(σv_1, …, σv_n)`, `|σv_i| = 2p^i − 1`, through degree `max_degree`.
pub fn rational_thh_dims(p: u32, n: u32, max_degree: i64) -> Result<BTreeMap<i64, usize>> {
    let mut degrees = Vec::new();
    for i in 1..=n {
        let d = formulas::deg_lambda(p, i)?;
        if d <= BigInt::from(max_degree) {
            degrees.push(formulas::to_i64(&d)?);
        }
    }
    Ok(exterior_dims(&degrees, max_degree))
}

fn exterior_dims(degrees: &[i64], max_degree: i64) -> BTreeMap<i64, usize> {
    let mut dims = BTreeMap::from([(0i64, 1usize)]);
    for &d in degrees {
        let mut next = dims.clone();
        for (&t, &k) in &dims {
            if t + d <= max_degree {
                *next.entry(t + d).or_default() += k;
            }
        }
        dims = next;
    }
    dims.retain(|&t, _| t <= max_degree);
    dims
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionGenerator {
    pub name: String,
    pub degree: i64,
    pub length: u64,
    /// Image in the mod-p algebra.
    pub projection: Monomial,
}

/// A module `free ⊕ ⊕ cyclic` given by its generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionPresentation {
    pub free_part: Vec<Monomial>,
    pub torsion_generators: Vec<TorsionGenerator>,
}

impl TorsionPresentation {
    pub fn profile(&self) -> TowerProfile {
        let mut out = TowerProfile::new();
        for m in &self.free_part {
            out.add(m.degree(), TowerLength::Infinite);
        }
        for g in &self.torsion_generators {
            out.add(g.degree, TowerLength::Finite(g.length));
        }
        out
    }

    /// Checks that each projection has its stated degree and names are unique.
    pub fn validate(&self) -> Result<()> {
        let mut names = std::collections::HashSet::new();
        for g in &self.torsion_generators {
            if g.projection.degree() != g.degree || g.length == 0 || !names.insert(g.name.as_str()) {
                return Err(ClosedFormError::InvalidInput(format!("bad torsion generator {}", g.name)));
            }
        }
        Ok(())
    }
}

/// All products `λ_1^{ε_1} ⋯ λ_k^{ε_k}` of degree ≤ `max_degree`, with a label for each.
fn exterior_prefixes(alg: &Algebra, k: u32, max_degree: i64) -> Result<Vec<(String, Monomial)>> {
    let mut out = vec![(String::new(), alg.unit())];
    for i in 1..=k {
        let g = alg.generator(&format!("λ{i}"))?;
        let mut more = Vec::new();
        for (label, m) in &out {
            if m.degree() + g.degree() > max_degree {
                continue;
            }
            let (prod, _) = alg.multiply_monomials(m, &g).expect("distinct exterior generators");
            more.push((format!("{label}λ{i}·"), prod));
        }
        out.extend(more);
    }
    Ok(out)
}

fn multiply_all(alg: &Algebra, factors: &[Monomial], label: &str) -> Result<Monomial> {
    let mut acc = alg.unit();
    for f in factors {
        acc = alg
            .multiply_monomials(&acc, f)
            .ok_or_else(|| ClosedFormError::VanishingProjection(label.to_string()))?
            .0;
    }
    Ok(acc)
}

/// Torsion generators `prefix · λ_{i_1} ⋯ λ_{i_j} · μ^{ℓ·step}` with ℓ ≥ 0, ℓ ≢ p − 1.
#[allow(clippy::too_many_arguments)]
fn push_family(
    pres: &mut TorsionPresentation,
    alg: &Algebra,
    fam: &LambdaFamily,
    name: &str,
    indices: &[u32],
    step: &BigInt,
    prefix_len: u32,
    length: u64,
    max_degree: i64,
) -> Result<()> {
    let p = fam.p;
    let bound = BigInt::from(max_degree);
    let mut lam_deg = BigInt::from(0);
    for &i in indices {
        lam_deg += fam.degree(i)?;
    }
    if lam_deg > bound {
        return Ok(());
    }
    let lams: Vec<Monomial> = indices.iter().map(|&i| fam.expand(alg, i)).collect::<std::result::Result<_, _>>()?;
    let (n, _) = fam.case.shape();
    let mu_name = format!("μ{}", n + 1);
    let step_deg = step * fam.mu_degree();
    let prefixes = exterior_prefixes(alg, prefix_len, max_degree)?;
    let mut ell: u64 = 0;
    loop {
        let deg = &lam_deg + &step_deg * ell;
        if deg > bound {
            break;
        }
        if ell % p as u64 != p as u64 - 1 {
            let e = formulas::to_i64(&(step * ell))?;
            let mu = alg.monomial(&[(mu_name.as_str(), e as i32)])?;
            let label = format!("{name}[ℓ={ell}]");
            let mut factors = lams.clone();
            factors.push(mu);
            let core = multiply_all(alg, &factors, &label)?;
            for (pl, pm) in &prefixes {
                if pm.degree() + core.degree() > max_degree {
                    continue;
                }
                let projection = multiply_all(alg, &[pm.clone(), core.clone()], &label)?;
                pres.torsion_generators.push(TorsionGenerator {
                    name: format!("{pl}{label}"),
                    degree: projection.degree(),
                    length,
                    projection,
                });
            }
        }
        ell += 1;
    }
    Ok(())
}

fn free_part(alg: &Algebra, k: u32, max_degree: i64) -> Result<Vec<Monomial>> {
    Ok(exterior_prefixes(alg, k, max_degree)?.into_iter().map(|(_, m)| m).collect())
}

/// Presentation of `E(λ_1, …, λ_n) ⊕ T_0^n`.
pub fn t0n_presentation(p: u32, n: u32, max_degree: i64) -> Result<TorsionPresentation> {
    let alg = thh_mod_p_algebra(p, n)?;
    let mut pres = TorsionPresentation { free_part: free_part(&alg, n, max_degree)?, torsion_generators: Vec::new() };
    let lam = alg.generator(&format!("λ{}", n + 1))?;
    let mu_name = format!("μ{}", n + 1);
    let prefixes = exterior_prefixes(&alg, n, max_degree)?;
    let mut i: u64 = 1;
    loop {
        let mu = alg.monomial(&[(mu_name.as_str(), (i - 1) as i32)])?;
        let core = alg.multiply_monomials(&lam, &mu).expect("λ·μ^k is nonzero").0;
        if core.degree() > max_degree {
            break;
        }
        let length = formulas::nu_p_u64(p, i)? as u64 + 1;
        for (pl, pm) in &prefixes {
            if pm.degree() + core.degree() > max_degree {
                continue;
            }
            let projection = alg.multiply_monomials(pm, &core).expect("distinct exterior factors").0;
            pres.torsion_generators.push(TorsionGenerator {
                name: format!("{pl}λ{}({i})", n + 1),
                degree: projection.degree(),
                length,
                projection,
            });
        }
        i += 1;
    }
    Ok(pres)
}

pub fn t0n_profile(p: u32, n: u32, max_degree: i64) -> Result<TowerProfile> {
    Ok(t0n_presentation(p, n, max_degree)?.profile())
}

/// Presentation of `P(v_1) ⊗ E(λ_1) ⊕ T_1^2`, valid for p ≥ 3.
pub fn t12_presentation(p: u32, max_degree: i64) -> Result<TorsionPresentation> {
    if p == 2 {
        return Err(ClosedFormError::Unsupported("the v1 case assumes p ≥ 3".into()));
    }
    let alg = thh_mod_p_algebra(p, 2)?;
    let fam = LambdaFamily::new(FamilyCase::V1, p)?;
    let mut pres = TorsionPresentation { free_part: free_part(&alg, 1, max_degree)?, torsion_generators: Vec::new() };
    let mut n = 1;
    while fam.degree(n + 1)? <= BigInt::from(max_degree) {
        let len = formulas::to_i64(&formulas::r_len(p, n, 1)?)? as u64;
        let step = BigInt::from(p).pow(n - 1);
        push_family(&mut pres, &alg, &fam, &format!("z{n}"), &[n + 1], &step, 1, len, max_degree)?;
        push_family(&mut pres, &alg, &fam, &format!("z'{n}"), &[n + 1, n + 2], &step, 1, len, max_degree)?;
        n += 1;
    }
    Ok(pres)
}

pub fn t12_profile(p: u32, max_degree: i64) -> Result<TowerProfile> {
    Ok(t12_presentation(p, max_degree)?.profile())
}

/// Presentation of `P(v_2) ⊕ T_2^2`.
pub fn t22_presentation(p: u32, max_degree: i64) -> Result<TorsionPresentation> {
    let alg = thh_mod_p_algebra(p, 2)?;
    let fam = LambdaFamily::new(FamilyCase::V2, p)?;
    let mut pres = TorsionPresentation { free_part: vec![alg.unit()], torsion_generators: Vec::new() };
    let mut n = 1;
    while fam.degree(n)? <= BigInt::from(max_degree) {
        let len = formulas::to_i64(&formulas::r_len(p, n, 2)?)? as u64;
        let step = BigInt::from(p).pow(n - 1);
        let families: [(&str, Vec<u32>); 4] = [
            ("y", vec![n]),
            ("y'", vec![n, n + 1]),
            ("y''", vec![n, n + 2]),
            ("y'''", vec![n, n + 1, n + 2]),
        ];
        for (name, idx) in families {
            push_family(&mut pres, &alg, &fam, &format!("{name}{n}"), &idx, &step, 0, len, max_degree)?;
        }
        n += 1;
    }
    Ok(pres)
}

pub fn t22_profile(p: u32, max_degree: i64) -> Result<TowerProfile> {
    Ok(t22_presentation(p, max_degree)?.profile())
}

/// Conjectural presentation of `P(v_m) ⊗ E(λ_1, …, λ_{n−m}) ⊕ T_m^n`.
pub fn tmn_presentation(p: u32, n: u32, m: u32, max_degree: i64) -> Result<TorsionPresentation> {
    if m == 0 || m > n {
        return Err(ClosedFormError::InvalidInput(format!("need 1 ≤ m ≤ n, got n = {n}, m = {m}")));
    }
    let alg = thh_mod_p_algebra(p, n)?;
    let fam = LambdaFamily::new(FamilyCase::Conjecture { n, m }, p)?;
    let mut pres =
        TorsionPresentation { free_part: free_part(&alg, n - m, max_degree)?, torsion_generators: Vec::new() };
    let mut s = 1;
    while fam.degree(n - m + s)? <= BigInt::from(max_degree) {
        let len = formulas::to_i64(&formulas::r_conj(p, n, m, s)?)? as u64;
        let step = BigInt::from(p).pow(s - 1);
        for mask in 0u32..(1 << m) {
            let mut idx = vec![n - m + s];
            let mut tag = String::new();
            for j in 0..m {
                let bit = (mask >> j) & 1;
                tag.push(if bit == 1 { '1' } else { '0' });
                if bit == 1 {
                    idx.push(n - m + s + 1 + j);
                }
            }
            push_family(&mut pres, &alg, &fam, &format!("a{s}({tag})"), &idx, &step, n - m, len, max_degree)?;
        }
        s += 1;
    }
    Ok(pres)
}

pub fn tmn_profile(p: u32, n: u32, m: u32, max_degree: i64) -> Result<TowerProfile> {
    Ok(tmn_presentation(p, n, m, max_degree)?.profile())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalizedCase {
    V1,
    V2,
}

/// Degrees and dimensions of a Laurent basis of the localized E_∞ page (filtration 0 slice).
pub fn localized_expected(case: LocalizedCase, p: u32, max_degree: i64) -> Result<BTreeMap<i64, usize>> {
    if !crate::field::is_prime(p) {
        return Err(FormulaError::NotPrime(p).into());
    }
    let mut out = BTreeMap::from([(0, 1)]);
    if case == LocalizedCase::V1 {
        if p == 2 {
            return Err(ClosedFormError::Unsupported("the v1 case assumes p ≥ 3".into()));
        }
        let d = 2 * p as i64 - 1;
        if d <= max_degree {
            out.insert(d, 1);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TowerLength::*;

    #[test]
    fn mod_p_algebra_degrees() {
        let a = thh_mod_p_algebra(3, 2).unwrap();
        let d: Vec<i64> = a.generators().iter().map(|g| g.degree).collect();
        assert_eq!(d, vec![5, 17, 53, 54]);
        assert_eq!(thh_mod_p_algebra(5, 0).unwrap().generators().len(), 2);
    }

    #[test]
    fn rational_dims() {
        assert_eq!(rational_thh_dims(3, 2, 30).unwrap(), BTreeMap::from([(0, 1), (5, 1), (17, 1), (22, 1)]));
        assert_eq!(rational_thh_dims(7, 0, 100).unwrap(), BTreeMap::from([(0, 1)]));
        assert_eq!(rational_thh_dims(2, 2, 12).unwrap(), BTreeMap::from([(0, 1), (3, 1), (7, 1), (10, 1)]));
    }

    #[test]
    fn v0_profile_small() {
        let pr = t0n_profile(2, 2, 58).unwrap();
        assert_eq!(pr.column(31), &[Finite(2)]);
        assert_eq!(pr.column(15), &[Finite(1)]);
        let b = t0n_profile(3, 0, 40).unwrap();
        assert_eq!(b.column(0), &[Infinite]);
        assert_eq!(b.column(5), &[Finite(1)]);
        assert_eq!(b.column(17), &[Finite(2)]);
    }

    #[test]
    fn t12_small_windows() {
        let pr = t12_profile(3, 130).unwrap();
        for t in [17, 22] {
            assert_eq!(pr.column(t), &[Finite(9)]);
        }
        for t in [53, 58] {
            assert_eq!(pr.column(t), &[Finite(27)]);
        }
        for t in [125, 130] {
            assert_eq!(pr.column(t), &[Finite(90)]);
        }
        assert_eq!(t12_profile(3, 80).unwrap().column(70), &[Finite(9)]);
        let tiny = t12_profile(3, 10).unwrap();
        assert_eq!(tiny.len(), 2);
        assert!(matches!(t12_profile(2, 10), Err(ClosedFormError::Unsupported(_))));
    }

    #[test]
    fn t22_small_windows() {
        let pr = t22_profile(2, 20).unwrap();
        for t in [3, 10, 18] {
            assert_eq!(pr.column(t), &[Finite(2)]);
        }
        assert_eq!(t22_profile(2, 4).unwrap().len(), 2);
        let p3 = t22_profile(3, 6).unwrap();
        assert_eq!(p3.column(0), &[Infinite]);
        assert_eq!(p3.column(5), &[Finite(3)]);
        assert_eq!(p3.len(), 2);
    }

    #[test]
    fn presentations_are_consistent() {
        for pres in [t0n_presentation(3, 2, 300).unwrap(), t12_presentation(3, 400).unwrap(), tmn_presentation(3, 3, 2, 300).unwrap()] {
            pres.validate().unwrap();
        }
    }

    #[test]
    fn localized_answers() {
        assert_eq!(localized_expected(LocalizedCase::V1, 3, 100).unwrap(), BTreeMap::from([(0, 1), (5, 1)]));
        assert_eq!(localized_expected(LocalizedCase::V2, 2, 100).unwrap(), BTreeMap::from([(0, 1)]));
    }
}
