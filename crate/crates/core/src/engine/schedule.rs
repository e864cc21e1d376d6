//! Differential schedules: page-indexed rules `d_r(source) = target` on E_1 = A[v].

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{EngineError, Window};
use crate::algebra::{Algebra, Element, GeneratorKind, GeneratorSpec, Monomial};
use crate::closed_form::thh_mod_p_algebra;
use crate::formulas::{self, FamilyCase, LambdaFamily};

/// One injected differential. Both sides live in the E_1 algebra `A ⊗ P(v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub source: Monomial,
    pub target: Element,
}

/// Choice between the two differential patterns left open for the v_1 case at p = 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V1Variant {
    /// Only the μ-power differentials of the odd-primary pattern.
    Plain,
    /// Additionally `d_{r(n,1)+2}(λ_{n+3}) = v_1^{r(n,1)+2} λ_1 λ_{n+2}` for even n ≥ 2, without
    /// the μ-power differentials that would hit those λ_{n+3}.
    Extra,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferentialSchedule {
    /// The mod-v algebra A.
    pub base: Algebra,
    pub v: GeneratorSpec,
    /// `A ⊗ P(v)`, with v the last generator.
    pub e1: Algebra,
    pub pages: BTreeMap<u32, Vec<Rule>>,
    pub label: String,
    /// Rules come from a conjectural pattern rather than a proved one.
    pub conjectural: bool,
}

impl DifferentialSchedule {
    pub fn new(base: Algebra, v: GeneratorSpec, label: impl Into<String>) -> Result<Self, EngineError> {
        if base.generator_index(&v.name).is_ok() {
            return Err(EngineError::InvalidInput(format!("{} is already a generator of the base algebra", v.name)));
        }
        if v.kind != GeneratorKind::Polynomial {
            return Err(EngineError::InvalidInput("the Bockstein variable must be polynomial".into()));
        }
        let e1 = base.with_generator(v.clone())?;
        Ok(DifferentialSchedule { base, v, e1, pages: BTreeMap::new(), label: label.into(), conjectural: false })
    }

    /// Adds `d_r(source) = v^r · target` where both sides are given over the base algebra.
    pub fn push(&mut self, r: u32, source: &Monomial, target: &Element) -> Result<(), EngineError> {
        let source = self.lift(source, 0)?;
        let mut lifted = Element::zero();
        for (m, c) in target.terms() {
            lifted.add_term(self.e1.field(), self.lift(m, r as i32)?, c);
        }
        self.pages.entry(r).or_default().push(Rule { source, target: lifted });
        Ok(())
    }

    fn lift(&self, m: &Monomial, v_exp: i32) -> Result<Monomial, EngineError> {
        self.base.check_monomial(m)?;
        let mut exps = m.exponents().to_vec();
        exps.push(v_exp);
        Ok(self.e1.monomial_from_exponents(exps)?)
    }

    pub fn max_page(&self) -> u32 {
        self.pages.keys().next_back().copied().unwrap_or(0)
    }

    pub fn page_sum(&self) -> u64 {
        self.pages.keys().map(|&r| r as u64).sum()
    }

    pub fn rule_count(&self) -> usize {
        self.pages.values().map(Vec::len).sum()
    }

    /// Same schedule with every target multiplied by the unit `u`.
    pub fn rescaled(&self, u: u32) -> DifferentialSchedule {
        let f = self.e1.field();
        let mut out = self.clone();
        for rules in out.pages.values_mut() {
            for rule in rules {
                rule.target = rule.target.scaled(f, u % f.p());
            }
        }
        out
    }
}

fn small(x: &BigInt, what: &str) -> Result<i64, EngineError> {
    x.to_i64().ok_or_else(|| EngineError::InvalidInput(format!("{what} = {x} exceeds machine range")))
}

fn mu_power(a: &Algebra, mu: &str, e: i64) -> Result<Monomial, EngineError> {
    let e = i32::try_from(e).map_err(|_| EngineError::InvalidInput(format!("μ exponent {e} too large")))?;
    Ok(a.monomial(&[(mu, e)])?)
}

fn v_spec(p: u32, m: u32) -> Result<GeneratorSpec, EngineError> {
    let deg = small(&formulas::deg_v(p, m)?, "|v|")?;
    Ok(GeneratorSpec::polynomial(format!("v{m}"), deg))
}

/// `d_{ν_p(k)+1}(μ^k) = v_0^{ν_p(k)+1} μ^{k−1} λ_{n+1}` for every k whose target lies in the window.
pub fn schedule_v0(p: u32, n: u32, w: &Window) -> Result<DifferentialSchedule, EngineError> {
    let a = thh_mod_p_algebra(p, n)?;
    let mu = format!("μ{}", n + 1);
    let lam = format!("λ{}", n + 1);
    let deg_mu = small(&formulas::deg_mu(p, n)?, "|μ|")?;
    let mut sched = DifferentialSchedule::new(a.clone(), v_spec(p, 0)?, "v0")?;
    let f = a.field();
    let mut k: i64 = 1;
    while k * deg_mu - 1 <= w.horizon() {
        let r = formulas::nu_p_u64(p, k as u64)? + 1;
        let src = mu_power(&a, &mu, k)?;
        let tgt = a.monomial(&[(mu.as_str(), (k - 1) as i32), (lam.as_str(), 1)])?;
        sched.push(r, &src, &Element::from_monomial(tgt).scaled(f, 1))?;
        k += 1;
    }
    Ok(sched)
}

/// `d_{r(n,1)}(μ_3^{p^{n−1}}) = v_1^{r(n,1)} λ_{n+1}`, n ≥ 1, with λ from the v_1 family.
///
/// At p = 2 a [`V1Variant`] must be chosen.
pub fn schedule_v1(p: u32, w: &Window, variant: Option<V1Variant>) -> Result<DifferentialSchedule, EngineError> {
    if p == 2 && variant.is_none() {
        return Err(EngineError::Ambiguous(
            "v1 case at p = 2: two differential patterns are possible; choose a variant".into(),
        ));
    }
    let a = thh_mod_p_algebra(p, 2)?;
    let fam = LambdaFamily::new(FamilyCase::V1, p)?;
    let mut sched = DifferentialSchedule::new(a.clone(), v_spec(p, 1)?, "v1")?;
    // Under the extra pattern λ_{k+3} (k even, k ≥ 2) supports a differential, so it cannot
    // also be the target of the μ-power differential; those rules are left out.
    let extra_source = |idx: u32| variant == Some(V1Variant::Extra) && idx >= 5 && idx % 2 == 1;
    let mut n = 1;
    loop {
        let target_deg = small(&fam.degree(n + 1)?, "|λ|")?;
        if target_deg > w.horizon() {
            break;
        }
        if extra_source(n + 1) {
            n += 1;
            continue;
        }
        let r = small(&formulas::r_len(p, n, 1)?, "r(n,1)")? as u32;
        let src = mu_power(&a, "μ3", small(&BigInt::from(p).pow(n - 1), "μ exponent")?)?;
        let tgt = fam.expand(&a, n + 1)?;
        sched.push(r, &src, &Element::from_monomial(tgt))?;
        n += 1;
    }
    if variant == Some(V1Variant::Extra) {
        let mut n = 2;
        loop {
            let lam_hi = fam.expand(&a, n + 3)?;
            let target = a.multiply_monomials(&a.generator("λ1")?, &fam.expand(&a, n + 2)?);
            if lam_hi.degree() - 1 > w.horizon() {
                break;
            }
            let (tgt, neg) = target.ok_or_else(|| EngineError::InvalidInput("λ1·λ_{n+2} vanishes".into()))?;
            let f = a.field();
            let r = small(&formulas::r_len(p, n, 1)?, "r(n,1)")? as u32 + 2;
            sched.push(r, &lam_hi, &Element::from_monomial(tgt).scaled(f, f.sign(neg)))?;
            n += 2;
        }
    }
    Ok(sched)
}

/// `d_{r(n,2)}(μ_3^{p^{n−1}}) = v_2^{r(n,2)} λ_n`, n ≥ 1, with λ from the v_2 family.
pub fn schedule_v2(p: u32, w: &Window) -> Result<DifferentialSchedule, EngineError> {
    let a = thh_mod_p_algebra(p, 2)?;
    let fam = LambdaFamily::new(FamilyCase::V2, p)?;
    let mut sched = DifferentialSchedule::new(a.clone(), v_spec(p, 2)?, "v2")?;
    let mut n = 1;
    loop {
        if small(&fam.degree(n)?, "|λ|")? > w.horizon() {
            break;
        }
        let r = small(&formulas::r_len(p, n, 2)?, "r(n,2)")? as u32;
        let src = mu_power(&a, "μ3", small(&BigInt::from(p).pow(n - 1), "μ exponent")?)?;
        sched.push(r, &src, &Element::from_monomial(fam.expand(&a, n)?))?;
        n += 1;
    }
    Ok(sched)
}

/// Conjectural pattern `d_{r_n(s,m)}(μ_{n+1}^{p^{s−1}}) = v_m^{r_n(s,m)} λ_{n−m+s}`.
pub fn schedule_conj(
    p: u32,
    n: u32,
    m: u32,
    w: &Window,
    variant: Option<V1Variant>,
) -> Result<DifferentialSchedule, EngineError> {
    if m == 0 || m > n {
        return Err(EngineError::InvalidInput(format!("need 1 ≤ m ≤ n, got n = {n}, m = {m}")));
    }
    if m == 1 && p == 2 {
        match variant {
            Some(V1Variant::Plain) => {}
            Some(V1Variant::Extra) => {
                return Err(EngineError::InvalidInput(
                    "the extra p = 2 pattern is only formulated for n = 2; use the v1 case".into(),
                ))
            }
            None => {
                return Err(EngineError::Ambiguous(
                    "m = 1 at p = 2: two differential patterns are possible; choose a variant".into(),
                ))
            }
        }
    }
    let a = thh_mod_p_algebra(p, n)?;
    let fam = LambdaFamily::new(FamilyCase::Conjecture { n, m }, p)?;
    let mu = format!("μ{}", n + 1);
    let mut sched = DifferentialSchedule::new(a.clone(), v_spec(p, m)?, format!("conj(n={n},m={m})"))?;
    sched.conjectural = true;
    let mut s = 1;
    loop {
        let idx = n - m + s;
        if small(&fam.degree(idx)?, "|λ|")? > w.horizon() {
            break;
        }
        let r = small(&formulas::r_conj(p, n, m, s)?, "r_n(s,m)")? as u32;
        let src = mu_power(&a, &mu, small(&BigInt::from(p).pow(s - 1), "μ exponent")?)?;
        sched.push(r, &src, &Element::from_monomial(fam.expand(&a, idx)?))?;
        s += 1;
    }
    Ok(sched)
}
