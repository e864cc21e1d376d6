//! Integer formulas: valuations, generator degrees, differential lengths and λ-families.
//!
//! Everything is exact big-integer arithmetic. Degrees at p = 7, n = 25 exceed 64 bits.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, Monomial};
use crate::field::is_prime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("valuation of non-positive integer {0}")]
    NonPositive(BigInt),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

pub type Result<T> = std::result::Result<T, FormulaError>;

fn check_prime(p: u32) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(FormulaError::NotPrime(p))
    }
}

fn pow(p: u32, e: u32) -> BigInt {
    BigInt::from(p).pow(e)
}

/// p-adic valuation of a positive integer.
pub fn nu_p(p: u32, k: &BigInt) -> Result<u32> {
    check_prime(p)?;
    if !k.is_positive() {
        return Err(FormulaError::NonPositive(k.clone()));
    }
    let bp = BigInt::from(p);
    let mut k = k.clone();
    let mut e = 0;
    while (&k % &bp).is_zero() {
        k /= &bp;
        e += 1;
    }
    Ok(e)
}

pub fn nu_p_u64(p: u32, k: u64) -> Result<u32> {
    nu_p(p, &BigInt::from(k))
}

/// `|λ_i| = 2p^i − 1`.
pub fn deg_lambda(p: u32, i: u32) -> Result<BigInt> {
    check_prime(p)?;
    if i == 0 {
        return Err(FormulaError::OutOfRange("λ_i needs i ≥ 1".into()));
    }
    Ok(2 * pow(p, i) - 1)
}

/// `|μ_{n+1}| = 2p^{n+1}`.
pub fn deg_mu(p: u32, n: u32) -> Result<BigInt> {
    check_prime(p)?;
    Ok(2 * pow(p, n + 1))
}

/// `|v_m| = 2p^m − 2`.
pub fn deg_v(p: u32, m: u32) -> Result<BigInt> {
    check_prime(p)?;
    Ok(2 * pow(p, m) - 2)
}

fn check_case(m: u32) -> Result<()> {
    if m == 1 || m == 2 {
        Ok(())
    } else {
        Err(FormulaError::OutOfRange(format!("case m = {m}; only 1 and 2 have λ-degree formulas")))
    }
}

/// Degree of the m-case class λ_n, by the recursion `d(n) = 2p^n − 2p^{n−1} + d(n − m − 1)`.
pub fn d_deg_recursive(p: u32, n: u32, m: u32) -> Result<BigInt> {
    check_prime(p)?;
    check_case(m)?;
    if n == 0 {
        return Err(FormulaError::OutOfRange("λ_n needs n ≥ 1".into()));
    }
    if n <= 3 {
        return Ok(2 * pow(p, n) - 1);
    }
    Ok(2 * pow(p, n) - 2 * pow(p, n - 1) + d_deg_recursive(p, n - m - 1, m)?)
}

/// Same value as [`d_deg_recursive`], from the alternating-sum closed form.
pub fn d_deg_explicit(p: u32, n: u32, m: u32) -> Result<BigInt> {
    check_prime(p)?;
    check_case(m)?;
    if n == 0 {
        return Err(FormulaError::OutOfRange("λ_n needs n ≥ 1".into()));
    }
    let step = m + 1;
    let mut j = n;
    while j > 3 {
        j -= step;
    }
    let mut total = 2 * pow(p, j) - 1;
    let mut k = n;
    while k > j {
        total += 2 * pow(p, k) - 2 * pow(p, k - 1);
        k -= step;
    }
    Ok(total)
}

pub fn d_deg(p: u32, n: u32, m: u32) -> Result<BigInt> {
    d_deg_explicit(p, n, m)
}

/// Differential length r(n, m) for the v_1 (m = 1) and v_2 (m = 2) cases.
pub fn r_len(p: u32, n: u32, m: u32) -> Result<BigInt> {
    check_prime(p)?;
    check_case(m)?;
    if n == 0 {
        return Err(FormulaError::OutOfRange("r(n, m) needs n ≥ 1".into()));
    }
    let (top, low) = if m == 1 { (n + 1, 2) } else { (n, 1) };
    let mut total = BigInt::zero();
    let mut k = top as i64;
    while k >= low {
        total += pow(p, k as u32);
        k -= (m + 1) as i64;
    }
    Ok(total)
}

/// Conjectural length `r_n(s, m) = p^{n−m+s} + p^{n−m+s−(m+1)} + … + p^{n+j−m}`,
/// with `j ∈ {1, …, m+1}` and `s ≡ j (mod m+1)`.
pub fn r_conj(p: u32, n: u32, m: u32, s: u32) -> Result<BigInt> {
    check_prime(p)?;
    if m == 0 || m > n {
        return Err(FormulaError::OutOfRange(format!("r_n(s, m) needs 1 ≤ m ≤ n, got n = {n}, m = {m}")));
    }
    if s == 0 {
        return Err(FormulaError::OutOfRange("r_n(s, m) needs s ≥ 1".into()));
    }
    let step = m + 1;
    let j = (s - 1) % step + 1;
    let (hi, lo) = (n - m + s, n + j - m);
    let mut total = BigInt::zero();
    let mut k = hi;
    loop {
        total += pow(p, k);
        if k == lo {
            break;
        }
        k -= step;
    }
    Ok(total)
}

/// Whether the v_1-case differential pattern is pinned down at this prime.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseSupport {
    Supported,
    Unsupported(String),
}

pub fn case_support(p: u32, m: u32) -> CaseSupport {
    if m == 1 && p == 2 {
        CaseSupport::Unsupported(
            "at p = 2 two differential patterns remain possible for the v1 case".into(),
        )
    } else {
        CaseSupport::Supported
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyCase {
    V1,
    V2,
    Conjecture { n: u32, m: u32 },
}

impl FamilyCase {
    /// `(n, m)`: the λ's run over 1…n+1 and μ is μ_{n+1}.
    pub fn shape(self) -> (u32, u32) {
        match self {
            FamilyCase::V1 => (2, 1),
            FamilyCase::V2 => (2, 2),
            FamilyCase::Conjecture { n, m } => (n, m),
        }
    }
}

/// The recursively defined classes λ_s, each `λ_base · μ^e`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaFamily {
    pub case: FamilyCase,
    pub p: u32,
}

impl LambdaFamily {
    pub fn new(case: FamilyCase, p: u32) -> Result<Self> {
        check_prime(p)?;
        let (n, m) = case.shape();
        if m == 0 || m > n {
            return Err(FormulaError::OutOfRange(format!("family needs 1 ≤ m ≤ n, got n = {n}, m = {m}")));
        }
        Ok(LambdaFamily { case, p })
    }

    /// `(base λ index, μ exponent)` of λ_s.
    pub fn entry(&self, s: u32) -> Result<(u32, BigInt)> {
        if s == 0 {
            return Err(FormulaError::OutOfRange("λ_s needs s ≥ 1".into()));
        }
        let p = self.p;
        let mut exp = BigInt::zero();
        let mut s = s;
        match self.case {
            FamilyCase::V1 => {
                while s >= 4 {
                    exp += pow(p, s - 4) * (p - 1);
                    s -= 2;
                }
            }
            FamilyCase::V2 => {
                while s > 3 {
                    exp += pow(p, s - 4) * (p - 1);
                    s -= 3;
                }
            }
            FamilyCase::Conjecture { n, m } => {
                while s > n + 1 {
                    exp += pow(p, s - (n + 2)) * (p - 1);
                    s -= m + 1;
                }
            }
        }
        Ok((s, exp))
    }

    pub fn mu_degree(&self) -> BigInt {
        let (n, _) = self.case.shape();
        2 * pow(self.p, n + 1)
    }

    pub fn degree(&self, s: u32) -> Result<BigInt> {
        let (base, exp) = self.entry(s)?;
        Ok(2 * pow(self.p, base) - 1 + exp * self.mu_degree())
    }

    /// λ_s as a monomial of `alg`, whose generators must be named `λ1…` and `μ{n+1}`.
    pub fn expand(&self, alg: &Algebra, s: u32) -> Result<Monomial> {
        let (base, exp) = self.entry(s)?;
        let (n, _) = self.case.shape();
        let e = exp
            .to_i32()
            .ok_or_else(|| FormulaError::OutOfRange(format!("μ exponent {exp} of λ_{s} exceeds machine range")))?;
        let lam = format!("λ{base}");
        let mu = format!("μ{}", n + 1);
        Ok(alg.monomial(&[(lam.as_str(), 1), (mu.as_str(), e)])?)
    }
}

/// Convenience for callers working in machine integers.
pub fn to_i64(x: &BigInt) -> Result<i64> {
    x.to_i64().ok_or_else(|| FormulaError::OutOfRange(format!("{x} exceeds 64 bits")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn valuations() {
        assert_eq!(nu_p_u64(3, 9).unwrap(), 2);
        assert_eq!(nu_p_u64(2, 12).unwrap(), 2);
        assert_eq!(nu_p_u64(5, 7).unwrap(), 0);
        assert!(nu_p_u64(3, 0).is_err());
        assert!(nu_p(3, &b(-3)).is_err());
    }

    #[test]
    fn generator_degrees() {
        assert_eq!(deg_lambda(2, 3).unwrap(), b(15));
        assert_eq!(deg_mu(2, 2).unwrap(), b(16));
        assert_eq!(deg_lambda(3, 1).unwrap(), b(5));
    }

    #[test]
    fn lambda_degrees_in_both_cases() {
        for p in [2u32, 3, 5, 7] {
            let q = |e: u32| b(p as i64).pow(e);
            assert_eq!(d_deg(p, 4, 1).unwrap(), 2 * q(4) - 2 * q(3) + 2 * q(2) - 1);
            assert_eq!(d_deg(p, 4, 2).unwrap(), 2 * q(4) - 2 * q(3) + 2 * q(1) - 1);
            assert_eq!(d_deg(p, 5, 1).unwrap(), 2 * q(5) - 2 * q(4) + 2 * q(3) - 1);
        }
    }

    #[test]
    fn differential_lengths() {
        assert_eq!(r_len(3, 1, 1).unwrap(), b(9));
        assert_eq!(r_len(3, 3, 1).unwrap(), b(90));
        assert_eq!(r_len(3, 4, 2).unwrap(), b(84));
        let r1: Vec<BigInt> = (1..=3).map(|n| r_len(3, n, 1).unwrap()).collect();
        assert_eq!(r1, vec![b(9), b(27), b(90)]);
        let r2: Vec<BigInt> = (1..=4).map(|n| r_len(3, n, 2).unwrap()).collect();
        assert_eq!(r2, vec![b(3), b(9), b(27), b(84)]);
        assert_eq!(r_conj(3, 2, 1, 1).unwrap(), b(9));
        assert!(r_conj(3, 1, 2, 1).is_err());
    }

    #[test]
    fn family_examples() {
        for p in [2u32, 3, 5] {
            let v1 = LambdaFamily::new(FamilyCase::V1, p).unwrap();
            let v2 = LambdaFamily::new(FamilyCase::V2, p).unwrap();
            assert_eq!(v1.entry(4).unwrap(), (2, b(p as i64 - 1)));
            assert_eq!(v2.entry(4).unwrap(), (1, b(p as i64 - 1)));
            assert_eq!(v2.entry(6).unwrap(), (3, b((p * p * (p - 1)) as i64)));
            assert_eq!(v1.entry(3).unwrap(), (3, b(0)));
        }
    }

    #[test]
    fn support_metadata() {
        assert!(matches!(case_support(2, 1), CaseSupport::Unsupported(_)));
        assert_eq!(case_support(3, 1), CaseSupport::Supported);
        assert_eq!(case_support(2, 2), CaseSupport::Supported);
    }
}
