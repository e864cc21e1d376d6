//! Hochschild homology of free graded-commutative algebras by the HKR rules.
//!
//! A polynomial generator x contributes an exterior σx, an exterior generator contributes
//! a divided-power σx in characteristic p and a polynomial σx rationally, with
//! `|σx| = |x| + 1`. The answer for a tensor product is the tensor product of the answers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, GeneratorKind, GeneratorSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HochschildError {
    #[error("not free: generator {0:?} is {1}")]
    NotFree(String, &'static str),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characteristic {
    Zero,
    /// The prime of the input algebra.
    P,
}

/// The algebra `A ⊗ (σ-generators)`.
///
/// In characteristic zero the field of `algebra` is only a carrier for the generator
/// table; dimension counts do not depend on it.
#[derive(Clone, Debug)]
pub struct HHResult {
    pub algebra: Algebra,
    pub characteristic: Characteristic,
    /// `(input generator, σ generator)` names; divided powers map to their base name.
    pub sigma: Vec<(String, String)>,
}

pub fn sigma_name(name: &str) -> String {
    format!("σ{name}")
}

/// HKR Hochschild homology of a free algebra. Divided powers are expanded through
/// `degree_bound`, so the result is exact in degrees `≤ degree_bound`.
pub fn hh_free(a: &Algebra, characteristic: Characteristic, degree_bound: i64) -> Result<HHResult, HochschildError> {
    if !a.divided_power_families().is_empty() {
        return Err(HochschildError::NotFree(a.divided_power_families()[0].base.clone(), "a divided power"));
    }
    let mut specs: Vec<GeneratorSpec> = a.generators().to_vec();
    let mut sigma = Vec::new();
    for g in a.generators() {
        let kind = match (g.kind, characteristic) {
            (GeneratorKind::Polynomial, _) => GeneratorKind::Exterior,
            (GeneratorKind::Exterior, Characteristic::P) => GeneratorKind::DividedPower,
            (GeneratorKind::Exterior, Characteristic::Zero) => GeneratorKind::Polynomial,
            (GeneratorKind::Truncated { .. }, _) => return Err(HochschildError::NotFree(g.name.clone(), "truncated")),
            (GeneratorKind::Laurent, _) => return Err(HochschildError::NotFree(g.name.clone(), "Laurent")),
            (GeneratorKind::DividedPower, _) => {
                return Err(HochschildError::NotFree(g.name.clone(), "a divided power"))
            }
        };
        let name = sigma_name(&g.name);
        specs.push(GeneratorSpec::new(name.clone(), g.degree + 1, kind));
        sigma.push((g.name.clone(), name));
    }
    let algebra = Algebra::new_bounded(a.p(), specs, degree_bound)?;
    Ok(HHResult { algebra, characteristic, sigma })
}

/// Dimension of the result in each total degree `0..=max_degree`, zeros included.
pub fn hh_dims(res: &HHResult, max_degree: i64) -> Result<BTreeMap<i64, usize>, HochschildError> {
    let monomials = res.algebra.monomials_up_to(max_degree)?;
    Ok((0..=max_degree).map(|d| (d, monomials.get(&d).map_or(0, Vec::len))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_polynomial_input() {
        let a = Algebra::new(3, vec![GeneratorSpec::polynomial("v1", 4), GeneratorSpec::polynomial("v2", 16)]).unwrap();
        let hh = hh_free(&a, Characteristic::Zero, 60).unwrap();
        let sig: Vec<(i64, GeneratorKind)> =
            hh.algebra.generators()[2..].iter().map(|g| (g.degree, g.kind)).collect();
        assert_eq!(sig, vec![(5, GeneratorKind::Exterior), (17, GeneratorKind::Exterior)]);
    }

    #[test]
    fn exterior_in_char_two() {
        let a = Algebra::new(2, vec![GeneratorSpec::exterior("x", 3)]).unwrap();
        let hh = hh_free(&a, Characteristic::P, 8).unwrap();
        let dims: Vec<usize> = hh_dims(&hh, 8).unwrap().into_values().collect();
        assert_eq!(dims, vec![1, 0, 0, 1, 1, 0, 0, 1, 1]);
    }

    #[test]
    fn unit_and_truncated_inputs() {
        let unit = Algebra::new(5, vec![]).unwrap();
        let hh = hh_free(&unit, Characteristic::P, 10).unwrap();
        assert_eq!(hh_dims(&hh, 0).unwrap(), BTreeMap::from([(0, 1)]));
        let t = Algebra::new(2, vec![GeneratorSpec::new("x", 2, GeneratorKind::Truncated { height: 2 })]).unwrap();
        assert!(matches!(hh_free(&t, Characteristic::P, 10), Err(HochschildError::NotFree(..))));
    }
}
