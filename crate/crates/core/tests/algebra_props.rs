use std::collections::BTreeMap;

use bss_core::algebra::{Algebra, Element, GeneratorKind, GeneratorSpec, Monomial};
use proptest::prelude::*;

const MAX_DEGREE: i64 = 40;

/// Exterior, polynomial, truncated and divided-power generators, parity-consistent at `p`.
fn mixed(p: u32) -> Algebra {
    let specs = if p == 2 {
        vec![
            GeneratorSpec::exterior("a", 3),
            GeneratorSpec::exterior("b", 4),
            GeneratorSpec::polynomial("x", 5),
            GeneratorSpec::new("t", 2, GeneratorKind::Truncated { height: 4 }),
            GeneratorSpec::new("g", 6, GeneratorKind::DividedPower),
        ]
    } else {
        vec![
            GeneratorSpec::exterior("a", 3),
            GeneratorSpec::exterior("b", 5),
            GeneratorSpec::polynomial("x", 4),
            GeneratorSpec::new("t", 2, GeneratorKind::Truncated { height: 3 }),
            GeneratorSpec::new("g", 6, GeneratorKind::DividedPower),
        ]
    };
    Algebra::new_bounded(p, specs, MAX_DEGREE).unwrap()
}

/// Free algebra with a Bockstein-style variable: d has odd degree `−1 + |v|`.
fn free_with_v(p: u32) -> Algebra {
    let q = p as i64;
    Algebra::new(
        p,
        vec![
            GeneratorSpec::exterior("λ1", 2 * q - 1),
            GeneratorSpec::exterior("λ2", 2 * q * q - 1),
            GeneratorSpec::polynomial("μ", 2 * q * q),
            GeneratorSpec::polynomial("v", 2 * q - 2),
        ],
    )
    .unwrap()
}

fn all_monomials(a: &Algebra, max: i64) -> Vec<Monomial> {
    a.monomials_up_to(max).unwrap().into_values().flatten().collect()
}

fn element(a: &Algebra, pool: &[Monomial], picks: &[(usize, u32)]) -> Element {
    let f = a.field();
    let mut x = Element::zero();
    for &(i, c) in picks {
        x.add_term(f, pool[i % pool.len()].clone(), c % f.p());
    }
    x
}

fn homogeneous(a: &Algebra, pool: &BTreeMap<i64, Vec<Monomial>>, deg: i64, picks: &[(usize, u32)]) -> Element {
    match pool.get(&deg) {
        Some(ms) if !ms.is_empty() => element(a, ms, picks),
        _ => Element::zero(),
    }
}

fn picks() -> impl Strategy<Value = Vec<(usize, u32)>> {
    prop::collection::vec((0usize..10_000, 1u32..100), 1..4)
}

fn sign(a: &Algebra, odd: bool) -> u32 {
    a.field().sign(odd)
}

macro_rules! ring_axioms {
    ($name:ident, $p:expr) => {
        mod $name {
            use super::*;

            proptest! {
                #![proptest_config(ProptestConfig::with_cases(10_000))]

                #[test]
                fn associative(x in picks(), y in picks(), z in picks()) {
                    let a = mixed($p);
                    let pool = all_monomials(&a, MAX_DEGREE / 3);
                    let (x, y, z) = (element(&a, &pool, &x), element(&a, &pool, &y), element(&a, &pool, &z));
                    let left = a.multiply(&a.multiply(&x, &y).unwrap(), &z).unwrap();
                    let right = a.multiply(&x, &a.multiply(&y, &z).unwrap()).unwrap();
                    prop_assert_eq!(left, right);
                }

                #[test]
                fn graded_commutative(i in 0usize..10_000, j in 0usize..10_000) {
                    let a = mixed($p);
                    let pool = all_monomials(&a, MAX_DEGREE / 2);
                    let (m, n) = (&pool[i % pool.len()], &pool[j % pool.len()]);
                    let (x, y) = (Element::from_monomial(m.clone()), Element::from_monomial(n.clone()));
                    let xy = a.multiply(&x, &y).unwrap();
                    let yx = a.multiply(&y, &x).unwrap();
                    let s = sign(&a, m.degree() % 2 != 0 && n.degree() % 2 != 0);
                    prop_assert_eq!(xy.clone(), yx.scaled(a.field(), s));
                    if !xy.is_zero() {
                        prop_assert_eq!(xy.degree(), Some(m.degree() + n.degree()));
                    }
                }

                #[test]
                fn signed_leibniz(
                    x in picks(), y in picks(), dl1 in picks(), dl2 in picks(), dmu in picks(),
                    r in 1i64..3, dx in 0i64..12, dy in 0i64..12,
                ) {
                    let a = free_with_v($p);
                    let by_deg = a.monomials_up_to(160).unwrap();
                    let vdeg = a.generators()[3].degree;
                    let shift = r * vdeg - 1;
                    let mut rules = Vec::new();
                    for (name, choice) in [("λ1", &dl1), ("λ2", &dl2), ("μ", &dmu)] {
                        let g = a.generator(name).unwrap();
                        rules.push((g.clone(), homogeneous(&a, &by_deg, g.degree() + shift, choice)));
                    }
                    let degrees: Vec<i64> = by_deg.keys().copied().filter(|&d| d <= 60).collect();
                    let x = homogeneous(&a, &by_deg, degrees[dx as usize % degrees.len()], &x);
                    let y = homogeneous(&a, &by_deg, degrees[dy as usize % degrees.len()], &y);
                    let f = a.field();
                    let d = |e: &Element| a.derivation_extend(&rules, e).unwrap();
                    let lhs = d(&a.multiply(&x, &y).unwrap());
                    let xdeg = x.degree().unwrap_or(0);
                    let mut rhs = a.multiply(&d(&x), &y).unwrap();
                    rhs.add_scaled(f, &a.multiply(&x, &d(&y)).unwrap(), sign(&a, xdeg % 2 != 0));
                    prop_assert_eq!(lhs, rhs);
                    // F_p-linearity
                    let mut sum = x.clone();
                    sum.add_scaled(f, &y, 2 % f.p());
                    let mut lin = d(&x);
                    lin.add_scaled(f, &d(&y), 2 % f.p());
                    prop_assert_eq!(d(&sum), lin);
                }
            }
        }
    };
}

ring_axioms!(p2, 2);
ring_axioms!(p3, 3);
ring_axioms!(p5, 5);

/// Coefficients of ∏ (1 + q^d + … + q^{(h−1)d}) and ∏ 1/(1 − q^d) up to `max`.
fn series_oracle(a: &Algebra, max: i64) -> Vec<usize> {
    let n = max as usize + 1;
    let mut c = vec![0usize; n];
    c[0] = 1;
    for g in a.generators() {
        let d = g.degree as usize;
        let top = match g.kind {
            GeneratorKind::Exterior => 1,
            GeneratorKind::Truncated { height } => height as usize - 1,
            _ => n,
        };
        let mut next = vec![0usize; n];
        for (i, &ci) in c.iter().enumerate() {
            let mut e = 0;
            while e <= top && i + e * d < n {
                next[i + e * d] += ci;
                e += 1;
            }
        }
        c = next;
    }
    c
}

#[test]
fn basis_counts_match_generating_functions() {
    for p in [2, 3, 5, 7] {
        for a in [mixed(p), free_with_v(p)] {
            let series = series_oracle(&a, MAX_DEGREE);
            for d in 0..=MAX_DEGREE {
                let basis = a.basis_in_degree(d, None).unwrap();
                assert_eq!(basis.len(), series[d as usize], "p={p} d={d}");
                let mut sorted = basis.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted, basis, "basis must be sorted and duplicate-free");
            }
        }
    }
}

#[test]
fn thh_basis_examples() {
    let a = Algebra::new(
        2,
        vec![
            GeneratorSpec::exterior("λ1", 3),
            GeneratorSpec::exterior("λ2", 7),
            GeneratorSpec::exterior("λ3", 15),
            GeneratorSpec::polynomial("μ3", 16),
        ],
    )
    .unwrap();
    let show = |d| a.basis_in_degree(d, None).unwrap().iter().map(|m| a.format_monomial(m, false)).collect::<Vec<_>>();
    assert_eq!(show(15), vec!["λ3"]);
    assert_eq!(show(10), vec!["λ1·λ2"]);
    assert_eq!(show(0), vec!["1"]);
}

#[test]
fn derivation_examples() {
    let a = Algebra::new(3, vec![GeneratorSpec::exterior("λ", 5), GeneratorSpec::polynomial("μ", 6), GeneratorSpec::polynomial("v", 0)])
        .unwrap();
    let rules = vec![(a.generator("μ").unwrap(), a.parse_element("λ·v").unwrap())];
    let d = |s: &str| a.format_element(&a.derivation_extend(&rules, &a.parse_element(s).unwrap()).unwrap(), false);
    assert_eq!(d("μ^2"), "2·λ·μ·v");
    assert_eq!(d("λ·μ"), "0");
    assert_eq!(d("μ^3"), "0");
    let bad = vec![(a.parse_monomial("μ^2").unwrap(), a.parse_element("λ·μ·v").unwrap())];
    assert!(a.derivation_extend(&bad, &a.parse_element("μ").unwrap()).is_err());
}
