//! Dense linear algebra over F_p for the small per-bidegree vector spaces of a page.
//!
//! Vectors are coordinate rows over an ordered basis. Every echelon form here pivots on the
//! first nonzero coordinate, so the ordering of the ambient basis decides which monomials
//! end up as leading terms of chosen representatives.

use crate::field::Fp;

pub type Vector = Vec<u32>;

#[inline]
pub fn is_zero(v: &[u32]) -> bool {
    v.iter().all(|&x| x == 0)
}

#[inline]
fn first_nonzero(v: &[u32]) -> Option<usize> {
    v.iter().position(|&x| x != 0)
}

/// `acc += c * v`
#[inline]
pub fn axpy(f: Fp, acc: &mut [u32], c: u32, v: &[u32]) {
    if c == 0 {
        return;
    }
    for (a, &x) in acc.iter_mut().zip(v) {
        if x != 0 {
            *a = f.add(*a, f.mul(c, x));
        }
    }
}

/// A subspace kept in reduced row echelon form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    rows: Vec<Vector>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        let rows = (0..ambient)
            .map(|i| {
                let mut v = vec![0; ambient];
                v[i] = 1;
                v
            })
            .collect();
        Subspace { ambient, rows, pivots: (0..ambient).collect() }
    }

    pub fn spanned_by<'a>(f: Fp, ambient: usize, vectors: impl IntoIterator<Item = &'a Vector>) -> Self {
        let mut s = Subspace::zero(ambient);
        for v in vectors {
            s.insert(f, v.clone());
        }
        s
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vector] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Eliminates the pivot columns of `v` in place; returns the coefficients used,
    /// so that `v_original = sum coeffs[i] * rows[i] + v_reduced`.
    pub fn reduce(&self, f: Fp, v: &mut [u32]) -> Vec<u32> {
        let mut coeffs = vec![0; self.rows.len()];
        for (i, (row, &piv)) in self.rows.iter().zip(&self.pivots).enumerate() {
            let c = v[piv];
            if c != 0 {
                coeffs[i] = c;
                axpy(f, v, f.neg(c), row);
            }
        }
        coeffs
    }

    pub fn contains(&self, f: Fp, v: &[u32]) -> bool {
        let mut w = v.to_vec();
        self.reduce(f, &mut w);
        is_zero(&w)
    }

    /// Adds `v` to the span; returns whether the dimension grew.
    pub fn insert(&mut self, f: Fp, mut v: Vector) -> bool {
        debug_assert_eq!(v.len(), self.ambient);
        self.reduce(f, &mut v);
        let Some(piv) = first_nonzero(&v) else {
            return false;
        };
        let inv = f.inv(v[piv]);
        for x in v.iter_mut() {
            *x = f.mul(*x, inv);
        }
        for row in self.rows.iter_mut() {
            let c = row[piv];
            if c != 0 {
                axpy(f, row, f.neg(c), &v);
            }
        }
        let at = self.pivots.partition_point(|&q| q < piv);
        self.pivots.insert(at, piv);
        self.rows.insert(at, v);
        true
    }

    pub fn is_subspace_of(&self, f: Fp, other: &Subspace) -> bool {
        self.rows.iter().all(|r| other.contains(f, r))
    }
}

/// Coordinates on a subquotient `Z / B` of a coordinate space, with a fixed complement
/// basis of representatives chosen in echelon form relative to `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subquotient {
    pub cycles: Subspace,
    pub boundaries: Subspace,
    reps: Vec<Vector>,
    rep_pivots: Vec<usize>,
}

impl Subquotient {
    pub fn new(f: Fp, cycles: Subspace, boundaries: Subspace) -> Self {
        debug_assert!(boundaries.is_subspace_of(f, &cycles));
        // Reduce each cycle basis vector against B, then echelonize the remainders.
        let mut comp = Subspace::zero(cycles.ambient());
        for row in cycles.rows() {
            let mut v = row.clone();
            boundaries.reduce(f, &mut v);
            comp.insert(f, v);
        }
        // `comp` rows may have picked up B-pivot entries while mutually reducing; clear them.
        let mut reps = Vec::with_capacity(comp.dim());
        for row in comp.rows() {
            let mut v = row.clone();
            boundaries.reduce(f, &mut v);
            reps.push(v);
        }
        let rep_pivots = comp.pivots().to_vec();
        Subquotient { cycles, boundaries, reps, rep_pivots }
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn reps(&self) -> &[Vector] {
        &self.reps
    }

    /// Coordinates of the class of `v` in terms of the representatives, or `None` if `v` is
    /// not a cycle.
    pub fn coordinates(&self, f: Fp, v: &[u32]) -> Option<Vec<u32>> {
        let mut w = v.to_vec();
        self.boundaries.reduce(f, &mut w);
        let mut coeffs = vec![0; self.reps.len()];
        for (i, (rep, &piv)) in self.reps.iter().zip(&self.rep_pivots).enumerate() {
            let c = w[piv];
            if c != 0 {
                coeffs[i] = c;
                axpy(f, &mut w, f.neg(c), rep);
                self.boundaries.reduce(f, &mut w);
            }
        }
        is_zero(&w).then_some(coeffs)
    }
}

/// Rank of a list of equal-length rows.
pub fn rank(f: Fp, rows: &[Vector]) -> usize {
    let Some(width) = rows.first().map(Vec::len) else {
        return 0;
    };
    Subspace::spanned_by(f, width, rows).dim()
}

/// Basis of `{c : c * M = 0}` for `M` given as `rows` (one row per source basis vector).
pub fn left_kernel(f: Fp, rows: &[Vector], width: usize) -> Vec<Vector> {
    let n = rows.len();
    // Augment [M | I] and eliminate on the M part.
    let mut aug: Vec<Vector> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.clone();
            v.resize(width + n, 0);
            v[width + i] = 1;
            v
        })
        .collect();
    let mut pivot_row = 0;
    for col in 0..width {
        let Some(found) = (pivot_row..n).find(|&i| aug[i][col] != 0) else {
            continue;
        };
        aug.swap(pivot_row, found);
        let inv = f.inv(aug[pivot_row][col]);
        for x in aug[pivot_row].iter_mut() {
            *x = f.mul(*x, inv);
        }
        let piv = aug[pivot_row].clone();
        for (i, row) in aug.iter_mut().enumerate() {
            if i != pivot_row && row[col] != 0 {
                let c = f.neg(row[col]);
                axpy(f, row, c, &piv);
            }
        }
        pivot_row += 1;
    }
    let mut kernel = Subspace::zero(n);
    for row in &aug[pivot_row..] {
        kernel.insert(f, row[width..].to_vec());
    }
    kernel.rows().to_vec()
}

/// Product of a `a x b` and a `b x c` matrix, row-major.
pub fn mat_mul(f: Fp, lhs: &[Vector], rhs: &[Vector], width: usize) -> Vec<Vector> {
    lhs.iter()
        .map(|row| {
            let mut out = vec![0; width];
            for (k, &c) in row.iter().enumerate() {
                axpy(f, &mut out, c, &rhs[k]);
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(p: u32) -> Fp {
        Fp::new(p).unwrap()
    }

    #[test]
    fn subspace_insert_and_contains() {
        let f = f(3);
        let mut s = Subspace::zero(3);
        assert!(s.insert(f, vec![1, 2, 0]));
        assert!(s.insert(f, vec![0, 1, 1]));
        assert!(!s.insert(f, vec![1, 0, 1]));
        assert_eq!(s.dim(), 2);
        assert!(s.contains(f, &[2, 1, 0]));
        assert!(!s.contains(f, &[0, 0, 1]));
    }

    #[test]
    fn subquotient_coordinates() {
        let f = f(5);
        let z = Subspace::spanned_by(f, 3, &[vec![1, 0, 0], vec![0, 1, 0]]);
        let b = Subspace::spanned_by(f, 3, &[vec![1, 1, 0]]);
        let q = Subquotient::new(f, z, b);
        assert_eq!(q.dim(), 1);
        let c1 = q.coordinates(f, &[1, 0, 0]).unwrap();
        let c2 = q.coordinates(f, &[0, 4, 0]).unwrap();
        assert_eq!(c1, c2);
        assert!(q.coordinates(f, &[0, 0, 1]).is_none());
        assert_eq!(q.coordinates(f, &[1, 1, 0]).unwrap(), vec![0]);
    }

    #[test]
    fn kernel_of_zero_and_identity() {
        let f = f(2);
        assert_eq!(left_kernel(f, &[vec![0, 0], vec![0, 0]], 2).len(), 2);
        assert!(left_kernel(f, &[vec![1, 0], vec![0, 1]], 2).is_empty());
        assert_eq!(left_kernel(f, &[vec![1, 1], vec![1, 1]], 2), vec![vec![1, 1]]);
    }

    proptest! {
        #[test]
        fn rank_nullity(p in prop::sample::select(vec![2u32, 3, 5, 7]),
                        rows in 1usize..6, cols in 1usize..6,
                        seed in prop::collection::vec(0u32..1000, 36)) {
            let f = f(p);
            let m: Vec<Vector> = (0..rows)
                .map(|i| (0..cols).map(|j| seed[i * 6 + j] % p).collect())
                .collect();
            let ker = left_kernel(f, &m, cols);
            prop_assert_eq!(ker.len() + rank(f, &m), rows);
            for c in &ker {
                let prod = mat_mul(f, std::slice::from_ref(c), &m, cols);
                prop_assert!(is_zero(&prod[0]));
            }
        }
    }
}
