//! Dense symmetric-indefinite `P A Pᵀ = L D Lᵀ` with Bunch–Kaufman pivoting.
//!
//! `D` is block diagonal with 1×1 and 2×2 blocks; `L` is unit lower
//! triangular. Growth is bounded by the pivot threshold
//! `α = (1 + √17) / 8`.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::SolveError;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Block {
    One(f64),
    Two(Matrix2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricIndefinite {
    l: DMatrix<f64>,
    /// Blocks in order, each starting at its diagonal index.
    blocks: Vec<(usize, Block)>,
    /// Row `i` of the factored matrix is row `perm[i]` of the input.
    perm: Vec<usize>,
}

const ALPHA: f64 = 0.640_388_203_202_208_4;

fn swap_sym(a: &mut DMatrix<f64>, l: &mut DMatrix<f64>, perm: &mut [usize], k: usize, i: usize, j: usize) {
    if i == j {
        return;
    }
    a.swap_rows(i, j);
    a.swap_columns(i, j);
    for c in 0..k {
        let t = l[(i, c)];
        l[(i, c)] = l[(j, c)];
        l[(j, c)] = t;
    }
    perm.swap(i, j);
}

impl SymmetricIndefinite {
    /// Factors a symmetric matrix; only the lower triangle is trusted.
    /// Singularity is reported at the first pivot column that is exactly
    /// zero or whose pivot falls below `tiny` times the largest entry.
    pub fn factor(input: &DMatrix<f64>) -> Result<Self, SolveError> {
        let n = input.nrows();
        if input.ncols() != n {
            return Err(SolveError::Dimension(format!("{}×{} is not square", n, input.ncols())));
        }
        let mut a = input.clone();
        for i in 0..n {
            for j in i + 1..n {
                a[(i, j)] = a[(j, i)];
            }
        }
        let tiny = 1e-14 * a.amax();
        let mut l = DMatrix::identity(n, n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = Vec::new();
        let mut k = 0;
        while k < n {
            let akk = a[(k, k)].abs();
            let (imax, colmax) = (k + 1..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, 0.0), |m, x| if x.1 > m.1 { x } else { m });
            if akk.max(colmax) <= tiny {
                return Err(SolveError::Breakdown { pivot: k });
            }
            let two = if akk >= ALPHA * colmax {
                false
            } else {
                let rowmax = (k..n)
                    .filter(|&j| j != imax)
                    .map(|j| a[(imax, j)].abs())
                    .fold(0.0, f64::max);
                if akk * rowmax >= ALPHA * colmax * colmax {
                    false
                } else if a[(imax, imax)].abs() >= ALPHA * rowmax {
                    swap_sym(&mut a, &mut l, &mut perm, k, k, imax);
                    false
                } else {
                    swap_sym(&mut a, &mut l, &mut perm, k, k + 1, imax);
                    true
                }
            };
            if !two {
                let d = a[(k, k)];
                for i in k + 1..n {
                    l[(i, k)] = a[(i, k)] / d;
                }
                for j in k + 1..n {
                    for i in j..n {
                        let v = a[(i, j)] - l[(i, k)] * d * l[(j, k)];
                        a[(i, j)] = v;
                        a[(j, i)] = v;
                    }
                }
                blocks.push((k, Block::One(d)));
                k += 1;
            } else {
                let d = Matrix2::new(a[(k, k)], a[(k + 1, k)], a[(k + 1, k)], a[(k + 1, k + 1)]);
                let dinv = d.try_inverse().ok_or(SolveError::Breakdown { pivot: k })?;
                for i in k + 2..n {
                    let row = nalgebra::RowVector2::new(a[(i, k)], a[(i, k + 1)]) * dinv;
                    l[(i, k)] = row[0];
                    l[(i, k + 1)] = row[1];
                }
                for j in k + 2..n {
                    for i in j..n {
                        let v = a[(i, j)] - (l[(i, k)] * a[(j, k)] + l[(i, k + 1)] * a[(j, k + 1)]);
                        a[(i, j)] = v;
                        a[(j, i)] = v;
                    }
                }
                blocks.push((k, Block::Two(d)));
                k += 2;
            }
        }
        Ok(SymmetricIndefinite { l, blocks, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut y = DVector::from_fn(n, |i, _| b[self.perm[i]]);
        // L z = P b
        for j in 0..n {
            let yj = y[j];
            for i in j + 1..n {
                y[i] -= self.l[(i, j)] * yj;
            }
        }
        for &(k, blk) in &self.blocks {
            match blk {
                Block::One(d) => y[k] /= d,
                Block::Two(d) => {
                    let z = d.lu().solve(&nalgebra::Vector2::new(y[k], y[k + 1])).unwrap_or_default();
                    y[k] = z[0];
                    y[k + 1] = z[1];
                }
            }
        }
        for j in (0..n).rev() {
            let s: f64 = (j + 1..n).map(|i| self.l[(i, j)] * y[i]).sum();
            y[j] -= s;
        }
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }

    /// Counts of positive, negative and zero eigenvalues (Sylvester).
    pub fn inertia(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        let mut add = |v: f64| match v.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => c.0 += 1,
            Some(std::cmp::Ordering::Less) => c.1 += 1,
            _ => c.2 += 1,
        };
        for &(_, blk) in &self.blocks {
            match blk {
                Block::One(d) => add(d),
                Block::Two(d) => {
                    for e in d.symmetric_eigenvalues().iter() {
                        add(*e);
                    }
                }
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(n: usize, vals: &[f64]) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |i, j| vals[i * n + j]);
        (&m + m.transpose()) * 0.5
    }

    #[test]
    fn needs_two_by_two_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let f = SymmetricIndefinite::factor(&a).unwrap();
        let x = f.solve(&DVector::from_row_slice(&[2.0, 3.0]));
        assert!((x - DVector::from_row_slice(&[3.0, 2.0])).amax() < 1e-15);
        assert_eq!(f.inertia(), (1, 1, 0));
    }

    #[test]
    fn singular_matrix_breaks_down() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            SymmetricIndefinite::factor(&a),
            Err(SolveError::Breakdown { .. })
        ));
    }

    #[test]
    fn bordered_saddle_matrix() {
        // [[K, Cᵀ], [C, 0]] with K = diag(2, 3, 4), C = [1 1 1]
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[2.0, 0.0, 0.0, 1.0, 0.0, 3.0, 0.0, 1.0, 0.0, 0.0, 4.0, 1.0, 1.0, 1.0, 1.0, 0.0],
        );
        let b = DVector::from_row_slice(&[1.0, 2.0, 3.0, 0.5]);
        let x = SymmetricIndefinite::factor(&a).unwrap().solve(&b);
        let oracle = a.clone().lu().solve(&b).unwrap();
        assert!((x - oracle).amax() < 1e-14);
        assert_eq!(SymmetricIndefinite::factor(&a).unwrap().inertia(), (3, 1, 0));
    }

    proptest! {
        #[test]
        fn matches_lu_and_eigen_inertia(
            n in 1usize..9,
            vals in proptest::collection::vec(-1.0f64..1.0, 81),
            rhs in proptest::collection::vec(-1.0f64..1.0, 9),
        ) {
            let a = sym(n, &vals);
            let b = DVector::from_column_slice(&rhs[..n]);
            let eig = a.clone().symmetric_eigenvalues();
            // skip nearly singular draws, where neither side is meaningful
            prop_assume!(eig.iter().all(|e| e.abs() > 1e-3));
            let f = SymmetricIndefinite::factor(&a).unwrap();
            let x = f.solve(&b);
            let oracle = a.clone().lu().solve(&b).unwrap();
            let cond = eig.amax() / eig.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
            prop_assert!((&x - &oracle).amax() <= 1e-12 * cond * oracle.amax().max(1.0));
            let pos = eig.iter().filter(|&&e| e > 0.0).count();
            prop_assert_eq!(f.inertia(), (pos, n - pos, 0));
        }
    }
}
