//! Gaussian elimination with partial pivoting for the small dense systems of
//! the implicit stepper.

/// LU factors of an `N x N` matrix, packed in place, with the row permutation.
#[derive(Debug, Clone)]
pub(crate) struct Lu<const N: usize> {
    lu: [[f64; N]; N],
    perm: [usize; N],
}

impl<const N: usize> Lu<N> {
    /// Factors `m`; `None` if a pivot vanishes or is not finite.
    pub(crate) fn factor(mut m: [[f64; N]; N]) -> Option<Self> {
        let mut perm = [0usize; N];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for col in 0..N {
            let pivot = (col..N)
                .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
                .expect("non-empty range");
            let pv = m[pivot][col];
            if pv == 0.0 || !pv.is_finite() {
                return None;
            }
            m.swap(col, pivot);
            perm.swap(col, pivot);
            for row in col + 1..N {
                let f = m[row][col] / pv;
                m[row][col] = f;
                if f != 0.0 {
                    for k in col + 1..N {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
        Some(Lu { lu: m, perm })
    }

    pub(crate) fn solve(&self, b: &[f64; N]) -> [f64; N] {
        let mut x = [0.0; N];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = b[self.perm[i]];
        }
        for i in 0..N {
            let mut acc = x[i];
            for k in 0..i {
                acc -= self.lu[i][k] * x[k];
            }
            x[i] = acc;
        }
        for i in (0..N).rev() {
            let mut acc = x[i];
            for k in i + 1..N {
                acc -= self.lu[i][k] * x[k];
            }
            x[i] = acc / self.lu[i][i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_permuted_system() {
        let m = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 4.0]];
        let x_true = [1.5, -2.0, 0.25];
        let mut b = [0.0; 3];
        for i in 0..3 {
            b[i] = (0..3).map(|k| m[i][k] * x_true[k]).sum();
        }
        let x = Lu::factor(m).unwrap().solve(&b);
        for i in 0..3 {
            assert_relative_eq!(x[i], x_true[i], max_relative = 1e-14);
        }
    }

    #[test]
    fn singular_matrix_detected() {
        assert!(Lu::factor([[1.0, 2.0], [2.0, 4.0]]).is_none());
    }
}
