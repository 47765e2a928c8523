//! Symmetric tridiagonal matrices: products, direct solves and eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(DnlsError::InvalidParameter(format!(
                "tridiagonal sizes inconsistent: diag {}, off {}",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i + 1 == j {
            self.off[i]
        } else if j + 1 == i {
            self.off[j]
        } else {
            0.0
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Solves `self * x = rhs` by Gaussian elimination with partial pivoting
    /// (the matrix is symmetric but in general indefinite).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        assert_eq!(rhs.len(), n);
        let scale = self.norm_inf();
        let tiny = f64::EPSILON * scale;
        let mut d = self.diag.clone();
        let mut dl = self.off.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut x = rhs.to_vec();

        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() <= tiny {
                    return Err(DnlsError::SingularJacobian { row: i });
                }
                let f = dl[i] / d[i];
                d[i + 1] -= f * du[i];
                x[i + 1] -= f * x[i];
            } else {
                // swap rows i and i + 1
                let f = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du2[i];
                }
                du[i] = tmp;
                x.swap(i, i + 1);
                x[i + 1] -= f * x[i];
            }
            dl[i] = 0.0;
        }
        if d[n - 1].abs() <= tiny || !d[n - 1].is_finite() {
            return Err(DnlsError::SingularJacobian { row: n - 1 });
        }

        x[n - 1] /= d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        Ok(x)
    }

    /// All eigenvalues in ascending order (implicit QL with Wilkinson shifts).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);

        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                if iter > 200 {
                    // unreachable for finite input; keep the current estimate
                    break;
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut deflated = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                }
                if deflated {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        d.sort_by(f64::total_cmp);
        d
    }
}

/// Eigenvalues of the symmetric tridiagonal matrix with the given diagonal
/// and off-diagonal, ascending.
pub fn eig_symmetric_tridiagonal(diag: &[f64], offdiag: &[f64]) -> Result<Vec<f64>> {
    Ok(SymTridiagonal::new(diag.to_vec(), offdiag.to_vec())?.eigenvalues())
}
