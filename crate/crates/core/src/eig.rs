//! Eigenvalues of a dense real nonsymmetric matrix: diagonal balancing,
//! Householder reduction to upper Hessenberg form, then the Francis
//! double-shift QR iteration.

use num_complex::Complex64;

use crate::error::{DnlsError, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matvec_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| b * a).sum())
            .collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks_exact(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// All eigenvalues of `a`, with multiplicity, in the order the QR
/// iteration deflates them.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<Complex64>> {
    if !a.is_finite() {
        return Err(DnlsError::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hessenberg_qr(&mut h)
}

/// Diagonal similarity by powers of two so that row and column norms match.
pub fn balance(a: &mut DenseMatrix) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let n = a.dim();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a.get(j, i).abs();
                    r += a.get(i, j).abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    *a.at(i, j) *= g;
                }
                for j in 0..n {
                    *a.at(j, i) *= f;
                }
            }
        }
    }
}

/// In-place orthogonal reduction to upper Hessenberg form; entries below the
/// first subdiagonal are set to zero.
pub fn hessenberg(a: &mut DenseMatrix) {
    let n = a.dim();
    let mut v = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let alpha: f64 = ((k + 1)..n).map(|i| a.get(i, k).powi(2)).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = a.get(k + 1, k);
        let beta = -alpha.copysign(x0);
        // v = x - beta e1, normalised so that H = I - 2 v vᵀ / (vᵀv)
        v[k + 1] = x0 - beta;
        for i in (k + 2)..n {
            v[i] = a.get(i, k);
        }
        let vtv: f64 = ((k + 1)..n).map(|i| v[i] * v[i]).sum();
        if vtv == 0.0 {
            continue;
        }
        let tau = 2.0 / vtv;

        // left: rows k+1.., columns k..
        for j in k..n {
            let s: f64 = ((k + 1)..n).map(|i| v[i] * a.get(i, j)).sum();
            let s = tau * s;
            for i in (k + 1)..n {
                *a.at(i, j) -= s * v[i];
            }
        }
        // right: all rows, columns k+1..
        for i in 0..n {
            let s: f64 = ((k + 1)..n).map(|j| a.get(i, j) * v[j]).sum();
            let s = tau * s;
            for j in (k + 1)..n {
                *a.at(i, j) -= s * v[j];
            }
        }
        a.set(k + 1, k, beta);
        for i in (k + 2)..n {
            a.set(i, k, 0.0);
        }
    }
}

/// Iteration cap per eigenvalue; exceptional shifts every tenth sweep.
const MAX_SWEEPS: usize = 60;

/// Francis double-shift QR on an upper Hessenberg matrix (destroys `h`).
pub fn hessenberg_qr(h: &mut DenseMatrix) -> Result<Vec<Complex64>> {
    let n = h.dim();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    if n == 0 {
        return Ok(vec![]);
    }

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += h.get(i, j).abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let nu = nn as usize;
        let mut its = 0;
        loop {
            // find a negligible subdiagonal entry
            let mut l = nu;
            while l >= 1 {
                let mut s = h.get(l - 1, l - 1).abs() + h.get(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h.get(l, l - 1).abs() + s == s {
                    h.set(l, l - 1, 0.0);
                    break;
                }
                l -= 1;
            }

            let mut x = h.get(nu, nu);
            if l == nu {
                // one root
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = h.get(nu - 1, nu - 1);
            let mut w = h.get(nu, nu - 1) * h.get(nu - 1, nu);
            if l + 1 == nu {
                // two roots from the trailing 2x2 block
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nu - 1] = x + z;
                    wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }

            if its == MAX_SWEEPS {
                return Err(DnlsError::NoQrConvergence { index: nu });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 0..=nu {
                    *h.at(i, i) -= x;
                }
                let s = h.get(nu, nu - 1).abs() + h.get(nu - 1, nu - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // look for two consecutive small subdiagonal entries
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = h.get(m, m);
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h.get(m + 1, m) + h.get(m, m + 1);
                q = h.get(m + 1, m + 1) - z - rr - ss;
                r = h.get(m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h.get(m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (h.get(m - 1, m - 1).abs() + z.abs() + h.get(m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                h.set(i, i - 2, 0.0);
                if i != m + 2 {
                    h.set(i, i - 3, 0.0);
                }
            }

            // double QR step on rows l..=nu and columns m..=nu
            let mut k = m;
            while k < nu {
                let mut xk = 0.0;
                if k != m {
                    p = h.get(k, k - 1);
                    q = h.get(k + 1, k - 1);
                    r = if k + 1 != nu { h.get(k + 2, k - 1) } else { 0.0 };
                    xk = p.abs() + q.abs() + r.abs();
                    if xk != 0.0 {
                        p /= xk;
                        q /= xk;
                        r /= xk;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            let v = -h.get(k, k - 1);
                            h.set(k, k - 1, v);
                        }
                    } else {
                        h.set(k, k - 1, -s * xk);
                    }
                    p += s;
                    let xx = p / s;
                    let yy = q / s;
                    let zz = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = h.get(k, j) + q * h.get(k + 1, j);
                        if k + 1 != nu {
                            pp += r * h.get(k + 2, j);
                            *h.at(k + 2, j) -= pp * zz;
                        }
                        *h.at(k + 1, j) -= pp * yy;
                        *h.at(k, j) -= pp * xx;
                    }
                    let mmin = nu.min(k + 3);
                    for i in l..=mmin {
                        let mut pp = xx * h.get(i, k) + yy * h.get(i, k + 1);
                        if k + 1 != nu {
                            pp += zz * h.get(i, k + 2);
                            *h.at(i, k + 2) -= pp * r;
                        }
                        *h.at(i, k + 1) -= pp * q;
                        *h.at(i, k) -= pp;
                    }
                }
                k += 1;
            }
        }
    }

    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

/// Relative residual `‖A v - λ v‖ / (‖A‖ ‖v‖)` of an eigenvector estimate
/// obtained by two steps of inverse iteration with shift `lambda`.
pub fn eigenpair_residual(a: &DenseMatrix, lambda: Complex64) -> f64 {
    let n = a.dim();
    let norm = a
        .data
        .chunks_exact(n)
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    // LU of (A - λI) with partial pivoting; zero pivots nudged to eps·‖A‖.
    let mut lu: Vec<Complex64> = a.data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    for i in 0..n {
        lu[i * n + i] -= lambda;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| lu[i * n + k].norm().total_cmp(&lu[j * n + k].norm()))
            .unwrap();
        if piv != k {
            for j in 0..n {
                lu.swap(k * n + j, piv * n + j);
            }
            perm.swap(k, piv);
        }
        if lu[k * n + k].norm() < f64::EPSILON * norm {
            lu[k * n + k] = Complex64::new(f64::EPSILON * norm, 0.0);
        }
        let pivot = lu[k * n + k];
        for i in (k + 1)..n {
            let f = lu[i * n + k] / pivot;
            lu[i * n + k] = f;
            if f != Complex64::new(0.0, 0.0) {
                for j in (k + 1)..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
    }
    let solve = |b: &[Complex64]| -> Vec<Complex64> {
        let mut x: Vec<Complex64> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = lu[i * n + j];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let u = lu[i * n + j];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= lu[i * n + i];
        }
        x
    };
    let normalise = |v: Vec<Complex64>| {
        let s = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / s).collect::<Vec<_>>()
    };

    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + (i % 7) as f64 * 0.1, 0.05 * (i % 3) as f64))
        .collect();
    for _ in 0..2 {
        v = normalise(solve(&v));
    }
    let av = a.matvec_complex(&v);
    let r = av
        .iter()
        .zip(&v)
        .map(|(x, y)| (x - lambda * y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / norm
}
