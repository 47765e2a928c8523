//! Fields on the truncated lattice `[-L, L]`, the steady-state residual and
//! its Jacobian, and the conserved quantities of the lattice equation.
//!
//! Sites outside the window are zero (Dirichlet extension), so every
//! difference operator here sees `q(-L-1) = q(L+1) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::tridiag::SymTridiagonal;

/// One instance of the steady-state problem: frequency, coupling and truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub omega: f64,
    pub d: f64,
    pub half_width: usize,
}

impl Problem {
    pub fn new(omega: f64, d: f64, half_width: usize) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(DnlsError::InvalidParameter(format!(
                "omega must be positive, got {omega}"
            )));
        }
        if !(d.is_finite() && d >= 0.0) {
            return Err(DnlsError::InvalidParameter(format!(
                "coupling d must be nonnegative, got {d}"
            )));
        }
        if half_width == 0 {
            return Err(DnlsError::InvalidParameter(
                "half_width must be at least 1".into(),
            ));
        }
        Ok(Self {
            omega,
            d,
            half_width,
        })
    }

    pub fn with_d(&self, d: f64) -> Result<Self> {
        Self::new(self.omega, d, self.half_width)
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(omega, self.d, self.half_width)
    }

    pub fn n_sites(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn min_index(&self) -> i64 {
        -(self.half_width as i64)
    }

    pub fn max_index(&self) -> i64 {
        self.half_width as i64
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.min_index()..=self.max_index()
    }

    /// Storage offset of lattice index `n`, if it lies in the window.
    pub fn offset(&self, n: i64) -> Option<usize> {
        let k = n + self.half_width as i64;
        (0..self.n_sites() as i64).contains(&k).then_some(k as usize)
    }

    fn same_lattice(&self, other: &Problem) -> bool {
        self.half_width == other.half_width
    }
}

/// A real sequence on `[-L, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FieldRecord", try_from = "FieldRecord")]
pub struct LatticeField {
    problem: Problem,
    values: Vec<f64>,
}

/// On-disk layout of a [`LatticeField`].
#[derive(Serialize, Deserialize)]
struct FieldRecord {
    omega: f64,
    d: f64,
    half_width: usize,
    values: Vec<f64>,
}

impl From<LatticeField> for FieldRecord {
    fn from(f: LatticeField) -> Self {
        FieldRecord {
            omega: f.problem.omega,
            d: f.problem.d,
            half_width: f.problem.half_width,
            values: f.values,
        }
    }
}

impl TryFrom<FieldRecord> for LatticeField {
    type Error = DnlsError;

    fn try_from(r: FieldRecord) -> Result<Self> {
        LatticeField::from_values(Problem::new(r.omega, r.d, r.half_width)?, r.values)
    }
}

impl LatticeField {
    pub fn zeros(problem: Problem) -> Self {
        Self {
            problem,
            values: vec![0.0; problem.n_sites()],
        }
    }

    pub fn from_values(problem: Problem, values: Vec<f64>) -> Result<Self> {
        if values.len() != problem.n_sites() {
            return Err(DnlsError::InvalidParameter(format!(
                "field has {} values, lattice needs {}",
                values.len(),
                problem.n_sites()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DnlsError::InvalidParameter(format!(
                "non-finite value at lattice index {}",
                i as i64 + problem.min_index()
            )));
        }
        Ok(Self { problem, values })
    }

    /// Builds a field by evaluating `f` at every lattice index.
    pub fn from_fn(problem: Problem, f: impl FnMut(i64) -> f64) -> Result<Self> {
        Self::from_values(problem, problem.indices().map(f).collect())
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at lattice index `n`; zero outside the window.
    pub fn get(&self, n: i64) -> f64 {
        self.problem.offset(n).map_or(0.0, |k| self.values[k])
    }

    /// Same values, relabelled with another problem on the same lattice.
    pub fn with_problem(&self, problem: Problem) -> Self {
        assert!(self.problem.same_lattice(&problem));
        Self {
            problem,
            values: self.values.clone(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_even(&self, tol: f64) -> bool {
        let n = self.values.len();
        (0..n / 2).all(|k| (self.values[k] - self.values[n - 1 - k]).abs() <= tol)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.problem.indices().zip(self.values.iter().copied())
    }

    /// Strict local maxima of `|q|` that rise above `noise_rel * max|q|`,
    /// as `(index, value)` pairs in increasing index order.
    pub fn peaks(&self, noise_rel: f64) -> Vec<(i64, f64)> {
        let floor = noise_rel * self.sup_norm();
        self.iter()
            .filter(|&(n, v)| {
                let a = v.abs();
                a > 0.0 && a > floor && a > self.get(n - 1).abs() && a > self.get(n + 1).abs()
            })
            .collect()
    }
}

/// `u = (v, w)`: real and imaginary parts of a complex lattice field.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub v: LatticeField,
    pub w: LatticeField,
}

impl ComplexField {
    pub fn new(v: LatticeField, w: LatticeField) -> Result<Self> {
        if !v.problem.same_lattice(&w.problem) {
            return Err(DnlsError::InvalidParameter(
                "real and imaginary parts live on different lattices".into(),
            ));
        }
        Ok(Self { v, w })
    }

    pub fn real(v: LatticeField) -> Self {
        let w = LatticeField::zeros(v.problem);
        Self { v, w }
    }

    /// Pointwise rotation `(v, w) -> (cos θ v + sin θ w, -sin θ v + cos θ w)`.
    pub fn rotate(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let v = self
            .v
            .values
            .iter()
            .zip(&self.w.values)
            .map(|(&a, &b)| c * a + s * b)
            .collect();
        let w = self
            .v
            .values
            .iter()
            .zip(&self.w.values)
            .map(|(&a, &b)| -s * a + c * b)
            .collect();
        Self {
            v: LatticeField {
                problem: self.v.problem,
                values: v,
            },
            w: LatticeField {
                problem: self.w.problem,
                values: w,
            },
        }
    }
}

/// Steady-state residual `d (q[n+1] - 2 q[n] + q[n-1]) - ω q[n] + q[n]^3`.
pub fn residual(q: &LatticeField, p: &Problem) -> LatticeField {
    assert!(q.problem.same_lattice(p), "field and problem lattices differ");
    let values = p
        .indices()
        .map(|n| {
            let qn = q.get(n);
            p.d * (q.get(n + 1) - 2.0 * qn + q.get(n - 1)) - p.omega * qn + qn * qn * qn
        })
        .collect();
    LatticeField {
        problem: *p,
        values,
    }
}

/// Jacobian of [`residual`]: diagonal `-2d - ω + 3 q[n]^2`, off-diagonal `d`.
pub fn jacobian(q: &LatticeField, p: &Problem) -> SymTridiagonal {
    assert!(q.problem.same_lattice(p), "field and problem lattices differ");
    let diag = q
        .values
        .iter()
        .map(|&qn| -2.0 * p.d - p.omega + 3.0 * qn * qn)
        .collect();
    SymTridiagonal {
        diag,
        off: vec![p.d; p.n_sites() - 1],
    }
}

/// Power (norm) `Q = ½ Σ (v² + w²)`.
pub fn power(u: &ComplexField) -> f64 {
    0.5 * u
        .v
        .values
        .iter()
        .zip(&u.w.values)
        .map(|(a, b)| a * a + b * b)
        .sum::<f64>()
}

/// Lattice Hamiltonian, summing the bond terms over every bond that touches
/// the window (including the two bonds to the zero boundary).
pub fn hamiltonian(u: &ComplexField, p: &Problem) -> f64 {
    let (v, w) = (&u.v, &u.w);
    let mut h = 0.0;
    for n in p.min_index()..=p.max_index() + 1 {
        let dv = v.get(n) - v.get(n - 1);
        let dw = w.get(n) - w.get(n - 1);
        let rho = v.get(n) * v.get(n) + w.get(n) * w.get(n);
        h -= 0.5 * p.d * (dv * dv + dw * dw) - 0.25 * rho * rho;
    }
    h
}

/// `E[n] = 2d (v[n] w[n-1] - v[n-1] w[n])` for every lattice index `n`.
pub fn density_e(u: &ComplexField, p: &Problem) -> Vec<f64> {
    let (v, w) = (&u.v, &u.w);
    p.indices()
        .map(|n| 2.0 * p.d * (v.get(n) * w.get(n - 1) - v.get(n - 1) * w.get(n)))
        .collect()
}
