//! Linear stability of real standing waves.
//!
//! For a real steady state `q` the linearisation decouples into the block
//! operator `[[0, L-], [-L+, 0]]` acting on `(v, w)`, with
//! `L± = d Δ - ω + c q²` (`c = 3` for `L+`, `c = 1` for `L-`).

use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eig::{self, DenseMatrix};
use crate::error::{DnlsError, Result};
use crate::lattice::{LatticeField, Problem};
use crate::tridiag::SymTridiagonal;

pub use crate::tridiag::eig_symmetric_tridiagonal;

#[derive(Debug, Clone)]
pub struct StabilityMatrix {
    pub field: LatticeField,
    pub l_plus: SymTridiagonal,
    pub l_minus: SymTridiagonal,
    pub matrix: DenseMatrix,
}

impl StabilityMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn problem(&self) -> &Problem {
        self.field.problem()
    }

    /// Applies the block operator to `(v, w)`.
    pub fn apply(&self, v: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let top = self.l_minus.matvec(w);
        let bottom = self.l_plus.matvec(v).into_iter().map(|x| -x).collect();
        (top, bottom)
    }
}

fn schrodinger_block(q: &LatticeField, p: &Problem, c: f64) -> SymTridiagonal {
    SymTridiagonal {
        diag: q
            .values()
            .iter()
            .map(|&x| -2.0 * p.d - p.omega + c * x * x)
            .collect(),
        off: vec![p.d; p.n_sites() - 1],
    }
}

/// Builds the linearisation about the real steady state `q`.
pub fn assemble(q: &LatticeField, p: &Problem) -> StabilityMatrix {
    let q = q.with_problem(*p);
    let l_plus = schrodinger_block(&q, p, 3.0);
    let l_minus = schrodinger_block(&q, p, 1.0);
    let n = p.n_sites();
    let mut m = DenseMatrix::zeros(2 * n);
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            m.set(i, n + j, l_minus.get(i, j));
            m.set(n + i, j, -l_plus.get(i, j));
        }
    }
    StabilityMatrix {
        field: q,
        l_plus,
        l_minus,
        matrix: m,
    }
}

/// All `2(2L+1)` eigenvalues of the stability matrix.
pub fn eigensolve(m: &StabilityMatrix) -> Result<Vec<Complex64>> {
    eig::eigenvalues(&m.matrix)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerances {
    /// Zero modes must have |λ| below this.
    pub zero_tol: f64,
    /// |Im λ| ≥ ω (1 - band_tol) counts as continuous spectrum.
    pub band_tol: f64,
    /// Interaction candidates must satisfy |λ| < ω - band_margin_rel·ω.
    pub band_margin_rel: f64,
    /// Off-axis part must be below this fraction of the on-axis part.
    pub axis_ratio: f64,
    /// Tolerance for matching λ with -λ.
    pub pairing_tol: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self {
            zero_tol: 1e-6,
            band_tol: 0.05,
            band_margin_rel: 0.1,
            axis_ratio: 1e-3,
            pairing_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenClass {
    ZeroMode,
    Interaction,
    Band,
    Other,
}

impl EigenClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EigenClass::ZeroMode => "zero-mode",
            EigenClass::Interaction => "interaction",
            EigenClass::Band => "band",
            EigenClass::Other => "other",
        }
    }
}

impl fmt::Display for EigenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Real,
    Imaginary,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Real => "real",
            Axis::Imaginary => "imaginary",
        })
    }
}

/// One `±λ` pair of interaction eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionPair {
    pub magnitude: f64,
    pub axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub pulses: usize,
    pub omega: f64,
    pub d: f64,
    pub half_width: usize,
    pub tolerances: ClassifyTolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SpectrumRecord", from = "SpectrumRecord")]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub classes: Vec<EigenClass>,
    pub meta: SpectrumMeta,
}

#[derive(Serialize, Deserialize)]
struct SpectrumRecord {
    eigenvalues: Vec<[f64; 2]>,
    classes: Vec<EigenClass>,
    meta: SpectrumMeta,
}

impl From<Spectrum> for SpectrumRecord {
    fn from(s: Spectrum) -> Self {
        SpectrumRecord {
            eigenvalues: s.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            classes: s.classes,
            meta: s.meta,
        }
    }
}

impl From<SpectrumRecord> for Spectrum {
    fn from(r: SpectrumRecord) -> Self {
        Spectrum {
            eigenvalues: r
                .eigenvalues
                .iter()
                .map(|z| Complex64::new(z[0], z[1]))
                .collect(),
            classes: r.classes,
            meta: r.meta,
        }
    }
}

impl Spectrum {
    pub fn count(&self, class: EigenClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn of_class(&self, class: EigenClass) -> impl Iterator<Item = Complex64> + '_ {
        self.eigenvalues
            .iter()
            .zip(&self.classes)
            .filter(move |(_, &c)| c == class)
            .map(|(z, _)| *z)
    }

    /// Interaction eigenvalues grouped into `±λ` pairs, ascending in magnitude.
    pub fn interaction_pairs(&self) -> Vec<InteractionPair> {
        let mut upper: Vec<InteractionPair> = self
            .of_class(EigenClass::Interaction)
            .filter_map(|z| {
                if z.im == 0.0 {
                    (z.re > 0.0).then_some(InteractionPair {
                        magnitude: z.re,
                        axis: Axis::Real,
                    })
                } else {
                    (z.im > 0.0).then_some(InteractionPair {
                        magnitude: z.im,
                        axis: Axis::Imaginary,
                    })
                }
            })
            .collect();
        // average with the partner so that the reported magnitude is symmetric
        let all: Vec<Complex64> = self.of_class(EigenClass::Interaction).collect();
        for pair in &mut upper {
            let target = match pair.axis {
                Axis::Real => Complex64::new(-pair.magnitude, 0.0),
                Axis::Imaginary => Complex64::new(0.0, -pair.magnitude),
            };
            if let Some(partner) = all
                .iter()
                .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
            {
                pair.magnitude = 0.5 * (pair.magnitude + partner.norm());
            }
        }
        upper.sort_by(|a, b| a.magnitude.total_cmp(&b.magnitude));
        upper
    }

    pub fn pairs_on(&self, axis: Axis) -> usize {
        self.interaction_pairs()
            .iter()
            .filter(|p| p.axis == axis)
            .count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| DnlsError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| DnlsError::io(path, e);
        writeln!(w, "re,im,class").map_err(io)?;
        for (z, c) in self.eigenvalues.iter().zip(&self.classes) {
            writeln!(w, "{:.16e},{:.16e},{}", z.re, z.im, c).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

fn ambiguous(msg: String) -> DnlsError {
    DnlsError::ClassificationAmbiguous(msg)
}

/// Sorts eigenvalues of an `m`-pulse linearisation into zero modes,
/// interaction pairs, continuous band and everything else.
pub fn classify(
    eigs: &[Complex64],
    m: usize,
    p: &Problem,
    tol: &ClassifyTolerances,
) -> Result<Spectrum> {
    if m == 0 {
        return Err(DnlsError::InvalidParameter("pulse count must be >= 1".into()));
    }
    let n = eigs.len();
    let mut values = eigs.to_vec();
    let mut classes = vec![EigenClass::Other; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigs[a].norm().total_cmp(&eigs[b].norm()));

    if n < 2 {
        return Err(ambiguous("fewer than two eigenvalues".into()));
    }
    for &k in &order[..2] {
        if eigs[k].norm() > tol.zero_tol {
            return Err(ambiguous(format!(
                "zero-mode candidate {} exceeds zero tolerance {:e}",
                eigs[k], tol.zero_tol
            )));
        }
        classes[k] = EigenClass::ZeroMode;
    }

    let band_edge = p.omega * (1.0 - tol.band_tol);
    let mut rest = Vec::new();
    for &k in &order[2..] {
        if eigs[k].im.abs() >= band_edge {
            classes[k] = EigenClass::Band;
        } else {
            rest.push(k);
        }
    }

    let wanted = 2 * (m - 1);
    if rest.len() < wanted {
        return Err(ambiguous(format!(
            "expected {wanted} interaction eigenvalues, only {} off the band",
            rest.len()
        )));
    }
    let limit = p.omega * (1.0 - tol.band_margin_rel);
    for &k in &rest[..wanted] {
        let z = eigs[k];
        if z.norm() <= tol.zero_tol {
            return Err(ambiguous(format!(
                "interaction candidate {z} cannot be separated from the kernel"
            )));
        }
        if z.norm() >= limit {
            return Err(ambiguous(format!(
                "interaction candidate {z} lies within the band margin"
            )));
        }
        values[k] = if z.im.abs() < tol.axis_ratio * z.re.abs() {
            Complex64::new(z.re, 0.0)
        } else if z.re.abs() < tol.axis_ratio * z.im.abs() {
            Complex64::new(0.0, z.im)
        } else {
            return Err(ambiguous(format!(
                "interaction candidate {z} is off both axes"
            )));
        };
        classes[k] = EigenClass::Interaction;
    }

    let inter: Vec<Complex64> = rest[..wanted].iter().map(|&k| values[k]).collect();
    for z in &inter {
        let partner = inter
            .iter()
            .map(|w| (w + z).norm())
            .fold(f64::INFINITY, f64::min);
        if partner > tol.pairing_tol.max(1e-6 * z.norm()) {
            return Err(ambiguous(format!("interaction eigenvalue {z} has no -λ partner")));
        }
    }

    Ok(Spectrum {
        eigenvalues: values,
        classes,
        meta: SpectrumMeta {
            pulses: m,
            omega: p.omega,
            d: p.d,
            half_width: p.half_width,
            tolerances: *tol,
        },
    })
}

/// assemble → eigensolve → classify.
pub fn compute_spectrum(q: &LatticeField, m: usize, tol: &ClassifyTolerances) -> Result<Spectrum> {
    let p = *q.problem();
    let sm = assemble(q, &p);
    classify(&eigensolve(&sm)?, m, &p, tol)
}

/// Largest distance from any eigenvalue to the nearest copy of `-λ` or `conj(λ)`.
pub fn quartet_defect(eigs: &[Complex64]) -> f64 {
    let nearest = |target: Complex64| {
        eigs.iter()
            .map(|w| (w - target).norm())
            .fold(f64::INFINITY, f64::min)
    };
    eigs.iter()
        .map(|z| nearest(-z).max(nearest(z.conj())))
        .fold(0.0, f64::max)
}
