//! Leading-order predictions for the interaction eigenvalues of a multi-pulse.
//!
//! The small eigenvalues are `λ_j = sqrt(d μ_j / M)`, where `μ_j` are the
//! nonzero eigenvalues of a symmetric tridiagonal matrix built from the tail
//! overlaps `b_i` of the single pulse and `M = Σ q ∂_ω q` is the Melnikov sum.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::lattice::{LatticeField, Problem};
use crate::multipulse::{Phase, PulseSpec};
use crate::output::{num, CsvOut};
use crate::solver::{default_omega_eps, omega_derivative, single_pulse, ContinuationSettings};
use crate::spectrum::Axis;
use crate::tridiag::SymTridiagonal;

/// Larger eigenvalue `r` of the linearised spatial map at the zero state;
/// pulse tails decay like `r^{-|n|}`. Infinite at `d = 0`.
pub fn spectral_ratio(omega: f64, d: f64) -> f64 {
    if d == 0.0 {
        return f64::INFINITY;
    }
    1.0 + omega / (2.0 * d) * (1.0 + (1.0 + 4.0 * d / omega).sqrt())
}

/// Tail overlap for a gap of `distance` sites, from the single pulse `q`:
/// `q(N⁺) q(N⁻ + 1) - q(N⁺ - 1) q(N⁻)` with `N⁺ = ⌊N/2⌋`, `N⁻ = N - N⁺`.
/// Negative for a positive, strictly unimodal, even pulse.
pub fn tail_overlap_b(q: &LatticeField, distance: usize) -> f64 {
    let plus = (distance / 2) as i64;
    let minus = distance as i64 - plus;
    q.get(plus) * q.get(minus + 1) - q.get(plus - 1) * q.get(minus)
}

/// `M = Σ q ∂_ω q`.
pub fn melnikov_m(q: &LatticeField, dq_domega: &LatticeField) -> f64 {
    q.values()
        .iter()
        .zip(dq_domega.values())
        .map(|(a, b)| a * b)
        .sum()
}

/// The rescaled sum `M₂ = M / d` that appears in the general reduction.
pub fn higher_order_melnikov(m: f64, d: f64) -> f64 {
    m / d
}

/// Row-sum-zero tridiagonal matrix with off-diagonal `cos(Δθ_i) b_i`.
pub fn interaction_matrix(b: &[f64], phases: &[Phase]) -> Result<SymTridiagonal> {
    if b.len() != phases.len() {
        return Err(DnlsError::InvalidParameter(format!(
            "{} overlaps but {} phases",
            b.len(),
            phases.len()
        )));
    }
    let off: Vec<f64> = b.iter().zip(phases).map(|(b, p)| p.cos() * b).collect();
    let m = b.len() + 1;
    let diag = (0..m)
        .map(|i| {
            let left = if i > 0 { off[i - 1] } else { 0.0 };
            let right = if i + 1 < m { off[i] } else { 0.0 };
            -left - right
        })
        .collect();
    SymTridiagonal::new(diag, off)
}

/// Eigenvalues of `a` with the one nearest zero (the null vector `(1,…,1)`)
/// removed, ascending.
pub fn nonzero_eigenvalues(a: &SymTridiagonal) -> Vec<f64> {
    let mut mu = a.eigenvalues();
    if let Some(k) = (0..mu.len()).min_by(|&i, &j| mu[i].abs().total_cmp(&mu[j].abs())) {
        mu.remove(k);
    }
    mu
}

/// A predicted `±λ` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedPair {
    pub mu: f64,
    pub magnitude: f64,
    pub axis: Axis,
}

/// `λ_j = sqrt(d μ_j / M)`: real pairs for `μ_j > 0`, imaginary for `μ_j < 0`.
pub fn predict_lambdas(mu: &[f64], melnikov: f64, d: f64) -> Result<Vec<PredictedPair>> {
    if !(melnikov > 0.0) {
        return Err(DnlsError::MelnikovNonpositive(melnikov));
    }
    if !(d > 0.0) {
        return Err(DnlsError::InvalidParameter(format!(
            "predictions need d > 0, got {d}"
        )));
    }
    mu.iter()
        .map(|&mu| {
            if mu == 0.0 || !mu.is_finite() {
                return Err(DnlsError::InvalidParameter(format!(
                    "interaction matrix eigenvalue {mu} must be finite and nonzero"
                )));
            }
            Ok(PredictedPair {
                mu,
                magnitude: (d * mu.abs() / melnikov).sqrt(),
                axis: if mu > 0.0 { Axis::Real } else { Axis::Imaginary },
            })
        })
        .collect()
}

/// Explicit three-pulse eigenvalues,
/// `μ± = -b₁cosΔθ₁ - b₂cosΔθ₂ ± sqrt(b₁² + b₂² - b₁b₂ cosΔθ₁ cosΔθ₂)`,
/// turned into pairs through `λ = sqrt(d μ / M)`. Ordered `[μ+, μ-]`.
pub fn three_pulse_closed_form(
    b1: f64,
    b2: f64,
    phases: (Phase, Phase),
    melnikov: f64,
    d: f64,
) -> Result<[PredictedPair; 2]> {
    let (c1, c2) = (phases.0.cos(), phases.1.cos());
    let centre = -b1 * c1 - b2 * c2;
    let disc = (b1 * b1 + b2 * b2 - b1 * b2 * c1 * c2).sqrt();
    let pairs = predict_lambdas(&[centre + disc, centre - disc], melnikov, d)?;
    Ok([pairs[0], pairs[1]])
}

/// Leading magnitudes of the three-pulse pairs when one gap is clearly
/// shorter: `sqrt(2|b_short| d / M)` and `sqrt(3|b_long| d / (2M))`.
pub fn three_pulse_leading_magnitudes(b_short: f64, b_long: f64, melnikov: f64, d: f64) -> (f64, f64) {
    (
        (2.0 * b_short.abs() * d / melnikov).sqrt(),
        (1.5 * b_long.abs() * d / melnikov).sqrt(),
    )
}

/// Nonzero eigenvalues of the equal-overlap, equal-phase chain:
/// `μ_j = 2b (cos(πj/m) - 1) cos Δθ`, `j = 1..m-1`.
pub fn chain_closed_form(m: usize, b: f64, dtheta: Phase) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(DnlsError::InvalidParameter(format!(
            "chain needs at least two pulses, got {m}"
        )));
    }
    Ok((1..m)
        .map(|j| 2.0 * b * ((PI * j as f64 / m as f64).cos() - 1.0) * dtheta.cos())
        .collect())
}

/// How predicted eigenvalues are obtained from `(b, M, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionRoute {
    /// Eigenvalues of the interaction matrix, then `sqrt(d μ / M)`.
    Matrix,
    /// Explicit formulas: two-pulse, three-pulse and uniform chains.
    ClosedForm,
}

impl std::str::FromStr for PredictionRoute {
    type Err = DnlsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix" => Ok(PredictionRoute::Matrix),
            "closed-form" => Ok(PredictionRoute::ClosedForm),
            _ => Err(DnlsError::InvalidParameter(format!(
                "unknown prediction route {s:?} (matrix | closed-form)"
            ))),
        }
    }
}

/// Predicted pairs from the overlaps, ascending in `μ`.
pub fn predictions_from_overlaps(
    b: &[f64],
    phases: &[Phase],
    melnikov: f64,
    d: f64,
    route: PredictionRoute,
) -> Result<Vec<PredictedPair>> {
    let mut pairs = match route {
        PredictionRoute::Matrix => {
            let a = interaction_matrix(b, phases)?;
            predict_lambdas(&nonzero_eigenvalues(&a), melnikov, d)?
        }
        PredictionRoute::ClosedForm => match b.len() {
            0 => vec![],
            2 => three_pulse_closed_form(b[0], b[1], (phases[0], phases[1]), melnikov, d)?.to_vec(),
            k if b.iter().all(|&x| x == b[0]) && phases.iter().all(|&p| p == phases[0]) => {
                predict_lambdas(&chain_closed_form(k + 1, b[0], phases[0])?, melnikov, d)?
            }
            _ => {
                return Err(DnlsError::InvalidParameter(
                    "no closed form for this configuration; use the matrix route".into(),
                ))
            }
        },
    };
    pairs.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub spec: PulseSpec,
    pub omega: f64,
    pub d: f64,
    pub r: f64,
    pub b: Vec<f64>,
    pub melnikov: f64,
    pub a: SymTridiagonal,
    /// Nonzero eigenvalues of `a`, ascending.
    pub mu: Vec<f64>,
    pub route: PredictionRoute,
    pub lambda_pred: Vec<PredictedPair>,
}

impl TheoryPrediction {
    /// Evaluates every ingredient from scratch: the single pulse and its
    /// ω-derivative on a lattice of half-width `p.half_width`.
    pub fn compute(
        spec: &PulseSpec,
        p: &Problem,
        route: PredictionRoute,
        s: &ContinuationSettings,
    ) -> Result<Self> {
        let q = single_pulse(p, s)?;
        let dq = omega_derivative(&q, p, default_omega_eps(p.omega), s)?;
        Self::from_pulse(spec, &q, &dq, route)
    }

    /// Predictions from a converged single pulse and its ω-derivative.
    pub fn from_pulse(
        spec: &PulseSpec,
        q: &LatticeField,
        dq: &LatticeField,
        route: PredictionRoute,
    ) -> Result<Self> {
        let p = q.problem();
        let b: Vec<f64> = spec
            .distances()
            .iter()
            .map(|&n| tail_overlap_b(q, n))
            .collect();
        let melnikov = melnikov_m(q, dq);
        let a = interaction_matrix(&b, spec.phases())?;
        let mu = nonzero_eigenvalues(&a);
        let lambda_pred = predictions_from_overlaps(&b, spec.phases(), melnikov, p.d, route)?;
        Ok(Self {
            spec: spec.clone(),
            omega: p.omega,
            d: p.d,
            r: spectral_ratio(p.omega, p.d),
            b,
            melnikov,
            a,
            mu,
            route,
            lambda_pred,
        })
    }

    /// One row per predicted pair: distances, phases, μ_j, |λ_j|, axis.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = CsvOut::create(path, &["pattern", "distances", "phases_pi", "j", "mu", "magnitude", "axis"])?;
        let distances: Vec<String> = self.spec.distances().iter().map(|n| n.to_string()).collect();
        let phases: Vec<String> = self
            .spec
            .phases()
            .iter()
            .map(|p| p.pi_multiple().to_string())
            .collect();
        for (j, pair) in self.lambda_pred.iter().enumerate() {
            w.row([
                self.spec.pattern().to_string(),
                distances.join(" "),
                phases.join(" "),
                (j + 1).to_string(),
                num(pair.mu),
                num(pair.magnitude),
                pair.axis.to_string(),
            ])?;
        }
        w.finish()
    }
}
