//! End-to-end experiments: decay of the interaction eigenvalues with the pulse
//! distance, and the accuracy of the predictions across a grid in `d`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::lattice::{LatticeField, Problem};
use crate::multipulse::{build_multipulse, PhasePattern, PulseSpec};
use crate::solver::{default_omega_eps, omega_derivative, single_pulse, ContinuationSettings};
use crate::spectrum::{compute_spectrum, Axis, ClassifyTolerances, InteractionPair, Spectrum};
use crate::theory::{predictions_from_overlaps, spectral_ratio, PredictedPair, PredictionRoute, TheoryPrediction};

/// Solver and classifier settings shared by every row of a study.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StudySettings {
    pub continuation: ContinuationSettings,
    pub tolerances: ClassifyTolerances,
}

/// Half-width used for every harness run: half the configuration extent plus
/// `max(30, 4 N_max)`.
pub fn harness_half_width(spec: &PulseSpec) -> usize {
    let n_max = spec.distances().iter().copied().max().unwrap_or(0);
    spec.extent().div_ceil(2) + (4 * n_max).max(30)
}

/// Default sweep grid: 0.05, 0.10, ..., 1.00.
pub fn default_d_grid() -> Vec<f64> {
    d_grid(0.05, 1.0, 0.05).expect("static grid")
}

/// `min, min + step, ...` up to `max` inclusive, rounded to 12 decimals so
/// that grid values print cleanly.
pub fn d_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(min > 0.0) || !(max >= min) || !max.is_finite() {
        return Err(DnlsError::InvalidParameter(format!(
            "d grid needs 0 < min <= max and step > 0, got {min}..{max} step {step}"
        )));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((min + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Ordinary least squares `y ≈ slope·x + intercept`; also returns the
/// Euclidean norm of the residuals.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(DnlsError::InvalidParameter(format!(
            "linear fit needs at least two (x, y) pairs, got {} xs and {} ys",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(DnlsError::DegenerateAbscissa);
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok((slope, intercept, rss.sqrt()))
}

/// A converged multi-pulse together with its classified spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub field: LatticeField,
    pub spectrum: Spectrum,
}

impl Configuration {
    /// Builds `spec` at `(omega, d)` on the harness lattice and classifies
    /// its spectrum.
    pub fn solve(spec: &PulseSpec, omega: f64, d: f64, s: &StudySettings) -> Result<Self> {
        let field = build_multipulse(spec, omega, d, Some(harness_half_width(spec)), &s.continuation)?;
        let spectrum = compute_spectrum(&field, spec.pulses(), &s.tolerances)?;
        Ok(Self { field, spectrum })
    }

    /// Interaction pairs ordered real before imaginary, then by magnitude.
    pub fn pairs(&self) -> Vec<InteractionPair> {
        sorted_pairs(self.spectrum.interaction_pairs())
    }
}

fn sorted_pairs(mut pairs: Vec<InteractionPair>) -> Vec<InteractionPair> {
    pairs.sort_by(|a, b| a.axis.cmp(&b.axis).then(a.magnitude.total_cmp(&b.magnitude)));
    pairs
}

fn sorted_predictions(mut pairs: Vec<PredictedPair>) -> Vec<PredictedPair> {
    pairs.sort_by(|a, b| a.axis.cmp(&b.axis).then(a.magnitude.total_cmp(&b.magnitude)));
    pairs
}

/// Why a row produced no data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub tag: String,
    pub message: String,
}

impl From<DnlsError> for RowError {
    fn from(e: DnlsError) -> Self {
        Self {
            tag: e.tag().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub omega: f64,
    pub d: f64,
    pub pattern: String,
    /// Pulse distances, all equal within a row.
    pub distances: Vec<usize>,
    /// What the fits regress against.
    pub abscissa: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub distance: usize,
    pub half_distance: f64,
    pub half_width: usize,
    pub pairs: Vec<InteractionPair>,
    pub error: Option<RowError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub pair: usize,
    pub axis: Axis,
    pub slope: f64,
    pub intercept: f64,
    pub residual_norm: f64,
    pub rel_slope_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayStudy {
    pub config: DecayConfig,
    pub rows: Vec<DecayRow>,
    pub target_slope: f64,
    pub fits: Vec<PairFit>,
    /// The smallest-distance configuration that converged, for plotting.
    pub representative: Option<Configuration>,
}

/// Fewer successful rows than this and a decay fit is refused.
pub const MIN_DECAY_ROWS: usize = 4;

/// Builds `pattern` with equal distances from `distances`, and fits
/// `log|λ_j|` against the half-distance `N_i / 2` for every pair `j`.
pub fn run_decay_study(
    omega: f64,
    d: f64,
    pattern: &PhasePattern,
    distances: &[usize],
    s: &StudySettings,
) -> Result<DecayStudy> {
    if pattern.pulses() < 2 {
        return Err(DnlsError::InvalidParameter("decay study needs at least two pulses".into()));
    }
    if let Some(&n) = distances.iter().find(|&&n| n < 6 || n % 2 != 0) {
        return Err(DnlsError::InvalidParameter(format!(
            "decay distances must be even and at least 6, got {n}"
        )));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let outcomes: Vec<(DecayRow, Option<Configuration>)> = sorted
        .par_iter()
        .map(|&n| {
            let spec = PulseSpec::equally_spaced(pattern, n);
            let half_width = spec.as_ref().map(harness_half_width).unwrap_or(0);
            let solved = spec.and_then(|spec| Configuration::solve(&spec, omega, d, s));
            let mut row = DecayRow {
                distance: n,
                half_distance: n as f64 / 2.0,
                half_width,
                pairs: vec![],
                error: None,
            };
            match solved {
                Ok(c) => {
                    row.pairs = c.pairs();
                    (row, Some(c))
                }
                Err(e) => {
                    row.error = Some(e.into());
                    (row, None)
                }
            }
        })
        .collect();

    let representative = outcomes.iter().find_map(|(_, c)| c.clone());
    let rows: Vec<DecayRow> = outcomes.into_iter().map(|(r, _)| r).collect();
    let target_slope = -spectral_ratio(omega, d).ln();
    let fits = fit_decay(&rows, target_slope)?;
    Ok(DecayStudy {
        config: DecayConfig {
            omega,
            d,
            pattern: pattern.to_string(),
            distances: sorted,
            abscissa: "half-distance".into(),
        },
        rows,
        target_slope,
        fits,
        representative,
    })
}

fn fit_decay(rows: &[DecayRow], target: f64) -> Result<Vec<PairFit>> {
    let good: Vec<&DecayRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    if good.len() < MIN_DECAY_ROWS {
        let failures: Vec<String> = rows
            .iter()
            .filter_map(|r| r.error.as_ref().map(|e| format!("N={}: {}", r.distance, e.message)))
            .collect();
        return Err(DnlsError::StudyFailed(format!(
            "{} of {} rows succeeded, need {MIN_DECAY_ROWS}{}",
            good.len(),
            rows.len(),
            if failures.is_empty() { String::new() } else { format!(" ({})", failures.join("; ")) }
        )));
    }
    let axes: Vec<Axis> = good[0].pairs.iter().map(|p| p.axis).collect();
    if let Some(r) = good.iter().find(|r| r.pairs.iter().map(|p| p.axis).ne(axes.iter().copied())) {
        return Err(DnlsError::StudyFailed(format!(
            "interaction pairs at N={} lie on different axes than at N={}",
            r.distance, good[0].distance
        )));
    }
    let xs: Vec<f64> = good.iter().map(|r| r.half_distance).collect();
    axes.iter()
        .enumerate()
        .map(|(j, &axis)| {
            let ys: Vec<f64> = good.iter().map(|r| r.pairs[j].magnitude.ln()).collect();
            let (slope, intercept, residual_norm) = linear_fit(&xs, &ys)?;
            if !residual_norm.is_finite() {
                return Err(DnlsError::StudyFailed(format!("fit of pair {j} is not finite")));
            }
            Ok(PairFit {
                pair: j,
                axis,
                slope,
                intercept,
                residual_norm,
                rel_slope_error: ((slope - target) / target).abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub omega: f64,
    pub spec: PulseSpec,
    pub d_grid: Vec<f64>,
    pub route: PredictionRoute,
}

/// One grid point. `predicted`, `computed` and `rel_error` are aligned
/// pair by pair: real pairs first, each axis by increasing magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: f64,
    pub half_width: usize,
    pub b: Vec<f64>,
    pub melnikov: f64,
    pub mu: Vec<f64>,
    pub predicted: Vec<PredictedPair>,
    pub computed: Vec<InteractionPair>,
    pub rel_error: Vec<f64>,
    pub error: Option<RowError>,
}

impl SweepRow {
    pub fn max_rel_error(&self) -> Option<f64> {
        self.rel_error.iter().copied().reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSweep {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    /// The converged row nearest the middle of the grid, for plotting.
    pub representative: Option<(f64, Configuration)>,
}

impl ErrorSweep {
    /// `(d, pair, rel_error)` of the smallest per-pair relative error.
    pub fn min_rel_error(&self) -> Option<(f64, usize, f64)> {
        self.rows
            .iter()
            .flat_map(|r| r.rel_error.iter().enumerate().map(move |(j, &e)| (r.d, j, e)))
            .min_by(|a, b| a.2.total_cmp(&b.2))
    }

    /// Recomputes every stored prediction from the stored `(b, M, d)`;
    /// returns the first row where they differ.
    pub fn check_consistency(&self) -> Result<()> {
        for row in self.rows.iter().filter(|r| r.error.is_none()) {
            let again = sorted_predictions(predictions_from_overlaps(
                &row.b,
                self.config.spec.phases(),
                row.melnikov,
                row.d,
                self.config.route,
            )?);
            if again != row.predicted {
                return Err(DnlsError::StudyFailed(format!(
                    "stored predictions at d = {} do not match a recomputation",
                    row.d
                )));
            }
        }
        Ok(())
    }
}

/// For every `d` in the grid: builds the multi-pulse, classifies its
/// spectrum, evaluates the predictions with fresh `b_i` and `M`, and records
/// `|pred - comp| / |comp|` per pair. Failed rows keep their error tag.
pub fn run_error_sweep(
    omega: f64,
    spec: &PulseSpec,
    d_grid: &[f64],
    route: PredictionRoute,
    s: &StudySettings,
) -> Result<ErrorSweep> {
    if spec.pulses() < 2 {
        return Err(DnlsError::InvalidParameter("error sweep needs at least two pulses".into()));
    }
    if let Some(&d) = d_grid.iter().find(|&&d| !(d > 0.0 && d <= 1.5)) {
        return Err(DnlsError::InvalidParameter(format!("sweep d = {d} outside (0, 1.5]")));
    }
    Problem::new(omega, 0.0, 1)?;
    let mut grid = d_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let outcomes: Vec<(SweepRow, Option<Configuration>)> =
        grid.par_iter().map(|&d| sweep_row(omega, spec, d, route, s)).collect();

    let middle = grid.first().zip(grid.last()).map(|(a, b)| 0.5 * (a + b));
    let representative = middle.and_then(|mid| {
        outcomes
            .iter()
            .filter_map(|(r, c)| c.as_ref().map(|c| (r.d, c)))
            .min_by(|a, b| (a.0 - mid).abs().total_cmp(&(b.0 - mid).abs()))
            .map(|(d, c)| (d, c.clone()))
    });
    Ok(ErrorSweep {
        config: SweepConfig {
            omega,
            spec: spec.clone(),
            d_grid: grid,
            route,
        },
        rows: outcomes.into_iter().map(|(r, _)| r).collect(),
        representative,
    })
}

fn sweep_row(
    omega: f64,
    spec: &PulseSpec,
    d: f64,
    route: PredictionRoute,
    s: &StudySettings,
) -> (SweepRow, Option<Configuration>) {
    let half_width = harness_half_width(spec);
    let mut row = SweepRow {
        d,
        half_width,
        b: vec![],
        melnikov: f64::NAN,
        mu: vec![],
        predicted: vec![],
        computed: vec![],
        rel_error: vec![],
        error: None,
    };
    let result = (|| {
        let (config, theory) = rayon::join(
            || Configuration::solve(spec, omega, d, s),
            || predict_on_lattice(spec, omega, d, half_width, route, &s.continuation),
        );
        Ok::<_, DnlsError>((config?, theory?))
    })();
    let (config, theory) = match result {
        Ok(v) => v,
        Err(e) => {
            row.error = Some(e.into());
            return (row, None);
        }
    };
    row.b = theory.b;
    row.melnikov = theory.melnikov;
    row.mu = theory.mu;
    row.predicted = sorted_predictions(theory.lambda_pred);
    row.computed = config.pairs();
    let axes_match = row.predicted.len() == row.computed.len()
        && row.predicted.iter().zip(&row.computed).all(|(p, c)| p.axis == c.axis);
    if !axes_match {
        let count = |axis| row.predicted.iter().filter(|p| p.axis == axis).count();
        let found = |axis| row.computed.iter().filter(|p| p.axis == axis).count();
        row.error = Some(
            DnlsError::ClassificationAmbiguous(format!(
                "predicted {} real / {} imaginary pairs, computed {} / {}",
                count(Axis::Real),
                count(Axis::Imaginary),
                found(Axis::Real),
                found(Axis::Imaginary)
            ))
            .into(),
        );
        return (row, Some(config));
    }
    row.rel_error = row
        .predicted
        .iter()
        .zip(&row.computed)
        .map(|(p, c)| (p.magnitude - c.magnitude).abs() / c.magnitude)
        .collect();
    (row, Some(config))
}

fn predict_on_lattice(
    spec: &PulseSpec,
    omega: f64,
    d: f64,
    half_width: usize,
    route: PredictionRoute,
    s: &ContinuationSettings,
) -> Result<TheoryPrediction> {
    let p = Problem::new(omega, d, half_width)?;
    let q = single_pulse(&p, s)?;
    let dq = omega_derivative(&q, &p, default_omega_eps(omega), s)?;
    TheoryPrediction::from_pulse(spec, &q, &dq, route)
}
