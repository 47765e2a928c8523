//! Damped Newton iteration for the steady-state equation and natural
//! continuation in the coupling `d`, starting from the anti-continuum limit.

use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::lattice::{jacobian, residual, LatticeField, Problem};

/// Noise floor (relative to `max|q|`) used to locate pulse centres.
pub const PEAK_NOISE_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    /// Sup-norm residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest damping factor tried in the backtracking line search.
    pub min_step_damping: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            min_step_damping: 1.0 / 64.0,
        }
    }
}

/// Step-size control for continuation in `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// A Newton solve taking at most this many iterations counts as easy.
    pub easy_iterations: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            initial_step: 0.01,
            min_step: 1e-6,
            max_step: 0.1,
            easy_iterations: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSettings {
    pub newton: NewtonSettings,
    pub policy: StepPolicy,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub field: LatticeField,
    pub iterations: usize,
    /// Sup-norm of the residual before each iteration and after the last one.
    pub residual_history: Vec<f64>,
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `residual(q, p) = 0` from `seed` by Newton's method with
/// backtracking on the Euclidean residual norm.
pub fn newton_solve(seed: &LatticeField, p: &Problem, s: &NewtonSettings) -> Result<NewtonOutcome> {
    if !(s.tol > 0.0) || s.max_iter == 0 {
        return Err(DnlsError::InvalidParameter(
            "newton settings need tol > 0 and max_iter >= 1".into(),
        ));
    }
    let mut q = seed.with_problem(*p);
    let mut r = residual(&q, p);
    let mut history = vec![r.sup_norm()];

    for it in 0..s.max_iter {
        if r.sup_norm() <= s.tol {
            return Ok(NewtonOutcome {
                field: q,
                iterations: it,
                residual_history: history,
            });
        }
        let rhs: Vec<f64> = r.values().iter().map(|x| -x).collect();
        let step = jacobian(&q, p).solve(&rhs)?;

        let merit = l2(r.values());
        let mut damping = 1.0;
        loop {
            let trial = LatticeField::from_values(
                *p,
                q.values()
                    .iter()
                    .zip(&step)
                    .map(|(a, b)| a + damping * b)
                    .collect(),
            )
            .map_err(|_| DnlsError::NoConvergence {
                iterations: it + 1,
                residual: history[history.len() - 1],
                reason: "newton step produced non-finite values".into(),
            })?;
            let tr = residual(&trial, p);
            if l2(tr.values()) < merit || tr.sup_norm() <= s.tol {
                q = trial;
                r = tr;
                break;
            }
            damping *= 0.5;
            if damping < s.min_step_damping {
                return Err(DnlsError::NoConvergence {
                    iterations: it + 1,
                    residual: history[history.len() - 1],
                    reason: "damping floor reached".into(),
                });
            }
        }
        history.push(r.sup_norm());
    }

    let last = r.sup_norm();
    if last <= s.tol {
        Ok(NewtonOutcome {
            field: q,
            iterations: s.max_iter,
            residual_history: history,
        })
    } else {
        Err(DnlsError::NoConvergence {
            iterations: s.max_iter,
            residual: last,
            reason: "iteration cap reached".into(),
        })
    }
}

/// Converged fields along a sweep in `d`; `samples[0]` is the anti-continuum seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationPath {
    pub samples: Vec<LatticeField>,
    pub policy: StepPolicy,
}

impl ContinuationPath {
    pub fn last(&self) -> &LatticeField {
        self.samples.last().expect("path always holds the seed")
    }

    pub fn into_last(mut self) -> LatticeField {
        self.samples.pop().expect("path always holds the seed")
    }

    pub fn d_values(&self) -> Vec<f64> {
        self.samples.iter().map(|f| f.problem().d).collect()
    }
}

/// Continues an anti-continuum solution (`d = 0`) to `d_target`.
///
/// The step halves whenever a solve fails and grows by 1.5 after two easy
/// solves in a row, within `[min_step, max_step]`.
pub fn continue_in_d(
    seed_at_zero: &LatticeField,
    omega: f64,
    d_target: f64,
    s: &ContinuationSettings,
) -> Result<ContinuationPath> {
    if !(d_target.is_finite() && d_target >= 0.0) {
        return Err(DnlsError::InvalidParameter(format!(
            "continuation target d must be nonnegative, got {d_target}"
        )));
    }
    let policy = s.policy;
    let p0 = Problem::new(omega, 0.0, seed_at_zero.problem().half_width)?;
    let start = newton_solve(seed_at_zero, &p0, &s.newton)?.field;
    let mut samples = vec![start];
    if d_target == 0.0 {
        return Ok(ContinuationPath { samples, policy });
    }

    let mut d = 0.0;
    let mut h = policy.initial_step.min(policy.max_step);
    let mut easy_streak = 0;
    while d < d_target {
        let mut d_next = d + h;
        if d_next >= d_target || d_target - d_next < 1e-3 * policy.min_step {
            d_next = d_target;
        }
        let p = p0.with_d(d_next)?;
        let prev = samples.last().expect("nonempty");
        match newton_solve(prev, &p, &s.newton) {
            Ok(out) => {
                d = d_next;
                samples.push(out.field);
                if out.iterations <= policy.easy_iterations {
                    easy_streak += 1;
                    if easy_streak >= 2 {
                        h = (h * 1.5).min(policy.max_step);
                        easy_streak = 0;
                    }
                } else {
                    easy_streak = 0;
                }
            }
            Err(DnlsError::NoConvergence { .. }) | Err(DnlsError::SingularJacobian { .. }) => {
                easy_streak = 0;
                h *= 0.5;
                if h < policy.min_step {
                    return Err(DnlsError::StepFloorReached {
                        reached_d: d,
                        min_step: policy.min_step,
                        last_good: Box::new(prev.clone()),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ContinuationPath { samples, policy })
}

/// The anti-continuum pattern underlying `q`: `sign(q[n]) sqrt(ω)` at every
/// pulse centre, zero elsewhere.
pub fn anticontinuum_pattern(q: &LatticeField, omega: f64) -> Result<LatticeField> {
    let centres = q.peaks(PEAK_NOISE_REL);
    if centres.is_empty() {
        return Err(DnlsError::InvalidParameter(
            "field has no pulse centres".into(),
        ));
    }
    let p = Problem::new(omega, 0.0, q.problem().half_width)?;
    let amp = omega.sqrt();
    LatticeField::from_fn(p, |n| {
        centres
            .iter()
            .find(|(c, _)| *c == n)
            .map_or(0.0, |(_, v)| amp.copysign(*v))
    })
}

/// Centered difference `(q(ω+ε) - q(ω-ε)) / 2ε`, each side continued afresh
/// from the anti-continuum limit to `p.d`.
pub fn omega_derivative(
    q: &LatticeField,
    p: &Problem,
    eps: f64,
    s: &ContinuationSettings,
) -> Result<LatticeField> {
    if !(eps > 0.0 && eps < 0.5 * p.omega) {
        return Err(DnlsError::InvalidParameter(format!(
            "finite-difference step {eps} must lie in (0, omega/2)"
        )));
    }
    let solve_at = |omega: f64| -> Result<LatticeField> {
        let seed = anticontinuum_pattern(q, omega)?;
        Ok(continue_in_d(&seed, omega, p.d, s)?.into_last())
    };
    let (plus, minus) = rayon::join(|| solve_at(p.omega + eps), || solve_at(p.omega - eps));
    let (plus, minus) = (plus?, minus?);
    LatticeField::from_values(
        *p,
        plus.values()
            .iter()
            .zip(minus.values())
            .map(|(a, b)| (a - b) / (2.0 * eps))
            .collect(),
    )
}

/// Default finite-difference step for [`omega_derivative`].
pub fn default_omega_eps(omega: f64) -> f64 {
    1e-4 * omega
}

/// Converged on-site single pulse at `(p.omega, p.d)`, centred at 0.
pub fn single_pulse(p: &Problem, s: &ContinuationSettings) -> Result<LatticeField> {
    let seed_problem = p.with_d(0.0)?;
    let amp = p.omega.sqrt();
    let seed = LatticeField::from_fn(seed_problem, |n| if n == 0 { amp } else { 0.0 })?;
    Ok(continue_in_d(&seed, p.omega, p.d, s)?.into_last())
}
