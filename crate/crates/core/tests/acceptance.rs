//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use dnls_core::lattice::{jacobian, power, residual, ComplexField};
use dnls_core::multipulse::seed_anticontinuum;
use dnls_core::solver::{default_omega_eps, omega_derivative, single_pulse};
use dnls_core::spectrum::{assemble, eigensolve, quartet_defect};
use dnls_core::study::{default_d_grid, linear_fit, Configuration, ErrorSweep};
use dnls_core::theory::{
    interaction_matrix, melnikov_m, nonzero_eigenvalues, predictions_from_overlaps, spectral_ratio,
};
use dnls_core::{
    run_decay_study, run_error_sweep, Axis, ContinuationSettings, EigenClass, LatticeField, Phase, PhasePattern,
    PredictionRoute, Problem, PulseSpec, StudySettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const OMEGA: f64 = 2.0;

fn decay_slopes(s: &StudySettings) -> Outcome {
    let mut lines = vec![];
    let mut ok = true;
    for pattern in ["++", "+-", "+++", "+-+", "++-"] {
        let pat: PhasePattern = pattern.parse().unwrap();
        let study = run_decay_study(OMEGA, 1.0, &pat, &[8, 10, 12, 14], s).map_err(|e| format!("{pattern}: {e}"))?;
        for f in &study.fits {
            ok &= f.rel_slope_error <= 1e-3;
            lines.push(format!(
                "{pattern} pair {} ({}) slope {:.6} rel err {:.2e}",
                f.pair, f.axis, f.slope, f.rel_slope_error
            ));
        }
        ok &= study.fits.len() == pat.pulses() - 1;
    }
    check(ok, format!("target {:.6}; {}", -spectral_ratio(OMEGA, 1.0).ln(), lines.join("; ")))
}

fn sweep_summary(name: &str, sweep: &ErrorSweep) -> (bool, String) {
    let failed: Vec<String> = sweep
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("d={} {}", r.d, e.tag)))
        .collect();
    let Some((d_min, pair, e_min)) = sweep.min_rel_error() else {
        return (false, format!("{name}: no successful rows ({})", failed.join(", ")));
    };
    let grid = &sweep.config.d_grid;
    let interior = d_min > grid[0] && d_min < grid[grid.len() - 1];
    let at_half = sweep
        .rows
        .iter()
        .find(|r| (r.d - 0.5).abs() < 1e-12)
        .and_then(|r| r.max_rel_error());
    let consistent = sweep.check_consistency().is_ok();
    let ok = e_min < 1e-3 && interior && at_half.is_some_and(|e| e < 1e-3) && consistent;
    (
        ok,
        format!(
            "{name}: min rel err {e_min:.2e} at d={d_min} (pair {pair}), max rel err at d=0.5 {}, consistent {consistent}, failed rows [{}]",
            at_half.map_or("n/a".into(), |e| format!("{e:.2e}")),
            failed.join(", ")
        ),
    )
}

fn prediction_accuracy(s: &StudySettings) -> Outcome {
    let grid = default_d_grid();
    let mut ok = true;
    let mut lines = vec![];
    for spec in ["++:10", "+-+:8,8"] {
        let spec: PulseSpec = spec.parse().unwrap();
        let sweep = run_error_sweep(OMEGA, &spec, &grid, PredictionRoute::Matrix, s).map_err(|e| e.to_string())?;
        let (good, line) = sweep_summary(&spec.to_string(), &sweep);
        ok &= good;
        lines.push(line);
    }
    check(ok, lines.join("; "))
}

fn unequal_three_pulse(s: &StudySettings) -> Outcome {
    let spec: PulseSpec = "+++:8,6".parse().unwrap();
    let sweep =
        run_error_sweep(OMEGA, &spec, &default_d_grid(), PredictionRoute::ClosedForm, s).map_err(|e| e.to_string())?;
    let (mut ok, sweep_line) = sweep_summary(&spec.to_string(), &sweep);

    // Shifted family: the smaller pair follows r^{-N1/2}, the larger r^{-N2/2}.
    let d = 1.0;
    let target = -spectral_ratio(OMEGA, d).ln();
    let family = [(8usize, 6usize), (10, 8), (12, 10), (14, 12)];
    let mut small = vec![];
    let mut large = vec![];
    for (n1, n2) in family {
        let spec = PulseSpec::from_pattern(&"+++".parse().unwrap(), vec![n1, n2]).unwrap();
        let c = Configuration::solve(&spec, OMEGA, d, s).map_err(|e| format!("({n1},{n2}): {e}"))?;
        let pairs = c.pairs();
        if pairs.len() != 2 || pairs.iter().any(|p| p.axis != Axis::Real) {
            return Err(format!("({n1},{n2}): expected two real pairs, got {pairs:?}"));
        }
        small.push((n1 as f64 / 2.0, pairs[0].magnitude.ln()));
        large.push((n2 as f64 / 2.0, pairs[1].magnitude.ln()));
    }
    let fit = |pts: &[(f64, f64)]| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        linear_fit(&xs, &ys).map(|f| f.0)
    };
    let s1 = fit(&small).map_err(|e| e.to_string())?;
    let s2 = fit(&large).map_err(|e| e.to_string())?;
    let (e1, e2) = (((s1 - target) / target).abs(), ((s2 - target) / target).abs());
    ok &= e1 <= 0.05 && e2 <= 0.05;
    check(
        ok,
        format!(
            "{sweep_line}; scaling vs N1/2 slope {s1:.5} (err {e1:.2e}), vs N2/2 slope {s2:.5} (err {e2:.2e}), target {target:.5}"
        ),
    )
}

fn stability_counting(s: &StudySettings, spectra: &mut Vec<(String, f64)>) -> Outcome {
    let mut ok = true;
    let mut bad = vec![];
    let mut checked = 0;
    for m in 2..=4 {
        for pattern in PhasePattern::all(m) {
            let spec = PulseSpec::equally_spaced(&pattern, 12).unwrap();
            let c = match Configuration::solve(&spec, OMEGA, 1.0, s) {
                Ok(c) => c,
                Err(e) => {
                    ok = false;
                    bad.push(format!("{pattern}: {e}"));
                    continue;
                }
            };
            checked += 1;
            let k0 = pattern.count(Phase::Zero);
            let kpi = pattern.count(Phase::Pi);
            let tiny = c.spectrum.eigenvalues.iter().filter(|z| z.norm() <= 1e-6).count();
            let zero_ok = c.spectrum.count(EigenClass::ZeroMode) == 2
                && c.spectrum.of_class(EigenClass::ZeroMode).all(|z| z.norm() <= 1e-6)
                && tiny == 2;
            let counts_ok = c.spectrum.pairs_on(Axis::Real) == k0 && c.spectrum.pairs_on(Axis::Imaginary) == kpi;
            if !(zero_ok && counts_ok) {
                ok = false;
                bad.push(format!(
                    "{pattern}: real {} (want {k0}), imaginary {} (want {kpi}), |λ|<=1e-6: {tiny}",
                    c.spectrum.pairs_on(Axis::Real),
                    c.spectrum.pairs_on(Axis::Imaginary)
                ));
            }
            spectra.push((pattern.to_string(), quartet_defect(&c.spectrum.eigenvalues)));
        }
    }
    check(ok, format!("{checked}/14 patterns classified; problems [{}]", bad.join("; ")))
}

fn property_suites(s: &StudySettings, spectra: &[(String, f64)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut parts = vec![];
    let mut ok = true;

    // Jacobian against central differences of the residual.
    let mut jac_err: f64 = 0.0;
    for _ in 0..100 {
        let p = Problem::new(OMEGA, 1.0, 10).unwrap();
        let q = LatticeField::from_fn(p, |_| rng.gen_range(-2.0..2.0)).unwrap();
        let h: Vec<f64> = (0..p.n_sites()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = 1e-6;
        let shifted = |sign: f64| {
            let v: Vec<f64> = q.values().iter().zip(&h).map(|(a, b)| a + sign * t * b).collect();
            residual(&LatticeField::from_values(p, v).unwrap(), &p).into_values()
        };
        let (fp, fm) = (shifted(1.0), shifted(-1.0));
        let jh = jacobian(&q, &p).matvec(&h);
        let hn = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = jh
            .iter()
            .zip(fp.iter().zip(&fm))
            .fold(0.0f64, |m, (j, (a, b))| m.max((j - (a - b) / (2.0 * t)).abs()));
        jac_err = jac_err.max(err / hn);
    }
    ok &= jac_err <= 1e-6;
    parts.push(format!("jacobian fd {jac_err:.1e}"));

    // Quartet symmetry of every spectrum computed above.
    let worst = spectra.iter().map(|x| x.1).fold(0.0, f64::max);
    ok &= !spectra.is_empty() && worst <= 1e-8;
    parts.push(format!("quartet defect {worst:.1e} over {} spectra", spectra.len()));

    // Interaction matrices: null vector, distinct eigenvalues, closed forms.
    let mut row_sum: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    let mut closed_gap: f64 = 0.0;
    for _ in 0..300 {
        let m = rng.gen_range(2..=6);
        let ph = |r: &mut ChaCha8Rng| if r.gen_bool(0.5) { Phase::Pi } else { Phase::Zero };
        let equal = rng.gen_bool(0.5) || m > 3;
        let b0 = -rng.gen_range(1e-6..1.0);
        let b: Vec<f64> = (1..m).map(|_| if equal { b0 } else { -rng.gen_range(1e-6..1.0) }).collect();
        let uniform_phase = ph(&mut rng);
        let phases: Vec<Phase> = (1..m).map(|_| if equal { uniform_phase } else { ph(&mut rng) }).collect();
        let a = interaction_matrix(&b, &phases).unwrap();
        let norm = a.norm_inf();
        row_sum = row_sum.max(a.matvec(&vec![1.0; m]).iter().fold(0.0f64, |x, y| x.max(y.abs())) / norm);
        let mu = nonzero_eigenvalues(&a);
        for w in mu.windows(2) {
            min_gap = min_gap.min((w[1] - w[0]) / norm);
        }
        let (mm, d) = (rng.gen_range(0.1..1.0), rng.gen_range(0.05..1.5));
        let generic = predictions_from_overlaps(&b, &phases, mm, d, PredictionRoute::Matrix).unwrap();
        let closed = predictions_from_overlaps(&b, &phases, mm, d, PredictionRoute::ClosedForm).unwrap();
        for (g, c) in generic.iter().zip(&closed) {
            if g.axis != c.axis {
                closed_gap = f64::INFINITY;
            }
            closed_gap = closed_gap.max((g.magnitude - c.magnitude).abs() / g.magnitude);
        }
    }
    ok &= row_sum <= 1e-15 && min_gap >= 1e-12 && closed_gap <= 1e-10;
    parts.push(format!(
        "A row sums {row_sum:.1e}, min mu gap {min_gap:.1e}, closed vs generic {closed_gap:.1e}"
    ));

    // Melnikov sum against the derivative of the power.
    let p = Problem::new(OMEGA, 1.0, 40).unwrap();
    let cs = &s.continuation;
    let q = single_pulse(&p, cs).map_err(|e| e.to_string())?;
    let dq = omega_derivative(&q, &p, default_omega_eps(OMEGA), cs).map_err(|e| e.to_string())?;
    let m = melnikov_m(&q, &dq);
    let h = 1e-3;
    let pw = |w: f64| {
        let pp = p.with_omega(w).unwrap();
        single_pulse(&pp, cs).map(|q| power(&ComplexField::real(q)))
    };
    let dqdw = (pw(OMEGA + h).map_err(|e| e.to_string())? - pw(OMEGA - h).map_err(|e| e.to_string())?) / (2.0 * h);
    let m_err = ((m - dqdw) / dqdw).abs();
    ok &= m > 0.0 && m_err <= 1e-4;
    parts.push(format!("M {m:.6} vs dQ/dω {dqdw:.6} (rel {m_err:.1e})"));

    // Zero-field band against the discrete Fourier modes.
    let (d, l) = (1.0, 40usize);
    let zp = Problem::new(OMEGA, d, l).unwrap();
    let eigs = eigensolve(&assemble(&LatticeField::zeros(zp), &zp)).map_err(|e| e.to_string())?;
    let n = 2 * l + 1;
    let mut want: Vec<f64> = (1..=n)
        .flat_map(|k| {
            let s = (std::f64::consts::PI * k as f64 / (2.0 * (n + 1) as f64)).sin();
            let w = OMEGA + 4.0 * d * s * s;
            [w, -w]
        })
        .collect();
    want.sort_by(f64::total_cmp);
    let mut got: Vec<f64> = eigs.iter().map(|z| z.im).collect();
    got.sort_by(f64::total_cmp);
    let band_err = want
        .iter()
        .zip(&got)
        .map(|(a, b)| (a - b).abs())
        .chain(eigs.iter().map(|z| z.re.abs()))
        .fold(0.0, f64::max);
    let in_band = got.iter().all(|y| y.abs() >= OMEGA && y.abs() <= OMEGA + 4.0 * d);
    ok &= band_err <= 1e-8 && in_band && got.len() == want.len();
    parts.push(format!("zero-field band err {band_err:.1e}"));

    // Anti-continuum limit.
    let p0 = Problem::new(OMEGA, 0.0, 20).unwrap();
    let spec: PulseSpec = "+-+:8,8".parse().unwrap();
    let seed = seed_anticontinuum(&spec, OMEGA, &p0).map_err(|e| e.to_string())?;
    let seed_res = residual(&seed, &p0).sup_norm();
    // √4 is representable, so there the residual vanishes identically.
    let p4 = Problem::new(4.0, 0.0, 20).unwrap();
    let seed4 = seed_anticontinuum(&spec, 4.0, &p4).map_err(|e| e.to_string())?;
    let seed4_res = residual(&seed4, &p4).sup_norm();
    // Closed-form d = 0 pulse and derivative: q = √ω δ, ∂ωq = δ / (2√ω).
    let sqrt_w = OMEGA.sqrt();
    let q_exact = LatticeField::from_fn(p0, |n| if n == 0 { sqrt_w } else { 0.0 }).unwrap();
    let dq_exact = LatticeField::from_fn(p0, |n| if n == 0 { 0.5 / sqrt_w } else { 0.0 }).unwrap();
    let m_exact = melnikov_m(&q_exact, &dq_exact);
    // The pipeline's centred difference carries an O(ε²) truncation term.
    let q0 = single_pulse(&p0, cs).map_err(|e| e.to_string())?;
    let dq0 = omega_derivative(&q0, &p0, default_omega_eps(OMEGA), cs).map_err(|e| e.to_string())?;
    let m0 = melnikov_m(&q0, &dq0);
    let eps = default_omega_eps(OMEGA);
    ok &= seed4_res == 0.0
        && seed_res <= 4.0 * f64::EPSILON * OMEGA.powf(1.5)
        && (m_exact - 0.5).abs() <= f64::EPSILON
        && (m0 - 0.5).abs() <= eps * eps / OMEGA.powi(2);
    parts.push(format!(
        "d=0 seed residual {seed4_res:e} (ω=4), {seed_res:.1e} (ω=2), closed-form M {m_exact}, continued M {m0:.12}"
    ));

    check(ok, parts.join("; "))
}

fn report(name: &str, start: Instant, outcome: &Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS {name} [{secs:.1}s]: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL {name} [{secs:.1}s]: {detail}");
            false
        }
    }
}

fn main() -> ExitCode {
    let settings = StudySettings {
        continuation: ContinuationSettings::default(),
        ..Default::default()
    };
    let mut spectra = vec![];
    let mut all = true;

    let t = Instant::now();
    all &= report("1 decay slopes", t, &decay_slopes(&settings));
    let t = Instant::now();
    all &= report("2 prediction accuracy", t, &prediction_accuracy(&settings));
    let t = Instant::now();
    all &= report("3 unequal three-pulse", t, &unequal_three_pulse(&settings));
    let t = Instant::now();
    all &= report("4 stability counting", t, &stability_counting(&settings, &mut spectra));
    let t = Instant::now();
    all &= report("5 property suites", t, &property_suites(&settings, &spectra));

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
