//! Multi-pulse configurations: `m` copies of the on-site pulse at given
//! distances, consecutive copies either in phase (`0`) or out of phase (`π`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::lattice::{LatticeField, Problem};
use crate::solver::{continue_in_d, ContinuationSettings, PEAK_NOISE_REL};

/// Minimum number of empty sites between a pulse centre and the lattice edge.
pub const EDGE_MARGIN: i64 = 10;

/// Minimum spacing between detected extrema for [`measure_spec`].
pub const MIN_EXTREMUM_SPACING: i64 = 4;

/// Phase difference between consecutive pulses. Only `0` and `π` occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Zero,
    Pi,
}

impl Phase {
    pub fn cos(self) -> f64 {
        match self {
            Phase::Zero => 1.0,
            Phase::Pi => -1.0,
        }
    }

    pub fn from_pi_multiple(k: u8) -> Result<Self> {
        match k {
            0 => Ok(Phase::Zero),
            1 => Ok(Phase::Pi),
            _ => Err(DnlsError::InvalidParameter(format!(
                "phase difference must be 0 or π, got {k}π"
            ))),
        }
    }

    pub fn pi_multiple(self) -> u8 {
        match self {
            Phase::Zero => 0,
            Phase::Pi => 1,
        }
    }

    /// The phase between two adjacent pulses with the given signs.
    pub fn between(a: f64, b: f64) -> Self {
        if (a > 0.0) == (b > 0.0) {
            Phase::Zero
        } else {
            Phase::Pi
        }
    }
}

/// Sign pattern such as `+-+`, i.e. the phase differences without distances.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhasePattern(pub Vec<Phase>);

impl PhasePattern {
    pub fn pulses(&self) -> usize {
        self.0.len() + 1
    }

    /// Every pattern with `m` pulses starting from `+`, in lexicographic
    /// order of the phases (`0` before `π`).
    pub fn all(m: usize) -> Vec<PhasePattern> {
        assert!(m >= 1);
        (0..1u32 << (m - 1))
            .map(|bits| {
                PhasePattern(
                    (0..m - 1)
                        .rev()
                        .map(|i| if bits >> i & 1 == 1 { Phase::Pi } else { Phase::Zero })
                        .collect(),
                )
            })
            .collect()
    }

    pub fn count(&self, phase: Phase) -> usize {
        self.0.iter().filter(|&&p| p == phase).count()
    }
}

impl FromStr for PhasePattern {
    type Err = DnlsError;

    fn from_str(s: &str) -> Result<Self> {
        let signs: Vec<f64> = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1.0),
                '-' => Ok(-1.0),
                _ => Err(DnlsError::InvalidParameter(format!(
                    "pattern {s:?} may only contain '+' and '-'"
                ))),
            })
            .collect::<Result<_>>()?;
        if signs.is_empty() {
            return Err(DnlsError::InvalidParameter("empty pulse pattern".into()));
        }
        Ok(PhasePattern(
            signs.windows(2).map(|w| Phase::between(w[0], w[1])).collect(),
        ))
    }
}

impl fmt::Display for PhasePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut sign = 1.0;
        write!(f, "+")?;
        for p in &self.0 {
            sign *= p.cos();
            write!(f, "{}", if sign > 0.0 { '+' } else { '-' })?;
        }
        Ok(())
    }
}

/// A multi-pulse: distances and phase differences between consecutive pulses,
/// plus the lattice index of the first centre.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SpecRecord", try_from = "SpecRecord")]
pub struct PulseSpec {
    distances: Vec<usize>,
    phases: Vec<Phase>,
    anchor: i64,
}

#[derive(Serialize, Deserialize)]
struct SpecRecord {
    m: usize,
    distances: Vec<usize>,
    phases_pi: Vec<u8>,
    anchor: i64,
}

impl From<PulseSpec> for SpecRecord {
    fn from(s: PulseSpec) -> Self {
        SpecRecord {
            m: s.pulses(),
            phases_pi: s.phases.iter().map(|p| p.pi_multiple()).collect(),
            distances: s.distances,
            anchor: s.anchor,
        }
    }
}

impl TryFrom<SpecRecord> for PulseSpec {
    type Error = DnlsError;

    fn try_from(r: SpecRecord) -> Result<Self> {
        let phases = r
            .phases_pi
            .iter()
            .map(|&k| Phase::from_pi_multiple(k))
            .collect::<Result<Vec<_>>>()?;
        let spec = PulseSpec::new(r.distances, phases, Some(r.anchor))?;
        if spec.pulses() != r.m {
            return Err(DnlsError::InvalidParameter(format!(
                "m = {} disagrees with {} distances",
                r.m,
                spec.distances.len()
            )));
        }
        Ok(spec)
    }
}

impl PulseSpec {
    /// `anchor = None` centres the configuration on the origin.
    pub fn new(distances: Vec<usize>, phases: Vec<Phase>, anchor: Option<i64>) -> Result<Self> {
        if distances.len() != phases.len() {
            return Err(DnlsError::InvalidParameter(format!(
                "{} distances but {} phase differences",
                distances.len(),
                phases.len()
            )));
        }
        if let Some(&n) = distances.iter().find(|&&n| n < 2) {
            return Err(DnlsError::InvalidParameter(format!(
                "pulse distances must be at least 2, got {n}"
            )));
        }
        let extent: usize = distances.iter().sum();
        let anchor = anchor.unwrap_or(-(extent as i64 / 2));
        Ok(Self {
            distances,
            phases,
            anchor,
        })
    }

    pub fn single() -> Self {
        Self {
            distances: vec![],
            phases: vec![],
            anchor: 0,
        }
    }

    pub fn from_pattern(pattern: &PhasePattern, distances: Vec<usize>) -> Result<Self> {
        Self::new(distances, pattern.0.clone(), None)
    }

    /// Equal spacing `n` for every gap of `pattern`.
    pub fn equally_spaced(pattern: &PhasePattern, n: usize) -> Result<Self> {
        Self::from_pattern(pattern, vec![n; pattern.0.len()])
    }

    pub fn pulses(&self) -> usize {
        self.distances.len() + 1
    }

    pub fn distances(&self) -> &[usize] {
        &self.distances
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn anchor(&self) -> i64 {
        self.anchor
    }

    pub fn pattern(&self) -> PhasePattern {
        PhasePattern(self.phases.clone())
    }

    pub fn extent(&self) -> usize {
        self.distances.iter().sum()
    }

    /// Half the smallest distance; `None` for a single pulse.
    pub fn half_min_distance(&self) -> Option<f64> {
        self.distances.iter().min().map(|&n| 0.5 * n as f64)
    }

    /// `(⌊N_i/2⌋, N_i - ⌊N_i/2⌋)` for gap `i`.
    pub fn split(&self, i: usize) -> (usize, usize) {
        let n = self.distances[i];
        (n / 2, n - n / 2)
    }

    pub fn centres(&self) -> Vec<i64> {
        let mut c = vec![self.anchor];
        for &n in &self.distances {
            c.push(c[c.len() - 1] + n as i64);
        }
        c
    }

    /// Sign of each pulse: the running product of `cos Δθ`.
    pub fn signs(&self) -> Vec<f64> {
        let mut s = vec![1.0];
        for p in &self.phases {
            s.push(s[s.len() - 1] * p.cos());
        }
        s
    }

    /// Default truncation: twice the extent plus 30 sites.
    pub fn default_half_width(&self) -> usize {
        2 * self.extent() + 30
    }
}

impl FromStr for PulseSpec {
    type Err = DnlsError;

    /// Parses `"+-+:8,8"` (signs, then distances).
    fn from_str(s: &str) -> Result<Self> {
        let (signs, dists) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let pattern: PhasePattern = signs.parse()?;
        let distances = match dists {
            Some(list) if !list.trim().is_empty() => list
                .split(',')
                .map(|t| {
                    t.trim().parse::<usize>().map_err(|_| {
                        DnlsError::InvalidParameter(format!("bad pulse distance {t:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            _ => vec![],
        };
        PulseSpec::from_pattern(&pattern, distances)
    }
}

impl fmt::Display for PulseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pattern())?;
        if !self.distances.is_empty() {
            let d: Vec<String> = self.distances.iter().map(|n| n.to_string()).collect();
            write!(f, ":{}", d.join(","))?;
        }
        Ok(())
    }
}

/// The `d = 0` solution with `±sqrt(ω)` at the pulse centres.
pub fn seed_anticontinuum(spec: &PulseSpec, omega: f64, p: &Problem) -> Result<LatticeField> {
    let p0 = Problem::new(omega, 0.0, p.half_width)?;
    let centres = spec.centres();
    let lo = p0.min_index() + EDGE_MARGIN;
    let hi = p0.max_index() - EDGE_MARGIN;
    if centres.iter().any(|&c| c < lo || c > hi) {
        return Err(DnlsError::DoesNotFit(format!(
            "centres {:?} need [{}, {}] inside a lattice of half-width {}",
            centres,
            centres[0] - EDGE_MARGIN,
            centres[centres.len() - 1] + EDGE_MARGIN,
            p.half_width
        )));
    }
    let amp = omega.sqrt();
    let signs = spec.signs();
    LatticeField::from_fn(p0, |n| {
        centres
            .iter()
            .position(|&c| c == n)
            .map_or(0.0, |k| signs[k] * amp)
    })
}

/// Continues the anti-continuum seed of `spec` to `d_target` and checks that
/// the result still shows the requested pulse pattern.
pub fn build_multipulse(
    spec: &PulseSpec,
    omega: f64,
    d_target: f64,
    half_width: Option<usize>,
    s: &ContinuationSettings,
) -> Result<LatticeField> {
    let l = half_width.unwrap_or_else(|| spec.default_half_width());
    let p = Problem::new(omega, d_target, l)?;
    let seed = seed_anticontinuum(spec, omega, &p)?;
    let q = continue_in_d(&seed, omega, d_target, s)?.into_last();
    check_structure(&q, spec)?;
    Ok(q)
}

fn check_structure(q: &LatticeField, spec: &PulseSpec) -> Result<()> {
    let peaks = q.peaks(PEAK_NOISE_REL);
    let centres = spec.centres();
    let signs = spec.signs();
    if peaks.len() != centres.len() {
        return Err(DnlsError::StructureMismatch(format!(
            "expected {} extrema, found {} at {:?}",
            centres.len(),
            peaks.len(),
            peaks.iter().map(|p| p.0).collect::<Vec<_>>()
        )));
    }
    for (k, ((n, v), (&c, &sg))) in peaks.iter().zip(centres.iter().zip(&signs)).enumerate() {
        if (n - c).abs() > 1 || v.signum() != sg {
            return Err(DnlsError::StructureMismatch(format!(
                "pulse {k}: expected sign {sg:+} near site {c}, found {v:+.3e} at site {n}"
            )));
        }
    }
    for (i, w) in peaks.windows(2).enumerate() {
        let measured = (w[1].0 - w[0].0) as usize;
        if measured != spec.distances[i] {
            return Err(DnlsError::StructureMismatch(format!(
                "gap {i}: expected distance {}, measured {measured}",
                spec.distances[i]
            )));
        }
    }
    Ok(())
}

/// Recovers the pulse specification of a converged field from its extrema.
pub fn measure_spec(q: &LatticeField) -> Result<PulseSpec> {
    let peaks = q.peaks(PEAK_NOISE_REL);
    if peaks.is_empty() {
        return Err(DnlsError::AmbiguousStructure("field has no extrema".into()));
    }
    let mut distances = Vec::with_capacity(peaks.len() - 1);
    let mut phases = Vec::with_capacity(peaks.len() - 1);
    for w in peaks.windows(2) {
        let gap = w[1].0 - w[0].0;
        if gap < MIN_EXTREMUM_SPACING {
            return Err(DnlsError::AmbiguousStructure(format!(
                "extrema at sites {} and {} are closer than {MIN_EXTREMUM_SPACING}",
                w[0].0, w[1].0
            )));
        }
        distances.push(gap as usize);
        phases.push(Phase::between(w[0].1, w[1].1));
    }
    PulseSpec::new(distances, phases, Some(peaks[0].0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::single_pulse;

    fn settings() -> ContinuationSettings {
        ContinuationSettings::default()
    }

    #[test]
    fn parse_and_display() {
        let s: PulseSpec = "+-+:8,8".parse().unwrap();
        assert_eq!(s.pulses(), 3);
        assert_eq!(s.distances(), &[8, 8]);
        assert_eq!(s.phases(), &[Phase::Pi, Phase::Pi]);
        assert_eq!(s.anchor(), -8);
        assert_eq!(s.to_string(), "+-+:8,8");
        assert_eq!("+".parse::<PulseSpec>().unwrap(), PulseSpec::single());
        assert!("+x".parse::<PulseSpec>().is_err());
        assert!("++:1".parse::<PulseSpec>().is_err());
        assert!("++:4,4".parse::<PulseSpec>().is_err());
    }

    #[test]
    fn derived_quantities() {
        let s: PulseSpec = "++-:9,6".parse().unwrap();
        assert_eq!(s.split(0), (4, 5));
        assert_eq!(s.split(1), (3, 3));
        assert_eq!(s.half_min_distance(), Some(3.0));
        assert_eq!(s.signs(), vec![1.0, 1.0, -1.0]);
        assert_eq!(s.centres(), vec![-7, 2, 8]);
    }

    #[test]
    fn all_patterns() {
        let p = PhasePattern::all(3);
        let names: Vec<String> = p.iter().map(|p| p.to_string()).collect();
        assert_eq!(names, vec!["+++", "++-", "+--", "+-+"]);
        assert_eq!(PhasePattern::all(1), vec![PhasePattern(vec![])]);
    }

    #[test]
    fn json_schema() {
        let s: PulseSpec = "+-:10".parse().unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"m":2,"distances":[10],"phases_pi":[1],"anchor":-5}"#);
        assert_eq!(serde_json::from_str::<PulseSpec>(&j).unwrap(), s);
        let bad = r#"{"m":2,"distances":[10],"phases_pi":[2],"anchor":-5}"#;
        assert!(serde_json::from_str::<PulseSpec>(bad).is_err());
        let bad_m = r#"{"m":3,"distances":[10],"phases_pi":[1],"anchor":-5}"#;
        assert!(serde_json::from_str::<PulseSpec>(bad_m).is_err());
    }

    #[test]
    fn seeds() {
        let p = Problem::new(2.0, 0.0, 40).unwrap();
        let r2 = 2f64.sqrt();
        let one = seed_anticontinuum(&PulseSpec::single(), 2.0, &p).unwrap();
        assert_eq!(one.get(0), r2);
        assert_eq!(one.values().iter().filter(|v| **v != 0.0).count(), 1);

        let two = seed_anticontinuum(&"+-:10".parse().unwrap(), 2.0, &p).unwrap();
        assert_eq!(two.get(-5), r2);
        assert_eq!(two.get(5), -r2);

        let three = seed_anticontinuum(&"+-+:8,8".parse().unwrap(), 2.0, &p).unwrap();
        assert_eq!((three.get(-8), three.get(0), three.get(8)), (r2, -r2, r2));
    }

    #[test]
    fn seed_must_fit() {
        let p = Problem::new(2.0, 0.0, 14).unwrap();
        let err = seed_anticontinuum(&"++:10".parse().unwrap(), 2.0, &p).unwrap_err();
        assert!(matches!(err, DnlsError::DoesNotFit(_)));
    }

    #[test]
    fn build_at_zero_returns_seed() {
        let spec: PulseSpec = "+-+:8,8".parse().unwrap();
        let q = build_multipulse(&spec, 2.0, 0.0, None, &settings()).unwrap();
        let p = Problem::new(2.0, 0.0, spec.default_half_width()).unwrap();
        assert_eq!(q, seed_anticontinuum(&spec, 2.0, &p).unwrap());
    }

    #[test]
    fn in_phase_pair() {
        let spec: PulseSpec = "++:10".parse().unwrap();
        let q = build_multipulse(&spec, 2.0, 1.0, None, &settings()).unwrap();
        let peaks = q.peaks(PEAK_NOISE_REL);
        assert_eq!(peaks.len(), 2);
        assert!(peaks.iter().all(|p| p.1 > 0.0));
        assert_eq!(measure_spec(&q).unwrap(), spec);
    }

    #[test]
    fn out_of_phase_triple_is_even() {
        let spec: PulseSpec = "+-+:8,8".parse().unwrap();
        let q = build_multipulse(&spec, 2.0, 1.0, None, &settings()).unwrap();
        let signs: Vec<f64> = q.peaks(PEAK_NOISE_REL).iter().map(|p| p.1.signum()).collect();
        assert_eq!(signs, vec![1.0, -1.0, 1.0]);
        assert!(q.is_even(1e-8));
        assert_eq!(measure_spec(&q).unwrap(), spec);
    }

    #[test]
    fn measure_roundtrip_unequal() {
        let spec: PulseSpec = "++-:8,6".parse().unwrap();
        let q = build_multipulse(&spec, 2.0, 0.7, None, &settings()).unwrap();
        let measured = measure_spec(&q).unwrap();
        assert_eq!(measured, spec);
        let again = build_multipulse(&measured, 2.0, 0.7, None, &settings()).unwrap();
        assert_eq!(again, q);
    }

    #[test]
    fn measure_single_and_zero() {
        let p = Problem::new(2.0, 1.0, 30).unwrap();
        let q = single_pulse(&p, &settings()).unwrap();
        let s = measure_spec(&q).unwrap();
        assert_eq!(s.pulses(), 1);
        assert!(s.distances().is_empty());
        assert!(matches!(
            measure_spec(&LatticeField::zeros(p)),
            Err(DnlsError::AmbiguousStructure(_))
        ));
    }

    #[test]
    fn measure_rejects_crowded_extrema() {
        let p = Problem::new(2.0, 0.0, 20).unwrap();
        let q = LatticeField::from_fn(p, |n| if n == 0 || n == 2 { 1.0 } else { 0.0 }).unwrap();
        assert!(matches!(
            measure_spec(&q),
            Err(DnlsError::AmbiguousStructure(_))
        ));
    }

    #[test]
    fn structure_mismatch_detected() {
        let spec: PulseSpec = "++:10".parse().unwrap();
        let p = Problem::new(2.0, 0.0, spec.default_half_width()).unwrap();
        let q = seed_anticontinuum(&"+-:10".parse().unwrap(), 2.0, &p).unwrap();
        assert!(matches!(
            check_structure(&q, &spec),
            Err(DnlsError::StructureMismatch(_))
        ));
    }
}
