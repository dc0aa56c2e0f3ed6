//! Shape analysis of boundary curves: turning direction of point triples,
//! localization of the concave-to-convex change, and correlator
//! trajectories along a scan.

use serde::{Deserialize, Serialize};

use crate::behavior::{Correlators, Relabeling};
use crate::error::AnalysisError;
use crate::functionals::{chsh_linear_correlators, s_max_correlators};
use crate::scan::{BoundaryCurve, SetKind};

/// Relative tolerance on grid-spacing uniformity.
pub const SPACING_TOL: f64 = 1e-6;
/// Determinants at or below this magnitude carry no sign.
pub const ZERO_DET: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationSample {
    /// Abscissa of the first point of the triple.
    pub s: f64,
    pub det: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflectionEstimate {
    pub s_star: f64,
    pub uncertainty: f64,
    pub transition_lo: f64,
    pub transition_hi: f64,
}

/// `det [[1, xa, ya], [1, xb, yb], [1, xc, yc]]`; positive when the path
/// `a -> b -> c` turns counterclockwise.
pub fn orientation_det(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)
}

fn check_uniform(xs: &[f64]) -> Result<f64, AnalysisError> {
    let n = xs.len();
    let expected = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    for (i, w) in xs.windows(2).enumerate() {
        let step = w[1] - w[0];
        if !((step - expected).abs() <= SPACING_TOL * expected.abs()) || !(step > 0.0) {
            return Err(AnalysisError::NonUniform { index: i, step, expected });
        }
    }
    Ok(expected)
}

/// Orientation of the triples `(i, i + k, i + 2k)` of uniformly spaced points.
pub fn concavity_profile_xy(points: &[(f64, f64)], k: usize) -> Result<Vec<OrientationSample>, AnalysisError> {
    let need = 2 * k.max(1) + 1;
    if points.len() < need {
        return Err(AnalysisError::TooShort { len: points.len(), need });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    check_uniform(&xs)?;
    Ok((0..points.len() - 2 * k)
        .map(|i| OrientationSample {
            s: points[i].0,
            det: orientation_det(points[i], points[i + k], points[i + 2 * k]),
        })
        .collect())
}

pub fn concavity_profile(curve: &BoundaryCurve, k: usize) -> Result<Vec<OrientationSample>, AnalysisError> {
    concavity_profile_xy(&curve.xy(), k)
}

#[derive(Clone, Copy, Debug)]
struct Run {
    sign: i8,
    first: usize,
    last: usize,
    len: usize,
}

fn sign_name(sign: i8) -> &'static str {
    match sign {
        1 => "positive",
        -1 => "negative",
        _ => "zero",
    }
}

/// Locates the single persistent sign change of an orientation profile.
///
/// Runs of one sign shorter than `k` samples are treated as noise. The
/// mixed region between the last persistent run of the first sign and the
/// first persistent run of the second is centered at `s_c`; the transition
/// band is `[s_c - kδs, s_c + kδs]`, the set of triples that straddle the
/// change, and `s_star` is its upper end.
pub fn locate_inflection(
    profile: &[OrientationSample],
    ds: f64,
    k: usize,
) -> Result<InflectionEstimate, AnalysisError> {
    let k = k.max(1);
    let mut runs: Vec<Run> = Vec::new();
    for (i, o) in profile.iter().enumerate() {
        let sign = if o.det > ZERO_DET {
            1
        } else if o.det < -ZERO_DET {
            -1
        } else {
            continue;
        };
        match runs.last_mut() {
            Some(r) if r.sign == sign => {
                r.last = i;
                r.len += 1;
            }
            _ => runs.push(Run { sign, first: i, last: i, len: 1 }),
        }
    }
    let mut persistent: Vec<Run> = Vec::new();
    for r in runs.into_iter().filter(|r| r.len >= k) {
        match persistent.last_mut() {
            Some(p) if p.sign == r.sign => {
                p.last = r.last;
                p.len += r.len;
            }
            _ => persistent.push(r),
        }
    }
    match persistent.len() {
        0 => Err(AnalysisError::NoSignChange { runs: 0, sign: "zero" }),
        1 => Err(AnalysisError::NoSignChange { runs: 1, sign: sign_name(persistent[0].sign) }),
        2 => {
            let (before, after) = (persistent[0], persistent[1]);
            let s_c = 0.5 * (profile[before.last].s + profile[after.first].s);
            let h = k as f64 * ds;
            Ok(InflectionEstimate { s_star: s_c + h, uncertainty: h, transition_lo: s_c - h, transition_hi: s_c + h })
        }
        n => Err(AnalysisError::MultipleSignChanges {
            count: n - 1,
            locations: persistent.windows(2).map(|w| 0.5 * (profile[w[0].last].s + profile[w[1].first].s)).collect(),
        }),
    }
}

/// The five free mean values of a symmetric behavior along a scan.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub s: Vec<f64>,
    pub a0: Vec<f64>,
    pub a1: Vec<f64>,
    pub c00: Vec<f64>,
    /// `<A_0B_1> = <A_1B_0>`.
    pub c01: Vec<f64>,
    pub c11: Vec<f64>,
}

impl Trajectory {
    pub const NAMES: [&'static str; 5] = ["a0", "a1", "c00", "c01", "c11"];

    pub fn series(&self) -> [(&'static str, &[f64]); 5] {
        [("a0", &self.a0), ("a1", &self.a1), ("c00", &self.c00), ("c01", &self.c01), ("c11", &self.c11)]
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

const SYM_TOL: f64 = 1e-6;

fn distance(a: &Correlators, b: &Correlators) -> f64 {
    a.to_array().iter().zip(b.to_array()).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Relabelings of `c` that keep it symmetric with the canonical CHSH
/// expression maximal, preferring `<A_0B_0> >= <A_1B_1>`.
fn canonical_candidates(c: &Correlators) -> Vec<Correlators> {
    let s = s_max_correlators(c);
    let mut all: Vec<Correlators> = Relabeling::all()
        .map(|r| r.apply_correlators(c))
        .filter(|d| d.is_symmetric(SYM_TOL) && (chsh_linear_correlators(d, 0) - s).abs() <= 1e-9)
        .collect();
    all.dedup_by(|a, b| a.max_abs_diff(b) == 0.0);
    let preferred: Vec<Correlators> = all.iter().copied().filter(|d| d.ab[0][0] >= d.ab[1][1] - 1e-12).collect();
    if preferred.is_empty() {
        all
    } else {
        preferred
    }
}

/// Correlator series of a symmetric scan, relabeled into one continuous
/// branch: every point is mapped to a symmetric representative with the
/// canonical CHSH expression equal to `S` and `<A_0B_0> >= <A_1B_1>`, the
/// first point with `<A_0> >= 0`, later points nearest to their predecessor.
pub fn trajectory(curve: &BoundaryCurve) -> Result<Trajectory, AnalysisError> {
    if curve.config.set != SetKind::Sym {
        return Err(AnalysisError::NotSymmetric(format!("scan over set '{}'", curve.config.set)));
    }
    let mut out = Trajectory::default();
    let mut prev: Option<Correlators> = None;
    for p in &curve.points {
        if !p.argopt.is_symmetric(SYM_TOL) {
            return Err(AnalysisError::NotSymmetric(format!("optimizer at s = {} is not party-symmetric", p.s)));
        }
        let candidates = canonical_candidates(&p.argopt);
        let chosen = match prev {
            None => candidates.iter().copied().find(|d| d.a[0] >= 0.0).unwrap_or(candidates[0]),
            Some(q) => candidates
                .iter()
                .copied()
                .min_by(|x, y| distance(x, &q).total_cmp(&distance(y, &q)))
                .expect("identity relabeling is always a candidate"),
        };
        out.s.push(p.s);
        out.a0.push(chosen.a[0]);
        out.a1.push(chosen.a[1]);
        out.c00.push(chosen.ab[0][0]);
        out.c01.push(chosen.ab[0][1]);
        out.c11.push(chosen.ab[1][1]);
        prev = Some(chosen);
    }
    Ok(out)
}

/// A detected jump in the first derivative of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub series: String,
    pub s: f64,
    /// Right-window slope minus left-window slope.
    pub jump: f64,
    pub threshold: f64,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Slope jumps of `ys` over `xs`.
///
/// At each interior index a line is fitted to the `window` points on each
/// side (sharing the center point); the index fires when the slope
/// difference exceeds `factor` times the median absolute difference over the
/// series. Firing indices less than a window apart form one region, which
/// reports its largest jump.
pub fn slope_discontinuities(name: &str, xs: &[f64], ys: &[f64], window: usize, factor: f64) -> Vec<Kink> {
    let n = xs.len().min(ys.len());
    let w = window.max(2);
    if n < 2 * w + 1 {
        return Vec::new();
    }
    let jumps: Vec<(usize, f64)> = (w..n - w)
        .map(|i| {
            let left = fit_slope(&xs[i - w..=i], &ys[i - w..=i]);
            let right = fit_slope(&xs[i..=i + w], &ys[i..=i + w]);
            (i, right - left)
        })
        .collect();
    let mut mags: Vec<f64> = jumps.iter().map(|j| j.1.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let median = mags[mags.len() / 2];
    let threshold = factor * median.max(f64::EPSILON);

    // Firing indices closer than one window belong to the same feature.
    let mut kinks: Vec<Kink> = Vec::new();
    let mut region: Option<(usize, usize, f64)> = None;
    for &(i, jump) in jumps.iter().filter(|j| j.1.abs() > threshold) {
        region = match region {
            Some((last, peak, best)) if i - last <= w => {
                if jump.abs() > best.abs() {
                    Some((i, i, jump))
                } else {
                    Some((i, peak, best))
                }
            }
            Some((_, peak, best)) => {
                kinks.push(Kink { series: name.to_owned(), s: xs[peak], jump: best, threshold });
                Some((i, i, jump))
            }
            None => Some((i, i, jump)),
        };
    }
    if let Some((_, peak, best)) = region {
        kinks.push(Kink { series: name.to_owned(), s: xs[peak], jump: best, threshold });
    }
    kinks
}

/// Slope jumps of every series of a trajectory.
pub fn trajectory_kinks(t: &Trajectory, window: usize, factor: f64) -> Vec<Kink> {
    t.series().iter().flat_map(|(name, ys)| slope_discontinuities(name, &t.s, ys, window, factor)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{CurvePoint, Mode, ScanConfig};
    use approx::assert_abs_diff_eq;

    fn sampled(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (x, f(x))
            })
            .collect()
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(orientation_det((0.0, 0.0), (1.0, 1.0), (2.0, 2.0)), 0.0);
        assert_eq!(orientation_det((0.0, 0.0), (1.0, 0.0), (1.0, 1.0)), 1.0);
        assert_eq!(orientation_det((1.0, 0.0), (0.0, 0.0), (1.0, 1.0)), -1.0);
        let (a, b, c) = ((0.3, -1.0), (2.0, 0.5), (-0.7, 4.0));
        assert_abs_diff_eq!(orientation_det(a, b, c), -orientation_det(a, c, b), epsilon = 1e-15);
        assert_abs_diff_eq!(orientation_det(a, b, c), -orientation_det(c, b, a), epsilon = 1e-15);
    }

    #[test]
    fn parabolas_have_constant_orientation() {
        let up = concavity_profile_xy(&sampled(|x| x * x, -1.0, 1.0, 201), 10).unwrap();
        assert_eq!(up.len(), 181);
        assert!(up.iter().all(|o| o.det > 0.0));
        let down = concavity_profile_xy(&sampled(|x| -x * x, -1.0, 1.0, 201), 10).unwrap();
        assert!(down.iter().all(|o| o.det < 0.0));
    }

    #[test]
    fn affine_profile_vanishes() {
        let p = concavity_profile_xy(&sampled(|x| 0.3 - 2.0 * x, 0.0, 1.0, 101), 5).unwrap();
        assert!(p.iter().all(|o| o.det.abs() < 1e-12));
        assert!(matches!(locate_inflection(&p, 0.01, 5), Err(AnalysisError::NoSignChange { .. })));
    }

    #[test]
    fn profile_preconditions() {
        assert!(matches!(
            concavity_profile_xy(&sampled(|x| x, 0.0, 1.0, 20), 10),
            Err(AnalysisError::TooShort { len: 20, need: 21 })
        ));
        let mut pts = sampled(|x| x * x, 0.0, 1.0, 50);
        pts[20].0 += 1e-3;
        assert!(matches!(concavity_profile_xy(&pts, 5), Err(AnalysisError::NonUniform { .. })));
    }

    #[test]
    fn cubic_inflection() {
        for (dx, k) in [(1e-2, 10), (1e-3, 100)] {
            let n = (2.0 / dx) as usize + 1;
            let pts = sampled(|x| x * x * x, -1.0, 1.0, n);
            let prof = concavity_profile_xy(&pts, k).unwrap();
            let est = locate_inflection(&prof, dx, k).unwrap();
            assert!(est.s_star.abs() <= k as f64 * dx, "{est:?}");
            assert_abs_diff_eq!(est.transition_hi - est.transition_lo, 2.0 * k as f64 * dx, epsilon = 1e-12);
            assert!(est.transition_lo < est.s_star && est.s_star <= est.transition_hi);
            assert_abs_diff_eq!(est.uncertainty, k as f64 * dx, epsilon = 1e-15);
        }
    }

    #[test]
    fn shifted_inflection() {
        let dx = 1e-3;
        let pts = sampled(|x| (x - 0.37).powi(3) + 0.2 * x, -1.0, 1.0, 2001);
        let est = locate_inflection(&concavity_profile_xy(&pts, 50).unwrap(), dx, 50).unwrap();
        assert!((est.s_star - 0.37).abs() <= 50.0 * dx, "{est:?}");
    }

    #[test]
    fn short_flips_are_noise_but_two_changes_are_not() {
        let mk = |signs: &[(f64, usize)]| {
            let mut out = Vec::new();
            for &(sgn, len) in signs {
                for _ in 0..len {
                    out.push(OrientationSample { s: out.len() as f64, det: sgn });
                }
            }
            out
        };
        let est = locate_inflection(&mk(&[(-1.0, 30), (1.0, 3), (-1.0, 30), (1.0, 40)]), 1.0, 10).unwrap();
        assert_abs_diff_eq!(est.transition_lo, 62.5 - 10.0);
        let err = locate_inflection(&mk(&[(-1.0, 30), (1.0, 30), (-1.0, 30)]), 1.0, 10).unwrap_err();
        assert!(matches!(err, AnalysisError::MultipleSignChanges { count: 2, .. }));
        let err = locate_inflection(&mk(&[(1.0, 30)]), 1.0, 10).unwrap_err();
        assert!(matches!(err, AnalysisError::NoSignChange { runs: 1, sign: "positive" }));
    }

    fn sym_curve(points: Vec<(f64, Correlators)>) -> BoundaryCurve {
        let n = points.len();
        BoundaryCurve {
            config: ScanConfig::new(SetKind::Sym, Mode::Min, points[0].0, points[n - 1].0, n),
            points: points.into_iter().map(|(s, argopt)| CurvePoint { s, i: 0.0, argopt, converged: true }).collect(),
        }
    }

    #[test]
    fn trajectory_undoes_relabelings() {
        let base = |s: f64| Correlators::new([0.1, 0.1], [0.1, 0.1], [[s / 4.0, s / 4.0], [s / 4.0, -s / 4.0]]);
        let orbit: Vec<Relabeling> = Relabeling::all().collect();
        let pts: Vec<(f64, Correlators)> = (0..40)
            .map(|i| {
                let s = 2.9 + 0.02 * i as f64;
                let scrambled = orbit[(i * 37) % orbit.len()].apply_correlators(&base(s));
                // Only symmetric scrambles are admissible scan outputs.
                let c = if scrambled.is_symmetric(1e-12) { scrambled } else { base(s) };
                (s, c)
            })
            .collect();
        let t = trajectory(&sym_curve(pts)).unwrap();
        for i in 0..t.len() {
            let q = t.s[i] / 4.0;
            assert_abs_diff_eq!(t.c00[i], q, epsilon = 1e-12);
            assert_abs_diff_eq!(t.c01[i], q, epsilon = 1e-12);
            assert_abs_diff_eq!(t.c11[i], -q, epsilon = 1e-12);
            assert_abs_diff_eq!(t.a0[i], 0.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn trajectory_rejects_other_sets() {
        let mut c = sym_curve(vec![(3.0, Correlators::unbiased([[0.75, 0.75], [0.75, -0.75]]))]);
        c.config.set = SetKind::Ns;
        assert!(matches!(trajectory(&c), Err(AnalysisError::NotSymmetric(_))));
        let c = sym_curve(vec![(3.0, Correlators::new([0.1, 0.0], [0.0, 0.0], [[0.75, 0.75], [0.75, -0.75]]))]);
        assert!(matches!(trajectory(&c), Err(AnalysisError::NotSymmetric(_))));
    }

    #[test]
    fn kink_detector_finds_a_corner_only() {
        let xs: Vec<f64> = (0..1001).map(|i| i as f64 * 1e-3).collect();
        let noisy = |i: usize| 1e-7 * ((i * 7919 % 101) as f64 / 101.0 - 0.5);
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| 0.3 * x * x + if x > 0.6 { 2.0 * (x - 0.6) } else { 0.0 } + noisy(i))
            .collect();
        let kinks = slope_discontinuities("y", &xs, &ys, 50, 10.0);
        assert_eq!(kinks.len(), 1, "{kinks:?}");
        assert!((kinks[0].s - 0.6).abs() <= 0.005);
        assert!(kinks[0].jump > 1.5);
    }
}
