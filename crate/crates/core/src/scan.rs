//! Numerical boundaries `I_min(S)` and `I_max(S)` over the non-signaling
//! set, its symmetric slice, and the correlation space.
//!
//! ## Slice parametrization
//!
//! For a target value `s` the optimization runs on the slice where the
//! canonical CHSH expression equals `s` and every other signed CHSH
//! expression is at most `s`, so that `S = s` exactly. Writing
//! `E_xy = sum <A_x'B_y'> - 2<A_xB_y>`, the slice is `E_11 = s` and
//! `|E_xy| <= s` for the other three pairs. The map `E -> <A_xB_y>` is
//! invertible (`<A_xB_y> = sum(E)/4 - E_xy/2`), so the free `E_xy` are
//! parametrized as `s sin(u_xy)`: the CHSH equality and dominance
//! constraints hold identically, and only the 16 positivity inequalities
//! (plus the optional arcsin constraint) remain. These are handled with a
//! logarithmic barrier whose width shrinks geometrically, so every iterate
//! is a valid behavior.
//!
//! Starting points are pulled into the slice along the segment towards the
//! slice center `<A_xB_y> = ±s/4` (zero marginals), which is strictly
//! feasible for `s < 4` and keeps `E_11 = s`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::{correlators_to_table, validate_table, Behavior, Correlators, Named, OUTCOME};
use crate::curves::TSIRELSON;
use crate::error::ScanError;
use crate::functionals::{mutual_information, s_max};
use crate::solver::{minimize_sequence, SequenceOptions};

/// Probabilities are floored here inside the entropy gradient.
pub const GRADIENT_FLOOR: f64 = 1e-12;
/// Relative step from the repaired boundary point towards the slice center
/// used for starting points.
pub const INTERIOR_SHRINK: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetKind {
    /// Full non-signaling polytope, 8 correlators.
    Ns,
    /// Behaviors invariant under exchanging the parties, 5 correlators.
    Sym,
    /// Correlation space: unbiased marginals, 4 correlators.
    C,
}

impl SetKind {
    pub fn name(self) -> &'static str {
        match self {
            SetKind::Ns => "ns",
            SetKind::Sym => "sym",
            SetKind::C => "c",
        }
    }

    /// Number of free parameters on a CHSH slice.
    pub fn slice_dim(self) -> usize {
        match self {
            SetKind::Ns => 7,
            SetKind::Sym => 4,
            SetKind::C => 3,
        }
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SetKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ns" => Ok(SetKind::Ns),
            "sym" => Ok(SetKind::Sym),
            "c" => Ok(SetKind::C),
            other => Err(format!("unknown set '{other}' (expected ns, sym or c)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Min,
    Max,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Min => "min",
            Mode::Max => "max",
        }
    }

    /// Factor turning the mode into a minimization.
    fn sign(self) -> f64 {
        match self {
            Mode::Min => 1.0,
            Mode::Max => -1.0,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "min" => Ok(Mode::Min),
            "max" => Ok(Mode::Max),
            other => Err(format!("unknown mode '{other}' (expected min or max)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub set: SetKind,
    pub mode: Mode,
    pub s_lo: f64,
    pub s_hi: f64,
    pub grid_points: usize,
    pub restarts: usize,
    /// Inner gradient tolerance of the solver.
    pub tol: f64,
    pub seed: u64,
    /// Additionally impose the four arcsin inequalities on the correlations.
    #[serde(default)]
    pub qtilde: bool,
}

impl ScanConfig {
    pub fn new(set: SetKind, mode: Mode, s_lo: f64, s_hi: f64, grid_points: usize) -> Self {
        Self { set, mode, s_lo, s_hi, grid_points, restarts: 50, tol: 1e-8, seed: 0, qtilde: false }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_qtilde(mut self, qtilde: bool) -> Self {
        self.qtilde = qtilde;
        self
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if !(self.s_lo < self.s_hi) {
            return Err(ScanError::Config(format!("s_lo = {} must be below s_hi = {}", self.s_lo, self.s_hi)));
        }
        if self.grid_points < 2 {
            return Err(ScanError::Config(format!("grid_points = {} (need at least 2)", self.grid_points)));
        }
        if self.restarts == 0 {
            return Err(ScanError::Config("restarts must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ScanError::Config(format!("tol = {} must be positive", self.tol)));
        }
        let (lo, hi) = feasible_range(self.qtilde);
        for s in [self.s_lo, self.s_hi] {
            if !(lo..=hi).contains(&s) {
                return Err(ScanError::Infeasible { set: self.set.name(), s, lo, hi });
            }
        }
        Ok(())
    }

    /// Equispaced grid with exact endpoints.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        (0..n)
            .map(
                |k| {
                    if k + 1 == n {
                        self.s_hi
                    } else {
                        self.s_lo + (self.s_hi - self.s_lo) * k as f64 / (n - 1) as f64
                    }
                },
            )
            .collect()
    }

    pub fn solver_options(&self) -> SequenceOptions {
        SequenceOptions { grad_tol: self.tol, ..SequenceOptions::barrier() }
    }
}

fn feasible_range(qtilde: bool) -> (f64, f64) {
    if qtilde {
        (0.0, TSIRELSON)
    } else {
        (0.0, 4.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub s: f64,
    pub i: f64,
    pub argopt: Correlators,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub points: Vec<CurvePoint>,
    pub config: ScanConfig,
}

impl BoundaryCurve {
    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.s, p.i)).collect()
    }
}

/// Result of optimizing on one CHSH slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceOptimum {
    pub i: f64,
    pub argopt: Correlators,
    pub behavior: Behavior,
    pub converged: bool,
}

/// The optimization problem on the slice `S = s` of one set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceProblem {
    pub set: SetKind,
    pub mode: Mode,
    pub s: f64,
    pub qtilde: bool,
}

type Jacobian = [[f64; 8]; 7];

impl SliceProblem {
    pub fn new(set: SetKind, mode: Mode, s: f64) -> Self {
        Self { set, mode, s, qtilde: false }
    }

    pub fn with_qtilde(mut self, qtilde: bool) -> Self {
        self.qtilde = qtilde;
        self
    }

    pub fn dim(&self) -> usize {
        self.set.slice_dim()
    }

    fn check(&self) -> Result<(), ScanError> {
        let (lo, hi) = feasible_range(self.qtilde);
        if !(lo..=hi).contains(&self.s) {
            return Err(ScanError::Infeasible { set: self.set.name(), s: self.s, lo, hi });
        }
        Ok(())
    }

    /// Correlators `[a0, a1, b0, b1, c00, c01, c10, c11]` of parameters `z`
    /// and the Jacobian `d v_j / d z_k`.
    pub fn expand(&self, z: &[f64]) -> ([f64; 8], Jacobian) {
        let s = self.s;
        let mut v = [0.0; 8];
        let mut jac = [[0.0; 8]; 7];
        // Index into z of the angle driving each free E_xy (00, 01, 10), and
        // where the marginals live.
        let (angles, marg): ([usize; 3], usize) = match self.set {
            SetKind::Ns => {
                v[..4].copy_from_slice(&z[..4]);
                for k in 0..4 {
                    jac[k][k] = 1.0;
                }
                ([4, 5, 6], 4)
            }
            SetKind::Sym => {
                v[0] = z[0];
                v[2] = z[0];
                v[1] = z[1];
                v[3] = z[1];
                jac[0][0] = 1.0;
                jac[0][2] = 1.0;
                jac[1][1] = 1.0;
                jac[1][3] = 1.0;
                ([2, 3, 3], 2)
            }
            SetKind::C => ([0, 1, 2], 0),
        };
        let _ = marg;
        let e = [s * z[angles[0]].sin(), s * z[angles[1]].sin(), s * z[angles[2]].sin(), s];
        let de = [s * z[angles[0]].cos(), s * z[angles[1]].cos(), s * z[angles[2]].cos()];
        let total: f64 = e.iter().sum();
        for j in 0..4 {
            v[4 + j] = 0.25 * total - 0.5 * e[j];
        }
        for (slot, &k) in angles.iter().enumerate() {
            for j in 0..4 {
                let dc = if j == slot { -0.25 } else { 0.25 };
                jac[k][4 + j] += dc * de[slot];
            }
        }
        (v, jac)
    }

    pub fn correlators(&self, z: &[f64]) -> Correlators {
        Correlators::from_array(self.expand(z).0)
    }

    /// Parameters of a point on this slice (inverse of [`Self::expand`]).
    pub fn params_of(&self, c: &Correlators) -> Vec<f64> {
        let v = c.to_array();
        let total = v[4] + v[5] + v[6] + v[7];
        let angle = |j: usize| {
            if self.s > 0.0 {
                ((total - 2.0 * v[4 + j]) / self.s).clamp(-1.0, 1.0).asin()
            } else {
                0.0
            }
        };
        match self.set {
            SetKind::Ns => vec![v[0], v[1], v[2], v[3], angle(0), angle(1), angle(2)],
            SetKind::Sym => vec![0.5 * (v[0] + v[2]), 0.5 * (v[1] + v[3]), angle(0), 0.5 * (angle(1) + angle(2))],
            SetKind::C => vec![angle(0), angle(1), angle(2)],
        }
    }

    /// Strictly feasible point of the slice for `s < 4`.
    pub fn center(&self) -> [f64; 8] {
        let q = 0.25 * self.s;
        [0.0, 0.0, 0.0, 0.0, q, q, q, -q]
    }

    /// `I` (bits) of a correlator vector, the objective of the scans.
    ///
    /// Negative probabilities count as zero in the value; the gradient floors
    /// probabilities at [`GRADIENT_FLOOR`].
    pub fn information(v: &[f64; 8], grad: Option<&mut [f64; 8]>) -> f64 {
        let h = |p: f64| if p > 0.0 { p * p.log2() } else { 0.0 };
        let dh = |p: f64| p.max(GRADIENT_FLOOR).log2() + 1.0 / LN_2;
        let mut value = 0.0;
        let mut gr = [0.0; 8];
        for m in 0..4 {
            for o in OUTCOME {
                let p = 0.5 * (1.0 + o * v[m]);
                value -= 0.5 * h(p);
                gr[m] -= 0.25 * o * dh(p);
            }
        }
        for x in 0..2 {
            for y in 0..2 {
                let c = 4 + 2 * x + y;
                for a in OUTCOME {
                    for b in OUTCOME {
                        let p = 0.25 * (1.0 + a * v[x] + b * v[2 + y] + a * b * v[c]);
                        value += 0.25 * h(p);
                        let d = dh(p) / 16.0;
                        gr[x] += a * d;
                        gr[2 + y] += b * d;
                        gr[c] += a * b * d;
                    }
                }
            }
        }
        if let Some(g) = grad {
            *g = gr;
        }
        value
    }

    /// Barrier terms of width `mu`, accumulating their gradient into `grad`;
    /// `+inf` outside the interior.
    fn barrier_terms(&self, v: &[f64; 8], mu: f64, grad: &mut [f64; 8]) -> f64 {
        let mut total = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let c = 4 + 2 * x + y;
                for a in OUTCOME {
                    for b in OUTCOME {
                        let p = 0.25 * (1.0 + a * v[x] + b * v[2 + y] + a * b * v[c]);
                        if !(p > 0.0) {
                            return f64::INFINITY;
                        }
                        total -= mu * p.ln();
                        let d = -0.25 * mu / p;
                        grad[x] += a * d;
                        grad[2 + y] += b * d;
                        grad[c] += a * b * d;
                    }
                }
            }
        }
        if self.qtilde {
            let cs = [v[4], v[5], v[6], v[7]];
            let asins = cs.map(f64::asin);
            let dasin = cs.map(|c| 1.0 / (1.0 - c * c).sqrt());
            let sum: f64 = asins.iter().sum();
            for k in 0..4 {
                let h = sum - 2.0 * asins[k];
                let (up, down) = (PI - h, PI + h);
                if !(up > 0.0 && down > 0.0) {
                    return f64::INFINITY;
                }
                total -= mu * (up.ln() + down.ln());
                let d = mu * (1.0 / up - 1.0 / down);
                for j in 0..4 {
                    let dh = if j == k { -1.0 } else { 1.0 };
                    grad[4 + j] += d * dh * dasin[j];
                }
            }
        }
        total
    }

    /// Mode-signed objective and its gradient in parameter space; `+inf`
    /// outside the interior of the slice.
    pub fn objective(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        self.barrier(z, 0.0, grad)
    }

    /// Objective plus a logarithmic barrier of width `mu` on every inequality.
    pub fn barrier(&self, z: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        let (v, jac) = self.expand(z);
        let sign = self.mode.sign();
        let mut gv = [0.0; 8];
        let walls = self.barrier_terms(&v, mu, &mut [0.0; 8]);
        if !walls.is_finite() {
            return f64::INFINITY;
        }
        let mut value = sign * Self::information(&v, Some(&mut gv));
        for g in gv.iter_mut() {
            *g *= sign;
        }
        value += self.barrier_terms(&v, mu, &mut gv);
        for (k, gk) in grad.iter_mut().enumerate() {
            *gk = jac[k].iter().zip(&gv).map(|(j, g)| j * g).sum();
        }
        value
    }

    fn positivity(v: &[f64; 8]) -> [f64; 16] {
        let mut out = [0.0; 16];
        let mut k = 0;
        for x in 0..2 {
            for y in 0..2 {
                for a in OUTCOME {
                    for b in OUTCOME {
                        out[k] = 0.25 * (1.0 + a * v[x] + b * v[2 + y] + a * b * v[4 + 2 * x + y]);
                        k += 1;
                    }
                }
            }
        }
        out
    }

    fn qtilde_ok(v: &[f64; 8]) -> bool {
        let c = Correlators::from_array(*v);
        crate::membership::qtilde_correlators(&c).slack >= 0.0
    }

    /// Pulls `v` back into the feasible slice along the segment to the center.
    pub fn repair(&self, v: &[f64; 8]) -> [f64; 8] {
        let center = self.center();
        let p_center = Self::positivity(&center);
        let p_v = Self::positivity(v);
        let mut t: f64 = 1.0;
        for (pc, pv) in p_center.iter().zip(&p_v) {
            if *pv < 0.0 {
                t = t.min(pc / (pc - pv));
            }
        }
        let at = |t: f64| {
            let mut out = [0.0; 8];
            for j in 0..8 {
                out[j] = center[j] + t * (v[j] - center[j]);
            }
            // The CHSH slice equality must survive rounding exactly enough.
            out
        };
        let mut out = at(t);
        if self.qtilde && !Self::qtilde_ok(&out) {
            let (mut lo, mut hi) = (0.0, t);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if Self::qtilde_ok(&at(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out = at(lo);
        }
        out
    }

    /// Moves `v` strictly inside the slice: repair, then shrink towards the
    /// center by [`INTERIOR_SHRINK`].
    pub fn interior(&self, v: &[f64; 8]) -> [f64; 8] {
        let center = self.center();
        let r = self.repair(v);
        std::array::from_fn(|j| center[j] + (1.0 - INTERIOR_SHRINK) * (r[j] - center[j]))
    }

    /// A random strictly feasible starting point in parameter space.
    pub fn random_start<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut z: Vec<f64> = Vec::with_capacity(self.dim());
        let marginals = match self.set {
            SetKind::Ns => 4,
            SetKind::Sym => 2,
            SetKind::C => 0,
        };
        for _ in 0..marginals {
            z.push(rng.random_range(-1.0..=1.0));
        }
        while z.len() < self.dim() {
            z.push(rng.random_range(-FRAC_PI_2..=FRAC_PI_2));
        }
        let v = self.interior(&self.expand(&z).0);
        self.params_of(&Correlators::from_array(v))
    }

    /// Runs the barrier solver from `start`, which is first mapped onto this
    /// slice through the parametrization and then moved into the interior.
    pub fn solve_from(&self, start: &Correlators, opts: &SequenceOptions) -> SliceOptimum {
        let on_slice = self.expand(&self.params_of(start)).0;
        let z0 = self.params_of(&Correlators::from_array(self.interior(&on_slice)));
        let m = minimize_sequence(|z, mu, g| self.barrier(z, mu, g), &z0, opts);
        let argopt = self.correlators(&m.x);
        let behavior =
            validate_table(&correlators_to_table(&argopt), 1e-12).expect("barrier iterates stay in the polytope");
        SliceOptimum { i: mutual_information(&behavior), argopt, behavior, converged: m.converged }
    }

    fn better(&self, candidate: &SliceOptimum, incumbent: &SliceOptimum) -> bool {
        self.mode.sign() * candidate.i < self.mode.sign() * incumbent.i
    }

    /// Best of `restarts` random feasible starts plus any extra warm starts.
    pub fn optimize(
        &self,
        restarts: usize,
        rng: &mut ChaCha8Rng,
        opts: &SequenceOptions,
        warm: &[Correlators],
    ) -> Result<SliceOptimum, ScanError> {
        self.check()?;
        if self.s >= 4.0 - 1e-12 {
            // The slice is the single PR box.
            let behavior = Named::Pr.behavior();
            return Ok(SliceOptimum { i: 1.0, argopt: Named::Pr.correlators(), behavior, converged: true });
        }
        if self.qtilde && self.s >= TSIRELSON - 1e-12 {
            // The arcsin constraints leave only the center of the slice.
            let argopt = Correlators::from_array(self.center());
            let behavior = validate_table(&correlators_to_table(&argopt), 1e-12).expect("center is feasible");
            return Ok(SliceOptimum { i: mutual_information(&behavior), argopt, behavior, converged: true });
        }
        let mut best: Option<SliceOptimum> = None;
        let random: Vec<Correlators> = (0..restarts).map(|_| self.correlators(&self.random_start(rng))).collect();
        for start in warm.iter().chain(&random) {
            let cand = self.solve_from(start, opts);
            match &best {
                Some(b) if !self.better(&cand, b) => {}
                _ => best = Some(cand),
            }
        }
        Ok(best.expect("at least one start"))
    }
}

/// Stream-separated RNG for work item `index` of a run seeded by `seed`.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Optimizes `I` on the slice `S = s` from `restarts` random starts.
pub fn optimize_at_s(set: SetKind, mode: Mode, s: f64, restarts: usize, seed: u64) -> Result<SliceOptimum, ScanError> {
    SliceProblem::new(set, mode, s).optimize(restarts.max(1), &mut rng_for(seed, 0), &SequenceOptions::barrier(), &[])
}

/// Scans the grid of `config`.
///
/// Every grid point first gets independent random restarts from its own
/// RNG stream, then two sequential sweeps re-solve each point from its
/// neighbors' optima, keeping whichever is better. The result depends only
/// on the configuration, not on thread scheduling.
pub fn scan(config: &ScanConfig) -> Result<BoundaryCurve, ScanError> {
    config.validate()?;
    let grid = config.grid();
    let opts = config.solver_options();
    let problem = |s: f64| SliceProblem::new(config.set, config.mode, s).with_qtilde(config.qtilde);

    let mut results: Vec<SliceOptimum> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &s)| problem(s).optimize(config.restarts, &mut rng_for(config.seed, k as u64), &opts, &[]))
        .collect::<Result<_, _>>()?;

    let mut rng = rng_for(config.seed, u64::MAX);
    let n = grid.len();
    let order: Vec<(usize, usize)> = (1..n).map(|k| (k, k - 1)).chain((0..n - 1).rev().map(|k| (k, k + 1))).collect();
    for (k, from) in order {
        let pb = problem(grid[k]);
        let cand = pb.optimize(0, &mut rng, &opts, &[results[from].argopt])?;
        if pb.better(&cand, &results[k]) {
            results[k] = cand;
        }
    }

    let points = grid
        .iter()
        .zip(results)
        .map(|(&s, r)| CurvePoint { s, i: r.i, argopt: r.argopt, converged: r.converged })
        .collect();
    Ok(BoundaryCurve { points, config: config.clone() })
}

/// Outcome of the vertical-segment check at one value of `S`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FillReport {
    pub s: f64,
    pub i_min: f64,
    pub i_max: f64,
    /// Largest `|ΔI|` between consecutive mixtures.
    pub max_gap: f64,
    pub gap_bound: f64,
    /// Largest `|S - s|` along the segment.
    pub max_s_deviation: f64,
    /// Every mixture lies inside `[i_min, i_max]` (within 1e-9).
    pub within_bounds: bool,
}

impl FillReport {
    pub fn filled(&self) -> bool {
        self.max_gap <= self.gap_bound && self.max_s_deviation <= 1e-9 && self.within_bounds
    }
}

/// Walks the segment from `argmin` to `argmax` in `n_samples` steps.
///
/// The gap bound is ten times the average spacing `(i_max - i_min)/(n-1)`:
/// the entropy is continuous but has logarithmic slopes at the polytope
/// faces, so single steps may exceed the average several times over.
pub fn vertical_fill(argmin: &Correlators, argmax: &Correlators, s: f64, n_samples: usize) -> FillReport {
    let n = n_samples.max(2);
    let lo = argmin.to_array();
    let hi = argmax.to_array();
    let mut values = Vec::with_capacity(n);
    let mut max_dev: f64 = 0.0;
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        let mut v = [0.0; 8];
        for j in 0..8 {
            v[j] = (1.0 - t) * lo[j] + t * hi[j];
        }
        let p = Behavior::from_table_unchecked(correlators_to_table(&Correlators::from_array(v)));
        max_dev = max_dev.max((s_max(&p) - s).abs());
        values.push(mutual_information(&p));
    }
    let (i_min, i_max) = (values[0], values[n - 1]);
    let max_gap = values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let within_bounds = values.iter().all(|&v| v >= i_min - 1e-9 && v <= i_max + 1e-9);
    FillReport {
        s,
        i_min,
        i_max,
        max_gap,
        gap_bound: 10.0 * (i_max - i_min).abs() / (n - 1) as f64 + 1e-9,
        max_s_deviation: max_dev,
        within_bounds,
    }
}

/// Optimizes both boundaries at `s` and checks that the segment between the
/// two optimizers fills the vertical line `S = s`.
pub fn vertical_fill_check(
    set: SetKind,
    s: f64,
    n_samples: usize,
    restarts: usize,
    seed: u64,
) -> Result<FillReport, ScanError> {
    let lo = optimize_at_s(set, Mode::Min, s, restarts, seed)?;
    let hi = optimize_at_s(set, Mode::Max, s, restarts, seed)?;
    Ok(vertical_fill(&lo.argopt, &hi.argopt, s, n_samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::correlators_to_behavior;
    use crate::curves::{bell_pr_min, ns_max};
    use approx::assert_abs_diff_eq;

    #[test]
    fn expansion_keeps_the_chsh_slice() {
        let mut rng = rng_for(3, 0);
        for set in [SetKind::Ns, SetKind::Sym, SetKind::C] {
            for _ in 0..200 {
                let s = rng.random_range(0.0..4.0);
                let pb = SliceProblem::new(set, Mode::Min, s);
                let z: Vec<f64> = (0..pb.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
                let c = pb.correlators(&z);
                assert_abs_diff_eq!(crate::functionals::chsh_linear_correlators(&c, 0), s, epsilon = 1e-12);
                assert!(crate::functionals::s_max_correlators(&c) <= s + 1e-12);
                if set == SetKind::Sym {
                    assert!(c.is_symmetric(0.0));
                }
                if set == SetKind::C {
                    assert!(c.has_zero_marginals(0.0));
                }
            }
        }
    }

    #[test]
    fn params_round_trip() {
        let mut rng = rng_for(5, 0);
        for set in [SetKind::Ns, SetKind::Sym, SetKind::C] {
            let pb = SliceProblem::new(set, Mode::Max, 2.7);
            for _ in 0..50 {
                let z = pb.random_start(&mut rng);
                let c = pb.correlators(&z);
                let c2 = pb.correlators(&pb.params_of(&c));
                assert!(c.max_abs_diff(&c2) < 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = rng_for(11, 0);
        for set in [SetKind::Ns, SetKind::Sym, SetKind::C] {
            let pb = SliceProblem::new(set, Mode::Min, 2.9);
            let z: Vec<f64> = (0..pb.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, jac) = pb.expand(&z);
            for k in 0..pb.dim() {
                let (mut zp, mut zm) = (z.clone(), z.clone());
                zp[k] += 1e-6;
                zm[k] -= 1e-6;
                let (vp, vm) = (pb.expand(&zp).0, pb.expand(&zm).0);
                for j in 0..8 {
                    assert_abs_diff_eq!((vp[j] - vm[j]) / 2e-6, jac[k][j], epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn repair_lands_in_the_polytope() {
        let mut rng = rng_for(13, 0);
        for set in [SetKind::Ns, SetKind::Sym, SetKind::C] {
            for _ in 0..200 {
                let s = rng.random_range(0.0..3.99);
                let pb = SliceProblem::new(set, Mode::Max, s);
                let z: Vec<f64> = (0..pb.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let v = pb.repair(&pb.expand(&z).0);
                let c = Correlators::from_array(v);
                let p = correlators_to_behavior(&c).expect("feasible");
                assert_abs_diff_eq!(s_max(&p), s, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn infeasible_slices_are_errors() {
        assert!(matches!(optimize_at_s(SetKind::Ns, Mode::Max, 4.2, 1, 0), Err(ScanError::Infeasible { .. })));
        let q = SliceProblem::new(SetKind::C, Mode::Max, 2.9).with_qtilde(true);
        assert!(q.optimize(1, &mut rng_for(0, 0), &SequenceOptions::barrier(), &[]).is_err());
        assert!(ScanConfig::new(SetKind::Ns, Mode::Max, 2.0, 1.0, 10).validate().is_err());
        assert!(ScanConfig::new(SetKind::Ns, Mode::Max, 0.0, 1.0, 1).validate().is_err());
    }

    #[test]
    fn max_at_the_local_facet_is_one() {
        let r = optimize_at_s(SetKind::Ns, Mode::Max, 2.0, 20, 1).unwrap();
        assert_abs_diff_eq!(r.i, 1.0, epsilon = 1e-5);
        // The optimizer is a shared coin up to relabeling: unbiased, perfectly (anti)correlated.
        assert!(r.argopt.has_zero_marginals(1e-3));
        assert!(r.argopt.ab.iter().flatten().all(|c| c.abs() > 1.0 - 1e-3));
    }

    #[test]
    fn min_at_the_local_facet_is_zero() {
        let r = optimize_at_s(SetKind::Ns, Mode::Min, 2.0, 10, 2).unwrap();
        assert_abs_diff_eq!(r.i, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn min_on_the_post_quantum_region_follows_bell_to_pr() {
        for s in [TSIRELSON, 3.0, 3.5, 3.9] {
            let r = optimize_at_s(SetKind::Ns, Mode::Min, s, 20, 3).unwrap();
            assert_abs_diff_eq!(r.i, bell_pr_min(s).unwrap(), epsilon = 2e-3);
        }
    }

    #[test]
    fn max_matches_the_analytic_upper_boundary() {
        for s in [0.0, 0.7, 1.5, 2.3, 3.0, 3.6, 3.95] {
            let r = optimize_at_s(SetKind::Ns, Mode::Max, s, 30, 4).unwrap();
            assert_abs_diff_eq!(r.i, ns_max(s).unwrap(), epsilon = 2e-3);
        }
    }

    #[test]
    fn pr_slice() {
        let r = optimize_at_s(SetKind::Sym, Mode::Min, 4.0, 1, 0).unwrap();
        assert_eq!(r.i, 1.0);
        assert_eq!(r.argopt, Named::Pr.correlators());
    }

    #[test]
    fn qtilde_constrained_max_in_correlation_space() {
        for s in [2.2, 2.5, 2.75] {
            let pb = SliceProblem::new(SetKind::C, Mode::Max, s).with_qtilde(true);
            let r = pb.optimize(20, &mut rng_for(7, 0), &SequenceOptions::barrier(), &[]).unwrap();
            assert!(crate::membership::qtilde_test(&r.behavior).pass);
            assert_abs_diff_eq!(r.i, crate::curves::qc_max(s).unwrap(), epsilon = 2e-3);
        }
    }

    #[test]
    fn information_gradient_matches_finite_differences() {
        let mut rng = rng_for(17, 0);
        for set in [SetKind::Ns, SetKind::Sym, SetKind::C] {
            for mode in [Mode::Min, Mode::Max] {
                for _ in 0..20 {
                    let s = rng.random_range(0.1..3.9);
                    let pb = SliceProblem::new(set, mode, s);
                    // Shrink towards the center so every probability is positive.
                    let v = pb.expand(&pb.random_start(&mut rng)).0;
                    let c = pb.center();
                    let inner: [f64; 8] = std::array::from_fn(|j| c[j] + 0.9 * (v[j] - c[j]));
                    let z = pb.params_of(&Correlators::from_array(inner));
                    let mut g = vec![0.0; pb.dim()];
                    pb.objective(&z, &mut g);
                    for k in 0..pb.dim() {
                        let (mut zp, mut zm) = (z.clone(), z.clone());
                        zp[k] += 1e-6;
                        zm[k] -= 1e-6;
                        let mut scratch = vec![0.0; pb.dim()];
                        let fd = (pb.objective(&zp, &mut scratch) - pb.objective(&zm, &mut scratch)) / 2e-6;
                        let scale = g[k].abs().max(1e-3);
                        assert!((fd - g[k]).abs() / scale < 1e-5, "{set} {mode} k={k}: {fd} vs {}", g[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn scan_is_deterministic_and_well_formed() {
        let cfg = ScanConfig::new(SetKind::Sym, Mode::Min, 2.5, 3.1, 7).with_restarts(4).with_seed(9);
        let a = scan(&cfg).unwrap();
        let b = scan(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.points.windows(2).all(|w| w[1].s > w[0].s));
        for p in &a.points {
            let beh = correlators_to_behavior(&p.argopt).unwrap();
            assert!((s_max(&beh) - p.s).abs() <= 1e-6);
            assert!(p.argopt.is_symmetric(1e-8));
        }
    }

    #[test]
    fn fill_at_three_and_at_the_local_facet() {
        let r = vertical_fill_check(SetKind::Ns, 3.0, 200, 10, 5).unwrap();
        assert!(r.filled(), "{r:?}");
        assert!(r.i_max - r.i_min > 0.2);

        let r = vertical_fill_check(SetKind::Ns, 2.0, 200, 10, 6).unwrap();
        assert!(r.filled(), "{r:?}");
        assert_abs_diff_eq!(r.i_min, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.i_max, 1.0, epsilon = 1e-5);

        let r = vertical_fill_check(SetKind::Ns, 4.0, 10, 1, 0).unwrap();
        assert!(r.filled());
        assert_eq!((r.i_min, r.i_max, r.max_gap), (1.0, 1.0, 0.0));
    }

    #[test]
    fn segment_from_deterministic_to_shared_coin_fills_the_local_facet() {
        // Both behaviors sit on the canonical facet: LD all-ones and the
        // relabeled shared coin.
        let ld = Named::LdAllOnes.correlators();
        let sc = Named::ScTilde.correlators();
        let sc_canonical = Correlators::unbiased([[1.0, 1.0], [1.0, -1.0]].map(|r| r.map(|v: f64| v)));
        let _ = sc;
        // [[1,1],[1,-1]] is PR; use the shared coin with CHSH slot 0 equal to 2 instead.
        let sc2 = Correlators::unbiased([[1.0, 1.0], [1.0, 1.0]]);
        let _ = sc_canonical;
        let r = vertical_fill(&ld, &sc2, 2.0, 400);
        assert!(r.filled(), "{r:?}");
        assert_abs_diff_eq!(r.i_min, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.i_max, 1.0, epsilon = 1e-15);
    }
}
