//! Behaviors of the (2,2,2) Bell scenario and their correlator parametrization.
//!
//! A behavior is the table `p(ab|xy)` of two parties with binary inputs
//! `x, y` and binary outcomes `a, b`. Tables are indexed `[x][y][a][b]` and
//! outcome index `0` stands for the physical value `+1`, index `1` for `-1`.
//!
//! Non-signaling behaviors are in one-to-one correspondence with eight
//! correlators `<A_x>`, `<B_y>`, `<A_x B_y>`, through
//! `p(ab|xy) = (1 + a<A_x> + b<B_y> + ab<A_x B_y>) / 4`.

use serde::{Deserialize, Serialize};

use crate::error::{BehaviorError, Violation};

/// Physical value of each outcome index.
pub const OUTCOME: [f64; 2] = [1.0, -1.0];

/// Tolerance for tables coming from outside the library.
pub const EXTERNAL_TOL: f64 = 1e-9;
/// Tolerance for tables the library builds itself.
pub const INTERNAL_TOL: f64 = 1e-12;

/// Raw probability table indexed `[x][y][a][b]`.
pub type Table = [[[[f64; 2]; 2]; 2]; 2];

/// The eight mean values parametrizing a non-signaling behavior.
///
/// Serialized as `{"marginals_a": [..], "marginals_b": [..], "correlations": [[..],[..]]}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlators {
    #[serde(rename = "marginals_a")]
    pub a: [f64; 2],
    #[serde(rename = "marginals_b")]
    pub b: [f64; 2],
    #[serde(rename = "correlations")]
    pub ab: [[f64; 2]; 2],
}

impl Correlators {
    pub const fn new(a: [f64; 2], b: [f64; 2], ab: [[f64; 2]; 2]) -> Self {
        Self { a, b, ab }
    }

    /// Correlators with vanishing marginals, i.e. a point of the correlation space.
    pub const fn unbiased(ab: [[f64; 2]; 2]) -> Self {
        Self { a: [0.0; 2], b: [0.0; 2], ab }
    }

    /// Flat order `a0, a1, b0, b1, c00, c01, c10, c11` (the CSV column order).
    pub fn to_array(&self) -> [f64; 8] {
        [self.a[0], self.a[1], self.b[0], self.b[1], self.ab[0][0], self.ab[0][1], self.ab[1][0], self.ab[1][1]]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        Self { a: [v[0], v[1]], b: [v[2], v[3]], ab: [[v[4], v[5]], [v[6], v[7]]] }
    }

    /// Largest absolute difference between two correlator tuples.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array().iter().zip(other.to_array()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Membership in the symmetric slice: `<A_x> = <B_x>` and `<A_0B_1> = <A_1B_0>`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.a[0] - self.b[0]).abs() <= tol
            && (self.a[1] - self.b[1]).abs() <= tol
            && (self.ab[0][1] - self.ab[1][0]).abs() <= tol
    }

    pub fn has_zero_marginals(&self, tol: f64) -> bool {
        self.a.iter().chain(&self.b).all(|m| m.abs() <= tol)
    }

    fn check_range(&self) -> Result<(), BehaviorError> {
        for (index, value) in self.to_array().into_iter().enumerate() {
            if !value.is_finite() || value.abs() > 1.0 + INTERNAL_TOL {
                return Err(BehaviorError::CorrelatorOutOfRange { index, value });
            }
        }
        Ok(())
    }
}

/// Evaluates `(1 + a<A_x> + b<B_y> + ab<A_xB_y>)/4` for every entry.
///
/// Pure algebra: the result always satisfies normalization and
/// non-signaling, but positivity is not checked.
pub fn correlators_to_table(c: &Correlators) -> Table {
    let mut t = [[[[0.0; 2]; 2]; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            for (ia, a) in OUTCOME.iter().enumerate() {
                for (ib, b) in OUTCOME.iter().enumerate() {
                    t[x][y][ia][ib] = 0.25 * (1.0 + a * c.a[x] + b * c.b[y] + a * b * c.ab[x][y]);
                }
            }
        }
    }
    t
}

/// A validated non-signaling behavior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Behavior {
    table: Table,
}

impl Behavior {
    /// Wraps a table without checks. Callers must uphold the invariants.
    pub(crate) const fn from_table_unchecked(table: Table) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.table[x][y][a][b]
    }

    /// The 16 entries in `((x*2 + y)*2 + a)*2 + b` order.
    pub fn to_flat(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.table[i >> 3][(i >> 2) & 1][(i >> 1) & 1][i & 1];
        }
        out
    }

    /// Alice's marginal `p(a|x)`, averaged over `y` so that tables inside the
    /// validation tolerance still give a single value.
    pub fn alice_marginal(&self, x: usize, a: usize) -> f64 {
        0.5 * (0..2).map(|y| self.table[x][y][a][0] + self.table[x][y][a][1]).sum::<f64>()
    }

    pub fn bob_marginal(&self, y: usize, b: usize) -> f64 {
        0.5 * (0..2).map(|x| self.table[x][y][0][b] + self.table[x][y][1][b]).sum::<f64>()
    }

    pub fn correlators(&self) -> Correlators {
        behavior_to_correlators(self)
    }

    pub fn functional_point(&self) -> crate::functionals::FunctionalPoint {
        crate::functionals::FunctionalPoint::of(self)
    }
}

/// Builds the behavior of a correlator tuple.
///
/// Fails with a domain error when a component leaves `[-1, 1]` and with a
/// validation error when the induced table has a negative entry.
pub fn correlators_to_behavior(c: &Correlators) -> Result<Behavior, BehaviorError> {
    c.check_range()?;
    validate_table(&correlators_to_table(c), INTERNAL_TOL)
}

/// Exact inverse of [`correlators_to_behavior`].
pub fn behavior_to_correlators(p: &Behavior) -> Correlators {
    let t = &p.table;
    let mut c = Correlators::new([0.0; 2], [0.0; 2], [[0.0; 2]; 2]);
    for x in 0..2 {
        c.a[x] = p.alice_marginal(x, 0) - p.alice_marginal(x, 1);
    }
    for y in 0..2 {
        c.b[y] = p.bob_marginal(y, 0) - p.bob_marginal(y, 1);
    }
    for x in 0..2 {
        for y in 0..2 {
            let q = &t[x][y];
            c.ab[x][y] = (q[0][0] + q[1][1]) - (q[0][1] + q[1][0]);
        }
    }
    c
}

/// Validates 16 raw numbers in `((x*2 + y)*2 + a)*2 + b` order against the
/// external tolerance.
pub fn validate(raw: &[f64]) -> Result<Behavior, BehaviorError> {
    validate_with_tol(raw, EXTERNAL_TOL)
}

pub fn validate_with_tol(raw: &[f64], tol: f64) -> Result<Behavior, BehaviorError> {
    if raw.len() != 16 {
        return Err(BehaviorError::WrongLength(raw.len()));
    }
    let mut t = [[[[0.0; 2]; 2]; 2]; 2];
    for (i, v) in raw.iter().enumerate() {
        t[i >> 3][(i >> 2) & 1][(i >> 1) & 1][i & 1] = *v;
    }
    validate_table(&t, tol)
}

/// Checks normalization, positivity and non-signaling, collecting every
/// violated constraint together with its residual.
pub fn validate_table(t: &Table, tol: f64) -> Result<Behavior, BehaviorError> {
    let mut violations = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let v = t[x][y][a][b];
                    if !v.is_finite() {
                        violations.push(Violation::NonFinite { x, y, a, b });
                    } else if v < -tol {
                        violations.push(Violation::Positivity { x, y, a, b, value: v });
                    }
                }
            }
            let total: f64 = t[x][y].iter().flatten().sum();
            if (total - 1.0).abs() > tol || !total.is_finite() {
                violations.push(Violation::Normalization { x, y, residual: total - 1.0 });
            }
        }
    }
    for x in 0..2 {
        for a in 0..2 {
            let m0 = t[x][0][a][0] + t[x][0][a][1];
            let m1 = t[x][1][a][0] + t[x][1][a][1];
            if (m0 - m1).abs() > tol {
                violations.push(Violation::SignalingAlice { x, a, residual: m0 - m1 });
            }
        }
    }
    for y in 0..2 {
        for b in 0..2 {
            let m0 = t[0][y][0][b] + t[0][y][1][b];
            let m1 = t[1][y][0][b] + t[1][y][1][b];
            if (m0 - m1).abs() > tol {
                violations.push(Violation::SignalingBob { y, b, residual: m0 - m1 });
            }
        }
    }
    if violations.is_empty() {
        Ok(Behavior { table: *t })
    } else {
        Err(BehaviorError::Invalid(violations))
    }
}

/// Convex combination `(1 - lambda) p + lambda q`.
pub fn mix(p: &Behavior, q: &Behavior, lambda: f64) -> Result<Behavior, BehaviorError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(BehaviorError::MixingWeight(lambda));
    }
    let mut t = p.table;
    for (tp, tq) in t.iter_mut().flatten().flatten().flatten().zip(q.table.iter().flatten().flatten().flatten()) {
        *tp = (1.0 - lambda) * *tp + lambda * tq;
    }
    Ok(Behavior { table: t })
}

/// The reference behaviors used throughout the analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Named {
    /// Popescu-Rohrlich box, the algebraic maximum of CHSH.
    Pr,
    /// Shared coin: perfectly correlated uniform bits.
    Sc,
    /// Relabeled shared coin reaching `(S, I) = (2, 1)` on the canonical CHSH.
    ScTilde,
    /// Local deterministic behavior with every mean value equal to one.
    LdAllOnes,
    /// Tsirelson-bound behavior, correlators `±1/√2`.
    Bell,
    /// Uniform table.
    Noise,
    /// Maximizer of the mutual information among local behaviors at `S = 0`.
    P0,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NamedBehavior {
    pub tag: Named,
    pub behavior: Behavior,
}

impl Named {
    pub const ALL: [Named; 7] =
        [Named::Pr, Named::Sc, Named::ScTilde, Named::LdAllOnes, Named::Bell, Named::Noise, Named::P0];

    pub fn correlators(self) -> Correlators {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Named::Pr => Correlators::unbiased([[1.0, 1.0], [1.0, -1.0]]),
            Named::Sc => Correlators::unbiased([[1.0, 1.0], [1.0, 1.0]]),
            Named::ScTilde => Correlators::unbiased([[-1.0, 1.0], [1.0, -1.0]]),
            Named::LdAllOnes => Correlators::new([1.0; 2], [1.0; 2], [[1.0; 2]; 2]),
            Named::Bell => Correlators::unbiased([[h, h], [h, -h]]),
            Named::Noise => Correlators::unbiased([[0.0; 2]; 2]),
            Named::P0 => Correlators::new([-0.5, 0.5], [-0.5, 0.5], [[0.0; 2]; 2]),
        }
    }

    pub fn behavior(self) -> Behavior {
        Behavior::from_table_unchecked(correlators_to_table(&self.correlators()))
    }
}

pub fn named(tag: Named) -> NamedBehavior {
    NamedBehavior { tag, behavior: tag.behavior() }
}

/// A local relabeling: input swaps, input-conditioned output flips, and
/// optionally exchanging the two parties.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Relabeling {
    pub swap_x: bool,
    pub swap_y: bool,
    /// Flip Alice's output when her input is `x`.
    pub flip_a: [bool; 2],
    /// Flip Bob's output when his input is `y`.
    pub flip_b: [bool; 2],
    pub swap_parties: bool,
}

impl Relabeling {
    /// The eight output-flip patterns that carry the canonical CHSH
    /// expression onto each of the eight signed CHSH expressions.
    pub fn chsh_orbit() -> [Relabeling; 8] {
        let mut out = [Relabeling::default(); 8];
        for (k, r) in out.iter_mut().enumerate() {
            r.flip_a = [k & 1 == 1, k & 2 == 2];
            r.flip_b = [false, k & 4 == 4];
        }
        out
    }

    /// All 128 combinations of the generators (with repetitions of the
    /// induced action on tables).
    pub fn all() -> impl Iterator<Item = Relabeling> {
        (0u32..128).map(|k| Relabeling {
            swap_x: k & 1 != 0,
            swap_y: k & 2 != 0,
            flip_a: [k & 4 != 0, k & 8 != 0],
            flip_b: [k & 16 != 0, k & 32 != 0],
            swap_parties: k & 64 != 0,
        })
    }

    pub fn apply_table(&self, t: &Table) -> Table {
        let mut out = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        // new(x, y, a, b) reads old at the relabeled coordinates.
                        let (mut ox, mut oy, mut oa, mut ob) = (x, y, a, b);
                        if self.swap_parties {
                            std::mem::swap(&mut ox, &mut oy);
                            std::mem::swap(&mut oa, &mut ob);
                        }
                        if self.swap_x {
                            ox ^= 1;
                        }
                        if self.swap_y {
                            oy ^= 1;
                        }
                        if self.flip_a[ox] {
                            oa ^= 1;
                        }
                        if self.flip_b[oy] {
                            ob ^= 1;
                        }
                        out[x][y][a][b] = t[ox][oy][oa][ob];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, p: &Behavior) -> Behavior {
        Behavior::from_table_unchecked(self.apply_table(&p.table))
    }

    pub fn apply_correlators(&self, c: &Correlators) -> Correlators {
        behavior_to_correlators(&Behavior::from_table_unchecked(self.apply_table(&correlators_to_table(c))))
    }
}

/// The orbit of `p` under [`Relabeling::chsh_orbit`].
pub fn relabelings(p: &Behavior) -> [Behavior; 8] {
    Relabeling::chsh_orbit().map(|r| r.apply(p))
}

/// The 24 vertices of the non-signaling polytope: 16 local deterministic
/// behaviors followed by the 8 PR boxes.
pub fn ns_vertices() -> Vec<Correlators> {
    let bit = |v: u32| if v == 0 { 1.0 } else { -1.0 };
    let mut out = Vec::with_capacity(24);
    for k in 0..16u32 {
        let a = [bit(k & 1), bit(k >> 1 & 1)];
        let b = [bit(k >> 2 & 1), bit(k >> 3 & 1)];
        let ab = [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]];
        out.push(Correlators::new(a, b, ab));
    }
    for k in 0..8u32 {
        let (alpha, beta, gamma) = (k & 1, k >> 1 & 1, k >> 2 & 1);
        let mut ab = [[0.0; 2]; 2];
        for x in 0..2u32 {
            for y in 0..2u32 {
                ab[x as usize][y as usize] = bit((x * y) ^ (alpha * x) ^ (beta * y) ^ gamma);
            }
        }
        out.push(Correlators::unbiased(ab));
    }
    out
}
