//! The two scalar functionals on behaviors: the relabeling-maximized CHSH
//! value `S` and the input-averaged mutual information `I` (in bits).

use serde::{Deserialize, Serialize};

use crate::behavior::{Behavior, Correlators};
use crate::error::DomainError;

/// Input pairs ordered so that slot `k` (and `k + 4`, negated) pairs with
/// `CHSH_PAIRS[k]`; slot 0 is the canonical
/// `<A0B0> + <A0B1> + <A1B0> - <A1B1>`.
pub const CHSH_PAIRS: [(usize, usize); 4] = [(1, 1), (1, 0), (0, 1), (0, 0)];

/// A point of the `S`-`I` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalPoint {
    pub s: f64,
    pub i: f64,
}

impl FunctionalPoint {
    pub fn of(p: &Behavior) -> Self {
        Self { s: s_max(p), i: mutual_information(p) }
    }
}

/// `sum_{x'y'} <A_x'B_y'> - 2 <A_xB_y>` for every `(x, y)`, indexed `[x][y]`.
pub fn chsh_expressions(ab: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let total = ab[0][0] + ab[0][1] + ab[1][0] + ab[1][1];
    let mut e = [[0.0; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            e[x][y] = total - 2.0 * ab[x][y];
        }
    }
    e
}

/// One of the eight signed CHSH expressions; see [`CHSH_PAIRS`].
pub fn chsh_linear(p: &Behavior, slot: usize) -> f64 {
    chsh_linear_correlators(&p.correlators(), slot)
}

pub fn chsh_linear_correlators(c: &Correlators, slot: usize) -> f64 {
    assert!(slot < 8, "CHSH slot {slot} out of range 0..8");
    let (x, y) = CHSH_PAIRS[slot % 4];
    let e = chsh_expressions(&c.ab)[x][y];
    if slot < 4 {
        e
    } else {
        -e
    }
}

/// Maximum of the absolute CHSH expression over the four input pairs.
pub fn s_max(p: &Behavior) -> f64 {
    s_max_correlators(&p.correlators())
}

pub fn s_max_correlators(c: &Correlators) -> f64 {
    chsh_expressions(&c.ab).iter().flatten().fold(0.0, |m, e| m.max(e.abs()))
}

/// Probabilities below this are exact zeros for the entropy.
pub const ZERO_PROB: f64 = 1e-300;

/// `p log2 p` with `0 log 0 = 0`.
#[inline]
pub fn xlog2x(p: f64) -> f64 {
    if p < ZERO_PROB {
        0.0
    } else {
        p * p.log2()
    }
}

/// Mutual information between the outputs for independent uniform inputs.
pub fn mutual_information(p: &Behavior) -> f64 {
    let mut marginal = 0.0;
    for x in 0..2 {
        for a in 0..2 {
            marginal += xlog2x(p.alice_marginal(x, a));
        }
    }
    for y in 0..2 {
        for b in 0..2 {
            marginal += xlog2x(p.bob_marginal(y, b));
        }
    }
    let joint: f64 = p.table().iter().flatten().flatten().flatten().map(|&q| xlog2x(q)).sum();
    -0.5 * marginal + 0.25 * joint
}

/// `g(x) = [1 + ((1+x)/4) log2((1+x)/4) + ((1-x)/4) log2((1-x)/4)] / 2`.
///
/// Inputs within `1e-12` outside `[-1, 1]` are clamped.
pub fn g(x: f64) -> Result<f64, DomainError> {
    if !(x.abs() <= 1.0 + 1e-12) {
        return Err(DomainError::OutOfRange { what: "g", value: x, lo: -1.0, hi: 1.0 });
    }
    let x = x.clamp(-1.0, 1.0);
    Ok(0.5 * (1.0 + xlog2x((1.0 + x) / 4.0) + xlog2x((1.0 - x) / 4.0)))
}

/// `sum_xy g(<A_xB_y>)`, the mutual information of a behavior with
/// unbiased marginals.
pub fn correlation_space_info(c: &Correlators) -> Result<f64, DomainError> {
    if !c.has_zero_marginals(0.0) {
        return Err(DomainError::Precondition("correlation_space_info requires all four marginals to vanish"));
    }
    c.ab.iter().flatten().map(|&v| g(v)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{correlators_to_behavior, named, Named};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn b(tag: Named) -> Behavior {
        named(tag).behavior
    }

    #[test]
    fn canonical_slot_values() {
        assert_eq!(chsh_linear(&b(Named::Pr), 0), 4.0);
        assert_abs_diff_eq!(chsh_linear(&b(Named::Bell), 0), 2.0 * SQRT_2, epsilon = 1e-14);
        assert_eq!(chsh_linear(&b(Named::Noise), 0), 0.0);
        // Slot 0 is the canonical labeling, slot 4 its negation.
        let c = Correlators::unbiased([[0.1, 0.2], [0.3, 0.4]]);
        assert_abs_diff_eq!(chsh_linear_correlators(&c, 0), 0.1 + 0.2 + 0.3 - 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(chsh_linear_correlators(&c, 4), -(0.1 + 0.2 + 0.3 - 0.4), epsilon = 1e-15);
    }

    #[test]
    fn s_max_reference_values() {
        assert_eq!(s_max(&b(Named::Pr)), 4.0);
        assert_eq!(s_max(&b(Named::LdAllOnes)), 2.0);
        assert_eq!(s_max(&b(Named::Noise)), 0.0);
        assert_eq!(s_max(&b(Named::ScTilde)), 2.0);
    }

    #[test]
    fn s_max_is_max_over_signed_slots() {
        let c = Correlators::new([0.1, -0.3], [0.2, 0.0], [[0.5, -0.2], [0.4, 0.1]]);
        let p = correlators_to_behavior(&c).unwrap();
        let best = (0..8).map(|k| chsh_linear(&p, k)).fold(f64::MIN, f64::max);
        assert_abs_diff_eq!(best, s_max(&p), epsilon = 1e-15);
    }

    #[test]
    fn information_reference_values() {
        assert_abs_diff_eq!(mutual_information(&b(Named::Noise)), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mutual_information(&b(Named::ScTilde)), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mutual_information(&b(Named::Pr)), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mutual_information(&b(Named::LdAllOnes)), 0.0, epsilon = 1e-15);
        // Hand evaluation: H(1/4) = 0.811278 per marginal, every joint entropy 1.5.
        let h14 = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert_abs_diff_eq!(mutual_information(&b(Named::P0)), 2.0 * h14 - 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(mutual_information(&b(Named::P0)), 0.122556, epsilon = 1e-6);
        assert_abs_diff_eq!(mutual_information(&b(Named::Bell)), 0.3991, epsilon = 1e-4);
    }

    #[test]
    fn g_values_and_domain() {
        assert_eq!(g(0.0).unwrap(), 0.0);
        assert_eq!(g(1.0).unwrap(), 0.25);
        assert_eq!(g(-1.0).unwrap(), 0.25);
        assert_eq!(g(1.0 + 5e-13).unwrap(), 0.25);
        // Direct evaluation at 1/sqrt(2).
        let (u, v) = ((1.0 + FRAC_1_SQRT_2) / 4.0, (1.0 - FRAC_1_SQRT_2) / 4.0);
        let direct = 0.5 * (1.0 + u * u.log2() + v * v.log2());
        assert_abs_diff_eq!(g(FRAC_1_SQRT_2).unwrap(), direct, epsilon = 1e-16);
        assert_abs_diff_eq!(direct, 0.0998, epsilon = 1e-4);
        assert!(g(1.0 + 1e-9).is_err());
        assert!(g(f64::NAN).is_err());
        for k in 0..=20 {
            let x = -1.0 + 0.1 * k as f64;
            assert_abs_diff_eq!(g(x).unwrap(), g(-x).unwrap(), epsilon = 1e-16);
        }
    }

    #[test]
    fn correlation_space_reference_values() {
        assert_eq!(correlation_space_info(&Named::Noise.correlators()).unwrap(), 0.0);
        assert_eq!(correlation_space_info(&Named::Sc.correlators()).unwrap(), 1.0);
        let c = Correlators::unbiased([[1.0, 1.0], [1.0, 0.0]]);
        assert_abs_diff_eq!(correlation_space_info(&c).unwrap(), 0.75, epsilon = 1e-15);
        assert!(matches!(correlation_space_info(&Named::P0.correlators()), Err(DomainError::Precondition(_))));
    }
}
