//! Closed-form boundary curves of the `S`-`I` plane.
//!
//! Every curve is evaluated by building the explicit behavior that realizes
//! it and running [`mutual_information`] on it. The `g`-function closed forms
//! are kept in the tests as independent oracles.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::behavior::{correlators_to_table, mix, Behavior, Correlators, Named};
use crate::error::DomainError;
use crate::functionals::mutual_information;

/// Tsirelson bound `2√2`.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveId {
    /// Upper boundary of the local set, `S ∈ [0, 2]`.
    LocalMax,
    /// Maximum over the correlation space for `S ∈ [2, 4]`.
    CNonlocalMax,
    /// Mixtures of the all-ones deterministic behavior with the PR box.
    LdPrMax,
    /// Upper boundary of the non-signaling set on `[0, 4]`.
    NsMax,
    /// Upper boundary of quantum behaviors in the correlation space.
    QcMax,
    /// Lower boundary on the post-quantum region: Bell to PR mixtures.
    BellPrMin,
    /// Lower boundary of the local set (identically zero).
    LocalMin,
}

impl CurveId {
    pub const ALL: [CurveId; 7] = [
        CurveId::LocalMax,
        CurveId::CNonlocalMax,
        CurveId::LdPrMax,
        CurveId::NsMax,
        CurveId::QcMax,
        CurveId::BellPrMin,
        CurveId::LocalMin,
    ];

    pub fn domain(self) -> (f64, f64) {
        match self {
            CurveId::LocalMax | CurveId::LocalMin => (0.0, 2.0),
            CurveId::CNonlocalMax | CurveId::LdPrMax => (2.0, 4.0),
            CurveId::NsMax => (0.0, 4.0),
            CurveId::QcMax => (2.0, TSIRELSON),
            CurveId::BellPrMin => (TSIRELSON, 4.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CurveId::LocalMax => "local_max",
            CurveId::CNonlocalMax => "c_nonlocal_max",
            CurveId::LdPrMax => "ld_pr_max",
            CurveId::NsMax => "ns_max",
            CurveId::QcMax => "qc_max",
            CurveId::BellPrMin => "bell_pr_min",
            CurveId::LocalMin => "local_min",
        }
    }

    pub fn eval(self, s: f64) -> Result<f64, DomainError> {
        match self {
            CurveId::LocalMax => local_max(s),
            CurveId::CNonlocalMax => c_nonlocal_max(s),
            CurveId::LdPrMax => ld_pr_max(s),
            CurveId::NsMax => ns_max(s),
            CurveId::QcMax => qc_max(s),
            CurveId::BellPrMin => bell_pr_min(s),
            CurveId::LocalMin => {
                check(self, s)?;
                Ok(0.0)
            }
        }
    }

    /// A behavior realizing the curve at `s`: its `(S, I)` is `(s, curve(s))`.
    pub fn witness(self, s: f64) -> Result<Behavior, DomainError> {
        check(self, s)?;
        let b = |tag: Named| tag.behavior();
        let m = |p: Behavior, q: Behavior, lambda: f64| {
            mix(&p, &q, lambda.clamp(0.0, 1.0)).expect("weight clamped into [0, 1]")
        };
        Ok(match self {
            CurveId::LocalMax => m(b(Named::P0), b(Named::ScTilde), s / 2.0),
            CurveId::CNonlocalMax => m(b(Named::Sc), b(Named::Pr), (s - 2.0) / 2.0),
            CurveId::LdPrMax => m(b(Named::LdAllOnes), b(Named::Pr), (s - 2.0) / 2.0),
            CurveId::NsMax => {
                if s <= 2.0 {
                    CurveId::LocalMax.witness(s)?
                } else if s < ns_max_crossing() {
                    CurveId::CNonlocalMax.witness(s)?
                } else {
                    CurveId::LdPrMax.witness(s)?
                }
            }
            CurveId::QcMax => {
                let w = w(s)?;
                Behavior::from_table_unchecked(correlators_to_table(&Correlators::unbiased([
                    [w, w],
                    [w, (3.0 * w - s).clamp(-1.0, 1.0)],
                ])))
            }
            CurveId::BellPrMin => m(b(Named::Bell), b(Named::Pr), (s - TSIRELSON) / (4.0 - TSIRELSON)),
            CurveId::LocalMin => {
                // Deterministic Alice times a biased coin for Bob's input 0: a product
                // behavior whose CHSH expressions are 2<B_0> and 0.
                let u = s / 2.0;
                let c = Correlators::new([1.0, 1.0], [u, 0.0], [[u, 0.0], [u, 0.0]]);
                Behavior::from_table_unchecked(correlators_to_table(&c))
            }
        })
    }
}

impl fmt::Display for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        CurveId::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown curve '{s}'"))
    }
}

fn check(id: CurveId, s: f64) -> Result<(), DomainError> {
    let (lo, hi) = id.domain();
    if !(lo - 1e-12..=hi + 1e-12).contains(&s) {
        return Err(DomainError::OutOfRange { what: id.name(), value: s, lo, hi });
    }
    Ok(())
}

fn info_of(id: CurveId, s: f64) -> Result<f64, DomainError> {
    Ok(mutual_information(&id.witness(s)?))
}

/// Mixtures of `P0` and the relabeled shared coin.
pub fn local_max(s: f64) -> Result<f64, DomainError> {
    info_of(CurveId::LocalMax, s)
}

/// Mixtures of the shared coin and the PR box.
pub fn c_nonlocal_max(s: f64) -> Result<f64, DomainError> {
    info_of(CurveId::CNonlocalMax, s)
}

pub fn ld_pr_max(s: f64) -> Result<f64, DomainError> {
    info_of(CurveId::LdPrMax, s)
}

pub fn ns_max(s: f64) -> Result<f64, DomainError> {
    check(CurveId::NsMax, s)?;
    if s <= 2.0 {
        local_max(s)
    } else {
        Ok(ld_pr_max(s)?.max(c_nonlocal_max(s)?))
    }
}

/// Where `ld_pr_max` overtakes `c_nonlocal_max`, located by bisection to 1e-10.
pub fn ns_max_crossing() -> f64 {
    static CROSSING: OnceLock<f64> = OnceLock::new();
    *CROSSING.get_or_init(|| {
        let diff = |s: f64| c_nonlocal_max(s).unwrap() - ld_pr_max(s).unwrap();
        // diff > 0 at s = 2; it is negative just below 4, where both curves reach 1.
        let (mut lo, mut hi) = (2.0, 3.99);
        debug_assert!(diff(lo) > 0.0 && diff(hi) < 0.0);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if diff(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

/// `√2 cos(π/6 + arctan(s / √(8 - s²)) / 3)` on `[2, 2√2]`.
pub fn w(s: f64) -> Result<f64, DomainError> {
    check(CurveId::QcMax, s)?;
    let angle = if s >= TSIRELSON { FRAC_PI_2 } else { (s / (8.0 - s * s).sqrt()).atan() };
    Ok(SQRT_2 * (FRAC_PI_6 + angle / 3.0).cos())
}

pub fn qc_max(s: f64) -> Result<f64, DomainError> {
    info_of(CurveId::QcMax, s)
}

pub fn bell_pr_min(s: f64) -> Result<f64, DomainError> {
    info_of(CurveId::BellPrMin, s)
}

/// Samples `n` equispaced points of a curve over its whole domain.
pub fn sample_curve(id: CurveId, n: usize) -> Result<Vec<(f64, f64)>, DomainError> {
    let (lo, hi) = id.domain();
    if n < 2 {
        return Err(DomainError::Precondition("a curve needs at least 2 grid points"));
    }
    (0..n)
        .map(|k| {
            let s = if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
            id.eval(s).map(|i| (s, i))
        })
        .collect()
}
