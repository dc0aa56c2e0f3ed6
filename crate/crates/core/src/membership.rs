//! Membership tests for the local set, the arcsin relaxation of the quantum
//! set, and the first level of the NPA hierarchy.
//!
//! Each test returns a [`Verdict`] whose slack is a signed margin:
//! positive means satisfied with room to spare, zero is the boundary.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::behavior::{correlators_to_table, validate_table, Behavior, Correlators, EXTERNAL_TOL};
use crate::error::BehaviorError;
use crate::functionals::s_max;

/// Slack tolerance shared by all tests: points within it of a boundary count as members.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Marginals this close to `±1` take the degenerate NPA-1 branch.
pub const DEGENERATE_MARGINAL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub slack: f64,
}

impl Verdict {
    fn from_slack(slack: f64) -> Self {
        Self { pass: slack >= -MEMBERSHIP_TOL, slack }
    }
}

/// Local iff `S <= 2`; slack `2 - S`.
pub fn is_local(p: &Behavior) -> Verdict {
    Verdict::from_slack(2.0 - s_max(p))
}

/// `max_xy |sum_{x'y'} asin(m_{x'y'}) - 2 asin(m_xy)|` for a 2x2 matrix of
/// arguments clamped to `[-1, 1]`.
fn arcsin_violation(m: &[[f64; 2]; 2]) -> f64 {
    let t = m.map(|row| row.map(|v| v.clamp(-1.0, 1.0).asin()));
    let total: f64 = t.iter().flatten().sum();
    t.iter().flatten().fold(0.0, |acc, v| acc.max((total - 2.0 * v).abs()))
}

/// The four arcsin inequalities on the correlations; slack `π - max |expr|`.
pub fn qtilde_test(p: &Behavior) -> Verdict {
    qtilde_correlators(&p.correlators())
}

pub fn qtilde_correlators(c: &Correlators) -> Verdict {
    Verdict::from_slack(PI - arcsin_violation(&c.ab))
}

/// Outcome of the NPA level-1 test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Npa1Verdict {
    pub pass: bool,
    /// `π - max |expr|` on the normalized correlations, or `π` on the
    /// degenerate branch where the arcsin condition is vacuous.
    pub slack: f64,
    pub degenerate: bool,
}

/// First NPA level via the arcsin condition on the normalized covariances
/// `F_xy = (<A_xB_y> - <A_x><B_y>) / sqrt((1 - <A_x>^2)(1 - <B_y>^2))`.
pub fn npa1_test(p: &Behavior) -> Npa1Verdict {
    npa1_correlators(&p.correlators())
}

pub fn npa1_correlators(c: &Correlators) -> Npa1Verdict {
    let deterministic = c.a.iter().chain(&c.b).any(|m| m.abs() >= 1.0 - DEGENERATE_MARGINAL);
    if deterministic {
        return Npa1Verdict { pass: true, slack: PI, degenerate: true };
    }
    let mut f = [[0.0; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let norm = ((1.0 - c.a[x] * c.a[x]) * (1.0 - c.b[y] * c.b[y])).sqrt();
            f[x][y] = ((c.ab[x][y] - c.a[x] * c.b[y]) / norm).clamp(-1.0, 1.0);
        }
    }
    let v = Verdict::from_slack(PI - arcsin_violation(&f));
    Npa1Verdict { pass: v.pass, slack: v.slack, degenerate: false }
}

/// Aggregated verdicts. Set-level fields are absent when the input is not a
/// valid non-signaling behavior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub ns_valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub npa1: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qtilde: Option<bool>,
    /// `false` when the verdicts break `local => npa1 => qtilde`.
    pub consistent: bool,
    pub slacks: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub violations: Vec<String>,
}

pub fn report(p: &Behavior) -> MembershipReport {
    let local = is_local(p);
    let q = qtilde_test(p);
    let n = npa1_test(p);
    let mut slacks = BTreeMap::new();
    slacks.insert("local".to_owned(), local.slack);
    slacks.insert("qtilde".to_owned(), q.slack);
    slacks.insert("npa1".to_owned(), n.slack);
    let consistent = (!local.pass || n.pass) && (!n.pass || q.pass);
    MembershipReport {
        ns_valid: true,
        local: Some(local.pass),
        npa1: Some(n.pass),
        qtilde: Some(q.pass),
        consistent,
        slacks,
        violations: Vec::new(),
    }
}

/// Validates the correlator tuple first, then runs every test.
pub fn report_correlators(c: &Correlators) -> MembershipReport {
    let range_ok = c.to_array().iter().all(|v| v.is_finite() && v.abs() <= 1.0 + EXTERNAL_TOL);
    let validated = if range_ok {
        validate_table(&correlators_to_table(c), EXTERNAL_TOL)
    } else {
        Err(BehaviorError::Invalid(Vec::new()))
    };
    match validated {
        Ok(p) => report(&p),
        Err(err) => invalid_report(&err, c),
    }
}

pub fn report_raw(raw: &[f64]) -> MembershipReport {
    match crate::behavior::validate(raw) {
        Ok(p) => report(&p),
        Err(err) => MembershipReport {
            ns_valid: false,
            local: None,
            npa1: None,
            qtilde: None,
            consistent: true,
            slacks: BTreeMap::new(),
            violations: describe(&err),
        },
    }
}

fn describe(err: &BehaviorError) -> Vec<String> {
    match err {
        BehaviorError::Invalid(v) => v.iter().map(ToString::to_string).collect(),
        other => vec![other.to_string()],
    }
}

fn invalid_report(err: &BehaviorError, c: &Correlators) -> MembershipReport {
    let mut violations = describe(err);
    for (i, v) in c.to_array().iter().enumerate() {
        if !(v.abs() <= 1.0 + EXTERNAL_TOL) {
            violations.push(format!("correlator #{i} = {v} outside [-1, 1]"));
        }
    }
    MembershipReport {
        ns_valid: false,
        local: None,
        npa1: None,
        qtilde: None,
        consistent: true,
        slacks: BTreeMap::new(),
        violations,
    }
}
