use std::fmt;

use thiserror::Error;

/// One violated behavior constraint together with its residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Violation {
    NonFinite {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
    },
    Positivity {
        x: usize,
        y: usize,
        a: usize,
        b: usize,
        value: f64,
    },
    Normalization {
        x: usize,
        y: usize,
        residual: f64,
    },
    /// Alice's marginal `p(a|x)` depends on Bob's input.
    SignalingAlice {
        x: usize,
        a: usize,
        residual: f64,
    },
    /// Bob's marginal `p(b|y)` depends on Alice's input.
    SignalingBob {
        y: usize,
        b: usize,
        residual: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonFinite { x, y, a, b } => write!(f, "p({a}{b}|{x}{y}) is not finite"),
            Violation::Positivity { x, y, a, b, value } => {
                write!(f, "positivity: p({a}{b}|{x}{y}) = {value:e}")
            }
            Violation::Normalization { x, y, residual } => {
                write!(f, "normalization: sum_ab p(ab|{x}{y}) - 1 = {residual:e}")
            }
            Violation::SignalingAlice { x, a, residual } => {
                write!(f, "non-signaling: p(a={a}|x={x}) differs between y=0 and y=1 by {residual:e}")
            }
            Violation::SignalingBob { y, b, residual } => {
                write!(f, "non-signaling: p(b={b}|y={y}) differs between x=0 and x=1 by {residual:e}")
            }
        }
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error("correlator #{index} = {value} lies outside [-1, 1]")]
    CorrelatorOutOfRange { index: usize, value: f64 },
    #[error("mixing weight {0} lies outside [0, 1]")]
    MixingWeight(f64),
    #[error("expected 16 probabilities, got {0}")]
    WrongLength(usize),
    #[error("invalid behavior: {}", join(.0))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("{what}: argument {value} outside [{lo}, {hi}]")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("{0}")]
    Precondition(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("invalid scan configuration: {0}")]
    Config(String),
    #[error("CHSH value {s} is infeasible for the {set} set (feasible range [{lo}, {hi}])")]
    Infeasible { set: &'static str, s: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("curve too short: {len} points, need at least {need}")]
    TooShort { len: usize, need: usize },
    #[error("curve abscissae are not uniformly spaced (step {step} at index {index}, expected {expected})")]
    NonUniform { index: usize, step: f64, expected: f64 },
    #[error("no persistent sign change in the orientation profile ({runs} persistent runs, all {sign})")]
    NoSignChange { runs: usize, sign: &'static str },
    #[error("{count} persistent sign changes in the orientation profile, at s = {locations:?}")]
    MultipleSignChanges { count: usize, locations: Vec<f64> },
    #[error("trajectory needs a symmetric scan: {0}")]
    NotSymmetric(String),
}
