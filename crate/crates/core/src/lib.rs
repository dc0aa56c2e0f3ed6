//! Non-signaling correlations in the CHSH / mutual-information plane.
//!
//! Two-party, two-input, two-output behaviors `p(ab|xy)`, the functionals
//! `S` (CHSH) and `I` (mutual information), membership tests for the
//! local, quantum-relaxation and NPA-1 sets, analytic boundary curves,
//! numerical boundary scans, quantum sampling and geometric analysis of
//! the resulting curves.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod behavior;
pub mod curves;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod membership;
pub mod sampler;
pub mod scan;
pub mod solver;

pub use behavior::{mix, ns_vertices, Behavior, Correlators, Named, Relabeling};
pub use error::{AnalysisError, BehaviorError, DomainError, ScanError};
pub use functionals::{mutual_information, s_max, FunctionalPoint};
