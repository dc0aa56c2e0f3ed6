//! Two-qubit quantum behaviors: Born-rule evaluation of projective
//! measurements on pure states, the Tsirelson-saturating configuration,
//! and Haar-random sampling.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::behavior::{validate_table, Behavior, Table};
use crate::error::DomainError;
use crate::scan::rng_for;

/// Tolerance on unit norms of states and Bloch vectors.
pub const NORM_TOL: f64 = 1e-12;
/// Samples per RNG stream.
pub const CHUNK: usize = 4096;

type Mat2 = [[Complex64; 2]; 2];

/// Projective qubit measurement along a Bloch direction; outcome `+1` is
/// the projector `(1 + n.σ)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitMeasurement {
    bloch: [f64; 3],
}

impl QubitMeasurement {
    pub fn new(bloch: [f64; 3]) -> Result<Self, DomainError> {
        let norm = bloch.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(DomainError::OutOfRange { what: "Bloch vector norm", value: norm, lo: 1.0, hi: 1.0 });
        }
        Ok(Self { bloch })
    }

    /// Normalizes a nonzero direction.
    pub fn along(direction: [f64; 3]) -> Result<Self, DomainError> {
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(DomainError::Precondition("measurement direction must be nonzero and finite"));
        }
        Ok(Self { bloch: direction.map(|v| v / norm) })
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    /// `n.σ`.
    pub fn observable(&self) -> Mat2 {
        let [x, y, z] = self.bloch;
        [[Complex64::new(z, 0.0), Complex64::new(x, -y)], [Complex64::new(x, y), Complex64::new(-z, 0.0)]]
    }

    /// Projector for outcome index `a` (0 for `+1`, 1 for `-1`).
    pub fn projector(&self, a: usize) -> Mat2 {
        let sign = if a == 0 { 0.5 } else { -0.5 };
        let o = self.observable();
        let mut p = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                p[i][j] = o[i][j] * sign;
            }
            p[i][i] += 0.5;
        }
        p
    }
}

/// Pure two-qubit state (basis `|ab>`, Alice's qubit first) and one pair of
/// measurements per party.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumModel {
    pub state: [Complex64; 4],
    pub alice: [QubitMeasurement; 2],
    pub bob: [QubitMeasurement; 2],
}

fn state_norm(psi: &[Complex64; 4]) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `<psi| A ⊗ B |psi>`.
fn expectation(psi: &[Complex64; 4], a: &Mat2, b: &Mat2) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            let bra = psi[2 * i + j].conj();
            for k in 0..2 {
                for l in 0..2 {
                    acc += bra * a[i][k] * b[j][l] * psi[2 * k + l];
                }
            }
        }
    }
    acc
}

impl QuantumModel {
    pub fn new(
        state: [Complex64; 4],
        alice: [QubitMeasurement; 2],
        bob: [QubitMeasurement; 2],
    ) -> Result<Self, DomainError> {
        let norm = state_norm(&state);
        if !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(DomainError::OutOfRange { what: "state norm", value: norm, lo: 1.0, hi: 1.0 });
        }
        Ok(Self { state, alice, bob })
    }

    /// `<A_xB_y>` evaluated directly as `<psi|(n_x.σ)⊗(m_y.σ)|psi>`.
    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        expectation(&self.state, &self.alice[x].observable(), &self.bob[y].observable()).re
    }
}

/// The 16 Born probabilities `<psi| P_a|x ⊗ P_b|y |psi>`.
pub fn model_to_behavior(m: &QuantumModel) -> Result<Behavior, DomainError> {
    let norm = state_norm(&m.state);
    if !((norm - 1.0).abs() <= NORM_TOL) {
        return Err(DomainError::OutOfRange { what: "state norm", value: norm, lo: 1.0, hi: 1.0 });
    }
    let mut table: Table = [[[[0.0; 2]; 2]; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                let pa = m.alice[x].projector(a);
                for b in 0..2 {
                    table[x][y][a][b] = expectation(&m.state, &pa, &m.bob[y].projector(b)).re;
                }
            }
        }
    }
    validate_table(&table, 1e-10).map_err(|_| DomainError::Precondition("Born probabilities failed validation"))
}

/// `(|00> + |11>)/sqrt(2)`; Alice measures `σ_z`, `σ_x`; Bob measures
/// `(σ_z ± σ_x)/sqrt(2)`.
pub fn bell_model() -> QuantumModel {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let m = |v: [f64; 3]| QubitMeasurement::along(v).expect("nonzero direction");
    QuantumModel {
        state: [h, zero, zero, h],
        alice: [m([0.0, 0.0, 1.0]), m([1.0, 0.0, 0.0])],
        bob: [m([1.0, 0.0, 1.0]), m([-1.0, 0.0, 1.0])],
    }
}

pub fn bell_behavior() -> Behavior {
    model_to_behavior(&bell_model()).expect("canonical model is valid")
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-random pure state and uniformly random measurement directions.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R) -> QuantumModel {
    let mut state = [Complex64::new(0.0, 0.0); 4];
    for c in state.iter_mut() {
        *c = Complex64::new(gaussian(rng), gaussian(rng));
    }
    let norm = state_norm(&state);
    for c in state.iter_mut() {
        *c /= norm;
    }
    let mut direction = || loop {
        let v = [gaussian(rng), gaussian(rng), gaussian(rng)];
        if let Ok(m) = QubitMeasurement::along(v) {
            break m;
        }
    };
    let alice = [direction(), direction()];
    let bob = [direction(), direction()];
    QuantumModel { state, alice, bob }
}

/// `n` random models; chunk `k` of [`CHUNK`] samples draws from RNG stream `k`.
pub fn sample_models(n: usize, seed: u64) -> Vec<QuantumModel> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = rng_for(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len).map(move |_| random_model(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// `n` random quantum behaviors, deterministic in `seed`.
pub fn sample(n: usize, seed: u64) -> Vec<Behavior> {
    sample_models(n, seed).par_iter().map(|m| model_to_behavior(m).expect("sampled models are normalized")).collect()
}

/// `n` convex mixtures of `vertices` with flat Dirichlet weights, drawn in
/// chunks from the RNG streams of `seed` like [`sample_models`].
pub fn sample_mixtures(vertices: &[Behavior], n: usize, seed: u64) -> Vec<Behavior> {
    assert!(!vertices.is_empty(), "need at least one vertex");
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = rng_for(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len)
                .map(|_| {
                    let w: Vec<f64> = vertices.iter().map(|_| rng.sample::<f64, _>(Exp1)).collect();
                    let total: f64 = w.iter().sum();
                    let mut table: Table = [[[[0.0; 2]; 2]; 2]; 2];
                    for (wi, v) in w.iter().zip(vertices) {
                        for (dst, src) in table
                            .iter_mut()
                            .flatten()
                            .flatten()
                            .flatten()
                            .zip(v.table().iter().flatten().flatten().flatten())
                        {
                            *dst += wi / total * src;
                        }
                    }
                    validate_table(&table, 1e-12).expect("convex combinations of behaviors are behaviors")
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::Named;
    use crate::curves::TSIRELSON;
    use crate::functionals::{mutual_information, s_max};
    use crate::membership::{npa1_test, qtilde_test};
    use approx::assert_abs_diff_eq;

    fn z() -> QubitMeasurement {
        QubitMeasurement::new([0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn projectors_are_orthogonal_and_complete() {
        let m = QubitMeasurement::along([0.3, -1.2, 0.5]).unwrap();
        let (p, q) = (m.projector(0), m.projector(1));
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((p[i][j] + q[i][j]).re, id, epsilon = 1e-15);
                let mut pq = Complex64::new(0.0, 0.0);
                let mut pp = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    pq += p[i][k] * q[k][j];
                    pp += p[i][k] * p[k][j];
                }
                assert!(pq.norm() < 1e-15);
                assert!((pp - p[i][j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(QubitMeasurement::new([1.0, 1.0, 0.0]).is_err());
        assert!(QubitMeasurement::along([0.0; 3]).is_err());
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert!(QuantumModel::new([one, one, zero, zero], [z(); 2], [z(); 2]).is_err());
        let mut m = bell_model();
        m.state[0] *= 2.0;
        assert!(model_to_behavior(&m).is_err());
    }

    #[test]
    fn product_state_is_deterministic() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let m = QuantumModel::new([one, zero, zero, zero], [z(); 2], [z(); 2]).unwrap();
        let p = model_to_behavior(&m).unwrap();
        assert_eq!(mutual_information(&p), 0.0);
        assert_eq!(p.correlators(), Named::LdAllOnes.correlators());
    }

    #[test]
    fn maximally_entangled_same_axis_is_perfectly_correlated() {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        // Singlet.
        let state = [zero, h, -h, zero];
        let n = QubitMeasurement::along([0.2, 0.7, -0.4]).unwrap();
        let m = QuantumModel::new(state, [n; 2], [n; 2]).unwrap();
        let c = model_to_behavior(&m).unwrap().correlators();
        for v in c.ab.iter().flatten() {
            assert_abs_diff_eq!(*v, -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn canonical_configuration_is_the_bell_behavior() {
        let p = bell_behavior();
        assert!(p.correlators().max_abs_diff(&Named::Bell.correlators()) < 1e-12);
        assert_abs_diff_eq!(s_max(&p), TSIRELSON, epsilon = 1e-10);
        assert_abs_diff_eq!(mutual_information(&p), 0.3991, epsilon = 1e-4);
        assert_abs_diff_eq!(qtilde_test(&p).slack, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn born_and_direct_correlators_agree() {
        for m in sample_models(500, 3) {
            let c = model_to_behavior(&m).unwrap().correlators();
            for x in 0..2 {
                for y in 0..2 {
                    assert_abs_diff_eq!(c.ab[x][y], m.correlator(x, y), epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn samples_respect_quantum_bounds() {
        for p in sample(5000, 11) {
            assert!(s_max(&p) <= TSIRELSON + 1e-9);
            assert!(npa1_test(&p).pass);
        }
    }

    #[test]
    fn sampling_is_deterministic_across_chunks() {
        let a = sample(CHUNK + 17, 5);
        let b = sample(CHUNK + 17, 5);
        assert_eq!(a.len(), CHUNK + 17);
        assert_eq!(a, b);
        assert_ne!(sample(3, 6), sample(3, 5));
        // A prefix of a longer run is the shorter run.
        assert_eq!(&sample(CHUNK + 40, 5)[..CHUNK + 17], &a[..]);
    }

    #[test]
    fn mixtures_are_deterministic_convex_combinations() {
        let v = [Named::Sc.behavior(), bell_behavior(), Named::Pr.behavior()];
        let a = sample_mixtures(&v, 300, 4);
        assert_eq!(a, sample_mixtures(&v, 300, 4));
        for p in &a {
            let c = p.correlators();
            // Every vertex is unbiased with equal off-diagonal correlators.
            assert!(c.has_zero_marginals(1e-15));
            assert!((c.ab[0][0] - c.ab[1][0]).abs() < 1e-12);
            let s = s_max(p);
            assert!((0.0..=4.0 + 1e-12).contains(&s));
        }
    }

    #[test]
    fn alice_marginal_mean_vanishes() {
        let models = sample_models(100_000, 21);
        let vals: Vec<f64> = models.iter().map(|m| model_to_behavior(m).unwrap().correlators().a[0]).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 3.0 * (var / n).sqrt(), "mean {mean}");
    }
}
