//! Three tiers of contraction certificate for the shallow network, from the
//! most conservative to the exact matrix condition:
//!
//! 1. row-wise bound `max_i (|a_i| + |w1_i| / (n+1)) < 1 / (n+1)`;
//! 2. strict diagonal dominance of `M` (Gershgorin) with `lambda_i = 1/(n+1)`, `p = 1`;
//! 3. positive semidefiniteness of `M` from its spectrum.
//!
//! Each tier implies the next.

use nalgebra::{DMatrix, SymmetricEigen};

use super::RnnWeights;
use crate::error::{Error, Result};

/// Eigenvalue slack when deciding `M >= 0`.
const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub row_bound_ok: bool,
    pub gersgorin_ok: bool,
    pub m_psd_ok: bool,
    pub min_eigenvalue: f64,
    /// Neurons whose certificate row is violated (penalty multiplier 1).
    pub violating_neurons: Vec<usize>,
    /// `(n + 1) max_i (|a_i| + |w1_i| / (n+1))`; a Lipschitz constant of the
    /// recurrent map in `x` whenever it is below one.
    pub contraction_rate: f64,
}

impl CertificationReport {
    /// The implication chain `row bound => gersgorin => psd` holds.
    pub fn chain_consistent(&self) -> bool {
        (!self.row_bound_ok || self.gersgorin_ok) && (!self.gersgorin_ok || self.m_psd_ok)
    }
}

/// Symmetric `(n+2) x (n+2)` matrix
///
/// ```text
/// [ 2-p   0          -a^T        ]
/// [ 0     p          -w1^T Lambda ]
/// [ -a   -Lambda w1   Lambda      ]
/// ```
///
/// with `Lambda = lambda I`.
pub fn contraction_matrix(w: &RnnWeights, lambda: f64, p: f64) -> DMatrix<f64> {
    let n = w.n;
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m[(0, 0)] = 2.0 - p;
    m[(1, 1)] = p;
    for i in 0..n {
        let r = i + 2;
        m[(0, r)] = -w.a[i];
        m[(r, 0)] = -w.a[i];
        m[(1, r)] = -lambda * w.w1[i];
        m[(r, 1)] = -lambda * w.w1[i];
        m[(r, r)] = lambda;
    }
    m
}

pub fn certify(w: &RnnWeights) -> Result<CertificationReport> {
    if w.n <= 1 {
        return Err(Error::InvalidParams(format!(
            "certificate needs more than one neuron, got n = {}",
            w.n
        )));
    }
    let lambda = 1.0 / (w.n as f64 + 1.0);
    let p = 1.0;

    let rows: Vec<f64> = w
        .a
        .iter()
        .zip(&w.w1)
        .map(|(a, w1)| a.abs() + lambda * w1.abs())
        .collect();
    let row_max = rows.iter().cloned().fold(0.0, f64::max);
    let row_bound_ok = row_max < lambda;
    let violating_neurons = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| **r > lambda)
        .map(|(i, _)| i)
        .collect();

    let sum_a: f64 = w.a.iter().map(|a| a.abs()).sum();
    let sum_w1: f64 = w.w1.iter().map(|x| lambda * x.abs()).sum();
    let gersgorin_ok = 2.0 - p > sum_a && p > sum_w1 && rows.iter().all(|r| lambda > *r);

    let spectrum = SymmetricEigen::new(contraction_matrix(w, lambda, p)).eigenvalues;
    let min_eigenvalue = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);

    Ok(CertificationReport {
        row_bound_ok,
        gersgorin_ok,
        m_psd_ok: min_eigenvalue >= -PSD_TOL,
        min_eigenvalue,
        violating_neurons,
        contraction_rate: (w.n as f64 + 1.0) * row_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_neuron(a: [f64; 2], w1: [f64; 2]) -> RnnWeights {
        let mut w = RnnWeights::zeros(2, 4);
        w.a = a.to_vec();
        w.w1 = w1.to_vec();
        w
    }

    #[test]
    fn small_weights_are_certified() {
        let r = certify(&two_neuron([0.1, 0.1], [0.3, 0.3])).unwrap();
        assert!(r.row_bound_ok && r.gersgorin_ok && r.m_psd_ok);
        assert!(r.violating_neurons.is_empty());
        assert!((r.contraction_rate - 0.6).abs() < 1e-12);
    }

    #[test]
    fn large_output_weight_fails_row_bound() {
        let r = certify(&two_neuron([0.5, 0.0], [0.0, 0.0])).unwrap();
        assert!(!r.row_bound_ok);
        assert_eq!(r.violating_neurons, vec![0]);
        assert!(r.chain_consistent());
    }

    #[test]
    fn zero_weights_have_known_spectrum() {
        let w = RnnWeights::zeros(4, 4);
        let r = certify(&w).unwrap();
        assert!(r.row_bound_ok && r.gersgorin_ok && r.m_psd_ok);
        let mut eig: Vec<f64> = SymmetricEigen::new(contraction_matrix(&w, 0.2, 1.0))
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        eig.sort_by(f64::total_cmp);
        let expected = [0.2, 0.2, 0.2, 0.2, 1.0, 1.0];
        for (got, want) in eig.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_neuron_is_rejected() {
        assert!(certify(&RnnWeights::zeros(1, 4)).is_err());
    }

    #[test]
    fn matrix_is_symmetric() {
        let w = two_neuron([0.3, -0.2], [0.7, -1.1]);
        let m = contraction_matrix(&w, 1.0 / 3.0, 1.0);
        assert_eq!(m, m.transpose());
    }
}
