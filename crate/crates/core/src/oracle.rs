//! Covariance-based cross-verification of the Gaussian scheme. The scheme is
//! lifted into an explicit 14-component zero-mean Gaussian vector built from
//! seven independent primitives (three unit-variance codeword seeds, the
//! three states, the noise), and every closed-form quantity is re-derived
//! from that matrix through generic log-det mutual informations that share
//! no arithmetic with the closed form.
//!
//! The sum rate is evaluated successively: the common codeword U against the
//! channel given S0, then each private codeword V_i against the channel
//! given (U, S0) with its binning cost subtracted. The grouped expression
//! I(Y; U,V1,V2) - I(U,V1,V2; S0,S1,S2) is also exposed; it exceeds the
//! successive value by exactly I(V1;V2 | U,S0,Y), a conditioning-on-Y
//! coupling between the private codewords that the per-user decomposition
//! never pays. [`SchemeCovariance::private_cross_information`] measures that
//! term and the identity is checked in the test suites.

use crate::gaussian::{
    derive_coefficients, scheme_terms, sum_rate, GaussianMacConfig, PowerSplit,
    SchemeCoefficients, SchemeError,
};
use crate::info::{GaussianVector, InfoError};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// Labels of the lifted components, in storage order.
pub const COMPONENT_LABELS: [&str; 14] = [
    "u", "v1", "v2", "x1", "x2", "y", "s1_res", "s2_res", "phi0", "phi1", "phi2", "s0", "s1",
    "s2",
];

const U: usize = 0;
const V1: usize = 1;
const V2: usize = 2;
const X1: usize = 3;
const X2: usize = 4;
const Y: usize = 5;
const PHI0: usize = 8;
const PHI1: usize = 9;
const PHI2: usize = 10;
const S0: usize = 11;
const S1: usize = 12;
const S2: usize = 13;

/// Additive perturbations of the five estimator coefficients, for negative
/// controls: a perturbed scheme must fail the orthogonality checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct GammaOffsets {
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma01: f64,
    pub gamma02: f64,
}

/// Residual covariances that must vanish for the scheme's estimator
/// structure to be correct: each residual phi_j is uncorrelated with the
/// received signal and with the common state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrthogonalityReport {
    pub cov_phi0_y: f64,
    pub cov_phi1_y: f64,
    pub cov_phi2_y: f64,
    pub cov_phi0_s0: f64,
    pub cov_phi1_s0: f64,
    pub cov_phi2_s0: f64,
}

impl OrthogonalityReport {
    pub fn max_abs(&self) -> f64 {
        [
            self.cov_phi0_y,
            self.cov_phi1_y,
            self.cov_phi2_y,
            self.cov_phi0_s0,
            self.cov_phi1_s0,
            self.cov_phi2_s0,
        ]
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
    }

    pub fn pass(&self, tolerance: f64) -> bool {
        self.max_abs() < tolerance
    }
}

/// Residuals of the state-decoupling identities. `common_augmentation` is
/// |I(Y;U,V1,V2) - I(Y,S0;U,V1,V2)|: adjoining the common state to the
/// channel output adds nothing, because the codewords already carry their
/// S0 component. `common_chain` checks the chain-rule split of the
/// augmented quantity into I(Y;U,V1,V2|S0) + I(U,V1,V2;S0). The private
/// entries do the same per encoder at the next decoding stage:
/// `private_augmentation[i]` is |I(Y;V_i|U,S0) - I(Y,S_i;V_i|U,S0)| and
/// `private_chain[i]` its split into I(Y;V_i|U,S0,S_i) + I(S_i;V_i|U,S0).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecouplingReport {
    pub common_augmentation: f64,
    pub common_chain: f64,
    pub private_augmentation: [f64; 2],
    pub private_chain: [f64; 2],
}

impl DecouplingReport {
    pub fn max_abs(&self) -> f64 {
        [
            self.common_augmentation,
            self.common_chain,
            self.private_augmentation[0],
            self.private_augmentation[1],
            self.private_chain[0],
            self.private_chain[1],
        ]
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
    }

    pub fn pass(&self, tolerance: f64) -> bool {
        self.max_abs() < tolerance
    }
}

/// The lifted scheme: a validated Gaussian vector over the 14 components,
/// plus the config, split, and coefficients it was built from.
#[derive(Debug, Clone)]
pub struct SchemeCovariance {
    gv: GaussianVector,
    cfg: GaussianMacConfig,
    split: PowerSplit,
    coef: SchemeCoefficients,
}

/// Builds the lifted covariance with the scheme's own coefficients.
pub fn build_scheme_covariance(
    cfg: &GaussianMacConfig,
    split: &PowerSplit,
) -> Result<SchemeCovariance, OracleError> {
    build_with_gamma_offsets(cfg, split, &GammaOffsets::default())
}

/// Builds the lifted covariance with perturbed coefficients. The residuals
/// phi_j are formed with the same perturbed values, so any perturbation
/// breaks their orthogonality.
pub fn build_with_gamma_offsets(
    cfg: &GaussianMacConfig,
    split: &PowerSplit,
    offsets: &GammaOffsets,
) -> Result<SchemeCovariance, OracleError> {
    let derived = derive_coefficients(cfg, split)?;
    let coef = SchemeCoefficients {
        gamma0: derived.gamma0 + offsets.gamma0,
        gamma1: derived.gamma1 + offsets.gamma1,
        gamma2: derived.gamma2 + offsets.gamma2,
        gamma01: derived.gamma01 + offsets.gamma01,
        gamma02: derived.gamma02 + offsets.gamma02,
        q1p: derived.q1p,
        q2p: derived.q2p,
    };
    let t = scheme_terms(cfg, split);

    // Primitive column order: the codeword seeds, the states, the noise.
    const UT: usize = 0;
    const VT1: usize = 1;
    const VT2: usize = 2;
    const PS0: usize = 3;
    const PS1: usize = 4;
    const PS2: usize = 5;
    const PZ: usize = 6;
    let variances = DVector::from_vec(vec![1.0, 1.0, 1.0, cfg.q0(), cfg.q1(), cfg.q2(), cfg.n()]);

    let mut lift = DMatrix::<f64>::zeros(14, 7);
    lift[(U, UT)] = 1.0;
    lift[(U, PS0)] = coef.gamma0;
    lift[(V1, VT1)] = 1.0;
    lift[(V1, PS1)] = coef.gamma1 * (1.0 - t.r1);
    lift[(V1, PS0)] = coef.gamma01;
    lift[(V2, VT2)] = 1.0;
    lift[(V2, PS2)] = coef.gamma2 * (1.0 - t.r2);
    lift[(V2, PS0)] = coef.gamma02;
    lift[(X1, UT)] = t.cu1;
    lift[(X1, VT1)] = t.c1;
    lift[(X1, PS1)] = -t.r1;
    lift[(X2, UT)] = t.cu2;
    lift[(X2, VT2)] = t.c2;
    lift[(X2, PS2)] = -t.r2;
    for col in 0..7 {
        lift[(Y, col)] = lift[(X1, col)] + lift[(X2, col)];
    }
    lift[(Y, PS0)] += 1.0;
    lift[(Y, PS1)] += 1.0;
    lift[(Y, PS2)] += 1.0;
    lift[(Y, PZ)] += 1.0;
    lift[(6, PS1)] = 1.0 - t.r1; // s1_res
    lift[(7, PS2)] = 1.0 - t.r2; // s2_res
    for col in 0..7 {
        lift[(PHI0, col)] = lift[(U, col)] - coef.gamma0 * lift[(Y, col)];
        lift[(PHI1, col)] = lift[(V1, col)] - coef.gamma01 * lift[(Y, col)];
        lift[(PHI2, col)] = lift[(V2, col)] - coef.gamma02 * lift[(Y, col)];
    }
    lift[(S0, PS0)] = 1.0;
    lift[(S1, PS1)] = 1.0;
    lift[(S2, PS2)] = 1.0;

    let sigma = &lift * DMatrix::from_diagonal(&variances) * lift.transpose();
    let labels = COMPONENT_LABELS.iter().map(|s| s.to_string()).collect();
    let gv = GaussianVector::new(labels, sigma)?;
    Ok(SchemeCovariance { gv, cfg: *cfg, split: *split, coef })
}

impl SchemeCovariance {
    pub fn gaussian(&self) -> &GaussianVector {
        &self.gv
    }

    pub fn config(&self) -> &GaussianMacConfig {
        &self.cfg
    }

    pub fn split(&self) -> &PowerSplit {
        &self.split
    }

    pub fn coefficients(&self) -> &SchemeCoefficients {
        &self.coef
    }

    fn mi(&self, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64, OracleError> {
        Ok(self.gv.mutual_information(a, b, c)?)
    }

    /// Sum rate re-derived from the covariance alone, by successive
    /// decoding: I(Y;U|S0) + sum_i [ I(Y;V_i|U,S0) - I(V_i;S_i|U,S0) ].
    pub fn oracle_sum_rate(&self) -> Result<f64, OracleError> {
        let common = self.mi(&[Y], &[U], &[S0])?;
        let gain1 = self.mi(&[Y], &[V1], &[U, S0])?;
        let cost1 = self.mi(&[V1], &[S1], &[U, S0])?;
        let gain2 = self.mi(&[Y], &[V2], &[U, S0])?;
        let cost2 = self.mi(&[V2], &[S2], &[U, S0])?;
        Ok(common + gain1 - cost1 + gain2 - cost2)
    }

    /// The grouped sum-rate expression I(Y;U,V1,V2) - I(U,V1,V2;S0,S1,S2).
    pub fn joint_sum_bound(&self) -> Result<f64, OracleError> {
        let forward = self.mi(&[Y], &[U, V1, V2], &[])?;
        let cost = self.mi(&[U, V1, V2], &[S0, S1, S2], &[])?;
        Ok(forward - cost)
    }

    /// I(V1;V2|U,S0,Y): the coupling between the private codewords induced
    /// by conditioning on the channel output. Exactly the excess of
    /// [`Self::joint_sum_bound`] over [`Self::oracle_sum_rate`], and zero
    /// when either private stream carries no power.
    pub fn private_cross_information(&self) -> Result<f64, OracleError> {
        self.mi(&[V1], &[V2], &[U, S0, Y])
    }

    /// Closed-form sum rate for the stored config and split.
    pub fn closed_form_sum_rate(&self) -> f64 {
        sum_rate(&self.cfg, &self.split).expect("stored split was validated at build time")
    }

    /// Covariances of each residual phi_j against Y and against S0, straight
    /// off the matrix.
    pub fn verify_orthogonality(&self) -> OrthogonalityReport {
        let cov = self.gv.cov();
        OrthogonalityReport {
            cov_phi0_y: cov[(PHI0, Y)],
            cov_phi1_y: cov[(PHI1, Y)],
            cov_phi2_y: cov[(PHI2, Y)],
            cov_phi0_s0: cov[(PHI0, S0)],
            cov_phi1_s0: cov[(PHI1, S0)],
            cov_phi2_s0: cov[(PHI2, S0)],
        }
    }

    /// Residuals of the state-decoupling identities (see
    /// [`DecouplingReport`]).
    pub fn verify_state_decoupling(&self) -> Result<DecouplingReport, OracleError> {
        let y_uvv = self.mi(&[Y], &[U, V1, V2], &[])?;
        let ys0_uvv = self.mi(&[Y, S0], &[U, V1, V2], &[])?;
        let y_uvv_given_s0 = self.mi(&[Y], &[U, V1, V2], &[S0])?;
        let uvv_s0 = self.mi(&[U, V1, V2], &[S0], &[])?;
        let mut private_augmentation = [0.0; 2];
        let mut private_chain = [0.0; 2];
        for (slot, (v, s)) in [(V1, S1), (V2, S2)].into_iter().enumerate() {
            let base = self.mi(&[Y], &[v], &[U, S0])?;
            let augmented = self.mi(&[Y, s], &[v], &[U, S0])?;
            let split_channel = self.mi(&[Y], &[v], &[U, S0, s])?;
            let split_state = self.mi(&[s], &[v], &[U, S0])?;
            private_augmentation[slot] = base - augmented;
            private_chain[slot] = augmented - (split_channel + split_state);
        }
        Ok(DecouplingReport {
            common_augmentation: y_uvv - ys0_uvv,
            common_chain: ys0_uvv - (y_uvv_given_s0 + uvv_s0),
            private_augmentation,
            private_chain,
        })
    }

    /// Residuals of the scheme's factorization structure: the private
    /// codeword of each encoder is conditionally independent of the other
    /// encoder's state, I(V1;S2|U,S0,S1) and I(V2;S1|U,S0,S2).
    pub fn markov_residuals(&self) -> Result<(f64, f64), OracleError> {
        let first = self.mi(&[V1], &[S2], &[U, S0, S1])?;
        let second = self.mi(&[V2], &[S1], &[U, S0, S2])?;
        Ok((first, second))
    }

    /// Deviations |Var(X_i) - P_i| of the transmit powers.
    pub fn power_deviation(&self) -> (f64, f64) {
        let cov = self.gv.cov();
        (
            (cov[(X1, X1)] - self.cfg.p1()).abs(),
            (cov[(X2, X2)] - self.cfg.p2()).abs(),
        )
    }

    /// Variance of the received signal.
    pub fn received_variance(&self) -> f64 {
        self.gv.cov()[(Y, Y)]
    }
}
