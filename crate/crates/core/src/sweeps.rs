//! Seeded property sweeps over randomized channels, splits, and auxiliary
//! factorizations. A `(draws, seed)` pair names one exact sequence of cases
//! forever, so the verifier and the test suites can replay identical sweeps
//! and compare their outputs byte for byte.

use crate::discrete::{
    check_cross_state_identity, table_shape, Alphabets, AuxFactorization, AuxSizes,
    DiscreteChannelSpec, DiscreteError, RegionForm,
};
use crate::gaussian::{GaussianMacConfig, PowerSplit};
use crate::oracle::{build_with_gamma_offsets, GammaOffsets, OracleError};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

/// Largest admissible residual for the estimator orthogonality covariances.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-9;
/// Largest admissible residual for the state-decoupling identities.
pub const DECOUPLING_TOLERANCE: f64 = 1e-8;
/// Largest admissible gap between the closed form and the covariance oracle.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-9;
/// Largest admissible residual when splitting the joint sum bound into the
/// successive terms plus the cross-information between the private streams.
pub const JOINT_IDENTITY_TOLERANCE: f64 = 1e-8;
/// Largest admissible residual for the cross-state bound identity.
pub const CROSS_STATE_TOLERANCE: f64 = 1e-10;

/// Worst case of one check across a sweep: the two sides of the identity at
/// the draw with the largest gap, the gap itself, and the verdict. A sweep
/// of zero draws holds vacuously and reports zeros.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    fn open(check: &'static str, tolerance: f64) -> Self {
        Self {
            check,
            lhs: 0.0,
            rhs: 0.0,
            delta: 0.0,
            tolerance,
            pass: true,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        let delta = (lhs - rhs).abs();
        if delta > self.delta {
            self.delta = delta;
            self.lhs = lhs;
            self.rhs = rhs;
        }
    }

    fn close(mut self) -> Self {
        self.pass = self.delta < self.tolerance;
        self
    }
}

/// Signed entry of largest magnitude, zero for an empty slice.
fn extreme(values: &[f64]) -> f64 {
    values
        .iter()
        .copied()
        .fold(0.0_f64, |best, v| if v.abs() > best.abs() { v } else { best })
}

/// One random channel with a split feasible for it. Powers and state
/// variances are uniform on [0, 5), the noise variance on [0.1, 5), each
/// coding fraction uniform on its feasibility interval, each common-stream
/// share uniform on [0, 1).
pub fn draw_config_split(rng: &mut impl Rng) -> (GaussianMacConfig, PowerSplit) {
    let p1 = 5.0 * rng.random::<f64>();
    let p2 = 5.0 * rng.random::<f64>();
    let q0 = 5.0 * rng.random::<f64>();
    let q1 = 5.0 * rng.random::<f64>();
    let q2 = 5.0 * rng.random::<f64>();
    let n = 0.1 + 4.9 * rng.random::<f64>();
    let cfg = GaussianMacConfig::new(p1, p2, q0, q1, q2, n).expect("draw ranges are valid");
    let (floor1, floor2) = cfg.eta_floor();
    let eta1 = floor1 + (1.0 - floor1) * rng.random::<f64>();
    let eta2 = floor2 + (1.0 - floor2) * rng.random::<f64>();
    let alpha1 = rng.random::<f64>();
    let alpha2 = rng.random::<f64>();
    let split = PowerSplit::new(eta1, eta2, alpha1, alpha2).expect("draw ranges are valid");
    (cfg, split)
}

/// The four covariance-based checks, evaluated in one pass so they all see
/// the same draw sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianSweepOutcome {
    pub orthogonality: CheckRecord,
    pub state_decoupling: CheckRecord,
    pub closed_form_vs_oracle: CheckRecord,
    pub joint_bound_identity: CheckRecord,
}

/// Sweeps the estimator orthogonality covariances, the state-decoupling
/// identities, the closed form against the successive oracle evaluation, and
/// the joint-bound split over `draws` random channel/split pairs. Gamma
/// offsets perturb every draw's construction; nonzero offsets are the
/// negative control and are expected to fail.
pub fn sweep_gaussian_identities(
    draws: u64,
    seed: u64,
    offsets: &GammaOffsets,
) -> Result<GaussianSweepOutcome, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut orthogonality = CheckRecord::open("orthogonality", ORTHOGONALITY_TOLERANCE);
    let mut state_decoupling = CheckRecord::open("state-decoupling", DECOUPLING_TOLERANCE);
    let mut closed_form = CheckRecord::open("closed-form-vs-oracle", CLOSED_FORM_TOLERANCE);
    let mut joint_bound = CheckRecord::open("joint-bound-identity", JOINT_IDENTITY_TOLERANCE);
    for _ in 0..draws {
        let (cfg, split) = draw_config_split(&mut rng);
        let scheme = build_with_gamma_offsets(&cfg, &split, offsets)?;

        let ortho = scheme.verify_orthogonality();
        orthogonality.record(
            extreme(&[
                ortho.cov_phi0_y,
                ortho.cov_phi1_y,
                ortho.cov_phi2_y,
                ortho.cov_phi0_s0,
                ortho.cov_phi1_s0,
                ortho.cov_phi2_s0,
            ]),
            0.0,
        );

        let decoupling = scheme.verify_state_decoupling()?;
        state_decoupling.record(
            extreme(&[
                decoupling.common_augmentation,
                decoupling.common_chain,
                decoupling.private_augmentation[0],
                decoupling.private_augmentation[1],
                decoupling.private_chain[0],
                decoupling.private_chain[1],
            ]),
            0.0,
        );

        let successive = scheme.oracle_sum_rate()?;
        closed_form.record(scheme.closed_form_sum_rate(), successive);
        joint_bound.record(
            scheme.joint_sum_bound()?,
            successive + scheme.private_cross_information()?,
        );
    }
    Ok(GaussianSweepOutcome {
        orthogonality: orthogonality.close(),
        state_decoupling: state_decoupling.close(),
        closed_form_vs_oracle: closed_form.close(),
        joint_bound_identity: joint_bound.close(),
    })
}

/// Probability row drawn uniformly from the simplex.
fn simplex_row(rng: &mut impl Rng, cells: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..cells)
        .map(|_| {
            let weight: f64 = Exp1.sample(rng);
            weight
        })
        .collect();
    let total: f64 = row.iter().sum();
    for value in &mut row {
        *value /= total;
    }
    row
}

fn random_rows(rng: &mut impl Rng, rows: usize, cells: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(rows * cells);
    for _ in 0..rows {
        table.extend(simplex_row(rng, cells));
    }
    table
}

/// One random correlated-state channel with a random auxiliary
/// factorization: alphabet sizes in {2, 3} for inputs and output, {1, 2} for
/// the states, {1..3} for the auxiliaries, all tables drawn uniformly from
/// their simplices.
pub fn draw_correlated_case(
    rng: &mut impl Rng,
) -> Result<(DiscreteChannelSpec, AuxFactorization), DiscreteError> {
    let alphabets = Alphabets {
        x1: rng.random_range(2..=3),
        x2: rng.random_range(2..=3),
        s0: None,
        s1: rng.random_range(1..=2),
        s2: rng.random_range(1..=2),
        y: rng.random_range(2..=3),
    };
    let state_cells = alphabets.s1 * alphabets.s2;
    let state_pmf = simplex_row(rng, state_cells);
    let input_rows = alphabets.x1 * alphabets.x2 * state_cells;
    let transition = random_rows(rng, input_rows, alphabets.y);
    let spec = DiscreteChannelSpec::new(
        RegionForm::CorrelatedStates,
        alphabets,
        state_pmf,
        transition,
    )?;

    let sizes = AuxSizes {
        u: rng.random_range(1..=3),
        v1: rng.random_range(1..=3),
        v2: rng.random_range(1..=3),
    };
    let [(u_rows, u_cols), (v1_rows, v1_cols), (v2_rows, v2_cols)] = table_shape(&spec, &sizes);
    let p_u = random_rows(rng, u_rows, u_cols);
    let p_x1v1 = random_rows(rng, v1_rows, v1_cols);
    let p_x2v2 = random_rows(rng, v2_rows, v2_cols);
    let aux = AuxFactorization::new(&spec, sizes, p_u, p_x1v1, p_x2v2)?;
    Ok((spec, aux))
}

/// Sweeps the identity rewriting each correlated-state private bound with
/// the other user's state moved across the conditioning bar, over `draws`
/// random channels and factorizations.
pub fn sweep_cross_state_identity(draws: u64, seed: u64) -> Result<CheckRecord, DiscreteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = CheckRecord::open("cross-state-identity", CROSS_STATE_TOLERANCE);
    for _ in 0..draws {
        let (spec, aux) = draw_correlated_case(&mut rng)?;
        let report = check_cross_state_identity(&spec, &aux)?;
        for user in 0..2 {
            record.record(report.lhs[user], report.rhs[user]);
        }
    }
    Ok(record.close())
}
