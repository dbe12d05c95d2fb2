//! Discrete memoryless two-user MACs with state, in two flavors selected by
//! [`RegionForm`]: correlated per-encoder states ("t1"), and a common state
//! seen by both encoders alongside independent private states ("t2"). For a
//! channel plus an auxiliary factorization (time-sharing variable U and
//! binning codewords V1, V2) the module composes the full joint pmf, reads
//! off the achievable-rate bound triple, and searches over factorizations
//! for an inner bound on the whole region.
//!
//! Variable orders of the composed joints are fixed and public:
//! [`t1_var`] is (S1, S2, U, V1, V2, X1, X2, Y) and [`t2_var`] is
//! (S0, S1, S2, U, V1, V2, X1, X2, Y).

use crate::info::{InfoError, JointPmf};
use crate::region::{RateRegion, RateTriple, RegionError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on composed-joint size; larger requests are refused rather than
/// ground through.
pub const MAX_JOINT_CELLS: u64 = 1_000_000;

/// Normalization slack accepted from user-supplied pmf rows.
const ROW_TOLERANCE: f64 = 1e-12;

/// Drift allowed in a composed joint's total mass before renormalizing.
const COMPOSE_TOLERANCE: f64 = 1e-9;

/// Coordinate-ascent rounds per search sample; round k blends rows toward
/// vertices with weight 2^-k.
const SEARCH_ROUNDS: usize = 20;

/// Number of support directions cycled across search samples.
const SEARCH_DIRECTIONS: usize = 21;

#[derive(Debug, Error)]
pub enum DiscreteError {
    #[error("channel JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("alphabet {name} must have at least one symbol")]
    EmptyAlphabet { name: &'static str },
    #[error("form t1 does not take an s0 alphabet")]
    UnexpectedS0,
    #[error("form t2 requires an s0 alphabet")]
    MissingS0,
    #[error("state_pmf has {actual} entries, expected {expected}")]
    StatePmfLength { expected: usize, actual: usize },
    #[error("state_pmf entry {index} is negative ({value})")]
    StatePmfNegative { index: usize, value: f64 },
    #[error("state_pmf sums to {sum}, expected 1")]
    StatePmfUnnormalized { sum: f64 },
    #[error(
        "form t2 state_pmf must be a product of independent marginals; \
         cell {index} is {actual}, marginal product {expected}"
    )]
    StateNotIndependent { index: usize, actual: f64, expected: f64 },
    #[error("transition has {actual} entries, expected {expected}")]
    TransitionLength { expected: usize, actual: usize },
    #[error("transition entry {index} is negative ({value})")]
    TransitionNegative { index: usize, value: f64 },
    #[error("transition row {row} sums to {sum}, expected 1")]
    TransitionRowUnnormalized { row: usize, sum: f64 },
    #[error("auxiliary alphabet {name} must have at least one symbol")]
    EmptyAux { name: &'static str },
    #[error("auxiliary table {table} has {actual} entries, expected {expected}")]
    AuxLength {
        table: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("auxiliary table {table} entry {index} is negative ({value})")]
    AuxNegative {
        table: &'static str,
        index: usize,
        value: f64,
    },
    #[error("auxiliary table {table} row {row} sums to {sum}, expected 1")]
    AuxRowUnnormalized {
        table: &'static str,
        row: usize,
        sum: f64,
    },
    #[error("{operation} requires a form {expected} channel, got {actual}")]
    WrongForm {
        operation: &'static str,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("composed joint mass drifted to {sum}")]
    ComposedMassDrift { sum: f64 },
    #[error(
        "joint pmf would need {cells} cells, over the {MAX_JOINT_CELLS} limit; \
         shrink the auxiliary alphabets"
    )]
    CapacityExceeded { cells: u128 },
    #[error("search budget must be at least 1")]
    ZeroBudget,
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// Which region form a channel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionForm {
    /// Correlated per-encoder states (S1, S2) with joint pmf.
    #[serde(rename = "t1")]
    CorrelatedStates,
    /// Common state S0 plus independent private states S1, S2.
    #[serde(rename = "t2")]
    CommonState,
}

impl RegionForm {
    pub fn tag(&self) -> &'static str {
        match self {
            RegionForm::CorrelatedStates => "t1",
            RegionForm::CommonState => "t2",
        }
    }
}

/// Alphabet sizes of a channel. `s0` is present exactly for form t2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alphabets {
    pub x1: usize,
    pub x2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<usize>,
    pub s1: usize,
    pub s2: usize,
    pub y: usize,
}

/// A validated channel: alphabets, state pmf, and transition rows.
///
/// `state_pmf` is row-major over (S1, S2) for t1 and (S0, S1, S2) for t2;
/// for t2 it must factor into independent marginals. `transition` is
/// row-major over (X1, X2, S1, S2) for t1 and (X1, X2, S0, S1, S2) for t2,
/// each row a pmf over Y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteChannelSpec {
    form: RegionForm,
    alphabets: Alphabets,
    state_pmf: Vec<f64>,
    transition: Vec<f64>,
}

fn check_rows(
    table: &'static str,
    values: &[f64],
    rows: usize,
    cols: usize,
) -> Result<(), DiscreteError> {
    if values.len() != rows * cols {
        return Err(DiscreteError::AuxLength {
            table,
            expected: rows * cols,
            actual: values.len(),
        });
    }
    for (index, &value) in values.iter().enumerate() {
        if value.is_nan() || value < 0.0 {
            return Err(DiscreteError::AuxNegative { table, index, value });
        }
    }
    for row in 0..rows {
        let sum: f64 = values[row * cols..(row + 1) * cols].iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(DiscreteError::AuxRowUnnormalized { table, row, sum });
        }
    }
    Ok(())
}

impl DiscreteChannelSpec {
    pub fn new(
        form: RegionForm,
        alphabets: Alphabets,
        state_pmf: Vec<f64>,
        transition: Vec<f64>,
    ) -> Result<Self, DiscreteError> {
        let spec = Self { form, alphabets, state_pmf, transition };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self, DiscreteError> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), DiscreteError> {
        let a = &self.alphabets;
        for (name, size) in [
            ("x1", a.x1),
            ("x2", a.x2),
            ("s1", a.s1),
            ("s2", a.s2),
            ("y", a.y),
        ] {
            if size == 0 {
                return Err(DiscreteError::EmptyAlphabet { name });
            }
        }
        match (self.form, a.s0) {
            (RegionForm::CorrelatedStates, Some(_)) => return Err(DiscreteError::UnexpectedS0),
            (RegionForm::CommonState, None) => return Err(DiscreteError::MissingS0),
            (RegionForm::CommonState, Some(0)) => {
                return Err(DiscreteError::EmptyAlphabet { name: "s0" })
            }
            _ => {}
        }
        let state_cells = self.state_cells();
        if self.state_pmf.len() != state_cells {
            return Err(DiscreteError::StatePmfLength {
                expected: state_cells,
                actual: self.state_pmf.len(),
            });
        }
        for (index, &value) in self.state_pmf.iter().enumerate() {
            if value.is_nan() || value < 0.0 {
                return Err(DiscreteError::StatePmfNegative { index, value });
            }
        }
        let sum: f64 = self.state_pmf.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(DiscreteError::StatePmfUnnormalized { sum });
        }
        if self.form == RegionForm::CommonState {
            self.check_state_independence()?;
        }
        let rows = a.x1 * a.x2 * state_cells;
        if self.transition.len() != rows * a.y {
            return Err(DiscreteError::TransitionLength {
                expected: rows * a.y,
                actual: self.transition.len(),
            });
        }
        for (index, &value) in self.transition.iter().enumerate() {
            if value.is_nan() || value < 0.0 {
                return Err(DiscreteError::TransitionNegative { index, value });
            }
        }
        for row in 0..rows {
            let sum: f64 = self.transition[row * a.y..(row + 1) * a.y].iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(DiscreteError::TransitionRowUnnormalized { row, sum });
            }
        }
        Ok(())
    }

    fn check_state_independence(&self) -> Result<(), DiscreteError> {
        let a = &self.alphabets;
        let s0 = a.s0.unwrap_or(1);
        let mut m0 = vec![0.0; s0];
        let mut m1 = vec![0.0; a.s1];
        let mut m2 = vec![0.0; a.s2];
        for i0 in 0..s0 {
            for i1 in 0..a.s1 {
                for i2 in 0..a.s2 {
                    let p = self.state_pmf[(i0 * a.s1 + i1) * a.s2 + i2];
                    m0[i0] += p;
                    m1[i1] += p;
                    m2[i2] += p;
                }
            }
        }
        for i0 in 0..s0 {
            for i1 in 0..a.s1 {
                for i2 in 0..a.s2 {
                    let index = (i0 * a.s1 + i1) * a.s2 + i2;
                    let actual = self.state_pmf[index];
                    let expected = m0[i0] * m1[i1] * m2[i2];
                    if (actual - expected).abs() > ROW_TOLERANCE {
                        return Err(DiscreteError::StateNotIndependent {
                            index,
                            actual,
                            expected,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn form(&self) -> RegionForm {
        self.form
    }

    pub fn alphabets(&self) -> &Alphabets {
        &self.alphabets
    }

    pub fn state_pmf(&self) -> &[f64] {
        &self.state_pmf
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    fn state_cells(&self) -> usize {
        self.alphabets.s0.unwrap_or(1) * self.alphabets.s1 * self.alphabets.s2
    }

    /// Transition probability P(y | x1, x2, states), with the state index
    /// already flattened row-major.
    fn channel(&self, x1: usize, x2: usize, state: usize, y: usize) -> f64 {
        let a = &self.alphabets;
        let row = (x1 * a.x2 + x2) * self.state_cells() + state;
        self.transition[row * a.y + y]
    }
}

/// Auxiliary alphabet sizes for U, V1, V2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AuxSizes {
    pub u: usize,
    pub v1: usize,
    pub v2: usize,
}

impl AuxSizes {
    /// Default sizes: |U| = |X1||X2| and |V_i| large enough to emulate any
    /// deterministic function of (X_i, states the encoder sees).
    pub fn default_for(spec: &DiscreteChannelSpec) -> Self {
        let a = spec.alphabets();
        let s0 = a.s0.unwrap_or(1);
        match spec.form() {
            RegionForm::CorrelatedStates => Self {
                u: a.x1 * a.x2,
                v1: a.x1 * a.s1,
                v2: a.x2 * a.s2,
            },
            RegionForm::CommonState => Self {
                u: a.x1 * a.x2,
                v1: a.x1 * s0 * a.s1,
                v2: a.x2 * s0 * a.s2,
            },
        }
    }
}

/// One point of the achievable region's parameter space: the distributions
/// of U and of each encoder's (X_i, V_i) pair.
///
/// Row layouts, all row-major with the column index fastest:
/// - `p_u`: for t1 a single row over U; for t2 one row per s0 value.
/// - `p_x1v1`: rows (u, s1) for t1, (u, s0, s1) for t2; columns (x1, v1).
/// - `p_x2v2`: rows (u, s2) for t1, (u, s0, s2) for t2; columns (x2, v2).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxFactorization {
    sizes: AuxSizes,
    p_u: Vec<f64>,
    p_x1v1: Vec<f64>,
    p_x2v2: Vec<f64>,
}

/// Row and column counts of the three tables for a given channel and sizes.
pub fn table_shape(spec: &DiscreteChannelSpec, sizes: &AuxSizes) -> [(usize, usize); 3] {
    let a = spec.alphabets();
    let s0 = a.s0.unwrap_or(1);
    let u_rows = match spec.form() {
        RegionForm::CorrelatedStates => 1,
        RegionForm::CommonState => s0,
    };
    [
        (u_rows, sizes.u),
        (sizes.u * s0 * a.s1, a.x1 * sizes.v1),
        (sizes.u * s0 * a.s2, a.x2 * sizes.v2),
    ]
}

impl AuxFactorization {
    pub fn new(
        spec: &DiscreteChannelSpec,
        sizes: AuxSizes,
        p_u: Vec<f64>,
        p_x1v1: Vec<f64>,
        p_x2v2: Vec<f64>,
    ) -> Result<Self, DiscreteError> {
        for (name, size) in [("u", sizes.u), ("v1", sizes.v1), ("v2", sizes.v2)] {
            if size == 0 {
                return Err(DiscreteError::EmptyAux { name });
            }
        }
        let [(u_rows, u_cols), (rows1, cols1), (rows2, cols2)] = table_shape(spec, &sizes);
        check_rows("p_u", &p_u, u_rows, u_cols)?;
        check_rows("p_x1v1", &p_x1v1, rows1, cols1)?;
        check_rows("p_x2v2", &p_x2v2, rows2, cols2)?;
        Ok(Self { sizes, p_u, p_x1v1, p_x2v2 })
    }

    pub fn sizes(&self) -> &AuxSizes {
        &self.sizes
    }
}

/// Variable positions in a composed t1 joint.
pub mod t1_var {
    pub const S1: usize = 0;
    pub const S2: usize = 1;
    pub const U: usize = 2;
    pub const V1: usize = 3;
    pub const V2: usize = 4;
    pub const X1: usize = 5;
    pub const X2: usize = 6;
    pub const Y: usize = 7;
}

/// Variable positions in a composed t2 joint.
pub mod t2_var {
    pub const S0: usize = 0;
    pub const S1: usize = 1;
    pub const S2: usize = 2;
    pub const U: usize = 3;
    pub const V1: usize = 4;
    pub const V2: usize = 5;
    pub const X1: usize = 6;
    pub const X2: usize = 7;
    pub const Y: usize = 8;
}

/// Number of cells the composed joint would occupy.
fn joint_cells(spec: &DiscreteChannelSpec, sizes: &AuxSizes) -> u128 {
    let a = spec.alphabets();
    let dims = [
        a.s0.unwrap_or(1),
        a.s1,
        a.s2,
        sizes.u,
        sizes.v1,
        sizes.v2,
        a.x1,
        a.x2,
        a.y,
    ];
    dims.iter().map(|&d| d as u128).product()
}

/// Composes the full joint pmf of states, auxiliaries, inputs, and output
/// under the channel's factorization. Refuses joints over
/// [`MAX_JOINT_CELLS`]. The result's variable order is [`t1_var`] or
/// [`t2_var`] according to the channel form.
pub fn compose_joint(
    spec: &DiscreteChannelSpec,
    aux: &AuxFactorization,
) -> Result<JointPmf, DiscreteError> {
    let cells = joint_cells(spec, &aux.sizes);
    if cells > MAX_JOINT_CELLS as u128 {
        return Err(DiscreteError::CapacityExceeded { cells });
    }
    let a = spec.alphabets();
    let s0_size = a.s0.unwrap_or(1);
    let sz = &aux.sizes;
    let dims: Vec<usize> = match spec.form() {
        RegionForm::CorrelatedStates => {
            vec![a.s1, a.s2, sz.u, sz.v1, sz.v2, a.x1, a.x2, a.y]
        }
        RegionForm::CommonState => {
            vec![s0_size, a.s1, a.s2, sz.u, sz.v1, sz.v2, a.x1, a.x2, a.y]
        }
    };
    let mut probs = vec![0.0f64; cells as usize];
    let cols1 = a.x1 * sz.v1;
    let cols2 = a.x2 * sz.v2;
    for s0 in 0..s0_size {
        for s1 in 0..a.s1 {
            for s2 in 0..a.s2 {
                let state = (s0 * a.s1 + s1) * a.s2 + s2;
                let p_state = spec.state_pmf[state];
                if p_state == 0.0 {
                    continue;
                }
                for u in 0..sz.u {
                    let p_u = match spec.form() {
                        RegionForm::CorrelatedStates => aux.p_u[u],
                        RegionForm::CommonState => aux.p_u[s0 * sz.u + u],
                    };
                    if p_u == 0.0 {
                        continue;
                    }
                    let row1 = match spec.form() {
                        RegionForm::CorrelatedStates => u * a.s1 + s1,
                        RegionForm::CommonState => (u * s0_size + s0) * a.s1 + s1,
                    };
                    let row2 = match spec.form() {
                        RegionForm::CorrelatedStates => u * a.s2 + s2,
                        RegionForm::CommonState => (u * s0_size + s0) * a.s2 + s2,
                    };
                    for x1 in 0..a.x1 {
                        for v1 in 0..sz.v1 {
                            let p1 = aux.p_x1v1[row1 * cols1 + x1 * sz.v1 + v1];
                            if p1 == 0.0 {
                                continue;
                            }
                            for x2 in 0..a.x2 {
                                for v2 in 0..sz.v2 {
                                    let p2 = aux.p_x2v2[row2 * cols2 + x2 * sz.v2 + v2];
                                    if p2 == 0.0 {
                                        continue;
                                    }
                                    let stem = p_state * p_u * p1 * p2;
                                    for y in 0..a.y {
                                        let p = stem * spec.channel(x1, x2, state, y);
                                        if p == 0.0 {
                                            continue;
                                        }
                                        let index = match spec.form() {
                                            RegionForm::CorrelatedStates => {
                                                ((((((s1 * a.s2 + s2) * sz.u + u) * sz.v1
                                                    + v1)
                                                    * sz.v2
                                                    + v2)
                                                    * a.x1
                                                    + x1)
                                                    * a.x2
                                                    + x2)
                                                    * a.y
                                                    + y
                                            }
                                            RegionForm::CommonState => {
                                                (((((((s0 * a.s1 + s1) * a.s2 + s2) * sz.u
                                                    + u)
                                                    * sz.v1
                                                    + v1)
                                                    * sz.v2
                                                    + v2)
                                                    * a.x1
                                                    + x1)
                                                    * a.x2
                                                    + x2)
                                                    * a.y
                                                    + y
                                            }
                                        };
                                        probs[index] += p;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > COMPOSE_TOLERANCE {
        return Err(DiscreteError::ComposedMassDrift { sum: total });
    }
    // Divide out the accumulated float drift so entropy sums downstream see
    // an exactly normalized pmf.
    for p in &mut probs {
        *p /= total;
    }
    Ok(JointPmf::new(dims, probs)?)
}

fn expect_form(
    spec: &DiscreteChannelSpec,
    operation: &'static str,
    expected: RegionForm,
) -> Result<(), DiscreteError> {
    if spec.form() != expected {
        return Err(DiscreteError::WrongForm {
            operation,
            expected: expected.tag(),
            actual: spec.form().tag(),
        });
    }
    Ok(())
}

/// Bound triple of a correlated-states (t1) channel under one auxiliary
/// factorization:
///
/// ```text
/// R1  <= I(X1;V1|U,S2) - I(V1;S1|U,S2)
/// R2  <= I(X2;V2|U,S1) - I(V2;S2|U,S1)
/// sum <= I(Y;V1,V2,U) - I(V1,V2;S1,S2|U)
/// ```
pub fn correlated_bounds(
    spec: &DiscreteChannelSpec,
    aux: &AuxFactorization,
) -> Result<RateTriple, DiscreteError> {
    expect_form(spec, "correlated_bounds", RegionForm::CorrelatedStates)?;
    let joint = compose_joint(spec, aux)?;
    use t1_var::{S1, S2, U, V1, V2, X1, X2, Y};
    let r1 = joint.conditional_mutual_information(&[X1], &[V1], &[U, S2])?
        - joint.conditional_mutual_information(&[V1], &[S1], &[U, S2])?;
    let r2 = joint.conditional_mutual_information(&[X2], &[V2], &[U, S1])?
        - joint.conditional_mutual_information(&[V2], &[S2], &[U, S1])?;
    let sum = joint.conditional_mutual_information(&[Y], &[V1, V2, U], &[])?
        - joint.conditional_mutual_information(&[V1, V2], &[S1, S2], &[U])?;
    Ok(RateTriple::new(r1, r2, sum))
}

/// Bound triple of a common-state (t2) channel under one auxiliary
/// factorization:
///
/// ```text
/// R1  <= I(X1;V1|U,S0) - I(V1;S1|U,S0)
/// R2  <= I(X2;V2|U,S0) - I(V2;S2|U,S0)
/// sum <= I(Y;V1,V2,U) - I(U,V1,V2;S0,S1,S2)
/// ```
pub fn common_state_bounds(
    spec: &DiscreteChannelSpec,
    aux: &AuxFactorization,
) -> Result<RateTriple, DiscreteError> {
    expect_form(spec, "common_state_bounds", RegionForm::CommonState)?;
    let joint = compose_joint(spec, aux)?;
    use t2_var::{S0, S1, S2, U, V1, V2, X1, X2, Y};
    let r1 = joint.conditional_mutual_information(&[X1], &[V1], &[U, S0])?
        - joint.conditional_mutual_information(&[V1], &[S1], &[U, S0])?;
    let r2 = joint.conditional_mutual_information(&[X2], &[V2], &[U, S0])?
        - joint.conditional_mutual_information(&[V2], &[S2], &[U, S0])?;
    let sum = joint.conditional_mutual_information(&[Y], &[V1, V2, U], &[])?
        - joint.conditional_mutual_information(&[U, V1, V2], &[S0, S1, S2], &[])?;
    Ok(RateTriple::new(r1, r2, sum))
}

/// Both sides of the cross-state rewriting of the individual bounds on a t1
/// channel: conditioning on the other encoder's state can be traded for
/// adjoining it to the decoded pair,
///
/// ```text
/// I(X1;V1|U,S2) - I(V1;S1|U,S2)  =  I(X1,S2;V1|U) - I(V1;S1|U)
/// ```
///
/// and symmetrically for encoder 2. The identity holds for every
/// factorization the composer can produce, but not for arbitrary joints.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossStateIdentityReport {
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
}

impl CrossStateIdentityReport {
    pub fn max_abs_delta(&self) -> f64 {
        (self.lhs[0] - self.rhs[0])
            .abs()
            .max((self.lhs[1] - self.rhs[1]).abs())
    }

    pub fn pass(&self, tolerance: f64) -> bool {
        self.max_abs_delta() < tolerance
    }
}

pub fn check_cross_state_identity(
    spec: &DiscreteChannelSpec,
    aux: &AuxFactorization,
) -> Result<CrossStateIdentityReport, DiscreteError> {
    expect_form(spec, "check_cross_state_identity", RegionForm::CorrelatedStates)?;
    let joint = compose_joint(spec, aux)?;
    use t1_var::{S1, S2, U, V1, V2, X1, X2};
    let lhs1 = joint.conditional_mutual_information(&[X1], &[V1], &[U, S2])?
        - joint.conditional_mutual_information(&[V1], &[S1], &[U, S2])?;
    let rhs1 = joint.conditional_mutual_information(&[X1, S2], &[V1], &[U])?
        - joint.conditional_mutual_information(&[V1], &[S1], &[U])?;
    let lhs2 = joint.conditional_mutual_information(&[X2], &[V2], &[U, S1])?
        - joint.conditional_mutual_information(&[V2], &[S2], &[U, S1])?;
    let rhs2 = joint.conditional_mutual_information(&[X2, S1], &[V2], &[U])?
        - joint.conditional_mutual_information(&[V2], &[S2], &[U])?;
    Ok(CrossStateIdentityReport {
        lhs: [lhs1, lhs2],
        rhs: [rhs1, rhs2],
    })
}

fn bounds_for(
    spec: &DiscreteChannelSpec,
    aux: &AuxFactorization,
) -> Result<RateTriple, DiscreteError> {
    match spec.form() {
        RegionForm::CorrelatedStates => correlated_bounds(spec, aux),
        RegionForm::CommonState => common_state_bounds(spec, aux),
    }
}

/// Cost model of one search sample: the initial evaluation plus every probe
/// across all rounds (two probes per row cell: a blend toward that vertex
/// and a removal of it), whether or not a probe is accepted. Constant per
/// sample, which is what lets full samples run in parallel while budgets
/// stay prefix-stable.
fn sample_cost(spec: &DiscreteChannelSpec, sizes: &AuxSizes) -> u64 {
    let per_pass: u64 = table_shape(spec, sizes)
        .iter()
        .map(|&(rows, cols)| (rows * cols) as u64)
        .sum();
    1 + SEARCH_ROUNDS as u64 * 2 * per_pass
}

struct SampleRun {
    tables: [Vec<f64>; 3],
    shapes: [(usize, usize); 3],
    evaluated: Vec<RateTriple>,
    evals_left: u64,
}

impl SampleRun {
    fn aux(
        &self,
        spec: &DiscreteChannelSpec,
        sizes: &AuxSizes,
    ) -> Result<AuxFactorization, DiscreteError> {
        AuxFactorization::new(
            spec,
            *sizes,
            self.tables[0].clone(),
            self.tables[1].clone(),
            self.tables[2].clone(),
        )
    }

    fn evaluate(
        &mut self,
        spec: &DiscreteChannelSpec,
        sizes: &AuxSizes,
    ) -> Result<Option<RateTriple>, DiscreteError> {
        if self.evals_left == 0 {
            return Ok(None);
        }
        self.evals_left -= 1;
        let aux = self.aux(spec, sizes)?;
        let triple = bounds_for(spec, &aux)?;
        self.evaluated.push(triple);
        Ok(Some(triple))
    }
}

fn normalize_row(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    for value in row.iter_mut() {
        *value /= sum;
    }
}

/// Writes one probe of `base` into `slot`. Probes 0..cols blend toward each
/// vertex, (1-tau) base + tau e_j; probes cols..2*cols remove cell j - cols
/// outright and renormalize. Removal has to be all-or-nothing: the entropy
/// cost of residual mass eps scales like eps log(1/eps), so mass that only
/// decays geometrically never stops hurting. A removal that would empty the
/// row degenerates to the base row itself (never a strict improvement, so
/// never accepted). Blends can rebuild a removed cell later, so removals are
/// not traps.
fn write_probe(slot: &mut [f64], base: &[f64], probe: usize, tau: f64) {
    let cols = base.len();
    if probe < cols {
        for (k, value) in slot.iter_mut().enumerate() {
            *value = (1.0 - tau) * base[k] + if k == probe { tau } else { 0.0 };
        }
    } else {
        let target = probe - cols;
        if 1.0 - base[target] <= 0.0 {
            slot.copy_from_slice(base);
            return;
        }
        for (k, value) in slot.iter_mut().enumerate() {
            *value = if k == target { 0.0 } else { base[k] };
        }
    }
    normalize_row(slot);
}

/// One seeded sample: random Dirichlet(1) tables refined by coordinate
/// ascent on the support objective for this sample's direction. Returns
/// every triple evaluated on the way, at most `eval_budget` of them.
fn run_sample(
    spec: &DiscreteChannelSpec,
    sizes: &AuxSizes,
    seed: u64,
    sample_index: u64,
    eval_budget: u64,
) -> Result<Vec<RateTriple>, DiscreteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample_index);
    let shapes = table_shape(spec, sizes);
    let tables: [Vec<f64>; 3] = shapes.map(|(rows, cols)| {
        let mut table = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let start = table.len();
            for _ in 0..cols {
                let draw: f64 = Exp1.sample(&mut rng);
                table.push(draw);
            }
            normalize_row(&mut table[start..]);
        }
        table
    });
    let mut run = SampleRun {
        tables,
        shapes,
        evaluated: Vec::new(),
        evals_left: eval_budget,
    };
    // Stride the direction cycle by a coprime step so that even a handful of
    // samples fan out over the quadrant instead of clustering near the R1
    // axis.
    let direction = (sample_index * 13) % SEARCH_DIRECTIONS as u64;
    let angle =
        std::f64::consts::FRAC_PI_2 * direction as f64 / (SEARCH_DIRECTIONS - 1) as f64;
    let (dx, dy) = (angle.cos(), angle.sin());
    let mut objective = match run.evaluate(spec, sizes)? {
        Some(triple) => triple.support(dx, dy),
        None => return Ok(run.evaluated),
    };
    for round in 0..SEARCH_ROUNDS {
        let tau = 0.5f64.powi(round as i32);
        for table_index in 0..3 {
            let (rows, cols) = run.shapes[table_index];
            for row in 0..rows {
                let base: Vec<f64> =
                    run.tables[table_index][row * cols..(row + 1) * cols].to_vec();
                let mut best: Option<(f64, usize)> = None;
                for probe in 0..2 * cols {
                    write_probe(
                        &mut run.tables[table_index][row * cols..(row + 1) * cols],
                        &base,
                        probe,
                        tau,
                    );
                    let triple = match run.evaluate(spec, sizes)? {
                        Some(triple) => triple,
                        None => {
                            // Budget ran out mid-probe; restore the row and
                            // stop.
                            run.tables[table_index][row * cols..(row + 1) * cols]
                                .copy_from_slice(&base);
                            return Ok(run.evaluated);
                        }
                    };
                    let value = triple.support(dx, dy);
                    if value > objective && best.is_none_or(|(b, _)| value > b) {
                        best = Some((value, probe));
                    }
                }
                let slot = &mut run.tables[table_index][row * cols..(row + 1) * cols];
                match best {
                    Some((value, probe)) => {
                        write_probe(slot, &base, probe, tau);
                        objective = value;
                    }
                    None => slot.copy_from_slice(&base),
                }
            }
        }
    }
    Ok(run.evaluated)
}

/// Inner bound on the achievable region by randomized search: seeded
/// Dirichlet starting points, coordinate-ascent refinement along a cycle of
/// support directions, and the convex hull of every bound triple evaluated
/// anywhere along the way. `budget` counts bound evaluations exactly, so
/// results are deterministic for a (channel, sizes, budget, seed) quadruple
/// regardless of thread count, and a larger budget never shrinks the
/// region.
pub fn search_region(
    spec: &DiscreteChannelSpec,
    sizes: &AuxSizes,
    budget: u64,
    seed: u64,
) -> Result<RateRegion, DiscreteError> {
    if budget == 0 {
        return Err(DiscreteError::ZeroBudget);
    }
    for (name, size) in [("u", sizes.u), ("v1", sizes.v1), ("v2", sizes.v2)] {
        if size == 0 {
            return Err(DiscreteError::EmptyAux { name });
        }
    }
    let cells = joint_cells(spec, sizes);
    if cells > MAX_JOINT_CELLS as u128 {
        return Err(DiscreteError::CapacityExceeded { cells });
    }
    let cost = sample_cost(spec, sizes);
    let full_samples = budget / cost;
    let remainder = budget % cost;
    let mut batches: Vec<Vec<RateTriple>> = (0..full_samples)
        .into_par_iter()
        .map(|index| run_sample(spec, sizes, seed, index, cost))
        .collect::<Result<_, _>>()?;
    if remainder > 0 {
        batches.push(run_sample(spec, sizes, seed, full_samples, remainder)?);
    }
    let regions: Vec<RateRegion> = batches
        .into_iter()
        .flatten()
        .map(RateRegion::from_triple)
        .collect();
    Ok(RateRegion::hull_union(&regions)?)
}
