//! Gaussian MAC with additive states: the coding scheme's closed-form sum
//! rate, the derived cancellation coefficients, a deterministic grid
//! optimizer over power splits, and the benchmark scenario regions.
//!
//! Each encoder i spends its power budget three ways. A fraction
//! `1 - eta_i` is spent subtracting the private state S_i off the channel
//! ("cleaning", scaling S_i by `1 - sqrt((1-eta_i) P_i / Q_i)`), and the
//! remaining `eta_i P_i` is split by `alpha_i` between a common codeword
//! component and a private one. Both message streams are dirty-paper coded,
//! the common stream against the common state S_0 and each private stream
//! against the residual private state, so neither state variance appears in
//! the closed form; only cleaned residues do:
//!
//! ```text
//! c_u = sqrt(alpha1 eta1 P1) + sqrt(alpha2 eta2 P2)
//! c_i = sqrt((1-alpha_i) eta_i P_i)
//! Q'_i = (sqrt(Q_i) - sqrt((1-eta_i) P_i))^2
//! sum rate = 1/2 log2[ (1 + c_u^2 / (c1^2 + c2^2 + Q'_1 + Q'_2 + N))
//!                    * (1 + c1^2 / (c2^2 + Q'_2 + N))
//!                    * (1 + c2^2 / (c1^2 + Q'_1 + N)) ]
//! ```

use crate::region::{RateRegion, RateTriple};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Grid points per optimizer axis.
const GRID_POINTS: usize = 17;

/// Local refinement rounds after the grid pass, each halving the step.
const REFINE_ROUNDS: i32 = 3;

/// Slack allowed below the cleaning feasibility floor when validating a
/// user-supplied split.
const ETA_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("noise variance must be positive, got {value}")]
    NonPositiveNoise { value: f64 },
    #[error("{name} must lie in [0, 1], got {value}")]
    OutOfUnitRange { name: &'static str, value: f64 },
    #[error(
        "eta{encoder} = {eta} is below the cleaning feasibility floor {floor} \
         (cannot spend more than min(P{encoder}, Q{encoder}) on cleaning)"
    )]
    EtaBelowFloor { encoder: u8, eta: f64, floor: f64 },
    #[error("encoder {encoder} has zero power, which forces eta{encoder} = 1, got {eta}")]
    EtaWithoutPower { encoder: u8, eta: f64 },
}

/// Channel parameters: transmit powers P1, P2, state variances Q0 (common),
/// Q1, Q2 (private), and noise variance N. Powers and state variances may be
/// zero; the noise variance must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMacConfig {
    p1: f64,
    p2: f64,
    q0: f64,
    q1: f64,
    q2: f64,
    n: f64,
}

fn check_finite(name: &'static str, value: f64) -> Result<(), SchemeError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(SchemeError::NonFinite { name, value })
    }
}

impl GaussianMacConfig {
    pub fn new(p1: f64, p2: f64, q0: f64, q1: f64, q2: f64, n: f64) -> Result<Self, SchemeError> {
        for (name, value) in [
            ("p1", p1),
            ("p2", p2),
            ("q0", q0),
            ("q1", q1),
            ("q2", q2),
            ("n", n),
        ] {
            check_finite(name, value)?;
        }
        for (name, value) in [("p1", p1), ("p2", p2), ("q0", q0), ("q1", q1), ("q2", q2)] {
            if value < 0.0 {
                return Err(SchemeError::Negative { name, value });
            }
        }
        if n <= 0.0 {
            return Err(SchemeError::NonPositiveNoise { value: n });
        }
        Ok(Self { p1, p2, q0, q1, q2, n })
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn q2(&self) -> f64 {
        self.q2
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    /// Lowest feasible eta per encoder: cleaning can spend at most
    /// min(P_i, Q_i), so eta_i >= 1 - min(1, Q_i / P_i). An encoder with
    /// zero power has floor 1 (nothing to spend at all).
    pub fn eta_floor(&self) -> (f64, f64) {
        let floor = |p: f64, q: f64| {
            if p == 0.0 {
                1.0
            } else {
                1.0 - (q / p).min(1.0)
            }
        };
        (floor(self.p1, self.q1), floor(self.p2, self.q2))
    }
}

/// Per-encoder power split: `eta_i` is the fraction kept for coding (the
/// rest cleans the private state), `alpha_i` the fraction of the coding
/// power given to the common stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerSplit {
    eta1: f64,
    eta2: f64,
    alpha1: f64,
    alpha2: f64,
}

impl PowerSplit {
    pub fn new(eta1: f64, eta2: f64, alpha1: f64, alpha2: f64) -> Result<Self, SchemeError> {
        for (name, value) in [
            ("eta1", eta1),
            ("eta2", eta2),
            ("alpha1", alpha1),
            ("alpha2", alpha2),
        ] {
            check_finite(name, value)?;
            if !(0.0..=1.0).contains(&value) {
                return Err(SchemeError::OutOfUnitRange { name, value });
            }
        }
        Ok(Self { eta1, eta2, alpha1, alpha2 })
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    /// Checks the split against a config's feasibility floors.
    pub fn validate_for(&self, cfg: &GaussianMacConfig) -> Result<(), SchemeError> {
        let (floor1, floor2) = cfg.eta_floor();
        for (encoder, p, eta, floor) in [
            (1u8, cfg.p1, self.eta1, floor1),
            (2u8, cfg.p2, self.eta2, floor2),
        ] {
            if p == 0.0 {
                if eta != 1.0 {
                    return Err(SchemeError::EtaWithoutPower { encoder, eta });
                }
            } else if eta < floor - ETA_SLACK {
                return Err(SchemeError::EtaBelowFloor { encoder, eta, floor });
            }
        }
        Ok(())
    }

    fn lex_key(&self) -> [f64; 4] {
        [self.eta1, self.eta2, self.alpha1, self.alpha2]
    }
}

/// Intermediate quantities of the scheme, shared by the closed form, the
/// coefficient derivation, and the covariance oracle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SchemeTerms {
    /// Common-stream amplitudes sqrt(alpha_i eta_i P_i).
    pub cu1: f64,
    pub cu2: f64,
    /// Private-stream amplitudes sqrt((1-alpha_i) eta_i P_i).
    pub c1: f64,
    pub c2: f64,
    /// Cleaning gains sqrt((1-eta_i) P_i / Q_i), zero when Q_i = 0.
    pub r1: f64,
    pub r2: f64,
    /// Residual private-state variances (sqrt(Q_i) - sqrt((1-eta_i) P_i))^2.
    pub q1p: f64,
    pub q2p: f64,
    /// Total received variance apart from the common state:
    /// (cu1+cu2)^2 + c1^2 + c2^2 + Q'_1 + Q'_2 + N.
    pub d: f64,
}

pub(crate) fn scheme_terms(cfg: &GaussianMacConfig, split: &PowerSplit) -> SchemeTerms {
    let amp = |alpha: f64, eta: f64, p: f64| (alpha * eta * p).sqrt();
    let cu1 = amp(split.alpha1, split.eta1, cfg.p1);
    let cu2 = amp(split.alpha2, split.eta2, cfg.p2);
    let c1 = amp(1.0 - split.alpha1, split.eta1, cfg.p1);
    let c2 = amp(1.0 - split.alpha2, split.eta2, cfg.p2);
    let clean = |eta: f64, p: f64, q: f64| {
        if q == 0.0 {
            0.0
        } else {
            ((1.0 - eta) * p / q).sqrt()
        }
    };
    let r1 = clean(split.eta1, cfg.p1, cfg.q1);
    let r2 = clean(split.eta2, cfg.p2, cfg.q2);
    let residue = |eta: f64, p: f64, q: f64| {
        let root = q.sqrt() - ((1.0 - eta) * p).sqrt();
        root * root
    };
    let q1p = residue(split.eta1, cfg.p1, cfg.q1);
    let q2p = residue(split.eta2, cfg.p2, cfg.q2);
    let cu = cu1 + cu2;
    let d = cu * cu + c1 * c1 + c2 * c2 + q1p + q2p + cfg.n;
    SchemeTerms { cu1, cu2, c1, c2, r1, r2, q1p, q2p, d }
}

/// Estimator coefficients of the scheme's three auxiliary codewords, all
/// MMSE ratios against the received signal. `gamma0` scales the common
/// codeword, `gamma1`/`gamma2` the private codewords against their residual
/// states, `gamma01`/`gamma02` the private codewords against the common
/// state. Residual variances `q1p`/`q2p` ride along for convenience.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SchemeCoefficients {
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma01: f64,
    pub gamma02: f64,
    pub q1p: f64,
    pub q2p: f64,
}

pub fn derive_coefficients(
    cfg: &GaussianMacConfig,
    split: &PowerSplit,
) -> Result<SchemeCoefficients, SchemeError> {
    split.validate_for(cfg)?;
    let t = scheme_terms(cfg, split);
    let gamma0 = (t.cu1 + t.cu2) / t.d;
    let gamma1 = t.c1 / (t.c1 * t.c1 + t.c2 * t.c2 + t.q2p + cfg.n);
    let gamma2 = t.c2 / (t.c1 * t.c1 + t.c2 * t.c2 + t.q1p + cfg.n);
    let gamma01 = (t.c1 + gamma1 * t.q1p) / t.d;
    let gamma02 = (t.c2 + gamma2 * t.q2p) / t.d;
    Ok(SchemeCoefficients {
        gamma0,
        gamma1,
        gamma2,
        gamma01,
        gamma02,
        q1p: t.q1p,
        q2p: t.q2p,
    })
}

fn closed_form(cfg: &GaussianMacConfig, split: &PowerSplit) -> f64 {
    let t = scheme_terms(cfg, split);
    let cu = t.cu1 + t.cu2;
    let f1 = 1.0 + cu * cu / (t.c1 * t.c1 + t.c2 * t.c2 + t.q1p + t.q2p + cfg.n);
    let f2 = 1.0 + t.c1 * t.c1 / (t.c2 * t.c2 + t.q2p + cfg.n);
    let f3 = 1.0 + t.c2 * t.c2 / (t.c1 * t.c1 + t.q1p + cfg.n);
    0.5 * (f1 * f2 * f3).log2()
}

/// Closed-form sum rate of the scheme in bits per channel use. Neither Q0
/// nor the cleaned parts of Q1, Q2 appear: the common state is fully
/// pre-cancelled and the private states survive only as residues.
pub fn sum_rate(cfg: &GaussianMacConfig, split: &PowerSplit) -> Result<f64, SchemeError> {
    split.validate_for(cfg)?;
    Ok(closed_form(cfg, split))
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

type Candidate = (f64, PowerSplit);

/// Total order used by the optimizer: higher value wins, ties go to the
/// lexicographically smallest split, making parallel reduction
/// order-independent.
fn better(a: Candidate, b: Candidate) -> Candidate {
    if a.0 > b.0 {
        a
    } else if b.0 > a.0 {
        b
    } else if a.1.lex_key() <= b.1.lex_key() {
        a
    } else {
        b
    }
}

struct Axes {
    eta1: Vec<f64>,
    eta2: Vec<f64>,
    alpha1: Vec<f64>,
    alpha2: Vec<f64>,
}

impl Axes {
    fn full(cfg: &GaussianMacConfig) -> Self {
        let (floor1, floor2) = cfg.eta_floor();
        Self {
            eta1: linspace(floor1, 1.0, GRID_POINTS),
            eta2: linspace(floor2, 1.0, GRID_POINTS),
            alpha1: Self::alpha_axis(cfg.p1),
            alpha2: Self::alpha_axis(cfg.p2),
        }
    }

    fn no_cleaning(cfg: &GaussianMacConfig) -> Self {
        Self {
            eta1: vec![1.0],
            eta2: vec![1.0],
            alpha1: Self::alpha_axis(cfg.p1),
            alpha2: Self::alpha_axis(cfg.p2),
        }
    }

    fn alpha_axis(p: f64) -> Vec<f64> {
        if p == 0.0 {
            vec![0.0]
        } else {
            linspace(0.0, 1.0, GRID_POINTS)
        }
    }

    fn lists(&self) -> [&[f64]; 4] {
        [&self.eta1, &self.eta2, &self.alpha1, &self.alpha2]
    }
}

fn optimize_on_axes(cfg: &GaussianMacConfig, axes: &Axes) -> Candidate {
    let lists = axes.lists();
    let counts = [lists[0].len(), lists[1].len(), lists[2].len(), lists[3].len()];
    let total: usize = counts.iter().product();
    let split_at = |index: usize| {
        let mut rem = index;
        let i4 = rem % counts[3];
        rem /= counts[3];
        let i3 = rem % counts[2];
        rem /= counts[2];
        let i2 = rem % counts[1];
        let i1 = rem / counts[1];
        PowerSplit {
            eta1: lists[0][i1],
            eta2: lists[1][i2],
            alpha1: lists[2][i3],
            alpha2: lists[3][i4],
        }
    };
    let mut best = (0..total)
        .into_par_iter()
        .map(|index| {
            let split = split_at(index);
            (closed_form(cfg, &split), split)
        })
        .reduce_with(better)
        .expect("axes are non-empty");

    let bounds: [(f64, f64); 4] = [
        (lists[0][0], *lists[0].last().unwrap()),
        (lists[1][0], *lists[1].last().unwrap()),
        (lists[2][0], *lists[2].last().unwrap()),
        (lists[3][0], *lists[3].last().unwrap()),
    ];
    let spacing: Vec<f64> = lists
        .iter()
        .map(|axis| {
            if axis.len() > 1 {
                (axis.last().unwrap() - axis.first().unwrap()) / (axis.len() - 1) as f64
            } else {
                0.0
            }
        })
        .collect();
    for round in 1..=REFINE_ROUNDS {
        let scale = 0.5f64.powi(round);
        for combo in 0..81usize {
            let mut digits = combo;
            let mut coords = best.1.lex_key();
            for (k, coord) in coords.iter_mut().enumerate() {
                let delta = (digits % 3) as f64 - 1.0;
                digits /= 3;
                *coord = (*coord + delta * spacing[k] * scale).clamp(bounds[k].0, bounds[k].1);
            }
            let split = PowerSplit {
                eta1: coords[0],
                eta2: coords[1],
                alpha1: coords[2],
                alpha2: coords[3],
            };
            best = better(best, (closed_form(cfg, &split), split));
        }
    }
    best
}

/// Best split with both cleaning and dirty-paper coding available: a
/// 17-point grid per free axis followed by three halving refinement rounds,
/// also run with cleaning frozen off so the result never falls below
/// [`optimize_dpc_only`]. Deterministic for a fixed config regardless of
/// thread count.
pub fn optimize_sum_rate(cfg: &GaussianMacConfig) -> (PowerSplit, f64) {
    let full = optimize_on_axes(cfg, &Axes::full(cfg));
    let frozen = optimize_on_axes(cfg, &Axes::no_cleaning(cfg));
    let best = better(full, frozen);
    (best.1, best.0)
}

/// Best split with eta pinned to 1: dirty-paper coding only, no cleaning.
pub fn optimize_dpc_only(cfg: &GaussianMacConfig) -> (PowerSplit, f64) {
    let best = optimize_on_axes(cfg, &Axes::no_cleaning(cfg));
    (best.1, best.0)
}

/// Benchmark scenarios compared in the scenario sweep, ordered from least
/// to most capable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    UninformedSelfish,
    UninformedCooperating,
    InformedDpcOnly,
    InformedDpcCleaning,
    NoStateCapacity,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::UninformedSelfish,
        ScenarioId::UninformedCooperating,
        ScenarioId::InformedDpcOnly,
        ScenarioId::InformedDpcCleaning,
        ScenarioId::NoStateCapacity,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ScenarioId::UninformedSelfish => "uninformed-selfish",
            ScenarioId::UninformedCooperating => "uninformed-cooperating",
            ScenarioId::InformedDpcOnly => "informed-dpc-only",
            ScenarioId::InformedDpcCleaning => "informed-dpc-cleaning",
            ScenarioId::NoStateCapacity => "no-state-capacity",
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

fn half_log2_snr(signal: f64, noise: f64) -> f64 {
    0.5 * (1.0 + signal / noise).log2()
}

/// Rate region of one benchmark scenario.
///
/// The two uninformed scenarios treat every state as extra noise of variance
/// Q0 + Q1 + Q2: selfish encoders get the standard MAC pentagon, while full
/// cooperation pools amplitudes into a sum-rate triangle. The informed
/// scenarios run the scheme's optimizer (with cleaning disabled or enabled)
/// and give triangles at the optimized sum rate, since the common stream can
/// carry either message. The no-state benchmark is the cooperative capacity
/// of the clean channel.
pub fn scenario_region(cfg: &GaussianMacConfig, id: ScenarioId) -> RateRegion {
    let state_noise = cfg.n + cfg.q0 + cfg.q1 + cfg.q2;
    let pooled = {
        let amp = cfg.p1.sqrt() + cfg.p2.sqrt();
        amp * amp
    };
    let triple = match id {
        ScenarioId::UninformedSelfish => RateTriple::new(
            half_log2_snr(cfg.p1, state_noise),
            half_log2_snr(cfg.p2, state_noise),
            half_log2_snr(cfg.p1 + cfg.p2, state_noise),
        ),
        ScenarioId::UninformedCooperating => {
            let sum = half_log2_snr(pooled, state_noise);
            RateTriple::new(sum, sum, sum)
        }
        ScenarioId::InformedDpcOnly => {
            let (_, sum) = optimize_dpc_only(cfg);
            RateTriple::new(sum, sum, sum)
        }
        ScenarioId::InformedDpcCleaning => {
            let (_, sum) = optimize_sum_rate(cfg);
            RateTriple::new(sum, sum, sum)
        }
        ScenarioId::NoStateCapacity => {
            let sum = half_log2_snr(pooled, cfg.n);
            RateTriple::new(sum, sum, sum)
        }
    };
    RateRegion::from_triple(triple)
}

/// All five scenario regions in [`ScenarioId::ALL`] order.
pub fn scenario_sweep(cfg: &GaussianMacConfig) -> Vec<(ScenarioId, RateRegion)> {
    ScenarioId::ALL
        .iter()
        .map(|&id| (id, scenario_region(cfg, id)))
        .collect()
}
