//! Acceptance gate for the whole workspace: one test per release criterion,
//! each printing a single `acceptance N (...): pass` line on success. Every
//! tolerance and runtime budget is pinned here.

use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rate_region_core::discrete::{
    correlated_bounds, search_region, Alphabets, AuxFactorization, AuxSizes, DiscreteChannelSpec,
    RegionForm,
};
use rate_region_core::gaussian::{
    derive_coefficients, optimize_dpc_only, optimize_sum_rate, scenario_sweep, GaussianMacConfig,
    PowerSplit,
};
use rate_region_core::oracle::{build_with_gamma_offsets, GammaOffsets};
use rate_region_core::sweeps::{sweep_cross_state_identity, sweep_gaussian_identities};

fn reference_config() -> GaussianMacConfig {
    GaussianMacConfig::new(3.0, 3.0, 1.0, 1.0, 1.0, 1.0).unwrap()
}

#[test]
fn acceptance_1_state_free_optimum_is_immune_to_the_common_state() {
    let start = Instant::now();
    let target = 0.5 * 13.0f64.log2();
    for q0 in [0.0, 1.0, 10.0] {
        let cfg = GaussianMacConfig::new(3.0, 3.0, q0, 0.0, 0.0, 1.0).unwrap();
        let (_, value) = optimize_sum_rate(&cfg);
        assert!(
            (value - target).abs() < 1e-4,
            "q0 = {q0}: optimized {value} vs {target}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("acceptance 1 (common state costs nothing without private states): pass");
}

#[test]
fn acceptance_2_closed_form_agrees_with_the_oracle_on_seeded_draws() {
    let start = Instant::now();
    let outcome = sweep_gaussian_identities(200, 7, &GammaOffsets::default()).unwrap();
    let record = &outcome.closed_form_vs_oracle;
    assert!(
        record.pass && record.delta < 1e-9,
        "worst gap {} at lhs {} rhs {}",
        record.delta,
        record.lhs,
        record.rhs
    );
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!("acceptance 2 (closed form vs covariance oracle, 200 draws): pass");
}

#[test]
fn acceptance_3_estimator_identities_hold_and_perturbations_are_caught() {
    let outcome = sweep_gaussian_identities(200, 7, &GammaOffsets::default()).unwrap();
    assert!(
        outcome.state_decoupling.pass && outcome.state_decoupling.delta < 1e-8,
        "{:?}",
        outcome.state_decoupling
    );
    assert!(
        outcome.orthogonality.pass && outcome.orthogonality.delta < 1e-9,
        "{:?}",
        outcome.orthogonality
    );

    // Negative control: a shifted common-stream coefficient must be caught,
    // both as a gross offset and as a hair of relative error.
    let cfg = reference_config();
    let split = PowerSplit::new(1.0, 1.0, 0.5, 0.5).unwrap();
    let gross = GammaOffsets {
        gamma0: 0.1,
        ..GammaOffsets::default()
    };
    let scheme = build_with_gamma_offsets(&cfg, &split, &gross).unwrap();
    assert!(!scheme.verify_orthogonality().pass(1e-9));

    let gamma0 = derive_coefficients(&cfg, &split).unwrap().gamma0;
    let relative = GammaOffsets {
        gamma0: gamma0 * 1e-6,
        ..GammaOffsets::default()
    };
    let scheme = build_with_gamma_offsets(&cfg, &split, &relative).unwrap();
    assert!(!scheme.verify_orthogonality().pass(1e-9));
    println!("acceptance 3 (decoupling identities with perturbation control): pass");
}

#[test]
fn acceptance_4_scenario_chain_is_ordered_and_nested() {
    let start = Instant::now();
    let sweep = scenario_sweep(&reference_config());
    let sums: Vec<f64> = sweep.iter().map(|(_, r)| r.support(1.0, 1.0)).collect();
    assert!((sums[0] - 0.5 * 2.5f64.log2()).abs() < 1e-6, "selfish {}", sums[0]);
    assert!((sums[1] - 1.0).abs() < 1e-6, "cooperating {}", sums[1]);
    assert!(sums[2] >= 0.5 * 5.0f64.log2() - 1e-9, "dpc-only {}", sums[2]);
    assert!(sums[3] >= 3.0f64.log2() - 1e-9, "cleaning {}", sums[3]);
    assert!(
        (sums[4] - 0.5 * 13.0f64.log2()).abs() < 1e-6,
        "no-state {}",
        sums[4]
    );
    for pair in sums.windows(2) {
        assert!(pair[0] <= pair[1] + 1e-9, "ordering broken: {pair:?}");
    }
    for pair in sweep.windows(2) {
        assert!(
            pair[1].1.contains(&pair[0].1, 1e-9),
            "{} does not contain {}",
            pair[1].0.tag(),
            pair[0].0.tag()
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!("acceptance 4 (scenario sums ordered, regions nested): pass");
}

#[test]
fn acceptance_5_cleaning_beats_dirty_paper_coding_alone() {
    let cfg = reference_config();
    let (_, cleaned) = optimize_sum_rate(&cfg);
    let (_, dpc_only) = optimize_dpc_only(&cfg);
    assert!(
        cleaned - dpc_only >= 0.1,
        "cleaning {cleaned} vs dpc-only {dpc_only}"
    );
    println!("acceptance 5 (state cleaning adds at least a tenth of a bit): pass");
}

/// Independent oracle for criterion 6: the full-cooperation region
/// {R1 <= H(X1|U), R2 <= H(X2|U), R1+R2 <= I(Y;X1,X2)} of a binary-input
/// binary-output channel, maximized over p(u) p(x1|u) p(x2|u) with |U| = 4
/// by per-direction coordinate ascent. Own entropies, own geometry, own
/// optimizer; nothing shared with the library.
struct TwoUserChannel {
    /// P(Y = 1 | x1, x2).
    py1: [[f64; 2]; 2],
}

fn binary_entropy(p: f64) -> f64 {
    let mut total = 0.0;
    for q in [p, 1.0 - p] {
        if q > 0.0 {
            total -= q * q.log2();
        }
    }
    total
}

fn pentagon_support(h1: f64, h2: f64, s: f64, wx: f64, wy: f64) -> f64 {
    let m1 = h1.min(s);
    let m2 = h2.min(s);
    let candidates = [
        (m1, 0.0),
        (0.0, m2),
        (m1, (s - m1).max(0.0).min(h2)),
        ((s - m2).max(0.0).min(h1), m2),
    ];
    candidates
        .into_iter()
        .map(|(x, y)| wx * x + wy * y)
        .fold(0.0, f64::max)
}

impl TwoUserChannel {
    /// Params: four raw mixture weights, then P(x1 = 1 | u), then
    /// P(x2 = 1 | u).
    fn objective(&self, params: &[f64; 12], wx: f64, wy: f64) -> f64 {
        let mut pu = [0.0f64; 4];
        let mut total = 0.0;
        for u in 0..4 {
            pu[u] = params[u].max(1e-9);
            total += pu[u];
        }
        for weight in &mut pu {
            *weight /= total;
        }
        let a = &params[4..8];
        let b = &params[8..12];
        let mut h1 = 0.0;
        let mut h2 = 0.0;
        let mut q = [[0.0f64; 2]; 2];
        for u in 0..4 {
            h1 += pu[u] * binary_entropy(a[u]);
            h2 += pu[u] * binary_entropy(b[u]);
            for x1 in 0..2 {
                for x2 in 0..2 {
                    let pa = if x1 == 1 { a[u] } else { 1.0 - a[u] };
                    let pb = if x2 == 1 { b[u] } else { 1.0 - b[u] };
                    q[x1][x2] += pu[u] * pa * pb;
                }
            }
        }
        let mut py = 0.0;
        let mut noise = 0.0;
        for x1 in 0..2 {
            for x2 in 0..2 {
                py += q[x1][x2] * self.py1[x1][x2];
                noise += q[x1][x2] * binary_entropy(self.py1[x1][x2]);
            }
        }
        let sum = (binary_entropy(py) - noise).max(0.0);
        pentagon_support(h1, h2, sum, wx, wy)
    }

    fn best_support(&self, wx: f64, wy: f64, rng: &mut ChaCha8Rng) -> f64 {
        let mut starts: Vec<[f64; 12]> = Vec::new();
        let mut uniform = [0.5f64; 12];
        uniform[..4].fill(1.0);
        starts.push(uniform);
        let mut split_points = [1.0f64; 12];
        for u in 0..4 {
            split_points[4 + u] = ((u >> 1) & 1) as f64;
            split_points[8 + u] = (u & 1) as f64;
        }
        starts.push(split_points);
        for _ in 0..3 {
            let mut random = [0.0f64; 12];
            for value in &mut random {
                *value = 0.05 + 0.9 * rng.random::<f64>();
            }
            starts.push(random);
        }

        let mut best = 0.0f64;
        for start in starts {
            let mut params = start;
            let mut value = self.objective(&params, wx, wy);
            let mut step = 0.25;
            for _ in 0..60 {
                let mut improved = false;
                for i in 0..12 {
                    for delta in [step, -step] {
                        let mut trial = params;
                        trial[i] = (trial[i] + delta).clamp(0.0, 1.0);
                        let trial_value = self.objective(&trial, wx, wy);
                        if trial_value > value + 1e-13 {
                            params = trial;
                            value = trial_value;
                            improved = true;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                    if step < 1e-7 {
                        break;
                    }
                }
            }
            best = best.max(value);
        }
        best
    }
}

fn seeded_binary_channel(seed: u64) -> (DiscreteChannelSpec, TwoUserChannel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut py1 = [[0.0f64; 2]; 2];
    for row in &mut py1 {
        for p in row.iter_mut() {
            *p = 0.1 + 0.8 * rng.random::<f64>();
        }
    }
    let alphabets = Alphabets { x1: 2, x2: 2, s0: None, s1: 1, s2: 1, y: 2 };
    let mut transition = vec![0.0; 2 * 2 * 2];
    for x1 in 0..2 {
        for x2 in 0..2 {
            transition[(x1 * 2 + x2) * 2] = 1.0 - py1[x1][x2];
            transition[(x1 * 2 + x2) * 2 + 1] = py1[x1][x2];
        }
    }
    let spec =
        DiscreteChannelSpec::new(RegionForm::CorrelatedStates, alphabets, vec![1.0], transition)
            .unwrap();
    (spec, TwoUserChannel { py1 })
}

#[test]
fn acceptance_6_discrete_fixed_points_identities_and_the_region_oracle() {
    let start = Instant::now();

    // Exact corner of the noiseless pair under copy auxiliaries.
    let alphabets = Alphabets { x1: 2, x2: 2, s0: None, s1: 1, s2: 1, y: 4 };
    let mut transition = vec![0.0; 2 * 2 * 4];
    for x1 in 0..2 {
        for x2 in 0..2 {
            transition[(x1 * 2 + x2) * 4 + (x1 * 2 + x2)] = 1.0;
        }
    }
    let noiseless =
        DiscreteChannelSpec::new(RegionForm::CorrelatedStates, alphabets, vec![1.0], transition)
            .unwrap();
    let copy_row = vec![0.5, 0.0, 0.0, 0.5];
    let aux = AuxFactorization::new(
        &noiseless,
        AuxSizes { u: 1, v1: 2, v2: 2 },
        vec![1.0],
        copy_row.clone(),
        copy_row,
    )
    .unwrap();
    let triple = correlated_bounds(&noiseless, &aux).unwrap();
    assert_eq!(
        (triple.r1_bound, triple.r2_bound, triple.sum_bound),
        (1.0, 1.0, 2.0)
    );

    // The cross-state rewriting holds on random composed joints.
    let record = sweep_cross_state_identity(100, 11).unwrap();
    assert!(record.pass && record.delta < 1e-10, "{record:?}");

    // Searched regions match the independent full-cooperation oracle on
    // seeded binary channels with trivial states.
    for seed in [101u64, 202, 303] {
        let (spec, oracle) = seeded_binary_channel(seed);
        let sizes = AuxSizes::default_for(&spec);
        let searched = search_region(&spec, &sizes, 24_000, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for k in 0..201usize {
            let theta = std::f64::consts::FRAC_PI_2 * (k as f64) / 200.0;
            let (wx, wy) = (theta.cos(), theta.sin());
            let got = searched.support(wx, wy);
            let want = oracle.best_support(wx, wy, &mut rng);
            assert!(
                (got - want).abs() <= 2e-2,
                "channel {seed}, angle {k}: searched {got} vs oracle {want}"
            );
        }
    }

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!("acceptance 6 (discrete fixed points, identity sweep, region oracle): pass");
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rate-region"))
        .args(args)
        .env_remove("RATE_REGION_THREADS")
        .output()
        .expect("binary runs")
}

#[test]
fn acceptance_7_identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();

    let verify_args = ["verify", "--draws", "200", "--seed", "7"];
    let first = run_cli(&verify_args);
    let second = run_cli(&verify_args);
    assert!(first.status.success() && second.status.success());
    assert_eq!(first.stdout, second.stdout, "verify stdout drifted");

    let scenario_a = dir.path().join("scen-a.csv");
    let scenario_b = dir.path().join("scen-b.csv");
    for out in [&scenario_a, &scenario_b] {
        let result = run_cli(&[
            "scenarios", "--p1", "3", "--p2", "3", "--q0", "1", "--q1", "1", "--q2", "1", "--n",
            "1", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success());
    }
    assert_eq!(
        std::fs::read(&scenario_a).unwrap(),
        std::fs::read(&scenario_b).unwrap(),
        "scenario CSV drifted"
    );

    let spec_path = dir.path().join("noiseless.json");
    std::fs::write(
        &spec_path,
        r#"{
  "form": "t1",
  "alphabets": {"x1": 2, "x2": 2, "s1": 1, "s2": 1, "y": 4},
  "state_pmf": [1.0],
  "transition": [
    1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1
  ]
}"#,
    )
    .unwrap();
    let region_a = dir.path().join("region-a.csv");
    let region_b = dir.path().join("region-b.csv");
    for out in [&region_a, &region_b] {
        let result = run_cli(&[
            "discrete-region",
            "--spec",
            spec_path.to_str().unwrap(),
            "--budget",
            "5000",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success());
    }
    assert_eq!(
        std::fs::read(&region_a).unwrap(),
        std::fs::read(&region_b).unwrap(),
        "searched-region CSV drifted"
    );
    println!("acceptance 7 (repeated runs reproduce outputs byte for byte): pass");
}
