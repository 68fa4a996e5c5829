//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

mod common;

use common::{numeric_gradient, oracle_forward, oracle_loss, rel_err};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use rlsurv::agent::{Agent, AgentConfig};
use rlsurv::dataset::{self, Dataset, ScaleMode, Scaler};
use rlsurv::env::{ClassificationEnv, EnvConfig};
use rlsurv::experiment::{self, DeviceSource, ExperimentConfig, Method};
use rlsurv::matrix::Matrix;
use rlsurv::metrics::{self, ConfusionMatrix, EvalReport};
use rlsurv::nn::Mlp;
use rlsurv::replay::{ReplayBuffer, Transition};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 gradient oracle", gradient_oracle),
        ("2 target-sync exactness", target_sync),
        ("3 gamma=0 collapse", gamma_zero),
        ("4 DQN/DDQN relation", dqn_ddqn_relation),
        ("5 replay uniformity and FIFO", replay_uniformity),
        ("6 metric oracle", metric_oracle),
        ("7 ordinal trends on device1", ordinal_trends),
        ("8 range variation", range_variation),
        ("9 determinism of compare", compare_determinism),
        ("10 dataset fidelity", dataset_fidelity),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- 1

fn gradient_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (h, floor) = (1e-5, 1e-6);
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for case in 0..100u64 {
        let mut sizes = vec![rng.random_range(1..=6usize)];
        for cap in [8usize, 4] {
            if rng.random_bool(0.8) {
                sizes.push(rng.random_range(1..=cap));
            }
        }
        sizes.push(rng.random_range(1..=2usize));
        let mut net = Mlp::<f64>::new(&sizes, case).map_err(|e| e.to_string())?;
        for k in 0..net.num_layers() {
            for b in net.biases_mut(k) {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        let batch = rng.random_range(1..=4usize);
        // inputs whose hidden pre-activations all keep clear of the ReLU kink
        let mut xs = Vec::new();
        while xs.len() < batch {
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
            if oracle_forward(&net, &x).1.iter().flatten().all(|z| z.abs() > 1e-3) {
                xs.push(x);
            }
        }
        let c: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..*sizes.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let states = Matrix::new(batch, sizes[0], xs.concat()).unwrap();
        let grads = Matrix::new(batch, *sizes.last().unwrap(), c.concat()).unwrap();
        let analytic = net.backward(&states, &grads).map_err(|e| e.to_string())?;

        let (nw, nb) = numeric_gradient(&mut net, h, |n| oracle_loss(n, &xs, &c));
        for (a, n) in analytic.weights.iter().flatten().zip(nw.iter().flatten())
            .chain(analytic.biases.iter().flatten().zip(nb.iter().flatten()))
        {
            worst = worst.max(rel_err(*a, *n, floor));
            checked += 1;
        }
    }
    check(
        worst <= 1e-4,
        format!("100 nets, {checked} parameters, worst relative error {worst:.2e} (limit 1e-4)"),
    )
}

// ---------------------------------------------------------------- 2

fn scaled_train_set(test_fraction: f64, seed: u64) -> Dataset {
    let ds = dataset::generate(&dataset::preset("device1").unwrap()).unwrap();
    let splits = dataset::split(&ds, test_fraction, 0.2, seed).unwrap();
    let train = splits.train(&ds);
    Scaler::fit(&train, ScaleMode::Minmax).unwrap().apply(&train)
}

fn random_states(rng: &mut ChaCha8Rng, n: usize) -> Matrix<f64> {
    Matrix::new(n, 4, (0..n * 4).map(|_| rng.random_range(-0.5..1.5)).collect()).unwrap()
}

fn target_sync() -> Outcome {
    let train = scaled_train_set(0.2, 1);
    let cfg = AgentConfig {
        total_steps: 2400,
        seed: 3,
        ..AgentConfig::default()
    };
    let period = cfg.target_sync_period;
    let mut agent = Agent::<f64>::new(cfg).map_err(|e| e.to_string())?;
    let mut env = ClassificationEnv::<f64>::new(&train, EnvConfig { seed: 3, ..EnvConfig::default() }).unwrap();
    env.reset();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut syncs, mut frozen_steps) = (0, 0);
    for _ in 0..3 * period {
        let before = agent.target_net().clone();
        let report = agent.train_step(&mut env).map_err(|e| e.to_string())?;
        if agent.step_count() % period == 0 {
            let s = random_states(&mut rng, 100);
            let q = agent.q_net().forward(&s).unwrap();
            let t = agent.target_net().forward(&s).unwrap();
            let same = q.as_slice().iter().zip(t.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same || !report.synced {
                return Err(format!("outputs differ after sync at step {}", agent.step_count()));
            }
            syncs += 1;
        } else {
            if *agent.target_net() != before {
                return Err(format!("target network moved at step {}", agent.step_count()));
            }
            frozen_steps += 1;
        }
    }
    check(
        syncs == 3,
        format!("{syncs} syncs bit-exact on 100 states each; target frozen on {frozen_steps} other steps"),
    )
}

// ---------------------------------------------------------------- 3, 4

fn random_batch(rng: &mut ChaCha8Rng, n: usize, gamma_terminal: bool) -> Vec<Transition<f64>> {
    let rewards = [-1.0, 1.0, -198.1, 198.1];
    (0..n)
        .map(|_| {
            let state: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..1.5)).collect();
            let next_state: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..1.5)).collect();
            let action = rng.random_range(0..2u8);
            let reward = if rng.random_bool(0.5) {
                rewards[rng.random_range(0..4)]
            } else {
                rng.random_range(-200.0..200.0)
            };
            Transition {
                state,
                action,
                reward,
                next_state,
                terminal: gamma_terminal && rng.random_bool(0.1),
            }
        })
        .collect()
}

fn gamma_zero() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..1000u64 {
        let agent = Agent::<f64>::new(AgentConfig {
            gamma: 0.0,
            seed: i % 10,
            ..AgentConfig::default()
        })
        .unwrap();
        let batch = random_batch(&mut rng, 32, true);
        let rewards: Vec<u64> = batch.iter().map(|t| t.reward.to_bits()).collect();
        for (name, targets) in [
            ("dqn", agent.compute_targets_dqn(&batch).unwrap()),
            ("ddqn", agent.compute_targets_ddqn(&batch).unwrap()),
        ] {
            let bits: Vec<u64> = targets.iter().map(|t| t.to_bits()).collect();
            if bits != rewards {
                return Err(format!("{name} targets differ from rewards in batch {i}"));
            }
        }
    }
    Ok("1000 batches of 32: DQN and DDQN targets equal rewards bit-for-bit".into())
}

fn dqn_ddqn_relation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sizes = [4usize, 16, 8, 2];
    // (a) shared weights
    for i in 0..1000u64 {
        let mut agent = Agent::<f64>::new(AgentConfig {
            gamma: rng.random_range(0.05..=1.0),
            layer_sizes: sizes.to_vec(),
            seed: i,
            ..AgentConfig::default()
        })
        .unwrap();
        let (q, _) = agent.networks_mut();
        for k in 0..q.num_layers() {
            for b in q.biases_mut(k) {
                *b = rng.random_range(-0.5..0.5);
            }
        }
        agent.sync_target().unwrap();
        let batch = random_batch(&mut rng, 32, true);
        let a = agent.compute_targets_dqn(&batch).unwrap();
        let b = agent.compute_targets_ddqn(&batch).unwrap();
        if a.iter().zip(&b).any(|(x, y)| x.to_bits() != y.to_bits()) {
            return Err(format!("(a) shared-weight targets differ in trial {i}"));
        }
    }
    // (b) independent networks
    let mut violations = 0usize;
    let mut strict = 0usize;
    for i in 0..10_000u64 {
        let mut agent = Agent::<f64>::new(AgentConfig {
            gamma: rng.random_range(0.0..=1.0),
            layer_sizes: sizes.to_vec(),
            seed: 2 * i,
            ..AgentConfig::default()
        })
        .unwrap();
        let other = Mlp::<f64>::new(&sizes, 2 * i + 1).unwrap();
        agent.networks_mut().1.copy_from(&other).unwrap();
        let batch = random_batch(&mut rng, 32, true);
        let dqn = agent.compute_targets_dqn(&batch).unwrap();
        let ddqn = agent.compute_targets_ddqn(&batch).unwrap();
        for (d, dd) in dqn.iter().zip(&ddqn) {
            if dd > d {
                violations += 1;
            } else if dd < d {
                strict += 1;
            }
        }
    }
    check(
        violations == 0,
        format!(
            "(a) 1000 shared-weight batches identical; (b) 10000 independent trials, {violations} violations, {strict} strictly lower"
        ),
    )
}

// ---------------------------------------------------------------- 5

fn transition(reward: f64) -> Transition<f64> {
    Transition {
        state: vec![0.0; 4],
        action: 0,
        reward,
        next_state: vec![0.0; 4],
        terminal: false,
    }
}

fn replay_uniformity() -> Outcome {
    let mut buf = ReplayBuffer::<f64>::new(4, 4, 11).unwrap();
    for r in 0..4 {
        buf.push(transition(r as f64)).unwrap();
    }
    let mut counts = [0u64; 4];
    for _ in 0..40_000 {
        counts[buf.sample(1).unwrap()[0].reward as usize] += 1;
    }
    let expected = 10_000.0;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(3.0).unwrap().cdf(stat);

    let mut fifo_ok = true;
    for n in 0..=12usize {
        let mut b = ReplayBuffer::<f64>::new(3, 4, 0).unwrap();
        for r in 0..n {
            b.push(transition(r as f64)).unwrap();
        }
        let got: Vec<f64> = b.iter_oldest_first().map(|t| t.reward).collect();
        let want: Vec<f64> = (n.saturating_sub(3)..n).map(|r| r as f64).collect();
        fifo_ok &= got == want;
    }
    check(
        p > 0.001 && fifo_ok,
        format!("counts {counts:?}, chi2 {stat:.3}, p {p:.4} (> 0.001); FIFO sequences 0..=12 at capacity 3 {}",
            if fifo_ok { "exact" } else { "WRONG" }),
    )
}

// ---------------------------------------------------------------- 6

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..1000 {
        let n = rng.random_range(1..=300);
        let p1 = rng.random_range(0.0..1.0);
        let preds: Vec<u8> = (0..n).map(|_| rng.random_bool(p1) as u8).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.random_bool(0.1) as u8).collect();
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for (&p, &y) in preds.iter().zip(&labels) {
            match (p, y) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 1) => fn_ += 1,
                _ => tn += 1,
            }
        }
        let want = ConfusionMatrix { tp, fp, fn_, tn };
        let got = metrics::confusion(&preds, &labels).unwrap();
        let denom = 2 * tp + fp + fn_;
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
        if got != want || (metrics::f1(&got) - f1).abs() > 1e-12 {
            return Err(format!("case {case}: {got:?} vs tally {want:?}"));
        }
    }
    let fixture = metrics::f1(&ConfusionMatrix { tp: 6, fp: 1, fn_: 1, tn: 1743 });
    check(
        (fixture - 0.8571).abs() < 5e-5,
        format!("1000 random vectors match the tally; cm(6,1,1) F1 = {fixture:.6} vs 0.8571"),
    )
}

// ---------------------------------------------------------------- 7

fn mean_f1(reports: &[EvalReport], algo: &str, frac: f64) -> f64 {
    let f: Vec<f64> = reports
        .iter()
        .filter(|r| r.algorithm == algo && r.test_fraction == frac)
        .map(|r| r.f1)
        .collect();
    f.iter().sum::<f64>() / f.len() as f64
}

fn ordinal_trends() -> Outcome {
    let out = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        devices: vec![DeviceSource::Preset("device1".into())],
        out_dir: out.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let started = Instant::now();
    let reports = experiment::run_grid(&cfg).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    let fracs = [0.2, 0.5, 0.8];
    let mut table = String::new();
    let mut monotone = true;
    for m in Method::ALL {
        let means: Vec<f64> = fracs.iter().map(|&f| mean_f1(&reports, m.as_str(), f)).collect();
        monotone &= means[0] >= means[1] && means[1] >= means[2];
        table.push_str(&format!(" {m}={:.3}/{:.3}/{:.3}", means[0], means[1], means[2]));
    }
    let (ddqn, dqn, ann) = (
        mean_f1(&reports, "ddqn", 0.8),
        mean_f1(&reports, "dqn", 0.8),
        mean_f1(&reports, "ann", 0.8),
    );
    let ordered = ddqn >= dqn && dqn >= ann;
    check(
        ordered && monotone && secs < 600.0,
        format!(
            "(a) at 80%: ddqn {ddqn:.3} >= dqn {dqn:.3} >= ann {ann:.3} [{}]; (b) mean F1 20/50/80%:{table} [{}]; {} runs in {secs:.0}s (limit 600s)",
            if ordered { "holds" } else { "violated" },
            if monotone { "non-increasing" } else { "not monotone" },
            reports.len()
        ),
    )
}

// ---------------------------------------------------------------- 8

fn range_variation() -> Outcome {
    let ds = dataset::generate(&dataset::preset("device1").unwrap()).unwrap();
    let mut flagged = Vec::new();
    for seed in 1..=5 {
        let splits = dataset::split(&ds, 0.8, 0.2, seed).unwrap();
        let table = metrics::range_table(&splits.train(&ds), &splits.test(&ds)).unwrap();
        flagged.push(metrics::out_of_range_bounds(&table));
    }
    let min = *flagged.iter().min().unwrap();
    check(
        min >= 6,
        format!("test bounds outside the training envelope per split seed 1..=5: {flagged:?} of 8 (need >= 6 each)"),
    )
}

// ---------------------------------------------------------------- 9

fn run_compare(config: &Path, out: &Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_rlsurv"))
        .arg("compare")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    std::fs::read(out.join("comparison.csv")).map_err(|e| e.to_string())
}

fn without_timing(csv: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(csv)
        .lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
        .collect()
}

fn compare_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let write_cfg = |name: &str, timing: bool| {
        let path = dir.path().join(name);
        let cfg = serde_json::json!({
            "devices": ["device1"],
            "algorithms": ["ddqn", "dqn", "ann"],
            "test_fractions": [0.2, 0.8],
            "seeds": [1, 2],
            "agent": {"total_steps": 3000},
            "ann": {"epochs": 10},
            "jobs": 2,
            "record_timing": timing
        });
        std::fs::write(&path, cfg.to_string()).unwrap();
        path
    };
    let fixed = write_cfg("fixed.json", false);
    let a = run_compare(&fixed, &dir.path().join("a"))?;
    let b = run_compare(&fixed, &dir.path().join("b"))?;
    let timed = run_compare(&write_cfg("timed.json", true), &dir.path().join("c"))?;
    let rows = String::from_utf8_lossy(&a).lines().count() - 1;
    let same_bytes = a == b;
    let same_results = without_timing(&a) == without_timing(&timed);
    check(
        same_bytes && same_results && rows == 12,
        format!(
            "two runs of the same config (2 workers, timing off): {} over {rows} rows; with timing on every column except train_seconds {}",
            if same_bytes { "byte-identical" } else { "DIFFER" },
            if same_results { "matches" } else { "DIFFERS" }
        ),
    )
}

// ---------------------------------------------------------------- 10

fn dataset_fidelity() -> Outcome {
    let mut found = Vec::new();
    for (name, want) in [("device1", (8717, 44)), ("device2", (8720, 41)), ("device3", (8721, 40))] {
        let ds = dataset::generate(&dataset::preset(name).unwrap()).unwrap();
        let counts = ds.class_counts();
        if counts != want || ds.len() != 8761 {
            return Err(format!("{name}: {counts:?} of {}", ds.len()));
        }
        found.push(format!("{name} {}/{}", counts.0, counts.1));
    }
    Ok(format!("{}; 8761 rows each", found.join(", ")))
}
