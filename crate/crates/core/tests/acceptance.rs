//! One PASS/FAIL line per acceptance criterion. Pass criterion ids (e.g.
//! `cargo test --test acceptance -- 1 6`) to run a subset; all run by default.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rle_core::config::RunConfig;
use rle_core::envs::GridLayout;
use rle_core::eval::{evaluate, restore, EvalOptions};
use rle_core::explorers::{ResampleReason, RleInvariants};
use rle_core::metrics::{
    bootstrap_ci, iqm, iqm_pooled, normalized_score, probability_of_improvement, ScoreTable, VisitationGrid,
};
use rle_core::nn::{grad_check, Activation, Linear, Mlp, MlpSpec, NoiseAssignment, NoiseKind, NoisyLinear, NoisySpec};
use rle_core::ppo::{compute_gae, metrics_csv, train, TrainArtifacts, TrainOptions};
use rle_core::rng::{stream, Stream};
use rle_core::run::cmd_train;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const FOURROOM_STEPS: u64 = 2_500_000;
const POINTREACH_STEPS: u64 = 2_000_000;
const ABLATION_STEPS: u64 = 100_000;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn cfg(preset: &str, seed: u64, overrides: &[String]) -> RunConfig {
    let mut o = vec![format!("seed={seed}"), "deterministic=true".to_string()];
    o.extend(overrides.iter().cloned());
    RunConfig::from_value(serde_json::json!({ "preset": preset }), &o).expect("acceptance config")
}

fn run(preset: &str, seed: u64, overrides: &[String], keep: bool) -> TrainArtifacts {
    let c = cfg(preset, seed, overrides);
    let t = Instant::now();
    let a = train(&c, &TrainOptions { out_dir: None, keep_checkpoints: keep }).expect("training run");
    eprintln!(
        "  {preset} seed {seed} {overrides:?}: score {:.3}, {:.0}s",
        a.final_score,
        t.elapsed().as_secs_f64()
    );
    a
}

fn s(v: &str) -> String {
    v.to_string()
}

fn coverage(g: &VisitationGrid) -> (usize, usize) {
    let c = g.coverage(&GridLayout::canonical());
    (c.unique_cells, c.rooms_visited())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
}

/// Rolled-up RLE invariants over several runs.
#[derive(Default)]
struct InvariantTally {
    max_abs_reward: f64,
    max_latent_norm_error: f64,
    rewards: u64,
    interval_lengths: BTreeSet<usize>,
    done_over_interval: u64,
}

impl InvariantTally {
    fn add(&mut self, inv: &RleInvariants) {
        self.max_abs_reward = self.max_abs_reward.max(inv.max_abs_reward);
        self.max_latent_norm_error = self.max_latent_norm_error.max(inv.max_latent_norm_error);
        self.rewards += inv.rewards_computed;
        for ((reason, len), _) in &inv.resample_lengths {
            match reason {
                ResampleReason::Interval => {
                    self.interval_lengths.insert(*len);
                }
                ResampleReason::Done if *len > 128 => self.done_over_interval += 1,
                ResampleReason::Done => {}
            }
        }
    }
}

/// Shared FourRoom runs, created on first use.
#[derive(Default)]
struct Runs {
    sparse: Option<(Vec<TrainArtifacts>, Vec<TrainArtifacts>)>,
    reward_free: Option<(Vec<TrainArtifacts>, Vec<TrainArtifacts>)>,
    pointreach: Option<(Vec<TrainArtifacts>, Vec<TrainArtifacts>)>,
}

impl Runs {
    fn sparse(&mut self) -> &(Vec<TrainArtifacts>, Vec<TrainArtifacts>) {
        self.sparse.get_or_insert_with(|| {
            let o = [format!("total_steps={FOURROOM_STEPS}"), s("env.variant=sparse")];
            let rle = SEEDS.iter().map(|&sd| run("fourroom-rle", sd, &o, false)).collect();
            let ppo = SEEDS.iter().map(|&sd| run("fourroom-ppo", sd, &o, false)).collect();
            (rle, ppo)
        })
    }

    fn reward_free(&mut self) -> &(Vec<TrainArtifacts>, Vec<TrainArtifacts>) {
        self.reward_free.get_or_insert_with(|| {
            let o = [format!("total_steps={FOURROOM_STEPS}"), s("env.variant=reward_free")];
            let rle = SEEDS.iter().map(|&sd| run("fourroom-rle", sd, &o, true)).collect();
            let ppo = SEEDS.iter().map(|&sd| run("fourroom-ppo", sd, &o, true)).collect();
            (rle, ppo)
        })
    }

    fn pointreach(&mut self) -> &(Vec<TrainArtifacts>, Vec<TrainArtifacts>) {
        self.pointreach.get_or_insert_with(|| {
            let o = [format!("total_steps={POINTREACH_STEPS}")];
            let rle = SEEDS.iter().map(|&sd| run("pointreach-rle", sd, &o, false)).collect();
            let ppo = SEEDS.iter().map(|&sd| run("pointreach-ppo", sd, &o, false)).collect();
            (rle, ppo)
        })
    }
}

fn criterion_1(runs: &mut Runs) -> Outcome {
    let (rle, ppo) = runs.sparse();
    let r: Vec<f64> = rle.iter().map(|a| a.final_score).collect();
    let p: Vec<f64> = ppo.iter().map(|a| a.final_score).collect();
    let (mr, mp) = (mean(&r), mean(&p));
    Outcome {
        id: "1 fourroom sparse reward: RLE mean >= 0.4, PPO mean <= 0.2",
        pass: mr >= 0.4 && mp <= 0.2,
        detail: format!("RLE mean {mr:.3} [{}], PPO mean {mp:.3} [{}]", fmt(&r), fmt(&p)),
    }
}

fn criterion_2(runs: &mut Runs) -> Outcome {
    let (rle, ppo) = runs.reward_free();
    let rc: Vec<(usize, usize)> = rle.iter().map(|a| coverage(&a.visitation)).collect();
    let pc: Vec<(usize, usize)> = ppo.iter().map(|a| coverage(&a.visitation)).collect();
    let wins = rc.iter().zip(&pc).filter(|(r, p)| r.0 > p.0).count();
    let all_rooms = rc.iter().filter(|r| r.1 == 4).count();
    Outcome {
        id: "2 reward-free coverage: RLE > PPO cells in >=4/5 seeds, RLE all rooms 5/5",
        pass: wins >= 4 && all_rooms == 5,
        detail: format!("RLE (cells, rooms) {rc:?}, PPO {pc:?}; wins {wins}/5, all-room seeds {all_rooms}/5"),
    }
}

/// Rooms touched by rollouts from the checkpoint nearest the middle of training.
fn mid_rollout_rooms(cfg: &RunConfig, a: &TrainArtifacts, rollouts: usize, z_samples: usize, seed: u64) -> (u64, usize) {
    let half = cfg.total_steps / 2;
    let (step, ck) = a
        .checkpoints
        .iter()
        .min_by_key(|(st, _)| st.abs_diff(half))
        .expect("checkpoints kept");
    let (agent, explorer) = restore(cfg, ck).expect("checkpoint restores");
    let r = evaluate(
        cfg,
        &agent,
        &explorer,
        &EvalOptions {
            n_rollouts: rollouts,
            z_samples,
            greedy: false,
            seed,
        },
    )
    .expect("evaluation");
    (*step, coverage(&r.visitation).1)
}

fn criterion_3(runs: &mut Runs) -> Outcome {
    let o = [format!("total_steps={FOURROOM_STEPS}"), s("env.variant=reward_free")];
    let (rle, ppo) = runs.reward_free();
    let mut rr = Vec::new();
    let mut pr = Vec::new();
    let mut step = 0;
    for (i, &sd) in SEEDS.iter().enumerate() {
        let (st, r) = mid_rollout_rooms(&cfg("fourroom-rle", sd, &o), &rle[i], 1, 16, sd);
        let (_, p) = mid_rollout_rooms(&cfg("fourroom-ppo", sd, &o), &ppo[i], 16, 1, sd);
        step = st;
        rr.push(r);
        pr.push(p);
    }
    let ok = rr.iter().filter(|&&r| r >= 3).count();
    let (mr, mp) = (
        mean(&rr.iter().map(|&v| v as f64).collect::<Vec<_>>()),
        mean(&pr.iter().map(|&v| v as f64).collect::<Vec<_>>()),
    );
    Outcome {
        id: "3 trajectory diversity: mid checkpoint, 16 z, >=3 rooms in >=4/5 seeds; PPO fewer",
        pass: ok >= 4 && mp < mr,
        detail: format!("checkpoint step {step}; RLE rooms {rr:?} ({ok}/5 >= 3), PPO rooms {pr:?}; means {mr:.1} vs {mp:.1}"),
    }
}

fn criterion_4() -> Outcome {
    let o = [format!("total_steps={FOURROOM_STEPS}"), s("env.variant=reward_free"), s("env.noisy_tv=true")];
    let rooms: Vec<usize> = SEEDS
        .iter()
        .map(|&sd| coverage(&run("fourroom-rle", sd, &o, false).visitation).1)
        .collect();
    let ok = rooms.iter().filter(|&&r| r == 4).count();
    Outcome {
        id: "4 noisy TV: RLE visits all four rooms in >=4/5 seeds",
        pass: ok >= 4,
        detail: format!("rooms visited {rooms:?}"),
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: Vec<(String, f64)> = Vec::new();
    let mut check = |name: &str, mut net: Mlp<f64>, inputs: usize, rng: &mut ChaCha8Rng| {
        let x = Array2::from_shape_fn((5, inputs), |_| rng.random_range(-1.0..1.0));
        let e = match grad_check(&mut net, &x, 1e-4) {
            Ok(r) => r.max_rel_error,
            Err(_) => f64::INFINITY,
        };
        worst.push((name.to_string(), e));
    };
    check("linear", Mlp::new(MlpSpec::new(3, &[4], Activation::Tanh), 1.0, 1.0, None, &mut rng).unwrap(), 3, &mut rng);
    check("relu", Mlp::new(MlpSpec::new(3, &[6, 2], Activation::Relu), 1.4, 1.0, None, &mut rng).unwrap(), 3, &mut rng);
    check(
        "leaky_relu",
        Mlp::new(MlpSpec::new(3, &[6, 2], Activation::LeakyRelu), 1.4, 1.0, None, &mut rng).unwrap(),
        3,
        &mut rng,
    );
    for kind in [NoiseKind::Factorized, NoiseKind::Independent] {
        let spec = NoisySpec {
            layers: 2,
            sigma_init: 0.3,
            kind,
        };
        let mut net = Mlp::new(MlpSpec::new(4, &[8, 3], Activation::Tanh), 1.4, 1.0, Some(spec), &mut rng).unwrap();
        net.resample_noise(None, &mut rng);
        check(&format!("noisy_{kind:?}"), net, 4, &mut rng);
    }
    check(
        "policy (64,64,4)",
        Mlp::new(MlpSpec::new(6, &[64, 64, 4], Activation::Tanh), 2f64.sqrt(), 0.01, None, &mut rng).unwrap(),
        6,
        &mut rng,
    );
    check(
        "value (64,64,1)",
        Mlp::new(MlpSpec::new(6, &[64, 64, 1], Activation::Tanh), 2f64.sqrt(), 1.0, None, &mut rng).unwrap(),
        6,
        &mut rng,
    );
    check(
        "feature (64,64,64,4)",
        Mlp::new(MlpSpec::new(2, &[64, 64, 64, 4], Activation::Relu), 2f64.sqrt(), 1.0, None, &mut rng).unwrap(),
        2,
        &mut rng,
    );
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    Outcome {
        id: "5 gradient check < 1e-4 on every layer type and the full networks",
        pass: max < 1e-4,
        detail: worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", "),
    }
}

fn brute_force_gae(r: &[f64], v: &[f64], d: &[bool], boot: f64, g: f64, l: f64) -> Vec<f64> {
    let n = r.len();
    let next_v = |t: usize| if t + 1 < n { v[t + 1] } else { boot };
    (0..n)
        .map(|t| {
            let mut total = 0.0;
            let mut w = 1.0;
            for k in t..n {
                let delta = r[k] + g * next_v(k) * if d[k] { 0.0 } else { 1.0 } - v[k];
                total += w * delta;
                if d[k] {
                    break;
                }
                w *= g * l;
            }
            total
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut max_err = 0.0f64;
    for &g in &[0.0, 0.5, 0.95, 0.99] {
        for &l in &[0.0, 0.5, 0.95, 1.0] {
            for _ in 0..3 {
                let n = 16;
                let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let d: Vec<bool> = (0..n).map(|_| rng.random_bool(0.15)).collect();
                let boot = rng.random_range(-1.0..1.0);
                let (adv, ret) = compute_gae(&r, &v, &d, boot, g, l).unwrap();
                let want = brute_force_gae(&r, &v, &d, boot, g, l);
                for t in 0..n {
                    max_err = max_err.max((adv[t] - want[t]).abs()).max((ret[t] - want[t] - v[t]).abs());
                }
            }
        }
    }
    Outcome {
        id: "6 GAE equals brute-force double sum to 1e-10 over the (gamma, lambda) grid",
        pass: max_err <= 1e-10,
        detail: format!("max abs error {max_err:.2e}"),
    }
}

fn criterion_7() -> Outcome {
    let mut fails = Vec::new();
    let mut expect = |name: &str, ok: bool| {
        if !ok {
            fails.push(name.to_string());
        }
    };
    expect("iqm([1,2,3,4]) = 2.5", iqm(&[1.0, 2.0, 3.0, 4.0]).unwrap() == 2.5);
    let mut dom = ScoreTable::new();
    let mut same = ScoreTable::new();
    for sd in 0..5 {
        dom.insert("x", "t", sd, 10.0 + sd as f64);
        dom.insert("y", "t", sd, sd as f64);
        same.insert("x", "t", sd, sd as f64);
        same.insert("y", "t", sd, sd as f64);
    }
    expect("POI dominating = 1", probability_of_improvement(&dom, "x", "y").unwrap() == 1.0);
    expect("POI identical = 0.5", probability_of_improvement(&same, "x", "y").unwrap() == 0.5);
    expect(
        "IQM difference of identical tables = 0",
        iqm_pooled(&same, "x").unwrap() - iqm_pooled(&same, "y").unwrap() == 0.0,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let mut t = ScoreTable::new();
        for task in ["a", "b", "c"] {
            for sd in 0..rng.random_range(1..6u64) {
                t.insert("x", task, sd, rng.random_range(0..4) as f64);
            }
            for sd in 0..rng.random_range(1..6u64) {
                t.insert("y", task, sd, rng.random_range(0..4) as f64);
            }
        }
        let sum = probability_of_improvement(&t, "x", "y").unwrap() + probability_of_improvement(&t, "y", "x").unwrap();
        worst = worst.max((sum - 1.0).abs());
    }
    expect("POI(X,Y) + POI(Y,X) = 1", worst < 1e-12);
    let mut flat = ScoreTable::new();
    for sd in 0..5 {
        flat.insert("x", "t", sd, 0.25);
    }
    let ci = bootstrap_ci(&flat, |t| iqm_pooled(t, "x"), 1000, 0.95, &mut stream(7, Stream::Bootstrap)).unwrap();
    expect("bootstrap zero variance collapses", ci.low == 0.25 && ci.high == 0.25 && ci.point == 0.25);
    expect("normalized(human) = 1", normalized_score(14.6, -20.7, 14.6).unwrap() == 1.0);
    expect("normalized(random) = 0", normalized_score(-20.7, -20.7, 14.6).unwrap() == 0.0);
    Outcome {
        id: "7 metrics unit suite exact",
        pass: fails.is_empty(),
        detail: if fails.is_empty() { "all exact".into() } else { format!("failed: {}", fails.join("; ")) },
    }
}

fn criterion_8() -> Outcome {
    let o = [s("total_steps=40960")];
    let plain = run("fourroom-ppo", 8, &o, false);
    let reduced = run(
        "fourroom-rle",
        8,
        &[s("total_steps=40960"), s("rle.lambda_F=0"), s("rle.z_conditioning=false")],
        false,
    );
    let csv_equal = metrics_csv(&plain.metrics) == metrics_csv(&reduced.metrics);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let lin = Linear::<f64>::orthogonal(7, 5, 1.3, &mut rng);
    let mut noisy = NoisyLinear::<f64>::new(7, 5, 1.0, 0.0, NoiseKind::Factorized, &mut rng);
    noisy.mu_w = lin.weight.clone();
    noisy.mu_b = lin.bias.clone();
    let x = Array2::from_shape_fn((9, 7), |_| rng.random_range(-2.0..2.0));
    let mut bit_exact = true;
    for kind in [NoiseKind::Factorized, NoiseKind::Independent] {
        noisy.kind = kind;
        let want = lin.forward(&x).unwrap();
        let shared = noisy.forward(&x, &NoiseAssignment::Shared(noisy.sample_noise(&mut rng))).unwrap();
        let rows = NoiseAssignment::PerRow((0..9).map(|_| noisy.sample_noise(&mut rng)).collect());
        let per_row = noisy.forward(&x, &rows).unwrap();
        bit_exact &= shared == want && per_row == want;
    }
    Outcome {
        id: "8 reduction identities: RLE(lambda=0, no z) == PPO metrics; NoisyLinear(sigma=0) == Linear",
        pass: csv_equal && bit_exact,
        detail: format!(
            "metrics CSV identical: {csv_equal} ({} rows); noisy forward bit-exact: {bit_exact}",
            plain.metrics.len()
        ),
    }
}

fn criterion_9(runs: &mut Runs) -> Outcome {
    let mut tally = InvariantTally::default();
    runs.sparse();
    runs.reward_free();
    let sparse = &runs.sparse.as_ref().unwrap().0;
    let free = &runs.reward_free.as_ref().unwrap().0;
    for a in sparse.iter().chain(free) {
        tally.add(&a.explorer.rle().expect("RLE explorer").invariants);
    }
    let cadence_ok = tally.interval_lengths.iter().all(|&l| l == 128) && tally.done_over_interval == 0;
    Outcome {
        id: "9 RLE invariants: |F| <= 1, |z| = 1 +- 1e-9, resample every 128 steps",
        pass: tally.max_abs_reward <= 1.0 && tally.max_latent_norm_error <= 1e-9 && cadence_ok,
        detail: format!(
            "{} rewards, max |F| {:.6}, max | |z| - 1 | {:.1e}, interval lengths {:?}, done resamples beyond 128: {}",
            tally.rewards,
            tally.max_abs_reward,
            tally.max_latent_norm_error,
            tally.interval_lengths,
            tally.done_over_interval
        ),
    }
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut mismatches = Vec::new();
    let presets = [
        "fourroom-ppo",
        "fourroom-rle",
        "fourroom-rnd",
        "fourroom-noisynet",
        "fourroom-rle-atari-style",
        "pointreach-ppo",
        "pointreach-rle",
    ];
    for p in presets {
        let c = cfg(p, 10, &[s("total_steps=16384")]);
        let a = tmp.path().join(format!("{p}-a"));
        let b = tmp.path().join(format!("{p}-b"));
        let ma = cmd_train(&c, &a, false).expect("smoke run");
        cmd_train(&c, &b, false).expect("smoke run");
        let mut files = vec!["metrics.csv".to_string(), "config.json".to_string()];
        files.extend(ma.checkpoints.iter().cloned());
        for f in files {
            if std::fs::read(a.join(&f)).ok() != std::fs::read(b.join(&f)).ok() {
                mismatches.push(format!("{p}/{f}"));
            }
        }
    }
    Outcome {
        id: "10 determinism: byte-identical metrics.csv and checkpoints",
        pass: mismatches.is_empty(),
        detail: if mismatches.is_empty() {
            format!("{} presets identical", presets.len())
        } else {
            format!("differ: {}", mismatches.join(", "))
        },
    }
}

fn criterion_11() -> Outcome {
    let mut errors = Vec::new();
    let mut completed = 0;
    for dist in ["sphere", "uniform", "normal"] {
        for dim in [2, 4, 8] {
            for zc in [true, false] {
                for wn in [true, false] {
                    let c = cfg(
                        "fourroom-rle",
                        11,
                        &[
                            format!("total_steps={ABLATION_STEPS}"),
                            s("env.variant=reward_free"),
                            format!("rle.distribution={dist}"),
                            format!("rle.dim={dim}"),
                            format!("rle.z_conditioning={zc}"),
                            format!("rle.white_noise={wn}"),
                        ],
                    );
                    match train(&c, &TrainOptions::default()) {
                        Ok(a) if a.metrics.iter().all(|r| r.policy_loss.is_finite() && r.value_loss.is_finite()) => {
                            completed += 1
                        }
                        Ok(_) => errors.push(format!("{dist}/{dim}/{zc}/{wn}: non-finite loss")),
                        Err(e) => errors.push(format!("{dist}/{dim}/{zc}/{wn}: {e}")),
                    }
                }
            }
        }
    }
    let o_base = [format!("total_steps={ABLATION_STEPS}"), s("env.variant=reward_free")];
    let mut pairs = Vec::new();
    for &sd in &SEEDS {
        let rle = coverage(&run("fourroom-rle", sd, &o_base, false).visitation).0;
        let mut o = o_base.to_vec();
        o.push(s("rle.white_noise=true"));
        let wn = coverage(&run("fourroom-rle", sd, &o, false).visitation).0;
        pairs.push((wn, rle));
    }
    let ok = pairs.iter().filter(|(wn, rle)| wn <= rle).count();
    Outcome {
        id: "11 ablation matrix completes (36 runs); white-noise coverage <= RLE in >=3/5 seeds",
        pass: errors.is_empty() && completed == 36 && ok >= 3,
        detail: format!(
            "{completed}/36 completed{}; (white-noise, RLE) cells {pairs:?}, {ok}/5 not exceeding",
            if errors.is_empty() { String::new() } else { format!(" errors: {}", errors.join("; ")) }
        ),
    }
}

fn criterion_12(runs: &mut Runs) -> Outcome {
    let (rle, ppo) = runs.pointreach();
    let finite = rle
        .iter()
        .all(|a| a.metrics.iter().all(|r| r.policy_loss.is_finite() && r.value_loss.is_finite()) && a.final_score.is_finite());
    let r: Vec<f64> = rle.iter().map(|a| a.final_score).collect();
    let p: Vec<f64> = ppo.iter().map(|a| a.final_score).collect();
    let (mr, mp) = (mean(&r), mean(&p));
    let bar = mp - 0.1 * mp.abs();
    Outcome {
        id: "12 pointreach: continuous-style RLE finite and mean return >= PPO - 10%",
        pass: finite && mr >= bar,
        detail: format!("finite {finite}; RLE mean {mr:.3} [{}], PPO mean {mp:.3} [{}], bar {bar:.3}", fmt(&r), fmt(&p)),
    }
}

/// Non-overlapping 10-iteration block means of the rolling return.
fn block_means(a: &TrainArtifacts) -> Vec<f64> {
    a.metrics
        .chunks(10)
        .filter(|c| c.len() == 10)
        .map(|c| mean(&c.iter().map(|r| r.mean_episodic_task_return).collect::<Vec<_>>()))
        .filter(|v| v.is_finite())
        .collect()
}

fn learning_sanity(runs: &mut Runs) -> Outcome {
    let (_, ppo) = runs.pointreach();
    let mut ok = 0;
    let mut notes = Vec::new();
    for a in ppo {
        let b = block_means(a);
        let tol = 0.05 * b[0].abs();
        let drops = b.windows(2).filter(|w| w[1] < w[0] - tol).count();
        if drops == 0 && b.last() > b.first() {
            ok += 1;
        }
        notes.push(format!("{:.2}->{:.2} ({drops} drops)", b[0], b[b.len() - 1]));
    }
    Outcome {
        id: "ppo learning sanity: pointreach 10-iteration means monotone in >=4/5 seeds",
        pass: ok >= 4,
        detail: format!("{ok}/5 monotone; {}", notes.join(", ")),
    }
}

fn main() -> ExitCode {
    let selected: BTreeSet<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let want = |id: &str| selected.is_empty() || selected.contains(id);
    let mut runs = Runs::default();
    let mut outcomes = Vec::new();
    let started = Instant::now();
    type Check = fn(&mut Runs) -> Outcome;
    let checks: [(&str, Check); 13] = [
        ("5", |_| criterion_5()),
        ("6", |_| criterion_6()),
        ("7", |_| criterion_7()),
        ("8", |_| criterion_8()),
        ("10", |_| criterion_10()),
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("9", criterion_9),
        ("4", |_| criterion_4()),
        ("11", |_| criterion_11()),
        ("12", criterion_12),
        ("sanity", learning_sanity),
    ];
    for (id, f) in checks {
        if !want(id) {
            continue;
        }
        let t = Instant::now();
        let o = f(&mut runs);
        println!(
            "{} criterion {}: {} [{:.0}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.detail,
            t.elapsed().as_secs_f64()
        );
        outcomes.push(o);
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.0}s",
        outcomes.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
