//! Acceptance runner: one PASS/FAIL line per criterion.
//!
//! Exits 0 even when a criterion fails so that `cargo test` reports the
//! suite rather than aborting on it; set `QBDE_ACCEPTANCE_STRICT=1` to turn
//! any FAIL into a nonzero exit.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{bde_reference, finite_diff};
use qbde_core::bde::{behavior_score, fit_thresholds, recon_errors, BdeNet, Thresholds};
use qbde_core::pipeline::{
    cmd_detect, cmd_ingest, cmd_synth, cmd_train, load_dataset, loss_path, RunConfig, DETECTION_FILE,
};
use qbde_core::qgan::{gen_grads, loss_g, mean_distribution, Trainer, TrainConfig};
use qbde_core::qsim::{generator_probs, run_generator_circuit};
use qbde_core::{DiscriminatorNet, Entangler, GeneratorParams, ProbVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Runner {
    passed: usize,
    total: usize,
}

impl Runner {
    fn check(&mut self, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let o = f();
        self.record(name, budget, t.elapsed(), o);
    }

    /// Reports a criterion whose work was timed elsewhere.
    fn record(&mut self, name: &str, budget: Duration, elapsed: Duration, o: Outcome) {
        let pass = o.pass && elapsed <= budget;
        self.total += 1;
        self.passed += pass as usize;
        println!(
            "{} {name}: {} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
}

fn random_params(rng: &mut ChaCha8Rng, n: usize, k: usize) -> GeneratorParams {
    let angles = (0..(k + 1) * n)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    GeneratorParams::new(n, k, angles).unwrap()
}

fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> ProbVector {
    let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    ProbVector::new(raw.into_iter().map(|v| v / s).collect()).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn gradient_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let n = 1 + case % 3;
        let k = case % 5;
        let ent = if case % 2 == 0 { Entangler::Ring } else { Entangler::Linear };
        let params = random_params(&mut rng, n, k);
        let cfg = TrainConfig::default();
        let net = DiscriminatorNet::init(&cfg.disc_sizes(1 << n), &mut rng).unwrap();
        let analytic = gen_grads(&params, ent, &net).unwrap();
        let fd = finite_diff(params.angles(), 1e-5, |a| {
            let p = GeneratorParams::new(n, k, a.to_vec()).unwrap();
            loss_g(&net, &[generator_probs(&p, ent)]).unwrap()
        });
        for (a, f) in analytic.iter().zip(&fd) {
            worst = worst.max((a - f).abs());
        }
    }
    outcome(worst < 1e-5, format!("50 configs, max |shift - fd| = {worst:.2e}"))
}

fn circuit_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = 1 + case % 3;
        let k = case % 5;
        let ent = if case % 2 == 0 { Entangler::Ring } else { Entangler::Linear };
        let params = random_params(&mut rng, n, k);
        let fast = run_generator_circuit(&params, ent);
        for (a, b) in fast.amplitudes().iter().zip(common::dense_state(&params, ent)) {
            worst = worst.max((a - b).norm());
        }
    }
    outcome(worst < 1e-10, format!("100 sets, max amplitude error = {worst:.2e}"))
}

struct Loading {
    tv: Vec<f64>,
    loss_g: Vec<f64>,
    loss_d: Vec<f64>,
}

fn loading_runs() -> Loading {
    let target = ProbVector::new(vec![0.5, 0.25, 0.15, 0.1]).unwrap();
    let mut out = Loading { tv: vec![], loss_g: vec![], loss_d: vec![] };
    for seed in 0..5 {
        let cfg = TrainConfig { depth: 4, seed, epochs: 1000, ..TrainConfig::default() };
        let mut tr = Trainer::new(vec![target.clone(); 16], cfg).unwrap();
        let last = *tr.run(1000).unwrap().last().unwrap();
        let p = generator_probs(tr.params(), tr.config().entangler);
        out.tv.push(p.total_variation(&target));
        out.loss_g.push(last.loss_g);
        out.loss_d.push(last.loss_d);
    }
    out
}

fn depth_trend() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig { out_dir: tmp.path().to_path_buf(), ..RunConfig::default() };
    cmd_synth(&cfg).unwrap();
    cmd_ingest(&cfg).unwrap();
    let target = mean_distribution(&load_dataset(&cfg).unwrap().train_simplex()).unwrap();
    let mut medians = Vec::new();
    for k in [2, 8] {
        let ces = (0..5)
            .map(|seed| {
                let tc = TrainConfig { depth: k, seed, ..TrainConfig::default() };
                let epochs = tc.epochs;
                let mut tr = Trainer::new(vec![target.clone(); 16], tc).unwrap();
                tr.run(epochs).unwrap().last().unwrap().cross_entropy
            })
            .collect();
        medians.push(median(ces));
    }
    outcome(
        medians[1] <= medians[0],
        format!("median final cross-entropy K=2 {:.4}, K=8 {:.4}", medians[0], medians[1]),
    )
}

fn threshold_law_holds(th: &Thresholds, train_scores: &[f64]) -> bool {
    th.th_f == 2.0 * th.th_d && train_scores.iter().all(|&d| d <= th.th_d)
}

fn run_pipeline(dir: &Path) -> (RunConfig, qbde_core::pipeline::Detection) {
    let cfg = RunConfig { out_dir: dir.to_path_buf(), ..RunConfig::default() };
    cmd_synth(&cfg).unwrap();
    cmd_ingest(&cfg).unwrap();
    cmd_train(&cfg).unwrap();
    let det = cmd_detect(&cfg).unwrap();
    (cfg, det)
}

fn train_scores(det: &qbde_core::pipeline::Detection) -> Vec<f64> {
    det.rows
        .iter()
        .filter(|r| r.split == qbde_core::pipeline::Split::Train)
        .map(|r| r.d)
        .collect()
}

fn end_to_end(det: &qbde_core::pipeline::Detection) -> Outcome {
    let c = det.confusion.expect("synthetic data is labeled");
    let recall = if c.tp + c.fn_ == 0 { 1.0 } else { c.tp as f64 / (c.tp + c.fn_) as f64 };
    outcome(
        c.accuracy() >= 0.95 && det.train_abnormal() == 0,
        format!(
            "accuracy {:.4} (tp {} tn {} fp {} fn {}, recall {:.2}), training-window abnormal verdicts {}",
            c.accuracy(),
            c.tp,
            c.tn,
            c.fp,
            c.fn_,
            recall,
            det.train_abnormal()
        ),
    )
}

fn scoring_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut bad = 0;
    for _ in 0..1000 {
        let net = BdeNet::init(&mut rng);
        let x = random_simplex(&mut rng, 16);
        let k = rng.random_range(1..=8);
        let reference = generator_probs(&random_params(&mut rng, 4, k), Entangler::Ring);
        let (r_d, r_n) = recon_errors(&x, &reference, &net).unwrap();
        let ok = behavior_score(r_d, r_n, 0.0) == r_d
            && behavior_score(r_d, r_n, 1.0) == r_n
            && recon_errors(&reference, &reference, &net).unwrap() == (0.0, 0.0);
        bad += !ok as usize;
    }
    outcome(bad == 0, format!("1000 cases, {bad} violations"))
}

fn bde_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut fwd = 0.0f64;
    for _ in 0..200 {
        let net = BdeNet::init(&mut rng);
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (score, emb) = net.forward(&x).unwrap();
        let (rs, re) = bde_reference(&net, &x);
        fwd = fwd.max((score - rs).abs());
        for (a, b) in emb.iter().zip(&re) {
            fwd = fwd.max((a - b).abs());
        }
    }
    // relative error with the denominator floored at 1e-3
    let mut grad = 0.0f64;
    for _ in 0..10 {
        let net = BdeNet::init(&mut rng);
        let xs: Vec<Vec<f64>> = (0..6).map(|_| random_simplex(&mut rng, 16).into_inner()).collect();
        let refs: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let ys = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let analytic = net.loss_grad(&refs, &ys).unwrap();
        let fd = finite_diff(net.params(), 1e-6, |w| {
            qbde_core::bde::bce_loss(&BdeNet::from_params(w.to_vec()).unwrap(), &refs, &ys).unwrap()
        });
        for (a, f) in analytic.iter().zip(&fd) {
            grad = grad.max((a - f).abs() / f.abs().max(1e-3));
        }
    }
    outcome(
        fwd < 1e-10 && grad < 1e-5,
        format!("forward max error {fwd:.2e}, gradient max relative error {grad:.2e}"),
    )
}

fn main() {
    let mut r = Runner { passed: 0, total: 0 };
    r.check("gradient exactness", Duration::from_secs(30), gradient_exactness);
    r.check("circuit oracle equivalence", Duration::from_secs(5), circuit_oracle);

    let t = Instant::now();
    let loading = loading_runs();
    let loading_time = t.elapsed();
    let m = median(loading.tv.clone());
    r.record(
        "distribution loading",
        Duration::from_secs(120),
        loading_time,
        outcome(m < 0.05, format!("median TV over 5 seeds {m:.4} {:.4?}", loading.tv)),
    );
    let ln2 = std::f64::consts::LN_2;
    let g_ok = loading.loss_g.iter().all(|l| (l - ln2).abs() <= 0.3);
    let d_ok = loading.loss_d.iter().all(|l| (l - 2.0 * ln2).abs() <= 0.6);
    r.record(
        "equilibrium behavior",
        Duration::from_secs(120),
        loading_time,
        outcome(
            g_ok && d_ok,
            format!("final L_G {:.3?}, L_D {:.3?} (same runs as loading)", loading.loss_g, loading.loss_d),
        ),
    );
    r.check("depth trend", Duration::from_secs(600), depth_trend);

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let (cfg_a, det_a) = run_pipeline(a.path());
    let e2e_time = t.elapsed();
    r.record("end-to-end synthetic detection", Duration::from_secs(600), e2e_time, end_to_end(&det_a));
    let t = Instant::now();
    let (cfg_b, det_b) = run_pipeline(b.path());
    let rerun_time = t.elapsed();

    r.check("threshold law", Duration::from_secs(5), || {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        let mut ok = threshold_law_holds(&det_a.thresholds, &train_scores(&det_a))
            && threshold_law_holds(&det_b.thresholds, &train_scores(&det_b));
        for _ in 0..1000 {
            let scores: Vec<f64> = (0..rng.random_range(1..50)).map(|_| rng.random::<f64>() * 10.0).collect();
            ok &= threshold_law_holds(&fit_thresholds(&scores, 0.1).unwrap(), &scores);
        }
        outcome(ok, "pipeline runs and 1000 random score sets")
    });
    r.check("scoring identities", Duration::from_secs(30), scoring_identities);
    r.check("BDE network correctness", Duration::from_secs(30), bde_correctness);
    let same = |p: &Path, q: &Path| std::fs::read(p).unwrap() == std::fs::read(q).unwrap();
    let losses = same(&loss_path(&cfg_a), &loss_path(&cfg_b));
    let detection = same(&a.path().join(DETECTION_FILE), &b.path().join(DETECTION_FILE));
    r.record(
        "determinism",
        Duration::from_secs(600),
        rerun_time,
        outcome(
            losses && detection,
            format!("loss CSV identical: {losses}, detection CSV identical: {detection}"),
        ),
    );

    println!("{}/{} criteria passed", r.passed, r.total);
    if r.passed < r.total && std::env::var("QBDE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
