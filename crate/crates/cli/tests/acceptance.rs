//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 7 needs the UD English EWT corpus under `$EFB_DATA_DIR`; when it
//! is absent the line reads NOT RUN instead of PASS or FAIL.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use hmc_efb::discrim::{loss_and_gradient, Example, LogisticModel};
use hmc_efb::efb::{entropic_backward, entropic_forward, posterior_efb, EfbParams};
use hmc_efb::features::{Family, FeatureTemplate, FeatureVector};
use hmc_efb::hmc::{backward, forward, posterior_fb, HmcParams};
use hmc_efb::memm::{memm_forward, MemmModel};
use hmc_efb::oracle::{
    exact_label_posteriors, memm_posterior_bruteforce, posterior_bruteforce, random_stationary_instance,
    SyntheticInstance,
};
use hmc_efb_cli::{cmd_compare, cmd_evaluate, cmd_train, Cli, Command};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn stationary_instances(count: usize, seed: u64, max_n: usize, max_m: usize, max_t: usize) -> Vec<SyntheticInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_n);
            let m = rng.gen_range(1..=max_m);
            let t = rng.gen_range(1..=max_t);
            random_stationary_instance(&mut rng, n, m, t)
        })
        .collect()
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_1(instances: &[SyntheticInstance]) -> Outcome {
    let mut worst = 0.0f64;
    for inst in instances {
        let l = exact_label_posteriors(inst.params.pi(), inst.params.emit(), &inst.obs);
        let chain = EfbParams::from_hmc(&inst.params).unwrap();
        let efb = posterior_efb(&chain, l.view()).unwrap();
        let fb = posterior_fb(&inst.params, &inst.obs).unwrap();
        worst = worst.max(max_abs_diff(efb.values(), fb.values()));
    }
    verdict(worst <= 1e-10, format!("{} instances, max |efb - fb| = {worst:.3e}", instances.len()))
}

fn observation_probabilities(params: &HmcParams<f64>, obs: &[usize]) -> Vec<f64> {
    obs.iter()
        .map(|&y| (0..params.n_states()).map(|i| params.pi()[i] * params.emit()[[i, y]]).sum())
        .collect()
}

fn criterion_2(instances: &[SyntheticInstance]) -> Outcome {
    let mut worst = 0.0f64;
    for inst in instances {
        let params = &inst.params;
        let l = exact_label_posteriors(params.pi(), params.emit(), &inst.obs);
        let chain = EfbParams::from_hmc(params).unwrap();
        let (ef, eb) = (entropic_forward(&chain, l.view()).unwrap(), entropic_backward(&chain, l.view()).unwrap());
        let (f, b) = (forward(params, &inst.obs).unwrap(), backward(params, &inst.obs).unwrap());
        let py = observation_probabilities(params, &inst.obs);
        for t in 0..inst.obs.len() {
            let prefix: f64 = py[..=t].iter().product();
            let suffix: f64 = py[t + 1..].iter().product();
            for (x, y) in ef.unscaled(t).iter().zip(f.unscaled(t).iter()) {
                worst = worst.max((x * prefix - y).abs() / y.abs());
            }
            for (x, y) in eb.unscaled(t).iter().zip(b.unscaled(t).iter()) {
                worst = worst.max((x * suffix - y).abs() / y.abs());
            }
        }
    }
    verdict(worst <= 1e-10, format!("max relative deviation = {worst:.3e}"))
}

fn random_memm(rng: &mut ChaCha8Rng, n_features: usize, n: usize) -> MemmModel<f64> {
    let mut l0 = LogisticModel::<f64>::zeros(n_features, n, false).unwrap();
    let mut l1 = LogisticModel::<f64>::zeros(n_features, n, true).unwrap();
    l0.weights_mut().mapv_inplace(|_| rng.gen_range(-3.0..3.0));
    l1.weights_mut().mapv_inplace(|_| rng.gen_range(-3.0..3.0));
    MemmModel::new(l0, l1).unwrap()
}

fn random_features(rng: &mut ChaCha8Rng, n_features: usize, len: usize) -> Vec<FeatureVector> {
    (0..len)
        .map(|_| {
            let k = rng.gen_range(1..=3);
            FeatureVector { active: (0..k).map(|_| (Family::Word, rng.gen_range(0..n_features as u32))).collect() }
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let instances = stationary_instances(300, 3, 3, 4, 6);
    let fb_worst = instances
        .iter()
        .map(|inst| {
            let fast = posterior_fb(&inst.params, &inst.obs).unwrap();
            let slow = posterior_bruteforce(&inst.params, &inst.obs).unwrap();
            max_abs_diff(fast.values(), slow.values())
        })
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut memm_worst = 0.0f64;
    for _ in 0..300 {
        let n = rng.gen_range(1..=4);
        let len = rng.gen_range(1..=6);
        let model = random_memm(&mut rng, 6, n);
        let (init, steps) = model.tables(&random_features(&mut rng, 6, len)).unwrap();
        let fast = memm_forward(init.view(), &steps).unwrap();
        let slow = memm_posterior_bruteforce(init.view(), &steps).unwrap();
        memm_worst = memm_worst.max(max_abs_diff(&fast, &slow));
    }
    verdict(
        fb_worst <= 1e-9 && memm_worst <= 1e-10,
        format!("fb vs enumeration {fb_worst:.3e} over 300 chains; memm vs enumeration {memm_worst:.3e} over 300 chains"),
    )
}

fn criterion_4() -> Outcome {
    let pi = array![4.0f64 / 7.0, 3.0 / 7.0];
    let a = array![[0.7, 0.3], [0.4, 0.6]];
    let l = array![[6.0 / 7.0, 1.0 / 7.0], [6.0 / 7.0, 1.0 / 7.0]];
    let chain = EfbParams::new(pi.clone(), a.clone()).unwrap();
    let alpha2 = entropic_forward(&chain, l.view()).unwrap().unscaled(1);
    let beta1 = entropic_backward(&chain, l.view()).unwrap().unscaled(0);
    let post = posterior_efb(&chain, l.view()).unwrap();

    // Oracle: an HMC whose exact L equals the table above, enumerated path by path.
    // b(0|0)/b(0|1) must be (6/7 / 4/7) / (1/7 / 3/7) = 4.5.
    let emit = array![[0.9, 0.1], [0.2, 0.8]];
    let hmc = HmcParams::new(pi.clone(), a, emit.clone()).unwrap();
    let oracle_l = exact_label_posteriors(&pi, &emit, &[0, 0]);
    let oracle = posterior_bruteforce(&hmc, &[0, 0]).unwrap();

    // 0.896104 and 0.103896 are 69/77 and 8/77 rounded to six places.
    let worst: f64 = [
        (alpha2[0] - 6.9 / 7.0).abs(),
        (alpha2[1] - 0.8 / 7.0).abs(),
        (beta1[0] - 1.15).abs(),
        (beta1[1] - 0.8).abs(),
        (post.row(0)[0] - 69.0 / 77.0).abs(),
        (post.row(0)[1] - 8.0 / 77.0).abs(),
        max_abs_diff(&oracle_l, &l),
        max_abs_diff(post.values(), oracle.values()),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let rounded_ok = (post.row(0)[0] - 0.896104).abs() <= 5e-7 && (post.row(0)[1] - 0.103896).abs() <= 5e-7;
    verdict(
        rounded_ok && worst <= 1e-9,
        format!(
            "alpha2 = ({:.9}, {:.9}), beta1 = ({:.9}, {:.9}), posterior t=1 = ({:.6}, {:.6}), max deviation {:.3e}",
            alpha2[0],
            alpha2[1],
            beta1[0],
            beta1[1],
            post.row(0)[0],
            post.row(0)[1],
            worst
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let models = 25;
    for _ in 0..models {
        let n_features = rng.gen_range(2..=6);
        let n_labels = rng.gen_range(2..=4);
        let cond = rng.gen_bool(0.5);
        let mut model = LogisticModel::<f64>::zeros(n_features, n_labels, cond).unwrap();
        model.weights_mut().mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        let batch: Vec<Example> = (0..rng.gen_range(1..=8))
            .map(|_| Example {
                features: random_features(&mut rng, n_features, 1).pop().unwrap(),
                prev: cond.then(|| rng.gen_range(0..n_labels)),
                target: rng.gen_range(0..n_labels),
            })
            .collect();
        let l2 = rng.gen_range(1e-3..1e-1);
        let (_, grad) = loss_and_gradient(&model, &batch, l2).unwrap();
        for ((r, c), &g) in grad.indexed_iter() {
            let mut plus = model.clone();
            plus.weights_mut()[[r, c]] += h;
            let mut minus = model.clone();
            minus.weights_mut()[[r, c]] -= h;
            let fd = (loss_and_gradient(&plus, &batch, l2).unwrap().0 - loss_and_gradient(&minus, &batch, l2).unwrap().0)
                / (2.0 * h);
            let denom = g.abs().max(fd.abs()).max(1e-8);
            worst = worst.max((g - fd).abs() / denom);
        }
    }
    verdict(worst <= 1e-5, format!("{models} models, max relative error = {worst:.3e}"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst = 0.0f64;
    let mut positions = 0usize;
    for _ in 0..500 {
        let n = rng.gen_range(1..=8);
        let len = rng.gen_range(1..=40);
        let model = random_memm(&mut rng, 10, n);
        let (init, steps) = model.tables(&random_features(&mut rng, 10, len)).unwrap();
        let alpha = memm_forward(init.view(), &steps).unwrap();
        for row in alpha.rows() {
            worst = worst.max((row.sum() - 1.0).abs());
            positions += 1;
        }
    }
    verdict(worst <= 1e-12, format!("{positions} positions, max |sum - 1| = {worst:.3e}"))
}

fn find_ud_english() -> Option<(PathBuf, PathBuf)> {
    let dir = PathBuf::from(std::env::var_os(hmc_efb_cli::DATA_DIR_VAR)?);
    [dir.clone(), dir.join("UD_English-EWT")].into_iter().find_map(|d| {
        let train = d.join("en_ewt-ud-train.conllu");
        let test = d.join("en_ewt-ud-test.conllu");
        (train.exists() && test.exists()).then_some((train, test))
    })
}

fn criterion_7() -> Outcome {
    let Some((train, test)) = find_ud_english() else {
        return Outcome::NotRun(format!(
            "UD English EWT not found; set {} to a directory holding en_ewt-ud-train.conllu and en_ewt-ud-test.conllu",
            hmc_efb_cli::DATA_DIR_VAR
        ));
    };
    let cli = Cli::parse_args(&["compare", train.to_str().unwrap(), test.to_str().unwrap(), "--features", "nf,lf1,lf2"]);
    let Command::Compare(args) = cli.command else { unreachable!() };
    let mut sink = Vec::new();
    let rows = match cmd_compare(&args, &mut sink) {
        Ok(rows) => rows,
        Err(e) => return Outcome::Fail(format!("compare failed: {e}")),
    };
    let get = |t: FeatureTemplate| rows.iter().find(|(tt, _, _)| *tt == t).unwrap();
    let (_, memm_lf1, efb_lf1) = get(FeatureTemplate::Lf1);
    let efb_global = efb_lf1.global_rate().unwrap_or(f64::NAN);
    let memm_global = memm_lf1.global_rate().unwrap_or(f64::NAN);
    let uw: Vec<f64> = [FeatureTemplate::Nf, FeatureTemplate::Lf1, FeatureTemplate::Lf2]
        .into_iter()
        .map(|t| get(t).2.uw_rate().unwrap_or(f64::NAN))
        .collect();
    let a = efb_global < memm_global;
    let b = (efb_global - 8.01).abs() <= 1.5;
    let c = uw[0] > uw[1] && uw[1] > uw[2];
    let mark = |ok: bool| if ok { "ok" } else { "FAILED" };
    verdict(
        a && b && c,
        format!(
            "(a) efb {efb_global:.2}% < memm {memm_global:.2}% {}; (b) |efb - 8.01| <= 1.5 {}; (c) efb UW nf/lf1/lf2 = {:.2}/{:.2}/{:.2} {}",
            mark(a),
            mark(b),
            uw[0],
            uw[1],
            uw[2],
            mark(c)
        ),
    )
}

fn train_once(corpus: &Path, decoder: &str, out: &Path) -> Vec<u8> {
    let cli = Cli::parse_args(&[
        "train",
        corpus.to_str().unwrap(),
        "--decoder",
        decoder,
        "--features",
        "lf2",
        "--epochs",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    let Command::Train(args) = cli.command else { unreachable!() };
    let mut summary = Vec::new();
    cmd_train(&args, &mut summary).unwrap();
    std::fs::read(out).unwrap()
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let train = common::write_file(dir.path(), "train.conllu", &common::synthetic_conllu(80, 80));
    let test = common::write_file(dir.path(), "test.conllu", &common::synthetic_conllu(81, 30));
    let mut failures = Vec::new();
    for decoder in ["hmc-fb", "hmc-efb", "memm", "hmc-naive-features"] {
        let a = train_once(&train, decoder, &dir.path().join("a.bin"));
        let b = train_once(&train, decoder, &dir.path().join("b.bin"));
        if a != b {
            failures.push(format!("{decoder}: model files differ"));
        }
        let evaluate = || {
            let model = dir.path().join("a.bin");
            let cli = Cli::parse_args(&["evaluate", "--model", model.to_str().unwrap(), test.to_str().unwrap()]);
            let Command::Evaluate(args) = cli.command else { unreachable!() };
            let mut out = Vec::new();
            let report = cmd_evaluate(&args, &mut out).unwrap();
            (report, out)
        };
        if evaluate() != evaluate() {
            failures.push(format!("{decoder}: reports differ"));
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "4 decoders: byte-identical model files and identical reports".to_owned()
        } else {
            failures.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let stationary = stationary_instances(1200, 1, 5, 6, 10);
    let runs: [(usize, &dyn Fn() -> Outcome); 8] = [
        (1, &|| criterion_1(&stationary)),
        (2, &|| criterion_2(&stationary)),
        (3, &criterion_3),
        (4, &criterion_4),
        (5, &criterion_5),
        (6, &criterion_6),
        (7, &criterion_7),
        (8, &criterion_8),
    ];
    let criteria: Vec<(usize, Outcome, f64)> = runs
        .iter()
        .map(|(k, run)| {
            let start = Instant::now();
            let outcome = run();
            (*k, outcome, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut failed = 0;
    for (k, outcome, secs) in &criteria {
        match outcome {
            Outcome::Pass(d) => println!("criterion {k}: PASS  {d} [{secs:.1}s]"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {k}: FAIL  {d} [{secs:.1}s]");
            }
            Outcome::NotRun(d) => println!("criterion {k}: NOT RUN  {d}"),
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
