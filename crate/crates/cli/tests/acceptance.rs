//! Acceptance criteria. Each test writes one `criterion N: PASS|FAIL` line
//! straight to stderr so the verdicts survive output capture.

use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wan_core::experiments::{exact_residual, preset_config, problem, ProblemId};
use wan_core::geometry::{DomainKind, SampleBatch, Slices};
use wan_core::losses::{evaluate, LossKind, LossSpec, PdeSpec, Prepared, Test, Trial, Wrt};
use wan_core::networks::{adversary_arch, DnnParams, ModelKind, TrialNet, TrialSpec, XnodeArch};
use wan_core::theory_lab::{cea_instances, infsup_eigen_oracle, nested_hat_operator, stabilized_discrepancy, Fault};
use wan_core::trainer::{train, TrainConfig, TrainHistory};

fn report(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

#[test]
fn criterion_01_stabilized_sup_closed_form() {
    let t = Instant::now();
    let worst = stabilized_discrepancy(100, 2024, false, Fault::None).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = worst <= 1e-6 && secs < 5.0;
    report(1, pass, &format!("worst scaled gap {worst:.2e} over 100 draws, {secs:.2}s"));
    assert!(pass);
}

#[test]
fn criterion_02_shifted_sup_closed_form() {
    let t = Instant::now();
    let worst = stabilized_discrepancy(100, 2025, true, Fault::None).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = worst <= 1e-6 && secs < 5.0;
    report(2, pass, &format!("worst scaled gap {worst:.2e} over 100 draws, {secs:.2}s"));
    assert!(pass);
}

#[test]
fn criterion_03_quasi_optimality() {
    let t = Instant::now();
    let rs = cea_instances(24, 77).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let worst = rs.iter().map(|(r, b)| r / b).fold(0.0, f64::max);
    let max_ratio = rs.iter().map(|r| r.0).fold(0.0, f64::max);
    let pass = rs.iter().all(|(r, b)| r <= b) && secs < 10.0;
    report(3, pass, &format!("{} instances, max ratio {max_ratio:.4}, max ratio/bound {worst:.4}, {secs:.2}s", rs.len()));
    assert!(pass);
}

#[test]
fn criterion_04_infsup_probe() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut ok = true;
    let mut worst_gap: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    // coarse hats nested in a refinement, with a nonnegative reaction term
    let pairs = [(1, 3), (1, 5), (2, 5), (3, 7), (3, 11), (4, 9), (5, 11), (7, 15), (2, 11), (5, 23)];
    for (coarse, fine) in pairs {
        let r = rand::Rng::random_range(&mut rng, 0.0..5.0);
        let (op, alpha) = nested_hat_operator(coarse, fine, r).unwrap();
        let k = op.infsup();
        let oracle = infsup_eigen_oracle(&op);
        worst_gap = worst_gap.max((k.kappa - oracle).abs());
        min_margin = min_margin.min(k.kappa - alpha);
        ok &= k.kappa >= alpha - 1e-12 && (k.kappa - oracle).abs() <= 1e-8 && !k.rank_deficient;
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = ok && secs < 10.0;
    report(4, pass, &format!("10 instances, max |κ − oracle| {worst_gap:.2e}, min κ − α {min_margin:.3e}, {secs:.2}s"));
    assert!(pass);
}

struct FdCase {
    problem: ProblemId,
    model: ModelKind,
    pseudo_time: bool,
}

/// Worst `|fd − g| / max(|g|, 1e-2·max|g|)` at 20 random coordinates.
fn worst_fd_gap(pde: &PdeSpec, spec: &LossSpec, net: &TrialNet, v: Option<&DnnParams>, prep: &Prepared, wrt: Wrt, rng: &mut ChaCha8Rng) -> f64 {
    let test = v.map(Test::Net);
    let grad = evaluate(pde, spec, Trial::Net(net), test, prep, wrt).unwrap().grad.unwrap();
    let base = if wrt == Wrt::Theta { net.flat() } else { v.unwrap().data.clone() };
    assert_eq!(grad.len(), base.len());
    let gmax = grad.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let at = |w: &[f64]| {
        if wrt == Wrt::Theta {
            let mut n2 = net.clone();
            n2.set_flat(w).unwrap();
            evaluate(pde, spec, Trial::Net(&n2), test, prep, Wrt::Nothing).unwrap().value
        } else {
            let mut v2 = v.unwrap().clone();
            v2.data.copy_from_slice(w);
            evaluate(pde, spec, Trial::Net(net), Some(Test::Net(&v2)), prep, Wrt::Nothing).unwrap().value
        }
    };
    let mut worst: f64 = 0.0;
    for i in sample(rng, base.len(), 20.min(base.len())) {
        // large enough that cancellation in the loss stays below the tolerance
        let h = 1e-4 * base[i].abs().max(1e-1);
        let (mut a, mut b) = (base.clone(), base.clone());
        a[i] += h;
        b[i] -= h;
        let fd = (at(&a) - at(&b)) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1e-2 * gmax).max(1e-300));
    }
    worst
}

#[test]
fn criterion_05_gradients() {
    let t = Instant::now();
    let cases = [
        FdCase { problem: ProblemId::Ex1, model: ModelKind::XnodeRecursive, pseudo_time: false },
        FdCase { problem: ProblemId::Ex1, model: ModelKind::Dnn, pseudo_time: false },
        FdCase { problem: ProblemId::Ex2, model: ModelKind::PseudoTimeXnode, pseudo_time: true },
        FdCase { problem: ProblemId::Ex3, model: ModelKind::DnnRecursive, pseudo_time: false },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut max_params = 0;
    for case in &cases {
        let pde = problem(case.problem, 2).unwrap();
        let dim = pde.domain.dim();
        let slices = Slices { initial: pde.domain.kind == DomainKind::TimeBox || case.pseudo_time, terminal: case.pseudo_time };
        let batch = SampleBatch::draw(&pde.domain, 48, 24, slices, &mut rng).unwrap();
        let spec_net = TrialSpec { kind: case.model, input_dim: dim, layers: 3, hid1: 6, hid2: 5, n_t: 4, horizon: 1.0 };
        let net = TrialNet::init(&spec_net, &mut rng).unwrap();
        let v = DnnParams::init(adversary_arch(dim, 2, 12).unwrap(), &mut rng);
        max_params = max_params.max(net.len()).max(v.len());
        for kind in [LossKind::Pinn, LossKind::Wan, LossKind::Cwan, LossKind::Scwan] {
            if kind == LossKind::Pinn && case.pseudo_time {
                continue;
            }
            let spec = LossSpec { kind, alpha: 3.0, beta: 2.0, gamma: 1.5, gamma_d: 0.2, include_terminal: case.pseudo_time };
            let prep = Prepared::new(&pde, &batch, net.needs_datum(), kind == LossKind::Pinn).unwrap();
            let vopt = kind.adversarial().then_some(&v);
            worst = worst.max(worst_fd_gap(&pde, &spec, &net, vopt, &prep, Wrt::Theta, &mut rng));
            checked += 1;
            if kind.adversarial() {
                worst = worst.max(worst_fd_gap(&pde, &spec, &net, vopt, &prep, Wrt::Eta, &mut rng));
                checked += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = worst <= 1e-5 && max_params <= 500 && secs < 60.0;
    report(5, pass, &format!("{checked} gradients x 20 coordinates, worst relative gap {worst:.2e}, largest net {max_params} params, {secs:.1}s"));
    assert!(pass);
}

#[test]
fn criterion_06_parameter_counts() {
    let xnode = |recursive| XnodeArch { datum_dim: 1, state_dim: 20, field_width: 10, field_layers: 8, space_dim: 5, recursive }.param_count().unwrap();
    let adv = adversary_arch(6, 9, 50).unwrap().param_count();
    let got = (xnode(false), xnode(true), adv);
    let pass = got == (2161, 1501, 23351);
    report(6, pass, &format!("XNODE {} / recursive {} / adversary {}", got.0, got.1, got.2));
    assert!(pass);
}

#[test]
fn criterion_07_manufactured_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for id in [ProblemId::Ex1, ProblemId::Ex2, ProblemId::Ex3] {
        let pde = problem(id, preset_config(id).d).unwrap();
        let pts = pde.domain.sample_interior(1000, &mut rng);
        for r in 0..pts.nrows() {
            worst = worst.max(exact_residual(&pde, &pts.row(r).to_vec()).abs());
        }
    }
    let pass = worst <= 1e-10;
    report(7, pass, &format!("max |residual| {worst:.2e} over 3 x 1000 points"));
    assert!(pass);
}

#[test]
fn criterion_08_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = preset_config(ProblemId::Ex1);
    c.d = 2;
    c.n_r = 100;
    c.n_b = 100;
    c.n_t = 5;
    c.n_max = 4;
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, c.to_json()).unwrap();
    let run = |dir: &str| {
        let out = tmp.path().join(dir);
        let st = Command::new(env!("CARGO_BIN_EXE_wan"))
            .args(["run", cfg.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(matches!(st.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&st.stderr));
        std::fs::read(out.join("history.csv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    let pass = a == b && a.len() > 30;
    report(8, pass, &format!("two runs, history.csv {} bytes each, identical: {}", a.len(), a == b));
    assert!(pass);
}

const DESK_SEEDS: [u64; 3] = [1, 2, 3];

fn desk_config(loss: LossKind, seed: u64) -> TrainConfig {
    let mut c = preset_config(ProblemId::Ex1);
    c.d = 2;
    c.n_r = 1000;
    c.n_b = 1000;
    c.loss = loss;
    c.model = ModelKind::XnodeRecursive;
    c.gamma_d = 1e-3;
    c.n_max = 300;
    // run the full budget so that steps 100 to 300 exist for every seed
    c.epsilon = 1e-300;
    c.seed = seed;
    c
}

/// Desk-scale runs shared by criteria 9 and 10: (cwan, wan) per seed.
fn desk_runs() -> &'static Vec<(TrainHistory, TrainHistory)> {
    static RUNS: OnceLock<Vec<(TrainHistory, TrainHistory)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let pde = problem(ProblemId::Ex1, 2).unwrap();
        DESK_SEEDS
            .iter()
            .map(|&s| {
                let c = train(&desk_config(LossKind::Cwan, s), &pde).unwrap().history;
                let w = train(&desk_config(LossKind::Wan, s), &pde).unwrap().history;
                (c, w)
            })
            .collect()
    })
}

fn min_error(h: &TrainHistory, upto: usize) -> f64 {
    h.records.iter().filter(|r| r.step <= upto).map(|r| r.rel_error).fold(f64::INFINITY, f64::min)
}

/// Standard deviation of `log e_{k+1} − log e_k` over steps 100 to 300.
fn log_jitter(h: &TrainHistory) -> f64 {
    let logs: Vec<f64> = h.records.iter().filter(|r| (100..=300).contains(&r.step)).map(|r| r.rel_error.ln()).collect();
    let d: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
    if d.len() < 2 {
        return f64::NAN;
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt()
}

#[test]
fn criterion_09_desk_scale_accuracy() {
    let t = Instant::now();
    let runs = desk_runs();
    let errs: Vec<f64> = runs.iter().map(|(c, _)| min_error(c, 300)).collect();
    let first_below: Vec<String> = runs
        .iter()
        .map(|(c, _)| c.records.iter().find(|r| r.rel_error < 0.05).map_or("-".into(), |r| r.step.to_string()))
        .collect();
    let hits = errs.iter().filter(|&&e| e < 0.05).count();
    let pass = hits >= 2;
    report(
        9,
        pass,
        &format!("{hits}/3 seeds below 5%; best errors {errs:.4?}; first step below 5% {first_below:?}; {:.0}s", t.elapsed().as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn criterion_10_stability_comparison() {
    let runs = desk_runs();
    let pairs: Vec<(f64, f64)> = runs.iter().map(|(c, w)| (log_jitter(c), log_jitter(w))).collect();
    let wins = pairs.iter().filter(|(c, w)| c < w).count();
    let pass = wins >= 2;
    report(10, pass, &format!("cwan steadier in {wins}/3 pairs; (cwan, wan) jitter {pairs:.4?}"));
    assert!(pass);
}

#[test]
#[ignore = "full-scale run, hours of CPU time"]
fn criterion_11_full_scale() {
    let pde = problem(ProblemId::Ex1, 5).unwrap();
    let mut c = preset_config(ProblemId::Ex1);
    c.loss = LossKind::Cwan;
    c.gamma_d = 1e-3;
    let t = Instant::now();
    let h = train(&c, &pde).unwrap().history;
    let secs = t.elapsed().as_secs_f64();
    let pass = min_error(&h, 300) < 0.01;
    report(11, pass, &format!("stop {} after {} steps, final error {:.4e}, {:.1}s per step", h.stop.name(), h.steps, h.final_error().unwrap_or(f64::NAN), secs / h.steps.max(1) as f64));
    assert!(pass);
}
