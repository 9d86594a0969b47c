//! End-to-end acceptance suite. Runs without the libtest harness so the
//! PASS/FAIL line of every criterion is always printed; exits non-zero if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use teon::diagnostics::top_singular_alignment;
use teon::harness::gradcheck::{check_directions, check_entries, TOLERANCE};
use teon::harness::tasks::{DeepLinear, MicroAttention, StackedQuadratic, Task};
use teon::harness::{run, train, RunConfig};
use teon::linalg::{fold, frobenius, matricize, Matrix, Mode, Tensor3};
use teon::norms::sampling::feasible_point;
use teon::norms::{
    build_max_gain_tensor, check_comparability, convergence_bound_pair, eval_ntr_bound, norm, ntr_step, optimal_eta,
    rank_one_cone, simplified_bound, BoundInputs, NormFamily, NormKind, SharedFactor,
};
use teon::norms::sampling::random_semi_orthogonal;
use teon::ortho::{ortho_exact, ortho_ns, NsSchedule};
use teon::rng;

const ROUNDTRIP_TENSORS: usize = 1000;
const FROBENIUS_TOL: f64 = 1e-12;
const POLAR_MATRICES: usize = 500;
const SEMI_ORTHOGONALITY_TOL: f64 = 1e-10;
const IDEMPOTENCE_TOL: f64 = 1e-9;
const CUBIC_STEPS: usize = 30;
const CUBIC_TOL: f64 = 1e-6;
const NORM_TENSORS: usize = 1000;
const NORM_EXPANSION_TOL: f64 = 1e-12;
const TIGHTNESS_TOL: f64 = 1e-9;
const NTR_TENSORS: usize = 200;
const NTR_SAMPLES: usize = 10_000;
const NTR_TOL: f64 = 1e-8;
const BOUND_TOL: f64 = 1e-12;
const COLLAPSE_STEPS: usize = 200;
const ORDERING_THRESHOLD: f64 = 1e-3;
const ORDERING_SEEDS: u64 = 5;
const ALIGNMENT_PAIRS: usize = 200;
const ALIGNMENT_TOL: f64 = 1e-8;
const INVARIANCE_TOL: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn criterion(index: usize, name: &str, budget: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    let passed = out.passed && elapsed <= budget;
    println!(
        "{} {index:>2} {name}: {} [{:.2}s of {}s]",
        if passed { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    passed
}

fn roundtrip() -> Outcome {
    let mut r = rng::seeded(1);
    let (mut exact, mut worst) = (true, 0.0f64);
    for i in 0..ROUNDTRIP_TENSORS {
        let (m, n, k) = (1 + i % 16, 1 + (i * 7) % 16, 1 + (i * 3) % 8);
        let t: Tensor3 = rng::gaussian_tensor(&mut r, m, n, k);
        let reference = frobenius(&t);
        for mode in Mode::ALL {
            let x = matricize(&t, mode);
            exact &= fold(&x, mode, t.shape()).unwrap() == t;
            worst = worst.max((x.frobenius() - reference).abs() / reference);
        }
    }
    verdict(
        exact && worst <= FROBENIUS_TOL,
        format!("bit-exact={exact}, max relative frobenius drift {worst:.2e}"),
    )
}

fn gram_residual(o: &Matrix) -> f64 {
    let gram = if o.rows() >= o.cols() { o.t_matmul(o) } else { o.matmul_t(o) };
    gram.max_abs_diff(&Matrix::identity(gram.rows()))
}

fn polar() -> Outcome {
    let mut r = rng::seeded(2);
    let (mut ortho_res, mut idem, mut cubic) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..POLAR_MATRICES {
        let (rows, cols) = (1 + (i * 5) % 32, 1 + (i * 11) % 32);
        let a: Matrix = rng::gaussian_matrix(&mut r, rows, cols);
        let o = ortho_exact(&a).unwrap();
        ortho_res = ortho_res.max(gram_residual(&o));
        idem = idem.max(ortho_exact(&o).unwrap().max_abs_diff(&o));

        let rank = rows.min(cols);
        let u = random_semi_orthogonal(&mut r, rows, rank).unwrap();
        let v = random_semi_orthogonal(&mut r, cols, rank).unwrap();
        let sigma: Vec<f64> = (0..rank).map(|_| 0.1 + 0.9 * rand::Rng::random::<f64>(&mut r)).collect();
        let b = u.matmul(&Matrix::from_diag(rank, rank, &sigma)).matmul_t(&v);
        let approx = ortho_ns(&b, &NsSchedule::cubic(CUBIC_STEPS)).unwrap();
        cubic = cubic.max(approx.max_abs_diff(&u.matmul_t(&v)));
    }
    verdict(
        ortho_res <= SEMI_ORTHOGONALITY_TOL && idem <= IDEMPOTENCE_TOL && cubic <= CUBIC_TOL,
        format!("semi-orthogonality {ortho_res:.2e}, idempotence {idem:.2e}, cubic-vs-exact {cubic:.2e}"),
    )
}

fn norm_lemmas() -> Outcome {
    let mut r = rng::seeded(3);
    let mut violations = 0usize;
    for i in 0..NORM_TENSORS {
        let (m, n, k) = (1 + i % 8, 1 + (i * 5) % 8, 1 + (i * 3) % 6);
        let t: Tensor3 = rng::gaussian_tensor(&mut r, m, n, k);
        let fro = frobenius(&t) * (1.0 + NORM_EXPANSION_TOL);
        for mode in [Mode::One, Mode::Two] {
            violations += check_comparability(&t, mode).unwrap().violated as usize;
            violations += (norm(&t, NormKind::teon(mode)).unwrap() > fro) as usize;
        }
        violations += (norm(&t, NormKind::MUON).unwrap() > fro) as usize;
    }
    let g: Tensor3 = build_max_gain_tensor(8, 8, 4, Mode::One, 0).unwrap();
    let ratio = norm(&g, NormKind::teon(Mode::One)).unwrap() / norm(&g, NormKind::MUON).unwrap();
    verdict(
        violations == 0 && (ratio - 2.0).abs() <= TIGHTNESS_TOL,
        format!("{violations} violations, maximal-gain teon1/muon = {ratio:.15}"),
    )
}

fn steepest_descent() -> Outcome {
    let families = [
        NormFamily::Muon,
        NormFamily::Teon(Mode::One),
        NormFamily::Teon(Mode::Two),
        NormFamily::Teon(Mode::Three),
    ];
    let mut r = rng::seeded(4);
    let (mut gap, mut beaten, mut worst_margin) = (0.0f64, 0usize, f64::INFINITY);
    for i in 0..NTR_TENSORS {
        let family = families[i % families.len()];
        let shape = (1 + i % 3, 1 + (i / 3) % 3, 1 + (i / 9) % 3);
        let g: Tensor3 = rng::gaussian_tensor(&mut r, shape.0, shape.1, shape.2);
        let eta = 0.1 + rand::Rng::random::<f64>(&mut r);
        let step = ntr_step(&g, family, eta).unwrap();
        let value = g.inner(&step).unwrap();
        let dual = norm(&g, NormKind::dual(family)).unwrap();
        gap = gap.max((value + eta * dual).abs());
        for _ in 0..NTR_SAMPLES {
            let d = feasible_point(&mut r, shape, family, eta).unwrap();
            let other = g.inner(&d).unwrap();
            worst_margin = worst_margin.min(other - value);
            if other < value - NTR_TOL {
                beaten += 1;
            }
        }
    }
    verdict(
        gap <= NTR_TOL && beaten == 0,
        format!("max |objective + η·dual| {gap:.2e}, {beaten} sampled directions better, min margin {worst_margin:.2e}"),
    )
}

fn bounds() -> Outcome {
    let mut worst = 0.0f64;
    for a in 0..5 {
        for b in 0..5 {
            for c in 0..4 {
                let delta0 = 0.1 * 10f64.powi(a) / 3.0;
                let l = 0.05 * 4f64.powi(b);
                let t = 10u64.pow(c as u32 + 1);
                let eta = optimal_eta(delta0, l, t);
                let inputs = BoundInputs { delta0, l, eta, mu: 0.0, sigma: 0.0, rho: 1.0, t };
                let target = (2.0 * l * delta0 / t as f64).sqrt();
                worst = worst.max((eval_ntr_bound(&inputs).unwrap() - target).abs() / target);
                worst = worst.max((simplified_bound(delta0, l, t) - target).abs() / target);
            }
        }
    }
    let mut endpoints = 0.0f64;
    for k in [1usize, 2, 4, 8, 12] {
        let (l, kf) = (0.7, k as f64);
        let (teon, muon) = convergence_bound_pair(3.0, 500, l, l).unwrap();
        endpoints = endpoints.max((muon / teon - 1.0).abs());
        let (teon, muon) = convergence_bound_pair(3.0, 500, l, kf * l).unwrap();
        endpoints = endpoints.max((muon / teon - kf.sqrt()).abs());
    }
    verdict(
        worst <= BOUND_TOL && endpoints <= BOUND_TOL,
        format!("100-point grid max relative error {worst:.2e}, endpoint ratio error {endpoints:.2e}"),
    )
}

fn parse(text: &str) -> RunConfig {
    RunConfig::parse(text, Path::new("acceptance")).unwrap()
}

fn collapse() -> Outcome {
    let mut mismatches = Vec::new();
    for style in ["accumulate", "ema"] {
        for scheme in ["exact", "newton_schulz"] {
            let text = |optimizer: &str| {
                parse(&format!(
                    "steps = {COLLAPSE_STEPS}\nseed = 11\n[task]\nkind = \"deep_linear\"\ndepth = 4\nwidth = 8\nbatch = 16\n\
                     [optimizer]\n{optimizer}\neta = 0.01\nmu = 0.9\nmomentum_style = \"{style}\"\nscheme = \"{scheme}\"\n\
                     [grouping]\nk = 1\n[alignment]\nevery = 0\n"
                ))
            };
            let teon = train(&text("optimizer = \"teon\"\nmode = 1")).unwrap();
            let muon = train(&text("optimizer = \"muon\"")).unwrap();
            if teon.params != muon.params || teon.losses != muon.losses || teon.metrics_csv() != muon.metrics_csv() {
                mismatches.push(format!("{style}/{scheme}"));
            }
        }
    }
    verdict(
        mismatches.is_empty(),
        format!("4 combinations x {COLLAPSE_STEPS} steps, mismatches: {mismatches:?}"),
    )
}

fn gradients() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..3u64 {
        let tasks: Vec<Box<dyn Task>> = vec![
            Box::new(StackedQuadratic::gaussian(6, 5, 4, seed).unwrap()),
            Box::new(StackedQuadratic::aligned(8, 6, 4, 1.5, seed).unwrap()),
            Box::new(DeepLinear::new(3, 8, 10, seed).unwrap()),
            Box::new(MicroAttention::new(8, 16, 4, 3, 2, seed).unwrap()),
        ];
        for task in &tasks {
            let init = task.init();
            let mut r = rng::seeded(seed + 100);
            let shifted: Vec<Matrix> = init
                .iter()
                .map(|p| p.add(&rng::gaussian_matrix::<f64>(&mut r, p.rows(), p.cols()).scale(0.1)))
                .collect();
            for point in [&init, &shifted] {
                match check_entries(task.as_ref(), point, TOLERANCE) {
                    Ok(report) => worst = worst.max(report.max_error()),
                    Err(e) => failures.push(format!("{}: {e}", task.name())),
                }
                match check_directions(task.as_ref(), point, 16, seed, TOLERANCE) {
                    Ok(err) => worst = worst.max(err),
                    Err(e) => failures.push(format!("{}: {e}", task.name())),
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!("4 tasks x 3 seeds x 2 points, max scaled error {worst:.2e}, failures {failures:?}"),
    )
}

fn steps_to_threshold(optimizer: &str, eta: f64, seed: u64) -> Option<usize> {
    let config = parse(&format!(
        "steps = 80\nseed = {seed}\n[task]\nkind = \"aligned_quadratic\"\nm = 16\nn = 16\nk = 4\n\
         [optimizer]\n{optimizer}\neta = {eta}\nmu = 0.0\nscheme = \"exact\"\n[grouping]\nk = 4\n[alignment]\nevery = 0\n"
    ));
    train(&config).ok()?.steps_to_reach(ORDERING_THRESHOLD)
}

fn best_steps(optimizer: &str, seed: u64) -> Option<usize> {
    (0..=6).filter_map(|j| steps_to_threshold(optimizer, 2f64.powi(-j), seed)).min()
}

fn ordering() -> Outcome {
    let mut wins = 0;
    let mut counts = Vec::new();
    for seed in 0..ORDERING_SEEDS {
        let teon = best_steps("optimizer = \"teon\"\nmode = 1", seed);
        let muon = best_steps("optimizer = \"muon\"", seed);
        let ok = match (teon, muon) {
            (Some(t), Some(m)) => t <= m,
            (Some(_), None) => true,
            _ => false,
        };
        wins += ok as usize;
        counts.push(format!("{teon:?}/{muon:?}"));
    }
    verdict(
        wins == ORDERING_SEEDS as usize,
        format!("{wins}/{ORDERING_SEEDS} seeds, teon/muon best steps {counts:?}"),
    )
}

fn diagnostics() -> Outcome {
    let cone: Tensor3 = rank_one_cone(8, 8, 4, SharedFactor::Right, 5).unwrap();
    let (mut right_min, mut left_max) = (f64::INFINITY, 0.0f64);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                let al = top_singular_alignment(cone.slice(i), cone.slice(j)).unwrap();
                right_min = right_min.min(al.right_align);
                left_max = left_max.max(al.left_align);
            }
        }
    }
    let mut r = rng::seeded(6);
    let (mut symmetry, mut rotation) = (0.0f64, 0.0f64);
    for i in 0..ALIGNMENT_PAIRS {
        let (rows, cols) = (2 + i % 7, 2 + (i * 3) % 7);
        let a: Matrix = rng::gaussian_matrix(&mut r, rows, cols);
        let b: Matrix = rng::gaussian_matrix(&mut r, rows, cols);
        let ab = top_singular_alignment(&a, &b).unwrap();
        let ba = top_singular_alignment(&b, &a).unwrap();
        symmetry = symmetry
            .max((ab.left_align - ba.left_align).abs())
            .max((ab.right_align - ba.right_align).abs());
        let q = random_semi_orthogonal(&mut r, rows, rows).unwrap();
        let p = random_semi_orthogonal(&mut r, cols, cols).unwrap();
        let rot = top_singular_alignment(&q.matmul(&a).matmul(&p), &q.matmul(&b).matmul(&p)).unwrap();
        rotation = rotation
            .max((ab.left_align - rot.left_align).abs())
            .max((ab.right_align - rot.right_align).abs());
    }
    let ok = (right_min - 1.0).abs() <= ALIGNMENT_TOL
        && left_max <= ALIGNMENT_TOL
        && symmetry <= INVARIANCE_TOL
        && rotation <= INVARIANCE_TOL;
    verdict(
        ok,
        format!(
            "cone right_align min {right_min:.15}, left_align max {left_max:.2e}, \
             symmetry {symmetry:.2e}, rotation {rotation:.2e}"
        ),
    )
}

fn determinism() -> Outcome {
    let configs = [
        "steps = 30\nseed = 3\n[task]\nkind = \"quadratic\"\n[optimizer]\noptimizer = \"teon\"\nmode = 1\neta = 0.05\n",
        "steps = 30\nseed = 3\n[task]\nkind = \"aligned_quadratic\"\n[optimizer]\noptimizer = \"muon\"\neta = 0.05\n",
        "steps = 30\nseed = 3\n[task]\nkind = \"deep_linear\"\n[optimizer]\noptimizer = \"adamw\"\neta = 0.01\n",
        "steps = 30\nseed = 3\n[task]\nkind = \"micro_attention\"\n[optimizer]\noptimizer = \"teon\"\nmode = 2\n\
         eta = 0.02\nscheme = \"newton_schulz\"\n[alignment]\nevery = 10\n",
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for (i, text) in configs.iter().enumerate() {
        let config = parse(text);
        let (a, b) = (dir.path().join(format!("{i}a")), dir.path().join(format!("{i}b")));
        run(&config, &a).unwrap();
        run(&config, &b).unwrap();
        for file in ["metrics.csv", "alignment.csv"] {
            if fs::read(a.join(file)).unwrap() != fs::read(b.join(file)).unwrap() {
                differing.push(format!("{i}/{file}"));
            }
        }
    }
    verdict(
        differing.is_empty(),
        format!("{} configs run twice, differing files {differing:?}", configs.len()),
    )
}

fn main() -> std::process::ExitCode {
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "matricization round-trip", secs(5), roundtrip),
        criterion(2, "polar correctness", secs(30), polar),
        criterion(3, "norm lemmas and tightness", secs(60), norm_lemmas),
        criterion(4, "steepest-descent oracle", secs(120), steepest_descent),
        criterion(5, "bound formulas", secs(1), bounds),
        criterion(6, "single-slice collapse", secs(60), collapse),
        criterion(7, "gradient fidelity", secs(120), gradients),
        criterion(8, "best-case ordering", secs(300), ordering),
        criterion(9, "alignment diagnostics", secs(30), diagnostics),
        criterion(10, "determinism", secs(60), determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        std::process::ExitCode::SUCCESS
    } else {
        std::process::ExitCode::FAILURE
    }
}
