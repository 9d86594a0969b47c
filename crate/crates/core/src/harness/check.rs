//! A quick invariant suite behind `teon check`.

use std::fmt;
use std::path::Path;

use super::config::RunConfig;
use super::gradcheck::{check_entries, TOLERANCE};
use super::run::train;
use super::tasks::{DeepLinear, MicroAttention, StackedQuadratic, Task};
use crate::diagnostics::top_singular_alignment;
use crate::error::Result;
use crate::linalg::{fold, frobenius, matricize, Matrix, Mode, Tensor3};
use crate::norms::{
    build_max_gain_tensor, check_comparability, eval_ntr_bound, norm, ntr_step_muon, ntr_step_teon, optimal_eta,
    rank_one_cone, simplified_bound, BoundInputs, NormKind, SharedFactor,
};
use crate::ortho::{ortho_exact, ortho_ns, NsSchedule, BUNDLED_PRESETS};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckResult {
    match result {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs every check; `seed` drives all random corpora.
pub fn run_checks(seed: u64) -> Vec<CheckResult> {
    vec![
        outcome("matricize_roundtrip", roundtrip(seed)),
        outcome("polar_factor", polar(seed)),
        outcome("norm_comparability", comparability(seed)),
        outcome("max_gain_tightness", tightness(seed)),
        outcome("steepest_descent_duality", duality(seed)),
        outcome("bound_formula", bound()),
        outcome("single_slice_collapse", collapse(seed)),
        outcome("gradient_checks", gradients(seed)),
        outcome("ns_presets", presets(seed)),
        outcome("cone_alignment", alignment(seed)),
    ]
}

fn roundtrip(seed: u64) -> Result<(bool, String)> {
    let mut r = rng::seeded(seed);
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for i in 0..100 {
        let t: Tensor3 = rng::gaussian_tensor(&mut r, 1 + i % 7, 1 + i % 5, 1 + i % 4);
        for mode in Mode::ALL {
            let x = matricize(&t, mode);
            exact &= fold(&x, mode, t.shape())? == t;
            worst = worst.max((x.frobenius() - frobenius(&t)).abs() / frobenius(&t));
        }
    }
    Ok((exact && worst <= 1e-12, format!("bit-exact={exact}, max frobenius drift {worst:.2e}")))
}

fn polar(seed: u64) -> Result<(bool, String)> {
    let mut r = rng::seeded(seed);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let a: Matrix = rng::gaussian_matrix(&mut r, 2 + i % 6, 2 + (i * 3) % 7);
        let o = ortho_exact(&a)?;
        let gram = if o.rows() >= o.cols() { o.t_matmul(&o) } else { o.matmul_t(&o) };
        worst = worst.max(gram.max_abs_diff(&Matrix::identity(gram.rows())));
    }
    Ok((worst <= 1e-10, format!("max semi-orthogonality residual {worst:.2e}")))
}

fn comparability(seed: u64) -> Result<(bool, String)> {
    let mut r = rng::seeded(seed);
    let mut violations = 0;
    for i in 0..200 {
        let t: Tensor3 = rng::gaussian_tensor(&mut r, 1 + i % 6, 1 + (i / 6) % 6, 1 + i % 5);
        for mode in [Mode::One, Mode::Two] {
            if check_comparability(&t, mode)?.violated {
                violations += 1;
            }
            if norm(&t, NormKind::teon(mode))? > frobenius(&t) * (1.0 + 1e-12) {
                violations += 1;
            }
        }
        if norm(&t, NormKind::MUON)? > frobenius(&t) * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{violations} violations over 200 tensors")))
}

fn tightness(seed: u64) -> Result<(bool, String)> {
    let t: Tensor3 = build_max_gain_tensor(8, 8, 4, Mode::One, seed)?;
    let ratio = norm(&t, NormKind::teon(Mode::One))? / norm(&t, NormKind::MUON)?;
    Ok(((ratio - 2.0).abs() <= 1e-9, format!("teon1/muon = {ratio:.15}")))
}

fn duality(seed: u64) -> Result<(bool, String)> {
    let mut r = rng::seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g: Tensor3 = rng::gaussian_tensor(&mut r, 3, 3, 3);
        for mode in Mode::ALL {
            let step = ntr_step_teon(&g, mode, 0.5)?;
            let gap = g.inner(&step)? + 0.5 * norm(&g, NormKind::teon_dual(mode))?;
            worst = worst.max(gap.abs());
        }
        let step = ntr_step_muon(&g, 0.5)?;
        worst = worst.max((g.inner(&step)? + 0.5 * norm(&g, NormKind::MUON_DUAL)?).abs());
    }
    Ok((worst <= 1e-8, format!("max |⟨g, Δ⟩ + η‖g‖_*| = {worst:.2e}")))
}

fn bound() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (delta0, l, t) in [(1.0, 1.0, 10u64), (5.0, 0.3, 1000), (0.2, 40.0, 7)] {
        let eta = optimal_eta(delta0, l, t);
        let b = BoundInputs { delta0, l, eta, mu: 0.0, sigma: 0.0, rho: 1.0, t };
        worst = worst.max((eval_ntr_bound(&b)? - simplified_bound(delta0, l, t)).abs());
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.2e}")))
}

fn collapse(seed: u64) -> Result<(bool, String)> {
    let template = |optimizer: &str| {
        format!(
            "steps = 50\nseed = {seed}\n[task]\nkind = \"deep_linear\"\ndepth = 3\nwidth = 5\nbatch = 6\n\
             [optimizer]\n{optimizer}\neta = 0.02\n[grouping]\nk = 1\n[alignment]\nevery = 0\n"
        )
    };
    let teon = RunConfig::parse(&template("optimizer = \"teon\"\nmode = 1"), Path::new("check"))?;
    let muon = RunConfig::parse(&template("optimizer = \"muon\""), Path::new("check"))?;
    let (a, b) = (train(&teon)?, train(&muon)?);
    let same = a.params == b.params && a.losses == b.losses;
    Ok((same, format!("bit-identical over 50 steps: {same}")))
}

fn gradients(seed: u64) -> Result<(bool, String)> {
    let tasks: Vec<Box<dyn Task>> = vec![
        Box::new(StackedQuadratic::gaussian(4, 3, 3, seed)?),
        Box::new(StackedQuadratic::aligned(4, 3, 3, 1.0, seed)?),
        Box::new(DeepLinear::new(3, 4, 5, seed)?),
        Box::new(MicroAttention::new(4, 6, 3, 2, 2, seed)?),
    ];
    let mut worst: f64 = 0.0;
    for task in &tasks {
        worst = worst.max(check_entries(task.as_ref(), &task.init(), TOLERANCE)?.max_error());
    }
    Ok((true, format!("max scaled error {worst:.2e} over {} tasks", tasks.len())))
}

fn presets(seed: u64) -> Result<(bool, String)> {
    let mut r = rng::seeded(seed);
    let mut peak: f64 = 0.0;
    for name in BUNDLED_PRESETS {
        let schedule = NsSchedule::preset(name, 5)?;
        for _ in 0..10 {
            let a: Matrix = rng::gaussian_matrix(&mut r, 6, 9);
            peak = peak.max(crate::linalg::svd(&ortho_ns(&a, &schedule)?)?.sigma[0]);
        }
    }
    Ok((peak <= 1.3, format!("largest singular value after 5 steps {peak:.4}")))
}

fn alignment(seed: u64) -> Result<(bool, String)> {
    let t: Tensor3 = rank_one_cone(8, 8, 4, SharedFactor::Right, seed)?;
    let (mut right_min, mut left_max) = (f64::INFINITY, 0.0f64);
    for i in 0..4 {
        for j in i + 1..4 {
            let al = top_singular_alignment(t.slice(i), t.slice(j))?;
            right_min = right_min.min(al.right_align);
            left_max = left_max.max(al.left_align);
        }
    }
    let ok = (right_min - 1.0).abs() <= 1e-12 && left_max <= 1e-8;
    Ok((ok, format!("min right_align {right_min:.15}, max left_align {left_max:.2e}")))
}
