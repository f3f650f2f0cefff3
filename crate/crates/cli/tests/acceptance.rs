//! Acceptance run: one PASS/FAIL line per criterion, with measured values
//! and wall time. Exits non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fracvar::asymptotics::{
    gamma_falsification, inequality_suite, sweep_alpha_to_one, sweep_beta_to_alpha, CorpusItem, PerturbationFamily,
    PerturbationKind, Tolerances, DEFAULT_ALPHAS,
};
use fracvar::constants::{c_upper, mu_over_one_minus_alpha, unit_ball_volume};
use fracvar::grid::VariationInput;
use fracvar::grid::{
    local_gradient, make_bump, make_gaussian_cutoff, Exponent, GridSpec, IntervalSet, PolySet, VectorField, Window,
};
use fracvar::kernels::exterior::riesz_semigroup_1d;
use fracvar::kernels::indicator::{closed_form_indicator_gradient, frac_gradient_indicator_1d};
use fracvar::kernels::{frac_gradient, riesz_potential, QuadParams};
use fracvar::spectral::{duality_check, duality_oracle_pad, duality_tolerance};
use fracvar::variation::{
    dual_variation_lower_bound, equality_classifier_1d, frac_perimeter, frac_perimeter_quadrature_1d, frac_variation,
    random_bumps, DualOptions, EqualityVerdict, SetInput,
};
use fracvar::FracOrder;

type Outcome = Result<(bool, String), String>;

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn constants() -> Outcome {
    let mut worst_limit: f64 = 0.0;
    for n in 1..=3 {
        let r = mu_over_one_minus_alpha(n, 0.999).map_err(err)?;
        worst_limit = worst_limit.max(rel(r, 1.0 / unit_ball_volume::<f64>(n)));
    }
    let mut worst_bound = f64::NEG_INFINITY;
    for n in 1..=3 {
        for k in 1..=99 {
            let r = mu_over_one_minus_alpha(n, k as f64 / 100.0).map_err(err)?;
            worst_bound = worst_bound.max(r / c_upper::<f64>(n));
        }
    }
    Ok((
        worst_limit <= 0.01 && worst_bound <= 1.0,
        format!("limit gap {worst_limit:.2e} (<= 1e-2), max ratio to C_n {worst_bound:.4} (<= 1)"),
    ))
}

fn bump_pair(g: &GridSpec<f64>, seed: u64) -> Result<(fracvar::Field, VectorField<f64>), String> {
    let f = random_bumps(g, 3, 2.0, seed).map_err(err)?;
    let mut comps = Vec::new();
    for k in 0..g.n() {
        comps.push(
            random_bumps(g, 3, 2.0, 100 + 7 * seed + k as u64)
                .map_err(err)?
                .into_values(),
        );
    }
    Ok((f, VectorField::new(*g, comps, Some(2.0)).map_err(err)?))
}

fn duality() -> Outcome {
    let q = QuadParams::default();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_order = f64::INFINITY;
    let mut ok = true;
    for (n, m) in [(1, 1025), (2, 129)] {
        let fine = GridSpec::new(n, 4.0, m).map_err(err)?;
        let coarse = GridSpec::new(n, 4.0, (m + 1) / 2).map_err(err)?;
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            let o = FracOrder::new(n, alpha).map_err(err)?;
            for seed in 0..5 {
                let (f, phi) = bump_pair(&fine, seed)?;
                let rf = duality_check(&f, &phi, &o, &q, duality_oracle_pad(n)).map_err(err)?;
                let (f, phi) = bump_pair(&coarse, seed)?;
                let rc = duality_check(&f, &phi, &o, &q, duality_oracle_pad(n)).map_err(err)?;
                let ratio = rf.residual / duality_tolerance(fine.h(), alpha, rf.scale);
                let order = (rc.residual / rf.residual).log2();
                worst_ratio = worst_ratio.max(ratio);
                worst_order = worst_order.min(order - ((2.0 - alpha).min(1.0) - 0.2));
                ok &= ratio <= 1.0 && order >= (2.0_f64 - alpha).min(1.0) - 0.2;
                ok &= rf.discrete_residual <= 1e-12 * rf.scale;
            }
        }
    }
    Ok((
        ok,
        format!("max residual/tol(h) {worst_ratio:.3} (<= 1), min order excess over min(2-a,1)-0.2: {worst_order:.2}"),
    ))
}

fn representation() -> Outcome {
    let q = QuadParams::default();
    let g = GridSpec::with_spacing(1, 8.0, 1.0 / 128.0).map_err(err)?;
    let f = make_gaussian_cutoff(&g, 1.0, 4.0).map_err(err)?;
    let mut worst: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.7, 0.9] {
        let o = FracOrder::new(1, alpha).map_err(err)?;
        let d = frac_gradient(&f, &o, &q).map_err(err)?;
        let a = riesz_potential(&local_gradient(&f), 1.0 - alpha, &q).map_err(err)?;
        let b = local_gradient(&riesz_potential(&f, 1.0 - alpha, &q).map_err(err)?);
        worst = worst.max(rel_l2(a.component(0), d.component(0)));
        worst = worst.max(rel_l2(b.component(0), d.component(0)));
    }
    let gs = GridSpec::with_spacing(1, 4.0, 1.0 / 64.0).map_err(err)?;
    let u = make_bump(&gs, [0.0, 0.0], 1.0, 1.0).map_err(err)?;
    let two = riesz_semigroup_1d(&u, 0.3, 0.3).map_err(err)?;
    let one = riesz_potential(&u, 0.6, &q).map_err(err)?;
    let semi = rel_l2(two.values(), one.values());
    Ok((
        worst <= 1e-3 && semi <= 1e-3,
        format!("representation rel L2 {worst:.2e}, semigroup {semi:.2e} (both <= 1e-3)"),
    ))
}

fn anchors() -> Outcome {
    let e = IntervalSet::interval(0.0, 1.0).map_err(err)?;
    let (mut exact_err, mut quad_err, mut field_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for alpha in [0.25, 0.5, 0.75] {
        let reference = 4.0 / (alpha * (1.0 - alpha));
        let p = frac_perimeter(SetInput::Intervals(&e), alpha, &Window::Whole).map_err(err)?;
        let pq = frac_perimeter_quadrature_1d(&e, alpha, &Window::Whole).map_err(err)?;
        exact_err = exact_err.max(rel(p.total(), reference));
        quad_err = quad_err.max(rel(pq.total(), reference));
        let o = FracOrder::new(1, alpha).map_err(err)?;
        let spec = GridSpec::new(1, 2.0, 513).map_err(err)?;
        let grad = frac_gradient_indicator_1d(&e, &o, &spec, &QuadParams::default()).map_err(err)?;
        let h = spec.h();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..spec.m() {
            let x = spec.coord(i);
            if x.abs() < 4.0 * h || (x - 1.0).abs() < 4.0 * h {
                continue;
            }
            let exact = closed_form_indicator_gradient(&e, &o, x).map_err(err)?;
            num += (grad.component(0)[i] - exact).abs();
            den += exact.abs();
        }
        field_err = field_err.max(num / den);
    }
    Ok((
        exact_err <= 1e-6 && quad_err <= 1e-3 && field_err <= 1e-3,
        format!("P exact {exact_err:.1e} (<= 1e-6), P quadrature {quad_err:.1e} (<= 1e-3), closed form L1 {field_err:.1e} (<= 1e-3)"),
    ))
}

fn alpha_limits() -> Outcome {
    let tol = Tolerances::default();
    let g = GridSpec::new(1, 8.0, 2049).map_err(err)?;
    let f = make_gaussian_cutoff(&g, 1.0, 4.0).map_err(err)?;
    let sweep = sweep_alpha_to_one(&f, Exponent::One, &DEFAULT_ALPHAS, &QuadParams::default(), &tol).map_err(err)?;
    let gap = sweep
        .records_of("total_variation")
        .last()
        .map_or(f64::NAN, |r| r.residual);
    let e = IntervalSet::interval(0.0, 1.0).map_err(err)?;
    let p = frac_perimeter(SetInput::Intervals(&e), 0.99, &Window::Whole).map_err(err)?;
    let scaled = rel(0.01 * p.total(), 4.0);
    let w = Window::interval(-2.0, 2.0).map_err(err)?;
    let o = FracOrder::new(1, 0.99).map_err(err)?;
    let v = frac_variation(VariationInput::Intervals(&e), &o, &w, &QuadParams::default()).map_err(err)?;
    let recovery = rel(v, 2.0);
    Ok((
        sweep.pass && gap <= 0.02 && scaled <= 0.03 && recovery <= 0.03,
        format!(
            "L1 residual decreasing {}, TV gap {gap:.2e} (<= 2e-2), (1-a)P gap {scaled:.2e}, |D^a chi|(-2,2) gap {recovery:.2e} (<= 3e-2)",
            sweep.failures.iter().all(|f| !f.contains("decrease"))
        ),
    ))
}

fn dichotomy() -> Outcome {
    let inf = f64::INFINITY;
    let iv = |a: f64, b: f64| Window::interval(a, b);
    let corpus: Vec<(Vec<(f64, f64)>, Window<f64>)> = vec![
        (vec![(-5.0, -4.0), (-1.0, inf)], iv(0.0, 1.0).map_err(err)?),
        (vec![(-5.0, -4.0), (0.0, inf)], iv(-1.0, 1.0).map_err(err)?),
        (vec![(2.0, inf)], iv(-3.0, 7.0).map_err(err)?),
        (vec![(0.0, inf)], iv(-1.0, 1.0).map_err(err)?),
        (vec![(-inf, 0.0)], iv(-2.0, 3.0).map_err(err)?),
        (vec![(0.0, 1.0)], Window::Whole),
        (vec![(0.0, 1.0)], iv(-2.0, 2.0).map_err(err)?),
        (vec![(0.0, 1.0), (2.0, 3.0)], iv(-1.0, 4.0).map_err(err)?),
        (vec![(-inf, 0.0), (1.0, inf)], iv(-0.5, 1.5).map_err(err)?),
        (vec![(-inf, -1.0), (0.0, inf)], iv(0.5, 2.0).map_err(err)?),
    ];
    let declared = 1e-6;
    let q = QuadParams::default();
    let (mut matched, mut strict_margin, mut eq_margin) = (0, f64::INFINITY, 0.0_f64);
    let mut kinds = (0, 0);
    for (ivs, w) in &corpus {
        let e = IntervalSet::new(ivs.iter().copied()).map_err(err)?;
        let verdict = equality_classifier_1d(&e, w).map_err(err)?;
        let o = FracOrder::new(1, 0.5).map_err(err)?;
        let v = frac_variation(VariationInput::Intervals(&e), &o, w, &q).map_err(err)?;
        let p = frac_perimeter(SetInput::Intervals(&e), 0.5, w).map_err(err)?;
        let margin = 1.0 - v / (o.mu() * p.tilde());
        let numeric = if margin > declared {
            EqualityVerdict::Strict
        } else {
            EqualityVerdict::Equality
        };
        if numeric == verdict {
            matched += 1;
        }
        match verdict {
            EqualityVerdict::Strict => {
                kinds.1 += 1;
                strict_margin = strict_margin.min(margin);
            }
            EqualityVerdict::Equality => {
                kinds.0 += 1;
                eq_margin = eq_margin.max(margin.abs());
            }
        }
    }
    Ok((
        matched == corpus.len() && strict_margin > 5.0 * declared,
        format!(
            "{matched}/{} verdicts match ({} equality, {} strict), min strict margin {strict_margin:.2e} (> 5e-6), max equality defect {eq_margin:.1e}",
            corpus.len(),
            kinds.0,
            kinds.1
        ),
    ))
}

fn beta_limits() -> Outcome {
    let g = GridSpec::new(1, 8.0, 2049).map_err(err)?;
    let f = make_bump(&g, [0.0, 0.0], 1.5, 1.0).map_err(err)?;
    let r = sweep_beta_to_alpha(
        &f,
        0.7,
        &[0.5, 0.6, 0.65, 0.69],
        &QuadParams::default(),
        &Tolerances::default(),
    )
    .map_err(err)?;
    let last = |q: &str| r.records_of(q).last().map_or(f64::NAN, |x| x.residual);
    let tw = r.records_of("intertwining").map(|x| x.residual).fold(0.0, f64::max);
    Ok((
        r.pass,
        format!(
            "final L1 residual {:.2e}, TV gap {:.2e} (<= 2e-2), max intertwining {tw:.2e} (<= 1e-2), failures {:?}",
            last("l1_residual"),
            last("total_variation"),
            r.failures
        ),
    ))
}

fn inequalities() -> Outcome {
    let g1 = GridSpec::new(1, 6.0, 1025).map_err(err)?;
    let g2 = GridSpec::new(2, 3.0, 65).map_err(err)?;
    let corpus = vec![
        CorpusItem::Field {
            name: "bump_1d".into(),
            field: make_bump(&g1, [0.5, 0.0], 1.0, 1.0).map_err(err)?,
        },
        CorpusItem::Field {
            name: "gauss_1d".into(),
            field: make_gaussian_cutoff(&g1, 0.7, 2.5).map_err(err)?,
        },
        CorpusItem::Field {
            name: "bumps_1d".into(),
            field: random_bumps(&g1, 4, 3.0, 11).map_err(err)?,
        },
        CorpusItem::Field {
            name: "bump_2d".into(),
            field: make_bump(&g2, [0.3, -0.2], 1.2, 1.0).map_err(err)?,
        },
        CorpusItem::Field {
            name: "gauss_2d".into(),
            field: make_gaussian_cutoff(&g2, 0.5, 2.0).map_err(err)?,
        },
        CorpusItem::Intervals {
            name: "two_intervals".into(),
            set: IntervalSet::new([(0.0, 1.0), (2.0, 2.5)]).map_err(err)?,
            window: Window::interval(-1.0, 3.0).map_err(err)?,
        },
        CorpusItem::Intervals {
            name: "half_line".into(),
            set: IntervalSet::interval(0.0, f64::INFINITY).map_err(err)?,
            window: Window::interval(-1.0, 1.0).map_err(err)?,
        },
        CorpusItem::Polygons {
            name: "unit_square".into(),
            set: PolySet::rectangle([0.0, 0.0], [1.0, 1.0]).map_err(err)?,
            window: Window::Whole,
        },
    ];
    let r = inequality_suite(
        &corpus,
        &[0.3, 0.5, 0.7, 0.9],
        &QuadParams::default(),
        &Tolerances::default(),
    )
    .map_err(err)?;
    let violations = r.records.iter().filter(|x| !x.within()).count();
    let worst = r.records.iter().map(|x| x.computed / x.reference).fold(0.0, f64::max);
    Ok((
        r.pass && violations == 0,
        format!(
            "{violations} violations in {} checks, max lhs/rhs {worst:.3}",
            r.records.len()
        ),
    ))
}

fn dual_estimator() -> Outcome {
    let q = QuadParams::default();
    let spec = GridSpec::new(1, 2.0, 257).map_err(err)?;
    let w = Window::interval(-1.9, 1.9).map_err(err)?;
    let mut below = true;
    let mut worst_gap: f64 = 0.0;
    for (c, r) in [(0.0, 1.0), (0.3, 0.8), (-0.2, 1.2)] {
        let f = make_bump(&spec, [c, 0.0], r, 1.0).map_err(err)?;
        for alpha in [0.3, 0.5, 0.8] {
            let o = FracOrder::new(1, alpha).map_err(err)?;
            let v = frac_variation(VariationInput::Field(&f), &o, &w, &q).map_err(err)?;
            let d = dual_variation_lower_bound(&f, &o, &w, &DualOptions::default(), &q).map_err(err)?;
            below &= d.value <= v * (1.0 + 1e-9);
            if alpha == 0.5 {
                worst_gap = worst_gap.max(1.0 - d.value / v);
            }
        }
    }
    Ok((
        below && worst_gap <= 0.05,
        format!(
            "lower bound below density integral: {below}, max gap at a=0.5 {worst_gap:.2e} (<= 5e-2, 500 iterations)"
        ),
    ))
}

fn gamma() -> Outcome {
    let e = IntervalSet::interval(0.0, 1.0).map_err(err)?;
    let w = Window::interval(-2.0, 2.0).map_err(err)?;
    let families = [
        PerturbationFamily::new(PerturbationKind::Translation, 0.2, 1.0),
        PerturbationFamily::new(PerturbationKind::Dilation, 0.3, 0.5),
        PerturbationFamily::new(
            PerturbationKind::AdditiveHat {
                center: 0.5,
                radius: 0.25,
            },
            0.5,
            1.0,
        ),
    ];
    let r = gamma_falsification(
        &e,
        &w,
        &[0.9, 0.95, 0.99, 0.995, 0.999],
        &families,
        &Tolerances::default(),
    )
    .map_err(err)?;
    let liminf = r.records_of("liminf").count();
    let disclaimer = r.notes.iter().any(|n| n.contains("falsification"));
    Ok((
        r.pass && disclaimer && liminf == 15,
        format!(
            "{liminf} liminf checks, failures {:?}; falsification only, not a proof of Gamma-convergence",
            r.failures
        ),
    ))
}

fn run_cli(args: &[&str], threads: usize, out: &Path) -> Result<i32, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_fracvar"))
        .args(args)
        .arg("--deterministic")
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out")
        .arg(out)
        .env_remove("FRACVAR_OUT")
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(err)?;
    Ok(status.code().unwrap_or(-1))
}

fn same_tree(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(err)?
        .map(|e| e.map(|e| e.file_name()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    names.sort();
    for name in &names {
        let x = std::fs::read(a.join(name)).map_err(err)?;
        let y = std::fs::read(b.join(name)).map_err(|e| format!("{}: {e}", name.to_string_lossy()))?;
        if x != y {
            return Err(format!("{} differs", name.to_string_lossy()));
        }
    }
    Ok(names.len())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let root = dir.path();
    let mut workloads: Vec<(String, String)> = Vec::new();
    for (n, m) in [(1, 1025), (2, 129)] {
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            for seed in 0..5 {
                workloads.push((
                    format!("duality_{n}_{alpha}_{seed}"),
                    format!(
                        "seed = {seed}\n[grid]\nn = {n}\nhalf_width = 4.0\nm = {m}\n[input]\nkind = \"random_bumps\"\n[operator]\nquantity = \"duality\"\nalpha = {alpha}\n"
                    ),
                ));
            }
        }
    }
    workloads.push((
        "limits".into(),
        "experiment = [\"alpha_to_one\", \"gamma\"]\n[input]\nkind = \"gaussian_cutoff\"\n".into(),
    ));
    let mut files = 0;
    for (name, text) in &workloads {
        let cfg = root.join(format!("{name}.toml"));
        std::fs::write(&cfg, text).map_err(err)?;
        let cmd = if name == "limits" { "sweep" } else { "eval" };
        let cfg_arg = cfg.to_string_lossy().to_string();
        let args = [cmd, "--config", cfg_arg.as_str()];
        let (a, b) = (root.join(format!("{name}_t1")), root.join(format!("{name}_t4")));
        let (ca, cb) = (run_cli(&args, 1, &a)?, run_cli(&args, 4, &b)?);
        if ca != 0 || cb != 0 {
            return Ok((false, format!("{name}: exit codes {ca} and {cb}")));
        }
        match same_tree(&a, &b) {
            Ok(k) => files += k,
            Err(e) => return Ok((false, format!("{name}: {e}"))),
        }
    }
    Ok((
        true,
        format!(
            "{} runs, {files} files byte-identical at 1 and 4 threads",
            workloads.len()
        ),
    ))
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Outcome); 11] = [
        (1, "constants", 1.0, constants),
        (2, "duality", 120.0, duality),
        (3, "representation", f64::INFINITY, representation),
        (4, "analytic 1D anchors", f64::INFINITY, anchors),
        (5, "alpha -> 1 limits", 300.0, alpha_limits),
        (6, "strict/equality dichotomy", f64::INFINITY, dichotomy),
        (7, "beta -> alpha limits", f64::INFINITY, beta_limits),
        (8, "inequality suite", 600.0, inequalities),
        (9, "dual estimator", f64::INFINITY, dual_estimator),
        (10, "Gamma falsification", f64::INFINITY, gamma),
        (11, "determinism", f64::INFINITY, determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok((ok, d)) if secs <= limit => (ok, d),
            Ok((_, d)) => (false, format!("{d}; runtime {secs:.1} s over the {limit} s limit")),
            Err(e) => (false, format!("error: {e}")),
        };
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {name:<26} {verdict} [{secs:7.2} s] {detail}");
        if !ok {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
