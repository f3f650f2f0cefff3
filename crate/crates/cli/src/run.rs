//! The `eval`, `sweep` and `gamma` commands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use fracvar::asymptotics::{
    gamma_falsification, inequality_suite, sweep_alpha_to_one, sweep_beta_to_alpha, weakstar_test, CorpusItem,
    LimitInput, SweepReport, SCHEMA_VERSION,
};
use fracvar::grid::io::{read_binary, read_csv, write_binary, write_csv, FieldData};
use fracvar::grid::{
    lp_norm, make_bump, make_gaussian_cutoff, Exponent, GeometrySpec, GridSpec, IntervalSet, PolySet, Profile,
    ScalarField, VectorField, Window,
};
use fracvar::kernels::{frac_divergence, frac_gradient, riesz_potential};
use fracvar::spectral::{duality_check, duality_oracle_pad, duality_tolerance, DUALITY_C_TOL};
use fracvar::variation::random_bumps;
use fracvar::FracOrder;
use serde::Serialize;
use serde_json::json;

use crate::config::{
    read_geometry, CorpusEntry, ExperimentKind, FieldFormat, GridConfig, InputSpec, Quantity, RunConfig,
};
use crate::exit::CliError;
use crate::report::{rows_of, write_csv as write_rows};

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub deterministic: bool,
    pub threads: usize,
    pub started: Instant,
}

impl RunContext {
    /// Run metadata; timing and thread count are left out in deterministic
    /// mode so that outputs compare byte for byte.
    fn stamp(&self, doc: &mut serde_json::Value) {
        if !self.deterministic {
            doc["threads"] = json!(self.threads);
            doc["elapsed_seconds"] = json!(self.started.elapsed().as_secs_f64());
        }
    }
}

fn grid_of(g: &GridConfig) -> Result<GridSpec<f64>, CliError> {
    Ok(GridSpec::new(g.n, g.half_width, g.m)?)
}

enum SetData {
    Intervals(IntervalSet<f64>),
    Polygons(PolySet<f64>),
}

fn set_of(spec: &InputSpec) -> Result<Option<SetData>, CliError> {
    let geometry = match spec {
        InputSpec::Intervals { intervals } => GeometrySpec::Intervals(intervals.clone()),
        InputSpec::Polygons { rings } => GeometrySpec::Polygons(rings.clone()),
        InputSpec::Geometry { path } => read_geometry(path)?,
        _ => return Ok(None),
    };
    Ok(Some(match geometry {
        GeometrySpec::Intervals(v) => SetData::Intervals(IntervalSet::new(v.iter().map(|[a, b]| (*a, *b)))?),
        GeometrySpec::Polygons(rings) => SetData::Polygons(PolySet::new(
            rings.iter().map(|r| r.iter().map(|p| [p[0], p[1]]).collect()).collect(),
        )?),
    }))
}

fn field_of(spec: &InputSpec, grid: &GridSpec<f64>, seed: u64) -> Result<FieldData<f64>, CliError> {
    let f = match spec {
        InputSpec::Bump { center, radius, height } => make_bump(grid, *center, *radius, *height)?,
        InputSpec::GaussianCutoff { sigma, radius } => make_gaussian_cutoff(grid, *sigma, *radius)?,
        InputSpec::RandomBumps { count, reach } => random_bumps(grid, *count, *reach, seed)?,
        InputSpec::Zero => ScalarField::zeros(*grid),
        InputSpec::File { path } => return read_field(path),
        InputSpec::Intervals { .. } | InputSpec::Polygons { .. } | InputSpec::Geometry { .. } => {
            return Err(CliError::Config("this command needs a field input, not a set".into()))
        }
    };
    Ok(FieldData::Scalar(f))
}

fn scalar_of(spec: &InputSpec, grid: &GridSpec<f64>, seed: u64) -> Result<ScalarField<f64>, CliError> {
    match field_of(spec, grid, seed)? {
        FieldData::Scalar(f) => Ok(f),
        FieldData::Vector(_) => Err(CliError::Config("expected a scalar field input".into())),
    }
}

fn read_field(path: &Path) -> Result<FieldData<f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut rd = BufReader::new(file);
    let binary = path.extension().is_some_and(|e| e == "bin");
    Ok(if binary {
        read_binary(&mut rd)?
    } else {
        read_csv(&mut rd)?
    })
}

fn write_field(path: &Path, field: &FieldData<f64>, format: FieldFormat) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        FieldFormat::Csv => write_csv(&mut w, field)?,
        FieldFormat::Binary => write_binary(&mut w, field)?,
    }
    w.flush()?;
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn l1_of(field: &FieldData<f64>) -> Result<f64, CliError> {
    Ok(match field {
        FieldData::Scalar(f) => lp_norm(f, Exponent::One, &Window::Whole)?,
        FieldData::Vector(v) => lp_norm(v, Exponent::One, &Window::Whole)?,
    })
}

fn spec_of(field: &FieldData<f64>) -> GridSpec<f64> {
    match field {
        FieldData::Scalar(f) => *f.spec(),
        FieldData::Vector(v) => *v.spec(),
    }
}

/// A vector field with every component equal to `f`.
fn replicate(f: &ScalarField<f64>) -> Result<VectorField<f64>, CliError> {
    let comps = vec![f.values().to_vec(); f.spec().n()];
    Ok(VectorField::new(*f.spec(), comps, f.support_radius())?)
}

/// Test field of the duality check: seeded bumps in each component.
fn duality_partner(grid: &GridSpec<f64>, seed: u64) -> Result<VectorField<f64>, CliError> {
    let mut comps = Vec::new();
    for k in 0..grid.n() {
        let s = seed.wrapping_mul(7).wrapping_add(100 + k as u64);
        comps.push(random_bumps(grid, 3, 2.0, s)?.into_values());
    }
    Ok(VectorField::new(*grid, comps, Some(2.0))?)
}

/// `eval`: one operator applied to the configured input.
pub fn eval(cfg: &RunConfig, ctx: &RunContext) -> Result<(), CliError> {
    let op = &cfg.operator;
    let input = field_of(&cfg.input, &grid_of(&cfg.grid)?, cfg.seed)?;
    let grid = spec_of(&input);
    let h = grid.h();
    let n = grid.n();
    let q = &cfg.quadrature;
    let scale = l1_of(&input)?;
    let (order_label, order_value, mu, rate) = match op.quantity {
        Quantity::Riesz => {
            if !(op.sigma > 0.0 && op.sigma < n as f64) {
                return Err(CliError::Config(format!(
                    "Riesz order σ = {} must lie strictly inside (0, n) = (0, {n})",
                    op.sigma
                )));
            }
            ("sigma", op.sigma, None, 1.0)
        }
        _ => {
            let o = FracOrder::new(n, op.alpha)?;
            ("alpha", op.alpha, Some(o.mu()), (2.0 - op.alpha).min(1.0))
        }
    };
    let declared = DUALITY_C_TOL * h.powf(rate) * scale;
    if let Some(budget) = op.budget {
        if declared > budget {
            return Err(CliError::Budget(format!(
                "declared tolerance {declared:.3e} exceeds the budget {budget:.3e}; refine the grid"
            )));
        }
    }
    std::fs::create_dir_all(&ctx.out)?;
    let ext = match cfg.output.format {
        FieldFormat::Csv => "csv",
        FieldFormat::Binary => "bin",
    };
    let field_file = format!("field.{ext}");
    let mut meta = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "eval",
        "quantity": op.quantity,
        "grid": { "n": n, "half_width": grid.half_width(), "m": grid.m(), "h": h },
        order_label: order_value,
        "mu": mu,
        "declared_tolerance": declared,
        "tolerance_model": "C_tol * h^rate * ||input||_L1",
        "c_tol": DUALITY_C_TOL,
        "rate": rate,
        "config": cfg,
    });
    let mut verdict = Ok(());
    match op.quantity {
        Quantity::Gradient => {
            let FieldData::Scalar(f) = &input else {
                return Err(CliError::Config("the gradient needs a scalar field input".into()));
            };
            let g = frac_gradient(f, &FracOrder::new(n, op.alpha)?, q)?;
            meta["max_abs"] = json!(g.max_abs());
            write_field(&ctx.out.join(&field_file), &FieldData::Vector(g), cfg.output.format)?;
            meta["output"] = json!(field_file);
        }
        Quantity::Divergence => {
            let phi = match &input {
                FieldData::Scalar(f) => replicate(f)?,
                FieldData::Vector(v) => v.clone(),
            };
            let d = frac_divergence(&phi, &FracOrder::new(n, op.alpha)?, q)?;
            meta["max_abs"] = json!(d.max_abs());
            write_field(&ctx.out.join(&field_file), &FieldData::Scalar(d), cfg.output.format)?;
            meta["output"] = json!(field_file);
        }
        Quantity::Riesz => {
            let out = match &input {
                FieldData::Scalar(f) => FieldData::Scalar(riesz_potential(f, op.sigma, q)?),
                FieldData::Vector(v) => FieldData::Vector(riesz_potential(v, op.sigma, q)?),
            };
            meta["max_abs"] = json!(match &out {
                FieldData::Scalar(f) => f.max_abs(),
                FieldData::Vector(v) => v.max_abs(),
            });
            write_field(&ctx.out.join(&field_file), &out, cfg.output.format)?;
            meta["output"] = json!(field_file);
        }
        Quantity::Duality => {
            let FieldData::Scalar(f) = &input else {
                return Err(CliError::Config("the duality check needs a scalar field input".into()));
            };
            let phi = duality_partner(&grid, cfg.seed)?;
            let r = duality_check(f, &phi, &FracOrder::new(n, op.alpha)?, q, duality_oracle_pad(n))?;
            let tol = duality_tolerance(h, op.alpha, r.scale);
            meta["declared_tolerance"] = json!(tol);
            meta["tolerance_model"] = json!("C_tol * h^rate * ||f||_L1 * ||div phi||_inf");
            meta["duality"] = json!(r);
            meta["within"] = json!(r.residual <= tol);
            if r.residual > tol {
                verdict = Err(CliError::Budget(format!(
                    "duality residual {:.3e} exceeds the declared tolerance {tol:.3e}",
                    r.residual
                )));
            }
        }
    }
    ctx.stamp(&mut meta);
    write_json(&ctx.out.join("eval.json"), &meta)?;
    verdict
}

fn window_of(w: &Option<Vec<f64>>) -> Result<Window<f64>, CliError> {
    match w.as_deref() {
        None => Ok(Window::Whole),
        Some([a, b]) => Ok(Window::interval(*a, *b)?),
        Some([x0, y0, x1, y1]) => Ok(Window::rect([*x0, *y0], [*x1, *y1])?),
        Some(_) => Err(CliError::Config("a window has 2 (interval) or 4 (box) numbers".into())),
    }
}

fn corpus_item(entry: &CorpusEntry, cfg: &RunConfig) -> Result<CorpusItem<f64>, CliError> {
    let name = entry.name.clone();
    let window = window_of(&entry.window)?;
    Ok(match set_of(&entry.input)? {
        Some(SetData::Intervals(set)) => CorpusItem::Intervals { name, set, window },
        Some(SetData::Polygons(set)) => CorpusItem::Polygons { name, set, window },
        None => {
            let grid = grid_of(entry.grid.as_ref().unwrap_or(&cfg.grid))?;
            CorpusItem::Field {
                name,
                field: scalar_of(&entry.input, &grid, cfg.seed)?,
            }
        }
    })
}

fn run_experiment(kind: ExperimentKind, cfg: &RunConfig) -> Result<SweepReport, CliError> {
    let op = &cfg.operator;
    let q = &cfg.quadrature;
    let tol = &cfg.tolerances;
    let field = || -> Result<ScalarField<f64>, CliError> { scalar_of(&cfg.input, &grid_of(&cfg.grid)?, cfg.seed) };
    let report = match kind {
        ExperimentKind::AlphaToOne => sweep_alpha_to_one(&field()?, op.p, &op.alphas, q, tol)?,
        ExperimentKind::BetaToAlpha => sweep_beta_to_alpha(&field()?, op.alpha, &op.betas, q, tol)?,
        ExperimentKind::WeakStar => {
            let tests: Vec<Profile<f64>> = cfg
                .weak_star
                .tests
                .iter()
                .map(|t| Profile::Bump {
                    center: t.center,
                    radius: t.radius,
                    height: t.height,
                })
                .collect();
            let alphas = &cfg.weak_star.alphas;
            match set_of(&cfg.input)? {
                Some(SetData::Intervals(e)) => weakstar_test(LimitInput::Intervals(&e), alphas, &tests, q, tol)?,
                Some(SetData::Polygons(_)) => {
                    return Err(CliError::Config(
                        "the weak-star test takes a field or an interval set".into(),
                    ))
                }
                None => weakstar_test(LimitInput::Field(&field()?), alphas, &tests, q, tol)?,
            }
        }
        ExperimentKind::Gamma => {
            let g = &cfg.gamma;
            let base = IntervalSet::new(g.set.iter().map(|[a, b]| (*a, *b)))?;
            let w = Window::interval(g.window[0], g.window[1])?;
            gamma_falsification(&base, &w, &g.alphas, &g.families, tol)?
        }
        ExperimentKind::Inequalities => {
            let corpus = if cfg.corpus.is_empty() {
                vec![corpus_item(
                    &CorpusEntry {
                        name: "input".into(),
                        input: cfg.input.clone(),
                        grid: None,
                        window: None,
                    },
                    cfg,
                )?]
            } else {
                cfg.corpus
                    .iter()
                    .map(|e| corpus_item(e, cfg))
                    .collect::<Result<_, _>>()?
            };
            let alphas: Vec<f64> = op.alphas.iter().copied().filter(|a| *a < 1.0).collect();
            inequality_suite(&corpus, &alphas, q, tol)?
        }
    };
    Ok(report)
}

/// `sweep`: runs the configured experiments in order, writing each report
/// as soon as it is complete. Fails with the budget code when a verdict
/// fails.
pub fn sweep(cfg: &RunConfig, kinds: &[ExperimentKind], ctx: &RunContext) -> Result<Vec<SweepReport>, CliError> {
    std::fs::create_dir_all(&ctx.out)?;
    let mut meta = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "sweep",
        "experiments": kinds.iter().map(ExperimentKind::name).collect::<Vec<_>>(),
        "config": cfg,
    });
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    let mut outcome = Ok(());
    for kind in kinds {
        match run_experiment(*kind, cfg) {
            Ok(report) => {
                let name = kind.name();
                write_json(&ctx.out.join(format!("{name}.json")), &report)?;
                write_rows(&ctx.out.join(format!("{name}.csv")), &rows_of(&report))?;
                println!(
                    "{name}: {} ({} records)",
                    if report.pass { "pass" } else { "FAIL" },
                    report.records.len()
                );
                for f in &report.failures {
                    println!("  {f}");
                }
                if !report.pass {
                    failed.push(name);
                }
                reports.push(report);
            }
            Err(e) => {
                outcome = Err(e);
                break;
            }
        }
    }
    meta["completed"] = json!(reports.iter().map(|r| r.experiment.clone()).collect::<Vec<_>>());
    ctx.stamp(&mut meta);
    write_json(&ctx.out.join("run.json"), &meta)?;
    outcome?;
    if !failed.is_empty() {
        return Err(CliError::Budget(format!("verdict failed for {}", failed.join(", "))));
    }
    Ok(reports)
}
