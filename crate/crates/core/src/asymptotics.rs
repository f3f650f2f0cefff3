//! Limit experiments: α → 1⁻ and β → α⁻ sweeps, weak-star tests, Γ-limit
//! falsification and the inequality suite.
//!
//! Every experiment returns a [`SweepReport`]. A report stores its records
//! and the checks applied to them; the verdict is recomputed from those
//! alone, so a serialized report can be re-judged without the inputs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{unit_ball_volume, FracOrder};
use crate::error::{FracError, Result};
use crate::grid::{
    local_gradient, lp_norm, Exponent, IntervalSet, PolySet, Profile, ScalarField, VariationInput, VectorField, Window,
};
use crate::kernels::exterior::{exterior_of_box, PointSources};
use crate::kernels::indicator::indicator_gradient_1d_at;
use crate::kernels::{frac_divergence, frac_gradient, QuadParams};
use crate::scalar::Real;
use crate::spectral::{intertwine_check, DEFAULT_PAD};
use crate::variation::{
    frac_perimeter, frac_variation, gradient_lp_with, hat_gradient_1d_at, integrate_density_1d, sobolev_seminorm,
    unit_ball_variation, Density1d, SetInput,
};

/// Version of the serialized report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Default α grid of the α → 1⁻ sweeps.
pub const DEFAULT_ALPHAS: [f64; 5] = [0.5, 0.7, 0.9, 0.95, 0.99];

/// One measured quantity at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// Input the record belongs to.
    pub case: String,
    pub quantity: String,
    pub parameter: f64,
    pub computed: f64,
    pub reference: f64,
    pub residual: f64,
    pub tolerance: f64,
}

impl SweepRecord {
    pub fn within(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// A rule applied to the records of one quantity, separately for each case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Check {
    /// The record at the last parameter is within tolerance.
    Final { quantity: String },
    /// Every record is within tolerance.
    All { quantity: String },
    /// Residuals strictly decrease along the parameter grid.
    Decreasing { quantity: String },
}

impl Check {
    fn quantity(&self) -> &str {
        match self {
            Check::Final { quantity } | Check::All { quantity } | Check::Decreasing { quantity } => quantity,
        }
    }

    fn describe(&self, case: &str) -> String {
        match self {
            Check::Final { quantity } => format!("{case}: {quantity} outside tolerance at the last parameter"),
            Check::All { quantity } => format!("{case}: {quantity} outside tolerance"),
            Check::Decreasing { quantity } => format!("{case}: {quantity} does not decrease"),
        }
    }
}

/// Structured record of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub experiment: String,
    /// Name of the swept parameter ("alpha" or "beta").
    pub parameter: String,
    pub grid: Vec<f64>,
    pub records: Vec<SweepRecord>,
    /// Log-log least-squares slope of the primary residual against the
    /// distance to the limit.
    pub fitted_order: Option<f64>,
    pub checks: Vec<Check>,
    pub failures: Vec<String>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl SweepReport {
    fn new(experiment: &str, parameter: &str, grid: Vec<f64>, records: Vec<SweepRecord>, checks: Vec<Check>) -> Self {
        let mut r = Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            parameter: parameter.into(),
            grid,
            records,
            fitted_order: None,
            checks,
            failures: Vec::new(),
            pass: false,
            notes: Vec::new(),
        };
        r.failures = r.evaluate();
        r.pass = r.failures.is_empty();
        r
    }

    /// Failed checks, recomputed from the records.
    pub fn evaluate(&self) -> Vec<String> {
        let mut groups: BTreeMap<(&str, &str), Vec<&SweepRecord>> = BTreeMap::new();
        for rec in &self.records {
            groups
                .entry((rec.quantity.as_str(), rec.case.as_str()))
                .or_default()
                .push(rec);
        }
        let mut failures = Vec::new();
        for check in &self.checks {
            let mut seen = false;
            for (&(quantity, case), recs) in groups.range((check.quantity(), "")..) {
                if quantity != check.quantity() {
                    break;
                }
                seen = true;
                let ok = match check {
                    Check::Final { .. } => recs.last().is_some_and(|r| r.within()),
                    Check::All { .. } => recs.iter().all(|r| r.within()),
                    Check::Decreasing { .. } => recs.windows(2).all(|w| w[1].residual < w[0].residual),
                };
                if !ok {
                    failures.push(check.describe(case));
                }
            }
            if !seen {
                failures.push(format!("no records for {}", check.quantity()));
            }
        }
        failures
    }

    /// True when the stored verdict agrees with the records.
    pub fn verdict_is_consistent(&self) -> bool {
        let f = self.evaluate();
        f.is_empty() == self.pass && f == self.failures
    }

    pub fn records_of<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a SweepRecord> + 'a {
        self.records.iter().filter(move |r| r.quantity == quantity)
    }
}

/// Tolerances of the limit experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative gap of total masses at the finest parameter.
    pub total_mass: f64,
    /// Relative gap of weak-star pairings.
    pub weak_star: f64,
    /// Relative slack of the Γ-limit checks.
    pub gamma: f64,
    /// Relative residual of representation formulas.
    pub representation: f64,
    /// Relative slack of the inequality suite.
    pub inequality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            total_mass: 0.02,
            weak_star: 0.03,
            gamma: 0.03,
            representation: 1e-2,
            inequality: 1e-3,
        }
    }
}

fn check_grid<T: Real>(values: &[T], upper: T, name: &str) -> Result<()> {
    if values.is_empty() {
        return Err(FracError::Domain(format!("empty {name} grid")));
    }
    for w in values.windows(2) {
        if !(w[0] < w[1]) {
            return Err(FracError::Domain(format!("{name} grid must be strictly increasing")));
        }
    }
    for v in values {
        if !(*v > T::zero() && *v <= upper) {
            return Err(FracError::Domain(format!("{name} = {v} outside (0, {upper}]")));
        }
    }
    Ok(())
}

fn rel(computed: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        computed.abs()
    } else {
        (computed - reference).abs() / reference.abs()
    }
}

fn record(
    case: &str,
    quantity: &str,
    parameter: f64,
    computed: f64,
    reference: f64,
    residual: f64,
    tol: f64,
) -> SweepRecord {
    SweepRecord {
        case: case.into(),
        quantity: quantity.into(),
        parameter,
        computed,
        reference,
        residual,
        tolerance: tol,
    }
}

/// Least-squares slope of ln(residual) against ln(distance).
pub fn fitted_order(distances: &[f64], residuals: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = distances
        .iter()
        .zip(residuals)
        .filter(|(d, r)| **d > 0.0 && **r > 0.0)
        .map(|(d, r)| (d.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// ∫ over the complement of the grid box of |∇^β f − ∇^α f|.
fn exterior_difference_l1<T: Real>(f: &ScalarField<T>, a: &FracOrder<T>, b: &FracOrder<T>) -> Result<T> {
    let spec = f.spec();
    let src = PointSources::from_field(f);
    let decay = T::from_usize_lossy(spec.n()) + a.alpha().min(b.alpha());
    exterior_of_box(spec.n(), spec.half_width(), decay, &|x| {
        let ga = src.gradient_at(a.mu(), a.alpha(), x);
        let gb = src.gradient_at(b.mu(), b.alpha(), x);
        ((gb[0] - ga[0]).powi(2) + (gb[1] - ga[1]).powi(2)).sqrt()
    })
}

/// α → 1⁻: ‖∇^α f − ∇f‖_{L^p} and |D^α f|(ℝ^n) against |Df|(ℝ^n).
///
/// For p ∈ {1, 2} the verdict requires the L^p residual to decrease and
/// the final total-variation gap to be within `tol.total_mass`. For p = ∞
/// only ‖∇f‖_∞ ≤ (1 + tol)‖∇^α f‖_∞ at the finest α is checked; the sup
/// gap is recorded.
pub fn sweep_alpha_to_one<T: Real>(
    f: &ScalarField<T>,
    p: Exponent,
    alphas: &[T],
    q: &QuadParams,
    tol: &Tolerances,
) -> Result<SweepReport> {
    check_grid(alphas, T::one(), "alpha")?;
    if alphas.iter().any(|a| *a >= T::one()) {
        return Err(FracError::Domain("α must be below 1".into()));
    }
    let n = f.spec().n();
    let grad = local_gradient(f);
    let tv = lp_norm(&grad, Exponent::One, &Window::Whole)?.as_f64();
    let sup = lp_norm(&grad, Exponent::Infinity, &Window::Whole)?.as_f64();
    let rows: Vec<Result<(f64, f64, f64)>> = alphas
        .par_iter()
        .map(|&alpha| {
            let order = FracOrder::new(n, alpha)?;
            let g = frac_gradient(f, &order, q)?;
            let diff = g.combine(T::one(), &grad, -T::one())?;
            let res = gradient_lp_with(f, &diff, &order, p, &Window::Whole)?.as_f64();
            let mass = gradient_lp_with(f, &g, &order, Exponent::One, &Window::Whole)?.as_f64();
            let gsup = lp_norm(&g, Exponent::Infinity, &Window::Whole)?.as_f64();
            Ok((res, mass, gsup))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let grid: Vec<f64> = alphas.iter().map(|a| a.as_f64()).collect();
    let mut records = Vec::new();
    let first = rows[0].0;
    for (a, (res, mass, gsup)) in grid.iter().zip(&rows) {
        if p == Exponent::Infinity {
            let deficit = (sup - gsup * (1.0 + tol.total_mass)).max(0.0);
            records.push(record(
                "f",
                "sup_liminf",
                *a,
                *gsup,
                sup,
                deficit / sup.max(f64::MIN_POSITIVE),
                0.0,
            ));
            records.push(record("f", "sup_gap", *a, *gsup, sup, rel(*gsup, sup), f64::MAX));
        } else {
            records.push(record("f", "lp_residual", *a, *res, 0.0, *res, first));
        }
        records.push(record(
            "f",
            "total_variation",
            *a,
            *mass,
            tv,
            rel(*mass, tv),
            tol.total_mass,
        ));
    }
    let mut checks = Vec::new();
    if p == Exponent::Infinity {
        checks.push(Check::Final {
            quantity: "sup_liminf".into(),
        });
    } else {
        if grid.len() > 1 {
            checks.push(Check::Decreasing {
                quantity: "lp_residual".into(),
            });
        }
        checks.push(Check::Final {
            quantity: "total_variation".into(),
        });
    }
    let mut report = SweepReport::new("alpha_to_one", "alpha", grid.clone(), records, checks);
    let dist: Vec<f64> = grid.iter().map(|a| 1.0 - a).collect();
    let res: Vec<f64> = rows.iter().map(|r| r.0).collect();
    report.fitted_order = fitted_order(&dist, &res);
    report.notes.push(format!("norm = L^{}", p.label()));
    Ok(report)
}

/// β → α⁻ at fixed α: ‖∇^β f − ∇^α f‖_{L¹}, |D^β f| against |D^α f| and
/// the representation ∇^β f = I_{α−β} ∇^α f.
pub fn sweep_beta_to_alpha<T: Real>(
    f: &ScalarField<T>,
    alpha: T,
    betas: &[T],
    q: &QuadParams,
    tol: &Tolerances,
) -> Result<SweepReport> {
    check_grid(betas, alpha, "beta")?;
    let n = f.spec().n();
    let oa = FracOrder::new(n, alpha)?;
    let ga = frac_gradient(f, &oa, q)?;
    let mass_a = gradient_lp_with(f, &ga, &oa, Exponent::One, &Window::Whole)?.as_f64();
    let rows: Vec<Result<(f64, f64, f64, Option<f64>)>> = betas
        .par_iter()
        .map(|&beta| {
            let ob = FracOrder::new(n, beta)?;
            let gb = frac_gradient(f, &ob, q)?;
            let diff = gb.combine(T::one(), &ga, -T::one())?;
            let inside = lp_norm(&diff, Exponent::One, &Window::Whole)?;
            let l1 = (inside + exterior_difference_l1(f, &oa, &ob)?).as_f64();
            let mass_b = gradient_lp_with(f, &gb, &ob, Exponent::One, &Window::Whole)?.as_f64();
            let tw = intertwine_check(f, alpha, beta, q, DEFAULT_PAD)?;
            Ok((
                l1,
                mass_b,
                tw.relative_residual.as_f64(),
                tw.riesz_relative_residual.map(|v| v.as_f64()),
            ))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let grid: Vec<f64> = betas.iter().map(|b| b.as_f64()).collect();
    let mut records = Vec::new();
    for (b, (l1, mass_b, tw, riesz)) in grid.iter().zip(&rows) {
        records.push(record("f", "l1_residual", *b, *l1, mass_a, l1 / mass_a, tol.total_mass));
        records.push(record(
            "f",
            "total_variation",
            *b,
            *mass_b,
            mass_a,
            rel(*mass_b, mass_a),
            tol.total_mass,
        ));
        records.push(record("f", "intertwining", *b, *tw, 0.0, *tw, tol.representation));
        if let Some(r) = riesz {
            records.push(record("f", "representation", *b, *r, 0.0, *r, tol.representation));
        }
    }
    let mut checks = vec![
        Check::Final {
            quantity: "l1_residual".into(),
        },
        Check::Final {
            quantity: "total_variation".into(),
        },
        Check::All {
            quantity: "intertwining".into(),
        },
    ];
    if grid.len() > 1 {
        checks.push(Check::Decreasing {
            quantity: "l1_residual".into(),
        });
    }
    if n == 1 {
        checks.push(Check::All {
            quantity: "representation".into(),
        });
    }
    let mut report = SweepReport::new("beta_to_alpha", "beta", grid.clone(), records, checks);
    let a = alpha.as_f64();
    let dist: Vec<f64> = grid.iter().map(|b| a - b).collect();
    let res: Vec<f64> = rows.iter().map(|r| r.0).collect();
    report.fitted_order = fitted_order(&dist, &res);
    report.notes.push(format!("alpha = {a}"));
    Ok(report)
}

/// Inputs of the weak-star and Γ experiments.
#[derive(Debug, Clone, Copy)]
pub enum LimitInput<'a, T> {
    Field(&'a ScalarField<T>),
    Intervals(&'a IntervalSet<T>),
}

/// Support interval of a test profile on the line.
fn profile_support_1d<T: Real>(phi: &Profile<T>) -> (T, T) {
    match *phi {
        Profile::Bump { center, radius, .. } => (center[0] - radius, center[0] + radius),
        Profile::GaussianCutoff { radius, .. } => (-radius, radius),
    }
}

/// Weak-star convergence D^α f ⇀ Df and |D^α f| ⇀ |Df| tested against
/// compactly supported test functions. For interval sets the limits are
/// exact point evaluations at the endpoints.
pub fn weakstar_test<T: Real>(
    input: LimitInput<'_, T>,
    alphas: &[T],
    test_fns: &[Profile<T>],
    q: &QuadParams,
    tol: &Tolerances,
) -> Result<SweepReport> {
    check_grid(alphas, T::one(), "alpha")?;
    if test_fns.is_empty() {
        return Err(FracError::Domain(
            "weak-star test needs at least one test function".into(),
        ));
    }
    let grid: Vec<f64> = alphas.iter().map(|a| a.as_f64()).collect();
    let mut records = Vec::new();
    match input {
        LimitInput::Intervals(e) => {
            for (k, phi) in test_fns.iter().enumerate() {
                let case = format!("phi{k}");
                let val = |x: T| phi.value([x, T::zero()], 1);
                let scale = e
                    .endpoints()
                    .iter()
                    .map(|&x| val(x).abs().as_f64())
                    .fold(phi_sup(phi), f64::max);
                let mut signed_ref = 0.0;
                let mut mass_ref = 0.0;
                for &(a, b) in e.intervals() {
                    if a.is_finite() {
                        signed_ref += val(a).as_f64();
                        mass_ref += val(a).as_f64();
                    }
                    if b.is_finite() {
                        signed_ref -= val(b).as_f64();
                        mass_ref += val(b).as_f64();
                    }
                }
                let (lo, hi) = profile_support_1d(phi);
                let support = IntervalSet::interval(lo, hi)?;
                for (&alpha, &a) in alphas.iter().zip(&grid) {
                    let order = FracOrder::new(1, alpha)?;
                    let mu = order.mu();
                    let eval = |anchor: T, off: T| indicator_gradient_1d_at(e, mu, alpha, anchor, off);
                    let d = Density1d {
                        eval: &eval,
                        singular: e.endpoints(),
                        kinks: vec![lo, hi],
                        alpha,
                    };
                    let signed = integrate_density_1d(&d, &support, &val, false).as_f64();
                    let mass = integrate_density_1d(&d, &support, &val, true).as_f64();
                    let t = tol.weak_star * scale.max(signed_ref.abs());
                    records.push(record(
                        &case,
                        "signed",
                        a,
                        signed,
                        signed_ref,
                        (signed - signed_ref).abs(),
                        t,
                    ));
                    let t = tol.weak_star * scale.max(mass_ref.abs());
                    records.push(record(&case, "mass", a, mass, mass_ref, (mass - mass_ref).abs(), t));
                }
            }
        }
        LimitInput::Field(f) => {
            let spec = *f.spec();
            let n = spec.n();
            let weights = Window::Whole.node_weights(&spec)?;
            let grad = local_gradient(f);
            let gmag = grad.magnitude();
            let pair = |phi: &[T], g: &[T]| -> f64 {
                phi.iter()
                    .zip(g)
                    .zip(&weights)
                    .fold(T::zero(), |acc, ((a, b), w)| acc + *a * *b * *w)
                    .as_f64()
            };
            let samples: Vec<Vec<T>> = test_fns
                .iter()
                .map(|phi| phi.sample(&spec).map(ScalarField::into_values))
                .collect::<Result<_>>()?;
            let gradients: Vec<Result<VectorField<T>>> = alphas
                .par_iter()
                .map(|&alpha| frac_gradient(f, &FracOrder::new(n, alpha)?, q))
                .collect();
            let gradients = gradients.into_iter().collect::<Result<Vec<_>>>()?;
            for (k, (phi, s)) in test_fns.iter().zip(&samples).enumerate() {
                let case = format!("phi{k}");
                let mass_ref = pair(s, &gmag);
                let refs: Vec<f64> = (0..n).map(|c| pair(s, grad.component(c))).collect();
                let scale = phi_sup(phi) * lp_norm(&grad, Exponent::One, &Window::Whole)?.as_f64();
                for (g, &a) in gradients.iter().zip(&grid) {
                    for (c, r) in refs.iter().enumerate() {
                        let v = pair(s, g.component(c));
                        let t = tol.weak_star * scale.max(r.abs());
                        records.push(record(&case, &format!("signed_{c}"), a, v, *r, (v - r).abs(), t));
                    }
                    let v = pair(s, &g.magnitude());
                    let t = tol.weak_star * scale.max(mass_ref.abs());
                    records.push(record(&case, "mass", a, v, mass_ref, (v - mass_ref).abs(), t));
                }
            }
        }
    }
    let mut quantities: Vec<String> = records.iter().map(|r| r.quantity.clone()).collect();
    quantities.sort();
    quantities.dedup();
    let checks = quantities
        .into_iter()
        .map(|quantity| Check::Final { quantity })
        .collect();
    Ok(SweepReport::new("weak_star", "alpha", grid, records, checks))
}

fn phi_sup<T: Real>(phi: &Profile<T>) -> f64 {
    match *phi {
        Profile::Bump { height, .. } => height.abs().as_f64(),
        Profile::GaussianCutoff { .. } => 1.0,
    }
}

/// Kinds of perturbation applied to the base set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    /// The base itself.
    Constant,
    /// E + ε.
    Translation,
    /// Dilation of E by 1 + ε about the midpoint of its hull.
    Dilation,
    /// χ_E + ε·hat, with a hat of unit height centred at `center`.
    AdditiveHat { center: f64, radius: f64 },
}

/// A sequence (f_α) approaching the base input with amplitude
/// ε(α) = amplitude·(1 − α)^power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationFamily {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub power: f64,
}

fn one() -> f64 {
    1.0
}

impl PerturbationFamily {
    pub fn new(kind: PerturbationKind, amplitude: f64, power: f64) -> Self {
        Self { kind, amplitude, power }
    }

    pub fn label(&self) -> String {
        match self.kind {
            PerturbationKind::Constant => "constant".into(),
            PerturbationKind::Translation => "translation".into(),
            PerturbationKind::Dilation => "dilation".into(),
            PerturbationKind::AdditiveHat { .. } => "additive_hat".into(),
        }
    }

    pub fn epsilon(&self, alpha: f64) -> f64 {
        match self.kind {
            PerturbationKind::Constant => 0.0,
            _ => self.amplitude * (1.0 - alpha).powf(self.power),
        }
    }

    /// The family must approach the base in L¹.
    fn validate(&self) -> Result<()> {
        if self.kind == PerturbationKind::Constant {
            return Ok(());
        }
        if !(self.power > 0.0) || !self.amplitude.is_finite() {
            return Err(FracError::Domain(format!(
                "perturbation family {} does not converge to its base: ε(α) = {}·(1 − α)^{} does not vanish as α → 1",
                self.label(),
                self.amplitude,
                self.power
            )));
        }
        if let PerturbationKind::AdditiveHat { radius, .. } = self.kind {
            if !(radius > 0.0) {
                return Err(FracError::Domain("hat radius must be positive".into()));
            }
        }
        Ok(())
    }
}

/// |D^α f_α|(Ω) and ‖f_α − f‖_{L¹} for one member of a family.
fn perturbed_variation<T: Real>(
    base: &IntervalSet<T>,
    family: &PerturbationFamily,
    alpha: T,
    omega: &IntervalSet<T>,
) -> Result<(f64, f64)> {
    let eps = T::lit(family.epsilon(alpha.as_f64()));
    let order = FracOrder::new(1, alpha)?;
    let (mu, a) = (order.mu(), alpha);
    let variation = |e: &IntervalSet<T>| {
        frac_variation(
            VariationInput::Intervals(e),
            &order,
            &Window::Intervals(omega.clone()),
            &QuadParams::default(),
        )
    };
    match family.kind {
        PerturbationKind::Constant => Ok((variation(base)?.as_f64(), 0.0)),
        PerturbationKind::Translation => {
            let e = base.translate(eps);
            Ok((variation(&e)?.as_f64(), e.symmetric_difference_measure(base).as_f64()))
        }
        PerturbationKind::Dilation => {
            let ivs = base.intervals();
            let (lo, hi) = (ivs[0].0, ivs[ivs.len() - 1].1);
            let centre = if lo.is_finite() && hi.is_finite() {
                (lo + hi) * T::lit(0.5)
            } else if lo.is_finite() {
                lo
            } else if hi.is_finite() {
                hi
            } else {
                T::zero()
            };
            let e = base.dilate(centre, T::one() + eps)?;
            Ok((variation(&e)?.as_f64(), e.symmetric_difference_measure(base).as_f64()))
        }
        PerturbationKind::AdditiveHat { center, radius } => {
            let (c, r) = (T::lit(center), T::lit(radius));
            let eval = |anchor: T, off: T| {
                indicator_gradient_1d_at(base, mu, a, anchor, off) + eps * hat_gradient_1d_at(c, r, mu, a, anchor, off)
            };
            let d = Density1d {
                eval: &eval,
                singular: base.endpoints(),
                kinks: vec![c - r, c, c + r],
                alpha: a,
            };
            let v = integrate_density_1d(&d, omega, &|_| T::one(), true);
            Ok((v.as_f64(), (eps * r).as_f64()))
        }
    }
}

/// Falsification of the Γ-liminf inequality |Df|(Ω) ≤ liminf |D^α f_α|(Ω)
/// along the given families, plus the constant recovery sequence
/// |D^α χ_E|(Ω) → |Dχ_E|(Ω).
///
/// A finite α grid cannot prove a liminf. At each α the check allows the
/// deficit of the constant sequence itself, |Df|(Ω) − |D^α f|(Ω), plus
/// `tol.gamma`·|Df|(Ω); since the constant sequence converges this slack
/// tends to the declared tolerance.
pub fn gamma_falsification<T: Real>(
    base: &IntervalSet<T>,
    w: &Window<T>,
    alphas: &[T],
    families: &[PerturbationFamily],
    tol: &Tolerances,
) -> Result<SweepReport> {
    check_grid(alphas, T::one(), "alpha")?;
    for fam in families {
        fam.validate()?;
    }
    let omega = w.as_intervals()?;
    if !omega.is_bounded() {
        return Err(FracError::Domain("the Γ experiments need a bounded window".into()));
    }
    let ends: Vec<T> = base.endpoints();
    if ends.iter().any(|&x| omega.is_endpoint(x)) {
        return Err(FracError::Domain("the set must not jump on the window boundary".into()));
    }
    let per = ends.iter().filter(|&&x| omega.contains(x)).count() as f64;
    let grid: Vec<f64> = alphas.iter().map(|a| a.as_f64()).collect();
    let base_values: Vec<f64> = alphas
        .par_iter()
        .map(|&a| {
            perturbed_variation(
                base,
                &PerturbationFamily::new(PerturbationKind::Constant, 0.0, 1.0),
                a,
                &omega,
            )
            .map(|v| v.0)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    for (a, v) in grid.iter().zip(&base_values) {
        records.push(record("constant", "recovery", *a, *v, per, rel(*v, per), tol.gamma));
    }
    for (k, fam) in families.iter().enumerate() {
        let case = format!("{}{k}", fam.label());
        let rows: Vec<(f64, f64)> = alphas
            .par_iter()
            .map(|&a| perturbed_variation(base, fam, a, &omega))
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<_>>()?;
        for w in rows.windows(2) {
            if w[1].1 > w[0].1 * (1.0 + 1e-12) {
                return Err(FracError::Domain(format!(
                    "perturbation family {} moves away from its base in L¹",
                    fam.label()
                )));
            }
        }
        for ((a, (v, dist)), b) in grid.iter().zip(&rows).zip(&base_values) {
            let slack = tol.gamma * per + (per - b).max(0.0);
            records.push(record(&case, "liminf", *a, *v, per, (per - v).max(0.0), slack));
            records.push(record(&case, "l1_distance", *a, *dist, 0.0, *dist, f64::MAX));
        }
    }
    let mut checks = vec![Check::Final {
        quantity: "recovery".into(),
    }];
    if !families.is_empty() {
        checks.push(Check::All {
            quantity: "liminf".into(),
        });
    }
    let mut report = SweepReport::new("gamma", "alpha", grid, records, checks);
    report.notes.push(format!("reference |Df|(Ω) = {per}"));
    report
        .notes
        .push("falsification over sampled families; a finite grid cannot establish a Γ-limit".into());
    Ok(report)
}

/// An entry of the inequality corpus.
#[derive(Debug, Clone)]
pub enum CorpusItem<T> {
    Field {
        name: String,
        field: ScalarField<T>,
    },
    Intervals {
        name: String,
        set: IntervalSet<T>,
        window: Window<T>,
    },
    Polygons {
        name: String,
        set: PolySet<T>,
        window: Window<T>,
    },
}

impl<T> CorpusItem<T> {
    pub fn name(&self) -> &str {
        match self {
            CorpusItem::Field { name, .. } | CorpusItem::Intervals { name, .. } | CorpusItem::Polygons { name, .. } => {
                name
            }
        }
    }
}

struct Ineq {
    quantity: String,
    lhs: f64,
    rhs: f64,
}

fn ineq(quantity: impl Into<String>, lhs: f64, rhs: f64) -> Ineq {
    Ineq {
        quantity: quantity.into(),
        lhs,
        rhs,
    }
}

/// Constant n ω_n μ / (α(1−α)).
fn base_constant(n: usize, mu: f64, alpha: f64) -> f64 {
    n as f64 * unit_ball_volume::<f64>(n) * mu / (alpha * (1.0 - alpha))
}

/// Ratio of the interpolation bound ‖∇^β f‖₁ ≤ K ‖f‖₁^{1−β/α} |D^α f|^{β/α}.
fn interpolation_constant(n: usize, alpha: f64, beta: f64, omega_alpha: f64) -> Result<f64> {
    let nf = n as f64;
    // Constant of the Riesz potential I_{α−β}.
    let mu = crate::constants::mu(n, 1.0 + beta - alpha)?;
    let omega1 = nf * unit_ball_volume::<f64>(n);
    let t = beta / alpha;
    Ok(
        alpha * mu * omega1.powf(t) * omega_alpha.powf(1.0 - t) * (nf + 2.0 * beta - alpha).powf(1.0 - t)
            / (beta * (nf + beta - alpha) * (alpha - beta)),
    )
}

fn field_inequalities<T: Real>(
    f: &ScalarField<T>,
    alpha: T,
    q: &QuadParams,
    omega_cache: &BTreeMap<(usize, u64), f64>,
) -> Result<Vec<Ineq>> {
    let spec = *f.spec();
    let n = spec.n();
    let nf = n as f64;
    let order = FracOrder::new(n, alpha)?;
    let (a, mu) = (alpha.as_f64(), order.mu().as_f64());
    let whole = Window::Whole;
    let g = frac_gradient(f, &order, q)?;
    let l1 = gradient_lp_with(f, &g, &order, Exponent::One, &whole)?.as_f64();
    let l2 = gradient_lp_with(f, &g, &order, Exponent::Two, &whole)?.as_f64();
    let linf = lp_norm(&g, Exponent::Infinity, &whole)?.as_f64();
    let grad = local_gradient(f);
    let tv = lp_norm(&grad, Exponent::One, &whole)?.as_f64();
    let grad2 = lp_norm(&grad, Exponent::Two, &whole)?.as_f64();
    let lip = lp_norm(&grad, Exponent::Infinity, &whole)?.as_f64();
    let abs = ScalarField::new(spec, f.values().iter().map(|v| v.abs()).collect(), f.support_radius())?;
    let f1 = crate::grid::integrate(&abs, &whole)?.as_f64();
    let sq = abs.product(&abs)?;
    let f2 = crate::grid::integrate(&sq, &whole)?.as_f64().sqrt();
    let fsup = f.max_abs().as_f64();
    let k = base_constant(n, mu, a);
    let mut out = Vec::new();
    if f1 == 0.0 {
        for name in ["seminorm", "divergence", "davila_opt", "sobolev_2", "sobolev_inf"] {
            out.push(ineq(name, 0.0, 0.0));
        }
        return Ok(out);
    }
    out.push(ineq("seminorm", l1, mu * sobolev_seminorm(f, alpha)?.as_f64()));
    // φ = f e_1 has Lip φ = ‖∂_1 f‖_∞ ≤ ‖∇f‖_∞.
    let mut comps = vec![f.values().to_vec()];
    if n == 2 {
        comps.push(vec![T::zero(); spec.len()]);
    }
    let phi = VectorField::new(spec, comps, f.support_radius())?;
    let div = frac_divergence(&phi, &order, q)?;
    let lip1 = lp_norm(
        &ScalarField::new(spec, grad.component(0).to_vec(), None)?,
        Exponent::Infinity,
        &whole,
    )?
    .as_f64();
    out.push(ineq(
        "divergence",
        div.max_abs().as_f64(),
        2f64.powf(1.0 - a) * k * lip1.powf(a) * fsup.powf(1.0 - a),
    ));
    for r in [0.5_f64, 1.0, 2.0] {
        let rhs = nf * unit_ball_volume::<f64>(n) * mu / (nf + a - 1.0)
            * (tv / (1.0 - a) * r.powf(1.0 - a) + (nf + 2.0 * a - 1.0) / a * f1 * r.powf(-a));
        out.push(ineq(format!("davila_r{r}"), l1, rhs));
    }
    let opt = (nf + 2.0 * a - 1.0).powf(1.0 - a) / (nf + a - 1.0) * k;
    out.push(ineq("davila_opt", l1, opt * f1.powf(1.0 - a) * tv.powf(a)));
    out.push(ineq("sobolev_2", l2, opt * grad2.powf(a) * f2.powf(1.0 - a)));
    out.push(ineq(
        "sobolev_inf",
        linf,
        2f64.powf(1.0 - a) * k * lip.powf(a) * fsup.powf(1.0 - a),
    ));
    let omega_a = omega_cache[&(n, a.to_bits())];
    for frac in [0.5, 0.9] {
        let b = a * frac;
        let ob = FracOrder::new(n, T::lit(b))?;
        let gb = frac_gradient(f, &ob, q)?;
        let lb = gradient_lp_with(f, &gb, &ob, Exponent::One, &whole)?.as_f64();
        let kk = interpolation_constant(n, a, b, omega_a)?;
        out.push(ineq(
            format!("interpolation_{frac}"),
            lb,
            kk * f1.powf(1.0 - b / a) * l1.powf(b / a),
        ));
    }
    Ok(out)
}

fn interval_inequalities<T: Real>(
    e: &IntervalSet<T>,
    w: &Window<T>,
    alpha: T,
    q: &QuadParams,
    omega_cache: &BTreeMap<(usize, u64), f64>,
) -> Result<Vec<Ineq>> {
    let order = FracOrder::new(1, alpha)?;
    let (a, mu) = (alpha.as_f64(), order.mu().as_f64());
    let mut out = Vec::new();
    let v = frac_variation(VariationInput::Intervals(e), &order, w, q)?.as_f64();
    let p = frac_perimeter(SetInput::Intervals(e), alpha, w)?;
    out.push(ineq("perimeter_tilde", v, mu * p.tilde().as_f64()));
    if e.is_bounded() && !e.is_empty() {
        let whole = Window::Whole;
        let l1 = frac_variation(VariationInput::Intervals(e), &order, &whole, q)?.as_f64();
        let m = e.measure().as_f64();
        let tv = e.endpoints().len() as f64;
        let opt = (2.0 * a).powf(1.0 - a) / a * base_constant(1, mu, a);
        out.push(ineq("davila_opt", l1, opt * m.powf(1.0 - a) * tv.powf(a)));
        let omega_a = omega_cache[&(1, a.to_bits())];
        for frac in [0.5, 0.9] {
            let b = a * frac;
            let ob = FracOrder::new(1, T::lit(b))?;
            let lb = frac_variation(VariationInput::Intervals(e), &ob, &whole, q)?.as_f64();
            let kk = interpolation_constant(1, a, b, omega_a)?;
            out.push(ineq(
                format!("interpolation_{frac}"),
                lb,
                kk * m.powf(1.0 - b / a) * l1.powf(b / a),
            ));
        }
    }
    Ok(out)
}

/// Evaluates both sides of the integrability estimates over a corpus and an
/// α grid. A record passes when LHS ≤ RHS·(1 + tol.inequality).
pub fn inequality_suite<T: Real>(
    corpus: &[CorpusItem<T>],
    alphas: &[T],
    q: &QuadParams,
    tol: &Tolerances,
) -> Result<SweepReport> {
    check_grid(alphas, T::one(), "alpha")?;
    if alphas.iter().any(|a| *a >= T::one()) {
        return Err(FracError::Domain("α must be below 1".into()));
    }
    let mut dims: Vec<usize> = corpus
        .iter()
        .filter_map(|c| match c {
            CorpusItem::Field { field, .. } => Some(field.spec().n()),
            CorpusItem::Intervals { .. } => Some(1),
            CorpusItem::Polygons { .. } => None,
        })
        .collect();
    dims.sort_unstable();
    dims.dedup();
    let keys: Vec<(usize, f64)> = dims
        .iter()
        .flat_map(|&n| alphas.iter().map(move |a| (n, a.as_f64())))
        .collect();
    let omegas: Vec<Result<((usize, u64), f64)>> = keys
        .par_iter()
        .map(|&(n, a)| Ok(((n, a.to_bits()), unit_ball_variation(n, a)?)))
        .collect();
    let omega_cache: BTreeMap<(usize, u64), f64> = omegas.into_iter().collect::<Result<_>>()?;
    let jobs: Vec<(usize, T)> = (0..corpus.len())
        .flat_map(|i| alphas.iter().map(move |a| (i, *a)))
        .collect();
    let results: Vec<Result<Vec<Ineq>>> = jobs
        .par_iter()
        .map(|&(i, alpha)| match &corpus[i] {
            CorpusItem::Field { field, .. } => field_inequalities(field, alpha, q, &omega_cache),
            CorpusItem::Intervals { set, window, .. } => interval_inequalities(set, window, alpha, q, &omega_cache),
            CorpusItem::Polygons { set, window, .. } => {
                let order = FracOrder::new(2, alpha)?;
                let v = frac_variation(VariationInput::Polygons(set), &order, window, q)?.as_f64();
                let p = frac_perimeter(SetInput::Polygons(set), alpha, window)?;
                Ok(vec![ineq(
                    "perimeter_tilde",
                    v,
                    order.mu().as_f64() * p.tilde().as_f64(),
                )])
            }
        })
        .collect();
    let mut records = Vec::new();
    for (&(i, alpha), res) in jobs.iter().zip(results) {
        for item in res? {
            records.push(record(
                corpus[i].name(),
                &item.quantity,
                alpha.as_f64(),
                item.lhs,
                item.rhs,
                (item.lhs - item.rhs).max(0.0),
                tol.inequality * item.rhs.abs(),
            ));
        }
    }
    let mut quantities: Vec<String> = records.iter().map(|r| r.quantity.clone()).collect();
    quantities.sort();
    quantities.dedup();
    let checks = quantities.into_iter().map(|quantity| Check::All { quantity }).collect();
    let grid = alphas.iter().map(|a| a.as_f64()).collect();
    Ok(SweepReport::new("inequalities", "alpha", grid, records, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(records: Vec<SweepRecord>, checks: Vec<Check>) -> SweepReport {
        SweepReport::new("t", "alpha", vec![0.5, 0.9], records, checks)
    }

    #[test]
    fn verdict_follows_records() {
        let recs = vec![
            record("a", "x", 0.5, 1.0, 0.0, 0.3, 0.1),
            record("a", "x", 0.9, 1.0, 0.0, 0.05, 0.1),
        ];
        let r = report(
            recs.clone(),
            vec![
                Check::Final { quantity: "x".into() },
                Check::Decreasing { quantity: "x".into() },
            ],
        );
        assert!(r.pass);
        let r = report(recs, vec![Check::All { quantity: "x".into() }]);
        assert!(!r.pass);
        assert_eq!(r.failures.len(), 1);
        let json = serde_json::to_string(&r).unwrap();
        let back: SweepReport = serde_json::from_str(&json).unwrap();
        assert!(back.verdict_is_consistent());
        assert_eq!(back, r);
    }

    #[test]
    fn missing_quantity_fails() {
        let r = report(vec![], vec![Check::Final { quantity: "x".into() }]);
        assert!(!r.pass);
    }

    #[test]
    fn fitted_slope() {
        let d = [0.5, 0.25, 0.125];
        let r: Vec<f64> = d.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((fitted_order(&d, &r).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(fitted_order(&d[..1], &r[..1]), None);
    }

    #[test]
    fn diverging_family_is_rejected() {
        let e = IntervalSet::interval(0.0_f64, 1.0).unwrap();
        let w = Window::interval(-2.0, 2.0).unwrap();
        let fam = PerturbationFamily::new(PerturbationKind::Translation, 0.3, 0.0);
        assert!(gamma_falsification(&e, &w, &[0.9, 0.99], &[fam], &Tolerances::default()).is_err());
    }

    #[test]
    fn hat_density_matches_difference_quotient() {
        // ∇^α hat(x) = μ ∫_0^∞ (hat(x + t) − hat(x − t)) t^{−1−α} dt, split at the kinks.
        let (alpha, x) = (0.6_f64, 0.3);
        let mu = crate::constants::mu(1, alpha).unwrap();
        let hat = |y: f64| (1.0 - y.abs()).max(0.0);
        let g = |t: f64| (hat(x + t) - hat(x - t)) * t.powf(-1.0 - alpha);
        let near = -2.0 * 0.3f64.powf(1.0 - alpha) / (1.0 - alpha);
        let mid = -(0.3f64.powf(-alpha) - 0.7f64.powf(-alpha));
        let far = crate::quadrature::GaussRule::new(20).integrate(0.7, 1.3, g);
        let want = mu * (near + mid + far);
        let got = hat_gradient_1d_at(0.0, 1.0, mu, alpha, x, 0.0);
        assert!((got - want).abs() < 1e-12, "{got} {want}");
    }
}
