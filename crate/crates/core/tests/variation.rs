use approx::assert_relative_eq;
use fracvar::grid::{make_bump, GridSpec, PolySet, ScalarField, VariationInput, Window};
use fracvar::kernels::QuadParams;
use fracvar::variation::{
    dual_variation_lower_bound, frac_perimeter, frac_variation, sobolev_seminorm, DualOptions, SetInput,
};
use fracvar::FracOrder;

/// [(1 − x²)²₊]_{W^{α,1}} by adaptive quadrature of the difference
/// quotient in (x, t) coordinates.
const QUARTIC_SEMINORM: [(f64, f64); 4] = [
    (0.3, 19.506980887387503),
    (0.5, 16.090607642999956),
    (0.7, 18.96895431991821),
    (0.9, 44.25958291544664),
];

fn quartic(spec: &GridSpec<f64>) -> ScalarField<f64> {
    ScalarField::from_fn(*spec, Some(1.0), |p| {
        let x = p[0];
        if x.abs() < 1.0 {
            (1.0 - x * x).powi(2)
        } else {
            0.0
        }
    })
    .unwrap()
}

#[test]
fn seminorm_matches_reference() {
    let spec = GridSpec::new(1, 2.0, 1025).unwrap();
    let f = quartic(&spec);
    for (a, want) in QUARTIC_SEMINORM {
        let got = sobolev_seminorm(&f, a).unwrap();
        println!("{a} {got} {want} {}", got / want - 1.0);
        assert_relative_eq!(got, want, max_relative = 1e-4);
    }
}

#[test]
fn variation_below_seminorm_bound() {
    let spec = GridSpec::new(1, 2.0, 513).unwrap();
    let f = quartic(&spec);
    for (a, _) in QUARTIC_SEMINORM {
        let o = FracOrder::new(1, a).unwrap();
        let v = frac_variation(VariationInput::Field(&f), &o, &Window::Whole, &QuadParams::default()).unwrap();
        let s = sobolev_seminorm(&f, a).unwrap();
        assert!(v <= o.mu() * s);
    }
}

#[test]
fn dual_bound_approaches_variation() {
    let spec = GridSpec::new(1, 2.0, 257).unwrap();
    let f = make_bump(&spec, [0.0, 0.0], 1.0, 1.0).unwrap();
    let o = FracOrder::new(1, 0.5).unwrap();
    let q = QuadParams::default();
    let w = Window::interval(-1.9, 1.9).unwrap();
    let v = frac_variation(VariationInput::Field(&f), &o, &w, &q).unwrap();
    let d = dual_variation_lower_bound(&f, &o, &w, &DualOptions::default(), &q).unwrap();
    println!("{} {} {} {}", v, d.value, d.history.len(), d.operator_norm);
    assert!(d.value <= v * (1.0 + 1e-3));
    assert!(d.value >= 0.95 * v);
}

#[test]
fn square_variation_below_perimeter() {
    let sq = PolySet::rectangle([-0.5, -0.5], [0.5, 0.5]).unwrap();
    for a in [0.3, 0.7] {
        let o = FracOrder::new(2, a).unwrap();
        let q = QuadParams::default();
        let t = std::time::Instant::now();
        let v = frac_variation(VariationInput::Polygons(&sq), &o, &Window::Whole, &q).unwrap();
        let p = frac_perimeter(SetInput::Polygons(&sq), a, &Window::Whole).unwrap();
        let w = Window::cube(1.0);
        let vw = frac_variation(VariationInput::Polygons(&sq), &o, &w, &q).unwrap();
        let pw = frac_perimeter(SetInput::Polygons(&sq), a, &w).unwrap();
        println!(
            "{a} {v} {} {vw} {} {:?}",
            o.mu() * p.total(),
            o.mu() * pw.tilde(),
            t.elapsed()
        );
        assert!(v < o.mu() * p.total());
        assert!(vw < v && vw < o.mu() * pw.tilde());
    }
}

#[test]
fn unit_ball_variation_limits() {
    use fracvar::variation::unit_ball_variation;
    let w1 = unit_ball_variation(1, 0.999_f64).unwrap();
    assert!((w1 - 2.0).abs() < 0.01, "{w1}");
    // Radial integral of the boundary representation, evaluated with scipy.
    for (a, want) in [(0.5, 8.763364802808175), (0.9, 6.490297501008179)] {
        assert_relative_eq!(unit_ball_variation(2, a).unwrap(), want, max_relative = 1e-7);
    }
    let w = unit_ball_variation(2, 0.999_f64).unwrap();
    assert_relative_eq!(w, std::f64::consts::TAU, max_relative = 1e-3);
}

#[test]
fn inscribed_polygon_approaches_disk() {
    use fracvar::variation::unit_ball_variation;
    let poly = PolySet::regular([0.0, 0.0], 1.0, 16).unwrap();
    let a = 0.9;
    let o = FracOrder::new(2, a).unwrap();
    let v = frac_variation(
        VariationInput::Polygons(&poly),
        &o,
        &Window::Whole,
        &QuadParams::default(),
    )
    .unwrap();
    let disk = unit_ball_variation(2, a).unwrap();
    // The gap shrinks like k^{-2}; about 1% for 16 sides.
    assert!(v < disk && v > 0.985 * disk, "{v} {disk}");
}
