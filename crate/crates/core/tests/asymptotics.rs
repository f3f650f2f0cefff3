use fracvar::asymptotics::{
    gamma_falsification, inequality_suite, sweep_alpha_to_one, sweep_beta_to_alpha, weakstar_test, CorpusItem,
    LimitInput, PerturbationFamily, PerturbationKind, SweepReport, Tolerances, DEFAULT_ALPHAS,
};
use fracvar::grid::{make_bump, make_gaussian_cutoff, Exponent, GridSpec, IntervalSet, Profile, Window};
use fracvar::kernels::QuadParams;

fn show(r: &SweepReport) {
    for rec in &r.records {
        println!(
            "{} {} {} {:.6e} {:.6e} {:.3e} <= {:.3e}",
            rec.case, rec.quantity, rec.parameter, rec.computed, rec.reference, rec.residual, rec.tolerance
        );
    }
    println!("failures: {:?}", r.failures);
}

#[test]
fn alpha_to_one_on_gaussian() {
    let g = GridSpec::new(1, 8.0_f64, 2049).unwrap();
    let f = make_gaussian_cutoff(&g, 1.0, 4.0).unwrap();
    let r = sweep_alpha_to_one(
        &f,
        Exponent::One,
        &DEFAULT_ALPHAS,
        &QuadParams::default(),
        &Tolerances::default(),
    )
    .unwrap();
    show(&r);
    assert!(r.pass);
    assert!(r.verdict_is_consistent());
    assert!(r.fitted_order.unwrap() > 0.5);
}

#[test]
fn beta_to_alpha_on_bump() {
    let g = GridSpec::new(1, 8.0_f64, 2049).unwrap();
    let f = make_bump(&g, [0.0, 0.0], 1.5, 1.0).unwrap();
    let r = sweep_beta_to_alpha(
        &f,
        0.7,
        &[0.5, 0.6, 0.65, 0.69],
        &QuadParams::default(),
        &Tolerances::default(),
    )
    .unwrap();
    show(&r);
    assert!(r.pass);
}

#[test]
fn weak_star_for_unit_interval() {
    let e = IntervalSet::interval(0.0_f64, 1.0).unwrap();
    let phis = [
        Profile::Bump {
            center: [0.2, 0.0],
            radius: 0.5,
            height: 1.0,
        },
        Profile::Bump {
            center: [0.9, 0.0],
            radius: 0.4,
            height: 2.0,
        },
    ];
    let r = weakstar_test(
        LimitInput::Intervals(&e),
        &[0.9, 0.99, 0.999],
        &phis,
        &QuadParams::default(),
        &Tolerances::default(),
    )
    .unwrap();
    show(&r);
    assert!(r.pass);
}

#[test]
fn gamma_families_for_unit_interval() {
    let e = IntervalSet::interval(0.0_f64, 1.0).unwrap();
    let w = Window::interval(-2.0, 2.0).unwrap();
    let fams = [
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
    let alphas = [0.9, 0.95, 0.99, 0.995, 0.999];
    let r = gamma_falsification(&e, &w, &alphas, &fams, &Tolerances::default()).unwrap();
    show(&r);
    assert!(r.pass);
    assert!(r.notes.iter().any(|n| n.contains("falsification")));
}

#[test]
fn inequality_suite_small_corpus() {
    let g1 = GridSpec::new(1, 6.0_f64, 1025).unwrap();
    let corpus = vec![
        CorpusItem::Field {
            name: "bump".into(),
            field: make_bump(&g1, [0.5, 0.0], 1.0, 1.0).unwrap(),
        },
        CorpusItem::Field {
            name: "gauss".into(),
            field: make_gaussian_cutoff(&g1, 0.7, 2.5).unwrap(),
        },
        CorpusItem::Intervals {
            name: "two_intervals".into(),
            set: IntervalSet::new([(0.0, 1.0), (2.0, 2.5)]).unwrap(),
            window: Window::interval(-1.0, 3.0).unwrap(),
        },
    ];
    let r = inequality_suite(
        &corpus,
        &[0.3, 0.6, 0.9],
        &QuadParams::default(),
        &Tolerances::default(),
    )
    .unwrap();
    show(&r);
    assert!(r.pass);
}

#[test]
fn report_round_trip_keeps_verdict() {
    let g = GridSpec::new(1, 8.0_f64, 513).unwrap();
    let f = make_gaussian_cutoff(&g, 1.0, 4.0).unwrap();
    let r = sweep_alpha_to_one(
        &f,
        Exponent::Infinity,
        &[0.9, 0.99],
        &QuadParams::default(),
        &Tolerances::default(),
    )
    .unwrap();
    let back: SweepReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
    assert!(back.verdict_is_consistent());
}
