use fracvar::grid::{GridSpec, ScalarField, VectorField};
use fracvar::kernels::QuadParams;
use fracvar::spectral::{duality_check, duality_oracle_pad, duality_tolerance, DualityReport};
use fracvar::variation::random_bumps;
use fracvar::FracOrder;

fn pair(g: &GridSpec<f64>, seed: u64) -> (ScalarField<f64>, VectorField<f64>) {
    let f = random_bumps(g, 3, 2.0, seed).unwrap();
    let comps = (0..g.n())
        .map(|k| {
            random_bumps(g, 3, 2.0, 100 + 7 * seed + k as u64)
                .unwrap()
                .values()
                .to_vec()
        })
        .collect();
    (f, VectorField::new(*g, comps, Some(3.0)).unwrap())
}

fn run(n: usize, m: usize, alpha: f64, seed: u64) -> (f64, DualityReport<f64>) {
    let g = GridSpec::new(n, 4.0, m).unwrap();
    let (f, phi) = pair(&g, seed);
    let o = FracOrder::new(n, alpha).unwrap();
    (
        g.h(),
        duality_check(&f, &phi, &o, &QuadParams::default(), duality_oracle_pad(n)).unwrap(),
    )
}

#[test]
fn residual_within_budget_and_converges() {
    for (n, m) in [(1, 513), (2, 65)] {
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            for seed in 0..5 {
                let (h, coarse) = run(n, m, alpha, seed);
                let (hf, fine) = run(n, 2 * m - 1, alpha, seed);
                assert!(coarse.discrete_residual < 1e-12 * coarse.scale);
                assert!(
                    fine.residual <= duality_tolerance(hf, alpha, fine.scale),
                    "n{n} a{alpha} s{seed}"
                );
                let order = (coarse.residual / fine.residual).ln() / (h / hf).ln();
                assert!(
                    order >= (2.0 - alpha).min(1.0) - 0.2,
                    "n{n} a{alpha} s{seed} order {order}"
                );
            }
        }
    }
}
