use proptest::prelude::*;
use qbkix::cli::RunConfig;
use qbkix::geometry::{build_uniform_mesh, ParametricCurve};
use qbkix::kernels::KernelSpec;
use qbkix::quadrature::gauss_legendre;
use qbkix::solver::{gmres, GmresOptions};

fn point() -> impl Strategy<Value = [f64; 2]> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| [x, y])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_layer_is_symmetric(x in point(), y in point(), nu in 0.05..0.45f64) {
        prop_assume!((x[0] - y[0]).hypot(x[1] - y[1]) > 1e-3);
        for spec in [KernelSpec::laplace(), KernelSpec::yukawa(1.5), KernelSpec::stokes(), KernelSpec::navier(nu)] {
            let a = spec.single_layer(x, y).unwrap();
            let b = spec.single_layer(y, x).unwrap();
            if let (Some(a), Some(b)) = (a.as_real(), b.as_real()) {
                prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
            } else {
                let (a, b) = (a.as_matrix().unwrap(), b.as_matrix().unwrap());
                for i in 0..2 { for j in 0..2 {
                    prop_assert!((a[i][j] - b[j][i]).abs() <= 1e-13 * a[i][j].abs().max(1.0));
                }}
            }
        }
    }

    #[test]
    fn gauss_rule_integrates_polynomials(q in 2usize..24, deg in 0usize..8) {
        let deg = deg.min(2 * q - 1);
        let rule = gauss_legendre(q).unwrap();
        let sum: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
        let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
        prop_assert!((sum - exact).abs() < 1e-13);
    }

    #[test]
    fn gmres_solves_diagonally_dominant(n in 2usize..30, seed in any::<u64>()) {
        let mut s = seed;
        let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5 };
        let a: Vec<f64> = (0..n * n).map(|k| if k % (n + 1) == 0 { n as f64 } else { next() }).collect();
        let x: Vec<f64> = (0..n).map(|_| next()).collect();
        let b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect();
        let apply = |v: &[f64]| Ok((0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect());
        let rep = gmres(&apply, &b, &GmresOptions { tol: 1e-12, max_iter: n }).unwrap();
        prop_assert!(rep.converged);
        for (u, v) in rep.density.iter().zip(&x) {
            prop_assert!((u - v).abs() < 1e-9);
        }
        prop_assert!(rep.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn mesh_length_matches_circumference(r in 0.2..5.0f64, m in 3usize..20) {
        let mesh = build_uniform_mesh(&ParametricCurve::circle(r), m, 8).unwrap();
        let len: f64 = mesh.panels().iter().map(|p| p.arc_length).sum();
        prop_assert!((len - std::f64::consts::TAU * r).abs() < 1e-10 * r);
        prop_assert_eq!(mesh.num_nodes(), 8 * m);
    }

    #[test]
    fn config_overrides_round_trip(tol in 1e-14..1e-4f64, panels in 3usize..60, amp in 0.0..0.3f64) {
        let sets = vec![
            format!("gmres.tol={tol:e}"),
            format!("mesh.panels={panels}"),
            format!("curve.amp={amp:e}"),
        ];
        let cfg = RunConfig::from_toml("", &sets).unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap(), &[]).unwrap();
        prop_assert_eq!(cfg.to_toml().unwrap(), back.to_toml().unwrap());
        prop_assert_eq!(back.gmres.tol, tol);
    }
}
