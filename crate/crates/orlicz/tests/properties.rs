//! Property tests for the invariants of the numerical building blocks.

use nalgebra::DMatrix;
use proptest::prelude::*;

use orlicz::affine::{asp_direct, closed_form_orlicz_as, gaussian_mass};
use orlicz::config::{parse_function, set_spec_key};
use orlicz::funcrep::read_grid_csv;
use orlicz::harness::{judge, slack, unimodular_samples, Relation, Status};
use orlicz::quadrature::{pairwise_sum, radial_integral};
use orlicz::transforms::{closed_form_legendre, closed_form_s_dual, discrete_conjugate};
use orlicz::{FunctionRep, Grid, OrliczFunction, WeightFunction};

/// Eigenvalues at least 0.2, so maximisers for |y| <= 0.8 sqrt 2 stay inside
/// a box of half-width 4.
fn spd2() -> impl Strategy<Value = DMatrix<f64>> {
    (0.5f64..3.0, 0.5f64..3.0, -0.6f64..0.6).prop_map(|(a, b, r)| {
        let off = r * (a * b).sqrt();
        DMatrix::from_row_slice(2, 2, &[a, off, off, b])
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// A sup over a subset of points never exceeds the true conjugate, and
    /// on a fine box it comes close.
    #[test]
    fn discrete_conjugate_is_a_lower_bound(a in spd2(), offset in -1.0f64..1.0) {
        let psi = FunctionRep::quadratic(a, offset).unwrap();
        let exact = closed_form_legendre(&psi).unwrap();
        let primal = Grid::cube(2, 4.0, 121).unwrap();
        let dual = Grid::cube(2, 0.8, 9).unwrap();
        let discrete = discrete_conjugate(&psi, &primal, &dual).unwrap();
        for (i, d) in discrete.iter().enumerate() {
            let e = exact.eval(&dual.node(i)).unwrap();
            prop_assert!(d.is_finite() && *d <= e + 1e-12, "{d} > {e}");
            prop_assert!(e - d < 0.05, "{d} vs {e}");
        }
    }

    /// Fenchel-Young: psi(x) + psi*(y) >= <x, y>.
    #[test]
    fn fenchel_young(a in spd2(), x in prop::array::uniform2(-3.0f64..3.0), y in prop::array::uniform2(-3.0f64..3.0)) {
        let psi = FunctionRep::quadratic(a, 0.2).unwrap();
        let dual = closed_form_legendre(&psi).unwrap();
        let lhs = psi.eval(&x).unwrap() + dual.eval(&y).unwrap();
        prop_assert!(lhs >= x[0] * y[0] + x[1] * y[1] - 1e-10);
    }

    #[test]
    fn radial_integrals_scale(c in 0.3f64..3.0, n in 1usize..=3, alpha in 4.0f64..8.0) {
        for f in [WeightFunction::ExpNeg, WeightFunction::power(alpha).unwrap()] {
            let one = radial_integral(&f, 1.0, n, None).unwrap().value;
            let scaled = radial_integral(&f, c, n, None).unwrap().value;
            prop_assert!((scaled - c.powi(-(n as i32)) * one).abs() <= 1e-6 * scaled, "{scaled} vs {one}");
        }
    }

    /// The Gaussian closed form at scale c is c^-n h(c^-n) (sqrt(2 pi))^n.
    #[test]
    fn gaussian_closed_form(c in 0.4f64..2.5, q in prop::sample::select(vec![-1.0, -0.5, 0.5, 2.0]), n in 1usize..=2) {
        let h = OrliczFunction::power(q).unwrap();
        let v = closed_form_orlicz_as(&h, &WeightFunction::ExpNeg, 1.0, 1.0, c, n).unwrap();
        let t = c.powi(-(n as i32));
        let expected = t * h.eval(t) * gaussian_mass(n);
        prop_assert!((v - expected).abs() <= 1e-6 * expected, "{v} vs {expected}");
    }

    #[test]
    fn envelope_s_dual_inverts_the_scale(s in 0.1f64..1.0, c in 0.3f64..3.0, r in 0.0f64..0.9) {
        let env = FunctionRep::s_envelope(2, s, c).unwrap();
        let dual = closed_form_s_dual(&env, s).unwrap();
        let inverse = FunctionRep::s_envelope(2, s, 1.0 / c).unwrap();
        // A point inside the support of the dual: |y| < c / sqrt(s).
        let y = [r * c / s.sqrt() * 0.6, r * c / s.sqrt() * 0.8];
        let (a, b) = (dual.eval(&y).unwrap(), inverse.eval(&y).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
    }

    #[test]
    fn asp_direct_is_invariant_under_unimodular_maps(seed in 0u64..1000, p in prop::sample::select(vec![1.0, 2.0, -0.5])) {
        let psi = FunctionRep::quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]), 0.0).unwrap();
        let exp = WeightFunction::ExpNeg;
        let base = asp_direct(p, &exp, &exp, &psi, None).unwrap().value;
        let t = &unimodular_samples(2, 1, seed)[0];
        let moved = asp_direct(p, &exp, &exp, &psi.compose_linear(t).unwrap(), None).unwrap().value;
        prop_assert!((moved - base).abs() <= 0.01 * base, "{moved} vs {base}");
    }

    #[test]
    fn power_h_inverse_round_trips(q in prop::sample::select(vec![-2.0, -1.0, -0.5, 0.25, 0.5, 2.0, 3.0]), t in 0.05f64..20.0) {
        let h = OrliczFunction::power(q).unwrap();
        prop_assert_eq!(h.in_psi(), q > 0.0 && q < 1.0);
        prop_assert_eq!(h.in_phi(), !(q > 0.0 && q < 1.0));
        let back = h.inverse(h.eval(t)).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 * t, "{back} vs {t}");
    }

    #[test]
    fn pairwise_sum_matches_compensated(v in prop::collection::vec(-1e3f64..1e3, 0..300)) {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for x in &v {
            let y = x - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        prop_assert!((pairwise_sum(&v) - sum).abs() <= 1e-9 * (1.0 + v.iter().map(|x| x.abs()).sum::<f64>()));
    }

    /// Tighter tolerance never turns a failure into a pass.
    #[test]
    fn judging_is_monotone_in_tolerance(lhs in 0.1f64..10.0, rhs in 0.1f64..10.0, t1 in 0.0f64..0.2, t2 in 0.0f64..0.2) {
        for rel in [Relation::Le, Relation::Ge, Relation::Eq] {
            let s = slack(rel, lhs, rhs);
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            if judge(rel, s, lo, 0.0) == Status::Pass {
                prop_assert_eq!(judge(rel, s, hi, 0.0), Status::Pass);
            }
        }
        prop_assert_eq!(slack(Relation::Le, lhs, rhs) >= 0.0, lhs <= rhs);
    }

    #[test]
    fn csv_round_trip_is_exact(a in 0.1f64..5.0, b in 0.1f64..5.0, offset in -3.0f64..3.0) {
        let grid = Grid::new(vec![-1.3, 0.1], vec![2.9, 3.7], vec![7, 5]).unwrap();
        let samples: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.node(i);
                a * x[0] * x[0] + b * x[1] * x[1] + offset
            })
            .collect();
        let f = FunctionRep::sampled(grid.clone(), samples.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        f.write_csv(&grid, &path).unwrap();
        let back = read_grid_csv(&grid, &path).unwrap();
        for (i, v) in samples.iter().enumerate() {
            prop_assert_eq!(back.eval(&grid.node(i)).unwrap(), *v);
        }
    }

    #[test]
    fn spec_keys_sweep(c in 0.1f64..10.0) {
        let spec = set_spec_key("gaussian:c=1,n=1", "c", &format!("{c}")).unwrap();
        let f = parse_function(&spec, 2).unwrap();
        prop_assert_eq!(f.dim(), 1);
        prop_assert!((f.eval(&[1.0]).unwrap() - 0.5 * c * c).abs() <= 1e-12 * c * c);
    }
}
