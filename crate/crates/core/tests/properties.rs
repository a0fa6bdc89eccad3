use emhd_core::checkpoint::Checkpoint;
use emhd_core::diagnostics::{self, DiagnosticsRecord, NormEntry, Quantity};
use emhd_core::fit::fit_exponent;
use emhd_core::region::{self, Q};
use emhd_core::{spectral, Field, Grid, State};
use num_bigint::BigInt;
use proptest::prelude::*;

/// Random trigonometric field with modes up to `kmax` on a box of half width `l`.
fn field_strategy(n: usize, l: f64, kmax: i32) -> impl Strategy<Value = Field> {
    prop::collection::vec((-kmax..=kmax, -kmax..=kmax, -1.0f64..1.0, 0.0f64..6.3), 1..6).prop_map(
        move |modes| {
            let g = Grid::new(n, l).unwrap();
            let k0 = g.k0();
            Field::from_fn(g, |x, y| {
                modes
                    .iter()
                    .map(|&(i, j, c, ph)| c * (k0 * (i as f64 * x + j as f64 * y) + ph).cos())
                    .sum()
            })
        },
    )
}

fn rough_field(n: usize) -> impl Strategy<Value = Field> {
    prop::collection::vec(-1.0f64..1.0, n * n)
        .prop_map(move |v| Field::from_values(Grid::new(n, 1.3).unwrap(), v).unwrap())
}

fn without_mean(f: &Field) -> Field {
    let m = f.mean();
    Field::from_values(*f.grid(), f.values().iter().map(|v| v - m).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip(f in rough_field(32)) {
        let back = Field::from_coeffs(*f.grid(), f.coeffs().to_vec()).unwrap();
        prop_assert!(back.max_abs_diff(&f).unwrap() <= 1e-12 * f.max_abs());
    }

    #[test]
    fn parseval(f in rough_field(32)) {
        let q = f.l2_norm();
        let s = f.l2_norm_spectral();
        prop_assert!((q - s).abs() <= 1e-10 * q);
    }

    #[test]
    fn bracket_is_antisymmetric(f in field_strategy(32, 1.0, 4), g in field_strategy(32, 1.0, 4)) {
        let fg = spectral::poisson_bracket(&f, &g).unwrap();
        let gf = spectral::poisson_bracket(&g, &f).unwrap();
        let scale = fg.max_abs().max(1e-300);
        prop_assert!(fg.add(&gf).unwrap().max_abs() <= 1e-12 * scale);
        prop_assert!(spectral::poisson_bracket(&f, &f).unwrap().max_abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn grad_perp_is_divergence_free(f in rough_field(32)) {
        let u = spectral::gradient_perp(&f).unwrap();
        let d = spectral::divergence(&u).unwrap();
        prop_assert!(d.max_abs() <= 1e-10 * u.max_magnitude().max(1.0));
    }

    #[test]
    fn homogeneous_norm_monotone_in_s(f in rough_field(16), s1 in -2.0f64..4.0, ds in 0.0f64..2.0) {
        // k0 = 1 on a box of half width pi, so every retained mode has |k| >= 1.
        let g = Grid::new(16, std::f64::consts::PI).unwrap();
        let f = without_mean(&Field::from_values(g, f.values().to_vec()).unwrap());
        let lo = spectral::sobolev_norm(&f, s1, true).unwrap();
        let hi = spectral::sobolev_norm(&f, s1 + ds, true).unwrap();
        prop_assert!(hi >= lo * (1.0 - 1e-14));
    }

    #[test]
    fn energy_routes_agree(a in rough_field(16), b in rough_field(16)) {
        let s = State::new(a, b, 0.0).unwrap();
        let e1 = diagnostics::energy(&s).unwrap();
        let e2 = diagnostics::energy_spectral(&s).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-10 * e2);
    }

    #[test]
    fn checkpoint_round_trip(a in rough_field(16), b in rough_field(16), t in -1e3f64..1e3, step in any::<u64>()) {
        let c = Checkpoint { state: State::new(a, b, t).unwrap(), step, params: None };
        let bytes = c.to_bytes();
        prop_assert_eq!(Checkpoint::from_bytes(&bytes).unwrap().to_bytes(), bytes);
    }

    #[test]
    fn record_serde_round_trip(
        t in any::<f64>().prop_filter("finite", |v| v.is_finite()),
        step in 0usize..1_000_000,
        vals in prop::collection::vec((any::<f64>().prop_filter("finite", |v| v.is_finite()), -2.0f64..4.0, any::<bool>()), 0..8),
    ) {
        let r = DiagnosticsRecord {
            t,
            step,
            energy: t.abs(),
            norms: vals.iter().map(|&(value, s, homogeneous)| NormEntry { quantity: Quantity::Ubar, s, homogeneous, value }).collect(),
            resolution_fraction: 0.0,
            realized_dt: t * 1e-3,
        };
        let back: DiagnosticsRecord = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn fit_recovers_planted_power(p in -5.0f64..5.0, c in 1e-3f64..1e3, t0 in 1e-6f64..1.0) {
        let t: Vec<f64> = (0..8).map(|k| t0 * 2f64.powi(k)).collect();
        let v: Vec<f64> = t.iter().map(|t| c * t.powf(p)).collect();
        let f = fit_exponent(&t, &v).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-9);
    }
}

fn rational(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn beta_gamma() -> impl Strategy<Value = (Q, Q)> {
    (1i64..1000, 1i64..2000).prop_map(|(b, g)| (rational(3000 + b, 1000), rational(1000 + g, 1000)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn combined_bound_dominates((b, g) in beta_gamma()) {
        let c = region::zeta_lb_combined(&b, &g).unwrap();
        prop_assert!(c >= region::zeta_lb_perturb(&b, &g).unwrap());
        prop_assert!(c >= region::zeta_lb_baru(&b, &g).unwrap());
    }

    #[test]
    fn admissible_midpoint_satisfies_each_bound((b, g) in beta_gamma()) {
        let v = region::admissible(&b, &g);
        prop_assert_eq!(v.admissible, v.zeta_interval.is_some());
        if let Some(iv) = v.zeta_interval {
            prop_assert!(iv.lower < iv.upper);
            let z = iv.midpoint();
            prop_assert!(iv.contains(&z));
            prop_assert!(region::base_constraints(&b, &g, &z).iter().all(|c| c.passed));
            prop_assert!(z >= region::zeta_lb_baru(&b, &g).unwrap());
            prop_assert!(z > region::zeta_lb_perturb(&b, &g).unwrap());
        }
    }

    #[test]
    fn zeta_interval_shrinks_with_gamma((b, g) in beta_gamma(), dg in 1i64..500) {
        let g2 = g.clone() + rational(dg, 1000);
        let v1 = region::admissible(&b, &g);
        let v2 = region::admissible(&b, &g2);
        if let (Some(i1), Some(i2)) = (&v1.zeta_interval, &v2.zeta_interval) {
            prop_assert!(i2.lower >= i1.lower);
            prop_assert_eq!(&i2.upper, &i1.upper);
        }
        prop_assert!(!(v2.admissible && !v1.admissible));
    }

    #[test]
    fn rational_text_round_trip(n in -1_000_000i64..1_000_000, d in 1i64..100_000) {
        let q = rational(n, d);
        prop_assert_eq!(region::parse_rational(&region::format_rational(&q)).unwrap(), q);
    }
}
