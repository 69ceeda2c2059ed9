use jrh::airy::{airy_base, airy_combination, airy_combination_bi, sine_ratios};
use jrh::asymptotics::Asymptotics;
use jrh::geometry::TraceOptions;
use jrh::phase::Phase;
use jrh::reference::{build_jacobi, find_zeros, identity_suite};
use jrh::{BigComplex, Geometry, ParameterPair};
use proptest::prelude::*;
use rug::Rational;
use std::sync::OnceLock;

/// (A, B) in ten-thousandths, at least 0.05 inside the parameter region.
fn pair() -> impl Strategy<Value = (i32, i32)> {
    (-9500i32..=-500, -9500i32..=-500).prop_filter("A+B in (-1.95, -1.05)", |(a, b)| {
        let s = a + b;
        s > -19500 && s < -10500
    })
}

fn geometry(a: i32, b: i32) -> Geometry {
    let pp = ParameterPair::new(Rational::from((a, 10000)), Rational::from((b, 10000))).unwrap();
    Geometry::new(&pp, &TraceOptions::default()).unwrap()
}

fn default_geometry() -> &'static Geometry {
    static G: OnceLock<Geometry> = OnceLock::new();
    G.get_or_init(|| geometry(-7000, -8000))
}

fn angle_gap(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

fn rational() -> impl Strategy<Value = Rational> {
    (-400i32..=100, 1i32..=20).prop_map(|(p, q)| Rational::from((p, q * 7)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn geometry_invariants((a, b) in pair()) {
        let g = geometry(a, b);
        let x: Vec<f64> = g.crossings().iter().map(|v| v.to_f64()).collect();
        prop_assert!(x[0] < -1.0 && -1.0 < x[1] && x[1] < 1.0 && 1.0 < x[2], "{x:?}");

        let th = g.critical_angles();
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            let gap = angle_gap(th[i], th[j]).to_degrees();
            prop_assert!((gap - 120.0).abs() < 1.0, "{th:?}");
        }

        // Critical arcs are their own mirror images; γ^+ and γ^- swap.
        for arc in g.critical_arcs() {
            for p in arc.line().iter().step_by(29) {
                prop_assert!(arc.distance_to((p.0, -p.1)) < 1e-6);
            }
        }
        let perp = g.orthogonal_arcs();
        for k in 0..3 {
            for p in perp[2 * k].line().iter().step_by(29) {
                prop_assert!(perp[2 * k + 1].distance_to((p.0, -p.1)) < 1e-6);
            }
        }

        let ph = Phase::new(&g, 128, 1e-20);
        for arc in [g.gamma_l(), g.gamma_r()] {
            for f in [0.3, 0.5, 0.7] {
                let z = &arc.points[(f * arc.len() as f64) as usize];
                let v = ph.phi(z).unwrap();
                prop_assert!(v.phi.re.to_f64().abs() < 1e-10, "Re φ = {}", v.phi.re);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn classification_is_constant_off_the_arcs(
        (a, b) in pair(),
        segs in prop::collection::vec(((-8.0..8.0f64, -6.0..6.0f64), (-8.0..8.0f64, -6.0..6.0f64)), 8),
    ) {
        let g = geometry(a, b);
        let arcs: Vec<_> = g.critical_arcs().iter().chain(g.orthogonal_arcs()).collect();
        for (p, q) in segs {
            // Spacing below the margin, so a crossing cannot slip between samples.
            let m = ((q.0 - p.0).hypot(q.1 - p.1) / 0.02).ceil().max(1.0) as usize;
            let pts: Vec<(f64, f64)> =
                (0..=m).map(|k| k as f64 / m as f64).map(|t| (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))).collect();
            let clear = pts.iter().all(|z| arcs.iter().all(|a| a.distance_to(*z) > 0.05));
            if !clear {
                continue;
            }
            let label = |z: &(f64, f64)| g.classify(&BigComplex::from_f64(z.0, z.1, 64), 0.0).domain;
            let first = label(&pts[0]);
            for z in &pts {
                prop_assert_eq!(label(z), first, "segment {:?} -> {:?}", p, q);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn zeros_satisfy_vieta_and_come_in_conjugate_pairs(n in 2u32..=16, alpha in rational(), beta in rational()) {
        let p = build_jacobi(n, &alpha, &beta);
        prop_assume!(p.is_ok());
        let p = p.unwrap();
        let z = find_zeros(&p, 256).unwrap();
        prop_assert_eq!(z.len(), n as usize);
        let m = p.monic();
        let mut s = BigComplex::zero(256);
        for w in &z.zeros {
            s += w;
        }
        let want = BigComplex::from_rational(&Rational::from(-&m.coeffs[n as usize - 1]), 256);
        let scale = z.zeros.iter().map(|w| w.abs_f64()).fold(1.0, f64::max) * n as f64;
        prop_assert!(s.dist(&want).to_f64() < 1e-20 * scale, "sum {s}, want {want}");
        for w in &z.zeros {
            let c = w.conj();
            let best = z.zeros.iter().map(|v| v.dist(&c).to_f64()).fold(f64::INFINITY, f64::min);
            prop_assert!(best < 1e-20 * scale);
        }
    }

    #[test]
    fn integer_alpha_gives_exact_multiple_zero((n, k) in (2u32..=12).prop_flat_map(|n| (Just(n), 1..=n)), beta in rational()) {
        prop_assume!(*beta.denom() != 1);
        let alpha = Rational::from(-(k as i32));
        let p = build_jacobi(n, &alpha, &beta);
        prop_assume!(p.is_ok());
        let z = find_zeros(&p.unwrap(), 256).unwrap();
        let digits = (z.precision_bits as f64 * 2f64.log10()).floor();
        let tol = 10f64.powf(-digits / 2.0);
        let one = BigComplex::one(z.precision_bits);
        let near = z.zeros.iter().filter(|w| w.dist(&one).to_f64() < tol).count();
        prop_assert_eq!(near, k as usize);
    }

    #[test]
    fn identities_hold_exactly(n in 1u32..=8, alpha in rational(), beta in rational()) {
        let r = identity_suite(n, &alpha, &beta);
        prop_assume!(r.is_ok());
        for c in r.unwrap().checks {
            prop_assert!(c.holds, "{} at n={n}, α={alpha}, β={beta}", c.identity);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn n_entries_are_consistent(x in -8.0..8.0f64, y in -6.0..6.0f64) {
        let g = default_geometry();
        let z = BigComplex::from_f64(x, y, 128);
        let bp = g.branch_points();
        prop_assume!(z.dist(&bp.zeta_plus).to_f64() > 0.05 && z.dist(&bp.zeta_minus).to_f64() > 0.05);
        prop_assume!(g.gamma_c().distance_to((x, y)) > 1e-3);
        let asy = Asymptotics::new(g, 128, 1e-20).unwrap();
        let (n11, n12) = asy.n_entries(&z).unwrap();
        let one = BigComplex::one(128);
        prop_assert!((&(&n11.square() + &n12.square()) - &one).abs_f64() < 1e-30);
        let (m11, m12) = asy.n_entries_alt(&z).unwrap();
        prop_assert!(m11.dist(&n11).to_f64() < 1e-30 && m12.dist(&n12).to_f64() < 1e-30);
    }

    #[test]
    fn airy_forms_and_wronskian(x in -12.0..12.0f64, y in -12.0..12.0f64, n in 20u32..200) {
        let s = BigComplex::from_f64(x, y, 128);
        let alpha = Rational::from(Rational::from((-7, 10)) * n) + Rational::from((1, 997));
        let beta = Rational::from(Rational::from((-8, 10)) * n) - Rational::from((1, 1009));
        let r = sine_ratios(&alpha, &beta, 128).unwrap();
        let u = airy_combination(&s, &r, 128).unwrap();
        let v = airy_combination_bi(&s, &r, 128).unwrap();
        let m = u.a_val.abs_f64().max(1.0);
        prop_assert!(u.a_val.dist(&v.a_val).to_f64() / m < 1e-28);
        let b = airy_base(&s, 128).unwrap();
        let w = &(&b.ai * &b.bip) - &(&b.aip * &b.bi);
        let scale = (b.ai.abs_f64() * b.bip.abs_f64()).max(1.0);
        prop_assert!((w.abs_f64() - std::f64::consts::FRAC_1_PI).abs() / scale < 1e-30);
    }
}
