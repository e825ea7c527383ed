use std::f64::consts::{FRAC_PI_2, PI, TAU};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polybilliard::certify::{build_cover, certify_level, verify_report, witness_margins, QuadSelection, WitnessBudget};
use polybilliard::iet::{Iet, SaddleVerdict};
use polybilliard::rational::{direction_orbit, find_periodic_orbit, invariant_set, saddle_connections, trace_from_corner};
use polybilliard::symbolic::{check_conjugacy, code, least_period, periodic_code_locus, CodeLocus, PeriodClass, Word};
use polybilliard::{AngleSpec, Billiard, PhasePoint, Polygon, Singular, Vec2};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// Convex polygon with vertices at sorted random angles on an ellipse.
fn arb_convex() -> impl Strategy<Value = Polygon<f64>> {
    (3usize..=7, 0.5f64..2.0).prop_flat_map(|(k, aspect)| {
        proptest::collection::vec(0.0f64..1.0, k).prop_filter_map("degenerate", move |ts| {
            let mut a: Vec<f64> = ts.iter().enumerate().map(|(i, t)| TAU * (i as f64 + 0.1 + 0.8 * t) / k as f64).collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let pts: Vec<Vec2<f64>> = a.iter().map(|&t| Vec2::new(aspect * t.cos(), t.sin())).collect();
            let p = Polygon::from_vertices(&pts).ok()?;
            let smallest = p.side_lengths().iter().copied().fold(f64::INFINITY, f64::min);
            (smallest > 0.05 && p.interior_angles().iter().all(|&x| x > 0.05)).then_some(p)
        })
    })
}

fn arb_triangle() -> impl Strategy<Value = Polygon<f64>> {
    (-0.5f64..1.5, 0.2f64..1.5).prop_filter_map("degenerate", |(x, y)| Polygon::from_vertices(&[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(x, y)]).ok())
}

fn arb_point(k: usize) -> impl Strategy<Value = PhasePoint<f64>> {
    (0..k, 0.001f64..0.999, -1.5f64..1.5).prop_map(|(side, s, t)| PhasePoint::new(side, s, t))
}

fn with_point(polys: impl Strategy<Value = Polygon<f64>>) -> impl Strategy<Value = (Polygon<f64>, PhasePoint<f64>)> {
    polys.prop_flat_map(|p| {
        let k = p.k();
        (Just(p), arb_point(k))
    })
}

fn rational_tables() -> Vec<Polygon<f64>> {
    vec![Polygon::unit_square(), Polygon::equilateral(), Polygon::pi8_right_triangle(), Polygon::triangle_pi((2, 7), (1, 5)).unwrap()]
}

fn arb_rational() -> impl Strategy<Value = Polygon<f64>> {
    (0..rational_tables().len()).prop_map(|i| rational_tables().swap_remove(i))
}

fn arb_iet() -> impl Strategy<Value = Iet<f64>> {
    (2usize..=6).prop_flat_map(|n| {
        (proptest::collection::vec(0.05f64..1.0, n), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|(l, perm)| Iet::from_lengths_permutation(&l, &perm).unwrap())
    })
}

proptest! {
    #![proptest_config(cfg(64))]

    // polygon_space

    #[test]
    fn chart_round_trip(p in arb_convex()) {
        let ch = p.chart();
        let specs: Vec<AngleSpec> = ch.angles.iter().map(|&a| AngleSpec::Numeric(a)).collect();
        let q = Polygon::from_angle_length_chart(&specs, &ch.lengths).unwrap();
        for (a, b) in p.interior_angles().iter().zip(q.interior_angles()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let (l0, m0) = (p.side_length(0), q.side_length(0));
        for (a, b) in p.side_lengths().iter().zip(q.side_lengths()) {
            prop_assert!((a / l0 - b / m0).abs() < 1e-9);
        }
    }

    #[test]
    fn angle_sum(p in arb_convex()) {
        let sum: f64 = p.interior_angles().iter().sum();
        prop_assert!((sum - (p.k() as f64 - 2.0) * PI).abs() < 1e-9);
    }

    #[test]
    fn rationality_survives_similarity(i in 0usize..4, scale in 0.1f64..10.0, rot in 0.0f64..TAU, dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
        let p = rational_tables().swap_remove(i);
        let moved: Vec<Vec2<f64>> = p.vertices().iter().map(|v| {
            let (c, s) = (rot.cos(), rot.sin());
            Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y) * scale + Vec2::new(dx, dy)
        }).collect();
        let q = Polygon::from_vertices(&moved).unwrap().with_snapped_angles(64).unwrap();
        prop_assert_eq!(q.n_p(), p.n_p());
    }

    // billiard_core

    #[test]
    fn step_matches_unfolding((p, u) in with_point(arb_convex())) {
        let b = Billiard::new(&p);
        match (b.step(&u), b.step_unfolded(&u)) {
            (Ok(x), Ok(y)) => prop_assert!(x.dist(&y) <= 1e-9, "{:?} vs {:?}", x, y),
            (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn inverse_undoes_step((p, u) in with_point(arb_convex())) {
        let b = Billiard::new(&p);
        if let Ok(v) = b.step(&u) {
            prop_assert!(b.inverse_step(&v).unwrap().dist(&u) <= 1e-9);
        }
    }

    #[test]
    fn time_reversal((p, u) in with_point(arb_triangle())) {
        let b = Billiard::new(&p);
        if let Ok(v) = b.step(&u) {
            let back = b.step(&v.flipped()).unwrap();
            prop_assert!(back.dist(&u.flipped()) <= 1e-9);
        }
    }

    #[test]
    fn returned_points_are_valid((p, u) in with_point(arb_convex())) {
        let b = Billiard::new(&p);
        let orbit = b.orbit(&u, 200, polybilliard::billiard::TimeDirection::Forward);
        for x in &orbit.points {
            prop_assert!(x.is_valid(&p));
            prop_assert!((x.direction(&p).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn directions_stay_in_group_orbit((p, u) in with_point(arb_rational())) {
        let b = Billiard::new(&p);
        let class = direction_orbit(p.n_p().unwrap(), u.direction(&p).angle());
        let mut x = u;
        for _ in 0..500 {
            let Ok(y) = b.step(&x) else { break };
            x = y;
            prop_assert!(class.distance(x.direction(&p).angle()) <= 1e-9);
        }
    }

    // symbolic

    #[test]
    fn coding_conjugates_shift((p, u) in with_point(arb_convex())) {
        let b = Billiard::new(&p);
        if let Ok(r) = check_conjugacy(&b, &u, 300) {
            prop_assert!(r.passed());
        }
    }

    #[test]
    fn codes_are_similarity_invariant((p, u) in with_point(arb_convex()), scale in 0.2f64..5.0, rot in 0.0f64..TAU, dx in -3.0f64..3.0) {
        let q = p.similar(scale, rot, Vec2::new(dx, -dx));
        let (c1, c2) = (code(&Billiard::new(&p), &u, 40, 0), code(&Billiard::new(&q), &u, 40, 0));
        // a tiny drift near a corner can truncate one code earlier; compare the common prefix
        let n = c1.word.forward().len().min(c2.word.forward().len()).min(30);
        prop_assert_eq!(&c1.word.forward()[..n], &c2.word.forward()[..n]);
    }

    // iet_engine

    #[test]
    fn iet_images_tile(t in arb_iet()) {
        prop_assert!(t.tiling_defect() <= 1e-12);
        prop_assert!(t.inverse().tiling_defect() <= 1e-12);
    }

    #[test]
    fn saddle_connections_are_inherited(t in arb_iet(), k in 2i64..=4) {
        if let SaddleVerdict::Found { .. } = t.power(k).unwrap().has_saddle_connection(50, 1e-10) {
            prop_assert!(t.has_saddle_connection(50 * k as usize, 1e-10).is_found());
        }
    }

    // rational_structure

    #[test]
    fn direction_class_closed(n in 1u64..=12, xi in 0.0f64..TAU) {
        let c = direction_orbit(n, xi);
        for m in c.members() {
            for j in 0..n {
                let r = c.reflect(m, j);
                prop_assert!(c.members().contains(&r));
                prop_assert!(c.distance(c.angle(r)) < 1e-12);
            }
        }
    }

    #[test]
    fn invariant_strips_are_invariant((p, u) in with_point(arb_rational())) {
        let Ok(set) = invariant_set(&p, u.direction(&p).angle()) else { return Ok(()) };
        let b = Billiard::new(&p);
        let mut x = u;
        for _ in 0..500 {
            let Ok(y) = b.step(&x) else { break };
            x = y;
            let thetas = set.side_thetas(x.side);
            prop_assert!(thetas.iter().any(|t| (t - x.theta).abs() <= 1e-9));
        }
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn periodic_points_have_least_period(i in 0usize..3, side in 0usize..3, fs in 0.2f64..0.8, ft in 0.2f64..0.8) {
        let p = rational_tables().swap_remove(i);
        let side = side % p.k();
        let cell = build_cover(&p, 3).into_iter().filter(|c| c.side == side).nth(((fs * 5.0) as usize) * 5 + (ft * 5.0) as usize).unwrap();
        if let Ok(o) = find_periodic_orbit(&p, &cell.rect(), 2_000) {
            let b = Billiard::new(&p);
            prop_assert!(b.iterate(&o.point, o.period).unwrap().dist(&o.point) <= 1e-8);
            prop_assert_eq!(least_period(&b, &o.point, o.period, 1e-8), Some(o.period));
            prop_assert!(cell.contains(&o.point));
        }
    }

    #[test]
    fn locus_samples_return_with_predicted_period(len in 2usize..=8, seed in 0u64..1_000) {
        // words read off actual orbits of the square and the equilateral triangle
        for p in [Polygon::unit_square(), Polygon::equilateral()] {
            let b = Billiard::new(&p);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = PhasePoint::new(rand::Rng::gen_range(&mut rng, 0..p.k()), 0.5, rand::Rng::gen_range(&mut rng, -1.2..1.2));
            let c = code(&b, &u, len - 1, 0);
            let Ok(w) = Word::new(c.word.forward().to_vec(), p.k()) else { continue };
            let Ok(locus) = periodic_code_locus(&b, &w) else { continue };
            let CodeLocus::HorizontalInterval { class, .. } = locus else { continue };
            for f in 1..10 {
                let x = locus.at(f as f64 / 10.0).unwrap();
                let lp = least_period(&b, &x, 4 * len, 1e-8).unwrap();
                match class {
                    PeriodClass::Even { period } => prop_assert_eq!(period % lp, 0),
                    PeriodClass::Odd { midpoint_period, generic_period } => {
                        prop_assert!(lp == generic_period || (f == 5 && lp == midpoint_period));
                    }
                }
            }
        }
    }
}

#[test]
fn saddle_connections_retrace() {
    for p in rational_tables() {
        for sc in saddle_connections(&p, 4.0) {
            let tr = trace_from_corner(&p, sc.start_corner, sc.direction, sc.length + 1e-6, &|_| 1e-6);
            assert_eq!(tr.corner.map(|c| c.0), Some(sc.end_corner));
            assert_eq!(tr.bounces, sc.bounce_count);
        }
    }
}

#[test]
fn cover_count_formula() {
    for k in 3..=6usize {
        let pts: Vec<Vec2<f64>> = (0..k).map(|i| Vec2::from_angle(TAU * i as f64 / k as f64)).collect();
        let p = Polygon::from_vertices(&pts).unwrap();
        for m in 1..=8u32 {
            assert_eq!(build_cover(&p, m).len(), k * (2 * m as usize - 1).pow(2));
        }
    }
}

#[test]
fn witness_reports_verify_and_nest() {
    let p = Polygon::pi8_right_triangle();
    let r = certify_level(&p, 4, QuadSelection::Sample(100), &WitnessBudget::default(), 5);
    let mut nested = 0;
    for w in r.results.iter().filter_map(|q| q.outcome.report()) {
        assert!(verify_report(&p, w, 1e-9));
        assert_eq!(w.n, w.m * w.j + w.ell);
        let parents = w.quad.map(|c| c.parent().unwrap());
        if let Some(m) = witness_margins(&p, &parents, &w.a, &w.b, w.n) {
            assert!(m.iter().all(|&x| x >= 0.0), "parent margins {m:?}");
            nested += 1;
        }
    }
    assert_eq!(nested, r.summary.certified);
}

#[test]
fn certification_is_deterministic() {
    let p = Polygon::pi8_right_triangle();
    let run = || serde_json::to_vec(&certify_level(&p, 2, QuadSelection::Sample(20), &WitnessBudget::default(), 3)).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn grazing_start_is_rejected() {
    let sq = Polygon::unit_square();
    assert_eq!(Billiard::new(&sq).step(&PhasePoint::new(0, 0.5, FRAC_PI_2)), Err(Singular::InvalidPoint));
}
