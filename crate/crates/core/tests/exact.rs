use toruswalk::exact::{expected_exit_time, green, hit_before, local_time, Domain, Walk};
use toruswalk::geometry::{Ambient, LatticePoint, Region};
use toruswalk::law::{lazy_srw, power_law, srw, StepLaw};

fn p(a: i64, b: i64) -> LatticePoint {
    LatticePoint::new(a, b)
}

#[test]
fn unit_disc_by_hand() {
    // From 0 the walk leaves D(0,1) in one step with probability 0 and returns
    // to 0 from a neighbour with probability 1/4: t0 = 1 + t1, t1 = 1 + t0/4.
    let w = Walk::plane(&srw()).unwrap();
    let t0 = expected_exit_time(&w, &Region::disc(1.0), p(0, 0)).unwrap();
    assert!((t0 - 8.0 / 3.0).abs() < 1e-12);
    let t1 = expected_exit_time(&w, &Region::disc(1.0), p(1, 0)).unwrap();
    assert!((t1 - 5.0 / 3.0).abs() < 1e-12);
    let g = green(&w, Domain::from_region(Ambient::Plane, &Region::disc(1.0)).unwrap()).unwrap();
    assert!((g.get(p(0, 0), p(0, 0)) - 4.0 / 3.0).abs() < 1e-12);
}

fn laws() -> Vec<StepLaw> {
    vec![srw(), lazy_srw(0.3).unwrap(), power_law(1.0, 8).unwrap()]
}

#[test]
fn green_rows_sum_to_exit_times_and_are_symmetric() {
    for law in laws() {
        let w = Walk::plane(&law).unwrap();
        let region = Region::disc(5.0);
        let g = green(&w, Domain::from_region(Ambient::Plane, &region).unwrap()).unwrap();
        assert!(g.max_asymmetry() < 1e-10, "{}", law.name());
        for x in [p(0, 0), p(2, 1), p(5, 0), p(-3, 4)] {
            let row: f64 = g.row(x).unwrap().iter().sum();
            let t = expected_exit_time(&w, &region, x).unwrap();
            assert!((row - t).abs() < 1e-9 * t, "{} {x:?}: {row} vs {t}", law.name());
        }
    }
}

#[test]
fn hitting_probabilities_are_harmonic() {
    for law in laws() {
        let w = Walk::plane(&law).unwrap();
        let target = Region::point(p(0, 0));
        let forbidden = Region::disc(6.0).complement();
        let h = |x: LatticePoint| hit_before(&w, &target, &forbidden, x).unwrap();
        for x in [p(1, 0), p(3, 2), p(0, 5)] {
            let mean: f64 = law
                .support()
                .iter()
                .map(|&(d, m)| {
                    let y = x + d;
                    let v = if y == p(0, 0) {
                        1.0
                    } else if y.norm() > 6.0 {
                        0.0
                    } else {
                        h(y)
                    };
                    m * v
                })
                .sum();
            assert!((mean - h(x)).abs() < 1e-10, "{} {x:?}", law.name());
        }
    }
}

#[test]
fn short_range_walks_do_not_see_the_torus() {
    let law = srw();
    let plane = Walk::plane(&law).unwrap();
    let torus = Walk::torus(&law, 32).unwrap();
    let region = Region::disc(7.0);
    for x in [p(0, 0), p(4, -3), p(7, 0)] {
        let a = expected_exit_time(&plane, &region, x).unwrap();
        let b = expected_exit_time(&torus, &region, x).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }
}

#[test]
fn wrapping_only_lengthens_exit_times() {
    // Wrapping only relocates the walk inside the disc, so the exit time on
    // the torus is at least the planar one.
    let law = power_law(1.0, 30).unwrap();
    let plane = Walk::plane(&law).unwrap();
    let torus = Walk::torus(&law, 32).unwrap();
    let region = Region::disc(7.0);
    let a = expected_exit_time(&plane, &region, p(0, 0)).unwrap();
    let b = expected_exit_time(&torus, &region, p(0, 0)).unwrap();
    assert!(b > a);
}

#[test]
fn local_time_moments_match_green_function() {
    for law in laws() {
        let w = Walk::plane(&law).unwrap();
        let lt = local_time(&w, 6.0, p(2, 1), 6).unwrap();
        assert!(lt.identity_gap() < 1e-8, "{}", law.name());
        assert!((lt.q - lt.g_x0 / lt.g_00).abs() < 1e-10);
        assert!((lt.tail(1) - lt.q).abs() < 1e-15);
    }
}
