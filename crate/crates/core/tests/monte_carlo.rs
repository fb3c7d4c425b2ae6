use toruswalk::exact::{expected_exit_time, Walk};
use toruswalk::geometry::{Ambient, LatticePoint, Region};
use toruswalk::law::srw;
use toruswalk::mc::{estimate, Statistic, StopSpec};

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

#[test]
fn escape_time_matches_exact_value() {
    let law = srw();
    let region = Region::disc(4.0);
    let exact = expected_exit_time(&Walk::plane(&law).unwrap(), &region, LatticePoint::ORIGIN).unwrap();
    let spec = StopSpec::new(Ambient::Plane).exit(region);
    let e = estimate(&law, LatticePoint::ORIGIN, &spec, Statistic::Time, 20_000, 11).unwrap();
    assert!(e.z_score(exact) < 4.0, "{} vs {exact}", e.mean);
    assert!(!e.flagged);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let law = srw();
    let spec = StopSpec::new(Ambient::Torus(16)).enter(Region::point(LatticePoint::ORIGIN)).exit(Region::disc(3.0));
    let start = LatticePoint::new(2, 1);
    let one = pool(1).install(|| estimate(&law, start, &spec, Statistic::Hit(0), 5000, 3).unwrap());
    let four = pool(4).install(|| estimate(&law, start, &spec, Statistic::Hit(0), 5000, 3).unwrap());
    assert_eq!(one, four);
    let other = estimate(&law, start, &spec, Statistic::Hit(0), 5000, 4).unwrap();
    assert_ne!(one.mean, other.mean);
}

#[test]
fn capped_runs_are_flagged() {
    let spec = StopSpec::new(Ambient::Plane).exit(Region::disc(20.0)).cap(10);
    let e = estimate(&srw(), LatticePoint::ORIGIN, &spec, Statistic::Time, 500, 1).unwrap();
    assert!(e.flagged);
    assert_eq!(e.cap_hits, 500);
}

#[test]
fn too_few_samples_is_an_error() {
    let spec = StopSpec::new(Ambient::Plane).exit(Region::disc(2.0));
    assert!(estimate(&srw(), LatticePoint::ORIGIN, &spec, Statistic::Time, 10, 1).is_err());
}
