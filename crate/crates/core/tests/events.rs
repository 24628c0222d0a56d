use proptest::prelude::*;
use sprinkle::events::{occurs, threshold, EventSpec};

const SIDE: usize = 5;

fn field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, SIDE * SIDE)
}

fn event() -> impl Strategy<Value = EventSpec> {
    let sites = prop::collection::btree_set(0..SIDE * SIDE, 1..6).prop_map(|s| s.into_iter().collect::<Vec<_>>());
    let grid = vec![SIDE, SIDE];
    prop_oneof![
        (sites.clone(), -1.0f64..1.0).prop_map(|(sites, level)| EventSpec::AllAbove { sites, level }),
        (sites, -1.0f64..1.0).prop_map(|(sites, level)| EventSpec::AnyAbove { sites, level }),
        (0..2usize, 0..2usize, 2..4usize, 0..2usize, -1.0f64..1.0).prop_map({
            let grid = grid.clone();
            move |(ox, oy, side, axis, level)| EventSpec::BoxCrossing {
                grid: grid.clone(),
                origin: vec![ox, oy],
                extent: vec![side, side + 1],
                axis,
                level,
            }
        }),
        (prop_oneof![Just(0.0), Just(1.0)], -1.0f64..1.0)
            .prop_map(move |(inner, level)| EventSpec::AnnulusCrossing { grid: grid.clone(), center: vec![2, 2], inner, outer: 2.0, level }),
    ]
}

fn lift(x: &[f64], u: f64) -> Vec<f64> {
    x.iter().map(|v| v + u).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn lifted_sample_occurs_exactly_past_threshold(ev in event(), x in field(), u in -4.0f64..4.0) {
        let t = threshold(&ev, &x).unwrap();
        prop_assert_eq!(occurs(&ev, &lift(&x, u)).unwrap(), t <= u);
    }

    #[test]
    fn threshold_is_one_lipschitz_in_sup_norm(ev in event(), x in field(), y in field()) {
        let support = ev.support().unwrap();
        let d = support.iter().map(|&i| (x[i] - y[i]).abs()).fold(0.0, f64::max);
        let gap = (threshold(&ev, &x).unwrap() - threshold(&ev, &y).unwrap()).abs();
        prop_assert!(gap <= d + 1e-12);
    }

    #[test]
    fn raising_the_field_never_raises_the_threshold(ev in event(), x in field(), bumps in field()) {
        let raised: Vec<f64> = x.iter().zip(&bumps).map(|(a, b)| a + b.abs()).collect();
        prop_assert!(threshold(&ev, &raised).unwrap() <= threshold(&ev, &x).unwrap());
    }

    #[test]
    fn moving_the_level_moves_the_threshold(ev in event(), x in field(), level in -2.0f64..2.0) {
        let t = threshold(&ev, &x).unwrap();
        let moved = threshold(&ev.at_level(level), &x).unwrap();
        prop_assert!((moved - (t + level - ev.level())).abs() <= 1e-12);
    }

    #[test]
    fn sites_off_the_support_are_ignored(ev in event(), x in field(), other in field()) {
        let support = ev.support().unwrap();
        let mixed: Vec<f64> =
            (0..x.len()).map(|i| if support.binary_search(&i).is_ok() { x[i] } else { other[i] }).collect();
        prop_assert_eq!(threshold(&ev, &mixed).unwrap(), threshold(&ev, &x).unwrap());
    }
}

#[test]
fn degenerate_events_are_rejected() {
    assert!(EventSpec::AllAbove { sites: vec![], level: 0.0 }.compile().is_err());
    assert!(EventSpec::AllAbove { sites: vec![0], level: f64::NAN }.compile().is_err());
    let off_grid = EventSpec::BoxCrossing { grid: vec![3, 3], origin: vec![2, 0], extent: vec![2, 2], axis: 0, level: 0.0 };
    assert!(off_grid.compile().is_err());
    let wide = EventSpec::AnnulusCrossing { grid: vec![5, 5], center: vec![1, 1], inner: 0.0, outer: 2.0, level: 0.0 };
    assert!(wide.compile().is_err());
}

#[test]
fn short_sample_is_an_error() {
    let ev = EventSpec::AnyAbove { sites: vec![0, 7], level: 0.0 };
    assert!(threshold(&ev, &[0.0; 4]).is_err());
}
