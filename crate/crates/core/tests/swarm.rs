use neuroswarm::swarm::{
    centroid, equilibrium_distance, interaction, mean_nearest_neighbour, pairwise_min_distance, Formation, GainPreset,
    Gains, Integrator, Point, SwarmState,
};
use neuroswarm::Thought;
use proptest::prelude::*;

const R: f64 = 0.05;

fn pair_distance(s: &SwarmState) -> f64 {
    let [p, q] = [s.positions[0], s.positions[1]];
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Steps until the pair is within 1% of its spacing; returns the time taken.
fn settle_pair(start_d: f64, a: f64, b: f64, limit_s: f64) -> Option<f64> {
    let mut s = SwarmState::new(vec![[0.0, 0.0], [start_d, 0.0]], R, a, b).unwrap();
    let delta = equilibrium_distance(a, b, R);
    let integrator = Integrator::default();
    let dt = 1.0 / 30.0;
    while s.t < limit_s {
        if (pair_distance(&s) - delta).abs() < 0.01 * delta {
            return Some(s.t);
        }
        s = integrator.step(&s, dt).unwrap().0;
    }
    None
}

#[test]
fn pairs_settle_at_the_equilibrium_spacing() {
    for (a, b) in [(1.0, 0.2), (4.0, 80.0), (2.0, 80.0)] {
        let delta = equilibrium_distance(a, b, R);
        for start in [2.0 * R + 0.01, 0.5 * delta, 2.0 * delta] {
            let t = settle_pair(start, a, b, 20_000.0);
            assert!(t.is_some(), "a={a} b={b} start={start}");
        }
    }
}

#[test]
fn interaction_matches_direct_evaluation() {
    let (a, b) = (1.0, 0.2);
    let (f, clamped) = interaction([0.0, 0.0], [0.2, 0.0], a, b, R, 1e-3);
    let g: f64 = 0.2 - 2.0 * R;
    let direct = a * 0.2 / g.powi(2) - b * 0.2 / g.powi(3);
    assert!(!clamped);
    assert!((f[0] - direct).abs() < 1e-12);
    assert!(f[0] < 0.0, "pushes away from the neighbour");
}

#[test]
fn gain_switches_move_the_spacing_both_ways() {
    let hardware = GainPreset::hardware();
    let positions = Formation::Grid {
        center: [0.0, 0.0],
        spacing: 25.0,
    }
    .positions(9);
    let mut s = SwarmState::new(positions, R, 4.0, 80.0).unwrap();
    let integrator = Integrator::default();
    let run = |mut s: SwarmState, seconds: f64| {
        for _ in 0..(seconds * 30.0) as usize {
            s = integrator.step(&s, 1.0 / 30.0).unwrap().0;
        }
        s
    };
    s = run(s, 600.0);
    let aggregated = mean_nearest_neighbour(&s.positions);
    s.set_gains(hardware.gains(Thought::Disperse, 9).unwrap());
    s = run(s, 1200.0);
    let dispersed = mean_nearest_neighbour(&s.positions);
    assert!(dispersed > aggregated, "{aggregated} -> {dispersed}");
    s.set_gains(hardware.gains(Thought::Aggregate, 9).unwrap());
    s = run(s, 1200.0);
    let again = mean_nearest_neighbour(&s.positions);
    assert!(again < dispersed, "{dispersed} -> {again}");
}

fn scattered(n: usize, seed: &[f64]) -> Vec<Point> {
    // Jittered grid: spacing 1 m keeps every start collision-free.
    (0..n)
        .map(|k| {
            let (i, j) = ((k % 4) as f64, (k / 4) as f64);
            [i + 0.3 * seed[2 * k], j + 0.3 * seed[2 * k + 1]]
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centroid_moves_with_the_drive(
        jitter in prop::collection::vec(-1.0f64..1.0, 20),
        a in 0.5f64..5.0,
        b in 0.05f64..5.0,
        vx in -1.0f64..1.0,
        vy in -1.0f64..1.0,
        dt in 0.001f64..0.1,
    ) {
        let mut s = SwarmState::new(scattered(10, &jitter), R, a, b).unwrap();
        s.drive = [vx, vy];
        let before = centroid(&s.positions);
        let (next, _) = Integrator::default().step(&s, dt).unwrap();
        let after = centroid(&next.positions);
        let velocity = [(after[0] - before[0]) / dt, (after[1] - before[1]) / dt];
        prop_assert!((velocity[0] - vx).abs() < 1e-9, "{velocity:?}");
        prop_assert!((velocity[1] - vy).abs() < 1e-9, "{velocity:?}");
    }

    #[test]
    fn interaction_is_antisymmetric(
        p in prop::array::uniform2(-5.0f64..5.0),
        q in prop::array::uniform2(-5.0f64..5.0),
        a in 0.1f64..10.0,
        b in 0.1f64..100.0,
    ) {
        let (f, _) = interaction(p, q, a, b, R, 1e-3);
        let (g, _) = interaction(q, p, a, b, R, 1e-3);
        prop_assert_eq!(f[0], -g[0]);
        prop_assert_eq!(f[1], -g[1]);
    }

    #[test]
    fn pair_error_never_grows(
        start in 0.12f64..100.0,
        gains in prop::sample::select(vec![(1.0, 0.2), (4.0, 80.0), (2.0, 80.0)]),
        dt in prop::sample::select(vec![1.0 / 30.0, 0.25, 1.0]),
    ) {
        let (a, b) = gains;
        let delta = equilibrium_distance(a, b, R);
        let mut s = SwarmState::new(vec![[0.0, 0.0], [start, 0.0]], R, a, b).unwrap();
        let integrator = Integrator::default();
        let mut error = (pair_distance(&s) - delta).abs();
        for _ in 0..200 {
            s = integrator.step(&s, dt).unwrap().0;
            let next = (pair_distance(&s) - delta).abs();
            prop_assert!(next <= error + 1e-12, "{error} -> {next}");
            error = next;
        }
    }

    #[test]
    fn steps_stay_collision_free(
        jitter in prop::collection::vec(-1.0f64..1.0, 24),
        a in 0.5f64..5.0,
        b in 0.01f64..100.0,
        vx in -2.0f64..2.0,
    ) {
        let mut s = SwarmState::new(scattered(12, &jitter), R, a, b).unwrap();
        s.drive = [vx, 0.0];
        let integrator = Integrator::default();
        for _ in 0..60 {
            s = integrator.step(&s, 1.0 / 30.0).unwrap().0;
            let (_, _, d) = pairwise_min_distance(&s.positions).unwrap();
            prop_assert!(d > 2.0 * R);
        }
    }

    #[test]
    fn spacing_is_invariant_to_common_gain_scaling(a in 0.1f64..10.0, b in 0.1f64..100.0, k in 0.1f64..10.0) {
        let base = equilibrium_distance(a, b, R);
        let scaled = equilibrium_distance(k * a, k * b, R);
        prop_assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
        prop_assert!(Gains::new(a, b).is_valid());
    }
}
