#![allow(dead_code)]

mod stationary_state {
    include!("../examples/stationary_state.rs");
}
mod quasiprobability {
    include!("../examples/quasiprobability.rs");
}
mod time_reversal {
    include!("../examples/time_reversal.rs");
}
mod crooks {
    include!("../examples/crooks.rs");
}
mod integral_ft {
    include!("../examples/integral_ft.rs");
}
mod two_point_measurement {
    include!("../examples/two_point_measurement.rs");
}
mod custom_channel {
    include!("../examples/custom_channel.rs");
}

#[test]
fn stationary_state_example() {
    let rows = stationary_state::run().unwrap();
    for r in &rows {
        assert!((r.populations[0] - 0.5658).abs() < 5e-5);
    }
    assert_eq!(rows[0].class.name(), "incovariant");
    assert_eq!(rows[1].class.name(), "covariant");
}

#[test]
fn quasiprobability_example() {
    let (dist, marginal) = quasiprobability::run().unwrap();
    assert!((dist.total() - 1.0).norm() < 1e-12);
    assert!(dist.max_abs_imag_omega() > 0.26);
    assert!(marginal.support().any(|a| a.q.re < 0.0));
}

#[test]
fn time_reversal_example() {
    let rows = time_reversal::run(&[0.0, 0.5, 1.5]).unwrap();
    let (_, inc, inc_sym) = &rows[0];
    let (_, cov, _) = &rows[1];
    assert!(*inc_sym);
    assert!(inc[0] < 1e-12);
    assert!(inc[1] > 1e-3 && inc[2] > 1e-3);
    assert!(cov.iter().all(|&d| d < 1e-10));
}

#[test]
fn crooks_example() {
    for r in crooks::run().unwrap() {
        assert!(r.passes(1e-9));
        assert!((r.phase_slope.unwrap() + 2.0 * r.theta).abs() < 1e-9 || r.theta == 0.0);
    }
}

#[test]
fn integral_ft_example() {
    let rows = integral_ft::run(101).unwrap();
    assert!((rows[0].mean_omega - 0.1182).abs() < 1e-3);
    assert!((rows[1].mean_omega - 0.2224).abs() < 1e-3);
    for r in rows {
        assert!(r.worst_residual < 1e-10);
        assert!((r.mean_omega - r.relative_entropy_drop).abs() < 1e-9);
    }
}

#[test]
fn two_point_measurement_example() {
    let rows = two_point_measurement::run(&[10_000, 1_000_000], 4).unwrap();
    assert!(rows[0].1 < 1e-10);
    assert!(rows[2].1 < rows[1].1);
}

#[test]
fn custom_channel_example() {
    for seed in [1, 11, 42] {
        let (ift, crooks, atoms) = custom_channel::run(seed).unwrap();
        assert!(ift < 1e-10, "seed {seed}: {ift}");
        assert!(crooks < 1e-8, "seed {seed}: {crooks}");
        assert!(atoms > 3);
    }
}
