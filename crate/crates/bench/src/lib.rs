//! Shared fixtures for the benchmarks.

use occusynth::{Polynomial, SemiAlgebraicSet, SystemSpec};

/// Euler-discretized double integrator with `X = [−1,1]²`, `Z` the 0.05 ball.
pub fn double_integrator() -> SystemSpec {
    let x1 = Polynomial::var(2, 0);
    let x2 = Polynomial::var(2, 1);
    SystemSpec::new(
        vec![&x1 + &x2.scale(0.01), x2.clone()],
        vec![vec![Polynomial::zero(2)], vec![Polynomial::constant(2, 0.01)]],
        SemiAlgebraicSet::new_box(vec![(-1.0, 1.0); 2]).unwrap(),
        Some(SemiAlgebraicSet::new_box(vec![(-1.0, 1.0)]).unwrap()),
        SemiAlgebraicSet::ball(vec![0.0, 0.0], 0.05).unwrap(),
    )
    .unwrap()
}

/// Reversed-time Van der Pol oscillator, Euler with step 0.01.
pub fn van_der_pol() -> SystemSpec {
    let x1 = Polynomial::var(2, 0);
    let x2 = Polynomial::var(2, 1);
    let f2 = &(&x1.scale(0.8) + &x2.scale(-2.1)) + &(&x1.pow(2) * &x2).scale(10.0);
    SystemSpec::new(
        vec![&x1 + &x2.scale(-0.02), &x2 + &f2.scale(0.01)],
        vec![vec![], vec![]],
        SemiAlgebraicSet::new_box(vec![(-1.5, 1.5); 2]).unwrap(),
        None,
        SemiAlgebraicSet::new_box(vec![(-0.1, 0.1); 2]).unwrap(),
    )
    .unwrap()
}
