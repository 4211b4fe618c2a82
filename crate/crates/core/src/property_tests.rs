//! The seeded property suites, run with the unit tests so that a failing
//! acceptance binary does not stop them under `cargo test --workspace`.

use crate::props;

#[test]
fn hermiticity() {
    props::hermiticity().unwrap();
}

#[test]
fn projector_idempotence() {
    props::projector_idempotence().unwrap();
}

#[test]
fn concatenation_monotonicity() {
    props::concatenation_monotonicity().unwrap();
}

#[test]
fn exact_recovery() {
    props::exact_recovery().unwrap();
}

#[test]
fn intercept_immunity() {
    props::intercept_immunity().unwrap();
}

#[test]
fn truncation_bound() {
    props::truncation_bound().unwrap();
}

#[test]
fn cost_monotonicity() {
    props::cost_monotonicity().unwrap();
}

#[test]
fn physical_monotonicity() {
    props::physical_monotonicity().unwrap();
}
