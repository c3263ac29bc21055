//! Closed-form aggregate noise covariances against direct simulation.

mod common;

use common::{diag_rel_err, noise_case, sample_dest_noise, sample_relay_noise};
use fdrelay::rates::{dest_noise, relay_noise, Cancellation};

const DRAWS: usize = 100_000;

fn check_relay(n: usize, m: usize, cancel: Cancellation, seed: u64) {
    let (params, est, q_s, q_r) = noise_case(n, m, seed);
    let want = relay_noise(&est, &params, &q_s, &q_r, cancel);
    let emp = sample_relay_noise(&est, &params, &q_s, &q_r, cancel, DRAWS, seed + 100);
    let err = diag_rel_err(&emp, &want);
    assert!(err < 0.03, "relay {n}x{m} {cancel:?}: {err}\n{emp}\n{want}");
}

fn check_dest(n: usize, m: usize, seed: u64) {
    let (params, est, q_s, q_r) = noise_case(n, m, seed);
    let want = dest_noise(&est, &params, &q_s, &q_r);
    let emp = sample_dest_noise(&est, &params, &q_s, &q_r, DRAWS, seed + 100);
    let err = diag_rel_err(&emp, &want);
    assert!(err < 0.03, "destination {n}x{m}: {err}\n{emp}\n{want}");
}

#[test]
fn relay_noise_scalar() {
    check_relay(1, 1, Cancellation::Enabled, 1);
}

#[test]
fn relay_noise_two_by_two() {
    check_relay(2, 2, Cancellation::Enabled, 2);
}

#[test]
fn relay_noise_without_cancellation() {
    check_relay(2, 2, Cancellation::Disabled, 3);
}

#[test]
fn dest_noise_scalar() {
    check_dest(1, 1, 4);
}

#[test]
fn dest_noise_two_by_two() {
    check_dest(2, 2, 5);
}
