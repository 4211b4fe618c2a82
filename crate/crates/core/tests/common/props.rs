//! Randomized invariants shared by the property tests and the acceptance run.
//! Each suite draws `CASES` inputs from a fixed seed.

use std::sync::Arc;

use dmd_core::dmd::fit_linear;
use dmd_core::eigen::diagonalize;
use dmd_core::lattice::{build_descriptor, build_hubbard, DescriptorKind, LatticeSpec, Sector};
use dmd_core::logical::{HubbardPreset, Method};
use dmd_core::physical::{factory_model, physical_estimate, st, HardwareModel, Layout, Protocol};
use dmd_core::projector::spectral_projector;
use dmd_core::propagation::truncate_b_bits;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};

pub const CASES: u32 = 1000;

fn runner(seed: u64) -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    })
}

/// A lattice with at most 36 states per sector and a valid sector for it.
fn small_lattice() -> impl Strategy<Value = (LatticeSpec, Sector)> {
    (prop_oneof![(2usize..=4).prop_map(LatticeSpec::chain), Just(LatticeSpec::ladder(4))], any::<bool>())
        .prop_flat_map(|(lat, periodic)| {
            let lat = if periodic && lat.sites > 2 { lat.periodic() } else { lat };
            let n = lat.sites;
            (Just(lat), 0..=n, 0..=n)
        })
        .prop_filter("empty lattice", |(_, u, d)| u + d > 0)
        .prop_map(|(lat, u, d)| (lat.with_electrons(u + d), Sector::new(u, d)))
}

pub fn hermiticity() -> Result<(), String> {
    let kinds = prop_oneof![
        Just(DescriptorKind::TotalHopping),
        Just(DescriptorKind::TotalDoubleOccupancy),
        Just(DescriptorKind::TotalSpinSpin),
        Just(DescriptorKind::SpinSpin { i: 0, j: 1 }),
        (0usize..4, 0usize..4).prop_map(|(p, q)| DescriptorKind::RdmElement {
            creators: vec![p],
            annihilators: vec![q]
        }),
    ];
    runner(11)
        .run(&(small_lattice(), 0.1f64..3.0, 0.0f64..30.0, kinds), |((lat, sector), t, u, kind)| {
            let h = build_hubbard(&lat, sector, t, u).unwrap();
            prop_assert!(h.hermiticity_defect() <= 1e-12 * h.norm_bound, "H defect {}", h.hermiticity_defect());
            let d = build_descriptor(&lat, Arc::clone(&h.basis), &kind).unwrap();
            prop_assert!(d.hermiticity_defect() <= 1e-12 * d.norm_bound.max(1.0), "{} defect {}", kind.label(), d.hermiticity_defect());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn projector_idempotence() -> Result<(), String> {
    runner(12)
        .run(&(small_lattice(), 0.1f64..3.0, 0.0f64..30.0, 0.0f64..1.0), |((lat, sector), t, u, frac)| {
            let h = build_hubbard(&lat, sector, t, u).unwrap();
            let spec = diagonalize(&h).unwrap();
            let (lo, hi) = (spec.eigenvalues[0], spec.eigenvalues[spec.len() - 1]);
            let p = spectral_projector(&spec, lo - 1.0 + frac * (hi - lo + 2.0));
            let defect = (&p * &p - &p).amax();
            prop_assert!(defect <= 1e-12, "||P^2 - P|| = {defect}");
            prop_assert!((&p - p.transpose()).amax() <= 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn design(rows: usize, cols: usize) -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>)> {
    (
        prop::collection::vec(-2.0f64..2.0, rows * cols),
        prop::collection::vec(-5.0f64..5.0, rows),
    )
        .prop_map(move |(x, y)| (DMatrix::from_vec(rows, cols, x), DVector::from_vec(y)))
}

pub fn concatenation_monotonicity() -> Result<(), String> {
    let input = (1usize..=4, 1usize..=8, 1usize..=8).prop_flat_map(|(p, extra, more)| {
        let first = p + 1 + extra;
        (Just(first), design(first + more, p))
    });
    runner(13)
        .run(&input, |(first, (x, y))| {
            let head = fit_linear(&x.rows(0, first).into_owned(), &y.rows(0, first).into_owned(), true).unwrap();
            let all = fit_linear(&x, &y, true).unwrap();
            prop_assert!(all.residual_norm >= head.residual_norm - 1e-10, "{} < {}", all.residual_norm, head.residual_norm);
            prop_assert!(all.max_residual <= all.residual_norm + 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn exact_recovery() -> Result<(), String> {
    let input = (1usize..=5, 0usize..=10).prop_flat_map(|(p, extra)| {
        (
            design(p + 1 + extra, p),
            prop::collection::vec(-3.0f64..3.0, p),
            -10.0f64..10.0,
        )
    });
    runner(14)
        .run(&input, |((x, _), g, c)| {
            let y = &x * DVector::from_column_slice(&g) + DVector::repeat(x.nrows(), c);
            let fit = fit_linear(&x, &y, true).unwrap();
            prop_assume!(!fit.rank_deficient() && fit.condition_number < 1e6);
            let got = fit.couplings.unwrap();
            let err = got.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-9, "coupling error {err}");
            prop_assert!((fit.intercept.unwrap() - c).abs() <= 1e-9);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn intercept_immunity() -> Result<(), String> {
    let input = (1usize..=4, 0usize..=8).prop_flat_map(|(p, extra)| (design(p + 1 + extra, p), -100.0f64..100.0));
    runner(15)
        .run(&input, |((x, y), shift)| {
            let a = fit_linear(&x, &y, true).unwrap();
            prop_assume!(!a.rank_deficient() && a.condition_number < 1e6);
            let b = fit_linear(&x, &y.add_scalar(shift), true).unwrap();
            for (ga, gb) in a.couplings.unwrap().iter().zip(b.couplings.unwrap()) {
                prop_assert!((ga - gb).abs() <= 1e-9 * (1.0 + shift.abs()), "{ga} vs {gb}");
            }
            prop_assert!((b.intercept.unwrap() - a.intercept.unwrap() - shift).abs() <= 1e-9 * (1.0 + shift.abs()));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn truncation_bound() -> Result<(), String> {
    runner(16)
        .run(&(-1e3f64..1e3, 1u32..=40), |(v, b)| {
            let r = truncate_b_bits(v, b);
            prop_assert!((r - v).abs() < 2f64.powi(-(b as i32)));
            prop_assert!(r.abs() <= v.abs() && (r == 0.0 || r.signum() == v.signum()));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn t_and_q(p: &HubbardPreset, method: Method, m: u64) -> (u128, u64) {
    let b = p.budget(method, m, 1).unwrap();
    (b.t_count, b.qubits)
}

pub fn cost_monotonicity() -> Result<(), String> {
    let method = prop_oneof![Just(Method::Coe), Just(Method::Goe), Just(Method::Csoe)];
    let input = (method, 2u64..=64, 1u64..=8, 1u64..=4000, 1u64..=400, 4.0f64..16.0, 0.0f64..0.3, 0.05f64..0.95);
    runner(17)
        .run(&input, |(method, n, dn, m, dm, u, dop, shrink)| {
            let base = HubbardPreset::new(n, u, dop);
            let (t0, q0) = t_and_q(&base, method, m);
            // Absolute accuracies held fixed while the lattice grows.
            let bigger = HubbardPreset {
                eps_oe_h: base.eps_oe_h,
                eps_oe_d: base.eps_oe_d,
                eps_sp: base.eps_sp,
                eps_r: base.eps_r,
                ..HubbardPreset::new(n + dn, u, dop)
            };
            let (t1, q1) = t_and_q(&bigger, method, m);
            prop_assert!(t1 >= t0 && q1 >= q0, "N: {n}->{} gave T {t0}->{t1}, Q {q0}->{q1}", n + dn);
            let (t2, q2) = t_and_q(&base, method, m + dm);
            prop_assert!(t2 >= t0 && q2 >= q0, "M: {m}->{} gave T {t0}->{t2}, Q {q0}->{q2}", m + dm);
            let mut tight = base.clone();
            tight.eps_oe_h *= shrink;
            tight.eps_oe_d *= shrink;
            tight.eps_sp *= shrink;
            tight.eps_r *= shrink;
            let (t3, q3) = t_and_q(&tight, method, m);
            prop_assert!(t3 >= t0 && q3 >= q0, "eps x{shrink} gave T {t0}->{t3}, Q {q0}->{q3}");
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn physical_monotonicity() -> Result<(), String> {
    let layout = prop_oneof![Just(Layout::Compact), Just(Layout::Intermediate), Just(Layout::Fast)];
    let input = (layout, 2u64..=20_000, 1e6f64..1e17, 3u32..=60, 1u64..=20);
    runner(18)
        .run(&input, |(layout, q, t, d, f)| {
            let hw = HardwareModel::new(1e-3);
            let fac = factory_model(&[st(Protocol::P15, 13, 5, 5), st(Protocol::P15, 32, 12, 14)], 1e-3).unwrap();
            let base = physical_estimate(q, t, layout, &fac, &hw, d, f).unwrap();
            let deeper = physical_estimate(q, t, layout, &fac, &hw, d + 1, f).unwrap();
            let wider = physical_estimate(q, t, layout, &fac, &hw, d, f + 1).unwrap();
            prop_assert!(deeper.physical_qubits > base.physical_qubits);
            prop_assert!(wider.physical_qubits > base.physical_qubits);
            let c: Vec<f64> = [Layout::Compact, Layout::Intermediate, Layout::Fast]
                .iter()
                .map(|&l| physical_estimate(q, t, l, &fac, &hw, d, f).unwrap().consumption_time)
                .collect();
            prop_assert!((c[0] / c[2] - 9.0).abs() < 1e-12 && (c[1] / c[2] - 5.0).abs() < 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Every suite, by name.
pub type Suite = fn() -> Result<(), String>;

pub fn all() -> Vec<(&'static str, Suite)> {
    vec![
        ("hermiticity", hermiticity as fn() -> Result<(), String>),
        ("projector idempotence", projector_idempotence),
        ("sample concatenation monotonicity", concatenation_monotonicity),
        ("exact-recovery oracle", exact_recovery),
        ("intercept immunity", intercept_immunity),
        ("truncation bound", truncation_bound),
        ("cost monotonicity", cost_monotonicity),
        ("physical monotonicity", physical_monotonicity),
    ]
}
