//! Scan-level properties of the zero finder on zeta and the mod 5 L-functions.

use dxray_core::character::character_table;
use dxray_core::evaluator::{DirichletL, EvaluationParams};
use dxray_core::zeros::{locate_zeros_with, pair_zeros, zeros_csv, SearchRegion, ZeroFinderConfig};
use dxray_core::FunctionHandle;

fn strip(t_min: f64, t_max: f64) -> SearchRegion {
    SearchRegion::new(0.0, 1.0, t_min, t_max).unwrap()
}

fn mod5_handles() -> Vec<FunctionHandle> {
    character_table(5)
        .unwrap()
        .into_iter()
        .map(|chi| FunctionHandle::new(DirichletL::new(chi, EvaluationParams::default())))
        .collect()
}

#[test]
fn zeta_and_mod5_zeros_lie_on_the_line() {
    let cfg = ZeroFinderConfig::default();
    let mut handles = vec![FunctionHandle::zeta()];
    handles.extend(mod5_handles());
    for h in &handles {
        let out = locate_zeros_with(h, &strip(0.0, 100.0), 1e-10, &cfg).unwrap();
        assert_eq!(out.count, out.located_multiplicity(), "{}", h.descriptor());
        for z in &out.zeros {
            assert!((z.location.re - 0.5).abs() <= 1e-8, "{}: {}", h.descriptor(), z.location);
            assert!(z.on_critical_line);
        }
        let (pairs, unpaired) = pair_zeros(&out.zeros, cfg.pair_tol);
        assert!(unpaired.is_empty());
        assert!(pairs.iter().all(|p| p.is_degenerate()));
    }
}

#[test]
fn zeta_count_matches_known_total() {
    // N(100) = 29 nontrivial zeros below height 100.
    let out = locate_zeros_with(&FunctionHandle::zeta(), &strip(0.0, 100.0), 1e-10, &ZeroFinderConfig::default()).unwrap();
    assert_eq!(out.zeros.len(), 29);
    assert!((out.zeros[0].location.im - 14.134725141734693).abs() < 1e-9);
}

#[test]
fn subdivision_independence() {
    let cfg = ZeroFinderConfig::default();
    let h = FunctionHandle::zeta();
    let whole = locate_zeros_with(&h, &strip(0.0, 100.0), 1e-10, &cfg).unwrap().zeros;
    let mut parts = Vec::new();
    for k in 0..4 {
        let lo = 25.0 * k as f64;
        parts.extend(locate_zeros_with(&h, &strip(lo, lo + 25.0), 1e-10, &cfg).unwrap().zeros);
    }
    assert_eq!(whole.len(), parts.len());
    for (a, b) in whole.iter().zip(&parts) {
        assert!((a.location - b.location).norm() < 1e-8, "{} vs {}", a.location, b.location);
    }
}

#[test]
fn repeated_scans_give_identical_csv() {
    let cfg = ZeroFinderConfig::default();
    let h = FunctionHandle::davenport_heilbronn();
    let r = strip(80.0, 120.0);
    let run = || {
        let zeros = locate_zeros_with(&h, &r, 1e-10, &cfg).unwrap().zeros;
        let (pairs, _) = pair_zeros(&zeros, cfg.pair_tol);
        zeros_csv("dh", &zeros, &pairs)
    };
    let first = run();
    assert_eq!(first, run());
    assert!(first.lines().any(|l| l.starts_with("dh,8.08517")), "{first}");
}

#[test]
fn off_line_pairs_are_reflections() {
    let cfg = ZeroFinderConfig::default();
    let h = FunctionHandle::davenport_heilbronn();
    let zeros = locate_zeros_with(&h, &strip(60.0, 200.0), 1e-10, &cfg).unwrap().zeros;
    let (pairs, unpaired) = pair_zeros(&zeros, cfg.pair_tol);
    assert!(unpaired.is_empty());
    let off: Vec<_> = pairs.iter().filter(|p| !p.is_degenerate()).collect();
    assert!(off.len() >= 4);
    for p in off {
        assert!((p.right.location.re + p.left.location.re - 1.0).abs() <= 1e-6);
        assert!((p.right.location.im - p.left.location.im).abs() <= 1e-6);
        for z in [p.right.location, p.left.location] {
            assert!(h.value(z).unwrap().norm() <= 1e-10);
        }
    }
}
