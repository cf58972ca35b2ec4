//! Cross-module workflows: snapshots of solver output, Coulomb slices,
//! temporal slicing and the Kähler diagnostics on solutions.

use std::sync::Arc;

use monopole_core::fields::{self, coulomb_fix, gauge_act, random_config, random_gauge_map};
use monopole_core::functional::{self, FunctionalParams, SolveOptions};
use monopole_core::kahler::{self, KahlerStructure, SignClass};
use monopole_core::lattice::{self, flux_background, flux_matrix, TorusLattice};
use monopole_core::operators;
use monopole_core::reduce3d;
use monopole_core::snapshot;

fn config(sizes: &[usize], upper: &[i64], seed: u64, amp: f64) -> fields::Config {
    let lat = Arc::new(TorusLattice::new(sizes, &vec![1.0; sizes.len()]).unwrap());
    let bg = Arc::new(flux_background(&lat, &flux_matrix(lat.dim(), upper).unwrap()).unwrap());
    random_config(lat, bg, seed, amp).unwrap()
}

#[test]
fn solved_configuration_survives_a_snapshot() {
    let c = config(&[4; 4], &[0; 6], 2, 0.5);
    let (out, rep) = functional::flow_minimize(&c, &FunctionalParams::weitzenbock(-1.0), &SolveOptions::default()).unwrap();
    assert!(rep.converged);
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("sol");
    snapshot::save_config(&base, &out, Some(2)).unwrap();
    let back = snapshot::load_config(&base).unwrap();
    let r0 = operators::sw_residual(&out, None).unwrap().norm(&out.lat);
    let r1 = operators::sw_residual(&back, None).unwrap().norm(&back.lat);
    assert_eq!(r0, r1);
    // κ = -1 solutions saturate |ψ|² ≤ 1
    assert!((rep.psi_inf * rep.psi_inf - 1.0).abs() < 1e-3);
}

#[test]
fn coulomb_slice_after_gauge_transformation() {
    let c = config(&[4, 4, 4, 6], &[2, 0, 0, 0, 0, -2], 5, 0.6);
    let h = gauge_act(&random_gauge_map(&c.lat, 9, 2.0, 1), &c).unwrap();
    let (fixed, _) = coulomb_fix(&h).unwrap();
    let dstar = lattice::d_star(&fixed.lat, &fixed.a).unwrap();
    assert!(lattice::norm(&fixed.lat, &dstar) < 1e-8 * lattice::norm(&fixed.lat, &fixed.a).max(1.0));
    let r0 = operators::sw_residual(&c, None).unwrap().norm(&c.lat);
    let r1 = operators::sw_residual(&fixed, None).unwrap().norm(&c.lat);
    assert!((r0 - r1).abs() < 1e-10 * r0);
}

#[test]
fn kahler_diagnostics_on_a_flux_background() {
    let ks = KahlerStructure::standard();
    let c = config(&[4; 4], &[2, 0, 0, 0, 0, 2], 1, 0.0);
    let d = kahler::sign_diagnostic(&ks, &c, 1e-9).unwrap();
    assert!(d.pairing > 0.0);
    assert_eq!(d.class, SignClass::AlphaVanishes);
    let opposite = config(&[4; 4], &[-2, 0, 0, 0, 0, -2], 1, 0.0);
    assert_eq!(kahler::sign_diagnostic(&ks, &opposite, 1e-9).unwrap().class, SignClass::BetaVanishes);
}

#[test]
fn temporal_slices_reproduce_the_four_dimensional_spinor_residual() {
    let mut c = config(&[4, 4, 4, 4], &[0, 0, 0, 2, 0, 0], 4, 0.5);
    for s in 0..c.lat.n_sites() {
        c.a.values[s * 4] = 0.0;
    }
    let slices = reduce3d::temporal_slice(&c).unwrap();
    assert_eq!(slices.len(), 4);
    let defect = reduce3d::slice_flow_defect(&c).unwrap();
    let r4 = operators::sw_residual(&c, None).unwrap();
    assert!((defect.spinor - r4.dirac_norm(&c.lat)).abs() < 1e-12 * defect.spinor);
}
