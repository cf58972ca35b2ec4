use std::sync::Arc;

use monopole_core::clifford::{self, C64};
use monopole_core::fields::{self, gauge_act, random_config, random_gauge_map, random_tangent, Config, GaugeMap};
use monopole_core::functional::{self, FunctionalParams};
use monopole_core::kahler::{self, KahlerStructure};
use monopole_core::lattice::{self, flux_background, flux_matrix, Cochain, TorusLattice};
use monopole_core::operators;
use monopole_core::snapshot;
use monopole_core::topo::{self, FourManifoldData, Rational, SpinCClass};
use proptest::prelude::*;

fn lattice_strategy(dim: usize) -> impl Strategy<Value = TorusLattice> {
    (prop::collection::vec(4usize..=6, dim), prop::collection::vec(0.5f64..1.5, dim))
        .prop_map(|(n, a)| TorusLattice::new(&n, &a).unwrap())
}

fn cochain(lat: &TorusLattice, k: usize, seed: u64) -> Cochain {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = lat.n_sites() * lat.n_comps(k);
    Cochain::new(lat, k, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn half() -> impl Strategy<Value = clifford::Half> {
    prop::array::uniform4(-2.0f64..2.0).prop_map(|v| [C64::new(v[0], v[1]), C64::new(v[2], v[3])])
}

fn even_flux() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec((-2i64..=2).prop_map(|x| 2 * x), 6)
}

fn config4(upper: &[i64], seed: u64, amp: f64) -> Config {
    let lat = Arc::new(TorusLattice::new(&[4, 4, 4, 6], &[1.0, 0.9, 1.1, 0.8]).unwrap());
    let bg = Arc::new(flux_background(&lat, &flux_matrix(4, upper).unwrap()).unwrap());
    random_config(lat, bg, seed, amp).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadratic_form_is_self_dual_with_quartic_norm(psi in half()) {
        let q = clifford::quadratic_form(&psi);
        // self-dual: q01 = q23, q02 = -q13, q03 = q12
        prop_assert!((q[0] - q[5]).abs() < 1e-14 && (q[1] + q[4]).abs() < 1e-14 && (q[2] - q[3]).abs() < 1e-14);
        let n2 = clifford::norm_sqr(&psi);
        let s: f64 = q.iter().map(|x| x * x).sum();
        prop_assert!((s - n2 * n2 / 8.0).abs() <= 1e-12 * (1.0 + n2 * n2));
    }

    #[test]
    fn exterior_derivative_squares_to_zero(lat in lattice_strategy(4), seed in any::<u64>()) {
        for k in 0..=2 {
            let c = cochain(&lat, k, seed.wrapping_add(k as u64));
            prop_assert!(lattice::d(&lat, &lattice::d(&lat, &c).unwrap()).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn codifferential_is_adjoint(lat in lattice_strategy(3), seed in any::<u64>(), k in 0usize..3) {
        let a = cochain(&lat, k, seed);
        let b = cochain(&lat, k + 1, seed ^ 0x55);
        let lhs = lattice::inner(&lat, &lattice::d(&lat, &a).unwrap(), &b);
        let rhs = lattice::inner(&lat, &a, &lattice::d_star(&lat, &b).unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-12 * lattice::norm(&lat, &a) * lattice::norm(&lat, &b) * 10.0);
    }

    #[test]
    fn hodge_star_twice_is_signed_identity(lat in lattice_strategy(4), seed in any::<u64>(), k in 0usize..=4) {
        let c = cochain(&lat, k, seed);
        let ss = lattice::hodge_star(&lat, &lattice::hodge_star(&lat, &c).unwrap()).unwrap();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(ss, c.scale(sign));
    }

    #[test]
    fn flux_sums_are_quantized(lat in lattice_strategy(4), upper in prop::collection::vec(-3i64..=3, 6)) {
        let m = flux_matrix(4, &upper).unwrap();
        let bg = flux_background(&lat, &m).unwrap();
        let f = bg.field_cochain(&lat);
        for (u, v) in clifford::PAIRS4 {
            let total = lattice::flux_through(&lat, &f, u, v, 0);
            prop_assert!((total - 2.0 * std::f64::consts::PI * m[u][v] as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_action_composes(upper in even_flux(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let c = config4(&upper, 1, 0.5);
        let g1 = random_gauge_map(&c.lat, s1, 2.0, 2);
        let g2 = random_gauge_map(&c.lat, s2, 2.0, 2);
        let a = gauge_act(&g1, &gauge_act(&g2, &c).unwrap()).unwrap();
        let b = gauge_act(&g1.compose(&g2), &c).unwrap();
        prop_assert!(a.a.sub(&b.a).max_abs() < 1e-12);
        let diff = fields::section_norm(&c.lat, &fields::section_sub(&a.psi, &b.psi));
        prop_assert!(diff < 1e-12 * (1.0 + fields::section_norm(&c.lat, &c.psi)));
    }

    #[test]
    fn residuals_and_functional_are_gauge_invariant(upper in even_flux(), seed in any::<u64>(), gs in any::<u64>()) {
        let c = config4(&upper, seed, 0.7);
        let h = gauge_act(&random_gauge_map(&c.lat, gs, 3.0, 2), &c).unwrap();
        let r0 = operators::sw_residual(&c, None).unwrap();
        let r1 = operators::sw_residual(&h, None).unwrap();
        prop_assert!((r0.norm(&c.lat) - r1.norm(&c.lat)).abs() < 1e-11 * r0.norm(&c.lat));
        let p = FunctionalParams::weitzenbock(0.5);
        let s0 = functional::action(&c, &p).unwrap();
        prop_assert!((functional::action(&h, &p).unwrap() - s0).abs() < 1e-11 * s0.abs());
    }

    #[test]
    fn raw_functional_is_non_negative(upper in even_flux(), seed in any::<u64>(), amp in 0.0f64..1.5) {
        let c = config4(&upper, seed, amp);
        prop_assert!(functional::action(&c, &FunctionalParams::raw()).unwrap() >= 0.0);
    }

    #[test]
    fn linearization_is_linear(seed in any::<u64>(), t in -2.0f64..2.0) {
        let c = config4(&[2, 0, 0, 0, 0, 2], seed, 0.5);
        let op = operators::linearize(&c).unwrap();
        let u = random_tangent(&c.lat, seed ^ 1);
        let v = random_tangent(&c.lat, seed ^ 2);
        let w = fields::Tangent { a: u.a.axpy(t, &v.a), psi: fields::section_axpy(&u.psi, t, &v.psi) };
        let (iu, iv, iw) = (op.apply(&u).unwrap(), op.apply(&v).unwrap(), op.apply(&w).unwrap());
        prop_assert!(iw.curv.sub(&iu.curv.axpy(t, &iv.curv)).max_abs() < 1e-12);
        let lin = fields::section_axpy(&iu.dirac, t, &iv.dirac);
        prop_assert!(fields::section_sup(&fields::section_sub(&iw.dirac, &lin)) < 1e-12);
    }

    #[test]
    fn kahler_split_round_trips(seed in any::<u64>()) {
        let c = config4(&[0; 6], seed, 1.0);
        let ks = KahlerStructure::standard();
        let (al, be) = kahler::split_spinor(&ks, &c.psi);
        let back = kahler::join_spinor(&ks, &al, &be).unwrap();
        prop_assert!(fields::section_sup(&fields::section_sub(&back, &c.psi)) < 1e-14);
        let n_split: f64 = al.iter().zip(&be).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).sum();
        let n: f64 = c.psi.iter().map(|p| clifford::norm_sqr(p)).sum();
        prop_assert!((n_split - n).abs() < 1e-12 * n);
    }

    #[test]
    fn snapshot_round_trips(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 64)) {
        let lat = TorusLattice::cubic(3, 4, 0.5).unwrap();
        let c = Cochain::new(&lat, 0, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.snap");
        snapshot::save_cochain(&p, &lat, &c).unwrap();
        let (_, back) = snapshot::load_cochain(&p).unwrap();
        prop_assert_eq!(back, c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dimension_splits_into_indices(chi in -100i64..100, sigma in -100i64..100, num in -400i64..400) {
        let md = FourManifoldData::numeric(chi, sigma, 1);
        let sq = Rational::new(num as i128, 4);
        let d = topo::sw_dimension_from_square(&md, sq);
        prop_assert_eq!(d.dimension, d.dirac_index - d.asd_index);
        prop_assert_eq!(d.dimension * 4, Rational::from_integer((num - 2 * chi - 3 * sigma) as i128));
    }

    #[test]
    fn inertia_counts_rank(diag in prop::collection::vec(-3i64..=3, 1..6), shear in -2i64..=2) {
        let n = diag.len();
        let mut q: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0 }).collect()).collect();
        // congruence by an elementary unimodular matrix keeps the inertia
        if n >= 2 {
            let p = q.clone();
            for i in 0..n {
                for j in 0..n {
                    let e = |r: usize, c: usize| i64::from(r == c) + if r == 1 && c == 0 { shear } else { 0 };
                    q[i][j] = (0..n).flat_map(|k| (0..n).map(move |l| (k, l))).map(|(k, l)| e(k, i) * p[k][l] * e(l, j)).sum();
                }
            }
        }
        let (pos, neg, zero) = topo::inertia(&q);
        prop_assert_eq!(pos, diag.iter().filter(|&&x| x > 0).count());
        prop_assert_eq!(neg, diag.iter().filter(|&&x| x < 0).count());
        prop_assert_eq!(zero == 0, topo::determinant(&q) != 0);
    }

    #[test]
    fn enumerated_classes_hit_the_target(diag in prop::collection::vec(prop_oneof![1i64..=3, -3i64..=-1], 1..4), b1 in 0i64..=1, bound in 0i64..=3) {
        let n = diag.len();
        let pos = diag.iter().filter(|&&x| x > 0).count() as i64;
        let q = (0..n).map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0 }).collect()).collect();
        let md = FourManifoldData { chi: 2 - 2 * b1 + n as i64, sigma: 2 * pos - n as i64, b2plus: pos, q, b1: Some(b1) };
        let target = 2 * md.chi + 3 * md.sigma;
        for SpinCClass { c1_l2 } in topo::basic_class_candidates(&md, bound).unwrap() {
            prop_assert!(c1_l2.iter().all(|x| x.abs() <= bound));
            prop_assert_eq!(md.pair(&c1_l2, &c1_l2).unwrap(), target as i128);
        }
    }

    #[test]
    fn thom_bound_is_non_decreasing(d in 1i64..1000) {
        prop_assert!(topo::thom_genus_bound(d + 1).unwrap() >= topo::thom_genus_bound(d).unwrap());
    }
}

#[test]
fn identity_gauge_map_is_exact() {
    let c = config4(&[2, 0, 0, 0, 0, 2], 3, 0.5);
    let h = gauge_act(&GaugeMap::identity(&c.lat), &c).unwrap();
    assert_eq!(h.a, c.a);
    assert_eq!(h.psi, c.psi);
}
