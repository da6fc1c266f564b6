use fdris_core::channel::{
    assemble_rician, element_offsets, los_alice_ris, los_ris_receiver, ChannelRealization, RisGeometry,
    SphericalPosition,
};
use fdris_core::covert::{
    covert_power_budget, covert_rhs, dep, log_mgf, optimal_dep, optimal_threshold, warden_stats, CovertConfig,
    WardenStats,
};
use fdris_core::cqp::{project_ball, project_box, project_slab};
use fdris_core::optimizer::{mmse_aux, phase_align, surrogate_quadratic, weighted_rate};
use fdris_core::{dbm_to_watt, CVector, Complex64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cvec(parts: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(parts.len(), parts.iter().map(|(r, i)| Complex64::new(*r, *i)))
}

fn pairs(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), n)
}

fn cfg(varsigma: f64, sigma2: f64, psi: f64) -> CovertConfig {
    CovertConfig { varsigma, xi: 0.2, psi, sigma2_w: vec![sigma2], sigma2_b: sigma2, p_t: 1.0 }
}

fn fixture(seed: u64) -> (RisGeometry, ChannelRealization, CovertConfig) {
    let geom = RisGeometry::half_wavelength(3, 3, 28e9).unwrap();
    let alice = SphericalPosition::from_degrees(70.0, 10.0, 70.0).unwrap();
    let bob = SphericalPosition::from_degrees(120.0, 30.0, 20.0).unwrap();
    let willie = SphericalPosition::from_degrees(110.0, 25.0, 20.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chan = ChannelRealization::draw(&geom, &alice, &bob, &[willie], 31.6, &mut rng).unwrap();
    let cfg = CovertConfig {
        varsigma: 2.0,
        xi: 0.2,
        psi: 100.0,
        sigma2_w: vec![dbm_to_watt(-110.0)],
        sigma2_b: dbm_to_watt(-110.0),
        p_t: dbm_to_watt(15.0),
    };
    (geom, chan, cfg)
}

proptest! {
    #[test]
    fn los_vectors_are_unit_modulus(th in 1.0f64..179.0, ph in -89.0f64..89.0, d in 1.0f64..200.0,
                                    f in prop::collection::vec(0.0f64..5e7, 9)) {
        let geom = RisGeometry::half_wavelength(3, 3, 28e9).unwrap();
        let pos = SphericalPosition::from_degrees(th, ph, d).unwrap();
        for z in los_alice_ris(&geom, &pos).iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-14);
        }
        let link = element_offsets(&geom, &pos);
        for z in los_ris_receiver(&geom, &link, &f).unwrap().iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn receiver_entry_depends_only_on_its_own_frequency(l in 0usize..9, f in prop::collection::vec(0.0f64..5e7, 9),
                                                        other in 0.0f64..5e7) {
        let geom = RisGeometry::half_wavelength(3, 3, 28e9).unwrap();
        let link = element_offsets(&geom, &SphericalPosition::from_degrees(100.0, 20.0, 30.0).unwrap());
        let base = los_ris_receiver(&geom, &link, &f).unwrap();
        let m = (l + 1) % 9;
        let mut g = f.clone();
        g[m] = other;
        let moved = los_ris_receiver(&geom, &link, &g).unwrap();
        prop_assert_eq!(base[l], moved[l]);
    }

    #[test]
    fn rician_assembly_is_linear(a in pairs(4..5), b in pairs(4..5), c in pairs(4..5), s in -3.0f64..3.0) {
        let (x, y, z) = (cvec(&a), cvec(&b), cvec(&c));
        let k = Complex64::new(s, 0.0);
        let lhs = assemble_rician(2.0, 0.8, 0.6, &(&x + &y * k), &z).unwrap();
        let rhs = assemble_rician(2.0, 0.8, 0.6, &x, &z).unwrap() + assemble_rician(2.0, 0.8, 0.0, &y, &z).unwrap() * k;
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn scattered_power_ignores_the_beam(seed in 0u64..50, p1 in prop::collection::vec(0.0f64..6.3, 9),
                                        p2 in prop::collection::vec(0.0f64..6.3, 9),
                                        f in prop::collection::vec(1e7f64..3e7, 9)) {
        let (geom, chan, cfg) = fixture(seed);
        let t1 = CVector::from_iterator(9, p1.iter().map(|p| Complex64::cis(*p)));
        let t2 = CVector::from_iterator(9, p2.iter().map(|p| Complex64::cis(*p)));
        let a = warden_stats(&t1, &f, &chan, &geom, &cfg, 0).unwrap();
        let b = warden_stats(&t2, &vec![2e7; 9], &chan, &geom, &cfg, 0).unwrap();
        prop_assert!((a.sigma_tilde2 - b.sigma_tilde2).abs() <= 1e-12 * a.sigma_tilde2);
    }

    #[test]
    fn optimal_dep_falls_with_power(v in 1.1f64..4.0, w1 in 0.0f64..5.0, w2 in 0.0f64..5.0) {
        let c = cfg(v, 1.0, 0.0);
        let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
        prop_assert!(optimal_dep(hi, &c, 0) <= optimal_dep(lo, &c, 0) + 1e-15);
    }

    #[test]
    fn optimal_threshold_beats_any_threshold(v in 1.1f64..4.0, w in 0.0f64..5.0, u in 0.0f64..1.0) {
        let c = cfg(v, 1.0, 0.0);
        let tau = 1.0 / v + u * (v - 1.0 / v);
        let best = dep(optimal_threshold(w, &c, 0), w, &c, 0).unwrap();
        prop_assert!(best <= dep(tau, w, &c, 0).unwrap() + 1e-12);
        prop_assert!((best - optimal_dep(w, &c, 0)).abs() < 1e-12);
    }

    #[test]
    fn log_mgf_rises_with_psi(mr in -2.0f64..2.0, mi in -2.0f64..2.0, s2 in 0.01f64..2.0, a in 0.0f64..0.99, b in 0.0f64..0.99) {
        let st = WardenStats { mu: Complex64::new(mr, mi), sigma_tilde2: s2, omega_det: 0.0 };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (l1, l2) = (log_mgf(&st, lo / s2).unwrap(), log_mgf(&st, hi / s2).unwrap());
        prop_assert!(l2 >= l1 - 1e-12 * l1.abs());
        prop_assert!(l1 >= (mr * mr + mi * mi + s2) * (1.0 - 1e-12));
    }

    #[test]
    fn meeting_the_rhs_keeps_log_mgf_within_budget(seed in 0u64..50, s2_scale in 0.0f64..0.5, frac in 0.0f64..1.0) {
        let (_, chan, cfg) = fixture(seed);
        let budget = covert_power_budget(&cfg, 0);
        let stats = WardenStats { mu: Complex64::new(0.0, 0.0), sigma_tilde2: s2_scale * budget, omega_det: 0.0 };
        let rhs = covert_rhs(&stats, &chan, &cfg, 0).unwrap();
        prop_assume!(!rhs.floored);
        let at = WardenStats { mu: Complex64::new((frac * rhs.rhs).sqrt(), 0.0), ..stats };
        prop_assert!(log_mgf(&at, cfg.psi).unwrap() <= budget * (1.0 + 1e-12));
    }

    #[test]
    fn projections_are_idempotent(x in pairs(3..4), c in pairs(3..4), b in pairs(3..4), r in 0.1f64..3.0, cap in 0.0f64..4.0) {
        let (x, c, b) = (cvec(&x), cvec(&c), cvec(&b));
        let p = project_ball(&x, &c, r);
        prop_assert!((&p - &c).norm() <= r * (1.0 + 1e-12));
        prop_assert!((project_ball(&p, &c, r) - &p).norm() < 1e-12);
        prop_assume!(b.norm() > 1e-3);
        let s = project_slab(&x, &b, cap).unwrap();
        prop_assert!(b.dotc(&s).norm_sqr() <= cap * (1.0 + 1e-9) + 1e-12);
        prop_assert!((project_slab(&s, &b, cap).unwrap() - &s).norm() < 1e-12);
        // Components orthogonal to b are untouched.
        let u = b.normalize();
        let perp = |v: &CVector| v - &u * u.dotc(v);
        prop_assert!((perp(&s) - perp(&x)).norm() < 1e-12 * x.norm().max(1.0));
        let lo = vec![-1.0; 3];
        let hi = vec![2.0; 3];
        let bx = project_box(&x, &lo, &hi);
        prop_assert_eq!(project_box(&bx, &lo, &hi), bx.clone());
        prop_assert!(bx.iter().all(|z| z.im == 0.0 && (-1.0..=2.0).contains(&z.re)));
    }

    #[test]
    fn phase_alignment_is_unit_modulus(x in pairs(1..10)) {
        let v = cvec(&x);
        let ones = CVector::from_element(v.len(), Complex64::new(1.0, 0.0));
        for z in phase_align(&v, &ones).iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn surrogate_is_tight_at_expansion(h in pairs(2..8), ph in prop::collection::vec(0.0f64..6.3, 8), snr in -20.0f64..30.0) {
        let n = h.len();
        let h = cvec(&h);
        let theta = CVector::from_iterator(n, ph[..n].iter().map(|p| Complex64::cis(*p)));
        let p_t = 10f64.powf(snr / 10.0);
        let aux = mmse_aux(&theta, &h, p_t, 1.0);
        let obj = surrogate_quadratic(&aux, &h, p_t, 1.0).unwrap();
        let rate = (1.0 + p_t * theta.dotc(&h).norm_sqr()).log2();
        prop_assert!((obj.value(&theta) - rate).abs() <= 1e-10 * rate.max(1.0));
        prop_assert!((weighted_rate(&aux, &theta, &h, p_t, 1.0) - rate).abs() <= 1e-10 * rate.max(1.0));
    }
}
