use crackfem::constitutive::{FiberAxis, MaterialModel};
use crackfem::tensor::{contract, frob_norm, SymTensor2};
use proptest::prelude::*;

fn tensor(range: f64) -> impl Strategy<Value = SymTensor2> {
    (-range..range, -range..range, -range..range).prop_map(|(a, b, c)| SymTensor2::new(a, b, c))
}

fn fiber() -> impl Strategy<Value = FiberAxis> {
    prop_oneof![Just(FiberAxis::X), Just(FiberAxis::Y)]
}

fn material() -> impl Strategy<Value = MaterialModel> {
    (fiber(), 0.0..1.0f64, 0.5..3.0f64, 0.1..3.0f64)
        .prop_map(|(f, g, a, b)| MaterialModel::new(1.0, 1.0, g, f, a, b).unwrap())
}

fn rotation(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn strain_is_bounded_for_huge_stresses(m in material(), t in tensor(1e6)) {
        prop_assert!(frob_norm(&m.strain_from_stress(&t)) < 1.0 / m.beta());
    }

    #[test]
    fn inverse_map_is_strictly_monotone(m in material(), t1 in tensor(10.0), t2 in tensor(10.0)) {
        let d = t1 - t2;
        prop_assume!(frob_norm(&d) > 1e-9);
        let q = contract(&(m.strain_from_stress(&t1) - m.strain_from_stress(&t2)), &d);
        prop_assert!(q > 0.0);
    }

    #[test]
    fn round_trip_on_admissible_set(m in material(), e in tensor(1.0), frac in 0.0..0.9f64) {
        let s = m.energy_seminorm(&e);
        prop_assume!(s > 1e-12);
        let eps = (frac / (m.beta() * s)) * e;
        let (t, clamped) = m.stress_from_strain(&eps);
        prop_assert!(!clamped);
        let back = m.strain_from_stress(&t);
        prop_assert!(frob_norm(&(back - eps)) <= 1e-9 * frob_norm(&eps).max(1e-300));
    }

    #[test]
    fn stress_tends_to_linear_at_first_order(f in fiber(), e in tensor(1.0)) {
        let m = MaterialModel::new(1.0, 1.0, 0.5, f, 1.0, 1.0).unwrap();
        prop_assume!(frob_norm(&e) > 1e-3);
        let lin = m.stiffness_apply(&e);
        let err: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&b| {
                let (t, _) = m.with_beta(b).unwrap().stress_from_strain(&e);
                frob_norm(&(t - lin))
            })
            .collect();
        prop_assert!(err[1] < err[0] && err[2] < err[1]);
        for w in err.windows(2) {
            let order = (w[0] / w[1]).log10() / 2.0;
            prop_assert!((order - 1.0).abs() < 0.05, "order {}", order);
        }
    }

    #[test]
    fn isotropic_response_is_frame_indifferent(e in tensor(0.3), theta in 0.0..std::f64::consts::TAU, b in 0.1..2.0f64) {
        let m = MaterialModel::new(1.0, 0.7, 0.0, FiberAxis::X, 1.0, b).unwrap();
        let q = rotation(theta);
        let (t_rot, c1) = m.stress_from_strain(&e.transform(q));
        let (t, c2) = m.stress_from_strain(&e);
        prop_assert_eq!(c1, c2);
        prop_assert!(frob_norm(&(t_rot - t.transform(q))) <= 1e-12 * (1.0 + frob_norm(&t)));
    }

    #[test]
    fn fiber_symmetries_are_respected(m in material(), e in tensor(0.3)) {
        // reflections across either axis keep e1⊗e1 and e2⊗e2 fixed
        let (t, _) = m.stress_from_strain(&e);
        for q in [[[1.0, 0.0], [0.0, -1.0]], [[-1.0, 0.0], [0.0, 1.0]]] {
            let (tr, _) = m.stress_from_strain(&e.transform(q));
            prop_assert!(frob_norm(&(tr - t.transform(q))) <= 1e-12 * (1.0 + frob_norm(&t)));
        }
    }

    #[test]
    fn swapping_axes_swaps_fibers(e in tensor(0.3), g in 0.0..1.0f64, b in 0.1..2.0f64) {
        let mx = MaterialModel::new(1.0, 1.0, g, FiberAxis::X, 1.0, b).unwrap();
        let my = mx.with_fiber_axis(FiberAxis::Y).unwrap();
        let swap = [[0.0, 1.0], [1.0, 0.0]];
        let (tx, _) = mx.stress_from_strain(&e);
        let (ty, _) = my.stress_from_strain(&e.transform(swap));
        prop_assert!(frob_norm(&(ty - tx.transform(swap))) <= 1e-12 * (1.0 + frob_norm(&tx)));
    }

    #[test]
    fn voigt_round_trip_is_exact(t in tensor(1e3)) {
        prop_assert_eq!(SymTensor2::from_voigt(t.to_voigt()), t);
    }

    #[test]
    fn energy_density_is_non_negative(m in material(), e in tensor(2.0)) {
        let (w, _) = m.energy_density(&e);
        prop_assert!(w >= 0.0);
    }
}

#[test]
fn lipschitz_estimate_settles() {
    use rand::{Rng, SeedableRng};
    let m = MaterialModel::new(1.0, 1.0, 0.5, FiberAxis::X, 1.0, 1.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut est = Vec::new();
    let mut c: f64 = 0.0;
    for n in [100, 1_000, 10_000] {
        while est.len() < n {
            let s1 = 10f64.powf(rng.gen_range(-6.0..2.0));
            let s2 = 10f64.powf(rng.gen_range(-8.0..1.0));
            let t1 = SymTensor2::new(s1 * rng.gen_range(-1.0..1.0), s1 * rng.gen_range(-1.0..1.0), s1 * rng.gen_range(-1.0..1.0));
            let d = SymTensor2::new(s2 * rng.gen_range(-1.0..1.0), s2 * rng.gen_range(-1.0..1.0), s2 * rng.gen_range(-1.0..1.0));
            let q = frob_norm(&(m.strain_from_stress(&(t1 + d)) - m.strain_from_stress(&t1))) / frob_norm(&d);
            c = c.max(q);
            est.push(c);
        }
    }
    let (c3, c4) = (est[999], est[9_999]);
    assert!(c4.is_finite());
    assert!((c4 - c3) / c4 <= 0.05, "{c3} -> {c4}");
}
