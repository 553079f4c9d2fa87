mod common;

use common::*;
use proptest::prelude::*;
use swe4dvar::StencilVariant;

fn variant() -> impl Strategy<Value = StencilVariant> {
    prop_oneof![Just(StencilVariant::AsPrinted), Just(StencilVariant::Corrected)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn window_adjoint_is_transpose(v in variant(), steps in 1usize..=30, seed in 0u64..1000) {
        let m = small_model(v);
        let lin = m.linearize(&base_state(&m, seed), steps).unwrap();
        let mut r = rng(seed + 7);
        let d = random_state(8, 6, 1.0, &mut r);
        let y = random_state(8, 6, 1.0, &mut r);
        let md = lin.tlm(&d).unwrap();
        let my = lin.adjoint(&y).unwrap();
        let rel = (md.dot(&y) - d.dot(&my)).abs() / (md.norm2() * y.norm2());
        prop_assert!(rel <= 1e-12, "relative residual {rel:e}");
    }

    #[test]
    fn tlm_is_linear(v in variant(), steps in 1usize..=10, seed in 0u64..1000, a in -3.0f64..3.0) {
        let m = small_model(v);
        let lin = m.linearize(&base_state(&m, seed), steps).unwrap();
        let mut r = rng(seed + 9);
        let d1 = random_state(8, 6, 1.0, &mut r);
        let d2 = random_state(8, 6, 1.0, &mut r);
        let mut comb = d1.clone();
        comb.axpy(a, &d2);
        let lhs = lin.tlm(&comb).unwrap();
        let mut rhs = lin.tlm(&d1).unwrap();
        rhs.axpy(a, &lin.tlm(&d2).unwrap());
        prop_assert!(max_diff(lhs.as_slice(), rhs.as_slice()) <= 1e-12 * max_abs(rhs.as_slice()).max(1e-300));
    }

    #[test]
    fn split_windows_compose(v in variant(), steps in 2usize..=20, cut in 1usize..20, seed in 0u64..1000) {
        let cut = cut.min(steps - 1);
        let m = small_model(v);
        let lin = m.linearize(&base_state(&m, seed), steps).unwrap();
        let y = random_state(8, 6, 1.0, &mut rng(seed));
        let whole = lin.adjoint(&y).unwrap();
        let tail = lin.sub_window(cut..steps).adjoint(&y).unwrap();
        let split = lin.sub_window(0..cut).adjoint(&tail).unwrap();
        prop_assert!(max_diff(whole.as_slice(), split.as_slice()) <= 1e-14 * max_abs(whole.as_slice()));
    }
}

#[test]
fn empty_window_is_identity() {
    for v in VARIANTS {
        let m = small_model(v);
        let lin = m.linearize(&base_state(&m, 0), 0).unwrap();
        let d = random_state(8, 6, 1.0, &mut rng(1));
        assert_eq!(lin.tlm(&d).unwrap(), d);
        assert_eq!(lin.adjoint(&d).unwrap(), d);
    }
}

/// Second-order remainder of the one-step linearization.
#[test]
fn tlm_taylor_order() {
    for v in VARIANTS {
        let m = small_model(v);
        let b = base_state(&m, 4);
        let scale = max_abs(b.as_slice());
        let mut d = random_state(8, 6, scale, &mut rng(5));
        if v == StencilVariant::Corrected {
            // keep the height perturbation small relative to the mean depth
            for x in d.field_mut(swe4dvar::Field::H) {
                *x *= 1e-2;
            }
        }
        let fb = m.step(&b).unwrap();
        let tl = m.tlm_step(&b, &d).unwrap();
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&eps| {
                let mut x = b.clone();
                x.axpy(eps, &d);
                let mut r = m.step(&x).unwrap();
                r.axpy(-1.0, &fb);
                r.axpy(-eps, &tl);
                r.norm2()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log10();
            assert!(order >= 1.9, "{v}: order {order} from {errs:?}");
        }
    }
}
