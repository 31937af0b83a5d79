use proptest::prelude::*;
use swarmwave::potential::{validate_annulus, Confinement};
use swarmwave::quad::integrate;
use swarmwave::Potential;

fn v_ref(x: f64) -> f64 {
    ((0.5 - x) * (0.5 + x)).powf(-0.75) - 4f64.powf(0.75)
}

#[test]
fn confinement_integral_matches_dense_trapezoid() {
    let kp = 5.0;
    let v = Potential::strip_default();
    let q = integrate(|x| (-kp * v.value(x)).exp(), -0.5, 0.5, 1e-12).unwrap();
    let n = 1_000_000;
    let h = 1.0 / n as f64;
    let oracle = h * (1..n).map(|k| (-kp * v_ref(-0.5 + k as f64 * h)).exp()).sum::<f64>();
    assert!((q.value - oracle).abs() <= 1e-8, "{} vs {oracle}", q.value);
}

#[test]
fn trivial_integrals() {
    assert!((integrate(|_| 1.0f64, 0.0, 1.0, 1e-10).unwrap().value - 1.0).abs() <= 1e-14);
    assert!(integrate(|x: f64| x, -0.5, 0.5, 1e-10).unwrap().value.abs() <= 1e-14);
}

#[test]
fn strip_potential_values() {
    let v = Potential::strip_default();
    assert_eq!(v.value(0.0), 0.0);
    assert_eq!(v.d1(0.0), 0.0);
    assert!((v.value(0.25) - v_ref(0.25)).abs() <= 1e-13);
    assert!((v.value(0.25) - v.value(-0.25)).abs() <= 1e-13);
}

#[test]
fn annulus_potential_shape() {
    let v = Potential::AnnulusPower { r0: 1.0, r1: 2.0, beta: 0.75, scale: 1.0 };
    let r_star = validate_annulus(&v, 4000).unwrap();
    assert!((r_star - 1.5).abs() <= 1e-10);
    let mesh: Vec<f64> = (1..4000).map(|k| 1.0 + k as f64 / 4000.0).collect();
    let min = mesh.iter().map(|&r| v.value(r)).fold(f64::INFINITY, f64::min);
    assert!(min.abs() <= 1e-12);
    let rv: Vec<f64> = mesh.iter().filter(|&&r| r >= r_star).map(|&r| r * v.d1(r)).collect();
    assert!(rv.windows(2).all(|w| w[1] > w[0]));
}

proptest! {
    #[test]
    fn polynomials_and_exponentials(c in prop::collection::vec(-3.0f64..3.0, 1..6), k in -4.0f64..4.0, a in -2.0f64..0.0, w in 0.1f64..3.0) {
        let b = a + w;
        let poly = |x: f64| c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci);
        let anti = |x: f64| c.iter().enumerate().map(|(i, &ci)| ci * x.powi(i as i32 + 1) / (i + 1) as f64).sum::<f64>();
        let got = integrate(poly, a, b, 1e-10).unwrap().value;
        let want = anti(b) - anti(a);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
        let got = integrate(|x| (k * x).exp(), a, b, 1e-10).unwrap().value;
        let want = if k.abs() < 1e-12 { w } else { ((k * b).exp() - (k * a).exp()) / k };
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
    }
}
