use std::f64::consts::PI;

use proptest::prelude::*;

use swarmwave::strip::*;
use swarmwave::{Error, NoSolutionReason, Params, Potential};

const Z: f64 = 2.0 * PI;
const B_NSH: f64 = -0.03267;
const B_TAXONOMY: f64 = -0.01;

fn params(b: f64) -> Params {
    Params::new(0.5, 0.4, 0.1, 0.1, b, b, 0.0).unwrap()
}

fn problem(b: f64) -> StripProblem {
    StripProblem::new(params(b), Potential::strip_default()).unwrap()
}

fn spec(ell: f64, class: WaveClass, sign: Sign) -> StripWaveSpec {
    StripWaveSpec { z: Z, ell, class, sign }
}

// Oracles below share nothing with the library beyond the parameter values.

// q = 1/2 and k' = 1/2 for the parameter set above
const Q: f64 = 0.5;
const KP: f64 = 0.5;

fn v_ref(x: f64) -> f64 {
    let s = 0.25 - x * x;
    if s <= 0.0 {
        return f64::INFINITY;
    }
    s.powf(-0.75) - 4f64.powf(0.75)
}

fn w_ref(x: f64) -> f64 {
    (-KP * v_ref(x)).exp()
}

fn f_ref(rho: f64, ell: f64) -> f64 {
    rho.powf(Q) * (rho + ell).abs().powf(1.0 - Q)
}

// bisection for the root of an increasing function
fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn g_ref(y: f64, ell: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    bisect(|r| f_ref(r, ell) - y, 0.0, y.max(1e-300))
}

// branch inverses of F(., -lt) by bisection on the branch's interval
fn g1_ref(y: f64, lt: f64) -> f64 {
    bisect(|r| f_ref(r, -lt) - y, 0.0, Q * lt)
}

fn g2_ref(y: f64, lt: f64) -> f64 {
    bisect(|r| y - f_ref(r, -lt), Q * lt, lt)
}

// composite trapezoid on the interior nodes of (-1/2, 1/2) with given wall values
fn trapezoid(n: usize, f: impl Fn(f64) -> f64, left: f64, right: f64) -> f64 {
    let h = 1.0 / n as f64;
    let inner: f64 = (1..n).map(|i| f(-0.5 + i as f64 * h)).sum();
    h * (inner + 0.5 * (left + right))
}

// the branch integrands have a |x| kink at the centre node, so the trapezoid
// error is a clean h^2 series on each half
fn richardson(t: impl Fn(usize) -> f64) -> f64 {
    (4.0 * t(8000) - t(4000)) / 3.0
}

fn profile_mass(p: &StripProfile, left: f64, right: f64) -> f64 {
    let h = p.x[1] - p.x[0];
    h * (p.rho.iter().sum::<f64>() + 0.5 * (left + right))
}

fn is_no_solution(e: &Error) -> bool {
    matches!(e, Error::NoSolution { .. })
}

#[test]
fn flat_potential_constants() {
    // q = 1/3 here
    let p = Params::new(0.5, 0.3, 0.1, 0.1, B_NSH, B_NSH, 0.0).unwrap();
    let s = StripProblem::new(p, Potential::Flat).unwrap();
    let k = s.constants().unwrap();
    assert!((k.i - 1.0).abs() < 1e-12);
    assert!((k.i1 - 1.0 / 3.0).abs() < 1e-9);
    assert!((s.solve_c(WaveClass::Positive, 0.0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn integral_constants_match_dense_trapezoid() {
    let s = problem(B_NSH);
    let k = s.constants().unwrap();
    let i = trapezoid(20_000, w_ref, 0.0, 0.0);
    assert!((k.i - i).abs() < 1e-8, "I = {} vs {i}", k.i);
    let m = Q.powf(Q) * (1.0 - Q).powf(1.0 - Q);
    let i1 = richardson(|n| trapezoid(n, |x| g1_ref(m * w_ref(x), 1.0), 0.0, 0.0));
    let i2 = richardson(|n| trapezoid(n, |x| g2_ref(m * w_ref(x), 1.0), 1.0, 1.0));
    assert!((k.i1 - i1).abs() < 1e-8, "I1 = {} vs {i1}", k.i1);
    assert!((k.i2 - i2).abs() < 1e-8, "I2 = {} vs {i2}", k.i2);
    // with q = 1/2, F(., -1) is symmetric about 1/2 so G1 + G2 = 1
    assert!((k.i1 + k.i2 - 1.0).abs() < 1e-9);
    assert!((k.i12 - 0.5).abs() < 1e-9);
    assert!(k.i2 < 1.0);
}

#[test]
fn closed_form_at_zero_ell() {
    let s = problem(B_NSH);
    let w = StripWave::build(&s, spec(0.0, WaveClass::Positive, Sign::Plus), 1024).unwrap();
    let i = trapezoid(20_000, w_ref, 0.0, 0.0);
    let err = w.profile.x.iter().zip(&w.profile.rho).map(|(&x, &r)| (r - w_ref(x) / i).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "sup error {err}");
    assert!((w.mass - 1.0).abs() < 1e-8);
    assert!((profile_mass(&w.profile, 0.0, 0.0) - 1.0).abs() < 1e-8);
    assert!((w.c - 1.0 / i).abs() < 1e-10);
    // u2 = -(bZ/c1) rho
    for (&r, &u2) in w.profile.rho.iter().zip(&w.profile.u2) {
        assert!((u2 + B_NSH * Z / 0.5 * r).abs() < 1e-14);
    }
}

fn c_oracle(ell: f64) -> f64 {
    let n = 2000;
    let mass = |c: f64| trapezoid(n, |x| g_ref(c * w_ref(x), ell), 0.0, 0.0);
    let mut hi = 1.0;
    while mass(hi) < 1.0 {
        hi *= 2.0;
    }
    bisect(|c| mass(c) - 1.0, 0.0, hi)
}

#[test]
fn normalising_constant_matches_bisection_oracle() {
    let s = problem(B_NSH);
    let c = s.solve_c(WaveClass::Positive, 0.3).unwrap();
    let oracle = c_oracle(0.3);
    assert!((c - oracle).abs() < 1e-8 * oracle, "C = {c} vs {oracle}");
}

#[test]
fn ell_star_matches_scan_oracle() {
    let s = problem(B_NSH);
    let target = 0.5 / (B_NSH * Z).abs();
    let h = |l: f64| g_ref(c_oracle(l), l) + l;
    // scan for a sign change, then bisect
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 * target / 20.0).collect();
    let k = grid.windows(2).position(|w| h(w[1]) >= target).unwrap();
    let mut lo = grid[k];
    let mut hi = grid[k + 1];
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let star = s.ell_star(Z).unwrap();
    assert!((star - lo).abs() < 1e-7, "ell* = {star} vs {lo}");
    assert!((s.h_positive(star).unwrap() - target).abs() < 1e-8);
}

#[test]
fn h_is_increasing() {
    let s = problem(B_NSH);
    let star = s.ell_star(Z).unwrap();
    let h: Vec<f64> = (0..=8).map(|k| s.h_positive(star * k as f64 / 8.0).unwrap()).collect();
    assert!(h.windows(2).all(|w| w[1] > w[0]), "{h:?}");
}

#[test]
fn strip_bound_violation_is_no_solution() {
    let s = problem(B_NSH);
    let k = s.constants().unwrap();
    // Z large enough that |bZ| / (c1 I) > 1
    let z = 2.0 * PI * (0.5 * k.i / (B_NSH.abs() * 2.0 * PI)).ceil();
    let e = s.ell_star(z).unwrap_err();
    assert!(matches!(e, Error::NoSolution { reason: NoSolutionReason::StripBound, .. }), "{e}");
}

#[test]
fn critical_wave_saturates_at_the_centre() {
    let s = problem(B_NSH);
    let star = s.ell_star(Z).unwrap();
    let n = 1024;
    let crit = StripWave::build(&s, spec(star, WaveClass::Positive, Sign::Plus), n).unwrap();
    assert!(crit.critical);
    let p = &crit.profile;
    let (imax, umax) = p.u2.iter().map(|u| u.abs()).enumerate().fold((0, 0.0), |a, (i, u)| if u > a.1 { (i, u) } else { a });
    assert!((1.0 - 1e-6..=1.0 + 1e-10).contains(&umax), "max |u2| = {umax}");
    assert_eq!(p.x[imax], 0.0);
    let r = reflection_norms(p, 0.4);
    assert!(r.u1_odd < 1e-8 && r.beta_even < 1e-8, "{r:?}");

    let half = StripWave::build(&s, spec(0.5 * star, WaveClass::Positive, Sign::Plus), n).unwrap();
    assert!(!half.critical);
    let r = reflection_norms(&half.profile, 0.4);
    assert!(r.u1_even < 1e-8 && r.beta_odd < 1e-8, "{r:?}");
    assert!(half.profile.u2.iter().all(|u| u.abs() < 1.0));
}

#[test]
fn beyond_ell_star_is_no_solution() {
    let s = problem(B_NSH);
    let star = s.ell_star(Z).unwrap();
    let e = StripWave::build(&s, spec(1.01 * star, WaveClass::Positive, Sign::Plus), 256).unwrap_err();
    assert!(is_no_solution(&e), "{e}");
}

fn interior(class: WaveClass, s: &StripProblem) -> f64 {
    let k = s.constants().unwrap();
    let r = s.class_range(class, Z, &k).unwrap();
    let mid = if r.lo == r.hi { r.lo } else { 0.5 * (r.lo + r.hi) };
    if class.is_negative() {
        -mid
    } else {
        mid
    }
}

fn wall_values(class: WaveClass, lt: f64) -> (f64, f64) {
    match class {
        WaveClass::Positive | WaveClass::NegB => (0.0, 0.0),
        WaveClass::NegA | WaveClass::NegC => (lt, lt),
        WaveClass::NegDInc => (0.0, lt),
        WaveClass::NegDDec => (lt, 0.0),
    }
}

fn check_invariants(w: &StripWave) {
    let p = &w.profile;
    let prm = w.problem().params;
    for i in 0..p.len() {
        assert!((p.u1[i].hypot(p.u2[i]) - 1.0).abs() < 1e-12);
        assert!(p.u2[i].abs() <= 1.0 + 1e-10);
        assert!(p.rho[i] >= 0.0);
        assert!((prm.c1 * p.u1[i] + prm.b * p.rho[i] * p.dbeta[i]).abs() < 1e-8);
    }
    assert!((w.mass - 1.0).abs() < 1e-8, "mass {}", w.mass);
    let (l, r) = wall_values(w.spec.class, w.ell.abs());
    assert!((profile_mass(p, l, r) - 1.0).abs() < 1e-8, "{:?}: trapezoid mass {}", w.spec.class, profile_mass(p, l, r));
    assert_eq!(p.beta[p.len() / 2], 0.0);
    assert_eq!(p.x[p.len() / 2], 0.0);
}

#[test]
fn every_class_builds_inside_and_fails_outside() {
    let s = problem(B_TAXONOMY);
    let k = s.constants().unwrap();
    for class in WaveClass::ALL {
        let ell = interior(class, &s);
        let w = StripWave::build(&s, spec(ell, class, Sign::Plus), 512).unwrap();
        check_invariants(&w);
        let r = s.class_range(class, Z, &k).unwrap();
        let outside = match class {
            WaveClass::Positive => vec![1.01 * r.hi],
            WaveClass::NegA => vec![-1.05],
            _ => vec![-0.95 * r.lo, -1.05 * r.hi],
        };
        for ell in outside {
            let e = StripWave::build(&s, spec(ell, class, Sign::Plus), 256).unwrap_err();
            assert!(is_no_solution(&e), "{class:?} at {ell}: {e}");
        }
    }
    // each class rejects the other sign of ell
    assert!(StripWave::build(&s, spec(-0.5, WaveClass::Positive, Sign::Plus), 256).is_err());
    assert!(StripWave::build(&s, spec(0.5, WaveClass::NegA, Sign::Plus), 256).is_err());
}

#[test]
fn class_ranges_match_their_closed_endpoints() {
    let s = problem(B_TAXONOMY);
    let k = s.constants().unwrap();
    let sat = 0.5 / (B_TAXONOMY * Z).abs();
    let a = s.class_range(WaveClass::NegA, Z, &k).unwrap();
    assert_eq!((a.lo, a.hi), (0.0, 1.0));
    let b = s.class_range(WaveClass::NegB, Z, &k).unwrap();
    assert!((b.lo - 1.0 / k.i1).abs() < 1e-12 && (b.hi - sat).abs() < 1e-12);
    let c = s.class_range(WaveClass::NegC, Z, &k).unwrap();
    assert_eq!(c.lo, 1.0);
    assert!(c.hi <= 1.0 / k.i2 + 1e-12);
    let d = s.class_range(WaveClass::NegDInc, Z, &k).unwrap();
    assert!((d.lo - 2.0).abs() < 1e-9 && d.lo == d.hi);
}

#[test]
fn class_b_needs_its_bound() {
    let s = problem(B_NSH);
    let k = s.constants().unwrap();
    let z = 2.0 * PI * (0.5 * k.i1 / (B_NSH.abs() * 2.0 * PI)).ceil();
    let e = s.class_range(WaveClass::NegB, z, &k).unwrap_err();
    assert!(matches!(e, Error::NoSolution { reason: NoSolutionReason::ClassBBound, .. }), "{e}");
}

#[test]
fn class_a_at_unit_ell_is_uniform() {
    let s = problem(B_TAXONOMY);
    let w = StripWave::build(&s, spec(-1.0, WaveClass::NegA, Sign::Minus), 256).unwrap();
    assert_eq!(w.c, 0.0);
    assert!(w.profile.rho.iter().all(|&r| r == 1.0));
    assert!(w.profile.u2.iter().all(|&u| u == 0.0));
    assert!(w.profile.u1.iter().all(|&u| u == -1.0));
}

#[test]
fn class_d_centre_and_walls() {
    let s = problem(B_TAXONOMY);
    let ell = interior(WaveClass::NegDInc, &s);
    let lt = -ell;
    for (class, rising) in [(WaveClass::NegDInc, true), (WaveClass::NegDDec, false)] {
        let w = StripWave::build(&s, spec(ell, class, Sign::Plus), 1024).unwrap();
        let p = &w.profile;
        assert!((p.rho[p.len() / 2] - Q * lt).abs() < 1e-9);
        let (first, last) = (p.rho[0], p.rho[p.len() - 1]);
        let (lo, hi) = if rising { (first, last) } else { (last, first) };
        assert!(lo < 1e-6 && (hi - lt).abs() < 1e-6, "{class:?}: {first} {last}");
        let mono = p.rho.windows(2).all(|w| if rising { w[1] >= w[0] } else { w[1] <= w[0] });
        assert!(mono, "{class:?} not monotone");
    }
}

#[test]
fn class_b_wall_limits() {
    let s = problem(B_TAXONOMY);
    let ell = interior(WaveClass::NegB, &s);
    let w = StripWave::build(&s, spec(ell, WaveClass::NegB, Sign::Plus), 1024).unwrap();
    let p = &w.profile;
    let lim = (B_TAXONOMY * Z).abs() * (-ell) / 0.5;
    for i in [0, p.len() - 1] {
        assert!(p.rho[i] < 1e-6);
        assert!((p.u2[i].abs() - lim).abs() < 1e-6);
    }
}

// strict where the profile is resolved, non-increasing elsewhere
fn decreasing_from_centre(p: &StripProfile, base: f64, sign: f64) -> bool {
    let c = p.len() / 2;
    p.rho[c..].windows(2).all(|w| {
        let (a, b) = (sign * (w[0] - base), sign * (w[1] - base));
        if a > 1e-12 * base.max(1.0) {
            b < a
        } else {
            b <= a
        }
    })
}

#[test]
fn density_shape_and_fluid_direction() {
    let s = problem(B_TAXONOMY);
    for class in [WaveClass::Positive, WaveClass::NegA, WaveClass::NegB, WaveClass::NegC] {
        let ell = interior(class, &s);
        let w = StripWave::build(&s, spec(ell, class, Sign::Plus), 512).unwrap();
        let p = &w.profile;
        let lt = ell.abs();
        let ok = match class {
            WaveClass::NegA => decreasing_from_centre(p, lt, 1.0),
            WaveClass::NegC => decreasing_from_centre(p, lt, -1.0),
            _ => decreasing_from_centre(p, 0.0, 1.0),
        };
        assert!(ok, "{class:?} has the wrong shape");
        let lam = w.lambda.signum();
        let expect = if class == WaveClass::NegA { -lam } else { lam };
        assert!(p.u2.iter().all(|&u| u == 0.0 || u.signum() == expect), "{class:?}");
    }
}

#[test]
fn opposite_signs_give_opposite_fields() {
    let s = problem(B_NSH);
    let star = s.ell_star(Z).unwrap();
    for ell in [0.0, 0.4 * star, star] {
        let a = StripWave::build(&s, spec(ell, WaveClass::Positive, Sign::Plus), 512).unwrap();
        let b = StripWave::build(&s, spec(ell, WaveClass::Positive, Sign::Minus), 512).unwrap();
        for i in 0..a.profile.len() {
            assert_eq!(a.profile.u1[i], -b.profile.u1[i]);
            assert_eq!(a.profile.beta[i], -b.profile.beta[i]);
            assert_eq!(a.profile.rho[i], b.profile.rho[i]);
            assert_eq!(a.profile.u2[i], b.profile.u2[i]);
        }
    }
}

#[test]
fn beta_derivative_matches_differences() {
    let s = problem(B_NSH);
    let w = StripWave::build(&s, spec(0.3, WaveClass::Positive, Sign::Plus), 1024).unwrap();
    let p = &w.profile;
    let h = p.x[1] - p.x[0];
    for i in 1..p.len() - 1 {
        if p.x[i].abs() <= 0.3 {
            let fd = (p.beta[i + 1] - p.beta[i - 1]) / (2.0 * h);
            assert!((fd - p.dbeta[i]).abs() < 1e-4 * p.dbeta[i].abs().max(1.0), "x = {}", p.x[i]);
        }
    }
}

#[test]
fn residuals_converge_at_second_order() {
    let s = problem(B_TAXONOMY);
    let prm = s.params;
    for class in WaveClass::ALL {
        let ell = interior(class, &s);
        let res: Vec<f64> = [256, 512, 1024]
            .iter()
            .map(|&n| {
                let w = StripWave::build(&s, spec(ell, class, Sign::Plus), n).unwrap();
                residual_strip(&w.profile, &prm, &s.potential, Z, w.lambda, 0.4).unwrap().max
            })
            .collect();
        assert!(res[1] < 1e-3, "{class:?}: n = 512 residual {}", res[1]);
        for k in 0..2 {
            let ratio = res[k] / res[k + 1];
            assert!((3.2..=4.8).contains(&ratio), "{class:?}: ratio {ratio}");
        }
    }
}

#[test]
fn corrupted_profile_raises_the_residual() {
    let s = problem(B_NSH);
    let prm = s.params;
    let w = StripWave::build(&s, spec(0.3, WaveClass::Positive, Sign::Plus), 512).unwrap();
    let clean = residual_strip(&w.profile, &prm, &s.potential, Z, w.lambda, 0.4).unwrap().max;
    let mut bad = w.profile.clone();
    bad.rho.iter_mut().for_each(|r| *r *= 1.01);
    let dirty = residual_strip(&bad, &prm, &s.potential, Z, w.lambda, 0.4).unwrap().max;
    assert!(dirty >= 10.0 * clean, "{clean} -> {dirty}");
}

#[test]
fn intervals_shrink_with_winding() {
    let s = problem(-0.005);
    let k = s.constants().unwrap();
    let (z1, z2) = (2.0 * PI, 4.0 * PI);
    assert!(s.ell_star(z2).unwrap() < s.ell_star(z1).unwrap());
    let (c1, c2) = (s.class_range(WaveClass::NegC, z1, &k).unwrap(), s.class_range(WaveClass::NegC, z2, &k).unwrap());
    assert!(c2.hi <= c1.hi);
    let (b1, b2) = (s.class_range(WaveClass::NegB, z1, &k).unwrap(), s.class_range(WaveClass::NegB, z2, &k).unwrap());
    assert!(b2.hi - b2.lo < b1.hi - b1.lo);
}

fn taxonomy_problem() -> &'static StripProblem {
    static P: std::sync::OnceLock<StripProblem> = std::sync::OnceLock::new();
    P.get_or_init(|| problem(B_TAXONOMY))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_admissible_wave_holds_its_invariants(k in 0usize..4, t in 0.02f64..0.98) {
        let s = taxonomy_problem();
        let class = [WaveClass::Positive, WaveClass::NegA, WaveClass::NegB, WaveClass::NegC][k];
        let r = s.class_range(class, Z, &s.constants().unwrap()).unwrap();
        let lt = r.lo + t * (r.hi - r.lo);
        let ell = if class.is_negative() { -lt } else { lt };
        let a = StripWave::build(s, spec(ell, class, Sign::Plus), 256).unwrap();
        let b = StripWave::build(s, spec(ell, class, Sign::Minus), 256).unwrap();
        check_invariants(&a);
        check_invariants(&b);
        let p = &a.profile;
        let shape = match class {
            WaveClass::NegA => decreasing_from_centre(p, lt, 1.0),
            WaveClass::NegC => decreasing_from_centre(p, lt, -1.0),
            _ => decreasing_from_centre(p, 0.0, 1.0),
        };
        prop_assert!(shape, "{class:?} at {ell}");
        let expect = if class == WaveClass::NegA { -a.lambda.signum() } else { a.lambda.signum() };
        prop_assert!(p.u2.iter().all(|&u| u == 0.0 || u.signum() == expect));
        for i in 0..p.len() {
            prop_assert_eq!(p.u1[i], -b.profile.u1[i]);
            prop_assert_eq!(p.beta[i], -b.profile.beta[i]);
        }
    }
}
