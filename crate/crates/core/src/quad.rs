//! Adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.

use crate::error::{Error, Result};
use crate::real::Real;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_DEPTH: u32 = 50;
const MAX_INTERVALS: usize = 5000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error_estimate: T,
    pub evaluations: usize,
}

struct Piece<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    depth: u32,
}

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let fc = f(center);
    let mut resk = fc * T::lit(WGK[7]);
    let mut resg = fc * T::lit(WG[3]);
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = hl * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk = resk + T::lit(WGK[j]) * (f1 + f2);
        if j % 2 == 1 {
            resg = resg + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    // QUADPACK-style rescaling of |K15 - G7|
    let reskh = resk * half;
    let mut resasc = T::lit(WGK[7]) * (fc - reskh).abs();
    for j in 0..7 {
        resasc = resasc + T::lit(WGK[j]) * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    resasc = resasc * hl.abs();
    let value = resk * hl;
    let mut err = ((resk - resg) * hl).abs();
    if resasc != T::zero() && err != T::zero() {
        let ratio = T::lit(200.0) * err / resasc;
        err = resasc * T::one().min(ratio.powf(T::lit(1.5)));
    }
    (value, err)
}

/// Integrates `f` over `[a, b]` until the error estimate is below `tol * max(1, |value|)`.
pub fn integrate<T, F>(mut f: F, a: T, b: T, tol: T) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if a == b {
        return Ok(QuadResult { value: T::zero(), error_estimate: T::zero(), evaluations: 0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut evaluations = 15;
    let mut pieces = vec![Piece { a, b, value: v, error: e, depth: 0 }];
    loop {
        let total: T = pieces.iter().fold(T::zero(), |s, p| s + p.value);
        let err: T = pieces.iter().fold(T::zero(), |s, p| s + p.error);
        if !total.is_finite() {
            return Err(Error::Quadrature { partial: f64::NAN, estimate: f64::INFINITY });
        }
        if err <= tol * T::one().max(total.abs()) {
            return Ok(QuadResult { value: total, error_estimate: err, evaluations });
        }
        let worst = (0..pieces.len())
            .max_by(|&i, &j| pieces[i].error.partial_cmp(&pieces[j].error).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        if pieces[worst].depth >= MAX_DEPTH || pieces.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature {
                partial: total.to_f64().unwrap_or(f64::NAN),
                estimate: err.to_f64().unwrap_or(f64::NAN),
            });
        }
        let p = pieces.swap_remove(worst);
        let mid = T::lit(0.5) * (p.a + p.b);
        let (v1, e1) = gk15(&mut f, p.a, mid);
        let (v2, e2) = gk15(&mut f, mid, p.b);
        evaluations += 30;
        pieces.push(Piece { a: p.a, b: mid, value: v1, error: e1, depth: p.depth + 1 });
        pieces.push(Piece { a: mid, b: p.b, value: v2, error: e2, depth: p.depth + 1 });
    }
}

/// One fixed 15-point Kronrod pass, for short smooth subintervals.
pub fn kronrod15<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T) -> T {
    gk15(&mut f, a, b).0
}
