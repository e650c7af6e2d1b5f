//! Adaptive Gauss–Kronrod (G10/K21) quadrature over panels.
//!
//! The caller supplies breakpoints; the initial panels are the intervals
//! between them, so density jumps and kinks placed there never sit inside a
//! panel. The panel with the largest `|K21 − G10|` estimate is bisected until
//! the summed estimate meets `max(abs_tol, rel_tol·|I|)`.

// node and weight tables are kept at their published precision
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1], descending; odd indices are the Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_803_584,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights paired with XGK[1], XGK[3], …, XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lower: f64,
    upper: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64) -> Panel {
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        lower,
        upper,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrate `f` over `[lower, upper]`, starting from panels split at every
/// breakpoint strictly inside the interval.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    if upper == lower {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let (lo, hi, sign) = if upper > lower {
        (lower, upper, 1.0)
    } else {
        (upper, lower, -1.0)
    };

    let mut cuts: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    cuts.push(lo);
    cuts.extend(breakpoints.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut panels: Vec<Panel> = cuts
        .windows(2)
        .map(|w| gauss_kronrod(&f, w[0], w[1]))
        .collect();

    let mut subdivisions = 0;
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= tol.abs_tol.max(tol.rel_tol * value.abs()) {
            return Ok(Estimate {
                value: sign * value,
                error,
                panels: panels.len(),
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("at least one panel");
        let p = panels[worst];
        let mid = 0.5 * (p.lower + p.upper);
        if subdivisions >= tol.max_subdivisions || mid <= p.lower || mid >= p.upper {
            return Err(Error::QuadratureNonConvergence {
                lower,
                upper,
                error_estimate: error,
                subdivisions,
            });
        }
        panels[worst] = gauss_kronrod(&f, p.lower, mid);
        panels.push(gauss_kronrod(&f, mid, p.upper));
        subdivisions += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TOL: Tolerance = Tolerance {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_subdivisions: 500,
    };

    #[test]
    fn polynomial_exact_in_one_panel() {
        let e = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, &[], TOL).unwrap();
        assert_abs_diff_eq!(e.value, 13.5, epsilon = 1e-13);
        assert_eq!(e.panels, 1);
    }

    #[test]
    fn smooth_transcendental() {
        let e = integrate(f64::sin, 0.0, std::f64::consts::PI, &[], TOL).unwrap();
        assert_abs_diff_eq!(e.value, 2.0, epsilon = 1e-13);
        let g = integrate(|x| (-x * x).exp(), -10.0, 10.0, &[], TOL).unwrap();
        assert_abs_diff_eq!(g.value, std::f64::consts::PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn jump_at_breakpoint_is_exact() {
        let step = |x: f64| if x < 0.3 { 1.0 } else { 5.0 };
        let e = integrate(step, 0.0, 1.0, &[0.3], TOL).unwrap();
        assert_abs_diff_eq!(e.value, 0.3 + 5.0 * 0.7, epsilon = 1e-14);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let e = integrate(|x| x, 1.0, 0.0, &[], TOL).unwrap();
        assert_abs_diff_eq!(e.value, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn reports_nonconvergence() {
        let tight = Tolerance {
            max_subdivisions: 3,
            ..TOL
        };
        let err = integrate(|x: f64| x.abs().sqrt().recip(), 1e-300, 1.0, &[], tight).unwrap_err();
        assert!(matches!(
            err,
            Error::QuadratureNonConvergence {
                subdivisions: 3,
                ..
            }
        ));
    }
}
