//! Standard normal distribution function and its inverse.
//!
//! The inverse is Wichura's AS241 (PPND16) rational approximation, good to
//! about 1e-16 relative over the whole open unit interval, including the far
//! tail needed for the `1e-100` barrier-delta sentinel.

#![allow(clippy::excessive_precision)]

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_608_0e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083_0e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061_0e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561_0e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_90e0,
    5.769_497_221_460_691_405_50e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_70e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_40e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_40e0,
    6.897_673_349_851_000_045_50e-1,
    1.481_039_764_274_800_745_90e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946_00e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_20e0,
    5.463_784_911_164_114_369_90e0,
    1.784_826_539_917_291_335_80e0,
    2.965_605_718_285_048_912_30e-1,
    2.653_218_952_657_612_309_30e-2,
    1.242_660_947_388_078_438_60e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_90e-1,
    1.369_298_809_227_358_053_10e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591_00e-4,
    1.846_318_317_510_054_681_80e-5,
    1.421_511_758_316_445_888_70e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// Inverse standard normal CDF. Returns `-inf`/`inf` at 0 and 1, NaN outside.
pub fn inv_cdf(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_quantiles() {
        assert!((inv_cdf(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((inv_cdf(0.5)).abs() < 1e-16);
        assert!((inv_cdf(0.01) + 2.326_347_874_040_841).abs() < 1e-14);
        assert!((inv_cdf(1e-5) + 4.264_890_793_922_825).abs() < 1e-13);
        assert!((inv_cdf(1e-100) + 21.273_453_560_965_324).abs() < 1e-12);
    }

    #[test]
    fn matches_high_precision_quantiles() {
        let table = [
            (0.1, -1.281_551_565_544_600_5),
            (0.3, -0.524_400_512_708_040_8),
            (0.49, -0.025_068_908_258_711_036),
            (0.75, 0.674_489_750_196_081_7),
            (0.99, 2.326_347_874_040_841),
        ];
        for (p, x) in table {
            assert!(
                (inv_cdf(p) - x).abs() < 2e-15 * x.abs().max(1.0),
                "p={p} {:e}",
                inv_cdf(p) - x
            );
        }
    }

    #[test]
    fn round_trip_through_cdf() {
        for &p in &[1e-30, 1e-10, 1e-5, 0.01, 0.1, 0.3, 0.49, 0.5, 0.75, 0.99, 0.999_999] {
            let back = cdf(inv_cdf(p));
            assert!(((back - p) / p).abs() < 1e-12, "p={p} back={back}");
        }
    }

    #[test]
    fn edges() {
        assert_eq!(inv_cdf(0.0), f64::NEG_INFINITY);
        assert_eq!(inv_cdf(1.0), f64::INFINITY);
        assert!(inv_cdf(1.5).is_nan());
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
    }
}
