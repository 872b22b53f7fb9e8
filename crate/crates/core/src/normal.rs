#![allow(clippy::inconsistent_digit_grouping, clippy::excessive_precision)]

//! Standard normal distribution helpers on top of `libm`.

use core::f64::consts::FRAC_1_SQRT_2;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z - LN_SQRT_2PI)
}

pub fn ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(z)`.
pub fn sf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// `ln(1 - Phi(z))`, accurate in both tails.
pub fn ln_sf(z: f64) -> f64 {
    if z < 0.0 {
        libm::log1p(-0.5 * libm::erfc(-z * FRAC_1_SQRT_2))
    } else if z < 30.0 {
        libm::log(0.5 * libm::erfc(z * FRAC_1_SQRT_2))
    } else {
        let z2 = z * z;
        ln_pdf(z) - libm::log(z) + libm::log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2))
    }
}

/// Inverse Mills ratio `phi(z) / (1 - Phi(z))`.
pub fn inv_mills(z: f64) -> f64 {
    if z < 30.0 {
        libm::exp(ln_pdf(z) - ln_sf(z))
    } else {
        // Continued-fraction tail: z + 1/z - 2/z^3 + ...
        let z2 = z * z;
        z + 1.0 / z - 2.0 / (z * z2) + 10.0 / (z * z2 * z2)
    }
}

/// Quantile function `Phi^{-1}(p)` for `p` in (0, 1) (Wichura, AS241), with a
/// final Newton correction.
pub fn ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    let z = if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        q * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r + 67265.770_927_008_7) * r
            + 45921.953_931_549_87)
            * r
            + 13731.693_765_509_461)
            * r
            + 1971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_6)
            / (((((((5226.495_278_852_546 * r + 28729.085_735_721_943) * r + 39307.895_800_092_71) * r
                + 21213.794_301_586_596)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0)
    } else {
        let tail = if q < 0.0 { p } else { 1.0 - p };
        let mut r = libm::sqrt(-libm::log(tail));
        let v = if r <= 5.0 {
            r -= 1.6;
            (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r + 0.241_780_725_177_450_6) * r
                + 1.270_458_252_452_368_4)
                * r
                + 3.647_848_324_763_204_5)
                * r
                + 5.769_497_221_460_691)
                * r
                + 4.630_337_846_156_545)
                * r
                + 1.423_437_110_749_683_6)
                / (((((((1.050_750_071_644_416_8e-9 * r + 5.475_938_084_995_345e-4) * r
                    + 0.015_198_666_563_616_457)
                    * r
                    + 0.148_103_976_427_480_07)
                    * r
                    + 0.689_767_334_985_1)
                    * r
                    + 1.676_384_830_183_803_8)
                    * r
                    + 2.053_191_626_637_758_8)
                    * r
                    + 1.0)
        } else {
            r -= 5.0;
            (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r + 0.001_242_660_947_388_078_4)
                * r
                + 0.026_532_189_526_576_124)
                * r
                + 0.296_560_571_828_504_9)
                * r
                + 1.784_826_539_917_291_3)
                * r
                + 5.463_784_911_164_114)
                * r
                + 6.657_904_643_501_103)
                / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                    + 1.846_318_317_510_054_8e-5)
                    * r
                    + 7.868_691_311_456_133e-4)
                    * r
                    + 0.014_875_361_290_850_615)
                    * r
                    + 0.136_929_880_922_735_8)
                    * r
                    + 0.599_832_206_555_887_9)
                    * r
                    + 1.0)
        };
        if q < 0.0 {
            -v
        } else {
            v
        }
    };
    // One Newton step on Phi(z) = p, in whichever tail is better conditioned.
    let err = if p < 0.5 { cdf(z) - p } else { (1.0 - p) - sf(z) };
    let d = pdf(z);
    if d > 0.0 {
        z - err / d
    } else {
        z
    }
}

/// `Phi^{-1}(1 - p)`, the upper-tail quantile.
pub fn isf(p: f64) -> f64 {
    -ppf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_quantiles() {
        // Reference values from scipy.stats.norm.ppf.
        let cases = [
            (0.5, 0.0),
            (0.95, 1.6448536269514722),
            (0.975, 1.959963984540054),
            (0.05, -1.6448536269514729),
            (1e-10, -6.361340902404056),
            (0.999_999, 4.753424308817087),
            (0.3, -0.5244005127080409),
        ];
        for (p, z) in cases {
            assert!((ppf(p) - z).abs() < 1e-12, "p={p}: {} vs {z}", ppf(p));
        }
    }

    #[test]
    fn round_trip() {
        let mut p = 1e-300;
        while p < 1.0 {
            let z = ppf(p);
            let back = if p < 0.5 { cdf(z) } else { 1.0 - sf(z) };
            assert!(((back - p) / p).abs() < 1e-12, "p={p}");
            p *= 3.7;
        }
    }

    #[test]
    fn log_tail_matches_direct_and_asymptotic() {
        for z in [-8.0, -1.0, 0.0, 1.0, 5.0, 20.0, 29.9] {
            assert!((ln_sf(z) - libm::log(sf(z))).abs() < 1e-12 * (1.0 + ln_sf(z).abs()));
        }
        // Continuity across the asymptotic switch.
        assert!((ln_sf(29.999_999) - ln_sf(30.000_001)).abs() < 1e-4);
        assert!((inv_mills(29.999_999) - inv_mills(30.000_001)).abs() < 1e-4);
        assert!((inv_mills(0.0) - 2.0 * pdf(0.0)).abs() < 1e-15);
    }
}
