//! Standard normal special functions.
//!
//! Gaussian draws everywhere in this crate use a single transform: one
//! uniform `u` in the open interval (0, 1) is mapped to `Φ⁻¹(u)`. That pins
//! the number of uniforms consumed per draw to exactly one, which keeps
//! seeded traces reproducible across policies that share a random stream.

use rand::distr::Open01;
use rand::Rng;
use libm::erfc;
use statrs::function::erf::erfc_inv;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this point `log_normal_cdf` switches to the continued fraction for
/// the Mills ratio instead of taking the log of an ever smaller `erfc`.
const LOG_CDF_TAIL: f64 = -20.0;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF `Φ(x)`, evaluated through `erfc` so the lower tail
/// keeps full relative precision.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// `ln Φ(x)`, finite for every finite `x`.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-normal_sf(x)).ln_1p()
    } else if x >= LOG_CDF_TAIL {
        normal_cdf(x).ln()
    } else {
        // Φ(x) = φ(x) / (z + 1/(z + 2/(z + 3/(z + ...)))) with z = −x.
        let z = -x;
        let mut t = z;
        for k in (1..=64).rev() {
            t = z + k as f64 / t;
        }
        -0.5 * x * x - LN_SQRT_2PI - t.ln()
    }
}

/// Inverse standard normal CDF on (0, 1).
pub fn normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// One standard normal draw from exactly one open-interval uniform.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    normal_quantile(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_symmetry() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for i in 0..=800 {
            let x = i as f64 / 100.0;
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn cdf_matches_reference_values() {
        // mpmath, 30 digits.
        let cases = [
            (0.5, 0.691_462_461_274_013_104),
            (-1.5, 0.066_807_201_268_858_066),
            (1.0, 0.841_344_746_068_542_949),
            (-5.0, 2.866_515_718_791_939_12e-7),
            (7.9, 0.999_999_999_999_998_605),
        ];
        for (x, want) in cases {
            assert!((normal_cdf(x) - want).abs() <= 1e-15, "x={x}");
        }
    }

    #[test]
    fn log_cdf_matches_reference_values() {
        // mpmath, 40 digits.
        let cases = [
            (-30.0, -454.321_243_956_343_2),
            (-20.0, -203.917_155_371_097_26),
            (-5.0, -15.064_998_393_988_725),
            (0.0, -std::f64::consts::LN_2),
            (3.0, -0.001_350_809_964_748_193_8),
        ];
        for (x, want) in cases {
            let got = log_normal_cdf(x);
            assert!(
                (got - want).abs() <= 1e-11 * want.abs().max(1.0),
                "x={x}: {got} vs {want}"
            );
        }
        // Continuity across the tail switch.
        let a = log_normal_cdf(LOG_CDF_TAIL);
        let b = log_normal_cdf(LOG_CDF_TAIL - 1e-9);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &u in &[1e-300, 1e-12, 0.025, 0.3, 0.5, 0.9, 0.975, 1.0 - 1e-12] {
            let x = normal_quantile(u);
            let back = normal_cdf(x);
            assert!((back - u).abs() <= 1e-9 * u.max(1e-3), "u={u}");
        }
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
    }
}
