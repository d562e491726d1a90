//! Scalar special functions used by the normalizer.

use std::f64::consts::PI;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SERIES_CUTOFF: f64 = 1.0;
const SERIES_MAX_TERMS: usize = 200;
const CF_MAX_TERMS: usize = 5000;

/// `exp(x²)` with the square split into head and tail so large `x` keeps full precision.
fn exp_sq(x: f64) -> f64 {
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    hi.exp() * (1.0 + lo)
}

/// Scaled complementary error function `erfcx(x) = exp(x²) erfc(x)`.
///
/// Small arguments use the all-positive Maclaurin series of `exp(x²) erf(x)`;
/// larger positive arguments use the Laplace continued fraction evaluated with
/// the modified Lentz algorithm; negative arguments use the reflection
/// `erfcx(−x) = 2 exp(x²) − erfcx(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        if x < -26.7 {
            return f64::INFINITY;
        }
        return 2.0 * exp_sq(x) - erfcx(-x);
    }
    if x < SERIES_CUTOFF {
        // exp(x²) erf(x) = (2x/√π) Σ (2x²)^n / (2n+1)!!
        let two_x2 = 2.0 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..SERIES_MAX_TERMS {
            term *= two_x2 / (2 * n + 1) as f64;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        return exp_sq(x) - 2.0 * x * FRAC_1_SQRT_PI * sum;
    }
    if x > 5e7 {
        return FRAC_1_SQRT_PI / x;
    }
    FRAC_1_SQRT_PI / continued_fraction(x)
}

/// Evaluates `x + (1/2)/(x + 1/(x + (3/2)/(x + …)))` by modified Lentz.
fn continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..CF_MAX_TERMS {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

/// `ln erfcx(x)`, finite for every finite `x`.
pub fn ln_erfcx(x: f64) -> f64 {
    if x < -26.0 {
        // erfcx(x) = exp(x²)(2 − erfc(−x)) and erfc(−x) underflows here.
        x * x + std::f64::consts::LN_2
    } else {
        erfcx(x).ln()
    }
}

/// `Γ(d/2)` for a positive integer `d`.
pub fn gamma_half(d: usize) -> f64 {
    let (mut g, mut a) = if d.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = d as f64 / 2.0;
    while a < target {
        g *= a;
        a += 1.0;
    }
    g
}

/// Surface area of the unit sphere `S^{d−1} ⊂ R^d`: `2π^{d/2}/Γ(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    assert!(d >= 1, "sphere_area requires d >= 1");
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// Binomial coefficient as a float.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}
