//! Special functions used by the quadrature and operator code.

use std::f64::consts::PI;

// Stirling-series coefficients B_{2n} / (2n (2n - 1)) for ln Gamma.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Gamma function for real arguments.
///
/// Shifts the argument above 15 with the recurrence and sums the Stirling
/// series there; relative accuracy is around 1e-14. Returns NaN at the poles.
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() || (x <= 0.0 && x == x.floor()) {
        return f64::NAN;
    }
    if x < 0.5 {
        // reflection
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    // exact for small integers and half-integers, which is all the radial
    // measure ever asks for
    if x <= 30.0 && (2.0 * x).fract() == 0.0 {
        return gamma_half_integer(x);
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let mut z = x;
    let mut shift = 1.0;
    while z < 15.0 {
        shift *= z;
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    let ln = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series;
    ln.exp() / shift
}

fn gamma_half_integer(x: f64) -> f64 {
    let (mut value, mut at) = if x.fract() == 0.0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while at < x {
        value *= at;
        at += 1.0;
    }
    value
}

/// Surface area of the unit sphere S^{d-1} in R^d: 2 pi^{d/2} / Gamma(d/2).
///
/// For d = 1 this is 2 (the two points +-1).
pub fn unit_sphere_area(dim: u32) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// Riemann zeta for real `s > 0`, `s != 1`, via Borwein's accelerated
/// alternating series for the Dirichlet eta function.
pub fn zeta(s: f64) -> f64 {
    if s <= 0.0 || s == 1.0 {
        return f64::NAN;
    }
    const N: usize = 40;
    let n = N as f64;
    // d_k = n * sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!)
    let mut d = [0.0f64; N + 1];
    let mut term = 1.0;
    let mut acc = 1.0;
    d[0] = acc;
    for (i, slot) in d.iter_mut().enumerate().skip(1) {
        let fi = i as f64;
        term *= 4.0 * (n + fi - 1.0) * (n - fi + 1.0) / ((2.0 * fi) * (2.0 * fi - 1.0));
        acc += term;
        *slot = acc;
    }
    let dn = d[N];
    let mut sum = 0.0;
    for (k, dk) in d.iter().take(N).enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (dk - dn) / ((k + 1) as f64).powf(s);
    }
    let eta = -sum / dn;
    eta / (1.0 - 2f64.powf(1.0 - s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_known_values() {
        assert_eq!(gamma(1.0), 1.0);
        assert_eq!(gamma(5.0), 24.0);
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(gamma(0.25), 3.625_609_908_221_908, max_relative = 1e-14);
        assert_relative_eq!(gamma(0.1), 9.513_507_698_668_73, max_relative = 1e-14);
        assert_relative_eq!(gamma(7.5), 1_871.254_305_797_788_3, max_relative = 1e-14);
        assert_relative_eq!(gamma(-0.5), -3.544_907_701_811_032, max_relative = 1e-14);
        assert_relative_eq!(gamma(0.75), 1.225_416_702_465_177_9, max_relative = 1e-14);
        assert_relative_eq!(gamma(3.3), 2.683_437_381_955_769, max_relative = 1e-13);
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-2.0).is_nan());
    }

    #[test]
    fn sphere_areas() {
        assert_eq!(unit_sphere_area(1), 2.0);
        assert_relative_eq!(unit_sphere_area(2), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(unit_sphere_area(4), 2.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn zeta_known_values() {
        assert_relative_eq!(zeta(0.5), -1.460_354_508_809_586_8, max_relative = 1e-13);
        assert_relative_eq!(zeta(0.25), -0.813_278_405_261_891_7, max_relative = 1e-13);
        assert_relative_eq!(zeta(0.75), -3.441_285_386_945_222_9, max_relative = 1e-13);
        assert_relative_eq!(zeta(2.0), PI * PI / 6.0, max_relative = 1e-13);
        assert!(zeta(1.0).is_nan());
    }
}
