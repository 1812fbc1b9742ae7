//! Complex digamma function, used to sum the far-field tail of the
//! flat-kernel integral in closed form.

use num_complex::Complex64;

/// `psi(z)` for `Re z > 0`: upward recurrence to `Re z >= 10`, then the
/// asymptotic expansion.
pub fn digamma(z: Complex64) -> Complex64 {
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < 10.0 {
        shift -= z.inv();
        z += 1.0;
    }
    let w = z.inv();
    let w2 = w * w;
    // Bernoulli terms B_2k / (2k z^2k) for k = 1..7
    let series = w2
        * (1.0 / 12.0
            - w2 * (1.0 / 120.0
                - w2 * (1.0 / 252.0
                    - w2 * (1.0 / 240.0
                        - w2 * (1.0 / 132.0 - w2 * (691.0 / 32760.0 - w2 / 12.0))))));
    shift + z.ln() - 0.5 * w - series
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn real_special_values() {
        assert!(close(digamma(Complex64::new(1.0, 0.0)), Complex64::new(-EULER_GAMMA, 0.0), 1e-14));
        let half = -EULER_GAMMA - 2.0 * 2f64.ln();
        assert!(close(digamma(Complex64::new(0.5, 0.0)), Complex64::new(half, 0.0), 1e-14));
    }

    #[test]
    fn imaginary_part_on_the_line_re_one() {
        // Im psi(1 + iy) = -1/(2y) + (pi/2) coth(pi y)
        for y in [0.01, 0.3, 1.0, 4.0] {
            let pi = std::f64::consts::PI;
            let expected = -0.5 / y + 0.5 * pi / (pi * y).tanh();
            let got = digamma(Complex64::new(1.0, y)).im;
            assert!((got - expected).abs() < 1e-13, "y = {y}");
        }
    }

    #[test]
    fn matches_high_precision_values() {
        // 30-digit reference values
        let cases = [
            ((0.5, 0.3), (-1.39793262940580732844854732105, 1.15666938332423779803245397677)),
            ((1.2, -2.5), (0.94867561056762661571185627826, -1.29442075455675600143793682813)),
            ((0.75, 0.01), (-1.08559579095172997839152744244, 0.0254155031568213896411591667297)),
            ((3.0, 7.0), (2.00535018364095244276114303053, 1.22729228366821198336154080701)),
        ];
        for ((x, y), (re, im)) in cases {
            let got = digamma(Complex64::new(x, y));
            assert!(close(got, Complex64::new(re, im), 1e-14), "z = {x}+{y}i: {got}");
        }
    }

    #[test]
    fn recurrence_and_conjugation() {
        let z = Complex64::new(0.8, -1.7);
        let lhs = digamma(z + 1.0);
        let rhs = digamma(z) + z.inv();
        assert!(close(lhs, rhs, 1e-14));
        assert!(close(digamma(z.conj()), digamma(z).conj(), 1e-15));
    }
}
