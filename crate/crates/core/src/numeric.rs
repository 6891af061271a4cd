//! Special functions and adaptive quadrature, plus binomial interval estimates.

use statrs::function::{beta, erf, gamma};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Upper tail of the standard normal, `P(g >= t)`.
pub fn normal_sf(t: f64) -> f64 {
    0.5 * libm::erfc(t / SQRT_2)
}

pub fn normal_cdf(t: f64) -> f64 {
    normal_sf(-t)
}

pub fn normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of the standard normal CDF on `(0, 1)`.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erf::erfc_inv(2.0 * p);
    // Newton refinement against the CDF
    for _ in 0..2 {
        let pdf = normal_pdf(x);
        if pdf <= 0.0 {
            break;
        }
        let err = if p < 0.5 { normal_cdf(x) - p } else { (1.0 - p) - normal_sf(x) };
        x -= err / pdf;
    }
    x
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma::gamma(x)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta::beta_reg(a, b, x.clamp(0.0, 1.0))
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Volume of the Euclidean unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// `ln(sinh(x) / x)`, handling the removable singularity and overflow.
pub fn ln_sinhc(x: f64) -> f64 {
    let a = x.abs();
    if a < 1e-4 {
        let a2 = a * a;
        a2 / 6.0 - a2 * a2 / 180.0
    } else if a < 20.0 {
        (a.sinh() / a).ln()
    } else {
        a - (2.0 * a).ln() + (-(-2.0 * a).exp()).ln_1p()
    }
}

/// Derivative of `ln_sinhc`: `coth(x) - 1/x`.
pub fn ln_sinhc_prime(x: f64) -> f64 {
    let a = x.abs();
    let v = if a < 1e-3 {
        a / 3.0 - a * a * a / 45.0
    } else {
        1.0 / a.tanh() - 1.0 / a
    };
    v.copysign(x)
}

/// Second derivative of `ln_sinhc`: `1/x^2 - 1/sinh(x)^2`.
pub fn ln_sinhc_second(x: f64) -> f64 {
    let a = x.abs();
    if a < 1e-2 {
        1.0 / 3.0 - a * a / 15.0
    } else if a < 350.0 {
        1.0 / (a * a) - 1.0 / a.sinh().powi(2)
    } else {
        1.0 / (a * a)
    }
}

pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature on a finite interval.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_depth: 40 }
    }
}

impl Quadrature {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let (whole, err) = gk15(&f, a, b);
        self.refine(&f, a, b, whole, err, self.abs_tol, self.max_depth)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        err: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        if err <= tol.max(self.rel_tol * whole.abs()) || depth == 0 {
            return whole;
        }
        let m = 0.5 * (a + b);
        let (l, le) = gk15(f, a, m);
        let (r, re) = gk15(f, m, b);
        self.refine(f, a, m, l, le, 0.5 * tol, depth - 1)
            + self.refine(f, m, b, r, re, 0.5 * tol, depth - 1)
    }

    /// Integral over `[a, inf)` through `x = a + t / (1 - t)`.
    pub fn integrate_to_infinity<F: Fn(f64) -> f64>(&self, f: F, a: f64) -> f64 {
        self.integrate(
            |t| {
                let s = 1.0 - t;
                let v = f(a + t / s);
                if v == 0.0 {
                    0.0
                } else {
                    v / (s * s)
                }
            },
            0.0,
            1.0,
        )
    }
}

/// Wilson score interval for `successes / trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Simple summary statistics over a slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tail_at_one() {
        assert!((normal_sf(1.0) - 0.158_655_253_931_457_05).abs() < 1e-16);
        assert_eq!(normal_sf(0.0), 0.5);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-6, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-9] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-12 * p.max(1e-3));
        }
    }

    #[test]
    fn gauss_kronrod_polynomial_and_tail() {
        let q = Quadrature::default();
        assert!((q.integrate(|x| x * x, 0.0, 3.0) - 9.0).abs() < 1e-12);
        let tail = q.integrate_to_infinity(normal_pdf, 1.0);
        assert!((tail - normal_sf(1.0)).abs() < 1e-10);
    }

    #[test]
    fn ln_sinhc_branches_agree() {
        for &x in &[1e-5, 1e-4, 0.5, 2.0, 19.9, 20.1, 40.0] {
            let direct = if x < 20.0 { (f64::sinh(x) / x).ln() } else { x - (2.0 * x).ln() };
            assert!((ln_sinhc(x) - direct).abs() < 1e-9, "x = {x}");
        }
        assert!((ln_sinhc(2.0) - 0.595_220_192_054_222_8).abs() < 1e-14);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(50, 100, Z_99);
        assert!(lo < 0.5 && hi > 0.5);
        let (lo0, hi0) = wilson_interval(0, 100, Z_99);
        assert_eq!(lo0, 0.0);
        assert!(hi0 > 0.0 && hi0 < 0.1);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
