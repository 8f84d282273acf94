//! Special functions: the modified Bessel function of the second kind for
//! real order, and the standard normal density and distribution function.

use core::f64::consts::{PI, SQRT_2};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
const RESCALE: f64 = 1e250;

/// Standard normal density.
#[inline]
pub fn norm_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf(u: f64) -> f64 {
    0.5 * libm::erfc(-u / SQRT_2)
}

/// `(1/Γ(1-μ) - 1/Γ(1+μ)) / (2μ)` and `(1/Γ(1-μ) + 1/Γ(1+μ)) / 2` for
/// `|μ| <= 1/2`, as needed by Temme's series.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let gammi = 1.0 / libm::tgamma(1.0 - mu);
    let gampl = 1.0 / libm::tgamma(1.0 + mu);
    let gam2 = 0.5 * (gammi + gampl);
    let gam1 = if mu.abs() < 1e-3 {
        // Taylor coefficients of 1/Γ(z) (Euler's constant and two more terms)
        let m2 = mu * mu;
        -(0.577_215_664_901_532_9
            - 0.042_002_635_034_095_2 * m2
            - 0.042_197_734_555_544_3 * m2 * m2)
    } else {
        (gammi - gampl) / (2.0 * mu)
    };
    (gam1, gam2, gampl, gammi)
}

/// `ln K_ν(x)` for real order `ν` and `x > 0`.
///
/// Uses Temme's series for `x <= 2` and Steed's continued fraction
/// otherwise to obtain `K_μ` and `K_{μ+1}` with `|μ| <= 1/2`, followed by
/// forward recurrence in `μ`, carried out with rescaling so that large
/// orders at small arguments do not overflow.
pub fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let nu = nu.abs();
    let nl = (nu + 0.5).floor();
    let xmu = nu - nl;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    // (ln K_μ, K_{μ+1} / K_μ)
    let (ln_kmu, ratio) = if x <= 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * xmu;
        let fact = if pimu.abs() < EPS {
            1.0
        } else {
            pimu / pimu.sin()
        };
        let d = -x2.ln();
        let e = xmu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..=MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - xmu2);
            c *= dd / fi;
            p /= fi - xmu;
            q /= fi + xmu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum.ln(), sum1 * xi2 / sum)
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - xmu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..=MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        let ln_kmu = 0.5 * (PI / (2.0 * x)).ln() - x - s.ln();
        (ln_kmu, (xmu + x + 0.5 - h) * xi)
    };

    // forward recurrence on the pair (K_{μ+i}, K_{μ+i+1}) / scale
    let mut lo = 1.0;
    let mut hi = ratio;
    let mut ln_scale = ln_kmu;
    for i in 1..=(nl as usize) {
        let next = (xmu + i as f64) * xi2 * hi + lo;
        lo = hi;
        hi = next;
        if hi > RESCALE {
            lo /= RESCALE;
            hi /= RESCALE;
            ln_scale += RESCALE.ln();
        }
    }
    ln_scale + lo.ln()
}

/// `K_ν(x)`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    ln_bessel_k(nu, x).exp()
}

/// Unit-range Matérn correlation `2^{1-κ}/Γ(κ) h^κ K_κ(h)`, equal to 1 at 0.
pub fn matern_correlation(h: f64, kappa: f64) -> f64 {
    if h <= 0.0 {
        return 1.0;
    }
    // below this the value is 1 to double precision for any κ in (0, 30]
    if h < 1e-12 {
        return 1.0;
    }
    let ln_val = (1.0 - kappa) * core::f64::consts::LN_2 - libm::lgamma(kappa)
        + kappa * h.ln()
        + ln_bessel_k(kappa, h);
    ln_val.exp().min(1.0)
}
