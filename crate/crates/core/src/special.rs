//! Special functions: complex log-Gamma, log-sine, Bessel `J₀ Y₀ J₁ Y₁ K₀`,
//! Bernoulli numbers.

use std::f64::consts::PI;

use num_complex::Complex64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `B_{2k}` for `k = 0..=15`.
const BERNOULLI_EVEN: [f64; 16] = [
    1.0,
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

/// `B_{2k}`; panics beyond `k = 15`.
pub fn bernoulli_even(k: usize) -> f64 {
    BERNOULLI_EVEN[k]
}

/// Principal-sheet-agnostic `log Γ(z)`: `exp` of the result is `Γ(z)`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let pi = Complex64::new(PI, 0.0);
        return pi.ln() - ln_sin(z * PI) - ln_gamma(1.0 - z);
    }
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < 12.0 && z.norm() < 20.0 {
        shift += z.ln();
        z += 1.0;
    }
    let half_ln_2pi = 0.918_938_533_204_672_8;
    let mut s = (z - 0.5) * z.ln() - z + half_ln_2pi;
    let z2 = z * z;
    let mut zp = z;
    for k in 1..=10 {
        let b = BERNOULLI_EVEN[k];
        s += b / ((2 * k) as f64 * (2 * k - 1) as f64) / zp;
        zp *= z2;
    }
    s - shift
}

/// Digamma `ψ(x)` for real `x > 0`.
pub fn digamma(x: f64) -> f64 {
    let mut x = x;
    let mut shift = 0.0;
    while x < 12.0 {
        shift += 1.0 / x;
        x += 1.0;
    }
    let x2 = x * x;
    let mut xp = x2;
    let mut s = x.ln() - 0.5 / x;
    for k in 1..=8 {
        s -= BERNOULLI_EVEN[k] / (2 * k) as f64 / xp;
        xp *= x2;
    }
    s - shift
}

/// `log sin(z)`, stable for large `|Im z|`.
pub fn ln_sin(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.im > 2.0 {
        // sin z = e^{-iz}(1 - e^{2iz}) · i/2
        -i * z + (0.5 * i).ln() + (1.0 - (2.0 * i * z).exp()).ln()
    } else if z.im < -2.0 {
        i * z - (2.0 * i).ln() + (1.0 - (-2.0 * i * z).exp()).ln()
    } else {
        z.sin().ln()
    }
}

const SWITCH: f64 = 12.0;

fn hankel(x: f64, nu: f64) -> (f64, f64) {
    // Returns (J_ν, Y_ν) via P, Q with optimal truncation.
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..200 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > prev {
            break;
        }
        prev = a.abs();
        let term = match k % 4 {
            0 => (a, 0.0),
            1 => (0.0, a),
            2 => (-a, 0.0),
            _ => (0.0, -a),
        };
        p += term.0;
        q += term.1;
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    let (s, c) = chi.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// `J₀(x)`, `Y₀(x)` for `x > 0`.
pub fn bessel_jy0(x: f64) -> (f64, f64) {
    if x >= SWITCH {
        return hankel(x, 0.0);
    }
    let y = 0.25 * x * x;
    let mut term = 1.0;
    let mut j = 1.0;
    let mut h = 0.0;
    let mut ysum = 0.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= -y / (kf * kf);
        h += 1.0 / kf;
        j += term;
        ysum += term * h;
        if term.abs() < 1e-18 {
            break;
        }
    }
    let y0 = (2.0 / PI) * ((0.5 * x).ln() + EULER_GAMMA) * j - (2.0 / PI) * ysum;
    (j, y0)
}

/// `J₁(x)`, `Y₁(x)` for `x > 0`.
pub fn bessel_jy1(x: f64) -> (f64, f64) {
    if x >= SWITCH {
        return hankel(x, 1.0);
    }
    let y = 0.25 * x * x;
    let half = 0.5 * x;
    // term_k = (-y)^k / (k! (k+1)!) ; digamma(k+1) + digamma(k+2) = 2(H_k - γ) + 1/(k+1)
    let mut term = 1.0;
    let mut j = 1.0;
    let mut hk = 0.0;
    let mut ysum = 1.0 - 2.0 * EULER_GAMMA;
    for k in 1..80 {
        let kf = k as f64;
        term *= -y / (kf * (kf + 1.0));
        hk += 1.0 / kf;
        j += term;
        ysum += term * (2.0 * (hk - EULER_GAMMA) + 1.0 / (kf + 1.0));
        if term.abs() < 1e-18 {
            break;
        }
    }
    let j1 = half * j;
    let y1 = (2.0 / PI) * j1 * half.ln() - 2.0 / (PI * x) - half * ysum / PI;
    (j1, y1)
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_jy0(x).0
}

pub fn bessel_y0(x: f64) -> f64 {
    bessel_jy0(x).1
}

/// `K₀(x)` for `x > 0`.
pub fn bessel_k0(x: f64) -> f64 {
    if x <= 2.0 {
        let y = 0.25 * x * x;
        let mut term = 1.0;
        let mut i0 = 1.0;
        let mut h = 0.0;
        let mut s = 0.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= y / (kf * kf);
            h += 1.0 / kf;
            i0 += term;
            s += term * h;
            if term < 1e-18 {
                break;
            }
        }
        return -((0.5 * x).ln() + EULER_GAMMA) * i0 + s;
    }
    if x > 700.0 {
        return 0.0;
    }
    // K₀(x) = ∫₀^∞ exp(-x cosh u) du, trapezoid converges geometrically.
    let h = 0.125;
    let scale = (-x).exp();
    let mut s = 0.5;
    let mut k = 1;
    loop {
        let u = h * k as f64;
        let v = (-x * (u.cosh() - 1.0)).exp();
        s += v;
        if v < 1e-18 {
            break;
        }
        k += 1;
    }
    s * h * scale
}
