//! Bessel function of the first kind, order one.

use std::f64::consts::PI;

/// Below this argument the power series is used, above it the Hankel
/// asymptotic expansion. At the switch both are accurate to a few 1e-13.
const SERIES_LIMIT: f64 = 12.0;

/// `J₁(z)` for real `z`, absolute error below 1e-12.
pub fn bessel_j1(z: f64) -> f64 {
    if z < 0.0 {
        return -bessel_j1(-z);
    }
    if z <= SERIES_LIMIT {
        series(z)
    } else {
        hankel(z)
    }
}

/// `J₁(z)/z`, continuous at zero where it equals ½.
pub fn bessel_j1_over_z(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        // Two series terms are exact to ~1e-18 here.
        let q = 0.25 * z * z;
        0.5 * (1.0 - 0.5 * q)
    } else {
        bessel_j1(z) / z
    }
}

fn series(z: f64) -> f64 {
    // J₁(z) = Σ_k (-1)^k (z/2)^{2k+1} / (k! (k+1)!)
    let h = 0.5 * z;
    let q = -h * h;
    let mut term = h;
    let mut sum = term;
    for k in 1..80 {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn hankel(z: f64) -> f64 {
    // J₁(z) ~ sqrt(2/(πz)) (P cos χ - Q sin χ), χ = z - 3π/4, with
    // a_k = Π_{j=1..k} (4 - (2j-1)²) / (k! (8z)^k),
    // P = a₀ - a₂ + a₄ - …, Q = a₁ - a₃ + a₅ - ….
    // The series is asymptotic: stop before the terms start growing.
    let mu = 4.0;
    let eight_z = 8.0 * z;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = a * (mu - odd * odd) / (k as f64 * eight_z);
        if next.abs() >= prev || next.abs() < 1e-18 {
            break;
        }
        prev = next.abs();
        a = next;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
    }
    let chi = z - 0.75 * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}
