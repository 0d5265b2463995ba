//! Bessel functions `J_nu` for the orders arising in radial Fourier
//! inversion on `R^n`: `nu = n/2 - 1`, i.e. integers and half-integers with
//! `nu >= -1/2`. Orders are passed as `two_nu = 2 nu` to keep them exact.
//!
//! Power series below the backend-dependent threshold, Hankel asymptotics
//! above it. Wide backends take the series everywhere: its intermediate
//! terms grow like `e^x`, which 768-bit arithmetic absorbs, so no asymptotic
//! error floor enters validation runs.

use super::real::Real;

/// `Gamma(z)` for `z = two_z / 2 > 0` an integer or half-integer, computed
/// exactly from factorials and `sqrt(pi)` (no float Gamma approximation).
pub fn gamma_half_integer<R: Real>(two_z: i64) -> R {
    assert!(two_z >= 1, "gamma_half_integer needs 2z >= 1, got {two_z}");
    if two_z % 2 == 0 {
        // Integer z: (z-1)!.
        let mut acc = R::one();
        for j in 2..(two_z / 2) {
            acc = acc.mul(&R::from_i64(j));
        }
        acc
    } else {
        // z = m + 1/2: sqrt(pi) * prod_{j=1..m} (j - 1/2).
        let m = (two_z - 1) / 2;
        let mut acc = R::pi().sqrt();
        let half = R::from_f64(0.5);
        for j in 1..=m {
            acc = acc.mul(&R::from_i64(j).sub(&half));
        }
        acc
    }
}

/// `J_nu(x)` for `two_nu = 2 nu >= -1` and `x >= 0` (`x > 0` when `nu < 0`).
pub fn bessel_j<R: Real>(two_nu: i64, x: &R) -> R {
    assert!(two_nu >= -1, "order below -1/2 not supported, got 2nu = {two_nu}");
    if x.to_f64() <= R::bessel_series_threshold() {
        series_j(two_nu, x)
    } else {
        asymptotic_j(two_nu, x)
    }
}

/// Ascending power series
/// `J_nu(x) = sum_k (-1)^k (x/2)^{nu + 2k} / (k! Gamma(nu + k + 1))`.
///
/// Terminates once terms drop below `eps` times the largest term seen, which
/// is the attainable accuracy floor of the alternating sum.
pub(crate) fn series_j<R: Real>(two_nu: i64, x: &R) -> R {
    let half_x = x.mul(&R::from_f64(0.5));
    // (x/2)^nu: integer part by binary power, half part by sqrt.
    let lead = if two_nu % 2 == 0 {
        half_x.powi((two_nu / 2) as i32)
    } else {
        let k = (two_nu - 1) / 2; // nu = k + 1/2, k >= -1
        half_x.powi(k as i32).mul(&half_x.sqrt())
    };
    let mut term = lead.div(&gamma_half_integer::<R>(two_nu + 2));
    let mut sum = term.clone();
    let mut max_mag = term.abs();
    let min_quad = half_x.mul(&half_x).neg();
    let two = R::from_f64(2.0);
    let mut k = 0i64;
    loop {
        k += 1;
        // (k)(k + nu) in exact halves: k * (2k + 2nu)/2.
        let denom = R::from_i64(k).mul(&R::from_i64(2 * k + two_nu).div(&two));
        term = term.mul(&min_quad).div(&denom);
        sum = sum.add(&term);
        let mag = term.abs();
        if max_mag.lt(&mag) {
            max_mag = mag.clone();
        }
        if mag.to_f64() == 0.0 || mag.le(&max_mag.mul(&R::from_f64(R::eps()))) || k > 4000 {
            break;
        }
    }
    sum
}

/// Hankel large-argument expansion
/// `J_nu(x) ~ sqrt(2/(pi x)) (cos(chi) P - sin(chi) Q)`,
/// `chi = x - (2 nu + 1) pi / 4`, truncated at the smallest term. For
/// half-integer orders the expansion terminates and is exact.
pub(crate) fn asymptotic_j<R: Real>(two_nu: i64, x: &R) -> R {
    let mu = R::from_i64(two_nu * two_nu); // 4 nu^2
    let eight_x = x.mul(&R::from_f64(8.0));
    // Running term t_k = a_k / x^k.
    let mut t = R::one();
    let mut p = R::one();
    let mut q = R::zero();
    let mut prev_mag = f64::INFINITY;
    for k in 1i64..=30 {
        let odd = R::from_i64(2 * k - 1);
        t = t.mul(&mu.sub(&odd.mul(&odd))).div(&eight_x.mul(&R::from_i64(k)));
        let mag = t.abs().to_f64();
        if mag == 0.0 {
            break; // exact termination at half-integer order
        }
        if mag >= prev_mag {
            break; // optimal truncation: terms started growing
        }
        prev_mag = mag;
        let signed = if (k / 2) % 2 == 1 { t.neg() } else { t.clone() };
        if k % 2 == 0 {
            p = p.add(&signed);
        } else {
            q = q.add(&signed);
        }
    }
    let quarter_pi = R::pi().mul(&R::from_f64(0.25));
    let chi = x.sub(&R::from_i64(two_nu + 1).mul(&quarter_pi));
    let amp = R::from_f64(2.0).div(&R::pi().mul(x)).sqrt();
    amp.mul(&chi.cos().mul(&p).sub(&chi.sin().mul(&q)))
}
