//! Gauss-Legendre quadrature, generic over the scalar backend.
//!
//! Nodes are Legendre-polynomial roots found by Newton iteration in the
//! target precision itself (hardcoded decimal tables would cap accuracy at
//! their digit count and spoil wide-backend runs). Symmetry is enforced
//! exactly: `x_{m-1-i} = -x_i`, `w_{m-1-i} = w_i`.

use super::real::Real;

/// Quadrature rule on `[-1, 1]` with `m` nodes; exact on polynomials of
/// degree `<= 2m - 1`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<R: Real> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
}

/// Legendre `P_m` and `P'_m` by the three-term recurrence.
fn legendre_with_derivative<R: Real>(m: usize, x: &R) -> (R, R) {
    let mut p_prev = R::one();
    let mut p = x.clone();
    for k in 1..m {
        let kf = R::from_i64(k as i64);
        let a = R::from_i64(2 * k as i64 + 1).mul(x).mul(&p);
        let next = a.sub(&kf.mul(&p_prev)).div(&R::from_i64(k as i64 + 1));
        p_prev = p;
        p = next;
    }
    // P'_m = m (x P_m - P_{m-1}) / (x^2 - 1).
    let mf = R::from_i64(m as i64);
    let num = mf.mul(&x.mul(&p).sub(&p_prev));
    let den = x.mul(x).sub(&R::one());
    (p.clone(), num.div(&den))
}

impl<R: Real> GaussLegendre<R> {
    pub fn new(m: usize) -> Self {
        assert!(m >= 2);
        let mut nodes = vec![R::zero(); m];
        let mut weights = vec![R::zero(); m];
        let tol = R::from_f64(8.0 * R::eps());
        for i in 0..m / 2 {
            // Chebyshev-like initial guess for the i-th positive-side root.
            let guess =
                (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut x = R::from_f64(guess);
            for _ in 0..90 {
                let (p, dp) = legendre_with_derivative(m, &x);
                let delta = p.div(&dp);
                x = x.sub(&delta);
                if delta.abs().le(&tol) {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(m, &x);
            let one_minus = R::one().sub(&x.mul(&x));
            let w = R::from_f64(2.0).div(&one_minus.mul(&dp).mul(&dp));
            // Newton walks the positive roots in descending order.
            nodes[m - 1 - i] = x.clone();
            weights[m - 1 - i] = w.clone();
            nodes[i] = x.neg();
            weights[i] = w;
        }
        if m % 2 == 1 {
            let x = R::zero();
            let (_, dp) = legendre_with_derivative(m, &x);
            nodes[m / 2] = x;
            weights[m / 2] = R::from_f64(2.0).div(&dp.mul(&dp));
        }
        GaussLegendre { nodes, weights }
    }

    /// `int_a^b f` by affine pullback to `[-1, 1]`.
    pub fn integrate(&self, a: &R, b: &R, mut f: impl FnMut(&R) -> R) -> R {
        let half = R::from_f64(0.5);
        let mid = a.add(b).mul(&half);
        let rad = b.sub(a).mul(&half);
        let mut acc = R::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let at = mid.add(&rad.mul(x));
            acc = acc.add(&w.mul(&f(&at)));
        }
        acc.mul(&rad)
    }
}
