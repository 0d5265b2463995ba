//! Scalar abstraction for the quadrature engine.
//!
//! The oscillatory Hankel integrals behind the kernel profiles are evaluated
//! by one generic algorithm instantiated at two precisions: plain `f64` for
//! production, and a 768-bit float for validation runs where `f64`
//! cancellation (condition number up to `e^{rho^2/4}` for the Gaussian
//! endpoint `s = 1`) would swamp the quadrature error being measured.

use astro_float::{BigFloat, Consts, RoundingMode};
use std::cell::RefCell;

/// Operations the quadrature engine needs from a scalar type.
///
/// Methods take references so arbitrary-precision types avoid copies; `f64`
/// implements everything by value underneath.
pub trait Real: Clone + std::fmt::Debug {
    /// Human-readable backend name for reports.
    const NAME: &'static str;

    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn pi() -> Self;
    fn lt(&self, o: &Self) -> bool;

    /// Unit roundoff of the backend, used for series termination.
    fn eps() -> f64;

    /// Largest Bessel argument for which the power series is accurate at
    /// this precision; beyond it the `f64` backend switches to asymptotics,
    /// while wide backends never need to.
    fn bessel_series_threshold() -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn from_i64(v: i64) -> Self {
        Self::from_f64(v as f64)
    }

    fn le(&self, o: &Self) -> bool {
        !o.lt(self)
    }

    /// Integer power by binary exponentiation.
    fn powi(&self, k: i32) -> Self {
        if k < 0 {
            return Self::one().div(&self.powi(-k));
        }
        let mut base = self.clone();
        let mut k = k as u32;
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    /// `self^e` for `self > 0`.
    fn powf(&self, e: &Self) -> Self {
        self.ln().mul(e).exp()
    }
}

impl Real for f64 {
    const NAME: &'static str = "f64";

    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn eps() -> f64 {
        f64::EPSILON
    }
    fn bessel_series_threshold() -> f64 {
        12.0
    }
    fn powf(&self, e: &Self) -> Self {
        f64::powf(*self, *e)
    }
}

/// Working precision of the wide backend, in bits. 768 bits (~231 decimal
/// digits) leaves ample headroom over the worst cancellation in scope
/// (`e^{rho^2/4}` at `rho = 20`, ~44 digits) plus Bessel-series growth.
pub const HP_PRECISION_BITS: usize = 768;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> =
        RefCell::new(Consts::new().expect("constants cache"));
}

/// 768-bit validation scalar backed by `astro-float`.
#[derive(Clone, Debug)]
pub struct Hp(pub BigFloat);

impl Real for Hp {
    const NAME: &'static str = "hp768";

    fn from_f64(v: f64) -> Self {
        Hp(BigFloat::from_f64(v, HP_PRECISION_BITS))
    }

    fn to_f64(&self) -> f64 {
        // Round-trip through the decimal formatter; exact enough (the
        // formatter emits full precision) and only used on final outputs.
        let s = format!("{}", self.0);
        s.parse::<f64>().unwrap_or(f64::NAN)
    }

    fn add(&self, o: &Self) -> Self {
        Hp(self.0.add(&o.0, HP_PRECISION_BITS, RM))
    }
    fn sub(&self, o: &Self) -> Self {
        Hp(self.0.sub(&o.0, HP_PRECISION_BITS, RM))
    }
    fn mul(&self, o: &Self) -> Self {
        Hp(self.0.mul(&o.0, HP_PRECISION_BITS, RM))
    }
    fn div(&self, o: &Self) -> Self {
        Hp(self.0.div(&o.0, HP_PRECISION_BITS, RM))
    }
    fn neg(&self) -> Self {
        Hp(self.0.neg())
    }
    fn abs(&self) -> Self {
        Hp(self.0.abs())
    }
    fn sqrt(&self) -> Self {
        Hp(self.0.sqrt(HP_PRECISION_BITS, RM))
    }
    fn exp(&self) -> Self {
        CONSTS.with(|cc| Hp(self.0.exp(HP_PRECISION_BITS, RM, &mut cc.borrow_mut())))
    }
    fn ln(&self) -> Self {
        CONSTS.with(|cc| Hp(self.0.ln(HP_PRECISION_BITS, RM, &mut cc.borrow_mut())))
    }
    fn sin(&self) -> Self {
        CONSTS.with(|cc| Hp(self.0.sin(HP_PRECISION_BITS, RM, &mut cc.borrow_mut())))
    }
    fn cos(&self) -> Self {
        CONSTS.with(|cc| Hp(self.0.cos(HP_PRECISION_BITS, RM, &mut cc.borrow_mut())))
    }
    fn pi() -> Self {
        CONSTS.with(|cc| Hp(cc.borrow_mut().pi(HP_PRECISION_BITS, RM)))
    }
    fn lt(&self, o: &Self) -> bool {
        self.0 < o.0
    }
    fn eps() -> f64 {
        // 2^-767; far beyond f64 range as an exact value, returned as the
        // nearest representable guide for termination thresholds.
        2.0f64.powi(-767).max(f64::MIN_POSITIVE)
    }
    fn bessel_series_threshold() -> f64 {
        f64::INFINITY
    }
}
