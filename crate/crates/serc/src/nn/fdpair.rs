//! Paired evaluation for accurate central differences.
//!
//! A naive central difference (f(θ+ε) − f(θ−ε)) / 2ε computed in f64 loses
//! the low bits of the numerator to cancellation: both losses carry rounding
//! noise of order ulp(loss), which after division by 2ε swamps gradient
//! components smaller than ~1e-5. `FdPair` runs the two perturbed forward
//! passes simultaneously and additionally propagates their *difference* `d`
//! through every operation using cancellation-free identities
//! (e.g. exp(a) − exp(b) = exp(b)·expm1(a−b)), so the numerator is obtained
//! with rounding error relative to the difference itself rather than to the
//! loss. The quotient d/2ε is then the mathematically exact central
//! difference up to truncation (O(ε²)) and ~1e-15 relative rounding.
//!
//! Ops on the loss path (+, −, ×, ÷, exp, ln, tanh, max, sqrt, powi, ...)
//! propagate `d` exactly; rarely-used transcendentals fall back to the naive
//! difference and are marked below.

use num_traits::{Float, FloatConst, Num, NumCast, One, ToPrimitive, Zero};

use super::matrix::Scalar;

/// One value evaluated along two perturbed parameter settings: `a` on the
/// +ε path, `b` on the −ε path, and `d` the exactly-tracked difference a−b.
#[derive(Debug, Clone, Copy, Default)]
pub struct FdPair {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl FdPair {
    /// A value identical on both paths.
    pub fn constant(v: f64) -> Self {
        FdPair { a: v, b: v, d: 0.0 }
    }

    /// The perturbed seed: +ε path at `plus`, −ε path at `minus`, with the
    /// difference supplied exactly by the caller.
    pub fn seeded(plus: f64, minus: f64, d: f64) -> Self {
        FdPair { a: plus, b: minus, d }
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        // Naive fallback: difference recomputed by subtraction. Only used by
        // ops that never occur on the loss path.
        let a = f(self.a);
        let b = f(self.b);
        FdPair { a, b, d: a - b }
    }
}

impl PartialEq for FdPair {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b
    }
}

impl PartialOrd for FdPair {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.a.partial_cmp(&other.a)
    }
}

impl std::fmt::Display for FdPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}∓{:.3e}", self.a, self.d)
    }
}

impl std::ops::Neg for FdPair {
    type Output = FdPair;
    fn neg(self) -> FdPair {
        FdPair {
            a: -self.a,
            b: -self.b,
            d: -self.d,
        }
    }
}

impl std::ops::Add for FdPair {
    type Output = FdPair;
    fn add(self, o: FdPair) -> FdPair {
        FdPair {
            a: self.a + o.a,
            b: self.b + o.b,
            d: self.d + o.d,
        }
    }
}

impl std::ops::Sub for FdPair {
    type Output = FdPair;
    fn sub(self, o: FdPair) -> FdPair {
        FdPair {
            a: self.a - o.a,
            b: self.b - o.b,
            d: self.d - o.d,
        }
    }
}

impl std::ops::Mul for FdPair {
    type Output = FdPair;
    fn mul(self, o: FdPair) -> FdPair {
        // a1·a2 − b1·b2 = d1·b2 + a1·d2
        FdPair {
            a: self.a * o.a,
            b: self.b * o.b,
            d: self.d * o.b + self.a * o.d,
        }
    }
}

impl std::ops::Div for FdPair {
    type Output = FdPair;
    fn div(self, o: FdPair) -> FdPair {
        // a1/a2 − b1/b2 = (d1·b2 − b1·d2) / (a2·b2)
        FdPair {
            a: self.a / o.a,
            b: self.b / o.b,
            d: (self.d * o.b - self.b * o.d) / (o.a * o.b),
        }
    }
}

impl std::ops::Rem for FdPair {
    type Output = FdPair;
    fn rem(self, o: FdPair) -> FdPair {
        // naive (not on the loss path)
        let a = self.a % o.a;
        let b = self.b % o.b;
        FdPair { a, b, d: a - b }
    }
}

impl std::ops::AddAssign for FdPair {
    fn add_assign(&mut self, o: FdPair) {
        *self = *self + o;
    }
}
impl std::ops::SubAssign for FdPair {
    fn sub_assign(&mut self, o: FdPair) {
        *self = *self - o;
    }
}
impl std::ops::MulAssign for FdPair {
    fn mul_assign(&mut self, o: FdPair) {
        *self = *self * o;
    }
}
impl std::ops::DivAssign for FdPair {
    fn div_assign(&mut self, o: FdPair) {
        *self = *self / o;
    }
}
impl std::ops::RemAssign for FdPair {
    fn rem_assign(&mut self, o: FdPair) {
        *self = *self % o;
    }
}

impl Zero for FdPair {
    fn zero() -> Self {
        FdPair::constant(0.0)
    }
    fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }
}

impl One for FdPair {
    fn one() -> Self {
        FdPair::constant(1.0)
    }
}

impl Num for FdPair {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(FdPair::constant)
    }
}

impl ToPrimitive for FdPair {
    fn to_i64(&self) -> Option<i64> {
        self.a.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.a.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.a)
    }
}

impl NumCast for FdPair {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        n.to_f64().map(FdPair::constant)
    }
}

impl Float for FdPair {
    fn nan() -> Self {
        FdPair::constant(f64::NAN)
    }
    fn infinity() -> Self {
        FdPair::constant(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        FdPair::constant(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        FdPair::constant(-0.0)
    }
    fn min_value() -> Self {
        FdPair::constant(f64::MIN)
    }
    fn min_positive_value() -> Self {
        FdPair::constant(f64::MIN_POSITIVE)
    }
    fn max_value() -> Self {
        FdPair::constant(f64::MAX)
    }
    fn is_nan(self) -> bool {
        self.a.is_nan() || self.b.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.a.is_infinite() || self.b.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.d.is_finite()
    }
    fn is_normal(self) -> bool {
        self.a.is_normal()
    }
    fn classify(self) -> std::num::FpCategory {
        self.a.classify()
    }
    fn floor(self) -> Self {
        self.map(f64::floor)
    }
    fn ceil(self) -> Self {
        self.map(f64::ceil)
    }
    fn round(self) -> Self {
        self.map(f64::round)
    }
    fn trunc(self) -> Self {
        self.map(f64::trunc)
    }
    fn fract(self) -> Self {
        self.map(f64::fract)
    }
    fn abs(self) -> Self {
        // |a| − |b| equals ±d when signs agree; the straddling case is the
        // exact small difference |a| − |b| with a,b near zero.
        let a = self.a.abs();
        let b = self.b.abs();
        let d = if self.a >= 0.0 && self.b >= 0.0 {
            self.d
        } else if self.a <= 0.0 && self.b <= 0.0 {
            -self.d
        } else {
            a - b
        };
        FdPair { a, b, d }
    }
    fn signum(self) -> Self {
        self.map(f64::signum)
    }
    fn is_sign_positive(self) -> bool {
        self.a.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.a.is_sign_negative()
    }
    fn mul_add(self, m: Self, add: Self) -> Self {
        self * m + add
    }
    fn recip(self) -> Self {
        FdPair::one() / self
    }
    fn powi(self, n: i32) -> Self {
        // aⁿ − bⁿ = d · Σ_{k} a^k b^{n−1−k}
        if n == 0 {
            return FdPair::one();
        }
        if n < 0 {
            return FdPair::one() / self.powi(-n);
        }
        let mut geom = 0.0;
        for k in 0..n {
            geom += self.a.powi(k) * self.b.powi(n - 1 - k);
        }
        FdPair {
            a: self.a.powi(n),
            b: self.b.powi(n),
            d: self.d * geom,
        }
    }
    fn powf(self, e: Self) -> Self {
        // naive (not on the loss path)
        let a = self.a.powf(e.a);
        let b = self.b.powf(e.b);
        FdPair { a, b, d: a - b }
    }
    fn sqrt(self) -> Self {
        // √a − √b = d / (√a + √b)
        let a = self.a.sqrt();
        let b = self.b.sqrt();
        let d = if a + b > 0.0 { self.d / (a + b) } else { 0.0 };
        FdPair { a, b, d }
    }
    fn exp(self) -> Self {
        // exp(a) − exp(b) = exp(b)·expm1(d)
        FdPair {
            a: self.a.exp(),
            b: self.b.exp(),
            d: self.b.exp() * self.d.exp_m1(),
        }
    }
    fn exp2(self) -> Self {
        self.map(f64::exp2)
    }
    fn ln(self) -> Self {
        // ln a − ln b = ln(1 + d/b)
        FdPair {
            a: self.a.ln(),
            b: self.b.ln(),
            d: (self.d / self.b).ln_1p(),
        }
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / FdPair::constant(std::f64::consts::LN_2)
    }
    fn log10(self) -> Self {
        self.ln() / FdPair::constant(std::f64::consts::LN_10)
    }
    fn max(self, o: Self) -> Self {
        if self.a >= o.a && self.b >= o.b {
            self
        } else if o.a >= self.a && o.b >= self.b {
            o
        } else {
            // The two paths pick different arguments. Both operands of the
            // subtraction are exact path values, so the single rounded
            // subtraction is accurate relative to the difference.
            let a = self.a.max(o.a);
            let b = self.b.max(o.b);
            FdPair { a, b, d: a - b }
        }
    }
    fn min(self, o: Self) -> Self {
        if self.a <= o.a && self.b <= o.b {
            self
        } else if o.a <= self.a && o.b <= self.b {
            o
        } else {
            let a = self.a.min(o.a);
            let b = self.b.min(o.b);
            FdPair { a, b, d: a - b }
        }
    }
    fn abs_sub(self, o: Self) -> Self {
        (self - o).max(FdPair::zero())
    }
    fn cbrt(self) -> Self {
        self.map(f64::cbrt)
    }
    fn hypot(self, o: Self) -> Self {
        (self * self + o * o).sqrt()
    }
    fn sin(self) -> Self {
        // sin a − sin b = 2·cos((a+b)/2)·sin(d/2)
        FdPair {
            a: self.a.sin(),
            b: self.b.sin(),
            d: 2.0 * ((self.a + self.b) / 2.0).cos() * (self.d / 2.0).sin(),
        }
    }
    fn cos(self) -> Self {
        // cos a − cos b = −2·sin((a+b)/2)·sin(d/2)
        FdPair {
            a: self.a.cos(),
            b: self.b.cos(),
            d: -2.0 * ((self.a + self.b) / 2.0).sin() * (self.d / 2.0).sin(),
        }
    }
    fn tan(self) -> Self {
        self.sin() / self.cos()
    }
    fn asin(self) -> Self {
        self.map(f64::asin)
    }
    fn acos(self) -> Self {
        self.map(f64::acos)
    }
    fn atan(self) -> Self {
        self.map(f64::atan)
    }
    fn atan2(self, o: Self) -> Self {
        let a = self.a.atan2(o.a);
        let b = self.b.atan2(o.b);
        FdPair { a, b, d: a - b }
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        // expm1(a) − expm1(b) = exp(b)·expm1(d)
        FdPair {
            a: self.a.exp_m1(),
            b: self.b.exp_m1(),
            d: self.b.exp() * self.d.exp_m1(),
        }
    }
    fn ln_1p(self) -> Self {
        // ln(1+a) − ln(1+b) = ln(1 + d/(1+b))
        FdPair {
            a: self.a.ln_1p(),
            b: self.b.ln_1p(),
            d: (self.d / (1.0 + self.b)).ln_1p(),
        }
    }
    fn sinh(self) -> Self {
        // sinh a − sinh b = 2·cosh((a+b)/2)·sinh(d/2)
        FdPair {
            a: self.a.sinh(),
            b: self.b.sinh(),
            d: 2.0 * ((self.a + self.b) / 2.0).cosh() * (self.d / 2.0).sinh(),
        }
    }
    fn cosh(self) -> Self {
        // cosh a − cosh b = 2·sinh((a+b)/2)·sinh(d/2)
        FdPair {
            a: self.a.cosh(),
            b: self.b.cosh(),
            d: 2.0 * ((self.a + self.b) / 2.0).sinh() * (self.d / 2.0).sinh(),
        }
    }
    fn tanh(self) -> Self {
        // tanh a − tanh b = sinh(d) / (cosh a · cosh b); computed via the
        // bounded form to avoid cosh overflow for |x| > ~350.
        let denom = self.a.cosh() * self.b.cosh();
        let d = if denom.is_finite() {
            self.d.sinh() / denom
        } else {
            0.0 // both paths saturated; the true difference underflows
        };
        FdPair {
            a: self.a.tanh(),
            b: self.b.tanh(),
            d,
        }
    }
    fn asinh(self) -> Self {
        self.map(f64::asinh)
    }
    fn acosh(self) -> Self {
        self.map(f64::acosh)
    }
    fn atanh(self) -> Self {
        self.map(f64::atanh)
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.a.integer_decode()
    }
}

impl FloatConst for FdPair {
    fn E() -> Self {
        FdPair::constant(std::f64::consts::E)
    }
    fn FRAC_1_PI() -> Self {
        FdPair::constant(std::f64::consts::FRAC_1_PI)
    }
    fn FRAC_1_SQRT_2() -> Self {
        FdPair::constant(std::f64::consts::FRAC_1_SQRT_2)
    }
    fn FRAC_2_PI() -> Self {
        FdPair::constant(std::f64::consts::FRAC_2_PI)
    }
    fn FRAC_2_SQRT_PI() -> Self {
        FdPair::constant(std::f64::consts::FRAC_2_SQRT_PI)
    }
    fn FRAC_PI_2() -> Self {
        FdPair::constant(std::f64::consts::FRAC_PI_2)
    }
    fn FRAC_PI_3() -> Self {
        FdPair::constant(std::f64::consts::FRAC_PI_3)
    }
    fn FRAC_PI_4() -> Self {
        FdPair::constant(std::f64::consts::FRAC_PI_4)
    }
    fn FRAC_PI_6() -> Self {
        FdPair::constant(std::f64::consts::FRAC_PI_6)
    }
    fn FRAC_PI_8() -> Self {
        FdPair::constant(std::f64::consts::FRAC_PI_8)
    }
    fn LN_10() -> Self {
        FdPair::constant(std::f64::consts::LN_10)
    }
    fn LN_2() -> Self {
        FdPair::constant(std::f64::consts::LN_2)
    }
    fn LOG10_E() -> Self {
        FdPair::constant(std::f64::consts::LOG10_E)
    }
    fn LOG2_E() -> Self {
        FdPair::constant(std::f64::consts::LOG2_E)
    }
    fn PI() -> Self {
        FdPair::constant(std::f64::consts::PI)
    }
    fn SQRT_2() -> Self {
        FdPair::constant(std::f64::consts::SQRT_2)
    }
}

impl std::iter::Sum for FdPair {
    fn sum<I: Iterator<Item = FdPair>>(iter: I) -> FdPair {
        iter.fold(FdPair::zero(), |acc, v| acc + v)
    }
}

impl Scalar for FdPair {
    fn from_f64(v: f64) -> Self {
        FdPair::constant(v)
    }
    fn as_f64(self) -> f64 {
        self.a
    }
    fn from_f32(v: f32) -> Self {
        FdPair::constant(v as f64)
    }
    fn as_f32(self) -> f32 {
        self.a as f32
    }
}
