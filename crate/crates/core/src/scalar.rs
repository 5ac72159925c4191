//! Numeric backends for weights and map values.
//!
//! Every computation runs in one mode: exact rationals ([`Rational`]) or
//! binary floats (`f64`). Float comparisons use an absolute tolerance; exact
//! comparisons ignore it.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

/// Arbitrary-precision rational number used in exact mode.
pub type Rational = BigRational;

/// Default absolute tolerance for float-mode equality.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScalarMode {
    Exact,
    Float,
}

impl ScalarMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalarMode::Exact => "exact",
            ScalarMode::Float => "float",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "exact" => Some(ScalarMode::Exact),
            "float" => Some(ScalarMode::Float),
            _ => None,
        }
    }
}

impl std::fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A weight or map value.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
    + Sum
{
    const MODE: ScalarMode;

    fn from_i64(value: i64) -> Self;

    /// `num / den`; `den` must be non-zero.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Converts a float. Exact mode takes the exact binary value of `value`.
    fn from_f64(value: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Parses a decimal literal (optionally with exponent) or `p/q`.
    fn parse_literal(text: &str) -> Option<Self>;

    /// Canonical text form; `parse_literal(format_literal(x)) == x` always.
    fn format_literal(&self) -> String;

    fn div_usize(&self, k: usize) -> Self;

    /// Draws a value in `[lo, hi]`.
    fn sample<R: Rng + ?Sized>(rng: &mut R, lo: &Self, hi: &Self) -> Self;

    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    /// `self < other` by more than the tolerance.
    fn definitely_lt(&self, other: &Self, tol: f64) -> bool;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Float;

    fn from_i64(value: i64) -> Self {
        value as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(value: f64) -> Option<Self> {
        value.is_finite().then_some(value)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_literal(text: &str) -> Option<Self> {
        if let Some((p, q)) = text.split_once('/') {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            let v = p / q;
            return v.is_finite().then_some(v);
        }
        let v: f64 = text.trim().parse().ok()?;
        v.is_finite().then_some(v)
    }

    fn format_literal(&self) -> String {
        // `Display` for f64 is the shortest string that round-trips.
        format!("{self}")
    }

    fn div_usize(&self, k: usize) -> Self {
        self / k as f64
    }

    fn sample<R: Rng + ?Sized>(rng: &mut R, lo: &Self, hi: &Self) -> Self {
        if lo >= hi {
            return *lo;
        }
        rng.random_range(*lo..=*hi)
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn definitely_lt(&self, other: &Self, tol: f64) -> bool {
        other - self > tol
    }
}

impl Scalar for Rational {
    const MODE: ScalarMode = ScalarMode::Exact;

    fn from_i64(value: i64) -> Self {
        Rational::from_integer(BigInt::from(value))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(value: f64) -> Option<Self> {
        Rational::from_float(value)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_literal(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((p, q)) = text.split_once('/') {
            let p = parse_exact_decimal(p.trim())?;
            let q = parse_exact_decimal(q.trim())?;
            if q.is_zero() {
                return None;
            }
            return Some(p / q);
        }
        parse_exact_decimal(text)
    }

    fn format_literal(&self) -> String {
        format_exact(self)
    }

    fn div_usize(&self, k: usize) -> Self {
        self / Rational::from_integer(BigInt::from(k))
    }

    fn sample<R: Rng + ?Sized>(rng: &mut R, lo: &Self, hi: &Self) -> Self {
        if lo >= hi {
            return lo.clone();
        }
        // Small denominators keep exact arithmetic cheap while still
        // producing non-integer weights.
        for _ in 0..16 {
            let den: i64 = rng.random_range(1..=10);
            let d = Rational::from_integer(BigInt::from(den));
            let k_lo = (lo * &d).ceil().to_integer();
            let k_hi = (hi * &d).floor().to_integer();
            if k_lo > k_hi {
                continue;
            }
            let (Some(a), Some(b)) = (k_lo.to_i64(), k_hi.to_i64()) else {
                break;
            };
            let k = rng.random_range(a..=b);
            return Rational::new(BigInt::from(k), BigInt::from(den));
        }
        lo.clone()
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn definitely_lt(&self, other: &Self, _tol: f64) -> bool {
        self < other
    }
}

/// Parses `[-+]digits[.digits][e[-+]digits]` exactly.
fn parse_exact_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = all_digits.parse().ok()?;
    let scale = exponent as i64 - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Finite decimal when the reduced denominator is `2^a 5^b`, else `p/q`.
fn format_exact(value: &Rational) -> String {
    let numer = value.numer();
    let denom = value.denom();
    if denom.is_one() {
        return numer.to_string();
    }
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut rest = denom.clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    while rest.is_even() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{numer}/{denom}");
    }
    let digits = twos.max(fives);
    let scaled = numer * num_traits::pow(BigInt::from(10), digits) / denom;
    let negative = scaled.is_negative();
    let mut text = scaled.abs().to_string();
    if text.len() <= digits {
        text = format!("{}{}", "0".repeat(digits + 1 - text.len()), text);
    }
    let split = text.len() - digits;
    let out = format!("{}.{}", &text[..split], &text[split..]);
    if negative {
        format!("-{out}")
    } else {
        out
    }
}
