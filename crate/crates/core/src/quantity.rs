//! Exact rational quantities tagged with their physical unit.
//!
//! Energies (J), power draws (J/s) and durations (s) are all rationals; no
//! operation on them ever rounds. The unit is a zero-sized marker type so that
//! `Power * Duration = Energy` is checked at compile time.

use std::fmt;
use std::iter::Sum;
use std::marker::PhantomData;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Maximum number of fractional digits accepted in a decimal literal.
pub const MAX_FRACTION_DIGITS: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("decimal `{0}` has more than {MAX_FRACTION_DIGITS} fractional digits")]
    TooPrecise(String),
}

/// Parses `"n"`, `"n/d"` or a decimal such as `"0.125"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, RationalParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let invalid = || RationalParseError::Invalid(s.to_string());
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());

    let value = if let Some((num, den)) = body.split_once('/') {
        let (num, den) = (num.trim(), den.trim());
        if !digits(num) || !digits(den) {
            return Err(invalid());
        }
        let den: BigInt = den.parse().map_err(|_| invalid())?;
        if den.is_zero() {
            return Err(RationalParseError::ZeroDenominator(s.to_string()));
        }
        BigRational::new(num.parse().map_err(|_| invalid())?, den)
    } else if let Some((int, frac)) = body.split_once('.') {
        if !digits(int) || !digits(frac) {
            return Err(invalid());
        }
        if frac.len() > MAX_FRACTION_DIGITS {
            return Err(RationalParseError::TooPrecise(s.to_string()));
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let whole: BigInt = format!("{int}{frac}").parse().map_err(|_| invalid())?;
        BigRational::new(whole, scale)
    } else {
        if !digits(body) {
            return Err(invalid());
        }
        BigRational::from_integer(body.parse().map_err(|_| invalid())?)
    };
    Ok(if negative { -value } else { value })
}

/// Renders a rational as `"n/d"`, always including the denominator.
pub fn rational_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Renders a rational as a decimal rounded half-away-from-zero to `places` digits.
pub fn rational_to_decimal(r: &BigRational, places: usize) -> String {
    let scale = BigInt::from(10u32).pow(places as u32);
    let scaled = r * BigRational::from_integer(scale.clone());
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = rem.abs() * 2u32;
    let mut q = q;
    if twice >= *scaled.denom() {
        q += if scaled.is_negative() { -1 } else { 1 };
    }
    let negative = q.is_negative();
    let digits = q.abs().to_string();
    let digits = if digits.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (int, frac) = digits.split_at(digits.len() - places);
    let sign = if negative { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

pub trait Unit: Copy + Default + fmt::Debug + Eq + Ord + std::hash::Hash {
    const SYMBOL: &'static str;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Joule;
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JoulePerSecond;
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Second;

impl Unit for Joule {
    const SYMBOL: &'static str = "J";
}
impl Unit for JoulePerSecond {
    const SYMBOL: &'static str = "J/s";
}
impl Unit for Second {
    const SYMBOL: &'static str = "s";
}

/// An exact rational with a unit tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quantity<U: Unit> {
    value: BigRational,
    unit: PhantomData<U>,
}

pub type Energy = Quantity<Joule>;
pub type Power = Quantity<JoulePerSecond>;
pub type Duration = Quantity<Second>;

impl<U: Unit> Quantity<U> {
    pub fn new(value: BigRational) -> Self {
        Quantity { value, unit: PhantomData }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::new(BigRational::from_integer(n.into()))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Self::new(BigRational::new(numer.into(), denom.into()))
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero())
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.value.is_negative()
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        Self::new(&self.value * factor)
    }

    /// Exact `"n/d"` rendering without the unit.
    pub fn to_ratio_string(&self) -> String {
        rational_to_string(&self.value)
    }

    pub fn to_decimal(&self, places: usize) -> String {
        rational_to_decimal(&self.value, places)
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_integer(&self) -> bool {
        self.value.denom().is_one()
    }
}

impl<U: Unit> Default for Quantity<U> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<U: Unit> FromStr for Quantity<U> {
    type Err = RationalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rational(s).map(Self::new)
    }
}

impl<U: Unit> fmt::Display for Quantity<U> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, U::SYMBOL)
    }
}

impl<U: Unit> Add for Quantity<U> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value)
    }
}

impl<'a, U: Unit> Add<&'a Quantity<U>> for &'a Quantity<U> {
    type Output = Quantity<U>;
    fn add(self, rhs: &'a Quantity<U>) -> Quantity<U> {
        Quantity::new(&self.value + &rhs.value)
    }
}

impl<U: Unit> AddAssign for Quantity<U> {
    fn add_assign(&mut self, rhs: Self) {
        self.value += rhs.value;
    }
}

impl<'a, U: Unit> AddAssign<&'a Quantity<U>> for Quantity<U> {
    fn add_assign(&mut self, rhs: &'a Quantity<U>) {
        self.value += &rhs.value;
    }
}

impl<U: Unit> Sub for Quantity<U> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value)
    }
}

impl<U: Unit> Sum for Quantity<U> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, q| acc + q)
    }
}

impl<'a, U: Unit> Sum<&'a Quantity<U>> for Quantity<U> {
    fn sum<I: Iterator<Item = &'a Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |mut acc, q| {
            acc += q;
            acc
        })
    }
}

impl Mul<&Duration> for &Power {
    type Output = Energy;
    fn mul(self, rhs: &Duration) -> Energy {
        Energy::new(&self.value * &rhs.value)
    }
}

impl Mul<Duration> for Power {
    type Output = Energy;
    fn mul(self, rhs: Duration) -> Energy {
        Energy::new(self.value * rhs.value)
    }
}
