//! Fixed-point decimal arithmetic with 18 fractional digits.
//!
//! All balances, prices and rates in the protocol state are `Fixed` values:
//! an `i128` mantissa interpreted as `mantissa * 10^-18`. Multiplication and
//! division go through exact 256-bit intermediates, so results are the true
//! mathematical value rounded toward negative infinity (`*_down`) or positive
//! infinity (`*_up`). No floating point touches ledger state.
//!
//! Overflow is a programming error, not a market condition; arithmetic panics
//! if a result does not fit the mantissa. Scenario validation keeps supplies
//! far below the point where a product of two in-range values can overflow.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Number of fractional decimal digits.
pub const DECIMALS: u32 = 18;

/// Mantissa scale, `10^18`.
pub const SCALE: i128 = 1_000_000_000_000_000_000;

const SCALE_U: u128 = SCALE as u128;

/// Signed fixed-point decimal, mantissa scale `10^-18`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed(i128);

/// Monetary amount (base or quote units). Alias kept for signature clarity.
pub type Amount = Fixed;

/// Price in quote units per one base unit.
pub type Price = Fixed;

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const ONE: Fixed = Fixed(SCALE);
    pub const MAX: Fixed = Fixed(i128::MAX);

    /// Builds a value from a raw `10^-18`-scaled mantissa.
    pub const fn from_raw(raw: i128) -> Fixed {
        Fixed(raw)
    }

    /// Builds a whole-number value.
    pub const fn from_int(v: i64) -> Fixed {
        Fixed(v as i128 * SCALE)
    }

    /// `numer / denom` as a fixed-point value, rounded down.
    pub fn ratio(numer: i64, denom: i64) -> Fixed {
        assert!(denom > 0, "ratio denominator must be positive");
        Fixed::from_int(numer).div_down(Fixed::from_int(denom))
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub const fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub const fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn abs(self) -> Fixed {
        Fixed(self.0.checked_abs().expect("fixed-point overflow in abs"))
    }

    pub fn min(self, other: Fixed) -> Fixed {
        Fixed(self.0.min(other.0))
    }

    pub fn max(self, other: Fixed) -> Fixed {
        Fixed(self.0.max(other.0))
    }

    pub fn clamp(self, lo: Fixed, hi: Fixed) -> Fixed {
        debug_assert!(lo <= hi);
        self.max(lo).min(hi)
    }

    pub fn signum(self) -> i32 {
        match self.0.cmp(&0) {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        }
    }

    /// Exact `floor(self * rhs)`.
    pub fn mul_down(self, rhs: Fixed) -> Fixed {
        Fixed(mul_div(self.0, rhs.0, SCALE, Round::Down))
    }

    /// Exact `ceil(self * rhs)`.
    pub fn mul_up(self, rhs: Fixed) -> Fixed {
        Fixed(mul_div(self.0, rhs.0, SCALE, Round::Up))
    }

    /// Exact `floor(self / rhs)`; `rhs` must be positive.
    pub fn div_down(self, rhs: Fixed) -> Fixed {
        assert!(rhs.0 > 0, "fixed-point division by non-positive value");
        Fixed(mul_div(self.0, SCALE, rhs.0, Round::Down))
    }

    /// Exact `ceil(self / rhs)`; `rhs` must be positive.
    pub fn div_up(self, rhs: Fixed) -> Fixed {
        assert!(rhs.0 > 0, "fixed-point division by non-positive value");
        Fixed(mul_div(self.0, SCALE, rhs.0, Round::Up))
    }

    /// Multiplies by a small integer.
    pub fn mul_int(self, n: i64) -> Fixed {
        Fixed(
            self.0
                .checked_mul(n as i128)
                .expect("fixed-point overflow in mul_int"),
        )
    }

    /// Largest multiple of `grid` that is `<= self`. `grid` must be positive.
    pub fn floor_to(self, grid: Fixed) -> Fixed {
        assert!(grid.0 > 0, "grid must be positive");
        Fixed(self.0.div_euclid(grid.0) * grid.0)
    }

    /// Whether the value sits exactly on a multiple of `grid`.
    pub fn is_multiple_of(self, grid: Fixed) -> bool {
        grid.0 > 0 && self.0.rem_euclid(grid.0) == 0
    }

    /// Compares `a * b` against `c * d` exactly (256-bit products).
    pub fn cmp_products(a: Fixed, b: Fixed, c: Fixed, d: Fixed) -> Ordering {
        let sign_ab = product_sign(a.0, b.0);
        let sign_cd = product_sign(c.0, d.0);
        if sign_ab != sign_cd {
            return sign_ab.cmp(&sign_cd);
        }
        let mag_ab = mul_u128(a.0.unsigned_abs(), b.0.unsigned_abs());
        let mag_cd = mul_u128(c.0.unsigned_abs(), d.0.unsigned_abs());
        if sign_ab >= 0 {
            mag_ab.cmp(&mag_cd)
        } else {
            mag_cd.cmp(&mag_ab)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    /// Nearest fixed-point value to an `f64`. Intended for analytics and
    /// config convenience, not for exact money: the conversion inherits the
    /// float's precision.
    pub fn from_f64(v: f64) -> Fixed {
        assert!(v.is_finite(), "cannot convert non-finite float");
        let scaled = v * SCALE as f64;
        assert!(
            scaled.abs() < i128::MAX as f64,
            "float out of fixed-point range"
        );
        Fixed(scaled.round() as i128)
    }

    pub fn checked_add(self, rhs: Fixed) -> Option<Fixed> {
        self.0.checked_add(rhs.0).map(Fixed)
    }

    pub fn checked_sub(self, rhs: Fixed) -> Option<Fixed> {
        self.0.checked_sub(rhs.0).map(Fixed)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Round {
    Down,
    Up,
}

fn product_sign(a: i128, b: i128) -> i32 {
    if a == 0 || b == 0 {
        0
    } else if (a < 0) == (b < 0) {
        1
    } else {
        -1
    }
}

/// `round(a * b / d)` with the requested rounding mode, exact via a 256-bit
/// intermediate. `d` must be positive. Panics when the result overflows i128.
fn mul_div(a: i128, b: i128, d: i128, round: Round) -> i128 {
    debug_assert!(d > 0);
    let negative = product_sign(a, b) < 0;
    let (hi, lo) = mul_u128(a.unsigned_abs(), b.unsigned_abs());
    let (q, r) = div_rem_wide(hi, lo, d as u128);
    // Round-down means toward -inf: bump magnitude for negative remainders.
    let bump = match (negative, round) {
        (false, Round::Up) | (true, Round::Down) => r != 0,
        _ => false,
    };
    let mag = if bump {
        q.checked_add(1).expect("fixed-point overflow")
    } else {
        q
    };
    if negative {
        assert!(mag <= i128::MIN.unsigned_abs(), "fixed-point overflow");
        (mag as i128).wrapping_neg()
    } else {
        assert!(mag <= i128::MAX as u128, "fixed-point overflow");
        mag as i128
    }
}

/// Full 256-bit product of two u128 values, as (hi, lo).
fn mul_u128(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = (1u128 << 64) - 1;
    let (a_hi, a_lo) = (a >> 64, a & MASK);
    let (b_hi, b_lo) = (b >> 64, b & MASK);

    let ll = a_lo * b_lo;
    let lh = a_lo * b_hi;
    let hl = a_hi * b_lo;
    let hh = a_hi * b_hi;

    let mid = (ll >> 64) + (lh & MASK) + (hl & MASK);
    let lo = (mid << 64) | (ll & MASK);
    let hi = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (hi, lo)
}

/// Divides the 256-bit value (hi, lo) by `d`, returning (quotient, remainder).
/// Panics if the quotient does not fit in u128.
fn div_rem_wide(hi: u128, lo: u128, d: u128) -> (u128, u128) {
    assert!(d > 0, "division by zero");
    if hi == 0 {
        return (lo / d, lo % d);
    }
    assert!(hi < d, "fixed-point overflow");
    if d < (1u128 << 64) {
        // Schoolbook division over 64-bit limbs; remainder always fits.
        let limbs = [
            (lo & u64::MAX as u128),
            lo >> 64,
            hi & u64::MAX as u128,
            hi >> 64,
        ];
        let mut rem: u128 = 0;
        let mut q = [0u128; 4];
        for i in (0..4).rev() {
            let cur = (rem << 64) | limbs[i];
            q[i] = cur / d;
            rem = cur % d;
        }
        assert!(q[2] == 0 && q[3] == 0, "fixed-point overflow");
        ((q[1] << 64) | q[0], rem)
    } else {
        // Binary long division: hi is the running remainder (hi < d), then
        // the 128 bits of lo are brought down one at a time.
        let mut rem = hi;
        let mut q: u128 = 0;
        for i in (0..128).rev() {
            let carry = rem >> 127;
            rem = (rem << 1) | ((lo >> i) & 1);
            q <<= 1;
            if carry == 1 || rem >= d {
                rem = rem.wrapping_sub(d);
                q |= 1;
            }
        }
        (q, rem)
    }
}

/// 256-bit helpers for exact cross-product comparisons in batch allocation.
pub(crate) mod wide {
    /// `a * b` as (hi, lo) on raw mantissas (non-negative inputs).
    pub fn mul(a: i128, b: i128) -> (u128, u128) {
        debug_assert!(a >= 0 && b >= 0);
        super::mul_u128(a as u128, b as u128)
    }

    /// `lhs - rhs` for 256-bit pairs; lhs must be >= rhs.
    pub fn sub(lhs: (u128, u128), rhs: (u128, u128)) -> (u128, u128) {
        debug_assert!(lhs >= rhs);
        let (lo, borrow) = lhs.1.overflowing_sub(rhs.1);
        (lhs.0 - rhs.0 - borrow as u128, lo)
    }
}

impl Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0.checked_add(rhs.0).expect("fixed-point overflow"))
    }
}

impl Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0.checked_sub(rhs.0).expect("fixed-point overflow"))
    }
}

impl Neg for Fixed {
    type Output = Fixed;
    fn neg(self) -> Fixed {
        Fixed(self.0.checked_neg().expect("fixed-point overflow"))
    }
}

impl AddAssign for Fixed {
    fn add_assign(&mut self, rhs: Fixed) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fixed {
    fn sub_assign(&mut self, rhs: Fixed) {
        *self = *self - rhs;
    }
}

impl Sum for Fixed {
    fn sum<I: Iterator<Item = Fixed>>(iter: I) -> Fixed {
        iter.fold(Fixed::ZERO, |acc, v| acc + v)
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mag = self.0.unsigned_abs();
        let int = mag / SCALE_U;
        let frac = mag % SCALE_U;
        let sign = if self.0 < 0 { "-" } else { "" };
        if frac == 0 {
            write!(f, "{sign}{int}")
        } else {
            let digits = format!("{frac:018}");
            write!(f, "{sign}{int}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({self})")
    }
}

/// Parse error for decimal literals.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid decimal literal: {0}")]
pub struct ParseFixedError(pub String);

impl FromStr for Fixed {
    type Err = ParseFixedError;

    fn from_str(s: &str) -> Result<Fixed, ParseFixedError> {
        let bad = || ParseFixedError(s.to_string());
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (-1i128, rest),
            None => (1i128, s),
        };
        if body.is_empty() {
            return Err(bad());
        }
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if frac_part.len() > DECIMALS as usize {
            return Err(bad());
        }
        let int: i128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let mut frac: i128 = 0;
        if !frac_part.is_empty() {
            frac = frac_part.parse().map_err(|_| bad())?;
            frac *= 10i128.pow(DECIMALS - frac_part.len() as u32);
        }
        let raw = int
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac))
            .and_then(|v| v.checked_mul(sign))
            .ok_or_else(bad)?;
        Ok(Fixed(raw))
    }
}

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Fixed, D::Error> {
        struct FixedVisitor;

        impl Visitor<'_> for FixedVisitor {
            type Value = Fixed;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string or number")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Fixed, E> {
                v.parse().map_err(|e: ParseFixedError| E::custom(e))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Fixed, E> {
                Ok(Fixed::from_int(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Fixed, E> {
                i64::try_from(v)
                    .map(Fixed::from_int)
                    .map_err(|_| E::custom("integer out of range"))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Fixed, E> {
                if !v.is_finite() {
                    return Err(E::custom("non-finite number"));
                }
                Ok(Fixed::from_f64(v))
            }
        }

        deserializer.deserialize_any(FixedVisitor)
    }
}
