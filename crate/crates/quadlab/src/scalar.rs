//! Dual-mode scalar: 64-bit binary floating point, or an exact rational.
//!
//! Every geometric operation in this crate is written once against [`Scalar`]
//! so the fiber certification can run the same code path exactly while the
//! large sweeps run it fast. A computation must stay in one mode throughout;
//! mixing modes is a caller bug and panics.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arithmetic mode of a [`Scalar`] value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// IEEE 754 binary64.
    Approx,
    /// Arbitrary-precision rational p/q, q > 0, gcd(|p|, q) = 1.
    Exact,
}

/// Errors specific to scalar arithmetic.
#[derive(Debug, Error)]
pub enum ScalarError {
    /// Exact square root requested of a rational that is not a perfect square.
    #[error("{0} has no rational square root")]
    NotASquare(String),
    /// Square root of a negative value.
    #[error("square root of negative value {0}")]
    NegativeSqrt(String),
    /// String did not parse as a number in the requested mode.
    #[error("cannot parse {input:?} as a {mode:?} scalar")]
    Parse { input: String, mode: Mode },
}

/// A number carried either as `f64` or as an exact `BigRational`.
#[derive(Clone, Debug)]
pub enum Scalar {
    Approx(f64),
    Exact(BigRational),
}

impl Scalar {
    pub fn approx(v: f64) -> Self {
        Scalar::Approx(v)
    }

    pub fn exact_int(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact rational n/d. Panics if `d == 0`.
    pub fn exact_ratio(n: i64, d: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar::Exact(r)
    }

    pub fn zero(mode: Mode) -> Self {
        match mode {
            Mode::Approx => Scalar::Approx(0.0),
            Mode::Exact => Scalar::Exact(BigRational::zero()),
        }
    }

    pub fn one(mode: Mode) -> Self {
        match mode {
            Mode::Approx => Scalar::Approx(1.0),
            Mode::Exact => Scalar::exact_int(1).into_rational_unchecked(),
        }
    }

    fn into_rational_unchecked(self) -> Self {
        self
    }

    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Approx(_) => Mode::Approx,
            Scalar::Exact(_) => Mode::Exact,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.mode() == Mode::Exact
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Approx(v) => *v == 0.0,
            Scalar::Exact(r) => r.is_zero(),
        }
    }

    /// Lossy view as `f64` (exact values are rounded).
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Approx(v) => *v,
            Scalar::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Borrow the rational payload; `None` in approximate mode.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx(_) => None,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Approx(v) => Scalar::Approx(v.abs()),
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
        }
    }

    /// -1, 0, or +1.
    pub fn signum(&self) -> i8 {
        match self {
            Scalar::Approx(v) => {
                if *v > 0.0 {
                    1
                } else if *v < 0.0 {
                    -1
                } else {
                    0
                }
            }
            Scalar::Exact(r) => {
                if r.is_positive() {
                    1
                } else if r.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    /// Square root. Exact mode succeeds only for perfect rational squares.
    pub fn sqrt(&self) -> Result<Scalar, ScalarError> {
        match self {
            Scalar::Approx(v) => {
                if *v < 0.0 {
                    Err(ScalarError::NegativeSqrt(v.to_string()))
                } else {
                    Ok(Scalar::Approx(v.sqrt()))
                }
            }
            Scalar::Exact(r) => {
                if r.is_negative() {
                    return Err(ScalarError::NegativeSqrt(r.to_string()));
                }
                match rational_sqrt(r) {
                    Some(root) => Ok(Scalar::Exact(root)),
                    None => Err(ScalarError::NotASquare(r.to_string())),
                }
            }
        }
    }

    /// Parse either a rational `p/q` (or bare integer) or a decimal literal,
    /// landing in the requested mode. Exact mode rejects decimals.
    pub fn parse(input: &str, mode: Mode) -> Result<Scalar, ScalarError> {
        let trimmed = input.trim();
        let as_rational = parse_rational(trimmed);
        match mode {
            Mode::Exact => as_rational.map(Scalar::Exact).ok_or(ScalarError::Parse {
                input: input.to_string(),
                mode,
            }),
            Mode::Approx => {
                if let Some(r) = as_rational {
                    return Ok(Scalar::Approx(r.to_f64().ok_or(ScalarError::Parse {
                        input: input.to_string(),
                        mode,
                    })?));
                }
                f64::from_str(trimmed)
                    .map(Scalar::Approx)
                    .map_err(|_| ScalarError::Parse {
                        input: input.to_string(),
                        mode,
                    })
            }
        }
    }

    /// JSON value: a number in approximate mode, a `"p/q"` string in exact mode.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Scalar::Approx(v) => serde_json::json!(v),
            Scalar::Exact(r) => serde_json::Value::String(format_rational(r)),
        }
    }
}

/// `"p/q"`, q > 0, lowest terms (denominator kept explicit for integers).
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `p/q` or a bare integer.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).ok()?;
        let d = BigInt::from_str(den.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        Some(BigRational::new(n, d))
    } else {
        BigInt::from_str(s).ok().map(BigRational::from_integer)
    }
}

/// Rational square root when it exists: both p and q must be perfect squares.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let num = integer_sqrt(r.numer())?;
    let den = integer_sqrt(r.denom())?;
    Some(BigRational::new(num, den))
}

fn integer_sqrt(n: &BigInt) -> Option<BigInt> {
    let mag: BigUint = n.magnitude().clone();
    let root = mag.sqrt();
    if &root * &root == mag {
        Some(BigInt::from(root))
    } else {
        None
    }
}

fn mode_mismatch(op: &str) -> ! {
    panic!("scalar mode mismatch in `{op}`: operands must share one mode")
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl std::ops::$trait for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Approx(a), Scalar::Approx(b)) => Scalar::Approx(a $op b),
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a $op b),
                    _ => mode_mismatch(stringify!($method)),
                }
            }
        }
        impl std::ops::$trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl std::ops::$trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);
scalar_binop!(Div, div, /);

impl std::ops::Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Approx(v) => Scalar::Approx(-v),
            Scalar::Exact(r) => Scalar::Exact(-r),
        }
    }
}

impl std::ops::Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Approx(a), Scalar::Approx(b)) => a == b,
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => mode_mismatch("eq"),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Approx(a), Scalar::Approx(b)) => a.partial_cmp(b),
            (Scalar::Exact(a), Scalar::Exact(b)) => a.partial_cmp(b),
            _ => mode_mismatch("partial_cmp"),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Approx(v) => write!(f, "{v}"),
            Scalar::Exact(r) => write!(f, "{}", format_rational(r)),
        }
    }
}
