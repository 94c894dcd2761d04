//! GF(2^m) arithmetic over precomputed exp/log tables.
//!
//! Parameterized over the extension degree so the same code serves both the
//! production GF(2^8) Reed-Solomon code and a GF(2^4) desk-scale code used
//! to validate the mis-correction estimator by brute force. Addition is
//! bitwise XOR; multiplication and inversion go through discrete-log tables
//! built once at field construction. The reduction polynomial must be
//! *primitive*, not merely irreducible — the tables index powers of the
//! generator α = 2, so 2 must have multiplicative order 2^m − 1. That is
//! checked during construction rather than assumed.

use thiserror::Error;

/// Errors from field construction and arithmetic.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GfError {
    /// The extension degree is outside the supported range.
    #[error("unsupported extension degree m = {0} (supported: 2..=8)")]
    BadDegree(u32),
    /// The reduction polynomial's degree does not match `m`.
    #[error("polynomial {poly:#x} does not have degree {m}")]
    WrongPolyDegree { poly: u16, m: u32 },
    /// Generator 2 cycled early, so the polynomial is not primitive.
    #[error("polynomial {poly:#x} is not primitive (generator cycles after {cycle} < {order} steps)")]
    NotPrimitive { poly: u16, cycle: usize, order: usize },
    /// Inversion of zero.
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// Parameters defining a binary extension field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSpec {
    /// Extension degree; elements live in [0, 2^m).
    pub m: u32,
    /// Reduction polynomial as a bit pattern of degree m (e.g. 0x11D for
    /// x^8 + x^4 + x^3 + x^2 + 1).
    pub primitive_poly: u16,
}

impl FieldSpec {
    /// The conventional GF(2^8) field used by the production (255, 223) code.
    pub const GF256: FieldSpec = FieldSpec { m: 8, primitive_poly: 0x11D };
    /// GF(2^4) with x^4 + x + 1, used by the desk-scale (15, 9) code.
    pub const GF16: FieldSpec = FieldSpec { m: 4, primitive_poly: 0x13 };

    /// Multiplicative group order, 2^m − 1.
    pub fn order(&self) -> usize {
        (1usize << self.m) - 1
    }
}

/// A constructed field: its defining parameters plus arithmetic tables.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct Field {
    spec: FieldSpec,
    /// exp[i] = α^i for i in [0, 2·order); doubled so products of logs
    /// never need an explicit modulo.
    exp: Vec<u8>,
    /// log[a] = i with α^i = a, for a ≠ 0. log[0] is a sentinel, never read.
    log: Vec<u8>,
    /// inv[a] = a^(−1) for a ≠ 0.
    inv: Vec<u8>,
}

impl Field {
    /// Builds the exp/log/inverse tables, verifying primitivity along the
    /// way: α = 2 must not return to 1 before exactly `order` steps.
    pub fn build(spec: FieldSpec) -> Result<Field, GfError> {
        if !(2..=8).contains(&spec.m) {
            return Err(GfError::BadDegree(spec.m));
        }
        let size = 1usize << spec.m;
        if (spec.primitive_poly as usize) >> spec.m != 1 {
            return Err(GfError::WrongPolyDegree { poly: spec.primitive_poly, m: spec.m });
        }
        let order = spec.order();

        let mut exp = vec![0u8; 2 * order];
        let mut log = vec![0u8; size];
        let mut x: usize = 1;
        for i in 0..order {
            if x == 1 && i > 0 {
                // Generator returned to 1 early: not a primitive polynomial.
                return Err(GfError::NotPrimitive { poly: spec.primitive_poly, cycle: i, order });
            }
            exp[i] = x as u8;
            exp[i + order] = x as u8;
            log[x] = i as u8;
            x <<= 1;
            if x & size != 0 {
                x ^= spec.primitive_poly as usize;
            }
        }
        if x != 1 {
            // After `order` doublings we must be back at α^0 = 1.
            return Err(GfError::NotPrimitive { poly: spec.primitive_poly, cycle: order, order });
        }

        let mut inv = vec![0u8; size];
        for a in 1..size {
            inv[a] = exp[order - log[a] as usize];
        }
        Ok(Field { spec, exp, log, inv })
    }

    /// The field's parameters.
    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    /// Multiplicative group order, 2^m − 1.
    pub fn order(&self) -> usize {
        self.spec.order()
    }

    /// Number of field elements, 2^m.
    pub fn size(&self) -> usize {
        1 << self.spec.m
    }

    /// Addition (= subtraction): bitwise XOR.
    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        a ^ b
    }

    /// Product of two elements.
    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        debug_assert!((a as usize) < self.size() && (b as usize) < self.size());
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    /// Multiplicative inverse; zero is a domain error.
    #[inline]
    pub fn inv(&self, a: u8) -> Result<u8, GfError> {
        if a == 0 {
            return Err(GfError::ZeroInverse);
        }
        debug_assert!((a as usize) < self.size());
        Ok(self.inv[a as usize])
    }

    /// `a / b`; division by zero is a domain error.
    #[inline]
    pub fn div(&self, a: u8, b: u8) -> Result<u8, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// α^i for any integer exponent (reduced mod the group order).
    #[inline]
    pub fn alpha_pow(&self, i: i64) -> u8 {
        let order = self.order() as i64;
        self.exp[i.rem_euclid(order) as usize]
    }

    /// a^e by repeated squaring through the log tables.
    pub fn pow(&self, a: u8, e: u64) -> u8 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let l = (self.log[a as usize] as u64 * e) % self.order() as u64;
        self.exp[l as usize]
    }

    /// Discrete log of a nonzero element.
    #[inline]
    pub fn log(&self, a: u8) -> Option<u8> {
        (a != 0).then(|| self.log[a as usize])
    }
}
