use num_bigint::BigUint;

use crate::Int;

/// `2^(2^(n-1))` as an exact big integer; `n = 0` yields 2 by convention
/// (the exponent `2^(-1)` is treated as 1).
pub fn tower_big(n: u32) -> BigUint {
    let exp = if n == 0 { 1u64 } else { 1u64 << (n - 1).min(63) };
    BigUint::from(1u8) << exp
}

/// `2^(2^(n-1))` when it fits in [`Int`] (that is, `n <= 7`).
pub fn tower(n: u32) -> Option<Int> {
    match n {
        0 => Some(2),
        1..=7 => Some(1i128 << (1u32 << (n - 1))),
        _ => None,
    }
}
