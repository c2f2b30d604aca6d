//! Portfolio credit risk with interacting default intensities modulated by a
//! hidden two-state Markov chain.
//!
//! The hidden chain X (the economy) is seen only through an observation
//! chain Y, whose jump rates depend on X, and through defaults. The crate
//! filters X from the observed record, computes joint and ordered
//! default-time distributions, simulates default times by total hazard
//! construction and prices CDS and kth-to-default baskets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod dist;
pub mod filter;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod pricing;
pub mod quad;
pub mod validation;

/// Formats like C's `%.12g`.
pub fn fmt_g12(v: f64) -> String {
    fmt_g(v, 12)
}

/// Formats like C's `%.{sig}g`: shortest of fixed or exponent notation with
/// `sig` significant digits and trailing zeros removed.
pub fn fmt_g(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
