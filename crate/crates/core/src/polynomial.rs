//! Sparse multivariate integer polynomials.
//!
//! A [`Polynomial`] is stored in canonical expanded form: a map from exponent
//! vectors to nonzero `i64` coefficients. Construction and arithmetic are
//! checked; evaluation is exact and falls back to big integers when `i128`
//! overflows.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Roots;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Int;

pub const DEFAULT_MAX_DEGREE: u32 = 16;
pub const DEFAULT_MAX_VARS: usize = 16;

/// Largest half-width of the `x` range (or of a degenerate `y` line) the
/// quadratic enumerator will scan.
pub const QUADRATIC_ENUM_LIMIT: u128 = 1_000_000;

/// Largest height bound the quadratic enumerator accepts.
const QUADRATIC_BOUND_CAP: u128 = 1 << 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("total degree {degree} exceeds the cap of {cap}")]
    DegreeCap { degree: u32, cap: u32 },
    #[error("variable x{index} exceeds the cap of {cap} variables")]
    VarCap { index: usize, cap: usize },
    #[error("coefficient overflows the 64-bit signed range")]
    CoefficientOverflow,
    #[error("point has {got} coordinates, polynomial has {expected} variables")]
    Arity { expected: usize, got: usize },
    #[error("all six quadratic coefficients are zero; the equation holds everywhere")]
    AllZeroQuadratic,
    #[error("height bound {bound} exceeds the enumeration limit {limit}")]
    EnumerationLimit { bound: BigUint, limit: u128 },
}

/// Degree and variable caps applied while building polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_degree: u32,
    pub max_vars: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_degree: DEFAULT_MAX_DEGREE,
            max_vars: DEFAULT_MAX_VARS,
        }
    }
}

/// Sparse polynomial with integer coefficients in canonical form.
///
/// Invariants: no stored coefficient is zero and every exponent vector has
/// length `num_vars`. Equality is equality of the term maps (plus `num_vars`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polynomial {
    num_vars: usize,
    terms: BTreeMap<Vec<u32>, i64>,
}

/// JSON form: `{"num_vars": k, "text": "<canonical form>"}`.
#[derive(Serialize, Deserialize)]
struct PolyJson {
    num_vars: usize,
    text: String,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyJson {
            num_vars: self.num_vars,
            text: self.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = PolyJson::deserialize(d)?;
        let opts = ParseOptions {
            limits: Limits {
                max_degree: u32::MAX,
                max_vars: usize::MAX,
            },
            min_vars: raw.num_vars,
        };
        let p = parse_polynomial_with(&raw.text, &opts).map_err(serde::de::Error::custom)?;
        if p.num_vars != raw.num_vars {
            return Err(serde::de::Error::custom("variable index exceeds num_vars"));
        }
        Ok(p)
    }
}

fn graded_lex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u64 = a.iter().map(|&e| e as u64).sum();
    let db: u64 = b.iter().map(|&e| e as u64).sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: i64) -> Self {
        let mut p = Polynomial::zero(num_vars);
        if c != 0 {
            p.terms.insert(vec![0; num_vars], c);
        }
        p
    }

    /// The variable `x_index` (1-based) in a ring of at least `index` variables.
    pub fn var(num_vars: usize, index: usize) -> Self {
        assert!(index >= 1 && index <= num_vars, "variable index out of range");
        let mut exps = vec![0; num_vars];
        exps[index - 1] = 1;
        let mut p = Polynomial::zero(num_vars);
        p.terms.insert(exps, 1);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// duplicate monomials and dropping zero coefficients.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, i64)>,
    {
        let mut p = Polynomial::zero(num_vars);
        for (exps, c) in terms {
            assert_eq!(exps.len(), num_vars, "exponent vector length mismatch");
            p.add_term(exps, c)?;
        }
        Ok(p)
    }

    fn add_term(&mut self, exps: Vec<u32>, c: i64) -> Result<(), PolyError> {
        if c == 0 {
            return Ok(());
        }
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().checked_add(c).ok_or(PolyError::CoefficientOverflow)?;
                if sum == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, i64> {
        &self.terms
    }

    pub fn coefficient(&self, exps: &[u32]) -> i64 {
        self.terms.get(exps).copied().unwrap_or(0)
    }

    /// Terms in graded-lexicographic order (highest total degree first, then
    /// lexicographically largest exponent vector first).
    pub fn graded_terms(&self) -> Vec<(&Vec<u32>, i64)> {
        let mut out: Vec<_> = self.terms.iter().map(|(e, &c)| (e, c)).collect();
        out.sort_by(|a, b| graded_lex(a.0, b.0));
        out
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Re-embeds the polynomial in a ring with `num_vars` variables.
    ///
    /// Panics if a variable that actually occurs would be dropped.
    pub fn with_num_vars(&self, num_vars: usize) -> Self {
        if num_vars == self.num_vars {
            return self.clone();
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| {
                let mut exps = e.clone();
                if num_vars < exps.len() {
                    assert!(
                        exps[num_vars..].iter().all(|&x| x == 0),
                        "cannot drop a variable that occurs in the polynomial"
                    );
                }
                exps.resize(num_vars, 0);
                (exps, c)
            })
            .collect();
        Polynomial { num_vars, terms }
    }

    fn aligned(&self, other: &Self) -> (Self, Self) {
        let n = self.num_vars.max(other.num_vars);
        (self.with_num_vars(n), other.with_num_vars(n))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, PolyError> {
        let (mut a, b) = self.aligned(other);
        for (e, &c) in &b.terms {
            a.add_term(e.clone(), c)?;
        }
        Ok(a)
    }

    pub fn checked_neg(&self) -> Result<Self, PolyError> {
        let mut terms = BTreeMap::new();
        for (e, &c) in &self.terms {
            terms.insert(e.clone(), c.checked_neg().ok_or(PolyError::CoefficientOverflow)?);
        }
        Ok(Polynomial {
            num_vars: self.num_vars,
            terms,
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.checked_add(&other.checked_neg()?)
    }

    pub fn checked_mul(&self, other: &Self, limits: &Limits) -> Result<Self, PolyError> {
        let (a, b) = self.aligned(other);
        let degree = if a.is_zero() || b.is_zero() {
            0
        } else {
            a.total_degree() + b.total_degree()
        };
        if degree > limits.max_degree {
            return Err(PolyError::DegreeCap {
                degree,
                cap: limits.max_degree,
            });
        }
        let mut out = Polynomial::zero(a.num_vars);
        for (ea, &ca) in &a.terms {
            for (eb, &cb) in &b.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let c = ca.checked_mul(cb).ok_or(PolyError::CoefficientOverflow)?;
                out.add_term(exps, c)?;
            }
        }
        Ok(out)
    }

    pub fn checked_pow(&self, exp: u32, limits: &Limits) -> Result<Self, PolyError> {
        if exp == 0 {
            return Ok(Polynomial::constant(self.num_vars, 1));
        }
        if !self.is_zero() {
            let degree = self.total_degree() as u64 * exp as u64;
            if degree > limits.max_degree as u64 {
                return Err(PolyError::DegreeCap {
                    degree: degree.min(u32::MAX as u64) as u32,
                    cap: limits.max_degree,
                });
            }
        }
        let mut acc = self.clone();
        for _ in 1..exp {
            acc = acc.checked_mul(self, limits)?;
        }
        Ok(acc)
    }

    /// Exact value at `point`.
    pub fn evaluate(&self, point: &[Int]) -> Result<BigInt, PolyError> {
        if point.len() != self.num_vars {
            return Err(PolyError::Arity {
                expected: self.num_vars,
                got: point.len(),
            });
        }
        match self.evaluate_narrow(point) {
            Some(v) => Ok(BigInt::from(v)),
            None => Ok(self.evaluate_wide(point)),
        }
    }

    fn evaluate_narrow(&self, point: &[Int]) -> Option<Int> {
        let mut total: Int = 0;
        for (exps, &c) in &self.terms {
            let mut term = c as Int;
            for (&x, &e) in point.iter().zip(exps) {
                if e > 0 {
                    term = term.checked_mul(x.checked_pow(e)?)?;
                }
            }
            total = total.checked_add(term)?;
        }
        Some(total)
    }

    fn evaluate_wide(&self, point: &[Int]) -> BigInt {
        let mut total = BigInt::zero();
        for (exps, &c) in &self.terms {
            let mut term = BigInt::from(c);
            for (&x, &e) in point.iter().zip(exps) {
                if e > 0 {
                    term *= num_traits::pow(BigInt::from(x), e as usize);
                }
            }
            total += term;
        }
        total
    }

    /// `max(k, total degree, max |coefficient|)` where `k` is the number of
    /// variables of the ring.
    pub fn norm(&self) -> u64 {
        let max_coef = self
            .terms
            .values()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0);
        (self.num_vars as u64)
            .max(self.total_degree() as u64)
            .max(max_coef)
    }

    /// Renames variables: `x_i` becomes `x_{perm[i-1]}` (1-based targets).
    pub fn permute_vars(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.num_vars);
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| {
                let mut exps = vec![0; self.num_vars];
                for (i, &x) in e.iter().enumerate() {
                    exps[perm[i] - 1] = x;
                }
                (exps, c)
            })
            .collect();
        Polynomial {
            num_vars: self.num_vars,
            terms,
        }
    }
}

fn write_monomial(f: &mut fmt::Formatter<'_>, exps: &[u32]) -> fmt::Result {
    let mut first = true;
    for (i, &e) in exps.iter().enumerate() {
        if e == 0 {
            continue;
        }
        if !first {
            f.write_str("*")?;
        }
        first = false;
        write!(f, "x{}", i + 1)?;
        if e > 1 {
            write!(f, "^{e}")?;
        }
    }
    Ok(())
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.graded_terms();
        if terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (exps, c)) in terms.into_iter().enumerate() {
            let constant = exps.iter().all(|&e| e == 0);
            let mag = c.unsigned_abs();
            if idx == 0 {
                if c < 0 {
                    f.write_str("-")?;
                }
            } else if c < 0 {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if constant {
                write!(f, "{mag}")?;
            } else {
                if mag != 1 {
                    write!(f, "{mag}*")?;
                }
                write_monomial(f, exps)?;
            }
        }
        Ok(())
    }
}

/// Options for [`parse_polynomial_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub limits: Limits,
    /// Raise `num_vars` to at least this value.
    pub min_vars: usize,
}

/// Parses with default caps; see [`parse_polynomial_with`].
pub fn parse_polynomial(text: &str) -> Result<Polynomial, PolyError> {
    parse_polynomial_with(text, &ParseOptions::default())
}

/// Parses the ASCII grammar
///
/// ```text
/// expr   := ['-'] term (('+' | '-') term)*
/// term   := factor ('*' factor)*
/// factor := integer | 'x' posint | '(' expr ')' | factor '^' int
/// ```
///
/// with an optional trailing `= 0`, expanding to canonical form.
pub fn parse_polynomial_with(text: &str, opts: &ParseOptions) -> Result<Polynomial, PolyError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        limits: opts.limits,
    };
    let p = parser.expr()?;
    parser.skip_ws();
    if parser.peek() == Some(b'=') {
        parser.pos += 1;
        parser.skip_ws();
        let start = parser.pos;
        match parser.integer_literal()? {
            Some(0) => {}
            _ => return Err(parser.error_at(start, "only '= 0' may follow the expression")),
        }
        parser.skip_ws();
    }
    if parser.pos != parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    let vars = highest_var(&p).max(opts.min_vars);
    if vars > opts.limits.max_vars {
        return Err(PolyError::VarCap {
            index: vars,
            cap: opts.limits.max_vars,
        });
    }
    Ok(shrink_to(&p, vars))
}

fn highest_var(p: &Polynomial) -> usize {
    p.terms
        .keys()
        .filter_map(|e| e.iter().rposition(|&x| x > 0))
        .map(|i| i + 1)
        .max()
        .unwrap_or(0)
}

fn shrink_to(p: &Polynomial, n: usize) -> Polynomial {
    let terms = p
        .terms
        .iter()
        .map(|(e, &c)| {
            let mut exps = e.clone();
            exps.resize(n, 0);
            (exps, c)
        })
        .collect();
    Polynomial { num_vars: n, terms }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    limits: Limits,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> PolyError {
        self.error_at(self.pos, msg)
    }

    fn error_at(&self, pos: usize, msg: &str) -> PolyError {
        PolyError::Syntax {
            pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn digits(&mut self) -> Option<&[u8]> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.src[start..self.pos])
    }

    /// Reads an unsigned decimal literal as `i128`; `None` if no digits.
    fn integer_literal(&mut self) -> Result<Option<i128>, PolyError> {
        let start = self.pos;
        let Some(digits) = self.digits() else {
            return Ok(None);
        };
        let text = std::str::from_utf8(digits).expect("ascii digits");
        text.parse::<i128>()
            .map(Some)
            .map_err(|_| self.error_at(start, "integer literal too large"))
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        self.skip_ws();
        let mut acc = if self.peek() == Some(b'-') {
            self.pos += 1;
            self.term(true)?
        } else {
            self.term(false)?
        };
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.term(false)?;
                    acc = acc.checked_add(&t)?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term(true)?;
                    acc = acc.checked_add(&t)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    /// A product of factors, negated when `negate` is set. The sign is folded
    /// into a leading literal so that `-9223372036854775808` stays in range.
    fn term(&mut self, negate: bool) -> Result<Polynomial, PolyError> {
        self.skip_ws();
        let (mut acc, folded) = self.factor(negate)?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
                let (f, _) = self.factor(false)?;
                acc = acc.checked_mul(&f, &self.limits)?;
            } else {
                break;
            }
        }
        if negate && !folded {
            acc = acc.checked_neg()?;
        }
        Ok(acc)
    }

    /// Returns the factor and whether a pending negation was folded into it.
    fn factor(&mut self, fold_sign: bool) -> Result<(Polynomial, bool), PolyError> {
        self.skip_ws();
        let (base, folded) = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                (inner, false)
            }
            Some(b'x') => {
                self.pos += 1;
                let idx_pos = self.pos;
                let idx = self
                    .integer_literal()?
                    .ok_or_else(|| self.error("expected variable index after 'x'"))?;
                if idx < 1 {
                    return Err(self.error_at(idx_pos, "variable indices start at 1"));
                }
                if idx as u128 > self.limits.max_vars as u128 {
                    return Err(PolyError::VarCap {
                        index: idx.min(usize::MAX as i128) as usize,
                        cap: self.limits.max_vars,
                    });
                }
                (Polynomial::var(idx as usize, idx as usize), false)
            }
            Some(c) if c.is_ascii_digit() => {
                let v = self.integer_literal()?.expect("digit present");
                let fold = fold_sign && !self.followed_by_power();
                let v = if fold { -v } else { v };
                let c = i64::try_from(v).map_err(|_| PolyError::CoefficientOverflow)?;
                (Polynomial::constant(0, c), fold)
            }
            _ => return Err(self.error("expected integer, variable or '('")),
        };
        Ok((self.powers(base)?, folded))
    }

    fn followed_by_power(&self) -> bool {
        let mut i = self.pos;
        while i < self.src.len() && self.src[i].is_ascii_whitespace() {
            i += 1;
        }
        self.src.get(i) == Some(&b'^')
    }

    fn powers(&mut self, mut base: Polynomial) -> Result<Polynomial, PolyError> {
        loop {
            self.skip_ws();
            if self.peek() != Some(b'^') {
                return Ok(base);
            }
            self.pos += 1;
            self.skip_ws();
            let e = self
                .integer_literal()?
                .ok_or_else(|| self.error("expected exponent after '^'"))?;
            let e = u32::try_from(e).map_err(|_| PolyError::DegreeCap {
                degree: u32::MAX,
                cap: self.limits.max_degree,
            })?;
            base = base.checked_pow(e, &self.limits)?;
        }
    }
}

/// The six coefficients of `a x^2 + b x y + c y^2 + d x + e y + f = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticCoeffs {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub e: i64,
    pub f: i64,
}

impl QuadraticCoeffs {
    pub fn new(a: i64, b: i64, c: i64, d: i64, e: i64, f: i64) -> Self {
        QuadraticCoeffs { a, b, c, d, e, f }
    }

    fn max_abs(&self) -> u64 {
        [self.a, self.b, self.c, self.d, self.e, self.f]
            .iter()
            .map(|v| v.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0
    }

    pub fn evaluate(&self, x: Int, y: Int) -> Int {
        let (a, b, c, d, e, f) = (
            self.a as Int,
            self.b as Int,
            self.c as Int,
            self.d as Int,
            self.e as Int,
            self.f as Int,
        );
        a * x * x + b * x * y + c * y * y + d * x + e * y + f
    }
}

/// `20 * M^4` with `M = max(|a|, ..., |f|)`.
pub fn quadratic_height_bound(q: &QuadraticCoeffs) -> Result<BigUint, PolyError> {
    if q.is_zero() {
        return Err(PolyError::AllZeroQuadratic);
    }
    let m = BigUint::from(q.max_abs());
    Ok(BigUint::from(20u8) * num_traits::pow(m, 4))
}

/// Integer points of a two-variable quadratic within the height bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticSolutions {
    pub bound: u128,
    /// Sorted solutions with `max(|x|, |y|) <= bound`.
    pub solutions: Vec<(Int, Int)>,
    /// False when a solution exists with `bound < max(|x|, |y|) <= 2 * bound`;
    /// such a solution is impossible for a finite solution set.
    pub finite: bool,
    pub escape_witness: Option<(Int, Int)>,
}

/// Enumerates all solutions of height at most the bound and probes the shell
/// `(bound, 2 * bound]` for a solution that would contradict finiteness.
pub fn enumerate_quadratic_solutions(q: &QuadraticCoeffs) -> Result<QuadraticSolutions, PolyError> {
    let big = quadratic_height_bound(q)?;
    let limit_err = || PolyError::EnumerationLimit {
        bound: big.clone(),
        limit: QUADRATIC_ENUM_LIMIT,
    };
    let bound: u128 = match u128::try_from(&big) {
        Ok(b) if b <= QUADRATIC_BOUND_CAP => b,
        _ => return Err(limit_err()),
    };
    let inner = bound as Int;
    let outer = 2 * inner;
    let (a, b, c, d, e, f) = (
        q.a as Int, q.b as Int, q.c as Int, q.d as Int, q.e as Int, q.f as Int,
    );
    // For c != 0 a real y exists only where the discriminant
    // qa*x^2 + qb*x + qc is non-negative; for qa < 0 that is a bounded interval.
    let (mut x_lo, mut x_hi) = (-outer, outer);
    if c != 0 {
        let qa = b * b - 4 * a * c;
        let qb = 2 * b * e - 4 * c * d;
        let qc = e * e - 4 * c * f;
        if qa < 0 {
            let dd = qb * qb - 4 * qa * qc;
            if dd < 0 {
                x_hi = x_lo - 1;
            } else {
                let r = (qb.abs() + dd.sqrt() + 1) / (2 * qa.abs()) + 1;
                x_lo = x_lo.max(-r);
                x_hi = x_hi.min(r);
            }
        }
    }
    if x_hi - x_lo > 2 * QUADRATIC_ENUM_LIMIT as Int {
        return Err(limit_err());
    }
    let mut solutions = Vec::new();
    let mut escape: Option<(Int, Int)> = None;
    let mut note = |x: Int, y: Int, escape: &mut Option<(Int, Int)>| {
        let h = x.abs().max(y.abs());
        if h <= inner {
            solutions.push((x, y));
        } else if h <= outer {
            let better = match *escape {
                None => true,
                Some((ex, ey)) => (h, x, y) < (ex.abs().max(ey.abs()), ex, ey),
            };
            if better {
                *escape = Some((x, y));
            }
        }
    };
    for x in x_lo..=x_hi {
        // c*y^2 + (b*x + e)*y + (a*x^2 + d*x + f) = 0
        let lin = b * x + e;
        let cst = a * x * x + d * x + f;
        if c != 0 {
            let disc = lin * lin - 4 * c * cst;
            if disc < 0 {
                continue;
            }
            let s = disc.sqrt();
            if s * s != disc {
                continue;
            }
            let mut roots = vec![];
            for num in [-lin + s, -lin - s] {
                if num % (2 * c) == 0 {
                    roots.push(num / (2 * c));
                }
            }
            roots.sort_unstable();
            roots.dedup();
            for y in roots {
                if y.abs() <= outer {
                    note(x, y, &mut escape);
                }
            }
        } else if lin != 0 {
            if cst % lin == 0 {
                let y = -cst / lin;
                if y.abs() <= outer {
                    note(x, y, &mut escape);
                }
            }
        } else if cst == 0 {
            if outer > 2 * QUADRATIC_ENUM_LIMIT as Int {
                return Err(limit_err());
            }
            for y in -outer..=outer {
                note(x, y, &mut escape);
            }
        }
    }
    solutions.sort_unstable();
    debug_assert!(solutions.iter().all(|&(x, y)| q.evaluate(x, y) == 0));
    Ok(QuadraticSolutions {
        bound,
        solutions,
        finite: escape.is_none(),
        escape_witness: escape,
    })
}

impl From<&QuadraticCoeffs> for Polynomial {
    fn from(q: &QuadraticCoeffs) -> Self {
        Polynomial::from_terms(
            2,
            [
                (vec![2, 0], q.a),
                (vec![1, 1], q.b),
                (vec![0, 2], q.c),
                (vec![1, 0], q.d),
                (vec![0, 1], q.e),
                (vec![0, 0], q.f),
            ],
        )
        .expect("distinct monomials cannot overflow")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Polynomial {
        parse_polynomial(text).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let d = p("3*x1^2*x2 - 5*x4 + 7");
        let j = serde_json::to_string(&d).unwrap();
        assert_eq!(j, r#"{"num_vars":4,"text":"3*x1^2*x2 - 5*x4 + 7"}"#);
        assert_eq!(serde_json::from_str::<Polynomial>(&j).unwrap(), d);
    }

    #[test]
    fn parses_simple_difference() {
        let poly = p("x1^2 - x2");
        assert_eq!(poly.num_vars(), 2);
        let expected = Polynomial::from_terms(2, [(vec![2, 0], 1), (vec![0, 1], -1)]).unwrap();
        assert_eq!(poly, expected);
        assert_eq!(poly.to_string(), "x1^2 - x2");
    }

    #[test]
    fn parses_zero() {
        let z = p("0");
        assert!(z.is_zero());
        assert_eq!(z.num_vars(), 0);
        let opts = ParseOptions {
            min_vars: 3,
            ..Default::default()
        };
        assert_eq!(parse_polynomial_with("0", &opts).unwrap().num_vars(), 3);
    }

    #[test]
    fn expands_difference_of_squares() {
        let poly = p("(x1 + 1)*(x1 - 1)");
        let expected = Polynomial::from_terms(1, [(vec![2], 1), (vec![0], -1)]).unwrap();
        assert_eq!(poly, expected);
    }

    #[test]
    fn trailing_equals_zero() {
        assert_eq!(p("x1*x2 - 1 = 0"), p("x1*x2 - 1"));
        assert!(parse_polynomial("x1 = 2").is_err());
    }

    #[test]
    fn syntax_errors_report_position() {
        match parse_polynomial("x1 + * x2") {
            Err(PolyError::Syntax { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_polynomial("x0"), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_polynomial("(x1"), Err(PolyError::Syntax { .. })));
        assert!(matches!(parse_polynomial("x1 x2"), Err(PolyError::Syntax { .. })));
    }

    #[test]
    fn caps_are_enforced() {
        assert!(matches!(
            parse_polynomial("x1^17"),
            Err(PolyError::DegreeCap { degree: 17, cap: 16 })
        ));
        assert!(matches!(parse_polynomial("x17"), Err(PolyError::VarCap { .. })));
        assert!(matches!(
            parse_polynomial("9223372036854775807 + 1"),
            Err(PolyError::CoefficientOverflow)
        ));
        assert_eq!(
            p("-9223372036854775808*x1").coefficient(&[1]),
            i64::MIN
        );
    }

    #[test]
    fn evaluates() {
        assert_eq!(p("x1^2 - x2").evaluate(&[2, 4]).unwrap(), BigInt::from(0));
        assert_eq!(p("x1*x2 - 1").evaluate(&[-1, -1]).unwrap(), BigInt::from(0));
        assert_eq!(p("x1^2 - x2").evaluate(&[3, 4]).unwrap(), BigInt::from(5));
        assert!(matches!(
            p("x1").evaluate(&[1, 2]),
            Err(PolyError::Arity { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn evaluation_promotes_past_i128() {
        let poly = p("x1^16");
        let v = poly.evaluate(&[1i128 << 40]).unwrap();
        assert_eq!(v, BigInt::from(1u8) << 640u32);
    }

    #[test]
    fn norms() {
        assert_eq!(p("x1^2 - x2").norm(), 2);
        assert_eq!(p("7").norm(), 7);
        assert_eq!(p("x1*x2*x3").norm(), 3);
    }

    #[test]
    fn formats_negative_leading_and_coefficients() {
        assert_eq!(p("-x1 + 3").to_string(), "-x1 + 3");
        assert_eq!(p("3*x2*x1^2 - 5*x2 + x1").to_string(), "3*x1^2*x2 + x1 - 5*x2");
    }

    #[test]
    fn height_bounds() {
        let b = |a, b, c, d, e, f| quadratic_height_bound(&QuadraticCoeffs::new(a, b, c, d, e, f)).unwrap();
        assert_eq!(b(1, 0, 1, 0, 0, -2), BigUint::from(320u32));
        assert_eq!(b(1, 1, 1, 1, 1, 1), BigUint::from(20u32));
        assert_eq!(b(0, 0, 0, 0, 1, -5), BigUint::from(12500u32));
        assert_eq!(
            quadratic_height_bound(&QuadraticCoeffs::new(0, 0, 0, 0, 0, 0)),
            Err(PolyError::AllZeroQuadratic)
        );
    }

    #[test]
    fn circle_of_radius_sqrt2() {
        let r = enumerate_quadratic_solutions(&QuadraticCoeffs::new(1, 0, 1, 0, 0, -2)).unwrap();
        assert_eq!(r.solutions, vec![(-1, -1), (-1, 1), (1, -1), (1, 1)]);
        assert!(r.finite);
    }

    #[test]
    fn parabola_is_flagged_infinite() {
        let r = enumerate_quadratic_solutions(&QuadraticCoeffs::new(1, 0, 0, 0, -1, 0)).unwrap();
        assert!(!r.finite);
        let (x, y) = r.escape_witness.unwrap();
        assert_eq!(y, x * x);
    }

    #[test]
    fn sum_of_squares_plus_one_has_no_points() {
        let r = enumerate_quadratic_solutions(&QuadraticCoeffs::new(1, 0, 1, 0, 0, 1)).unwrap();
        assert!(r.solutions.is_empty());
        assert!(r.finite);
    }

    #[test]
    fn linear_in_y_only() {
        // y = 5 for every x
        let r = enumerate_quadratic_solutions(&QuadraticCoeffs::new(0, 0, 0, 0, 1, -5)).unwrap();
        assert!(!r.finite);
        assert_eq!(r.solutions.len(), 2 * 12500 + 1);
    }
}
