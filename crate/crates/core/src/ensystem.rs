//! Systems of equations drawn from `E_n`.
//!
//! Variables are numbered from 1, as in the text and JSON formats. `Sum` and
//! `Prod` store their operands with `i <= j`, so two systems are equal
//! exactly when their canonical equation sets are equal.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("variable index {index} is outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("assignment has {got} values, system has {expected} variables")]
    Arity { expected: usize, got: usize },
    #[error("{0}")]
    Precondition(String),
    #[error("invalid system JSON: {0}")]
    Json(String),
}

/// One equation of `E_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnEquation {
    /// `x_i = 1`
    Unit(usize),
    /// `x_i + x_j = x_k`
    Sum(usize, usize, usize),
    /// `x_i * x_j = x_k`
    Prod(usize, usize, usize),
}

impl EnEquation {
    pub fn unit(i: usize) -> Self {
        EnEquation::Unit(i)
    }

    pub fn sum(i: usize, j: usize, k: usize) -> Self {
        EnEquation::Sum(i.min(j), i.max(j), k)
    }

    pub fn prod(i: usize, j: usize, k: usize) -> Self {
        EnEquation::Prod(i.min(j), i.max(j), k)
    }

    /// Restores the `i <= j` form after direct construction of a variant.
    pub fn canonical(self) -> Self {
        match self {
            EnEquation::Unit(_) => self,
            EnEquation::Sum(i, j, k) => EnEquation::sum(i, j, k),
            EnEquation::Prod(i, j, k) => EnEquation::prod(i, j, k),
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> {
        let v: [Option<usize>; 3] = match *self {
            EnEquation::Unit(i) => [Some(i), None, None],
            EnEquation::Sum(i, j, k) | EnEquation::Prod(i, j, k) => [Some(i), Some(j), Some(k)],
        };
        v.into_iter().flatten()
    }

    pub fn max_index(&self) -> usize {
        self.indices().max().unwrap_or(0)
    }

    /// Exact check at a 1-based assignment; overflowing products never match.
    pub fn holds(&self, values: &[Int]) -> bool {
        match *self {
            EnEquation::Unit(i) => values[i - 1] == 1,
            EnEquation::Sum(i, j, k) => {
                values[i - 1].checked_add(values[j - 1]) == Some(values[k - 1])
            }
            EnEquation::Prod(i, j, k) => {
                values[i - 1].checked_mul(values[j - 1]) == Some(values[k - 1])
            }
        }
    }

    fn remap(&self, f: impl Fn(usize) -> usize) -> Self {
        match *self {
            EnEquation::Unit(i) => EnEquation::Unit(f(i)),
            EnEquation::Sum(i, j, k) => EnEquation::sum(f(i), f(j), f(k)),
            EnEquation::Prod(i, j, k) => EnEquation::prod(f(i), f(j), f(k)),
        }
    }
}

impl fmt::Display for EnEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EnEquation::Unit(i) => write!(f, "x{i} = 1"),
            EnEquation::Sum(i, j, k) => write!(f, "x{i} + x{j} = x{k}"),
            EnEquation::Prod(i, j, k) => write!(f, "x{i} * x{j} = x{k}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawEquation {
    Unit(String, usize),
    Ternary(String, usize, usize, usize),
}

impl Serialize for EnEquation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = match *self {
            EnEquation::Unit(i) => RawEquation::Unit("unit".into(), i),
            EnEquation::Sum(i, j, k) => RawEquation::Ternary("sum".into(), i, j, k),
            EnEquation::Prod(i, j, k) => RawEquation::Ternary("prod".into(), i, j, k),
        };
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for EnEquation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match RawEquation::deserialize(d)? {
            RawEquation::Unit(tag, i) if tag == "unit" => Ok(EnEquation::Unit(i)),
            RawEquation::Ternary(tag, i, j, k) if tag == "sum" => Ok(EnEquation::sum(i, j, k)),
            RawEquation::Ternary(tag, i, j, k) if tag == "prod" => Ok(EnEquation::prod(i, j, k)),
            _ => Err(D::Error::custom(
                "expected [\"unit\",i], [\"sum\",i,j,k] or [\"prod\",i,j,k]",
            )),
        }
    }
}

/// A system `S ⊆ E_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EnSystem {
    n: usize,
    equations: BTreeSet<EnEquation>,
}

#[derive(Deserialize)]
struct RawSystem {
    n: usize,
    equations: Vec<EnEquation>,
}

impl<'de> Deserialize<'de> for EnSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawSystem::deserialize(d)?;
        EnSystem::new(raw.n, raw.equations).map_err(serde::de::Error::custom)
    }
}

impl EnSystem {
    pub fn new<I>(n: usize, equations: I) -> Result<Self, SystemError>
    where
        I: IntoIterator<Item = EnEquation>,
    {
        let mut sys = EnSystem::empty(n);
        for eq in equations {
            sys.insert(eq)?;
        }
        Ok(sys)
    }

    pub fn empty(n: usize) -> Self {
        EnSystem {
            n,
            equations: BTreeSet::new(),
        }
    }

    /// Adds an equation; returns whether it was new.
    pub fn insert(&mut self, eq: EnEquation) -> Result<bool, SystemError> {
        for index in eq.indices() {
            if index == 0 || index > self.n {
                return Err(SystemError::IndexOutOfRange { index, n: self.n });
            }
        }
        Ok(self.equations.insert(eq.canonical()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn equations(&self) -> impl Iterator<Item = &EnEquation> + '_ {
        self.equations.iter()
    }

    pub fn contains(&self, eq: &EnEquation) -> bool {
        self.equations.contains(&eq.canonical())
    }

    /// Whether `values` solves every equation (exact arithmetic).
    pub fn check(&self, values: &[Int]) -> Result<bool, SystemError> {
        if values.len() != self.n {
            return Err(SystemError::Arity {
                expected: self.n,
                got: values.len(),
            });
        }
        Ok(self.equations.iter().all(|eq| eq.holds(values)))
    }

    /// Number of equations mentioning each variable (1-based input, 0-based output).
    pub fn incidence(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for eq in &self.equations {
            let mut seen: Vec<usize> = eq.indices().collect();
            seen.sort_unstable();
            seen.dedup();
            for i in seen {
                counts[i - 1] += 1;
            }
        }
        counts
    }

    /// Variables (1-based) that occur in no equation.
    pub fn free_variables(&self) -> Vec<usize> {
        self.incidence()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("systems always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SystemError> {
        serde_json::from_str(text).map_err(|e| SystemError::Json(e.to_string()))
    }
}

impl fmt::Display for EnSystem {
    /// One equation per line in canonical order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for eq in &self.equations {
            writeln!(f, "{eq}")?;
        }
        Ok(())
    }
}

fn parse_var(tok: &str, line: usize) -> Result<usize, SystemError> {
    let err = |msg: &str| SystemError::Parse {
        line,
        msg: format!("{msg}: '{tok}'"),
    };
    let digits = tok.strip_prefix('x').ok_or_else(|| err("expected a variable"))?;
    let idx: i64 = digits.parse().map_err(|_| err("bad variable index"))?;
    if idx < 1 {
        return Err(err("variable indices start at 1"));
    }
    Ok(idx as usize)
}

/// Parses the line format (`xI = 1`, `xI + xJ = xK`, `xI * xJ = xK`).
///
/// `#` starts a comment and blank lines are skipped. `n` is the largest index
/// mentioned, or `min_n` if that is larger.
pub fn parse_system_with(text: &str, min_n: usize) -> Result<EnSystem, SystemError> {
    let mut eqs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line.split_once('=').ok_or_else(|| SystemError::Parse {
            line: line_no,
            msg: "missing '='".into(),
        })?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        let eq = if let Some((a, b)) = lhs.split_once('+') {
            EnEquation::sum(
                parse_var(a.trim(), line_no)?,
                parse_var(b.trim(), line_no)?,
                parse_var(rhs, line_no)?,
            )
        } else if let Some((a, b)) = lhs.split_once('*') {
            EnEquation::prod(
                parse_var(a.trim(), line_no)?,
                parse_var(b.trim(), line_no)?,
                parse_var(rhs, line_no)?,
            )
        } else if rhs == "1" {
            EnEquation::Unit(parse_var(lhs, line_no)?)
        } else {
            return Err(SystemError::Parse {
                line: line_no,
                msg: format!("'{line}' is not of the form xI = 1, xI + xJ = xK or xI * xJ = xK"),
            });
        };
        eqs.push(eq);
    }
    let n = eqs.iter().map(EnEquation::max_index).max().unwrap_or(0).max(min_n);
    EnSystem::new(n, eqs)
}

pub fn parse_system(text: &str) -> Result<EnSystem, SystemError> {
    parse_system_with(text, 0)
}

pub fn format_system(sys: &EnSystem) -> String {
    sys.to_string()
}

/// Reads either the JSON form (leading `{`) or the line format.
pub fn read_system(text: &str) -> Result<EnSystem, SystemError> {
    if text.trim_start().starts_with('{') {
        EnSystem::from_json(text)
    } else {
        parse_system(text)
    }
}

/// `{x_i * x_i = x_i : 1 <= i <= n}`, whose integer solutions are `{0,1}^n`.
pub fn gen_idempotent(n: usize) -> Result<EnSystem, SystemError> {
    if n == 0 {
        return Err(SystemError::Precondition("idempotent system needs n >= 1".into()));
    }
    EnSystem::new(n, (1..=n).map(|i| EnEquation::prod(i, i, i)))
}

/// `x1 + x1 = x2, x1 * x1 = x2, x2 * x2 = x3, ..., x_{n-1} * x_{n-1} = x_n`.
///
/// Exactly two integer solutions: zero and `(2, 4, 16, ..., 2^(2^(n-1)))`.
pub fn gen_obs2(n: usize) -> Result<EnSystem, SystemError> {
    if n < 2 {
        return Err(SystemError::Precondition("obs2 system needs n >= 2".into()));
    }
    let mut eqs = vec![EnEquation::sum(1, 1, 2), EnEquation::prod(1, 1, 2)];
    eqs.extend((2..n).map(|i| EnEquation::prod(i, i, i + 1)));
    EnSystem::new(n, eqs)
}

/// Variable positions (1-based) inside a ladder system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LadderLayout {
    pub s: usize,
    pub n: usize,
    /// `z` variables fixed to 1 as padding.
    pub z: Vec<usize>,
    /// `t_1, ..., t_{n/2}`; forced to `1, ..., n/2`.
    pub t: Vec<usize>,
    pub w: usize,
    pub y: usize,
    pub u: usize,
    pub v: usize,
}

impl LadderLayout {
    /// Variables whose values the ladder forces: the `t` chain, `w`, `y` and `x2`.
    pub fn forced(&self) -> Vec<usize> {
        let mut v = self.t.clone();
        v.extend([self.w, self.y, 2]);
        v
    }
}

pub fn ladder_layout(s: usize, n: usize) -> Result<LadderLayout, SystemError> {
    if s < 2 {
        return Err(SystemError::Precondition(format!(
            "ladder base needs at least 2 variables, got {s}"
        )));
    }
    if n < 8 + 2 * s {
        return Err(SystemError::Precondition(format!(
            "ladder needs n >= 8 + 2s = {}, got {n}",
            8 + 2 * s
        )));
    }
    let half = n / 2;
    let pad = n - half - 4 - s;
    let z: Vec<usize> = (s + 1..=s + pad).collect();
    let t: Vec<usize> = (s + pad + 1..=s + pad + half).collect();
    let w = s + pad + half + 1;
    Ok(LadderLayout {
        s,
        n,
        z,
        t,
        w,
        y: w + 1,
        u: w + 2,
        v: w + 3,
    })
}

/// Extends `base` (over `s >= 2` variables, whose `x1`, `x2` play the roles
/// of the factorial value and its argument) to a system over exactly `n`
/// variables in which every solution has `x2 = n`.
///
/// Layout: base variables, then the `z` padding block, the `t` chain, and
/// `w, y, u, v`.
pub fn gen_ladder(base: &EnSystem, n: usize) -> Result<EnSystem, SystemError> {
    let lay = ladder_layout(base.n(), n)?;
    let mut sys = EnSystem::empty(n);
    for eq in base.equations() {
        sys.insert(*eq)?;
    }
    for &z in &lay.z {
        sys.insert(EnEquation::Unit(z))?;
    }
    let t1 = lay.t[0];
    sys.insert(EnEquation::Unit(t1))?;
    for pair in lay.t.windows(2) {
        sys.insert(EnEquation::sum(pair[0], t1, pair[1]))?;
    }
    let th = *lay.t.last().expect("n/2 >= 1");
    sys.insert(EnEquation::sum(th, th, lay.w))?;
    sys.insert(EnEquation::sum(lay.w, lay.y, 2))?;
    if n % 2 == 0 {
        sys.insert(EnEquation::sum(lay.y, lay.y, lay.y))?;
    } else {
        sys.insert(EnEquation::Unit(lay.y))?;
    }
    sys.insert(EnEquation::prod(lay.u, lay.v, 1))?;
    Ok(sys)
}

/// Replaces each `x_i = 1` by `x_i * x_j = x_j` for every `j`; the result has
/// the original solutions plus the zero tuple.
pub fn tilde_transform(sys: &EnSystem) -> EnSystem {
    let n = sys.n();
    let mut out = EnSystem::empty(n);
    for eq in sys.equations() {
        match *eq {
            EnEquation::Unit(i) => {
                for j in 1..=n {
                    out.equations.insert(EnEquation::prod(i, j, j));
                }
            }
            other => {
                out.equations.insert(other);
            }
        }
    }
    out
}

/// The maximal system in `E_n` satisfied by `a`.
pub fn sat_system(a: &[Int]) -> EnSystem {
    let n = a.len();
    let mut out = EnSystem::empty(n);
    for i in 1..=n {
        if a[i - 1] == 1 {
            out.equations.insert(EnEquation::Unit(i));
        }
        for j in i..=n {
            let sum = a[i - 1].checked_add(a[j - 1]);
            let prod = a[i - 1].checked_mul(a[j - 1]);
            for k in 1..=n {
                if sum == Some(a[k - 1]) {
                    out.equations.insert(EnEquation::Sum(i, j, k));
                }
                if prod == Some(a[k - 1]) {
                    out.equations.insert(EnEquation::Prod(i, j, k));
                }
            }
        }
    }
    out
}

/// Every equation of `E_n` in canonical order.
pub fn all_equations(n: usize) -> Vec<EnEquation> {
    let mut out: Vec<EnEquation> = (1..=n).map(EnEquation::Unit).collect();
    for ctor in [EnEquation::Sum as fn(usize, usize, usize) -> EnEquation, EnEquation::Prod] {
        for i in 1..=n {
            for j in i..=n {
                for k in 1..=n {
                    out.push(ctor(i, j, k));
                }
            }
        }
    }
    out
}

/// Uniformly random system with `n` variables and up to `max_eqs` equations.
pub fn random_system<R: Rng + ?Sized>(rng: &mut R, n: usize, max_eqs: usize) -> EnSystem {
    let mut sys = EnSystem::empty(n);
    let count = rng.gen_range(0..=max_eqs);
    for _ in 0..count {
        let i = rng.gen_range(1..=n);
        let j = rng.gen_range(1..=n);
        let k = rng.gen_range(1..=n);
        let eq = match rng.gen_range(0..5) {
            0 => EnEquation::Unit(i),
            1 | 2 => EnEquation::sum(i, j, k),
            _ => EnEquation::prod(i, j, k),
        };
        sys.equations.insert(eq);
    }
    sys
}

/// Applies `perm` (1-based images) to every variable of `sys`.
pub fn permute_system(sys: &EnSystem, perm: &[usize]) -> EnSystem {
    assert_eq!(perm.len(), sys.n());
    let mut out = EnSystem::empty(sys.n());
    for eq in sys.equations() {
        out.equations.insert(eq.remap(|i| perm[i - 1]));
    }
    out
}
