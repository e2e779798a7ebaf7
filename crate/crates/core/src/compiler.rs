//! Translation of a polynomial equation `D = 0` into an equivalent system
//! in `E_n`.
//!
//! The polynomial is first lowered to a straight-line program whose nodes
//! are pairwise distinct polynomials (hash-consed by their meaning). Each
//! node becomes one system variable and one defining equation, so every
//! integer point of the source variables extends uniquely to the auxiliary
//! variables. The final equation `x_q + x_q = x_q` forces the node carrying
//! `D` to zero, which makes the system and the equation have the same number
//! of integer solutions.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensystem::{EnEquation, EnSystem};
use crate::polynomial::{Limits, PolyError, Polynomial};
use crate::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("base tuple has {got} values, source has {expected} variables")]
    Arity { expected: usize, got: usize },
    #[error("value of node {node} overflows the exact integer width")]
    Overflow { node: usize },
    #[error("{0}")]
    Precondition(String),
}

/// One step of the straight-line program. Operands are node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlpNode {
    One,
    /// Source variable (1-based).
    Input(usize),
    Add(usize, usize),
    /// `l - r`, realised by the equation `r + this = l`.
    SubVia(usize, usize),
    Mul(usize, usize),
}

impl Serialize for SlpNode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let (tag, args): (&str, Vec<usize>) = match *self {
            SlpNode::One => ("one", vec![]),
            SlpNode::Input(v) => ("input", vec![v]),
            SlpNode::Add(l, r) => ("add", vec![l, r]),
            SlpNode::SubVia(l, r) => ("subvia", vec![l, r]),
            SlpNode::Mul(l, r) => ("mul", vec![l, r]),
        };
        let mut seq = s.serialize_seq(Some(1 + args.len()))?;
        seq.serialize_element(tag)?;
        for a in args {
            seq.serialize_element(&a)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for SlpNode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw: Vec<serde_json::Value> = Vec::deserialize(d)?;
        let tag = raw.first().and_then(|v| v.as_str()).unwrap_or("");
        let args: Vec<usize> = raw[1.min(raw.len())..]
            .iter()
            .map(|v| v.as_u64().map(|x| x as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| D::Error::custom("slp operands must be non-negative integers"))?;
        match (tag, args.as_slice()) {
            ("one", []) => Ok(SlpNode::One),
            ("input", [v]) => Ok(SlpNode::Input(*v)),
            ("add", [l, r]) => Ok(SlpNode::Add(*l, *r)),
            ("subvia", [l, r]) => Ok(SlpNode::SubVia(*l, *r)),
            ("mul", [l, r]) => Ok(SlpNode::Mul(*l, *r)),
            _ => Err(D::Error::custom(format!("malformed slp node {raw:?}"))),
        }
    }
}

/// Straight-line program with the polynomial meaning of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slp {
    pub nodes: Vec<SlpNode>,
    pub terms: Vec<Polynomial>,
    /// Node carrying the source polynomial.
    pub output: usize,
    pub p: usize,
}

struct SlpBuilder {
    nodes: Vec<SlpNode>,
    terms: Vec<Polynomial>,
    index: HashMap<Polynomial, usize>,
    limits: Limits,
}

impl SlpBuilder {
    fn new(p: usize, limits: Limits) -> Self {
        let mut b = SlpBuilder {
            nodes: Vec::new(),
            terms: Vec::new(),
            index: HashMap::new(),
            limits,
        };
        b.push(SlpNode::One, Polynomial::constant(p, 1));
        for v in 1..=p {
            b.push(SlpNode::Input(v), Polynomial::var(p, v));
        }
        b
    }

    fn push(&mut self, node: SlpNode, term: Polynomial) -> usize {
        if let Some(&existing) = self.index.get(&term) {
            return existing;
        }
        let id = self.nodes.len();
        self.nodes.push(node);
        self.index.insert(term.clone(), id);
        self.terms.push(term);
        id
    }

    fn add(&mut self, l: usize, r: usize) -> Result<usize, PolyError> {
        let t = self.terms[l].checked_add(&self.terms[r])?;
        Ok(self.push(SlpNode::Add(l, r), t))
    }

    fn sub(&mut self, l: usize, r: usize) -> Result<usize, PolyError> {
        let t = self.terms[l].checked_sub(&self.terms[r])?;
        Ok(self.push(SlpNode::SubVia(l, r), t))
    }

    fn mul(&mut self, l: usize, r: usize) -> Result<usize, PolyError> {
        let t = self.terms[l].checked_mul(&self.terms[r], &self.limits)?;
        Ok(self.push(SlpNode::Mul(l, r), t))
    }

    /// Binary doubling chain: `2k = k + k`, `2k + 1 = 2k + 1`.
    fn constant(&mut self, c: u64) -> Result<usize, PolyError> {
        debug_assert!(c >= 1);
        if c == 1 {
            return Ok(0);
        }
        if c % 2 == 0 {
            let half = self.constant(c / 2)?;
            self.add(half, half)
        } else {
            let even = self.constant(c - 1)?;
            self.add(even, 0)
        }
    }

    /// Square-and-multiply for `x_v^e`, `e >= 1`.
    fn power(&mut self, v: usize, e: u32) -> Result<usize, PolyError> {
        if e == 1 {
            return Ok(v);
        }
        if e % 2 == 0 {
            let half = self.power(v, e / 2)?;
            self.mul(half, half)
        } else {
            let rest = self.power(v, e - 1)?;
            self.mul(rest, v)
        }
    }

    fn monomial(&mut self, exps: &[u32]) -> Result<usize, PolyError> {
        let mut acc: Option<usize> = None;
        for (i, &e) in exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let pw = self.power(i + 1, e)?;
            acc = Some(match acc {
                None => pw,
                Some(a) => self.mul(a, pw)?,
            });
        }
        Ok(acc.unwrap_or(0))
    }

    /// Node for `|c| * monomial`.
    fn scaled_term(&mut self, exps: &[u32], mag: u64) -> Result<usize, PolyError> {
        let mono = self.monomial(exps)?;
        if mag == 1 {
            return Ok(mono);
        }
        let k = self.constant(mag)?;
        if mono == 0 {
            Ok(k)
        } else {
            self.mul(k, mono)
        }
    }
}

/// Lowers `d` to a straight-line program over its `num_vars()` inputs.
///
/// Positive terms are accumulated first, then negative terms are subtracted,
/// each group in graded-lexicographic order. A polynomial without positive
/// terms starts from the zero node `1 - 1`.
pub fn build_slp(d: &Polynomial, limits: &Limits) -> Result<Slp, CompileError> {
    let p = d.num_vars();
    if p > limits.max_vars {
        return Err(PolyError::VarCap {
            index: p,
            cap: limits.max_vars,
        }
        .into());
    }
    if d.total_degree() > limits.max_degree {
        return Err(PolyError::DegreeCap {
            degree: d.total_degree(),
            cap: limits.max_degree,
        }
        .into());
    }
    let mut b = SlpBuilder::new(p, *limits);
    let graded = d.graded_terms();
    let mut acc: Option<usize> = None;
    for (exps, c) in graded.iter().filter(|(_, c)| *c > 0) {
        let t = b.scaled_term(exps, c.unsigned_abs())?;
        acc = Some(match acc {
            None => t,
            Some(a) => b.add(a, t)?,
        });
    }
    let mut acc = match acc {
        Some(a) => a,
        None => b.sub(0, 0)?,
    };
    for (exps, c) in graded.iter().filter(|(_, c)| *c < 0) {
        let t = b.scaled_term(exps, c.unsigned_abs())?;
        acc = b.sub(acc, t)?;
    }
    debug_assert_eq!(&b.terms[acc], d);
    Ok(Slp {
        nodes: b.nodes,
        terms: b.terms,
        output: acc,
        p,
    })
}

/// A system equivalent to `source = 0`, together with its audit trail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledSystem {
    pub system: EnSystem,
    pub source: Polynomial,
    pub p: usize,
    pub slp: Vec<SlpNode>,
    /// Polynomial meaning of every node.
    pub node_terms: Vec<Polynomial>,
    /// 1-based system variable carrying the value of `source`.
    pub q: usize,
}

/// Serialized form: the system JSON plus `slp`, `q`, `p` and `source`.
#[derive(Serialize, Deserialize)]
struct CompiledJson {
    n: usize,
    equations: Vec<EnEquation>,
    slp: Vec<SlpNode>,
    q: usize,
    p: usize,
    source: String,
}

/// System variable (1-based) for SLP node `node`: inputs keep their source
/// index, the constant node follows them, the rest keep their order.
pub fn node_var(node: usize, p: usize) -> usize {
    match node {
        0 => p + 1,
        i if i <= p => i,
        i => i + 1,
    }
}

impl CompiledSystem {
    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn to_json(&self) -> String {
        let j = CompiledJson {
            n: self.system.n(),
            equations: self.system.equations().copied().collect(),
            slp: self.slp.clone(),
            q: self.q,
            p: self.p,
            source: self.source.to_string(),
        };
        serde_json::to_string(&j).expect("compiled systems always serialize")
    }

    /// Rebuilds from JSON and re-derives node meanings from the SLP; the
    /// stored system must match the one the SLP induces.
    pub fn from_json(text: &str) -> Result<Self, CompileError> {
        let j: CompiledJson =
            serde_json::from_str(text).map_err(|e| CompileError::Precondition(e.to_string()))?;
        let source = crate::polynomial::parse_polynomial_with(
            &j.source,
            &crate::polynomial::ParseOptions {
                min_vars: j.p,
                ..Default::default()
            },
        )?;
        let compiled = compile(&source)?;
        let stored = EnSystem::new(j.n, j.equations)
            .map_err(|e| CompileError::Precondition(e.to_string()))?;
        if compiled.system != stored || compiled.slp != j.slp || compiled.q != j.q {
            return Err(CompileError::Precondition(
                "stored system does not match its straight-line program".into(),
            ));
        }
        Ok(compiled)
    }
}

/// Compiles `d = 0` with default caps.
pub fn compile(d: &Polynomial) -> Result<CompiledSystem, CompileError> {
    compile_with(d, &Limits::default())
}

pub fn compile_with(d: &Polynomial, limits: &Limits) -> Result<CompiledSystem, CompileError> {
    let slp = build_slp(d, limits)?;
    let p = slp.p;
    let n = slp.nodes.len();
    let var = |node: usize| node_var(node, p);
    let mut system = EnSystem::empty(n);
    for (id, node) in slp.nodes.iter().enumerate() {
        let eq = match *node {
            SlpNode::One => Some(EnEquation::Unit(var(id))),
            SlpNode::Input(_) => None,
            SlpNode::Add(l, r) => Some(EnEquation::sum(var(l), var(r), var(id))),
            SlpNode::SubVia(l, r) => Some(EnEquation::sum(var(r), var(id), var(l))),
            SlpNode::Mul(l, r) => Some(EnEquation::prod(var(l), var(r), var(id))),
        };
        if let Some(eq) = eq {
            system.insert(eq).expect("node indices are in range");
        }
    }
    let q = var(slp.output);
    system
        .insert(EnEquation::sum(q, q, q))
        .expect("node indices are in range");
    Ok(CompiledSystem {
        system,
        source: d.clone(),
        p,
        slp: slp.nodes,
        node_terms: slp.terms,
        q,
    })
}

/// Evaluates the program at `base`, returning the unique assignment that
/// satisfies every equation except possibly `x_q + x_q = x_q`.
pub fn extend_unique(c: &CompiledSystem, base: &[Int]) -> Result<Vec<Int>, CompileError> {
    if base.len() != c.p {
        return Err(CompileError::Arity {
            expected: c.p,
            got: base.len(),
        });
    }
    let mut vals: Vec<Int> = Vec::with_capacity(c.slp.len());
    for (id, node) in c.slp.iter().enumerate() {
        let v = match *node {
            SlpNode::One => Some(1),
            SlpNode::Input(v) => Some(base[v - 1]),
            SlpNode::Add(l, r) => vals[l].checked_add(vals[r]),
            SlpNode::SubVia(l, r) => vals[l].checked_sub(vals[r]),
            SlpNode::Mul(l, r) => vals[l].checked_mul(vals[r]),
        };
        vals.push(v.ok_or(CompileError::Overflow { node: id })?);
    }
    let mut out = vec![0; vals.len()];
    for (id, v) in vals.into_iter().enumerate() {
        out[node_var(id, c.p) - 1] = v;
    }
    Ok(out)
}

/// `W` with some variables lifted from naturals to integers by four squares.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LiftResult {
    pub polynomial: Polynomial,
    /// Lifted variable -> its four square-witness variables (all 1-based).
    pub var_map: BTreeMap<usize, [usize; 4]>,
}

/// `W^2 + sum over v in nat_vars of (v - a_v^2 - b_v^2 - c_v^2 - d_v^2)^2`.
///
/// Integer zeros of the result are exactly the integer zeros of `W` whose
/// `nat_vars` coordinates are non-negative, each extended by a four-square
/// representation of those coordinates.
pub fn lift_to_integers(w: &Polynomial, nat_vars: &[usize]) -> Result<LiftResult, CompileError> {
    lift_to_integers_with(w, nat_vars, &Limits::default())
}

pub fn lift_to_integers_with(
    w: &Polynomial,
    nat_vars: &[usize],
    limits: &Limits,
) -> Result<LiftResult, CompileError> {
    let mut lifted: Vec<usize> = nat_vars.to_vec();
    lifted.sort_unstable();
    lifted.dedup();
    if lifted.is_empty() {
        return Err(CompileError::Precondition("nat_vars must be nonempty".into()));
    }
    let k = w.num_vars();
    if let Some(&bad) = lifted.iter().find(|&&v| v == 0 || v > k) {
        return Err(CompileError::Precondition(format!(
            "x{bad} is not a variable of a polynomial in {k} variables"
        )));
    }
    let total = k + 4 * lifted.len();
    if total > limits.max_vars {
        return Err(PolyError::VarCap {
            index: total,
            cap: limits.max_vars,
        }
        .into());
    }
    let wide = w.with_num_vars(total);
    let mut acc = wide.checked_mul(&wide, limits)?;
    let mut var_map = BTreeMap::new();
    for (slot, &v) in lifted.iter().enumerate() {
        let fresh = [1, 2, 3, 4].map(|i| k + 4 * slot + i);
        let mut diff = Polynomial::var(total, v);
        for &f in &fresh {
            let sq = Polynomial::var(total, f).checked_pow(2, limits)?;
            diff = diff.checked_sub(&sq)?;
        }
        acc = acc.checked_add(&diff.checked_mul(&diff, limits)?)?;
        var_map.insert(v, fresh);
    }
    Ok(LiftResult {
        polynomial: acc,
        var_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::{parse_polynomial, parse_polynomial_with, ParseOptions};
    use num_bigint::BigInt;
    use num_traits::Zero;

    fn poly(t: &str) -> Polynomial {
        parse_polynomial(t).unwrap()
    }

    #[test]
    fn slp_for_xy_minus_one() {
        let slp = build_slp(&poly("x1*x2 - 1"), &Limits::default()).unwrap();
        assert_eq!(
            slp.nodes,
            vec![
                SlpNode::One,
                SlpNode::Input(1),
                SlpNode::Input(2),
                SlpNode::Mul(1, 2),
                SlpNode::SubVia(3, 0)
            ]
        );
        assert_eq!(slp.terms[3], poly("x1*x2"));
        assert_eq!(slp.terms[4], poly("x1*x2 - 1"));
    }

    #[test]
    fn slp_for_plain_variable_and_constant() {
        let c = compile(&poly("x1")).unwrap();
        assert_eq!(c.slp, vec![SlpNode::One, SlpNode::Input(1)]);
        assert_eq!(c.q, 1);
        let two = build_slp(&poly("2"), &Limits::default()).unwrap();
        assert_eq!(two.nodes, vec![SlpNode::One, SlpNode::Add(0, 0)]);
    }

    #[test]
    fn compiled_system_for_xy_minus_one() {
        let c = compile(&poly("x1*x2 - 1")).unwrap();
        let expected = crate::ensystem::parse_system(
            "x3 = 1\nx1 * x2 = x4\nx5 + x3 = x4\nx5 + x5 = x5",
        )
        .unwrap();
        assert_eq!(c.system, expected);
        assert_eq!(c.q, 5);
        assert_eq!(extend_unique(&c, &[1, 1]).unwrap(), vec![1, 1, 1, 1, 0]);
        let v = extend_unique(&c, &[2, 3]).unwrap();
        assert_eq!(v, vec![2, 3, 1, 6, 5]);
        assert!(!c.system.check(&v).unwrap());
    }

    #[test]
    fn parabola_extension_checks() {
        let c = compile(&poly("x1^2 - x2")).unwrap();
        let v = extend_unique(&c, &[3, 9]).unwrap();
        assert!(c.system.check(&v).unwrap());
    }

    #[test]
    fn zero_polynomial_compiles_to_tautology() {
        let zero = parse_polynomial_with("0", &ParseOptions { min_vars: 1, ..Default::default() }).unwrap();
        let c = compile(&zero).unwrap();
        assert_eq!(c.slp, vec![SlpNode::One, SlpNode::Input(1), SlpNode::SubVia(0, 0)]);
        for x in -5..=5 {
            let v = extend_unique(&c, &[x]).unwrap();
            assert!(c.system.check(&v).unwrap());
        }
    }

    #[test]
    fn negative_only_polynomial() {
        let c = compile(&poly("-3*x1 - 2")).unwrap();
        let q_node = (0..c.slp.len()).find(|&i| node_var(i, c.p) == c.q).unwrap();
        assert_eq!(c.node_terms[q_node], poly("-3*x1 - 2"));
        // negative coefficients only ever appear on subtraction nodes
        for (node, term) in c.slp.iter().zip(&c.node_terms) {
            if !matches!(node, SlpNode::SubVia(..)) {
                assert!(term.terms().values().all(|&coef| coef > 0), "{node:?}");
            }
        }
    }

    #[test]
    fn node_terms_are_distinct_and_deterministic() {
        let d = poly("x1^3 + 2*x1^2*x2 - 4*x2 + x1*x2 - 7");
        let c = compile(&d).unwrap();
        let mut seen = std::collections::HashSet::new();
        assert!(c.node_terms.iter().all(|t| seen.insert(t.clone())));
        assert_eq!(compile(&d).unwrap(), c);
        assert_eq!(c.system.n(), c.slp.len());
        let q_node = (0..c.slp.len()).find(|&i| node_var(i, c.p) == c.q).unwrap();
        assert_eq!(c.node_terms[q_node], d);
    }

    #[test]
    fn json_round_trip() {
        let c = compile(&poly("x1*x2 - 1")).unwrap();
        let json = c.to_json();
        assert!(json.contains(r#""slp":[["one"],["input",1],["input",2],["mul",1,2],["subvia",3,0]]"#));
        assert!(json.contains(r#""q":5"#));
        assert_eq!(CompiledSystem::from_json(&json).unwrap(), c);
        assert_eq!(EnSystem::from_json(&json).unwrap(), c.system);
    }

    #[test]
    fn lift_example_x1_minus_2() {
        let lift = lift_to_integers(&poly("x1 - 2"), &[1]).unwrap();
        assert_eq!(lift.var_map[&1], [2, 3, 4, 5]);
        let p = &lift.polynomial;
        let mut witnesses = 0;
        for x1 in -3..=3 {
            for a in -2..=2 {
                for b in -2..=2 {
                    for c in -2..=2 {
                        for d in -2..=2 {
                            if p.evaluate(&[x1, a, b, c, d]).unwrap().is_zero() {
                                assert_eq!(x1, 2);
                                witnesses += 1;
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(witnesses, 24);
    }

    #[test]
    fn lift_rejects_negative_target() {
        let lift = lift_to_integers(&poly("x1 + 1"), &[1]).unwrap();
        for x1 in -3..=3 {
            for a in -2..=2 {
                for b in -2..=2 {
                    let v = lift.polynomial.evaluate(&[x1, a, b, 0, 0]).unwrap();
                    assert!(v > BigInt::zero());
                }
            }
        }
    }

    #[test]
    fn lift_errors() {
        assert!(matches!(
            lift_to_integers(&poly("x1"), &[]),
            Err(CompileError::Precondition(_))
        ));
        assert!(matches!(
            lift_to_integers(&poly("x1*x2*x3 + x4"), &[1, 2, 3, 4]),
            Err(CompileError::Poly(PolyError::VarCap { .. }))
        ));
        assert!(lift_to_integers(&poly("x1"), &[2]).is_err());
    }
}
