//! Finite checks around the doubly exponential height bound.
//!
//! * [`relation_signature`] and [`find_growth_witness`]: the additive and
//!   multiplicative relations of a tuple, and a tuple `y` preserving them
//!   while outgrowing `|x_1|`.
//! * [`verify_psi`]: exhaustive verification over the annulus
//!   `2^(2^(n-1)) < |x_1| = max |x_i| <= 2^(2^n)`.
//! * [`pad_counterexample`]: lifts a failing tuple from `n` to `m >= n`
//!   variables by repeating `x_1`.
//! * [`enumerate_tn`]: the tuples that solve some system with finitely many
//!   integer solutions.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::{BigInt, BigUint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{fingerprint, Checkpoint};
use crate::ensystem::{sat_system, EnEquation, EnSystem};
use crate::solver::{decide_finiteness, escape_search, EscapeOutcome, SearchConfig, SearchError, Verdict};
use crate::{tower, tower_big, Int};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConjectureError {
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("finiteness of the maximal system of {tuple:?} is unknown: {reason}")]
    Incomplete { tuple: Vec<Int>, reason: String },
    #[error("checkpoint i/o: {0}")]
    Checkpoint(String),
}

/// The relations a tuple satisfies. Indices are 1-based; triples have `i <= j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationSignature {
    pub additive: BTreeSet<(usize, usize, usize)>,
    pub multiplicative: BTreeSet<(usize, usize, usize)>,
    /// Indices grouped by equal value, groups ordered by first index.
    pub equal_classes: Vec<Vec<usize>>,
}

impl RelationSignature {
    /// The relations as an `E_n` system without unit equations.
    pub fn to_system(&self, n: usize) -> EnSystem {
        let eqs = self
            .additive
            .iter()
            .map(|&(i, j, k)| EnEquation::Sum(i, j, k))
            .chain(self.multiplicative.iter().map(|&(i, j, k)| EnEquation::Prod(i, j, k)));
        EnSystem::new(n, eqs).expect("relation indices are in range")
    }

    /// Whether `y` satisfies every relation (equalities are not required).
    pub fn preserved_by(&self, y: &[Int]) -> bool {
        self.additive
            .iter()
            .all(|&(i, j, k)| y[i - 1].checked_add(y[j - 1]) == Some(y[k - 1]))
            && self
                .multiplicative
                .iter()
                .all(|&(i, j, k)| y[i - 1].checked_mul(y[j - 1]) == Some(y[k - 1]))
    }
}

pub fn relation_signature(x: &[Int]) -> RelationSignature {
    let n = x.len();
    let mut additive = BTreeSet::new();
    let mut multiplicative = BTreeSet::new();
    for i in 0..n {
        for j in i..n {
            let s = x[i].checked_add(x[j]);
            let p = x[i].checked_mul(x[j]);
            for k in 0..n {
                if s == Some(x[k]) {
                    additive.insert((i + 1, j + 1, k + 1));
                }
                if p == Some(x[k]) {
                    multiplicative.insert((i + 1, j + 1, k + 1));
                }
            }
        }
    }
    let mut equal_classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match equal_classes.iter_mut().find(|c| x[c[0] - 1] == x[i]) {
            Some(c) => c.push(i + 1),
            None => equal_classes.push(vec![i + 1]),
        }
    }
    RelationSignature {
        additive,
        multiplicative,
        equal_classes,
    }
}

/// Scaling by 2 preserves every additive relation and every multiplicative
/// relation whose product is zero.
fn scaling_applies(sig: &RelationSignature, x: &[Int]) -> bool {
    sig.multiplicative.iter().all(|&(_, _, k)| x[k - 1] == 0)
}

fn outgrows(y: &[Int], x1_abs: Int) -> bool {
    y.iter().any(|v| v.abs() > x1_abs)
}

/// A tuple `y` with `|y_i| <= y_budget` that preserves the relations of `x`
/// and has some `|y_i| > |x_1|`.
///
/// Tries `y = 2x` first, then searches the relation system for its smallest
/// solution above `|x_1|`. `None` means no witness exists within the budget
/// (or the search budget ran out).
pub fn find_growth_witness(x: &[Int], y_budget: Int) -> Option<Vec<Int>> {
    find_growth_witness_with(x, y_budget, &SearchConfig::default())
}

pub fn find_growth_witness_with(x: &[Int], y_budget: Int, cfg: &SearchConfig) -> Option<Vec<Int>> {
    let sig = relation_signature(x);
    witness_for(&sig, x, y_budget, cfg)
}

fn witness_for(sig: &RelationSignature, x: &[Int], y_budget: Int, cfg: &SearchConfig) -> Option<Vec<Int>> {
    let &x1 = x.first()?;
    let x1_abs = x1.abs();
    if scaling_applies(sig, x) {
        let y: Vec<Int> = x.iter().map(|v| 2 * v).collect();
        if outgrows(&y, x1_abs) && y.iter().all(|v| v.abs() <= y_budget) {
            return Some(y);
        }
    }
    if y_budget <= x1_abs {
        return None;
    }
    let sys = sig.to_system(x.len());
    match escape_search(&sys, x1_abs, y_budget, false, cfg) {
        Ok(EscapeOutcome::Escaped(y)) => Some(y),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// annulus verification

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PsiOutcome {
    Confirmed,
    /// Annulus tuples for which no witness was found within the budget.
    Unresolved { stuck: Vec<Vec<Int>> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCacheStats {
    /// Tuples answered by `y = 2x`.
    pub scaled: u64,
    pub hits: u64,
    pub misses: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiReport {
    pub n: usize,
    /// Exclusive lower bound `2^(2^(n-1))` on `|x_1|`.
    pub inner: Int,
    /// Inclusive upper bound `2^(2^n)` on `|x_1|`.
    pub outer: Int,
    pub outcome: PsiOutcome,
    pub tuples_checked: u64,
    /// Closed-form size of the annulus.
    pub expected_tuples: u64,
    pub distinct_signatures: usize,
    pub cache: WitnessCacheStats,
}

impl PsiReport {
    pub fn confirmed(&self) -> bool {
        self.outcome == PsiOutcome::Confirmed
    }
}

/// Options for [`verify_psi`].
#[derive(Debug, Clone)]
pub struct PsiOptions {
    /// Fixed witness box radius; `None` uses `4 * |x_1|` per tuple.
    pub y_budget: Option<Int>,
    pub max_n: usize,
    /// Required for `n >= 3`.
    pub long_running: bool,
    pub search: SearchConfig,
}

impl Default for PsiOptions {
    fn default() -> Self {
        PsiOptions {
            y_budget: None,
            max_n: 3,
            long_running: false,
            search: SearchConfig::default(),
        }
    }
}

/// Number of tuples with `inner < |x_1| = max |x_i| <= outer`.
pub fn annulus_size(n: usize, inner: Int, outer: Int) -> u64 {
    ((inner + 1)..=outer)
        .map(|m| 2 * ((2 * m + 1) as u64).pow(n as u32 - 1))
        .sum()
}

/// Per-partition result; one partition per value of `|x_1|`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct PsiPart {
    tuples: u64,
    stuck: Vec<Vec<Int>>,
    signatures: Vec<RelationSignature>,
    cache: WitnessCacheStats,
}

fn psi_partition(n: usize, m: Int, y_budget: Option<Int>, inner_cfg: &SearchConfig) -> PsiPart {
    let budget = y_budget.unwrap_or(4 * m);
    let mut part = PsiPart::default();
    let mut cache: HashMap<RelationSignature, Option<Vec<Int>>> = HashMap::new();
    let mut sigs: HashSet<RelationSignature> = HashSet::new();
    let mut x = vec![0 as Int; n];
    for x1 in [-m, m] {
        x[0] = x1;
        let rest = n - 1;
        let width = (2 * m + 1) as u64;
        let total = width.pow(rest as u32);
        for idx in 0..total {
            let mut r = idx;
            for slot in x.iter_mut().skip(1) {
                *slot = (r % width) as Int - m;
                r /= width;
            }
            part.tuples += 1;
            let sig = relation_signature(&x);
            let witness = if scaling_applies(&sig, &x) && 2 * m <= budget {
                part.cache.scaled += 1;
                Some(x.iter().map(|v| 2 * v).collect::<Vec<_>>())
            } else if let Some(cached) = cache.get(&sig) {
                part.cache.hits += 1;
                cached.clone()
            } else {
                part.cache.misses += 1;
                let w = witness_for(&sig, &x, budget, inner_cfg);
                cache.insert(sig.clone(), w.clone());
                w
            };
            let ok = match &witness {
                Some(y) => sig.preserved_by(y) && outgrows(y, m) && y.iter().all(|v| v.abs() <= budget),
                None => false,
            };
            assert!(witness.is_none() || ok, "witness {witness:?} failed re-verification for {x:?}");
            if !ok {
                part.stuck.push(x.clone());
            }
            sigs.insert(sig);
        }
    }
    part.signatures = sigs.into_iter().collect();
    part.signatures.sort();
    part
}

/// Verifies the bounded growth statement for `n` over the whole annulus.
pub fn verify_psi(n: usize, opts: &PsiOptions) -> Result<PsiReport, ConjectureError> {
    if n == 0 {
        return Err(ConjectureError::Precondition("n must be at least 1".into()));
    }
    if n > opts.max_n {
        return Err(ConjectureError::Precondition(format!(
            "n = {n} exceeds the configured cap {}",
            opts.max_n
        )));
    }
    if n >= 3 && !opts.long_running {
        return Err(ConjectureError::Precondition(format!(
            "n = {n} is a long-running experiment; enable it explicitly"
        )));
    }
    let (Some(inner), Some(outer)) = (tower(n as u32), tower(n as u32 + 1)) else {
        return Err(ConjectureError::Precondition("annulus exceeds the exact width".into()));
    };
    let key = fingerprint(&["psi", &n.to_string(), &format!("{:?}", opts.y_budget)]);
    let ckpt: Option<Checkpoint<PsiPart>> = opts
        .search
        .checkpoint
        .as_ref()
        .map(|p| Checkpoint::open(p, &key, opts.search.resume))
        .transpose()
        .map_err(|e| ConjectureError::Checkpoint(e.to_string()))?;
    let inner_cfg = SearchConfig {
        workers: 1,
        checkpoint: None,
        ..opts.search.clone()
    };
    let ms: Vec<Int> = ((inner + 1)..=outer).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.search.workers.max(1))
        .build()
        .expect("thread pool");
    let parts: Vec<Result<PsiPart, ConjectureError>> = pool.install(|| {
        ms.par_iter()
            .enumerate()
            .map(|(id, &m)| {
                if let Some(rec) = ckpt.as_ref().and_then(|c| c.completed(id)) {
                    return Ok(rec.payload.clone());
                }
                let part = psi_partition(n, m, opts.y_budget, &inner_cfg);
                if let Some(c) = &ckpt {
                    c.record(id, part.stuck.len() as u64, m.to_string(), part.clone())
                        .map_err(|e| ConjectureError::Checkpoint(e.to_string()))?;
                }
                Ok(part)
            })
            .collect()
    });
    let mut tuples = 0;
    let mut stuck = Vec::new();
    let mut sigs: HashSet<RelationSignature> = HashSet::new();
    let mut cache = WitnessCacheStats::default();
    for part in parts {
        let part = part?;
        tuples += part.tuples;
        stuck.extend(part.stuck);
        sigs.extend(part.signatures);
        cache.scaled += part.cache.scaled;
        cache.hits += part.cache.hits;
        cache.misses += part.cache.misses;
    }
    stuck.sort();
    let expected = annulus_size(n, inner, outer);
    let outcome = if stuck.is_empty() && tuples == expected {
        PsiOutcome::Confirmed
    } else {
        PsiOutcome::Unresolved { stuck }
    };
    Ok(PsiReport {
        n,
        inner,
        outer,
        outcome,
        tuples_checked: tuples,
        expected_tuples: expected,
        distinct_signatures: sigs.len(),
        cache,
    })
}

// ---------------------------------------------------------------------------
// padding

/// `(x_1 repeated m-n+1 times, x_2, ..., x_n)`, for `x_1` in the annulus of `m`.
pub fn pad_counterexample(x: &[Int], m: usize) -> Result<Vec<Int>, ConjectureError> {
    let n = x.len();
    if n == 0 || m < n {
        return Err(ConjectureError::Precondition(format!(
            "padding needs 1 <= n <= m, got n = {n}, m = {m}"
        )));
    }
    let x1 = BigInt::from(x[0]).magnitude().clone();
    let lo = tower_big(m as u32);
    let hi = tower_big(m as u32 + 1);
    if !(lo < x1 && x1 <= hi) {
        return Err(ConjectureError::Precondition(format!(
            "|x_1| = {x1} is outside (2^(2^{}), 2^(2^{m})]",
            m - 1
        )));
    }
    let mut out = vec![x[0]; m - n + 1];
    out.extend_from_slice(&x[1..]);
    Ok(out)
}

/// Index (1-based) in the padded tuple that position `i` of the original maps to.
pub fn padded_index(i: usize, n: usize, m: usize) -> usize {
    if i == 1 {
        1
    } else {
        i + (m - n)
    }
}

/// Projects a growth witness for the padded tuple back to `n` coordinates,
/// reading `x_1` from a block position that carries the growth if one does.
pub fn project_witness(y: &[Int], n: usize, x1_abs: Int) -> Vec<Int> {
    let m = y.len();
    let block = m - n + 1;
    let pick = (0..block).find(|&p| y[p].abs() > x1_abs).unwrap_or(0);
    let mut out = vec![y[pick]];
    out.extend_from_slice(&y[block..]);
    out
}

// ---------------------------------------------------------------------------
// T_n

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TnResult {
    pub n: usize,
    pub members: BTreeSet<Vec<Int>>,
    /// Sorted (non-decreasing) representatives of the permutation classes.
    pub representatives: BTreeSet<Vec<Int>>,
    pub candidates_checked: u64,
    pub conjecture_conditional: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TnOptions {
    pub escape_radius: Option<Int>,
    /// Permits `n > 3`, where results depend on the unproven height bound.
    pub allow_conditional: bool,
    pub search: SearchConfig,
}

fn sorted_tuples(n: usize, lo: Int, hi: Int) -> Vec<Vec<Int>> {
    fn rec(n: usize, start: Int, hi: Int, cur: &mut Vec<Int>, out: &mut Vec<Vec<Int>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in start..=hi {
            cur.push(v);
            rec(n, v, hi, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, lo, hi, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All orderings of `t` (distinct ones only).
pub fn permutations(t: &[Int]) -> BTreeSet<Vec<Int>> {
    let mut out = BTreeSet::new();
    let mut v = t.to_vec();
    v.sort();
    loop {
        out.insert(v.clone());
        // next lexicographic permutation
        let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
            break;
        };
        let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot exists");
        v.swap(i - 1, j);
        v[i..].reverse();
    }
    out
}

/// Tuples in `[-2^(2^(n-1)), 2^(2^(n-1))]^n` whose maximal satisfied system
/// has finitely many integer solutions.
///
/// Any finite system solved by `a` is a subset of `sat_system(a)`, so `a`
/// belongs to `T_n` exactly when `sat_system(a)` is finite. Only sorted
/// representatives are decided; membership is closed under permutation.
pub fn enumerate_tn(n: usize, opts: &TnOptions) -> Result<TnResult, ConjectureError> {
    if n == 0 {
        return Err(ConjectureError::Precondition("n must be at least 1".into()));
    }
    if n > 3 && !opts.allow_conditional {
        return Err(ConjectureError::Precondition(format!(
            "n = {n} > 3 relies on the unproven height bound; enable conditional results explicitly"
        )));
    }
    let bound = tower(n as u32)
        .ok_or_else(|| ConjectureError::Precondition("candidate box exceeds the exact width".into()))?;
    let candidates = sorted_tuples(n, -bound, bound);
    let inner_cfg = SearchConfig {
        workers: 1,
        checkpoint: None,
        ..opts.search.clone()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.search.workers.max(1))
        .build()
        .expect("thread pool");
    let verdicts: Vec<Result<bool, ConjectureError>> = pool.install(|| {
        candidates
            .par_iter()
            .map(|a| {
                let v = decide_finiteness(&sat_system(a), opts.escape_radius, &inner_cfg)?;
                match v.verdict {
                    Verdict::FiniteUnderConjecture { solutions } => {
                        debug_assert!(solutions.binary_search(a).is_ok());
                        Ok(true)
                    }
                    Verdict::InfiniteCertified { .. } => Ok(false),
                    Verdict::Unknown { reason } => Err(ConjectureError::Incomplete {
                        tuple: a.clone(),
                        reason,
                    }),
                }
            })
            .collect()
    });
    let mut representatives = BTreeSet::new();
    for (a, v) in candidates.iter().zip(verdicts) {
        if v? {
            representatives.insert(a.clone());
        }
    }
    let members = representatives.iter().flat_map(|r| permutations(r)).collect();
    Ok(TnResult {
        n,
        members,
        representatives,
        candidates_checked: candidates.len() as u64,
        conjecture_conditional: n > 3,
    })
}

/// `(1 + 2 * beta)^n`: the number of integer tuples of height at most `beta`.
pub fn solution_count_bound(n: usize, beta: &BigUint) -> Result<BigUint, ConjectureError> {
    if n == 0 {
        return Err(ConjectureError::Precondition("n must be at least 1".into()));
    }
    let base = BigUint::from(1u8) + BigUint::from(2u8) * beta;
    Ok(num_traits::pow(base, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triples(v: &[(usize, usize, usize)]) -> BTreeSet<(usize, usize, usize)> {
        v.iter().copied().collect()
    }

    #[test]
    fn signature_examples() {
        let s = relation_signature(&[3, 6, 9]);
        assert_eq!(s.additive, triples(&[(1, 1, 2), (1, 2, 3)]));
        assert_eq!(s.multiplicative, triples(&[(1, 1, 3)]));
        let z = relation_signature(&[0, 0]);
        assert_eq!(z.additive.len(), 6);
        assert_eq!(z.multiplicative.len(), 6);
        assert_eq!(z.equal_classes, vec![vec![1, 2]]);
        let t = relation_signature(&[3]);
        assert!(t.additive.is_empty() && t.multiplicative.is_empty());
    }

    #[test]
    fn witness_examples() {
        assert_eq!(find_growth_witness(&[3], 12), Some(vec![6]));
        assert_eq!(find_growth_witness(&[4, 2], 16), None);
        assert_eq!(find_growth_witness(&[5, 10], 20), Some(vec![10, 20]));
        assert_eq!(find_growth_witness(&[3], 0), None);
    }

    #[test]
    fn witness_by_search_when_scaling_fails() {
        // x2 * x2 = x1 has a multiplicative relation with nonzero product
        let x = [9, 3];
        let y = find_growth_witness(&x, 36).unwrap();
        assert!(relation_signature(&x).preserved_by(&y));
        assert!(y.iter().any(|v| v.abs() > 9));
        assert_eq!(y, vec![16, -4]);
    }

    #[test]
    fn psi_small_cases() {
        let r = verify_psi(1, &PsiOptions::default()).unwrap();
        assert!(r.confirmed());
        assert_eq!(r.tuples_checked, 4);
        let r0 = verify_psi(
            1,
            &PsiOptions {
                y_budget: Some(0),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            r0.outcome,
            PsiOutcome::Unresolved {
                stuck: vec![vec![-4], vec![-3], vec![3], vec![4]]
            }
        );
        assert!(verify_psi(3, &PsiOptions::default()).is_err());
        assert!(verify_psi(4, &PsiOptions { long_running: true, ..Default::default() }).is_err());
    }

    #[test]
    fn annulus_sizes() {
        assert_eq!(annulus_size(1, 2, 4), 4);
        assert_eq!(annulus_size(2, 4, 16), 528);
    }

    #[test]
    fn padding() {
        assert_eq!(pad_counterexample(&[20, 2, 3], 3).unwrap(), vec![20, 2, 3]);
        assert_eq!(pad_counterexample(&[300, 2, 3], 4).unwrap(), vec![300, 300, 2, 3]);
        assert_eq!(pad_counterexample(&[3], 1).unwrap(), vec![3]);
        assert!(pad_counterexample(&[5, 10], 3).is_err());
        assert!(pad_counterexample(&[5, 10, 1], 2).is_err());
        let padded = pad_counterexample(&[5, 10], 2).unwrap();
        assert_eq!(padded, vec![5, 10]);
    }

    #[test]
    fn padded_relations_transport() {
        // relation check on (5, 5, 10) regardless of the annulus precondition
        let sig = relation_signature(&[5, 5, 10]);
        for t in [(1, 1, 3), (1, 2, 3), (2, 2, 3)] {
            assert!(sig.additive.contains(&t));
        }
    }

    #[test]
    fn witness_projection() {
        assert_eq!(project_witness(&[1, 40, 2, 3], 3, 20), vec![40, 2, 3]);
        assert_eq!(project_witness(&[1, 2, 2, 30], 3, 20), vec![1, 2, 30]);
    }

    #[test]
    fn tn_small() {
        let t1 = enumerate_tn(1, &TnOptions::default()).unwrap();
        assert_eq!(t1.members, [vec![0], vec![1]].into_iter().collect());
        assert!(enumerate_tn(4, &TnOptions::default()).is_err());
    }

    #[test]
    fn permutation_closure() {
        assert_eq!(permutations(&[1, 2]).len(), 2);
        assert_eq!(permutations(&[1, 1, 2]).len(), 3);
        assert_eq!(permutations(&[3, 1, 2]).len(), 6);
    }

    #[test]
    fn count_bounds() {
        assert_eq!(solution_count_bound(2, &BigUint::from(4u8)).unwrap(), BigUint::from(81u8));
        assert_eq!(solution_count_bound(1, &BigUint::from(0u8)).unwrap(), BigUint::from(1u8));
        assert_eq!(solution_count_bound(3, &BigUint::from(16u8)).unwrap(), BigUint::from(35937u32));
        assert!(solution_count_bound(0, &BigUint::from(1u8)).is_err());
    }
}
