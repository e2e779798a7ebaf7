//! Box-bounded exhaustive search over `E_n` systems.
//!
//! The search keeps an integer interval per variable and narrows the
//! intervals to bounds consistency before every branching step. Branching
//! enumerates narrow domains value by value and splits wide domains (at zero
//! first, then by bisection), so a variable determined by the others is
//! never enumerated. The domain of the first branching variable is cut into
//! a fixed number of partitions that are searched in parallel and merged in
//! partition order; the result does not depend on the worker count.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_bigint::BigUint;
use num_integer::{Integer, Roots};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkpoint::{fingerprint, Checkpoint};
use crate::ensystem::{EnEquation, EnSystem};
use crate::{tower, tower_big, Int};

/// Largest radius accepted by the search. Products of two in-box values
/// then stay far inside `i128`.
pub const MAX_RADIUS: Int = 1 << 62;

/// Default node budget per search.
pub const DEFAULT_NODE_BUDGET: u64 = 200_000_000;

/// Number of partitions of the top variable's domain.
const PARTITIONS: usize = 64;

/// Domains at most this wide are enumerated value by value.
const ENUM_WIDTH: Int = 8;

/// Propagation rounds per node before falling back to branching.
const MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("radius {radius} is outside 1..={max}")]
    BadRadius { radius: Int, max: Int },
    #[error("per-variable radii have length {got}, system has {expected} variables")]
    RadiiArity { expected: usize, got: usize },
    #[error("{0}")]
    Precondition(String),
    #[error("checkpoint i/o: {0}")]
    Checkpoint(String),
}

/// The search space `{-B, ..., B}^n`, optionally with per-variable radii.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBox {
    pub radius: Int,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_var: Option<Vec<Int>>,
}

impl SearchBox {
    pub fn new(radius: Int) -> Self {
        SearchBox {
            radius,
            per_var: None,
        }
    }

    pub fn with_radii(radii: Vec<Int>) -> Self {
        let radius = radii.iter().copied().max().unwrap_or(1).max(1);
        SearchBox {
            radius,
            per_var: Some(radii),
        }
    }

    pub fn radius_of(&self, var: usize) -> Int {
        match &self.per_var {
            Some(r) => r[var],
            None => self.radius,
        }
    }

    fn validate(&self, n: usize) -> Result<(), SearchError> {
        let check = |r: Int| {
            if (1..=MAX_RADIUS).contains(&r) {
                Ok(())
            } else {
                Err(SearchError::BadRadius {
                    radius: r,
                    max: MAX_RADIUS,
                })
            }
        };
        check(self.radius)?;
        if let Some(radii) = &self.per_var {
            if radii.len() != n {
                return Err(SearchError::RadiiArity {
                    expected: n,
                    got: radii.len(),
                });
            }
            radii.iter().try_for_each(|&r| check(r))?;
        }
        Ok(())
    }

    fn describe(&self) -> String {
        serde_json::to_string(self).expect("boxes serialize")
    }
}

/// Worker count, node budget and optional checkpointing.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub workers: usize,
    pub node_budget: u64,
    pub checkpoint: Option<PathBuf>,
    pub resume: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            workers: 1,
            node_budget: DEFAULT_NODE_BUDGET,
            checkpoint: None,
            resume: false,
        }
    }
}

impl SearchConfig {
    pub fn with_workers(workers: usize) -> Self {
        SearchConfig {
            workers,
            ..Default::default()
        }
    }

    fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .expect("thread pool")
    }
}

/// All solutions inside a box, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub solutions: Vec<Vec<Int>>,
    pub exhausted: bool,
    #[serde(rename = "box")]
    pub search_box: SearchBox,
}

// ---------------------------------------------------------------------------
// constraint store

#[derive(Debug, Clone, Copy)]
enum Con {
    Unit(usize),
    Sum(usize, usize, usize),
    Prod(usize, usize, usize),
}

impl From<&EnEquation> for Con {
    fn from(eq: &EnEquation) -> Self {
        match *eq {
            EnEquation::Unit(i) => Con::Unit(i - 1),
            EnEquation::Sum(i, j, k) => Con::Sum(i - 1, j - 1, k - 1),
            EnEquation::Prod(i, j, k) => Con::Prod(i - 1, j - 1, k - 1),
        }
    }
}

impl Con {
    fn holds(&self, v: &[Int]) -> bool {
        match *self {
            Con::Unit(i) => v[i] == 1,
            Con::Sum(i, j, k) => v[i].checked_add(v[j]) == Some(v[k]),
            Con::Prod(i, j, k) => v[i].checked_mul(v[j]) == Some(v[k]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Domains {
    lo: Vec<Int>,
    hi: Vec<Int>,
}

fn ceil_div(a: Int, b: Int) -> Int {
    -Integer::div_floor(&-a, &b)
}

fn ceil_sqrt(a: Int) -> Int {
    let s = a.sqrt();
    if s * s < a {
        s + 1
    } else {
        s
    }
}

impl Domains {
    fn fixed(&self, i: usize) -> bool {
        self.lo[i] == self.hi[i]
    }

    fn contains(&self, i: usize, v: Int) -> bool {
        self.lo[i] <= v && v <= self.hi[i]
    }

    /// Intersects variable `i` with `[lo, hi]`. Returns `Err` when empty,
    /// otherwise whether anything changed.
    fn narrow(&mut self, i: usize, lo: Int, hi: Int) -> Result<bool, ()> {
        let nlo = self.lo[i].max(lo);
        let nhi = self.hi[i].min(hi);
        if nlo > nhi {
            return Err(());
        }
        let changed = nlo != self.lo[i] || nhi != self.hi[i];
        self.lo[i] = nlo;
        self.hi[i] = nhi;
        Ok(changed)
    }

    /// Removes `v` from the domain of `i` when it sits at an endpoint.
    fn exclude_endpoint(&mut self, i: usize, v: Int) -> Result<bool, ()> {
        if self.lo[i] == v && self.hi[i] == v {
            return Err(());
        }
        if self.lo[i] == v {
            self.lo[i] += 1;
            return Ok(true);
        }
        if self.hi[i] == v {
            self.hi[i] -= 1;
            return Ok(true);
        }
        Ok(false)
    }

    fn propagate_sum(&mut self, i: usize, j: usize, k: usize) -> Result<bool, ()> {
        let mut ch = false;
        if i == j && j == k {
            return self.narrow(i, 0, 0);
        }
        if i == k {
            return self.narrow(j, 0, 0);
        }
        if j == k {
            return self.narrow(i, 0, 0);
        }
        if i == j {
            ch |= self.narrow(k, 2 * self.lo[i], 2 * self.hi[i])?;
            ch |= self.narrow(i, ceil_div(self.lo[k], 2), Integer::div_floor(&self.hi[k], &2))?;
            return Ok(ch);
        }
        ch |= self.narrow(k, self.lo[i] + self.lo[j], self.hi[i] + self.hi[j])?;
        ch |= self.narrow(i, self.lo[k] - self.hi[j], self.hi[k] - self.lo[j])?;
        ch |= self.narrow(j, self.lo[k] - self.hi[i], self.hi[k] - self.lo[i])?;
        Ok(ch)
    }

    /// Narrows `a` from `a * b = c` when `b`'s domain excludes zero.
    fn divide_into(&mut self, a: usize, b: usize, c: usize) -> Result<bool, ()> {
        let (blo, bhi) = (self.lo[b], self.hi[b]);
        if blo <= 0 && 0 <= bhi {
            return Ok(false);
        }
        let (clo, chi) = (self.lo[c], self.hi[c]);
        let mut lo = Int::MAX;
        let mut hi = Int::MIN;
        for num in [clo, chi] {
            for den in [blo, bhi] {
                lo = lo.min(ceil_div(num, den));
                hi = hi.max(Integer::div_floor(&num, &den));
            }
        }
        // c / b is monotone in each argument away from b = 0, so the real
        // quotient range is the hull of the corners; an empty integer range
        // makes narrow() fail.
        self.narrow(a, lo, hi)
    }

    fn propagate_prod(&mut self, i: usize, j: usize, k: usize) -> Result<bool, ()> {
        let mut ch = false;
        if i == j && j == k {
            return self.narrow(i, 0, 1);
        }
        if i == k || j == k {
            // x_a * x_b = x_a: x_a = 0 or x_b = 1
            let (a, b) = if i == k { (i, j) } else { (j, i) };
            if !self.contains(b, 1) {
                ch |= self.narrow(a, 0, 0)?;
            }
            if !self.contains(a, 0) {
                ch |= self.narrow(b, 1, 1)?;
            }
            return Ok(ch);
        }
        if i == j {
            let (lo, hi) = (self.lo[i], self.hi[i]);
            let (slo, shi) = if lo >= 0 {
                (lo * lo, hi * hi)
            } else if hi <= 0 {
                (hi * hi, lo * lo)
            } else {
                (0, (lo * lo).max(hi * hi))
            };
            ch |= self.narrow(k, slo, shi)?;
            let r = self.hi[k].sqrt();
            ch |= self.narrow(i, -r, r)?;
            if self.lo[k] > 0 {
                let m = ceil_sqrt(self.lo[k]);
                if self.lo[i] > -m {
                    ch |= self.narrow(i, m, Int::MAX)?;
                } else if self.hi[i] < m {
                    ch |= self.narrow(i, Int::MIN, -m)?;
                }
            }
            return Ok(ch);
        }
        let (ilo, ihi, jlo, jhi) = (self.lo[i], self.hi[i], self.lo[j], self.hi[j]);
        let corners = [ilo * jlo, ilo * jhi, ihi * jlo, ihi * jhi];
        let plo = *corners.iter().min().expect("four corners");
        let phi = *corners.iter().max().expect("four corners");
        ch |= self.narrow(k, plo, phi)?;
        if self.lo[k] > 0 || self.hi[k] < 0 {
            ch |= self.exclude_endpoint(i, 0)?;
            ch |= self.exclude_endpoint(j, 0)?;
            let m = self.lo[k].abs().max(self.hi[k].abs());
            ch |= self.narrow(i, -m, m)?;
            ch |= self.narrow(j, -m, m)?;
        }
        ch |= self.divide_into(i, j, k)?;
        ch |= self.divide_into(j, i, k)?;
        Ok(ch)
    }

    fn propagate(&mut self, cons: &[Con]) -> bool {
        for _ in 0..MAX_ROUNDS {
            let mut changed = false;
            for c in cons {
                let r = match *c {
                    Con::Unit(i) => self.narrow(i, 1, 1),
                    Con::Sum(i, j, k) => self.propagate_sum(i, j, k),
                    Con::Prod(i, j, k) => self.propagate_prod(i, j, k),
                };
                match r {
                    Err(()) => return false,
                    Ok(c) => changed |= c,
                }
            }
            if !changed {
                break;
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// depth-first engine

/// Receives solutions; may shrink the box for branch-and-bound.
trait Visitor {
    /// Returns false to stop the search of this partition.
    fn visit(&mut self, sol: &[Int]) -> bool;
    /// Current symmetric bound applied to every variable, if any.
    fn limit(&self) -> Option<Int> {
        None
    }
}

struct Engine<'a> {
    cons: &'a [Con],
    order: &'a [usize],
    nodes: &'a AtomicU64,
    budget: u64,
    abort: &'a AtomicBool,
}

#[derive(Debug)]
enum Stop {
    Budget,
    Done,
}

impl Engine<'_> {
    fn tick(&self) -> Result<(), Stop> {
        if self.abort.load(Ordering::Relaxed) {
            return Err(Stop::Budget);
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.budget {
            self.abort.store(true, Ordering::Relaxed);
            return Err(Stop::Budget);
        }
        Ok(())
    }

    fn dfs<V: Visitor>(&self, mut d: Domains, v: &mut V) -> Result<(), Stop> {
        self.tick()?;
        if let Some(r) = v.limit() {
            for i in 0..d.lo.len() {
                if d.narrow(i, -r, r).is_err() {
                    return Ok(());
                }
            }
        }
        if !d.propagate(self.cons) {
            return Ok(());
        }
        let Some(&var) = self.order.iter().find(|&&i| !d.fixed(i)) else {
            let sol = d.lo;
            if self.cons.iter().all(|c| c.holds(&sol)) && !v.visit(&sol) {
                return Err(Stop::Done);
            }
            return Ok(());
        };
        for (lo, hi) in split(d.lo[var], d.hi[var]) {
            let mut child = d.clone();
            child.lo[var] = lo;
            child.hi[var] = hi;
            self.dfs(child, v)?;
        }
        Ok(())
    }
}

/// Children of a domain: single values when narrow, otherwise a split at
/// zero or at the midpoint. Children closer to zero come first.
fn split(lo: Int, hi: Int) -> Vec<(Int, Int)> {
    if hi - lo < ENUM_WIDTH {
        let mut vals: Vec<Int> = (lo..=hi).collect();
        vals.sort_by_key(|&x| (x.abs(), x));
        return vals.into_iter().map(|x| (x, x)).collect();
    }
    if lo < 0 && 0 < hi {
        return vec![(0, 0), (1, hi), (lo, -1)];
    }
    let mid = lo + (hi - lo) / 2;
    if lo >= 0 {
        vec![(lo, mid), (mid + 1, hi)]
    } else {
        vec![(mid + 1, hi), (lo, mid)]
    }
}

/// Branching order: descending incidence, ties by index.
fn variable_order(sys: &EnSystem) -> Vec<usize> {
    let inc = sys.incidence();
    let mut order: Vec<usize> = (0..sys.n()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(inc[i]), i));
    order
}

/// A prepared search: constraints, initial domains and top-level partitions.
struct Plan {
    cons: Vec<Con>,
    order: Vec<usize>,
    root: Option<Domains>,
    partitions: Vec<Domains>,
    top: Option<usize>,
}

impl Plan {
    fn new(sys: &EnSystem, bx: &SearchBox) -> Result<Self, SearchError> {
        bx.validate(sys.n())?;
        let n = sys.n();
        let cons: Vec<Con> = sys.equations().map(Con::from).collect();
        let order = variable_order(sys);
        let mut d = Domains {
            lo: (0..n).map(|i| -bx.radius_of(i)).collect(),
            hi: (0..n).map(|i| bx.radius_of(i)).collect(),
        };
        if !d.propagate(&cons) {
            return Ok(Plan {
                cons,
                order,
                root: None,
                partitions: vec![],
                top: None,
            });
        }
        let top = order.iter().copied().find(|&i| !d.fixed(i));
        let partitions = match top {
            None => vec![d.clone()],
            Some(t) => {
                let (lo, hi) = (d.lo[t], d.hi[t]);
                let width = hi - lo + 1;
                let parts = (PARTITIONS as Int).min(width);
                let chunk = ceil_div(width, parts);
                let mut out = Vec::new();
                let mut start = lo;
                while start <= hi {
                    let end = (start + chunk - 1).min(hi);
                    let mut p = d.clone();
                    p.lo[t] = start;
                    p.hi[t] = end;
                    out.push(p);
                    start = end + 1;
                }
                out
            }
        };
        Ok(Plan {
            cons,
            order,
            root: Some(d),
            partitions,
            top,
        })
    }

    fn cursor(&self, part: &Domains) -> String {
        match self.top {
            Some(t) => part.hi[t].to_string(),
            None => "done".into(),
        }
    }

    /// Runs `make()`-built visitors over all partitions in parallel and
    /// returns them in partition order.
    fn run<V, F>(&self, cfg: &SearchConfig, make: F) -> Result<Vec<V>, SearchError>
    where
        V: Visitor + Send,
        F: Fn(usize) -> V + Sync,
    {
        let nodes = AtomicU64::new(0);
        let abort = AtomicBool::new(false);
        let engine = Engine {
            cons: &self.cons,
            order: &self.order,
            nodes: &nodes,
            budget: cfg.node_budget,
            abort: &abort,
        };
        let results: Vec<Result<V, Stop>> = cfg.pool().install(|| {
            self.partitions
                .par_iter()
                .enumerate()
                .map(|(id, part)| {
                    let mut v = make(id);
                    match engine.dfs(part.clone(), &mut v) {
                        Ok(()) | Err(Stop::Done) => Ok(v),
                        Err(Stop::Budget) => Err(Stop::Budget),
                    }
                })
                .collect()
        });
        results
            .into_iter()
            .map(|r| {
                r.map_err(|_| SearchError::BudgetExceeded {
                    budget: cfg.node_budget,
                })
            })
            .collect()
    }
}

struct Collect {
    sols: Vec<Vec<Int>>,
    skip: bool,
}

impl Visitor for Collect {
    fn visit(&mut self, sol: &[Int]) -> bool {
        if !self.skip {
            self.sols.push(sol.to_vec());
        }
        true
    }
}

struct Count {
    count: u64,
    skip: bool,
}

impl Visitor for Count {
    fn visit(&mut self, _sol: &[Int]) -> bool {
        if !self.skip {
            self.count += 1;
        }
        true
    }
}

fn open_checkpoint<P>(
    cfg: &SearchConfig,
    key: &str,
) -> Result<Option<Checkpoint<P>>, SearchError>
where
    P: Serialize + serde::de::DeserializeOwned + Clone,
{
    cfg.checkpoint
        .as_ref()
        .map(|path| {
            Checkpoint::open(path, key, cfg.resume).map_err(|e| SearchError::Checkpoint(e.to_string()))
        })
        .transpose()
}

/// Every assignment in `bx` satisfying `sys`, sorted lexicographically.
pub fn solve_in_box(sys: &EnSystem, bx: &SearchBox) -> Result<SolutionSet, SearchError> {
    solve_in_box_with(sys, bx, &SearchConfig::default())
}

pub fn solve_in_box_with(
    sys: &EnSystem,
    bx: &SearchBox,
    cfg: &SearchConfig,
) -> Result<SolutionSet, SearchError> {
    let plan = Plan::new(sys, bx)?;
    let key = fingerprint(&["solve", &sys.to_json(), &bx.describe()]);
    let ckpt: Option<Checkpoint<Vec<Vec<Int>>>> = open_checkpoint(cfg, &key)?;
    let done = |id: usize| ckpt.as_ref().and_then(|c| c.completed(id)).is_some();
    let parts = plan.run(cfg, |id| Collect {
        sols: vec![],
        skip: done(id),
    })?;
    let mut solutions = Vec::new();
    for (id, part) in parts.into_iter().enumerate() {
        match ckpt.as_ref().and_then(|c| c.completed(id)) {
            Some(rec) => solutions.extend(rec.payload.iter().cloned()),
            None => {
                if let Some(c) = &ckpt {
                    c.record(id, part.sols.len() as u64, plan.cursor(&plan.partitions[id]), part.sols.clone())
                        .map_err(|e| SearchError::Checkpoint(e.to_string()))?;
                }
                solutions.extend(part.sols);
            }
        }
    }
    solutions.sort();
    solutions.dedup();
    Ok(SolutionSet {
        solutions,
        exhausted: true,
        search_box: bx.clone(),
    })
}

/// Number of solutions in `bx`, without materializing them.
pub fn count_in_box(sys: &EnSystem, bx: &SearchBox) -> Result<u64, SearchError> {
    count_in_box_with(sys, bx, &SearchConfig::default())
}

pub fn count_in_box_with(
    sys: &EnSystem,
    bx: &SearchBox,
    cfg: &SearchConfig,
) -> Result<u64, SearchError> {
    let plan = Plan::new(sys, bx)?;
    let key = fingerprint(&["count", &sys.to_json(), &bx.describe()]);
    let ckpt: Option<Checkpoint<()>> = open_checkpoint(cfg, &key)?;
    let done = |id: usize| ckpt.as_ref().and_then(|c| c.completed(id)).is_some();
    let parts = plan.run(cfg, |id| Count {
        count: 0,
        skip: done(id),
    })?;
    let mut total = 0u64;
    for (id, part) in parts.into_iter().enumerate() {
        match ckpt.as_ref().and_then(|c| c.completed(id)) {
            Some(rec) => total += rec.solutions_found,
            None => {
                if let Some(c) = &ckpt {
                    c.record(id, part.count, plan.cursor(&plan.partitions[id]), ())
                        .map_err(|e| SearchError::Checkpoint(e.to_string()))?;
                }
                total += part.count;
            }
        }
    }
    Ok(total)
}

/// First solution in partition order (deterministic), if any.
fn find_any(sys: &EnSystem, bx: &SearchBox, cfg: &SearchConfig) -> Result<Option<Vec<Int>>, SearchError> {
    struct First(Option<Vec<Int>>);
    impl Visitor for First {
        fn visit(&mut self, sol: &[Int]) -> bool {
            self.0 = Some(sol.to_vec());
            false
        }
    }
    let plan = Plan::new(sys, bx)?;
    if plan.root.is_none() {
        return Ok(None);
    }
    let parts = plan.run(cfg, |_| First(None))?;
    Ok(parts.into_iter().find_map(|f| f.0))
}

fn height(sol: &[Int]) -> Int {
    sol.iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// Branch-and-bound visitor: collects solutions of height at most `inner`
/// and keeps the smallest (by height, then lexicographically) solution above
/// it. Once such a solution exists the inner list is no longer needed.
struct Escape {
    inner: Int,
    collect_inner: bool,
    inner_sols: Vec<Vec<Int>>,
    best: Option<(Int, Vec<Int>)>,
}

impl Visitor for Escape {
    fn visit(&mut self, sol: &[Int]) -> bool {
        let h = height(sol);
        if h <= self.inner {
            if self.collect_inner && self.best.is_none() {
                self.inner_sols.push(sol.to_vec());
            }
        } else {
            let cand = (h, sol.to_vec());
            if self.best.as_ref().is_none_or(|b| cand < *b) {
                self.best = Some(cand);
                self.inner_sols.clear();
            }
        }
        true
    }

    fn limit(&self) -> Option<Int> {
        self.best.as_ref().map(|(h, _)| *h)
    }
}

/// Outcome of an escape search: the smallest solution above `inner` within
/// `outer`, or every solution of height at most `inner`.
pub(crate) enum EscapeOutcome {
    Escaped(Vec<Int>),
    Contained(Vec<Vec<Int>>),
}

pub(crate) fn escape_search(
    sys: &EnSystem,
    inner: Int,
    outer: Int,
    collect_inner: bool,
    cfg: &SearchConfig,
) -> Result<EscapeOutcome, SearchError> {
    let plan = Plan::new(sys, &SearchBox::new(outer))?;
    let parts = plan.run(cfg, |_| Escape {
        inner,
        collect_inner,
        inner_sols: vec![],
        best: None,
    })?;
    let best = parts.iter().filter_map(|p| p.best.clone()).min();
    if let Some((_, w)) = best {
        return Ok(EscapeOutcome::Escaped(w));
    }
    let mut sols: Vec<Vec<Int>> = parts.into_iter().flat_map(|p| p.inner_sols).collect();
    sols.sort();
    Ok(EscapeOutcome::Contained(sols))
}

// ---------------------------------------------------------------------------
// finiteness

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    /// A checked solution with some `|x_i| > 2^(2^(n-1))`.
    InfiniteCertified { witness: Vec<Int> },
    /// No solution in the annulus up to the escape radius; all solutions.
    FiniteUnderConjecture { solutions: Vec<Vec<Int>> },
    Unknown { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinitenessVerdict {
    pub verdict: Verdict,
    pub bound: Int,
    pub escape_radius: Int,
    /// Set when `n > 3`, where the height bound is itself conjectural.
    pub conjecture_conditional: bool,
}

impl FinitenessVerdict {
    pub fn is_finite(&self) -> bool {
        matches!(self.verdict, Verdict::FiniteUnderConjecture { .. })
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.verdict, Verdict::InfiniteCertified { .. })
    }
}

/// Default escape radius `2^(2^n)`, when it fits the search width.
pub fn default_escape_radius(n: usize) -> Option<Int> {
    tower(n as u32 + 1).filter(|&r| r <= MAX_RADIUS)
}

/// Decides finiteness of the integer solution set of `sys`.
///
/// An infinite verdict always carries a checked witness above the bound
/// `2^(2^(n-1))`. A finite verdict means no solution exists in the annulus
/// up to `escape_radius` (default `2^(2^n)`); it is a proof only under the
/// height bound, which is established for `n <= 3`.
pub fn decide_finiteness(
    sys: &EnSystem,
    escape_radius: Option<Int>,
    cfg: &SearchConfig,
) -> Result<FinitenessVerdict, SearchError> {
    let n = sys.n();
    if n == 0 {
        return Err(SearchError::Precondition("system has no variables".into()));
    }
    let conditional = n > 3;
    let Some(bound) = tower(n as u32).filter(|&b| b < MAX_RADIUS) else {
        return Err(SearchError::Precondition(format!(
            "height bound 2^(2^{}) exceeds the exact search width",
            n - 1
        )));
    };
    let escape = match escape_radius.or_else(|| default_escape_radius(n)) {
        Some(r) => r,
        None => {
            return Ok(FinitenessVerdict {
                verdict: Verdict::Unknown {
                    reason: format!("default escape radius 2^(2^{n}) exceeds the exact search width"),
                },
                bound,
                escape_radius: 0,
                conjecture_conditional: conditional,
            })
        }
    };
    if escape <= bound || escape > MAX_RADIUS {
        return Err(SearchError::Precondition(format!(
            "escape radius {escape} must lie in ({bound}, {MAX_RADIUS}]"
        )));
    }
    let wrap = |verdict| FinitenessVerdict {
        verdict,
        bound,
        escape_radius: escape,
        conjecture_conditional: conditional,
    };
    let unknown = |e: SearchError| match e {
        SearchError::BudgetExceeded { .. } => Ok(wrap(Verdict::Unknown {
            reason: e.to_string(),
        })),
        other => Err(other),
    };

    // a variable in no equation can be moved past the bound freely
    let free = sys.free_variables();
    if let Some(&fv) = free.first() {
        let mut radii = vec![bound; n];
        for &f in &free {
            radii[f - 1] = 1;
        }
        match find_any(sys, &SearchBox::with_radii(radii), cfg) {
            Ok(Some(mut sol)) => {
                sol[fv - 1] = bound + 1;
                if sys.check(&sol).unwrap_or(false) {
                    return Ok(wrap(Verdict::InfiniteCertified { witness: sol }));
                }
            }
            Ok(None) => {}
            Err(e) => return unknown(e),
        }
    }

    match escape_search(sys, bound, escape, true, cfg) {
        Ok(EscapeOutcome::Escaped(w)) => {
            if sys.check(&w).unwrap_or(false) && height(&w) > bound {
                Ok(wrap(Verdict::InfiniteCertified { witness: w }))
            } else {
                Ok(wrap(Verdict::Unknown {
                    reason: "escape witness failed verification".into(),
                }))
            }
        }
        Ok(EscapeOutcome::Contained(sols)) => Ok(wrap(Verdict::FiniteUnderConjecture { solutions: sols })),
        Err(e) => unknown(e),
    }
}

/// Height of a solution list against `2^(2^(n-1))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub max_abs: Int,
    #[serde(serialize_with = "crate::solver::big_as_string")]
    pub bound: BigUint,
    pub holds: bool,
    pub saturated: bool,
}

pub(crate) fn big_as_string<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn check_conjecture_bound(sys: &EnSystem, solutions: &[Vec<Int>]) -> BoundReport {
    let max_abs = solutions.iter().map(|s| height(s)).max().unwrap_or(0);
    let bound = tower_big(sys.n() as u32);
    let max_big = BigUint::from(max_abs.unsigned_abs());
    BoundReport {
        n: sys.n(),
        max_abs,
        holds: max_big <= bound,
        saturated: max_big == bound,
        bound,
    }
}
