//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits non-zero if any check fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use enlab_core::compiler::extend_unique;
use enlab_core::conjecture::{annulus_size, enumerate_tn, permutations, verify_psi, PsiOptions, TnOptions};
use enlab_core::ensystem::{gen_idempotent, gen_ladder, gen_obs2, random_system, tilde_transform};
use enlab_core::polynomial::{enumerate_quadratic_solutions, quadratic_height_bound, QuadraticCoeffs};
use enlab_core::solver::{check_conjecture_bound, count_in_box_with, solve_in_box_with};
use enlab_core::{compile, decide_finiteness, EnSystem, Int, Polynomial, SearchBox, SearchConfig, Verdict};
use num_bigint::{BigInt, BigUint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn closure(reps: &[&[Int]]) -> BTreeSet<Vec<Int>> {
    reps.iter().flat_map(|r| permutations(r)).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.1?}, limit {limit:?}"))
}

fn diff(got: &BTreeSet<Vec<Int>>, want: &BTreeSet<Vec<Int>>) -> String {
    let extra: Vec<_> = got.difference(want).take(10).collect();
    let missing: Vec<_> = want.difference(got).take(10).collect();
    format!("unexpected {extra:?}, missing {missing:?}")
}

fn tn_check(n: usize, want: BTreeSet<Vec<Int>>, limit: Duration) -> Outcome {
    let start = Instant::now();
    let opts = TnOptions {
        search: SearchConfig::with_workers(workers()),
        ..Default::default()
    };
    let r = enumerate_tn(n, &opts).map_err(|e| e.to_string())?;
    ensure(r.members == want, || diff(&r.members, &want))?;
    within(limit, start)?;
    Ok(format!("{} members, {} candidates", r.members.len(), r.candidates_checked))
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn t1() -> Outcome {
    tn_check(1, closure(&[&[0], &[1]]), Duration::from_secs(60))
}

fn t2() -> Outcome {
    let reps: [&[Int]; 6] = [&[0, 0], &[1, 1], &[-1, 1], &[0, 1], &[1, 2], &[2, 4]];
    tn_check(2, closure(&reps), Duration::from_secs(60))
}

fn t3() -> Outcome {
    let reps: [&[Int]; 25] = [
        &[0, 0, 0],
        &[1, 1, 1],
        &[-1, -1, 1],
        &[0, 0, 1],
        &[1, 1, -1],
        &[1, 1, 0],
        &[1, 1, 2],
        &[2, 2, 1],
        &[2, 2, 4],
        &[4, 4, 2],
        &[1, -2, -1],
        &[1, -1, 0],
        &[1, -1, 2],
        &[1, 0, 2],
        &[1, 2, 3],
        &[1, 2, 4],
        &[2, 4, -2],
        &[2, 4, 0],
        &[2, 4, 6],
        &[2, 4, 8],
        &[2, 4, 16],
        &[-4, -2, 2],
        &[-2, -1, 2],
        &[3, 6, 9],
        &[4, 8, 16],
    ];
    tn_check(3, closure(&reps), Duration::from_secs(15 * 60))
}

fn psi(n: usize, want_tuples: u64) -> Outcome {
    let start = Instant::now();
    let opts = PsiOptions {
        search: SearchConfig::with_workers(workers()),
        ..Default::default()
    };
    let r = verify_psi(n, &opts).map_err(|e| e.to_string())?;
    ensure(r.confirmed(), || format!("outcome {:?}", r.outcome))?;
    ensure(r.tuples_checked == want_tuples, || format!("{} tuples checked", r.tuples_checked))?;
    within(Duration::from_secs(60), start)?;
    Ok(format!("{} tuples, {} signatures", r.tuples_checked, r.distinct_signatures))
}

fn psi1() -> Outcome {
    psi(1, 4)
}

fn psi2() -> Outcome {
    let closed: u64 = (5..=16u64).map(|m| 2 * (2 * m + 1)).sum();
    ensure(closed == 528 && annulus_size(2, 4, 16) == 528, || "closed form".into())?;
    psi(2, 528)
}

fn random_poly(rng: &mut ChaCha8Rng) -> Polynomial {
    let p = rng.gen_range(1..=3);
    loop {
        let terms = (0..rng.gen_range(1..=4)).map(|_| {
            let mut e = vec![0u32; p];
            for _ in 0..rng.gen_range(0..=3) {
                e[rng.gen_range(0..p)] += 1;
            }
            (e, rng.gen_range(-5..=5i64))
        });
        let d = Polynomial::from_terms(p, terms).unwrap();
        if !d.is_zero() {
            return d;
        }
    }
}

/// Bound on the value of `t` over `[-r, r]^p`: sum of `|c| * r^deg`.
fn value_bound(t: &Polynomial, r: Int) -> Int {
    t.terms()
        .iter()
        .map(|(e, c)| (*c as Int).abs() * r.pow(e.iter().sum::<u32>()))
        .sum()
}

fn compiled_zeros() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let r: Int = 8;
    let mut zeros_total = 0;
    for case in 0..25 {
        let d = random_poly(&mut rng);
        let c = compile(&d).map_err(|e| e.to_string())?;
        let p = d.num_vars();
        let side = (2 * r + 1) as usize;
        let mut zeros = BTreeSet::new();
        for idx in 0..side.pow(p as u32) {
            let mut rest = idx;
            let b: Vec<Int> = (0..p)
                .map(|_| {
                    let v = (rest % side) as Int - r;
                    rest /= side;
                    v
                })
                .collect();
            let is_zero = d.evaluate(&b).unwrap() == BigInt::from(0);
            let ext = extend_unique(&c, &b).map_err(|e| e.to_string())?;
            let holds = c.system.check(&ext).unwrap();
            ensure(holds == is_zero, || format!("case {case} ({d}) disagrees at {b:?}"))?;
            if is_zero {
                zeros.insert(b);
            }
        }
        // every system variable is some node; bound each by its polynomial
        let mut radii = vec![0; c.n()];
        for (node, t) in c.node_terms.iter().enumerate() {
            let v = enlab_core::compiler::node_var(node, c.p);
            radii[v - 1] = value_bound(t, r).max(1);
        }
        for rad in radii.iter_mut().take(p) {
            *rad = r;
        }
        let cfg = SearchConfig::with_workers(workers());
        let sols = solve_in_box_with(&c.system, &SearchBox::with_radii(radii), &cfg).map_err(|e| e.to_string())?;
        let projected: BTreeSet<Vec<Int>> = sols.solutions.iter().map(|s| s[..p].to_vec()).collect();
        ensure(sols.solutions.len() == zeros.len(), || {
            format!("case {case} ({d}): {} system solutions vs {} zeros", sols.solutions.len(), zeros.len())
        })?;
        ensure(projected == zeros, || format!("case {case} ({d}): {}", diff(&projected, &zeros)))?;
        zeros_total += zeros.len();
    }
    Ok(format!("25 polynomials, {zeros_total} zeros matched"))
}

fn obs2() -> Outcome {
    let cfg = SearchConfig::with_workers(workers());
    for n in 2..=5usize {
        let sys = gen_obs2(n).unwrap();
        let v = decide_finiteness(&sys, None, &cfg).map_err(|e| e.to_string())?;
        let mut top = vec![2 as Int];
        for i in 1..n {
            top.push(if i == 1 { 4 } else { top[i - 1] * top[i - 1] });
        }
        let want = vec![vec![0; n], top];
        match &v.verdict {
            Verdict::FiniteUnderConjecture { solutions } => {
                ensure(*solutions == want, || format!("n = {n}: solutions {solutions:?}"))?;
                let b = check_conjecture_bound(&sys, solutions);
                ensure(b.holds && b.saturated, || format!("n = {n}: bound report {b:?}"))?;
            }
            other => return Err(format!("n = {n}: verdict {other:?}")),
        }
    }
    Ok("n = 2..5 finite and saturating".into())
}

fn idempotent() -> Outcome {
    let start = Instant::now();
    let cfg = SearchConfig::with_workers(workers());
    for n in 1..=12usize {
        let c = count_in_box_with(&gen_idempotent(n).unwrap(), &SearchBox::new(1), &cfg).map_err(|e| e.to_string())?;
        ensure(c == 1 << n, || format!("n = {n}: count {c}"))?;
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("n = 1..12 in {:.2?}", start.elapsed()))
}

fn brute_force(sys: &EnSystem, r: Int) -> Vec<Vec<Int>> {
    let n = sys.n();
    let side = (2 * r + 1) as usize;
    let mut out = Vec::new();
    for idx in 0..side.pow(n as u32) {
        let mut rest = idx;
        let x: Vec<Int> = (0..n)
            .map(|_| {
                let v = (rest % side) as Int - r;
                rest /= side;
                v
            })
            .collect();
        if sys.equations().all(|e| e.holds(&x)) {
            out.push(x);
        }
    }
    out.sort();
    out
}

fn tilde_zero() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = SearchConfig::default();
    let bx = SearchBox::new(8);
    for case in 0..100 {
        let n = rng.gen_range(1..=4);
        let sys = random_system(&mut rng, n, 6);
        let plain = solve_in_box_with(&sys, &bx, &cfg).map_err(|e| e.to_string())?.solutions;
        ensure(plain == brute_force(&sys, 8), || format!("case {case}: solver disagrees with brute force on {sys}"))?;
        let tilde = solve_in_box_with(&tilde_transform(&sys), &bx, &cfg).map_err(|e| e.to_string())?.solutions;
        let mut want: BTreeSet<Vec<Int>> = plain.into_iter().collect();
        want.insert(vec![0; n]);
        let got: BTreeSet<Vec<Int>> = tilde.into_iter().collect();
        ensure(got == want, || format!("case {case}: {}", diff(&got, &want)))?;
    }
    Ok("100 systems".into())
}

fn quadratics() -> Outcome {
    let radii: [i64; 20] = [1, 2, 4, 5, 8, 9, 10, 13, 16, 17, 18, 20, 25, 26, 29, 32, 34, 36, 37, 50];
    for r2 in radii {
        let q = QuadraticCoeffs::new(1, 0, 1, 0, 0, -r2);
        let res = enumerate_quadratic_solutions(&q).map_err(|e| e.to_string())?;
        let m = BigUint::from(r2 as u64);
        let bound = BigUint::from(20u8) * m.pow(4);
        ensure(quadratic_height_bound(&q).unwrap() == bound, || format!("r^2 = {r2}: bound"))?;
        let mut want = Vec::new();
        for x in -8..=8 as Int {
            for y in -8..=8 as Int {
                if x * x + y * y == r2 as Int {
                    want.push((x, y));
                }
            }
        }
        ensure(res.finite && res.solutions == want, || format!("r^2 = {r2}: got {:?}", res.solutions))?;
        ensure(
            res.solutions.iter().all(|&(x, y)| BigUint::from(x.unsigned_abs().max(y.unsigned_abs())) <= bound),
            || format!("r^2 = {r2}: solution above the bound"),
        )?;
        if r2 == 2 {
            ensure(res.solutions == vec![(-1, -1), (-1, 1), (1, -1), (1, 1)], || "x^2 + y^2 = 2".into())?;
        }
    }
    Ok("20 circles".into())
}

fn ladder() -> Outcome {
    let cfg = SearchConfig::with_workers(workers());
    let mut total = 0;
    for n in 12..=20usize {
        let sys = gen_ladder(&EnSystem::empty(2), n).map_err(|e| e.to_string())?;
        ensure(sys.n() == n, || format!("n = {n}: {} variables", sys.n()))?;
        for r in [n as Int - 1, n as Int, n as Int + 3] {
            let sols = solve_in_box_with(&sys, &SearchBox::new(r), &cfg).map_err(|e| e.to_string())?;
            ensure(sols.solutions.iter().all(|s| s[1] == n as Int), || format!("n = {n}, radius {r}: x2 != n"))?;
            ensure((r >= n as Int) == !sols.solutions.is_empty(), || format!("n = {n}, radius {r}: solution count"))?;
            total += sols.solutions.len();
        }
    }
    Ok(format!("n = 12..20, {total} solutions sampled"))
}

fn determinism() -> Outcome {
    let run = |w: usize| -> Result<String, String> {
        let cfg = SearchConfig::with_workers(w);
        let mut out = Vec::new();
        let tn = enumerate_tn(2, &TnOptions { search: cfg.clone(), ..Default::default() }).map_err(|e| e.to_string())?;
        out.push(serde_json::to_string(&tn).unwrap());
        let psi = verify_psi(2, &PsiOptions { search: cfg.clone(), ..Default::default() }).map_err(|e| e.to_string())?;
        out.push(serde_json::to_string(&psi).unwrap());
        let v = decide_finiteness(&gen_obs2(4).unwrap(), None, &cfg).map_err(|e| e.to_string())?;
        out.push(serde_json::to_string(&v).unwrap());
        let c = count_in_box_with(&gen_idempotent(10).unwrap(), &SearchBox::new(1), &cfg).map_err(|e| e.to_string())?;
        out.push(c.to_string());
        let lad = gen_ladder(&EnSystem::empty(2), 13).unwrap();
        let s = solve_in_box_with(&lad, &SearchBox::new(15), &cfg).map_err(|e| e.to_string())?;
        out.push(serde_json::to_string(&s).unwrap());
        Ok(out.join("\n"))
    };
    let base = run(1)?;
    for w in [2, 8] {
        ensure(run(w)? == base, || format!("{w} workers differ from 1 worker"))?;
    }
    Ok("1, 2 and 8 workers agree".into())
}

fn main() {
    let checks: [Check; 12] = [
        ("T_1 enumeration", t1),
        ("T_2 enumeration", t2),
        ("T_3 enumeration", t3),
        ("growth bound n=1", psi1),
        ("growth bound n=2", psi2),
        ("compiled systems match polynomial zeros", compiled_zeros),
        ("obs2 systems n=2..5", obs2),
        ("idempotent counts n<=12", idempotent),
        ("tilde transform adds only zero", tilde_zero),
        ("quadratic corpus", quadratics),
        ("ladder forces x2 = n", ladder),
        ("worker-count determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in checks {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        match f() {
            Ok(detail) => println!("PASS {name}: {detail} ({:.1?})", start.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg} ({:.1?})", start.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
