use criterion::{criterion_group, criterion_main, Criterion};
use enlab_core::ensystem::{gen_idempotent, gen_obs2};
use enlab_core::solver::count_in_box_with;
use enlab_core::{decide_finiteness, SearchBox, SearchConfig};

fn search(c: &mut Criterion) {
    let cfg = SearchConfig::default();
    c.bench_function("count idempotent n=10 r=1", |b| {
        let sys = gen_idempotent(10).unwrap();
        b.iter(|| count_in_box_with(&sys, &SearchBox::new(1), &cfg).unwrap())
    });
    c.bench_function("decide obs2 n=3", |b| {
        let sys = gen_obs2(3).unwrap();
        b.iter(|| decide_finiteness(&sys, None, &cfg).unwrap())
    });
}

criterion_group!(benches, search);
criterion_main!(benches);
