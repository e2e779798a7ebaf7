use criterion::{criterion_group, criterion_main, Criterion};
use enlab_core::{compile, parse_polynomial};

fn compile_bench(c: &mut Criterion) {
    let d = parse_polynomial("3*x1^3*x2 - 5*x2^2*x3 + 7*x1*x3 - 11").unwrap();
    c.bench_function("compile cubic", |b| b.iter(|| compile(&d).unwrap()));
}

criterion_group!(benches, compile_bench);
criterion_main!(benches);
