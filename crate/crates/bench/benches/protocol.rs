use criterion::{criterion_group, criterion_main, Criterion};

use qmpc_bench::workload;
use qmpc_core::{run_protocol, AdversaryStrategy, Behavior};

fn end_to_end(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_protocol");
    g.sample_size(10);
    for (n, m) in [(8usize, 16usize), (16, 32), (32, 64)] {
        let (p, circuit, inputs) = workload(n, m, 7);
        g.bench_function(format!("honest/n{n}_m{m}"), |b| {
            b.iter(|| run_protocol(&p, &circuit, &inputs, AdversaryStrategy::none(), 7).unwrap())
        });
        let bad: std::collections::BTreeSet<usize> = (0..n / 4).collect();
        g.bench_function(format!("equivocate/n{n}_m{m}"), |b| {
            b.iter(|| run_protocol(&p, &circuit, &inputs, AdversaryStrategy::new(bad.clone(), Behavior::Equivocate, 7), 7).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, end_to_end);
criterion_main!(benches);
