use std::hint::black_box;

use bvcov::aksz::build_covariant_theory;
use bvcov::curved::Curved;
use bvcov::models::model;
use bvcov::par;
use bvcov::tw::{cylinder, global_report, whitney, CechCochain, Cover};
use bvcov::{q, Expr};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn modes(c: &mut Criterion, group: &str, mut run: impl FnMut()) {
    let mut g = c.benchmark_group(group);
    for (name, seq) in [("parallel", false), ("sequential", true)] {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(&mut run));
    }
    par::set_sequential(false);
    g.finish();
}

/// `½[S_u, S_u]` for the magnetic particle in four dimensions.
fn magnetic_master_equation(c: &mut Criterion) {
    let m = model("magnetic-particle", &[q(-1), q(1), q(1), q(1)]).unwrap();
    let s = build_covariant_theory(&m.target).unwrap().s_u();
    let th = &m.target.theory;
    modes(c, "magnetic_mc_n4", || {
        black_box(Curved::new(th).mc_residual(black_box(&s)));
    });
}

/// Whitney forms of a 1-cochain on the 3-skeleton of a six-chart nerve.
fn whitney_map(c: &mut Criterion) {
    let names = ["A", "B", "C", "D", "E", "F"];
    let cover = Cover::complete(&names, 3);
    let mut ch = CechCochain::new(1);
    for (i, s) in cover.of_dim(1).enumerate() {
        ch.set(s, Expr::int(i as i64 + 1));
    }
    modes(c, "whitney_six_charts", || {
        black_box(whitney(&cover, black_box(&ch)));
    });
}

/// Global Maurer–Cartan check on a five-chart cylinder.
fn global_mc(c: &mut Criterion) {
    let data = cylinder(&[q(0), q(1), q(3), q(-2), q(5)]).unwrap();
    modes(c, "cylinder_five_charts", || {
        black_box(global_report(black_box(&data)).unwrap());
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = magnetic_master_equation, whitney_map, global_mc
}
criterion_main!(benches);
