//! Sequential against rayon execution on the two sample-parallel hot spots:
//! the cell transition graph and the finite-difference sampling of a
//! verification run.

use complyap::baselyap::fixture_base;
use complyap::chainrec::{build_transition_graph_with, CellGrid, GraphParams};
use complyap::construct::{construct_prescribed, ConstructConfig};
use complyap::flow::FlowMapConfig;
use complyap::par::{self, Execution};
use complyap::system::{Aabb, Region, ScalarField, VectorField};
use complyap::verify::fd_orbital_derivative_with;
use complyap::Point;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn transition_graph(c: &mut Criterion) {
    let x = VectorField::fixture("limit_cycle").unwrap();
    let grid = CellGrid::new(Aabb::square(2.0), 0.05).unwrap();
    let params = GraphParams { time: 1.0, eps: 0.1, samples_per_cell: 4, flow: FlowMapConfig::default() };
    let mut group = c.benchmark_group("transition_graph");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_transition_graph_with(exec, black_box(&x), &grid, &params).unwrap())
        });
    }
    group.finish();
}

fn verification_sampling(c: &mut Criterion) {
    let x = VectorField::fixture("linear_sink").unwrap();
    let k = Region::Annulus { center: Point::zeros(), r_in: 1.0, r_out: 1.5 };
    let g = ScalarField::constant(-1.0);
    let base = fixture_base("linear_sink").unwrap();
    let (tau, _) = construct_prescribed(&x, &k, &g, &base, None, &ConstructConfig::default()).unwrap();
    let pts = k.samples(200, 0);
    let cfg = FlowMapConfig::default();
    let mut group = c.benchmark_group("verification_sampling");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                par::map(exec, black_box(&pts), |p| {
                    fd_orbital_derivative_with(&tau, &x, p, 1e-4, &cfg).map(|d| (d - g.eval(p)).abs())
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, transition_graph, verification_sampling);
criterion_main!(benches);
