//! Recurrent-cell approximations on the fixtures.

use complyap::chainrec::{
    build_transition_graph, build_transition_graph_with, cell_file_string, dist_to_recurrent, parse_cell_file,
    recurrent_cells, CellGrid, GraphParams, RecurrentSet,
};
use complyap::flow::FlowMapConfig;
use complyap::par::Execution;
use complyap::system::{Aabb, VectorField};
use complyap::Point;

fn recurrent(name: &str, half: f64, h: f64, time: f64, eps: f64) -> RecurrentSet {
    let x = VectorField::fixture(name).unwrap();
    let grid = CellGrid::new(Aabb::square(half), h).unwrap();
    recurrent_cells(&build_transition_graph(&x, &grid, time, eps, 4, &FlowMapConfig::default()).unwrap())
}

/// Distance to `{0} ∪ {‖x‖ = 1}`.
fn dist_to_attractors(p: &Point) -> f64 {
    p.norm().min((p.norm() - 1.0).abs())
}

fn corners(b: &Aabb) -> [Point; 4] {
    [b.lo, b.hi, Point::new(b.lo.x, b.hi.y), Point::new(b.hi.x, b.lo.y)]
}

/// Both directed distances between the recurrent cells and the attractors.
fn hausdorff_to_attractors(set: &RecurrentSet) -> f64 {
    let cells_to_set = set.boxes().flat_map(|b| corners(&b)).map(|p| dist_to_attractors(&p)).fold(0.0, f64::max);
    let targets = std::iter::once(Point::zeros()).chain((0..720).map(|i| {
        let a = i as f64 * std::f64::consts::TAU / 720.0;
        Point::new(a.cos(), a.sin())
    }));
    let set_to_cells = targets.map(|p| dist_to_recurrent(set, &p)).fold(0.0, f64::max);
    cells_to_set.max(set_to_cells)
}

fn diameter(set: &RecurrentSet) -> f64 {
    let pts: Vec<Point> = set.boxes().flat_map(|b| corners(&b)).collect();
    let mut d: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            d = d.max((p - q).norm());
        }
    }
    d
}

#[test]
fn limit_cycle_two_components_near_attractors() {
    let set = recurrent("limit_cycle", 2.0, 0.02, 1.0, 0.04);
    assert_eq!(set.components.len(), 2);
    let d = hausdorff_to_attractors(&set);
    assert!(d <= 0.1, "Hausdorff distance {d}");
    // one component around the origin, one around the circle
    let near_origin: Vec<bool> = set
        .components
        .iter()
        .map(|c| {
            c.iter().all(|&i| { let b = set.grid.cell_box(i); (0.5 * (b.lo + b.hi)).norm() } < 0.5)
        })
        .collect();
    assert_eq!(near_origin.iter().filter(|&&b| b).count(), 1);
}

#[test]
fn chi_e1_diameter_shrinks_with_h() {
    let coarse = recurrent("chi_e1", 1.0, 0.05, 1.0, 0.1);
    let fine = recurrent("chi_e1", 1.0, 0.01, 1.0, 0.02);
    assert!(!fine.is_empty());
    let (dc, df) = (diameter(&coarse), diameter(&fine));
    assert!(df < dc, "diameter h=0.01: {df}, h=0.05: {dc}");
    assert!(fine.contains(&Point::zeros()));
}

#[test]
fn constant_flow_graph_is_acyclic() {
    let x = VectorField::fixture("constant").unwrap();
    let grid = CellGrid::new(Aabb::new(Point::zeros(), Point::new(1.0, 1.0)), 0.05).unwrap();
    let g = build_transition_graph(&x, &grid, 0.5, 0.05, 4, &FlowMapConfig::default()).unwrap();
    for (i, j) in g.edges() {
        assert!(grid.coords(j).0 > grid.coords(i).0, "edge {i} -> {j} does not advance in x");
    }
    assert!(g.topological_order().is_some());
    assert!(recurrent_cells(&g).is_empty());
}

#[test]
fn parallel_and_sequential_graphs_agree() {
    let x = VectorField::fixture("limit_cycle").unwrap();
    let grid = CellGrid::new(Aabb::square(2.0), 0.1).unwrap();
    let params = GraphParams { time: 1.0, eps: 0.2, samples_per_cell: 4, flow: FlowMapConfig::default() };
    let a = build_transition_graph_with(Execution::Sequential, &x, &grid, &params).unwrap();
    let b = build_transition_graph_with(Execution::Parallel, &x, &grid, &params).unwrap();
    assert_eq!(a.adj, b.adj);
    assert_eq!(a.exits, b.exits);
}

#[test]
fn cell_file_round_trip_on_limit_cycle() {
    let set = recurrent("limit_cycle", 2.0, 0.1, 1.0, 0.2);
    let back = parse_cell_file(&cell_file_string(&set)).unwrap();
    assert_eq!(back, set);
}
