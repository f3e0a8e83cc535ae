use super::grid::CellGrid;
use crate::flow::{flow_map, FlowMapConfig};
use crate::par::{self, Execution};
use crate::system::{Aabb, VectorField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphParams {
    /// Flight time `T` of every edge.
    pub time: f64,
    /// Inflation radius `ε`.
    pub eps: f64,
    pub samples_per_cell: usize,
    pub flow: FlowMapConfig,
}

#[derive(Clone, Debug)]
pub struct TransitionGraph {
    pub grid: CellGrid,
    pub params: GraphParams,
    /// Sorted, deduplicated successor lists.
    pub adj: Vec<Vec<u32>>,
    /// Cells with a sample whose trajectory left the inflated domain.
    pub exits: Vec<bool>,
}

impl TransitionGraph {
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, s)| s.iter().map(move |&j| (i, j as usize)))
    }

    /// A topological order of the cells, if the graph has no cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.adj.len();
        let mut indeg = vec![0usize; n];
        for (_, j) in self.edges() {
            indeg[j] += 1;
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = stack.pop() {
            order.push(i);
            for &j in &self.adj[i] {
                indeg[j as usize] -= 1;
                if indeg[j as usize] == 0 {
                    stack.push(j as usize);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

pub fn build_transition_graph(
    x: &VectorField,
    grid: &CellGrid,
    time: f64,
    eps: f64,
    samples_per_cell: usize,
    cfg: &FlowMapConfig,
) -> Result<TransitionGraph> {
    let params = GraphParams { time, eps, samples_per_cell, flow: *cfg };
    build_transition_graph_with(Execution::default(), x, grid, &params)
}

/// Edge construction is independent per cell; the assembly is ordered by
/// cell index, so the result does not depend on `exec`.
pub fn build_transition_graph_with(
    exec: Execution,
    x: &VectorField,
    grid: &CellGrid,
    params: &GraphParams,
) -> Result<TransitionGraph> {
    if !(params.time > 0.0) || !(params.eps > 0.0) {
        return Err(Error::InvalidInput(format!("need T > 0 and ε > 0, got {params:?}")));
    }
    params.flow.validate()?;
    let h = grid.h();
    let inflated = grid.domain.inflate(params.eps.max(h.x.max(h.y)));
    let fd = x.domain();
    let dom = Aabb::new(inflated.lo.sup(&fd.lo), inflated.hi.inf(&fd.hi));
    let field = x.clone().with_domain(dom);
    let rows = par::map_range(exec, grid.len(), |i| {
        let mut succ = Vec::new();
        let mut exit = false;
        for p in grid.samples(i, params.samples_per_cell) {
            match flow_map(&field, &p, params.time, &params.flow) {
                Ok(y) => grid.cells_near(&y, params.eps, &mut succ),
                Err(_) => exit = true,
            }
        }
        succ.sort_unstable();
        succ.dedup();
        (succ.into_iter().map(|j| j as u32).collect::<Vec<_>>(), exit)
    });
    let (adj, exits) = rows.into_iter().unzip();
    Ok(TransitionGraph { grid: *grid, params: *params, adj, exits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Point;

    #[test]
    fn constant_flow_is_acyclic() {
        let x = VectorField::fixture("constant").unwrap();
        let grid = CellGrid::new(Aabb::new(Point::zeros(), Point::new(1.0, 1.0)), 0.05).unwrap();
        let g = build_transition_graph(&x, &grid, 0.5, 0.05, 5, &FlowMapConfig::default()).unwrap();
        for (i, j) in g.edges() {
            assert!(grid.coords(j).0 > grid.coords(i).0, "edge {i}->{j} does not advance in x");
        }
        assert!(g.topological_order().is_some());
        assert!(g.exits.iter().any(|&e| e));
    }

    #[test]
    fn sink_origin_cell_has_self_loop() {
        let x = VectorField::fixture("linear_sink").unwrap();
        let grid = CellGrid::new(Aabb::square(1.0), 0.1).unwrap();
        let g = build_transition_graph(&x, &grid, 0.5, 1e-3, 5, &FlowMapConfig::default()).unwrap();
        let c = grid.cell_of(&Point::new(0.01, 0.01)).unwrap();
        assert!(g.has_edge(c, c));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let x = VectorField::fixture("limit_cycle").unwrap();
        let grid = CellGrid::new(Aabb::square(2.0), 0.1).unwrap();
        let p = GraphParams { time: 1.0, eps: 0.2, samples_per_cell: 5, flow: FlowMapConfig::default() };
        let a = build_transition_graph_with(Execution::Sequential, &x, &grid, &p).unwrap();
        let b = build_transition_graph_with(Execution::Parallel, &x, &grid, &p).unwrap();
        assert_eq!(a.adj, b.adj);
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = VectorField::fixture("constant").unwrap();
        let grid = CellGrid::new(Aabb::square(1.0), 0.5).unwrap();
        assert!(build_transition_graph(&x, &grid, 0.0, 0.1, 5, &FlowMapConfig::default()).is_err());
        assert!(build_transition_graph(&x, &grid, 1.0, -0.1, 5, &FlowMapConfig::default()).is_err());
    }
}
