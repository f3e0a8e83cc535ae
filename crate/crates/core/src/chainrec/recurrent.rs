use super::graph::TransitionGraph;
use super::grid::CellGrid;
use super::scc::tarjan_scc;
use crate::system::Aabb;
use crate::{Error, Point, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Union of recurrent cells, grouped by strongly connected component.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentSet {
    pub grid: CellGrid,
    /// Sorted cell indices.
    pub cells: Vec<usize>,
    /// Each component's sorted cells; ordered by smallest cell index.
    pub components: Vec<Vec<usize>>,
    mask: Vec<bool>,
}

impl RecurrentSet {
    pub fn from_components(grid: CellGrid, mut components: Vec<Vec<usize>>) -> RecurrentSet {
        for c in &mut components {
            c.sort_unstable();
        }
        components.sort();
        let mut mask = vec![false; grid.len()];
        let mut cells: Vec<usize> = components.iter().flatten().copied().collect();
        cells.sort_unstable();
        for &c in &cells {
            mask[c] = true;
        }
        RecurrentSet { grid, cells, components, mask }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_recurrent(&self, idx: usize) -> bool {
        self.mask.get(idx).copied().unwrap_or(false)
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.grid.cell_of(p).is_some_and(|c| self.is_recurrent(c))
            || self.cells.iter().any(|&c| self.grid.cell_box(c).contains(p))
    }

    pub fn boxes(&self) -> impl Iterator<Item = Aabb> + '_ {
        self.cells.iter().map(|&c| self.grid.cell_box(c))
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        let b: Vec<Aabb> = self.boxes().collect();
        let corners: Vec<Point> = b.iter().flat_map(|b| [b.lo, b.hi]).collect();
        Aabb::around(corners.iter())
    }
}

/// Cells in a strongly connected component of size > 1 or with a self-loop.
pub fn recurrent_cells(graph: &TransitionGraph) -> RecurrentSet {
    let comps = tarjan_scc(&graph.adj).into_iter().filter(|c| c.len() > 1 || graph.has_edge(c[0], c[0])).collect();
    RecurrentSet::from_components(graph.grid, comps)
}

/// Euclidean distance to the union of recurrent cells: 0 inside, `+∞` if
/// the set is empty.
pub fn dist_to_recurrent(set: &RecurrentSet, p: &Point) -> f64 {
    set.boxes().map(|b| b.distance(p)).fold(f64::INFINITY, f64::min)
}

/// Text format: a `grid x_lo y_lo x_hi y_hi nx ny` header line, then one
/// `i j x_lo y_lo x_hi y_hi component` line per cell.
pub fn write_cell_file(set: &RecurrentSet, path: &Path) -> Result<()> {
    std::fs::write(path, cell_file_string(set))?;
    Ok(())
}

pub fn cell_file_string(set: &RecurrentSet) -> String {
    let g = &set.grid;
    let mut s =
        format!("grid {} {} {} {} {} {}\n", g.domain.lo.x, g.domain.lo.y, g.domain.hi.x, g.domain.hi.y, g.nx, g.ny);
    for (ci, comp) in set.components.iter().enumerate() {
        for &c in comp {
            let (i, j) = g.coords(c);
            let b = g.cell_box(c);
            let _ = writeln!(s, "{i} {j} {} {} {} {} {ci}", b.lo.x, b.lo.y, b.hi.x, b.hi.y);
        }
    }
    s
}

pub fn read_cell_file(path: &Path) -> Result<RecurrentSet> {
    parse_cell_file(&std::fs::read_to_string(path)?)
}

pub fn parse_cell_file(text: &str) -> Result<RecurrentSet> {
    let bad = |n: usize, msg: &str| Error::Parse(format!("cell file line {}: {msg}", n + 1));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (n0, head) = lines.next().ok_or_else(|| Error::Parse("empty cell file".into()))?;
    let f: Vec<&str> = head.split_whitespace().collect();
    if f.len() != 7 || f[0] != "grid" {
        return Err(bad(n0, "expected `grid x_lo y_lo x_hi y_hi nx ny`"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n0, "bad number"));
    let domain = Aabb::new(Point::new(num(f[1])?, num(f[2])?), Point::new(num(f[3])?, num(f[4])?));
    let nx: usize = f[5].parse().map_err(|_| bad(n0, "bad nx"))?;
    let ny: usize = f[6].parse().map_err(|_| bad(n0, "bad ny"))?;
    if nx == 0 || ny == 0 || !domain.is_valid() {
        return Err(bad(n0, "degenerate grid"));
    }
    let grid = CellGrid { domain, nx, ny };
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for (n, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(bad(n, "expected 7 fields"));
        }
        let i: usize = f[0].parse().map_err(|_| bad(n, "bad i"))?;
        let j: usize = f[1].parse().map_err(|_| bad(n, "bad j"))?;
        let ci: usize = f[6].parse().map_err(|_| bad(n, "bad component"))?;
        if i >= nx || j >= ny {
            return Err(bad(n, "cell outside grid"));
        }
        if comps.len() <= ci {
            comps.resize(ci + 1, Vec::new());
        }
        comps[ci].push(grid.index(i, j));
    }
    comps.retain(|c| !c.is_empty());
    Ok(RecurrentSet::from_components(grid, comps))
}
