use super::kernel::Wendland;
use crate::system::{ScalarField, VectorField};
use crate::{Error, Point, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

const MAX_CONDITION: f64 = 1e14;
const NODE_RESIDUAL_TOL: f64 = 1e-8;
const HEADER: &str = "complyap-collocation 1";

/// Buckets of node indices on a square grid of the kernel support radius.
#[derive(Clone, Debug)]
struct SpatialHash {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
}

impl SpatialHash {
    fn new(points: &[Point], cell: f64) -> SpatialHash {
        let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        SpatialHash { cell, buckets }
    }

    fn key(p: &Point, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    fn near(&self, p: &Point, mut f: impl FnMut(usize)) {
        let (i, j) = Self::key(p, self.cell);
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(b) = self.buckets.get(&(i + di, j + dj)) {
                    b.iter().for_each(|&k| f(k as usize));
                }
            }
        }
    }
}

/// Symmetric Hermite collocation solution of `∇τ′·X = h`.
#[derive(Clone, Debug)]
pub struct CollocationModel {
    kernel: Wendland,
    nodes: Vec<Point>,
    /// `X` at each node; evaluation needs nothing else from the field.
    vectors: Vec<Point>,
    coeffs: Vec<f64>,
    field_name: String,
    max_node_residual: f64,
    condition: f64,
    index: SpatialHash,
}

/// Fits `τ′ = Σ β_k (X_k·∇_y)Φ(x − y)|_{y = x_k}` so that `∇τ′·X = h` at
/// every node.
pub fn collocation_fit(
    x: &VectorField,
    nodes: &[Point],
    h: &ScalarField,
    kernel: Wendland,
) -> Result<CollocationModel> {
    if nodes.is_empty() {
        return Err(Error::InvalidInput("collocation needs at least one node".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for p in nodes {
        if !seen.insert((p.x.to_bits(), p.y.to_bits())) {
            return Err(Error::InvalidInput(format!("duplicate collocation node ({}, {})", p.x, p.y)));
        }
    }
    let vectors: Vec<Point> = nodes.iter().map(|p| x.eval(p)).collect();
    if let Some(p) = nodes.iter().zip(&vectors).find(|(_, v)| v.norm() == 0.0).map(|(p, _)| p) {
        return Err(Error::InvalidInput(format!("node ({}, {}) is an equilibrium", p.x, p.y)));
    }
    let n = nodes.len();
    let index = SpatialHash::new(nodes, kernel.support_radius());
    let c2 = kernel.c * kernel.c;
    let c4 = c2 * c2;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        index.near(&nodes[j], |k| {
            if k < j {
                return;
            }
            let d = nodes[j] - nodes[k];
            let r = kernel.c * d.norm();
            if r >= 1.0 {
                return;
            }
            let v = -(c2 * kernel.psi1(r) * vectors[j].dot(&vectors[k])
                + c4 * kernel.psi2(r) * d.dot(&vectors[j]) * d.dot(&vectors[k]));
            a[(j, k)] = v;
            a[(k, j)] = v;
        });
    }
    let rhs = DVector::from_iterator(n, nodes.iter().map(|p| h.eval(p)));
    let condition = condition_estimate(&a);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { estimate: condition });
    }
    let chol = a.clone().cholesky().ok_or(Error::IllConditioned { estimate: f64::INFINITY })?;
    let beta = chol.solve(&rhs);
    let mut model = CollocationModel {
        kernel,
        nodes: nodes.to_vec(),
        vectors,
        coeffs: beta.iter().copied().collect(),
        field_name: x.name().to_string(),
        max_node_residual: 0.0,
        condition,
        index,
    };
    model.max_node_residual = model
        .nodes
        .iter()
        .zip(&model.vectors)
        .map(|(p, v)| (model.gradient(p).dot(v) - h.eval(p)).abs())
        .fold(0.0, f64::max);
    if !(model.max_node_residual <= NODE_RESIDUAL_TOL) {
        return Err(Error::IllConditioned { estimate: condition });
    }
    Ok(model)
}

/// Spectral condition number for moderate sizes; for large systems the
/// squared ratio of the Cholesky diagonal extremes (a lower bound).
fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n <= 2500 {
        let ev = a.clone().symmetric_eigenvalues();
        let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
        if lo <= 0.0 {
            return f64::INFINITY;
        }
        hi / lo
    } else {
        match a.clone().cholesky() {
            Some(ch) => {
                let d = ch.l().diagonal();
                let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
                (hi / lo).powi(2)
            }
            None => f64::INFINITY,
        }
    }
}

impl CollocationModel {
    pub fn kernel(&self) -> Wendland {
        self.kernel
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn field_name(&self) -> &str {
        &self.field_name
    }

    pub fn max_node_residual(&self) -> f64 {
        self.max_node_residual
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn value(&self, p: &Point) -> f64 {
        let c2 = self.kernel.c * self.kernel.c;
        let mut s = 0.0;
        self.index.near(p, |k| {
            let d = p - self.nodes[k];
            let r = self.kernel.c * d.norm();
            if r < 1.0 {
                s -= self.coeffs[k] * c2 * self.kernel.psi1(r) * d.dot(&self.vectors[k]);
            }
        });
        s
    }

    pub fn gradient(&self, p: &Point) -> Point {
        let c2 = self.kernel.c * self.kernel.c;
        let c4 = c2 * c2;
        let mut g = Point::zeros();
        self.index.near(p, |k| {
            let d = p - self.nodes[k];
            let r = self.kernel.c * d.norm();
            if r < 1.0 {
                let xk = self.vectors[k];
                g -= self.coeffs[k] * (c2 * self.kernel.psi1(r) * xk + c4 * self.kernel.psi2(r) * d.dot(&xk) * d);
            }
        });
        g
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{HEADER}\nkernel wendland {} {}\nfield {}\nfit {:?} {:?}\nn {}\n",
            self.kernel.k,
            self.kernel.c,
            self.field_name,
            self.max_node_residual,
            self.condition,
            self.nodes.len()
        );
        for ((p, v), b) in self.nodes.iter().zip(&self.vectors).zip(&self.coeffs) {
            let _ = writeln!(s, "{} {} {} {} {}", p.x, p.y, v.x, v.y, b);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<CollocationModel> {
        let bad = |msg: String| Error::Parse(format!("collocation model: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(HEADER) {
            return Err(bad(format!("missing `{HEADER}` header")));
        }
        let mut field = |key: &str| -> Result<Vec<String>> {
            let l = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
            let f: Vec<String> = l.split_whitespace().map(str::to_string).collect();
            if f.first().map(String::as_str) != Some(key) {
                return Err(bad(format!("expected `{key}`, found `{l}`")));
            }
            Ok(f)
        };
        let k = field("kernel")?;
        if k.len() != 4 || k[1] != "wendland" {
            return Err(bad("kernel line must be `kernel wendland K C`".into()));
        }
        let kernel = Wendland::new(
            k[2].parse().map_err(|_| bad("bad kernel smoothness".into()))?,
            k[3].parse().map_err(|_| bad("bad shape parameter".into()))?,
        )?;
        let fname = field("field")?.get(1).cloned().unwrap_or_default();
        let fit = field("fit")?;
        let num = |i: usize| -> Result<f64> {
            fit.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("fit line must be `fit RESIDUAL CONDITION`".into()))
        };
        let (max_node_residual, condition) = (num(1)?, num(2)?);
        let n: usize = field("n")?.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad node count".into()))?;
        let (mut nodes, mut vectors, mut coeffs) = (Vec::new(), Vec::new(), Vec::new());
        for l in lines {
            let v: Vec<f64> = l
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(format!("bad row `{l}`")))?;
            if v.len() != 5 {
                return Err(bad(format!("row needs 5 numbers: `{l}`")));
            }
            nodes.push(Point::new(v[0], v[1]));
            vectors.push(Point::new(v[2], v[3]));
            coeffs.push(v[4]);
        }
        if nodes.len() != n || n == 0 {
            return Err(bad(format!("header says {n} nodes, found {}", nodes.len())));
        }
        let index = SpatialHash::new(&nodes, kernel.support_radius());
        Ok(CollocationModel { kernel, nodes, vectors, coeffs, field_name: fname, max_node_residual, condition, index })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CollocationModel> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Uniform node grid with the given spacing over a box, skipping rejected
/// points and equilibria.
pub fn grid_nodes(
    x: &VectorField,
    domain: &crate::system::Aabb,
    spacing: f64,
    keep: &dyn Fn(&Point) -> bool,
) -> Vec<Point> {
    let w = domain.width();
    let nx = (w.x / spacing).floor() as usize;
    let ny = (w.y / spacing).floor() as usize;
    let off = Point::new(0.5 * (w.x - nx as f64 * spacing), 0.5 * (w.y - ny as f64 * spacing));
    let mut out = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            let p = domain.lo + off + Point::new(i as f64 * spacing, j as f64 * spacing);
            if keep(&p) && x.eval(&p).norm() > 0.0 {
                out.push(p);
            }
        }
    }
    out
}

/// `count` nodes on `rings` concentric circles with geometric radii from
/// `r_in` to `r_out`, equal counts per ring and alternate rings rotated by
/// half a step. Suited to fields that commute with scaling.
pub fn annulus_nodes(center: Point, r_in: f64, r_out: f64, rings: usize, count: usize) -> Vec<Point> {
    let rings = rings.max(2);
    let q = (r_out / r_in).powf(1.0 / (rings - 1) as f64);
    let mut out = Vec::with_capacity(count);
    for i in 0..rings {
        let m = count / rings + usize::from(i < count % rings);
        let r = r_in * q.powi(i as i32);
        for k in 0..m {
            let a = std::f64::consts::PI * ((i % 2) as f64 + 2.0 * k as f64) / m as f64;
            out.push(center + Point::new(r * a.cos(), r * a.sin()));
        }
    }
    out
}
