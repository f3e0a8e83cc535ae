//! Vector fields, scalar fields and the two field transformations used
//! before a construction: the completeness rescaling `X ↦ fX` and the
//! reduction of a prescribed derivative `g` to the constant `-1`.

use std::fmt;
use std::sync::Arc;

use crate::construct::bump::SmoothStep;
use crate::sampling::Halton2;
use crate::{Error, Point, Result};

mod spec;
pub use spec::{FieldSpec, RegionSpec, ScalarSpec};

pub type PointMap = dyn Fn(&Point) -> Point + Send + Sync;
pub type ScalarMap = dyn Fn(&Point) -> f64 + Send + Sync;
pub type FlowFn = dyn Fn(f64, &Point) -> Point + Send + Sync;

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub lo: Point,
    pub hi: Point,
}

impl Aabb {
    pub fn new(lo: Point, hi: Point) -> Self {
        Aabb { lo, hi }
    }

    pub fn square(half: f64) -> Self {
        Aabb::new(Point::new(-half, -half), Point::new(half, half))
    }

    pub fn from_bounds(b: [f64; 4]) -> Self {
        Aabb::new(Point::new(b[0], b[2]), Point::new(b[1], b[3]))
    }

    /// `[x_lo, x_hi, y_lo, y_hi]`
    pub fn bounds(&self) -> [f64; 4] {
        [self.lo.x, self.hi.x, self.lo.y, self.hi.y]
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        let d = Point::new(r, r);
        Aabb::new(self.lo - d, self.hi + d)
    }

    pub fn width(&self) -> Point {
        self.hi - self.lo
    }

    /// Euclidean distance from `p` to the box (0 inside).
    pub fn distance(&self, p: &Point) -> f64 {
        let dx = (self.lo.x - p.x).max(0.0).max(p.x - self.hi.x);
        let dy = (self.lo.y - p.y).max(0.0).max(p.y - self.hi.y);
        dx.hypot(dy)
    }

    pub fn is_valid(&self) -> bool {
        self.lo.x < self.hi.x && self.lo.y < self.hi.y
    }

    /// Smallest box containing all `points`, or `None` for an empty slice.
    pub fn around<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Aabb> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut b = Aabb::new(first, first);
        for p in it {
            b.lo = b.lo.inf(p);
            b.hi = b.hi.sup(p);
        }
        Some(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularity {
    Finite(u32),
    Smooth,
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularity::Finite(l) => write!(f, "C^{l}"),
            Regularity::Smooth => write!(f, "C^inf"),
        }
    }
}

/// A planar vector field on an axis-aligned working box.
#[derive(Clone)]
pub struct VectorField {
    name: String,
    domain: Aabb,
    regularity: Regularity,
    rhs: Arc<PointMap>,
    flow: Option<Arc<FlowFn>>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("regularity", &self.regularity)
            .field("closed_form_flow", &self.flow.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new(
        name: impl Into<String>,
        domain: Aabb,
        regularity: Regularity,
        rhs: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        VectorField { name: name.into(), domain, regularity, rhs: Arc::new(rhs), flow: None }
    }

    pub fn with_closed_form_flow(mut self, flow: impl Fn(f64, &Point) -> Point + Send + Sync + 'static) -> Self {
        self.flow = Some(Arc::new(flow));
        self
    }

    pub fn with_domain(mut self, domain: Aabb) -> Self {
        self.domain = domain;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Aabb {
        self.domain
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> Point {
        (self.rhs)(p)
    }

    pub fn closed_form_flow(&self, t: f64, p: &Point) -> Option<Point> {
        self.flow.as_ref().map(|f| f(t, p))
    }

    pub fn has_closed_form_flow(&self) -> bool {
        self.flow.is_some()
    }

    /// True if both share the same right-hand side (clones of one field).
    pub fn same_rhs(&self, other: &VectorField) -> bool {
        Arc::ptr_eq(&self.rhs, &other.rhs)
    }

    /// Built-in fixtures: `linear_sink`, `constant`, `limit_cycle`, `chi_e1`.
    pub fn fixture(name: &str) -> Result<VectorField> {
        let f = match name {
            "linear_sink" => VectorField::new("linear_sink", Aabb::square(12.0), Regularity::Smooth, |p| -p)
                .with_closed_form_flow(|t, p| p * (-t).exp()),
            "constant" => {
                VectorField::new("constant", Aabb::square(12.0), Regularity::Smooth, |_| Point::new(1.0, 0.0))
                    .with_closed_form_flow(|t, p| Point::new(p.x + t, p.y))
            }
            "limit_cycle" => {
                VectorField::new("limit_cycle", Aabb::square(4.0), Regularity::Smooth, |p| {
                    let s = 1.0 - p.norm_squared();
                    Point::new(p.x * s - p.y, p.y * s + p.x)
                })
                .with_closed_form_flow(|t, p| {
                    // r(t)^2 = r0^2 e^{2t} / (1 - r0^2 + r0^2 e^{2t}), θ(t) = θ0 + t
                    let r0sq = p.norm_squared();
                    if r0sq == 0.0 {
                        return *p;
                    }
                    let e2 = (2.0 * t).exp();
                    let rsq = r0sq * e2 / (1.0 - r0sq + r0sq * e2);
                    let k = (rsq / r0sq).sqrt();
                    let (s, c) = t.sin_cos();
                    Point::new(k * (c * p.x - s * p.y), k * (s * p.x + c * p.y))
                })
            }
            "chi_e1" => {
                VectorField::new("chi_e1", Aabb::square(4.0), Regularity::Smooth, |p| Point::new(p.norm_squared(), 0.0))
                    .with_closed_form_flow(|t, p| {
                        // the y-coordinate is conserved; x solves ẋ = x² + y²
                        let y = p.y;
                        if y == 0.0 {
                            Point::new(p.x / (1.0 - t * p.x), 0.0)
                        } else {
                            let a = y.abs();
                            Point::new(a * ((p.x / a).atan() + a * t).tan(), y)
                        }
                    })
            }
            other => return Err(Error::InvalidInput(format!("unknown vector field fixture `{other}`"))),
        };
        Ok(f)
    }

    pub fn polynomial(name: impl Into<String>, domain: Aabb, components: [Polynomial; 2]) -> VectorField {
        let [px, py] = components;
        VectorField::new(name, domain, Regularity::Smooth, move |p| Point::new(px.eval(p), py.eval(p)))
    }
}

/// Scalar field with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    value: Arc<ScalarMap>,
    gradient: Option<Arc<PointMap>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("gradient", &self.gradient.is_some()).finish()
    }
}

impl ScalarField {
    pub fn new(value: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField { value: Arc::new(value), gradient: None }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(move |_| c).with_gradient(|_| Point::zeros())
    }

    pub fn polynomial(poly: Polynomial) -> Self {
        let g = poly.clone();
        ScalarField::new(move |p| poly.eval(p)).with_gradient(move |p| g.gradient(p))
    }

    #[inline]
    pub fn eval(&self, p: &Point) -> f64 {
        (self.value)(p)
    }

    pub fn gradient(&self, p: &Point) -> Option<Point> {
        self.gradient.as_ref().map(|g| g(p))
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Analytic gradient if present, otherwise central differences.
    pub fn gradient_or_fd(&self, p: &Point) -> Point {
        if let Some(g) = self.gradient(p) {
            return g;
        }
        let h = 1e-6 * (1.0 + p.norm());
        let dx = Point::new(h, 0.0);
        let dy = Point::new(0.0, h);
        Point::new(
            (self.eval(&(p + dx)) - self.eval(&(p - dx))) / (2.0 * h),
            (self.eval(&(p + dy)) - self.eval(&(p - dy))) / (2.0 * h),
        )
    }
}

/// One monomial `coef · x^px · y^py`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub px: u32,
    pub py: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial(pub Vec<Monomial>);

impl Polynomial {
    pub fn from_table(rows: &[[f64; 3]]) -> Result<Self> {
        let mut terms = Vec::with_capacity(rows.len());
        for r in rows {
            if r[1] < 0.0 || r[2] < 0.0 || r[1].fract() != 0.0 || r[2].fract() != 0.0 {
                return Err(Error::InvalidInput(format!("bad exponent in polynomial row {r:?}")));
            }
            terms.push(Monomial { coef: r[0], px: r[1] as u32, py: r[2] as u32 });
        }
        Ok(Polynomial(terms))
    }

    pub fn eval(&self, p: &Point) -> f64 {
        self.0.iter().map(|m| m.coef * p.x.powi(m.px as i32) * p.y.powi(m.py as i32)).sum()
    }

    pub fn gradient(&self, p: &Point) -> Point {
        let mut g = Point::zeros();
        for m in &self.0 {
            if m.px > 0 {
                g.x += m.coef * m.px as f64 * p.x.powi(m.px as i32 - 1) * p.y.powi(m.py as i32);
            }
            if m.py > 0 {
                g.y += m.coef * m.py as f64 * p.x.powi(m.px as i32) * p.y.powi(m.py as i32 - 1);
            }
        }
        g
    }
}

/// Compact regions used as `K`.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Empty,
    Point(Point),
    Points(Vec<Point>),
    Box(Aabb),
    Annulus { center: Point, r_in: f64, r_out: f64 },
}

impl Region {
    pub fn is_empty(&self) -> bool {
        match self {
            Region::Empty => true,
            Region::Points(v) => v.is_empty(),
            _ => false,
        }
    }

    /// Euclidean distance to the region (0 inside, +∞ for the empty region).
    pub fn distance(&self, p: &Point) -> f64 {
        match self {
            Region::Empty => f64::INFINITY,
            Region::Point(c) => (p - c).norm(),
            Region::Points(v) => v.iter().map(|c| (p - c).norm()).fold(f64::INFINITY, f64::min),
            Region::Box(b) => b.distance(p),
            Region::Annulus { center, r_in, r_out } => {
                let r = (p - center).norm();
                (r_in - r).max(r - r_out).max(0.0)
            }
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Region::Empty => false,
            Region::Box(b) => b.contains(p),
            Region::Annulus { center, r_in, r_out } => {
                let r = (p - center).norm();
                r >= *r_in && r <= *r_out
            }
            _ => self.distance(p) == 0.0,
        }
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        match self {
            Region::Empty => None,
            Region::Point(c) => Some(Aabb::new(*c, *c)),
            Region::Points(v) => Aabb::around(v.iter()),
            Region::Box(b) => Some(*b),
            Region::Annulus { center, r_out, .. } => {
                Some(Aabb::new(center - Point::new(*r_out, *r_out), center + Point::new(*r_out, *r_out)))
            }
        }
    }

    /// `n` quasi-random points of the region. Finite regions return all of
    /// their points regardless of `n`.
    pub fn samples(&self, n: usize, seed: u64) -> Vec<Point> {
        match self {
            Region::Empty => Vec::new(),
            Region::Point(c) => vec![*c],
            Region::Points(v) => v.clone(),
            Region::Box(b) => Halton2::new(seed)
                .take(n)
                .map(|[u, v]| Point::new(b.lo.x + u * b.width().x, b.lo.y + v * b.width().y))
                .collect(),
            Region::Annulus { center, r_in, r_out } => Halton2::new(seed)
                .take(n)
                .map(|[u, v]| {
                    // area-uniform in r
                    let r = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
                    let th = 2.0 * std::f64::consts::PI * v;
                    center + Point::new(r * th.cos(), r * th.sin())
                })
                .collect(),
        }
    }
}

/// `X ↦ fX` with `f = 1/(1 + ‖X‖)`: same orbits and chain-recurrent set,
/// speed below 1.
pub fn rescale_complete(x: &VectorField) -> VectorField {
    let raw = x.clone();
    VectorField::new(format!("rescaled({})", x.name()), x.domain(), x.regularity(), move |p| {
        let v = raw.eval(p);
        v / (1.0 + v.norm())
    })
}

/// The rescaling factor `f(p) = 1/(1 + ‖X(p)‖)`.
pub fn rescale_factor(x: &VectorField, p: &Point) -> f64 {
    1.0 / (1.0 + x.eval(p).norm())
}

/// Result of [`reduce_to_unit`]: the field `X_g = -X/ĝ` and the blended `ĝ`.
#[derive(Clone, Debug)]
pub struct UnitReduction {
    pub field: VectorField,
    pub g_hat: ScalarField,
}

/// `U_K = {p : dist(p, K) < uk_margin}`; `ĝ` equals `g` on `K`, `-1` from
/// distance `collar` on, blended by a smooth step in between.
pub fn reduce_to_unit(
    x: &VectorField,
    g: &ScalarField,
    k: &Region,
    uk_margin: f64,
    collar: f64,
) -> Result<UnitReduction> {
    if !(uk_margin > 0.0) || !(collar > 0.0) || collar > uk_margin {
        return Err(Error::InvalidInput(format!("need 0 < collar ≤ U_K margin (collar {collar}, margin {uk_margin})")));
    }
    for p in uk_samples(k, uk_margin, 2000) {
        let v = g.eval(&p);
        if !(v < 0.0) {
            return Err(Error::Rejected(format!("g must be negative on U_K, but g({}, {}) = {v}", p.x, p.y)));
        }
    }
    let blend = SmoothStep::new(0.0, collar);
    let (g1, k1) = (g.clone(), k.clone());
    let g_hat = ScalarField::new(move |p| {
        if k1.is_empty() {
            return -1.0;
        }
        let b = blend.value(k1.distance(p));
        if b == 0.0 {
            g1.eval(p)
        } else if b == 1.0 {
            -1.0
        } else {
            (1.0 - b) * g1.eval(p) - b
        }
    });
    let (raw, gh) = (x.clone(), g_hat.clone());
    let field =
        VectorField::new(format!("unit({})", x.name()), x.domain(), x.regularity(), move |p| -raw.eval(p) / gh.eval(p));
    Ok(UnitReduction { field, g_hat })
}

/// Sample points of `K` and its `margin`-neighbourhood.
fn uk_samples(k: &Region, margin: f64, n: usize) -> Vec<Point> {
    let Some(bb) = k.bounding_box() else {
        return Vec::new();
    };
    let mut pts = k.samples(n / 2, 3);
    let outer = bb.inflate(margin * 0.999);
    pts.extend(
        Halton2::new(11)
            .take(n)
            .map(|[u, v]| Point::new(outer.lo.x + u * outer.width().x, outer.lo.y + v * outer.width().y))
            .filter(|p| k.distance(p) < margin),
    );
    pts
}

/// The fields a construction runs on, derived from the raw field `X` and
/// the prescribed `g`.
///
/// `Y = fX` is the rescaled field. The target against `Y` is `f·g` on `K`,
/// and `Z = -Y/ĝ` is the field whose flow boxes the construction uses. A
/// derivative `d_Z = ∇τ·Z` converts back to `∇τ·X = -(ĝ/f)·d_Z`.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub raw: VectorField,
    pub rescaled: VectorField,
    pub g: ScalarField,
    pub region: Region,
    pub unit: UnitReduction,
}

impl ReducedSystem {
    pub fn new(raw: &VectorField, g: &ScalarField, k: &Region, uk_margin: f64, collar_fraction: f64) -> Result<Self> {
        let rescaled = rescale_complete(raw);
        let (r1, g1) = (raw.clone(), g.clone());
        let target = ScalarField::new(move |p| rescale_factor(&r1, p) * g1.eval(p));
        let unit = reduce_to_unit(&rescaled, &target, k, uk_margin, collar_fraction * uk_margin)?;
        Ok(ReducedSystem { raw: raw.clone(), rescaled, g: g.clone(), region: k.clone(), unit })
    }

    /// The field the construction integrates.
    pub fn field(&self) -> &VectorField {
        &self.unit.field
    }

    /// Factor `c(p) > 0` with `∇τ·X = c(p) · ∇τ·Z`.
    pub fn to_raw_factor(&self, p: &Point) -> f64 {
        -self.unit.g_hat.eval(p) / rescale_factor(&self.raw, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rescale_examples() {
        let zero = VectorField::new("z", Aabb::square(1.0), Regularity::Smooth, |_| Point::zeros());
        assert_eq!(rescale_complete(&zero).eval(&Point::new(0.3, 0.1)), Point::zeros());

        let c = VectorField::new("c", Aabb::square(1.0), Regularity::Smooth, |_| Point::new(3.0, 4.0));
        let v = rescale_complete(&c).eval(&Point::zeros());
        assert_abs_diff_eq!(v.x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y, 2.0 / 3.0, epsilon = 1e-15);

        let sink = VectorField::fixture("linear_sink").unwrap();
        let v = rescale_complete(&sink).eval(&Point::new(1.0, 0.0));
        assert_abs_diff_eq!(v.x, -0.5, epsilon = 1e-15);
        assert_eq!(v.y, 0.0);
    }

    #[test]
    fn rescaled_speed_below_one() {
        let lc = rescale_complete(&VectorField::fixture("limit_cycle").unwrap());
        for [u, v] in Halton2::new(1).take(500) {
            let p = Point::new(8.0 * u - 4.0, 8.0 * v - 4.0);
            assert!(lc.eval(&p).norm() < 1.0);
        }
    }

    fn annulus() -> Region {
        Region::Annulus { center: Point::zeros(), r_in: 1.0, r_out: 1.5 }
    }

    #[test]
    fn reduce_identity_for_minus_one() {
        let sink = VectorField::fixture("linear_sink").unwrap();
        let red = reduce_to_unit(&sink, &ScalarField::constant(-1.0), &annulus(), 0.5, 0.05).unwrap();
        for p in [Point::new(1.2, 0.3), Point::new(2.5, -1.0), Point::new(0.1, 0.0)] {
            assert_abs_diff_eq!((red.field.eval(&p) - sink.eval(&p)).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn reduce_constant_and_quadratic_g() {
        let sink = VectorField::fixture("linear_sink").unwrap();
        let red = reduce_to_unit(&sink, &ScalarField::constant(-2.0), &annulus(), 0.5, 0.05).unwrap();
        let v = red.field.eval(&Point::new(1.0, 0.0));
        assert_abs_diff_eq!(v.x, -0.5, epsilon = 1e-15);

        let k = Region::Annulus { center: Point::zeros(), r_in: 1.5, r_out: 2.5 };
        let g = ScalarField::new(|p| -p.norm_squared());
        let red = reduce_to_unit(&sink, &g, &k, 0.5, 0.05).unwrap();
        let v = red.field.eval(&Point::new(2.0, 0.0));
        assert_abs_diff_eq!(v.x, -0.5, epsilon = 1e-15);
        assert_eq!(v.y, 0.0);
    }

    #[test]
    fn reduce_rejects_nonnegative_g() {
        let sink = VectorField::fixture("linear_sink").unwrap();
        let g = ScalarField::new(|p| p.x - 1.4);
        let err = reduce_to_unit(&sink, &g, &annulus(), 0.5, 0.05).unwrap_err();
        assert!(matches!(err, Error::Rejected(_)));
    }

    #[test]
    fn reduced_field_is_positively_parallel() {
        let lc = VectorField::fixture("limit_cycle").unwrap();
        let k = Region::Annulus { center: Point::zeros(), r_in: 0.4, r_out: 0.7 };
        let g = ScalarField::new(|p| -(1.0 + p.norm_squared()));
        let sys = ReducedSystem::new(&lc, &g, &k, 0.15, 0.1).unwrap();
        for [u, v] in Halton2::new(4).take(1000) {
            let p = Point::new(4.0 * u - 2.0, 4.0 * v - 2.0);
            let a = lc.eval(&p);
            if a.norm() > 0.0 {
                assert!(sys.field().eval(&p).dot(&a) > 0.0);
            }
            assert!(sys.to_raw_factor(&p) > 0.0);
        }
    }

    #[test]
    fn reduced_system_restores_g_on_k() {
        // ∇τ·X = g on K whenever ∇τ·Z = -1 there.
        let sink = VectorField::fixture("linear_sink").unwrap();
        let g = ScalarField::new(|p| -(1.0 + p.norm_squared()) / 2.0);
        let sys = ReducedSystem::new(&sink, &g, &annulus(), 0.5, 0.1).unwrap();
        for p in annulus().samples(200, 0) {
            assert_abs_diff_eq!(-sys.to_raw_factor(&p), g.eval(&p), epsilon = 1e-13);
        }
    }

    #[test]
    fn g_hat_seam_is_smooth() {
        // Second-order convergence of central differences across the collar.
        let sink = VectorField::fixture("linear_sink").unwrap();
        let g = ScalarField::new(|p| -(1.0 + p.norm_squared()) / 2.0);
        let red = reduce_to_unit(&sink, &g, &annulus(), 0.5, 0.05).unwrap();
        let f = |r: f64| red.g_hat.eval(&Point::new(r, 0.0));
        let exact_fd = |r: f64, h: f64| (f(r + h) - f(r - h)) / (2.0 * h);
        for &r in &[1.51, 1.52, 1.53, 1.54] {
            let e1 = (exact_fd(r, 4e-3) - exact_fd(r, 1e-5)).abs();
            let e2 = (exact_fd(r, 2e-3) - exact_fd(r, 1e-5)).abs();
            assert!(e1 / e2 > 3.5, "order below 2 at r={r}: {e1} {e2}");
        }
    }

    #[test]
    fn fixture_closed_forms_solve_the_ode() {
        for name in ["linear_sink", "constant", "limit_cycle", "chi_e1"] {
            let x = VectorField::fixture(name).unwrap();
            for [u, v] in Halton2::new(2).take(50) {
                let p = Point::new(u - 0.5, v - 0.5);
                let t = 0.3;
                let h = 1e-5;
                let d = (x.closed_form_flow(t + h, &p).unwrap() - x.closed_form_flow(t - h, &p).unwrap()) / (2.0 * h);
                let q = x.closed_form_flow(t, &p).unwrap();
                assert!((d - x.eval(&q)).norm() < 1e-7, "{name} at {p:?}");
                assert!((x.closed_form_flow(0.0, &p).unwrap() - p).norm() < 1e-14);
            }
        }
        assert!(VectorField::fixture("nope").is_err());
    }

    #[test]
    fn polynomial_gradient() {
        let p = Polynomial::from_table(&[[-0.5, 0.0, 0.0], [-0.5, 2.0, 0.0], [-0.5, 0.0, 2.0]]).unwrap();
        let x = Point::new(1.0, 2.0);
        assert_abs_diff_eq!(p.eval(&x), -3.0);
        assert_abs_diff_eq!((p.gradient(&x) - Point::new(-1.0, -2.0)).norm(), 0.0);
        assert!(Polynomial::from_table(&[[1.0, -1.0, 0.0]]).is_err());
    }
}
