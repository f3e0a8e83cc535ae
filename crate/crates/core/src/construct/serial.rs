//! Versioned plain-text form of a finished stack, so verification can run
//! in a separate process.
//!
//! Layout: the magic line, a TOML header with the specs the closures are
//! rebuilt from, a `---` line, then one record per line:
//!
//! ```text
//! box <k> <half_width> <chart_step> <level> <pieces>
//! piece <q_start> <spacing> <outer_lo> <outer_hi> <inner_lo> <inner_hi> <vertices>
//! <x> <y>                        (one line per vertex)
//! mod <k> <eps> <patches> <intervals>
//! diag <e1_worst> <inequality_margin> <gap_margin> <ms_count>
//! patch <center> <radius> <level>
//! interval <outer_lo> <outer_hi> <inner_lo> <inner_hi>
//! end
//! ```

use super::modification::{BoxModification, CoverPatch, Diagnostics, PieceIntervals};
use super::stack::{ModifiedStack, PrescribedLyapunov};
use crate::baselyap::BaseSpec;
use crate::flow::{FlowBox, FlowBoxSpec, Interval, Section, SectionPiece};
use crate::system::{FieldSpec, ReducedSystem, RegionSpec, ScalarSpec};
use crate::{Error, Point, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub const STACK_MAGIC: &str = "complyap-stack 1";

/// Everything needed to rebuild the non-numeric parts of a stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackSpec {
    pub field: FieldSpec,
    pub g: ScalarSpec,
    pub region: RegionSpec,
    pub base: BaseSpec,
    pub uk_margin: f64,
    pub collar_fraction: f64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    scale: f64,
    boxes: usize,
    spec: StackSpec,
}

pub fn stack_to_text(spec: &StackSpec, stack: &ModifiedStack) -> Result<String> {
    let header = Header { scale: stack.scale, boxes: stack.boxes.len(), spec: spec.clone() };
    let toml = toml::to_string(&header).map_err(|e| Error::Parse(e.to_string()))?;
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "{STACK_MAGIC}");
    w.push_str(&toml);
    let _ = writeln!(w, "---");
    for (b, m) in stack.boxes.iter().zip(&stack.mods) {
        let spec = b.spec();
        let sec = &b.section;
        let _ =
            writeln!(w, "box {} {:?} {:?} {:?} {}", b.k, spec.half_width, spec.chart_step, sec.level, sec.pieces.len());
        for p in &sec.pieces {
            let _ = writeln!(
                w,
                "piece {:?} {:?} {:?} {:?} {:?} {:?} {}",
                p.q_start,
                p.spacing,
                p.outer.lo,
                p.outer.hi,
                p.inner.lo,
                p.inner.hi,
                p.vertices.len()
            );
            for v in &p.vertices {
                let _ = writeln!(w, "{:?} {:?}", v.x, v.y);
            }
        }
        let _ = writeln!(w, "mod {} {:?} {} {}", m.k, m.eps, m.patches.len(), m.pieces.len());
        let d = &m.diagnostics;
        let _ = writeln!(w, "diag {:?} {:?} {:?} {}", d.e1_worst, d.inequality_margin, d.gap_margin, d.ms_count);
        for p in &m.patches {
            let _ = writeln!(w, "patch {:?} {:?} {:?}", p.center, p.radius, p.level);
        }
        for p in &m.pieces {
            let _ = writeln!(w, "interval {:?} {:?} {:?} {:?}", p.outer.lo, p.outer.hi, p.inner.lo, p.inner.hi);
        }
    }
    let _ = writeln!(w, "end");
    Ok(s)
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        let (i, l) = self.it.next().ok_or_else(|| Error::Parse("unexpected end of stack file".into()))?;
        self.line = i + 1;
        Ok(l)
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("stack file line {}: {msg}", self.line))
    }

    /// Next line as `tag` followed by exactly `n` fields.
    fn record(&mut self, tag: &str, n: usize) -> Result<Vec<&'a str>> {
        let l = self.next()?;
        let mut f = l.split_whitespace();
        if f.next() != Some(tag) {
            return Err(self.err(format!("expected `{tag}`, found `{l}`")));
        }
        let v: Vec<&str> = f.collect();
        if v.len() != n {
            return Err(self.err(format!("`{tag}` needs {n} fields, found {}", v.len())));
        }
        Ok(v)
    }

    fn f64(&self, s: &str) -> Result<f64> {
        s.parse().map_err(|_| self.err(format!("bad number `{s}`")))
    }

    fn usize(&self, s: &str) -> Result<usize> {
        s.parse().map_err(|_| self.err(format!("bad count `{s}`")))
    }

    fn floats(&self, v: &[&str]) -> Result<Vec<f64>> {
        v.iter().map(|s| self.f64(s)).collect()
    }
}

/// Parses a stack. Relative collocation model paths are resolved against
/// `dir` when given.
pub fn stack_from_text(text: &str, dir: Option<&Path>) -> Result<(StackSpec, PrescribedLyapunov)> {
    let mut lines = Lines { it: text.lines().enumerate(), line: 0 };
    if lines.next()? != STACK_MAGIC {
        return Err(lines.err(format!("not a stack file (expected `{STACK_MAGIC}`)")));
    }
    let mut toml = String::new();
    loop {
        let l = lines.next()?;
        if l == "---" {
            break;
        }
        toml.push_str(l);
        toml.push('\n');
    }
    let header: Header = toml::from_str(&toml).map_err(|e| Error::Parse(format!("stack header: {e}")))?;
    let spec = header.spec;
    let raw = spec.field.build()?;
    let g = spec.g.build()?;
    let region = spec.region.build()?;
    let base_spec = match (&spec.base, dir) {
        (BaseSpec::Collocation { model }, Some(d)) if model.is_relative() => {
            BaseSpec::Collocation { model: d.join(model) }
        }
        (b, _) => b.clone(),
    };
    let base = base_spec.build(&raw)?;
    let system = ReducedSystem::new(&raw, &g, &region, spec.uk_margin, spec.collar_fraction)?;
    let z = system.field().clone();

    let mut boxes = Vec::with_capacity(header.boxes);
    let mut mods = Vec::with_capacity(header.boxes);
    for _ in 0..header.boxes {
        let r = lines.record("box", 5)?;
        let k = lines.usize(r[0])?;
        let (half_width, chart_step, level) = (lines.f64(r[1])?, lines.f64(r[2])?, lines.f64(r[3])?);
        let npieces = lines.usize(r[4])?;
        let mut pieces = Vec::with_capacity(npieces);
        for _ in 0..npieces {
            let r = lines.record("piece", 7)?;
            let v = lines.floats(&r[..6])?;
            let nv = lines.usize(r[6])?;
            let mut vertices = Vec::with_capacity(nv);
            for _ in 0..nv {
                let l = lines.next()?;
                let xy: Vec<&str> = l.split_whitespace().collect();
                if xy.len() != 2 {
                    return Err(lines.err(format!("expected a vertex, found `{l}`")));
                }
                vertices.push(Point::new(lines.f64(xy[0])?, lines.f64(xy[1])?));
            }
            pieces.push(SectionPiece {
                q_start: v[0],
                spacing: v[1],
                vertices,
                outer: Interval::new(v[2], v[3]),
                inner: Interval::new(v[4], v[5]),
            });
        }
        let section = Section::from_pieces(level, pieces, base.scalar().clone());
        boxes.push(FlowBox::new(section, z.clone(), FlowBoxSpec { k, half_width, chart_step })?);

        let r = lines.record("mod", 4)?;
        let mk = lines.usize(r[0])?;
        if mk != k {
            return Err(lines.err(format!("modification {mk} follows box {k}")));
        }
        let eps = lines.f64(r[1])?;
        let (np, ni) = (lines.usize(r[2])?, lines.usize(r[3])?);
        let r = lines.record("diag", 4)?;
        let d = lines.floats(&r[..3])?;
        let diagnostics =
            Diagnostics { e1_worst: d[0], inequality_margin: d[1], gap_margin: d[2], ms_count: lines.usize(r[3])? };
        let mut patches = Vec::with_capacity(np);
        for _ in 0..np {
            let r = lines.record("patch", 3)?;
            let v = lines.floats(&r)?;
            patches.push(CoverPatch { center: v[0], radius: v[1], level: v[2] });
        }
        let mut intervals = Vec::with_capacity(ni);
        for _ in 0..ni {
            let r = lines.record("interval", 4)?;
            let v = lines.floats(&r)?;
            intervals.push(PieceIntervals { outer: Interval::new(v[0], v[1]), inner: Interval::new(v[2], v[3]) });
        }
        mods.push(BoxModification::new(k, eps, patches, intervals, diagnostics));
    }
    lines.record("end", 0)?;
    let stack = ModifiedStack { system, base, scale: header.scale, boxes, mods };
    Ok((spec, PrescribedLyapunov::new(stack)))
}

pub fn save_stack(path: &Path, spec: &StackSpec, stack: &ModifiedStack) -> Result<()> {
    std::fs::write(path, stack_to_text(spec, stack)?)?;
    Ok(())
}

pub fn load_stack(path: &Path) -> Result<(StackSpec, PrescribedLyapunov)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    stack_from_text(&text, path.parent())
}
