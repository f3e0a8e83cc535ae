//! The stacked evaluator `τ̃_N`: each level modifies the one below it on
//! its own flow box and defers to it everywhere else.

use super::modification::{BoxFunction, BoxModification};
use crate::baselyap::{BaseLyapunov, LyapunovEvaluator, Provenance};
use crate::flow::FlowBox;
use crate::system::{ReducedSystem, VectorField};
use crate::{Jet, Point, Result};
use std::sync::Arc;

/// `τ̃_0 = C·τ′` and the boxes with their modifications. Derivatives are
/// along the reduced field `Z`.
#[derive(Clone, Debug)]
pub struct ModifiedStack {
    pub system: ReducedSystem,
    pub base: BaseLyapunov,
    pub scale: f64,
    pub boxes: Vec<FlowBox>,
    pub mods: Vec<BoxModification>,
}

/// `τ̃_level ∘ Φ` in the coordinates of one box.
pub struct LevelOnBox<'a> {
    pub stack: &'a ModifiedStack,
    pub level: usize,
    pub fbox: &'a FlowBox,
}

impl BoxFunction for LevelOnBox<'_> {
    fn jet(&self, t: f64, q: f64) -> Result<Jet> {
        self.stack.jet_at_level(self.level, &self.fbox.chart(t, q)?)
    }
}

impl ModifiedStack {
    /// Number of modifications applied.
    pub fn depth(&self) -> usize {
        self.mods.len()
    }

    pub fn field(&self) -> &VectorField {
        self.system.field()
    }

    /// `C·τ′` with its derivative along `Z`.
    pub fn base_jet(&self, p: &Point) -> Jet {
        let s = self.base.scalar();
        Jet::new(s.eval(p), s.gradient_or_fd(p).dot(&self.field().eval(p))).scale(self.scale)
    }

    /// `τ̃_level(p)` and its derivative along `Z`; consults only lower levels.
    pub fn jet_at_level(&self, level: usize, p: &Point) -> Result<Jet> {
        if level == 0 {
            return Ok(self.base_jet(p));
        }
        let fbox = &self.boxes[level - 1];
        let here = self.jet_at_level(level - 1, p)?;
        match fbox.inverse(p) {
            Some((t, q)) => {
                let lower = LevelOnBox { stack: self, level: level - 1, fbox };
                self.mods[level - 1].eval(&lower, t, q, here)
            }
            None => Ok(here),
        }
    }

    /// The top of the stack.
    pub fn jet(&self, p: &Point) -> Result<Jet> {
        self.jet_at_level(self.depth(), p)
    }

    /// The function below box `level` (1-based) in that box's coordinates.
    pub fn lower_on_box(&self, level: usize) -> LevelOnBox<'_> {
        LevelOnBox { stack: self, level: level - 1, fbox: &self.boxes[level - 1] }
    }

    /// Whether `p` lies in some `𝒲_{s_i, i+1}` of an applied modification.
    pub fn in_any_box(&self, p: &Point) -> bool {
        self.boxes[..self.depth()].iter().any(|b| b.inverse(p).is_some())
    }
}

/// `τ_K` for the original field: derivatives converted from `Z` to `X`.
#[derive(Clone, Debug)]
pub struct PrescribedLyapunov {
    stack: Arc<ModifiedStack>,
}

impl PrescribedLyapunov {
    pub fn new(stack: ModifiedStack) -> Self {
        PrescribedLyapunov { stack: Arc::new(stack) }
    }

    pub fn stack(&self) -> &ModifiedStack {
        &self.stack
    }

    /// Derivative along `Z` from the box-coordinate formulas.
    pub fn jet_z(&self, p: &Point) -> Result<Jet> {
        self.stack.jet(p)
    }
}

impl LyapunovEvaluator for PrescribedLyapunov {
    fn value(&self, p: &Point) -> Result<f64> {
        Ok(self.stack.jet(p)?.value)
    }

    fn jet(&self, p: &Point) -> Result<Jet> {
        let j = self.stack.jet(p)?;
        Ok(Jet::new(j.value, j.deriv * self.stack.system.to_raw_factor(p)))
    }

    fn field(&self) -> &VectorField {
        &self.stack.system.raw
    }

    fn provenance(&self) -> Provenance {
        Provenance::ModifiedStack
    }
}
