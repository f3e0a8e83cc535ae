//! Flow maps, level-set sections, flow-box charts and level-time solving.

mod flowbox;
mod level;
pub mod ode;
pub mod roots;
mod section;

pub use flowbox::{box_chart, box_chart_inverse, FlowBox, FlowBoxSpec};
pub use level::level_time;
pub use ode::{flow_fixed, flow_map, FlowMapConfig};
pub use section::{section_from_level, Interval, Section, SectionPiece, SectionRequest};
