//! Outer approximation of the chain-recurrent set on a uniform cell grid.
//!
//! Each cell is represented by a few sample points; an edge `i → j` is added
//! when the ε-ball around the time-`T` image of a sample of `i` meets cell
//! `j`. Cells on directed cycles are recurrent and the nontrivial strongly
//! connected components approximate the chain-transitive components. The
//! sampled images give a non-rigorous estimate, not an enclosure.

mod graph;
mod grid;
mod recurrent;
mod scc;

pub use graph::{build_transition_graph, build_transition_graph_with, GraphParams, TransitionGraph};
pub use grid::CellGrid;
pub use recurrent::{
    cell_file_string, dist_to_recurrent, parse_cell_file, read_cell_file, recurrent_cells, write_cell_file,
    RecurrentSet,
};
pub use scc::tarjan_scc;
