//! Random self-similar binary trees: Horton-Strahler orders, Horton
//! pruning, Tokunaga coefficients and the geometric branching process.
//!
//! Trees are planted and reduced ([`Tree`]). Geometric trees are drawn by
//! [`generate_recursive`] or [`generate_process`], analysed with the
//! estimators in [`stats`], evolved in time with [`dynamics`], and checked
//! against exact probabilities computed by [`oracle`].

pub mod canonical;
pub mod cli;
pub mod dynamics;
pub mod ensemble;
pub mod newick;
pub mod oracle;
pub mod order;
pub mod params;
pub mod prune;
pub mod sampler;
pub mod stats;
pub mod tree;

pub use canonical::{canonical_code, ShapeCode};
pub use ensemble::{stream, Stream};
pub use newick::{emit_newick, parse_newick, NewickError};
pub use order::{
    branch_statistics, compute_orders, descendant_subtree, principal_subtrees, Branch, BranchStatistics, OrderedTree,
};
pub use params::{side_order_distribution, Coefficients, CriticalTokunaga, ParamError, Tail, TokunagaParams};
pub use prune::{prune, prune_trajectory};
pub use sampler::{
    decorate_edge_lengths, generate_gw_planted, generate_process, generate_recursive, generate_with_order, geom_sample,
    thinned_geometric_param, EdgeLengths, GenerationError, GenerationLimits, ProcessTimeline,
};
pub use tree::{Tree, TreeBuilder, TreeError, VertexId};
