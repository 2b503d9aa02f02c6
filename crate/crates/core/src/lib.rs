//! Semi-supervised clustering of sparsely sampled similarity graphs with a
//! non-backtracking local walk.
//!
//! Only `O(αn)` random pairs are ever compared. Their centered similarities
//! weight a sparse graph, and a few power iterations of the weighted
//! non-backtracking operator, started from the revealed labels, spread those
//! labels through the graph.
//!
//! ```
//! use nbwalk::{make_instance, run_binary, accuracy, ModelSpec, Scope, Similarity};
//!
//! let spec = ModelSpec {
//!     n: 2000,
//!     q: 2,
//!     alpha: 20.0,
//!     eta: 0.1,
//!     p_in: Similarity::gaussian(0.5, 1.0),
//!     p_out: Similarity::gaussian(-0.5, 1.0),
//!     seed: 7,
//! };
//! let inst = make_instance(&spec)?;
//! let g = inst.centered_graph()?;
//! let out = run_binary(&g, &inst.data, 10, &mut inst.algorithm_rng())?;
//! let acc = accuracy(&out.assignments, &inst.data.spins(), Scope::Unlabeled, &inst.data.revealed)?;
//! assert!(acc > 0.7);
//! # Ok::<(), nbwalk::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binary;
pub mod error;
pub mod graph;
pub mod harness;
pub mod ingest;
pub mod lp;
pub mod model;
pub mod multi;
pub mod theory;

pub use binary::{accuracy, run_binary, run_from, BinaryOutcome, Scope, DEFAULT_KMAX};
pub use error::{Error, Result};
pub use graph::{apply_nb, apply_nb_transpose, build_graph, center_weights, pool, sign, MessageState, WeightedGraph};
pub use ingest::{subsample_and_weight, Metric, Points};
pub use lp::{label_propagation, sparsify_knn, KnnRule};
pub use model::{make_instance, LabeledDataset, ModelSpec, Similarity, Weighting};
pub use multi::{kmeans, match_labels, run_multiclass};
pub use theory::{density_evolution_mc, weight_stats, TheoryReport, WeightStats};
