//! Full-lane and hierarchical collectives over an abstract message layer.

pub mod basecoll;
pub mod element;
pub mod hiercoll;
pub mod error;
pub mod lanecoll;
pub mod dispatch;
pub mod layout;
pub mod ops;
pub mod oracle;
pub mod topology;
pub mod transport;

pub use element::{Element, IntElement};
pub use error::{Error, Result};
pub use layout::{copy_through, CopyAudit, Layout, View, ViewMut};
pub use ops::{reduce_local, ReduceOp};
pub use topology::{decompose, lanes, partition_counts, root_coords, LaneDecomposition, NodeMap, RankCoords, WorldShape};
pub use transport::{Comm, CostLedger, RankTraffic};

/// The element type every benchmark communicates.
pub type Int = i32;
pub type IntOp = ReduceOp<i32>;
