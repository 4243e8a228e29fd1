//! Lumped-parameter transient model of the chilled and condenser loops.
//!
//! Each loop is a ring of well-mixed water volumes. Equipment sits on the
//! edges between them: the analytical models read the upstream volume as an
//! inlet probe, and their outlet stream is mixed into the downstream volume.
//! Pressures are quasi-static (pump head balances quadratic pipe losses).

mod solver;
mod state;
mod topology;

pub use solver::{advance, probe, solve_steady, SteadyOutcome};
pub use state::{
    Boundary, ChillerState, EnergyBalance, LoopBalance, NodeState, PlantControls, SimState,
};
pub use topology::{build_network, Attachment, Edge, Loop, NetworkTopology, Node};
