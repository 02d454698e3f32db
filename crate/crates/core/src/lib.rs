//! Toolkit for software-defined tactical ad hoc networks.
//!
//! * [`netmodel`]: topology, legacy hop-count routing, path enumeration, topology events.
//! * [`deployment`]: choosing which nodes to upgrade to SDN forwarding.
//! * [`placement`]: controller sites, organization and forwarder assignment.
//! * [`policy`]: need-to-know policies compiled to flow-rule tables.
//! * [`dataplane`]: link state machines and precomputed failover rules.
//! * [`sim`]: deterministic discrete-event simulation of the three failure reactions.
//! * [`scenario_file`] and [`report`]: the text formats behind the `smanet` binary.

pub mod bundled;
pub mod dataplane;
pub mod deployment;
pub mod error;
pub mod forwarding;
pub mod netmodel;
pub mod placement;
pub mod policy;
pub mod report;
pub mod scenario_file;
pub mod sim;

pub use error::{Error, Result};
pub use netmodel::{LinkKey, NodeId, Path, TeamId, Topology};
