//! Scenario files shipped with the crate.

use crate::error::Result;
use crate::sim::Scenario;

/// Eight-node two-team coalition topology with its need-to-know policy.
pub const FIG4: &str = include_str!("../scenarios/fig4.scn");
/// The coalition topology with one stream and a link failure next to its source.
pub const FIG5: &str = include_str!("../scenarios/fig5.scn");
/// Three-hop chain with a periodically reconfigured gateway, used for delay calibration.
pub const REFERENCE: &str = include_str!("../scenarios/reference.scn");
/// Controller placement instances, each with at most three candidate sites.
pub const PLACEMENT_SEEDS: [&str; 5] = [
    include_str!("../scenarios/place_s1.scn"),
    include_str!("../scenarios/place_s2.scn"),
    include_str!("../scenarios/place_s3.scn"),
    include_str!("../scenarios/place_s4.scn"),
    include_str!("../scenarios/place_s5.scn"),
];

/// Every bundled scenario with its file name.
pub fn all() -> Vec<(&'static str, &'static str)> {
    let mut v = vec![("fig4.scn", FIG4), ("fig5.scn", FIG5), ("reference.scn", REFERENCE)];
    let names = ["place_s1.scn", "place_s2.scn", "place_s3.scn", "place_s4.scn", "place_s5.scn"];
    v.extend(names.into_iter().zip(PLACEMENT_SEEDS));
    v
}

pub fn parse(text: &str) -> Result<Scenario> {
    crate::scenario_file::parse_scenario(text)
}
