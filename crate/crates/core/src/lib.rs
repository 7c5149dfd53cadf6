//! Simulator for robot/agent/people assistance networks.
//!
//! A customer recruits human and robot assistants on a building map. Three
//! request-fulfillment methods are compared on identical scenarios:
//!
//! * [`protocol::run_directed_diffusion`]: flood the interest, select the
//!   nearest (in hops) accepting agents;
//! * [`protocol::run_hfi`]: unicast to agents that helped before, flood only
//!   for what remains;
//! * [`allocator::optimal_allocation`]: centralized exact minimum of
//!   movement plus reward cost.
//!
//! [`experiment`] generates seeded scenarios, runs all three methods and
//! compares them with paired t-tests.

pub mod allocator;
pub mod behavior;
pub mod experiment;
pub mod protocol;
pub mod world;
