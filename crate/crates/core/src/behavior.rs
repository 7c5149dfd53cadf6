//! Agent records and the decision rules that drive them.
//!
//! Humans accept an offer when it clears their minimum offer scaled by how
//! available they are at the current hour; robots accept whenever idle.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{Grid, Position, WorldError};

/// Lowest value [`availability`] can return.
pub const AVAILABILITY_FLOOR: f64 = 1e-6;
pub const HOURS_PER_DAY: f64 = 24.0;
/// Resource type carried by every agent in generated scenarios.
pub const GENERIC_RESOURCE: &str = "assist";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceType(pub String);

impl ResourceType {
    pub fn generic() -> Self {
        ResourceType(GENERIC_RESOURCE.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProviderClass {
    Human,
    Robot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanAssistant {
    pub id: AgentId,
    pub pos: Position,
    pub min_offer: f64,
    /// Hour of day, in `[0, 24)`, at which the human is most available.
    pub peak_time: f64,
    pub sigma: f64,
    pub resources: BTreeSet<ResourceType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: AgentId,
    pub pos: Position,
    pub busy: bool,
    pub resources: BTreeSet<ResourceType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub id: AgentId,
    pub pos: Position,
    pub budget: f64,
    pub initial_offer: f64,
    pub offer_increment: f64,
}

impl Customer {
    pub fn offer_schedule(&self) -> OfferSchedule {
        OfferSchedule::new(self.initial_offer, self.offer_increment, self.budget)
    }
}

/// Offer levels `initial + k * increment` that do not exceed the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferSchedule {
    levels: Vec<f64>,
}

impl OfferSchedule {
    pub fn new(initial: f64, increment: f64, budget: f64) -> Self {
        assert!(increment > 0.0, "offer increment must be positive");
        if initial > budget {
            return OfferSchedule { levels: Vec::new() };
        }
        // Slack absorbs rounding in (budget - initial) / increment.
        let steps = ((budget - initial) / increment + 1e-9).floor() as usize;
        let levels = (0..=steps).map(|k| initial + k as f64 * increment).collect();
        OfferSchedule { levels }
    }

    pub fn from_levels(levels: Vec<f64>) -> Self {
        assert!(
            levels.windows(2).all(|w| w[0] < w[1]),
            "offer levels must be strictly ascending"
        );
        OfferSchedule { levels }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Demand {
    pub resource: ResourceType,
    pub class: ProviderClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub demands: Vec<Demand>,
    /// Hour of day the request is issued.
    pub issued_at: f64,
}

impl Request {
    /// `humans` generic human demands followed by `robots` generic robot demands.
    pub fn generic(humans: usize, robots: usize, issued_at: f64) -> Self {
        let demand = |class| Demand {
            resource: ResourceType::generic(),
            class,
        };
        let demands = std::iter::repeat_n(demand(ProviderClass::Human), humans)
            .chain(std::iter::repeat_n(demand(ProviderClass::Robot), robots))
            .collect();
        Request { demands, issued_at }
    }

    pub fn humans_needed(&self) -> usize {
        self.count(ProviderClass::Human)
    }

    pub fn robots_needed(&self) -> usize {
        self.count(ProviderClass::Robot)
    }

    fn count(&self, class: ProviderClass) -> usize {
        self.demands.iter().filter(|d| d.class == class).count()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }
}

/// Circular distance between two hours on a 24 hour clock.
pub fn clock_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(HOURS_PER_DAY);
    d.min(HOURS_PER_DAY - d)
}

/// Unnormalized Gaussian of the clock distance from the human's peak hour,
/// floored at [`AVAILABILITY_FLOOR`].
pub fn availability(h: &HumanAssistant, t: f64) -> f64 {
    let d = clock_distance(t, h.peak_time);
    (-d * d / (2.0 * h.sigma * h.sigma))
        .exp()
        .max(AVAILABILITY_FLOOR)
}

/// Smallest offer the human accepts at hour `t`.
pub fn effective_min_offer(h: &HumanAssistant, t: f64) -> f64 {
    threshold(h.min_offer, availability(h, t))
}

fn threshold(min_offer: f64, availability: f64) -> f64 {
    min_offer / availability
}

/// Acceptance rule in terms of an already computed availability.
pub fn accepts_at(min_offer: f64, offer: f64, availability: f64) -> bool {
    offer >= threshold(min_offer, availability)
}

/// Whether the human takes `offer` at hour `t`. Resource matching is left to
/// [`can_serve`].
pub fn human_accepts(h: &HumanAssistant, offer: f64, t: f64) -> bool {
    accepts_at(h.min_offer, offer, availability(h, t))
}

pub fn robot_accepts(r: &Robot) -> bool {
    !r.busy
}

/// A single agent of the roster, borrowed.
#[derive(Debug, Clone, Copy)]
pub enum AgentRef<'a> {
    Customer(&'a Customer),
    Human(&'a HumanAssistant),
    Robot(&'a Robot),
}

impl<'a> AgentRef<'a> {
    pub fn id(&self) -> AgentId {
        match self {
            AgentRef::Customer(c) => c.id,
            AgentRef::Human(h) => h.id,
            AgentRef::Robot(r) => r.id,
        }
    }

    pub fn pos(&self) -> Position {
        match self {
            AgentRef::Customer(c) => c.pos,
            AgentRef::Human(h) => h.pos,
            AgentRef::Robot(r) => r.pos,
        }
    }

    pub fn class(&self) -> Option<ProviderClass> {
        match self {
            AgentRef::Customer(_) => None,
            AgentRef::Human(_) => Some(ProviderClass::Human),
            AgentRef::Robot(_) => Some(ProviderClass::Robot),
        }
    }

    /// Whether the agent would accept `offer` at hour `t`.
    pub fn accepts(&self, offer: f64, t: f64) -> bool {
        match self {
            AgentRef::Customer(_) => false,
            AgentRef::Human(h) => human_accepts(h, offer, t),
            AgentRef::Robot(r) => robot_accepts(r),
        }
    }

    pub fn resources(&self) -> Option<&'a BTreeSet<ResourceType>> {
        match self {
            AgentRef::Customer(_) => None,
            AgentRef::Human(h) => Some(&h.resources),
            AgentRef::Robot(r) => Some(&r.resources),
        }
    }
}

/// Provider class matches and the agent holds the demanded resource.
pub fn can_serve(agent: AgentRef<'_>, demand: &Demand) -> bool {
    agent.class() == Some(demand.class)
        && agent
            .resources()
            .is_some_and(|r| r.contains(&demand.resource))
}

#[derive(Debug, Error, PartialEq)]
pub enum RosterError {
    #[error("agent {0} is not on a free cell: {1}")]
    Placement(AgentId, WorldError),
    #[error("duplicate agent id {0}")]
    DuplicateId(AgentId),
    #[error("human {id}: {msg}")]
    Human { id: AgentId, msg: &'static str },
    #[error("customer: {0}")]
    Customer(&'static str),
}

/// One customer plus the assistants it may recruit.
///
/// Node indices used by the radio graph follow [`Roster::agents`]: the
/// customer is node 0, then humans, then robots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    pub customer: Customer,
    pub humans: Vec<HumanAssistant>,
    pub robots: Vec<Robot>,
}

impl Roster {
    pub fn validate(&self, grid: &Grid) -> Result<(), RosterError> {
        let mut seen = BTreeSet::new();
        for agent in self.agents() {
            if !seen.insert(agent.id()) {
                return Err(RosterError::DuplicateId(agent.id()));
            }
            grid.check_free(agent.pos())
                .map_err(|e| RosterError::Placement(agent.id(), e))?;
        }
        for h in &self.humans {
            let msg = if h.sigma.is_nan() || h.sigma <= 0.0 {
                Some("sigma must be positive")
            } else if h.min_offer.is_nan() || h.min_offer < 0.0 {
                Some("min_offer must be nonnegative")
            } else if !(0.0..HOURS_PER_DAY).contains(&h.peak_time) {
                Some("peak_time must lie in [0, 24)")
            } else {
                None
            };
            if let Some(msg) = msg {
                return Err(RosterError::Human { id: h.id, msg });
            }
        }
        let c = &self.customer;
        if c.offer_increment.is_nan() || c.offer_increment <= 0.0 {
            return Err(RosterError::Customer("offer increment must be positive"));
        }
        if c.initial_offer.is_nan() || c.initial_offer < 0.0 || c.initial_offer > c.budget {
            return Err(RosterError::Customer(
                "initial offer must be nonnegative and within budget",
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        1 + self.humans.len() + self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Every agent in node order.
    pub fn agents(&self) -> impl Iterator<Item = AgentRef<'_>> + '_ {
        std::iter::once(AgentRef::Customer(&self.customer))
            .chain(self.humans.iter().map(AgentRef::Human))
            .chain(self.robots.iter().map(AgentRef::Robot))
    }

    pub fn agent(&self, node: usize) -> AgentRef<'_> {
        let nh = self.humans.len();
        match node {
            0 => AgentRef::Customer(&self.customer),
            n if n <= nh => AgentRef::Human(&self.humans[n - 1]),
            n => AgentRef::Robot(&self.robots[n - 1 - nh]),
        }
    }

    pub fn node_of(&self, id: AgentId) -> Option<usize> {
        self.agents().position(|a| a.id() == id)
    }

    pub fn positions(&self) -> Vec<Position> {
        self.agents().map(|a| a.pos()).collect()
    }
}
