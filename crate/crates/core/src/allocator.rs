//! Centralized optimal allocation used as the comparison benchmark.
//!
//! The objective is separable: each selected agent contributes its own
//! movement cost (plus the posted offer, for humans). For a fixed offer level
//! the cheapest `c_h` eligible humans and `c_r` eligible robots are therefore
//! optimal, and the exact solver only has to scan the offer schedule.
//! [`brute_force_allocation`] enumerates every subset and serves as the oracle.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::behavior::OfferSchedule;
use crate::behavior::{
    can_serve, human_accepts, robot_accepts, AgentId, AgentRef, ProviderClass, Request, Roster,
    RosterError,
};
use crate::protocol::CostWeights;
use crate::world::{World, WorldError};

/// Largest roster the brute-force oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum AllocError {
    #[error("no offer level has enough eligible agents")]
    Infeasible,
    #[error("agent {0} cannot reach the customer")]
    Unreachable(AgentId),
    #[error("agent {0} is not in the roster")]
    UnknownAgent(AgentId),
    #[error("{class:?} demands name more than one resource type")]
    MixedResources { class: ProviderClass },
    #[error("roster has {0} assistants; brute force is limited to {BRUTE_FORCE_LIMIT}")]
    TooLarge(usize),
    #[error("invalid roster: {0}")]
    Roster(#[from] RosterError),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Ascending ids.
    pub selected_humans: Vec<AgentId>,
    /// Ascending ids.
    pub selected_robots: Vec<AgentId>,
    pub offer_level: f64,
    pub cost: f64,
    /// Sum of movement distances of all selected agents.
    pub movement: u64,
}

impl Allocation {
    pub fn reward(&self) -> f64 {
        self.offer_level * self.selected_humans.len() as f64
    }
}

/// Movement distance of every assistant to the customer, keyed by node.
struct Distances(Vec<Option<u32>>);

impl Distances {
    fn compute(world: &World, roster: &Roster) -> Result<Self, AllocError> {
        let field = world.grid.distance_field(roster.customer.pos)?;
        Ok(Distances(
            roster.agents().map(|a| field.get(a.pos())).collect(),
        ))
    }
}

/// Total of per-agent costs: `beta * path` for every agent, plus the offer
/// for each human. Summed in ascending id order.
pub fn allocation_cost(
    humans: &[AgentId],
    robots: &[AgentId],
    offer_level: f64,
    world: &World,
    roster: &Roster,
    weights: &CostWeights,
) -> Result<f64, AllocError> {
    let dist = Distances::compute(world, roster)?;
    Ok(cost_with(&dist, humans, robots, offer_level, roster, weights)?.0)
}

fn cost_with(
    dist: &Distances,
    humans: &[AgentId],
    robots: &[AgentId],
    offer_level: f64,
    roster: &Roster,
    weights: &CostWeights,
) -> Result<(f64, u64), AllocError> {
    let path = |id: AgentId| -> Result<u32, AllocError> {
        let node = roster.node_of(id).ok_or(AllocError::UnknownAgent(id))?;
        dist.0[node].ok_or(AllocError::Unreachable(id))
    };
    let mut cost = 0.0;
    let mut movement = 0u64;
    for id in sorted(humans) {
        let p = path(id)?;
        movement += u64::from(p);
        cost += weights.beta * f64::from(p) + offer_level;
    }
    for id in sorted(robots) {
        let p = path(id)?;
        movement += u64::from(p);
        cost += weights.beta * f64::from(p);
    }
    Ok((cost, movement))
}

fn sorted(ids: &[AgentId]) -> Vec<AgentId> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v
}

/// What an allocation has to satisfy, precomputed once per request.
struct Problem<'a> {
    roster: &'a Roster,
    dist: Distances,
    schedule: OfferSchedule,
    issued_at: f64,
    humans_needed: usize,
    robots_needed: usize,
    human_candidates: Vec<usize>,
    robot_candidates: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn new(world: &World, roster: &'a Roster, request: &Request) -> Result<Self, AllocError> {
        roster.validate(&world.grid)?;
        let dist = Distances::compute(world, roster)?;
        for class in [ProviderClass::Human, ProviderClass::Robot] {
            let kinds: BTreeSet<_> = request
                .demands
                .iter()
                .filter(|d| d.class == class)
                .map(|d| &d.resource)
                .collect();
            if kinds.len() > 1 {
                return Err(AllocError::MixedResources { class });
            }
        }
        // Agents that can serve the class's demand and reach the customer.
        let candidates = |class| -> Vec<usize> {
            let demand = request.demands.iter().find(|d| d.class == class);
            let Some(demand) = demand else {
                return Vec::new();
            };
            (1..roster.len())
                .filter(|&n| can_serve(roster.agent(n), demand) && dist.0[n].is_some())
                .collect()
        };
        let human_candidates = candidates(ProviderClass::Human);
        let robot_candidates = candidates(ProviderClass::Robot);
        Ok(Problem {
            roster,
            schedule: roster.customer.offer_schedule(),
            issued_at: request.issued_at,
            humans_needed: request.humans_needed(),
            robots_needed: request.robots_needed(),
            human_candidates,
            robot_candidates,
            dist,
        })
    }

    fn eligible(&self, node: usize, level: f64) -> bool {
        match self.roster.agent(node) {
            AgentRef::Human(h) => human_accepts(h, level, self.issued_at),
            AgentRef::Robot(r) => robot_accepts(r),
            AgentRef::Customer(_) => false,
        }
    }

    fn id(&self, node: usize) -> AgentId {
        self.roster.agent(node).id()
    }

    fn path(&self, node: usize) -> u32 {
        self.dist.0[node].expect("candidates are reachable")
    }

    fn build(
        &self,
        humans: &[usize],
        robots: &[usize],
        level: f64,
        weights: &CostWeights,
    ) -> Allocation {
        let mut selected_humans: Vec<_> = humans.iter().map(|&n| self.id(n)).collect();
        let mut selected_robots: Vec<_> = robots.iter().map(|&n| self.id(n)).collect();
        selected_humans.sort_unstable();
        selected_robots.sort_unstable();
        let (cost, movement) = cost_with(
            &self.dist,
            &selected_humans,
            &selected_robots,
            level,
            self.roster,
            weights,
        )
        .expect("candidates are reachable roster members");
        Allocation {
            selected_humans,
            selected_robots,
            offer_level: level,
            cost,
            movement,
        }
    }

    /// Cheapest `k` of the candidates eligible at `level`, by (path, id).
    fn cheapest(&self, candidates: &[usize], k: usize, level: f64) -> Option<Vec<usize>> {
        let mut eligible: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&n| self.eligible(n, level))
            .collect();
        if eligible.len() < k {
            return None;
        }
        eligible.sort_by_key(|&n| (self.path(n), self.id(n)));
        eligible.truncate(k);
        Some(eligible)
    }
}

/// True when `a` should replace the incumbent `b`.
fn better(a: &Allocation, b: &Allocation) -> bool {
    if a.cost != b.cost {
        return a.cost < b.cost;
    }
    if a.offer_level != b.offer_level {
        return a.offer_level < b.offer_level;
    }
    (&a.selected_humans, &a.selected_robots) < (&b.selected_humans, &b.selected_robots)
}

/// Minimum-cost allocation over all offer levels. Ties go to the lower
/// offer level, then to the lexicographically smallest id sets.
pub fn optimal_allocation(
    world: &World,
    roster: &Roster,
    request: &Request,
    weights: &CostWeights,
) -> Result<Allocation, AllocError> {
    let problem = Problem::new(world, roster, request)?;
    let mut best: Option<Allocation> = None;
    for &level in problem.schedule.levels() {
        let Some(humans) = problem.cheapest(&problem.human_candidates, problem.humans_needed, level)
        else {
            continue;
        };
        let Some(robots) = problem.cheapest(&problem.robot_candidates, problem.robots_needed, level)
        else {
            continue;
        };
        let candidate = problem.build(&humans, &robots, level, weights);
        if best.as_ref().is_none_or(|b| better(&candidate, b)) {
            best = Some(candidate);
        }
    }
    best.ok_or(AllocError::Infeasible)
}

/// Exhaustive enumeration of (offer level, human subset, robot subset).
/// Refuses rosters with more than [`BRUTE_FORCE_LIMIT`] assistants.
pub fn brute_force_allocation(
    world: &World,
    roster: &Roster,
    request: &Request,
    weights: &CostWeights,
) -> Result<Allocation, AllocError> {
    let assistants = roster.humans.len() + roster.robots.len();
    if assistants > BRUTE_FORCE_LIMIT {
        return Err(AllocError::TooLarge(assistants));
    }
    let problem = Problem::new(world, roster, request)?;
    let mut best: Option<Allocation> = None;
    for &level in problem.schedule.levels() {
        for humans in problem
            .human_candidates
            .iter()
            .copied()
            .combinations(problem.humans_needed)
        {
            if !humans.iter().all(|&n| problem.eligible(n, level)) {
                continue;
            }
            for robots in problem
                .robot_candidates
                .iter()
                .copied()
                .combinations(problem.robots_needed)
            {
                if !robots.iter().all(|&n| problem.eligible(n, level)) {
                    continue;
                }
                let candidate = problem.build(&humans, &robots, level, weights);
                if best.as_ref().is_none_or(|b| better(&candidate, b)) {
                    best = Some(candidate);
                }
            }
        }
    }
    best.ok_or(AllocError::Infeasible)
}
