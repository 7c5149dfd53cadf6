//! Scenario generation and the three-way comparison harness.
//!
//! A scenario is a map, a roster and `K` requests issued at successive clock
//! times. Directed Diffusion and the optimizer treat each request on its own;
//! HFI carries its history from one request to the next.

pub mod config;
pub mod stats;
pub mod sweep;

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{optimal_allocation, AllocError};
use crate::behavior::{
    AgentId, Customer, HumanAssistant, Request, ResourceType, Robot, Roster, HOURS_PER_DAY,
};
use crate::protocol::{
    run_directed_diffusion, run_hfi, total_cost, CostWeights, History, ProtocolError,
    ProtocolOutcome, RunOptions, Trace,
};
use crate::world::{Cell, Grid, Position, RadioConfig, World};

pub use stats::{paired_t_test, TTestResult};
pub use sweep::{run_sweep, Execution, ParamPoint, SweepResult};

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerationError {
    #[error("need {needed} free cells for placement but the map has {available}")]
    NotEnoughFreeCells { needed: usize, available: usize },
    #[error(transparent)]
    Params(#[from] ParamError),
}

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Alloc(AllocError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MapSource {
    /// Fixed map, e.g. loaded from a map file.
    Fixed(Grid),
    /// Store layout with a vertical aisle wall every `aisle_spacing` columns.
    Generated {
        width: usize,
        height: usize,
        aisle_spacing: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub map: MapSource,
    pub num_humans: usize,
    pub num_robots: usize,
    pub radio_range: f64,
    pub budget: f64,
    pub initial_offer: f64,
    pub offer_increment: f64,
    pub min_offer_lo: f64,
    pub min_offer_hi: f64,
    pub sigma: f64,
    pub robot_busy_prob: f64,
    pub requests_per_scenario: usize,
    pub demand_humans: usize,
    pub demand_robots: usize,
    /// Hours between consecutive requests.
    pub time_step: f64,
    /// Hour of the first request.
    pub start_time: f64,
    pub weights: CostWeights,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            map: MapSource::Generated {
                width: 20,
                height: 12,
                aisle_spacing: 5,
            },
            num_humans: 15,
            num_robots: 10,
            radio_range: 6.0,
            budget: 400.0,
            initial_offer: 100.0,
            offer_increment: 50.0,
            min_offer_lo: 10.0,
            min_offer_hi: 40.0,
            sigma: 2.0,
            robot_busy_prob: 0.2,
            requests_per_scenario: 5,
            demand_humans: 2,
            demand_robots: 2,
            time_step: 0.25,
            start_time: 10.0,
            weights: CostWeights::default(),
            seed: 1,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ParamError::Invalid(msg.to_string()))
            }
        };
        if let MapSource::Generated {
            width,
            height,
            aisle_spacing,
        } = self.map
        {
            check(width >= 1 && height >= 1, "map dimensions must be positive")?;
            check(
                aisle_spacing == 0 || aisle_spacing >= 2,
                "aisle_spacing must be 0 (no aisles) or at least 2",
            )?;
        }
        check(self.radio_range >= 0.0, "radio_range must be nonnegative")?;
        check(self.offer_increment > 0.0, "offer_increment must be positive")?;
        check(
            self.initial_offer >= 0.0 && self.initial_offer <= self.budget,
            "initial_offer must lie in [0, budget]",
        )?;
        check(
            self.min_offer_lo >= 0.0 && self.min_offer_lo <= self.min_offer_hi,
            "min offer range must satisfy 0 <= lo <= hi",
        )?;
        check(self.sigma > 0.0, "sigma must be positive")?;
        check(
            (0.0..=1.0).contains(&self.robot_busy_prob),
            "robot_busy_prob must lie in [0, 1]",
        )?;
        check(self.requests_per_scenario >= 1, "requests_per_scenario must be at least 1")?;
        check(self.time_step >= 0.0, "time_step must be nonnegative")?;
        check(
            self.weights.alpha >= 0.0 && self.weights.beta >= 0.0,
            "cost weights must be nonnegative",
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub world: World,
    pub roster: Roster,
    pub requests: Vec<Request>,
    pub weights: CostWeights,
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }
}

/// Store map: a vertical wall at every multiple of `aisle_spacing`, each
/// pierced by a single gap at a random row.
pub fn generate_map<R: Rng>(width: usize, height: usize, aisle_spacing: usize, rng: &mut R) -> Grid {
    let mut grid = Grid::open(width, height).expect("dimensions validated");
    if aisle_spacing == 0 {
        return grid;
    }
    let mut x = aisle_spacing;
    while x < width {
        let gap = rng.random_range(0..height);
        for y in (0..height).filter(|&y| y != gap) {
            grid.set(Position::new(x, y), Cell::Wall);
        }
        x += aisle_spacing;
    }
    grid
}

pub fn scenario_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Builds a scenario from `params`; a pure function of the parameters and
/// their seed.
pub fn generate_scenario(params: &ScenarioParams) -> Result<Scenario, GenerationError> {
    params.validate()?;
    let mut rng = scenario_rng(params.seed);
    let grid = match &params.map {
        MapSource::Fixed(g) => g.clone(),
        MapSource::Generated {
            width,
            height,
            aisle_spacing,
        } => generate_map(*width, *height, *aisle_spacing, &mut rng),
    };

    let free = grid.free_cells();
    let needed = 1 + params.num_humans + params.num_robots;
    if needed > free.len() {
        return Err(GenerationError::NotEnoughFreeCells {
            needed,
            available: free.len(),
        });
    }
    let mut spots = sample(&mut rng, free.len(), needed)
        .into_iter()
        .map(|i| free[i]);
    let mut next_pos = || spots.next().expect("sampled enough cells");
    let resources = || [ResourceType::generic()].into_iter().collect();

    let customer = Customer {
        id: AgentId(0),
        pos: next_pos(),
        budget: params.budget,
        initial_offer: params.initial_offer,
        offer_increment: params.offer_increment,
    };
    let humans: Vec<HumanAssistant> = (0..params.num_humans)
        .map(|i| HumanAssistant {
            id: AgentId(1 + i as u32),
            pos: next_pos(),
            min_offer: rng.random_range(params.min_offer_lo..=params.min_offer_hi),
            peak_time: rng.random_range(0.0..HOURS_PER_DAY),
            sigma: params.sigma,
            resources: resources(),
        })
        .collect();
    let robots: Vec<Robot> = (0..params.num_robots)
        .map(|i| Robot {
            id: AgentId((1 + params.num_humans + i) as u32),
            pos: next_pos(),
            busy: rng.random_bool(params.robot_busy_prob),
            resources: resources(),
        })
        .collect();

    let requests = (0..params.requests_per_scenario)
        .map(|k| {
            let t = (params.start_time + k as f64 * params.time_step).rem_euclid(HOURS_PER_DAY);
            Request::generic(params.demand_humans, params.demand_robots, t)
        })
        .collect();

    Ok(Scenario {
        seed: params.seed,
        world: World::new(grid, RadioConfig::new(params.radio_range)),
        roster: Roster {
            customer,
            humans,
            robots,
        },
        requests,
        weights: params.weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Dd,
    Hfi,
    Opt,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dd, Method::Hfi, Method::Opt];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dd => "DD",
            Method::Hfi => "HFI",
            Method::Opt => "OPT",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Itemized cost of one method on one request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodCost {
    pub fulfilled: bool,
    pub messages: u64,
    pub movement: u64,
    pub reward: f64,
    pub total: f64,
    pub escalation_rounds: u32,
}

impl MethodCost {
    fn from_outcome(o: &ProtocolOutcome, weights: &CostWeights) -> Self {
        MethodCost {
            fulfilled: o.fulfilled,
            messages: o.messages,
            movement: o.movement_cost,
            reward: o.reward_paid,
            total: total_cost(o, weights),
            escalation_rounds: o.escalation_rounds,
        }
    }

    /// Allocation part of the cost: `beta * movement + reward`.
    pub fn allocation_part(&self, weights: &CostWeights) -> f64 {
        weights.beta * self.movement as f64 + self.reward
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestResult {
    pub index: usize,
    pub issued_at: f64,
    pub dd: MethodCost,
    pub hfi: MethodCost,
    pub opt: MethodCost,
}

impl RequestResult {
    pub fn get(&self, m: Method) -> &MethodCost {
        match m {
            Method::Dd => &self.dd,
            Method::Hfi => &self.hfi,
            Method::Opt => &self.opt,
        }
    }
}

/// Sums of [`MethodCost`] over a scenario's requests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodTotals {
    pub requests: usize,
    pub fulfilled: usize,
    pub messages: u64,
    pub movement: u64,
    pub reward: f64,
    pub total: f64,
}

impl MethodTotals {
    fn add(mut self, c: &MethodCost) -> Self {
        self.requests += 1;
        self.fulfilled += usize::from(c.fulfilled);
        self.messages += c.messages;
        self.movement += c.movement;
        self.reward += c.reward;
        self.total += c.total;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub requests: Vec<RequestResult>,
    pub weights: CostWeights,
}

impl ScenarioResult {
    pub fn totals(&self, m: Method) -> MethodTotals {
        self.totals_from(m, 0)
    }

    /// Totals over requests with index `>= first`.
    pub fn totals_from(&self, m: Method, first: usize) -> MethodTotals {
        self.requests
            .iter()
            .skip(first)
            .fold(MethodTotals::default(), |acc, r| acc.add(r.get(m)))
    }
}

/// Optional traces collected by [`run_scenario_traced`], one per request.
#[derive(Debug, Clone, Default)]
pub struct ScenarioTraces {
    pub dd: Vec<Trace>,
    pub hfi: Vec<Trace>,
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioResult, RunError> {
    run_inner(scenario, None)
}

pub fn run_scenario_traced(scenario: &Scenario) -> Result<(ScenarioResult, ScenarioTraces), RunError> {
    let mut traces = ScenarioTraces::default();
    let result = run_inner(scenario, Some(&mut traces))?;
    Ok((result, traces))
}

fn run_inner(
    scenario: &Scenario,
    mut traces: Option<&mut ScenarioTraces>,
) -> Result<ScenarioResult, RunError> {
    let weights = scenario.weights;
    let mut history = History::new();
    let mut rows = Vec::with_capacity(scenario.requests.len());
    for (k, request) in scenario.requests.iter().enumerate() {
        let opts = RunOptions {
            request_seq: k as u32,
        };
        let new_trace = || {
            if traces.is_some() {
                Trace::enabled()
            } else {
                Trace::disabled()
            }
        };
        let mut dd_trace = new_trace();
        let mut hfi_trace = new_trace();

        let dd = run_directed_diffusion(&scenario.world, &scenario.roster, request, opts, &mut dd_trace)?;
        let (hfi, next) = run_hfi(
            &scenario.world,
            &scenario.roster,
            request,
            &history,
            opts,
            &mut hfi_trace,
        )?;
        history = next;
        let opt = match optimal_allocation(&scenario.world, &scenario.roster, request, &weights) {
            Ok(a) => MethodCost {
                fulfilled: true,
                messages: 0,
                movement: a.movement,
                reward: a.reward(),
                total: a.cost,
                escalation_rounds: 0,
            },
            Err(AllocError::Infeasible) => MethodCost {
                fulfilled: false,
                messages: 0,
                movement: 0,
                reward: 0.0,
                total: 0.0,
                escalation_rounds: 0,
            },
            Err(e) => return Err(RunError::Alloc(e)),
        };
        if let Some(t) = traces.as_deref_mut() {
            t.dd.push(dd_trace);
            t.hfi.push(hfi_trace);
        }
        rows.push(RequestResult {
            index: k,
            issued_at: request.issued_at,
            dd: MethodCost::from_outcome(&dd, &weights),
            hfi: MethodCost::from_outcome(&hfi, &weights),
            opt,
        });
    }
    Ok(ScenarioResult {
        requests: rows,
        weights,
    })
}
