//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rapnet::behavior::{AgentId, Customer, HumanAssistant, Request, ResourceType, Robot, Roster};
use rapnet::experiment::{generate_map, generate_scenario, MapSource, Scenario, ScenarioParams};
use rapnet::world::{RadioConfig, World};

/// Random instance with at most 10 assistants and at most 5 offer levels.
/// Offers and paths are integers, so costs compare exactly.
pub fn random_instance(seed: u64) -> (World, Roster, Request) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spacing = [0, 3, 4][rng.random_range(0..3)];
    let grid = generate_map(rng.random_range(6..10), rng.random_range(4..8), spacing, &mut rng);
    let mut free = grid.free_cells();
    let mut take = |rng: &mut ChaCha8Rng| free.swap_remove(rng.random_range(0..free.len()));
    let humans_n = rng.random_range(0..7);
    let robots_n = rng.random_range(0..=(10 - humans_n).min(5));
    let initial = f64::from(rng.random_range(1..6u32));
    let increment = f64::from(rng.random_range(1..4u32));
    let levels = rng.random_range(1..=5u32);
    let customer = Customer {
        id: AgentId(0),
        pos: take(&mut rng),
        budget: initial + increment * f64::from(levels - 1),
        initial_offer: initial,
        offer_increment: increment,
    };
    let generic = || [ResourceType::generic()].into();
    let humans = (0..humans_n)
        .map(|i| HumanAssistant {
            id: AgentId(1 + i as u32),
            pos: take(&mut rng),
            min_offer: rng.random_range(0.0..12.0),
            peak_time: rng.random_range(0.0..24.0),
            sigma: rng.random_range(1.0..4.0),
            resources: generic(),
        })
        .collect();
    let robots = (0..robots_n)
        .map(|i| Robot {
            id: AgentId(1 + (humans_n + i) as u32),
            pos: take(&mut rng),
            busy: rng.random_bool(0.25),
            resources: generic(),
        })
        .collect();
    let request = Request::generic(rng.random_range(0..3), rng.random_range(0..3), rng.random_range(0.0..24.0));
    let world = World::new(grid, RadioConfig::new(3.0));
    (world, Roster { customer, humans, robots }, request)
}

/// Small random scenario; varied map, roster size, radio range and demands.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let width = rng.random_range(6..16);
    let params = ScenarioParams {
        map: MapSource::Generated {
            width,
            height: rng.random_range(4..10),
            aisle_spacing: [0, 3, 4][rng.random_range(0..3)],
        },
        num_humans: rng.random_range(0..8),
        num_robots: rng.random_range(0..6),
        radio_range: rng.random_range(1.0..7.0),
        budget: 60.0,
        initial_offer: 10.0,
        offer_increment: 10.0,
        min_offer_lo: 2.0,
        min_offer_hi: 15.0,
        robot_busy_prob: 0.3,
        requests_per_scenario: 3,
        demand_humans: rng.random_range(0..3),
        demand_robots: rng.random_range(0..3),
        time_step: 1.5,
        start_time: rng.random_range(0.0..24.0),
        seed,
        ..ScenarioParams::default()
    };
    generate_scenario(&params).expect("small rosters fit")
}
