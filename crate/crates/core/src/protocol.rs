//! Decentralized request fulfillment: Directed Diffusion flooding and
//! History-based Financial Incentive (HFI) routing.
//!
//! Both methods run an escalation loop over the customer's offer schedule.
//! Within a round, every radio transmission counts as one message: a
//! broadcast is one message no matter how many nodes hear it, and a unicast
//! over `h` hops is `h` messages.

use std::cmp::Reverse;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{can_serve, AgentId, ProviderClass, Request, Roster, RosterError};
use crate::world::{BfsTree, CommGraph, World, WorldError};

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("invalid roster: {0}")]
    Roster(#[from] RosterError),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    /// Weight of one radio transmission.
    pub alpha: f64,
    /// Weight of one movement step.
    pub beta: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

/// Identifies one interest: the request it serves and its escalation round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageId {
    pub request: u32,
    pub round: u32,
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.request, self.round)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    /// Flooded interest.
    Interest,
    /// Acceptance travelling back along the reverse path of first receipt.
    Reply,
    /// Customer's confirmation to a selected agent.
    Confirm,
    /// Unicast interest to a history entry.
    Query,
    /// Accept or decline answering a [`MessageKind::Query`].
    Answer,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Interest => "interest",
            MessageKind::Reply => "reply",
            MessageKind::Confirm => "confirm",
            MessageKind::Query => "query",
            MessageKind::Answer => "answer",
        }
    }
}

/// One radio transmission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Escalation round, starting at 0.
    pub round: u32,
    pub sender: AgentId,
    /// `None` for a broadcast.
    pub receiver: Option<AgentId>,
    pub kind: MessageKind,
    pub message_id: MessageId,
    /// Broadcasts: the sender's hop depth. Path messages: 1-based position along the path.
    pub hop: u32,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},", self.round, self.sender)?;
        match self.receiver {
            Some(r) => write!(f, "{r}")?,
            None => f.write_str("*")?,
        }
        write!(
            f,
            ",{},{},{}",
            self.kind.as_str(),
            self.message_id,
            self.hop
        )
    }
}

/// Optional transmission log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn enabled() -> Self {
        Trace {
            enabled: true,
            events: Vec::new(),
        }
    }

    pub fn disabled() -> Self {
        Trace::default()
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    fn push(&mut self, ev: TraceEvent) {
        if self.enabled {
            self.events.push(ev);
        }
    }

    pub const HEADER: &'static str = "round,sender,receiver,kind,message_id,hop";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for ev in &self.events {
            writeln!(w, "{ev}")?;
        }
        Ok(())
    }
}

/// An agent together with the index of the demand it fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub agent: AgentId,
    pub class: ProviderClass,
    pub demand: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub fulfilled: bool,
    pub selected: Vec<Assignment>,
    pub final_offer: f64,
    pub messages: u64,
    /// Sum of movement distances from each selected agent to the customer.
    pub movement_cost: u64,
    pub reward_paid: f64,
    /// Offer levels tried.
    pub escalation_rounds: u32,
}

impl ProtocolOutcome {
    pub fn selected_humans(&self) -> usize {
        self.selected
            .iter()
            .filter(|a| a.class == ProviderClass::Human)
            .count()
    }
}

pub fn total_cost(outcome: &ProtocolOutcome, weights: &CostWeights) -> f64 {
    weights.alpha * outcome.messages as f64
        + weights.beta * outcome.movement_cost as f64
        + outcome.reward_paid
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub agent: AgentId,
    pub success_count: u32,
    pub last_success_round: u64,
}

/// A customer's record of agents that helped fulfil past requests.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    entries: Vec<HistoryEntry>,
    rounds_recorded: u64,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, agent: AgentId) -> Option<&HistoryEntry> {
        self.entries.iter().find(|e| e.agent == agent)
    }

    /// Entries by success count (desc), recency (desc), then id (asc).
    pub fn contact_order(&self) -> Vec<&HistoryEntry> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by_key(|e| (Reverse(e.success_count), Reverse(e.last_success_round), e.agent));
        v
    }

    /// Inserts or promotes every agent of one successful request.
    pub fn record_success(&mut self, agents: impl IntoIterator<Item = AgentId>) {
        self.rounds_recorded += 1;
        let round = self.rounds_recorded;
        for agent in agents {
            match self.entries.iter_mut().find(|e| e.agent == agent) {
                Some(e) => {
                    e.success_count += 1;
                    e.last_success_round = round;
                }
                None => self.entries.push(HistoryEntry {
                    agent,
                    success_count: 1,
                    last_success_round: round,
                }),
            }
        }
    }
}

/// Per-request options shared by both protocols.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Sequence number of the request, used in message ids.
    pub request_seq: u32,
}

/// Floods the request with escalating offers until every demand is met or
/// the budget is exhausted.
pub fn run_directed_diffusion(
    world: &World,
    roster: &Roster,
    request: &Request,
    opts: RunOptions,
    trace: &mut Trace,
) -> Result<ProtocolOutcome, ProtocolError> {
    let mut session = Session::new(world, roster, request, opts, trace)?;
    session.run(None);
    Ok(session.finish())
}

/// Contacts previously successful agents first and floods only for what
/// they cannot cover. Returns the outcome and the updated history.
pub fn run_hfi(
    world: &World,
    roster: &Roster,
    request: &Request,
    history: &History,
    opts: RunOptions,
    trace: &mut Trace,
) -> Result<(ProtocolOutcome, History), ProtocolError> {
    let mut session = Session::new(world, roster, request, opts, trace)?;
    session.run(Some(history));
    let outcome = session.finish();
    let mut updated = history.clone();
    if outcome.fulfilled && !outcome.selected.is_empty() {
        updated.record_success(outcome.selected.iter().map(|a| a.agent));
    }
    Ok((outcome, updated))
}

struct Session<'a> {
    roster: &'a Roster,
    request: &'a Request,
    tree: BfsTree,
    /// Movement distance to the customer, by node.
    movement: Vec<Option<u32>>,
    unmet: Vec<bool>,
    selected: Vec<Assignment>,
    is_selected: Vec<bool>,
    messages: u64,
    offer: f64,
    rounds: u32,
    opts: RunOptions,
    trace: &'a mut Trace,
}

impl<'a> Session<'a> {
    fn new(
        world: &World,
        roster: &'a Roster,
        request: &'a Request,
        opts: RunOptions,
        trace: &'a mut Trace,
    ) -> Result<Self, ProtocolError> {
        roster.validate(&world.grid)?;
        let positions = roster.positions();
        let tree = CommGraph::new(&world.radio, &positions).bfs_tree(0);
        let field = world.grid.distance_field(roster.customer.pos)?;
        let movement = positions.iter().map(|&p| field.get(p)).collect();
        Ok(Session {
            roster,
            request,
            tree,
            movement,
            unmet: vec![true; request.demands.len()],
            selected: Vec::new(),
            is_selected: vec![false; positions.len()],
            messages: 0,
            offer: roster.customer.initial_offer,
            rounds: 0,
            opts,
            trace,
        })
    }

    fn run(&mut self, history: Option<&History>) {
        if self.request.is_empty() {
            return;
        }
        let schedule = self.roster.customer.offer_schedule();
        for (round, &offer) in schedule.levels().iter().enumerate() {
            self.offer = offer;
            self.rounds = round as u32 + 1;
            let id = MessageId {
                request: self.opts.request_seq,
                round: round as u32,
            };
            if let Some(h) = history {
                self.contact_history(h, id);
            }
            if self.any_unmet() {
                self.flood(id);
            }
            if !self.any_unmet() {
                break;
            }
        }
    }

    fn any_unmet(&self) -> bool {
        self.unmet.iter().any(|&u| u)
    }

    /// First unmet demand the node can fill.
    fn matching_demand(&self, node: usize) -> Option<usize> {
        let agent = self.roster.agent(node);
        self.request
            .demands
            .iter()
            .enumerate()
            .find(|&(i, d)| self.unmet[i] && can_serve(agent, d))
            .map(|(i, _)| i)
    }

    fn accepts(&self, node: usize) -> bool {
        self.roster
            .agent(node)
            .accepts(self.offer, self.request.issued_at)
    }

    fn assign(&mut self, node: usize, demand: usize) {
        let agent = self.roster.agent(node);
        self.unmet[demand] = false;
        self.is_selected[node] = true;
        self.selected.push(Assignment {
            agent: agent.id(),
            class: agent.class().expect("only assistants are assigned"),
            demand,
        });
    }

    /// Sends one message along `path`, one transmission per hop.
    fn send_path(&mut self, path: &[usize], kind: MessageKind, id: MessageId) {
        for (i, w) in path.windows(2).enumerate() {
            self.messages += 1;
            self.trace.push(TraceEvent {
                round: id.round,
                sender: self.roster.agent(w[0]).id(),
                receiver: Some(self.roster.agent(w[1]).id()),
                kind,
                message_id: id,
                hop: i as u32 + 1,
            });
        }
    }

    fn forward_path(&self, node: usize) -> Vec<usize> {
        self.tree
            .path_from_root(node)
            .expect("path requested for a node outside the customer's component")
    }

    fn contact_history(&mut self, history: &History, id: MessageId) {
        for entry in history.contact_order() {
            if !self.any_unmet() {
                break;
            }
            let Some(node) = self.roster.node_of(entry.agent) else {
                continue;
            };
            if node == 0 || self.is_selected[node] {
                continue;
            }
            let Some(demand) = self.matching_demand(node) else {
                continue;
            };
            // unreachable over radio: silently counted as a decline
            if self.tree.depth(node).is_none() {
                continue;
            }
            let forward = self.forward_path(node);
            let mut reverse = forward.clone();
            reverse.reverse();
            self.send_path(&forward, MessageKind::Query, id);
            self.send_path(&reverse, MessageKind::Answer, id);
            if self.accepts(node) && self.movement[node].is_some() {
                self.assign(node, demand);
                self.send_path(&forward, MessageKind::Confirm, id);
            }
        }
    }

    fn flood(&mut self, id: MessageId) {
        let order = self.tree.order().to_vec();
        for &node in &order {
            self.messages += 1;
            self.trace.push(TraceEvent {
                round: id.round,
                sender: self.roster.agent(node).id(),
                receiver: None,
                kind: MessageKind::Interest,
                message_id: id,
                hop: self.tree.depth(node).expect("flooded nodes are reached"),
            });
        }

        let mut candidates: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&n| {
                n != 0
                    && !self.is_selected[n]
                    && self.matching_demand(n).is_some()
                    && self.accepts(n)
            })
            .collect();
        for &node in &candidates {
            let mut reverse = self.forward_path(node);
            reverse.reverse();
            self.send_path(&reverse, MessageKind::Reply, id);
        }

        candidates.sort_by_key(|&n| (self.tree.depth(n), self.roster.agent(n).id()));
        for node in candidates {
            if !self.any_unmet() {
                break;
            }
            if self.movement[node].is_none() {
                continue;
            }
            if let Some(demand) = self.matching_demand(node) {
                self.assign(node, demand);
                let forward = self.forward_path(node);
                self.send_path(&forward, MessageKind::Confirm, id);
            }
        }
    }

    fn finish(self) -> ProtocolOutcome {
        let movement_cost = self
            .selected
            .iter()
            .map(|a| {
                let node = self.roster.node_of(a.agent).expect("selected agent is in roster");
                u64::from(self.movement[node].expect("selected agents are reachable"))
            })
            .sum();
        let humans = self
            .selected
            .iter()
            .filter(|a| a.class == ProviderClass::Human)
            .count();
        ProtocolOutcome {
            fulfilled: !self.any_unmet(),
            reward_paid: self.offer * humans as f64,
            selected: self.selected,
            final_offer: self.offer,
            messages: self.messages,
            movement_cost,
            escalation_rounds: self.rounds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{Customer, HumanAssistant, ResourceType, Robot};
    use crate::world::{Grid, Position, RadioConfig};

    fn customer(pos: Position) -> Customer {
        Customer {
            id: AgentId(0),
            pos,
            budget: 20.0,
            initial_offer: 5.0,
            offer_increment: 5.0,
        }
    }

    fn robot(id: u32, pos: Position, busy: bool) -> Robot {
        Robot {
            id: AgentId(id),
            pos,
            busy,
            resources: [ResourceType::generic()].into(),
        }
    }

    fn human(id: u32, pos: Position, min_offer: f64) -> HumanAssistant {
        HumanAssistant {
            id: AgentId(id),
            pos,
            min_offer,
            peak_time: 12.0,
            sigma: 2.0,
            resources: [ResourceType::generic()].into(),
        }
    }

    /// C at x=0, human at x=2, robot at x=4; range 2 makes a line graph.
    fn line() -> (World, Roster) {
        let world = World::new(Grid::open(5, 1).unwrap(), RadioConfig::new(2.0));
        let roster = Roster {
            customer: customer(Position::new(0, 0)),
            humans: vec![human(1, Position::new(2, 0), 100.0)],
            robots: vec![robot(2, Position::new(4, 0), false)],
        };
        (world, roster)
    }

    #[test]
    fn empty_request_short_circuits() {
        let (world, roster) = line();
        let out = run_directed_diffusion(
            &world,
            &roster,
            &Request::generic(0, 0, 12.0),
            RunOptions::default(),
            &mut Trace::disabled(),
        )
        .unwrap();
        assert!(out.fulfilled);
        assert!(out.selected.is_empty());
        assert_eq!(out.messages, 0);
        assert_eq!(total_cost(&out, &CostWeights::default()), 0.0);
    }

    #[test]
    fn line_trace_matches_hand_count() {
        let (world, roster) = line();
        let mut trace = Trace::enabled();
        let out = run_directed_diffusion(
            &world,
            &roster,
            &Request::generic(0, 1, 12.0),
            RunOptions::default(),
            &mut trace,
        )
        .unwrap();
        assert!(out.fulfilled);
        assert_eq!(out.selected.len(), 1);
        assert_eq!(out.selected[0].agent, AgentId(2));
        // 3 broadcasts + 2 reply hops + 2 confirm hops
        assert_eq!(out.messages, 7);
        assert_eq!(out.movement_cost, 4);
        let lines: Vec<String> = trace.events().iter().map(|e| e.to_string()).collect();
        assert_eq!(
            lines,
            [
                "0,0,*,interest,0-0,0",
                "0,1,*,interest,0-0,1",
                "0,2,*,interest,0-0,2",
                "0,2,1,reply,0-0,1",
                "0,1,0,reply,0-0,2",
                "0,0,1,confirm,0-0,1",
                "0,1,2,confirm,0-0,2",
            ]
        );
    }

    #[test]
    fn history_hit_costs_three_messages() {
        let world = World::new(Grid::open(6, 1).unwrap(), RadioConfig::new(1.0));
        let roster = Roster {
            customer: customer(Position::new(0, 0)),
            humans: vec![],
            robots: vec![robot(1, Position::new(1, 0), false), robot(2, Position::new(5, 0), false)],
        };
        let mut history = History::new();
        history.record_success([AgentId(1)]);
        let (out, updated) = run_hfi(
            &world,
            &roster,
            &Request::generic(0, 1, 9.0),
            &history,
            RunOptions::default(),
            &mut Trace::disabled(),
        )
        .unwrap();
        assert!(out.fulfilled);
        assert_eq!(out.messages, 3);
        assert_eq!(updated.get(AgentId(1)).unwrap().success_count, 2);
    }

    #[test]
    fn escalation_raises_offer_until_human_accepts() {
        let world = World::new(Grid::open(3, 1).unwrap(), RadioConfig::new(1.0));
        let roster = Roster {
            customer: customer(Position::new(0, 0)),
            humans: vec![human(1, Position::new(1, 0), 12.0)],
            robots: vec![],
        };
        let out = run_directed_diffusion(
            &world,
            &roster,
            &Request::generic(1, 0, 12.0),
            RunOptions::default(),
            &mut Trace::disabled(),
        )
        .unwrap();
        // levels 5, 10, 15: accepted at 15; two failed floods of 2 each, then 2 + 1 + 1
        assert!(out.fulfilled);
        assert_eq!(out.escalation_rounds, 3);
        assert_eq!(out.final_offer, 15.0);
        assert_eq!(out.reward_paid, 15.0);
        assert_eq!(out.messages, 2 + 2 + 4);
    }

    #[test]
    fn budget_exhaustion_yields_partial_outcome() {
        let (world, roster) = line();
        let out = run_directed_diffusion(
            &world,
            &roster,
            &Request::generic(1, 1, 12.0),
            RunOptions::default(),
            &mut Trace::disabled(),
        )
        .unwrap();
        assert!(!out.fulfilled);
        assert_eq!(out.escalation_rounds, 4);
        assert_eq!(out.selected.len(), 1);
        assert_eq!(out.final_offer, 20.0);
        assert_eq!(out.reward_paid, 0.0);
    }

    #[test]
    fn movement_unreachable_agent_is_not_selected() {
        let mut grid = Grid::open(5, 1).unwrap();
        grid.set(Position::new(2, 0), crate::world::Cell::Wall);
        let world = World::new(grid, RadioConfig::new(4.0));
        let roster = Roster {
            customer: customer(Position::new(0, 0)),
            humans: vec![],
            robots: vec![robot(1, Position::new(4, 0), false)],
        };
        let out = run_directed_diffusion(
            &world,
            &roster,
            &Request::generic(0, 1, 12.0),
            RunOptions::default(),
            &mut Trace::disabled(),
        )
        .unwrap();
        assert!(!out.fulfilled);
        assert!(out.selected.is_empty());
    }

    #[test]
    fn history_contact_order() {
        let mut h = History::new();
        h.record_success([AgentId(5), AgentId(3)]);
        h.record_success([AgentId(7)]);
        h.record_success([AgentId(5)]);
        let order: Vec<u32> = h.contact_order().iter().map(|e| e.agent.0).collect();
        assert_eq!(order, [5, 7, 3]);
    }

    #[test]
    fn total_cost_arithmetic() {
        let out = ProtocolOutcome {
            fulfilled: true,
            selected: vec![],
            final_offer: 0.0,
            messages: 7,
            movement_cost: 4,
            reward_paid: 0.0,
            escalation_rounds: 1,
        };
        assert_eq!(total_cost(&out, &CostWeights::default()), 11.0);
    }

    #[test]
    fn invalid_roster_is_a_configuration_error() {
        let (world, mut roster) = line();
        roster.robots[0].pos = Position::new(9, 0);
        let err = run_directed_diffusion(
            &world,
            &roster,
            &Request::generic(0, 1, 12.0),
            RunOptions::default(),
            &mut Trace::disabled(),
        );
        assert!(matches!(err, Err(ProtocolError::Roster(_))));
    }
}
