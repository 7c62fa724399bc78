//! Navigation error over the room/door graph and manipulation accuracy as an
//! F1 score over order-preserving matches of interaction lists.

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, LINEAR_TOLERANCE};
use crate::interaction::{InteractionEvent, StateChange};
use crate::scene::House;

/// Placements within this distance (inclusive) of each other are equivalent, meters.
pub const PLACE_RADIUS: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("point ({x}, {z}) is not inside room `{room}`")]
    PointOutsideRoom { room: String, x: f64, z: f64 },
    #[error("no door path from `{from}` to `{to}`")]
    Unreachable { from: String, to: String },
}

/// A world XZ point tagged with the room it is claimed to lie in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomPoint {
    pub room: String,
    pub x: f64,
    pub z: f64,
}

impl RoomPoint {
    pub fn new(room: &str, x: f64, z: f64) -> Self {
        Self { room: room.to_string(), x, z }
    }

    pub fn point(&self) -> Point2 {
        Point2::new(self.x, self.z)
    }
}

/// Doors plus the agent and goal as nodes; edges join nodes sharing a room,
/// weighted by straight-line distance.
pub struct RoomGraph {
    pub graph: UnGraph<Point2, f64>,
    pub agent: NodeIndex,
    pub goal: NodeIndex,
}

impl RoomGraph {
    pub fn build(house: &House, agent: &RoomPoint, goal: &RoomPoint) -> Self {
        let mut graph = UnGraph::new_undirected();
        let doors: Vec<NodeIndex> = house.doors.iter().map(|d| graph.add_node(d.anchor)).collect();
        let a = graph.add_node(agent.point());
        let g = graph.add_node(goal.point());
        for room in &house.rooms {
            let mut members: Vec<NodeIndex> = house
                .doors
                .iter()
                .zip(&doors)
                .filter(|(d, _)| d.touches(&room.room_id))
                .map(|(_, &n)| n)
                .collect();
            if agent.room == room.room_id {
                members.push(a);
            }
            if goal.room == room.room_id {
                members.push(g);
            }
            for (i, &u) in members.iter().enumerate() {
                for &v in &members[i + 1..] {
                    let w = graph[u].distance(graph[v]);
                    graph.add_edge(u, v, w);
                }
            }
        }
        Self { graph, agent: a, goal: g }
    }
}

fn check_in_room(house: &House, p: &RoomPoint) -> Result<(), EvalError> {
    let inside = house.room(&p.room).is_some_and(|r| {
        let f = r.floor_rect;
        p.x >= f.min_x - LINEAR_TOLERANCE
            && p.x <= f.max_x + LINEAR_TOLERANCE
            && p.z >= f.min_z - LINEAR_TOLERANCE
            && p.z <= f.max_z + LINEAR_TOLERANCE
    });
    if inside {
        Ok(())
    } else {
        Err(EvalError::PointOutsideRoom { room: p.room.clone(), x: p.x, z: p.z })
    }
}

/// Sum of straight-line distances per room along the shortest door route.
pub fn navigation_error(house: &House, agent: &RoomPoint, goal: &RoomPoint) -> Result<f64, EvalError> {
    check_in_room(house, agent)?;
    check_in_room(house, goal)?;
    if agent.room == goal.room {
        return Ok(agent.point().distance(goal.point()));
    }
    let g = RoomGraph::build(house, agent, goal);
    let costs = dijkstra(&g.graph, g.agent, Some(g.goal), |e| *e.weight());
    costs.get(&g.goal).copied().ok_or_else(|| EvalError::Unreachable {
        from: agent.room.clone(),
        to: goal.room.clone(),
    })
}

/// Same object, same room, centers at most `PLACE_RADIUS` apart.
pub fn place_equivalent(a: &InteractionEvent, b: &InteractionEvent) -> bool {
    match (a, b) {
        (
            InteractionEvent::Place { id: ia, room: ra, x: xa, z: za },
            InteractionEvent::Place { id: ib, room: rb, x: xb, z: zb },
        ) => ia == ib && ra == rb && (xa - xb).hypot(za - zb) <= PLACE_RADIUS,
        _ => false,
    }
}

/// Which way a state change went: toggles by their new index, openables by direction.
fn state_direction(s: &StateChange) -> (u8, u8) {
    match s {
        StateChange::Toggle(k) => (0, *k),
        StateChange::Opened => (1, 1),
        StateChange::Closed => (1, 0),
        StateChange::Adjust { from, to, .. } => (1, u8::from(to > from)),
    }
}

/// The equivalence evaluation matches under.
pub fn events_equivalent(a: &InteractionEvent, b: &InteractionEvent) -> bool {
    match (a, b) {
        (InteractionEvent::Pick { id: x }, InteractionEvent::Pick { id: y }) => x == y,
        (InteractionEvent::Place { .. }, InteractionEvent::Place { .. }) => place_equivalent(a, b),
        (InteractionEvent::SetState { id: x, state: s }, InteractionEvent::SetState { id: y, state: t }) => {
            x == y && state_direction(s) == state_direction(t)
        }
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `(agent index, reference index)`, strictly increasing in both.
    pub matched_pairs: Vec<(usize, usize)>,
}

impl MatchReport {
    /// Scores `matched` matches out of `n_agent` and `n_ref` events.
    ///
    /// Two empty lists agree perfectly; an empty side against a non-empty
    /// one scores zero.
    pub fn from_counts(matched: usize, n_agent: usize, n_ref: usize, pairs: Vec<(usize, usize)>) -> Self {
        if n_agent == 0 && n_ref == 0 {
            return Self { precision: 1.0, recall: 1.0, f1: 1.0, matched_pairs: pairs };
        }
        let ratio = |n: usize| if n == 0 { 0.0 } else { matched as f64 / n as f64 };
        let (p, r) = (ratio(n_agent), ratio(n_ref));
        let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        Self { precision: p, recall: r, f1, matched_pairs: pairs }
    }
}

/// Longest order-preserving matching between the lists; among maximum
/// matchings the lexicographically smallest pair sequence is reported.
pub fn manipulation_accuracy(agent: &[InteractionEvent], reference: &[InteractionEvent]) -> MatchReport {
    let (n, m) = (agent.len(), reference.len());
    // best[i][j]: size of the maximum matching of agent[i..] against reference[j..].
    let mut best = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let take = if events_equivalent(&agent[i], &reference[j]) { best[i + 1][j + 1] + 1 } else { 0 };
            best[i][j] = take.max(best[i + 1][j]).max(best[i][j + 1]);
        }
    }
    let mut pairs = Vec::with_capacity(best[0][0]);
    let (mut i0, mut j0) = (0, 0);
    while pairs.len() < best[0][0] {
        let need = best[i0][j0];
        let next = (i0..n)
            .flat_map(|i| (j0..m).map(move |j| (i, j)))
            .find(|&(i, j)| events_equivalent(&agent[i], &reference[j]) && best[i + 1][j + 1] + 1 == need)
            .expect("a maximum matching continues from here");
        pairs.push(next);
        (i0, j0) = (next.0 + 1, next.1 + 1);
    }
    MatchReport::from_counts(pairs.len(), n, m, pairs)
}

/// Report printed by the CLI and returned by the server.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub navigation_error_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched_pairs: Option<Vec<(usize, usize)>>,
}

impl EvalReport {
    pub fn with_match(mut self, m: MatchReport) -> Self {
        self.precision = Some(m.precision);
        self.recall = Some(m.recall);
        self.f1 = Some(m.f1);
        self.matched_pairs = Some(m.matched_pairs);
        self
    }
}
