//! Shared helpers for integration tests: fixtures, an aiming search that
//! finds agent poses for scripted interactions, random worlds and action
//! streams, and brute-force oracles.
#![allow(dead_code)]

use std::collections::BTreeSet;

use housesim_core::evaluation::{events_equivalent, RoomPoint};
use housesim_core::geometry::{normalize_degrees, Aabb, Point2, Vec3};
use housesim_core::interaction::{self, InteractionEvent, StateChange};
use housesim_core::kinematics::{apply_action, Action, StepConfig};
use housesim_core::physics;
use housesim_core::scenario::{generate_scenario, load_house, ScenarioEntry};
use housesim_core::scene::{House, ObjectClass, WorldState};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type TestRng = Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> TestRng {
    TestRng::seed_from_u64(seed)
}

pub fn two_room_house() -> House {
    load_house(include_bytes!("../fixtures/two_room.json")).expect("fixture is valid")
}

pub fn three_room_house() -> House {
    load_house(include_bytes!("../fixtures/three_room.json")).expect("fixture is valid")
}

pub fn cfg() -> StepConfig {
    StepConfig::default()
}

// ---------------------------------------------------------------------------
// Aiming

/// Places the agent at horizontal distance `d` from `p` along bearing `theta`,
/// facing and pitched at `p`.
pub fn pose_towards(world: &WorldState, config: &StepConfig, p: Vec3, d: f64, theta: f64) -> WorldState {
    let mut w = world.clone();
    let back = housesim_core::geometry::heading(theta);
    let pos = Point2::new(p.x - back.x * d, p.z - back.z * d);
    w.agent.position = pos;
    w.agent.yaw = normalize_degrees(theta);
    w.agent.pitch = (p.y - config.eye_height).atan2(d).to_degrees().clamp(-90.0, 90.0);
    w
}

/// Searches stand-off distances and bearings around each point for a free
/// agent pose the predicate accepts. The agent's held and engaged fields are kept.
pub fn find_pose(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    points: &[Vec3],
    accept: impl Fn(&WorldState) -> bool,
) -> Option<WorldState> {
    for &p in points {
        for di in 0..18 {
            let d = 0.3 + 0.05 * di as f64;
            for ai in 0..24 {
                let theta = 15.0 * ai as f64;
                let w = pose_towards(world, config, p, d, theta);
                if house.room_at(w.agent.position).is_none()
                    || !physics::agent_free_at(house, world, config, w.agent.position)
                {
                    continue;
                }
                if accept(&w) {
                    return Some(w);
                }
            }
        }
    }
    None
}

/// Candidate aim points on a box: a grid over the top face, then side-face centers.
pub fn box_points(b: &Aabb) -> Vec<Vec3> {
    let mut out = Vec::new();
    for fx in [0.5, 0.25, 0.75, 0.1, 0.9] {
        for fz in [0.5, 0.25, 0.75, 0.1, 0.9] {
            out.push(Vec3::new(b.min.x + fx * (b.max.x - b.min.x), b.max.y, b.min.z + fz * (b.max.z - b.min.z)));
        }
    }
    let c = b.center();
    for y in [0.75, 0.5] {
        let y = b.min.y + y * (b.max.y - b.min.y);
        out.push(Vec3::new(b.min.x, y, c.z));
        out.push(Vec3::new(b.max.x, y, c.z));
        out.push(Vec3::new(c.x, y, b.min.z));
        out.push(Vec3::new(c.x, y, b.max.z));
    }
    out
}

/// A pose whose view ray targets `id` within reach.
pub fn aim_at_object(house: &House, world: &WorldState, config: &StepConfig, id: &str) -> Option<WorldState> {
    let b = physics::world_aabb(house, world, config, id).ok()?;
    find_pose(house, world, config, &box_points(&b), |w| {
        interaction::target(house, w, config).is_some_and(|(t, _)| t == id)
    })
}

/// World points spread over every interior surface of container `id`.
pub fn interior_points(house: &House, world: &WorldState, config: &StepConfig, id: &str) -> Vec<Vec3> {
    let Ok(b) = physics::world_aabb(house, world, config, id) else { return Vec::new() };
    let ty = house.object_type(&world.objects[id].type_id).expect("type exists");
    let c = b.center();
    let mut out = Vec::new();
    for s in &ty.interior_surfaces {
        for fx in [0.5, 0.2, 0.8] {
            for fz in [0.5, 0.2, 0.8] {
                out.push(Vec3::new(
                    c.x + s.rect.min_x + fx * s.rect.width(),
                    b.min.y + s.height,
                    c.z + s.rect.min_z + fz * s.rect.depth(),
                ));
            }
        }
    }
    out
}

pub fn step(house: &House, world: &WorldState, config: &StepConfig, a: Action) -> (WorldState, Vec<InteractionEvent>) {
    let (w, events) = apply_action(house, world, a, config);
    (w, events.iter().filter_map(|e| e.interaction()).collect())
}

/// Engages openable `id` from a reachable pose and looks down until it is open.
pub fn open_container(house: &House, world: &WorldState, config: &StepConfig, id: &str) -> Result<WorldState, String> {
    let mut w = world.clone();
    w.agent.engaged = None;
    let mut w = aim_at_object(house, &w, config, id).ok_or(format!("no pose targets {id}"))?;
    let (next, ev) = step(house, &w, config, Action::Interact);
    if ev != [InteractionEvent::Engaged { id: id.to_string() }] {
        return Err(format!("engaging {id} gave {ev:?}"));
    }
    w = next;
    while !interaction::is_open(house, &w, id) {
        w = step(house, &w, config, Action::LookDown).0;
        if w.objects[id].open_fraction == Some(1.0) && !interaction::is_open(house, &w, id) {
            return Err(format!("{id} cannot open"));
        }
    }
    Ok(w)
}

/// Runs open C, pick P, place P in C, close C, reopen C, pick P.
/// `Ok(None)` means some pose needed by the sequence is out of reach.
pub fn container_round_trip(
    house: &House,
    config: &StepConfig,
    pickable: &str,
    container: &str,
) -> Result<Option<WorldState>, String> {
    let mut w = house.initial_world();
    // Open every closed container enclosing the pickable, then the target container.
    let chain = w.container_chain(pickable).map_err(|e| e.to_string())?;
    for c in chain.iter().rev().chain(std::iter::once(&container.to_string())) {
        if !interaction::is_open(house, &w, c) {
            match open_container(house, &w, config, c) {
                Ok(next) => w = next,
                Err(e) if e.starts_with("no pose") => return Ok(None),
                Err(e) => return Err(e),
            }
        }
    }
    // Walk away (disengages) and pick.
    w.agent.engaged = None;
    let Some(aimed) = aim_at_object(house, &w, config, pickable) else { return Ok(None) };
    let (next, ev) = step(house, &aimed, config, Action::Interact);
    if ev != [InteractionEvent::Pick { id: pickable.to_string() }] {
        return Err(format!("picking {pickable} gave {ev:?}"));
    }
    w = next;
    // Place inside the container.
    let points = interior_points(house, &w, config, container);
    let placed = find_pose(house, &w, config, &points, |cand| {
        let t = interaction::placement_target(house, cand, config);
        t.as_ref().is_some_and(|t| t.container.as_deref() == Some(container))
            && matches!(step(house, cand, config, Action::Interact).1.as_slice(), [InteractionEvent::Place { .. }])
    });
    let Some(aimed) = placed else { return Ok(None) };
    w = step(house, &aimed, config, Action::Interact).0;
    if w.objects[pickable].container() != Some(container) {
        return Err(format!("{pickable} placed outside {container}"));
    }
    // Re-engage and close.
    let Some(aimed) = aim_at_object(house, &w, config, container) else { return Ok(None) };
    let (next, ev) = step(house, &aimed, config, Action::Interact);
    if ev != [InteractionEvent::Engaged { id: container.to_string() }] {
        return Err(format!("re-engaging {container} gave {ev:?}"));
    }
    w = next;
    while w.objects[container].open_fraction.unwrap_or(0.0) > 0.0 {
        w = step(house, &w, config, Action::LookUp).0;
    }
    if interaction::is_open(house, &w, container) {
        return Err(format!("{container} did not close"));
    }
    if aim_at_object(house, &w, config, pickable).is_some() {
        return Err(format!("{pickable} targetable inside closed {container}"));
    }
    // Reopen and pick.
    while !interaction::is_open(house, &w, container) {
        w = step(house, &w, config, Action::LookDown).0;
    }
    let Some(aimed) = aim_at_object(house, &w, config, pickable) else {
        return Err(format!("{pickable} unreachable after reopening {container}"));
    };
    let (next, ev) = step(house, &aimed, config, Action::Interact);
    if ev != [InteractionEvent::Pick { id: pickable.to_string() }] {
        return Err(format!("final pick of {pickable} gave {ev:?}"));
    }
    if next.agent.held.as_deref() != Some(pickable) {
        return Err(format!("{pickable} not held at the end"));
    }
    Ok(Some(next))
}

pub fn ids_of_class(house: &House, class: ObjectClass) -> Vec<String> {
    house
        .initial_objects
        .iter()
        .filter(|o| house.object_type(&o.type_id).is_some_and(|t| t.class == class))
        .map(|o| o.id.clone())
        .collect()
}

// ---------------------------------------------------------------------------
// Random worlds and actions

pub fn random_action(rng: &mut TestRng) -> Action {
    Action::ALL[rng.random_range(0..Action::ALL.len())]
}

/// Mostly walks forward, turning now and then; crosses rooms far more often than uniform actions.
pub fn wander_action(rng: &mut TestRng) -> Action {
    match rng.random_range(0..10) {
        0 => Action::LookLeft,
        1 => Action::LookRight,
        2 => Action::StrafeLeft,
        3 => Action::StrafeRight,
        _ => Action::MoveForward,
    }
}

/// A free, in-room agent position drawn uniformly over the house.
pub fn random_free_position(house: &House, world: &WorldState, config: &StepConfig, rng: &mut TestRng) -> Point2 {
    let (mut lo, mut hi) = (Point2::new(f64::MAX, f64::MAX), Point2::new(f64::MIN, f64::MIN));
    for r in &house.rooms {
        lo = Point2::new(lo.x.min(r.floor_rect.min_x), lo.z.min(r.floor_rect.min_z));
        hi = Point2::new(hi.x.max(r.floor_rect.max_x), hi.z.max(r.floor_rect.max_z));
    }
    loop {
        let p = Point2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.z..hi.z));
        if house.room_at(p).is_some() && physics::agent_free_at(house, world, config, p) {
            return p;
        }
    }
}

/// A generated scenario with a few extra pickables and a random agent pose.
pub fn random_world(house: &House, config: &StepConfig, rng: &mut TestRng) -> WorldState {
    let pickables: Vec<String> = house
        .type_catalog
        .iter()
        .filter(|t| t.class == ObjectClass::Pickable)
        .map(|t| t.type_id.clone())
        .collect();
    let mut spec = Vec::new();
    for _ in 0..rng.random_range(0..4) {
        spec.push(ScenarioEntry { type_id: pickables[rng.random_range(0..pickables.len())].clone(), count: 1 });
    }
    let mut w = generate_scenario(house, config, &spec, rng.random()).expect("small specs fit");
    w.agent.position = random_free_position(house, &w, config, rng);
    w.agent.yaw = 15.0 * rng.random_range(0..24) as f64;
    w.agent.pitch = 15.0 * rng.random_range(-6..=6) as f64;
    w
}

/// A session start: a random world, aimed at a random interactable half the time.
pub fn random_start(house: &House, config: &StepConfig, rng: &mut TestRng) -> WorldState {
    let w = random_world(house, config, rng);
    if rng.random_bool(0.5) {
        let candidates: Vec<&String> = w
            .objects
            .keys()
            .filter(|id| house.object_type(&w.objects[*id].type_id).is_some_and(|t| t.class != ObjectClass::Static))
            .collect();
        let id = candidates[rng.random_range(0..candidates.len())].clone();
        if let Some(aimed) = aim_at_object(house, &w, config, &id) {
            return aimed;
        }
    }
    w
}

/// Ids of every object whose container chain holds a container below its threshold.
pub fn hidden_contents(house: &House, world: &WorldState) -> BTreeSet<String> {
    world.objects.keys().filter(|id| !interaction::chain_open(house, world, id)).cloned().collect()
}

pub fn room_point(house: &House, p: Point2) -> RoomPoint {
    let room = house.room_at(p).expect("point inside the house");
    RoomPoint::new(&room.room_id, p.x, p.z)
}

// ---------------------------------------------------------------------------
// Oracles

/// Shortest door route by enumerating every door sequence of at most `max_doors`.
pub fn brute_force_route(house: &House, agent: &RoomPoint, goal: &RoomPoint, max_doors: usize) -> Option<f64> {
    fn go(
        house: &House,
        room: &str,
        at: Point2,
        goal: &RoomPoint,
        used: &mut Vec<usize>,
        max_doors: usize,
        best: &mut Option<f64>,
        so_far: f64,
    ) {
        if room == goal.room {
            let total = so_far + at.distance(goal.point());
            if best.is_none_or(|b| total < b) {
                *best = Some(total);
            }
        }
        if used.len() == max_doors {
            return;
        }
        for (i, d) in house.doors.iter().enumerate() {
            if used.contains(&i) || !d.touches(room) {
                continue;
            }
            let next = if d.rooms[0] == room { &d.rooms[1] } else { &d.rooms[0] };
            used.push(i);
            go(house, next, d.anchor, goal, used, max_doors, best, so_far + at.distance(d.anchor));
            used.pop();
        }
    }
    if agent.room == goal.room {
        return Some(agent.point().distance(goal.point()));
    }
    let mut best = None;
    go(house, &agent.room, agent.point(), goal, &mut Vec::new(), max_doors, &mut best, 0.0);
    best
}

/// Every order-preserving matching, exhaustively: returns the maximum size and
/// the lexicographically smallest pair list of that size.
pub fn exhaustive_matching(a: &[InteractionEvent], b: &[InteractionEvent]) -> (usize, Vec<(usize, usize)>) {
    fn go(
        a: &[InteractionEvent],
        b: &[InteractionEvent],
        i0: usize,
        j0: usize,
        cur: &mut Vec<(usize, usize)>,
        best: &mut Vec<(usize, usize)>,
    ) {
        if cur.len() > best.len() || (cur.len() == best.len() && *cur < *best) {
            *best = cur.clone();
        }
        for i in i0..a.len() {
            for j in j0..b.len() {
                if events_equivalent(&a[i], &b[j]) {
                    cur.push((i, j));
                    go(a, b, i + 1, j + 1, cur, best);
                    cur.pop();
                }
            }
        }
    }
    let mut best = Vec::new();
    go(a, b, 0, 0, &mut Vec::new(), &mut best);
    (best.len(), best)
}

/// Precision, recall and F1 computed directly from their definitions.
pub fn oracle_scores(matched: usize, n_agent: usize, n_ref: usize) -> (f64, f64, f64) {
    if n_agent == 0 && n_ref == 0 {
        return (1.0, 1.0, 1.0);
    }
    let p = if n_agent == 0 { 0.0 } else { matched as f64 / n_agent as f64 };
    let r = if n_ref == 0 { 0.0 } else { matched as f64 / n_ref as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Random interaction event over a small alphabet so matches are common.
pub fn random_event(rng: &mut TestRng) -> InteractionEvent {
    let ids = ["a", "b", "c"];
    match rng.random_range(0..4) {
        0 => InteractionEvent::Pick { id: ids[rng.random_range(0..3)].into() },
        1 => InteractionEvent::Place {
            id: ids[rng.random_range(0..2)].into(),
            room: ["r", "s"][rng.random_range(0..2)].into(),
            x: 0.5 * rng.random_range(0..4) as f64,
            z: 0.5 * rng.random_range(0..3) as f64,
        },
        2 => InteractionEvent::SetState { id: "tv".into(), state: StateChange::Toggle(rng.random_range(0..2)) },
        _ => InteractionEvent::SetState {
            id: "c".into(),
            state: if rng.random_bool(0.5) { StateChange::Opened } else { StateChange::Closed },
        },
    }
}

pub fn random_events(rng: &mut TestRng, max_len: usize) -> Vec<InteractionEvent> {
    let n = rng.random_range(0..=max_len);
    (0..n).map(|_| random_event(rng)).collect()
}

// ---------------------------------------------------------------------------
// Server harness

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::Arc;

use housesim_core::server::{read_frame, run_bridge, run_tcp, write_frame, Catalog};
use serde_json::Value;

/// Catalog with the sample houses plus the two-room fixture.
pub fn test_catalog() -> Arc<Catalog> {
    let mut c = Catalog::with_samples();
    c.insert(two_room_house());
    Arc::new(c)
}

/// Starts a framed-TCP server on an ephemeral port.
pub fn spawn_tcp() -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().expect("addr");
    let catalog = test_catalog();
    std::thread::spawn(move || run_tcp(listener, catalog));
    addr
}

/// Starts a WebSocket bridge on an ephemeral port.
pub fn spawn_bridge() -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().expect("addr");
    let catalog = test_catalog();
    std::thread::spawn(move || run_bridge(listener, catalog));
    addr
}

pub struct Client {
    pub stream: TcpStream,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> Self {
        let stream = TcpStream::connect(addr).expect("connect");
        stream.set_nodelay(true).ok();
        stream.set_read_timeout(Some(std::time::Duration::from_secs(30))).ok();
        Self { stream }
    }

    pub fn send(&mut self, req: &Value) {
        write_frame(&mut self.stream, &serde_json::to_vec(req).unwrap()).expect("send");
    }

    pub fn send_raw(&mut self, bytes: &[u8]) {
        self.stream.write_all(bytes).expect("send raw");
        self.stream.flush().ok();
    }

    /// Next response, or `None` once the server has closed the connection.
    pub fn recv(&mut self) -> Option<Value> {
        match read_frame(&mut self.stream) {
            Ok(Some(b)) => Some(serde_json::from_slice(&b).expect("responses are JSON")),
            _ => None,
        }
    }

    pub fn call(&mut self, req: &Value) -> Value {
        self.send(req);
        self.recv().expect("response")
    }

    /// True when the server has closed its side.
    pub fn is_closed(&mut self) -> bool {
        let mut b = [0u8; 1];
        matches!(self.stream.read(&mut b), Ok(0) | Err(_))
    }
}
