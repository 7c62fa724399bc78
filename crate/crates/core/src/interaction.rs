//! First-person targeting and the overloaded `interact` action.
//!
//! An openable at or above its open threshold is hollow to rays: its contents
//! and interior surfaces can be hit, and the container itself only registers
//! where the ray leaves its box. Below the threshold it is a solid box and its
//! contents are hidden.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{heading, ray_box, Ray, Vec3};
use crate::kinematics::StepConfig;
use crate::physics::{self, wall_segments};
use crate::scene::{House, Location, ObjectClass, WorldState};

/// How an object's interaction state changed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateChange {
    /// Toggleable switched to this state index.
    Toggle(u8),
    /// One open-fraction increment on an openable.
    Adjust { from: f64, to: f64, threshold: f64 },
    /// Openable crossed its threshold upwards.
    Opened,
    /// Openable fell back below its threshold.
    Closed,
}

impl StateChange {
    /// For adjustments, whether the openable is at or above its threshold before and after.
    pub fn open_before_after(&self) -> Option<(bool, bool)> {
        match self {
            StateChange::Adjust { from, to, threshold } => Some((*from >= *threshold, *to >= *threshold)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InteractionEvent {
    Pick { id: String },
    /// `x`/`z` are world coordinates of the placed object's center.
    Place { id: String, room: String, x: f64, z: f64 },
    SetState { id: String, state: StateChange },
    Engaged { id: String },
    Disengaged { id: String },
    NoTarget,
}

impl InteractionEvent {
    /// Pick, place and set-state are the events evaluation scores.
    pub fn is_manipulation(&self) -> bool {
        matches!(
            self,
            InteractionEvent::Pick { .. } | InteractionEvent::Place { .. } | InteractionEvent::SetState { .. }
        )
    }
}

fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let h = heading(deg);
    (h.x, h.z)
}

pub fn eye_point(agent: &crate::scene::AgentState, config: &StepConfig) -> Vec3 {
    Vec3::new(agent.position.x, config.eye_height, agent.position.z)
}

/// Ray from the agent's eye along its yaw and pitch.
pub fn view_ray(agent: &crate::scene::AgentState, config: &StepConfig) -> Ray {
    Ray { origin: eye_point(agent, config), direction: direction(agent.yaw, agent.pitch) }
}

/// Unit direction for a yaw and pitch in degrees (pitch positive looks up).
pub fn direction(yaw: f64, pitch: f64) -> Vec3 {
    let flat = heading(yaw);
    let (sp, cp) = sin_cos_deg(pitch);
    Vec3::new(flat.x * cp, sp, flat.z * cp).normalized()
}

/// What a ray struck.
#[derive(Clone, Debug, PartialEq)]
pub enum HitKind {
    /// `top` is set when the ray came down onto the box's upper face.
    Object { id: String, top: bool },
    Wall,
    Floor,
    Ceiling,
    RoomSurface { surface: String },
    InteriorSurface { container: String, surface: String },
}

impl HitKind {
    fn rank(&self) -> u8 {
        match self {
            HitKind::Object { .. } => 0,
            HitKind::InteriorSurface { .. } => 1,
            HitKind::RoomSurface { .. } => 2,
            HitKind::Floor => 3,
            HitKind::Wall => 4,
            HitKind::Ceiling => 5,
        }
    }

    fn key(&self) -> &str {
        match self {
            HitKind::Object { id, .. } => id,
            HitKind::InteriorSurface { surface, .. } | HitKind::RoomSurface { surface } => surface,
            _ => "",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    pub kind: HitKind,
}

const MIN_T: f64 = 1e-9;

/// True when every container enclosing `id` is open at or above its threshold.
pub fn chain_open(house: &House, world: &WorldState, id: &str) -> bool {
    match world.container_chain(id) {
        Ok(chain) => chain.iter().all(|c| is_open(house, world, c)),
        Err(_) => false,
    }
}

/// True for an openable at or above its threshold.
pub fn is_open(house: &House, world: &WorldState, id: &str) -> bool {
    world
        .objects
        .get(id)
        .and_then(|o| {
            let ty = house.object_type(&o.type_id)?;
            (ty.class == ObjectClass::Openable).then(|| o.open_fraction.unwrap_or(0.0) >= ty.threshold())
        })
        .unwrap_or(false)
}

/// Precomputed walls for repeated casts against one house.
pub struct Caster<'a> {
    house: &'a House,
    walls: Vec<physics::WallSegment>,
}

impl<'a> Caster<'a> {
    pub fn new(house: &'a House) -> Self {
        Self { house, walls: wall_segments(house) }
    }

    /// Nearest hit within `max_t`. Surfaces are only considered when
    /// `surfaces` is set (they are placement annotations, not visible geometry).
    pub fn cast(
        &self,
        world: &WorldState,
        config: &StepConfig,
        ray: &Ray,
        max_t: f64,
        surfaces: bool,
    ) -> Option<Hit> {
        let house = self.house;
        let o = ray.origin;
        let d = ray.direction;
        let mut hits: Vec<(f64, HitKind)> = Vec::new();

        for w in &self.walls {
            let (o_across, d_across, o_along, d_along) =
                if w.along_z { (o.x, d.x, o.z, d.z) } else { (o.z, d.z, o.x, d.x) };
            if d_across == 0.0 {
                continue;
            }
            let t = (w.coord - o_across) / d_across;
            if t <= MIN_T {
                continue;
            }
            let along = o_along + t * d_along;
            let y = o.y + t * d.y;
            if along >= w.lo && along <= w.hi && y >= 0.0 && y <= w.height {
                hits.push((t, HitKind::Wall));
            }
        }
        if d.y < 0.0 {
            let t = -o.y / d.y;
            if t > MIN_T && house.room_at(ray.at(t).xz()).is_some() {
                hits.push((t, HitKind::Floor));
            }
        }
        if d.y > 0.0 {
            for room in &house.rooms {
                let t = (room.wall_height - o.y) / d.y;
                if t > MIN_T && room.floor_rect.contains(ray.at(t).xz()) {
                    hits.push((t, HitKind::Ceiling));
                }
            }
        }

        for (id, obj) in &world.objects {
            if obj.is_held() || !chain_open(house, world, id) {
                continue;
            }
            let Ok(b) = physics::world_aabb(house, world, config, id) else { continue };
            let Some(c) = ray_box(ray, &b) else { continue };
            if is_open(house, world, id) {
                if c.exit > MIN_T {
                    hits.push((c.exit, HitKind::Object { id: id.clone(), top: false }));
                }
                if surfaces && d.y < 0.0 {
                    let ty = house.object_type(&obj.type_id).expect("resolved above");
                    let origin = b.center().xz();
                    for s in &ty.interior_surfaces {
                        let t = (b.min.y + s.height - o.y) / d.y;
                        if t > MIN_T && s.rect.translate(origin).contains(ray.at(t).xz()) {
                            hits.push((
                                t,
                                HitKind::InteriorSurface { container: id.clone(), surface: s.surface_id.clone() },
                            ));
                        }
                    }
                }
            } else if c.enter > MIN_T {
                let top = c.enter_axis == 1 && d.y < 0.0;
                hits.push((c.enter, HitKind::Object { id: id.clone(), top }));
            }
        }

        if surfaces && d.y < 0.0 {
            for room in &house.rooms {
                for s in &room.surfaces {
                    let t = (s.height - o.y) / d.y;
                    if t > MIN_T && s.rect.translate(room.origin()).contains(ray.at(t).xz()) {
                        hits.push((t, HitKind::RoomSurface { surface: s.surface_id.clone() }));
                    }
                }
            }
        }

        hits.into_iter()
            .filter(|(t, _)| *t <= max_t)
            .min_by(|(ta, ka), (tb, kb)| {
                ta.total_cmp(tb).then(ka.rank().cmp(&kb.rank())).then(ka.key().cmp(kb.key()))
            })
            .map(|(t, kind)| Hit { t, point: ray.at(t), kind })
    }
}

/// Object under the agent's view ray within reach, with the hit point.
pub fn target(house: &House, world: &WorldState, config: &StepConfig) -> Option<(String, Vec3)> {
    let ray = view_ray(&world.agent, config);
    match Caster::new(house).cast(world, config, &ray, config.max_interact_range, false)? {
        Hit { kind: HitKind::Object { id, .. }, point, .. } => Some((id, point)),
        _ => None,
    }
}

/// Where a held object would be set down: a world point at the support
/// height and the container context it lands in (`None` for room level).
#[derive(Clone, Debug, PartialEq)]
pub struct PlacementTarget {
    pub point: Vec3,
    pub container: Option<String>,
}

/// Support under the view ray, if the nearest thing hit within reach can hold an object.
pub fn placement_target(house: &House, world: &WorldState, config: &StepConfig) -> Option<PlacementTarget> {
    let ray = view_ray(&world.agent, config);
    let hit = Caster::new(house).cast(world, config, &ray, config.max_interact_range, true)?;
    match hit.kind {
        HitKind::Floor | HitKind::RoomSurface { .. } => Some(PlacementTarget { point: hit.point, container: None }),
        HitKind::InteriorSurface { container, .. } => {
            Some(PlacementTarget { point: hit.point, container: Some(container) })
        }
        HitKind::Object { id, top: true } => {
            let container = world.objects.get(&id)?.container().map(str::to_string);
            Some(PlacementTarget { point: hit.point, container })
        }
        _ => None,
    }
}

/// Sets the held object down centered on `target`. Returns `None` (world
/// untouched) when the spot has no valid frame or the object would collide.
pub fn place_held(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    target: &PlacementTarget,
) -> Option<(WorldState, InteractionEvent)> {
    let id = world.agent.held.clone()?;
    let at = target.point.xz();
    let (location, elevation) =
        physics::location_at(house, world, config, target.container.as_deref(), at, target.point.y)?;
    let mut w = world.clone();
    {
        let o = w.objects.get_mut(&id)?;
        o.location = location;
        o.elevation = elevation;
    }
    w.agent.held = None;
    if !placement_clear(house, &w, config, &id) {
        return None;
    }
    let w = physics::settle(house, &w, config);
    if !placement_clear(house, &w, config, &id) {
        return None;
    }
    let room = house.room_at(at)?.room_id.clone();
    Some((w, InteractionEvent::Place { id, room, x: at.x, z: at.z }))
}

fn placement_clear(house: &House, world: &WorldState, config: &StepConfig, id: &str) -> bool {
    let Ok(b) = physics::world_aabb(house, world, config, id) else { return false };
    let mut ignore: BTreeSet<String> = world.container_chain(id).unwrap_or_default().into_iter().collect();
    ignore.insert(id.to_string());
    if physics::collides(house, world, config, &b, &ignore).is_some() {
        return false;
    }
    !b.interpenetrates(&physics::agent_box(house, &world.agent, config))
}

/// The `interact` action: place if holding, else disengage the engaged
/// container if it is targeted, else act on the target by class.
pub fn interact(house: &House, world: &WorldState, config: &StepConfig) -> (WorldState, InteractionEvent) {
    if world.agent.held.is_some() {
        let placed = placement_target(house, world, config).and_then(|t| place_held(house, world, config, &t));
        return placed.unwrap_or_else(|| (world.clone(), InteractionEvent::NoTarget));
    }

    let Some((id, _)) = target(house, world, config) else {
        return (world.clone(), InteractionEvent::NoTarget);
    };
    if world.agent.engaged.as_deref() == Some(id.as_str()) {
        let mut w = world.clone();
        w.agent.engaged = None;
        return (w, InteractionEvent::Disengaged { id });
    }

    let obj = &world.objects[&id];
    let Some(ty) = house.object_type(&obj.type_id) else {
        return (world.clone(), InteractionEvent::NoTarget);
    };
    let mut w = world.clone();
    match ty.class {
        ObjectClass::Openable => {
            w.agent.engaged = Some(id.clone());
            (w, InteractionEvent::Engaged { id })
        }
        ObjectClass::Pickable if chain_open(house, world, &id) => {
            let o = w.objects.get_mut(&id).expect("target exists");
            o.location = Location::HeldByAgent;
            o.elevation = 0.0;
            w.agent.held = Some(id.clone());
            let w = physics::settle(house, &w, config);
            (w, InteractionEvent::Pick { id })
        }
        ObjectClass::Toggleable => {
            let o = w.objects.get_mut(&id).expect("target exists");
            let next = 1 - o.toggle_state.unwrap_or(0).min(1);
            o.toggle_state = Some(next);
            (w, InteractionEvent::SetState { id, state: StateChange::Toggle(next) })
        }
        _ => (world.clone(), InteractionEvent::NoTarget),
    }
}
