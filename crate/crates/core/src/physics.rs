//! Collision detection and gravity over axis-aligned boxes.
//!
//! Walls are the room boundaries with door gaps cut out. Object yaw never
//! changes extents. Settling drops unsupported objects straight down onto the
//! highest support below: a surface whose rectangle contains the object's
//! center, the top of another object sharing its footprint, or the floor.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Point2, Rect, Vec3, LINEAR_TOLERANCE};
use crate::kinematics::StepConfig;
use crate::scene::{resolve_pose, shared_wall, House, Location, SceneError, WorldState};

/// Height tolerance when checking that a base rests on a support.
pub const SUPPORT_TOLERANCE: f64 = 1e-6;

/// First thing a box ran into.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contact {
    Object(String),
    Wall,
}

/// World box of an instance: its resolved center ± the type's half extents.
pub fn world_aabb(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    id: &str,
) -> Result<Aabb, SceneError> {
    let obj = world.object(id)?;
    let ty = house
        .object_type(&obj.type_id)
        .ok_or_else(|| SceneError::UnknownType(obj.type_id.clone()))?;
    let pose = resolve_pose(house, world, config, id)?;
    Ok(Aabb::from_center(pose.center, ty.half_extents))
}

/// Tallest wall in the house; the agent's collision box spans floor to this height.
pub fn max_wall_height(house: &House) -> f64 {
    house.rooms.iter().map(|r| r.wall_height).fold(0.0, f64::max)
}

/// The agent's collision volume: a square column of side `2 * agent_radius`.
pub fn agent_box(house: &House, agent: &crate::scene::AgentState, config: &StepConfig) -> Aabb {
    let r = config.agent_radius;
    Aabb::new(
        Vec3::new(agent.position.x - r, 0.0, agent.position.z - r),
        Vec3::new(agent.position.x + r, max_wall_height(house), agent.position.z + r),
    )
}

/// Door gap intervals (along the wall) between two rooms.
fn door_gaps(house: &House, a: &str, b: &str, wall: &crate::scene::SharedWall) -> Vec<(f64, f64)> {
    house
        .doors
        .iter()
        .filter(|d| d.connects(a, b))
        .map(|d| {
            let at = wall.along(d.anchor);
            (at - d.width / 2.0, at + d.width / 2.0)
        })
        .collect()
}

fn covered(lo: f64, hi: f64, mut gaps: Vec<(f64, f64)>) -> bool {
    gaps.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut reach = lo;
    for (s, e) in gaps {
        if s > reach + LINEAR_TOLERANCE {
            break;
        }
        reach = reach.max(e);
    }
    reach >= hi - LINEAR_TOLERANCE
}

/// True when a floor-plane rectangle leaves the house or passes through a
/// wall anywhere other than a door gap.
pub fn footprint_crosses_walls(house: &House, rect: &Rect) -> bool {
    let area = rect.area();
    if area <= 0.0 {
        return house.room_at(rect.center()).is_none();
    }
    let hit: Vec<_> =
        house.rooms.iter().filter(|r| r.floor_rect.overlap_area(rect) > 0.0).collect();
    let inside: f64 = hit.iter().map(|r| r.floor_rect.overlap_area(rect)).sum();
    if inside < area - LINEAR_TOLERANCE * area.max(1.0) {
        return true;
    }
    for (i, a) in hit.iter().enumerate() {
        for b in hit.iter().skip(i + 1) {
            let Some(wall) = shared_wall(&a.floor_rect, &b.floor_rect) else { continue };
            let (across_lo, across_hi, along_lo, along_hi) = if wall.along_z {
                (rect.min_x, rect.max_x, rect.min_z, rect.max_z)
            } else {
                (rect.min_z, rect.max_z, rect.min_x, rect.max_x)
            };
            if !(across_lo < wall.coord - LINEAR_TOLERANCE && across_hi > wall.coord + LINEAR_TOLERANCE) {
                continue;
            }
            let lo = wall.lo.max(along_lo);
            let hi = wall.hi.min(along_hi);
            if hi - lo <= LINEAR_TOLERANCE {
                continue;
            }
            if !covered(lo, hi, door_gaps(house, &a.room_id, &b.room_id, &wall)) {
                return true;
            }
        }
    }
    false
}

/// A solid wall piece: a vertical strip at constant `coord` spanning `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallSegment {
    pub along_z: bool,
    pub coord: f64,
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

/// Room boundaries minus door gaps. Shared walls appear once per room.
pub fn wall_segments(house: &House) -> Vec<WallSegment> {
    let mut out = Vec::new();
    for room in &house.rooms {
        let r = room.floor_rect;
        let edges = [
            (true, r.min_x, r.min_z, r.max_z),
            (true, r.max_x, r.min_z, r.max_z),
            (false, r.min_z, r.min_x, r.max_x),
            (false, r.max_z, r.min_x, r.max_x),
        ];
        for (along_z, coord, lo, hi) in edges {
            let mut gaps: Vec<(f64, f64)> = house
                .doors
                .iter()
                .filter(|d| d.touches(&room.room_id))
                .filter_map(|d| {
                    let (across, along) =
                        if along_z { (d.anchor.x, d.anchor.z) } else { (d.anchor.z, d.anchor.x) };
                    let on_edge = (across - coord).abs() <= crate::scene::DOOR_TOLERANCE
                        && along >= lo - crate::scene::DOOR_TOLERANCE
                        && along <= hi + crate::scene::DOOR_TOLERANCE;
                    on_edge.then(|| (along - d.width / 2.0, along + d.width / 2.0))
                })
                .collect();
            gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut cursor = lo;
            for (s, e) in gaps {
                if s > cursor {
                    out.push(WallSegment { along_z, coord, lo: cursor, hi: s.min(hi), height: room.wall_height });
                }
                cursor = cursor.max(e);
            }
            if cursor < hi {
                out.push(WallSegment { along_z, coord, lo: cursor, hi, height: room.wall_height });
            }
        }
    }
    out
}

/// Open interval of `t` during which `(a_lo, a_hi) + t*v` overlaps `[b_lo, b_hi]`.
fn overlap_window(a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64, v: f64) -> Option<(f64, f64)> {
    if v == 0.0 {
        return (a_lo < b_hi && a_hi > b_lo).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let (t0, t1) = if v > 0.0 {
        ((b_lo - a_hi) / v, (b_hi - a_lo) / v)
    } else {
        ((b_hi - a_lo) / v, (b_lo - a_hi) / v)
    };
    Some((t0, t1))
}

/// Distance a rectangle moving along `dir` can travel before its interior
/// meets the box `[x_lo, x_hi] × [z_lo, z_hi]`; `None` if it never does.
fn sweep_hit(rect: &Rect, dir: Point2, x_lo: f64, x_hi: f64, z_lo: f64, z_hi: f64) -> Option<f64> {
    let (ax0, ax1) = overlap_window(rect.min_x, rect.max_x, x_lo, x_hi, dir.x)?;
    let (az0, az1) = overlap_window(rect.min_z, rect.max_z, z_lo, z_hi, dir.z)?;
    let t0 = ax0.max(az0);
    let t1 = ax1.min(az1);
    if t0 >= t1 || t1 <= LINEAR_TOLERANCE {
        return None;
    }
    Some(t0.max(0.0))
}

/// Exact distance the agent can translate from `from` along the unit vector
/// `dir` before touching a wall or a non-held object (`f64::INFINITY` if unobstructed).
pub fn free_travel(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    from: Point2,
    dir: Point2,
) -> f64 {
    let r = config.agent_radius;
    let rect = Rect::centered(from, r, r);
    let mut best = f64::INFINITY;
    for w in wall_segments(house) {
        let hit = if w.along_z {
            sweep_hit(&rect, dir, w.coord, w.coord, w.lo, w.hi)
        } else {
            sweep_hit(&rect, dir, w.lo, w.hi, w.coord, w.coord)
        };
        if let Some(t) = hit {
            best = best.min(t);
        }
    }
    for (id, o) in &world.objects {
        if o.is_held() {
            continue;
        }
        let Ok(b) = world_aabb(house, world, config, id) else { continue };
        if let Some(t) = sweep_hit(&rect, dir, b.min.x, b.max.x, b.min.z, b.max.z) {
            best = best.min(t);
        }
    }
    best
}

/// Static check that the agent may stand at `pos`.
pub fn agent_free_at(house: &House, world: &WorldState, config: &StepConfig, pos: Point2) -> bool {
    let mut agent = world.agent.clone();
    agent.position = pos;
    let b = agent_box(house, &agent, config);
    if footprint_crosses_walls(house, &b.footprint()) {
        return false;
    }
    world.objects.iter().filter(|(_, o)| !o.is_held()).all(|(id, _)| {
        world_aabb(house, world, config, id).map(|ob| !ob.interpenetrates(&b)).unwrap_or(true)
    })
}

/// First contact of `b` with a non-held, non-ignored object (lowest id) or, failing that, a wall.
pub fn collides(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    b: &Aabb,
    ignore: &BTreeSet<String>,
) -> Option<Contact> {
    for (id, o) in &world.objects {
        if o.is_held() || ignore.contains(id) {
            continue;
        }
        if let Ok(ob) = world_aabb(house, world, config, id) {
            if ob.interpenetrates(b) {
                return Some(Contact::Object(id.clone()));
            }
        }
    }
    footprint_crosses_walls(house, &b.footprint()).then_some(Contact::Wall)
}

/// Innermost container of an object, or `None` at room level.
fn context(world: &WorldState, id: &str) -> Option<String> {
    world.objects.get(id).and_then(|o| o.container().map(str::to_string))
}

/// Heights of every support under an object whose top does not exceed `ceiling`.
fn support_candidates(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    id: &str,
    ceiling: f64,
) -> Vec<f64> {
    let Ok(b) = world_aabb(house, world, config, id) else { return Vec::new() };
    let center = b.center().xz();
    let foot = b.footprint();
    let ctx = context(world, id);
    let mut out = Vec::new();

    match &ctx {
        None => {
            out.push(0.0);
            for room in &house.rooms {
                for s in &room.surfaces {
                    if s.rect.translate(room.origin()).contains(center) && s.height <= ceiling {
                        out.push(s.height);
                    }
                }
            }
        }
        Some(c) => {
            if let (Ok(cb), Some(ty)) = (
                world_aabb(house, world, config, c),
                world.objects.get(c).and_then(|o| house.object_type(&o.type_id)),
            ) {
                let origin = cb.center().xz();
                for s in &ty.interior_surfaces {
                    let h = cb.min.y + s.height;
                    if s.rect.translate(origin).contains(center) && h <= ceiling {
                        out.push(h);
                    }
                }
            }
        }
    }

    // Object tops: any positive footprint overlap stops the fall so nothing
    // ever drops into another box.
    for (other, o) in &world.objects {
        if other == id || o.is_held() || context(world, other) != ctx {
            continue;
        }
        if world.is_inside(other, id) {
            continue;
        }
        let Ok(ob) = world_aabb(house, world, config, other) else { continue };
        if ob.max.y <= ceiling && ob.footprint().overlap_area(&foot) > 0.0 {
            out.push(ob.max.y);
        }
    }
    out
}

/// Height of the highest support at or below the object's base.
pub fn rest_height(house: &House, world: &WorldState, config: &StepConfig, id: &str) -> Option<f64> {
    let b = world_aabb(house, world, config, id).ok()?;
    support_candidates(house, world, config, id, b.min.y + SUPPORT_TOLERANCE)
        .into_iter()
        .reduce(f64::max)
}

/// True when some support sits at the object's base height (held objects count as supported).
pub fn is_supported(house: &House, world: &WorldState, config: &StepConfig, id: &str) -> bool {
    let Some(o) = world.objects.get(id) else { return false };
    if o.is_held() {
        return true;
    }
    let Ok(b) = world_aabb(house, world, config, id) else { return false };
    support_candidates(house, world, config, id, b.min.y + SUPPORT_TOLERANCE)
        .iter()
        .any(|h| (h - b.min.y).abs() <= SUPPORT_TOLERANCE)
}

/// Drops every unsupported, non-held object onto its highest support, repeating
/// until nothing moves. Only `elevation` values change.
pub fn settle(house: &House, world: &WorldState, config: &StepConfig) -> WorldState {
    let mut w = world.clone();
    let ids: Vec<String> = w.objects.keys().cloned().collect();
    loop {
        let mut moved = false;
        for id in &ids {
            let o = &w.objects[id];
            if o.is_held() {
                continue;
            }
            let Ok(b) = world_aabb(house, &w, config, id) else { continue };
            let Some(rest) = rest_height(house, &w, config, id) else { continue };
            if rest < b.min.y - 1e-12 {
                let drop = b.min.y - rest;
                let o = w.objects.get_mut(id).expect("id from key set");
                o.elevation = (o.elevation - drop).max(0.0);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    w
}

/// Frame and local coordinates an object resting at world XZ `at` (within the
/// given container context, `None` for room level) should record.
pub fn location_at(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    ctx: Option<&str>,
    at: Point2,
    base: f64,
) -> Option<(Location, f64)> {
    match ctx {
        None => {
            let room = house.room_at(at)?;
            let local = at.sub(room.origin());
            let best = room
                .all_surfaces()
                .filter(|s| s.rect.contains(local) && s.height <= base + SUPPORT_TOLERANCE)
                .max_by(|a, b| a.height.total_cmp(&b.height))?;
            Some((
                Location::OnSurface { surface: best.surface_id.clone(), x: local.x, z: local.z },
                (base - best.height).max(0.0),
            ))
        }
        Some(c) => {
            let cb = world_aabb(house, world, config, c).ok()?;
            let ty = house.object_type(&world.objects.get(c)?.type_id)?;
            let local = at.sub(cb.center().xz());
            let best = ty
                .interior_surfaces
                .iter()
                .filter(|s| s.rect.contains(local) && cb.min.y + s.height <= base + SUPPORT_TOLERANCE)
                .max_by(|a, b| a.height.total_cmp(&b.height))?;
            Some((
                Location::InContainer {
                    container: c.to_string(),
                    surface: best.surface_id.clone(),
                    x: local.x,
                    z: local.z,
                },
                (base - cb.min.y - best.height).max(0.0),
            ))
        }
    }
}
