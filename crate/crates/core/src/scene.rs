//! Houses, rooms, doors, surfaces, object types and instances, and the
//! dynamic world snapshot, with structural validation.
//!
//! Frames: a room's surfaces and the objects resting on them use room-local
//! floor coordinates whose origin is the room's `floor_rect` minimum corner.
//! A container's interior surfaces use coordinates relative to the
//! container's base center. Every room also owns an implicit floor surface
//! named `<room_id>/floor` covering the whole room at height 0.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Point2, Rect, Vec3, LINEAR_TOLERANCE};
use crate::kinematics::StepConfig;
use crate::physics;

/// Format tag carried by house files.
pub const HOUSE_FORMAT: &str = "housesim/1";
/// Tolerance for door anchors lying on a shared wall.
pub const DOOR_TOLERANCE: f64 = 1e-6;
/// Default fraction at which an openable counts as open.
pub const DEFAULT_OPEN_THRESHOLD: f64 = 0.9;

const FLOOR_SUFFIX: &str = "/floor";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectClass {
    Static,
    Pickable,
    Openable,
    Toggleable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub surface_id: String,
    /// Owner-local rectangle.
    pub rect: Rect,
    /// Height above the owner's floor (rooms) or base (containers).
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectType {
    pub type_id: String,
    #[serde(default)]
    pub display_name: String,
    pub class: ObjectClass,
    pub half_extents: Vec3,
    /// Cosmetic texture stand-in; never read by the simulation.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub variant_tag: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interior_surfaces: Vec<Surface>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_labels: Option<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_threshold: Option<f64>,
}

impl ObjectType {
    pub fn threshold(&self) -> f64 {
        self.open_threshold.unwrap_or(DEFAULT_OPEN_THRESHOLD)
    }

    pub fn interior_surface(&self, surface_id: &str) -> Option<&Surface> {
        self.interior_surfaces.iter().find(|s| s.surface_id == surface_id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub room_id: String,
    #[serde(default)]
    pub kind: String,
    /// World XZ rectangle.
    pub floor_rect: Rect,
    pub wall_height: f64,
    #[serde(default)]
    pub surfaces: Vec<Surface>,
}

impl Room {
    pub fn origin(&self) -> Point2 {
        self.floor_rect.origin()
    }

    pub fn floor_surface_id(&self) -> String {
        format!("{}{}", self.room_id, FLOOR_SUFFIX)
    }

    /// The implicit floor surface in room-local coordinates.
    pub fn floor_surface(&self) -> Surface {
        Surface {
            surface_id: self.floor_surface_id(),
            rect: Rect::new(0.0, 0.0, self.floor_rect.width(), self.floor_rect.depth()),
            height: 0.0,
        }
    }

    /// Annotated surfaces followed by the implicit floor.
    pub fn all_surfaces(&self) -> impl Iterator<Item = Surface> + '_ {
        self.surfaces.iter().cloned().chain(std::iter::once(self.floor_surface()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Door {
    pub door_id: String,
    pub rooms: [String; 2],
    pub anchor: Point2,
    pub width: f64,
}

impl Door {
    pub fn connects(&self, a: &str, b: &str) -> bool {
        (self.rooms[0] == a && self.rooms[1] == b) || (self.rooms[0] == b && self.rooms[1] == a)
    }

    pub fn touches(&self, room: &str) -> bool {
        self.rooms[0] == room || self.rooms[1] == room
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Location {
    /// Resting on a room surface (including a room floor), room-local coordinates.
    OnSurface { surface: String, x: f64, z: f64 },
    /// Resting on an interior surface of an openable, container-local coordinates.
    InContainer { container: String, surface: String, x: f64, z: f64 },
    HeldByAgent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: String,
    #[serde(rename = "type")]
    pub type_id: String,
    pub yaw: f64,
    pub location: Location,
    /// Height of the object's base above its location surface (raised by stacking).
    #[serde(default)]
    pub elevation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toggle_state: Option<u8>,
}

impl ObjectInstance {
    pub fn is_held(&self) -> bool {
        matches!(self.location, Location::HeldByAgent)
    }

    pub fn container(&self) -> Option<&str> {
        match &self.location {
            Location::InContainer { container, .. } => Some(container),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Point2,
    pub yaw: f64,
    pub pitch: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engaged: Option<String>,
}

impl AgentState {
    pub fn at(position: Point2, yaw: f64) -> Self {
        Self { position, yaw, pitch: 0.0, held: None, engaged: None }
    }
}

/// Agent pose a house file may declare as its starting point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentStart {
    pub position: Point2,
    #[serde(default)]
    pub yaw: f64,
    #[serde(default)]
    pub pitch: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct House {
    pub format: String,
    pub house_id: String,
    pub type_catalog: Vec<ObjectType>,
    pub rooms: Vec<Room>,
    pub doors: Vec<Door>,
    #[serde(rename = "objects")]
    pub initial_objects: Vec<ObjectInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentStart>,
}

impl House {
    pub fn object_type(&self, type_id: &str) -> Option<&ObjectType> {
        self.type_catalog.iter().find(|t| t.type_id == type_id)
    }

    pub fn room(&self, room_id: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.room_id == room_id)
    }

    /// First room (in file order) whose closed floor rectangle contains `p`.
    pub fn room_at(&self, p: Point2) -> Option<&Room> {
        self.rooms.iter().find(|r| r.floor_rect.contains(p))
    }

    /// Looks up an annotated room surface or a `<room>/floor` surface.
    pub fn room_surface(&self, surface_id: &str) -> Option<(&Room, Surface)> {
        for room in &self.rooms {
            if let Some(s) = room.surfaces.iter().find(|s| s.surface_id == surface_id) {
                return Some((room, s.clone()));
            }
            if surface_id.len() == room.room_id.len() + FLOOR_SUFFIX.len()
                && surface_id.starts_with(room.room_id.as_str())
                && surface_id.ends_with(FLOOR_SUFFIX)
            {
                return Some((room, room.floor_surface()));
            }
        }
        None
    }

    pub fn narrowest_door(&self) -> Option<f64> {
        self.doors.iter().map(|d| d.width).reduce(f64::min)
    }

    /// World snapshot at the house's initial configuration.
    pub fn initial_world(&self) -> WorldState {
        let agent = match &self.agent {
            Some(a) => AgentState {
                position: a.position,
                yaw: crate::geometry::normalize_degrees(a.yaw),
                pitch: a.pitch.clamp(-90.0, 90.0),
                held: None,
                engaged: None,
            },
            None => AgentState::at(
                self.rooms.first().map(|r| r.floor_rect.center()).unwrap_or_default(),
                0.0,
            ),
        };
        let mut objects = BTreeMap::new();
        for o in &self.initial_objects {
            objects.insert(o.id.clone(), o.clone());
        }
        let held = objects.values().find(|o| o.is_held()).map(|o| o.id.clone());
        WorldState { house_id: self.house_id.clone(), agent: AgentState { held, ..agent }, objects }
    }
}

/// Dynamic state: the agent pose plus every object's placement and interaction state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub house_id: String,
    pub agent: AgentState,
    #[serde(with = "object_list")]
    pub objects: BTreeMap<String, ObjectInstance>,
}

impl WorldState {
    pub fn object(&self, id: &str) -> Result<&ObjectInstance, SceneError> {
        self.objects.get(id).ok_or_else(|| SceneError::UnknownInstance(id.to_string()))
    }

    /// Containers enclosing `id`, innermost first.
    pub fn container_chain(&self, id: &str) -> Result<Vec<String>, SceneError> {
        let mut chain = Vec::new();
        let mut current = self.object(id)?;
        while let Some(c) = current.container() {
            if c == id || chain.iter().any(|x: &String| x == c) || chain.len() > self.objects.len() {
                return Err(SceneError::CyclicLocation(id.to_string()));
            }
            chain.push(c.to_string());
            current = self.object(c)?;
        }
        Ok(chain)
    }

    /// True when `ancestor` appears in the container chain of `id`.
    pub fn is_inside(&self, id: &str, ancestor: &str) -> bool {
        self.container_chain(id).map(|c| c.iter().any(|x| x == ancestor)).unwrap_or(false)
    }
}

/// Serializes the object map as a list sorted by id.
mod object_list {
    use super::ObjectInstance;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<String, ObjectInstance>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let list: Vec<&ObjectInstance> = map.values().collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<String, ObjectInstance>, D::Error> {
        let list = Vec::<ObjectInstance>::deserialize(d)?;
        let mut map = BTreeMap::new();
        for o in list {
            if map.contains_key(&o.id) {
                return Err(serde::de::Error::custom(format!("duplicate object id {}", o.id)));
            }
            map.insert(o.id.clone(), o);
        }
        Ok(map)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("location chain of `{0}` does not terminate")]
    CyclicLocation(String),
    #[error("unknown object type `{0}`")]
    UnknownType(String),
    #[error("unknown surface `{0}`")]
    UnknownSurface(String),
}

/// World-space placement of an instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub center: Vec3,
    pub yaw: f64,
}

/// Frame an object's location coordinates are expressed in, resolved to world space.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceFrame {
    /// World XZ of the frame origin.
    pub origin: Point2,
    /// World height of the surface.
    pub height: f64,
    /// Surface rectangle in frame coordinates.
    pub rect: Rect,
}

impl SurfaceFrame {
    pub fn world_rect(&self) -> Rect {
        self.rect.translate(self.origin)
    }
}

/// World-space frame of the surface an object's location refers to.
pub fn location_frame(
    house: &House,
    world: &WorldState,
    location: &Location,
    config: &StepConfig,
    depth: usize,
) -> Result<SurfaceFrame, SceneError> {
    match location {
        Location::OnSurface { surface, .. } => {
            let (room, s) = house
                .room_surface(surface)
                .ok_or_else(|| SceneError::UnknownSurface(surface.clone()))?;
            Ok(SurfaceFrame { origin: room.origin(), height: s.height, rect: s.rect })
        }
        Location::InContainer { container, surface, .. } => {
            if depth > world.objects.len() {
                return Err(SceneError::CyclicLocation(container.clone()));
            }
            let c = world.object(container)?;
            let ty = house
                .object_type(&c.type_id)
                .ok_or_else(|| SceneError::UnknownType(c.type_id.clone()))?;
            let s = ty
                .interior_surface(surface)
                .ok_or_else(|| SceneError::UnknownSurface(surface.clone()))?;
            let pose = resolve_depth(house, world, config, container, depth + 1)?;
            let base = pose.center.y - ty.half_extents.y;
            Ok(SurfaceFrame { origin: pose.center.xz(), height: base + s.height, rect: s.rect })
        }
        Location::HeldByAgent => Err(SceneError::UnknownSurface("held".into())),
    }
}

/// Resolves an instance's world center by walking its location chain.
pub fn resolve_pose(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    id: &str,
) -> Result<Pose, SceneError> {
    resolve_depth(house, world, config, id, 0)
}

fn resolve_depth(
    house: &House,
    world: &WorldState,
    config: &StepConfig,
    id: &str,
    depth: usize,
) -> Result<Pose, SceneError> {
    if depth > world.objects.len() {
        return Err(SceneError::CyclicLocation(id.to_string()));
    }
    let obj = world.object(id)?;
    let ty = house
        .object_type(&obj.type_id)
        .ok_or_else(|| SceneError::UnknownType(obj.type_id.clone()))?;
    let center = match &obj.location {
        Location::HeldByAgent => carry_point(&world.agent, config),
        Location::OnSurface { x, z, .. } | Location::InContainer { x, z, .. } => {
            let frame = location_frame(house, world, &obj.location, config, depth)?;
            Vec3::new(
                frame.origin.x + x,
                frame.height + obj.elevation + ty.half_extents.y,
                frame.origin.z + z,
            )
        }
    };
    Ok(Pose { center, yaw: obj.yaw })
}

/// Where a held object's center sits: the carry offset rotated by the agent's
/// yaw (x = right, y = up from the floor, z = forward).
pub fn carry_point(agent: &AgentState, config: &StepConfig) -> Vec3 {
    let fwd = crate::geometry::heading(agent.yaw);
    let right = crate::geometry::heading(agent.yaw + 90.0);
    let o = config.carry_offset;
    Vec3::new(
        agent.position.x + right.x * o.x + fwd.x * o.z,
        o.y,
        agent.position.z + right.z * o.x + fwd.z * o.z,
    )
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    FormatVersion,
    EmptyHouse,
    DuplicateId,
    RoomDegenerate,
    RoomOverlap,
    SurfaceDegenerate,
    SurfaceOutsideRoom,
    DoorUnknownRoom,
    DoorSameRoom,
    DoorOffWall,
    DoorWidth,
    HouseDisconnected,
    TypeExtents,
    TypeClassFields,
    InteriorSurfaceOutside,
    UnknownType,
    UnknownSurface,
    UnknownContainer,
    ContainerNotOpenable,
    CyclicLocation,
    CoordsOutsideSurface,
    ClassState,
    AngleRange,
    NegativeElevation,
    MultipleHeld,
    HeldMismatch,
    ObjectOverlap,
    ObjectOutsideWalls,
    Unsupported,
    AgentOutside,
    AgentBlocked,
    EngagedInvalid,
    DoorTooNarrow,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    /// Room the violation is attributed to; empty for house-level problems.
    pub room: String,
    pub code: ViolationCode,
    /// Id of the offending element.
    pub subject: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, room: &str, code: ViolationCode, subject: &str, detail: impl Into<String>) {
        self.violations.push(Violation {
            room: room.to_string(),
            code,
            subject: subject.to_string(),
            detail: detail.into(),
        });
    }

    fn finish(mut self) -> Self {
        self.violations.sort();
        self.violations.dedup();
        self
    }
}

/// A wall segment two rooms share.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharedWall {
    /// True when the wall runs along Z at constant `coord` X.
    pub along_z: bool,
    pub coord: f64,
    pub lo: f64,
    pub hi: f64,
}

impl SharedWall {
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let (across, along) = if self.along_z { (p.x, p.z) } else { (p.z, p.x) };
        (across - self.coord).abs() <= tol && along >= self.lo - tol && along <= self.hi + tol
    }

    pub fn along(&self, p: Point2) -> f64 {
        if self.along_z {
            p.z
        } else {
            p.x
        }
    }
}

/// Positive-length boundary segment shared by two room rectangles, if any.
pub fn shared_wall(a: &Rect, b: &Rect) -> Option<SharedWall> {
    let tol = DOOR_TOLERANCE;
    let x_contact = if (a.max_x - b.min_x).abs() <= tol {
        Some(a.max_x)
    } else if (b.max_x - a.min_x).abs() <= tol {
        Some(a.min_x)
    } else {
        None
    };
    if let Some(x) = x_contact {
        let lo = a.min_z.max(b.min_z);
        let hi = a.max_z.min(b.max_z);
        if hi - lo > tol {
            return Some(SharedWall { along_z: true, coord: x, lo, hi });
        }
    }
    let z_contact = if (a.max_z - b.min_z).abs() <= tol {
        Some(a.max_z)
    } else if (b.max_z - a.min_z).abs() <= tol {
        Some(a.min_z)
    } else {
        None
    };
    if let Some(z) = z_contact {
        let lo = a.min_x.max(b.min_x);
        let hi = a.max_x.min(b.max_x);
        if hi - lo > tol {
            return Some(SharedWall { along_z: false, coord: z, lo, hi });
        }
    }
    None
}

/// Checks every house, room, door, surface and type invariant, plus the
/// initial object configuration.
pub fn validate_house(house: &House) -> ValidationReport {
    let mut report = ValidationReport::default();
    structural_checks(house, &mut report);
    if report.is_valid() {
        let world = house.initial_world();
        let config = StepConfig::default();
        object_checks(house, &world, &config, &mut report);
    }
    report.finish()
}

fn structural_checks(house: &House, report: &mut ValidationReport) {
    use ViolationCode::*;
    if house.format != HOUSE_FORMAT {
        report.push("", FormatVersion, &house.house_id, format!("expected {HOUSE_FORMAT}"));
    }
    if house.rooms.is_empty() {
        report.push("", EmptyHouse, &house.house_id, "house has no rooms");
        return;
    }

    let mut seen = BTreeSet::new();
    for room in &house.rooms {
        if !seen.insert(room.room_id.clone()) {
            report.push(&room.room_id, DuplicateId, &room.room_id, "room id");
        }
    }
    let mut surface_ids = BTreeSet::new();
    for room in &house.rooms {
        for s in &room.surfaces {
            if !surface_ids.insert(s.surface_id.clone()) || s.surface_id.ends_with(FLOOR_SUFFIX) {
                report.push(&room.room_id, DuplicateId, &s.surface_id, "surface id");
            }
        }
    }
    let mut door_ids = BTreeSet::new();
    for d in &house.doors {
        if !door_ids.insert(d.door_id.clone()) {
            report.push("", DuplicateId, &d.door_id, "door id");
        }
    }
    let mut type_ids = BTreeSet::new();
    for t in &house.type_catalog {
        if !type_ids.insert(t.type_id.clone()) {
            report.push("", DuplicateId, &t.type_id, "type id");
        }
    }
    let mut object_ids = BTreeSet::new();
    for o in &house.initial_objects {
        if !object_ids.insert(o.id.clone()) {
            report.push("", DuplicateId, &o.id, "instance id");
        }
    }

    for room in &house.rooms {
        let r = &room.floor_rect;
        if !(r.width() > 0.0 && r.depth() > 0.0) || !(room.wall_height > 0.0) {
            report.push(&room.room_id, RoomDegenerate, &room.room_id, "floor area and wall height must be positive");
        }
        let local = Rect::new(0.0, 0.0, r.width(), r.depth());
        for s in &room.surfaces {
            if !(s.rect.area() > 0.0 && s.rect.width() > 0.0) || !(s.height >= 0.0) {
                report.push(&room.room_id, SurfaceDegenerate, &s.surface_id, "surface needs positive area and height >= 0");
            }
            if !local.contains_rect(&s.rect) {
                report.push(&room.room_id, SurfaceOutsideRoom, &s.surface_id, "surface rect leaves the floor");
            }
        }
    }

    for (i, a) in house.rooms.iter().enumerate() {
        for b in house.rooms.iter().skip(i + 1) {
            if a.floor_rect.overlap_area(&b.floor_rect) > LINEAR_TOLERANCE {
                let (first, second) = if a.room_id <= b.room_id { (a, b) } else { (b, a) };
                report.push(
                    &first.room_id,
                    RoomOverlap,
                    &format!("{}|{}", first.room_id, second.room_id),
                    "floor rectangles overlap",
                );
            }
        }
    }

    for d in &house.doors {
        let ra = house.room(&d.rooms[0]);
        let rb = house.room(&d.rooms[1]);
        let room_label = d.rooms[0].as_str();
        if d.rooms[0] == d.rooms[1] {
            report.push(room_label, DoorSameRoom, &d.door_id, "door connects a room to itself");
            continue;
        }
        let (Some(ra), Some(rb)) = (ra, rb) else {
            report.push(room_label, DoorUnknownRoom, &d.door_id, "door names an unknown room");
            continue;
        };
        let room_label = if ra.room_id <= rb.room_id { &ra.room_id } else { &rb.room_id };
        if !(d.width > 0.0) {
            report.push(room_label, DoorWidth, &d.door_id, "door width must be positive");
            continue;
        }
        match shared_wall(&ra.floor_rect, &rb.floor_rect) {
            Some(wall) if wall.contains(d.anchor, DOOR_TOLERANCE) => {
                let at = wall.along(d.anchor);
                if at - d.width / 2.0 < wall.lo - DOOR_TOLERANCE
                    || at + d.width / 2.0 > wall.hi + DOOR_TOLERANCE
                {
                    report.push(room_label, DoorWidth, &d.door_id, "door gap extends past the shared wall");
                }
            }
            _ => report.push(room_label, DoorOffWall, &d.door_id, "anchor is not on a wall shared by both rooms"),
        }
    }

    // Door graph connectivity.
    let mut reached = BTreeSet::new();
    let mut queue = VecDeque::new();
    queue.push_back(house.rooms[0].room_id.as_str());
    reached.insert(house.rooms[0].room_id.as_str());
    while let Some(r) = queue.pop_front() {
        for d in house.doors.iter().filter(|d| d.touches(r)) {
            let other = if d.rooms[0] == r { &d.rooms[1] } else { &d.rooms[0] };
            if house.room(other).is_some() && reached.insert(other.as_str()) {
                queue.push_back(other.as_str());
            }
        }
    }
    for room in &house.rooms {
        if !reached.contains(room.room_id.as_str()) {
            report.push(&room.room_id, HouseDisconnected, &room.room_id, "room unreachable through doors");
        }
    }

    for t in &house.type_catalog {
        let h = t.half_extents;
        if !(h.x > 0.0 && h.y > 0.0 && h.z > 0.0) {
            report.push("", TypeExtents, &t.type_id, "half extents must be positive");
        }
        let openable = t.class == ObjectClass::Openable;
        if !openable && (!t.interior_surfaces.is_empty() || t.open_threshold.is_some()) {
            report.push("", TypeClassFields, &t.type_id, "only openables declare interiors or thresholds");
        }
        if (t.class == ObjectClass::Toggleable) != t.state_labels.is_some() {
            report.push("", TypeClassFields, &t.type_id, "state labels belong exactly to toggleables");
        }
        if let Some(th) = t.open_threshold {
            if !(0.0..=1.0).contains(&th) {
                report.push("", TypeClassFields, &t.type_id, "open threshold outside [0, 1]");
            }
        }
        let footprint = Rect::new(-h.x, -h.z, h.x, h.z);
        let mut interior_ids = BTreeSet::new();
        for s in &t.interior_surfaces {
            if !interior_ids.insert(s.surface_id.as_str()) {
                report.push("", DuplicateId, &format!("{}/{}", t.type_id, s.surface_id), "interior surface id");
            }
            if !(s.rect.area() > 0.0 && s.rect.width() > 0.0) || !(s.height >= 0.0) {
                report.push("", SurfaceDegenerate, &format!("{}/{}", t.type_id, s.surface_id), "interior surface degenerate");
            }
            if !footprint.contains_rect(&s.rect) || s.height > 2.0 * h.y {
                report.push("", InteriorSurfaceOutside, &format!("{}/{}", t.type_id, s.surface_id), "interior surface outside the container box");
            }
        }
    }
}

/// Checks a world snapshot against its house: object invariants, held and
/// engaged consistency, interpenetration, support, and agent placement.
pub fn validate_world(house: &House, world: &WorldState, config: &StepConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    if world.house_id != house.house_id {
        report.push("", ViolationCode::UnknownType, &world.house_id, "world belongs to a different house");
    }
    object_checks(house, world, config, &mut report);
    report.finish()
}

fn room_of(house: &House, world: &WorldState, config: &StepConfig, id: &str) -> String {
    resolve_pose(house, world, config, id)
        .ok()
        .and_then(|p| house.room_at(p.center.xz()))
        .map(|r| r.room_id.clone())
        .unwrap_or_default()
}

fn object_checks(house: &House, world: &WorldState, config: &StepConfig, report: &mut ValidationReport) {
    use ViolationCode::*;
    let mut broken = BTreeSet::new();
    for (key, o) in &world.objects {
        if key != &o.id {
            report.push("", DuplicateId, key, "map key differs from instance id");
        }
        let Some(ty) = house.object_type(&o.type_id) else {
            report.push("", UnknownType, &o.id, format!("type `{}`", o.type_id));
            broken.insert(o.id.clone());
            continue;
        };
        if !(0.0..360.0).contains(&o.yaw) {
            report.push("", AngleRange, &o.id, "yaw outside [0, 360)");
        }
        if !(o.elevation >= 0.0) {
            report.push("", NegativeElevation, &o.id, "elevation must be >= 0");
        }
        match ty.class {
            ObjectClass::Openable => match o.open_fraction {
                Some(f) if (0.0..=1.0).contains(&f) => {}
                _ => report.push("", ClassState, &o.id, "openable needs open_fraction in [0, 1]"),
            },
            _ if o.open_fraction.is_some() => {
                report.push("", ClassState, &o.id, "open_fraction on a non-openable")
            }
            _ => {}
        }
        match ty.class {
            ObjectClass::Toggleable => match o.toggle_state {
                Some(0 | 1) => {}
                _ => report.push("", ClassState, &o.id, "toggleable needs toggle_state 0 or 1"),
            },
            _ if o.toggle_state.is_some() => {
                report.push("", ClassState, &o.id, "toggle_state on a non-toggleable")
            }
            _ => {}
        }
        match &o.location {
            Location::OnSurface { surface, x, z } => match house.room_surface(surface) {
                Some((room, s)) => {
                    if !s.rect.contains(Point2::new(*x, *z)) {
                        report.push(&room.room_id, CoordsOutsideSurface, &o.id, format!("outside `{surface}`"));
                    }
                }
                None => {
                    report.push("", UnknownSurface, &o.id, format!("surface `{surface}`"));
                    broken.insert(o.id.clone());
                }
            },
            Location::InContainer { container, surface, x, z } => {
                match world.objects.get(container) {
                    None => {
                        report.push("", UnknownContainer, &o.id, format!("container `{container}`"));
                        broken.insert(o.id.clone());
                    }
                    Some(c) => match house.object_type(&c.type_id) {
                        Some(ct) if ct.class == ObjectClass::Openable => match ct.interior_surface(surface) {
                            Some(s) => {
                                if !s.rect.contains(Point2::new(*x, *z)) {
                                    report.push("", CoordsOutsideSurface, &o.id, format!("outside `{surface}`"));
                                }
                            }
                            None => {
                                report.push("", UnknownSurface, &o.id, format!("interior surface `{surface}`"));
                                broken.insert(o.id.clone());
                            }
                        },
                        _ => {
                            report.push("", ContainerNotOpenable, &o.id, format!("`{container}` is not openable"));
                            broken.insert(o.id.clone());
                        }
                    },
                }
            }
            Location::HeldByAgent => {}
        }
    }
    for id in world.objects.keys() {
        if let Err(SceneError::CyclicLocation(_)) = world.container_chain(id) {
            report.push("", CyclicLocation, id, "container chain loops");
            broken.insert(id.clone());
        }
    }

    let held: Vec<&ObjectInstance> = world.objects.values().filter(|o| o.is_held()).collect();
    if held.len() > 1 {
        report.push("", MultipleHeld, &held[1].id, "more than one object held");
    }
    match (&world.agent.held, held.first()) {
        (None, None) => {}
        (Some(a), Some(o)) if *a == o.id => {}
        (a, o) => report.push(
            "",
            HeldMismatch,
            a.as_deref().or(o.map(|o| o.id.as_str())).unwrap_or(""),
            "agent.held and HeldByAgent disagree",
        ),
    }
    if !(0.0..360.0).contains(&world.agent.yaw) || !(-90.0..=90.0).contains(&world.agent.pitch) {
        report.push("", AngleRange, "agent", "agent yaw or pitch outside range");
    }
    if let Some(narrowest) = house.narrowest_door() {
        if 2.0 * config.agent_radius >= narrowest {
            report.push("", DoorTooNarrow, "agent", "agent diameter does not fit the narrowest door");
        }
    }

    if !broken.is_empty() || !report.violations.is_empty() && report.violations.iter().any(|v| v.code == CyclicLocation) {
        return;
    }

    // Geometric checks need every pose to resolve.
    let mut boxes: Vec<(String, Aabb)> = Vec::new();
    for id in world.objects.keys() {
        match physics::world_aabb(house, world, config, id) {
            Ok(b) => boxes.push((id.clone(), b)),
            Err(e) => report.push("", UnknownSurface, id, e.to_string()),
        }
    }
    let settled: Vec<&(String, Aabb)> =
        boxes.iter().filter(|(id, _)| !world.objects[id].is_held()).collect();
    for (i, (a, ba)) in settled.iter().enumerate() {
        for (b, bb) in settled.iter().skip(i + 1) {
            if world.is_inside(a, b) || world.is_inside(b, a) {
                continue;
            }
            if ba.interpenetrates(bb) {
                let room = room_of(house, world, config, a);
                report.push(&room, ObjectOverlap, &format!("{a}|{b}"), "objects interpenetrate");
            }
        }
        if physics::footprint_crosses_walls(house, &ba.footprint()) {
            let room = room_of(house, world, config, a);
            report.push(&room, ObjectOutsideWalls, a, "object crosses a wall");
        }
        if !physics::is_supported(house, world, config, a) {
            let room = room_of(house, world, config, a);
            report.push(&room, Unsupported, a, "object base hangs in free space");
        }
    }

    let agent_box = physics::agent_box(house, &world.agent, config);
    let agent_room = house.room_at(world.agent.position).map(|r| r.room_id.clone());
    match agent_room {
        None => report.push("", AgentOutside, "agent", "agent is outside every room"),
        Some(room) => {
            if physics::footprint_crosses_walls(house, &agent_box.footprint()) {
                report.push(&room, AgentBlocked, "agent", "agent box crosses a wall");
            }
            for (id, b) in &settled {
                if b.interpenetrates(&agent_box) {
                    report.push(&room, AgentBlocked, id, "agent box overlaps an object");
                }
            }
        }
    }

    if let Some(e) = &world.agent.engaged {
        let ok = world.objects.get(e).is_some_and(|o| {
            house.object_type(&o.type_id).is_some_and(|t| t.class == ObjectClass::Openable)
        }) && physics::world_aabb(house, world, config, e).is_ok_and(|b| {
            b.distance_to(crate::interaction::eye_point(&world.agent, config))
                <= config.max_interact_range + 1e-9
        });
        if !ok {
            report.push("", EngagedInvalid, e, "engaged object must be an openable within reach");
        }
    }
}
