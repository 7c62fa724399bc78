//! First-person observations: a semantic/depth ray grid plus the list of
//! objects it sees.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{Ray, Vec3};
use crate::interaction::{direction, eye_point, Caster, HitKind};
use crate::kinematics::StepConfig;
use crate::physics;
use crate::scene::{AgentState, House, ObjectClass, WorldState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObsConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, degrees; the vertical one follows from the aspect ratio.
    pub h_fov: f64,
    /// Far plane, meters.
    pub far: f64,
    /// Whether to include the raster in the observation.
    pub raster: bool,
}

impl Default for ObsConfig {
    fn default() -> Self {
        Self { width: 64, height: 48, h_fov: 60.0, far: 20.0, raster: true }
    }
}

/// Fixed raster labels; object cells use `OBJECT_BASE + index into Raster::objects`.
pub const EMPTY: u32 = 0;
pub const WALL: u32 = 1;
pub const FLOOR: u32 = 2;
pub const CEILING: u32 = 3;
pub const OBJECT_BASE: u32 = 4;

/// Row-major grid (row 0 at the top) of what each ray hit and how far along
/// the view axis it was.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub far: f64,
    /// Ids of the objects referenced by cells, sorted.
    pub objects: Vec<String>,
    pub cells: Vec<u32>,
    /// Depth along the view axis, meters; `far` where nothing was hit.
    pub depth: Vec<f64>,
}

impl Raster {
    /// Object id of a cell, if the cell shows an object.
    pub fn object_at(&self, col: usize, row: usize) -> Option<&str> {
        let c = self.cells[row * self.width + col];
        (c >= OBJECT_BASE).then(|| self.objects[(c - OBJECT_BASE) as usize].as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub id: String,
    #[serde(rename = "type")]
    pub type_id: String,
    pub class: ObjectClass,
    /// Horizontal angle of the object's center from the view direction, degrees, positive to the right.
    pub bearing: f64,
    /// Vertical angle of the center relative to the current pitch, degrees, positive up.
    pub elevation: f64,
    /// Eye-to-center distance, meters.
    pub distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub open_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub toggle_state: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub agent: AgentState,
    pub visible: Vec<VisibleObject>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raster: Option<Raster>,
}

fn wrap180(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// The view-frustum ray through the center of cell `(col, row)`.
pub fn cell_ray(agent: &AgentState, config: &StepConfig, obs: &ObsConfig, col: usize, row: usize) -> Ray {
    let forward = direction(agent.yaw, agent.pitch);
    let right = direction(agent.yaw + 90.0, 0.0);
    let up = direction(agent.yaw, agent.pitch + 90.0);
    let tan_h = (obs.h_fov.to_radians() / 2.0).tan();
    let tan_v = tan_h * obs.height as f64 / obs.width as f64;
    let u = ((col as f64 + 0.5) / obs.width as f64 * 2.0 - 1.0) * tan_h;
    let v = (1.0 - (row as f64 + 0.5) / obs.height as f64 * 2.0) * tan_v;
    let dir = forward.add(right.scale(u)).add(up.scale(v)).normalized();
    Ray { origin: eye_point(agent, config), direction: dir }
}

/// Casts the ray grid and lists the objects it hit, sorted by id.
pub fn observe(house: &House, world: &WorldState, config: &StepConfig, obs: &ObsConfig) -> Observation {
    let caster = Caster::new(house);
    let forward = direction(world.agent.yaw, world.agent.pitch);
    let n = obs.width * obs.height;
    let mut kinds: Vec<Option<HitKind>> = Vec::with_capacity(n);
    let mut depth = Vec::with_capacity(n);
    for row in 0..obs.height {
        for col in 0..obs.width {
            let ray = cell_ray(&world.agent, config, obs, col, row);
            match caster.cast(world, config, &ray, obs.far, false) {
                Some(hit) => {
                    depth.push((hit.t * ray.direction.dot(forward)).clamp(f64::MIN_POSITIVE, obs.far));
                    kinds.push(Some(hit.kind));
                }
                None => {
                    depth.push(obs.far);
                    kinds.push(None);
                }
            }
        }
    }

    let mut seen: BTreeMap<String, u32> = BTreeMap::new();
    for k in kinds.iter().flatten() {
        if let HitKind::Object { id, .. } = k {
            seen.insert(id.clone(), 0);
        }
    }
    for (i, v) in seen.values_mut().enumerate() {
        *v = OBJECT_BASE + i as u32;
    }
    let cells = kinds
        .iter()
        .map(|k| match k {
            None => EMPTY,
            Some(HitKind::Wall) => WALL,
            Some(HitKind::Floor) => FLOOR,
            Some(HitKind::Ceiling) => CEILING,
            Some(HitKind::Object { id, .. }) => seen[id],
            Some(_) => EMPTY,
        })
        .collect();

    let eye = eye_point(&world.agent, config);
    let visible = seen
        .keys()
        .filter_map(|id| {
            let o = world.objects.get(id)?;
            let ty = house.object_type(&o.type_id)?;
            let c = physics::world_aabb(house, world, config, id).ok()?.center();
            let v: Vec3 = c.sub(eye);
            let flat = v.x.hypot(v.z);
            let bearing = wrap180(v.x.atan2(v.z).to_degrees() - world.agent.yaw);
            let elevation = v.y.atan2(flat).to_degrees() - world.agent.pitch;
            Some(VisibleObject {
                id: id.clone(),
                type_id: o.type_id.clone(),
                class: ty.class,
                bearing,
                elevation,
                distance: v.length(),
                open_fraction: o.open_fraction,
                toggle_state: o.toggle_state,
            })
        })
        .collect();

    let raster = obs.raster.then(|| Raster {
        width: obs.width,
        height: obs.height,
        far: obs.far,
        objects: seen.keys().cloned().collect(),
        cells,
        depth,
    });
    Observation { agent: world.agent.clone(), visible, raster }
}
