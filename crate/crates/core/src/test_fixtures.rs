//! Small hand-built houses for unit tests.

use serde_json::json;

use crate::scene::{House, WorldState};

fn house(value: serde_json::Value) -> House {
    serde_json::from_value(value).expect("fixture parses")
}

fn types() -> serde_json::Value {
    json!([
        {"type_id": "plate", "class": "pickable", "half_extents": {"x": 0.1, "y": 0.01, "z": 0.1}},
        {"type_id": "towel", "class": "pickable", "half_extents": {"x": 0.2, "y": 0.02, "z": 0.15}},
        {"type_id": "dishwasher", "class": "openable", "half_extents": {"x": 0.3, "y": 0.425, "z": 0.3},
         "interior_surfaces": [
            {"surface_id": "rack", "rect": {"min_x": -0.25, "min_z": -0.25, "max_x": 0.25, "max_z": 0.25}, "height": 0.45}
         ],
         "open_threshold": 0.9},
        {"type_id": "tv", "class": "toggleable", "half_extents": {"x": 0.4, "y": 0.25, "z": 0.05},
         "state_labels": ["off", "on"]},
        {"type_id": "table", "class": "static", "half_extents": {"x": 0.5, "y": 0.4, "z": 0.3}},
        {"type_id": "counter", "class": "static", "half_extents": {"x": 0.3, "y": 0.45, "z": 0.6}}
    ])
}

/// Rooms `a` = [0,4]x[0,5] and `b` = [4,8]x[0,5] joined by a 1 m door at (4, 1).
pub fn two_room_house() -> House {
    house(json!({
        "format": "housesim/1",
        "house_id": "two-room",
        "type_catalog": types(),
        "rooms": [
            {"room_id": "a", "kind": "kitchen",
             "floor_rect": {"min_x": 0.0, "min_z": 0.0, "max_x": 4.0, "max_z": 5.0}, "wall_height": 2.5,
             "surfaces": [
                {"surface_id": "a-counter-top", "rect": {"min_x": 0.0, "min_z": 2.9, "max_x": 0.6, "max_z": 4.1}, "height": 0.9}
             ]},
            {"room_id": "b", "kind": "living",
             "floor_rect": {"min_x": 4.0, "min_z": 0.0, "max_x": 8.0, "max_z": 5.0}, "wall_height": 2.5,
             "surfaces": [
                {"surface_id": "b-table-top", "rect": {"min_x": 1.5, "min_z": 3.7, "max_x": 2.5, "max_z": 4.3}, "height": 0.8}
             ]}
        ],
        "doors": [
            {"door_id": "a-b", "rooms": ["a", "b"], "anchor": {"x": 4.0, "z": 1.0}, "width": 1.0}
        ],
        "objects": [
            {"id": "counter-1", "type": "counter", "yaw": 0.0,
             "location": {"kind": "on-surface", "surface": "a/floor", "x": 0.3, "z": 3.5}},
            {"id": "towel-1", "type": "towel", "yaw": 0.0,
             "location": {"kind": "on-surface", "surface": "a-counter-top", "x": 0.3, "z": 3.5}},
            {"id": "dishwasher-1", "type": "dishwasher", "yaw": 0.0, "open_fraction": 0.0,
             "location": {"kind": "on-surface", "surface": "a/floor", "x": 2.0, "z": 2.0}},
            {"id": "plate-1", "type": "plate", "yaw": 0.0,
             "location": {"kind": "in-container", "container": "dishwasher-1", "surface": "rack", "x": 0.05, "z": 0.1}},
            {"id": "table-1", "type": "table", "yaw": 0.0,
             "location": {"kind": "on-surface", "surface": "b/floor", "x": 2.0, "z": 4.0}},
            {"id": "tv-1", "type": "tv", "yaw": 180.0, "toggle_state": 0,
             "location": {"kind": "on-surface", "surface": "b-table-top", "x": 2.0, "z": 4.0}}
        ],
        "agent": {"position": {"x": 1.0, "z": 1.0}, "yaw": 0.0}
    }))
}

pub fn aim_at_dishwasher(w: &mut WorldState) {
    w.agent.position = crate::geometry::Point2::new(2.0, 1.45);
    w.agent.yaw = 0.0;
    w.agent.pitch = -60.0;
}

pub fn aim_at_towel(w: &mut WorldState) {
    w.agent.position = crate::geometry::Point2::new(1.0, 3.5);
    w.agent.yaw = 270.0;
    w.agent.pitch = -45.0;
}

pub fn aim_at_tv(w: &mut WorldState) {
    w.agent.position = crate::geometry::Point2::new(6.0, 3.0);
    w.agent.yaw = 0.0;
    w.agent.pitch = -30.0;
}

fn single_room(id: &str, objects: serde_json::Value, extra_types: serde_json::Value) -> House {
    let mut catalog = types();
    catalog.as_array_mut().unwrap().extend(extra_types.as_array().unwrap().iter().cloned());
    house(json!({
        "format": "housesim/1",
        "house_id": id,
        "type_catalog": catalog,
        "rooms": [
            {"room_id": "r", "floor_rect": {"min_x": 0.0, "min_z": 0.0, "max_x": 5.0, "max_z": 5.0}, "wall_height": 2.5}
        ],
        "doors": [],
        "objects": objects,
        "agent": {"position": {"x": 3.0, "z": 3.0}}
    }))
}

/// One 5x5 room, no objects.
pub fn empty_room_house() -> House {
    single_room("empty", json!([]), json!([]))
}

/// One 5x5 room with a unit cube centered at (1, 0.5, 1).
pub fn cube_room_house() -> House {
    single_room(
        "cube",
        json!([
            {"id": "cube-1", "type": "cube", "yaw": 0.0,
             "location": {"kind": "on-surface", "surface": "r/floor", "x": 1.0, "z": 1.0}}
        ]),
        json!([{"type_id": "cube", "class": "static", "half_extents": {"x": 0.5, "y": 0.5, "z": 0.5}}]),
    )
}

/// Block `a` on the floor (top 0.4 m) and block `b` resting on it with 60% overlap.
pub fn stack_house() -> House {
    single_room(
        "stack",
        json!([
            {"id": "block-a", "type": "block", "yaw": 0.0,
             "location": {"kind": "on-surface", "surface": "r/floor", "x": 2.0, "z": 2.0}},
            {"id": "block-b", "type": "block", "yaw": 0.0, "elevation": 0.4,
             "location": {"kind": "on-surface", "surface": "r/floor", "x": 2.4, "z": 2.0}}
        ]),
        json!([{"type_id": "block", "class": "pickable", "half_extents": {"x": 0.5, "y": 0.2, "z": 0.5}}]),
    )
}

/// Two boxes straight ahead of the agent's eye, near faces 0.8 m and 1.2 m away.
pub fn target_range_house() -> House {
    let mut h = single_room(
        "range",
        json!([
            {"id": "box-far", "type": "box", "yaw": 0.0, "elevation": 1.4,
             "location": {"kind": "on-surface", "surface": "r/floor", "x": 2.5, "z": 2.4}},
            {"id": "box-near", "type": "box", "yaw": 0.0, "elevation": 1.4,
             "location": {"kind": "on-surface", "surface": "r/floor", "x": 2.5, "z": 2.0}}
        ]),
        json!([{"type_id": "box", "class": "pickable", "half_extents": {"x": 0.2, "y": 0.2, "z": 0.2}}]),
    );
    h.agent = Some(crate::scene::AgentStart {
        position: crate::geometry::Point2::new(2.5, 1.0),
        yaw: 0.0,
        pitch: 0.0,
    });
    h
}

/// A single room whose floor origin is (3, 4), with a 0.8 m table-top surface and a cup on it.
pub fn offset_room_house() -> House {
    house(json!({
        "format": "housesim/1",
        "house_id": "offset",
        "type_catalog": [
            {"type_id": "cup", "class": "pickable", "half_extents": {"x": 0.05, "y": 0.05, "z": 0.05}}
        ],
        "rooms": [
            {"room_id": "k", "floor_rect": {"min_x": 3.0, "min_z": 4.0, "max_x": 8.0, "max_z": 9.0}, "wall_height": 2.5,
             "surfaces": [
                {"surface_id": "table-top", "rect": {"min_x": 0.0, "min_z": 0.0, "max_x": 0.5, "max_z": 0.5}, "height": 0.8}
             ]}
        ],
        "doors": [],
        "objects": [
            {"id": "cup-1", "type": "cup", "yaw": 0.0,
             "location": {"kind": "on-surface", "surface": "table-top", "x": 0.1, "z": 0.2}}
        ],
        "agent": {"position": {"x": 6.0, "z": 7.0}}
    }))
}
