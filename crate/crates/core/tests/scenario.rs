mod common;

use common::*;
use housesim_core::geometry::Vec3;
use housesim_core::physics;
use housesim_core::samples::sample_houses;
use housesim_core::scenario::{
    fresh_id, generate_scenario, load_house, place_object, remove_object, ScenarioEntry, ScenarioError, SurfaceRef,
};
use housesim_core::scene::{validate_world, House, Location, ObjectClass, ObjectType};

/// Reference SplitMix64: state advances by the golden gamma, output is the mixed state.
struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / 9_007_199_254_740_992.0
    }
}

fn with_plate(mut h: House) -> House {
    h.type_catalog.push(ObjectType {
        type_id: "plate".into(),
        display_name: String::new(),
        class: ObjectClass::Pickable,
        half_extents: Vec3::new(0.1, 0.01, 0.1),
        variant_tag: String::new(),
        interior_surfaces: Vec::new(),
        state_labels: None,
        open_threshold: None,
    });
    h
}

#[test]
fn generation_follows_the_documented_draw_order() {
    let h = with_plate(three_room_house());
    let floors = ["a/floor", "b/floor", "c/floor"];
    for seed in 0..50u64 {
        // Oracle: draws are surface, x, z, yaw; the only obstacle is the agent at (2, 2).
        let mut rng = SplitMix(seed);
        let expected = loop {
            let s = ((rng.unit() * 3.0) as usize).min(2);
            let room = h.room(&floors[s][..1]).unwrap();
            let (w, d) = (room.floor_rect.width(), room.floor_rect.depth());
            let x = 0.1 + rng.unit() * (w - 0.2);
            let z = 0.1 + rng.unit() * (d - 0.2);
            let yaw = 90.0 * ((rng.unit() * 4.0) as usize).min(3) as f64;
            let (wx, wz) = (room.floor_rect.min_x + x, room.floor_rect.min_z + z);
            let hits_agent = (wx - 2.0).abs() < 0.3 && (wz - 2.0).abs() < 0.3;
            if !hits_agent {
                break (floors[s], x, z, yaw);
            }
        };
        let spec = [ScenarioEntry { type_id: "plate".into(), count: 1 }];
        let w = generate_scenario(&h, &cfg(), &spec, seed).unwrap();
        let o = &w.objects["plate-1"];
        assert_eq!(
            o.location,
            Location::OnSurface { surface: expected.0.into(), x: expected.1, z: expected.2 },
            "seed {seed}"
        );
        assert_eq!(o.yaw, expected.3);
    }
}

#[test]
fn generation_is_deterministic_and_valid() {
    for h in sample_houses() {
        let pick: Vec<String> = h
            .type_catalog
            .iter()
            .filter(|t| t.class == ObjectClass::Pickable)
            .map(|t| t.type_id.clone())
            .collect();
        let spec: Vec<ScenarioEntry> = pick.iter().map(|t| ScenarioEntry { type_id: t.clone(), count: 2 }).collect();
        let a = generate_scenario(&h, &cfg(), &spec, 2024).unwrap();
        let b = generate_scenario(&h, &cfg(), &spec, 2024).unwrap();
        assert_eq!(a, b);
        let report = validate_world(&h, &a, &cfg());
        assert!(report.is_valid(), "{}: {:?}", h.house_id, report.violations);
        assert_eq!(a.objects.len(), h.initial_objects.len() + 2 * pick.len());
        assert_ne!(a, generate_scenario(&h, &cfg(), &spec, 2025).unwrap());
    }
}

#[test]
fn unknown_types_fail_before_sampling() {
    let h = two_room_house();
    let spec = [ScenarioEntry { type_id: "unicorn".into(), count: 1 }];
    assert_eq!(generate_scenario(&h, &cfg(), &spec, 1), Err(ScenarioError::UnknownType("unicorn".into())));
}

#[test]
fn impossible_requests_exhaust_the_budget() {
    let mut h = with_plate(three_room_house());
    h.type_catalog.last_mut().unwrap().half_extents = Vec3::new(5.0, 0.1, 5.0);
    let spec = [ScenarioEntry { type_id: "plate".into(), count: 1 }];
    assert_eq!(generate_scenario(&h, &cfg(), &spec, 1), Err(ScenarioError::PlacementBudgetExceeded("plate".into())));
}

#[test]
fn ids_take_the_smallest_free_number() {
    let h = two_room_house();
    let mut w = h.initial_world();
    assert_eq!(fresh_id(&w, "plate"), "plate-2");
    let p = w.objects.remove("plate-1").unwrap();
    w.objects.insert("plate-3".into(), p);
    assert_eq!(fresh_id(&w, "plate"), "plate-1");
}

#[test]
fn placing_then_removing_restores_the_world() {
    let h = two_room_house();
    let w = h.initial_world();
    let (placed, id) = place_object(&h, &w, &cfg(), "towel", 0.0, &SurfaceRef::room("b/floor"), 1.0, 4.0).unwrap();
    assert!(validate_world(&h, &placed, &cfg()).is_valid());
    assert_eq!(remove_object(&h, &placed, &cfg(), &id).unwrap(), w);
}

#[test]
fn placement_errors_are_specific() {
    let h = two_room_house();
    let w = h.initial_world();
    let r = |s: &str| SurfaceRef::room(s);
    assert!(matches!(
        place_object(&h, &w, &cfg(), "towel", 0.0, &r("b/floor"), 9.0, 1.0),
        Err(ScenarioError::OutOfBounds { .. })
    ));
    assert_eq!(
        place_object(&h, &w, &cfg(), "towel", 0.0, &r("attic"), 1.0, 1.0),
        Err(ScenarioError::UnknownSurface("attic".into()))
    );
    assert_eq!(
        place_object(&h, &w, &cfg(), "sofa", 0.0, &r("b/floor"), 1.0, 1.0),
        Err(ScenarioError::UnknownType("sofa".into()))
    );
    // On top of the agent.
    let a = w.agent.position;
    assert!(matches!(
        place_object(&h, &w, &cfg(), "towel", 0.0, &r("a/floor"), a.x, a.z),
        Err(ScenarioError::CollisionAtTarget(_))
    ));
    assert_eq!(remove_object(&h, &w, &cfg(), "ghost-1"), Err(ScenarioError::UnknownInstance("ghost-1".into())));
}

#[test]
fn removing_a_container_removes_its_contents() {
    let h = two_room_house();
    let w = h.initial_world();
    let after = remove_object(&h, &w, &cfg(), "dishwasher-1").unwrap();
    assert!(!after.objects.contains_key("dishwasher-1"));
    assert!(!after.objects.contains_key("plate-1"));
    assert!(validate_world(&h, &after, &cfg()).is_valid());
}

#[test]
fn stacked_objects_fall_when_their_support_is_removed() {
    let h = two_room_house();
    let w = h.initial_world();
    let (mut w, towel) = place_object(&h, &w, &cfg(), "towel", 0.0, &SurfaceRef::room("b/floor"), 1.0, 4.0).unwrap();
    let mut plate = w.objects["plate-1"].clone();
    plate.id = "plate-2".into();
    plate.location = Location::OnSurface { surface: "b/floor".into(), x: 1.0, z: 4.0 };
    plate.elevation = 0.04;
    w.objects.insert(plate.id.clone(), plate);
    assert!(physics::is_supported(&h, &w, &cfg(), "plate-2"));
    assert!(validate_world(&h, &w, &cfg()).is_valid());
    let after = remove_object(&h, &w, &cfg(), &towel).unwrap();
    assert_eq!(after.objects["plate-2"].elevation, 0.0);
}

#[test]
fn house_loading_reports_parse_and_validation_failures() {
    assert!(matches!(load_house(b"[1, 2"), Err(ScenarioError::MalformedFile(_))));
    let mut v: serde_json::Value = serde_json::from_slice(include_bytes!("fixtures/two_room.json")).unwrap();
    v["doors"] = serde_json::json!([]);
    match load_house(&serde_json::to_vec(&v).unwrap()) {
        Err(ScenarioError::ValidationFailed(r)) => {
            assert!(r.has(housesim_core::scene::ViolationCode::HouseDisconnected))
        }
        other => panic!("{other:?}"),
    }
}
