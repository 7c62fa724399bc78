//! Sample houses bundled with the library.

use crate::scenario::{load_house, ScenarioError};
use crate::scene::House;

/// `(house_id, file contents)` of every bundled house.
pub const SAMPLE_FILES: &[(&str, &str)] = &[
    ("apartment", include_str!("../houses/apartment.json")),
    ("cottage", include_str!("../houses/cottage.json")),
];

/// Loads a bundled house by id.
pub fn sample_house(house_id: &str) -> Option<Result<House, ScenarioError>> {
    SAMPLE_FILES.iter().find(|(id, _)| *id == house_id).map(|(_, text)| load_house(text.as_bytes()))
}

/// Every bundled house, parsed and validated.
pub fn sample_houses() -> Vec<House> {
    SAMPLE_FILES
        .iter()
        .map(|(id, text)| load_house(text.as_bytes()).unwrap_or_else(|e| panic!("sample house `{id}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::StepConfig;
    use crate::scene::validate_world;

    #[test]
    fn samples_load_and_start_valid() {
        for h in sample_houses() {
            assert!(h.rooms.len() >= 4, "{} has {} rooms", h.house_id, h.rooms.len());
            let r = validate_world(&h, &h.initial_world(), &StepConfig::default());
            assert!(r.is_valid(), "{}: {:#?}", h.house_id, r);
        }
    }

    #[test]
    fn ids_match_file_contents() {
        for (id, _) in SAMPLE_FILES {
            assert_eq!(&sample_house(id).unwrap().unwrap().house_id, id);
        }
        assert!(sample_house("castle").is_none());
    }
}
