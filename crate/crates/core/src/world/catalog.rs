//! Object categories used by the scene generator and the episode pipeline.

use super::RoomLabel;

/// Objects that characterize a room type. Corridors and hallways have none.
pub fn signature_objects(label: RoomLabel) -> &'static [&'static str] {
    match label {
        RoomLabel::Bathroom => &["toilet", "sink"],
        RoomLabel::Bedroom => &["bed"],
        RoomLabel::Kitchen => &["stove", "refrigerator"],
        RoomLabel::DiningRoom => &["dining_table"],
        RoomLabel::LivingRoom => &["sofa", "tv"],
        RoomLabel::Office => &["desk", "chair"],
        RoomLabel::Foyer => &["shelf"],
        RoomLabel::Corridor | RoomLabel::Hallway | RoomLabel::Unknown => &[],
    }
}

/// Items a robot can pick up and carry. Each appears at most once per scene.
pub const PORTABLE_CATEGORIES: [&str; 10] = [
    "bottle", "cup", "book", "box", "remote", "laptop", "vase", "bag", "keys", "umbrella",
];

/// Fixtures on which an item may be left for the partner robot.
pub const HANDOFF_FIXTURES: [&str; 2] = ["shelf", "cabinet"];

/// Fixtures on which an item may be delivered.
pub const DELIVERY_FIXTURES: [&str; 3] = ["side_table", "dining_table", "desk"];

pub fn is_portable(category: &str) -> bool {
    PORTABLE_CATEGORIES.contains(&category)
}

pub fn is_handoff_fixture(category: &str) -> bool {
    HANDOFF_FIXTURES.contains(&category)
}

pub fn is_delivery_fixture(category: &str) -> bool {
    DELIVERY_FIXTURES.contains(&category)
}
