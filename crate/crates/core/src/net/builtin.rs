//! Bundled study cases.

use super::{parse_case, GridCase};

pub const TWO_AREA_TEXT: &str = include_str!("../../cases/two_area.case");
pub const IEEE39_TEXT: &str = include_str!("../../cases/ieee39.case");

/// Two-area four-machine system with a resistive brake at bus 6.
pub fn two_area() -> GridCase {
    parse_case(TWO_AREA_TEXT).expect("bundled two-area case must parse")
}

/// 39-bus system with motor loads behind step-down transformers at buses
/// 4, 7 and 18 (low-voltage buses 40, 41, 42).
pub fn ieee39() -> GridCase {
    parse_case(IEEE39_TEXT).expect("bundled 39-bus case must parse")
}

/// Resolve `builtin:<name>` case references, else read from the filesystem.
pub fn load_case(path: &str) -> Result<GridCase, super::NetError> {
    match path {
        "builtin:two_area" => Ok(two_area()),
        "builtin:ieee39" => Ok(ieee39()),
        _ => {
            let text = std::fs::read_to_string(path)?;
            parse_case(&text)
        }
    }
}
