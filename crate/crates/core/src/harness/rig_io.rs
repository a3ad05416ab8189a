use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::pose::CameraRig;

/// Parses `{"target": [[..4]..4], "sources": [[[..4]..4], ...]}`. Poses
/// are camera-to-world matrices in row-major nesting.
pub fn parse_rig(text: &str) -> Result<CameraRig> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_rig(path: &Path) -> Result<CameraRig> {
    parse_rig(&fs::read_to_string(path)?)
}

pub fn rig_to_json(rig: &CameraRig) -> String {
    serde_json::to_string_pretty(rig).expect("poses always serialize")
}

pub fn save_rig(rig: &CameraRig, path: &Path) -> Result<()> {
    fs::write(path, rig_to_json(rig))?;
    Ok(())
}
