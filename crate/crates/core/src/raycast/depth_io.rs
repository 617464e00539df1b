//! On-disk depth frames: a 16-bit grayscale PNG of millimeters, a 16-bit PNG
//! of object ids shifted by [`ID_SHIFT`] (0 = wall, 1 = floor, 2 = no hit,
//! object `k` stored as `k + 3`), and a JSON sidecar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CameraIntrinsics, DepthFrame, RaycastError};
use crate::geom::RigidPose;
use crate::scenegen::WALL_ID;

/// Depth resolution of the PNG encoding (meters per count).
pub const DEPTH_UNIT: f64 = 0.001;
/// Added to object ids in the id image so every id is non-negative.
pub const ID_SHIFT: i32 = -WALL_ID;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidecar {
    /// `[fx, fy, cx, cy]`.
    pub intrinsics: [f64; 4],
    pub width: u32,
    pub height: u32,
    /// World-from-camera, row-major 4x4.
    pub pose: Vec<f64>,
    /// Qualifying object ids, ascending.
    pub object_ids: Vec<i32>,
}

impl FrameSidecar {
    pub fn new(frame: &DepthFrame, object_ids: &[i32]) -> Self {
        FrameSidecar {
            intrinsics: frame.intrinsics.as_array(),
            width: frame.width(),
            height: frame.height(),
            pose: frame.pose.to_row_major().to_vec(),
            object_ids: object_ids.to_vec(),
        }
    }

    pub fn camera(&self) -> CameraIntrinsics {
        let [fx, fy, cx, cy] = self.intrinsics;
        CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width: self.width,
            height: self.height,
        }
    }

    pub fn pose(&self) -> Result<RigidPose, RaycastError> {
        let arr: [f64; 16] = self
            .pose
            .as_slice()
            .try_into()
            .map_err(|_| RaycastError::Format(format!("pose has {} numbers, expected 16", self.pose.len())))?;
        Ok(RigidPose::from_row_major(&arr))
    }
}

/// Meters to PNG counts: rounded, saturating at 65535 (65.535 m).
pub fn depth_to_counts(depth: &[f64]) -> Vec<u16> {
    depth
        .iter()
        .map(|&d| (d / DEPTH_UNIT).round().clamp(0.0, u16::MAX as f64) as u16)
        .collect()
}

fn write_png16(path: &Path, width: u32, height: u32, data: &[u16]) -> Result<(), RaycastError> {
    let file = BufWriter::new(File::create(path)?);
    let mut enc = png::Encoder::new(file, width, height);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Sixteen);
    let mut writer = enc.write_header()?;
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_be_bytes()).collect();
    writer.write_image_data(&bytes)?;
    writer.finish()?;
    Ok(())
}

/// Reads a 16-bit grayscale PNG; returns `(width, height, samples)`.
pub fn read_png16(path: &Path) -> Result<(u32, u32, Vec<u16>), RaycastError> {
    let dec = png::Decoder::new(BufReader::new(File::open(path)?));
    let mut reader = dec.read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| RaycastError::Format("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(RaycastError::Format(format!(
            "{}: expected 16-bit grayscale, found {:?} {:?}",
            path.display(),
            info.color_type,
            info.bit_depth
        )));
    }
    let samples = buf[..info.buffer_size()]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]))
        .collect();
    Ok((info.width, info.height, samples))
}

pub fn write_depth_png(frame: &DepthFrame, path: &Path) -> Result<(), RaycastError> {
    write_png16(path, frame.width(), frame.height(), &depth_to_counts(&frame.depth))
}

pub fn write_id_png(frame: &DepthFrame, path: &Path) -> Result<(), RaycastError> {
    let mut data = Vec::with_capacity(frame.id_map.len());
    for &id in &frame.id_map {
        let shifted = u16::try_from(id + ID_SHIFT)
            .map_err(|_| RaycastError::Format(format!("object id {id} does not fit the id image")))?;
        data.push(shifted);
    }
    write_png16(path, frame.width(), frame.height(), &data)
}

/// Paths of the three files of frame `stem` under `dir`.
pub fn frame_paths(dir: &Path, stem: &str) -> [std::path::PathBuf; 3] {
    [
        dir.join(format!("{stem}_depth.png")),
        dir.join(format!("{stem}_ids.png")),
        dir.join(format!("{stem}.json")),
    ]
}

/// Writes depth PNG, id PNG and sidecar; returns their paths.
pub fn write_frame(
    frame: &DepthFrame,
    object_ids: &[i32],
    dir: &Path,
    stem: &str,
) -> Result<[std::path::PathBuf; 3], RaycastError> {
    let paths = frame_paths(dir, stem);
    write_depth_png(frame, &paths[0])?;
    write_id_png(frame, &paths[1])?;
    let mut f = BufWriter::new(File::create(&paths[2])?);
    serde_json::to_writer_pretty(&mut f, &FrameSidecar::new(frame, object_ids))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(paths)
}

/// Loads a frame written by [`write_frame`]; depth comes back quantized to millimeters.
pub fn read_frame(dir: &Path, stem: &str) -> Result<(DepthFrame, FrameSidecar), RaycastError> {
    let paths = frame_paths(dir, stem);
    let sidecar: FrameSidecar = serde_json::from_reader(BufReader::new(File::open(&paths[2])?))?;
    let (w, h, counts) = read_png16(&paths[0])?;
    let (wi, hi, ids) = read_png16(&paths[1])?;
    if (w, h) != (sidecar.width, sidecar.height) || (wi, hi) != (w, h) {
        return Err(RaycastError::Format(format!("{stem}: image sizes disagree with sidecar")));
    }
    let frame = DepthFrame {
        depth: counts.iter().map(|&c| c as f64 * DEPTH_UNIT).collect(),
        id_map: ids.iter().map(|&i| i as i32 - ID_SHIFT).collect(),
        intrinsics: sidecar.camera(),
        pose: sidecar.pose()?,
    };
    Ok((frame, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::raycast::yaw_pitch_pose;

    fn small_frame() -> DepthFrame {
        let intr = CameraIntrinsics {
            fx: 20.0,
            fy: 20.0,
            cx: 7.5,
            cy: 5.5,
            width: 16,
            height: 12,
        };
        let n = intr.pixel_count();
        DepthFrame {
            depth: (0..n).map(|k| if k % 5 == 0 { 0.0 } else { 0.5 + k as f64 * 0.01234 }).collect(),
            id_map: (0..n)
                .map(|k| match (k % 5, (k % 7) as i32 - 3) {
                    (0, _) => -1,
                    (_, -1) => 9,
                    (_, id) => id,
                })
                .collect(),
            intrinsics: intr,
            pose: yaw_pitch_pose(Vec3::new(1.0, 2.0, 1.5), 0.7, -0.2),
        }
    }

    #[test]
    fn round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let frame = small_frame();
        write_frame(&frame, &[0, 2], dir.path(), "f0").unwrap();
        let (back, side) = read_frame(dir.path(), "f0").unwrap();
        assert_eq!(side.object_ids, vec![0, 2]);
        assert_eq!(back.id_map, frame.id_map);
        assert_eq!(back.intrinsics, frame.intrinsics);
        assert_eq!(back.pose, frame.pose);
        for (a, b) in back.depth.iter().zip(&frame.depth) {
            assert!((a - b).abs() <= 0.0005 + 1e-12);
        }
        assert!(back.is_consistent());
    }

    #[test]
    fn counts_saturate() {
        assert_eq!(depth_to_counts(&[0.0, 1.2344, 1.2346, 100.0]), vec![0, 1234, 1235, 65535]);
    }
}
