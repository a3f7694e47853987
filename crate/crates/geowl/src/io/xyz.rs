//! Labeled-XYZ point cloud files.
//!
//! Line 1: point count. Line 2: free-form comment. Then one record per
//! point: `label x y z` with an integer label and three reals. Coordinates
//! are written with 17 significant digits, so write-then-parse is lossless.

use crate::geometry::{build_point_cloud, PointCloud};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum XyzError {
    #[error("line 1: missing or non-integer point count")]
    BadCount,
    #[error("line 1: count {expected} does not match {found} records")]
    CountMismatch { expected: usize, found: usize },
    #[error("line {line}: expected 'label x y z', found {fields} fields")]
    BadRecord { line: usize, fields: usize },
    #[error("line {line}: could not parse '{token}' as a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: could not parse '{token}' as an integer label")]
    BadLabel { line: usize, token: String },
    #[error("file describes an empty point cloud")]
    Empty,
}

pub fn write_xyz(pc: &PointCloud, comment: &str) -> String {
    let mut out = String::new();
    out.push_str(&pc.len().to_string());
    out.push('\n');
    out.push_str(comment.trim_end());
    out.push('\n');
    for (coord, label) in pc.coords.iter().zip(pc.labels.iter()) {
        out.push_str(&format!(
            "{} {:.16e} {:.16e} {:.16e}\n",
            label, coord[0], coord[1], coord[2]
        ));
    }
    out
}

pub fn parse_xyz(text: &str) -> Result<PointCloud, XyzError> {
    let mut lines = text.lines().enumerate();
    let count: usize = match lines.next() {
        Some((_, l)) => l.trim().parse().map_err(|_| XyzError::BadCount)?,
        None => return Err(XyzError::BadCount),
    };
    let _comment = lines.next();
    let mut coords = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(XyzError::BadRecord {
                line: lineno,
                fields: fields.len(),
            });
        }
        let label: u32 = fields[0].parse().map_err(|_| XyzError::BadLabel {
            line: lineno,
            token: fields[0].to_string(),
        })?;
        let mut xyz = [0.0f64; 3];
        for (slot, token) in xyz.iter_mut().zip(&fields[1..]) {
            *slot = token.parse().map_err(|_| XyzError::BadNumber {
                line: lineno,
                token: token.to_string(),
            })?;
        }
        labels.push(label);
        coords.push(xyz);
    }
    if coords.len() != count {
        return Err(XyzError::CountMismatch {
            expected: count,
            found: coords.len(),
        });
    }
    build_point_cloud(coords, Some(labels)).map_err(|_| XyzError::Empty)
}
