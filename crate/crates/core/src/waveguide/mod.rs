//! Direct 2-D finite-difference solves on thin planar domains.
//!
//! Everything here works at unit channel width; the thin domain of width ε
//! is the ε-contraction, so its spectrum is the unit one divided by ε² and
//! its scattering matrices at ε²λ equal the unit ones at λ.

mod junction;
mod modes;

pub use junction::{
    junction_field, junction_scattering_fd, junction_sweep, threshold_limit_t, FieldSample,
    JunctionScattering, SweepPoint, ThresholdLimit,
};
pub use modes::{cross_section_modes, cylinder_spectrum_fd, CrossSectionProblem, Mode, WallBc};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    East,
    West,
    North,
    South,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Unit-width channel leaving the junction through one of its sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub direction: Direction,
    /// Distance from the lower (south or west) corner of the junction side
    /// to the channel's lower edge.
    pub offset: f64,
    /// Truncation length; the face sits this far from the junction side.
    pub length: f64,
}

/// Junction rectangle with channels attached flush to its sides. Channel
/// order fixes the row/column order of T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionDomain2D {
    pub junction: Rect,
    pub channels: Vec<Channel>,
    pub wall: WallBc,
}

impl JunctionDomain2D {
    /// Straight channel of total length `length` split into two half-channels.
    pub fn straight(length: f64, wall: WallBc) -> Self {
        JunctionDomain2D {
            junction: Rect {
                x0: 0.0,
                x1: 0.5 * length,
                y0: 0.0,
                y1: 1.0,
            },
            channels: vec![
                Channel {
                    direction: Direction::West,
                    offset: 0.0,
                    length: 0.25 * length,
                },
                Channel {
                    direction: Direction::East,
                    offset: 0.0,
                    length: 0.25 * length,
                },
            ],
            wall,
        }
    }

    /// Unit square with four channels of length `length`, ordered E, N, W, S.
    pub fn cross(length: f64, wall: WallBc) -> Self {
        let ch = |direction| Channel {
            direction,
            offset: 0.0,
            length,
        };
        JunctionDomain2D {
            junction: Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
            channels: vec![
                ch(Direction::East),
                ch(Direction::North),
                ch(Direction::West),
                ch(Direction::South),
            ],
            wall,
        }
    }

    /// Unit square with channels W, E and N.
    pub fn tee(length: f64, wall: WallBc) -> Self {
        let mut d = Self::cross(length, wall);
        d.channels = vec![d.channels[2], d.channels[0], d.channels[1]];
        d
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let d: JunctionDomain2D =
            serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        d.validate()?;
        Ok(d)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn degree(&self) -> usize {
        self.channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.wall.validate()?;
        let r = &self.junction;
        let vals = [r.x0, r.x1, r.y0, r.y1];
        if vals.iter().any(|v| !v.is_finite()) || !(r.x1 > r.x0) || !(r.y1 > r.y0) {
            return Err(Error::invalid("junction rectangle must have positive size"));
        }
        if self.channels.is_empty() {
            return Err(Error::invalid("domain needs at least one channel"));
        }
        for (j, c) in self.channels.iter().enumerate() {
            let side = self.side_length(c.direction);
            if !(c.length > 0.0) || !c.offset.is_finite() {
                return Err(Error::invalid(format!("channel {j}: length must be positive")));
            }
            if c.offset < -1e-12 || c.offset + 1.0 > side + 1e-12 {
                return Err(Error::invalid(format!(
                    "channel {j} does not attach flush: offset {} on a side of length {side}",
                    c.offset
                )));
            }
            for (i, o) in self.channels[..j].iter().enumerate() {
                if o.direction == c.direction && (o.offset - c.offset).abs() < 1.0 + 1e-12 {
                    return Err(Error::invalid(format!("channels {i} and {j} overlap or touch")));
                }
            }
        }
        Ok(())
    }

    fn side_length(&self, d: Direction) -> f64 {
        let r = &self.junction;
        match d {
            Direction::East | Direction::West => r.y1 - r.y0,
            Direction::North | Direction::South => r.x1 - r.x0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip() {
        let d = JunctionDomain2D::tee(1.0, WallBc::Robin { alpha: 2.0 });
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"west\"") && s.contains("\"robin\""));
        assert_eq!(JunctionDomain2D::from_json_str(&s).unwrap(), d);
    }

    #[test]
    fn overlapping_channels_are_rejected() {
        let mut d = JunctionDomain2D::cross(1.0, WallBc::Dirichlet);
        d.junction.y1 = 1.5;
        d.channels[2].offset = 0.5;
        d.channels.push(Channel {
            direction: Direction::West,
            offset: 0.0,
            length: 1.0,
        });
        assert!(d.validate().is_err());
    }
}
