use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Interval `[-L, L]`, points `x_j = -L + j h`.
    Line1d,
    /// s-wave reduction on `(0, L]`, acting on `w = r u`; points `r_j = j h`.
    Radial3d,
}

impl Geometry {
    pub fn space_dim(self) -> usize {
        match self {
            Geometry::Line1d => 1,
            Geometry::Radial3d => 3,
        }
    }
}

/// Dirichlet finite-difference grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub geometry: Geometry,
    pub n: usize,
    pub radius: f64,
    pub spacing: f64,
    pub points: Vec<f64>,
}

impl Grid {
    pub fn new(geometry: Geometry, n: usize, radius: f64) -> Result<Self> {
        Self::with_min_points(geometry, n, radius, MIN_POINTS)
    }

    /// Same construction with a relaxed point floor. Tiny grids are only
    /// meant for stencil checks by hand.
    pub fn with_min_points(geometry: Geometry, n: usize, radius: f64, min_points: usize) -> Result<Self> {
        if n < min_points.max(1) {
            return Err(LabError::DegenerateGrid(format!("n = {n} is below the minimum of {min_points}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(LabError::DegenerateGrid(format!("radius must be positive, got {radius}")));
        }
        let (spacing, origin) = match geometry {
            Geometry::Line1d => (2.0 * radius / (n as f64 + 1.0), -radius),
            Geometry::Radial3d => (radius / (n as f64 + 1.0), 0.0),
        };
        let points = (1..=n).map(|j| origin + j as f64 * spacing).collect();
        Ok(Grid { geometry, n, radius, spacing, points })
    }

    pub fn space_dim(&self) -> usize {
        self.geometry.space_dim()
    }

    /// FNV-1a over geometry, size and bit patterns of radius and spacing.
    pub fn hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(25);
        bytes.push(match self.geometry {
            Geometry::Line1d => 1u8,
            Geometry::Radial3d => 3u8,
        });
        bytes.extend_from_slice(&(self.n as u64).to_le_bytes());
        bytes.extend_from_slice(&self.radius.to_bits().to_le_bytes());
        bytes.extend_from_slice(&self.spacing.to_bits().to_le_bytes());
        fnv1a(&bytes)
    }

    /// `|x|` at each point (the radial coordinate in 3D).
    pub fn abs_points(&self) -> Vec<f64> {
        self.points.iter().map(|x| x.abs()).collect()
    }
}

pub fn build_grid(geometry: Geometry, n: usize, radius: f64) -> Result<Grid> {
    Grid::new(geometry, n, radius)
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_points_small() {
        let g = Grid::with_min_points(Geometry::Line1d, 4, 2.5, 1).unwrap();
        assert_eq!(g.spacing, 1.0);
        assert_eq!(g.points, vec![-1.5, -0.5, 0.5, 1.5]);
    }

    #[test]
    fn radial_points_small() {
        let g = Grid::with_min_points(Geometry::Radial3d, 3, 2.0, 1).unwrap();
        assert_eq!(g.spacing, 0.5);
        assert_eq!(g.points, vec![0.5, 1.0, 1.5]);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(Grid::with_min_points(Geometry::Line1d, 4, 0.0, 1).is_err());
        assert!(build_grid(Geometry::Line1d, 4, 2.5).is_err());
        assert!(build_grid(Geometry::Radial3d, 16, -1.0).is_err());
    }

    #[test]
    fn hash_separates_grids() {
        let a = build_grid(Geometry::Line1d, 16, 1.0).unwrap();
        let b = build_grid(Geometry::Line1d, 17, 1.0).unwrap();
        let c = build_grid(Geometry::Radial3d, 16, 1.0).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash(), a.clone().hash());
    }
}
