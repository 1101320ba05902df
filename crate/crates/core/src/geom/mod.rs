//! Bounded sets, their rasters, and the two fragmentation indices.
//!
//! Sets are described exactly by [`SetExpr`] (balls, open axis boxes and the
//! boolean operations between them) and discretized into a [`RasterSet`]
//! whose cells carry the fraction of supersampled points lying in the set.
//! Fractional coverage feeds every measure; binary occupancy (coverage at
//! least one half) feeds every distance, so sets are handled modulo
//! negligible sets throughout.

mod ball;
mod edt;
mod expr;
mod grid;
mod hausdorff;
mod index;
mod oracle;
mod raster;

pub use ball::{enclosing_ball, essential_diameter, min_ball, EnclosingBall};
pub use edt::squared_distance_transform;
pub use expr::{Aabb, Node, SetExpr};
pub use grid::Grid;
pub use hausdorff::{essential_hausdorff, essential_hausdorff_expr};
pub use index::{
    default_h, delta1, delta_h, index_tolerance, indices, indices_raster, IndexOptions, IndexReport,
    IndexValue,
};
pub use oracle::{delta1_oracle_1d, Delta1Oracle};
pub use raster::{
    d1, d1_expr, default_supersampling, measure_expr, rasterize, rasterize_on, MeasureEstimate,
    RasterSet,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("dimension {0} is not supported (expected 1, 2 or 3)")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("primitive has non-positive or non-finite size")]
    DegeneratePrimitive,
    #[error("empty union or intersection")]
    EmptyOperandList,
    #[error("set has a non-finite bounding box")]
    Unbounded,
    #[error("set has an empty bounding box")]
    EmptyBoundingBox,
    #[error("cell size {h} exceeds the set's bounding-box extent {extent}")]
    DegenerateRaster { h: f64, extent: f64 },
    #[error("invalid resolution: cell size {h}, supersampling {s}")]
    InvalidResolution { h: f64, s: usize },
    #[error("raster would need {cells} cells")]
    GridTooLarge { cells: u128 },
    #[error("rasters do not share a cell lattice; re-rasterize on a common grid")]
    IncompatibleRasters,
    #[error("coverage value {0} outside [0, 1]")]
    InvalidCoverage(f64),
    #[error("coverage array length {found} does not match grid size {expected}")]
    CoverageLength { expected: usize, found: usize },
    #[error("set is negligible (zero measure or no occupied cell)")]
    EmptySet,
    #[error("intervals must be sorted, non-empty and pairwise disjoint")]
    InvalidIntervals,
}

pub(crate) fn check_dim(dim: usize) -> Result<(), GeomError> {
    if (1..=crate::point::MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(GeomError::InvalidDimension(dim))
    }
}
