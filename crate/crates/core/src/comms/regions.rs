//! Decision-region rasterization and agreement measurement.

use std::fmt::Write as _;
use std::path::Path;

use super::{Constellation, Detector};
use crate::{Error, Result};

/// Rectangular raster: `cols`×`rows` cells covering [x_min, x_max] ×
/// [y_min, y_max]. Cells are classified at their centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub cols: usize,
    pub rows: usize,
}

impl GridSpec {
    /// Square raster over [−extent, extent]² at the given resolution per
    /// axis.
    pub fn square(extent: f64, resolution: usize) -> Self {
        Self {
            x_min: -extent,
            x_max: extent,
            y_min: -extent,
            y_max: extent,
            cols: resolution,
            rows: resolution,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::invalid(format!(
                "degenerate raster range [{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.cols < 2 || self.rows < 2 {
            return Err(Error::invalid(format!(
                "raster resolution {}x{} must be at least 2 per axis",
                self.cols, self.rows
            )));
        }
        Ok(())
    }

    /// Center x of column j.
    fn x_center(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * (self.x_max - self.x_min) / self.cols as f64
    }

    /// Center y of row i. Rows run top to bottom: row 0 holds the highest
    /// y, matching image order.
    fn y_center(&self, i: usize) -> f64 {
        self.y_max - (i as f64 + 0.5) * (self.y_max - self.y_min) / self.rows as f64
    }
}

/// A classified raster: one class index per cell, in image order (row 0 at
/// the top).
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    spec: GridSpec,
    cells: Vec<usize>,
}

/// Fraction of cells on which two rasters agree, split by a centered
/// reference square: `inside` covers cells with |x| and |y| at most the
/// square's half extent, `outside` the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementReport {
    pub inside: f64,
    pub outside: f64,
    pub inside_cells: usize,
    pub outside_cells: usize,
}

impl RegionGrid {
    /// Classifies every cell center of the raster.
    pub fn rasterize(detector: &dyn Detector, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let mut cells = Vec::with_capacity(spec.rows * spec.cols);
        for i in 0..spec.rows {
            let y = spec.y_center(i);
            for j in 0..spec.cols {
                let x = spec.x_center(j);
                cells.push(detector.classify(&crate::numerics::Vector::new(vec![x, y])));
            }
        }
        Ok(Self { spec, cells })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn class_at(&self, row: usize, col: usize) -> usize {
        self.cells[row * self.spec.cols + col]
    }

    /// Writes `x,y,class` rows, one per cell, in storage order.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,y,class\n");
        for i in 0..self.spec.rows {
            for j in 0..self.spec.cols {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    self.spec.x_center(j),
                    self.spec.y_center(i),
                    self.class_at(i, j)
                );
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Writes a plain-text PPM (P3) image, one class color per cell, with
    /// optional black markers over the constellation points.
    pub fn save_ppm(&self, path: &Path, overlay: Option<&Constellation>) -> Result<()> {
        // One fixed color per class, cycled beyond four classes.
        const PALETTE: [(u8, u8, u8); 4] =
            [(228, 88, 70), (86, 152, 222), (104, 192, 120), (236, 200, 92)];
        let mut pixels: Vec<(u8, u8, u8)> = self
            .cells
            .iter()
            .map(|&class| PALETTE[class % PALETTE.len()])
            .collect();

        if let Some(constellation) = overlay {
            let dx = (self.spec.x_max - self.spec.x_min) / self.spec.cols as f64;
            let dy = (self.spec.y_max - self.spec.y_min) / self.spec.rows as f64;
            // Marker half-width of ~1% of the raster keeps points visible
            // at any resolution.
            let radius = (self.spec.cols.max(self.spec.rows) / 100).max(2) as isize;
            for p in constellation.points() {
                let col = ((p[0] - self.spec.x_min) / dx).floor() as isize;
                let row = ((self.spec.y_max - p[1]) / dy).floor() as isize;
                for di in -radius..=radius {
                    for dj in -radius..=radius {
                        let (i, j) = (row + di, col + dj);
                        if i >= 0
                            && (i as usize) < self.spec.rows
                            && j >= 0
                            && (j as usize) < self.spec.cols
                        {
                            pixels[i as usize * self.spec.cols + j as usize] = (0, 0, 0);
                        }
                    }
                }
            }
        }

        let mut out = String::with_capacity(pixels.len() * 12 + 32);
        let _ = writeln!(out, "P3");
        let _ = writeln!(out, "{} {}", self.spec.cols, self.spec.rows);
        let _ = writeln!(out, "255");
        for (r, g, b) in pixels {
            let _ = writeln!(out, "{r} {g} {b}");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Cell-by-cell agreement of two rasters over the same spec, split at a
/// centered square of the given half extent.
pub fn region_agreement(
    a: &RegionGrid,
    b: &RegionGrid,
    square_half_extent: f64,
) -> Result<AgreementReport> {
    if a.spec != b.spec {
        return Err(Error::invalid(
            "agreement requires identical raster specifications",
        ));
    }
    if !(square_half_extent > 0.0) {
        return Err(Error::invalid(format!(
            "reference square half extent must be positive, got {square_half_extent}"
        )));
    }
    let spec = &a.spec;
    let (mut inside_cells, mut inside_hits) = (0usize, 0usize);
    let (mut outside_cells, mut outside_hits) = (0usize, 0usize);
    for i in 0..spec.rows {
        let y = spec.y_center(i);
        for j in 0..spec.cols {
            let x = spec.x_center(j);
            let agree = a.class_at(i, j) == b.class_at(i, j);
            if x.abs() <= square_half_extent && y.abs() <= square_half_extent {
                inside_cells += 1;
                inside_hits += agree as usize;
            } else {
                outside_cells += 1;
                outside_hits += agree as usize;
            }
        }
    }
    if inside_cells == 0 || outside_cells == 0 {
        return Err(Error::invalid(format!(
            "reference square of half extent {square_half_extent} leaves an empty side"
        )));
    }
    Ok(AgreementReport {
        inside: inside_hits as f64 / inside_cells as f64,
        outside: outside_hits as f64 / outside_cells as f64,
        inside_cells,
        outside_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comms::MinDistanceDetector;

    fn qpsk_raster(resolution: usize) -> RegionGrid {
        let det = MinDistanceDetector::new(Constellation::qpsk());
        RegionGrid::rasterize(&det, GridSpec::square(5.0, resolution)).unwrap()
    }

    #[test]
    fn min_distance_regions_are_quadrants() {
        let grid = qpsk_raster(64);
        let spec = *grid.spec();
        assert_eq!(grid.cells().len(), 64 * 64);
        for i in 0..spec.rows {
            for j in 0..spec.cols {
                let (x, y) = (spec.x_center(j), spec.y_center(i));
                let expected = match (x > 0.0, y > 0.0) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                assert_eq!(grid.class_at(i, j), expected, "cell ({x}, {y})");
            }
        }
    }

    #[test]
    fn raster_against_itself_agrees_everywhere() {
        let grid = qpsk_raster(32);
        let report = region_agreement(&grid, &grid, 1.5).unwrap();
        assert_eq!(report.inside, 1.0);
        assert_eq!(report.outside, 1.0);
        assert_eq!(report.inside_cells + report.outside_cells, 32 * 32);
    }

    #[test]
    fn agreement_counts_differing_cells() {
        let a = qpsk_raster(32);
        let mut b = a.clone();
        // Flip one inside cell and one outside cell.
        let center = 16 * 32 + 16;
        b.cells[center] = (b.cells[center] + 1) % 4;
        b.cells[0] = (b.cells[0] + 1) % 4;
        let report = region_agreement(&a, &b, 1.5).unwrap();
        assert!(report.inside < 1.0);
        assert!(report.outside < 1.0);
        let disagreements = (1.0 - report.inside) * report.inside_cells as f64
            + (1.0 - report.outside) * report.outside_cells as f64;
        assert!((disagreements - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_specs_rejected() {
        let a = qpsk_raster(32);
        let b = qpsk_raster(16);
        assert!(region_agreement(&a, &b, 1.5).is_err());
    }

    #[test]
    fn degenerate_specs_rejected() {
        let det = MinDistanceDetector::new(Constellation::qpsk());
        let mut empty = GridSpec::square(5.0, 32);
        empty.x_max = empty.x_min;
        assert!(RegionGrid::rasterize(&det, empty).is_err());
        let coarse = GridSpec {
            cols: 1,
            ..GridSpec::square(5.0, 32)
        };
        assert!(RegionGrid::rasterize(&det, coarse).is_err());
    }

    #[test]
    fn ppm_has_header_palette_and_overlay() {
        let grid = qpsk_raster(32);
        let dir = tempfile::tempdir().unwrap();

        let plain = dir.path().join("plain.ppm");
        grid.save_ppm(&plain, None).unwrap();
        let text = std::fs::read_to_string(&plain).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("P3"));
        assert_eq!(lines.next(), Some("32 32"));
        assert_eq!(lines.next(), Some("255"));
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), 32 * 32);
        assert!(!body.contains(&"0 0 0"));

        let marked = dir.path().join("marked.ppm");
        grid.save_ppm(&marked, Some(&Constellation::qpsk())).unwrap();
        let text = std::fs::read_to_string(&marked).unwrap();
        let black = text.lines().skip(3).filter(|l| *l == "0 0 0").count();
        // Four markers of at least 5x5 cells each.
        assert!(black >= 4 * 25, "only {black} overlay pixels");
    }

    #[test]
    fn csv_lists_every_cell() {
        let grid = qpsk_raster(16);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        grid.save_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,class"));
        assert_eq!(lines.count(), 16 * 16);
    }
}
