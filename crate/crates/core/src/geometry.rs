//! Hexagonal multi-site layout with tri-sector sites.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned simulation area with its lower-left corner at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }

    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: usize,
    pub position: Point,
    pub height: f64,
}

/// One directional cell. Its MEC server shares its id.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    pub id: usize,
    pub site: usize,
    /// Boresight azimuth in degrees, counter-clockwise from +x.
    pub azimuth_deg: f64,
    pub position: Point,
    pub height: f64,
}

impl Sector {
    pub fn mec_id(&self) -> usize {
        self.id
    }
}

pub const SECTOR_AZIMUTHS_DEG: [f64; 3] = [0.0, 120.0, 240.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub sites: Vec<Site>,
    pub sectors: Vec<Sector>,
    pub intersite_distance: f64,
    pub area: Area,
}

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("at least one site is required")]
    NoSites,
    #[error("intersite distance must be positive, got {0}")]
    BadIsd(f64),
    #[error("area {width}x{height} m cannot hold {n_sites} sites at {isd} m spacing")]
    AreaTooSmall {
        n_sites: usize,
        isd: f64,
        width: f64,
        height: f64,
    },
}

/// Row counts for a hexagonal grid of `n` sites in `rows` rows: even rows
/// hold `a`, odd rows `b`, with `|a - b| <= 1`.
fn row_pattern(n: usize, rows: usize) -> Option<Vec<usize>> {
    let even = rows.div_ceil(2);
    let odd = rows / 2;
    for a in (1..=n).rev() {
        let Some(rest) = n.checked_sub(a * even) else {
            continue;
        };
        let b = if odd == 0 {
            if rest == 0 {
                a
            } else {
                continue;
            }
        } else if rest % odd == 0 {
            rest / odd
        } else {
            continue;
        };
        if a.abs_diff(b) <= 1 && b >= 1 {
            return Some((0..rows).map(|i| if i % 2 == 0 { a } else { b }).collect());
        }
    }
    None
}

/// Places `n_sites` on a hexagonal grid of horizontal rows, centered in the
/// area. The row count is the one whose covered extent best matches the
/// area's aspect ratio; adjacent rows are offset by half a spacing.
pub fn build_layout(n_sites: usize, isd: f64, area: Area, site_height: f64) -> Result<Layout, LayoutError> {
    if n_sites == 0 {
        return Err(LayoutError::NoSites);
    }
    if !(isd > 0.0) || !isd.is_finite() {
        return Err(LayoutError::BadIsd(isd));
    }
    let center = area.center();
    let row_pitch = isd * 3f64.sqrt() / 2.0;
    let target = (area.width / area.height).ln();

    let mut best: Option<(f64, Vec<usize>)> = None;
    for rows in 1..=n_sites {
        let Some(pattern) = row_pattern(n_sites, rows) else {
            continue;
        };
        let widest = *pattern.iter().max().expect("non-empty");
        let staggered = rows > 1 && pattern[0] == pattern[1];
        let width = (widest as f64 + if staggered { 0.5 } else { 0.0 }) * isd;
        let height = (rows - 1) as f64 * row_pitch + 2.0 * isd / 3f64.sqrt();
        let misfit = ((width / height).ln() - target).abs();
        if best.as_ref().is_none_or(|(m, _)| misfit < *m - 1e-12) {
            best = Some((misfit, pattern));
        }
    }
    let (_, pattern) = best.expect("one row always fits");

    let rows = pattern.len();
    let staggered = rows > 1 && pattern[0] == pattern[1];
    let mut sites = Vec::with_capacity(n_sites);
    for (r, &count) in pattern.iter().enumerate() {
        let shift = match (staggered, r % 2) {
            (false, _) => 0.0,
            (true, 0) => -0.25 * isd,
            (true, _) => 0.25 * isd,
        };
        let y = center.y + (r as f64 - (rows - 1) as f64 / 2.0) * row_pitch;
        for c in 0..count {
            let x = center.x + (c as f64 - (count - 1) as f64 / 2.0) * isd + shift;
            let position = Point::new(x, y);
            if !area.contains(position) {
                return Err(LayoutError::AreaTooSmall {
                    n_sites,
                    isd,
                    width: area.width,
                    height: area.height,
                });
            }
            sites.push(Site {
                id: sites.len(),
                position,
                height: site_height,
            });
        }
    }

    let sectors = sites
        .iter()
        .flat_map(|site| {
            SECTOR_AZIMUTHS_DEG
                .iter()
                .enumerate()
                .map(move |(k, &az)| Sector {
                    id: site.id * 3 + k,
                    site: site.id,
                    azimuth_deg: az,
                    position: site.position,
                    height: site.height,
                })
        })
        .collect();

    Ok(Layout {
        sites,
        sectors,
        intersite_distance: isd,
        area,
    })
}

impl Layout {
    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }
}
