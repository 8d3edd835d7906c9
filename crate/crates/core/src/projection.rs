//! Rendering of simulation frames into images.
//!
//! Cropped images sample the square inscribed in the retina disc; mirroring
//! and rotation are applied to the sampling grid in retina space, so every
//! sample stays on the retina and binary values are never interpolated.
//! Raw images rasterize the whole disc at one pixel per lattice unit.

use crate::dynamics::{CellState, SimulationFrame};
use crate::error::{Error, Result};
use crate::lattice::RetinaLattice;
use crate::real::{round_half_up, Real};

pub const ACTIVE_PIXEL: u8 = 255;
pub const GREEN_READY: u8 = 0;
pub const GREEN_REFRACTORY: u8 = 85;
pub const GREEN_ACTIVE: u8 = 170;
pub const BLUE_BOUNDARY: u8 = 255;
pub const MIN_SIDE: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentationSpec<T> {
    pub mirror: bool,
    /// Counter-clockwise rotation in degrees, `[0, 360)`.
    pub rotation_deg: T,
}

impl<T: Real> AugmentationSpec<T> {
    pub fn identity() -> Self {
        Self { mirror: false, rotation_deg: T::zero() }
    }

    pub fn new(mirror: bool, rotation_deg: T) -> Result<Self> {
        if !(rotation_deg >= T::zero() && rotation_deg < T::lit(360.0)) {
            return Err(Error::invalid(format!("rotation {rotation_deg} outside [0, 360)")));
        }
        Ok(Self { mirror, rotation_deg })
    }

    /// Applies mirror (x -> -x) then rotation.
    #[inline]
    pub fn apply(&self, p: [T; 2], cos: T, sin: T) -> [T; 2] {
        let x = if self.mirror { -p[0] } else { p[0] };
        let y = p[1];
        [x * cos - y * sin, x * sin + y * cos]
    }

    fn cos_sin(&self) -> (T, T) {
        let rad = self.rotation_deg.to_radians();
        (rad.cos(), rad.sin())
    }
}

/// 8-bit grayscale square image; valid images hold only 0 and 255.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    side: u32,
    pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn zeros(side: u32) -> Self {
        Self { side, pixels: vec![0; (side as usize).pow(2)] }
    }

    /// Wraps row-major pixels; fails unless the data is square and strictly binary.
    pub fn from_pixels(side: u32, pixels: Vec<u8>) -> Result<Self> {
        let img = Self::from_pixels_unchecked(side, pixels)?;
        if let Some(pos) = img.first_non_binary() {
            return Err(Error::invalid(format!(
                "pixel {pos} has value {} outside {{0, 255}}",
                img.pixels[pos]
            )));
        }
        Ok(img)
    }

    /// Wraps row-major pixels without checking binarity.
    pub fn from_pixels_unchecked(side: u32, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != (side as usize).pow(2) {
            return Err(Error::invalid(format!(
                "{} pixels do not form a {side}x{side} image",
                pixels.len()
            )));
        }
        Ok(Self { side, pixels })
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, col: u32, row: u32) -> u8 {
        self.pixels[(row * self.side + col) as usize]
    }

    pub fn set(&mut self, col: u32, row: u32, value: u8) {
        self.pixels[(row * self.side + col) as usize] = value;
    }

    /// Index of the first pixel that is neither 0 nor 255.
    pub fn first_non_binary(&self) -> Option<usize> {
        self.pixels.iter().position(|&p| p != 0 && p != ACTIVE_PIXEL)
    }
}

/// 8-bit RGB square image: calcium, state code, boundary mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawImage {
    side: u32,
    pixels: Vec<u8>,
}

impl RawImage {
    pub fn from_pixels(side: u32, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != 3 * (side as usize).pow(2) {
            return Err(Error::invalid(format!(
                "{} bytes do not form a {side}x{side} RGB image",
                pixels.len()
            )));
        }
        Ok(Self { side, pixels })
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, col: u32, row: u32) -> [u8; 3] {
        let k = 3 * (row * self.side + col) as usize;
        [self.pixels[k], self.pixels[k + 1], self.pixels[k + 2]]
    }
}

/// Retina-space point sampled by cropped pixel `(col, row)`.
pub fn cropped_sample_point<T: Real>(
    radius: T,
    side: u32,
    aug: &AugmentationSpec<T>,
    col: u32,
    row: u32,
) -> [T; 2] {
    let (cos, sin) = aug.cos_sin();
    cropped_point_with(radius, side, aug, cos, sin, col, row)
}

#[inline]
fn cropped_point_with<T: Real>(
    radius: T,
    side: u32,
    aug: &AugmentationSpec<T>,
    cos: T,
    sin: T,
    col: u32,
    row: u32,
) -> [T; 2] {
    let edge = radius * T::SQRT_2();
    let n = T::from_u32(side).unwrap();
    let half = T::lit(0.5);
    let x = edge * ((T::from_u32(col).unwrap() + half) / n - half);
    let y = edge * ((T::from_u32(row).unwrap() + half) / n - half);
    aug.apply([x, y], cos, sin)
}

/// Pixel -> cell lookup for one (augmentation, side) pair, reusable across frames.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingMap {
    side: u32,
    cells: Vec<u32>,
}

impl SamplingMap {
    pub fn new<T: Real>(lattice: &RetinaLattice<T>, aug: &AugmentationSpec<T>, side: u32) -> Result<Self> {
        if side < MIN_SIDE {
            return Err(Error::invalid(format!("image side {side} is below {MIN_SIDE}")));
        }
        let (cos, sin) = aug.cos_sin();
        let radius = lattice.radius();
        let mut cells = Vec::with_capacity((side as usize).pow(2));
        for row in 0..side {
            for col in 0..side {
                let p = cropped_point_with(radius, side, aug, cos, sin, col, row);
                let cell = lattice.nearest_cell(p).ok_or_else(|| {
                    Error::Internal(format!("sample ({col}, {row}) fell outside the retina"))
                })?;
                cells.push(cell as u32);
            }
        }
        Ok(Self { side, cells })
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn render<T: Real>(&self, frame: &SimulationFrame<T>) -> BinaryImage {
        let pixels = self
            .cells
            .iter()
            .map(|&c| if frame.states[c as usize] == CellState::Active { ACTIVE_PIXEL } else { 0 })
            .collect();
        BinaryImage { side: self.side, pixels }
    }

    /// Same as `active_pixel_count(&self.render(frame))` without allocating.
    pub fn active_pixels<T: Real>(&self, frame: &SimulationFrame<T>) -> usize {
        self.cells.iter().filter(|&&c| frame.states[c as usize] == CellState::Active).count()
    }
}

/// Binary crop of `frame` under augmentation `aug`.
pub fn project_cropped<T: Real>(
    frame: &SimulationFrame<T>,
    lattice: &RetinaLattice<T>,
    aug: &AugmentationSpec<T>,
    side: u32,
) -> Result<BinaryImage> {
    Ok(SamplingMap::new(lattice, aug, side)?.render(frame))
}

/// Pixel -> cell lookup for raw rendering; `None` outside the disc.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawMap {
    side: u32,
    cells: Vec<Option<u32>>,
}

impl RawMap {
    pub fn new<T: Real>(lattice: &RetinaLattice<T>) -> Self {
        let radius = lattice.radius();
        let side = (radius + radius).ceil().to_u32().unwrap();
        let half_side = T::from_u32(side).unwrap() * T::lit(0.5);
        let half = T::lit(0.5);
        let mut cells = Vec::with_capacity((side as usize).pow(2));
        for row in 0..side {
            for col in 0..side {
                let x = T::from_u32(col).unwrap() + half - half_side;
                let y = T::from_u32(row).unwrap() + half - half_side;
                cells.push(lattice.nearest_cell([x, y]).map(|c| c as u32));
            }
        }
        Self { side, cells }
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn cell_at(&self, col: u32, row: u32) -> Option<usize> {
        self.cells[(row * self.side + col) as usize].map(|c| c as usize)
    }

    pub fn render<T: Real>(&self, frame: &SimulationFrame<T>, lattice: &RetinaLattice<T>) -> RawImage {
        let mut pixels = Vec::with_capacity(self.cells.len() * 3);
        for cell in &self.cells {
            match *cell {
                None => pixels.extend_from_slice(&[0, 0, 0]),
                Some(c) => {
                    let c = c as usize;
                    pixels.push(calcium_level(frame.calcium[c]));
                    pixels.push(state_code(frame.states[c]));
                    pixels.push(if lattice.is_boundary(c) { BLUE_BOUNDARY } else { 0 });
                }
            }
        }
        RawImage { side: self.side, pixels }
    }
}

/// Full-disc RGB rendering at one pixel per lattice unit.
pub fn project_raw<T: Real>(frame: &SimulationFrame<T>, lattice: &RetinaLattice<T>) -> RawImage {
    RawMap::new(lattice).render(frame, lattice)
}

/// Red channel value for a calcium level in `[0, 1]`.
#[inline]
pub fn calcium_level<T: Real>(calcium: T) -> u8 {
    round_half_up(calcium * T::lit(255.0), 0).min(255) as u8
}

#[inline]
pub fn state_code(state: CellState) -> u8 {
    match state {
        CellState::Ready => GREEN_READY,
        CellState::Refractory => GREEN_REFRACTORY,
        CellState::Active => GREEN_ACTIVE,
    }
}

pub fn active_pixel_count(image: &BinaryImage) -> usize {
    image.pixels.iter().filter(|&&p| p == ACTIVE_PIXEL).count()
}
