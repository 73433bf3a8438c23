//! Voxel-grid primitives: label volumes, binary masks and the morphology,
//! labeling, resampling and distance operations the pipeline is built on.
//!
//! All volumes are stored x-fastest (`index = x + nx * (y + ny * z)`). Voxel
//! `i` along an axis covers `[i * s, (i + 1) * s)` millimetres, so its centre
//! sits at `(i + 0.5) * s`. Anything outside the grid is background.

mod components;
mod edt;
pub mod io;
mod morphology;
pub mod nifti;
mod resample;

pub use components::{
    connected_components, count_islands, remove_small_components, ComponentLabeling,
};
pub use edt::{distance_transform, DistanceField};
pub use morphology::{boundary, dilate, erode};
pub use resample::{check_extent, upsample_nearest};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Dims = [usize; 3];
pub type Spacing = [f64; 3];

/// Substructure label ids stored in a [`LabelVolume`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Background = 0,
    LV = 1,
    RV = 2,
    LA = 3,
    RA = 4,
    Myo = 5,
    AO = 6,
    PA = 7,
}

impl Label {
    pub const ALL: [Label; 8] = [
        Label::Background,
        Label::LV,
        Label::RV,
        Label::LA,
        Label::RA,
        Label::Myo,
        Label::AO,
        Label::PA,
    ];

    pub const CHAMBERS: [Label; 4] = [Label::LV, Label::RV, Label::LA, Label::RA];

    pub fn from_u8(v: u8) -> Option<Label> {
        Label::ALL.get(v as usize).copied()
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Background => "background",
            Label::LV => "LV",
            Label::RV => "RV",
            Label::LA => "LA",
            Label::RA => "RA",
            Label::Myo => "Myo",
            Label::AO => "AO",
            Label::PA => "PA",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Neighborhood used for adjacency and component labeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    Six,
    TwentySix,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [[isize; 3]] {
        match self {
            Connectivity::Six => &OFFSETS_6,
            Connectivity::TwentySix => &OFFSETS_26,
        }
    }

    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Connectivity::Six),
            26 => Some(Connectivity::TwentySix),
            _ => None,
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Connectivity::Six => 6,
            Connectivity::TwentySix => 26,
        }
    }
}

pub const OFFSETS_6: [[isize; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

pub const OFFSETS_26: [[isize; 3]; 26] = {
    let mut out = [[0isize; 3]; 26];
    let mut n = 0;
    let mut z = -1;
    while z <= 1 {
        let mut y = -1;
        while y <= 1 {
            let mut x = -1;
            while x <= 1 {
                if !(x == 0 && y == 0 && z == 0) {
                    out[n] = [x, y, z];
                    n += 1;
                }
                x += 1;
            }
            y += 1;
        }
        z += 1;
    }
    out
};

/// Grid geometry shared by label volumes, masks and scalar fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: Dims,
    pub spacing: Spacing,
}

impl Grid {
    pub fn new(dims: Dims, spacing: Spacing) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidVolume(format!("dims must be >= 1, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidVolume(format!(
                "spacing must be finite and > 0, got {spacing:?}"
            )));
        }
        Ok(Grid { dims, spacing })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    /// Index of the voxel at `c + off`, or `None` when it falls outside.
    #[inline]
    pub fn offset(&self, c: [usize; 3], off: [isize; 3]) -> Option<usize> {
        let x = c[0] as isize + off[0];
        let y = c[1] as isize + off[1];
        let z = c[2] as isize + off[2];
        if x < 0
            || y < 0
            || z < 0
            || x >= self.dims[0] as isize
            || y >= self.dims[1] as isize
            || z >= self.dims[2] as isize
        {
            None
        } else {
            Some(self.index(x as usize, y as usize, z as usize))
        }
    }

    /// Physical position (mm) of a voxel centre.
    #[inline]
    pub fn center_mm(&self, c: [usize; 3]) -> [f64; 3] {
        [
            (c[0] as f64 + 0.5) * self.spacing[0],
            (c[1] as f64 + 0.5) * self.spacing[1],
            (c[2] as f64 + 0.5) * self.spacing[2],
        ]
    }

    pub fn extent_mm(&self) -> [f64; 3] {
        [
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        ]
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dims == other.dims
    }

    fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::GridMismatch(format!(
                "{what}: dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

/// Dense grid of substructure labels (0..=7).
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVolume {
    grid: Grid,
    labels: Vec<u8>,
}

impl LabelVolume {
    pub fn new(dims: Dims, spacing: Spacing, labels: Vec<u8>) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        if labels.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "label array has {} entries, dims {:?} need {}",
                labels.len(),
                dims,
                grid.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > Label::PA.id()) {
            return Err(Error::InvalidVolume(format!("label id {bad} outside 0..=7")));
        }
        Ok(LabelVolume { grid, labels })
    }

    pub fn filled(dims: Dims, spacing: Spacing, label: Label) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        Ok(LabelVolume {
            labels: vec![label.id(); grid.len()],
            grid,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> Dims {
        self.grid.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.grid.spacing
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.labels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> u8 {
        self.labels[self.grid.index(x, y, z)]
    }

    #[inline]
    pub fn at(&self, i: usize) -> u8 {
        self.labels[i]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, label: Label) {
        let i = self.grid.index(x, y, z);
        self.labels[i] = label.id();
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, label: Label) {
        self.labels[i] = label.id();
    }

    pub fn mask_of(&self, label: Label) -> BinaryMask {
        self.mask_where(|l| l == label.id())
    }

    pub fn mask_where(&self, pred: impl Fn(u8) -> bool) -> BinaryMask {
        BinaryMask {
            grid: self.grid,
            bits: self.labels.iter().map(|&l| pred(l)).collect(),
        }
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label.id()).count()
    }

    /// Returns a copy with the given spacing and the same voxel contents.
    pub fn with_spacing(&self, spacing: Spacing) -> Result<Self> {
        LabelVolume::new(self.grid.dims, spacing, self.labels.clone())
    }
}

/// One boolean per voxel.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMask {
    grid: Grid,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(dims: Dims, spacing: Spacing, bits: Vec<bool>) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        if bits.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "mask has {} entries, dims {:?} need {}",
                bits.len(),
                dims,
                grid.len()
            )));
        }
        Ok(BinaryMask { grid, bits })
    }

    pub fn empty(grid: Grid) -> Self {
        BinaryMask {
            bits: vec![false; grid.len()],
            grid,
        }
    }

    pub fn full(grid: Grid) -> Self {
        BinaryMask {
            bits: vec![true; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([usize; 3]) -> bool) -> Self {
        let bits = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        BinaryMask { grid, bits }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dims(&self) -> Dims {
        self.grid.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.grid.spacing
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.grid.index(x, y, z)]
    }

    #[inline]
    pub fn at(&self, i: usize) -> bool {
        self.bits[i]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.grid.index(x, y, z);
        self.bits[i] = v;
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty_mask(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.grid.ensure_same(&other.grid, "and")?;
        Ok(self.zip_with(other, |a, b| a && b))
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.grid.ensure_same(&other.grid, "or")?;
        Ok(self.zip_with(other, |a, b| a || b))
    }

    /// Voxels set here and clear in `other`.
    pub fn minus(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.grid.ensure_same(&other.grid, "minus")?;
        Ok(self.zip_with(other, |a, b| a && !b))
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.grid.dims == other.grid.dims
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> BinaryMask {
        BinaryMask {
            grid: self.grid,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn with_spacing(&self, spacing: Spacing) -> Result<Self> {
        BinaryMask::new(self.grid.dims, spacing, self.bits.clone())
    }

    /// Bit `k` is set iff the neighbor at `OFFSETS_26[k]` is foreground.
    pub fn neighborhood_bits(&self, c: [usize; 3]) -> u32 {
        let mut bits = 0u32;
        for (k, off) in OFFSETS_26.iter().enumerate() {
            if let Some(j) = self.grid.offset(c, *off) {
                if self.bits[j] {
                    bits |= 1 << k;
                }
            }
        }
        bits
    }
}
