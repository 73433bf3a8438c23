//! Parametric synthetic hearts with known defects.
//!
//! A spec lists four chamber ellipsoids split by a septal wall, vessel
//! centerline polylines with per-vertex radii, and a defect list. Rendering
//! produces a high-resolution blood pool and a low-resolution substructure map
//! made by majority vote over blocks.
//!
//! Defect compatibility (x marks pairs that cannot be combined; every defect
//! kind appears at most once, septal holes at most once per site):
//!
//! ```text
//!                      rv_origin  overriding  common  absent_pa  sling  duct  interruption  double_arch  narrow
//! rv_origin_both           -          x         x         x
//! overriding_aorta         x          -         x
//! common_trunk             x          x         -         x        x      x        x
//! absent_pa_trunk          x                    x         -               x        x
//! pa_sling_course                               x                  -      x        x
//! extra_duct                                    x         x        x      -        x
//! arch_interruption                             x         x        x      x        -             x           x
//! double_arch                                                                      x             -
//! narrow_segment                                                                   x                         -
//! ```
//!
//! `reversed_origins` additionally excludes `rv_origin_both`,
//! `overriding_aorta`, `common_trunk` and `absent_pa_trunk`.

mod presets;
mod raster;
mod scene;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::case::CaseInput;
use crate::chd::{CHDType, LabelSet};
use crate::connection::Origin;
use crate::error::{Error, Result};
use crate::volume::{Grid, LabelVolume};

pub use presets::{jitter, preset, preset_for, reference_spec, PRESETS};
pub use scene::Aabb;

/// Narrowings shorter than this are coarctations, longer ones arch hypoplasia.
pub const CA_AAH_SPLIT_MM: f64 = 20.0;

pub const AORTA: &str = "aorta";
pub const PULMONARY_TRUNK: &str = "pulmonary_trunk";
pub const LPA: &str = "lpa";
pub const RPA: &str = "rpa";
pub const SVC: &str = "svc";

/// Aorta control points: root, ascending top, two arch points, descending top,
/// descending middle, descending end.
pub const AORTA_POINTS: usize = 7;
/// Pulmonary trunk control points: root, middle, bifurcation.
pub const TRUNK_POINTS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub radii: [f64; 3],
}

impl Ellipsoid {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3)
            .map(|k| ((p[k] - self.center[k]) / self.radii[k]).powi(2))
            .sum::<f64>()
            <= 1.0
    }

    pub fn grown(&self, t: f64) -> Ellipsoid {
        Ellipsoid {
            center: self.center,
            radii: self.radii.map(|r| r + t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chambers {
    pub lv: Ellipsoid,
    pub rv: Ellipsoid,
    pub la: Ellipsoid,
    pub ra: Ellipsoid,
}

/// How a vessel's voxels are labeled in the substructure map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VesselRole {
    /// First `init_length` mm outside the chambers labeled AO.
    Aorta,
    /// First `init_length` mm outside the chambers labeled PA.
    PulmonaryTrunk,
    /// Unlabeled blood pool.
    Artery,
    /// Labeled RA.
    Vein,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vessel {
    pub name: String,
    pub role: VesselRole,
    /// Centerline vertices, mm.
    pub points: Vec<[f64; 3]>,
    /// Radius at each vertex, linear in between, mm.
    pub radii: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeptalSite {
    Atrial,
    Ventricular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Defect {
    /// Round hole through the septal wall between the two atria or ventricles.
    SeptalHole { site: SeptalSite, diameter: f64 },
    /// Second aortic arch closing a vascular ring.
    DoubleArch,
    /// No pulmonary trunk; thin branch arteries fed by a collateral from the arch.
    AbsentPaTrunk,
    /// Aortic radius scaled by `ratio` over arc length `start..end` mm.
    NarrowSegment { start: f64, end: f64, ratio: f64 },
    /// Open duct between the arch and the left pulmonary artery.
    ExtraDuct,
    /// Ventricle labels exchanged.
    ReversedOrigins,
    /// Aortic root moved into the right ventricle.
    RvOriginBoth,
    /// Second superior caval vein into the right atrium.
    ExtraSvc,
    /// Separate island of left-atrial blood.
    LaSplit,
    /// Gap in the distal arch with a duct feeding the descending aorta.
    ArchInterruption,
    /// Single arterial trunk giving off both pulmonary arteries.
    CommonTrunk,
    /// Left pulmonary artery arising from the right one and looping posteriorly.
    PaSlingCourse,
    /// Widened aortic root straddling the ventricular septum.
    OverridingAorta,
}

impl Defect {
    fn key(&self) -> String {
        match self {
            Defect::SeptalHole { site, .. } => format!("septal_hole/{site:?}"),
            other => serde_json::to_value(other)
                .ok()
                .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_string))
                .unwrap_or_default(),
        }
    }

    pub fn truth(&self) -> Option<CHDType> {
        Some(match self {
            Defect::SeptalHole { .. } => return None,
            Defect::DoubleArch => CHDType::DAA,
            Defect::AbsentPaTrunk => CHDType::PuA,
            Defect::NarrowSegment { start, end, .. } => {
                if end - start < CA_AAH_SPLIT_MM {
                    CHDType::CA
                } else {
                    CHDType::AAH
                }
            }
            Defect::ExtraDuct => CHDType::PDA,
            Defect::ReversedOrigins => CHDType::TGA,
            Defect::RvOriginBoth => CHDType::DORV,
            Defect::ExtraSvc => CHDType::DSVC,
            Defect::LaSplit => CHDType::APVC,
            Defect::ArchInterruption => CHDType::IAA,
            Defect::CommonTrunk => CHDType::CAT,
            Defect::PaSlingCourse => CHDType::PAS,
            Defect::OverridingAorta => CHDType::TOF,
        })
    }
}

const CONFLICTS: [(&str, &str); 19] = [
    ("rv_origin_both", "overriding_aorta"),
    ("rv_origin_both", "common_trunk"),
    ("rv_origin_both", "absent_pa_trunk"),
    ("overriding_aorta", "common_trunk"),
    ("common_trunk", "absent_pa_trunk"),
    ("common_trunk", "pa_sling_course"),
    ("common_trunk", "extra_duct"),
    ("common_trunk", "arch_interruption"),
    ("absent_pa_trunk", "extra_duct"),
    ("absent_pa_trunk", "arch_interruption"),
    ("pa_sling_course", "extra_duct"),
    ("pa_sling_course", "arch_interruption"),
    ("extra_duct", "arch_interruption"),
    ("arch_interruption", "double_arch"),
    ("arch_interruption", "narrow_segment"),
    ("reversed_origins", "rv_origin_both"),
    ("reversed_origins", "overriding_aorta"),
    ("reversed_origins", "common_trunk"),
    ("reversed_origins", "absent_pa_trunk"),
];

/// Whether two defects may appear in the same spec.
pub fn compatible(a: &Defect, b: &Defect) -> bool {
    let (ka, kb) = (a.key(), b.key());
    if ka == kb {
        return false;
    }
    !CONFLICTS
        .iter()
        .any(|&(x, y)| (ka == x && kb == y) || (ka == y && kb == x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub id: String,
    /// Seed the preset jitter was drawn from; rendering itself is deterministic.
    pub seed: u64,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// Block edge, in voxels, of the low-resolution substructure grid.
    pub low_res_factor: usize,
    /// x-interval of the septal wall, mm. Right-side chambers end below it and
    /// left-side chambers start above it.
    pub septum: [f64; 2],
    pub myo_thickness: f64,
    /// Arc length labeled as a great-artery initial part, mm.
    pub init_length: f64,
    pub chambers: Chambers,
    pub vessels: Vec<Vessel>,
    pub defects: Vec<Defect>,
}

/// Adjacencies the rendered phantom is built to have.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedConnections {
    pub la_ra_connected: bool,
    pub lv_rv_connected: bool,
    pub ao_origin: Origin,
    pub pa_origin: Origin,
}

/// A rendered phantom together with its high-resolution label map.
#[derive(Clone, Debug)]
pub struct Phantom {
    pub case: CaseInput,
    pub truth: LabelSet,
    pub labels: LabelVolume,
}

fn finite_pos(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{what} must be positive, got {v}")))
    }
}

impl PhantomSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dims, self.spacing)
    }

    pub fn vessel(&self, name: &str) -> Option<&Vessel> {
        self.vessels.iter().find(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid().map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if self.low_res_factor == 0 || self.dims.iter().any(|d| d % self.low_res_factor != 0) {
            return Err(Error::InvalidSpec(format!(
                "dims {:?} not divisible by low_res_factor {}",
                self.dims, self.low_res_factor
            )));
        }
        if !(self.septum[0] < self.septum[1]) {
            return Err(Error::InvalidSpec("septum interval is empty".into()));
        }
        finite_pos(self.init_length, "init_length")?;
        if !(self.myo_thickness >= 0.0) {
            return Err(Error::InvalidSpec("myo_thickness is negative".into()));
        }
        let extent = grid.extent_mm();
        let inside = |c: [f64; 3], r: [f64; 3], what: &str| -> Result<()> {
            if (0..3).all(|k| c[k] - r[k] >= 0.0 && c[k] + r[k] <= extent[k]) {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{what} leaves the grid")))
            }
        };
        let ch = &self.chambers;
        for (name, e) in [("LV", &ch.lv), ("RV", &ch.rv), ("LA", &ch.la), ("RA", &ch.ra)] {
            for r in e.radii {
                finite_pos(r, name)?;
            }
            inside(e.center, e.radii.map(|r| r + self.myo_thickness), name)?;
        }
        let mut names = BTreeSet::new();
        for v in &self.vessels {
            if !names.insert(v.name.as_str()) {
                return Err(Error::InvalidSpec(format!("duplicate vessel {:?}", v.name)));
            }
            if v.points.len() < 2 || v.points.len() != v.radii.len() {
                return Err(Error::InvalidSpec(format!(
                    "vessel {:?} needs >= 2 points and one radius per point",
                    v.name
                )));
            }
            for (p, &r) in v.points.iter().zip(&v.radii) {
                finite_pos(r, &v.name)?;
                inside(*p, [r; 3], &v.name)?;
            }
        }
        for (k, a) in self.defects.iter().enumerate() {
            for b in &self.defects[k + 1..] {
                if !compatible(a, b) {
                    return Err(Error::InvalidSpec(format!(
                        "defects {} and {} cannot be combined",
                        a.key(),
                        b.key()
                    )));
                }
            }
            match *a {
                Defect::SeptalHole { diameter, .. } => finite_pos(diameter, "hole diameter")?,
                Defect::NarrowSegment { start, end, ratio }
                    if !(start >= 0.0 && start < end && ratio > 0.0 && ratio < 1.0) => {
                        return Err(Error::InvalidSpec(format!(
                            "narrow segment {start}..{end} ratio {ratio} is invalid"
                        )));
                    }
                _ => {}
            }
        }
        // defect geometry must resolve and stay inside the grid
        let scene = scene::build(self)?;
        for t in &scene.tubes {
            for (p, &r) in t.points.iter().zip(&t.radii) {
                inside(*p, [r; 3], &t.name)?;
            }
        }
        for (e, _) in &scene.blobs {
            inside(e.center, e.radii, "blob")?;
        }
        Ok(())
    }

    /// Labels implied by the defect list.
    pub fn truth(&self) -> LabelSet {
        let atrial = self.has_hole(SeptalSite::Atrial);
        let ventricular = self.has_hole(SeptalSite::Ventricular);
        let mut set: LabelSet = self.defects.iter().filter_map(Defect::truth).collect();
        match (atrial, ventricular) {
            (true, true) => {
                set.insert(CHDType::AVSD);
            }
            (true, false) => {
                set.insert(CHDType::ASD);
            }
            (false, true) => {
                set.insert(CHDType::VSD);
            }
            (false, false) => {}
        }
        if set.is_empty() {
            set.insert(CHDType::Normal);
        }
        set
    }

    fn has_hole(&self, s: SeptalSite) -> bool {
        self.defects
            .iter()
            .any(|d| matches!(d, Defect::SeptalHole { site, .. } if *site == s))
    }

    fn has(&self, d: &Defect) -> bool {
        self.defects.iter().any(|x| std::mem::discriminant(x) == std::mem::discriminant(d))
    }

    pub fn expected_connections(&self) -> ExpectedConnections {
        let swap = self.has(&Defect::ReversedOrigins);
        let (lv, rv) = if swap {
            (Origin::RV, Origin::LV)
        } else {
            (Origin::LV, Origin::RV)
        };
        let ao_origin = if self.has(&Defect::OverridingAorta) {
            Origin::Both
        } else if self.has(&Defect::RvOriginBoth) {
            rv
        } else {
            lv
        };
        let pa_origin = if self.has(&Defect::CommonTrunk) || self.has(&Defect::AbsentPaTrunk) {
            Origin::None
        } else {
            rv
        };
        ExpectedConnections {
            la_ra_connected: self.has_hole(SeptalSite::Atrial),
            lv_rv_connected: self.has_hole(SeptalSite::Ventricular)
                || self.has(&Defect::OverridingAorta),
            ao_origin,
            pa_origin,
        }
    }

    /// Box, in mm, holding every voxel the defects may change relative to the
    /// same spec without defects; `None` when there are no defects.
    pub fn defect_region(&self) -> Result<Option<Aabb>> {
        let base = PhantomSpec {
            defects: Vec::new(),
            ..self.clone()
        };
        Ok(scene::changed_region(
            &scene::build(&base)?,
            &scene::build(self)?,
            self.myo_thickness,
        ))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PhantomSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: PhantomSpec =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// Renders the phantom and derives its ground truth.
pub fn render(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let scene = scene::build(spec)?;
    let grid = spec.grid()?;
    let (pool, labels) = raster::rasterize(&scene, grid);
    let low = raster::downsample_majority(&labels, spec.low_res_factor)?;
    let case = CaseInput::new(spec.id.clone(), pool, low)?;
    Ok(Phantom {
        case,
        truth: spec.truth(),
        labels,
    })
}

pub fn generate(spec: &PhantomSpec) -> Result<(CaseInput, LabelSet)> {
    let p = render(spec)?;
    Ok((p.case, p.truth))
}

#[cfg(test)]
mod tests;
