//! Resolves a spec and its defects into rasterizable primitives.

use serde::{Deserialize, Serialize};

use super::{
    Defect, Ellipsoid, PhantomSpec, SeptalSite, Vessel, VesselRole, AORTA, AORTA_POINTS, LPA,
    PULMONARY_TRUNK, RPA, SVC, TRUNK_POINTS,
};
use crate::error::{Error, Result};
use crate::volume::Label;

/// Length of the linear radius ramp on each side of a narrowing, mm.
pub(crate) const NARROW_RAMP: f64 = 3.0;

const ASC_TOP: usize = 1;
const ARCH_A: usize = 2;
const ARCH_B: usize = 3;
const DESC_TOP: usize = 4;
const PA_BIF: usize = 2;

/// Axis-aligned box in mm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    fn around(p: [f64; 3], r: [f64; 3]) -> Aabb {
        Aabb {
            min: [p[0] - r[0], p[1] - r[1], p[2] - r[2]],
            max: [p[0] + r[0], p[1] + r[1], p[2] + r[2]],
        }
    }

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: [0, 1, 2].map(|k| self.min[k].min(o.min[k])),
            max: [0, 1, 2].map(|k| self.max[k].max(o.max[k])),
        }
    }

    pub fn grown(self, t: f64) -> Aabb {
        Aabb {
            min: self.min.map(|v| v - t),
            max: self.max.map(|v| v + t),
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Narrowing {
    pub start: f64,
    pub end: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Tube {
    pub name: String,
    pub role: VesselRole,
    pub points: Vec<[f64; 3]>,
    pub radii: Vec<f64>,
    pub narrowings: Vec<Narrowing>,
    /// Arc intervals left out of the tube.
    pub gaps: Vec<[f64; 2]>,
}

impl Tube {
    fn from_vessel(v: &Vessel) -> Tube {
        Tube {
            name: v.name.clone(),
            role: v.role,
            points: v.points.clone(),
            radii: v.radii.clone(),
            narrowings: Vec::new(),
            gaps: Vec::new(),
        }
    }

    pub fn arcs(&self) -> Vec<f64> {
        arc_lengths(&self.points)
    }

    /// Radius multiplier at arc length `s`.
    pub fn scale_at(&self, s: f64) -> f64 {
        let mut m = 1.0f64;
        for n in &self.narrowings {
            let f = if s >= n.start && s <= n.end {
                n.ratio
            } else if s < n.start && s > n.start - NARROW_RAMP {
                n.ratio + (1.0 - n.ratio) * (n.start - s) / NARROW_RAMP
            } else if s > n.end && s < n.end + NARROW_RAMP {
                n.ratio + (1.0 - n.ratio) * (s - n.end) / NARROW_RAMP
            } else {
                1.0
            };
            m = m.min(f);
        }
        m
    }

    pub fn in_gap(&self, s: f64) -> bool {
        self.gaps.iter().any(|g| s >= g[0] && s <= g[1])
    }

    fn bbox(&self) -> Aabb {
        self.bbox_between(0.0, f64::INFINITY)
    }

    /// Box of the tube portion with arc length in `lo..=hi`.
    fn bbox_between(&self, lo: f64, hi: f64) -> Aabb {
        let arcs = self.arcs();
        let mut b: Option<Aabb> = None;
        let mut add = |p: [f64; 3], r: f64| {
            let a = Aabb::around(p, [r; 3]);
            b = Some(b.map_or(a, |x| x.union(a)));
        };
        for k in 0..self.points.len() {
            if arcs[k] >= lo && arcs[k] <= hi {
                add(self.points[k], self.radii[k]);
            }
        }
        for s in [lo, hi] {
            if s.is_finite() && s <= *arcs.last().unwrap() {
                let (p, r) = self.at_arc(s);
                add(p, r);
            }
        }
        b.unwrap_or_else(|| Aabb::around(self.points[0], [0.0; 3]))
    }

    /// Centerline point and radius at arc length `s`, clamped to the ends.
    pub fn at_arc(&self, s: f64) -> ([f64; 3], f64) {
        let arcs = self.arcs();
        let n = self.points.len();
        for k in 0..n - 1 {
            if s <= arcs[k + 1] || k == n - 2 {
                let len = arcs[k + 1] - arcs[k];
                let t = if len > 0.0 { ((s - arcs[k]) / len).clamp(0.0, 1.0) } else { 0.0 };
                return (
                    lerp(self.points[k], self.points[k + 1], t),
                    self.radii[k] + t * (self.radii[k + 1] - self.radii[k]),
                );
            }
        }
        (self.points[0], self.radii[0])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Hole {
    /// y and z of the hole axis, which runs along x.
    pub yz: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Scene {
    /// LV, RV, LA, RA.
    pub chambers: [Ellipsoid; 4],
    pub septum: [f64; 2],
    pub myo_thickness: f64,
    pub init_length: f64,
    pub tubes: Vec<Tube>,
    pub holes: Vec<Hole>,
    pub blobs: Vec<(Ellipsoid, Label)>,
    pub swap_ventricles: bool,
}

impl Scene {
    pub fn septum_mid(&self) -> f64 {
        0.5 * (self.septum[0] + self.septum[1])
    }

    fn tube(&self, name: &str) -> Result<&Tube> {
        self.tubes
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::InvalidSpec(format!("defect needs vessel {name:?}")))
    }

    fn tube_mut(&mut self, name: &str) -> Result<&mut Tube> {
        self.tubes
            .iter_mut()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::InvalidSpec(format!("defect needs vessel {name:?}")))
    }

    fn remove(&mut self, name: &str) -> Result<Tube> {
        let k = self
            .tubes
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| Error::InvalidSpec(format!("defect needs vessel {name:?}")))?;
        Ok(self.tubes.remove(k))
    }

    fn aorta(&self) -> Result<&Tube> {
        let t = self.tube(AORTA)?;
        if t.points.len() != AORTA_POINTS {
            return Err(Error::InvalidSpec(format!(
                "aorta needs {AORTA_POINTS} control points"
            )));
        }
        Ok(t)
    }

    fn trunk(&self) -> Result<&Tube> {
        let t = self.tube(PULMONARY_TRUNK)?;
        if t.points.len() != TRUNK_POINTS {
            return Err(Error::InvalidSpec(format!(
                "pulmonary trunk needs {TRUNK_POINTS} control points"
            )));
        }
        Ok(t)
    }

    fn add(&mut self, name: &str, role: VesselRole, points: Vec<[f64; 3]>, radii: Vec<f64>) {
        self.tubes.push(Tube {
            name: name.to_string(),
            role,
            points,
            radii,
            narrowings: Vec::new(),
            gaps: Vec::new(),
        });
    }
}

pub(crate) fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|k| a[k] + t * (b[k] - a[k]))
}

fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn arc_lengths(points: &[[f64; 3]]) -> Vec<f64> {
    let mut arcs = vec![0.0; points.len()];
    for k in 1..points.len() {
        let d = (0..3)
            .map(|j| (points[k][j] - points[k - 1][j]).powi(2))
            .sum::<f64>()
            .sqrt();
        arcs[k] = arcs[k - 1] + d;
    }
    arcs
}

/// Applies the defect list to the spec's anatomy. Structural rewrites run
/// before arc-based edits; user narrowing arcs refer to the undeformed aorta
/// and follow the ascending-top landmark when the root moves.
pub(crate) fn build(spec: &PhantomSpec) -> Result<Scene> {
    let ch = &spec.chambers;
    let mut sc = Scene {
        chambers: [ch.lv.clone(), ch.rv.clone(), ch.la.clone(), ch.ra.clone()],
        septum: spec.septum,
        myo_thickness: spec.myo_thickness,
        init_length: spec.init_length,
        tubes: spec.vessels.iter().map(Tube::from_vessel).collect(),
        holes: Vec::new(),
        blobs: Vec::new(),
        swap_ventricles: false,
    };
    let base_asc_arc = sc.tube(AORTA).ok().map(|t| t.arcs()[ASC_TOP.min(t.points.len() - 1)]);
    let mid = sc.septum_mid();
    let [lv, rv, la, ra] = sc.chambers.clone();

    for d in &spec.defects {
        match *d {
            Defect::SeptalHole { site, diameter } => {
                let (a, b) = match site {
                    SeptalSite::Atrial => (&la, &ra),
                    SeptalSite::Ventricular => (&lv, &rv),
                };
                let y = 0.5 * (a.center[1] + b.center[1]);
                let z = match site {
                    SeptalSite::Atrial => 0.5 * (a.center[2] + b.center[2]),
                    SeptalSite::Ventricular => a.center[2].min(b.center[2]) - 4.0,
                };
                sc.holes.push(Hole {
                    yz: [y, z],
                    radius: 0.5 * diameter,
                });
            }
            Defect::ReversedOrigins => sc.swap_ventricles = true,
            Defect::RvOriginBoth => {
                let ao = sc.tube_mut(AORTA)?;
                ao.points[0] = add3(rv.center, [0.0, 8.0, 8.0]);
            }
            Defect::OverridingAorta => {
                let root = [mid, 0.5 * (lv.center[1] + rv.center[1]) - 1.0, lv.center[2] + 6.0];
                let ao = sc.tube_mut(AORTA)?;
                ao.points[0] = root;
                ao.radii[0] = 7.0;
                ao.radii[ASC_TOP] = ao.radii[ASC_TOP].max(6.5);
            }
            Defect::CommonTrunk => {
                sc.remove(PULMONARY_TRUNK)?;
                let ao = sc.tube_mut(AORTA)?;
                ao.radii[0] = 7.5;
                ao.radii[ASC_TOP] = 7.5;
                let origin = lerp(ao.points[0], ao.points[ASC_TOP], 0.75);
                sc.tube_mut(LPA)?.points[0] = origin;
                sc.tube_mut(RPA)?.points[0] = origin;
            }
            Defect::AbsentPaTrunk => {
                let bif = sc.trunk()?.points[PA_BIF];
                sc.remove(PULMONARY_TRUNK)?;
                for name in [LPA, RPA] {
                    let t = sc.tube_mut(name)?;
                    t.radii.iter_mut().for_each(|r| *r *= 0.55);
                }
                let ao = sc.aorta()?;
                let from = add3(lerp(ao.points[ARCH_A], ao.points[ARCH_B], 0.3), [0.0, 0.0, -5.0]);
                sc.add("collateral", VesselRole::Artery, vec![from, bif], vec![2.5, 2.5]);
            }
            Defect::ExtraDuct => {
                let ao = sc.aorta()?;
                let from = add3(lerp(ao.points[ARCH_A], ao.points[ARCH_B], 0.6), [0.0, 0.0, -5.0]);
                let lpa = sc.tube(LPA)?;
                let to = add3(lerp(lpa.points[0], lpa.points[1], 0.9), [0.0, 0.0, 3.0]);
                sc.add("duct", VesselRole::Artery, vec![from, to], vec![3.0, 3.0]);
            }
            Defect::DoubleArch => {
                let ao = sc.aorta()?;
                let (top, desc) = (ao.points[ASC_TOP], ao.points[DESC_TOP]);
                let r = ao.radii[DESC_TOP];
                sc.add(
                    "right_arch",
                    VesselRole::Artery,
                    vec![
                        top,
                        add3(top, [-14.0, 20.0, 10.0]),
                        add3(desc, [-16.0, -12.0, 6.0]),
                        desc,
                    ],
                    vec![r; 4],
                );
            }
            Defect::ExtraSvc => {
                let svc = sc.tube(SVC)?;
                let r = svc.radii[0] * 0.9;
                let top = svc.points[svc.points.len() - 1][2];
                let base = add3(ra.center, [-11.0, -2.0, 4.0]);
                let end = [base[0] - 2.0, base[1] - 2.0, top];
                sc.add("left_svc", VesselRole::Vein, vec![base, end], vec![r, r]);
            }
            Defect::LaSplit => {
                sc.blobs.push((
                    Ellipsoid {
                        center: add3(la.center, [24.0, 14.0, -16.0]),
                        radii: [6.5; 3],
                    },
                    Label::LA,
                ));
            }
            Defect::PaSlingCourse => {
                let rpa = sc.tube(RPA)?;
                let origin = lerp(rpa.points[0], rpa.points[1], 0.5);
                let end = *sc.tube(LPA)?.points.last().unwrap();
                let r = sc.tube(LPA)?.radii[0];
                let lpa = sc.tube_mut(LPA)?;
                lpa.points = vec![
                    origin,
                    add3(origin, [-8.0, 21.0, 2.0]),
                    add3(origin, [2.0, 39.0, 2.0]),
                    add3(origin, [32.0, 36.0, 2.0]),
                    add3(origin, [54.0, 32.0, 2.0]),
                    add3(end, [0.0, 4.0, 0.0]),
                ];
                lpa.radii = vec![r; 6];
            }
            Defect::NarrowSegment { .. } | Defect::ArchInterruption => {}
        }
    }

    for d in &spec.defects {
        match *d {
            Defect::NarrowSegment { start, end, ratio } => {
                let ao = sc.aorta()?;
                let shift = ao.arcs()[ASC_TOP] - base_asc_arc.unwrap_or(0.0);
                let total = *ao.arcs().last().unwrap();
                if end + shift > total {
                    return Err(Error::InvalidSpec(format!(
                        "narrow segment ends at {end} mm beyond the aorta ({total:.1} mm)"
                    )));
                }
                sc.tube_mut(AORTA)?.narrowings.push(Narrowing {
                    start: start + shift,
                    end: end + shift,
                    ratio,
                });
            }
            Defect::ArchInterruption => {
                let ao = sc.aorta()?;
                let arcs = ao.arcs();
                let gap = [arcs[ARCH_B] + 3.0, arcs[ARCH_B] + 25.0];
                let (join, _) = ao.at_arc(arcs[ARCH_B] + 29.5);
                let lpa = sc.tube(LPA)?;
                let from = lerp(lpa.points[1], lpa.points[2.min(lpa.points.len() - 1)], 0.25);
                sc.tube_mut(AORTA)?.gaps.push(gap);
                sc.add("arterial_duct", VesselRole::Artery, vec![from, join], vec![4.0, 4.0]);
            }
            _ => {}
        }
    }
    Ok(sc)
}

/// Box holding every voxel that can differ between two scenes of the same
/// spec with and without defects, grown by the myocardial shell thickness and
/// one voxel of slack by the caller.
pub(crate) fn changed_region(base: &Scene, with: &Scene, myo: f64) -> Option<Aabb> {
    let mut region: Option<Aabb> = None;
    let mut add = |b: Aabb| region = Some(region.map_or(b, |r| r.union(b)));

    for t in &with.tubes {
        match base.tubes.iter().find(|b| b.name == t.name) {
            None => add(t.bbox()),
            Some(b) if b == t => {}
            Some(b) => {
                let geometry_same = b.role == t.role
                    && b.points == t.points
                    && b.radii == t.radii
                    && b.gaps == t.gaps;
                if geometry_same {
                    for n in &t.narrowings {
                        add(t.bbox_between(n.start - NARROW_RAMP, n.end + NARROW_RAMP));
                    }
                } else {
                    add(b.bbox());
                    add(t.bbox());
                }
            }
        }
    }
    for b in &base.tubes {
        if !with.tubes.iter().any(|t| t.name == b.name) {
            add(b.bbox());
        }
    }
    for h in &with.holes {
        let r = h.radius;
        add(Aabb {
            min: [with.septum[0] - 2.0, h.yz[0] - r, h.yz[1] - r],
            max: [with.septum[1] + 2.0, h.yz[0] + r, h.yz[1] + r],
        });
    }
    for (e, _) in &with.blobs {
        add(Aabb::around(e.center, e.radii));
    }
    if with.swap_ventricles {
        for e in &with.chambers[..2] {
            add(Aabb::around(e.center, e.radii));
        }
    }
    region.map(|r| r.grown(myo))
}
