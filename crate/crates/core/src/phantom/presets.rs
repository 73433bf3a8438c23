//! Reference anatomy, seeded jitter and one preset per class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    Chambers, Defect, Ellipsoid, PhantomSpec, SeptalSite, Vessel, VesselRole, AORTA, LPA,
    PULMONARY_TRUNK, RPA, SVC,
};
use crate::chd::CHDType;
use crate::error::{Error, Result};

/// Preset names, one per class, in class order.
pub const PRESETS: [&str; 17] = [
    "asd", "avsd", "vsd", "tof", "pda", "tga", "ca", "iaa", "pas", "dorv", "cat", "daa", "apvc",
    "aah", "pua", "dsvc", "normal",
];

const DIM: usize = 128;
const LOW_RES: usize = 4;

fn ell(c: [f64; 3], r: [f64; 3]) -> Ellipsoid {
    Ellipsoid {
        center: c,
        radii: r,
    }
}

fn vessel(name: &str, role: VesselRole, pts: &[([f64; 3], f64)]) -> Vessel {
    Vessel {
        name: name.to_string(),
        role,
        points: pts.iter().map(|p| p.0).collect(),
        radii: pts.iter().map(|p| p.1).collect(),
    }
}

/// Normal heart on a 128 mm cube at 1 mm spacing.
pub fn reference_spec() -> PhantomSpec {
    let bif = [52.0, 56.0, 86.0];
    PhantomSpec {
        id: "normal".into(),
        seed: 0,
        dims: [DIM; 3],
        spacing: [1.0; 3],
        low_res_factor: LOW_RES,
        septum: [62.0, 65.0],
        myo_thickness: 3.0,
        init_length: 22.0,
        chambers: Chambers {
            lv: ell([76.0, 56.0, 40.0], [15.0, 16.0, 20.0]),
            rv: ell([51.0, 52.0, 40.0], [15.0, 15.0, 18.0]),
            la: ell([76.0, 84.0, 72.0], [15.0, 11.0, 10.0]),
            ra: ell([51.0, 84.0, 72.0], [15.0, 11.0, 10.0]),
        },
        vessels: vec![
            vessel(
                AORTA,
                VesselRole::Aorta,
                &[
                    ([78.0, 48.0, 50.0], 6.0),
                    ([76.0, 46.0, 90.0], 6.0),
                    ([77.0, 60.0, 104.0], 5.5),
                    ([80.0, 82.0, 106.0], 5.5),
                    ([82.0, 104.0, 96.0], 5.0),
                    ([82.0, 108.0, 70.0], 5.0),
                    ([82.0, 108.0, 14.0], 5.0),
                ],
            ),
            vessel(
                PULMONARY_TRUNK,
                VesselRole::PulmonaryTrunk,
                &[([48.0, 44.0, 50.0], 5.5), ([50.0, 46.0, 70.0], 5.5), (bif, 5.0)],
            ),
            vessel(
                LPA,
                VesselRole::Artery,
                &[(bif, 4.5), ([80.0, 66.0, 88.0], 4.5), ([104.0, 72.0, 86.0], 4.0)],
            ),
            vessel(RPA, VesselRole::Artery, &[(bif, 4.5), ([24.0, 62.0, 86.0], 4.0)]),
            vessel(
                SVC,
                VesselRole::Vein,
                &[([51.0, 85.0, 76.0], 5.0), ([51.0, 85.0, 112.0], 5.0)],
            ),
        ],
        defects: Vec::new(),
    }
}

/// Seeded anatomical variation: a translation by whole low-resolution
/// blocks, a mild per-axis stretch about the grid center, per-vessel radius
/// scaling and small chamber radius changes. The septal wall keeps its width.
pub fn jitter(spec: &mut PhantomSpec, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = spec.low_res_factor as f64;
    let shift: [f64; 3] = [0, 1, 2].map(|k| rng.gen_range(-1i32..=1) as f64 * block * spec.spacing[k]);
    let stretch: [f64; 3] = [0; 3].map(|_| rng.gen_range(0.97..1.03));
    let center: [f64; 3] = [0, 1, 2].map(|k| 0.5 * spec.dims[k] as f64 * spec.spacing[k]);
    let map = |p: [f64; 3]| [0, 1, 2].map(|k| center[k] + (p[k] - center[k]) * stretch[k] + shift[k]);

    let mid = 0.5 * (spec.septum[0] + spec.septum[1]);
    let half = 0.5 * (spec.septum[1] - spec.septum[0]);
    let new_mid = map([mid, 0.0, 0.0])[0];
    spec.septum = [new_mid - half, new_mid + half];
    let ch = &mut spec.chambers;
    for e in [&mut ch.lv, &mut ch.rv, &mut ch.la, &mut ch.ra] {
        e.center = map(e.center);
        for k in 0..3 {
            e.radii[k] = e.radii[k] * stretch[k] + rng.gen_range(-0.5..0.5);
        }
    }
    for v in &mut spec.vessels {
        let s = rng.gen_range(0.96..1.04);
        v.points.iter_mut().for_each(|p| *p = map(*p));
        v.radii.iter_mut().for_each(|r| *r *= s);
    }
    spec.seed = seed;
}

fn aorta_arcs(spec: &PhantomSpec) -> Vec<f64> {
    super::scene::arc_lengths(&spec.vessel(AORTA).expect("reference aorta").points)
}

fn defects_for(t: CHDType, spec: &PhantomSpec) -> Vec<Defect> {
    let arcs = aorta_arcs(spec);
    let hole = |site, diameter| Defect::SeptalHole { site, diameter };
    match t {
        CHDType::ASD => vec![hole(SeptalSite::Atrial, 8.0)],
        CHDType::VSD => vec![hole(SeptalSite::Ventricular, 9.0)],
        CHDType::AVSD => vec![hole(SeptalSite::Atrial, 8.0), hole(SeptalSite::Ventricular, 9.0)],
        CHDType::TOF => vec![Defect::OverridingAorta],
        CHDType::PDA => vec![Defect::ExtraDuct],
        CHDType::TGA => vec![Defect::ReversedOrigins],
        CHDType::CA => vec![Defect::NarrowSegment {
            start: arcs[4] + 8.0,
            end: arcs[4] + 16.0,
            ratio: 0.4,
        }],
        CHDType::AAH => vec![Defect::NarrowSegment {
            start: arcs[2] + 3.0,
            end: arcs[2] + 37.0,
            ratio: 0.45,
        }],
        CHDType::IAA => vec![Defect::ArchInterruption],
        CHDType::PAS => vec![Defect::PaSlingCourse],
        CHDType::DORV => vec![Defect::RvOriginBoth],
        CHDType::CAT => vec![Defect::CommonTrunk],
        CHDType::DAA => vec![Defect::DoubleArch],
        CHDType::APVC => vec![Defect::LaSplit],
        CHDType::PuA => vec![Defect::AbsentPaTrunk],
        CHDType::DSVC => vec![Defect::ExtraSvc],
        CHDType::Normal => Vec::new(),
    }
}

/// Jittered phantom of one class.
pub fn preset_for(t: CHDType, seed: u64) -> PhantomSpec {
    let mut spec = reference_spec();
    jitter(&mut spec, seed);
    spec.defects = defects_for(t, &spec);
    spec.id = format!("{}-{seed:04}", PRESETS[t.index()]);
    spec
}

/// Jittered phantom by preset name (`"normal"`, `"asd"`, ...).
pub fn preset(name: &str, seed: u64) -> Result<PhantomSpec> {
    let k = PRESETS
        .iter()
        .position(|p| p.eq_ignore_ascii_case(name))
        .ok_or_else(|| {
            Error::InvalidSpec(format!(
                "unknown preset {name:?}; expected one of {}",
                PRESETS.join(", ")
            ))
        })?;
    Ok(preset_for(CHDType::ALL[k], seed))
}
