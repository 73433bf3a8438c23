use super::*;
use crate::connection::analyze_connections;
use crate::pipeline::analyze_case;
use crate::PipelineConfig;

fn without_defects(spec: &PhantomSpec) -> PhantomSpec {
    PhantomSpec {
        defects: Vec::new(),
        ..spec.clone()
    }
}

#[test]
fn normal_truth() {
    let spec = preset("normal", 1).unwrap();
    assert_eq!(spec.truth(), [CHDType::Normal].into());
}

#[test]
fn small_atrial_hole_is_asd() {
    let mut spec = reference_spec();
    spec.defects.push(Defect::SeptalHole {
        site: SeptalSite::Atrial,
        diameter: 4.0,
    });
    let (case, truth) = generate(&spec).unwrap();
    assert_eq!(truth, [CHDType::ASD].into());
    let conn = analyze_connections(&case, &PipelineConfig::default()).unwrap();
    assert!(conn.la_ra_connected);
    assert!(!conn.lv_rv_connected);
}

#[test]
fn both_holes_are_avsd_only() {
    let spec = preset("avsd", 2).unwrap();
    assert_eq!(spec.truth(), [CHDType::AVSD].into());
}

#[test]
fn every_preset_has_its_own_truth() {
    for (k, t) in CHDType::ALL.into_iter().enumerate() {
        let spec = preset_for(t, 7);
        assert_eq!(spec.truth(), [t].into(), "{}", PRESETS[k]);
        assert_eq!(preset(PRESETS[k], 7).unwrap(), spec);
    }
    assert!(preset("nope", 1).is_err());
}

#[test]
fn narrow_presets_fall_on_their_side_of_the_split() {
    for (t, name) in [(CHDType::CA, "ca"), (CHDType::AAH, "aah")] {
        let spec = preset(name, 3).unwrap();
        let Some(Defect::NarrowSegment { start, end, .. }) = spec.defects.first() else {
            panic!("{name} has no narrow segment");
        };
        assert_eq!(spec.defects[0].truth(), Some(t));
        assert_eq!(end - start < CA_AAH_SPLIT_MM, t == CHDType::CA);
    }
}

#[test]
fn jittered_presets_stay_valid() {
    for seed in 0..60 {
        for name in PRESETS {
            let spec = preset(name, seed).unwrap();
            spec.validate().unwrap_or_else(|e| panic!("{name} seed {seed}: {e}"));
        }
    }
}

#[test]
fn same_seed_is_bit_identical() {
    let a = render(&preset("daa", 5).unwrap()).unwrap();
    let b = render(&preset("daa", 5).unwrap()).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.case.blood_pool(), b.case.blood_pool());
    assert_eq!(a.case.substructures(), b.case.substructures());
    let c = render(&preset("daa", 6).unwrap()).unwrap();
    assert_ne!(a.labels, c.labels);
}

#[test]
fn defect_injection_is_local() {
    for name in PRESETS.iter().filter(|&&n| n != "normal") {
        let spec = preset(name, 4).unwrap();
        let region = spec.defect_region().unwrap().expect("defects present");
        let region = region.grown(spec.spacing.iter().cloned().fold(0.0, f64::max));
        let with = render(&spec).unwrap();
        let base = render(&without_defects(&spec)).unwrap();
        let grid = *with.labels.grid();
        let mut outside = 0;
        for i in 0..grid.len() {
            if region.contains(grid.center_mm(grid.coords(i))) {
                continue;
            }
            outside += 1;
            assert_eq!(with.labels.at(i), base.labels.at(i), "{name} voxel {i}");
            assert_eq!(
                with.case.blood_pool().at(i),
                base.case.blood_pool().at(i),
                "{name} voxel {i}"
            );
        }
        assert!(outside > 0, "{name} defect region covers the grid");

        let low = with.case.substructures().grid();
        let f = spec.low_res_factor;
        for i in 0..low.len() {
            let [bx, by, bz] = low.coords(i);
            let touched = (0..f * f * f).any(|k| {
                let c = [bx * f + k % f, by * f + (k / f) % f, bz * f + k / (f * f)];
                region.contains(grid.center_mm(c))
            });
            if !touched {
                assert_eq!(
                    with.case.substructures().at(i),
                    base.case.substructures().at(i),
                    "{name} block {i}"
                );
            }
        }
    }
}

#[test]
fn double_arch_skeleton_has_cycle() {
    let (case, truth) = generate(&preset("daa", 1).unwrap()).unwrap();
    assert_eq!(truth, [CHDType::DAA].into());
    let a = analyze_case(&case, &PipelineConfig::default()).unwrap();
    assert!(a.skeleton.has_cycle);
    let (case, _) = generate(&preset("normal", 1).unwrap()).unwrap();
    let a = analyze_case(&case, &PipelineConfig::default()).unwrap();
    assert!(!a.skeleton.has_cycle);
}

#[test]
fn presets_produce_expected_connections() {
    let cfg = PipelineConfig::default();
    for name in PRESETS {
        for seed in [1, 2] {
            let spec = preset(name, seed).unwrap();
            let (case, _) = generate(&spec).unwrap();
            let c = analyze_connections(&case, &cfg).unwrap();
            let e = spec.expected_connections();
            let got = (c.la_ra_connected, c.lv_rv_connected, c.ao_origin, c.pa_origin);
            let want = (e.la_ra_connected, e.lv_rv_connected, e.ao_origin, e.pa_origin);
            assert_eq!(got, want, "{name} seed {seed}");
            assert!(c.missing_chambers.is_empty(), "{name} seed {seed}");
        }
    }
}

#[test]
fn json_round_trip() {
    let spec = preset("aah", 9).unwrap();
    let back = PhantomSpec::from_json(&spec.to_json()).unwrap();
    assert_eq!(back, spec);
    assert!(PhantomSpec::from_json("{\"id\": 3}").is_err());
}

#[test]
fn incompatible_defects_are_rejected() {
    let mut spec = reference_spec();
    spec.defects = vec![Defect::RvOriginBoth, Defect::OverridingAorta];
    assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
    spec.defects = vec![Defect::DoubleArch, Defect::DoubleArch];
    assert!(spec.validate().is_err());
    spec.defects = vec![Defect::DoubleArch, Defect::ExtraSvc];
    spec.validate().unwrap();
    assert_eq!(spec.truth(), [CHDType::DAA, CHDType::DSVC].into());
}

#[test]
fn geometry_outside_the_grid_is_rejected() {
    let mut spec = reference_spec();
    spec.vessels[0].points[0] = [200.0, 10.0, 10.0];
    assert!(spec.validate().is_err());
    let mut spec = reference_spec();
    spec.dims = [130, 128, 128];
    assert!(spec.validate().is_err());
}
