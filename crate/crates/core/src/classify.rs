//! Final determination: selective gates followed by independent rules whose
//! labels are unioned.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chd::{format_labels, CHDType, LabelSet};
use crate::config::PipelineConfig;
use crate::connection::{ConnectionFeatures, Origin};
use crate::emd::{ShapeCategory, ShapeMatch};
use crate::skeleton::{InflowCount, SkeletonFeatures};
use crate::volume::Label;

/// Why a case was deferred.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateReason {
    MissingChamber { chambers: Vec<Label> },
    EmdAboveGate { min_emd: f64, threshold: f64 },
    NoSkeleton,
    ShapeRuleDisagreement { best_category: ShapeCategory },
}

impl fmt::Display for GateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateReason::MissingChamber { chambers } => {
                let names: Vec<&str> = chambers.iter().map(|c| c.name()).collect();
                write!(f, "missing chamber: {}", names.join(", "))
            }
            GateReason::EmdAboveGate { min_emd, threshold } => {
                write!(f, "min EMD {min_emd:.4} above gate {threshold}")
            }
            GateReason::NoSkeleton => f.write_str("no vessel skeleton"),
            GateReason::ShapeRuleDisagreement { best_category } => write!(
                f,
                "no rule fired but the best template is {best_category}"
            ),
        }
    }
}

/// One fired rule and the feature values that triggered it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleFiring {
    pub label: CHDType,
    pub rule: String,
    pub evidence: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "labels", rename_all = "snake_case")]
pub enum Outcome {
    Uncertain,
    Labels(LabelSet),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub case_id: String,
    #[serde(flatten)]
    pub outcome: Outcome,
    /// Non-empty exactly when the outcome is Uncertain.
    pub gates: Vec<GateReason>,
    pub fired: Vec<RuleFiring>,
    pub best_category: Option<ShapeCategory>,
    pub min_emd: Option<f64>,
}

impl Diagnosis {
    pub fn is_uncertain(&self) -> bool {
        self.outcome == Outcome::Uncertain
    }

    /// Predicted labels; empty when Uncertain.
    pub fn labels(&self) -> LabelSet {
        match &self.outcome {
            Outcome::Uncertain => LabelSet::new(),
            Outcome::Labels(l) => l.clone(),
        }
    }

    /// `Uncertain` or the label set, e.g. `{ASD, PDA}`.
    pub fn summary(&self) -> String {
        match &self.outcome {
            Outcome::Uncertain => "Uncertain".to_string(),
            Outcome::Labels(l) => format_labels(l),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagnosis serializes")
    }
}

/// Everything the rules look at for one case.
#[derive(Clone, Copy, Debug)]
pub struct Evidence<'a> {
    pub conn: &'a ConnectionFeatures,
    pub skel: &'a SkeletonFeatures,
    /// `None` when the case has no vessel skeleton to match.
    pub shape: Option<&'a ShapeMatch>,
    pub la_islands: usize,
    pub inflows: &'a InflowCount,
}

struct Rules {
    fired: Vec<RuleFiring>,
}

impl Rules {
    fn fire(&mut self, label: CHDType, rule: &str, evidence: String) {
        self.fired.push(RuleFiring {
            label,
            rule: rule.to_string(),
            evidence,
        });
    }
}

fn shape_label(c: ShapeCategory) -> Option<CHDType> {
    match c {
        ShapeCategory::CAT => Some(CHDType::CAT),
        ShapeCategory::DAA => Some(CHDType::DAA),
        ShapeCategory::PuA => Some(CHDType::PuA),
        ShapeCategory::PAS => Some(CHDType::PAS),
        ShapeCategory::IAA => Some(CHDType::IAA),
        ShapeCategory::Normal => None,
    }
}

fn gate(case_id: &str, ev: &Evidence, reason: GateReason) -> Diagnosis {
    Diagnosis {
        case_id: case_id.to_string(),
        outcome: Outcome::Uncertain,
        gates: vec![reason],
        fired: Vec::new(),
        best_category: ev.shape.map(|s| s.best_category),
        min_emd: ev.shape.map(|s| s.min_emd),
    }
}

pub fn classify(case_id: &str, ev: &Evidence, cfg: &PipelineConfig) -> Diagnosis {
    let conn = ev.conn;
    let skel = ev.skel;
    if !conn.missing_chambers.is_empty() {
        let chambers = conn.missing_chambers.clone();
        return gate(case_id, ev, GateReason::MissingChamber { chambers });
    }
    let Some(shape) = ev.shape else {
        return gate(case_id, ev, GateReason::NoSkeleton);
    };
    if shape.min_emd > cfg.emd_gate {
        let reason = GateReason::EmdAboveGate {
            min_emd: shape.min_emd,
            threshold: cfg.emd_gate,
        };
        return gate(case_id, ev, reason);
    }

    let mut r = Rules { fired: Vec::new() };
    let septal = format!(
        "la_ra_connected={} lv_rv_connected={}",
        conn.la_ra_connected, conn.lv_rv_connected
    );
    match (conn.la_ra_connected, conn.lv_rv_connected) {
        (true, true) => r.fire(CHDType::AVSD, "atrial and ventricular septal connection", septal),
        (true, false) => r.fire(CHDType::ASD, "atrial septal connection", septal),
        (false, true) => r.fire(CHDType::VSD, "ventricular septal connection", septal),
        (false, false) => {}
    }

    let origins = format!("ao_origin={} pa_origin={}", conn.ao_origin, conn.pa_origin);
    if conn.ao_origin == Origin::RV && conn.pa_origin == Origin::RV {
        r.fire(CHDType::DORV, "both great arteries on RV", origins.clone());
    }
    if conn.ao_origin == Origin::RV && conn.pa_origin == Origin::LV {
        r.fire(CHDType::TGA, "reversed great-artery origins", origins.clone());
    }
    if conn.ao_origin == Origin::Both && conn.lv_rv_connected {
        let narrow = !skel.narrow_runs.is_empty();
        if !cfg.tof_requires_narrowing || narrow {
            r.fire(
                CHDType::TOF,
                "aorta overriding connected ventricles",
                format!("{origins} lv_rv_connected=true narrow_runs={}", skel.narrow_runs.len()),
            );
        }
    }

    let best = shape.best_category;
    let shape_ev = format!("best_category={best} min_emd={:.4}", shape.min_emd);
    match best {
        ShapeCategory::DAA if !skel.has_cycle => {}
        ShapeCategory::DAA => r.fire(
            CHDType::DAA,
            "template match with skeleton cycle",
            format!("{shape_ev} cycle_rank={}", skel.cycle_rank),
        ),
        ShapeCategory::PuA => {
            let ratio = skel.pa_ao_radius_ratio;
            let thin = ratio.is_some_and(|x| x < cfg.pua_thin_ratio);
            if !cfg.pua_requires_thin_pa || thin {
                let shown = ratio.map_or("none".to_string(), |x| format!("{x:.3}"));
                r.fire(
                    CHDType::PuA,
                    "template match",
                    format!("{shape_ev} pa_ao_radius_ratio={shown}"),
                );
            }
        }
        c => {
            if let Some(label) = shape_label(c) {
                r.fire(label, "template match", shape_ev.clone());
            }
        }
    }

    for run in &skel.narrow_runs {
        let ev = format!(
            "narrow run {:.1} mm on branch {} ratio {:.2}",
            run.length, run.branch, run.ratio
        );
        if run.length < cfg.ca_max_len {
            r.fire(CHDType::CA, "short narrow run", ev);
        } else if run.length >= cfg.aah_min_len {
            r.fire(CHDType::AAH, "long narrow run", ev);
        }
    }

    if skel.great_artery_bridge && best != ShapeCategory::DAA {
        r.fire(
            CHDType::PDA,
            "skeleton path between aortic and pulmonary initial parts",
            format!("great_artery_bridge=true {shape_ev}"),
        );
    }
    if ev.inflows.count >= 2 {
        r.fire(
            CHDType::DSVC,
            "two superior venous inflows",
            format!(
                "inflows={} above z={:.1} mm",
                ev.inflows.count, ev.inflows.threshold_z
            ),
        );
    }
    if ev.la_islands >= 2 {
        r.fire(
            CHDType::APVC,
            "split left atrium",
            format!("la_islands={}", ev.la_islands),
        );
    }

    let mut labels: LabelSet = r.fired.iter().map(|f| f.label).collect();
    let mut gates = Vec::new();
    if labels.is_empty() {
        if best == ShapeCategory::Normal {
            labels.insert(CHDType::Normal);
            r.fire(CHDType::Normal, "no rule fired, normal template", shape_ev);
        } else {
            gates.push(GateReason::ShapeRuleDisagreement {
                best_category: best,
            });
        }
    }
    Diagnosis {
        case_id: case_id.to_string(),
        outcome: if gates.is_empty() {
            Outcome::Labels(labels)
        } else {
            Outcome::Uncertain
        },
        gates,
        fired: r.fired,
        best_category: Some(best),
        min_emd: Some(shape.min_emd),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emd::TemplateDistance;
    use crate::skeleton::NarrowRun;

    struct Case {
        conn: ConnectionFeatures,
        skel: SkeletonFeatures,
        shape: Option<ShapeMatch>,
        la_islands: usize,
        inflows: InflowCount,
    }

    impl Case {
        fn normal() -> Self {
            Case {
                conn: ConnectionFeatures {
                    la_ra_connected: false,
                    lv_rv_connected: false,
                    ao_origin: Origin::LV,
                    pa_origin: Origin::RV,
                    n_initial_parts: 2,
                    missing_chambers: Vec::new(),
                },
                skel: SkeletonFeatures {
                    has_cycle: false,
                    cycle_rank: 0,
                    narrow_runs: Vec::new(),
                    max_narrow_run_length: 0.0,
                    great_artery_bridge: false,
                    pa_ao_radius_ratio: Some(0.9),
                },
                shape: Some(matched(ShapeCategory::Normal, 0.004)),
                la_islands: 1,
                inflows: InflowCount {
                    reference_z: 70.0,
                    threshold_z: 85.0,
                    count: 1,
                },
            }
        }

        fn run(&self, cfg: &PipelineConfig) -> Diagnosis {
            let ev = Evidence {
                conn: &self.conn,
                skel: &self.skel,
                shape: self.shape.as_ref(),
                la_islands: self.la_islands,
                inflows: &self.inflows,
            };
            classify("t", &ev, cfg)
        }

        fn labels(&self) -> LabelSet {
            self.run(&PipelineConfig::default()).labels()
        }
    }

    fn matched(c: ShapeCategory, emd: f64) -> ShapeMatch {
        ShapeMatch {
            best_category: c,
            best_template_id: "t0".into(),
            min_emd: emd,
            per_template_emd: vec![TemplateDistance {
                id: "t0".into(),
                category: c,
                emd,
            }],
        }
    }

    fn run(length: f64) -> NarrowRun {
        NarrowRun {
            branch: 0,
            start: 10.0,
            end: 10.0 + length,
            length,
            min_r: 1.0,
            ratio: 0.3,
        }
    }

    fn set(v: &[CHDType]) -> LabelSet {
        v.iter().copied().collect()
    }

    #[test]
    fn normal_features_give_normal() {
        let d = Case::normal().run(&PipelineConfig::default());
        assert_eq!(d.labels(), set(&[CHDType::Normal]));
        assert!(d.gates.is_empty());
        assert_eq!(d.summary(), "{Normal}");
    }

    #[test]
    fn atrial_connection_is_asd() {
        let mut c = Case::normal();
        c.conn.la_ra_connected = true;
        let d = c.run(&PipelineConfig::default());
        assert_eq!(d.labels(), set(&[CHDType::ASD]));
        assert!(d.fired[0].evidence.contains("la_ra_connected=true"));
    }

    #[test]
    fn both_septal_connections_are_avsd_only() {
        let mut c = Case::normal();
        c.conn.la_ra_connected = true;
        c.conn.lv_rv_connected = true;
        assert_eq!(c.labels(), set(&[CHDType::AVSD]));
    }

    #[test]
    fn emd_above_gate_is_uncertain() {
        let mut c = Case::normal();
        c.shape = Some(matched(ShapeCategory::Normal, 0.02));
        c.conn.la_ra_connected = true;
        let d = c.run(&PipelineConfig::default());
        assert!(d.is_uncertain());
        assert!(d.fired.is_empty());
        assert!(matches!(d.gates[0], GateReason::EmdAboveGate { .. }));
        let open = PipelineConfig {
            emd_gate: f64::INFINITY,
            ..PipelineConfig::default()
        };
        assert_eq!(c.run(&open).labels(), set(&[CHDType::ASD]));
    }

    #[test]
    fn missing_chamber_is_uncertain_first() {
        let mut c = Case::normal();
        c.conn.missing_chambers = vec![Label::LA];
        c.shape = Some(matched(ShapeCategory::Normal, 0.5));
        let d = c.run(&PipelineConfig::default());
        assert!(d.is_uncertain());
        assert_eq!(d.gates.len(), 1);
        assert!(d.gates[0].to_string().starts_with("missing chamber"));
    }

    #[test]
    fn no_skeleton_is_uncertain() {
        let mut c = Case::normal();
        c.shape = None;
        let d = c.run(&PipelineConfig::default());
        assert_eq!(d.gates, vec![GateReason::NoSkeleton]);
    }

    #[test]
    fn origin_rules() {
        let mut c = Case::normal();
        c.conn.ao_origin = Origin::RV;
        assert_eq!(c.labels(), set(&[CHDType::DORV]));
        c.conn.pa_origin = Origin::LV;
        assert_eq!(c.labels(), set(&[CHDType::TGA]));
        c.conn.ao_origin = Origin::Both;
        c.conn.pa_origin = Origin::RV;
        c.conn.lv_rv_connected = true;
        assert_eq!(c.labels(), set(&[CHDType::VSD, CHDType::TOF]));
        let strict = PipelineConfig {
            tof_requires_narrowing: true,
            ..PipelineConfig::default()
        };
        assert_eq!(c.run(&strict).labels(), set(&[CHDType::VSD]));
        c.skel.narrow_runs.push(run(8.0));
        assert!(c.run(&strict).labels().contains(&CHDType::TOF));
    }

    #[test]
    fn shape_rules() {
        let mut c = Case::normal();
        c.shape = Some(matched(ShapeCategory::DAA, 0.001));
        // DAA without a cycle disagrees with every rule
        let d = c.run(&PipelineConfig::default());
        assert!(d.is_uncertain());
        assert!(matches!(d.gates[0], GateReason::ShapeRuleDisagreement { .. }));
        c.skel.has_cycle = true;
        c.skel.cycle_rank = 1;
        c.skel.great_artery_bridge = true;
        assert_eq!(c.labels(), set(&[CHDType::DAA]));
        for (cat, t) in [
            (ShapeCategory::CAT, CHDType::CAT),
            (ShapeCategory::PAS, CHDType::PAS),
            (ShapeCategory::IAA, CHDType::IAA),
            (ShapeCategory::PuA, CHDType::PuA),
        ] {
            let mut c = Case::normal();
            c.shape = Some(matched(cat, 0.001));
            assert_eq!(c.labels(), set(&[t]));
        }
    }

    #[test]
    fn pua_corroboration_is_optional() {
        let mut c = Case::normal();
        c.shape = Some(matched(ShapeCategory::PuA, 0.001));
        let strict = PipelineConfig {
            pua_requires_thin_pa: true,
            ..PipelineConfig::default()
        };
        assert!(c.run(&strict).is_uncertain());
        c.skel.pa_ao_radius_ratio = Some(0.3);
        assert_eq!(c.run(&strict).labels(), set(&[CHDType::PuA]));
    }

    #[test]
    fn narrow_run_rules() {
        let mut c = Case::normal();
        c.skel.narrow_runs = vec![run(8.0)];
        assert_eq!(c.labels(), set(&[CHDType::CA]));
        c.skel.narrow_runs = vec![run(30.0)];
        assert_eq!(c.labels(), set(&[CHDType::AAH]));
        // between the two thresholds nothing fires
        c.skel.narrow_runs = vec![run(20.0)];
        assert_eq!(c.labels(), set(&[CHDType::Normal]));
    }

    #[test]
    fn bridge_inflow_and_island_rules() {
        let mut c = Case::normal();
        c.skel.great_artery_bridge = true;
        assert_eq!(c.labels(), set(&[CHDType::PDA]));
        let mut c = Case::normal();
        c.inflows.count = 2;
        assert_eq!(c.labels(), set(&[CHDType::DSVC]));
        let mut c = Case::normal();
        c.la_islands = 2;
        c.conn.la_ra_connected = true;
        assert_eq!(c.labels(), set(&[CHDType::ASD, CHDType::APVC]));
    }

    #[test]
    fn every_label_has_an_audit_entry() {
        let mut c = Case::normal();
        c.conn.lv_rv_connected = true;
        c.skel.narrow_runs = vec![run(5.0)];
        c.inflows.count = 3;
        let d = c.run(&PipelineConfig::default());
        for l in d.labels() {
            assert!(d.fired.iter().any(|f| f.label == l && !f.evidence.is_empty()));
        }
        assert!(!d.labels().contains(&CHDType::Normal));
    }

    #[test]
    fn json_record() {
        let mut c = Case::normal();
        c.conn.la_ra_connected = true;
        let d = c.run(&PipelineConfig::default());
        let v: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(v["case_id"], "t");
        assert_eq!(v["outcome"], "labels");
        assert_eq!(v["labels"][0], "ASD");
        let back: Diagnosis = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(back, d);
        c.conn.missing_chambers = vec![Label::RV];
        let u: serde_json::Value = serde_json::from_str(&c.run(&PipelineConfig::default()).to_json()).unwrap();
        assert_eq!(u["outcome"], "uncertain");
        assert_eq!(u["gates"][0]["gate"], "missing_chamber");
    }
}
