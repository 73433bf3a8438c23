//! Template library of reference skeletons and nearest-template matching.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::emd;
use crate::chd::{CHDType, LabelSet};
use crate::error::{Error, Result};
use crate::skeleton::record::{read_record, write_record};
use crate::skeleton::SampledSkeleton;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShapeCategory {
    CAT,
    DAA,
    PuA,
    PAS,
    IAA,
    Normal,
}

impl ShapeCategory {
    pub const ALL: [ShapeCategory; 6] = [
        ShapeCategory::CAT,
        ShapeCategory::DAA,
        ShapeCategory::PuA,
        ShapeCategory::PAS,
        ShapeCategory::IAA,
        ShapeCategory::Normal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeCategory::CAT => "CAT",
            ShapeCategory::DAA => "DAA",
            ShapeCategory::PuA => "PuA",
            ShapeCategory::PAS => "PAS",
            ShapeCategory::IAA => "IAA",
            ShapeCategory::Normal => "Normal",
        }
    }

    /// Template category implied by a truth label set: its single
    /// shape-defining label, Normal for `{Normal}`, otherwise `None`.
    pub fn from_truth(truth: &LabelSet) -> Option<ShapeCategory> {
        let shape: Vec<ShapeCategory> = truth
            .iter()
            .filter_map(|t| match t {
                CHDType::CAT => Some(ShapeCategory::CAT),
                CHDType::DAA => Some(ShapeCategory::DAA),
                CHDType::PuA => Some(ShapeCategory::PuA),
                CHDType::PAS => Some(ShapeCategory::PAS),
                CHDType::IAA => Some(ShapeCategory::IAA),
                _ => None,
            })
            .collect();
        match shape.as_slice() {
            [c] => Some(*c),
            [] if truth.len() == 1 && truth.contains(&CHDType::Normal) => Some(ShapeCategory::Normal),
            _ => None,
        }
    }
}

impl fmt::Display for ShapeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeCategory::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Library(format!("unknown shape category {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Template {
    pub id: String,
    pub category: ShapeCategory,
    pub skeleton: SampledSkeleton,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateLibrary {
    /// Sorted by id.
    templates: Vec<Template>,
    fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateDistance {
    pub id: String,
    pub category: ShapeCategory,
    pub emd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeMatch {
    pub best_category: ShapeCategory,
    pub best_template_id: String,
    pub min_emd: f64,
    /// One entry per template, in template-id order.
    pub per_template_emd: Vec<TemplateDistance>,
}

/// Assembles a library; template ids are the skeletons' case ids.
pub fn build_library(cases: Vec<(SampledSkeleton, ShapeCategory)>) -> Result<TemplateLibrary> {
    let Some(first) = cases.first() else {
        return Err(Error::Library("no templates given".into()));
    };
    let fingerprint = first.0.fingerprint.clone();
    let mut seen = BTreeSet::new();
    let mut templates = Vec::with_capacity(cases.len());
    for (skeleton, category) in cases {
        if skeleton.fingerprint != fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: fingerprint,
                found: skeleton.fingerprint,
            });
        }
        if !seen.insert(skeleton.case_id.clone()) {
            return Err(Error::Library(format!(
                "duplicate template id {:?}",
                skeleton.case_id
            )));
        }
        if skeleton.points.is_empty() {
            return Err(Error::Library(format!(
                "template {:?} has no points",
                skeleton.case_id
            )));
        }
        templates.push(Template {
            id: skeleton.case_id.clone(),
            category,
            skeleton,
        });
    }
    templates.sort_by(|a, b| a.id.cmp(&b.id));
    let lib = TemplateLibrary {
        templates,
        fingerprint,
    };
    for w in lib.coverage_warnings() {
        log::warn!("{w}");
    }
    Ok(lib)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    fingerprint: String,
    templates: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    id: String,
    category: ShapeCategory,
    file: String,
}

const MANIFEST: &str = "manifest.json";

impl TemplateLibrary {
    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn category_counts(&self) -> BTreeMap<ShapeCategory, usize> {
        let mut m = BTreeMap::new();
        for t in &self.templates {
            *m.entry(t.category).or_insert(0) += 1;
        }
        m
    }

    /// Categories that are missing or have a single template.
    pub fn coverage_warnings(&self) -> Vec<String> {
        let counts = self.category_counts();
        ShapeCategory::ALL
            .iter()
            .filter_map(|c| match counts.get(c).copied().unwrap_or(0) {
                0 => Some(format!("template library has no {c} template")),
                1 => Some(format!("template library has a single {c} template")),
                _ => None,
            })
            .collect()
    }

    /// Writes `manifest.json` plus one record per template.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.templates.len());
        for t in &self.templates {
            let file = format!("{}.skel", sanitize(&t.id));
            write_record(&dir.join(&file), &t.skeleton, Some(t.category.name()))?;
            entries.push(ManifestEntry {
                id: t.id.clone(),
                category: t.category,
                file,
            });
        }
        let manifest = Manifest {
            fingerprint: self.fingerprint.clone(),
            templates: entries,
        };
        let json = serde_json::to_string_pretty(&manifest)?;
        crate::volume::io::write_atomic(&dir.join(MANIFEST), json.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        let mut cases = Vec::with_capacity(manifest.templates.len());
        for e in manifest.templates {
            let (mut skel, _) = read_record(&dir.join(&e.file))?;
            if skel.fingerprint != manifest.fingerprint {
                return Err(Error::FingerprintMismatch {
                    expected: manifest.fingerprint,
                    found: skel.fingerprint,
                });
            }
            skel.case_id = e.id;
            cases.push((skel, e.category));
        }
        let lib = build_library(cases)?;
        if lib.fingerprint != manifest.fingerprint {
            return Err(Error::Library("manifest fingerprint disagrees with records".into()));
        }
        Ok(lib)
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// EMD against every template; the lowest wins, ties going to the lower id.
pub fn match_templates(s: &SampledSkeleton, lib: &TemplateLibrary) -> Result<ShapeMatch> {
    if s.fingerprint != lib.fingerprint {
        return Err(Error::FingerprintMismatch {
            expected: lib.fingerprint.clone(),
            found: s.fingerprint.clone(),
        });
    }
    let per: Vec<TemplateDistance> = lib
        .templates
        .par_iter()
        .map(|t| {
            Ok(TemplateDistance {
                id: t.id.clone(),
                category: t.category,
                emd: emd(s, &t.skeleton)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, d) in per.iter().enumerate() {
        if d.emd < per[best].emd {
            best = k;
        }
    }
    Ok(ShapeMatch {
        best_category: per[best].category,
        best_template_id: per[best].id.clone(),
        min_emd: per[best].emd,
        per_template_emd: per,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::SamplePoint;

    #[test]
    fn category_from_truth() {
        use CHDType::*;
        let c = |v: &[CHDType]| ShapeCategory::from_truth(&v.iter().copied().collect());
        assert_eq!(c(&[Normal]), Some(ShapeCategory::Normal));
        assert_eq!(c(&[DAA]), Some(ShapeCategory::DAA));
        assert_eq!(c(&[DAA, DSVC]), Some(ShapeCategory::DAA));
        assert_eq!(c(&[ASD]), None);
        assert_eq!(c(&[CAT, PuA]), None);
    }

    fn skel(id: &str, x: f64) -> SampledSkeleton {
        SampledSkeleton {
            case_id: id.into(),
            fingerprint: "fp".into(),
            points: vec![
                SamplePoint { pos: [-x, 0.0, 0.0], r: 0.1, w: 0.5 },
                SamplePoint { pos: [x, 0.0, 0.0], r: 0.1, w: 0.5 },
            ],
        }
    }

    fn six() -> TemplateLibrary {
        let cases = ShapeCategory::ALL
            .iter()
            .enumerate()
            .map(|(k, &c)| (skel(&format!("t{k}"), 1.0 + k as f64 * 0.1), c))
            .collect();
        build_library(cases).unwrap()
    }

    #[test]
    fn exact_template_matches_with_zero() {
        let lib = six();
        let m = match_templates(&skel("q", 1.2), &lib).unwrap();
        assert_eq!(m.min_emd, 0.0);
        assert_eq!(m.best_template_id, "t2");
        assert_eq!(m.best_category, ShapeCategory::PuA);
        assert_eq!(m.per_template_emd.len(), 6);
    }

    #[test]
    fn single_template_always_wins() {
        let lib = build_library(vec![(skel("only", 1.0), ShapeCategory::DAA)]).unwrap();
        let m = match_templates(&skel("q", 9.0), &lib).unwrap();
        assert_eq!(m.best_template_id, "only");
        assert!((m.min_emd - 8.0).abs() < 1e-12);
        assert_eq!(lib.coverage_warnings().len(), 6);
    }

    #[test]
    fn ties_go_to_lower_id() {
        let lib = build_library(vec![
            (skel("b", 1.0), ShapeCategory::CAT),
            (skel("a", 1.0), ShapeCategory::IAA),
        ])
        .unwrap();
        let m = match_templates(&skel("q", 1.0), &lib).unwrap();
        assert_eq!(m.best_template_id, "a");
    }

    #[test]
    fn build_errors() {
        assert!(build_library(vec![]).is_err());
        assert!(build_library(vec![
            (skel("x", 1.0), ShapeCategory::CAT),
            (skel("x", 2.0), ShapeCategory::DAA),
        ])
        .is_err());
        let mut other = skel("y", 1.0);
        other.fingerprint = "zz".into();
        assert!(matches!(
            build_library(vec![(skel("x", 1.0), ShapeCategory::CAT), (other, ShapeCategory::CAT)]),
            Err(Error::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn fingerprint_mismatch_is_rejected() {
        let mut q = skel("q", 1.0);
        q.fingerprint = "other".into();
        assert!(matches!(
            match_templates(&q, &six()),
            Err(Error::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let lib = six();
        lib.save(dir.path()).unwrap();
        assert_eq!(TemplateLibrary::load(dir.path()).unwrap(), lib);
    }
}
