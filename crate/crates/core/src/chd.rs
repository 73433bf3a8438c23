//! The 16 CHD types plus normal anatomy, and label sets over them.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declaration order is the reporting order of the confusion matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CHDType {
    ASD,
    AVSD,
    VSD,
    TOF,
    PDA,
    TGA,
    CA,
    IAA,
    PAS,
    DORV,
    CAT,
    DAA,
    APVC,
    AAH,
    PuA,
    DSVC,
    Normal,
}

impl CHDType {
    pub const ALL: [CHDType; 17] = [
        CHDType::ASD,
        CHDType::AVSD,
        CHDType::VSD,
        CHDType::TOF,
        CHDType::PDA,
        CHDType::TGA,
        CHDType::CA,
        CHDType::IAA,
        CHDType::PAS,
        CHDType::DORV,
        CHDType::CAT,
        CHDType::DAA,
        CHDType::APVC,
        CHDType::AAH,
        CHDType::PuA,
        CHDType::DSVC,
        CHDType::Normal,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            CHDType::ASD => "ASD",
            CHDType::AVSD => "AVSD",
            CHDType::VSD => "VSD",
            CHDType::TOF => "TOF",
            CHDType::PDA => "PDA",
            CHDType::TGA => "TGA",
            CHDType::CA => "CA",
            CHDType::IAA => "IAA",
            CHDType::PAS => "PAS",
            CHDType::DORV => "DORV",
            CHDType::CAT => "CAT",
            CHDType::DAA => "DAA",
            CHDType::APVC => "APVC",
            CHDType::AAH => "AAH",
            CHDType::PuA => "PuA",
            CHDType::DSVC => "DSVC",
            CHDType::Normal => "Normal",
        }
    }
}

impl fmt::Display for CHDType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CHDType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("N") {
            return Ok(CHDType::Normal);
        }
        CHDType::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownChdType(s.to_string()))
    }
}

pub type LabelSet = BTreeSet<CHDType>;

pub fn format_labels(set: &LabelSet) -> String {
    let names: Vec<&str> = set.iter().map(|c| c.name()).collect();
    format!("{{{}}}", names.join(", "))
}

pub const TRUTH_FILE: &str = "truth.json";

#[derive(Serialize, Deserialize)]
struct TruthRecord {
    labels: LabelSet,
}

/// Writes the ground-truth sidecar of a case directory.
pub fn write_truth(dir: &Path, labels: &LabelSet) -> Result<()> {
    let json = serde_json::to_string_pretty(&TruthRecord {
        labels: labels.clone(),
    })?;
    crate::volume::io::write_atomic(&dir.join(TRUTH_FILE), json.as_bytes())
}

pub fn read_truth(dir: &Path) -> Result<LabelSet> {
    let path = dir.join(TRUTH_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let rec: TruthRecord =
        serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    if rec.labels.is_empty() {
        return Err(Error::format(&path, "empty label set"));
    }
    Ok(rec.labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_classes_in_order() {
        assert_eq!(CHDType::ALL.len(), 17);
        for (k, c) in CHDType::ALL.iter().enumerate() {
            assert_eq!(c.index(), k);
            assert_eq!(c.name().parse::<CHDType>().unwrap(), *c);
        }
        assert_eq!("n".parse::<CHDType>().unwrap(), CHDType::Normal);
        assert!("XYZ".parse::<CHDType>().is_err());
    }

    #[test]
    fn truth_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let set: LabelSet = [CHDType::VSD, CHDType::ASD].into();
        write_truth(dir.path(), &set).unwrap();
        assert_eq!(read_truth(dir.path()).unwrap(), set);
        assert_eq!(format_labels(&set), "{ASD, VSD}");
    }
}
