//! Pipeline configuration knobs, their `key=value` text form and stable
//! fingerprints.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::volume::Connectivity;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Points per sampled skeleton.
    pub sample_count: usize,
    /// Minimum template EMD above which a case is reported Uncertain.
    pub emd_gate: f64,
    /// A sample is narrow when its radius is below this fraction of the
    /// thick vessel on both sides.
    pub narrow_ratio: f64,
    pub erosion_iters: usize,
    pub min_island_voxels: usize,
    /// Narrow runs shorter than this (mm) indicate coarctation.
    pub ca_max_len: f64,
    /// Narrow runs at least this long (mm) indicate arch hypoplasia.
    pub aah_min_len: f64,
    /// Samples per flank when measuring the surrounding vessel radius.
    pub flank_window: usize,
    /// Terminal skeleton branches shorter than this multiple of the junction
    /// radius are pruned; 0 disables pruning.
    pub spur_prune_factor: f64,
    pub component_connectivity: Connectivity,
    pub skeleton_connectivity: Connectivity,
    /// Scale radii by the same factor as positions during normalization.
    pub normalize_radii: bool,
    /// Height (mm) above the atrial centre beyond which venous skeleton
    /// branches count as superior inflows.
    pub svc_min_rise: f64,
    /// Require a narrow run before reporting TOF.
    pub tof_requires_narrowing: bool,
    /// Require the pulmonary side to be thin before reporting PuA.
    pub pua_requires_thin_pa: bool,
    /// PA/AO median radius ratio below which the pulmonary side counts as thin.
    pub pua_thin_ratio: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sample_count: 128,
            emd_gate: 0.01,
            narrow_ratio: 0.5,
            erosion_iters: 1,
            min_island_voxels: 50,
            ca_max_len: 15.0,
            aah_min_len: 25.0,
            flank_window: 5,
            spur_prune_factor: 2.0,
            component_connectivity: Connectivity::Six,
            skeleton_connectivity: Connectivity::TwentySix,
            normalize_radii: true,
            svc_min_rise: 15.0,
            tof_requires_narrowing: false,
            pua_requires_thin_pa: false,
            pua_thin_ratio: 0.6,
        }
    }
}

/// Environment variable consulted when no `--config` is given.
pub const CONFIG_ENV: &str = "CHD_PIPELINE_CONFIG";

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse()
        .map_err(|e| Error::Config(format!("{key}: {e} ({v:?})")))
}

fn parse_conn(key: &str, v: &str) -> Result<Connectivity> {
    let n: u32 = parse_num(key, v)?;
    Connectivity::from_count(n).ok_or_else(|| Error::Config(format!("{key}: must be 6 or 26")))
}

impl PipelineConfig {
    /// Canonical `key=value` rendering, one knob per line in fixed order.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("sample_count", self.sample_count.to_string()),
            ("emd_gate", self.emd_gate.to_string()),
            ("narrow_ratio", self.narrow_ratio.to_string()),
            ("erosion_iters", self.erosion_iters.to_string()),
            ("min_island_voxels", self.min_island_voxels.to_string()),
            ("ca_max_len", self.ca_max_len.to_string()),
            ("aah_min_len", self.aah_min_len.to_string()),
            ("flank_window", self.flank_window.to_string()),
            ("spur_prune_factor", self.spur_prune_factor.to_string()),
            (
                "component_connectivity",
                self.component_connectivity.count().to_string(),
            ),
            (
                "skeleton_connectivity",
                self.skeleton_connectivity.count().to_string(),
            ),
            ("normalize_radii", self.normalize_radii.to_string()),
            ("svc_min_rise", self.svc_min_rise.to_string()),
            (
                "tof_requires_narrowing",
                self.tof_requires_narrowing.to_string(),
            ),
            ("pua_requires_thin_pa", self.pua_requires_thin_pa.to_string()),
            ("pua_thin_ratio", self.pua_thin_ratio.to_string()),
        ]
    }

    /// Parses `key=value` text on top of the defaults. Blank lines and `#`
    /// comments are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "sample_count" => cfg.sample_count = parse_num(k, v)?,
                "emd_gate" => cfg.emd_gate = parse_num(k, v)?,
                "narrow_ratio" => cfg.narrow_ratio = parse_num(k, v)?,
                "erosion_iters" => cfg.erosion_iters = parse_num(k, v)?,
                "min_island_voxels" => cfg.min_island_voxels = parse_num(k, v)?,
                "ca_max_len" => cfg.ca_max_len = parse_num(k, v)?,
                "aah_min_len" => cfg.aah_min_len = parse_num(k, v)?,
                "flank_window" => cfg.flank_window = parse_num(k, v)?,
                "spur_prune_factor" => cfg.spur_prune_factor = parse_num(k, v)?,
                "component_connectivity" => cfg.component_connectivity = parse_conn(k, v)?,
                "skeleton_connectivity" => cfg.skeleton_connectivity = parse_conn(k, v)?,
                "normalize_radii" => cfg.normalize_radii = parse_bool(k, v)?,
                "svc_min_rise" => cfg.svc_min_rise = parse_num(k, v)?,
                "tof_requires_narrowing" => cfg.tof_requires_narrowing = parse_bool(k, v)?,
                "pua_requires_thin_pa" => cfg.pua_requires_thin_pa = parse_bool(k, v)?,
                "pua_thin_ratio" => cfg.pua_thin_ratio = parse_num(k, v)?,
                other => return Err(Error::Config(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(2..=4096).contains(&self.sample_count) {
            return bad(format!("sample_count {} outside 2..=4096", self.sample_count));
        }
        if self.emd_gate.is_nan() || self.emd_gate < 0.0 {
            return bad(format!("emd_gate {} must be >= 0", self.emd_gate));
        }
        if !(self.narrow_ratio > 0.0 && self.narrow_ratio < 1.0) {
            return bad(format!("narrow_ratio {} outside (0, 1)", self.narrow_ratio));
        }
        if self.erosion_iters > 10 {
            return bad(format!("erosion_iters {} > 10", self.erosion_iters));
        }
        if !(1..=64).contains(&self.flank_window) {
            return bad(format!("flank_window {} outside 1..=64", self.flank_window));
        }
        if !(0.0..=10.0).contains(&self.spur_prune_factor) {
            return bad(format!(
                "spur_prune_factor {} outside 0..=10",
                self.spur_prune_factor
            ));
        }
        if !(self.ca_max_len > 0.0 && self.ca_max_len.is_finite()) {
            return bad(format!("ca_max_len {} must be > 0", self.ca_max_len));
        }
        if !(self.aah_min_len >= self.ca_max_len && self.aah_min_len.is_finite()) {
            return bad(format!(
                "aah_min_len {} must be >= ca_max_len {}",
                self.aah_min_len, self.ca_max_len
            ));
        }
        if !(self.svc_min_rise >= 0.0 && self.svc_min_rise.is_finite()) {
            return bad(format!("svc_min_rise {} must be >= 0", self.svc_min_rise));
        }
        if !(self.pua_thin_ratio > 0.0 && self.pua_thin_ratio.is_finite()) {
            return bad(format!("pua_thin_ratio {} must be > 0", self.pua_thin_ratio));
        }
        Ok(())
    }

    /// Hash of every knob.
    pub fn fingerprint(&self) -> String {
        digest(&self.render())
    }

    /// Hash of the knobs that shape a sampled skeleton. Templates and cases
    /// must agree on this one.
    pub fn shape_fingerprint(&self) -> String {
        let keys = [
            "sample_count",
            "erosion_iters",
            "min_island_voxels",
            "component_connectivity",
            "skeleton_connectivity",
            "normalize_radii",
            "spur_prune_factor",
        ];
        let text: String = self
            .entries()
            .into_iter()
            .filter(|(k, _)| keys.contains(k))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        digest(&text)
    }
}

fn digest(text: &str) -> String {
    let hash = Sha256::digest(text.as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
