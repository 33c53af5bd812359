//! Run configuration, loadable from a TOML file and overridable by flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use dct_recover::lp::SolverSettings;
use dct_recover::mask::{most_significant_mask, EraseMask, FillPolicy};
use dct_recover::model::Formulation;
use serde::{Deserialize, Serialize};

/// Which coefficients to erase: `dc`, `top:U`, or a `k:l,k:l` list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaskSpec {
    DcOnly,
    Top(usize),
    List(String),
}

impl MaskSpec {
    pub fn build(&self, block_size: usize) -> dct_recover::Result<EraseMask> {
        match self {
            MaskSpec::DcOnly => EraseMask::dc_only(block_size),
            MaskSpec::Top(u) => most_significant_mask(*u, block_size),
            MaskSpec::List(text) => EraseMask::parse_list(block_size, text),
        }
    }
}

impl fmt::Display for MaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskSpec::DcOnly => f.write_str("dc"),
            MaskSpec::Top(u) => write!(f, "top:{u}"),
            MaskSpec::List(text) => f.write_str(text),
        }
    }
}

impl FromStr for MaskSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let s = s.trim();
        if s == "dc" {
            return Ok(MaskSpec::DcOnly);
        }
        if let Some(u) = s.strip_prefix("top:") {
            return Ok(MaskSpec::Top(u.parse().with_context(|| format!("bad count in {s:?}"))?));
        }
        if s.contains(':') {
            return Ok(MaskSpec::List(s.to_string()));
        }
        bail!("mask spec {s:?}: expected `dc`, `top:U` or a `k:l,k:l` list")
    }
}

impl Serialize for MaskSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MaskSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRange {
    pub from: usize,
    pub to: usize,
}

impl Default for SweepRange {
    fn default() -> Self {
        SweepRange { from: 1, to: 15 }
    }
}

impl SweepRange {
    pub fn values(&self) -> std::ops::RangeInclusive<usize> {
        self.from..=self.to
    }
}

impl FromStr for SweepRange {
    type Err = anyhow::Error;

    /// `A..B` (inclusive) or a single `U`.
    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (a, b) = s.split_once("..").unwrap_or((s, s));
        let from = a.trim().parse().with_context(|| format!("bad range {s:?}"))?;
        let to = b.trim_start_matches('=').trim().parse().with_context(|| format!("bad range {s:?}"))?;
        if from > to {
            bail!("empty range {s:?}");
        }
        Ok(SweepRange { from, to })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub block_size: usize,
    pub mask: MaskSpec,
    pub fill: FillPolicy,
    pub formulation: Formulation,
    pub solver: SolverSettings,
    pub output_dir: PathBuf,
    pub images: Vec<PathBuf>,
    pub sweep: SweepRange,
    /// 0 means one worker per core
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            block_size: 8,
            mask: MaskSpec::DcOnly,
            fill: FillPolicy::Midpoint,
            formulation: Formulation::default(),
            solver: SolverSettings::default(),
            output_dir: PathBuf::from("."),
            images: Vec::new(),
            sweep: SweepRange::default(),
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.block_size < 2 {
            bail!("block size {} is below 2", self.block_size);
        }
        self.solver.validate().map_err(anyhow::Error::msg)
    }

    pub fn validate_sweep(&self) -> anyhow::Result<()> {
        self.validate()?;
        let limit = self.block_size * self.block_size - 1;
        if self.sweep.from < 1 || self.sweep.to > limit {
            bail!("sweep range {}..{} outside 1..{limit}", self.sweep.from, self.sweep.to);
        }
        Ok(())
    }
}
