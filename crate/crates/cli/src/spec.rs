//! Sweep configuration: raw flag/file input, merging and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use turbo_hybrid::hybrid::default_eta;
use turbo_hybrid::{CrcMode, Detection, HybridConfig, OsdSchedule, SimScheme, StopRule, TurboCrcCode};

use crate::CliError;

pub const DEFAULT_K: usize = 40;
pub const DEFAULT_SCHEME: &str = "STD";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionKind {
    Crc,
    Ned,
    Genie,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrcModeArg {
    Aided,
    Filter,
}

/// Eb/N0 values in dB. Parsed from "0,0.5,1" on the command line; a config
/// file may give either that string or an array of numbers.
#[derive(Clone, Default, PartialEq, Serialize)]
pub struct EbN0List(pub Vec<f64>);

impl fmt::Debug for EbN0List {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        write!(f, "\"{}\"", parts.join(","))
    }
}

impl FromStr for EbN0List {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                let v: f64 = t.parse().map_err(|_| format!("'{t}' is not a number"))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("'{t}' is not finite"))
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(EbN0List)
    }
}

impl<'de> Deserialize<'de> for EbN0List {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            List(Vec<f64>),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::List(v) => Ok(EbN0List(v)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Every setting as given by the user, before defaults. The same struct is
/// filled from command-line flags and from a TOML config file (keys spelled
/// like the flags).
#[derive(Clone, Debug, Default, PartialEq, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RawSpec {
    /// Code block length (an LTE turbo interleaver size)
    #[arg(long)]
    pub k: Option<usize>,
    /// Scheme name, e.g. "STD", "STD+OSD(2,1,0)+CRC-aided", "MLD"
    #[arg(long)]
    pub scheme: Option<String>,
    /// Comma-separated Eb/N0 values in dB
    #[arg(long, value_parser = parse_ebn0)]
    pub ebn0: Option<EbN0List>,
    /// Frame budget per point
    #[arg(long)]
    pub frames_max: Option<u64>,
    /// Frame errors after which a point stops
    #[arg(long)]
    pub errors_min: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// NED threshold
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub osd_order: Option<usize>,
    /// Iteration after which OSD first runs
    #[arg(long)]
    pub osd_start_iter: Option<usize>,
    /// LLR accumulation factor
    #[arg(long)]
    pub accum_alpha: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub detection: Option<DetectionKind>,
    #[arg(long, value_enum)]
    pub crc_mode: Option<CrcModeArg>,
    /// Output file (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_ebn0(s: &str) -> Result<EbN0List, String> {
    s.parse()
}

fn show<T: fmt::Debug>(v: &T) -> String {
    format!("{v:?}")
}

impl RawSpec {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text).map_err(|e| CliError::ConfigFile { path: path.to_path_buf(), reason: e.to_string() })
    }

    /// Overlays `file` on `self` (the flags). Settings that appear in both
    /// with different values take the file's value; each such conflict is
    /// reported in the returned warnings.
    pub fn merge_file(self, file: RawSpec) -> (RawSpec, Vec<String>) {
        let mut warnings = Vec::new();
        macro_rules! pick {
            ($($field:ident => $flag:literal),* $(,)?) => {
                RawSpec { $($field: match (self.$field, file.$field) {
                    (Some(a), Some(b)) => {
                        if a != b {
                            warnings.push(format!(
                                "config file overrides --{}: using {} instead of {}",
                                $flag, show(&b), show(&a)
                            ));
                        }
                        Some(b)
                    }
                    (a, b) => b.or(a),
                }),* }
            };
        }
        let merged = pick! {
            k => "k", scheme => "scheme", ebn0 => "ebn0", frames_max => "frames-max",
            errors_min => "errors-min", seed => "seed", eta => "eta", osd_order => "osd-order",
            osd_start_iter => "osd-start-iter", accum_alpha => "accum-alpha",
            max_iters => "max-iters", detection => "detection", crc_mode => "crc-mode",
            out => "out", format => "format",
        };
        (merged, warnings)
    }

    /// Applies defaults and validates.
    pub fn resolve(&self) -> Result<SweepSpec, CliError> {
        let k = self.k.unwrap_or(DEFAULT_K);
        TurboCrcCode::new(k).map_err(|e| spec_err("k", e))?;

        let name = self.scheme.as_deref().unwrap_or(DEFAULT_SCHEME);
        let mut scheme = SimScheme::parse_for_k(name, k).map_err(|e| spec_err("scheme", e))?;
        match &mut scheme {
            SimScheme::Hybrid(cfg) => self.apply_overrides(cfg, k)?,
            SimScheme::Mld => {
                let given = [
                    ("eta", self.eta.is_some()),
                    ("osd-order", self.osd_order.is_some()),
                    ("osd-start-iter", self.osd_start_iter.is_some()),
                    ("accum-alpha", self.accum_alpha.is_some()),
                    ("max-iters", self.max_iters.is_some()),
                    ("detection", self.detection.is_some()),
                    ("crc-mode", self.crc_mode.is_some()),
                ];
                if let Some((field, _)) = given.iter().find(|(_, set)| *set) {
                    return Err(CliError::spec(field, "not applicable to the MLD scheme"));
                }
            }
        }

        let ebn0_db = match &self.ebn0 {
            Some(list) => list.0.clone(),
            None => return Err(CliError::spec("ebn0", "at least an empty list is required")),
        };
        if let Some(v) = ebn0_db.iter().find(|v| !v.is_finite()) {
            return Err(CliError::spec("ebn0", format!("{v} is not finite")));
        }

        let defaults = StopRule::default();
        let stop = StopRule {
            max_frames: self.frames_max.unwrap_or(defaults.max_frames),
            min_frame_errors: self.errors_min.unwrap_or(defaults.min_frame_errors),
        };
        if stop.max_frames == 0 {
            return Err(CliError::spec("frames-max", "must be at least 1"));
        }
        if stop.min_frame_errors == 0 {
            return Err(CliError::spec("errors-min", "must be at least 1"));
        }

        Ok(SweepSpec {
            k,
            scheme_name: scheme.to_string(),
            scheme,
            ebn0_db,
            stop,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            format: self.format.unwrap_or_default(),
            out: self.out.clone(),
        })
    }

    fn apply_overrides(&self, cfg: &mut HybridConfig, k: usize) -> Result<(), CliError> {
        if let Some(t) = self.max_iters {
            if t == 0 {
                return Err(CliError::spec("max-iters", "must be at least 1"));
            }
            cfg.t_max = t;
        }
        let touches_osd = self.osd_order.is_some()
            || self.osd_start_iter.is_some()
            || self.accum_alpha.is_some()
            || self.crc_mode.is_some();
        if touches_osd {
            let osd = cfg.osd.get_or_insert(OsdSchedule {
                order: 2,
                start_iteration: 1,
                accum_alpha: 0.0,
                crc_mode: CrcMode::Filter,
            });
            if let Some(n) = self.osd_order {
                osd.order = n;
            }
            if let Some(f) = self.osd_start_iter {
                osd.start_iteration = f;
            }
            if let Some(a) = self.accum_alpha {
                osd.accum_alpha = a;
            }
            if let Some(mode) = self.crc_mode {
                osd.crc_mode = match mode {
                    CrcModeArg::Aided => CrcMode::Aided,
                    CrcModeArg::Filter => CrcMode::Filter,
                };
            }
        }

        let current_eta = match cfg.detection {
            Detection::Ned { eta } => eta,
            _ => default_eta(k),
        };
        match self.detection {
            Some(DetectionKind::Crc) => cfg.detection = Detection::Crc,
            Some(DetectionKind::Ned) => cfg.detection = Detection::Ned { eta: current_eta },
            Some(DetectionKind::Genie) => cfg.detection = Detection::Genie,
            None => {
                // The CRC cannot both steer OSD and detect errors.
                let aided = cfg.osd.is_some_and(|o| o.crc_mode == CrcMode::Aided);
                if aided && cfg.detection == Detection::Crc {
                    cfg.detection = Detection::Ned { eta: current_eta };
                }
            }
        }
        if let Some(eta) = self.eta {
            if !(0.0..=1.0).contains(&eta) {
                return Err(CliError::spec("eta", format!("{eta} is outside [0, 1]")));
            }
            match &mut cfg.detection {
                Detection::Ned { eta: e } => *e = eta,
                _ => return Err(CliError::spec("eta", "only used with ned detection")),
            }
        }
        cfg.validate().map_err(|e| spec_err("scheme", e))
    }
}

fn spec_err(field: &'static str, e: turbo_hybrid::Error) -> CliError {
    CliError::spec(field, e.to_string())
}

/// A validated sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub k: usize,
    /// Canonical name of the resolved scheme.
    pub scheme_name: String,
    pub scheme: SimScheme,
    pub ebn0_db: Vec<f64>,
    pub stop: StopRule,
    pub seed: u64,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Parses flags plus an optional config file into a spec. Returns the
/// conflict warnings alongside.
pub fn parse_spec(flags: RawSpec, config: Option<RawSpec>) -> Result<(SweepSpec, Vec<String>), CliError> {
    let (raw, warnings) = match config {
        Some(file) => flags.merge_file(file),
        None => (flags, Vec::new()),
    };
    Ok((raw.resolve()?, warnings))
}
