//! Hybrid schedule of standard turbo decoding and OSD.
//!
//! Turbo iterations run first. Once iteration `f` is reached, OSD runs after
//! every iteration on the accumulated a-posteriori LLRs and the best
//! candidate over all invocations is kept. If the CRC never passes on the
//! turbo hard decisions, the kept candidate is accepted or rejected by the
//! configured detection rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::maxlogmap::{LlrFrame, TurboDecoder, DEFAULT_EXTRINSIC_SCALE, DEFAULT_MAX_ITERATIONS};
use crate::osd::{osd_decode, OsdInput, OsdResult, MAX_ORDER};
use crate::turbo::TurboCrcCode;
use crate::{hard_decision, Error, Result};

pub use crate::osd::CrcMode;

/// NED threshold used for `k = 40`.
pub const ETA_K40: f64 = 0.2;
/// NED threshold used for `k = 96` and larger blocks.
pub const ETA_K96: f64 = 0.15;

/// Default NED threshold for a block size.
pub fn default_eta(k: usize) -> f64 {
    if k <= 40 {
        ETA_K40
    } else {
        ETA_K96
    }
}

/// How a frame whose turbo decoding failed is finally judged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Detection {
    /// Declare an error unless a CRC-passing word was found.
    Crc,
    /// Declare an error when the NED of the best candidate exceeds `eta`.
    Ned { eta: f64 },
    /// Compare against the transmitted block.
    Genie,
}

/// When and how OSD runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsdSchedule {
    pub order: usize,
    /// First iteration (1-based) after which OSD runs.
    pub start_iteration: usize,
    pub accum_alpha: f64,
    pub crc_mode: CrcMode,
}

/// Complete decoder configuration. `osd: None` is plain turbo decoding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub t_max: usize,
    pub extrinsic_scale: f64,
    pub osd: Option<OsdSchedule>,
    pub detection: Detection,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self::std()
    }
}

impl HybridConfig {
    /// Plain Max-Log-MAP turbo decoding.
    pub fn std() -> Self {
        Self {
            t_max: DEFAULT_MAX_ITERATIONS,
            extrinsic_scale: DEFAULT_EXTRINSIC_SCALE,
            osd: None,
            detection: Detection::Crc,
        }
    }

    pub fn with_osd(
        order: usize,
        start_iteration: usize,
        accum_alpha: f64,
        crc_mode: CrcMode,
        detection: Detection,
    ) -> Self {
        Self { osd: Some(OsdSchedule { order, start_iteration, accum_alpha, crc_mode }), detection, ..Self::std() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.t_max == 0 {
            return bad("max-iters must be at least 1".into());
        }
        if !self.extrinsic_scale.is_finite() || self.extrinsic_scale <= 0.0 {
            return bad(format!("extrinsic scale {} must be positive", self.extrinsic_scale));
        }
        if let Detection::Ned { eta } = self.detection {
            if !(0.0..=1.0).contains(&eta) {
                return bad(format!("eta {eta} must lie in [0, 1]"));
            }
        }
        match (&self.osd, self.detection) {
            (None, Detection::Crc) => Ok(()),
            (None, _) => bad("turbo decoding without OSD only supports CRC detection".into()),
            (Some(osd), detection) => {
                if osd.order > MAX_ORDER {
                    return bad(format!("osd-order {} exceeds {MAX_ORDER}", osd.order));
                }
                if osd.start_iteration == 0 || osd.start_iteration > self.t_max {
                    return bad(format!("osd-start-iter {} must lie in 1..={}", osd.start_iteration, self.t_max));
                }
                if !osd.accum_alpha.is_finite() || osd.accum_alpha < 0.0 {
                    return bad(format!("accum-alpha {} must be non-negative", osd.accum_alpha));
                }
                match (osd.crc_mode, detection) {
                    (CrcMode::None, _) => bad("hybrid decoding needs crc mode aided or filter".into()),
                    (CrcMode::Aided, Detection::Crc) => {
                        bad("CRC-aided OSD consumes the CRC; use NED or genie detection".into())
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    /// Parses a scheme name, filling unnamed parameters with the defaults for `k`.
    pub fn parse_for_k(name: &str, k: usize) -> Result<Self> {
        parse_scheme(name, default_eta(k))
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' | ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::InvalidConfig(format!("cannot parse {what} from '{s}'")))
}

fn parse_scheme(name: &str, eta_default: f64) -> Result<HybridConfig> {
    let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    let unknown = || Error::InvalidConfig(format!("unknown scheme '{name}'"));
    let mut tokens = split_top_level(&compact).into_iter();
    if !tokens.next().is_some_and(|t| t.eq_ignore_ascii_case("STD")) {
        return Err(unknown());
    }
    let mut cfg = HybridConfig::std();
    let mut osd: Option<(usize, String, f64)> = None;
    let mut aided = false;
    let mut detection: Option<Detection> = None;
    let mut set_detection = |d: Detection| match detection.replace(d) {
        None => Ok(()),
        Some(_) => Err(Error::InvalidConfig(format!("scheme '{name}' names more than one detection rule"))),
    };
    for tok in tokens {
        let upper = tok.to_ascii_uppercase();
        if let Some(args) = upper.strip_prefix("OSD(").and_then(|r| r.strip_suffix(')')) {
            let parts: Vec<&str> = args.split(',').collect();
            let [n, f, a] = parts.as_slice() else {
                return Err(Error::InvalidConfig(format!("OSD needs (N,f,alpha) in '{name}'")));
            };
            osd = Some((parse_num(n, "OSD order")?, f.to_string(), parse_num(a, "accum alpha")?));
        } else if upper == "CRC-AIDED" || upper == "CRCAIDED" {
            aided = true;
        } else if upper == "CRC" {
            set_detection(Detection::Crc)?;
        } else if upper == "GENIE" {
            set_detection(Detection::Genie)?;
        } else if upper == "NED" {
            set_detection(Detection::Ned { eta: eta_default })?;
        } else if let Some(eta) = upper.strip_prefix("NED(").and_then(|r| r.strip_suffix(')')) {
            set_detection(Detection::Ned { eta: parse_num(eta, "eta")? })?;
        } else if let Some(t) = upper.strip_prefix("T=") {
            cfg.t_max = parse_num(t, "max iterations")?;
        } else if let Some(s) = upper.strip_prefix("SCALE=") {
            cfg.extrinsic_scale = parse_num(s, "extrinsic scale")?;
        } else {
            return Err(unknown());
        }
    }
    match osd {
        None => {
            if aided {
                return Err(Error::InvalidConfig(format!("'{name}': CRC-aided requires an OSD stage")));
            }
            cfg.detection = detection.unwrap_or(Detection::Crc);
        }
        Some((order, f, accum_alpha)) => {
            let start_iteration = if f == "T" { cfg.t_max } else { parse_num(&f, "OSD start iteration")? };
            let crc_mode = if aided { CrcMode::Aided } else { CrcMode::Filter };
            cfg.detection =
                detection.unwrap_or(if aided { Detection::Ned { eta: eta_default } } else { Detection::Crc });
            cfg.osd = Some(OsdSchedule { order, start_iteration, accum_alpha, crc_mode });
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl FromStr for HybridConfig {
    type Err = Error;

    /// Uses the `k = 40` NED threshold when none is named.
    fn from_str(s: &str) -> Result<Self> {
        parse_scheme(s, ETA_K40)
    }
}

impl fmt::Display for HybridConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "STD")?;
        if let Some(osd) = &self.osd {
            write!(f, "+OSD({},", osd.order)?;
            if osd.start_iteration == self.t_max {
                write!(f, "T")?;
            } else {
                write!(f, "{}", osd.start_iteration)?;
            }
            write!(f, ",{})", osd.accum_alpha)?;
            if osd.crc_mode == CrcMode::Aided {
                write!(f, "+CRC-aided")?;
            }
            match self.detection {
                Detection::Crc => write!(f, "+CRC")?,
                Detection::Ned { eta } => write!(f, "+NED({eta})")?,
                Detection::Genie => write!(f, "+Genie")?,
            }
        }
        if self.t_max != DEFAULT_MAX_ITERATIONS {
            write!(f, "+T={}", self.t_max)?;
        }
        if self.extrinsic_scale != DEFAULT_EXTRINSIC_SCALE {
            write!(f, "+scale={}", self.extrinsic_scale)?;
        }
        Ok(())
    }
}

/// `R^t = L^t + alpha · R^(t-1)`.
pub fn accumulate(current: &[f64], previous: &[f64], alpha: f64) -> Vec<f64> {
    current.iter().zip(previous).map(|(l, r)| l + alpha * r).collect()
}

/// True when the candidate is accepted: `ned <= eta`.
pub fn detect_ned(ned_value: f64, eta: f64) -> bool {
    ned_value <= eta
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    /// Turbo hard decisions passed the CRC.
    StdSuccess,
    /// Turbo failed; the OSD candidate was accepted.
    OsdAccepted,
    /// The decoder declared the frame lost.
    DetectedError,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    pub message: Vec<u8>,
    /// Decoded code block (message plus CRC bits).
    pub code_block: Vec<u8>,
    pub status: DecodeStatus,
    pub iterations_used: usize,
    pub osd_invocations: usize,
    pub ned_value: Option<f64>,
    pub best_distance: Option<f64>,
}

impl DecodeOutcome {
    pub fn accepted(&self) -> bool {
        self.status != DecodeStatus::DetectedError
    }
}

/// Keeps the better of two OSD results; CRC-passing results beat failing
/// ones, then lower distance wins, earlier wins ties.
fn better(current: Option<OsdResult>, candidate: OsdResult) -> OsdResult {
    match current {
        None => candidate,
        Some(cur) => {
            let key = |r: &OsdResult| (u8::from(r.crc_filtered_empty), r.best_distance);
            if key(&candidate) < key(&cur) {
                candidate
            } else {
                cur
            }
        }
    }
}

/// Decodes one frame under `cfg`. `genie_truth` is the transmitted code
/// block and is required for genie detection.
pub fn hybrid_decode(
    frame: &LlrFrame,
    code: &TurboCrcCode,
    cfg: &HybridConfig,
    genie_truth: Option<&[u8]>,
) -> Result<DecodeOutcome> {
    cfg.validate()?;
    let (k, m) = (code.k(), code.m());
    if cfg.detection == Detection::Genie && genie_truth.is_none_or(|t| t.len() != k) {
        return Err(Error::InvalidConfig("genie detection needs the transmitted code block".into()));
    }

    let mut decoder = TurboDecoder::new(frame, &code.interleaver, cfg.extrinsic_scale)?;
    let (hard_ref, magnitudes) = match cfg.osd {
        Some(_) => {
            let llrs = frame.matrix_llrs();
            (llrs.iter().map(|&l| hard_decision(l)).collect(), frame.channel_magnitudes())
        }
        None => (Vec::new(), Vec::new()),
    };
    let mut accumulated = vec![0.0; 3 * k];
    let mut best: Option<OsdResult> = None;
    let mut osd_invocations = 0;
    let mut last_hard = Vec::new();

    for t in 1..=cfg.t_max {
        let out = decoder.iterate();
        if out.crc_pass {
            return Ok(DecodeOutcome {
                message: out.hard_cb[..m].to_vec(),
                code_block: out.hard_cb,
                status: DecodeStatus::StdSuccess,
                iterations_used: t,
                osd_invocations,
                ned_value: None,
                best_distance: None,
            });
        }
        if let Some(osd) = &cfg.osd {
            accumulated = accumulate(&out.full_llrs, &accumulated, osd.accum_alpha);
            if t >= osd.start_iteration {
                let generator = match osd.crc_mode {
                    CrcMode::Aided => &code.generators.g_concat,
                    CrcMode::Filter | CrcMode::None => &code.generators.g_turbo,
                };
                let input = OsdInput {
                    reliabilities: accumulated.clone(),
                    hard_ref: hard_ref.clone(),
                    magnitudes: magnitudes.clone(),
                    generator,
                };
                best = Some(better(best, osd_decode(&input, osd.order, osd.crc_mode)?));
                osd_invocations += 1;
            }
        }
        last_hard = out.hard_cb;
    }

    let Some(best) = best else {
        return Ok(DecodeOutcome {
            message: last_hard[..m].to_vec(),
            code_block: last_hard,
            status: DecodeStatus::DetectedError,
            iterations_used: cfg.t_max,
            osd_invocations,
            ned_value: None,
            best_distance: None,
        });
    };
    let code_block = best.best_codeword[..k].to_vec();
    let rejected = match cfg.detection {
        Detection::Crc => best.crc_filtered_empty,
        Detection::Ned { eta } => !detect_ned(best.ned, eta),
        Detection::Genie => genie_truth != Some(code_block.as_slice()),
    };
    Ok(DecodeOutcome {
        message: code_block[..m].to_vec(),
        code_block,
        status: if rejected { DecodeStatus::DetectedError } else { DecodeStatus::OsdAccepted },
        iterations_used: cfg.t_max,
        osd_invocations,
        ned_value: Some(best.ned),
        best_distance: Some(best.best_distance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxlogmap::channel_llrs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn frame(code: &TurboCrcCode, ebn0_db: f64, seed: u64) -> (Vec<u8>, LlrFrame) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let msg: Vec<u8> = (0..code.m()).map(|_| rng.random_range(0..2)).collect();
        let cw = code.encode_message(&msg).unwrap();
        let sigma2 = 1.0 / (2.0 * code.config.rate() * 10f64.powf(ebn0_db / 10.0));
        let noise = Normal::new(0.0, sigma2.sqrt()).unwrap();
        let y: Vec<f64> =
            cw.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).map(|s: f64| s + noise.sample(&mut rng)).collect();
        (cw[..code.k()].to_vec(), channel_llrs(&y, sigma2, code.k()).unwrap())
    }

    #[test]
    fn accumulate_rules() {
        let l = [1.0, -2.0, 0.5];
        assert_eq!(accumulate(&l, &[9.0, 9.0, 9.0], 0.0), l);
        assert_eq!(accumulate(&l, &[0.0; 3], 0.7), l);
        let r1 = accumulate(&l, &[0.0; 3], 1.0);
        let r2 = accumulate(&l, &r1, 1.0);
        let r3 = accumulate(&l, &r2, 1.0);
        assert_eq!(r3, vec![3.0, -6.0, 1.5]);
    }

    #[test]
    fn ned_threshold_is_strict() {
        assert!(detect_ned(0.0, 0.2));
        assert!(detect_ned(0.2, 0.2));
        assert!(!detect_ned(0.21, 0.2));
        assert_eq!(default_eta(40), 0.2);
        assert_eq!(default_eta(96), 0.15);
    }

    #[test]
    fn named_schemes() {
        let std: HybridConfig = "STD".parse().unwrap();
        assert_eq!(std, HybridConfig::std());
        assert_eq!(std.t_max, 8);

        let filt: HybridConfig = "STD+OSD(2,1,0)".parse().unwrap();
        assert_eq!(filt, HybridConfig::with_osd(2, 1, 0.0, CrcMode::Filter, Detection::Crc));

        let aided = HybridConfig::parse_for_k("STD+OSD(2,1,0)+CRC-aided", 40).unwrap();
        assert_eq!(aided, HybridConfig::with_osd(2, 1, 0.0, CrcMode::Aided, Detection::Ned { eta: 0.2 }));

        let ned = HybridConfig::parse_for_k("STD+OSD(1, T, 1)+CRC aided, NED(0.15)", 96).unwrap();
        assert_eq!(ned, HybridConfig::with_osd(1, 8, 1.0, CrcMode::Aided, Detection::Ned { eta: 0.15 }));

        let genie: HybridConfig = "STD+OSD(2, 1, 0)+CRC-aided, Genie".parse().unwrap();
        assert_eq!(genie.detection, Detection::Genie);

        let crc: HybridConfig = "STD+OSD(2, 1, 0), CRC".parse().unwrap();
        assert_eq!(crc, filt);
    }

    #[test]
    fn names_round_trip() {
        for name in [
            "STD",
            "STD+OSD(2,1,0)+CRC",
            "STD+OSD(2,1,0)+CRC-aided+NED(0.2)",
            "STD+OSD(1,T,1)+CRC-aided+NED(0.15)",
            "STD+OSD(2,T,0.5)+CRC-aided+Genie",
            "STD+OSD(0,3,0)+CRC+T=10",
            "STD+scale=1",
        ] {
            let cfg: HybridConfig = name.parse().unwrap();
            assert_eq!(cfg.to_string(), name);
            assert_eq!(cfg.to_string().parse::<HybridConfig>().unwrap(), cfg);
        }
    }

    #[test]
    fn bad_schemes_rejected() {
        for name in [
            "TURBO",
            "STD+OSD(3,1,0)",
            "STD+OSD(2,9,0)",
            "STD+OSD(2,0,0)",
            "STD+OSD(2,1)",
            "STD+OSD(2,1,0)+CRC-aided+CRC",
            "STD+NED(0.2)",
            "STD+CRC-aided",
            "STD+OSD(2,1,0)+CRC-aided+NED(1.5)",
            "STD+OSD(2,1,-1)",
            "STD+OSD(2,1,0)+Genie+CRC",
        ] {
            assert!(name.parse::<HybridConfig>().is_err(), "{name} accepted");
        }
    }

    #[test]
    fn noiseless_frame_skips_osd() {
        let code = TurboCrcCode::new(40).unwrap();
        let (cb, f) = frame(&code, 60.0, 1);
        let cfg = HybridConfig::with_osd(2, 1, 0.0, CrcMode::Aided, Detection::Ned { eta: 0.2 });
        let out = hybrid_decode(&f, &code, &cfg, None).unwrap();
        assert_eq!(out.status, DecodeStatus::StdSuccess);
        assert_eq!(out.iterations_used, 1);
        assert_eq!(out.osd_invocations, 0);
        assert_eq!(out.code_block, cb);
        assert_eq!(out.ned_value, None);
    }

    fn failing_frame(code: &TurboCrcCode) -> (Vec<u8>, LlrFrame) {
        (0..)
            .map(|s| frame(code, 0.0, 1000 + s))
            .find(|(_, f)| {
                let out = hybrid_decode(f, code, &HybridConfig::std(), None).unwrap();
                out.status == DecodeStatus::DetectedError
            })
            .unwrap()
    }

    #[test]
    fn osd_invocation_count_follows_start_iteration() {
        let code = TurboCrcCode::new(40).unwrap();
        let (cb, f) = failing_frame(&code);
        for (start, expect) in [(1, 8), (5, 4), (8, 1)] {
            let cfg = HybridConfig::with_osd(1, start, 0.0, CrcMode::Aided, Detection::Genie);
            let out = hybrid_decode(&f, &code, &cfg, Some(&cb)).unwrap();
            assert_eq!(out.osd_invocations, expect);
            assert!(out.ned_value.is_some());
        }
    }

    #[test]
    fn genie_without_truth_rejected() {
        let code = TurboCrcCode::new(40).unwrap();
        let (_, f) = frame(&code, 1.0, 3);
        let cfg = HybridConfig::with_osd(1, 1, 0.0, CrcMode::Aided, Detection::Genie);
        assert!(hybrid_decode(&f, &code, &cfg, None).is_err());
    }

    #[test]
    fn deterministic() {
        let code = TurboCrcCode::new(40).unwrap();
        let (_, f) = failing_frame(&code);
        let cfg = HybridConfig::with_osd(2, 1, 0.0, CrcMode::Filter, Detection::Crc);
        let a = hybrid_decode(&f, &code, &cfg, None).unwrap();
        let b = hybrid_decode(&f, &code, &cfg, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn std_success_frames_match_plain_turbo() {
        let code = TurboCrcCode::new(40).unwrap();
        let cfg = HybridConfig::with_osd(2, 1, 0.0, CrcMode::Aided, Detection::Ned { eta: 0.2 });
        for seed in 0..40 {
            let (_, f) = frame(&code, 6.0, seed);
            let std = hybrid_decode(&f, &code, &HybridConfig::std(), None).unwrap();
            if std.status == DecodeStatus::StdSuccess {
                let hybrid = hybrid_decode(&f, &code, &cfg, None).unwrap();
                assert_eq!(hybrid.status, DecodeStatus::StdSuccess);
                assert_eq!(hybrid.code_block, std.code_block);
                assert_eq!(hybrid.iterations_used, std.iterations_used);
            }
        }
    }
}
