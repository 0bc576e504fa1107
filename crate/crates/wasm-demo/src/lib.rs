//! Browser bindings: decode one frame, measure one Eb/N0 point, and collect
//! the NED split between right and wrong OSD decisions. Every export returns
//! a JSON string.

use serde::Serialize;
use turbo_hybrid::sim::{draw_frame, ChannelParams};
use turbo_hybrid::{
    channel_llrs, hard_decision, hybrid_decode, run_point, CrcMode, DecodeStatus, Detection, HybridConfig, SimScheme,
    StopRule, SweepPoint, TurboCrcCode, TurboDecoder,
};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub bit_errors: usize,
    pub crc_pass: bool,
    pub mean_abs_llr: f64,
}

#[derive(Debug, Serialize)]
pub struct FrameReport {
    pub scheme: String,
    pub k: usize,
    pub m: usize,
    pub noise_var: f64,
    pub message: Vec<u8>,
    pub decoded: Vec<u8>,
    pub status: String,
    pub correct: bool,
    pub iterations_used: usize,
    pub osd_invocations: usize,
    pub ned: Option<f64>,
    pub best_distance: Option<f64>,
    /// Hard-decision errors over all transmitted bits.
    pub channel_errors: usize,
    /// Plain turbo iterations on the same frame, for comparison.
    pub std_trace: Vec<IterationTrace>,
}

fn hybrid_scheme(name: &str, k: usize) -> Result<HybridConfig, String> {
    match SimScheme::parse_for_k(name, k).map_err(|e| e.to_string())? {
        SimScheme::Hybrid(cfg) => Ok(cfg),
        SimScheme::Mld => Err("MLD cannot be traced frame by frame; use a turbo scheme".into()),
    }
}

pub fn decode_frame_report(k: usize, scheme: &str, ebn0_db: f64, seed: u64, index: u64) -> Result<FrameReport, String> {
    let code = TurboCrcCode::new(k).map_err(|e| e.to_string())?;
    let cfg = hybrid_scheme(scheme, k)?;
    let var = ChannelParams::new(ebn0_db, code.config.rate()).noise_var();
    let frame = draw_frame(&code, var, seed, index).map_err(|e| e.to_string())?;
    let llrs = channel_llrs(&frame.received, var, k).map_err(|e| e.to_string())?;
    let truth = &frame.codeword[..k];
    let genie = (cfg.detection == Detection::Genie).then_some(truth);
    let out = hybrid_decode(&llrs, &code, &cfg, genie).map_err(|e| e.to_string())?;

    let mut dec = TurboDecoder::new(&llrs, &code.interleaver, cfg.extrinsic_scale).map_err(|e| e.to_string())?;
    let mut std_trace = Vec::new();
    for _ in 0..cfg.t_max {
        let it = dec.iterate();
        std_trace.push(IterationTrace {
            iteration: it.iteration,
            bit_errors: it.hard_cb.iter().zip(truth).filter(|(a, b)| a != b).count(),
            crc_pass: it.crc_pass,
            mean_abs_llr: it.full_llrs.iter().map(|l| l.abs()).sum::<f64>() / it.full_llrs.len() as f64,
        });
        if it.crc_pass {
            break;
        }
    }

    let status = match out.status {
        DecodeStatus::StdSuccess => "std_success",
        DecodeStatus::OsdAccepted => "osd_accepted",
        DecodeStatus::DetectedError => "detected_error",
    };
    Ok(FrameReport {
        scheme: cfg.to_string(),
        k,
        m: code.m(),
        noise_var: var,
        correct: out.accepted() && out.message == frame.message,
        message: frame.message,
        decoded: out.message,
        status: status.into(),
        iterations_used: out.iterations_used,
        osd_invocations: out.osd_invocations,
        ned: out.ned_value,
        best_distance: out.best_distance,
        channel_errors: frame.codeword.iter().zip(&frame.received).filter(|(&b, &y)| b != hard_decision(y)).count(),
        std_trace,
    })
}

pub fn sweep_point_report(
    k: usize,
    scheme: &str,
    ebn0_db: f64,
    max_frames: u64,
    min_errors: u64,
    seed: u64,
) -> Result<SweepPoint, String> {
    let code = TurboCrcCode::new(k).map_err(|e| e.to_string())?;
    let scheme = SimScheme::parse_for_k(scheme, k).map_err(|e| e.to_string())?;
    let stop = StopRule { max_frames, min_frame_errors: min_errors };
    run_point(&scheme, &code, ebn0_db, stop, seed).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct NedHistogram {
    pub k: usize,
    pub ebn0_db: f64,
    pub bin_width: f64,
    /// Frames where the best CRC-aided OSD candidate was the transmitted block.
    pub right: Vec<u32>,
    /// Frames where it was not.
    pub wrong: Vec<u32>,
    /// Frames decoded by turbo iterations alone (no NED).
    pub std_success: u32,
}

/// NED of the final CRC-aided order-2 OSD candidate, split by whether that
/// candidate is right. Bins cover [0, 0.5].
pub fn ned_histogram_report(
    k: usize,
    ebn0_db: f64,
    frames: u64,
    seed: u64,
    bins: usize,
) -> Result<NedHistogram, String> {
    if bins == 0 {
        return Err("bins must be at least 1".into());
    }
    let code = TurboCrcCode::new(k).map_err(|e| e.to_string())?;
    let cfg = HybridConfig::with_osd(2, 1, 0.0, CrcMode::Aided, Detection::Genie);
    let var = ChannelParams::new(ebn0_db, code.config.rate()).noise_var();
    let bin_width = 0.5 / bins as f64;
    let mut hist = NedHistogram { k, ebn0_db, bin_width, right: vec![0; bins], wrong: vec![0; bins], std_success: 0 };
    for i in 0..frames {
        let frame = draw_frame(&code, var, seed, i).map_err(|e| e.to_string())?;
        let llrs = channel_llrs(&frame.received, var, k).map_err(|e| e.to_string())?;
        let truth = &frame.codeword[..k];
        let out = hybrid_decode(&llrs, &code, &cfg, Some(truth)).map_err(|e| e.to_string())?;
        let Some(ned) = out.ned_value else {
            hist.std_success += 1;
            continue;
        };
        let bin = ((ned / bin_width) as usize).min(bins - 1);
        if out.code_block == truth {
            hist.right[bin] += 1;
        } else {
            hist.wrong[bin] += 1;
        }
    }
    Ok(hist)
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e)).and_then(|v| serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string())))
}

#[wasm_bindgen]
pub fn decode_frame(k: usize, scheme: &str, ebn0_db: f64, seed: u32, index: u32) -> Result<String, JsError> {
    to_json(decode_frame_report(k, scheme, ebn0_db, seed.into(), index.into()))
}

#[wasm_bindgen]
pub fn sweep_point(
    k: usize,
    scheme: &str,
    ebn0_db: f64,
    max_frames: u32,
    min_errors: u32,
    seed: u32,
) -> Result<String, JsError> {
    to_json(sweep_point_report(k, scheme, ebn0_db, max_frames.into(), min_errors.into(), seed.into()))
}

#[wasm_bindgen]
pub fn ned_histogram(k: usize, ebn0_db: f64, frames: u32, seed: u32, bins: usize) -> Result<String, JsError> {
    to_json(ned_histogram_report(k, ebn0_db, frames.into(), seed.into(), bins))
}
