use turbo_hybrid::sim::{derive_point_seed, draw_frame, ml_oracle, ChannelParams, MlDecoder};
use turbo_hybrid::turbo::trellis_encode;
use turbo_hybrid::{
    channel_llrs, hard_decision, hybrid_decode, run_point, CrcMode, DecodeStatus, Detection, HybridConfig, SimScheme,
    StopRule, TurboCrcCode,
};

fn full_discrepancy(cw: &[u8], y: &[f64]) -> f64 {
    cw.iter().zip(y).filter(|(&b, &v)| b != hard_decision(v)).map(|(_, v)| v.abs()).sum()
}

fn aided(detection: Detection) -> HybridConfig {
    HybridConfig::with_osd(2, 1, 0.0, CrcMode::Aided, detection)
}

#[test]
fn rates_match_the_quoted_values() {
    assert!((TurboCrcCode::new(40).unwrap().config.rate() - 4.0 / 33.0).abs() < 1e-15);
    assert!((TurboCrcCode::new(96).unwrap().config.rate() - 6.0 / 25.0).abs() < 1e-15);
    let var = ChannelParams::new(0.0, 0.5).noise_var();
    assert!((var - 1.0).abs() < 1e-15);
}

#[test]
fn point_counts_partition_the_frames() {
    let code = TurboCrcCode::new(40).unwrap();
    let cfg = aided(Detection::Ned { eta: 0.2 });
    let stop = StopRule { max_frames: 600, min_frame_errors: u64::MAX };
    let seed = derive_point_seed(3, 0);
    let p = run_point(&SimScheme::Hybrid(cfg), &code, 2.0, stop, seed).unwrap();
    let var = ChannelParams::new(2.0, code.config.rate()).noise_var();
    let (mut correct, mut detected, mut undetected) = (0u64, 0u64, 0u64);
    for i in 0..600 {
        let f = draw_frame(&code, var, seed, i).unwrap();
        let out = hybrid_decode(&channel_llrs(&f.received, var, 40).unwrap(), &code, &cfg, None).unwrap();
        match (out.status == DecodeStatus::DetectedError, out.message == f.message) {
            (true, _) => detected += 1,
            (false, true) => correct += 1,
            (false, false) => undetected += 1,
        }
    }
    assert_eq!(correct + detected + undetected, p.frames_run);
    assert_eq!(p.frame_errors, detected + undetected);
    assert_eq!(p.undetected_errors, undetected);
    assert!(detected > 0, "point too easy to exercise detection");
}

#[test]
fn genie_never_accepts_a_wrong_frame_and_beats_ned() {
    let code = TurboCrcCode::new(40).unwrap();
    let stop = StopRule { max_frames: 1500, min_frame_errors: u64::MAX };
    for (i, ebn0) in [1.0, 2.5].into_iter().enumerate() {
        let seed = derive_point_seed(5, i as u64);
        let genie = run_point(&SimScheme::Hybrid(aided(Detection::Genie)), &code, ebn0, stop, seed).unwrap();
        let ned = run_point(&SimScheme::Hybrid(aided(Detection::Ned { eta: 0.2 })), &code, ebn0, stop, seed).unwrap();
        assert_eq!(genie.undetected_errors, 0);
        assert_eq!(genie.uer, 0.0);
        assert!(genie.fer <= ned.fer, "{ebn0} dB: genie {} > ned {}", genie.fer, ned.fer);
    }
}

#[test]
fn ml_is_never_beaten_on_the_full_codeword() {
    let code = TurboCrcCode::new(40).unwrap();
    let ml = MlDecoder::new(&code).unwrap();
    assert_eq!(ml.codebook_size(), 65536);
    let cfg = aided(Detection::Genie);
    for (s, ebn0) in [0.0, 1.5, 3.0].into_iter().enumerate() {
        let var = ChannelParams::new(ebn0, code.config.rate()).noise_var();
        for i in 0..60 {
            let f = draw_frame(&code, var, 21 + s as u64, i).unwrap();
            let best = ml_oracle(&f.received, &code).unwrap();
            assert_eq!(best.len(), 132);
            let out = hybrid_decode(&channel_llrs(&f.received, var, 40).unwrap(), &code, &cfg, Some(&f.codeword[..40]))
                .unwrap();
            let hybrid_cw = trellis_encode(&code.interleaver, &out.code_block).unwrap();
            let (dm, dh) = (full_discrepancy(&best, &f.received), full_discrepancy(&hybrid_cw, &f.received));
            assert!(dm <= dh + 1e-9, "frame {i} at {ebn0} dB: ML {dm} > hybrid {dh}");
            assert!(full_discrepancy(&best, &f.received) <= full_discrepancy(&f.codeword, &f.received) + 1e-9);
        }
    }
}

#[test]
fn ml_recovers_noiseless_frames() {
    let code = TurboCrcCode::new(40).unwrap();
    for i in 0..5 {
        let f = draw_frame(&code, 1e-6, 8, i).unwrap();
        assert_eq!(ml_oracle(&f.received, &code).unwrap(), f.codeword);
    }
}
