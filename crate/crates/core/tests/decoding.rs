use proptest::prelude::*;
use turbo_hybrid::osd::{candidate_count, reliability_key};
use turbo_hybrid::sim::{draw_frame, ChannelParams};
use turbo_hybrid::{
    channel_llrs, hard_decision, hybrid_decode, osd_decode, BinaryMatrix, CrcMode, DecodeStatus, Detection,
    HybridConfig, OsdInput, TurboCrcCode, TurboDecoder,
};

fn noise_var(code: &TurboCrcCode, ebn0_db: f64) -> f64 {
    ChannelParams::new(ebn0_db, code.config.rate()).noise_var()
}

// Exhaustive order-n OSD used as the reference: all codewords within n flips
// of the basis hard decisions, scored against the channel.
fn enumerate_osd(g: &BinaryMatrix, rel: &[f64], y: &[f64], order: usize) -> (Vec<u8>, usize) {
    let (rows, n) = (g.rows(), g.cols());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&j| (std::cmp::Reverse(reliability_key(rel[j])), j));
    let mut mrb: Vec<usize> = Vec::new();
    for &j in &idx {
        let cols: Vec<Vec<u8>> = mrb.iter().chain([&j]).map(|&c| (0..rows).map(|r| g.get(r, c)).collect()).collect();
        if BinaryMatrix::from_rows(&cols).map(|m| m.rank()).unwrap_or(0) == cols.len() {
            mrb.push(j);
        }
        if mrb.len() == rows {
            break;
        }
    }
    let mut best: Option<(f64, Vec<u8>)> = None;
    let mut listed = 0;
    for msg in 0u32..(1 << rows) {
        let bits: Vec<u8> = (0..rows).map(|r| ((msg >> r) & 1) as u8).collect();
        let cw = g.left_mul_vec(&bits).unwrap();
        if mrb.iter().filter(|&&j| cw[j] != hard_decision(rel[j])).count() > order {
            continue;
        }
        listed += 1;
        let d: f64 = (0..n).filter(|&j| cw[j] != hard_decision(y[j])).map(|j| y[j].abs()).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, cw));
        }
    }
    (best.unwrap().1, listed)
}

fn toy_generator(seed: u64, rows: usize, cols: usize) -> BinaryMatrix {
    let mut x = seed | 1;
    loop {
        let data: Vec<Vec<u8>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        x ^= x << 13;
                        x ^= x >> 7;
                        x ^= x << 17;
                        (x & 1) as u8
                    })
                    .collect()
            })
            .collect();
        let g = BinaryMatrix::from_rows(&data).unwrap();
        if g.rank() == rows {
            return g;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn osd_matches_enumeration(
        seed in any::<u64>(),
        order in 0usize..=2,
        noise in proptest::collection::vec(-1.5f64..1.5, 30),
        msg in proptest::collection::vec(0u8..2, 10),
    ) {
        let g = toy_generator(seed, 10, 30);
        let cw = g.left_mul_vec(&msg).unwrap();
        let y: Vec<f64> = cw.iter().zip(&noise).map(|(&b, n)| 1.0 - 2.0 * f64::from(b) + n).collect();
        let input = OsdInput::from_received(y.clone(), &y, &g);
        let out = osd_decode(&input, order, CrcMode::None).unwrap();
        let (want, listed) = enumerate_osd(&g, &y, &y, order);
        prop_assert_eq!(out.best_codeword, want);
        prop_assert_eq!(out.candidates_evaluated, candidate_count(10, order));
        prop_assert_eq!(listed, candidate_count(10, order));
    }

    #[test]
    fn decisions_ignore_channel_scale(i in 0u64..1000, c in 0.01f64..100.0, ebn0 in 0.0f64..4.0) {
        let code = TurboCrcCode::new(40).unwrap();
        let var = noise_var(&code, ebn0);
        let f = draw_frame(&code, var, 11, i).unwrap();
        let scaled: Vec<f64> = f.received.iter().map(|v| c * v).collect();
        let (a, b) = (channel_llrs(&f.received, var, 40).unwrap(), channel_llrs(&scaled, var, 40).unwrap());
        let mut da = TurboDecoder::new(&a, &code.interleaver, 0.75).unwrap();
        let mut db = TurboDecoder::new(&b, &code.interleaver, 0.75).unwrap();
        for _ in 0..8 {
            let (x, y) = (da.iterate(), db.iterate());
            prop_assert_eq!(x.hard_cb, y.hard_cb);
            prop_assert_eq!(x.crc_pass, y.crc_pass);
            let hx: Vec<u8> = x.full_llrs.iter().map(|&l| hard_decision(l)).collect();
            let hy: Vec<u8> = y.full_llrs.iter().map(|&l| hard_decision(l)).collect();
            prop_assert_eq!(hx, hy);
        }
        let oa = osd_decode(&OsdInput::from_received(a.matrix_llrs(), &f.received, &code.generators.g_concat), 2, CrcMode::Aided).unwrap();
        let ob = osd_decode(&OsdInput::from_received(b.matrix_llrs(), &scaled, &code.generators.g_concat), 2, CrcMode::Aided).unwrap();
        prop_assert_eq!(&oa.best_codeword, &ob.best_codeword);
        prop_assert!((oa.ned - ob.ned).abs() <= 1e-12 * oa.ned.max(1e-300));
        prop_assert!((ob.best_distance - c * oa.best_distance).abs() <= 1e-9 * ob.best_distance.max(1e-300));
    }

    #[test]
    fn hybrid_equals_std_when_std_succeeds(i in 0u64..1000) {
        let code = TurboCrcCode::new(40).unwrap();
        let var = noise_var(&code, 5.0);
        let f = draw_frame(&code, var, 12, i).unwrap();
        let llrs = channel_llrs(&f.received, var, 40).unwrap();
        let std = hybrid_decode(&llrs, &code, &HybridConfig::std(), None).unwrap();
        let cfg = HybridConfig::with_osd(2, 1, 0.0, CrcMode::Aided, Detection::Ned { eta: 0.2 });
        let hyb = hybrid_decode(&llrs, &code, &cfg, None).unwrap();
        if std.status == DecodeStatus::StdSuccess {
            prop_assert_eq!(&hyb.status, &std.status);
            prop_assert_eq!(&hyb.code_block, &std.code_block);
            prop_assert_eq!(hyb.iterations_used, std.iterations_used);
        }
        prop_assert_eq!(hybrid_decode(&llrs, &code, &cfg, None).unwrap(), hyb);
    }
}

#[test]
fn candidate_counts_match_binomial_sums() {
    for (basis, order, want) in [(16, 0, 1), (16, 1, 17), (16, 2, 137), (40, 2, 821), (72, 2, 2629)] {
        assert_eq!(candidate_count(basis, order), want);
    }
}

#[test]
fn fer_does_not_grow_with_iterations() {
    let code = TurboCrcCode::new(40).unwrap();
    let var = noise_var(&code, 5.0);
    let mut errors = [0u32; 8];
    for i in 0..10_000 {
        let f = draw_frame(&code, var, 13, i).unwrap();
        let llrs = channel_llrs(&f.received, var, 40).unwrap();
        let mut dec = TurboDecoder::new(&llrs, &code.interleaver, 0.75).unwrap();
        for e in &mut errors {
            let out = dec.iterate();
            *e += u32::from(out.hard_cb[..16] != f.message[..]);
        }
    }
    for t in 0..7 {
        assert!(
            f64::from(errors[t + 1]) <= 1.1 * f64::from(errors[t]),
            "iteration {} has {} errors, iteration {} has {}",
            t + 2,
            errors[t + 1],
            t + 1,
            errors[t]
        );
    }
    assert!(errors[7] < errors[0]);
}
