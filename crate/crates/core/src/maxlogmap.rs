//! Standard turbo decoding with two Max-Log-MAP constituent decoders.
//!
//! Besides the systematic a-posteriori LLRs, every iteration also yields
//! a-posteriori LLRs for both parity streams so the OSD stage can rank all
//! `3k` matrix-encodable positions.

use crate::crc24;
use crate::turbo::{rsc_branch, termination_input, Interleaver, NUM_STATES, TAIL_BITS, TAIL_STEPS};
use crate::{hard_decision, Error, Result};

/// Extrinsic scaling used by the enhanced Max-Log-MAP decoder.
pub const DEFAULT_EXTRINSIC_SCALE: f64 = 0.75;

/// Maximum number of turbo iterations.
pub const DEFAULT_MAX_ITERATIONS: usize = 8;

const NEG_INF: f64 = f64::NEG_INFINITY;

/// Channel LLRs of one received frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrFrame {
    pub sys: Vec<f64>,
    pub par1: Vec<f64>,
    pub par2: Vec<f64>,
    /// Same layout as the tail bits produced by the encoder.
    pub tails: [f64; TAIL_BITS],
    pub noise_var: f64,
}

impl LlrFrame {
    pub fn k(&self) -> usize {
        self.sys.len()
    }

    /// The `3k` LLRs in generator-column order.
    pub fn matrix_llrs(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.k());
        v.extend_from_slice(&self.sys);
        v.extend_from_slice(&self.par1);
        v.extend_from_slice(&self.par2);
        v
    }

    /// Channel magnitudes `|y_i|` for the `3k` matrix positions.
    pub fn channel_magnitudes(&self) -> Vec<f64> {
        let scale = self.noise_var / 2.0;
        self.matrix_llrs().into_iter().map(|l| l.abs() * scale).collect()
    }
}

/// LLRs `2 y / sigma²` for a received frame laid out like the encoder output.
pub fn channel_llrs(y: &[f64], noise_var: f64, k: usize) -> Result<LlrFrame> {
    if !noise_var.is_finite() || noise_var <= 0.0 {
        return Err(Error::InvalidInput(format!("noise variance must be positive and finite, got {noise_var}")));
    }
    if y.len() != 3 * k + TAIL_BITS {
        return Err(Error::DimensionMismatch(format!("received {} samples, expected {}", y.len(), 3 * k + TAIL_BITS)));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("received sample {bad} is not finite")));
    }
    let scale = 2.0 / noise_var;
    let llr = |s: &[f64]| s.iter().map(|v| v * scale).collect::<Vec<_>>();
    Ok(LlrFrame {
        sys: llr(&y[..k]),
        par1: llr(&y[k..2 * k]),
        par2: llr(&y[2 * k..3 * k]),
        tails: std::array::from_fn(|i| y[3 * k + i] * scale),
        noise_var,
    })
}

/// Output of one constituent decoder pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentOutput {
    pub extrinsic: Vec<f64>,
    pub sys_full: Vec<f64>,
    pub par_full: Vec<f64>,
}

#[inline]
fn signed(bit: u8, llr: f64) -> f64 {
    if bit == 0 {
        llr
    } else {
        -llr
    }
}

/// Max-Log-MAP pass over one constituent trellis.
///
/// `tail` holds the `(systematic, parity)` LLR pairs of the three
/// termination steps; they only shape the backward boundary.
pub fn component_decode(sys: &[f64], par: &[f64], apriori: &[f64], tail: &[(f64, f64); TAIL_STEPS]) -> ComponentOutput {
    let k = sys.len();
    debug_assert!(par.len() == k && apriori.len() == k);
    let gamma = |u: u8, p: u8, ls: f64, lp: f64| 0.5 * (signed(u, ls) + signed(p, lp));

    let mut alpha = vec![[NEG_INF; NUM_STATES]; k + 1];
    alpha[0][0] = 0.0;
    for i in 0..k {
        let ls = sys[i] + apriori[i];
        let mut next = [NEG_INF; NUM_STATES];
        #[allow(clippy::needless_range_loop)]
        for s in 0..NUM_STATES {
            let a = alpha[i][s];
            if a == NEG_INF {
                continue;
            }
            for u in 0..2u8 {
                let b = rsc_branch(s, u);
                let v = a + gamma(u, b.parity, ls, par[i]);
                if v > next[b.next] {
                    next[b.next] = v;
                }
            }
        }
        let top = next.iter().copied().fold(NEG_INF, f64::max);
        for v in &mut next {
            *v -= top;
        }
        alpha[i + 1] = next;
    }

    // Backward boundary: every state follows its forced termination path to 0.
    let mut beta = [0.0f64; NUM_STATES];
    #[allow(clippy::needless_range_loop)]
    for s in 0..NUM_STATES {
        let mut state = s;
        let mut metric = 0.0;
        for &(ls, lp) in tail {
            let u = termination_input(state);
            let b = rsc_branch(state, u);
            metric += gamma(u, b.parity, ls, lp);
            state = b.next;
        }
        debug_assert_eq!(state, 0);
        beta[s] = metric;
    }

    let mut out = ComponentOutput { extrinsic: vec![0.0; k], sys_full: vec![0.0; k], par_full: vec![0.0; k] };
    for i in (0..k).rev() {
        let ls = sys[i] + apriori[i];
        let mut by_input = [NEG_INF; 2];
        let mut by_parity = [NEG_INF; 2];
        let mut prev = [NEG_INF; NUM_STATES];
        for s in 0..NUM_STATES {
            for u in 0..2u8 {
                let b = rsc_branch(s, u);
                let g = gamma(u, b.parity, ls, par[i]);
                let tail_part = g + beta[b.next];
                if tail_part > prev[s] {
                    prev[s] = tail_part;
                }
                let a = alpha[i][s];
                if a == NEG_INF {
                    continue;
                }
                let v = a + tail_part;
                let (ui, pi) = (usize::from(u), usize::from(b.parity));
                if v > by_input[ui] {
                    by_input[ui] = v;
                }
                if v > by_parity[pi] {
                    by_parity[pi] = v;
                }
            }
        }
        out.sys_full[i] = by_input[0] - by_input[1];
        out.par_full[i] = by_parity[0] - by_parity[1];
        out.extrinsic[i] = out.sys_full[i] - sys[i] - apriori[i];
        let top = prev.iter().copied().fold(NEG_INF, f64::max);
        for (b, p) in beta.iter_mut().zip(prev) {
            *b = p - top;
        }
    }
    out
}

/// Result of one full turbo iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationOutput {
    /// A-posteriori LLRs ordered `sys ‖ par1 ‖ par2`, parity-2 indexed by
    /// trellis step of the second encoder.
    pub full_llrs: Vec<f64>,
    pub hard_cb: Vec<u8>,
    pub crc_pass: bool,
    /// 1-based.
    pub iteration: usize,
}

/// Per-frame iterative decoder state.
#[derive(Clone, Debug)]
pub struct TurboDecoder<'a> {
    frame: &'a LlrFrame,
    interleaver: &'a Interleaver,
    extrinsic_scale: f64,
    sys_interleaved: Vec<f64>,
    tails1: [(f64, f64); TAIL_STEPS],
    tails2: [(f64, f64); TAIL_STEPS],
    /// A-priori input of the first decoder, fed back from the second.
    apriori1: Vec<f64>,
    /// First decoder run on the current `apriori1`. It supplies the parity-1
    /// LLRs of the iteration just finished and opens the next one.
    first: Option<ComponentOutput>,
    iteration: usize,
}

impl<'a> TurboDecoder<'a> {
    pub fn new(frame: &'a LlrFrame, interleaver: &'a Interleaver, extrinsic_scale: f64) -> Result<Self> {
        let k = interleaver.len();
        if frame.sys.len() != k || frame.par1.len() != k || frame.par2.len() != k {
            return Err(Error::DimensionMismatch(format!("LLR frame does not match interleaver of size {k}")));
        }
        let t = &frame.tails;
        Ok(Self {
            frame,
            interleaver,
            extrinsic_scale,
            sys_interleaved: interleaver.interleave(&frame.sys),
            tails1: [(t[0], t[1]), (t[2], t[3]), (t[4], t[5])],
            tails2: [(t[6], t[7]), (t[8], t[9]), (t[10], t[11])],
            apriori1: vec![0.0; k],
            first: None,
            iteration: 0,
        })
    }

    pub fn iterations_done(&self) -> usize {
        self.iteration
    }

    fn run_first(&self) -> ComponentOutput {
        component_decode(&self.frame.sys, &self.frame.par1, &self.apriori1, &self.tails1)
    }

    /// Runs one full iteration (both constituent decoders). Parity-1 LLRs
    /// are taken from the first decoder re-run on the a-priori fed back by
    /// the second, so all `3k` outputs reflect the whole iteration.
    pub fn iterate(&mut self) -> IterationOutput {
        let k = self.interleaver.len();
        let scale = self.extrinsic_scale;
        let first = match self.first.take() {
            Some(f) => f,
            None => self.run_first(),
        };
        let apriori2: Vec<f64> = self.interleaver.as_slice().iter().map(|&p| scale * first.extrinsic[p]).collect();
        let second = component_decode(&self.sys_interleaved, &self.frame.par2, &apriori2, &self.tails2);

        let mut full_llrs = vec![0.0; 3 * k];
        for (j, &p) in self.interleaver.as_slice().iter().enumerate() {
            self.apriori1[p] = scale * second.extrinsic[j];
            full_llrs[p] = second.sys_full[j];
        }
        let updated = self.run_first();
        full_llrs[k..2 * k].copy_from_slice(&updated.par_full);
        full_llrs[2 * k..].copy_from_slice(&second.par_full);
        self.first = Some(updated);

        self.iteration += 1;
        let hard_cb: Vec<u8> = full_llrs[..k].iter().map(|&l| hard_decision(l)).collect();
        let crc_pass = crc24::crc_check(&hard_cb).unwrap_or(false);
        IterationOutput { full_llrs, hard_cb, crc_pass, iteration: self.iteration }
    }
}

/// All iterations of one standard turbo decode.
#[derive(Clone, Debug)]
pub struct StdDecodeResult {
    pub outcome: IterationOutput,
    pub per_iteration: Vec<IterationOutput>,
}

/// Iterates until the CRC passes or `t_max` iterations have run.
pub fn std_decode(
    frame: &LlrFrame,
    interleaver: &Interleaver,
    t_max: usize,
    extrinsic_scale: f64,
) -> Result<StdDecodeResult> {
    if t_max == 0 {
        return Err(Error::InvalidConfig("maximum iterations must be at least 1".into()));
    }
    let mut dec = TurboDecoder::new(frame, interleaver, extrinsic_scale)?;
    let mut per_iteration = Vec::with_capacity(t_max);
    for _ in 0..t_max {
        let out = dec.iterate();
        let stop = out.crc_pass;
        per_iteration.push(out);
        if stop {
            break;
        }
    }
    let outcome = per_iteration.last().cloned().expect("at least one iteration");
    Ok(StdDecodeResult { outcome, per_iteration })
}
