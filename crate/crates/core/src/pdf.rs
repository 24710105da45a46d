//! Two-graph parallel decoding of `G_N`-coset codes with SC component
//! decoders and hard-output LLR regeneration.
//!
//! Iteration `t` decodes the √N sub-codes of graph `G` (odd `t`) or `Gπ`
//! (even `t`). Each sub-code's input is the channel value plus a damping
//! offset `±Δ` pointing at the previous iteration's hard decision, where `Δ`
//! is picked from `δ = α+β`, `θ = α-β` or `γ` by the previous error flag and
//! whether the last two hard decisions agree.
//!
//! Iteration 1 runs on the channel LLRs alone: the missing `ĉ⁰`, `ĉ⁻¹` and
//! `e⁰` are taken as zero and `γ¹` as 0, so the schedule's first entry is
//! never used.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{CodeSpec, FrozenSet};
use crate::error::{Error, Result};
use crate::gn::{butterfly, global_index, GraphId};
use crate::quant::LlrArithmetic;
use crate::sc::{ScDecoder, ScMode, SubCode, SubDecodeStatus};

/// Damping factors of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Damping {
    pub fn delta(&self) -> f64 {
        self.alpha + self.beta
    }

    pub fn theta(&self) -> f64 {
        self.alpha - self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub t: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Per-iteration damping factors; iterations past the end repeat the last
/// entry.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingSchedule {
    steps: Vec<Damping>,
}

#[derive(Debug, Deserialize)]
struct VersionedSchedule {
    version: u32,
    schedule: Vec<ScheduleEntry>,
}

const DEFAULT_SCHEDULE: &str = include_str!("../config/damping_default.json");

impl DampingSchedule {
    /// `steps[0]` belongs to iteration 1.
    pub fn new(steps: Vec<Damping>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::invalid("damping schedule needs at least one entry"));
        }
        if steps
            .iter()
            .any(|d| !(d.alpha.is_finite() && d.beta.is_finite() && d.gamma.is_finite()))
        {
            return Err(Error::invalid("damping factors must be finite"));
        }
        Ok(Self { steps })
    }

    /// Same factors in every iteration.
    pub fn constant(d: Damping) -> Self {
        Self { steps: vec![d] }
    }

    /// The shipped default (see `config/damping_default.json`).
    pub fn shipped_default() -> Self {
        let v: VersionedSchedule = serde_json::from_str(DEFAULT_SCHEDULE).expect("bundled schedule parses");
        assert_eq!(v.version, 1);
        Self::from_entries(v.schedule, "bundled schedule").expect("bundled schedule is valid")
    }

    /// Factors for iteration `t` (1-based).
    pub fn at(&self, t: usize) -> Damping {
        let idx = t.saturating_sub(1).min(self.steps.len() - 1);
        self.steps[idx]
    }

    pub fn entries(&self) -> Vec<ScheduleEntry> {
        self.steps
            .iter()
            .enumerate()
            .map(|(p, d)| ScheduleEntry {
                t: p + 1,
                alpha: d.alpha,
                beta: d.beta,
                gamma: d.gamma,
            })
            .collect()
    }

    /// Builds a schedule from entries numbered `t = 1, 2, …` without gaps.
    pub fn from_entries(entries: Vec<ScheduleEntry>, context: &str) -> Result<Self> {
        for (p, e) in entries.iter().enumerate() {
            if e.t != p + 1 {
                return Err(Error::parse(
                    format!("{context}: entry {p}"),
                    format!("expected t = {}, found t = {} (entries start at 1 without gaps)", p + 1, e.t),
                ));
            }
        }
        let steps = entries
            .into_iter()
            .map(|e| Damping {
                alpha: e.alpha,
                beta: e.beta,
                gamma: e.gamma,
            })
            .collect();
        Self::new(steps).map_err(|e| Error::parse(context.to_string(), e.to_string()))
    }

    /// Parses a JSON array of `{t, alpha, beta, gamma}`.
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let entries: Vec<ScheduleEntry> = serde_json::from_str(text)
            .map_err(|e| Error::parse(format!("{context}:{}:{}", e.line(), e.column()), e.to_string()))?;
        Self::from_entries(entries, context)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries()).expect("schedule serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path)?, &path.display().to_string())
    }
}

impl Default for DampingSchedule {
    fn default() -> Self {
        Self::shipped_default()
    }
}

/// `δ`, `θ`, `γ` of one iteration on the decoder's LLR scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoefficients<L> {
    pub delta: L,
    pub theta: L,
    pub gamma: L,
}

impl<L: Copy> StepCoefficients<L> {
    pub fn new<A: LlrArithmetic<Llr = L>>(arith: &A, d: Damping, sigma2: f64) -> Self {
        Self {
            delta: arith.coefficient(d.delta(), sigma2),
            theta: arith.coefficient(d.theta(), sigma2),
            gamma: arith.coefficient(d.gamma, sigma2),
        }
    }
}

/// Offset magnitude for one position: `δ` if the sub-code that produced `c1`
/// flagged an error and `c1 ≠ c2`, `θ` if it flagged one and they agree, `γ`
/// otherwise.
#[inline]
pub fn delta_select<L: Copy>(e_prev: bool, c1: u8, c2: u8, coeffs: &StepCoefficients<L>) -> L {
    match (e_prev, c1 == c2) {
        (false, _) => coeffs.gamma,
        (true, false) => coeffs.delta,
        (true, true) => coeffs.theta,
    }
}

/// `y + Δ·(1 - 2·c1)` as a single (saturating) addition.
#[inline]
pub fn lgen<A: LlrArithmetic>(arith: &A, y: A::Llr, c1: u8, delta: A::Llr) -> A::Llr {
    if c1 == 0 {
        arith.add(y, delta)
    } else {
        arith.add(y, arith.neg(delta))
    }
}

/// When to stop before `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EarlyTermination {
    /// Never stop early.
    Off,
    /// Stop once every sub-code of the current graph passes its syndrome
    /// check.
    CurrentGraph,
    /// As `CurrentGraph`, and the resulting hard decisions also pass every
    /// sub-code of the other graph, so the output is a codeword of the full
    /// code.
    #[default]
    BothGraphs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub t_max: usize,
    pub schedule: DampingSchedule,
    pub sc_mode: ScMode,
    pub early_termination: EarlyTermination,
    /// Run the sub-decoders of one iteration on the rayon pool.
    pub parallel_subcodes: bool,
    /// Keep every iteration's hard outputs and error flags in the stats.
    pub record_trace: bool,
}

impl DecoderConfig {
    pub fn new(t_max: usize) -> Self {
        Self {
            t_max,
            schedule: DampingSchedule::default(),
            sc_mode: ScMode::default(),
            early_termination: EarlyTermination::default(),
            parallel_subcodes: false,
            record_trace: false,
        }
    }
}

/// Sub-code decode plans for both graphs, shared by all decoder instances.
#[derive(Debug)]
pub struct PreparedCode {
    spec: Arc<CodeSpec>,
    g: Vec<Arc<SubCode>>,
    gpi: Vec<Arc<SubCode>>,
}

impl PreparedCode {
    pub fn new(spec: Arc<CodeSpec>, mode: ScMode) -> Self {
        let mut cache: HashMap<FrozenSet, Arc<SubCode>> = HashMap::new();
        let mut plans = |graph| -> Vec<Arc<SubCode>> {
            (0..spec.n_sub())
                .map(|i| {
                    let f = spec.frozen(graph, i);
                    cache
                        .entry(f.clone())
                        .or_insert_with(|| Arc::new(SubCode::new(f.clone(), mode)))
                        .clone()
                })
                .collect()
        };
        let g = plans(GraphId::G);
        let gpi = plans(GraphId::Gpi);
        Self { spec, g, gpi }
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    pub fn subcode(&self, graph: GraphId, i: usize) -> &SubCode {
        match graph {
            GraphId::G => &self.g[i],
            GraphId::Gpi => &self.gpi[i],
        }
    }

    /// `true` iff every sub-code of `graph` accepts the global word `x`.
    pub fn graph_syndromes_pass(&self, graph: GraphId, x: &[u8], scratch: &mut [u8]) -> bool {
        let n = self.spec.n_sub();
        (0..n).all(|i| {
            for (j, s) in scratch.iter_mut().enumerate() {
                *s = x[global_index(i, j, graph, n)];
            }
            butterfly(scratch);
            self.subcode(graph, i).frozen().indices().iter().all(|&p| scratch[p] == 0)
        })
    }
}

/// Hard outputs and error flags of one iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    pub graph: GraphId,
    /// Global (position-indexed) hard outputs.
    pub c_hat: Vec<u8>,
    pub errors: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameStats {
    pub iterations_used: usize,
    /// `t_max`; the worst-case latency is set by this, not by early stops.
    pub worst_case_iterations: usize,
    pub early_terminated: bool,
    /// Number of sub-codes that ran SC, per executed iteration.
    pub sc_invocations: Vec<u32>,
    pub subdecode_calls: u64,
    /// Every sub-code of the last executed iteration passed its syndrome.
    pub final_syndromes_pass: bool,
    pub trace: Vec<IterationRecord>,
}

impl FrameStats {
    pub fn total_sc_invocations(&self) -> u64 {
        self.sc_invocations.iter().map(|&c| u64::from(c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameOutcome {
    pub x_hat: Vec<u8>,
    pub stats: FrameStats,
}

/// Received samples of one frame.
#[derive(Debug, Clone, Copy)]
pub struct FrameInput<'a> {
    pub y: &'a [f64],
    /// Per-dimension noise variance; only the float reference scales by it.
    pub sigma2: f64,
}

/// Frame decoder owning all per-frame scratch. One per worker.
#[derive(Debug)]
pub struct FrameDecoder<A: LlrArithmetic> {
    code: Arc<PreparedCode>,
    arith: A,
    config: DecoderConfig,
    sc: ScDecoder<A>,
    l_ch: Vec<A::Llr>,
    llr_buf: Vec<A::Llr>,
    c_prev: Vec<u8>,
    c_prev2: Vec<u8>,
    c_new: Vec<u8>,
    c_sub: Vec<u8>,
    status: Vec<SubDecodeStatus>,
    e_prev: Vec<bool>,
    syn_buf: Vec<u8>,
}

struct IterCtx<'a, A: LlrArithmetic> {
    arith: &'a A,
    code: &'a PreparedCode,
    n: usize,
    graph: GraphId,
    l_ch: &'a [A::Llr],
    c_prev: &'a [u8],
    c_prev2: &'a [u8],
    e_prev: &'a [bool],
    coeffs: Option<StepCoefficients<A::Llr>>,
}

impl<A: LlrArithmetic> IterCtx<'_, A> {
    fn run(&self, i: usize, sc: &mut ScDecoder<A>, llr: &mut [A::Llr], out: &mut [u8]) -> SubDecodeStatus {
        let n = self.n;
        for (j, l) in llr.iter_mut().enumerate() {
            let k = global_index(i, j, self.graph, n);
            *l = match &self.coeffs {
                None => self.l_ch[k],
                Some(c) => {
                    let c1 = self.c_prev[k];
                    let delta = delta_select(self.e_prev[j], c1, self.c_prev2[k], c);
                    lgen(self.arith, self.l_ch[k], c1, delta)
                }
            };
        }
        sc.subdecode(self.code.subcode(self.graph, i), llr, out)
    }
}

impl<A: LlrArithmetic> FrameDecoder<A> {
    pub fn new(code: Arc<PreparedCode>, arith: A, config: DecoderConfig) -> Result<Self> {
        if config.t_max == 0 {
            return Err(Error::invalid("t_max must be at least 1"));
        }
        let n_sub = code.spec().n_sub();
        let n = code.spec().n();
        Ok(Self {
            sc: ScDecoder::new(arith, n_sub),
            l_ch: vec![A::Llr::default(); n],
            llr_buf: vec![A::Llr::default(); n_sub],
            c_prev: vec![0; n],
            c_prev2: vec![0; n],
            c_new: vec![0; n],
            c_sub: vec![0; n],
            status: vec![
                SubDecodeStatus {
                    error_detected: false,
                    sc_invoked: false
                };
                n_sub
            ],
            e_prev: vec![false; n_sub],
            syn_buf: vec![0; n_sub],
            code,
            arith,
            config,
        })
    }

    /// Convenience constructor building the sub-code plans from `spec`.
    pub fn for_spec(spec: Arc<CodeSpec>, arith: A, config: DecoderConfig) -> Result<Self> {
        let code = Arc::new(PreparedCode::new(spec, config.sc_mode));
        Self::new(code, arith, config)
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn code(&self) -> &PreparedCode {
        &self.code
    }

    pub fn decode(&mut self, frame: FrameInput<'_>) -> Result<FrameOutcome> {
        self.decode_frame(frame.y, frame.sigma2)
    }

    pub fn decode_frame(&mut self, y: &[f64], sigma2: f64) -> Result<FrameOutcome> {
        let spec = self.code.spec();
        let (n_sub, n) = (spec.n_sub(), spec.n());
        if y.len() != n {
            return Err(Error::invalid(format!("frame has {} samples, code length is {n}", y.len())));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid(format!("noise variance must be positive, got {sigma2}")));
        }
        for (l, &v) in self.l_ch.iter_mut().zip(y) {
            *l = self.arith.channel_llr(v, sigma2);
        }
        self.c_prev.fill(0);
        self.c_prev2.fill(0);
        self.e_prev.fill(false);

        let t_max = self.config.t_max;
        let mut stats = FrameStats {
            worst_case_iterations: t_max,
            ..FrameStats::default()
        };
        for t in 1..=t_max {
            let graph = GraphId::for_iteration(t);
            let coeffs = (t > 1).then(|| StepCoefficients::new(&self.arith, self.config.schedule.at(t), sigma2));
            let ctx = IterCtx {
                arith: &self.arith,
                code: &self.code,
                n: n_sub,
                graph,
                l_ch: &self.l_ch,
                c_prev: &self.c_prev,
                c_prev2: &self.c_prev2,
                e_prev: &self.e_prev,
                coeffs,
            };
            if self.config.parallel_subcodes {
                let arith = self.arith;
                self.c_sub
                    .par_chunks_mut(n_sub)
                    .zip(self.status.par_iter_mut())
                    .enumerate()
                    .for_each_init(
                        || (ScDecoder::new(arith, n_sub), vec![A::Llr::default(); n_sub]),
                        |(sc, llr), (i, (out, st))| *st = ctx.run(i, sc, llr, out),
                    );
            } else {
                for (i, (out, st)) in self.c_sub.chunks_mut(n_sub).zip(self.status.iter_mut()).enumerate() {
                    *st = ctx.run(i, &mut self.sc, &mut self.llr_buf, out);
                }
            }

            for i in 0..n_sub {
                for j in 0..n_sub {
                    self.c_new[global_index(i, j, graph, n_sub)] = self.c_sub[i * n_sub + j];
                }
            }
            let invoked = self.status.iter().filter(|s| s.sc_invoked).count() as u32;
            stats.sc_invocations.push(invoked);
            stats.subdecode_calls += n_sub as u64;
            stats.iterations_used = t;
            let all_pass = self.status.iter().all(|s| !s.error_detected);
            stats.final_syndromes_pass = all_pass;
            if self.config.record_trace {
                stats.trace.push(IterationRecord {
                    graph,
                    c_hat: self.c_new.clone(),
                    errors: self.status.iter().map(|s| s.error_detected).collect(),
                });
            }

            std::mem::swap(&mut self.c_prev2, &mut self.c_prev);
            std::mem::swap(&mut self.c_prev, &mut self.c_new);
            for (e, s) in self.e_prev.iter_mut().zip(&self.status) {
                *e = s.error_detected;
            }

            if t < t_max && all_pass {
                let stop = match self.config.early_termination {
                    EarlyTermination::Off => false,
                    EarlyTermination::CurrentGraph => true,
                    EarlyTermination::BothGraphs => {
                        self.code
                            .graph_syndromes_pass(graph.other(), &self.c_prev, &mut self.syn_buf)
                    }
                };
                if stop {
                    stats.early_terminated = true;
                    break;
                }
            }
        }
        Ok(FrameOutcome {
            x_hat: self.c_prev.clone(),
            stats,
        })
    }

    /// Decodes and maps the estimate back to information bits.
    pub fn decode_message(&mut self, y: &[f64], sigma2: f64) -> Result<(Vec<u8>, FrameStats)> {
        let out = self.decode_frame(y, sigma2)?;
        let msg = self.code.spec().recover_message(&out.x_hat)?;
        Ok((msg, out.stats))
    }
}

/// Inverse transform of `x_hat` restricted to the information positions.
pub fn recover_message(x_hat: &[u8], spec: &CodeSpec) -> Result<Vec<u8>> {
    spec.recover_message(x_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::product_code_ga;
    use crate::quant::{FixedPoint, FloatLlr};
    use crate::sc::FastConfig;

    fn coeffs() -> StepCoefficients<f64> {
        StepCoefficients {
            delta: 1.5,
            theta: 0.5,
            gamma: 0.25,
        }
    }

    #[test]
    fn delta_select_cases() {
        let c = coeffs();
        assert_eq!(delta_select(false, 0, 1, &c), 0.25);
        assert_eq!(delta_select(false, 1, 1, &c), 0.25);
        assert_eq!(delta_select(true, 0, 1, &c), 1.5);
        assert_eq!(delta_select(true, 1, 1, &c), 0.5);
    }

    #[test]
    fn lgen_examples() {
        let ar = FloatLlr {
            exact: false,
            scaling: crate::quant::NoiseScaling::Cancelled,
        };
        assert!((lgen(&ar, 1.0, 1, 0.5) - 0.5).abs() < 1e-12);
        assert!((lgen(&ar, -0.8, 0, 0.75) - -0.05).abs() < 1e-12);
        let q = FixedPoint::new(6, 2).unwrap();
        assert_eq!(lgen(&q, 30, 0, 4), 31);
        assert_eq!(lgen(&q, -30, 1, 4), -31);
    }

    #[test]
    fn delta_theta_consistency_with_two_term_form() {
        // y + α(1-2c1) - β(1-2c2) equals y + Δ(1-2c1)
        let d = Damping {
            alpha: 0.75,
            beta: 0.25,
            gamma: 0.5,
        };
        let c = StepCoefficients {
            delta: d.delta(),
            theta: d.theta(),
            gamma: d.gamma,
        };
        let s = |b: u8| 1.0 - 2.0 * f64::from(b);
        for c1 in 0..2u8 {
            for c2 in 0..2u8 {
                let two = 0.3 + d.alpha * s(c1) - d.beta * s(c2);
                let one = 0.3 + delta_select(true, c1, c2, &c) * s(c1);
                assert!((two - one).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schedule_json() {
        let s = DampingSchedule::from_json(
            r#"[{"t":1,"alpha":0,"beta":0,"gamma":0},{"t":2,"alpha":0.5,"beta":0.25,"gamma":1.0}]"#,
            "s",
        )
        .unwrap();
        assert_eq!(s.at(2).alpha, 0.5);
        assert_eq!(s.at(9), s.at(2));
        assert_eq!(s.at(2).delta(), 0.75);
        assert_eq!(s.at(2).theta(), 0.25);
        assert_eq!(DampingSchedule::from_json(&s.to_json(), "rt").unwrap(), s);
        assert!(DampingSchedule::from_json(r#"[{"t":2,"alpha":0,"beta":0,"gamma":0}]"#, "gap").is_err());
        assert!(DampingSchedule::from_json("[]", "empty").is_err());
        let _ = DampingSchedule::shipped_default();
    }

    #[test]
    fn noiseless_frame_stops_after_one_iteration() {
        let spec = Arc::new(product_code_ga(16, 12, 4.0).unwrap());
        let mut dec = FrameDecoder::for_spec(spec.clone(), FixedPoint::new(6, 2).unwrap(), DecoderConfig::new(5)).unwrap();
        let msg: Vec<u8> = (0..spec.k_total()).map(|i| (i % 3 == 0) as u8).collect();
        let x = spec.encode(&msg).unwrap();
        let y: Vec<f64> = x.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect();
        let out = dec.decode_frame(&y, 0.1).unwrap();
        assert_eq!(out.x_hat, x);
        assert_eq!(out.stats.iterations_used, 1);
        assert_eq!(out.stats.total_sc_invocations(), 0);
        assert!(out.stats.early_terminated);
        assert_eq!(out.stats.worst_case_iterations, 5);
        assert_eq!(recover_message(&out.x_hat, &spec).unwrap(), msg);
    }

    #[test]
    fn one_iteration_is_column_decoding() {
        let spec = Arc::new(product_code_ga(16, 12, 4.0).unwrap());
        let mut cfg = DecoderConfig::new(1);
        cfg.sc_mode = ScMode::Fast(FastConfig::default());
        let arith = FloatLlr::default();
        let mut dec = FrameDecoder::for_spec(spec.clone(), arith, cfg).unwrap();
        let y: Vec<f64> = (0..256).map(|k| ((k * 37 % 11) as f64 - 4.7) / 3.0).collect();
        let out = dec.decode_frame(&y, 0.5).unwrap();
        let code = PreparedCode::new(spec.clone(), ScMode::default());
        let mut sc = ScDecoder::new(arith, 16);
        for i in 0..16 {
            let llr: Vec<f64> = (0..16).map(|j| arith.channel_llr(y[j * 16 + i], 0.5)).collect();
            let r = sc.subdecode_owned(code.subcode(GraphId::G, i), &llr);
            let col: Vec<u8> = (0..16).map(|j| out.x_hat[j * 16 + i]).collect();
            assert_eq!(col, r.c_hat);
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let spec = Arc::new(product_code_ga(8, 6, 4.0).unwrap());
        let mut dec = FrameDecoder::for_spec(spec, FloatLlr::default(), DecoderConfig::new(2)).unwrap();
        assert!(dec.decode_frame(&[0.0; 63], 1.0).is_err());
        assert!(dec.decode_frame(&[0.0; 64], 0.0).is_err());
        let spec = Arc::new(product_code_ga(8, 6, 4.0).unwrap());
        assert!(FrameDecoder::for_spec(spec, FloatLlr::default(), DecoderConfig::new(0)).is_err());
    }
}
