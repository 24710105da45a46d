//! Analytical KPI model: sub-decoder cycle counts, worst-case frame latency,
//! area efficiency and technology scaling.
//!
//! Everything here is arithmetic over published figures and decode traces.
//! The node cost table is a fit, not a measurement.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::construction::CodeSpec;
use crate::error::{Error, Result};
use crate::gn::GraphId;
use crate::sc::{NodeClass, TraceStep};

pub const DEFAULT_CLOCK_GHZ: f64 = 1.05;

/// Multiplier bringing the literal area-efficiency formula onto the
/// published 16nm column; see [`fit_calibration`].
pub const TABLE_CALIBRATION: f64 = 0.9315;

/// Sub-decoder latency for length-128 codes: (information bits, cycles).
pub const SUB_DECODER_CYCLES: [(usize, u32); 4] = [(111, 24), (115, 19), (119, 18), (122, 13)];

/// One row of the published throughput table (16nm, 1.00 mm²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub info_bits: u64,
    pub k_sub: usize,
    pub iterations: u32,
    pub esn0_db: f64,
    pub latency_ns: f64,
    pub area_eff_16nm: f64,
    pub area_eff_10nm: f64,
    pub area_eff_7nm: f64,
}

const fn row(
    info_bits: u64,
    k_sub: usize,
    iterations: u32,
    esn0_db: f64,
    latency_ns: f64,
    e16: f64,
    e10: f64,
    e7: f64,
) -> PublishedRow {
    PublishedRow {
        info_bits,
        k_sub,
        iterations,
        esn0_db,
        latency_ns,
        area_eff_16nm: e16,
        area_eff_10nm: e10,
        area_eff_7nm: e7,
    }
}

pub const PUBLISHED_AREA_MM2: f64 = 1.00;

pub const PUBLISHED_ROWS: [PublishedRow; 10] = [
    row(13225, 115, 4, 7.14, 91.2, 135.07, 310.66, 596.47),
    row(13225, 115, 5, 6.82, 114.0, 108.06, 248.53, 477.17),
    row(13225, 115, 6, 6.55, 136.8, 90.05, 207.11, 397.64),
    row(13225, 115, 7, 6.36, 159.6, 77.18, 177.52, 340.84),
    row(13225, 115, 8, 6.20, 182.4, 67.53, 155.33, 298.23),
    row(14161, 119, 4, 7.79, 87.4, 150.92, 347.11, 666.45),
    row(14161, 119, 5, 7.48, 109.25, 120.73, 277.69, 533.16),
    row(14161, 119, 6, 7.22, 131.1, 100.61, 231.41, 444.30),
    row(14161, 119, 7, 7.06, 152.95, 86.24, 198.35, 380.83),
    row(14161, 119, 8, 6.97, 174.8, 75.46, 173.55, 322.22),
];

/// Inputs of the area-efficiency formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiInput {
    pub info_bits: f64,
    pub latency_ns: f64,
    pub area_mm2: f64,
    pub iterations: u32,
    /// Operating point; carried along for reporting only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esn0_db: Option<f64>,
}

/// `calibration · K / (latency · area)` in Gbps/mm².
pub fn area_efficiency(kpi: &KpiInput, calibration: f64) -> Result<f64> {
    for (name, v) in [
        ("info_bits", kpi.info_bits),
        ("latency_ns", kpi.latency_ns),
        ("area_mm2", kpi.area_mm2),
        ("calibration", calibration),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if kpi.iterations == 0 {
        return Err(Error::invalid("iterations must be positive"));
    }
    Ok(calibration * kpi.info_bits / (kpi.latency_ns * kpi.area_mm2))
}

/// Process node for [`scale_technology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TechNode {
    #[serde(rename = "16nm")]
    N16,
    #[serde(rename = "10nm")]
    N10,
    #[serde(rename = "7nm")]
    N7,
}

impl TechNode {
    /// Area-efficiency multiplier relative to 16nm.
    pub fn ratio(self) -> f64 {
        match self {
            TechNode::N16 => 1.0,
            TechNode::N10 => 2.300,
            TechNode::N7 => 4.416,
        }
    }
}

impl fmt::Display for TechNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TechNode::N16 => "16nm",
            TechNode::N10 => "10nm",
            TechNode::N7 => "7nm",
        })
    }
}

impl FromStr for TechNode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "16nm" | "16" => Ok(TechNode::N16),
            "10nm" | "10" => Ok(TechNode::N10),
            "7nm" | "7" => Ok(TechNode::N7),
            other => Err(Error::invalid(format!(
                "unknown technology node {other:?} (expected 16nm, 10nm or 7nm)"
            ))),
        }
    }
}

/// Converts a 16nm area efficiency to `target`.
pub fn scale_technology(value_16nm: f64, target: TechNode) -> Result<f64> {
    if !(value_16nm.is_finite() && value_16nm >= 0.0) {
        return Err(Error::invalid(format!(
            "value must be non-negative, got {value_16nm}"
        )));
    }
    Ok(value_16nm * target.ratio())
}

/// Sub-decoder cycles keyed by the number of information bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyTable {
    cycles: BTreeMap<usize, u32>,
    clock_ghz: f64,
}

impl LatencyTable {
    pub fn new(cycles: BTreeMap<usize, u32>, clock_ghz: f64) -> Result<Self> {
        if let Some((k, _)) = cycles.iter().find(|(_, &c)| c == 0) {
            return Err(Error::invalid(format!("zero cycles for K_sub={k}")));
        }
        if !(clock_ghz.is_finite() && clock_ghz > 0.0) {
            return Err(Error::invalid(format!("clock must be positive, got {clock_ghz}")));
        }
        Ok(Self { cycles, clock_ghz })
    }

    /// The published length-128 table at the default clock.
    pub fn published() -> Self {
        Self {
            cycles: SUB_DECODER_CYCLES.into_iter().collect(),
            clock_ghz: DEFAULT_CLOCK_GHZ,
        }
    }

    pub fn clock_ghz(&self) -> f64 {
        self.clock_ghz
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.cycles.iter().map(|(&k, &c)| (k, c))
    }

    pub fn cycles(&self, k_sub: usize) -> Result<u32> {
        self.cycles
            .get(&k_sub)
            .copied()
            .ok_or_else(|| Error::invalid(format!("latency table has no entry for K_sub={k_sub}")))
    }
}

/// Worst-case latency in ns of `t_max` iterations at `cycles` per
/// sub-decoder run plus `overhead_cycles` per iteration.
pub fn latency_ns(t_max: u32, cycles: f64, overhead_cycles: f64, clock_ghz: f64) -> f64 {
    f64::from(t_max) * (cycles + overhead_cycles) / clock_ghz
}

/// Worst-case frame latency of `spec`: every iteration waits for the slowest
/// sub-code in the table.
pub fn iteration_latency(
    spec: &CodeSpec,
    t_max: u32,
    table: &LatencyTable,
    overhead_cycles: f64,
) -> Result<f64> {
    let mut worst = 0u32;
    for graph in [GraphId::G, GraphId::Gpi] {
        for i in 0..spec.n_sub() {
            worst = worst.max(table.cycles(spec.frozen(graph, i).info_count())?);
        }
    }
    Ok(latency_ns(t_max, f64::from(worst), overhead_cycles, table.clock_ghz))
}

/// Least-squares per-iteration overhead (cycles) for `latency = t (c + δ) / clock`
/// over the published rows.
pub fn fit_overhead(rows: &[PublishedRow], table: &LatencyTable) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for r in rows {
        let t = f64::from(r.iterations);
        let c = f64::from(table.cycles(r.k_sub)?);
        num += t * (r.latency_ns * table.clock_ghz - t * c);
        den += t * t;
    }
    if den == 0.0 {
        return Err(Error::invalid("no rows to fit"));
    }
    Ok(num / den)
}

/// Least-squares calibration in relative error: minimizes
/// `Σ (c·formula/published − 1)²`.
pub fn fit_calibration(rows: &[PublishedRow]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for r in rows {
        let raw = area_efficiency(&r.kpi_input(), 1.0)?;
        let q = raw / r.area_eff_16nm;
        num += q;
        den += q * q;
    }
    if den == 0.0 {
        return Err(Error::invalid("no rows to fit"));
    }
    Ok(num / den)
}

impl PublishedRow {
    pub fn kpi_input(&self) -> KpiInput {
        KpiInput {
            info_bits: self.info_bits as f64,
            latency_ns: self.latency_ns,
            area_mm2: PUBLISHED_AREA_MM2,
            iterations: self.iterations,
            esn0_db: Some(self.esn0_db),
        }
    }

    pub fn published(&self, node: TechNode) -> f64 {
        match node {
            TechNode::N16 => self.area_eff_16nm,
            TechNode::N10 => self.area_eff_10nm,
            TechNode::N7 => self.area_eff_7nm,
        }
    }
}

/// Cycle cost of each traced operation. Totals are rounded to whole cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeCosts {
    /// One f or g update, any length.
    pub fg: f64,
    pub rate1: f64,
    pub rep: f64,
    /// An SPC node of length `L` costs `spc_per_stage · log2(L/2)`.
    pub spc_per_stage: f64,
    pub ml: f64,
    /// A single-bit decision (pure SC leaves).
    pub bit: f64,
}

impl Default for NodeCosts {
    /// Output of [`fit_node_costs`] on the published length-128 table with
    /// GA construction at 6.3 dB.
    fn default() -> Self {
        Self {
            fg: 0.25,
            rate1: 0.5,
            rep: 2.0,
            spc_per_stage: 0.75,
            ml: 4.0,
            bit: 0.25,
        }
    }
}

impl NodeCosts {
    fn step(&self, step: &TraceStep) -> f64 {
        match *step {
            TraceStep::F { .. } | TraceStep::G { .. } => self.fg,
            TraceStep::Node { class, len } => match class {
                NodeClass::Rate0 | NodeClass::Branch => 0.0,
                NodeClass::Rate1 if len == 1 => self.bit,
                NodeClass::Rate1 => self.rate1,
                NodeClass::Rep => self.rep,
                NodeClass::Spc => self.spc_per_stage * (len.max(2).trailing_zeros() - 1) as f64,
                NodeClass::Ml => self.ml,
            },
        }
    }
}

/// Estimated sub-decoder cycles for one decode trace.
pub fn cycle_count_model(trace: &[TraceStep], costs: &NodeCosts) -> u32 {
    let total: f64 = trace.iter().map(|s| costs.step(s)).sum();
    total.round().max(0.0) as u32
}

fn cycle_error(samples: &[(Vec<TraceStep>, u32)], costs: &NodeCosts) -> (f64, f64) {
    let mut worst: f64 = 0.0;
    let mut sse = 0.0;
    for (trace, target) in samples {
        let e: f64 = trace.iter().map(|s| costs.step(s)).sum::<f64>() - f64::from(*target);
        worst = worst.max(e.abs());
        sse += e * e;
    }
    (worst, sse)
}

/// Grid search over quarter-cycle cost tables. Minimizes the worst absolute
/// error, then the squared error, then the summed costs; the first table in
/// grid order wins remaining ties. `bit` is left at `fg`.
pub fn fit_node_costs(samples: &[(Vec<TraceStep>, u32)]) -> NodeCosts {
    let grid = |lo: u32, hi: u32| (lo..=hi).map(|q| f64::from(q) * 0.25);
    let mut best: Option<((f64, f64, f64), NodeCosts)> = None;
    for fg in grid(1, 4) {
        for rate1 in grid(0, 8) {
            for rep in grid(0, 8) {
                for spc_per_stage in grid(0, 8) {
                    for ml in grid(0, 16) {
                        let c = NodeCosts {
                            fg,
                            rate1,
                            rep,
                            spc_per_stage,
                            ml,
                            bit: fg,
                        };
                        let (worst, sse) = cycle_error(samples, &c);
                        let key = (worst, sse, fg + rate1 + rep + spc_per_stage + ml);
                        if best.as_ref().is_none_or(|(k, _)| key < *k) {
                            best = Some((key, c));
                        }
                    }
                }
            }
        }
    }
    best.map(|(_, c)| c).unwrap_or_default()
}

/// A KPI scenario: rows to evaluate plus shared parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpiScenario {
    pub version: u32,
    #[serde(default)]
    pub label: String,
    pub area_mm2: f64,
    #[serde(default = "default_clock")]
    pub clock_ghz: f64,
    #[serde(default = "default_calibration")]
    pub calibration: f64,
    /// Per-iteration overhead used when a row gives `k_sub` instead of a
    /// latency.
    #[serde(default)]
    pub overhead_cycles: Option<f64>,
    pub rows: Vec<ScenarioRow>,
}

fn default_clock() -> f64 {
    DEFAULT_CLOCK_GHZ
}

fn default_calibration() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRow {
    pub info_bits: u64,
    pub iterations: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esn0_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sub: Option<usize>,
    /// Published 16nm value, if any, for comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

/// One evaluated scenario row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KpiRow {
    pub info_bits: u64,
    pub iterations: u32,
    pub esn0_db: Option<f64>,
    pub latency_ns: f64,
    pub area_eff: f64,
    pub scaled: f64,
    pub node: TechNode,
    pub reference: Option<f64>,
}

impl KpiScenario {
    /// The published table with its own latencies.
    pub fn published() -> Self {
        Self {
            version: 1,
            label: "published 16nm throughput table".into(),
            area_mm2: PUBLISHED_AREA_MM2,
            clock_ghz: DEFAULT_CLOCK_GHZ,
            calibration: TABLE_CALIBRATION,
            overhead_cycles: None,
            rows: PUBLISHED_ROWS
                .iter()
                .map(|r| ScenarioRow {
                    info_bits: r.info_bits,
                    iterations: r.iterations,
                    esn0_db: Some(r.esn0_db),
                    latency_ns: Some(r.latency_ns),
                    k_sub: Some(r.k_sub),
                    reference: Some(r.area_eff_16nm),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let s: KpiScenario = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("{context}:{}:{}", e.line(), e.column()), e.to_string())
        })?;
        if s.version != 1 {
            return Err(Error::parse(
                format!("{context}: version"),
                format!("unsupported version {}", s.version),
            ));
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Evaluates every row; rows without a latency use the published cycle
    /// table and `overhead_cycles`.
    pub fn evaluate(&self, node: TechNode) -> Result<Vec<KpiRow>> {
        let table = LatencyTable::new(SUB_DECODER_CYCLES.into_iter().collect(), self.clock_ghz)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(idx, r)| {
                let latency = match (r.latency_ns, r.k_sub) {
                    (Some(l), _) => l,
                    (None, Some(k)) => {
                        let overhead = self.overhead_cycles.ok_or_else(|| {
                            Error::invalid(format!("rows[{idx}]: no latency_ns and no overhead_cycles"))
                        })?;
                        latency_ns(r.iterations, f64::from(table.cycles(k)?), overhead, self.clock_ghz)
                    }
                    (None, None) => {
                        return Err(Error::invalid(format!("rows[{idx}]: needs latency_ns or k_sub")))
                    }
                };
                let input = KpiInput {
                    info_bits: r.info_bits as f64,
                    latency_ns: latency,
                    area_mm2: self.area_mm2,
                    iterations: r.iterations,
                    esn0_db: r.esn0_db,
                };
                let area_eff = area_efficiency(&input, self.calibration)
                    .map_err(|e| Error::invalid(format!("rows[{idx}]: {e}")))?;
                Ok(KpiRow {
                    info_bits: r.info_bits,
                    iterations: r.iterations,
                    esn0_db: r.esn0_db,
                    latency_ns: latency,
                    area_eff,
                    scaled: scale_technology(area_eff, node)?,
                    node,
                    reference: r.reference,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::gaussian_approx_order;
    use crate::sc::{DecodeTree, ScMode};
    use proptest::prelude::*;

    fn kpi(k: f64, lat: f64, area: f64) -> KpiInput {
        KpiInput {
            info_bits: k,
            latency_ns: lat,
            area_mm2: area,
            iterations: 5,
            esn0_db: None,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn formula_examples() {
        let raw = area_efficiency(&kpi(13225.0, 114.0, 1.0), 1.0).unwrap();
        assert!((raw - 116.01).abs() < 0.005);
        let cal = area_efficiency(&kpi(13225.0, 114.0, 1.0), TABLE_CALIBRATION).unwrap();
        assert!(rel(cal, 108.06) < 0.005);
        let cal = area_efficiency(&kpi(14161.0, 109.25, 1.0), TABLE_CALIBRATION).unwrap();
        assert!(rel(cal, 120.73) < 0.005);
    }

    #[test]
    fn formula_rejects_non_positive() {
        assert!(area_efficiency(&kpi(0.0, 114.0, 1.0), 1.0).is_err());
        assert!(area_efficiency(&kpi(13225.0, -1.0, 1.0), 1.0).is_err());
        assert!(area_efficiency(&kpi(13225.0, 114.0, 0.0), 1.0).is_err());
        assert!(area_efficiency(&kpi(13225.0, 114.0, 1.0), 0.0).is_err());
        assert!(area_efficiency(&kpi(f64::NAN, 114.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn scaling_examples() {
        assert!(rel(scale_technology(135.07, TechNode::N10).unwrap(), 310.66) < 1e-3);
        assert!(rel(scale_technology(108.06, TechNode::N7).unwrap(), 477.17) < 1e-3);
        assert_eq!(scale_technology(0.0, TechNode::N7).unwrap(), 0.0);
        assert!(scale_technology(-1.0, TechNode::N7).is_err());
        assert!("5nm".parse::<TechNode>().is_err());
        assert_eq!("7nm".parse::<TechNode>().unwrap(), TechNode::N7);
    }

    #[test]
    fn ratios_cover_every_row_but_one() {
        // The last 7nm entry (322.22) is 4.27x its 16nm value; every other
        // entry agrees with the constant ratios.
        let mut off = Vec::new();
        for (idx, r) in PUBLISHED_ROWS.iter().enumerate() {
            for node in [TechNode::N10, TechNode::N7] {
                let v = scale_technology(r.area_eff_16nm, node).unwrap();
                if rel(v, r.published(node)) >= 1e-3 {
                    off.push((idx, node));
                }
            }
        }
        assert_eq!(off, vec![(9, TechNode::N7)]);
    }

    #[test]
    fn latency_examples() {
        let table = LatencyTable::published();
        assert_eq!(table.cycles(115).unwrap(), 19);
        assert!(table.cycles(100).is_err());
        let delta = fit_overhead(&PUBLISHED_ROWS, &table).unwrap();
        assert!((delta - 5.0).abs() < 0.2, "{delta}");
        assert!((latency_ns(5, 19.0, delta, 1.05) - 114.0).abs() < 0.5);
        assert_eq!(latency_ns(0, 19.0, delta, 1.05), 0.0);
    }

    #[test]
    fn iteration_latency_uses_slowest_subcode() {
        let spec = crate::construction::product_code_ga(128, 115, 6.3).unwrap();
        let table = LatencyTable::published();
        let ns = iteration_latency(&spec, 5, &table, 5.0).unwrap();
        assert!((ns - 5.0 * 24.0 / 1.05).abs() < 1e-9);
        let spec = crate::construction::product_code_ga(128, 100, 6.3).unwrap();
        assert!(iteration_latency(&spec, 5, &table, 5.0).is_err());
    }

    #[test]
    fn calibration_fit_matches_constant() {
        let c = fit_calibration(&PUBLISHED_ROWS).unwrap();
        assert!((c - TABLE_CALIBRATION).abs() < 5e-4, "{c}");
    }

    #[test]
    fn rate0_only_tree_costs_nothing() {
        let frozen = crate::construction::FrozenSet::new(16, (0..16).collect()).unwrap();
        let tree = DecodeTree::build(&frozen, ScMode::default());
        assert_eq!(cycle_count_model(&tree.trace(), &NodeCosts::default()), 0);
    }

    fn published_samples() -> Vec<(Vec<TraceStep>, u32)> {
        let order = gaussian_approx_order(128, 6.3).unwrap();
        SUB_DECODER_CYCLES
            .iter()
            .map(|&(k, c)| {
                let frozen = order.frozen_set(128 - k).unwrap();
                (DecodeTree::build(&frozen, ScMode::default()).trace(), c)
            })
            .collect()
    }

    #[test]
    fn default_costs_are_the_fit() {
        let samples = published_samples();
        assert_eq!(fit_node_costs(&samples), NodeCosts::default());
        for (trace, target) in &samples {
            let c = cycle_count_model(trace, &NodeCosts::default());
            assert!(c.abs_diff(*target) <= 2, "{c} vs {target}");
        }
    }

    #[test]
    fn published_scenario_round_trips() {
        let s = KpiScenario::published();
        let back = KpiScenario::from_json(&s.to_json(), "mem").unwrap();
        assert_eq!(back, s);
        let rows = s.evaluate(TechNode::N16).unwrap();
        for (r, p) in rows.iter().zip(&PUBLISHED_ROWS) {
            assert!(rel(r.area_eff, p.area_eff_16nm) < 0.005);
        }
        assert!(KpiScenario::from_json("{\"version\":1}", "x").is_err());
    }

    proptest! {
        #[test]
        fn doubling_latency_halves_efficiency(k in 1.0f64..1e5, lat in 1.0f64..1e3, area in 0.1f64..10.0) {
            let a = area_efficiency(&kpi(k, lat, area), 1.0).unwrap();
            let b = area_efficiency(&kpi(k, 2.0 * lat, area), 1.0).unwrap();
            prop_assert_eq!(a, 2.0 * b);
        }

        #[test]
        fn latency_monotone_in_iterations(t in 0u32..20, c in 1.0f64..50.0, d in 0.0f64..10.0) {
            prop_assert!(latency_ns(t + 1, c, d, 1.05) >= latency_ns(t, c, d, 1.05));
        }
    }
}
