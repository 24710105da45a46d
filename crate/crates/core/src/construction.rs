//! Code specifications: per-graph, per-sub-code frozen sets, the default
//! product-polar construction and the JSON code-spec file.
//!
//! A [`CodeSpec`] fixes a frozen set `F(Λ, i)` for every sub-code `i` of both
//! graphs. The global information set is the set of message coordinates
//! `(a, b)` (position `a·√N + b`, row-major) whose unit vector, once encoded,
//! satisfies every sub-code constraint; its size is `k_total`. For the
//! product construction this is exactly `I × I`, where `I` is the sub-code
//! information set.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gn::{butterfly, global_index, GraphId};

/// Largest sub-code length accepted anywhere in the crate.
pub const MAX_SUB_LEN: usize = 1024;
pub const SPEC_FILE_VERSION: u32 = 1;

/// Frozen positions of one sub-code, kept both as a sorted list and a mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrozenSet {
    indices: Vec<usize>,
    mask: Vec<bool>,
}

impl FrozenSet {
    /// `indices` must be strictly ascending and below `n`.
    pub fn new(n: usize, indices: Vec<usize>) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("sub-code length must be a power of two, got {n}")));
        }
        let mut mask = vec![false; n];
        for (p, &idx) in indices.iter().enumerate() {
            if idx >= n {
                return Err(Error::invalid(format!("frozen index {idx} out of range 0..{n}")));
            }
            if p > 0 && indices[p - 1] >= idx {
                return Err(Error::invalid(format!(
                    "frozen indices must be strictly ascending without duplicates (found {} before {idx})",
                    indices[p - 1]
                )));
            }
            mask[idx] = true;
        }
        Ok(Self { indices, mask })
    }

    pub fn from_mask(mask: Vec<bool>) -> Result<Self> {
        let indices = mask.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect();
        Self::new(mask.len(), indices)
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn frozen_count(&self) -> usize {
        self.indices.len()
    }

    pub fn info_count(&self) -> usize {
        self.len() - self.indices.len()
    }
}

/// Bit-channel indices sorted from least to most reliable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReliabilityOrder(Vec<usize>);

impl ReliabilityOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(Error::invalid("reliability order is not a permutation"));
            }
            seen[i] = true;
        }
        Ok(Self(order))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The `frozen` least reliable positions.
    pub fn frozen_set(&self, frozen: usize) -> Result<FrozenSet> {
        let mut idx = self.0[..frozen].to_vec();
        idx.sort_unstable();
        FrozenSet::new(self.0.len(), idx)
    }
}

// Gaussian approximation.
//
// Mean LLRs are propagated with the two-piece approximation of
//   phi(x) = 1 - E[tanh(L/2)],  L ~ N(x, 2x):
//   phi(x) ≈ exp(-0.4527 x^0.86 + 0.0218)                 for x < 10
//   phi(x) ≈ sqrt(pi/x) · exp(-x/4) · (1 - 10/(7x))       for x ≥ 10
// The approximation is within a few percent of the exact integral over the
// range that matters for ranking bit channels; the two pieces disagree by
// about 0.025 in ln(phi) at x = 10. Everything runs in the log domain so that
// large means at long lengths do not underflow.

const GA_A: f64 = 0.4527;
const GA_B: f64 = 0.86;
const GA_C: f64 = 0.0218;
const GA_SPLIT: f64 = 10.0;

fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < GA_SPLIT {
        (-GA_A * x.powf(GA_B) + GA_C).min(0.0)
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

fn ln_phi_inv(t: f64) -> f64 {
    if t >= 0.0 {
        return 0.0;
    }
    let x = ((GA_C - t) / GA_A).powf(1.0 / GA_B);
    if x < GA_SPLIT {
        return x;
    }
    // second piece is strictly decreasing on [10, ∞)
    let (mut lo, mut hi) = (GA_SPLIT, 2.0 * GA_SPLIT);
    while ln_phi(hi) > t {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > t {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Check-node ("minus") mean update: `phi^-1(1 - (1 - phi(m))^2)`.
fn ga_minus(m: f64) -> f64 {
    let t = ln_phi(m);
    // ln(2·phi - phi²) = ln(phi) + ln(2 - phi)
    ln_phi_inv(t + (2.0 - t.exp()).ln())
}

/// Mean LLR of every bit channel of a length-`n` code under BPSK-AWGN with
/// noise variance `10^(-EsN0/10)`.
pub fn ga_mean_llrs(n: usize, design_esn0_db: f64) -> Result<Vec<f64>> {
    if n < 2 || !n.is_power_of_two() || n > MAX_SUB_LEN {
        return Err(Error::invalid(format!(
            "GA construction needs a power-of-two length in 2..={MAX_SUB_LEN}, got {n}"
        )));
    }
    if !design_esn0_db.is_finite() {
        return Err(Error::invalid("design Es/N0 must be finite"));
    }
    let mu0 = 2.0 * 10f64.powf(design_esn0_db / 10.0);
    // With G = F^{⊗n} in natural order SC first combines positions i and
    // i + n/2, so the most significant index bit is the first polarization
    // step applied to the channel and the least significant bit the last.
    let mut mu = vec![mu0];
    while mu.len() < n {
        mu = mu.iter().flat_map(|&m| [ga_minus(m), 2.0 * m]).collect();
    }
    Ok(mu)
}

/// Reliability order from the Gaussian approximation (least reliable first).
pub fn gaussian_approx_order(n_sub: usize, design_esn0_db: f64) -> Result<ReliabilityOrder> {
    let mu = ga_mean_llrs(n_sub, design_esn0_db)?;
    let mut order: Vec<usize> = (0..n_sub).collect();
    order.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]).then(a.cmp(&b)));
    ReliabilityOrder::new(order)
}

/// A complete code description; immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    n_sub: usize,
    frozen_g: Vec<FrozenSet>,
    frozen_gpi: Vec<FrozenSet>,
    label: String,
    info: Vec<usize>,
}

impl CodeSpec {
    /// `frozen_g[i]` / `frozen_gpi[i]` are the frozen sets of sub-code `i` on
    /// each graph.
    pub fn new(
        n_sub: usize,
        frozen_g: Vec<FrozenSet>,
        frozen_gpi: Vec<FrozenSet>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if n_sub < 2 || !n_sub.is_power_of_two() || n_sub > MAX_SUB_LEN {
            return Err(Error::invalid(format!(
                "n_sub must be a power of two in 2..={MAX_SUB_LEN}, got {n_sub}"
            )));
        }
        for (graph, sets) in [(GraphId::G, &frozen_g), (GraphId::Gpi, &frozen_gpi)] {
            if sets.len() != n_sub {
                return Err(Error::invalid(format!(
                    "graph {} needs {n_sub} frozen sets, got {}",
                    graph.as_str(),
                    sets.len()
                )));
            }
            if let Some(bad) = sets.iter().find(|s| s.len() != n_sub) {
                return Err(Error::invalid(format!(
                    "frozen set of length {} in a code with n_sub = {n_sub}",
                    bad.len()
                )));
            }
        }
        let info = derive_info_positions(n_sub, &frozen_g, &frozen_gpi);
        Ok(Self {
            n_sub,
            frozen_g,
            frozen_gpi,
            label: label.into(),
            info,
        })
    }

    /// Same frozen set on every sub-code of both graphs.
    pub fn uniform(frozen: FrozenSet, label: impl Into<String>) -> Result<Self> {
        let n = frozen.len();
        Self::new(n, vec![frozen.clone(); n], vec![frozen; n], label)
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    /// Code length `N = n_sub²`.
    pub fn n(&self) -> usize {
        self.n_sub * self.n_sub
    }

    pub fn k_total(&self) -> usize {
        self.info.len()
    }

    pub fn rate(&self) -> f64 {
        self.k_total() as f64 / self.n() as f64
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn frozen(&self, graph: GraphId, i: usize) -> &FrozenSet {
        match graph {
            GraphId::G => &self.frozen_g[i],
            GraphId::Gpi => &self.frozen_gpi[i],
        }
    }

    /// Message positions (in the `u` domain) carrying information, ascending.
    pub fn info_positions(&self) -> &[usize] {
        &self.info
    }

    /// `x = u · G_N` with the message placed on the information positions.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k_total() {
            return Err(Error::invalid(format!(
                "message has {} bits, code carries {}",
                message.len(),
                self.k_total()
            )));
        }
        let mut u = vec![0u8; self.n()];
        for (&pos, &bit) in self.info.iter().zip(message) {
            u[pos] = bit & 1;
        }
        butterfly(&mut u);
        Ok(u)
    }

    /// Inverse transform of a codeword estimate, keeping the information
    /// positions in row-major order.
    pub fn recover_message(&self, x_hat: &[u8]) -> Result<Vec<u8>> {
        if x_hat.len() != self.n() {
            return Err(Error::invalid(format!(
                "codeword has {} bits, code length is {}",
                x_hat.len(),
                self.n()
            )));
        }
        let mut u = x_hat.to_vec();
        butterfly(&mut u);
        Ok(self.info.iter().map(|&p| u[p]).collect())
    }

    /// `true` iff `x · G_N` is zero outside the information positions.
    pub fn is_codeword(&self, x: &[u8]) -> bool {
        if x.len() != self.n() {
            return false;
        }
        let mut u = x.to_vec();
        butterfly(&mut u);
        let mut info = self.info.iter().peekable();
        u.iter().enumerate().all(|(k, &b)| {
            if info.peek() == Some(&&k) {
                info.next();
                true
            } else {
                b == 0
            }
        })
    }

    /// `true` iff every sub-code of both graphs passes its syndrome check.
    pub fn satisfies_subcodes(&self, x: &[u8]) -> bool {
        if x.len() != self.n() {
            return false;
        }
        let n = self.n_sub;
        let mut buf = vec![0u8; n];
        [GraphId::G, GraphId::Gpi].into_iter().all(|graph| {
            (0..n).all(|i| {
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = x[global_index(i, j, graph, n)];
                }
                butterfly(&mut buf);
                self.frozen(graph, i).indices().iter().all(|&p| buf[p] == 0)
            })
        })
    }

    pub fn to_file_format(&self) -> CodeSpecFile {
        let mut counts: HashMap<&FrozenSet, usize> = HashMap::new();
        for s in self.frozen_g.iter().chain(&self.frozen_gpi) {
            *counts.entry(s).or_default() += 1;
        }
        // most common set becomes the default; ties broken by the set itself
        let default = counts
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.indices().cmp(a.0.indices())))
            .map(|(s, _)| s.clone())
            .expect("at least one sub-code");
        let mut overrides = Vec::new();
        for graph in [GraphId::G, GraphId::Gpi] {
            for i in 0..self.n_sub {
                let s = self.frozen(graph, i);
                if *s != default {
                    overrides.push(FrozenOverride {
                        graph: graph.as_str().to_string(),
                        i,
                        frozen: s.indices().to_vec(),
                    });
                }
            }
        }
        CodeSpecFile {
            version: SPEC_FILE_VERSION,
            n_sub: self.n_sub,
            k_total: self.k_total(),
            default_frozen: default.indices().to_vec(),
            overrides,
            label: self.label.clone(),
        }
    }

    pub fn from_file_format(file: CodeSpecFile, context: &str) -> Result<Self> {
        let field = |f: &str| format!("{context}: field `{f}`");
        if file.version != SPEC_FILE_VERSION {
            return Err(Error::parse(
                field("version"),
                format!("unsupported version {}, expected {SPEC_FILE_VERSION}", file.version),
            ));
        }
        let n = file.n_sub;
        if n < 2 || !n.is_power_of_two() || n > MAX_SUB_LEN {
            return Err(Error::parse(
                field("n_sub"),
                format!("must be a power of two in 2..={MAX_SUB_LEN}, got {n}"),
            ));
        }
        let default = FrozenSet::new(n, file.default_frozen)
            .map_err(|e| Error::parse(field("default_frozen"), e.to_string()))?;
        let mut g: Vec<Option<FrozenSet>> = vec![None; n];
        let mut gpi: Vec<Option<FrozenSet>> = vec![None; n];
        for (p, ov) in file.overrides.into_iter().enumerate() {
            let at = |f: &str| field(&format!("overrides[{p}].{f}"));
            let graph: GraphId = ov.graph.parse().map_err(|e: Error| Error::parse(at("graph"), e.to_string()))?;
            if ov.i >= n {
                return Err(Error::parse(at("i"), format!("sub-code index {} out of range 0..{n}", ov.i)));
            }
            let set = FrozenSet::new(n, ov.frozen).map_err(|e| Error::parse(at("frozen"), e.to_string()))?;
            let slot = match graph {
                GraphId::G => &mut g[ov.i],
                GraphId::Gpi => &mut gpi[ov.i],
            };
            if slot.is_some() {
                return Err(Error::parse(
                    at("i"),
                    format!("duplicate override for graph {} sub-code {}", graph.as_str(), ov.i),
                ));
            }
            *slot = Some(set);
        }
        let fill = |v: Vec<Option<FrozenSet>>| v.into_iter().map(|s| s.unwrap_or_else(|| default.clone())).collect();
        let spec = CodeSpec::new(n, fill(g), fill(gpi), file.label)
            .map_err(|e| Error::parse(context.to_string(), e.to_string()))?;
        if spec.k_total() != file.k_total {
            return Err(Error::parse(
                field("k_total"),
                format!("declared {} but the frozen sets admit {}", file.k_total, spec.k_total()),
            ));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_format()).expect("spec serializes")
    }

    /// `context` names the source (usually a path) in error messages.
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let file: CodeSpecFile = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("{context}:{}:{}", e.line(), e.column()), e.to_string())
        })?;
        Self::from_file_format(file, context)
    }
}

/// Positions `(a, b)` whose encoded unit vector satisfies every sub-code.
///
/// Encoding `e_(a,b)` gives the array `X = row_a(G)ᵀ · row_b(G)`: column `i`
/// carries message `e_a` whenever `i ⊆ b` (bitwise), and row `r` carries
/// `e_b` whenever `r ⊆ a`.
fn derive_info_positions(n: usize, frozen_g: &[FrozenSet], frozen_gpi: &[FrozenSet]) -> Vec<usize> {
    fn all_submasks(m: usize, mut pred: impl FnMut(usize) -> bool) -> bool {
        let mut s = m;
        loop {
            if !pred(s) {
                return false;
            }
            if s == 0 {
                return true;
            }
            s = (s - 1) & m;
        }
    }
    let mut info = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let cols_ok = all_submasks(b, |i| !frozen_g[i].contains(a));
            if cols_ok && all_submasks(a, |r| !frozen_gpi[r].contains(b)) {
                info.push(a * n + b);
            }
        }
    }
    info
}

/// Product-polar code: every sub-code of both graphs uses the complement of
/// the `k_sub` most reliable positions.
pub fn build_product_code(n_sub: usize, k_sub: usize, order: &ReliabilityOrder) -> Result<CodeSpec> {
    if order.len() != n_sub {
        return Err(Error::invalid(format!(
            "reliability order has length {}, expected {n_sub}",
            order.len()
        )));
    }
    if k_sub == 0 || k_sub > n_sub {
        return Err(Error::invalid(format!("k_sub must be in 1..={n_sub}, got {k_sub}")));
    }
    let frozen = order.frozen_set(n_sub - k_sub)?;
    CodeSpec::uniform(frozen, format!("product-polar n_sub={n_sub} k_sub={k_sub}"))
}

/// GA-constructed product code with a descriptive label.
pub fn product_code_ga(n_sub: usize, k_sub: usize, design_esn0_db: f64) -> Result<CodeSpec> {
    let order = gaussian_approx_order(n_sub, design_esn0_db)?;
    let frozen = build_product_code(n_sub, k_sub, &order)?.frozen(GraphId::G, 0).clone();
    CodeSpec::uniform(
        frozen,
        format!("product-polar n_sub={n_sub} k_sub={k_sub} GA@{design_esn0_db}dB"),
    )
}

/// On-disk code-spec schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpecFile {
    pub version: u32,
    pub n_sub: usize,
    pub k_total: usize,
    pub default_frozen: Vec<usize>,
    #[serde(default)]
    pub overrides: Vec<FrozenOverride>,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrozenOverride {
    pub graph: String,
    pub i: usize,
    pub frozen: Vec<usize>,
}

pub fn save_spec(spec: &CodeSpec, path: impl AsRef<Path>) -> Result<()> {
    let mut text = spec.to_json();
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<CodeSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    CodeSpec::from_json(&text, &path.display().to_string())
}
