//! Component decoder: syndrome check followed by (fast) successive
//! cancellation only when the check fails.
//!
//! The decoder returns code-bit estimates (the re-encoded partial sums at the
//! root), not message bits.

use std::sync::Arc;

use crate::construction::FrozenSet;
use crate::gn::butterfly;
use crate::quant::LlrArithmetic;

/// Classification of a span of the sub-code tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    /// All positions frozen.
    Rate0,
    /// No position frozen.
    Rate1,
    /// Only the last position carries information.
    Rep,
    /// Only the first position is frozen.
    Spc,
    /// Exhaustive search over the valid local patterns.
    Ml,
    Branch,
}

/// Which shortcuts the fast decoder may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FastConfig {
    /// Rate-1, REP and SPC nodes are recognized only below this length.
    pub special_max_len: usize,
    /// Span length decoded by exhaustive ML when no other rule applies
    /// (0 disables).
    pub ml_len: usize,
    pub rate1: bool,
    pub rep: bool,
    pub spc: bool,
}

impl Default for FastConfig {
    fn default() -> Self {
        Self {
            special_max_len: 32,
            ml_len: 4,
            rate1: true,
            rep: true,
            spc: true,
        }
    }
}

impl FastConfig {
    /// Only the shortcuts that reproduce SC decisions exactly (Rate-0, Rate-1,
    /// REP).
    pub fn exact_only() -> Self {
        Self {
            ml_len: 0,
            spc: false,
            ..Self::default()
        }
    }
}

/// SC flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScMode {
    /// Textbook SC: full traversal down to single bits.
    Pure,
    Fast(FastConfig),
}

impl Default for ScMode {
    fn default() -> Self {
        ScMode::Fast(FastConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub class: NodeClass,
    pub start: usize,
    pub len: usize,
    children: Option<(u32, u32)>,
    /// Index into [`DecodeTree::ml_patterns`] for [`NodeClass::Ml`] nodes.
    patterns: u32,
}

/// One step of a decode, in execution order; input to the cycle model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStep {
    /// Check-node update producing a left child of `len` LLRs.
    F { len: usize },
    /// Bit-node update producing a right child of `len` LLRs.
    G { len: usize },
    /// A node decoded in one shot.
    Node { class: NodeClass, len: usize },
}

/// The node plan of one frozen pattern; immutable and shareable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeTree {
    n: usize,
    nodes: Vec<TreeNode>,
    ml_patterns: Vec<Vec<Vec<u8>>>,
}

impl DecodeTree {
    pub fn build(frozen: &FrozenSet, mode: ScMode) -> Self {
        let mut tree = DecodeTree {
            n: frozen.len(),
            nodes: Vec::new(),
            ml_patterns: Vec::new(),
        };
        tree.push(frozen.mask(), 0, frozen.len(), mode);
        tree
    }

    fn push(&mut self, mask: &[bool], start: usize, len: usize, mode: ScMode) -> u32 {
        let span = &mask[start..start + len];
        let class = classify_span(span, mode);
        let idx = self.nodes.len() as u32;
        self.nodes.push(TreeNode {
            class,
            start,
            len,
            children: None,
            patterns: 0,
        });
        match class {
            NodeClass::Branch => {
                let half = len / 2;
                let l = self.push(mask, start, half, mode);
                let r = self.push(mask, start + half, half, mode);
                self.nodes[idx as usize].children = Some((l, r));
            }
            NodeClass::Ml => {
                self.nodes[idx as usize].patterns = self.ml_patterns.len() as u32;
                self.ml_patterns.push(local_codewords(span));
            }
            _ => {}
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Nodes decoded in one shot (everything except branches), left to right.
    /// Their spans partition `0..n`.
    pub fn leaves(&self) -> Vec<(NodeClass, usize, usize)> {
        self.nodes
            .iter()
            .filter(|n| n.class != NodeClass::Branch)
            .map(|n| (n.class, n.start, n.len))
            .collect()
    }

    /// The sequence of operations an SC decode of this tree executes. Rate-0
    /// subtrees contribute nothing, and the f/g update feeding a Rate-0 child
    /// is skipped.
    pub fn trace(&self) -> Vec<TraceStep> {
        let mut out = Vec::new();
        self.trace_node(0, &mut out);
        out
    }

    fn trace_node(&self, idx: u32, out: &mut Vec<TraceStep>) {
        let node = &self.nodes[idx as usize];
        match (node.class, node.children) {
            (NodeClass::Rate0, _) => {}
            (NodeClass::Branch, Some((l, r))) => {
                let half = node.len / 2;
                if self.nodes[l as usize].class != NodeClass::Rate0 {
                    out.push(TraceStep::F { len: half });
                    self.trace_node(l, out);
                }
                if self.nodes[r as usize].class != NodeClass::Rate0 {
                    out.push(TraceStep::G { len: half });
                    self.trace_node(r, out);
                }
            }
            (class, _) => out.push(TraceStep::Node {
                class,
                len: node.len,
            }),
        }
    }
}

fn classify_span(span: &[bool], mode: ScMode) -> NodeClass {
    let len = span.len();
    let frozen = span.iter().filter(|&&f| f).count();
    if len == 1 {
        return if frozen == 1 {
            NodeClass::Rate0
        } else {
            NodeClass::Rate1
        };
    }
    let cfg = match mode {
        ScMode::Pure => return NodeClass::Branch,
        ScMode::Fast(cfg) => cfg,
    };
    if frozen == len {
        return NodeClass::Rate0;
    }
    if len < cfg.special_max_len {
        if cfg.rate1 && frozen == 0 {
            return NodeClass::Rate1;
        }
        if cfg.rep && frozen == len - 1 && !span[len - 1] {
            return NodeClass::Rep;
        }
        if cfg.spc && frozen == 1 && span[0] {
            return NodeClass::Spc;
        }
    }
    if cfg.ml_len >= 2 && len == cfg.ml_len {
        return NodeClass::Ml;
    }
    NodeClass::Branch
}

/// All codewords `u · G_len` with `u` zero on the frozen positions of `span`,
/// in increasing order of the information word.
pub fn local_codewords(span: &[bool]) -> Vec<Vec<u8>> {
    let info: Vec<usize> = (0..span.len()).filter(|&i| !span[i]).collect();
    let mut out = Vec::with_capacity(1 << info.len());
    for m in 0u32..(1 << info.len()) {
        let mut u = vec![0u8; span.len()];
        for (b, &pos) in info.iter().enumerate() {
            u[pos] = ((m >> b) & 1) as u8;
        }
        if u.len() > 1 {
            butterfly(&mut u);
        }
        out.push(u);
    }
    out
}

/// `true` iff `c_hat · G` is nonzero on some frozen position.
pub fn syndrome_check(c_hat: &[u8], frozen: &FrozenSet) -> bool {
    assert_eq!(c_hat.len(), frozen.len(), "syndrome length mismatch");
    let mut u = c_hat.to_vec();
    syndrome_in_place(&mut u, frozen)
}

fn syndrome_in_place(buf: &mut [u8], frozen: &FrozenSet) -> bool {
    if buf.len() > 1 {
        butterfly(buf);
    }
    frozen.indices().iter().any(|&j| buf[j] != 0)
}

/// Output of [`ScDecoder::subdecode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubDecodeStatus {
    pub error_detected: bool,
    pub sc_invoked: bool,
}

/// Owned form of a sub-decode, for callers outside the frame decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubDecodeResult {
    pub c_hat: Vec<u8>,
    pub error_detected: bool,
    pub sc_invoked: bool,
}

/// A frozen pattern with its prebuilt node plan.
#[derive(Debug, Clone)]
pub struct SubCode {
    frozen: FrozenSet,
    tree: Arc<DecodeTree>,
}

impl SubCode {
    pub fn new(frozen: FrozenSet, mode: ScMode) -> Self {
        let tree = Arc::new(DecodeTree::build(&frozen, mode));
        Self { frozen, tree }
    }

    pub fn frozen(&self) -> &FrozenSet {
        &self.frozen
    }

    pub fn tree(&self) -> &DecodeTree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frozen.is_empty()
    }
}

/// SC decoder instance with its own scratch buffers.
///
/// Cheap to create; not shareable across threads while decoding, so keep one
/// per worker.
#[derive(Debug, Clone)]
pub struct ScDecoder<A: LlrArithmetic> {
    arith: A,
    alpha: Vec<A::Llr>,
    scratch: Vec<u8>,
}

impl<A: LlrArithmetic> ScDecoder<A> {
    pub fn new(arith: A, n: usize) -> Self {
        Self {
            arith,
            alpha: vec![A::Llr::default(); 2 * n],
            scratch: vec![0; n],
        }
    }

    pub fn arithmetic(&self) -> &A {
        &self.arith
    }

    fn ensure(&mut self, n: usize) {
        if self.scratch.len() < n {
            self.alpha.resize(2 * n, A::Llr::default());
            self.scratch.resize(n, 0);
        }
    }

    /// SC-decodes `llr` along `tree`, writing the codeword estimate to `out`.
    pub fn decode(&mut self, tree: &DecodeTree, llr: &[A::Llr], out: &mut [u8]) {
        let n = tree.len();
        assert_eq!(llr.len(), n, "LLR length mismatch");
        assert_eq!(out.len(), n, "output length mismatch");
        self.ensure(n);
        self.alpha[..n].copy_from_slice(llr);
        decode_node(&self.arith, tree, 0, &mut self.alpha[..2 * n], out);
    }

    /// Hard decision and syndrome check; SC runs only if the check fails.
    pub fn subdecode(&mut self, sub: &SubCode, llr: &[A::Llr], out: &mut [u8]) -> SubDecodeStatus {
        let n = sub.len();
        assert_eq!(llr.len(), n, "LLR length mismatch");
        self.ensure(n);
        for (o, &l) in out.iter_mut().zip(llr) {
            *o = self.arith.hard(l);
        }
        let syn = &mut self.scratch[..n];
        syn.copy_from_slice(out);
        let error_detected = syndrome_in_place(syn, &sub.frozen);
        if error_detected {
            self.decode(&sub.tree, llr, out);
        }
        SubDecodeStatus {
            error_detected,
            sc_invoked: error_detected,
        }
    }

    pub fn subdecode_owned(&mut self, sub: &SubCode, llr: &[A::Llr]) -> SubDecodeResult {
        let mut c_hat = vec![0; sub.len()];
        let st = self.subdecode(sub, llr, &mut c_hat);
        SubDecodeResult {
            c_hat,
            error_detected: st.error_detected,
            sc_invoked: st.sc_invoked,
        }
    }
}

/// Decodes node `idx`. `alpha` starts with this node's `len` input LLRs; the
/// remainder is scratch for the subtree. `beta` is this node's output span.
fn decode_node<A: LlrArithmetic>(
    ar: &A,
    tree: &DecodeTree,
    idx: u32,
    alpha: &mut [A::Llr],
    beta: &mut [u8],
) {
    let node = &tree.nodes[idx as usize];
    let len = node.len;
    let (cur, rest) = alpha.split_at_mut(len);
    match node.class {
        NodeClass::Rate0 => beta.fill(0),
        NodeClass::Rate1 => {
            for (b, &a) in beta.iter_mut().zip(cur.iter()) {
                *b = ar.hard(a);
            }
        }
        NodeClass::Rep => {
            // Same pairwise saturating sums the SC g-chain would form.
            let mut width = len / 2;
            for i in 0..width {
                rest[i] = ar.add(cur[i], cur[i + width]);
            }
            while width > 1 {
                width /= 2;
                for i in 0..width {
                    rest[i] = ar.add(rest[i], rest[i + width]);
                }
            }
            beta.fill(ar.hard(rest[0]));
        }
        NodeClass::Spc => {
            let mut parity = 0u8;
            let mut weakest = 0;
            for (i, (b, &a)) in beta.iter_mut().zip(cur.iter()).enumerate() {
                *b = ar.hard(a);
                parity ^= *b;
                if ar.magnitude(a) < ar.magnitude(cur[weakest]) {
                    weakest = i;
                }
            }
            if parity == 1 {
                beta[weakest] ^= 1;
            }
        }
        NodeClass::Ml => {
            let patterns = &tree.ml_patterns[node.patterns as usize];
            let mut best = f64::NEG_INFINITY;
            let mut best_idx = 0;
            for (p, cw) in patterns.iter().enumerate() {
                let metric: f64 = cw
                    .iter()
                    .zip(cur.iter())
                    .map(|(&c, &a)| if c == 0 { ar.to_f64(a) } else { -ar.to_f64(a) })
                    .sum();
                if metric > best {
                    best = metric;
                    best_idx = p;
                }
            }
            beta.copy_from_slice(&patterns[best_idx]);
        }
        NodeClass::Branch => {
            let (l, r) = node.children.expect("branch node has children");
            let half = len / 2;
            let (bl, br) = beta.split_at_mut(half);
            let left_frozen = tree.nodes[l as usize].class == NodeClass::Rate0;
            if left_frozen {
                bl.fill(0);
                for i in 0..half {
                    rest[i] = ar.add(cur[i + half], cur[i]);
                }
            } else {
                for i in 0..half {
                    rest[i] = ar.f(cur[i], cur[i + half]);
                }
                decode_node(ar, tree, l, rest, bl);
                for i in 0..half {
                    rest[i] = ar.g(cur[i], cur[i + half], bl[i]);
                }
            }
            decode_node(ar, tree, r, rest, br);
            for i in 0..half {
                bl[i] ^= br[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::{FixedPoint, FloatLlr};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frozen(n: usize, idx: &[usize]) -> FrozenSet {
        FrozenSet::new(n, idx.to_vec()).unwrap()
    }

    fn classes(f: &FrozenSet) -> Vec<NodeClass> {
        DecodeTree::build(f, ScMode::default())
            .leaves()
            .iter()
            .map(|l| l.0)
            .collect()
    }

    #[test]
    fn classify_whole_nodes() {
        assert_eq!(classes(&frozen(8, &[0, 1, 2, 3, 4, 5, 6, 7])), vec![NodeClass::Rate0]);
        assert_eq!(classes(&frozen(128, &(0..128).collect::<Vec<_>>())), vec![NodeClass::Rate0]);
        assert_eq!(classes(&frozen(8, &[0])), vec![NodeClass::Spc]);
        assert_eq!(classes(&frozen(8, &[])), vec![NodeClass::Rate1]);
        assert_eq!(classes(&frozen(8, &[0, 1, 2, 3, 4, 5, 6])), vec![NodeClass::Rep]);
        // rate-1 of length 32 is not special; it splits into two length-16 nodes
        assert_eq!(classes(&frozen(32, &[])), vec![NodeClass::Rate1, NodeClass::Rate1]);
        // {0,1,2,4}: left half REP, right half SPC
        assert_eq!(classes(&frozen(8, &[0, 1, 2, 4])), vec![NodeClass::Rep, NodeClass::Spc]);
        // length-4 pattern matching nothing else
        assert_eq!(classes(&frozen(4, &[0, 2])), vec![NodeClass::Ml]);
    }

    #[test]
    fn pure_tree_is_all_single_bits() {
        let f = frozen(16, &[0, 1, 2, 4, 8]);
        let tree = DecodeTree::build(&f, ScMode::Pure);
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 16);
        for (p, (class, start, len)) in leaves.into_iter().enumerate() {
            assert_eq!((start, len), (p, 1));
            let expect = if f.contains(p) { NodeClass::Rate0 } else { NodeClass::Rate1 };
            assert_eq!(class, expect);
        }
    }

    #[test]
    fn syndrome_examples() {
        let f = frozen(8, &[0, 1, 2, 4]);
        assert!(!syndrome_check(&[0; 8], &f));
        for cw in local_codewords(f.mask()) {
            assert!(!syndrome_check(&cw, &f));
            let mut bad = cw.clone();
            bad[7] ^= 1; // weight-1 error: u = e_7·G = row 7 of G = all ones, so frozen bits light up
            assert!(syndrome_check(&bad, &f));
        }
    }

    #[test]
    fn noiseless_frames_decode_exactly() {
        let f = frozen(16, &[0, 1, 2, 3, 4, 8]);
        let sub = SubCode::new(f.clone(), ScMode::default());
        let q = FixedPoint::new(6, 2).unwrap();
        let mut dec = ScDecoder::new(q, 16);
        for cw in local_codewords(f.mask()) {
            let llr: Vec<i32> = cw.iter().map(|&b| if b == 0 { 31 } else { -31 }).collect();
            let mut out = vec![0; 16];
            dec.decode(sub.tree(), &llr, &mut out);
            assert_eq!(out, cw);
            let res = dec.subdecode_owned(&sub, &llr);
            assert_eq!(res.c_hat, cw);
            assert!(!res.error_detected && !res.sc_invoked);
        }
    }

    #[test]
    fn rate1_code_is_hard_decision() {
        let sub = SubCode::new(frozen(16, &[]), ScMode::default());
        let mut dec = ScDecoder::new(FloatLlr::default(), 16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let llr: Vec<f64> = (0..16).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut out = vec![0; 16];
            dec.decode(sub.tree(), &llr, &mut out);
            let hard: Vec<u8> = llr.iter().map(|&l| u8::from(l < 0.0)).collect();
            assert_eq!(out, hard);
            // a rate-1 code never fails its syndrome check
            assert!(!dec.subdecode_owned(&sub, &llr).sc_invoked);
        }
    }

    #[test]
    fn all_frozen_subcode_returns_zero_word() {
        let sub = SubCode::new(frozen(8, &[0, 1, 2, 3, 4, 5, 6, 7]), ScMode::default());
        let mut dec = ScDecoder::new(FixedPoint::new(6, 2).unwrap(), 8);
        let llr = vec![-3, 4, -5, 1, 1, 1, 1, 2];
        let res = dec.subdecode_owned(&sub, &llr);
        assert!(res.error_detected && res.sc_invoked);
        assert_eq!(res.c_hat, vec![0; 8]);
    }

    #[test]
    fn detectable_flip_invokes_sc() {
        let f = frozen(8, &[0, 1, 2, 4]);
        let sub = SubCode::new(f, ScMode::default());
        let mut dec = ScDecoder::new(FixedPoint::new(6, 2).unwrap(), 8);
        // all-zero codeword with position 7 saturated wrong; see syndrome_examples
        let mut llr = vec![8; 8];
        llr[7] = -31;
        let res = dec.subdecode_owned(&sub, &llr);
        assert!(res.error_detected && res.sc_invoked);
        assert!(!syndrome_check(&res.c_hat, sub.frozen()));
    }

    #[test]
    fn trace_skips_rate0() {
        let tree = DecodeTree::build(&frozen(8, &[0, 1, 2, 3, 4, 5, 6, 7]), ScMode::default());
        assert!(tree.trace().is_empty());
        // left half frozen: only the g update and the right node
        let tree = DecodeTree::build(&frozen(8, &[0, 1, 2, 3]), ScMode::default());
        assert_eq!(
            tree.trace(),
            vec![TraceStep::G { len: 4 }, TraceStep::Node { class: NodeClass::Rate1, len: 4 }]
        );
    }
}
