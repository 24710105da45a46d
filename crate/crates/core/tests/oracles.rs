//! Independent reference implementations checked against the library.

use std::sync::Arc;

use gncoset::construction::{ga_mean_llrs, gaussian_approx_order, product_code_ga};
use gncoset::gn::{map_index, GraphId};
use gncoset::pdf::{DecoderConfig, EarlyTermination};
use gncoset::perf::{cycle_count_model, scale_technology, NodeCosts, TechNode, SUB_DECODER_CYCLES};
use gncoset::quant::{boxplus, FixedPoint, FloatLlr, LlrArithmetic};
use gncoset::sc::{DecodeTree, FastConfig, ScDecoder, ScMode, SubCode};
use gncoset::sim::noise_variance;
use gncoset::{FrameDecoder, FrozenSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

/// `F^{⊗m}` built row by row from the definition.
fn dense_generator(m: u32) -> Vec<Vec<u8>> {
    let n = 1usize << m;
    // Entry (r, c) of the Kronecker power is 1 iff c's bits are a subset of r's.
    (0..n).map(|r| (0..n).map(|c| u8::from(c & !r == 0)).collect()).collect()
}

fn times(u: &[u8], g: &[Vec<u8>]) -> Vec<u8> {
    let n = u.len();
    (0..n)
        .map(|c| (0..n).fold(0u8, |acc, r| acc ^ (u[r] & g[r][c])))
        .collect()
}

fn min_sum(a: f64, b: f64) -> f64 {
    a.signum() * b.signum() * a.abs().min(b.abs())
}

/// Textbook recursive SC; returns (u_hat, x_hat).
fn textbook_sc(llr: &[f64], frozen: &[bool]) -> (Vec<u8>, Vec<u8>) {
    let n = llr.len();
    if n == 1 {
        let u = if frozen[0] { 0 } else { u8::from(llr[0] < 0.0) };
        return (vec![u], vec![u]);
    }
    let h = n / 2;
    let left: Vec<f64> = (0..h).map(|i| min_sum(llr[i], llr[i + h])).collect();
    let (u_l, x_l) = textbook_sc(&left, &frozen[..h]);
    let right: Vec<f64> = (0..h)
        .map(|i| llr[i + h] + if x_l[i] == 0 { llr[i] } else { -llr[i] })
        .collect();
    let (u_r, x_r) = textbook_sc(&right, &frozen[h..]);
    let mut u = u_l;
    u.extend(u_r);
    let mut x: Vec<u8> = x_l.iter().zip(&x_r).map(|(a, b)| a ^ b).collect();
    x.extend(x_r);
    (u, x)
}

#[test]
fn kronecker_definition_matches_recursive_oracle() {
    for m in 1..=6 {
        let lib = gncoset::gn::kron_matrix(m).unwrap();
        assert_eq!(lib, dense_generator(m), "m={m}");
    }
}

#[test]
fn pure_sc_matches_textbook_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..3000 {
        let m = 1 + round % 7;
        let n = 1usize << m;
        let mask: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let llr: Vec<f64> = (0..n).map(|_| rng.random_range(-6.0..6.0)).collect();
        let (u, x) = textbook_sc(&llr, &mask);
        let g = dense_generator(m as u32);
        assert_eq!(times(&u, &g), x);

        let frozen = FrozenSet::from_mask(mask).unwrap();
        for mode in [ScMode::Pure, ScMode::Fast(FastConfig::exact_only())] {
            let sub = SubCode::new(frozen.clone(), mode);
            let mut out = vec![0; n];
            ScDecoder::new(FloatLlr::default(), n).decode(sub.tree(), &llr, &mut out);
            assert_eq!(out, x, "round {round} {mode:?}");
        }
    }
}

#[test]
fn rate1_shortcut_differs_from_traversal_only_on_ties() {
    // Hard decision of (-2, 0) is (1, 0). Traversal: f = 0 decides u0 = 0,
    // then g = 0 + (-2) decides u1 = 1, giving x = (1, 1).
    let frozen = FrozenSet::new(2, vec![]).unwrap();
    let llr = [-2.0, 0.0];
    let mut fast = [0u8; 2];
    let mut pure = [0u8; 2];
    let mut dec = ScDecoder::new(FloatLlr::default(), 2);
    dec.decode(SubCode::new(frozen.clone(), ScMode::default()).tree(), &llr, &mut fast);
    dec.decode(SubCode::new(frozen, ScMode::Pure).tree(), &llr, &mut pure);
    assert_eq!(fast, [1, 0]);
    assert_eq!(pure, [1, 1]);
    assert_eq!(textbook_sc(&llr, &[false, false]).1, vec![1, 1]);
}

#[test]
fn product_encoder_matches_dense_generator() {
    let spec = product_code_ga(8, 5, 3.0).unwrap();
    let g = dense_generator(6);
    let info = spec.info_positions().to_vec();
    assert_eq!(info.len(), 25);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let msg: Vec<u8> = (0..25).map(|_| rng.random_range(0..2)).collect();
        let mut u = vec![0u8; 64];
        for (&p, &b) in info.iter().zip(&msg) {
            u[p] = b;
        }
        let x = times(&u, &g);
        assert_eq!(spec.encode(&msg).unwrap(), x);
        assert_eq!(spec.recover_message(&x).unwrap(), msg);
        // every row and column is a codeword of the sub-code under the dense check
        let sub_g = dense_generator(3);
        for graph in [GraphId::G, GraphId::Gpi] {
            for i in 0..8 {
                let row: Vec<u8> = (0..8).map(|j| x[map_index(i, j, graph, 8).unwrap()]).collect();
                let u_row = times(&row, &sub_g);
                assert!(spec.frozen(graph, i).indices().iter().all(|&p| u_row[p] == 0));
            }
        }
    }
}

/// Genie-aided SC on the all-zero word: the LLR each bit decision sees.
fn genie_leaf_llrs(llr: &[f64], out: &mut Vec<f64>) {
    if llr.len() == 1 {
        out.push(llr[0]);
        return;
    }
    let h = llr.len() / 2;
    let left: Vec<f64> = (0..h).map(|i| boxplus(llr[i], llr[i + h])).collect();
    genie_leaf_llrs(&left, out);
    let right: Vec<f64> = (0..h).map(|i| llr[i] + llr[i + h]).collect();
    genie_leaf_llrs(&right, out);
}

fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[test]
fn gaussian_approximation_tracks_monte_carlo_genie() {
    let (n, esn0, frames) = (128usize, 6.3, 20_000);
    let sigma2 = noise_variance(esn0);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut errors = vec![0u32; n];
    let mut leaves = Vec::with_capacity(n);
    for _ in 0..frames {
        let llr: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                2.0 * (1.0 + sigma2.sqrt() * z) / sigma2
            })
            .collect();
        leaves.clear();
        genie_leaf_llrs(&llr, &mut leaves);
        for (e, &l) in errors.iter_mut().zip(&leaves) {
            *e += u32::from(l < 0.0);
        }
    }
    let mc: Vec<f64> = errors.iter().map(|&e| f64::from(e) / frames as f64).collect();
    let mu = ga_mean_llrs(n, esn0).unwrap();

    // The GA frozen set of the (128,115) code versus the 13 worst genie channels.
    let ga_frozen = gaussian_approx_order(n, esn0).unwrap().frozen_set(13).unwrap();
    let mut by_mc: Vec<usize> = (0..n).collect();
    by_mc.sort_by(|&a, &b| mc[b].total_cmp(&mc[a]));
    let overlap = by_mc[..13].iter().filter(|&&i| ga_frozen.contains(i)).count();
    assert!(overlap >= 11, "overlap {overlap}/13");

    // Predicted error probability Q(sqrt(mu/2)) on channels with enough events.
    for i in 0..n {
        if mc[i] > 0.02 {
            let ga = q_function((mu[i] / 2.0).sqrt());
            let ratio = ga / mc[i];
            assert!((0.5..2.0).contains(&ratio), "channel {i}: GA {ga:.4} MC {:.4}", mc[i]);
        }
    }
}

#[test]
fn node_ml_equals_enumeration_for_every_short_pattern() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for m in 1..=3u32 {
        let n = 1usize << m;
        let g = dense_generator(m);
        for pattern in 0u32..(1 << n) {
            let mask: Vec<bool> = (0..n).map(|b| (pattern >> b) & 1 == 1).collect();
            let frozen = FrozenSet::from_mask(mask.clone()).unwrap();
            let sub = SubCode::new(frozen, ScMode::default());
            let codewords: Vec<Vec<u8>> = (0u32..(1 << n))
                .map(|w| (0..n).map(|b| ((w >> b) & 1) as u8).collect::<Vec<u8>>())
                .filter(|u| (0..n).all(|p| !mask[p] || u[p] == 0))
                .map(|u| times(&u, &g))
                .collect();
            let single_node = sub.tree().leaves().len() == 1;
            let mut dec = ScDecoder::new(FloatLlr::default(), n);
            for _ in 0..200 {
                let llr: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
                let mut out = vec![0; n];
                dec.decode(sub.tree(), &llr, &mut out);
                if single_node {
                    let best = codewords
                        .iter()
                        .max_by(|a, b| {
                            let ma: f64 = a.iter().zip(&llr).map(|(&c, &l)| if c == 0 { l } else { -l }).sum();
                            let mb: f64 = b.iter().zip(&llr).map(|(&c, &l)| if c == 0 { l } else { -l }).sum();
                            ma.total_cmp(&mb)
                        })
                        .unwrap();
                    assert_eq!(&out, best, "pattern {mask:?}");
                }
                assert!(codewords.contains(&out));
            }
        }
    }
}

#[test]
fn first_iteration_is_plain_row_decoding() {
    let spec = Arc::new(product_code_ga(16, 11, 4.0).unwrap());
    let fp = FixedPoint::new(6, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sigma2 = noise_variance(5.0);
    let cfg = DecoderConfig {
        early_termination: EarlyTermination::Off,
        record_trace: true,
        ..DecoderConfig::new(4)
    };
    let mut dec = FrameDecoder::for_spec(spec.clone(), fp, cfg).unwrap();
    for _ in 0..50 {
        let y: Vec<f64> = (0..256).map(|_| rng.random_range(-1.8..1.8)).collect();
        let out = dec.decode_frame(&y, sigma2).unwrap();
        let graphs: Vec<GraphId> = out.stats.trace.iter().map(|r| r.graph).collect();
        assert_eq!(graphs, vec![GraphId::G, GraphId::Gpi, GraphId::G, GraphId::Gpi]);

        let first = &out.stats.trace[0];
        let mut sc = ScDecoder::new(fp, 16);
        for i in 0..16 {
            let idx: Vec<usize> = (0..16).map(|j| map_index(i, j, GraphId::G, 16).unwrap()).collect();
            let llr: Vec<i32> = idx.iter().map(|&k| fp.channel_llr(y[k], sigma2)).collect();
            let res = sc.subdecode_owned(&SubCode::new(spec.frozen(GraphId::G, i).clone(), ScMode::default()), &llr);
            let got: Vec<u8> = idx.iter().map(|&k| first.c_hat[k]).collect();
            assert_eq!(got, res.c_hat, "sub-code {i}");
            assert_eq!(first.errors[i], res.error_detected);
        }
        assert_eq!(out.x_hat, out.stats.trace[3].c_hat);
    }
}

#[test]
fn cycle_model_reproduces_sub_decoder_table() {
    let order = gaussian_approx_order(128, 6.3).unwrap();
    for (k, published) in SUB_DECODER_CYCLES {
        let tree = DecodeTree::build(&order.frozen_set(128 - k).unwrap(), ScMode::default());
        let model = cycle_count_model(&tree.trace(), &NodeCosts::default());
        assert!(model.abs_diff(published) <= 1, "K={k}: {model} vs {published}");
    }
}

#[test]
fn technology_scaling_example() {
    let v = scale_technology(108.06, TechNode::N7).unwrap();
    assert!((v - 477.17).abs() / 477.17 < 1e-3, "{v}");
}
