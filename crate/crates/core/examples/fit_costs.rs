//! Fits the sub-decoder node cost table to the published length-128 cycle
//! counts and prints the per-code estimate.
//!
//! ```text
//! cargo run --release -p gncoset --example fit_costs -- [design_esn0_db]
//! ```

use gncoset::construction::gaussian_approx_order;
use gncoset::perf::{cycle_count_model, fit_node_costs, NodeCosts, SUB_DECODER_CYCLES};
use gncoset::sc::{DecodeTree, ScMode, TraceStep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let design: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(6.3);
    let order = gaussian_approx_order(128, design)?;
    let samples: Vec<(Vec<TraceStep>, u32)> = SUB_DECODER_CYCLES
        .iter()
        .map(|&(k, c)| {
            let frozen = order.frozen_set(128 - k)?;
            Ok((DecodeTree::build(&frozen, ScMode::default()).trace(), c))
        })
        .collect::<gncoset::Result<_>>()?;

    let fitted = fit_node_costs(&samples);
    println!("fitted: {fitted:?}");
    println!("shipped default matches fit: {}", fitted == NodeCosts::default());
    println!("K,published,model,steps");
    for ((k, published), (trace, _)) in SUB_DECODER_CYCLES.iter().zip(&samples) {
        println!("{k},{published},{},{}", cycle_count_model(trace, &fitted), trace.len());
    }
    Ok(())
}
