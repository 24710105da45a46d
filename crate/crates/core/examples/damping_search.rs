//! Coarse grid search for the damping factors used from iteration 2 on.
//!
//! Every candidate `(α, β, γ) ∈ {0, 0.25, …, 1.5}³` is simulated on the same
//! frames (common seed), and candidates are ranked by block errors. The
//! winner is printed in the bundled schedule format.
//!
//! ```text
//! cargo run --release -p gncoset --example damping_search -- \
//!     --nsub 16 --ksub 13 --esn0 4.0 --frames 4000 --tmax 5
//! ```

use std::collections::HashMap;
use std::sync::Arc;

use gncoset::construction::product_code_ga;
use gncoset::pdf::{Damping, DampingSchedule};
use gncoset::sim::{run_sweep, SimConfig};
use gncoset::QuantSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut opts: HashMap<&str, &str> = HashMap::new();
    for pair in args.chunks(2) {
        let key = pair[0].trim_start_matches("--");
        opts.insert(key, pair.get(1).map(String::as_str).ok_or("missing value")?);
    }
    let get = |k: &str, d: &str| opts.get(k).copied().unwrap_or(d).to_string();
    let n_sub: usize = get("nsub", "16").parse()?;
    let k_sub: usize = get("ksub", "13").parse()?;
    let esn0: f64 = get("esn0", "4.0").parse()?;
    let frames: u64 = get("frames", "4000").parse()?;
    let t_max: usize = get("tmax", "5").parse()?;
    let quant: QuantSpec = get("quant", "Q6F2").parse()?;
    let seed: u64 = get("seed", "2024").parse()?;
    let workers: usize = get("workers", "1").parse()?;

    let spec = Arc::new(product_code_ga(n_sub, k_sub, esn0)?);
    let grid: Vec<f64> = (0..=6).map(|q| f64::from(q) * 0.25).collect();
    let mut results = Vec::new();
    for &alpha in &grid {
        for &beta in &grid {
            for &gamma in &grid {
                let d = Damping { alpha, beta, gamma };
                let mut cfg = SimConfig::new(spec.clone(), quant, t_max, vec![esn0]);
                cfg.schedule = DampingSchedule::new(vec![Damping { alpha: 0.0, beta: 0.0, gamma: 0.0 }, d])?;
                cfg.max_frames = frames;
                cfg.target_block_errors = u64::MAX;
                cfg.seed = seed;
                cfg.worker_count = workers;
                let p = run_sweep(&cfg)?.points.remove(0);
                results.push((p.block_errors, alpha + beta + gamma, d, p.mean_iterations()));
            }
        }
        eprintln!("alpha {alpha} done");
    }
    results.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let baseline = {
        let mut cfg = SimConfig::new(spec.clone(), quant, 1, vec![esn0]);
        cfg.max_frames = frames;
        cfg.target_block_errors = u64::MAX;
        cfg.seed = seed;
        run_sweep(&cfg)?.points.remove(0).block_errors
    };
    println!("# n_sub={n_sub} k_sub={k_sub} Es/N0={esn0} dB t_max={t_max} {quant} frames={frames}");
    println!("# t_max=1 block errors: {baseline}");
    println!("alpha,beta,gamma,blk_err,mean_iters");
    for (errs, _, d, it) in results.iter().take(15) {
        println!("{},{},{},{errs},{it:.3}", d.alpha, d.beta, d.gamma);
    }
    let best = results[0].2;
    println!(
        "\n{}",
        DampingSchedule::new(vec![Damping { alpha: 0.0, beta: 0.0, gamma: 0.0 }, best])?.to_json()
    );
    Ok(())
}
