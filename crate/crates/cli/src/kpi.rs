use std::fmt::Write as _;
use std::process::ExitCode;

use anyhow::{Context, Result};
use gncoset::construction::gaussian_approx_order;
use gncoset::perf::{cycle_count_model, KpiRow, KpiScenario, NodeCosts, TechNode, SUB_DECODER_CYCLES};
use gncoset::sc::{DecodeTree, ScMode};

use crate::{KpiArgs, TableFormat};

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

fn render(rows: &[KpiRow], scale: Option<TechNode>, format: TableFormat) -> String {
    let mut header = vec!["info_bits", "iterations", "esn0_db", "latency_ns", "area_eff_16nm"];
    let scaled_name = scale.map(|n| format!("area_eff_{n}"));
    if let Some(name) = &scaled_name {
        header.push(name);
    }
    header.extend(["reference_16nm", "rel_err"]);

    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![
                r.info_bits.to_string(),
                r.iterations.to_string(),
                opt(r.esn0_db, 2),
                format!("{:.2}", r.latency_ns),
                format!("{:.2}", r.area_eff),
            ];
            if scale.is_some() {
                cells.push(format!("{:.2}", r.scaled));
            }
            cells.push(opt(r.reference, 2));
            cells.push(match r.reference {
                Some(p) => format!("{:+.2}%", (r.area_eff - p) / p * 100.0),
                None => String::new(),
            });
            cells
        })
        .collect();

    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            writeln!(out, "{}", header.join(",")).unwrap();
            for cells in body {
                writeln!(out, "{}", cells.join(",")).unwrap();
            }
        }
        TableFormat::Markdown => {
            writeln!(out, "| {} |", header.join(" | ")).unwrap();
            writeln!(out, "|{}", "---|".repeat(header.len())).unwrap();
            for cells in body {
                writeln!(out, "| {} |", cells.join(" | ")).unwrap();
            }
        }
    }
    out
}

fn cycle_table(format: TableFormat) -> Result<String> {
    let order = gaussian_approx_order(128, 6.3)?;
    let costs = NodeCosts::default();
    let mut out = String::new();
    let sep = if format == TableFormat::Csv { "," } else { " | " };
    let wrap = |s: String| if format == TableFormat::Csv { s } else { format!("| {s} |") };
    writeln!(out, "{}", wrap(["k_sub", "published_cycles", "model_cycles"].join(sep))).unwrap();
    if format == TableFormat::Markdown {
        writeln!(out, "|---|---|---|").unwrap();
    }
    for (k, published) in SUB_DECODER_CYCLES {
        let tree = DecodeTree::build(&order.frozen_set(128 - k)?, ScMode::default());
        let model = cycle_count_model(&tree.trace(), &costs);
        writeln!(out, "{}", wrap([k.to_string(), published.to_string(), model.to_string()].join(sep))).unwrap();
    }
    Ok(out)
}

pub fn run(a: KpiArgs) -> Result<ExitCode> {
    let mut scenario = match &a.scenario {
        Some(p) => KpiScenario::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => KpiScenario::published(),
    };
    if let Some(c) = a.calibration {
        scenario.calibration = c;
    }
    let rows = scenario.evaluate(a.scale.unwrap_or(TechNode::N16))?;
    print!("{}", render(&rows, a.scale, a.format));
    if a.cycles {
        println!();
        print!("{}", cycle_table(a.format)?);
    }
    Ok(ExitCode::SUCCESS)
}
