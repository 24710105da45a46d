use std::process::ExitCode;

use anyhow::{Context, Result};
use gncoset::construction::{product_code_ga, save_spec};

use crate::ConstructArgs;

pub fn run(a: ConstructArgs) -> Result<ExitCode> {
    let mut spec = product_code_ga(a.nsub, a.ksub, a.design_esn0)?;
    if let Some(label) = a.label {
        let file = spec.to_file_format();
        spec = gncoset::CodeSpec::from_file_format(
            gncoset::construction::CodeSpecFile { label, ..file },
            "construct",
        )?;
    }
    match a.out {
        Some(path) => {
            save_spec(&spec, &path).with_context(|| format!("writing {}", path.display()))?;
            eprintln!(
                "wrote {}: N={} K={} rate={:.4}",
                path.display(),
                spec.n(),
                spec.k_total(),
                spec.rate()
            );
        }
        None => println!("{}", spec.to_json()),
    }
    Ok(ExitCode::SUCCESS)
}
