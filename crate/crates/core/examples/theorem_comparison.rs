//! Full comparison run on the reference configuration: writes the headline
//! CSV tables and the JSON record into a directory (default `out/example`).

use std::path::PathBuf;

use bosonic_ldp::experiment::{run_compare, ComparisonSummary, ExperimentConfig};

fn main() -> bosonic_ldp::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/example"));
    let config = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference.toml"))?;
    let record = run_compare(&config, &dir)?;
    for f in &record.outputs {
        println!("{:<24} {} rows  sha256 {}", f.file, f.rows, &f.sha256[..16]);
    }
    let rows: Vec<ComparisonSummary> = serde_json::from_value(record.headline["comparison"].clone())
        .map_err(bosonic_ldp::Error::Json)?;
    println!("\n  t    σ_t²       CLT extrap.  rel. err   window λ   exponent   Ĉ");
    for c in rows {
        println!(
            "{:4.2}  {:.8}  {:.8}   {:.2e}   {:.5}    {:.3}      {:.3e}",
            c.t, c.sigma2, c.clt_extrapolated, c.clt_relative_error, c.lambda_window, c.residual_exponent, c.cubic_constant
        );
    }
    Ok(())
}
