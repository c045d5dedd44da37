//! `rfdi simulate`: write a synthetic two-class dataset.

use anyhow::Context;
use rfdi_core::synthgen::{simulate_two_class, SimConfig};

use crate::args::SimulateArgs;

pub fn config(args: &SimulateArgs) -> SimConfig {
    SimConfig {
        n_raw: args.n,
        factor_correlation: args.factor_corr,
        target_ir: args.ir,
        seed: args.seed,
        ..SimConfig::default()
    }
}

pub fn run(args: &SimulateArgs) -> anyhow::Result<()> {
    let data = simulate_two_class(&config(args))?;
    data.write_csv(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let s = data.stats();
    eprintln!("wrote {}: n = {}, p = {}, ir = {:.3}", args.out.display(), s.n, s.p, s.ir);
    Ok(())
}
