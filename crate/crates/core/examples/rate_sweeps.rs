//! The four rate sweeps with their log-log slopes: Monte Carlo error in `M`,
//! weak Euler error in `h`, and parameter growth in `d` and `1/ε`.

use kolmo_dnn::sweep::{rate_sweep, SweepConfig, SweepKind};

fn main() -> kolmo_dnn::error::Result<()> {
    let kinds = [SweepKind::MonteCarlo, SweepKind::EulerWeak, SweepKind::ParamGrowthInD, SweepKind::ParamGrowthInEps];
    for kind in kinds {
        let t = std::time::Instant::now();
        let r = rate_sweep(&SweepConfig::new(kind))?;
        print!("{}", r.to_csv());
        println!(
            "{kind:?}: slope {:.3} in [{:.3}, {:.3}], R² = {:.4}, certified exponent {:?} ({:.1?})\n",
            r.fit.slope, r.fit.slope_ci.0, r.fit.slope_ci.1, r.fit.r_squared, r.certified_exponent, t.elapsed()
        );
    }
    Ok(())
}
