//! Checks the stability gain conditions for the benchmark and for a deliberately weak `k4`.

use rise_flock::analysis::certify;
use rise_flock::cli::{certificate_passes, format_certificate};
use rise_flock::config::ScenarioConfig;

fn main() -> rise_flock::Result<()> {
    for overrides in [&[][..], &["gains.k4=5"][..]] {
        let config = ScenarioConfig::benchmark().with_overrides(overrides)?;
        let report = certify(&config)?;
        println!("== k4 = {} ==", config.gains.k4);
        print!("{}", format_certificate(&report));
        println!("certificate holds: {}\n", certificate_passes(&report));
    }
    Ok(())
}
