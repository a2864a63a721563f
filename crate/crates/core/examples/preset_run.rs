//! Runs a built-in preset end to end and lists what was written.

use resonance_decay::experiment::{preset, run_experiment};

fn main() -> resonance_decay::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "fig5".into());
    let mut config = preset(&name)?;
    config.out_dir = std::env::temp_dir().join("decay-preset");
    let outcome = run_experiment(&config, Some(&config.out_dir.join("cache")))?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    for f in outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
