//! Builds the three hybrid-RIS training setups, prints their dimensions and
//! overhead, and writes the first one as JSON.

use ris_anm::channel::LinkArrays;
use ris_anm::signal::{dbm_to_watts, TrainingConfig, TrainingSpec};

fn main() -> ris_anm::Result<()> {
    let arrays = LinkArrays::paper_default();
    println!("setup  M  K  T  N_CB  active elements  overhead");
    for n in 1..=3 {
        let spec = TrainingSpec::table_setup(n)?;
        let cfg = TrainingConfig::generate(&spec, &arrays, dbm_to_watts(10.0), 42)?;
        println!(
            "{n:>5} {:>2} {:>2} {:>2} {:>5}  {:>15}  {:>8}",
            spec.n_active,
            spec.n_blocks,
            spec.n_beams,
            spec.n_bs_beams,
            format!("{:?}", &cfg.active_sets[0]),
            cfg.training_overhead()
        );
    }
    let cfg = TrainingConfig::generate(&TrainingSpec::table_setup(1)?, &arrays, dbm_to_watts(10.0), 42)?;
    let json = cfg.to_json()?;
    println!("setup 1 schedule serializes to {} bytes of JSON", json.len());
    let back = TrainingConfig::from_json(&json)?;
    println!("round trip identical: {}", back == cfg);
    Ok(())
}
