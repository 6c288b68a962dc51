//! Extends a trained two-skill library with slide and overturn prevention
//! without retraining, then measures recovery from each risk.
//!
//! ```text
//! cargo run --release --example adapt_library -- /tmp/stirguard_adapt
//! ```

use std::path::{Path, PathBuf};

use stirguard::arbiter::PriorityTable;
use stirguard::harness::{prevention_efficacy, ExperimentConfig, Harness};
use stirguard::sim::Setup;
use stirguard::skill::{file_sha256, Manifest};

fn main() -> stirguard::Result<()> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("stirguard_adapt"));
    let harness = Harness::new(ExperimentConfig::default(), &root)?;
    let checksum = |name: &str| file_sha256(&harness.skills_dir().join(name).join(format!("{name}.ckpt")));

    // L2: the base skill and spill prevention, evaluated in the fixed setup
    harness.train("stir")?;
    harness.train("prevent_spill")?;
    let l2 = harness.eval("L2-F")?;
    println!("L2-F spill activations per episode {:.2}", l2.metrics.spill_count.mean);
    let before = [checksum("stir")?, checksum("prevent_spill")?];

    // new failures appear once the bowl can move: two more skills
    harness.train("prevent_overturn")?;
    harness.train("prevent_slide")?;
    let after = [checksum("stir")?, checksum("prevent_spill")?];
    println!("existing checkpoints unchanged: {}", before == after);

    let l2_dir = harness.condition_dir("L2-F");
    let mut manifest = Manifest::load(&l2_dir.join("library.toml"))?;
    let trained = Manifest::load(&harness.manifest_path())?;
    for name in ["prevent_overturn", "prevent_slide"] {
        let mut entry = trained.skills.iter().find(|e| e.name == name).expect("just trained").clone();
        entry.checkpoint = Path::new("..").join("skills").join(&entry.checkpoint);
        manifest.push(entry)?;
    }
    let l4 = manifest.build_library(&l2_dir)?;
    let names: Vec<_> = l4.skills().iter().map(|s| s.name.as_str()).collect();
    println!("L4 = {names:?}");

    let rows = prevention_efficacy(
        &harness.config.sim,
        &harness.config.estimators()?,
        &l4,
        &PriorityTable::standard(),
        Setup::Unrestricted,
        20,
        151,
        harness.config.seed,
    )?;
    for r in rows {
        println!(
            "{:<9} recovered {:>2}/{} (mean {} steps, {} starts resampled)",
            r.risk.to_string(),
            r.recovered,
            r.episodes,
            r.mean_steps.map_or("-".into(), |s| format!("{s:.1}")),
            r.resampled
        );
    }
    Ok(())
}
