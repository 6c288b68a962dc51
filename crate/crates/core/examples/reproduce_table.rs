//! Trains every skill, evaluates the five conditions and prints the
//! comparison. About three minutes per seed at desk scale.
//!
//! ```text
//! cargo run --release --example reproduce_table -- /tmp/stirguard_table 1
//! ```

use std::path::{Path, PathBuf};

use stirguard::harness::{compare, ExperimentConfig, Harness, Overrides};

fn main() -> stirguard::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("stirguard_table"));
    let seed = args.next().map(|s| s.parse().expect("seed must be an integer"));
    let config = ExperimentConfig::from_toml_str("", Path::new("<defaults>"), &Overrides { preset: None, seed })?;
    let harness = Harness::new(config, &root)?;

    for skill in harness.config.skills.clone() {
        let report = harness.train(&skill.name)?;
        println!("trained {:<17} best eval return {:?}", skill.name, report.best_eval_return);
    }
    println!("{:<8} {:>14} {:>14} {:>16} {:>16}", "", "stir", "spill", "slide d", "overturn");
    let show = |a: Option<stirguard::harness::Aggregate>| a.map_or("N/A".to_string(), |a| format!("{:.3}±{:.3}", a.mean, a.std));
    for condition in harness.config.conditions.clone() {
        let m = harness.eval(&condition.id)?.metrics;
        println!(
            "{:<8} {:>14} {:>14} {:>16} {:>16}",
            condition.id,
            show(Some(m.stir_reward)),
            show(Some(m.spill_count)),
            show(m.slide_d),
            show(m.overturn_theta)
        );
    }
    print!("{}", compare(&root)?);
    Ok(())
}
