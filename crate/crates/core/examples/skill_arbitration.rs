//! The L4 library recovering from a slid bowl: which skill runs when.
//!
//! Skills are trained into the given directory first if they are missing.
//!
//! ```text
//! cargo run --release --example skill_arbitration -- /tmp/stirguard_run
//! ```

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stirguard::arbiter::run_episode;
use stirguard::harness::{ExperimentConfig, Harness};
use stirguard::risk::{RiskEstimator, RiskId, RiskMonitor};
use stirguard::sim::WorldState;
use stirguard::skill::initial_procedure;

fn main() -> stirguard::Result<()> {
    let root = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("stirguard_run"));
    let harness = Harness::new(ExperimentConfig::default(), &root)?;
    let condition = harness.config.condition("L4-U")?.clone();
    for name in &condition.skills {
        if !harness.skills_dir().join(name).join(format!("{name}.ckpt")).exists() {
            println!("training {name}");
            harness.train(name)?;
        }
    }
    let library = harness.load_library(&condition)?;
    let table = condition.priority_table()?;

    let mut state = WorldState::reset_seeded(&harness.config.sim, condition.setup, 42)?;
    initial_procedure(&mut state, &RiskEstimator::slide(), &mut ChaCha8Rng::seed_from_u64(42))?;
    println!("bowl displaced by {:.3} m", state.observe_d());

    let mut monitor = RiskMonitor::new(harness.config.estimators()?)?;
    let (metrics, trace) = run_episode(&library, &table, &mut monitor, &mut state, 300, &mut |_, _| {})?;
    let mut current = "";
    for r in &trace.records {
        if r.skill != current {
            println!("step {:>3}: {:<17} d {:.3}  theta {:.3}  V {:.2}", r.step, r.skill, r.d, r.theta, r.v);
            current = &r.skill;
        }
    }
    match trace.first_safe(&RiskId::Slide) {
        Some(i) => println!("slide risk cleared after {i} steps"),
        None => println!("slide risk still active after {} steps", trace.records.len()),
    }
    println!("stir reward {:.3}, spill activations {}", metrics.stir_reward, metrics.spill_count);
    Ok(())
}
