//! Trains one skill at desk scale and summarizes its learning curve.
//!
//! ```text
//! cargo run --release --example train_skill -- prevent_slide /tmp/skills_demo
//! ```

use std::path::PathBuf;

use stirguard::harness::{ExperimentConfig, Harness};

fn main() -> stirguard::Result<()> {
    let mut args = std::env::args().skip(1);
    let skill = args.next().unwrap_or_else(|| "stir".into());
    let root = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("stirguard_train_skill"));

    let harness = Harness::new(ExperimentConfig::default(), &root)?;
    let report = harness.train(&skill)?;
    let evals: Vec<_> = report.rows.iter().filter_map(|r| r.eval_return.map(|e| (r.episode, e))).collect();
    for (episode, ret) in &evals {
        println!("episode {episode:>4}  eval return {ret:>9.3}");
    }
    let last = report.rows.last();
    println!(
        "{skill}: {} episodes, final epsilon {:.3}, best {} at episode {}",
        report.rows.len(),
        last.map_or(0.0, |r| r.epsilon),
        report.best_eval_return.map_or("n/a".into(), |r| format!("{r:.3}")),
        report.best_episode.map_or("n/a".into(), |e| e.to_string()),
    );
    println!("checkpoint {}", report.checkpoint.display());
    println!("curve      {}", report.curve.display());
    Ok(())
}
