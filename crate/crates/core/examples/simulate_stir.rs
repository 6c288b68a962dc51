//! Drives the spoon around a circle in both setups and writes the trajectory.
//!
//! ```text
//! cargo run --release --example simulate_stir -- /tmp/stir.csv
//! ```

use std::fs::File;

use stirguard::sim::{SimConfig, Setup, TrajectoryWriter, Vec2, WorldState};
use stirguard::skill::stir_reward;

fn main() -> stirguard::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "stir_trajectory.csv".into());
    let config = SimConfig::default();
    for setup in [Setup::Fixed, Setup::Unrestricted] {
        let mut state = WorldState::reset_seeded(&config, setup, 7)?;
        let mut writer = TrajectoryWriter::new(File::create(format!("{out}.{}", setup.suffix()))?, config.n_particles)?;
        let mut reward = 0.0;
        let mut peak_tilt: f64 = 0.0;
        for step in 0..300 {
            // a circle of radius 4 cm around the bowl, one lap per 60 steps
            let angle = step as f64 * std::f64::consts::TAU / 60.0;
            let target = state.bowl.center + Vec2::from_angle(angle) * 0.04;
            let prev = state.clone();
            state.step(target - state.spoon);
            reward += stir_reward(&prev, &state);
            peak_tilt = peak_tilt.max(state.observe_theta());
            writer.record(&state)?;
        }
        writer.finish()?;
        println!(
            "{setup:?}: stir reward {reward:.3}, final d {:.4} m, peak tilt {peak_tilt:.3} rad, final V {:.3}",
            state.observe_d(),
            state.observe_v()
        );
    }
    println!("trajectories written to {out}.F and {out}.U");
    Ok(())
}
