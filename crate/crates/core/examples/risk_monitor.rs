//! Hysteresis monitors watching a scripted push against the bowl wall.

use stirguard::risk::{spill_volume_from_height, Parameter, RiskEstimator, RiskId, RiskMonitor};
use stirguard::sim::{SimConfig, Setup, Vec2, WorldState};

fn main() -> stirguard::Result<()> {
    let mut state = WorldState::reset_seeded(&SimConfig::default(), Setup::Unrestricted, 3)?;
    let mut monitor = RiskMonitor::new(RiskEstimator::defaults())?;
    // a failure the library does not know about yet, registered at runtime
    monitor.register(RiskId::Custom("spoon_far".into()), Parameter::Custom("spoon_far".into()), 0.06, 0.03)?;

    for step in 0..200 {
        let push = if step < 120 { Vec2::new(0.01, 0.0) } else { Vec2::new(-0.01, 0.0) };
        state.step(push);
        let mut obs = stirguard::risk::observe_all(&state);
        obs.insert(Parameter::Custom("spoon_far".into()), (state.spoon - state.bowl.center).norm());
        monitor.update(state.step_count, &obs)?;
    }
    let mut out = Vec::new();
    monitor.write_events(&mut out)?;
    print!("{}", String::from_utf8_lossy(&out));
    println!("final risk vector: {:?}", monitor.vector());

    // the excluded-volume estimate a point-cloud sensor would give
    println!("V from a 9 mm excess over a 1 cm particle: {:.2}", spill_volume_from_height(0.089, 0.08, 0.01)?);
    Ok(())
}
