//! DDPG on the one-dimensional move-to-origin task.

use stirguard::ddpg::{run_training, Environment, MoveToOrigin, Snapshot, TrainConfig};

fn main() -> stirguard::Result<()> {
    let config = TrainConfig {
        episodes: 200,
        steps_per_episode: 50,
        batch_size: 64,
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        actor_hidden: vec![32, 32],
        critic_hidden: vec![32, 32],
        seed: 0,
        ..TrainConfig::default()
    };
    let mut env = MoveToOrigin::default();
    let outcome = run_training(&mut env, &config, &mut |snapshot| {
        if let Snapshot::Evaluation { episode, eval_return, is_best, .. } = snapshot {
            if episode % 50 == 49 || is_best {
                println!("episode {episode:>3}: eval return {eval_return:>8.3}{}", if is_best { "  best" } else { "" });
            }
        }
        Ok(())
    })?;

    for start in [10_000, 10_001, 10_002] {
        let mut obs = env.reset(start)?;
        let x0 = obs[0];
        for _ in 0..50 {
            obs = env.step(&outcome.best.act(&obs))?.0;
        }
        println!("from x = {x0:+.3} to x = {:+.4} in 50 steps", obs[0]);
    }
    Ok(())
}
