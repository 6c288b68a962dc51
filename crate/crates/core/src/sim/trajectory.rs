use std::io::Write;

use super::WorldState;
use crate::error::Result;

/// CSV dump of a simulated trajectory, one row per step.
///
/// Columns: `step, spoon_x, spoon_y, bowl_dx, bowl_dy, tilt, V`, then
/// `p<k>_x, p<k>_y` for every particle.
pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W, n_particles: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        let mut header: Vec<String> =
            ["step", "spoon_x", "spoon_y", "bowl_dx", "bowl_dy", "tilt", "V"].map(String::from).into();
        for k in 0..n_particles {
            header.push(format!("p{k}_x"));
            header.push(format!("p{k}_y"));
        }
        inner.write_record(&header)?;
        Ok(Self { inner })
    }

    pub fn record(&mut self, state: &WorldState) -> Result<()> {
        let shift = state.bowl.center - state.bowl.initial_center;
        let mut row = vec![
            state.step_count.to_string(),
            state.spoon.x.to_string(),
            state.spoon.y.to_string(),
            shift.x.to_string(),
            shift.y.to_string(),
            state.bowl.tilt.to_string(),
            state.observe_v().to_string(),
        ];
        for p in &state.particles {
            row.push(p.position.x.to_string());
            row.push(p.position.y.to_string());
        }
        self.inner.write_record(&row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| e.into_error().into())
    }
}
