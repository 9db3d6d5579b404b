use std::io::Write;

use super::world::WorldState;
use crate::error::Result;

/// Debug dump of entity trajectories as CSV: `step,entity,x,y,vx,vy`.
pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "step,entity,x,y,vx,vy")?;
        Ok(TrajectoryWriter { out })
    }

    pub fn record(&mut self, state: &WorldState) -> Result<()> {
        for (i, e) in state.entities.iter().enumerate() {
            writeln!(
                self.out,
                "{},{},{},{},{},{}",
                state.step, i, e.pos[0], e.pos[1], e.vel[0], e.vel[1]
            )?;
        }
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
