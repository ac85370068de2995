//! Draws one channel realization, quantizes it with a random codebook and
//! compares the quantization error with the cell model.

use thplab::channel::{RngStream, SystemParams};
use thplab::quantizer::{draw_feedback, Backend};

fn main() -> thplab::Result<()> {
    let params = SystemParams::with_power_db(200, 4, 8, 15.0, 256)?;
    let stream = RngStream::new(7, 0);
    let mut rvq = 0.0;
    let mut cell = 0.0;
    let trials = 50;
    for t in 0..trials {
        rvq += draw_feedback(&params, Backend::Rvq, &mut stream.rng(t))?.iter().map(|c| c.sin_sqr).sum::<f64>();
        cell += draw_feedback(&params, Backend::CellApprox, &mut stream.child(1).rng(t))?
            .iter()
            .map(|c| c.sin_sqr)
            .sum::<f64>();
    }
    let n = (trials as usize * params.users) as f64;
    println!("delta = {:.5}", params.delta());
    println!("mean sin^2 (random codebook) = {:.5}", rvq / n);
    println!("mean sin^2 (cell model)      = {:.5}", cell / n);
    Ok(())
}
