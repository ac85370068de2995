//! Greedy user selection, Tomlinson-Harashima precoding and per-user SINR
//! for one realization, with the zero-forcing baseline alongside.

use thplab::channel::{RngStream, SystemParams};
use thplab::quantizer::{draw_feedback, Backend};
use thplab::scheduler::greedy_select;
use thplab::thp::{schedule_sinrs, sum_rate, zfbf_baseline};

fn main() -> thplab::Result<()> {
    let params = SystemParams::with_power_db(100, 4, 10, 20.0, 256)?;
    let mut rng = RngStream::new(3, 0).rng(0);
    let csi = draw_feedback(&params, Backend::Rvq, &mut rng)?;
    let sched = greedy_select(&csi, &params)?;
    let sinrs = schedule_sinrs(&sched, &csi, &params)?;
    for (pos, (&user, g)) in sched.users.iter().zip(&sinrs).enumerate() {
        println!("position {pos}: user {user:3}  residual {:.3}  SINR {:.2}", sched.residuals[pos], g);
    }
    println!("THP sum rate  = {:.3} bit/s/Hz", sum_rate(&sinrs));
    println!("ZFBF sum rate = {:.3} bit/s/Hz", zfbf_baseline(&csi, &params)?.iter().sum::<f64>());
    Ok(())
}
