//! Sends QAM symbols through the full precoding chain and compares the
//! measured SINR with the closed form.

use thplab::channel::{RngStream, SystemParams};
use thplab::quantizer::{draw_feedback, Backend};
use thplab::scheduler::greedy_select;
use thplab::thp::link_level;

fn main() -> thplab::Result<()> {
    let params = SystemParams::with_power_db(20, 4, 12, 20.0, 16)?;
    let mut rng = RngStream::new(5, 0).rng(0);
    let csi = draw_feedback(&params, Backend::Rvq, &mut rng)?;
    let sched = greedy_select(&csi, &params)?;
    let report = link_level(&sched, &csi, &params, 50_000, &mut rng)?;
    for k in 0..report.measured_sinr.len() {
        println!(
            "user {k}: measured SINR {:8.2}  predicted {:8.2}  tx power {:.3}",
            report.measured_sinr[k], report.predicted_sinr[k], report.tx_power[k]
        );
    }
    println!("symbol error rate = {:.2e} over {} symbols", report.symbol_error_rate, report.symbols);
    Ok(())
}
