//! Re-runs the simulator calibration and prints the constants to freeze.
//!
//! cargo run --release --example calibrate

use nanoguard::harness::{calibrate, CalibrationTarget};
use nanoguard::par::Executor;

fn main() -> anyhow::Result<()> {
    let target = CalibrationTarget::default();
    let cal = calibrate(&target, &Executor::new(0))?;
    println!("{}", serde_json::to_string_pretty(&cal)?);
    println!(
        "150 vs 0: {:.1} min, 150 vs 1900: {:.1} min [{:.1}, {:.1}]",
        cal.low.mean_time / 60.0,
        cal.high.mean_time / 60.0,
        cal.high.min_time / 60.0,
        cal.high.max_time / 60.0
    );
    Ok(())
}
