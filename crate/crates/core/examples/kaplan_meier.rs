//! Censoring survival estimate and synthetic responses for a small sample.
//!
//! cargo run --example kaplan_meier

use llrer::{CensoredSample, Side, SurvivalStep, SyntheticOrder, SyntheticResponses};

fn main() -> llrer::Result<()> {
    let sample = CensoredSample::from_columns(
        &[3.1, 1.4, 2.2, 5.0, 2.2, 4.3, 0.9],
        &[true, false, true, false, false, true, true],
        &[0.4, -0.3, 0.1, 1.2, 0.0, 0.9, -0.8],
    )?;
    let step = SurvivalStep::kaplan_meier(&sample);

    println!("jump   level");
    for (t, g) in step.jump_times().iter().zip(step.levels()) {
        println!("{t:<6} {g:.4}");
    }

    println!("\n   y  delta   G(y-)    T*     1/T*    1/T*^2");
    let resp = SyntheticResponses::from_step(&sample, &step, SyntheticOrder::Response)?;
    let inv = SyntheticResponses::from_step(&sample, &step, SyntheticOrder::Inverse)?;
    let inv2 = SyntheticResponses::from_step(&sample, &step, SyntheticOrder::InverseSquare)?;
    for (i, r) in sample.records().iter().enumerate() {
        println!(
            "{:>4} {:>6} {:>7.4} {:>7.4} {:>7.4} {:>8.4}",
            r.y,
            u8::from(r.delta),
            step.eval(r.y, Side::LeftLimit),
            resp.values()[i],
            inv.values()[i],
            inv2.values()[i],
        );
    }
    Ok(())
}
