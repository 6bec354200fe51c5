//! Find the censoring shift for several target proportions and check the
//! result against the closed form and a large simulated sample.
//!
//! cargo run --release --example calibrate_censoring

use llrer::simulate::{calibrate_censoring, censoring_probability, generate_sample};

fn main() -> llrer::Result<()> {
    println!("target        c   closed form   realized (n = 100000)  iterations");
    for (k, target) in [0.35, 0.5, 0.65, 0.7].into_iter().enumerate() {
        let cal = calibrate_censoring(target, 0.005, 100 + k as u64)?;
        let realized = generate_sample(100_000, cal.c, 200 + k as u64)?.sample.censoring_proportion();
        println!(
            "{target:>6} {:>8.4} {:>13.4} {:>22.4} {:>11}",
            cal.c,
            censoring_probability(cal.c),
            realized,
            cal.iterations
        );
    }
    Ok(())
}
