//! Fit all three estimators to one simulated sample at a fixed bandwidth and
//! compare them with the true relative-error curve.
//!
//! cargo run --release --example estimate_curve -- [n] [h]

use llrer::loclin::linspace;
use llrer::simulate::{generate_sample, theoretical_curve};
use llrer::{Estimator, EstimatorConfig, KernelKind, SmootherInput};

fn main() -> llrer::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(400, |a| a.parse().expect("n"));
    let h: f64 = args.next().map_or(0.25, |a| a.parse().expect("h"));

    // c = -2 gives about 50% censoring
    let generated = generate_sample(n, -2.0, 7)?;
    let sample = generated.sample;
    println!(
        "n = {n}, censored {:.1}%, non-positive uncensored responses {}",
        100.0 * sample.censoring_proportion(),
        sample.nonpositive_uncensored()
    );

    let input = SmootherInput::from_sample(&sample)?;
    let config = EstimatorConfig::new(KernelKind::Gaussian, h)?;
    let grid = linspace(0.0, 3.0, 13)?;
    let curves: Vec<_> = Estimator::ALL
        .iter()
        .map(|&e| input.fit_curve(e, &config, &grid))
        .collect::<llrer::Result<_>>()?;

    println!("\n     x    truth    llrer     llcr       cr");
    for (i, &x) in grid.iter().enumerate() {
        let cells: Vec<String> = curves
            .iter()
            .map(|c| match c.estimates()[i].get() {
                Some(v) => format!("{v:>8.3}"),
                None => format!("{:>8}", "-"),
            })
            .collect();
        println!("{x:>6.2} {:>8.3} {}", theoretical_curve(x)?, cells.join(" "));
    }
    Ok(())
}
