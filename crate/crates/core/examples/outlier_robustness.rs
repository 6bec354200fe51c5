//! Contaminate a sample with scaled responses and compare the integrated
//! squared error of the three estimators at a common bandwidth.
//!
//! cargo run --release --example outlier_robustness -- [multiplier]

use llrer::loclin::linspace;
use llrer::simulate::{error_metrics, generate_sample, inject_outliers, theoretical_curve};
use llrer::{Estimator, EstimatorConfig, KernelKind, SmootherInput};

fn main() -> llrer::Result<()> {
    let multiplier: f64 = std::env::args().nth(1).map_or(100.0, |a| a.parse().expect("multiplier"));
    let clean = generate_sample(300, -1.13, 5)?.sample;
    let (dirty, chosen) = inject_outliers(&clean, 15, multiplier, 6)?;
    println!("scaled records {chosen:?} by {multiplier}");

    let grid = linspace(1.0, 2.5, 31)?;
    let config = EstimatorConfig::new(KernelKind::Gaussian, 0.3)?;
    let truth = |x: f64| theoretical_curve(x).expect("x != -0.5");
    println!("\nestimator   MISE clean   MISE contaminated");
    for estimator in Estimator::ALL {
        let mise = |s| -> llrer::Result<String> {
            let curve = SmootherInput::from_sample(s)?.fit_curve(estimator, &config, &grid)?;
            Ok(error_metrics(&curve, truth).mise.map_or("-".into(), |m| format!("{m:.4}")))
        };
        println!("{estimator:>9} {:>12} {:>19}", mise(&clean)?, mise(&dirty)?);
    }
    Ok(())
}
