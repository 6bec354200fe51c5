//! Leave-one-out cross-validation over the default bandwidth grid.
//!
//! cargo run --release --example select_bandwidth

use llrer::bandwidth::{BandwidthGrid, CvOptions, LeaveOneOut};
use llrer::simulate::generate_sample;
use llrer::{Estimator, KernelKind};

fn main() -> llrer::Result<()> {
    let sample = generate_sample(200, -1.13, 21)?.sample;
    let grid = BandwidthGrid::default();
    println!("{} candidate bandwidths from {} to {}", grid.len(), grid.lo(), grid.hi());

    for estimator in Estimator::ALL {
        let loo = LeaveOneOut::new(estimator, &sample, KernelKind::Gaussian, CvOptions::default())?;
        let selection = loo.select(&grid)?;
        let best = selection.best();
        println!(
            "{estimator:>6}: h_opt = {:.2}, score = {:.2}, degenerate folds = {}",
            best.h, best.score, best.degenerate_folds
        );
        let coarse: Vec<String> = selection
            .trace
            .iter()
            .step_by(40)
            .map(|s| format!("{:.2}:{:.1}", s.h, s.score))
            .collect();
        println!("        trace {}", coarse.join("  "));
    }
    Ok(())
}
