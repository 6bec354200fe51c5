//! Run a simulation campaign from a config file and print the summary table.
//!
//! cargo run --release --example monte_carlo -- [path/to/config.cfg]

use std::path::PathBuf;

use llrer::{monte_carlo_run, SimulationConfig};

fn main() -> llrer::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join("fig1_n100.cfg")
    });
    let text = std::fs::read_to_string(&path).map_err(|e| llrer::Error::Io { path: path.clone(), source: e })?;
    let config = SimulationConfig::parse(&text)?;
    println!("config {}\n{}", path.display(), config.to_text());

    let report = monte_carlo_run(&config)?;
    println!("shift c = {:.4}, failed replications = {}", report.shift, report.failed_count());
    for (i, rep) in report.successes() {
        let hs: Vec<String> = rep.fits.iter().map(|f| format!("{}={:.2}", f.estimator, f.bandwidth)).collect();
        println!("rep {i:>3}: censored {:.3}, h {}", rep.realized_cp, hs.join(" "));
    }
    println!("\nestimator  metric      median        q1        q3  reps");
    for s in report.summary() {
        println!(
            "{:>9} {:>7} {:>11.4} {:>9.4} {:>9.4} {:>5}",
            s.estimator, s.metric, s.median, s.q1, s.q3, s.count
        );
    }
    Ok(())
}
