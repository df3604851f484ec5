//! Build a price/curtailment calibration curve from synthetic data with a
//! known logistic response and recover the 50% threshold price.

use curtailkit::detect::{calibration_curve, default_bin_edges, extract_threshold};
use curtailkit::synth::logistic_calibration;

fn main() -> anyhow::Result<()> {
    let (prices, curtailment) = logistic_calibration(50_000, 2.0, 1.0, -50.0, 50.0, 7)?;
    let curve = calibration_curve(&prices, &curtailment, 0.0, &default_bin_edges())?;
    let result = extract_threshold(&curve, 0.5)?;

    println!("  price  freq  fitted  n");
    for p in result.fitted.iter().filter(|p| (-3.0..8.0).contains(&p.price)) {
        println!(
            "{:>7.1} {:>5.2} {:>7.2} {:>3}",
            p.price, p.frequency, p.fitted, p.sample_count
        );
    }
    println!(
        "threshold at 50% likelihood: {:.3} USD/MWh (true centre 2.0)",
        result.threshold_price
    );
    Ok(())
}
