//! Flag every node of a synthetic market at or below a price threshold and
//! summarise how often each local hour is flagged.

use curtailkit::detect::{below_threshold_heatmap, detect_all};
use curtailkit::ingest::IsoId;
use curtailkit::synth::{synthetic_market, MarketSpec};
use curtailkit::timeseries::Resolution;

fn main() -> anyhow::Result<()> {
    let iso = IsoId::Spp;
    let market = synthetic_market(&MarketSpec::new(iso, 21, 5, 3))?;
    let threshold = 2.0;

    for signal in detect_all(&market.lmp, threshold)? {
        let flagged = signal.series.present().filter(|&v| v == 1.0).count();
        println!(
            "{}: {flagged} of {} steps at or below {threshold}",
            signal.node_id,
            signal.series.len()
        );
    }

    let stats = below_threshold_heatmap(&market.lmp, threshold, Resolution::HOURLY, iso.descriptor().zone)?;
    let node = &stats.nodes[0];
    println!("\n{} share flagged by local hour:", node.node_id);
    for cell in &node.cells {
        let bar = "#".repeat((cell.fraction.unwrap_or(0.0) * 40.0).round() as usize);
        println!("{:02}:00 {bar}", cell.bucket_start / 3600);
    }
    Ok(())
}
