//! Downsample a 5-minute synthetic LMP series to hourly and print its
//! local time-of-day profile.

use curtailkit::ingest::IsoId;
use curtailkit::synth::{synthetic_market, MarketSpec};
use curtailkit::timeseries::{resample, time_of_day_profile, Aggregation, Resolution};

fn main() -> anyhow::Result<()> {
    let market = synthetic_market(&MarketSpec::new(IsoId::Caiso, 14, 1, 11))?;
    let (node, lmp) = market.lmp.iter().next().expect("one node");
    let hourly = resample(lmp, Resolution::HOURLY, Aggregation::Mean)?;
    println!(
        "{node}: {} five-minute steps -> {} hourly means",
        lmp.len(),
        hourly.len()
    );

    let zone = IsoId::Caiso.descriptor().zone;
    let profile = time_of_day_profile(&hourly, Resolution::HOURLY, zone)?;
    println!("local hour   median     q25     q75");
    for b in &profile.buckets {
        if let Some(q) = b.quartiles {
            println!(
                "{:>10} {:>8.2} {:>7.2} {:>7.2}",
                b.start_seconds / 3600,
                q.median,
                q.q25,
                q.q75
            );
        }
    }
    Ok(())
}
