//! Score a day-ahead forecast by the curtailment a flexible load would
//! absorb if it moved its consumption into the forecast's best hours.

use chrono::TimeDelta;
use curtailkit::detect::system_curtailment;
use curtailkit::evaluate::{sweep, SweepSpec};
use curtailkit::forecast::{backtest, DayAheadPersistence, Horizon};
use curtailkit::ingest::IsoId;
use curtailkit::synth::{synthetic_market, MarketSpec};

fn main() -> anyhow::Result<()> {
    let market = synthetic_market(&MarketSpec::new(IsoId::Caiso, 30, 2, 9))?;
    let curtailment = system_curtailment(&market.curtailment)?;
    let horizon = Horizon::new(TimeDelta::zero(), TimeDelta::hours(24))?;
    let start = curtailment.grid().start();
    let schedule: Vec<_> = (1..29).map(|d| start + TimeDelta::days(d)).collect();
    let result = backtest(&DayAheadPersistence, &curtailment, &schedule, &horizon, 0)?;

    let specs = [
        SweepSpec::new(TimeDelta::hours(8), TimeDelta::hours(2)),
        SweepSpec::new(TimeDelta::hours(24), TimeDelta::hours(4)),
    ];
    let report = sweep(&result.entries, &specs)?;
    println!("window  shift  windows  forecast  immediate  random  oracle  anti-oracle  (mean MW)");
    for g in &report.groups {
        let h = |d: Option<TimeDelta>| d.map_or(0, |d| d.num_hours());
        println!(
            "{:>5}h {:>5}h {:>8} {:>9.1} {:>10.1} {:>7.1} {:>7.1} {:>12.1}",
            h(g.w),
            h(g.c),
            g.windows,
            g.means.forecast_impact,
            g.means.immediate_baseline,
            g.means.random_baseline,
            g.means.oracle_impact,
            g.means.anti_oracle_impact
        );
    }
    Ok(())
}
