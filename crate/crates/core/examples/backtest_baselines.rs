//! Rolling-origin backtest of the three baseline forecasters on synthetic
//! system curtailment, scored by MAE.

use chrono::TimeDelta;
use curtailkit::detect::system_curtailment;
use curtailkit::evaluate::regression_metrics;
use curtailkit::forecast::{backtest, Climatology, DayAheadPersistence, Forecaster, Horizon, Persistence};
use curtailkit::ingest::IsoId;
use curtailkit::synth::{synthetic_market, MarketSpec};

fn main() -> anyhow::Result<()> {
    let market = synthetic_market(&MarketSpec::new(IsoId::Caiso, 28, 2, 5))?;
    let curtailment = system_curtailment(&market.curtailment)?;
    let horizon = Horizon::new(TimeDelta::zero(), TimeDelta::hours(24))?;
    let start = curtailment.grid().start();
    let schedule: Vec<_> = (7..27).map(|d| start + TimeDelta::days(d)).collect();

    let models: [Box<dyn Forecaster>; 3] = [
        Box::new(Persistence),
        Box::new(DayAheadPersistence),
        Box::new(Climatology::default()),
    ];
    for model in &models {
        let result = backtest(model.as_ref(), &curtailment, &schedule, &horizon, 0)?;
        let (mut n, mut abs) = (0, 0.0);
        for e in &result.entries {
            let m = regression_metrics(&e.forecast.series, &e.actual)?;
            n += m.n;
            abs += m.mae * m.n as f64;
        }
        println!(
            "{:<12} issues={} MAE={:.1} MW",
            model.name(),
            result.entries.len(),
            abs / n as f64
        );
    }
    Ok(())
}
