pub mod detect;
pub mod evaluate;
pub mod forecast;
pub mod ingest;
pub mod synth;
pub mod timeseries;
