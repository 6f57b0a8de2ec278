//! Runs a ramp from a config file and writes CSV with the config embedded.
//!
//! cargo run --release --example from_config -- examples/configs/fig2.toml chain.L=512

use open_kitaev::config::{config_from_metadata, load_config};
use open_kitaev::output::{ramp_table, to_csv};
use open_kitaev::protocols::run_protocol;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "crates/core/examples/configs/fig2.toml".into());
    let overrides: Vec<String> = args.collect();
    let c = load_config(path.as_ref(), &overrides).unwrap();
    let r = run_protocol(
        &c.chain,
        &c.bath_params().unwrap(),
        &c.protocol().unwrap(),
        c.protocol.init,
        &c.solver,
        &c.run_options(),
    )
    .unwrap();
    let csv = to_csv(&ramp_table(&r), "ramp", Some(&c));
    assert_eq!(config_from_metadata(&csv).unwrap(), c);
    print!("{csv}");
}
