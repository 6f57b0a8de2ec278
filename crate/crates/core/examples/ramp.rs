//! Linear ramp of the chemical potential through the critical point, with
//! and without the bath.
//!
//! cargo run --release --example ramp [v]

use open_kitaev::bath::BathParams;
use open_kitaev::dynamics::InitialState;
use open_kitaev::model::ChainParams;
use open_kitaev::protocols::{run_protocol, Protocol, RunOptions, Sampling};
use open_kitaev::solver::SolverOptions;

fn main() {
    let v: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let params = ChainParams::nearest_neighbor(1024, 1.0, 1.0, -5.0).unwrap();
    let bath = BathParams::ohmic(0.181, 0.001, 1.0, 4000.0).unwrap();
    let protocol = Protocol::linear_ramp(-5.0, 0.0, v, 0.181).unwrap();
    let opts = RunOptions {
        sampling: Sampling::UniformMu,
        samples: 21,
        ..RunOptions::default()
    };
    let solver = SolverOptions::default();
    let open = run_protocol(&params, &bath, &protocol, InitialState::Thermal(None), &solver, &opts).unwrap();
    let closed =
        run_protocol(&params, &bath.with_gamma(0.0), &protocol, InitialState::Thermal(None), &solver, &opts).unwrap();
    println!("{:>6} {:>14} {:>14}", "mu", "E(gamma>0)", "E(gamma=0)");
    for (a, b) in open.samples.iter().zip(&closed.samples) {
        println!("{:>6.2} {:>14.6e} {:>14.6e}", a.mu, a.excitation_density, b.excitation_density);
    }
}
