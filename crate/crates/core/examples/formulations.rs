//! The Fourier, eta, block and rate-equation evolutions on one ramp.
//! The first three are exact and agree; the rate equation drops the
//! rotation of the quasiparticle basis.

use open_kitaev::bath::BathParams;
use open_kitaev::dynamics::InitialState;
use open_kitaev::model::ChainParams;
use open_kitaev::protocols::{run_protocol, Evolution, Protocol, RunOptions};
use open_kitaev::solver::SolverOptions;

fn main() {
    let params = ChainParams::nearest_neighbor(64, 1.0, 1.0, -3.0).unwrap();
    let bath = BathParams::ohmic(0.2, 0.05, 1.0, 10.0).unwrap();
    let protocol = Protocol::linear_ramp(-3.0, 0.0, 1.0, 0.2).unwrap();
    let solver = SolverOptions::default().with_tolerances(1e-11, 1e-13);
    for evolution in [Evolution::Fourier, Evolution::Eta, Evolution::Block, Evolution::RateEquation] {
        let opts = RunOptions::samples(2).with_evolution(evolution);
        let r = run_protocol(&params, &bath, &protocol, InitialState::Vacuum, &solver, &opts).unwrap();
        println!("{evolution:?}: final density {:.12e}", r.final_density());
    }
}
