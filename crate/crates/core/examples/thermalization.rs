//! Relaxation of a fully excited chain towards the thermal state.

use open_kitaev::bath::{fermi_dirac, BathParams};
use open_kitaev::dynamics::InitialState;
use open_kitaev::model::ChainParams;
use open_kitaev::protocols::{run_protocol, Protocol, RunOptions};
use open_kitaev::solver::SolverOptions;

fn main() {
    let params = ChainParams::nearest_neighbor(64, 1.0, 1.0, -0.5).unwrap();
    let bath = BathParams::ohmic(0.5, 0.01, 1.0, f64::INFINITY).unwrap();
    let protocol = Protocol::constant(-0.5, 0.5, 400.0).unwrap();
    let r = run_protocol(
        &params,
        &bath,
        &protocol,
        InitialState::FullyExcited,
        &SolverOptions::default(),
        &RunOptions::samples(9),
    )
    .unwrap();
    for s in &r.samples {
        println!("t = {:>6.1}  density = {:.6}", s.t, s.excitation_density);
    }
    let worst = r
        .final_mode_occupations()
        .iter()
        .map(|&(k, n)| (n - fermi_dirac(open_kitaev::model::dispersion(k, &params), 0.5)).abs())
        .fold(0.0, f64::max);
    println!("largest distance from Fermi-Dirac at t_final: {worst:.3e}");
}
