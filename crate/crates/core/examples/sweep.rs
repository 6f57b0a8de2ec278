//! Final excitation density against ramp velocity, split into the coherent
//! and incoherent branches, and their crossover. About a minute in release.

use open_kitaev::bath::BathParams;
use open_kitaev::dynamics::InitialState;
use open_kitaev::model::ChainParams;
use open_kitaev::protocols::{log_spaced, sweep_velocities};
use open_kitaev::solver::{Method, SolverOptions};

fn main() {
    let params = ChainParams::nearest_neighbor(512, 1.0, 1.0, -3.0).unwrap();
    let bath = BathParams::ohmic(0.1, 0.001, 1.0, 4000.0).unwrap();
    let solver = SolverOptions::default()
        .with_tolerances(1e-6, 1e-9)
        .with_method(Method::ExplicitEmbeddedRk);
    let v = log_spaced(1e-4, 1e-2, 5);
    let r = sweep_velocities(&params, &bath, -3.0, -1.0, &v, InitialState::Thermal(None), &solver).unwrap();
    println!("{:>10} {:>12} {:>12} {:>12}", "v", "total", "coherent", "incoherent");
    for p in &r.points {
        println!("{:>10.3e} {:>12.4e} {:>12.4e} {:>12.4e}", p.v, p.total, p.coherent, p.incoherent);
    }
    println!("crossover velocity: {:?}", r.v_crossover);
    if let Some((a, _)) = r.coherent_exponent() {
        println!("coherent branch ~ v^{a:.3}");
    }
}
