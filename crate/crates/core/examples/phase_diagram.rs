//! Critical chemical potentials of the long-range chain against the decay exponent.
//!
//! cargo run --example phase_diagram [L]

use open_kitaev::model::{phase_boundary, Exponent, ExponentFamily, GapClosure};

fn main() {
    let length: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1500);
    println!("{:>6} {:>14} {:>14}", "phi", "mu_c(k=0)/J", "mu_c(k=pi)/J");
    for phi in [1.2, 1.5, 2.0, 3.0, 5.0, f64::INFINITY] {
        let b = |which| phase_boundary(Exponent::from(phi), which, ExponentFamily::Hopping, length).unwrap();
        println!(
            "{phi:>6} {:>14.10} {:>14.10}",
            b(GapClosure::ZeroMomentum),
            b(GapClosure::PiMomentum)
        );
    }
}
