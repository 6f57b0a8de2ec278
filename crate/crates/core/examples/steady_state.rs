//! Rapidities and steady-state occupations of a small chain.
//!
//! Every mode relaxes to the Fermi-Dirac occupation at the bath temperature.

use open_kitaev::bath::{self, BathParams};
use open_kitaev::model::{ChainParams, CouplingTable};
use open_kitaev::thirdq;

fn main() {
    let params = ChainParams::nearest_neighbor(12, 1.0, 1.0, -0.5).unwrap();
    let bath_params = BathParams::ohmic(0.5, 0.01, 1.0, f64::INFINITY).unwrap();
    println!("{:>8} {:>8} {:>22} {:>22} {:>10} {:>10}", "k", "lambda", "r+", "r-", "n_ness", "n_FD");
    for m in CouplingTable::new(&params).modes(&params) {
        let rates = bath::rates(m.lambda, &bath_params).unwrap();
        let r = thirdq::rapidities(&m, &rates, bath_params.gamma);
        let n = thirdq::ness_correlation(&m, &rates, bath_params.gamma).unwrap().occupation();
        println!(
            "{:>8.4} {:>8.4} {:>22.6} {:>22.6} {:>10.6} {:>10.6}",
            m.k,
            m.lambda,
            r.plus,
            r.minus,
            n,
            thirdq::ness_occupation(&m, bath_params.temperature)
        );
    }
}
