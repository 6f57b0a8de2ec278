//! A gapless mode under the jump pair and under the single combined jump.

use open_kitaev::bath::BathParams;
use open_kitaev::dynamics::InitialState;
use open_kitaev::oracle::zero_mode_series;

fn main() {
    let bath = BathParams::ohmic(0.3, 0.1, 1.0, 10.0).unwrap();
    let times: Vec<f64> = (0..=10).map(|i| i as f64).collect();
    let (pair, combined) = zero_mode_series(&bath, InitialState::FullyExcited, &times).unwrap();
    for ((t, a), b) in times.iter().zip(&pair).zip(&combined) {
        println!("t = {t:>4}  pair {a:.12}  combined {b:.12}");
    }
}
