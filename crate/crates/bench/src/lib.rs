//! Fixed inputs shared by the benchmarks.

use renoir::data::gen_two_moons;
use renoir::distributions::NoiseModel;
use renoir::net::RandomizedNet;
use renoir::Dataset;

pub const SEED: u64 = 17;

pub fn moons(n: usize) -> Dataset {
    gen_two_moons(n, 0.1, SEED).expect("valid moons parameters")
}

/// Untrained 2-16-16-2 network with input Gaussian noise.
pub fn mlp(sigma: f64) -> RandomizedNet {
    let noise = NoiseModel::gaussian_isotropic(sigma, 2).expect("valid sigma");
    RandomizedNet::mlp(&[2, 16, 16, 2], 0.1, Some(noise), 0, SEED).expect("valid widths")
}
