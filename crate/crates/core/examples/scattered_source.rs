// Covariance of incoherently scattered sources on a half-wavelength ULA,
// snapshot synthesis and output SINR.
//
// ```bash
// cargo run --example scattered_source
// ```

use potdc::array::{
    covariance_from_density, generate_snapshots, output_sinr, sample_covariance, AngularDensity,
    ArrayConfig, ScatteredSource, DEFAULT_GRID_POINTS,
};
use potdc::linalg::{eig_hermitian, principal_eigvec};

pub fn run_example() -> potdc::Result<()> {
    let arr = ArrayConfig::ula(10)?;
    let sources = [
        (
            "gaussian 30°/4°",
            AngularDensity::Gaussian {
                center: 30.0,
                spread: 4.0,
            },
        ),
        (
            "uniform 10°/4°",
            AngularDensity::Uniform {
                center: 10.0,
                width: 4.0,
            },
        ),
        (
            "laplacian 30°",
            AngularDensity::TruncatedLaplacian {
                center: 30.0,
                scale: 0.1,
                support: (15.0, 45.0),
                fluctuation_seed: 7,
                fluctuation_strength: 0.9,
            },
        ),
    ];
    for (name, density) in &sources {
        let r = covariance_from_density(
            &arr,
            &ScatteredSource {
                density: density.clone(),
                power: 1.0,
            },
            DEFAULT_GRID_POINTS,
        )?;
        let eig = eig_hermitian(&r);
        let lmax = eig.max_eigenvalue();
        let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-3 * lmax).count();
        println!(
            "{name:<16} tr = {:.6}  λmax = {lmax:.4}  rank(1e-3) = {rank}",
            r.trace()
        );
    }

    let r_s = covariance_from_density(
        &arr,
        &ScatteredSource {
            density: sources[0].1.clone(),
            power: 1.0,
        },
        DEFAULT_GRID_POINTS,
    )?;
    let r_int = covariance_from_density(
        &arr,
        &ScatteredSource {
            density: sources[1].1.clone(),
            power: 10.0,
        },
        DEFAULT_GRID_POINTS,
    )?;
    let r_in = r_int.add_identity(1.0);
    let x = generate_snapshots(&r_s, &r_int, 1.0, 20, 42)?;
    let r_hat = sample_covariance(&x)?;
    println!("K = {} snapshots, tr(R̂) = {:.3}", x.len(), r_hat.trace());

    let w = principal_eigvec(&r_s);
    println!(
        "SINR of the principal eigenvector of R_s: {:.3} dB",
        output_sinr(&w, &r_s, &r_in)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> potdc::Result<()> {
    run_example()
}
