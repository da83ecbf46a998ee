// Hermitian eigendecomposition and the principal generalized eigenvector,
// cross-checked against cyclic Jacobi and power iteration.
//
// ```bash
// cargo run --example hermitian_eig
// ```

use potdc::linalg::{eig_hermitian, eig_hermitian_jacobi, principal_gen_eig};
use potdc::oracle::power_gen_eig;
use potdc::random::{random_psd, random_psd_rank, rng};

pub fn run_example() -> potdc::Result<()> {
    let mut r = rng(5);
    let a = random_psd(&mut r, 8).add_identity(0.5);
    let e1 = eig_hermitian(&a);
    let e2 = eig_hermitian_jacobi(&a);
    let diff = (&e1.eigenvalues - &e2.eigenvalues).amax();
    println!("eigenvalues {:.6?}", e1.eigenvalues.as_slice());
    println!("max difference to Jacobi {diff:.2e}");

    let b = random_psd_rank(&mut r, 8, 3).add_identity(-0.2);
    let (lambda, w) = principal_gen_eig(&a, &b)?;
    let (lp, v) = power_gen_eig(&a, &b, 1);
    let overlap = w.as_vector().dotc(&v.normalize()).norm();
    println!("λmax(A⁻¹B) = {lambda:.10} (power iteration {lp:.10}), |⟨w, v⟩| = {overlap:.12}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> potdc::Result<()> {
    run_example()
}
