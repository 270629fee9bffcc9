//! Phi(x,r) against Phi*(x,r): restricted maps stay few while global maps multiply.
use conformal_ifs::arith::*;
use conformal_ifs::examples::registry;
use conformal_ifs::separation::{count_phi, CountMode};

fn main() -> conformal_ifs::Result<()> {
    let sys = registry::load("wsc-example")?;
    let x = GaussianRational::zero();
    for n in 1..=8u32 {
        let r = powi(&rat(1, 3), n);
        let restricted = count_phi(&sys, &x, &r, CountMode::Restricted)?;
        let unrestricted = count_phi(&sys, &x, &r, CountMode::Unrestricted)?;
        println!("r = 3^-{n}: Phi = {}, Phi* = {}, cut words meeting = {}", restricted.phi_count, unrestricted.phi_count, restricted.sigma_count);
    }
    Ok(())
}
