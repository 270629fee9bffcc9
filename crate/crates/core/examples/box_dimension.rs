//! Covering numbers, the fitted slope and the certified covering envelope.
use conformal_ifs::arith::*;
use conformal_ifs::dimension::{box_dimension_estimate, envelope_context, geometric_schedule};
use conformal_ifs::examples::registry;
use conformal_ifs::pressure::pressure_root;

fn main() -> conformal_ifs::Result<()> {
    let cantor = registry::load("cantor-1-3")?;
    let root = pressure_root(&cantor, &rat(1, 1_000_000), 16)?;
    let ctx = envelope_context(&cantor, &root)?;
    let est = box_dimension_estimate(&cantor, &geometric_schedule(&rat(1, 3), 2, 8), Some(&ctx))?;
    print!("{}", est.to_csv());
    println!("cantor slope {:.6}, envelope holds: {:?}", est.slope, est.envelope_ok);
    // the pressure zero is 1 but the attractor is the Cantor set
    let triple = registry::load("triple-overlap")?;
    let est = box_dimension_estimate(&triple, &geometric_schedule(&rat(1, 3), 3, 7), None)?;
    println!("triple-overlap slope {:.6}", est.slope);
    Ok(())
}
