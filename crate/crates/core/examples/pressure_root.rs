//! Certified brackets of P(s) and of its zero for the closed-form systems.
use conformal_ifs::arith::*;
use conformal_ifs::examples::registry;
use conformal_ifs::pressure::{pressure_bracket, pressure_root};

fn main() -> conformal_ifs::Result<()> {
    let cantor = registry::load("cantor-1-3")?;
    for s in [rat(1, 2), rat(2, 3)] {
        let p = pressure_bracket(&cantor, &s, 6)?;
        let b = p.bracket();
        println!("P({s}) in [{:.9}, {:.9}]", to_f64(&b.lo), to_f64(&b.hi));
    }
    for name in ["cantor-1-3", "interval-1-2", "triple-overlap"] {
        let root = pressure_root(&registry::load(name)?, &rat(1, 1_000_000), 16)?;
        println!("{name}: zero in [{}, {}] (depth {}, certified {})", to_f64(&root.s_lo), to_f64(&root.s_hi), root.depth, root.certified);
    }
    println!("log 2 / log 3 = {}", 2f64.ln() / 3f64.ln());
    Ok(())
}
