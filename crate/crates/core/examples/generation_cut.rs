//! Generation cuts and the natural measure of their cylinders.
use conformal_ifs::arith::*;
use conformal_ifs::attractor::NaturalMeasure;
use conformal_ifs::examples::registry;
use conformal_ifs::words::generation_cut;

fn main() -> conformal_ifs::Result<()> {
    let sys = registry::load("wsc-example")?;
    let mu = NaturalMeasure::uniform(3);
    for k in 1..=4u32 {
        let r = powi(&rat(1, 3), k);
        let cut = generation_cut(&sys, &r)?;
        let mass: RationalScalar = cut.words.iter().map(|w| mu.mass(w)).sum();
        println!("r = {}: {} words, longest {}, total mass {}", fmt_rational(&r), cut.words.len(), cut.max_len(), fmt_rational(&mass));
    }
    Ok(())
}
