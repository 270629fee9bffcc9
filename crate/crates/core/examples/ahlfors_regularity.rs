//! Ratios mu(B(x,r))/r^s and the uniform-perfectness constant.
use conformal_ifs::arith::*;
use conformal_ifs::attractor::{NaturalMeasure, SeedStrategy};
use conformal_ifs::dimension::{ahlfors_check, ahlfors_samples, geometric_schedule, uniform_perfectness};
use conformal_ifs::examples::registry;

fn main() -> conformal_ifs::Result<()> {
    let rs = geometric_schedule(&rat(1, 3), 2, 8);
    let cantor = registry::load("cantor-1-3")?;
    let s = RationalInterval::hull2(rat(6309297, 10_000_000), rat(6309298, 10_000_000));
    let xs = ahlfors_samples(&cantor, 50, &SeedStrategy::FirstFixedPoint)?;
    let env = ahlfors_check(&cantor, &NaturalMeasure::uniform(2), &s, &xs, &rs, None)?;
    print!("{}", env.to_csv());
    println!("cantor envelope {}", env.envelope);
    let up = uniform_perfectness(&cantor, 50, &rs)?;
    println!("uniformly perfect with H = {} (existence bound {})", up.h, up.lemma_h);
    // overlapping copies pile mass onto the left half
    let triple = registry::load("triple-overlap")?;
    let xs = ahlfors_samples(&triple, 50, &SeedStrategy::FirstFixedPoint)?;
    let env = ahlfors_check(&triple, &NaturalMeasure::uniform(3), &RationalInterval::point(int(1)), &xs, &rs, None)?;
    for row in &env.per_scale {
        println!("triple r = {:<10} ratios [{:.3}, {:.3}]", fmt_rational(&row.r), to_f64(&row.min.lo), to_f64(&row.max.hi));
    }
    Ok(())
}
