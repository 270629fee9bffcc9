//! The quasi-self-similarity constant D with sampled witnesses.
use conformal_ifs::arith::fmt_rational;
use conformal_ifs::dimension::quasi_constant;
use conformal_ifs::examples::registry;

fn main() -> conformal_ifs::Result<()> {
    for name in ["cantor-1-3", "beta-near-overlap", "wsc-example"] {
        let q = quasi_constant(&registry::load(name)?)?;
        let terms: Vec<String> = q.terms.iter().map(fmt_rational).collect();
        println!("{name}: D = {} from {:?}; {} witnesses pass: {}", fmt_rational(&q.d), terms, q.witnesses.len(), q.witnesses_pass);
    }
    Ok(())
}
