//! Near-coincident maps: the Cantor system stays apart, the beta system does not.
use conformal_ifs::arith::*;
use conformal_ifs::examples::registry;
use conformal_ifs::separation::ilc_search;

fn main() -> conformal_ifs::Result<()> {
    let cantor = ilc_search(&registry::load("cantor-1-3")?, 8, &rat(1, 20))?;
    println!("cantor best delta {}", cantor.best.map(|w| w.delta.to_string()).unwrap_or_default());
    let beta = ilc_search(&registry::load("beta-near-overlap")?, 14, &rat(1, 20))?;
    for (k, w) in beta.best_by_len.iter().enumerate() {
        if let Some(w) = w {
            println!("length {:>2}: {} vs {} delta {}", k + 1, w.i, w.j, fmt_rational(&w.delta.hi));
        }
    }
    println!("reached 1/20: {}", beta.reached_target);
    Ok(())
}
