//! Builds (x, r) with many distinct restricted maps from ILC witnesses.
use conformal_ifs::arith::*;
use conformal_ifs::examples::registry;
use conformal_ifs::separation::{amplify_wsc_failure, ilc_search};

fn main() -> conformal_ifs::Result<()> {
    let sys = registry::load("beta-near-overlap")?;
    let search = ilc_search(&sys, 14, &rat(1, 20))?;
    let rep = amplify_wsc_failure(&sys, &search, 4)?;
    println!("q = {}, stages {} of {}", rep.schedule.q, rep.achieved, rep.requested);
    if let (Some(x), Some(r)) = (&rep.x, &rep.r) {
        println!("x = {}, r = {}", fmt_rational(&x.re), fmt_rational(r));
    }
    if let Some(c) = &rep.count {
        println!("#Phi(x, r) = {} >= {}", c.phi_count, rep.lower_bound);
    }
    println!("status {:?}", rep.status);
    Ok(())
}
