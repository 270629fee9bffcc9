//! Points x_n < ... < x_1 of F magnified onto [-1, 1].
use conformal_ifs::arith::*;
use conformal_ifs::examples::registry;
use conformal_ifs::separation::{build_weak_tangent, ilc_search};

fn main() -> conformal_ifs::Result<()> {
    let sys = registry::load("beta-near-overlap")?;
    let search = ilc_search(&sys, 14, &rat(1, 20))?;
    for n in [4, 8] {
        let t = build_weak_tangent(&sys, &search, n)?;
        let pts: Vec<String> = t.normalized.iter().map(|p| format!("{:.4}", to_f64(p))).collect();
        println!("n = {n}: {pts:?}");
        println!("  max gap {:.6} (bound {}), strict stages {}/{n}, status {:?}", to_f64(&t.max_gap), fmt_rational(&t.gap_bound), t.strict_stages, t.status);
    }
    Ok(())
}
