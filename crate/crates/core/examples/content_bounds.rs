//! Two-sided Hausdorff content bounds and the comparability ratio over subsets.
use conformal_ifs::arith::*;
use conformal_ifs::dimension::{content_comparability, content_estimate, dyadic_subsets, geometric_schedule};
use conformal_ifs::examples::registry;

fn main() -> conformal_ifs::Result<()> {
    let sys = registry::load("cantor-1-3")?;
    let s = rat(630929753571, 1_000_000_000_000);
    let full = content_estimate(&sys, &s, None, None)?;
    println!("H^s_inf(F) in [{:.6}, {:.6}]", full.lower_f64(), full.upper_f64());
    let left = EnclosureBall::interval(int(0), rat(1, 3));
    let part = content_estimate(&sys, &s, Some(&rat(1, 27)), Some(&left))?;
    println!("H^s_(1/27)(F in [0,1/3]) in [{:.6}, {:.6}]", part.lower_f64(), part.upper_f64());
    let rep = content_comparability(&sys, &s, &dyadic_subsets(&sys, 20)?, &geometric_schedule(&rat(1, 3), 2, 8))?;
    for row in &rep.rows {
        println!("delta {:<8} C_obs {:.6}", fmt_rational(&row.delta), to_f64(&row.c_obs));
    }
    println!("C_obs = {:.6}, no increasing trend: {}", to_f64(&rep.c_obs), rep.no_increasing_trend);
    Ok(())
}
