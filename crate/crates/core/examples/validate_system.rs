//! Validates the built-in systems and prints their certified constants.
use conformal_ifs::arith::to_f64;
use conformal_ifs::examples::registry;

fn main() -> conformal_ifs::Result<()> {
    for name in registry::NAMES {
        let sys = registry::load(name)?;
        let diam = sys.diam_f();
        println!(
            "{:<18} N = {} dim {}  K <= {:<12.6} diam F in [{:.6}, {:.6}]  V = {}",
            sys.name,
            sys.n_maps(),
            sys.dimension,
            to_f64(sys.k()),
            to_f64(&diam.lo),
            to_f64(&diam.hi),
            serde_json::to_string(&sys.v_domain).unwrap()
        );
    }
    Ok(())
}
