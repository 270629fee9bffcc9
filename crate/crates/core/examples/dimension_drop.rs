//! Root, box slope, overlap scan, ILC and Ahlfors evidence side by side.
use conformal_ifs::cli::cmd_dimension_drop;
use conformal_ifs::config::{RunConfig, ScheduleSpec};
use conformal_ifs::arith::rat;
use conformal_ifs::examples::registry;

fn main() -> conformal_ifs::Result<()> {
    let cfg = RunConfig { r_schedule: ScheduleSpec::new(rat(1, 3), 3, 7), ilc_max_len: 8, ..Default::default() };
    for name in ["cantor-1-3", "triple-overlap"] {
        let rep = cmd_dimension_drop(&registry::load(name)?, &cfg)?;
        println!("{}", serde_json::to_string_pretty(&rep).unwrap());
    }
    Ok(())
}
