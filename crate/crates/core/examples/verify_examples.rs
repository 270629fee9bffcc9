//! Exact re-verification of the two worked examples.
use conformal_ifs::examples::{verify_shortword_example, verify_wsc_example};

fn main() -> conformal_ifs::Result<()> {
    for rep in [verify_shortword_example()?, verify_wsc_example(10)?] {
        println!("{}: all certified {}", rep.example, rep.all_certified);
        for c in &rep.claims {
            let mark = if c.erratum { " (erratum)" } else { "" };
            println!("  {:<12} {:?}{mark}: {}", c.id, c.certified, c.observed);
        }
    }
    Ok(())
}
