//! Round trip of a system through its JSON file form.
use conformal_ifs::examples::{export_system, registry, SystemFile};

fn main() -> conformal_ifs::Result<()> {
    let sys = registry::load("shortword")?;
    let text = export_system(&sys);
    println!("{text}");
    let back = SystemFile::parse(&text)?.build(sys.bits, sys.depth_cap)?;
    println!("rebuilt {} with K = {}", back.name, back.k());
    Ok(())
}
