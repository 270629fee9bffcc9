//! Exact overlaps: distinct words whose maps agree on F.
use conformal_ifs::examples::registry;
use conformal_ifs::separation::exact_overlap_scan;

fn main() -> conformal_ifs::Result<()> {
    for name in ["triple-overlap", "cantor-1-3", "wsc-example", "beta-near-overlap"] {
        let scan = exact_overlap_scan(&registry::load(name)?, 6, 1 << 20)?;
        let first: Vec<String> = scan.pairs.iter().take(3).map(|(a, b)| format!("{a} ~ {b}")).collect();
        println!("{name}: {} pairs, first at length {:?}, e.g. {first:?}", scan.pair_count, scan.first_len);
    }
    Ok(())
}
