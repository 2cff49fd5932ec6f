//! Prints the catalog document for the lower unitriangular group `U_n`.
//!
//! cargo run -p commgrowth --example derive_unitriangular -- 4 u4 > crates/core/catalog/u4.json

use commgrowth::catalog::GroupDoc;
use commgrowth::unitriangular::unitriangular_group;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let id = args.next().unwrap_or_else(|| format!("u{n}"));
    let spec = unitriangular_group(n, &id).expect("valid unitriangular group");
    let doc = GroupDoc::from_spec(&spec);
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
}
