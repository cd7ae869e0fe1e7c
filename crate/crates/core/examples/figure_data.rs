//! Writes the N = 600 exact and approximate series, both reference curves and
//! a checksummed manifest to the directory given as the first argument.

use std::path::PathBuf;

use beamsplit::cli::{figure2, Figure2Args};

fn main() -> beamsplit::Result<()> {
    let out_dir = std::env::args().nth(1).map_or_else(
        || std::env::temp_dir().join("beamsplit-figure"),
        PathBuf::from,
    );
    let manifest = figure2(&Figure2Args {
        out_dir: out_dir.clone(),
        n_total: 600,
        ny: vec![0, 12, 24],
    })?;
    for f in manifest["files"].as_array().into_iter().flatten() {
        println!(
            "{}  {}",
            f["sha256"].as_str().unwrap_or(""),
            f["file"].as_str().unwrap_or("")
        );
    }
    println!("written to {}", out_dir.display());
    Ok(())
}
