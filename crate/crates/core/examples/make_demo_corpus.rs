//! Write seeded demo corpora for trying out the CLI:
//! a positive reaction corpus and a labeled marker corpus.
//!
//! Usage: make_demo_corpus <out_dir> [count] [seed]

use rxnjudge_core::synthetic::{marker_corpus, positive_corpus};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let out_dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "demo".to_string()));
    let count: usize = args
        .next()
        .map(|v| v.parse().expect("count must be an integer"))
        .unwrap_or(2000);
    let seed: u64 = args
        .next()
        .map(|v| v.parse().expect("seed must be an integer"))
        .unwrap_or(42);

    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("positives.txt"), positive_corpus(count, seed))?;
    std::fs::write(out_dir.join("marker.tsv"), marker_corpus(count, seed + 1))?;
    println!("wrote {} reactions to {}", count, out_dir.display());
    Ok(())
}
