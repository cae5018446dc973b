//! Selects in-domain bitext two ways: exact glossary-term matching, and
//! embedding clustering where clusters are kept when they attract enough of
//! the supplied seed sentences.

use std::path::Path;

use ragkit::embed::HashEmbedder;
use ragkit::select::{ec_select, em_filter, read_bitext_tsv, read_terms_tsv, ECConfig};

fn main() -> ragkit::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let pairs = read_bitext_tsv(&fixtures.join("bitext.tsv"))?;
    let terms = read_terms_tsv(&fixtures.join("terms.tsv"))?;
    let seeds: Vec<String> = std::fs::read_to_string(fixtures.join("seed_texts.txt"))
        .expect("seed sentences present")
        .lines()
        .map(str::to_string)
        .collect();
    println!("{} bitext pairs, {} glossary terms, {} seed sentences\n", pairs.len(), terms.len(), seeds.len());

    // Exact-match selection: keep pairs whose source side contains a term.
    let exact = em_filter(&pairs, &terms);
    println!("glossary matching keeps {} pairs:", exact.len());
    for pair in exact.iter().take(4) {
        println!("  #{:<3} {}", pair.id, pair.src);
    }
    if exact.len() > 4 {
        println!("  …");
    }

    // Embedding clustering: cluster all pairs, keep clusters that attract at
    // least tau of the seed sentences.
    let embedder = HashEmbedder::new(64, 42);
    let cfg = ECConfig { k_clusters: 2, ..ECConfig::default() };
    let selection = ec_select(&pairs, &seeds, &embedder, &cfg)?;
    println!(
        "\nclustering with k = {} (seed-share threshold {}):",
        cfg.k_clusters, cfg.tau
    );
    for (cluster, share) in selection.seed_shares.iter().enumerate() {
        let members = selection.assignments.iter().filter(|&&a| a == cluster).count();
        let kept = selection.selected_clusters.contains(&cluster);
        println!(
            "  cluster {cluster}: {members:>2} pairs, seed share {share:.2} -> {}",
            if kept { "selected" } else { "discarded" }
        );
    }
    println!("selected {} of {} pairs; first few:", selection.selected_pairs.len(), pairs.len());
    for pair in selection.selected_pairs.iter().take(4) {
        println!("  #{:<3} {}", pair.id, pair.src);
    }
    Ok(())
}
