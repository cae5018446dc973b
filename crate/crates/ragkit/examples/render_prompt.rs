//! Renders a prompt bundle into the chat wire format and parses it back,
//! demonstrating that citation-marked context survives a round trip.

use std::path::Path;

use ragkit::prompt::{parse_chatml, render_chatml, PromptBundle};

fn main() -> ragkit::Result<()> {
    let bundle_path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/bundles/citations_two_chunks.json");
    let bundle: PromptBundle =
        serde_json::from_str(&std::fs::read_to_string(bundle_path).expect("bundle present"))
            .expect("valid bundle");
    bundle.validate()?;

    let rendered = render_chatml(&bundle);
    println!("rendered wire format ({} bytes):", rendered.len());
    println!("{}", "-".repeat(60));
    print!("{rendered}");
    println!("{}", "-".repeat(60));

    let parsed = parse_chatml(&rendered)?;
    println!("\nparsed back out:");
    println!("  system:  {}", parsed.system);
    println!("  user:    {}", parsed.user);
    println!("  context: {} cited chunk(s)", parsed.context_chunks.len());
    for (i, chunk) in parsed.context_chunks.iter().enumerate() {
        println!("    [[{i}]] {chunk}");
    }
    Ok(())
}
