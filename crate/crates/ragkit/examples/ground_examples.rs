//! Grounds instruction-tuning examples against a chunk pool: each example
//! gets a best-matching reference chunk (scored on answer similarity, prompt
//! similarity, and shared numbers) plus hard distractors, rendered into a
//! context block.

use std::path::Path;

use ragkit::corpus::Chunk;
use ragkit::embed::HashEmbedder;
use ragkit::ground::{ground_example, GroundingConfig, IftExample};

fn main() -> ragkit::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let examples: Vec<IftExample> = std::fs::read_to_string(fixtures.join("ift.jsonl"))
        .expect("fixture examples present")
        .lines()
        .map(|line| serde_json::from_str(line).expect("valid example row"))
        .collect();
    let pool: Vec<Chunk> = std::fs::read_to_string(fixtures.join("pool.jsonl"))
        .expect("fixture pool present")
        .lines()
        .map(|line| serde_json::from_str(line).expect("valid chunk row"))
        .collect();

    let embedder = HashEmbedder::new(64, 42);
    let cfg = GroundingConfig::default();
    println!(
        "scoring: {} * answer similarity + {} * prompt similarity + {} * number overlap\n",
        cfg.w_answer, cfg.w_prompt, cfg.w_numbers
    );

    for example in &examples {
        let grounded = ground_example(example, &pool, &pool, &embedder, &cfg, true)?;
        println!("prompt:     {}", example.prompt);
        println!(
            "task:       {}",
            example.task_category.as_deref().unwrap_or("(unspecified)")
        );
        match &grounded.reference_chunk_id {
            Some(id) => println!("reference:  {id}"),
            None => println!("reference:  none (closed-ended task, distractors only)"),
        }
        println!("distractors: {}", grounded.distractor_chunk_ids.join(", "));
        let first_line = grounded.context.lines().next().unwrap_or("");
        println!("context[0]: {first_line}\n");
    }
    Ok(())
}
