//! Thin binary entry point; all behavior lives in the library's CLI module.

fn main() {
    std::process::exit(ragkit::cli::run());
}
