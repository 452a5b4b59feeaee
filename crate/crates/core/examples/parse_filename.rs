//! Parse submission archive names.
//!
//! ```text
//! cargo run --example parse_filename -- Ada_Lovelace_3.zip notes.txt
//! ```
//!
//! With no arguments a built-in set of good and bad names is used.

use hybrid_grader::ingest::parse_submission_filename;

fn main() {
    let mut names: Vec<String> = std::env::args().skip(1).collect();
    if names.is_empty() {
        names = [
            "Ada_Lovelace_3.zip",
            "Jean-Luc_O'Neill_12.ZIP",
            "Ada_Lovelace_3.rar",
            "AdaLovelace_3.zip",
            "Ada__3.zip",
            "Ada_Lovelace_three.zip",
            "Ada_Lovelace_3.5.zip",
        ]
        .map(String::from)
        .to_vec();
    }
    for name in names {
        match parse_submission_filename(&name) {
            Ok(id) => println!(
                "{name:<28} ok      student={:?} assignment={} stem={}",
                id.student(),
                id.assignment_number,
                id.stem()
            ),
            Err(e) => println!("{name:<28} reject  {}: {e}", e.code()),
        }
    }
}
