//! Load an assignment spec file and show what it defines, or every problem
//! with it.
//!
//! ```text
//! cargo run --example validate_spec -- path/to/spec.toml
//! ```
//!
//! Defaults to the bundled leap-year spec, then also shows the errors for a
//! deliberately broken spec.

use std::path::{Path, PathBuf};

use hybrid_grader::{load_assignment_spec, AssignmentSpec};

fn describe(spec: &AssignmentSpec) {
    println!("assignment {}", spec.assignment_number);
    println!("compiler:  {}", spec.compiler.command_template.join(" "));
    println!(
        "rubric:    lexical {} / black-box {} of {}, compile gate {}",
        spec.rubric.lexical_weight, spec.rubric.blackbox_weight, spec.rubric.scale, spec.rubric.compile_gate
    );
    for rule in &spec.rules {
        println!("rule {:<16} {:?} weight {}: {}", rule.rule_id, rule.polarity, rule.weight, rule.regex().as_str());
    }
    for test in &spec.tests {
        println!(
            "test {:<16} stdin {:?} -> {:?} (timeout {:?})",
            test.test_id, test.stdin_text, test.expected_stdout, test.timeout
        );
    }
}

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/leap_year/spec.toml")
    });
    match load_assignment_spec(&path) {
        Ok(spec) => describe(&spec),
        Err(e) => println!("{e}"),
    }

    if std::env::args().len() == 1 {
        let broken = r#"
assignment_number = 3
[[rules]]
rule_id = "unbalanced"
pattern = "if ("
[[tests]]
test_id = "t1"
expected_stdout = "x"
timeout_secs = -1
[rubric]
lexical_weight = 0.9
"#;
        println!();
        match AssignmentSpec::from_toml_str(broken, Path::new("broken.toml"), Path::new(".")) {
            Ok(_) => println!("unexpectedly valid"),
            Err(e) => println!("{e}"),
        }
    }
}
