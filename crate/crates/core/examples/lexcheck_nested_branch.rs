//! Structural rules on source text.
//!
//! Evaluates the nested-branch rule and a "no `||`" rule against the two
//! leap-year fixtures, then shows why comments are stripped first: a comment
//! that contains a nested if/else would otherwise satisfy the rule.
//!
//! ```text
//! cargo run --example lexcheck_nested_branch
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use hybrid_grader::lexcheck::{evaluate_rule, evaluate_ruleset, Polarity, RuleSpec, NESTED_BRANCH_PATTERN};

fn fixture(kind: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/leap_year").join(kind).join("main.cpp");
    fs::read_to_string(path).expect("fixture")
}

fn main() {
    let rules = vec![
        RuleSpec::new("nested-branch", NESTED_BRANCH_PATTERN, Polarity::MustMatch)
            .unwrap()
            .with_description("uses a nested if/else"),
        RuleSpec::new("no-logical-or", r"\|\|", Polarity::MustNotMatch)
            .unwrap()
            .with_description("does not use ||")
            .with_weight(0.5),
    ];

    for kind in ["nested", "flat"] {
        let sources = vec![(PathBuf::from("main.cpp"), fixture(kind))];
        let section = evaluate_ruleset(&sources, &rules);
        println!("{kind}: {:.0}% of rule weight satisfied", 100.0 * section.fraction());
        for verdict in &section.rules {
            let mark = if verdict.result.satisfied { "PASS" } else { "FAIL" };
            println!("  [{mark}] {}: {}", verdict.result.rule_id, verdict.description);
        }
    }

    let sneaky = format!(
        "{}\n/* if (a) {{ if (b) {{ }} else {{ }} }} else {{ }} */\n",
        fixture("flat")
    );
    let stripped = &rules[0];
    let raw = rules[0].clone().with_stripping(false, false);
    println!();
    println!("flat solution with a nested if/else inside a comment:");
    println!("  comments stripped: satisfied = {}", evaluate_rule(&sneaky, stripped).satisfied);
    println!("  comments kept:     satisfied = {}", evaluate_rule(&sneaky, &raw).satisfied);
}
