//! The printer's contract: `parse_kernel(print_kernel(k))` is structurally
//! `k` for every valid kernel, and printing is a fixpoint after one trip.

mod common;

use common::valid_kernel;
use mapfold_core::kernel::{parse_kernel, print_kernel};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_then_parse_is_identity(kernel in valid_kernel()) {
        let text = print_kernel(&kernel);
        let reparsed = parse_kernel(&text)
            .unwrap_or_else(|e| panic!("printed kernel failed to parse: {e}\n---\n{text}"));
        prop_assert_eq!(&reparsed, &kernel, "round trip changed the kernel\n---\n{}", text);
    }

    #[test]
    fn printing_is_a_fixpoint(kernel in valid_kernel()) {
        let once = print_kernel(&kernel);
        let twice = print_kernel(&parse_kernel(&once).unwrap());
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn comments_and_blank_lines_are_not_part_of_the_canonical_form() {
    let text = "\
reducer spaced   # trailing comment

let total = 0    # another
for v in values:

  total = add(total, v)
emit total
";
    let kernel = parse_kernel(text).unwrap();
    let canonical = print_kernel(&kernel);
    assert!(!canonical.contains('#'));
    assert_eq!(parse_kernel(&canonical).unwrap(), kernel);
}
