/*!
Character-level sequence-to-sequence models that turn short English
comments into small C programs, plus the tooling to judge the output.

The pieces, roughly in data-flow order:

* [`minic`] lexes, parses and interprets the C subset the programs use.
* [`corpus`] renders each problem in many equivalent styles and checks
  every rendering against the problem's tests.
* [`textcodec`] maps characters to ids.
* [`lstm`] and [`seq2seq`] hold the network and its exact gradients, and
  [`gradcheck`] verifies those gradients numerically.
* [`trainer`] runs Adam and reads and writes checkpoints.
* [`evalkit`] scores generated programs for syntax, function and
  closeness to the training set.

All randomness comes from [`rng::SplitMix64`], so every run is
reproducible from its seed.

```
use nl2code::minic::run_source;

let out = run_source(
    "#include <stdio.h>\nint main() { printf(\"%d\\n\", 6 * 7); return 0; }",
    "",
    1_000,
)?;
assert_eq!(out.stdout, "42\n");
# Ok::<(), nl2code::minic::MiniCError>(())
```

A longer walk-through lives in the `book/` directory of the repository.
*/

pub mod corpus;
pub mod evalkit;
pub mod gradcheck;
pub mod lstm;
pub mod minic;
pub mod numkit;
pub mod rng;
pub mod seq2seq;
pub mod textcodec;
pub mod trainer;

// The book's code blocks run as doctests through these empty modules.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/minic.md")]
    mod minic {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/textcodec.md")]
    mod textcodec {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
