// mdbook can't run snippets that depend on an external crate, so each
// chapter is pulled in as the doc comment of an empty module and
// `cargo test --doc -p gradmech-book` runs them. One module per chapter
// keeps failure locations readable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/expressions.md")]
pub mod expressions {}
#[doc = include_str!("../../../book/src/algebroids.md")]
pub mod algebroids {}
#[doc = include_str!("../../../book/src/higher.md")]
pub mod higher {}
#[doc = include_str!("../../../book/src/lie_algebras.md")]
pub mod lie_algebras {}
#[doc = include_str!("../../../book/src/tulczyjew.md")]
pub mod tulczyjew {}
#[doc = include_str!("../../../book/src/strings.md")]
pub mod strings {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
