//! Doc-test shim for the book.
//!
//! mdbook renders `book/src`, but it cannot run the snippets against the
//! workspace crates. This crate includes every chapter as a module's doc
//! comment, so `cargo test -p newton-inexp-guide --doc` compiles and runs
//! each fenced `rust` block. One module per chapter keeps test failures
//! attributable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod getting_started {}

#[doc = include_str!("../../../book/src/concepts/newton-iteration.md")]
pub mod concepts_newton_iteration {}

#[doc = include_str!("../../../book/src/concepts/feasible-sets.md")]
pub mod concepts_feasible_sets {}

#[doc = include_str!("../../../book/src/concepts/inexact-projections.md")]
pub mod concepts_inexact_projections {}

#[doc = include_str!("../../../book/src/concepts/inner-solves.md")]
pub mod concepts_inner_solves {}

#[doc = include_str!("../../../book/src/concepts/forcing-schedules.md")]
pub mod concepts_forcing_schedules {}

#[doc = include_str!("../../../book/src/avebench/instances.md")]
pub mod avebench_instances {}

#[doc = include_str!("../../../book/src/avebench/benchmarking.md")]
pub mod avebench_benchmarking {}

#[doc = include_str!("../../../book/src/reference/cli.md")]
pub mod reference_cli {}

#[doc = include_str!("../../../book/src/reference/file-formats.md")]
pub mod reference_file_formats {}
