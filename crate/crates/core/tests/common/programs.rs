// SPDX-License-Identifier: Apache-2.0

//! Random valid programs for round-trip testing.

use std::collections::BTreeSet;

use pipeforge::dsl::{Arg, PseudoProgram, Section, Statement};
use proptest::prelude::*;

pub fn ident() -> impl Strategy<Value = String> {
    "[a-zA-Z_][a-zA-Z0-9_]{0,10}"
}

pub fn literal() -> impl Strategy<Value = String> {
    // Anything but line breaks, with quotes and backslashes over-represented.
    prop_oneof![
        "[^\r\n]{0,24}",
        "[a-z \"\\\\/]{0,16}",
    ]
}

fn arg() -> impl Strategy<Value = (String, bool, String)> {
    (ident(), any::<bool>(), prop_oneof![ident(), literal()])
}

pub fn statement() -> impl Strategy<Value = Statement> {
    (
        proptest::option::of(ident()),
        ident(),
        1u32..200,
        proptest::collection::vec(arg(), 0..5),
    )
        .prop_map(|(out, ty, n, raw_args)| {
            let mut seen = BTreeSet::new();
            let args = raw_args
                .into_iter()
                .filter(|(name, _, _)| seen.insert(name.clone()))
                .map(|(name, is_var, value)| {
                    if is_var && pipeforge::dsl::is_ident(&value) {
                        Arg::var(&name, &value)
                    } else {
                        Arg::literal(&name, &value)
                    }
                })
                .collect();
            Statement::new(out.as_deref(), &format!("{ty}_{n}"), &ty, args)
        })
}

pub fn program() -> impl Strategy<Value = PseudoProgram> {
    proptest::collection::vec(statement(), 1..10).prop_flat_map(|statements| {
        let len = statements.len();
        proptest::collection::vec((ident(), 0..=len), 0..4).prop_map(move |mut raw| {
            raw.sort_by_key(|(_, start)| *start);
            PseudoProgram {
                statements: statements.clone(),
                sections: raw.into_iter().map(|(label, start)| Section { label, start }).collect(),
            }
        })
    })
}
