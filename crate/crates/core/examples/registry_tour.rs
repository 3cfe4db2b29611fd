// SPDX-License-Identifier: Apache-2.0

//! Lists the node library by category, with socket types.
//!
//! `cargo run --example registry_tour [path/to/registry.json]`

use pipeforge::registry::{load_registry, Category};
use pipeforge::Registry;

fn main() -> anyhow::Result<()> {
    let reg = match std::env::args().nth(1) {
        Some(path) => load_registry(path)?,
        None => Registry::canonical(),
    };
    let counts = reg.counts();
    println!(
        "registry v{}: {} nodes ({} input, {} processor, {} output)",
        reg.version(),
        counts.total(),
        counts.input,
        counts.processor,
        counts.output
    );
    for category in [Category::Input, Category::Processor, Category::Output] {
        println!("\n[{category}]");
        for spec in reg.specs().filter(|s| s.category == category) {
            let sockets = |side: &[pipeforge::registry::SocketSpec]| {
                side.iter()
                    .map(|s| {
                        let types: Vec<String> = s.data_types.iter().map(ToString::to_string).collect();
                        format!("{}:{}", s.socket_id, types.join("|"))
                    })
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            println!(
                "  {:<22} ({}) -> ({})  {}",
                spec.node_spec_id,
                sockets(&spec.input_specs),
                sockets(&spec.output_specs),
                spec.short_description
            );
        }
    }
    Ok(())
}
