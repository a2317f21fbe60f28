//! DOT output for a selected support. Render with e.g. `neato -Tsvg`.
//!
//! cargo run --release --example graph_output

use psvs::io::{emit_graph, graph_dot};

fn main() -> psvs::Result<()> {
    let responses: Vec<String> = ["Small Value", "Small Growth", "Big Value", "Big Growth"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let predictors: Vec<String> = ["Mkt.RF", "SMB", "HML", "MOM"].iter().map(|s| s.to_string()).collect();
    // (response, predictor); MOM has no edge and is left out
    let support = [(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (0, 2), (2, 2)];
    print!("{}", graph_dot(&support, &responses, &predictors));
    let out = std::env::temp_dir().join("psvs-example.dot");
    emit_graph(&support, &responses, &predictors, &out)?;
    eprintln!("written to {}", out.display());
    Ok(())
}
