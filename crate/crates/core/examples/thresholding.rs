//! The closed-form coordinate updates for LASSO, SCAD and MCP, tabulated
//! over a range of linearized scores `Z` at a fixed curvature `W`.
//!
//! ```text
//! cargo run --example thresholding
//! ```

use renewglm::penalty::{coord_update_lasso, coord_update_mcp, coord_update_scad};
use renewglm::CoordinateStat;

fn main() {
    let (w, lambda) = (1.0, 0.5);
    println!("W = {w}, lambda = {lambda}, SCAD r = 3.7, MCP r = 3");
    println!("{:>6} {:>9} {:>9} {:>9}", "Z", "lasso", "scad", "mcp");
    for k in -12..=12 {
        let z = 0.25 * k as f64;
        let s = CoordinateStat::new(z, w);
        println!(
            "{z:>6.2} {:>9.4} {:>9.4} {:>9.4}",
            coord_update_lasso(s, lambda).unwrap(),
            coord_update_scad(s, lambda, 3.7).unwrap(),
            coord_update_mcp(s, lambda, 3.0).unwrap(),
        );
    }

    // Below the convexity threshold the scalar problem has two local minima
    // and the update jumps straight from 0 to the unpenalized solution.
    let w = 0.2;
    println!("\nMCP with W = {w} (< 1/r): the update is a hard threshold");
    for z in [0.3, 0.5, 0.7, 0.9] {
        let b = coord_update_mcp(CoordinateStat::new(z, w), lambda, 3.0).unwrap();
        println!("Z = {z:.1} -> {b:.4}");
    }
}
