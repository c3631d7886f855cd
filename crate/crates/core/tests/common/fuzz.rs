//! Random valid Python cells for invariant checks.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 8] = ["df", "x", "total", "values", "row", "model", "plt", "i"];

fn name(rng: &mut ChaCha8Rng) -> &'static str {
    NAMES[rng.random_range(0..NAMES.len())]
}

fn expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 {
        return match rng.random_range(0..3) {
            0 => name(rng).to_string(),
            1 => rng.random_range(0..100).to_string(),
            _ => format!("'{}'", name(rng)),
        };
    }
    match rng.random_range(0..6) {
        0 => format!("{} + {}", expr(rng, depth - 1), expr(rng, depth - 1)),
        1 => format!("{}({})", name(rng), expr(rng, depth - 1)),
        2 => format!("{}[{}]", name(rng), expr(rng, depth - 1)),
        3 => format!("{}.{}()", name(rng), name(rng)),
        4 => format!("[{} for {} in {} if {}]", name(rng), name(rng), name(rng), name(rng)),
        _ => format!("(not {})", expr(rng, depth - 1)),
    }
}

pub fn block(rng: &mut ChaCha8Rng, indent: usize, depth: u32, out: &mut String) {
    let pad = "    ".repeat(indent);
    for _ in 0..rng.random_range(1..4) {
        let kind = if depth == 0 { rng.random_range(0..4) } else { rng.random_range(0..8) };
        match kind {
            0 => out.push_str(&format!("{pad}{} = {}\n", name(rng), expr(rng, 2))),
            1 => out.push_str(&format!("{pad}{}\n", expr(rng, 2))),
            2 => out.push_str(&format!("{pad}# note about {}\n{pad}{} += 1\n", name(rng), name(rng))),
            3 => out.push_str(&format!("{pad}import numpy as np\n")),
            4 => {
                out.push_str(&format!("{pad}if {} and {}:\n", name(rng), name(rng)));
                block(rng, indent + 1, depth - 1, out);
                out.push_str(&format!("{pad}else:\n"));
                block(rng, indent + 1, depth - 1, out);
            }
            5 => {
                out.push_str(&format!("{pad}for {} in {}:\n", name(rng), name(rng)));
                block(rng, indent + 1, depth - 1, out);
            }
            6 => {
                out.push_str(&format!("{pad}def f{}({}, {}):\n", rng.random_range(0..9), name(rng), name(rng)));
                block(rng, indent + 1, depth - 1, out);
                out.push_str(&format!("{pad}    return {}\n", name(rng)));
            }
            _ => {
                out.push_str(&format!("{pad}while {} < 3:\n", name(rng)));
                block(rng, indent + 1, depth - 1, out);
                out.push('\n');
            }
        }
    }
}

/// A cell of one to three top-level statements, nested up to three deep.
pub fn fuzz_cell(rng: &mut ChaCha8Rng) -> String {
    let mut code = String::new();
    block(rng, 0, 3, &mut code);
    code
}
