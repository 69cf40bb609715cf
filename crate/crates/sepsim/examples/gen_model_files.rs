//! Writes the two bundled model files: the reference walker and the same
//! hardware worn by a 24.9 kg heavier person, used by the robustness drills.

use std::path::Path;

use sepsim::prosthesis::{reference_params, save_walker_params};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets");
    std::fs::create_dir_all(dir).unwrap();

    let base = reference_params();
    let heavy = base.with_added_human_mass(24.9).unwrap();

    let p1 = Path::new(dir).join("model1.model");
    save_walker_params(&p1, &base).unwrap();
    println!(
        "wrote {} (human {:.1} kg)",
        p1.display(),
        base.human.total_mass
    );

    let p2 = Path::new(dir).join("model2.model");
    save_walker_params(&p2, &heavy).unwrap();
    println!(
        "wrote {} (human {:.1} kg)",
        p2.display(),
        heavy.human.total_mass
    );
}
