//! Regenerate the bundled problem fixtures:
//! `cargo run -p blockcoord --example gen_fixtures [DIR]`.

use std::path::PathBuf;

use blockcoord::instances::{bundled_spec, BUNDLED};

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&dir)?;
    for name in BUNDLED {
        let spec = bundled_spec(name).expect("bundled name");
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, spec.to_json() + "\n")?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
