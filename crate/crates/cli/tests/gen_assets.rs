//! Regenerates the bundled demo scene and the golden render. Run manually
//! after intentional changes to the demo or the renderer:
//!
//! ```text
//! cargo test -p gsc-cli --test gen_assets -- --ignored
//! ```

use std::path::Path;

use gsc_core::demo::demo_scene;
use gsc_core::render::{render, RenderMode, RenderedImage};
use gsc_core::scene::save_scene;

#[test]
#[ignore]
fn regenerate_bundled_assets() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let scenes = root.join("scenes");
    std::fs::create_dir_all(&scenes).unwrap();

    let scene = demo_scene();
    save_scene(&scene, &scenes.join("demo.json")).unwrap();

    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    std::fs::create_dir_all(&golden_dir).unwrap();
    let out = render(&scene, 0, 0, RenderMode::Lit).unwrap();
    assert_eq!(out.diagnostics.invalid_pixels, 0);
    match out.image {
        RenderedImage::Rgb(ref img) => {
            gsc_core::img::write_png(img, &golden_dir.join("lit_f0.png")).unwrap()
        }
        _ => unreachable!("lit mode renders RGB"),
    }
    println!("assets regenerated under {}", root.display());
}
