use roomgen::pipeline::{scene_seed, GenerationConfig, ObjectSet};
use roomgen::raycast::{build_accelerator, render_depth, sample_valid_view};
use roomgen::scenegen::{assemble_scene, ObjectSource};
use roomgen::seed::derived_stream;

#[test]
fn accepted_frame_equals_full_render() {
    let cfg = GenerationConfig {
        n_objects: 40,
        master_seed: 11,
        ..GenerationConfig::default()
    };
    let set = ObjectSet::generate(&cfg).unwrap();
    let mut checked = 0;
    for i in 0..6 {
        let seed = scene_seed(cfg.master_seed, i, 0);
        let Ok(scene) = assemble_scene(&set as &dyn ObjectSource, seed, &cfg.scene) else { continue };
        let bvh = build_accelerator(&scene.meshes().unwrap()).unwrap();
        let Ok(view) = sample_valid_view(&scene, &bvh, &mut derived_stream(seed, "view", 0), &cfg.view) else {
            continue;
        };
        let full = render_depth(&bvh, &cfg.view.intrinsics, &view.frame.pose);
        assert_eq!(view.frame, full);
        assert_eq!(view.qualifying, full.qualifying_objects(cfg.view.min_pixels));
        checked += 1;
        if checked == 2 {
            break;
        }
    }
    assert_eq!(checked, 2);
}
