//! Regenerates the problem files in `data/`.
//!
//! `cargo run -p decor-uniform --example make_corpus -- crates/cli/data`

use std::f64::consts::PI;

use decor_uniform::corpus;
use decor_uniform::io::{ProblemFile, TargetSection};
use decor_uniform::mesh::MeshConnectivity;
use decor_uniform::metric::DecoratedMetric;
use rand::{Rng, SeedableRng};

fn target(alpha: f64, curvature: Option<Vec<f64>>) -> Option<TargetSection> {
    Some(TargetSection {
        alpha,
        constant: curvature.is_none(),
        curvature,
    })
}

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut files: Vec<(&str, ProblemFile)> = Vec::new();

    let tetra = MeshConnectivity::build(4, &corpus::tetrahedron_faces()).unwrap();
    files.push((
        "tetrahedron",
        ProblemFile::from_parts(&tetra, &corpus::uniform_metric(&tetra, 3.0, 1.0), target(-2.0, Some(vec![1.0; 4]))),
    ));
    let irregular = DecoratedMetric {
        lengths: vec![1.0, 1.2, 0.9, 1.05, 1.0, 0.95],
        radii: vec![0.2, 0.25, 0.15, 0.3],
    };
    files.push((
        "tetrahedron_constant",
        ProblemFile::from_parts(&tetra, &irregular, target(-1.0, None)),
    ));
    let mut separation = corpus::uniform_metric(&tetra, 3.0, 1.0);
    separation.lengths[tetra.edge_id(0, 1).unwrap()] = 2.0;
    files.push(("invalid_separation", ProblemFile::from_parts(&tetra, &separation, None)));

    let octa = MeshConnectivity::build(6, &corpus::octahedron_faces()).unwrap();
    let sphere = corpus::uniform_metric(&octa, 1.0, 0.2);
    files.push(("sphere_unsupported", ProblemFile::from_parts(&octa, &sphere, target(2.0, None))));
    files.push(("sphere_alpha0", ProblemFile::from_parts(&octa, &sphere, target(0.0, None))));

    let torus = MeshConnectivity::build(36, &corpus::grid_torus_faces(6, 6)).unwrap();
    files.push((
        "flat_torus",
        ProblemFile::from_parts(&torus, &corpus::uniform_metric(&torus, 1.0, 0.3), target(2.0, None)),
    ));
    let mut bumpy = corpus::random_radii_metric(&torus, 0.1, 0.3, &mut rng);
    bumpy.lengths.iter_mut().for_each(|l| *l *= rng.gen_range(0.95..1.05));
    files.push(("torus", ProblemFile::from_parts(&torus, &bumpy, target(2.0, None))));
    let mut cones = vec![0.0; 36];
    cones[0] = 1.0;
    cones[21] = -1.0;
    files.push(("torus_cones", ProblemFile::from_parts(&torus, &bumpy, target(0.0, Some(cones)))));

    let g2 = MeshConnectivity::build(10, &corpus::genus_two_faces()).unwrap();
    let g2_metric = corpus::random_radii_metric(&g2, 0.1, 0.3, &mut rng);
    files.push((
        "genus2",
        ProblemFile::from_parts(&g2, &g2_metric, target(2.0, Some(vec![-1.0; 10]))),
    ));
    let refined = corpus::genus_two_refined();
    let refined_metric = corpus::random_radii_metric(&refined, 0.05, 0.3, &mut rng);
    files.push((
        "genus2_constant",
        ProblemFile::from_parts(&refined, &refined_metric, target(-2.0, None)),
    ));
    let cone_target: Vec<f64> = (0..10).map(|i| if i < 5 { -0.6 * PI } else { -0.2 * PI }).collect();
    files.push((
        "genus2_cones",
        ProblemFile::from_parts(&g2, &g2_metric, target(0.0, Some(cone_target))),
    ));

    for (name, file) in files {
        let path = format!("{dir}/{name}.json");
        std::fs::write(&path, file.to_json() + "\n").unwrap();
        println!("{path}");
    }
}
