//! The six built-in torus lattice models.
//!
//! Each model is drawn as a straight-line layout on a fundamental domain.
//! Graph edges are labeled `1..m` (these are the generator numbers) and the
//! auxiliary edges that complete the triangulation follow. For `sq2` the
//! generator update rules are the explicit flip chain for edge 2 and its
//! conjugates by the lattice rotations; every other model derives its rules
//! from the flip recipe (on a finite cover when the torus is too small).

use crate::geometry::Layout;
use crate::model::{flip_sequence_program, parse_flip_sequence, EdgeSymmetry, Generator, LatticeModel, ModelBuilder, ModelError};

pub const MODEL_NAMES: [&str; 6] = ["sq2", "sq4", "tri3", "tri4", "hex2", "hex6"];

/// The maximal-entropy braid on the models where it fits.
pub const BETA_STAR_WORDS: [(&str, &str); 3] = [("sq2", "1 3 2 4"), ("sq4", "1,9 4,6 3,8 2,7"), ("tri4", "1,4 3,9 2,12 5,10")];

/// Reference maximum entropy per operation over mode-A words of length
/// 2, 3 and 4.
pub const REFERENCE_MAX_TEPO: [(&str, [f64; 3]); 6] = [
    ("sq2", [0.881373587, 0.962423650, 1.061275062]),
    ("sq4", [0.881373587, 0.962423650, 1.061275062]),
    ("tri3", [0.881373587, 0.962423650, 0.909223230]),
    ("tri4", [0.881373587, 0.962423650, 1.061275062]),
    ("hex2", [0.881373587, 0.962423650, 0.909223230]),
    ("hex6", [0.881373587, 0.962423650, 0.909223230]),
];

/// One flip sequence per model, written against another labeling of the
/// triangulations. Only the `sq2` entry replays on ours and is used to build
/// update rules; the rest are kept as notes.
pub const REFERENCE_FLIP_SEQUENCES: [(&str, &str, &str); 6] = [
    ("sq2", "2", "6,3,5,6',1,5',6'',4,5''"),
    ("sq4", "1", "4,6,8,10,12,7,2,8'"),
    ("tri3", "2", "4,5,6,7"),
    ("tri4", "2", "3,5,6,7,8,9"),
    ("hex2", "1", "4,5,6,4'"),
    ("hex6", "1", "2,3,10,11,12,13,14,15,10'"),
];

pub fn builtin_models() -> Vec<LatticeModel> {
    MODEL_NAMES.iter().map(|n| builtin(n).expect("built-in model")).collect()
}

pub fn builtin(name: &str) -> Result<LatticeModel, ModelError> {
    match name {
        "sq2" => sq2(),
        "sq4" => sq4(),
        "tri3" => tri3(),
        "tri4" => tri4(),
        "hex2" => hex2(),
        "hex6" => hex6(),
        _ => Err(ModelError::Invalid(format!("unknown model {name:?}"))),
    }
}

fn note(name: &str) -> String {
    let (_, g, seq) = REFERENCE_FLIP_SEQUENCES.iter().find(|r| r.0 == name).unwrap();
    format!("reference flip sequence for generator {g}: {seq}")
}

/// Add edges given as (label, tail point, displacement, is graph edge).
fn add_edges(l: &mut Layout, edges: &[(&str, usize, [f64; 2], bool)]) -> Result<(), ModelError> {
    for (label, tail, v, graph) in edges {
        l.edge_by(label, *tail, *v, *graph)?;
    }
    Ok(())
}

fn sym(name: &str, pi: [usize; 6], reversing: bool) -> EdgeSymmetry {
    let mut image = vec![0; 6];
    for (i, &p) in pi.iter().enumerate() {
        image[p - 1] = i;
    }
    EdgeSymmetry { name: name.into(), edge_image: image, orientation_reversing: reversing }
}

/// Two points on the square lattice.
pub fn sq2_layout() -> Layout {
    let mut l = Layout::new([[1.0, 1.0], [1.0, -1.0]]);
    let a = l.point("A", [0.0, 0.0]);
    l.point("B", [1.0, 0.0]);
    add_edges(
        &mut l,
        &[
            ("1", a, [1.0, 0.0], true),
            ("2", a, [-1.0, 0.0], true),
            ("3", a, [0.0, -1.0], true),
            ("4", a, [0.0, 1.0], true),
            ("5", a, [-1.0, 1.0], false),
            ("6", a, [1.0, 1.0], false),
        ],
    )
    .expect("sq2 layout");
    l
}

fn sq2() -> Result<LatticeModel, ModelError> {
    let mut b = ModelBuilder::from_layout("sq2", "square", sq2_layout())?;
    b.symmetries = vec![
        sym("R", [3, 4, 2, 1, 6, 5], false),
        sym("Rinv", [4, 3, 1, 2, 6, 5], false),
        sym("M", [1, 2, 4, 3, 6, 5], true),
    ];
    let tri = b.tri.clone();
    let e2 = tri.edge_index("2")?;
    let flips = parse_flip_sequence(&tri, "2", REFERENCE_FLIP_SEQUENCES[0].2)?;
    let ccw = flip_sequence_program(&tri, e2, &flips, Some(&[0, 1, 2, 3, 4, 5]))?;
    let m = b.symmetries[2].program();
    let cw = m.then(&ccw).then(&m).sliced();
    b.set_generator(e2, Generator { edge: e2, ccw, cw, derivation: "explicit flip chain; inverse by mirror conjugation".into() });
    let r = b.symmetries[0].clone();
    let rinv = b.symmetries[1].clone();
    let r2 = EdgeSymmetry {
        name: "RinvRinv".into(),
        edge_image: rinv.edge_image.iter().map(|&x| rinv.edge_image[x]).collect(),
        orientation_reversing: false,
    };
    for s in [&r2, &r, &rinv] {
        let (e, g) = b.conjugate(e2, s)?;
        b.set_generator(e, g);
    }
    b.initial = Some(vec![2, 2, 1, 1, 4, 1]);
    b.notes.push(note("sq2"));
    b.build()
}

const S3: f64 = 0.866_025_403_784_438_6; // sqrt(3) / 2

fn from_layout(name: &str, kind: &str, layout: Layout) -> Result<LatticeModel, ModelError> {
    let mut b = ModelBuilder::from_layout(name, kind, layout)?;
    b.notes.push(note(name));
    b.build()
}

/// Four points on the square lattice; the double cover of `sq2`. Points
/// `p0` and `p3` lift the point `A` of `sq2`, and the auxiliary diagonals are
/// lifts of its A-A diagonals.
pub fn sq4_layout() -> Layout {
    let mut l = Layout::new([[2.0, 0.0], [0.0, 2.0]]);
    let p0 = l.point("p0", [0.0, 0.0]);
    let p1 = l.point("p1", [1.0, 0.0]);
    let p2 = l.point("p2", [0.0, 1.0]);
    let p3 = l.point("p3", [1.0, 1.0]);
    add_edges(
        &mut l,
        &[
            ("1", p0, [1.0, 0.0], true),
            ("2", p0, [0.0, 1.0], true),
            ("3", p1, [1.0, 0.0], true),
            ("4", p2, [0.0, 1.0], true),
            ("5", p0, [1.0, 1.0], false),
            ("6", p1, [0.0, 1.0], true),
            ("7", p3, [0.0, 1.0], true),
            ("8", p2, [1.0, 0.0], true),
            ("9", p3, [1.0, 0.0], true),
            ("10", p3, [1.0, -1.0], false),
            ("11", p3, [-1.0, 1.0], false),
            ("12", p3, [1.0, 1.0], false),
        ],
    )
    .expect("sq4 layout");
    l
}

fn sq4() -> Result<LatticeModel, ModelError> {
    from_layout("sq4", "square", sq4_layout())
}

/// Three points on the triangular lattice (index-3 sublattice); the graph
/// is already a triangulation.
pub fn tri3_layout() -> Layout {
    let mut l = Layout::new([[1.5, S3], [0.0, 2.0 * S3]]);
    let q: Vec<usize> = (0..3).map(|i| l.point(&format!("q{i}"), [i as f64, 0.0])).collect();
    let dirs = [[1.0, 0.0], [0.5, S3], [-0.5, S3]];
    let mut label = 1;
    for &p in &q {
        for d in dirs {
            l.edge_by(&label.to_string(), p, d, true).expect("tri3 layout");
            label += 1;
        }
    }
    l
}

fn tri3() -> Result<LatticeModel, ModelError> {
    from_layout("tri3", "triangular", tri3_layout())
}

/// Four points on the triangular lattice (2 x 2 sublattice).
pub fn tri4_layout() -> Layout {
    let mut l = Layout::new([[2.0, 0.0], [1.0, 2.0 * S3]]);
    let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, S3], [1.5, S3]];
    let r: Vec<usize> = pts.iter().enumerate().map(|(i, p)| l.point(&format!("r{i}"), *p)).collect();
    let dirs = [[1.0, 0.0], [0.5, S3], [-0.5, S3]];
    for (p, d, label) in TRI4_LABELS {
        l.edge_by(label, r[p], dirs[d], true).expect("tri4 layout");
    }
    l.edges.sort_by_key(|e| e.label.parse::<u32>().unwrap());
    l
}

/// (point, direction, label) for the twelve tri4 edges.
const TRI4_LABELS: [(usize, usize, &str); 12] = [
    (0, 0, "1"),
    (0, 1, "6"),
    (0, 2, "5"),
    (1, 0, "2"),
    (1, 1, "7"),
    (1, 2, "3"),
    (2, 0, "4"),
    (2, 1, "8"),
    (2, 2, "10"),
    (3, 0, "12"),
    (3, 1, "11"),
    (3, 2, "9"),
];

fn tri4() -> Result<LatticeModel, ModelError> {
    from_layout("tri4", "triangular", tri4_layout())
}

/// Two points on the honeycomb lattice; each hexagon is cut by the
/// triangle on its three A corners.
pub fn hex2_layout() -> Layout {
    let mut l = Layout::new([[2.0 * S3, 0.0], [S3, 1.5]]);
    let a = l.point("A", [0.0, 0.0]);
    l.point("B", [0.0, 1.0]);
    add_edges(
        &mut l,
        &[
            ("1", a, [0.0, 1.0], true),
            ("2", a, [-S3, -0.5], true),
            ("3", a, [S3, -0.5], true),
            ("4", a, [2.0 * S3, 0.0], false),
            ("5", a, [S3, 1.5], false),
            ("6", a, [-S3, 1.5], false),
        ],
    )
    .expect("hex2 layout");
    l
}

fn hex2() -> Result<LatticeModel, ModelError> {
    from_layout("hex2", "hexagonal", hex2_layout())
}

/// Six points on the honeycomb lattice (sqrt(3) x sqrt(3) cell), hexagons
/// cut by their A triangles as in `hex2`.
pub fn hex6_layout() -> Layout {
    let mut l = Layout::new([[3.0 * S3, 1.5], [0.0, 3.0]]);
    let a: Vec<usize> = (0..3).map(|i| l.point(&format!("A{i}"), [2.0 * S3 * i as f64, 0.0])).collect();
    for i in 0..3 {
        l.point(&format!("B{i}"), [2.0 * S3 * i as f64, 1.0]);
    }
    let graph = [[0.0, 1.0], [-S3, -0.5], [S3, -0.5]];
    let aux = [[2.0 * S3, 0.0], [S3, 1.5], [-S3, 1.5]];
    let mut label = 1;
    for dirs in [(graph, true), (aux, false)] {
        for &p in &a {
            for d in dirs.0 {
                l.edge_by(&label.to_string(), p, d, dirs.1).expect("hex6 layout");
                label += 1;
            }
        }
    }
    l
}

fn hex6() -> Result<LatticeModel, ModelError> {
    from_layout("hex6", "hexagonal", hex6_layout())
}
