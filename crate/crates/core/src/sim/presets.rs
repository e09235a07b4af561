//! Built-in scenes.

use super::scene::{Footprint, Object, Room, Scene, Wall, SCENE_SCHEMA};

const SEGMENT_LEN: f64 = 2.75;

/// Deterministic, well-separated wall palette (golden-ratio hue stepping).
fn palette(i: usize) -> [u8; 3] {
    let h = (i as f64 * 0.618_033_988_75).fract() * 6.0;
    let (s, v) = if i.is_multiple_of(2) {
        (0.75, 0.95)
    } else {
        (0.55, 0.7)
    };
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to8 = |u: f64| ((u + m) * 255.0).round() as u8;
    [to8(r), to8(g), to8(b)]
}

/// Splits a straight wall into colored segments of at most `SEGMENT_LEN`.
fn push_wall(walls: &mut Vec<Wall>, a: [f64; 2], b: [f64; 2]) {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let pieces = (len / SEGMENT_LEN).ceil().max(1.0) as usize;
    for k in 0..pieces {
        let t0 = k as f64 / pieces as f64;
        let t1 = (k + 1) as f64 / pieces as f64;
        let lerp = |t: f64| [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
        let idx = walls.len();
        walls.push(Wall {
            a: lerp(t0),
            b: lerp(t1),
            color: palette(idx),
        });
    }
}

/// Horizontal wall at height `y` from `x0` to `x1` with door gaps `(center, width)`.
fn wall_with_doors_h(walls: &mut Vec<Wall>, y: f64, x0: f64, x1: f64, doors: &[(f64, f64)]) {
    let mut x = x0;
    for &(c, w) in doors {
        push_wall(walls, [x, y], [c - w / 2.0, y]);
        x = c + w / 2.0;
    }
    push_wall(walls, [x, y], [x1, y]);
}

fn wall_with_doors_v(walls: &mut Vec<Wall>, x: f64, y0: f64, y1: f64, doors: &[(f64, f64)]) {
    let mut y = y0;
    for &(c, w) in doors {
        push_wall(walls, [x, y], [x, c - w / 2.0]);
        y = c + w / 2.0;
    }
    push_wall(walls, [x, y], [x, y1]);
}

fn room(name: &str, min: [f64; 2], max: [f64; 2]) -> Room {
    Room {
        name: name.into(),
        min,
        max,
    }
}

/// 22×22 m office floor: two long side corridors, a central hall and four
/// rooms, with doorways between them.
pub fn default_scene() -> Scene {
    let mut walls = Vec::new();
    let e = 22.0;
    push_wall(&mut walls, [0.0, 0.0], [e, 0.0]);
    push_wall(&mut walls, [e, 0.0], [e, e]);
    push_wall(&mut walls, [e, e], [0.0, e]);
    push_wall(&mut walls, [0.0, e], [0.0, 0.0]);
    // corridor/core separators
    wall_with_doors_v(
        &mut walls,
        4.0,
        0.0,
        e,
        &[(4.0, 1.5), (11.0, 2.5), (18.0, 1.5)],
    );
    wall_with_doors_v(
        &mut walls,
        18.0,
        0.0,
        e,
        &[(4.0, 1.5), (11.0, 2.5), (18.0, 1.5)],
    );
    // hall boundaries
    wall_with_doors_h(&mut walls, 8.0, 4.0, 18.0, &[(7.5, 1.5), (14.5, 1.5)]);
    wall_with_doors_h(&mut walls, 14.0, 4.0, 18.0, &[(7.5, 1.5), (14.5, 1.5)]);
    // room dividers
    push_wall(&mut walls, [11.0, 0.0], [11.0, 8.0]);
    push_wall(&mut walls, [11.0, 14.0], [11.0, 22.0]);

    let objects = vec![
        Object {
            id: "cabinet".into(),
            footprint: Footprint::Rect {
                min: [5.0, 1.0],
                max: [7.0, 2.0],
            },
            height_frac: 0.7,
            color: [120, 80, 40],
        },
        Object {
            id: "table".into(),
            footprint: Footprint::Disc {
                center: [11.0, 11.0],
                radius: 0.8,
            },
            height_frac: 0.35,
            color: [200, 200, 60],
        },
        Object {
            id: "shelf".into(),
            footprint: Footprint::Rect {
                min: [15.0, 20.5],
                max: [17.5, 21.5],
            },
            height_frac: 0.8,
            color: [60, 160, 200],
        },
        Object {
            id: "plant".into(),
            footprint: Footprint::Disc {
                center: [8.0, 17.0],
                radius: 0.4,
            },
            height_frac: 0.5,
            color: [30, 170, 50],
        },
        Object {
            id: "extinguisher".into(),
            footprint: Footprint::Disc {
                center: [21.4, 9.0],
                radius: 0.25,
            },
            height_frac: 0.3,
            color: [230, 20, 20],
        },
    ];

    let rooms = vec![
        room("corridor_left", [0.0, 0.0], [4.0, e]),
        room("corridor_right", [18.0, 0.0], [e, e]),
        room("office_a", [4.0, 0.0], [11.0, 8.0]),
        room("office_b", [11.0, 0.0], [18.0, 8.0]),
        room("hall", [4.0, 8.0], [18.0, 14.0]),
        room("kitchen", [4.0, 14.0], [11.0, e]),
        room("lab", [11.0, 14.0], [18.0, e]),
    ];

    Scene {
        schema: SCENE_SCHEMA,
        extent: [e, e],
        wall_height: 2.5,
        walls,
        objects,
        rooms,
        floor_color: [150, 140, 130],
        ceiling_color: [235, 235, 240],
        ambient_brightness: 1.0,
        brightness_gain: 1.0,
        hue_shift: 0.0,
        falloff: 0.15,
        depth_noise: None,
    }
}

/// A single empty square room with uniformly colored walls; handy for
/// geometry checks.
pub fn box_room(side: f64) -> Scene {
    let c = [180, 180, 180];
    let wall = |a, b| Wall { a, b, color: c };
    Scene {
        schema: SCENE_SCHEMA,
        extent: [side, side],
        wall_height: 2.5,
        walls: vec![
            wall([0.0, 0.0], [side, 0.0]),
            wall([side, 0.0], [side, side]),
            wall([side, side], [0.0, side]),
            wall([0.0, side], [0.0, 0.0]),
        ],
        objects: Vec::new(),
        rooms: vec![room("box", [0.0, 0.0], [side, side])],
        floor_color: [100, 100, 100],
        ceiling_color: [220, 220, 220],
        ambient_brightness: 1.0,
        brightness_gain: 1.0,
        hue_shift: 0.0,
        falloff: 0.15,
        depth_noise: None,
    }
}
