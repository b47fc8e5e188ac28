//! Procedural texture images and directory-per-class datasets.
//!
//! Every texture is anisotropic so that a 90 degree rotation changes the
//! pixel layout while keeping the class.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::{save_pgm, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TextureClass {
    /// Sawtooth ramps along one axis.
    Ridges,
    /// Sawtooth ramps along a diagonal.
    Slants,
    /// Disks shaded from one side.
    Blobs,
    /// Staggered bricks with a one-sided shadow.
    Bricks,
}

impl TextureClass {
    pub const ALL: [TextureClass; 4] =
        [TextureClass::Ridges, TextureClass::Slants, TextureClass::Blobs, TextureClass::Bricks];

    pub fn name(self) -> &'static str {
        match self {
            TextureClass::Ridges => "ridges",
            TextureClass::Slants => "slants",
            TextureClass::Blobs => "blobs",
            TextureClass::Bricks => "bricks",
        }
    }
}

/// Uniform noise image.
pub fn noise_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(width, height, |_, _| rng.random()).expect("non-empty")
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// A `size` x `size` texture of the given class with jittered scale, phase,
/// contrast and additive Gaussian noise.
pub fn texture_image(class: TextureClass, size: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period: f64 = rng.random_range(7.0..10.0);
    let phase: f64 = rng.random_range(0.0..period);
    let contrast: f64 = rng.random_range(70.0..120.0);
    let mean: f64 = rng.random_range(90.0..160.0);
    let noise = Normal::new(0.0, rng.random_range(4.0..10.0)).expect("valid sigma");

    let base: Vec<f64> = match class {
        TextureClass::Ridges => grid(size, |x, y| {
            let wobble = 1.5 * (y / 11.0).sin();
            ((x + phase + wobble) / period).fract()
        }),
        TextureClass::Slants => grid(size, |x, y| ((x + 0.5 * y + phase) / period).fract()),
        TextureClass::Blobs => {
            let mut img = vec![0.5; size * size];
            let count = size * size / 60;
            for _ in 0..count {
                let cx = rng.random_range(0.0..size as f64);
                let cy = rng.random_range(0.0..size as f64);
                let r = rng.random_range(2.5..4.5) * period / 8.0;
                for y in 0..size {
                    for x in 0..size {
                        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                        if dx * dx + dy * dy <= r * r {
                            // lit from the left
                            img[y * size + x] = 0.5 - 0.5 * dx / r;
                        }
                    }
                }
            }
            img
        }
        TextureClass::Bricks => {
            let bh = period.round().max(4.0);
            let bw = 2.0 * bh;
            grid(size, |x, y| {
                let row = ((y + phase) / bh).floor();
                let offset = if row as i64 % 2 == 0 { 0.0 } else { bw / 2.0 };
                let u = (x + phase + offset).rem_euclid(bw);
                let v = (y + phase).rem_euclid(bh);
                if u < 1.0 || v < 1.0 {
                    0.0
                } else if u < 2.0 || v < 2.0 {
                    1.0
                } else {
                    0.6
                }
            })
        }
    };

    let data = base
        .iter()
        .map(|&b| to_u8(mean + contrast * (b - 0.5) + noise.sample(&mut rng)))
        .collect();
    GrayImage::new(size, size, data).expect("square image")
}

fn grid(size: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            out.push(f(x as f64, y as f64));
        }
    }
    out
}

/// Layout of a generated dataset.
#[derive(Debug, Clone, Copy)]
pub struct DatasetSpec {
    pub per_class: usize,
    pub size: usize,
    pub seed: u64,
    /// Rotate each image by a random multiple of 90 degrees.
    pub rotate: bool,
}

/// Writes `root/<class>/<class>_NNN.pgm` for every texture class.
pub fn write_dataset(root: &Path, spec: &DatasetSpec) -> Result<()> {
    write_views(Some(root), None, spec)
}

/// Writes two aligned trees with identical file names: `train/` holds the
/// upright textures and `test/` the same textures rotated by a random
/// multiple of 90 degrees (when `spec.rotate` is set).
pub fn write_paired_dataset(root: &Path, spec: &DatasetSpec) -> Result<()> {
    write_views(Some(&root.join("train")), Some(&root.join("test")), spec)
}

fn write_views(upright: Option<&Path>, rotated: Option<&Path>, spec: &DatasetSpec) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for class in TextureClass::ALL {
        for i in 0..spec.per_class {
            let img = texture_image(class, spec.size, rng.random());
            let turns = if spec.rotate { rng.random_range(0..4) } else { 0 };
            let file = format!("{}_{i:03}.pgm", class.name());
            // a lone tree carries the rotated view
            let views = match (upright, rotated) {
                (Some(u), Some(r)) => vec![(u, 0), (r, turns)],
                (Some(u), None) => vec![(u, turns)],
                (None, Some(r)) => vec![(r, turns)],
                (None, None) => vec![],
            };
            for (root, t) in views {
                let dir = root.join(class.name());
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                save_pgm(&img.rotate_quarter_turns(t), dir.join(&file))?;
            }
        }
    }
    Ok(())
}
