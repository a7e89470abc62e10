//! Pixel rendering for the baseline learner and for debugging.
//!
//! Sprites are procedural 5x5 masks scaled to the object's bounding box.
//! Each sprite has a distinct fill density, so swapping sprites changes the
//! average brightness of the covered cells, not just their arrangement.

use super::WorldState;
use crate::gamespec::{GameSpec, Renderer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelFrame {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB bytes.
    pub pixels: Vec<u8>,
}

const BACKGROUND: (u8, u8, u8) = (12, 12, 16);

/// 5x5 sprite masks. Unknown sprite ids fall back to a solid block, so spec
/// authors can name sprites freely in flat_rect games.
fn mask(sprite: &str) -> [&'static str; 5] {
    match sprite {
        "ship" => ["..#..", ".###.", "#####", "#.#.#", "..#.."],
        "dart" => ["..#..", "..#..", "..#..", ".###.", "..#.."],
        "invader" => ["#.#.#", ".###.", "##.##", ".###.", "#...#"],
        "saucer" => [".###.", "#####", "#####", "#####", ".#.#."],
        "bunker" => ["#####", "#####", "##.##", "#...#", "....."],
        "brick" => ["#####", "#.#.#", "#####", "#.#.#", "#####"],
        "bolt" => ["..#..", "..#..", "..#..", "..#..", "..#.."],
        "spark" => ["#...#", ".#.#.", "..#..", ".#.#.", "#...#"],
        "bomb" => ["..#..", ".###.", ".###.", ".###.", "..#.."],
        "orb" => [".###.", "#####", "#####", "#####", ".###."],
        "racer" => ["..#..", ".###.", "..#..", ".###.", ".#.#."],
        "hog" => [".###.", "#####", ".###.", "#####", "#.#.#"],
        "cruiser" => [".###.", "#####", "#####", "#####", ".#.#."],
        "van" => ["#####", "#...#", "#...#", "#####", ".#.#."],
        _ => ["#####", "#####", "#####", "#####", "#####"],
    }
}

/// Draws the state at `cell_px` pixels per grid cell. Deterministic: equal
/// states render byte-identically. Objects draw in creation order, later
/// ones on top.
pub fn render(spec: &GameSpec, state: &WorldState, cell_px: u32) -> PixelFrame {
    let width = spec.grid_width as u32 * cell_px;
    let height = spec.grid_height as u32 * cell_px;
    let mut pixels = Vec::with_capacity((width * height * 3) as usize);
    for _ in 0..(width * height) {
        pixels.extend_from_slice(&[BACKGROUND.0, BACKGROUND.1, BACKGROUND.2]);
    }
    let mut frame = PixelFrame {
        width,
        height,
        pixels,
    };

    for obj in super::observe(spec, state) {
        let class = state
            .objects
            .iter()
            .find(|o| o.id == obj.handle)
            .map(|o| o.class_idx)
            .expect("observed objects are live");
        let sprite = &spec.classes[class].sprite;
        let rows = match spec.renderer {
            Renderer::FlatRect => ["#####"; 5],
            Renderer::Sprites => mask(sprite),
        };
        let x0 = obj.x * cell_px as i32;
        let y0 = obj.y * cell_px as i32;
        let bw = obj.w * cell_px;
        let bh = obj.h * cell_px;
        for dy in 0..bh {
            let py = y0 + dy as i32;
            if py < 0 || py >= height as i32 {
                continue;
            }
            let my = (dy * 5 / bh) as usize;
            let row = rows[my].as_bytes();
            for dx in 0..bw {
                let px = x0 + dx as i32;
                if px < 0 || px >= width as i32 {
                    continue;
                }
                let mx = (dx * 5 / bw) as usize;
                if row[mx] != b'#' {
                    continue;
                }
                let at = ((py as u32 * width + px as u32) * 3) as usize;
                frame.pixels[at] = obj.color.0;
                frame.pixels[at + 1] = obj.color.1;
                frame.pixels[at + 2] = obj.color.2;
            }
        }
    }
    frame
}

impl PixelFrame {
    /// Binary PPM (P6) bytes, ready to write to a file.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Mean luminance of each grid cell, row-major, scaled to [0, 1].
    /// This is the pixel baseline's input vector.
    pub fn cell_means(&self, cell_px: u32) -> Vec<f64> {
        let gw = self.width / cell_px;
        let gh = self.height / cell_px;
        let mut out = Vec::with_capacity((gw * gh) as usize);
        for cy in 0..gh {
            for cx in 0..gw {
                let mut sum = 0u64;
                for dy in 0..cell_px {
                    for dx in 0..cell_px {
                        let px = cx * cell_px + dx;
                        let py = cy * cell_px + dy;
                        let at = ((py * self.width + px) * 3) as usize;
                        sum += self.pixels[at] as u64
                            + self.pixels[at + 1] as u64
                            + self.pixels[at + 2] as u64;
                    }
                }
                out.push(sum as f64 / (cell_px as u64 * cell_px as u64 * 3 * 255) as f64);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_have_distinct_density_from_their_swaps() {
        // Image substitution must change average cell brightness, or the
        // pixel baseline could not notice the swap.
        for (a, b) in [
            ("ship", "dart"),
            ("invader", "saucer"),
            ("bunker", "brick"),
            ("bolt", "spark"),
            ("bomb", "orb"),
            ("racer", "hog"),
            ("cruiser", "van"),
        ] {
            let density = |s: &str| -> usize {
                mask(s)
                    .iter()
                    .map(|row| row.bytes().filter(|&b| b == b'#').count())
                    .sum()
            };
            assert_ne!(density(a), density(b), "{a} vs {b}");
        }
    }
}
