//! Derived appearance and layout variants of a base spec.
//!
//! Every variant is a plain [`GameSpec`] transformation: the engine never
//! learns which variant it is running. Applying a variant consumes the
//! matching hook in the output spec, so the result is an ordinary game.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

/// Variant selector as exposed on the command line and in result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariantTag {
    Base,
    ModPosition,
    ModColorSize,
    ModImage,
}

impl VariantTag {
    pub const ALL: [VariantTag; 4] = [
        VariantTag::Base,
        VariantTag::ModPosition,
        VariantTag::ModColorSize,
        VariantTag::ModImage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VariantTag::Base => "base",
            VariantTag::ModPosition => "mod-position",
            VariantTag::ModColorSize => "mod-colorsize",
            VariantTag::ModImage => "mod-image",
        }
    }

    /// Row label used in result tables.
    pub fn row_label(self) -> &'static str {
        match self {
            VariantTag::Base => "Base",
            VariantTag::ModPosition => "Mod-Position",
            VariantTag::ModColorSize => "Mod-ColorSize",
            VariantTag::ModImage => "Mod-Image",
        }
    }
}

impl std::fmt::Display for VariantTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for VariantTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(VariantTag::Base),
            "mod-position" => Ok(VariantTag::ModPosition),
            "mod-colorsize" => Ok(VariantTag::ModColorSize),
            "mod-image" => Ok(VariantTag::ModImage),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

/// True when the spec carries what the variant needs.
///
/// Position modification needs declared placements to permute, so specs with
/// fully random spawning do not support it. Image modification needs the
/// sprite renderer; flat-rectangle specs have no images to swap.
pub fn variant_applicable(spec: &GameSpec, tag: VariantTag) -> bool {
    match tag {
        VariantTag::Base => true,
        VariantTag::ModPosition => spec.variants.position.is_some(),
        VariantTag::ModColorSize => !spec.variants.colorsize.is_empty(),
        VariantTag::ModImage => {
            spec.renderer == Renderer::Sprites && !spec.variants.image.is_empty()
        }
    }
}

fn not_applicable(spec: &GameSpec, tag: VariantTag) -> VariantError {
    let reason = match tag {
        VariantTag::Base => unreachable!("base is always applicable"),
        VariantTag::ModPosition => {
            "spec declares no mod_position hook; its placements are not fixed".to_string()
        }
        VariantTag::ModColorSize => "spec declares no mod_colorsize substitutions".to_string(),
        VariantTag::ModImage => {
            if spec.renderer == Renderer::FlatRect {
                "spec renders flat rectangles; there are no images to substitute".to_string()
            } else {
                "spec declares no mod_image substitutions".to_string()
            }
        }
    };
    VariantError::NotApplicable {
        game: spec.name.clone(),
        kind: tag,
        reason,
    }
}

/// Derives the variant spec named by `tag` using the spec's own preset
/// hooks. `seed` only matters for position modification.
///
/// Deterministic: equal `(spec, tag, seed)` always yields an equal spec.
pub fn apply_variant(spec: &GameSpec, tag: VariantTag, seed: u64) -> Result<GameSpec, VariantError> {
    if !variant_applicable(spec, tag) {
        return Err(not_applicable(spec, tag));
    }
    let mut out = spec.clone();
    match tag {
        VariantTag::Base => {}
        VariantTag::ModPosition => {
            let hook = out.variants.position.take().expect("checked applicable");
            permute_positions(&mut out, &hook, seed);
        }
        VariantTag::ModColorSize => {
            let subs = std::mem::take(&mut out.variants.colorsize);
            for sub in &subs {
                let class = out
                    .classes
                    .iter_mut()
                    .find(|c| c.id == sub.class)
                    .expect("validated hook class");
                if let Some(color) = sub.color {
                    class.color = color;
                }
                if let Some(size) = sub.size {
                    class.size = size;
                }
            }
        }
        VariantTag::ModImage => {
            let subs = std::mem::take(&mut out.variants.image);
            for class in &mut out.classes {
                if let Some(sub) = subs.iter().find(|s| s.from_sprite == class.sprite) {
                    class.sprite = sub.to_sprite.clone();
                }
            }
        }
    }
    out.validate()?;
    Ok(out)
}

/// Re-draws a fraction of each hooked class's placements, per level,
/// uniformly over free cells in the row band that class already occupies.
/// Object counts per class never change.
fn permute_positions(spec: &mut GameSpec, hook: &PositionHook, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: BTreeMap<String, Size> = spec
        .classes
        .iter()
        .map(|c| (c.id.clone(), c.size))
        .collect();
    for level in &mut spec.levels {
        for class in &hook.classes {
            let idxs: Vec<usize> = level
                .placements
                .iter()
                .enumerate()
                .filter(|(_, p)| &p.class == class)
                .map(|(i, _)| i)
                .collect();
            if idxs.is_empty() {
                continue;
            }
            let &(w, h) = sizes.get(class.as_str()).expect("validated class");
            let (w, h) = (w as i32, h as i32);
            let band_lo = idxs.iter().map(|&i| level.placements[i].y).min().unwrap();
            let band_hi = idxs.iter().map(|&i| level.placements[i].y).max().unwrap();
            let redraw_n = ((idxs.len() as f64) * hook.fraction).round() as usize;
            if redraw_n == 0 {
                continue;
            }
            // Uniform choice of which placements move, then one fresh cell
            // per mover, drawn against the live occupancy map.
            let mut pool = idxs.clone();
            for i in 0..redraw_n.min(pool.len()) {
                let j = rng.random_range(i..pool.len());
                pool.swap(i, j);
            }
            let movers: Vec<usize> = pool[..redraw_n.min(pool.len())].to_vec();
            for &mover in &movers {
                let mut occupied = Vec::new();
                for (i, p) in level.placements.iter().enumerate() {
                    if i == mover {
                        continue;
                    }
                    let (pw, ph) = sizes[p.class.as_str()];
                    occupied.push((p.x, p.y, pw as i32, ph as i32));
                }
                let mut free = Vec::new();
                for y in band_lo..=band_hi.min(spec.grid_height - h) {
                    for x in 0..=(spec.grid_width - w) {
                        let clash = occupied.iter().any(|&(ox, oy, ow, oh)| {
                            x < ox + ow && ox < x + w && y < oy + oh && oy < y + h
                        });
                        if !clash {
                            free.push((x, y));
                        }
                    }
                }
                if free.is_empty() {
                    continue;
                }
                let (x, y) = free[rng.random_range(0..free.len())];
                level.placements[mover].x = x;
                level.placements[mover].y = y;
            }
        }
    }
}
