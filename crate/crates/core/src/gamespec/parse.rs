//! Text format reader and canonical writer.
//!
//! The format is line oriented: `[section]` headers, then one declaration
//! per line. `#` starts a comment, blank lines are ignored. All errors carry
//! the 1-based line and column of the offending token.

use std::fmt::Write as _;

use super::*;

/// A token plus where it came from, for error reporting.
struct Tok<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Tok<'a> {
    fn err(&self, msg: impl Into<String>) -> SpecError {
        SpecError::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> SpecError {
    SpecError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

/// Splits one logical line into whitespace-separated tokens with columns.
fn tokenize(line: &str, line_no: usize) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut col = 0usize;
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok {
                    text: &line[s..i],
                    line: line_no,
                    col: col + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
            col = i;
        }
    }
    if let Some(s) = start {
        out.push(Tok {
            text: &line[s..],
            line: line_no,
            col: col + 1,
        });
    }
    out
}

fn parse_int<T: std::str::FromStr>(tok: &Tok<'_>, what: &str) -> Result<T, SpecError> {
    tok.text
        .parse::<T>()
        .map_err(|_| tok.err(format!("expected {what}, got `{}`", tok.text)))
}

fn parse_f64(tok: &Tok<'_>, text: &str) -> Result<f64, SpecError> {
    text.parse::<f64>()
        .map_err(|_| tok.err(format!("expected a number, got `{text}`")))
}

fn parse_color(tok: &Tok<'_>, text: &str) -> Result<Color, SpecError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(tok.err(format!("expected color as r,g,b, got `{text}`")));
    }
    let mut rgb = [0u8; 3];
    for (slot, part) in rgb.iter_mut().zip(&parts) {
        *slot = part
            .parse::<u8>()
            .map_err(|_| tok.err(format!("color channel `{part}` outside 0..=255")))?;
    }
    Ok((rgb[0], rgb[1], rgb[2]))
}

fn parse_size(tok: &Tok<'_>, text: &str) -> Result<Size, SpecError> {
    let (w, h) = text
        .split_once(',')
        .ok_or_else(|| tok.err(format!("expected size as w,h, got `{text}`")))?;
    let w = w
        .parse::<u32>()
        .map_err(|_| tok.err(format!("bad size width `{w}`")))?;
    let h = h
        .parse::<u32>()
        .map_err(|_| tok.err(format!("bad size height `{h}`")))?;
    Ok((w, h))
}

/// `key=value` attributes trailing a keyword line.
struct Attrs<'a> {
    pairs: Vec<(Tok<'a>, &'a str, bool)>, // token, value, consumed
    line: usize,
}

impl<'a> Attrs<'a> {
    fn new(toks: Vec<Tok<'a>>, line: usize) -> Result<(Vec<Tok<'a>>, Self), SpecError> {
        let mut plain = Vec::new();
        let mut pairs = Vec::new();
        for t in toks {
            match t.text.split_once('=') {
                Some((k, v)) if !k.is_empty() => {
                    let key = Tok {
                        text: k,
                        line: t.line,
                        col: t.col,
                    };
                    if !v.is_empty() {
                        pairs.push((key, v, false));
                    } else {
                        return Err(t.err(format!("attribute `{k}` is missing a value")));
                    }
                }
                _ => {
                    if !pairs.is_empty() {
                        return Err(t.err("positional token after key=value attributes"));
                    }
                    plain.push(t);
                }
            }
        }
        Ok((plain, Attrs { pairs, line }))
    }

    fn take(&mut self, key: &str) -> Option<(&Tok<'a>, &'a str)> {
        for entry in &mut self.pairs {
            if entry.0.text == key && !entry.2 {
                entry.2 = true;
                let (tok, val, _) = entry;
                return Some((&*tok, *val));
            }
        }
        None
    }

    fn finish(self) -> Result<(), SpecError> {
        for (tok, _, used) in &self.pairs {
            if !used {
                return Err(syntax(
                    tok.line,
                    tok.col,
                    format!("unknown attribute `{}`", tok.text),
                ));
            }
        }
        let _ = self.line;
        Ok(())
    }
}

#[derive(Default)]
struct Draft {
    name: Option<String>,
    renderer: Option<Renderer>,
    max_score: Option<i64>,
    grid_width: Option<i32>,
    grid_height: Option<i32>,
    actions: Vec<ActionDef>,
    classes: Vec<ObjectClassDef>,
    dynamics: Vec<DynamicsRule>,
    rewards: Vec<RewardRule>,
    timeout: Option<u32>,
    on_timeout: Option<TimeoutOutcome>,
    timeout_reward: i64,
    win: Option<WinCondition>,
    levels: Vec<LevelDef>,
    variants: VariantHooks,
}

/// Parses spec text, validating every invariant on success.
pub fn parse(text: &str) -> Result<GameSpec, SpecError> {
    let mut draft = Draft::default();
    let mut section: Option<(String, usize)> = None;
    let mut saw_any = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if body.trim().is_empty() {
            continue;
        }
        saw_any = true;
        let trimmed = body.trim_start();
        let col = body.len() - trimmed.len() + 1;
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .trim_end()
                .strip_suffix(']')
                .ok_or_else(|| syntax(line_no, col, "unterminated section header"))?;
            const KNOWN: &[&str] = &[
                "game", "grid", "actions", "classes", "dynamics", "rewards", "termination",
                "levels", "variants",
            ];
            if !KNOWN.contains(&name) {
                return Err(syntax(line_no, col, format!("unknown section `[{name}]`")));
            }
            section = Some((name.to_string(), line_no));
            continue;
        }
        let toks = tokenize(body, line_no);
        let Some((sec, _)) = &section else {
            return Err(syntax(line_no, col, "declaration before any [section] header"));
        };
        match sec.as_str() {
            "game" => game_line(&mut draft, toks)?,
            "grid" => grid_line(&mut draft, toks)?,
            "actions" => action_line(&mut draft, toks)?,
            "classes" => class_line(&mut draft, toks)?,
            "dynamics" => dynamics_line(&mut draft, toks, line_no)?,
            "rewards" => reward_line(&mut draft, toks, line_no)?,
            "termination" => termination_line(&mut draft, toks)?,
            "levels" => level_line(&mut draft, toks, line_no)?,
            "variants" => variant_line(&mut draft, toks, line_no)?,
            _ => unreachable!(),
        }
    }

    if !saw_any {
        return Err(syntax(1, 1, "empty document"));
    }

    let require = |opt: Option<String>| opt;
    let spec = GameSpec {
        name: require(draft.name).ok_or(SpecError::Semantic {
            msg: "missing `name` in [game]".into(),
        })?,
        renderer: draft.renderer.ok_or(SpecError::Semantic {
            msg: "missing `renderer` in [game]".into(),
        })?,
        max_score: draft.max_score.ok_or(SpecError::Semantic {
            msg: "missing `max_score` in [game]".into(),
        })?,
        grid_width: draft.grid_width.ok_or(SpecError::Semantic {
            msg: "missing `width` in [grid]".into(),
        })?,
        grid_height: draft.grid_height.ok_or(SpecError::Semantic {
            msg: "missing `height` in [grid]".into(),
        })?,
        actions: draft.actions,
        classes: draft.classes,
        dynamics: draft.dynamics,
        rewards: draft.rewards,
        termination: TerminationDef {
            timeout: draft.timeout.ok_or(SpecError::Semantic {
                msg: "missing `timeout` in [termination]".into(),
            })?,
            on_timeout: draft.on_timeout.ok_or(SpecError::Semantic {
                msg: "missing `on_timeout` in [termination]".into(),
            })?,
            timeout_reward: draft.timeout_reward,
            win: draft.win.unwrap_or(WinCondition::None),
        },
        levels: draft.levels,
        variants: draft.variants,
    };
    spec.validate()?;
    Ok(spec)
}

fn expect_kv<'a>(toks: &'a [Tok<'a>]) -> Result<(&'a Tok<'a>, &'a Tok<'a>), SpecError> {
    if toks.len() == 3 && toks[1].text == "=" {
        Ok((&toks[0], &toks[2]))
    } else {
        let t = &toks[0];
        Err(t.err("expected `key = value`"))
    }
}

fn game_line(draft: &mut Draft, toks: Vec<Tok<'_>>) -> Result<(), SpecError> {
    let (key, val) = expect_kv(&toks)?;
    match key.text {
        "name" => draft.name = Some(val.text.to_string()),
        "renderer" => {
            draft.renderer = Some(match val.text {
                "flat_rect" => Renderer::FlatRect,
                "sprites" => Renderer::Sprites,
                other => return Err(val.err(format!("unknown renderer `{other}`"))),
            })
        }
        "max_score" => draft.max_score = Some(parse_int(val, "an integer")?),
        other => return Err(key.err(format!("unknown [game] key `{other}`"))),
    }
    Ok(())
}

fn grid_line(draft: &mut Draft, toks: Vec<Tok<'_>>) -> Result<(), SpecError> {
    let (key, val) = expect_kv(&toks)?;
    match key.text {
        "width" => draft.grid_width = Some(parse_int(val, "an integer")?),
        "height" => draft.grid_height = Some(parse_int(val, "an integer")?),
        other => return Err(key.err(format!("unknown [grid] key `{other}`"))),
    }
    Ok(())
}

fn action_line(draft: &mut Draft, toks: Vec<Tok<'_>>) -> Result<(), SpecError> {
    if toks.len() != 4 || toks[0].text != "key" || toks[2].text != "=" {
        return Err(toks[0].err("expected `key <label> = <semantic>`"));
    }
    let semantic = match toks[3].text {
        "move_left" => ActionSem::MoveLeft,
        "move_right" => ActionSem::MoveRight,
        "move_up" => ActionSem::MoveUp,
        "move_down" => ActionSem::MoveDown,
        "fire" => ActionSem::Fire,
        "noop" => ActionSem::Noop,
        other => return Err(toks[3].err(format!("unknown action semantic `{other}`"))),
    };
    draft.actions.push(ActionDef {
        label: toks[1].text.to_string(),
        semantic,
    });
    Ok(())
}

fn class_line(draft: &mut Draft, toks: Vec<Tok<'_>>) -> Result<(), SpecError> {
    let line = toks[0].line;
    let (plain, mut attrs) = Attrs::new(toks, line)?;
    if plain.is_empty() {
        return Err(syntax(line, 1, "expected `class <id> ...`"));
    }
    if plain.len() != 2 || plain[0].text != "class" {
        return Err(plain[0].err("expected `class <id> color=r,g,b size=w,h sprite=<id>`"));
    }
    let color = match attrs.take("color") {
        Some((tok, v)) => parse_color(tok, v)?,
        None => return Err(plain[1].err("class is missing `color`")),
    };
    let size = match attrs.take("size") {
        Some((tok, v)) => parse_size(tok, v)?,
        None => return Err(plain[1].err("class is missing `size`")),
    };
    let sprite = match attrs.take("sprite") {
        Some((_, v)) => v.to_string(),
        None => return Err(plain[1].err("class is missing `sprite`")),
    };
    attrs.finish()?;
    draft.classes.push(ObjectClassDef {
        id: plain[1].text.to_string(),
        color,
        size,
        sprite,
    });
    Ok(())
}

fn dynamics_line(draft: &mut Draft, toks: Vec<Tok<'_>>, line: usize) -> Result<(), SpecError> {
    let (plain, mut attrs) = Attrs::new(toks, line)?;
    let Some(kw) = plain.first() else {
        return Err(syntax(line, 1, "expected a dynamics rule keyword"));
    };
    let rule = match kw.text {
        "control" => {
            if plain.len() != 2 {
                return Err(kw.err("expected `control <class> ...`"));
            }
            let speed = opt_int(&mut attrs, "speed", 1)?;
            let boundary = match attrs.take("boundary") {
                None => Boundary::Clamp,
                Some((_, "clamp")) => Boundary::Clamp,
                Some((_, "wrap")) => Boundary::Wrap,
                Some((tok, other)) => {
                    return Err(tok.err(format!("unknown boundary `{other}`")))
                }
            };
            let fire_child = attrs.take("fire").map(|(_, v)| v.to_string());
            let fire = match fire_child {
                None => None,
                Some(child) => Some(FireSpec {
                    child,
                    speed: opt_int(&mut attrs, "fire_speed", 1)?,
                    limit: opt_int(&mut attrs, "fire_limit", 1)?,
                }),
            };
            DynamicsRule::Control {
                class: plain[1].text.to_string(),
                speed,
                boundary,
                fire,
            }
        }
        "fall" => {
            if plain.len() != 2 {
                return Err(kw.err("expected `fall <class> ...`"));
            }
            let dir = match attrs.take("dir") {
                None => FallDir::Down,
                Some((_, "down")) => FallDir::Down,
                Some((_, "up")) => FallDir::Up,
                Some((tok, other)) => return Err(tok.err(format!("unknown dir `{other}`"))),
            };
            DynamicsRule::Fall {
                class: plain[1].text.to_string(),
                speed: opt_int(&mut attrs, "speed", 1)?,
                dir,
            }
        }
        "march" => {
            if plain.len() != 2 {
                return Err(kw.err("expected `march <class> ...`"));
            }
            DynamicsRule::March {
                class: plain[1].text.to_string(),
                step: opt_int(&mut attrs, "step", 1)?,
                period: opt_int(&mut attrs, "period", 1)?,
                drop: opt_int(&mut attrs, "drop", 1)?,
                floor: req_int(&mut attrs, "floor", kw)?,
            }
        }
        "lane" => {
            if plain.len() != 2 {
                return Err(kw.err("expected `lane <class> ...`"));
            }
            DynamicsRule::Lane {
                class: plain[1].text.to_string(),
                speed: opt_int(&mut attrs, "speed", 1)?,
                rate: opt_float(&mut attrs, "rate", 0.0)?,
                prefill: opt_int(&mut attrs, "prefill", 0)?,
            }
        }
        "spawn" => {
            if plain.len() != 1 {
                return Err(kw.err("expected `spawn [from=<class>] child=<class> rate=<p>`"));
            }
            let from = attrs.take("from").map(|(_, v)| v.to_string());
            let child = match attrs.take("child") {
                Some((_, v)) => v.to_string(),
                None => return Err(kw.err("spawn is missing `child`")),
            };
            DynamicsRule::Spawn {
                from,
                child,
                rate: opt_float(&mut attrs, "rate", 0.0)?,
            }
        }
        "shoot" => {
            if plain.len() != 2 {
                return Err(kw.err("expected `shoot <class> child=<class> cadence=<n>`"));
            }
            let child = match attrs.take("child") {
                Some((_, v)) => v.to_string(),
                None => return Err(kw.err("shoot is missing `child`")),
            };
            DynamicsRule::Shoot {
                class: plain[1].text.to_string(),
                child,
                cadence: opt_int(&mut attrs, "cadence", 1)?,
            }
        }
        other => return Err(kw.err(format!("unknown dynamics rule `{other}`"))),
    };
    attrs.finish()?;
    draft.dynamics.push(rule);
    Ok(())
}

fn opt_int<T: std::str::FromStr>(
    attrs: &mut Attrs<'_>,
    key: &str,
    default: T,
) -> Result<T, SpecError> {
    match attrs.take(key) {
        None => Ok(default),
        Some((tok, v)) => v
            .parse::<T>()
            .map_err(|_| tok.err(format!("bad integer `{v}` for `{key}`"))),
    }
}

fn req_int<T: std::str::FromStr>(
    attrs: &mut Attrs<'_>,
    key: &str,
    ctx: &Tok<'_>,
) -> Result<T, SpecError> {
    match attrs.take(key) {
        None => Err(ctx.err(format!("missing required attribute `{key}`"))),
        Some((tok, v)) => v
            .parse::<T>()
            .map_err(|_| tok.err(format!("bad integer `{v}` for `{key}`"))),
    }
}

fn opt_float(attrs: &mut Attrs<'_>, key: &str, default: f64) -> Result<f64, SpecError> {
    match attrs.take(key) {
        None => Ok(default),
        Some((tok, v)) => parse_f64(tok, v),
    }
}

fn reward_line(draft: &mut Draft, mut toks: Vec<Tok<'_>>, line: usize) -> Result<(), SpecError> {
    // `lose` may trail the attributes: `contact a b reward=-10 despawn=none lose`.
    let lose = toks.last().is_some_and(|t| t.text == "lose");
    if lose {
        toks.pop();
    }
    let (plain, mut attrs) = Attrs::new(toks, line)?;
    let Some(kw) = plain.first() else {
        return Err(syntax(line, 1, "expected a reward rule keyword"));
    };
    let rule = match kw.text {
        "contact" => {
            if plain.len() != 3 {
                return Err(kw.err("expected `contact <a> <b> [attrs] [lose]`"));
            }
            let despawn = match attrs.take("despawn") {
                None => Despawn::None,
                Some((_, "none")) => Despawn::None,
                Some((_, "first")) => Despawn::First,
                Some((_, "second")) => Despawn::Second,
                Some((_, "both")) => Despawn::Both,
                Some((tok, other)) => {
                    return Err(tok.err(format!("unknown despawn mode `{other}`")))
                }
            };
            RewardRule::Contact {
                a: plain[1].text.to_string(),
                b: plain[2].text.to_string(),
                reward: opt_int(&mut attrs, "reward", 0)?,
                despawn,
                lose,
            }
        }
        "step_survived" => RewardRule::StepSurvived {
            reward: opt_int(&mut attrs, "reward", 0)?,
        },
        "level_win" => RewardRule::LevelWin {
            reward: opt_int(&mut attrs, "reward", 0)?,
        },
        other => return Err(kw.err(format!("unknown reward rule `{other}`"))),
    };
    if lose && !matches!(rule, RewardRule::Contact { .. }) {
        return Err(kw.err("`lose` is only valid on contact rules"));
    }
    attrs.finish()?;
    draft.rewards.push(rule);
    Ok(())
}

fn termination_line(draft: &mut Draft, toks: Vec<Tok<'_>>) -> Result<(), SpecError> {
    match toks[0].text {
        "win_when" => {
            // win_when = none | collected <class> <n> | cleared <class>
            if toks.len() < 3 || toks[1].text != "=" {
                return Err(toks[0].err("expected `win_when = ...`"));
            }
            let cond = match (toks[2].text, toks.len()) {
                ("none", 3) => WinCondition::None,
                ("collected", 5) => WinCondition::Collected {
                    class: toks[3].text.to_string(),
                    count: parse_int(&toks[4], "a count")?,
                },
                ("cleared", 4) => WinCondition::Cleared {
                    class: toks[3].text.to_string(),
                },
                _ => {
                    return Err(toks[2]
                        .err("expected `none`, `collected <class> <n>`, or `cleared <class>`"))
                }
            };
            draft.win = Some(cond);
        }
        _ => {
            let (key, val) = expect_kv(&toks)?;
            match key.text {
                "timeout" => draft.timeout = Some(parse_int(val, "a positive integer")?),
                "timeout_reward" => draft.timeout_reward = parse_int(val, "an integer")?,
                "on_timeout" => {
                    draft.on_timeout = Some(match val.text {
                        "win" => TimeoutOutcome::Win,
                        "lose" => TimeoutOutcome::Lose,
                        other => return Err(val.err(format!("unknown outcome `{other}`"))),
                    })
                }
                other => return Err(key.err(format!("unknown [termination] key `{other}`"))),
            }
        }
    }
    Ok(())
}

fn level_line(draft: &mut Draft, toks: Vec<Tok<'_>>, _line: usize) -> Result<(), SpecError> {
    match toks[0].text {
        "level" => {
            if toks.len() != 1 {
                return Err(toks[0].err("`level` takes no arguments"));
            }
            draft.levels.push(LevelDef::default());
            Ok(())
        }
        "param" => {
            // param <key> = <value>
            if toks.len() != 4 || toks[2].text != "=" {
                return Err(toks[0].err("expected `param <key> = <value>`"));
            }
            let level = draft
                .levels
                .last_mut()
                .ok_or_else(|| toks[0].err("`param` before any `level`"))?;
            let value = parse_f64(&toks[3], toks[3].text)?;
            level.params.insert(toks[1].text.to_string(), value);
            Ok(())
        }
        "place" => {
            if toks.len() != 4 {
                return Err(toks[0].err("expected `place <class> <x> <y>`"));
            }
            let placement = Placement {
                class: toks[1].text.to_string(),
                x: parse_int(&toks[2], "an integer")?,
                y: parse_int(&toks[3], "an integer")?,
            };
            let level = draft
                .levels
                .last_mut()
                .ok_or_else(|| toks[0].err("`place` before any `level`"))?;
            level.placements.push(placement);
            Ok(())
        }
        other => Err(toks[0].err(format!("unknown [levels] keyword `{other}`"))),
    }
}

fn variant_line(draft: &mut Draft, toks: Vec<Tok<'_>>, line: usize) -> Result<(), SpecError> {
    let (plain, mut attrs) = Attrs::new(toks, line)?;
    if plain.is_empty() {
        return Err(syntax(line, 1, "expected a variant hook keyword"));
    }
    match plain[0].text {
        "mod_position" => {
            if plain.len() != 1 {
                return Err(plain[0].err("expected `mod_position classes=a,b fraction=f`"));
            }
            let classes = match attrs.take("classes") {
                Some((_, v)) => v.split(',').map(str::to_string).collect(),
                None => return Err(plain[0].err("mod_position is missing `classes`")),
            };
            let fraction = opt_float(&mut attrs, "fraction", 0.5)?;
            draft.variants.position = Some(PositionHook { classes, fraction });
        }
        "mod_colorsize" => {
            if plain.len() != 2 {
                return Err(plain[0].err("expected `mod_colorsize <class> [color=..] [size=..]`"));
            }
            let color = match attrs.take("color") {
                Some((tok, v)) => Some(parse_color(tok, v)?),
                None => None,
            };
            let size = match attrs.take("size") {
                Some((tok, v)) => Some(parse_size(tok, v)?),
                None => None,
            };
            draft.variants.colorsize.push(ColorSizeSub {
                class: plain[1].text.to_string(),
                color,
                size,
            });
        }
        "mod_image" => {
            if plain.len() != 4 || plain[2].text != "=" {
                return Err(plain[0].err("expected `mod_image <sprite> = <sprite>`"));
            }
            draft.variants.image.push(ImageSub {
                from_sprite: plain[1].text.to_string(),
                to_sprite: plain[3].text.to_string(),
            });
        }
        other => return Err(plain[0].err(format!("unknown variant hook `{other}`"))),
    }
    attrs.finish()?;
    Ok(())
}

/// Writes the canonical form: fixed section order, every default explicit.
///
/// The output parses back to an equal [`GameSpec`] and is byte-stable, so it
/// doubles as the on-disk normal form.
pub fn serialize(spec: &GameSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[game]");
    let _ = writeln!(s, "name = {}", spec.name);
    let renderer = match spec.renderer {
        Renderer::FlatRect => "flat_rect",
        Renderer::Sprites => "sprites",
    };
    let _ = writeln!(s, "renderer = {renderer}");
    let _ = writeln!(s, "max_score = {}", spec.max_score);

    let _ = writeln!(s, "\n[grid]");
    let _ = writeln!(s, "width = {}", spec.grid_width);
    let _ = writeln!(s, "height = {}", spec.grid_height);

    let _ = writeln!(s, "\n[actions]");
    for a in &spec.actions {
        let _ = writeln!(s, "key {} = {}", a.label, a.semantic.as_str());
    }

    let _ = writeln!(s, "\n[classes]");
    for c in &spec.classes {
        let _ = writeln!(
            s,
            "class {} color={},{},{} size={},{} sprite={}",
            c.id, c.color.0, c.color.1, c.color.2, c.size.0, c.size.1, c.sprite
        );
    }

    let _ = writeln!(s, "\n[dynamics]");
    for rule in &spec.dynamics {
        match rule {
            DynamicsRule::Control { class, speed, boundary, fire } => {
                let b = match boundary {
                    Boundary::Clamp => "clamp",
                    Boundary::Wrap => "wrap",
                };
                let _ = write!(s, "control {class} speed={speed} boundary={b}");
                if let Some(f) = fire {
                    let _ = write!(
                        s,
                        " fire={} fire_speed={} fire_limit={}",
                        f.child, f.speed, f.limit
                    );
                }
                s.push('\n');
            }
            DynamicsRule::Fall { class, speed, dir } => {
                let d = match dir {
                    FallDir::Down => "down",
                    FallDir::Up => "up",
                };
                let _ = writeln!(s, "fall {class} speed={speed} dir={d}");
            }
            DynamicsRule::March { class, step, period, drop, floor } => {
                let _ = writeln!(
                    s,
                    "march {class} step={step} period={period} drop={drop} floor={floor}"
                );
            }
            DynamicsRule::Lane { class, speed, rate, prefill } => {
                let _ = writeln!(s, "lane {class} speed={speed} rate={rate} prefill={prefill}");
            }
            DynamicsRule::Spawn { from, child, rate } => {
                let _ = write!(s, "spawn ");
                if let Some(f) = from {
                    let _ = write!(s, "from={f} ");
                }
                let _ = writeln!(s, "child={child} rate={rate}");
            }
            DynamicsRule::Shoot { class, child, cadence } => {
                let _ = writeln!(s, "shoot {class} child={child} cadence={cadence}");
            }
        }
    }

    let _ = writeln!(s, "\n[rewards]");
    for rule in &spec.rewards {
        match rule {
            RewardRule::Contact { a, b, reward, despawn, lose } => {
                let d = match despawn {
                    Despawn::None => "none",
                    Despawn::First => "first",
                    Despawn::Second => "second",
                    Despawn::Both => "both",
                };
                let _ = write!(s, "contact {a} {b} reward={reward} despawn={d}");
                if *lose {
                    let _ = write!(s, " lose");
                }
                s.push('\n');
            }
            RewardRule::StepSurvived { reward } => {
                let _ = writeln!(s, "step_survived reward={reward}");
            }
            RewardRule::LevelWin { reward } => {
                let _ = writeln!(s, "level_win reward={reward}");
            }
        }
    }

    let _ = writeln!(s, "\n[termination]");
    let _ = writeln!(s, "timeout = {}", spec.termination.timeout);
    let ot = match spec.termination.on_timeout {
        TimeoutOutcome::Win => "win",
        TimeoutOutcome::Lose => "lose",
    };
    let _ = writeln!(s, "on_timeout = {ot}");
    let _ = writeln!(s, "timeout_reward = {}", spec.termination.timeout_reward);
    match &spec.termination.win {
        WinCondition::None => {
            let _ = writeln!(s, "win_when = none");
        }
        WinCondition::Collected { class, count } => {
            let _ = writeln!(s, "win_when = collected {class} {count}");
        }
        WinCondition::Cleared { class } => {
            let _ = writeln!(s, "win_when = cleared {class}");
        }
    }

    let _ = writeln!(s, "\n[levels]");
    for level in &spec.levels {
        let _ = writeln!(s, "level");
        for (k, v) in &level.params {
            let _ = writeln!(s, "param {k} = {v}");
        }
        for p in &level.placements {
            let _ = writeln!(s, "place {} {} {}", p.class, p.x, p.y);
        }
    }

    let hooks = &spec.variants;
    if hooks.position.is_some() || !hooks.colorsize.is_empty() || !hooks.image.is_empty() {
        let _ = writeln!(s, "\n[variants]");
        if let Some(hook) = &hooks.position {
            let _ = writeln!(
                s,
                "mod_position classes={} fraction={}",
                hook.classes.join(","),
                hook.fraction
            );
        }
        for sub in &hooks.colorsize {
            let _ = write!(s, "mod_colorsize {}", sub.class);
            if let Some((r, g, b)) = sub.color {
                let _ = write!(s, " color={r},{g},{b}");
            }
            if let Some((w, h)) = sub.size {
                let _ = write!(s, " size={w},{h}");
            }
            s.push('\n');
        }
        for sub in &hooks.image {
            let _ = writeln!(s, "mod_image {} = {}", sub.from_sprite, sub.to_sprite);
        }
    }
    s
}
