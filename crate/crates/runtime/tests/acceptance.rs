//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without a test harness so the report is always printed; the process
//! exits non-zero when any criterion fails.

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fizi_core::background::learn;
use fizi_core::imaging::{connected_components, dilate, erode, rgb_to_hue, StructuringElement};
use fizi_core::segmentation::{
    branch_background, branch_gray, branch_skin, hue_band_contains, merge, SegmentationParams,
};
use fizi_core::{
    steering_from_cursor, BackgroundModel, BinaryMask, CursorState, FrameRgb, Segmenter, Tracker,
    TrackerParams, WheelModel, Workers,
};
use fizi_runtime::synth::Scene;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn random_frame(rng: &mut impl Rng, w: usize, h: usize) -> FrameRgb {
    FrameRgb::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap()
}

fn random_envelope(rng: &mut impl Rng, w: usize, h: usize) -> BackgroundModel {
    let n = w * h * 3;
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for _ in 0..n {
        let a: u8 = rng.random();
        let b: u8 = rng.random();
        lo.push(a.min(b));
        hi.push(a.max(b));
    }
    BackgroundModel::from_planes(w, h, lo, hi, 1, 0).unwrap()
}

/// Hexagonal hue written out case by case.
fn oracle_hue(r: u8, g: u8, b: u8) -> Option<f64> {
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let c = max - min;
    if c == 0.0 {
        return None;
    }
    let mut sector = if max == r {
        (g - b) / c
    } else if max == g {
        (b - r) / c + 2.0
    } else {
        (r - g) / c + 4.0
    };
    if sector < 0.0 {
        sector += 6.0;
    }
    let h = 60.0 * sector;
    Some(if h >= 360.0 { h - 360.0 } else { h })
}

fn oracle_in_band(h: f64, lo: f64, hi: f64) -> bool {
    if lo <= hi {
        lo <= h && h <= hi
    } else {
        h >= lo || h <= hi
    }
}

fn branch_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB1);
    let seq = Workers::sequential();
    let (w, h) = (64, 64);
    for n in 0..200 {
        let frame = random_frame(&mut rng, w, h);
        let bg = random_envelope(&mut rng, w, h);
        let s: u8 = rng.random();
        let lo = rng.random_range(0.0..360.0);
        let hi = rng.random_range(0.0..360.0);

        let r1 = branch_background(&frame, &bg, &seq).unwrap();
        let r2 = branch_gray(&frame, s, &seq);
        let r3 = branch_skin(&rgb_to_hue(&frame), lo, hi, &seq);
        let merged = merge(&r1, &r2, &r3).unwrap();
        for y in 0..h {
            for x in 0..w {
                let p = frame.pixel(x, y);
                let i = (y * w + x) * 3;
                let inside = (0..3).all(|c| bg.min_rgb()[i + c] <= p[c] && p[c] <= bg.max_rgb()[i + c]);
                let spread = i32::from(*p.iter().max().unwrap()) - i32::from(*p.iter().min().unwrap());
                let gray_keep = spread > i32::from(s);
                let skin = oracle_hue(p[0], p[1], p[2]).is_some_and(|hh| oracle_in_band(hh, lo, hi));
                ensure!(r1.get(x, y) == !inside, "frame {n} ({x},{y}): background branch");
                ensure!(r2.get(x, y) == gray_keep, "frame {n} ({x},{y}): gray branch");
                ensure!(r3.get(x, y) == skin, "frame {n} ({x},{y}): skin branch");
                ensure!(
                    merged.get(x, y) == (!inside && gray_keep && skin),
                    "frame {n} ({x},{y}): merge"
                );
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.2} s, limit 10 s");
    Ok(format!("200 frames of 64x64, {secs:.2} s"))
}

/// A random frame with a few skin-colored blobs over noise, so every stage
/// has work to do.
fn busy_frame(rng: &mut impl Rng, w: usize, h: usize) -> FrameRgb {
    let blobs: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(3.0..12.0),
            )
        })
        .collect();
    FrameRgb::from_fn(w, h, |x, y| {
        let on_blob = blobs.iter().any(|&(cx, cy, r)| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        });
        let jitter: i16 = rng.random_range(-15..=15);
        let base: [i16; 3] = if on_blob {
            [205, 135, 112]
        } else {
            [rng.random_range(0..256), rng.random_range(0..256), rng.random_range(0..256)]
        };
        base.map(|v| (v + jitter).clamp(0, 255) as u8)
    })
    .unwrap()
}

fn parallel_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB2);
    let (w, h) = (96, 72);
    let params = SegmentationParams::default();
    let one = Segmenter::new(params.clone(), Workers::new(1)).unwrap();
    let four = Segmenter::new(params, Workers::new(4)).unwrap();
    let mut foreground = 0;
    for n in 0..50 {
        let frame = busy_frame(&mut rng, w, h);
        let bg = random_envelope(&mut rng, w, h);
        let a = one.stages(&frame, &bg).unwrap();
        let b = four.stages(&frame, &bg).unwrap();
        for ((name, ma), (_, mb)) in a.named().into_iter().zip(b.named()) {
            ensure!(ma == mb, "frame {n}: stage {name} differs between 1 and 4 workers");
        }
        ensure!(a.mean_luma == b.mean_luma && a.gamma == b.gamma, "frame {n}: normalization differs");
        foreground += a.cleaned.count_ones();
    }
    ensure!(foreground > 0, "no foreground in any frame; the comparison is vacuous");
    Ok(format!("50 frames of {w}x{h}, 1 vs 4 workers, {foreground} foreground pixels compared"))
}

fn brute_morph(mask: &BinaryMask, radius: usize, all: bool) -> BinaryMask {
    let (w, h) = mask.dims();
    let r = radius as isize;
    BinaryMask::from_fn(w, h, |x, y| {
        let mut values = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).map(|(dx, dy)| {
            let (xx, yy) = (x as isize + dx, y as isize + dy);
            xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h && mask.get(xx as usize, yy as usize)
        });
        if all {
            values.all(|v| v)
        } else {
            values.any(|v| v)
        }
    })
}

fn flood_fill_groups(mask: &BinaryMask) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut groups = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if !mask.get(x0, y0) || seen[y0 * w + x0] {
                continue;
            }
            let mut stack = vec![(x0, y0)];
            seen[y0 * w + x0] = true;
            let mut group = Vec::new();
            while let Some((x, y)) = stack.pop() {
                group.push((x, y));
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (xx, yy) = (x as isize + dx, y as isize + dy);
                        if xx < 0 || yy < 0 || xx as usize >= w || yy as usize >= h {
                            continue;
                        }
                        let (xx, yy) = (xx as usize, yy as usize);
                        if mask.get(xx, yy) && !seen[yy * w + xx] {
                            seen[yy * w + xx] = true;
                            stack.push((xx, yy));
                        }
                    }
                }
            }
            groups.push(group);
        }
    }
    groups
}

fn morphology_and_labeling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB3);
    for n in 0..500 {
        let density = [0.3, 0.6, 0.85][n % 3];
        let m = BinaryMask::from_fn(8, 8, |_, _| rng.random_bool(density));
        for radius in [1, 2] {
            let se = StructuringElement::square(radius).unwrap();
            ensure!(erode(&m, se) == brute_morph(&m, radius, true), "erode mask {n} radius {radius}");
            ensure!(dilate(&m, se) == brute_morph(&m, radius, false), "dilate mask {n} radius {radius}");
        }
    }
    for n in 0..1000 {
        let density = [0.2, 0.45, 0.6][n % 3];
        let m = BinaryMask::from_fn(32, 32, |_, _| rng.random_bool(density));
        let groups = flood_fill_groups(&m);
        let comps = connected_components(&m);
        ensure!(comps.len() == groups.len(), "mask {n}: {} components, oracle {}", comps.len(), groups.len());
        let mut expected: HashMap<(usize, (usize, usize, usize, usize), usize, usize), usize> = HashMap::new();
        for g in &groups {
            let x0 = g.iter().map(|p| p.0).min().unwrap();
            let y0 = g.iter().map(|p| p.1).min().unwrap();
            let x1 = g.iter().map(|p| p.0).max().unwrap();
            let y1 = g.iter().map(|p| p.1).max().unwrap();
            let sx = g.iter().map(|p| p.0).sum();
            let sy = g.iter().map(|p| p.1).sum();
            *expected.entry((g.len(), (x0, y0, x1, y1), sx, sy)).or_default() += 1;
        }
        for c in &comps {
            let sx = (c.centroid.0 * c.area as f64).round() as usize;
            let sy = (c.centroid.1 * c.area as f64).round() as usize;
            let key = (c.area, c.bbox, sx, sy);
            match expected.get_mut(&key) {
                Some(k) if *k > 0 => *k -= 1,
                _ => return Err(format!("mask {n}: component {key:?} has no flood-fill counterpart")),
            }
        }
    }
    Ok("500 masks of 8x8 (radius 1 and 2), 1000 masks of 32x32".into())
}

fn envelope_soundness() -> Outcome {
    // skin-colored, chromatic background: only the envelope can reject it
    let (w, h, margin) = (80usize, 60usize, 10u8);
    let mut rng = ChaCha8Rng::seed_from_u64(0xB4);
    let base: Vec<[u8; 3]> = (0..w * h)
        .map(|_| {
            let r = rng.random_range(150..=235u8);
            let g = r - rng.random_range(45..=80u8);
            let b = g - rng.random_range(5..=25u8);
            [r, g, b]
        })
        .collect();
    let frames: Vec<FrameRgb> = (0..30)
        .map(|_| {
            FrameRgb::from_fn(w, h, |x, y| {
                base[y * w + x].map(|v| {
                    let n: i16 = rng.random_range(-(margin as i16)..=margin as i16);
                    (i16::from(v) + n).clamp(0, 255) as u8
                })
            })
            .unwrap()
        })
        .collect();
    let segmenter = Segmenter::new(SegmentationParams::default(), Workers::sequential()).unwrap();
    let normalized: Vec<FrameRgb> = frames
        .iter()
        .map(|f| segmenter.normalize(f).frame.into_owned())
        .collect();
    let model = learn(&normalized, margin).unwrap();
    let mut worst = 0.0f64;
    let mut skin_pixels = 0;
    for f in &frames {
        let st = segmenter.stages(f, &model).unwrap();
        skin_pixels += st.skin.count_ones();
        worst = worst.max(st.cleaned.coverage());
    }
    ensure!(skin_pixels > 0, "background is not skin-colored; the test is vacuous");
    ensure!(worst <= 0.001, "worst foreground coverage {:.4}% > 0.1%", worst * 100.0);
    Ok(format!("30 frames, noise +/-{margin}, margin {margin}, worst coverage {:.4}%", worst * 100.0))
}

fn hue_rotation_invariance() -> Outcome {
    // quarter-degree values keep every sum and remainder exact
    let mut rng = ChaCha8Rng::seed_from_u64(0xB5);
    let q = |rng: &mut ChaCha8Rng| f64::from(rng.random_range(0..1440u32)) / 4.0;
    let mut wrapping = 0;
    for _ in 0..100_000 {
        let (h, lo, hi, d) = (q(&mut rng), q(&mut rng), q(&mut rng), q(&mut rng));
        let rot = |v: f64| (v + d).rem_euclid(360.0);
        if lo > hi {
            wrapping += 1;
        }
        ensure!(
            hue_band_contains(h, lo, hi) == hue_band_contains(rot(h), rot(lo), rot(hi)),
            "h={h} band=[{lo},{hi}] delta={d}"
        );
    }
    ensure!(wrapping > 0, "no wrapping bands sampled");
    Ok(format!("100000 triples, {wrapping} with wrapping bands"))
}

fn steering_geometry() -> Outcome {
    let wheel = WheelModel::new((320.0, 240.0), 100.0);
    ensure!(wheel.theta_max == 90.0, "default theta_max is {}", wheel.theta_max);
    let at = |x, y| steering_from_cursor(&CursorState::at(x, y), &wheel);
    let right = at(420.0, 240.0).ok_or("3 o'clock is off the wheel")?;
    ensure!((right - 1.0).abs() <= 1e-9, "3 o'clock gives {right}");
    let top = at(320.0, 140.0).ok_or("12 o'clock is off the wheel")?;
    ensure!(top == 0.0, "12 o'clock gives {top}");

    let mut rng = ChaCha8Rng::seed_from_u64(0xB6);
    let mut on_wheel = 0;
    for _ in 0..10_000 {
        // eighth-pixel offsets keep the mirror image exact
        let dx = f64::from(rng.random_range(-1200..=1200i32)) / 8.0;
        let dy = f64::from(rng.random_range(-1200..=1200i32)) / 8.0;
        if dx == 0.0 && dy > 0.0 {
            continue; // 6 o'clock is its own mirror image
        }
        let a = at(320.0 + dx, 240.0 + dy);
        let b = at(320.0 - dx, 240.0 + dy);
        match (a, b) {
            (Some(a), Some(b)) => {
                ensure!(a == -b, "offset ({dx},{dy}): {a} vs mirror {b}");
                on_wheel += 1;
            }
            (None, None) => {}
            _ => return Err(format!("offset ({dx},{dy}): only one side is on the wheel")),
        }
    }
    ensure!(on_wheel > 1000, "only {on_wheel} samples landed on the wheel");
    Ok(format!("3 o'clock {right:.12}, 12 o'clock {top}, 10000 mirrored positions ({on_wheel} on the wheel)"))
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn run_golden_once() -> Result<Vec<u8>, String> {
    let data = data_dir();
    let out = Command::new(env!("CARGO_BIN_EXE_fizi"))
        .arg("run")
        .arg("--source")
        .arg(format!("dir:{}", data.join("frames").display()))
        .arg("--layout")
        .arg(data.join("layout.xml"))
        .arg("--bg")
        .arg(data.join("background.fzbg"))
        .args(["--sink", "stdout"])
        .output()
        .map_err(|e| format!("cannot start fizi: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "fizi exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn end_to_end_golden() -> Outcome {
    let golden = std::fs::read(data_dir().join("golden_commands.jsonl")).map_err(|e| e.to_string())?;
    let lines = golden.iter().filter(|&&b| b == b'\n').count();
    ensure!(lines == 90, "golden file has {lines} records, expected 90");
    for run in 1..=2 {
        let out = run_golden_once()?;
        if out != golden {
            let first = out
                .split(|&b| b == b'\n')
                .zip(golden.split(|&b| b == b'\n'))
                .position(|(a, b)| a != b)
                .map_or("length".to_string(), |i| format!("record {}", i + 1));
            return Err(format!("run {run} differs from the golden file at {first}"));
        }
    }
    Ok("90 frames, 2 runs byte-identical to the golden file".into())
}

fn throughput() -> Outcome {
    let (w, h) = (640, 480);
    let scene = Scene {
        blob_radius: 40.0,
        ..Scene::with_size(w, h)
    };
    let model = learn(&scene.learning_frames(10), 10).unwrap();
    let frames = scene.sequence(&[Some((200.0, 160.0)), Some((320.0, 240.0)), Some((420.0, 300.0)), None]);
    let segmenter = Segmenter::new(SegmentationParams::default(), Workers::new(4)).unwrap();
    for f in &frames {
        segmenter.segment(f, &model).unwrap();
    }
    let n = 60;
    let start = Instant::now();
    let mut fg = 0;
    for i in 0..n {
        fg += segmenter.segment(&frames[i % frames.len()], &model).unwrap().count_ones();
    }
    let fps = n as f64 / start.elapsed().as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    ensure!(fg > 0, "no hand found in the benchmark frames");
    ensure!(fps >= 15.0, "{fps:.1} fps < 15 fps floor (4 workers, {cores} cores available)");
    Ok(format!("{fps:.1} fps at {w}x{h} with 4 workers ({cores} cores available; target 30 fps on 4 cores)"))
}

fn dwell_click() -> Outcome {
    let mask = BinaryMask::from_fn(64, 48, |x, y| (20..30).contains(&x) && (15..25).contains(&y));
    let clicks = |n: u64| {
        let mut tracker = Tracker::new(TrackerParams::default());
        (0..n).filter(|i| tracker.update(&mask, i * 33).clicked).count()
    };
    let (c30, c14) = (clicks(30), clicks(14));
    ensure!(c30 == 1, "30 masks produced {c30} clicks");
    ensure!(c14 == 0, "14 masks produced {c14} clicks");
    Ok("30 masks: 1 click, 14 masks: 0 clicks".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("branch equivalence", branch_equivalence),
        ("parallel determinism", parallel_determinism),
        ("morphology/labeling oracles", morphology_and_labeling),
        ("background envelope soundness", envelope_soundness),
        ("hue band rotation invariance", hue_rotation_invariance),
        ("steering geometry", steering_geometry),
        ("end-to-end golden", end_to_end_golden),
        ("throughput", throughput),
        ("dwell click", dwell_click),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
